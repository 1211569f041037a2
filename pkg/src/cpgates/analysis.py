"""Gate fidelity, error scans, tolerance-band extraction and
infidelity-order fitting.

Fidelity is Tr(A^dag B)/4 with the modulus taken, so sequences that
reproduce the target up to a global phase score exactly 1.  The raw
(complex) trace overlap is exposed separately for callers that care about
the phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError
from .gates import CompositeSequence, ideal_cphase, sequence_propagator
from .linalg import is_unitary


def trace_overlap(a: np.ndarray, b: np.ndarray) -> complex:
    """Raw normalised trace overlap Tr(a^dag b) / dim (global phase kept)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return complex(np.trace(a.conj().T @ b) / a.shape[0])


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|Tr(a^dag b)| / 4 for two-qubit unitaries.

    Equals 1 exactly when b = exp(i gamma) a.  Raises ValidationError for
    non-unitary input; use :func:`trace_overlap` for raw overlaps.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != (4, 4) or b.shape != (4, 4):
        raise ValidationError("fidelity expects 4x4 matrices")
    if not (is_unitary(a, 1e-9) and is_unitary(b, 1e-9)):
        raise ValidationError("fidelity expects unitary matrices")
    return abs(trace_overlap(a, b))


def sequence_fidelity(seq: CompositeSequence, epsilon: float = 0.0, xi: float = 0.0) -> float:
    """Fidelity of the distorted sequence propagator against U(target)."""
    return fidelity(ideal_cphase(seq.target_theta), sequence_propagator(seq, epsilon, xi))


@dataclass(frozen=True)
class ScanResult:
    """Fidelity-versus-relative-error curve for one sequence."""

    epsilons: tuple[float, ...]
    fidelities: tuple[float, ...]
    label: str
    target_theta: float

    def __post_init__(self):
        eps = np.asarray(self.epsilons)
        if np.any(np.diff(eps) <= 0):
            raise ValidationError("scan grid must be strictly increasing")
        fids = np.asarray(self.fidelities)
        if np.any(fids < 0) or np.any(fids > 1 + 1e-12):
            raise ValidationError("fidelities must lie in [0, 1]")

    def infidelities(self) -> np.ndarray:
        return 1.0 - np.asarray(self.fidelities)


def scan(
    seq: CompositeSequence,
    eps_min: float,
    eps_max: float,
    steps: int,
    xi: float = 0.0,
    reference: Optional[np.ndarray] = None,
) -> ScanResult:
    """Uniform fidelity scan over [eps_min, eps_max].

    ``reference`` defaults to the ideal target gate; pass the identity to
    probe the narrowband behaviour around eps = -1.
    """
    if steps < 2:
        raise ValidationError("a scan needs at least 2 steps")
    if not eps_min < eps_max:
        raise ValidationError("eps_min must be below eps_max")
    ref = ideal_cphase(seq.target_theta) if reference is None else reference
    eps = np.linspace(eps_min, eps_max, steps)
    fids = [fidelity(ref, sequence_propagator(seq, e, xi)) for e in eps]
    return ScanResult(tuple(eps), tuple(fids), seq.label or seq.family, seq.target_theta)


@dataclass(frozen=True)
class ToleranceBand:
    """Error interval around zero with infidelity below the threshold."""

    eps_low: float
    eps_high: float
    threshold: float

    def __post_init__(self):
        if not (self.eps_low <= 0.0 <= self.eps_high):
            raise ValidationError("tolerance band must contain eps = 0")

    def symmetric_width(self) -> float:
        return min(-self.eps_low, self.eps_high)


def _first_crossing(
    infid: Callable[[float], float],
    threshold: float,
    direction: float,
    coarse_step: float,
    eps_limit: float,
    locate_tol: float,
) -> float:
    """March outward from 0, then bisect the bracketing interval."""
    prev = 0.0
    e = coarse_step
    while e <= eps_limit:
        if infid(direction * e) > threshold:
            lo, hi = prev, e
            while hi - lo > locate_tol:
                mid = 0.5 * (lo + hi)
                if infid(direction * mid) > threshold:
                    hi = mid
                else:
                    lo = mid
            return direction * 0.5 * (lo + hi)
        prev = e
        e += coarse_step
    return direction * eps_limit


def tolerance_band(
    seq: CompositeSequence,
    threshold: float = 1e-4,
    eps_limit: float = 1.5,
    coarse_step: float = 1e-3,
    locate_tol: float = 1e-4,
) -> ToleranceBand:
    """Interval of eps around 0 keeping infidelity below ``threshold``.

    Marches outward from zero in ``coarse_step`` increments to bracket the
    first crossing on each side, then bisects to ``locate_tol``.  Raises
    ValidationError when the sequence already fails at eps = 0.
    """
    def infid(e: float) -> float:
        return 1.0 - sequence_fidelity(seq, e)

    if infid(0.0) > threshold:
        raise ValidationError("sequence exceeds the threshold already at eps = 0")
    hi = _first_crossing(infid, threshold, +1.0, coarse_step, eps_limit, locate_tol)
    lo = _first_crossing(infid, threshold, -1.0, coarse_step, eps_limit, locate_tol)
    return ToleranceBand(lo, hi, threshold)


INFIDELITY_FLOOR = 1e-14


def infidelity_order(
    seq: CompositeSequence,
    fit_window: tuple[float, float] = (1e-3, 1e-2),
    points: int = 12,
    xi: float = 0.0,
) -> float:
    """Least-squares slope of log10(1-F) versus log10(eps) on the positive
    branch of the window.

    Grid points whose infidelity sits below the double-precision floor
    (1e-14) are discarded; if fewer than two usable points remain the
    order is indeterminate and NaN is returned.  For an order-n broadband
    sequence at solver precision the slope is 2n + 2.
    """
    lo, hi = fit_window
    if not 0 < lo < hi:
        raise ValidationError("fit window must satisfy 0 < lo < hi")
    eps = np.logspace(np.log10(lo), np.log10(hi), points)
    infid = np.array([1.0 - sequence_fidelity(seq, e, xi) for e in eps])
    usable = infid > INFIDELITY_FLOOR
    if np.count_nonzero(usable) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log10(eps[usable]), np.log10(infid[usable]), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# text output formats
# ---------------------------------------------------------------------------

def scan_csv_lines(result: ScanResult) -> list[str]:
    """CSV rows ``epsilon,fidelity,infidelity`` at 17 significant digits."""
    lines = ["epsilon,fidelity,infidelity"]
    for e, f in zip(result.epsilons, result.fidelities):
        lines.append("%.17g,%.17g,%.17g" % (e, f, 1.0 - f))
    return lines


def band_report(band: ToleranceBand) -> str:
    return "band_low=%.17g band_high=%.17g threshold=%.17g" % (
        band.eps_low,
        band.eps_high,
        band.threshold,
    )
