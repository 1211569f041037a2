"""Phased controlled-phase gates and composite sequences.

Conventions
-----------
* The elementary two-qubit gate is ``U(theta, phi) = exp(i theta sigma_x (x) sigma_phi)``
  with ``sigma_phi = sigma_x cos(phi) + sigma_y sin(phi)`` acting on qubit 2.
* Gates in a :class:`CompositeSequence` are stored first-applied-first, i.e.
  ``gates[0]`` acts first; the matrix product therefore runs right-to-left.
* ``terminal_phase`` is the angle of a single-qubit frame rotation
  F(phi) = exp(-i phi sigma_z) on qubit 2 applied after all gates.
* Equality of propagators is generally meant up to a global phase; the
  fidelity used in :mod:`cpgates.analysis` takes the trace modulus, and
  residual comparisons align the sign of the zero-error target.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import pi

import numpy as np

from .errors import ValidationError
from .linalg import IDENTITY_2, IDENTITY_4, SIGMA_X, sigma_axis

TWO_PI = 2.0 * pi

FAMILY_SINGLE = "single"
FAMILY_BROADBAND = "broadband"
FAMILY_PASSBAND = "passband"
FAMILY_ABSOLUTE = "absolute"
FAMILY_COMBINED = "combined"


def canonical_angle(phi: float) -> float:
    """Map an angle to the canonical representative in [0, 2*pi)."""
    if not np.isfinite(phi):
        raise ValidationError(f"angle must be finite, got {phi}")
    return float(np.mod(phi, TWO_PI))


@dataclass(frozen=True)
class PhasedGate:
    """One rotation: angle ``theta`` and phase ``phi`` of a phased CPHASE.

    ``theta`` may be negative (the absolute-error composites use -Theta/2);
    ``phi`` is stored canonically in [0, 2*pi).
    """

    theta: float
    phi: float

    def __post_init__(self):
        if not np.isfinite(self.theta):
            raise ValidationError(f"theta must be finite, got {self.theta}")
        object.__setattr__(self, "phi", canonical_angle(self.phi))

    def matrix(self) -> np.ndarray:
        return phased_cphase(self.theta, self.phi)


@dataclass(frozen=True)
class CompositeSequence:
    """Ordered gate list, terminal frame rotation, target angle and family tag."""

    gates: tuple[PhasedGate, ...]
    terminal_phase: float = 0.0
    target_theta: float = pi / 4
    family: str = FAMILY_SINGLE
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not self.gates:
            raise ValidationError("a composite sequence needs at least one gate")
        if not np.isfinite(self.terminal_phase):
            raise ValidationError("terminal phase must be finite")

    def total_angle(self) -> float:
        """Sum of |theta_k| over all gates (duration proxy)."""
        return float(sum(abs(g.theta) for g in self.gates))

    def thetas(self) -> np.ndarray:
        return np.array([g.theta for g in self.gates])

    def phis(self) -> np.ndarray:
        return np.array([g.phi for g in self.gates])

    def with_phis(self, phis, terminal_phase=None) -> "CompositeSequence":
        """Copy with replaced gate phases (and optionally terminal phase)."""
        phis = list(phis)
        if len(phis) != len(self.gates):
            raise ValidationError(
                f"expected {len(self.gates)} phases, got {len(phis)}"
            )
        gates = tuple(PhasedGate(g.theta, p) for g, p in zip(self.gates, phis))
        term = self.terminal_phase if terminal_phase is None else terminal_phase
        return replace(self, gates=gates, terminal_phase=term)


def phased_cphase(theta: float, phi: float) -> np.ndarray:
    """4x4 propagator exp(i theta sigma_x (x) sigma_phi).

    Closed form cos(theta) I + i sin(theta) sigma_x (x) sigma_phi; exact
    because the generator squares to the identity.
    """
    if not (np.isfinite(theta) and np.isfinite(phi)):
        raise ValidationError("theta and phi must be finite")
    return np.cos(theta) * IDENTITY_4 + 1j * np.sin(theta) * np.kron(
        SIGMA_X, sigma_axis(phi)
    )


def ideal_cphase(theta: float) -> np.ndarray:
    """Target gate exp(i theta sigma_x (x) sigma_x)."""
    return phased_cphase(theta, 0.0)


def phase_gate(phi: float, qubit: int = 2) -> np.ndarray:
    """Single-qubit frame rotation exp(-i phi sigma_z) on the selected qubit."""
    if qubit not in (1, 2):
        raise ValidationError(f"qubit must be 1 or 2, got {qubit}")
    f = np.array([[np.exp(-1j * phi), 0.0], [0.0, np.exp(1j * phi)]], dtype=complex)
    if qubit == 1:
        return np.kron(f, IDENTITY_2)
    return np.kron(IDENTITY_2, f)


def distorted_theta(theta, epsilon: float = 0.0, xi: float = 0.0):
    """Systematic rotation-angle error model: theta -> theta*(1+eps) + xi.

    The relative error scales the angle, the absolute offset is added
    afterwards; both are applied identically to every gate of a sequence.
    """
    return theta * (1.0 + epsilon) + xi


def sequence_propagator(
    seq: CompositeSequence, epsilon: float = 0.0, xi: float = 0.0
) -> np.ndarray:
    """Propagator of a composite sequence under the systematic error model.

    Every gate angle is distorted as theta -> theta*(1+epsilon) + xi; the
    terminal frame rotation is error-free (it is a software phase shift,
    not a physical rotation).
    """
    m = IDENTITY_4
    for g in seq.gates:
        m = phased_cphase(distorted_theta(g.theta, epsilon, xi), g.phi) @ m
    if seq.terminal_phase != 0.0:
        m = phase_gate(seq.terminal_phase, 2) @ m
    return m


def gate_product_propagator(
    seq: CompositeSequence, epsilon: float = 0.0, xi: float = 0.0
) -> np.ndarray:
    """Like :func:`sequence_propagator` but without the terminal frame
    rotation.  This is the part neighbouring qubits are exposed to."""
    m = IDENTITY_4
    for g in seq.gates:
        m = phased_cphase(distorted_theta(g.theta, epsilon, xi), g.phi) @ m
    return m


def convert_phase_conventions(varphis) -> tuple[list[float], float]:
    """Convert interleaved frame-rotation angles to absorbed gate phases.

    Input: ``varphis[k]`` is the angle of the frame rotation F applied
    between gate k and gate k+1 of an (M+1)-gate sequence whose gates are
    all unphased.  Output ``(phis, terminal)``: the equivalent sequence of
    phased gates has gate 0 with phase 0, gate l (l = 1..M) with phase
    ``phis[l-1] = -2 * (varphis[0] + ... + varphis[l-1])``, and a single
    leading frame rotation ``terminal = sum(varphis)``.

    The inverse is :func:`interleaved_from_phases`; the round trip is the
    identity, and both realizations produce identical propagators.
    """
    varphis = [float(v) for v in varphis]
    cumulative = np.cumsum(varphis) if varphis else np.array([])
    phis = [-2.0 * c for c in cumulative]
    terminal = float(sum(varphis))
    return phis, terminal


def interleaved_from_phases(phis, terminal: float, tol: float = 1e-9) -> list[float]:
    """Inverse of :func:`convert_phase_conventions`.

    Raises
    ------
    ValidationError
        If the terminal phase is inconsistent with the gate phases
        (the interleaved realization fixes terminal = -phis[-1]/2).
    """
    phis = [float(p) for p in phis]
    if not phis:
        if abs(terminal) > tol:
            raise ValidationError("empty phase list requires zero terminal phase")
        return []
    varphis = [-phis[0] / 2.0]
    varphis += [-(phis[k] - phis[k - 1]) / 2.0 for k in range(1, len(phis))]
    if abs(sum(varphis) - terminal) > tol:
        raise ValidationError(
            "terminal phase %.6g is not representable by interleaved frame "
            "rotations (expected %.6g)" % (terminal, sum(varphis))
        )
    return varphis


def merge_adjacent(seq: CompositeSequence, tol: float = 1e-12) -> CompositeSequence:
    """Fuse neighbouring gates whose phases are equal (angles add).

    The propagator is unchanged: gates about the same axis commute and
    their angles are additive.
    """
    merged: list[PhasedGate] = []
    for g in seq.gates:
        if merged and abs(merged[-1].phi - g.phi) <= tol:
            merged[-1] = PhasedGate(merged[-1].theta + g.theta, g.phi)
        else:
            merged.append(g)
    return replace(seq, gates=tuple(merged))
