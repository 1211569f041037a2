"""Physical-layer validation with a bichromatic spin-phonon model.

Two ions share one vibrational mode.  The interaction Hamiltonian in the
rotating frame is

    H(t) = g * sum_k sigma(zp_k) (x) (a^dag e^{i(Delta t - zm_k)}
                                      + a e^{-i(Delta t - zm_k)})

with sigma(z) = sigma^+ e^{-iz} + sigma^- e^{iz} acting on ion k, g the
spin-phonon Rabi frequency, Delta the detuning, zp/zm the spin and
motional laser phases.  State ordering is qubit1 (x) qubit2 (x) phonon,
phonon truncated at n_max.

The exact propagator factorises (the commutator of H at two times is a
spin-only operator commuting with everything involved, so the Magnus
series terminates after two terms):

    U(T) = e^{i phi0} D(alpha) exp(i theta_c sigma(zp_1) sigma(zp_2))

    phi0    = (2 g^2/Delta^2) (Delta T - sin Delta T)
    theta_c = phi0 * cos(zm_1 - zm_2)
    alpha   = -(g/Delta) (e^{i Delta T} - 1)
                * sum_k sigma(zp_k) e^{-i zm_k}       (spin-valued)

The displacement prefactor g/Delta (not g T/Delta) and the scalar phase
phi0 follow from the first and second Magnus integrals; the numerical
integrator below is the independent arbiter for both, and the tests pin
the comparison.  A second pulse of equal g and T with zm shifted by pi
flips alpha, cancelling the displacement exactly and doubling theta_c,
which induces the phased two-qubit gate used by the composite sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import ceil, pi

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import TruncationError, ValidationError
from .gates import CompositeSequence, phase_gate
from .linalg import IDENTITY_2, mat_exp_hermitian_generator, sigma_axis

LEAKAGE_LIMIT = 1e-8


@dataclass(frozen=True)
class TrapConfig:
    """Physical parameters of one bichromatic pulse."""

    g: float
    delta: float
    duration: float
    zeta_plus: tuple[float, float] = (0.0, 0.0)
    zeta_minus: tuple[float, float] = (0.0, 0.0)
    n_max: int = 30
    initial_fock: int = 0

    def __post_init__(self):
        if self.g < 0 or self.delta == 0 or self.duration <= 0:
            raise ValidationError("need g >= 0, delta != 0 and duration > 0")
        if not (0 <= self.initial_fock <= self.n_max):
            raise ValidationError("initial Fock level must lie within the truncation")
        amax = self.displacement_bound()
        required = ceil((amax + 4.0) ** 2)
        if self.n_max < required:
            raise ValidationError(
                f"n_max={self.n_max} too small for peak displacement "
                f"{amax:.3f}; need at least {required}"
            )

    @property
    def dim(self) -> int:
        return 4 * (self.n_max + 1)

    def phase_angle(self) -> float:
        """Delta*T, the phase-space loop angle of the pulse."""
        return self.delta * self.duration

    def displacement_bound(self) -> float:
        """Peak |alpha| over the pulse (both ions, worst spin branch)."""
        dt = abs(self.phase_angle())
        loop = 2.0 if dt >= pi else 2.0 * abs(np.sin(dt / 2.0))
        return 2.0 * (self.g / abs(self.delta)) * loop

    def shifted_motional_phases(self) -> "TrapConfig":
        zm = tuple(z + pi for z in self.zeta_minus)
        return replace(self, zeta_minus=zm)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def destroy(levels: int) -> np.ndarray:
    """Truncated phonon annihilation operator on ``levels`` Fock states."""
    a = np.zeros((levels, levels), dtype=complex)
    n = np.arange(1, levels)
    a[n - 1, n] = np.sqrt(n)
    return a


def _spin_phonon(cfg: TrapConfig):
    """The operators B_k = sigma(zp_k) e^{-i zm_k} (x) a^dag for both ions,
    summed, plus the bare spin axes."""
    levels = cfg.n_max + 1
    adag = destroy(levels).conj().T
    s1 = np.kron(np.kron(sigma_axis(cfg.zeta_plus[0]), IDENTITY_2), np.eye(levels))
    s2 = np.kron(np.kron(IDENTITY_2, sigma_axis(cfg.zeta_plus[1])), np.eye(levels))
    raising = np.kron(np.eye(4), adag)
    b = (
        np.exp(-1j * cfg.zeta_minus[0]) * s1
        + np.exp(-1j * cfg.zeta_minus[1]) * s2
    ) @ raising
    return b, s1, s2


def hamiltonian_at(cfg: TrapConfig, t: float) -> np.ndarray:
    """Interaction Hamiltonian at time t (Hermitian, linear in g)."""
    if not 0 <= t <= cfg.duration:
        raise ValidationError("t must lie within the pulse duration")
    b, _, _ = _spin_phonon(cfg)
    phase = np.exp(1j * cfg.delta * t)
    return cfg.g * (phase * b + np.conj(phase) * b.conj().T)


def leakage(u: np.ndarray, cfg: TrapConfig, source_levels: int | None = None) -> float:
    """Worst-case population in the top two phonon levels over all input
    basis states with phonon level <= source_levels."""
    levels = cfg.n_max + 1
    src = cfg.initial_fock if source_levels is None else source_levels
    blocks = u.reshape(4, levels, 4, levels)
    top = blocks[:, -2:, :, : src + 1]
    return float(np.max(np.sum(np.abs(top) ** 2, axis=(0, 1))))


def _check_leakage(u: np.ndarray, cfg: TrapConfig) -> None:
    leak = leakage(u, cfg)
    if leak > LEAKAGE_LIMIT:
        raise TruncationError(
            f"population {leak:.2e} reached the top two Fock levels; "
            f"increase n_max"
        )


def evolve_numerical(
    cfg: TrapConfig, rtol: float = 1e-10, atol: float = 1e-12,
    check: bool = True,
) -> np.ndarray:
    """Time-ordered propagator over [0, T] by adaptive high-order
    integration of dU/dt = -i H(t) U.

    Independent of the closed form: it sees only the Hamiltonian.  Raises
    TruncationError when population leaks into the top two Fock levels.
    """
    b, _, _ = _spin_phonon(cfg)
    bdag = b.conj().T
    dim = cfg.dim
    u0 = np.eye(dim, dtype=complex).reshape(-1)

    def rhs(t, y):
        u = y.reshape(dim, dim)
        h = cfg.g * (np.exp(1j * cfg.delta * t) * b + np.exp(-1j * cfg.delta * t) * bdag)
        return (-1j * (h @ u)).reshape(-1)

    sol = solve_ivp(
        rhs, (0.0, cfg.duration), u0, method="DOP853", rtol=rtol, atol=atol
    )
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    u = sol.y[:, -1].reshape(dim, dim)
    if check:
        _check_leakage(u, cfg)
    return u


def rotation_angle(cfg: TrapConfig) -> float:
    """Two-pulse qubit rotation angle (4 g^2/Delta^2)(Delta T - sin Delta T)."""
    dt = cfg.phase_angle()
    return 4.0 * (cfg.g / cfg.delta) ** 2 * (dt - np.sin(dt))


def single_pulse_spin_angle(cfg: TrapConfig) -> float:
    """Spin-spin angle of one pulse, half the two-pulse angle, weighted by
    the motional-phase mismatch."""
    return 0.5 * rotation_angle(cfg) * np.cos(cfg.zeta_minus[0] - cfg.zeta_minus[1])


def displacement_amplitudes(cfg: TrapConfig) -> np.ndarray:
    """Coherent displacement per simultaneous spin eigenbranch (s1, s2),
    ordered (+1,+1), (+1,-1), (-1,+1), (-1,-1)."""
    c = -(cfg.g / cfg.delta) * (np.exp(1j * cfg.phase_angle()) - 1.0)
    e1 = np.exp(-1j * cfg.zeta_minus[0])
    e2 = np.exp(-1j * cfg.zeta_minus[1])
    return np.array(
        [c * (s1 * e1 + s2 * e2) for s1 in (+1, -1) for s2 in (+1, -1)]
    )


def analytic_propagator(cfg: TrapConfig, check: bool = True) -> np.ndarray:
    """Closed-form single-pulse propagator (displacement times spin-spin
    exponential times scalar phase), built in the truncated space."""
    levels = cfg.n_max + 1
    b, s1, s2 = _spin_phonon(cfg)
    dt = cfg.phase_angle()
    area = (dt - np.sin(dt)) * 2.0 * (cfg.g / cfg.delta) ** 2
    phi0 = area
    theta_c = area * np.cos(cfg.zeta_minus[0] - cfg.zeta_minus[1])
    c = -(cfg.g / cfg.delta) * (np.exp(1j * dt) - 1.0)
    gen = c * b - np.conj(c) * b.conj().T        # anti-Hermitian
    disp = mat_exp_hermitian_generator(-1j * gen, 1.0)
    spin = mat_exp_hermitian_generator(s1 @ s2, theta_c)
    u = np.exp(1j * phi0) * (disp @ spin)
    if check:
        _check_leakage(u, cfg)
    return u


def two_pulse_gate(
    cfg: TrapConfig, rtol: float = 1e-10, atol: float = 1e-12,
    analytic: bool = False,
) -> np.ndarray:
    """Propagator of two equal pulses, the second with motional phases
    shifted by pi.  The displacement cancels, restoring the vibrational
    state regardless of the (common) detuning, and the spin-spin angle
    doubles to :func:`rotation_angle`."""
    second = cfg.shifted_motional_phases()
    if analytic:
        return analytic_propagator(second) @ analytic_propagator(cfg)
    u1 = evolve_numerical(cfg, rtol, atol)
    u2 = evolve_numerical(second, rtol, atol)
    return u2 @ u1


def ideal_two_pulse_gate(cfg: TrapConfig) -> np.ndarray:
    """exp(i theta sigma(zp1) sigma(zp2)) (x) 1 with the scalar phase of
    the two-pulse scheme included (it equals the rotation angle)."""
    theta = rotation_angle(cfg)
    spin = mat_exp_hermitian_generator(
        np.kron(sigma_axis(cfg.zeta_plus[0]), sigma_axis(cfg.zeta_plus[1])),
        theta * np.cos(cfg.zeta_minus[0] - cfg.zeta_minus[1]),
    )
    return np.exp(1j * theta) * np.kron(spin, np.eye(cfg.n_max + 1))


def safe_source_level(cfg: TrapConfig) -> int:
    """Highest initial Fock level whose displaced dynamics stay clear of
    the truncation edge.

    A displaced Fock state |p> spreads over roughly 2*|alpha|*sqrt(p)
    levels; inside the truncated ladder the commutator [a, a^dag] differs
    from one at the top level, so only sources that never reach it follow
    the untruncated dynamics.
    """
    amax = cfg.displacement_bound()
    p = cfg.n_max
    while p > 0 and p + 4.0 * amax * np.sqrt(p + 1.0) + 8.0 > cfg.n_max:
        p -= 1
    return p


def propagator_distance(
    a: np.ndarray, b: np.ndarray, cfg: TrapConfig, source_levels: int | None = None
) -> float:
    """Frobenius distance restricted to source columns with phonon level
    at most ``source_levels`` (default :func:`safe_source_level`).

    Full-matrix comparisons are meaningless near the truncation edge,
    where a time-ordered integration and a closed-form exponential of the
    same truncated operators legitimately differ.
    """
    levels = cfg.n_max + 1
    src = safe_source_level(cfg) if source_levels is None else source_levels
    da = (a - b).reshape(4, levels, 4, levels)[:, :, :, : src + 1]
    return float(np.linalg.norm(da))


def extract_qubit_gate(u: np.ndarray, cfg: TrapConfig, fock_level: int | None = None) -> np.ndarray:
    """4x4 qubit block of a propagator that acts as identity on the
    phonon factor, read off at the given Fock level."""
    levels = cfg.n_max + 1
    p = cfg.initial_fock if fock_level is None else fock_level
    return u.reshape(4, levels, 4, levels)[:, p, :, p].copy()


def phonon_identity_defect(
    u: np.ndarray, cfg: TrapConfig, source_levels: int | None = None
) -> float:
    """Frobenius distance between u and (qubit block) (x) 1, over source
    columns that stay clear of the truncation edge."""
    levels = cfg.n_max + 1
    src = safe_source_level(cfg) if source_levels is None else source_levels
    q = extract_qubit_gate(u, cfg, fock_level=min(cfg.initial_fock, src))
    ideal = np.einsum("qr,pm->qprm", q, np.eye(levels))
    da = (u.reshape(4, levels, 4, levels) - ideal)[:, :, :, : src + 1]
    return float(np.linalg.norm(da))


def fock_population(u: np.ndarray, cfg: TrapConfig, qubit_state: np.ndarray, level: int) -> float:
    """Population of phonon |level> after applying u to qubit_state (x) |level>."""
    levels = cfg.n_max + 1
    phonon = np.zeros(levels, dtype=complex)
    phonon[level] = 1.0
    psi = np.kron(np.asarray(qubit_state, dtype=complex), phonon)
    out = (u @ psi).reshape(4, levels)
    return float(np.sum(np.abs(out[:, level]) ** 2))


def duration_for_angle(g: float, delta: float, theta: float) -> float:
    """Pulse duration making the two-pulse rotation angle equal theta."""
    if theta <= 0:
        raise ValidationError("target angle must be positive")
    y = theta * delta**2 / (4.0 * g**2)
    f = lambda x: x - np.sin(x) - y
    lo = max(y - 1.0, 1e-9)
    hi = y + 1.0 + 1e-9
    if f(lo) > 0:
        lo = 1e-12
    x = brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
    return x / delta


def composite_physical_gate(
    seq: CompositeSequence,
    cfg_base: TrapConfig,
    eps_g: float = 0.0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    analytic: bool = False,
) -> np.ndarray:
    """Full physical propagator of a composite sequence with individual
    addressing: ion 2's spin phase carries each gate's phase, the pulse
    duration is chosen per gate so the two-pulse angle matches the gate
    angle, and the Rabi frequency error eps_g enters every pulse.

    Negative gate angles are realised by a pi shift of the spin phase.
    The terminal frame rotation, a software phase, is applied as an ideal
    qubit operation.  The induced relative rotation-angle error is
    (1+eps_g)^2 - 1.
    """
    dim = cfg_base.dim
    u = np.eye(dim, dtype=complex)
    for gate in seq.gates:
        theta = gate.theta
        phi = gate.phi
        if theta < 0:
            theta, phi = -theta, phi + pi
        duration = duration_for_angle(cfg_base.g, cfg_base.delta, theta)
        cfg = replace(
            cfg_base,
            g=cfg_base.g * (1.0 + eps_g),
            duration=duration,
            zeta_plus=(cfg_base.zeta_plus[0], cfg_base.zeta_plus[0] + phi),
        )
        u = two_pulse_gate(cfg, rtol, atol, analytic=analytic) @ u
    if seq.terminal_phase != 0.0:
        u = np.kron(phase_gate(seq.terminal_phase, 2), np.eye(cfg_base.n_max + 1)) @ u
    return u


# ---------------------------------------------------------------------------
# config file format
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "g", "delta", "t", "delta_t", "nmax", "fock0",
    "zeta1p", "zeta2p", "zeta1m", "zeta2m", "eps_g",
}


def parse_config(text: str) -> tuple[TrapConfig, float]:
    """Parse the flat key=value pulse description.

    Angle-like keys (zeta*, delta_t) are given in units of pi; g, delta
    and T are raw angular-frequency / time values.  Returns the config and
    the Rabi-frequency error eps_g (0 when absent).
    """
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().lower()
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"line {lineno}: unknown key {key!r}")
        values[key] = float(val)
    for required in ("g", "delta"):
        if required not in values:
            raise ValidationError(f"missing required key {required!r}")
    if "t" in values:
        duration = values["t"]
    elif "delta_t" in values:
        duration = values["delta_t"] * pi / values["delta"]
    else:
        raise ValidationError("provide either t or delta_t")
    cfg = TrapConfig(
        g=values["g"],
        delta=values["delta"],
        duration=duration,
        zeta_plus=(values.get("zeta1p", 0.0) * pi, values.get("zeta2p", 0.0) * pi),
        zeta_minus=(values.get("zeta1m", 0.0) * pi, values.get("zeta2m", 0.0) * pi),
        n_max=int(values.get("nmax", 30)),
        initial_fock=int(values.get("fock0", 0)),
    )
    return cfg, values.get("eps_g", 0.0)
