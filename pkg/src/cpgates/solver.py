"""Phase-sequence solver: damped Newton least squares over the residual
conditions, with seeded Monte-Carlo restarts and gate-count escalation.

The unknowns are the free gate phases (plus, for the shortest broadband
shape, the terminal frame rotation).  The residual vector stacks the real
and imaginary parts of every matrix entry of the targeted derivative
conditions; order l is scaled by 1/A**l with A the total rotation angle,
which keeps all orders at comparable magnitude and makes the default
tolerance attainable at every catalog order.  The objective D reported in
results and logs is the sum of the scaled residual norms, including the
(sign-aligned) order-0 term, so D = 0 exactly when every targeted order
cancels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi
from typing import Optional

import numpy as np

from .errors import ValidationError
from .gates import (
    FAMILY_BROADBAND,
    FAMILY_PASSBAND,
    CompositeSequence,
    PhasedGate,
    canonical_angle,
    ideal_cphase,
)
from .derivatives import product_derivative_stack

HALF = pi / 2

SHAPE_HALF_CHAIN_TERMINAL = "half-pi chain + free terminal"
SHAPE_HALF_CHAIN = "half-pi chain"
SHAPE_HALF_CHAIN_SHORT = "half-pi chain, leading gates merged"
SHAPE_PI_CHAIN = "pi chain"
SHAPE_PI_CHAIN_SHORT = "pi chain, leading gates merged"


@dataclass(frozen=True)
class SolverProblem:
    """A fixed gate-angle skeleton whose phases are to be solved.

    ``thetas`` lists every gate angle, first-applied first; gate 0 has the
    fixed phase ``phi0`` and the remaining gates carry free phases.  When
    ``free_terminal`` is set, one additional unknown is the terminal frame
    rotation (otherwise it is zero).
    """

    family: str
    orders: tuple[int, int]  # (broadband order, narrowband order); 0 = unused
    target_theta: float
    thetas: tuple[float, ...]
    phi0: float = 0.0
    free_terminal: bool = False
    shape: str = SHAPE_HALF_CHAIN

    @property
    def free_phase_count(self) -> int:
        return len(self.thetas) - 1 + (1 if self.free_terminal else 0)

    @property
    def gate_count(self) -> int:
        return len(self.thetas)

    def total_angle(self) -> float:
        return float(sum(abs(t) for t in self.thetas))

    def label(self) -> str:
        n1, n2 = self.orders
        if self.family == FAMILY_BROADBAND:
            return f"BB{n1}"
        if self.family == FAMILY_PASSBAND:
            return f"PB({n1},{n2})"
        return self.family

    def split(self, x: np.ndarray):
        """Split an unknown vector into (gate phases, terminal phase)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.free_phase_count:
            raise ValidationError(
                f"expected {self.free_phase_count} free phases, got {x.shape[-1]}"
            )
        g = self.gate_count
        phis = np.concatenate(
            [np.full(x.shape[:-1] + (1,), self.phi0), x[..., : g - 1]], axis=-1
        )
        if self.free_terminal:
            terminal = x[..., g - 1]
        else:
            terminal = np.zeros(x.shape[:-1])
        return phis, terminal

    def build_sequence(self, x) -> CompositeSequence:
        phis, terminal = self.split(np.atleast_1d(np.asarray(x, dtype=float)))
        gates = tuple(
            PhasedGate(t, canonical_angle(p)) for t, p in zip(self.thetas, phis)
        )
        return CompositeSequence(
            gates=gates,
            terminal_phase=float(terminal) if self.free_terminal else 0.0,
            target_theta=self.target_theta,
            family=self.family,
            label=self.label(),
        )


@dataclass(frozen=True)
class SolverConfig:
    residual_tolerance: float = 1e-10
    jacobian_step: float = 1e-6
    max_newton_iters: int = 200
    max_restarts: int = 10_000
    rng_seed: int = 0
    initial_phases: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.residual_tolerance <= 0 or self.jacobian_step <= 0:
            raise ValidationError("tolerances and steps must be positive")


@dataclass(frozen=True)
class SolverResult:
    sequence: Optional[CompositeSequence]
    residual_D: float
    restarts_used: int
    iterations_used: int
    converged: bool
    problem: SolverProblem
    attempted_gate_counts: tuple[int, ...] = field(default_factory=tuple)


def _apply_terminal(frames: np.ndarray, terminal: np.ndarray) -> np.ndarray:
    """Left-multiply each batch stack by exp(-i terminal sigma_z) on qubit 2."""
    e = np.exp(-1j * terminal)[:, None]
    phase = np.concatenate([e, e.conj(), e, e.conj()], axis=1)
    return phase[:, None, :, None] * frames


def _residuals(problem: SolverProblem, x_batch: np.ndarray):
    """Stacked real residual components and objective D for a batch.

    Returns (R, D): R is (B, p) float, D is (B,).
    """
    x_batch = np.atleast_2d(np.asarray(x_batch, dtype=float))
    b = x_batch.shape[0]
    phis, terminal = problem.split(x_batch)
    n1, n2 = problem.orders
    scale = max(1.0, problem.total_angle())
    target = ideal_cphase(problem.target_theta)

    p = product_derivative_stack(problem.thetas, phis, n1)
    p = _apply_terminal(p, terminal)
    blocks = []
    d = np.zeros(b)
    c0 = p[:, 0]
    dplus = np.linalg.norm((c0 - target).reshape(b, -1), axis=1)
    dminus = np.linalg.norm((c0 + target).reshape(b, -1), axis=1)
    sign = np.where(dplus <= dminus, 1.0, -1.0)
    r0 = c0 - sign[:, None, None] * target
    blocks.append(r0.reshape(b, -1))
    d += np.minimum(dplus, dminus)
    for l in range(1, n1 + 1):
        rl = p[:, l].reshape(b, -1) / scale**l
        blocks.append(rl)
        d += np.linalg.norm(rl, axis=1)
    if n2 > 0:
        pn = product_derivative_stack(problem.thetas, phis, n2, at_epsilon=-1.0)
        for l in range(1, n2 + 1):
            rl = pn[:, l].reshape(b, -1) / scale**l
            blocks.append(rl)
            d += np.linalg.norm(rl, axis=1)
    rc = np.concatenate(blocks, axis=1)
    return np.concatenate([rc.real, rc.imag], axis=1), d


def objective_D(problem: SolverProblem, phases) -> float:
    """Scaled residual objective for a candidate free-phase vector.

    Zero exactly when all targeted derivative orders cancel.  Raises
    ValidationError when the phase list length does not match the
    problem's free phase count.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.ndim != 1 or phases.size != problem.free_phase_count:
        raise ValidationError(
            f"expected {problem.free_phase_count} free phases, got {phases.size}"
        )
    _, d = _residuals(problem, phases[None, :])
    return float(d[0])


def _newton_from(problem, x, d, config):
    """Damped Newton least-squares iteration from a given start.

    Returns (x, D, iterations).  A plain least-squares step with step
    halving is tried first; when no shorter step improves D, the step is
    recomputed with increasing Levenberg regularisation before giving up.
    """
    n = problem.free_phase_count
    eye = np.eye(n)
    h = config.jacobian_step
    for it in range(config.max_newton_iters):
        if d <= config.residual_tolerance:
            return x, d, it
        probes = np.vstack([x[None, :], x + h * eye, x - h * eye])
        r, _ = _residuals(problem, probes)
        r0 = r[0]
        jac = (r[1 : n + 1] - r[n + 1 :]).T / (2.0 * h)
        accepted = False
        dx, *_ = np.linalg.lstsq(jac, -r0, rcond=None)
        step = 1.0
        for _ in range(20):
            xn = x + step * dx
            _, dn = _residuals(problem, xn[None, :])
            if dn[0] < d:
                x, d, accepted = xn, float(dn[0]), True
                break
            step *= 0.5
        if not accepted:
            jtj = jac.T @ jac
            jtr = jac.T @ r0
            lam = 1e-6 * max(np.trace(jtj) / n, 1e-30)
            for _ in range(25):
                try:
                    dx = np.linalg.solve(jtj + lam * eye, -jtr)
                except np.linalg.LinAlgError:
                    break
                xn = x + dx
                _, dn = _residuals(problem, xn[None, :])
                if dn[0] < d:
                    x, d, accepted = xn, float(dn[0]), True
                    break
                lam *= 10.0
        if not accepted:
            return x, d, it + 1
    return x, d, config.max_newton_iters


def solve(
    problem: SolverProblem, config: SolverConfig = SolverConfig(), log=None
) -> SolverResult:
    """Monte-Carlo restarted Newton search for phases nullifying the
    residual conditions.

    Restart 0 uses ``config.initial_phases`` when given (and of matching
    length); every other restart draws the free phases uniformly from
    [0, 2*pi) with a generator seeded by ``config.rng_seed``, so results
    are bit-for-bit reproducible.  Non-convergence is reported in the
    result, not raised.
    """
    rng = np.random.default_rng(config.rng_seed)
    n = problem.free_phase_count
    best_d = np.inf
    total_restarts = 0
    for k in range(config.max_restarts):
        if k == 0 and config.initial_phases is not None and len(config.initial_phases) == n:
            x = np.asarray(config.initial_phases, dtype=float)
        else:
            x = rng.uniform(0.0, 2.0 * pi, n)
        _, d0 = _residuals(problem, x[None, :])
        x, d, iters = _newton_from(problem, x, float(d0[0]), config)
        total_restarts = k + 1
        if log is not None:
            log.write(f"restart={k} iters={iters} D={d:.6e}\n")
        best_d = min(best_d, d)
        if d <= config.residual_tolerance:
            x = np.mod(x, 2.0 * pi)
            return SolverResult(
                sequence=problem.build_sequence(x),
                residual_D=float(objective_D(problem, x)),
                restarts_used=total_restarts,
                iterations_used=iters,
                converged=True,
                problem=problem,
            )
    return SolverResult(
        sequence=None,
        residual_D=float(best_d),
        restarts_used=total_restarts,
        iterations_used=config.max_newton_iters,
        converged=False,
        problem=problem,
    )


# ---------------------------------------------------------------------------
# problem shapes and escalation
# ---------------------------------------------------------------------------

def broadband_problem(
    n: int, target_theta: float, half_pi_gates: int, short: bool = False,
    free_terminal: bool = False,
) -> SolverProblem:
    """Broadband problem: target gate followed by a chain of pi/2 gates.

    ``short`` merges the leading pi/2 gate into the target gate (the
    target gate then carries the fixed phase pi and the chain has an odd
    gate count); otherwise gate 0 is the bare target with phase 0 and the
    chain count must be even for the zero-order condition to be solvable.
    """
    thetas = (target_theta,) + (HALF,) * half_pi_gates
    return SolverProblem(
        family=FAMILY_BROADBAND,
        orders=(n, 0),
        target_theta=target_theta,
        thetas=thetas,
        phi0=pi if short else 0.0,
        free_terminal=free_terminal,
        shape=(
            SHAPE_HALF_CHAIN_SHORT
            if short
            else (SHAPE_HALF_CHAIN_TERMINAL if free_terminal else SHAPE_HALF_CHAIN)
        ),
    )


def passband_problem(
    n1: int, n2: int, target_theta: float, gate_count: int,
    shape: str = SHAPE_PI_CHAIN,
) -> SolverProblem:
    """Passband problem on a chain of pi gates (optionally merged leading
    gate) or pi/2 gates following the target gate."""
    if shape == SHAPE_PI_CHAIN:
        thetas = (target_theta,) + (pi,) * gate_count
        phi0 = 0.0
    elif shape == SHAPE_PI_CHAIN_SHORT:
        thetas = (target_theta + HALF,) + (pi,) * gate_count
        phi0 = pi
    elif shape == SHAPE_HALF_CHAIN:
        thetas = (target_theta,) + (HALF,) * gate_count
        phi0 = 0.0
    else:
        raise ValidationError(f"unsupported passband shape {shape!r}")
    return SolverProblem(
        family=FAMILY_PASSBAND,
        orders=(n1, n2),
        target_theta=target_theta,
        thetas=thetas,
        phi0=phi0,
        free_terminal=False,
        shape=shape,
    )


def broadband_progression(n: int, target_theta: float) -> list[SolverProblem]:
    """Gate-count escalation ladder for broadband problems.

    Starts from the three-gate shape with a free terminal phase, continues
    with even pi/2 chains, and past six chain gates switches to the merged
    short form (which is what keeps the published total angles minimal).
    """
    stages = [broadband_problem(n, target_theta, 2, free_terminal=True)]
    stages += [broadband_problem(n, target_theta, m) for m in (4, 6)]
    stages += [broadband_problem(n, target_theta, m, short=True) for m in (7, 9, 11, 13)]
    return stages


def passband_progression(n1: int, n2: int, target_theta: float) -> list[SolverProblem]:
    """Gate-count escalation ladder for passband problems, ordered by
    total rotation angle."""
    return [
        passband_problem(n1, n2, target_theta, 2, SHAPE_PI_CHAIN),
        passband_problem(n1, n2, target_theta, 6, SHAPE_HALF_CHAIN),
        passband_problem(n1, n2, target_theta, 3, SHAPE_PI_CHAIN),
        passband_problem(n1, n2, target_theta, 4, SHAPE_PI_CHAIN),
        passband_problem(n1, n2, target_theta, 8, SHAPE_HALF_CHAIN),
        passband_problem(n1, n2, target_theta, 5, SHAPE_PI_CHAIN),
        passband_problem(n1, n2, target_theta, 5, SHAPE_PI_CHAIN_SHORT),
    ]


def solve_with_escalation(
    family: str,
    orders,
    target_theta: float,
    config: SolverConfig = SolverConfig(),
    log=None,
    stage_restarts: int | None = 100,
) -> SolverResult:
    """Try progressively longer gate-count shapes, returning the first
    converged result; records every attempted gate count.

    ``stage_restarts`` caps the Monte-Carlo budget spent per shape before
    escalating (shapes too short for the requested order never converge,
    so an uncapped budget would stall on them); pass None to use the full
    ``config.max_restarts`` at every stage.  Feasible stages converge
    within a few dozen restarts in practice.
    """
    if family == FAMILY_BROADBAND:
        n = orders if isinstance(orders, int) else orders[0]
        stages = broadband_progression(n, target_theta)
    elif family == FAMILY_PASSBAND:
        n1, n2 = orders
        stages = passband_progression(n1, n2, target_theta)
    else:
        raise ValidationError(f"escalation is defined for broadband/passband, got {family!r}")
    attempted: list[int] = []
    last = None
    for stage in stages:
        attempted.append(stage.gate_count)
        if log is not None:
            log.write(
                f"stage gates={stage.gate_count} shape={stage.shape!r} "
                f"unknowns={stage.free_phase_count}\n"
            )
        budget = config.max_restarts
        if stage_restarts is not None:
            budget = min(budget, stage_restarts)
        seed_phases = config.initial_phases
        if seed_phases is not None and len(seed_phases) != stage.free_phase_count:
            seed_phases = None
        stage_config = SolverConfig(
            residual_tolerance=config.residual_tolerance,
            jacobian_step=config.jacobian_step,
            max_newton_iters=config.max_newton_iters,
            max_restarts=budget,
            rng_seed=config.rng_seed,
            initial_phases=seed_phases,
        )
        last = solve(stage, stage_config, log=log)
        if last.converged:
            return SolverResult(
                sequence=last.sequence,
                residual_D=last.residual_D,
                restarts_used=last.restarts_used,
                iterations_used=last.iterations_used,
                converged=True,
                problem=last.problem,
                attempted_gate_counts=tuple(attempted),
            )
    assert last is not None
    return SolverResult(
        sequence=None,
        residual_D=last.residual_D,
        restarts_used=last.restarts_used,
        iterations_used=last.iterations_used,
        converged=False,
        problem=last.problem,
        attempted_gate_counts=tuple(attempted),
    )


def polish(seq: CompositeSequence, orders, config: SolverConfig = SolverConfig()) -> SolverResult:
    """Refine a catalog-precision sequence to solver precision.

    Builds the problem matching the sequence's skeleton (fixed gate
    angles, gate-0 phase, terminal phase free when nonzero) and runs the
    Newton search seeded with the sequence's own phases.
    """
    n1, n2 = (orders, 0) if isinstance(orders, int) else tuple(orders)
    free_terminal = seq.terminal_phase != 0.0
    problem = SolverProblem(
        family=seq.family,
        orders=(n1, n2),
        target_theta=seq.target_theta,
        thetas=tuple(g.theta for g in seq.gates),
        phi0=seq.gates[0].phi,
        free_terminal=free_terminal,
        shape="catalog skeleton",
    )
    x0 = [g.phi for g in seq.gates[1:]]
    if free_terminal:
        x0.append(seq.terminal_phase)
    cfg = SolverConfig(
        residual_tolerance=config.residual_tolerance,
        jacobian_step=config.jacobian_step,
        max_newton_iters=max(config.max_newton_iters, 300),
        max_restarts=1,
        rng_seed=config.rng_seed,
        initial_phases=tuple(x0),
    )
    return solve(problem, cfg)
