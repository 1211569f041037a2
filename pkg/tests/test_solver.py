import io
import re
import numpy as np
import pytest
from math import acos, pi

from cpgates import catalog
from cpgates.derivatives import broadband_residuals, narrowband_residuals
from cpgates.errors import ValidationError
from cpgates.gates import FAMILY_BROADBAND, FAMILY_PASSBAND
from cpgates.solver import (
    SolverConfig,
    broadband_problem,
    objective_D,
    passband_problem,
    polish,
    solve,
    solve_with_escalation,
)

TH = pi / 4


def phases_match(candidate, reference, tol=1e-6):
    """Equality modulo simultaneous negation and 2*pi shifts."""
    c = np.asarray(candidate)
    r = np.asarray(reference)
    for sign in (1.0, -1.0):
        d = np.mod(sign * c - r + pi, 2 * pi) - pi
        if np.max(np.abs(d)) < tol:
            return True
    return False


def test_objective_bb1_analytic_phases():
    problem = broadband_problem(1, TH, 2, free_terminal=True)
    phi = acos(-TH / pi)
    assert objective_D(problem, [phi, 3 * phi, -2 * phi]) <= 1e-12


def test_objective_bb1_zero_phases_large():
    problem = broadband_problem(1, TH, 2, free_terminal=True)
    assert objective_D(problem, [0.0, 0.0, 0.0]) > 0.1


def test_objective_bb2_merged_pattern():
    # merged skeleton (theta, pi/2, pi, pi/2) with phases (0, phi, 3phi, phi)
    from cpgates.solver import SolverProblem

    phi = acos(-1 / 8)
    problem = SolverProblem(
        family=FAMILY_BROADBAND,
        orders=(2, 0),
        target_theta=TH,
        thetas=(TH, pi / 2, pi, pi / 2),
        phi0=0.0,
    )
    assert objective_D(problem, [phi, 3 * phi, phi]) <= 1e-12


def test_objective_validates_length():
    problem = broadband_problem(1, TH, 2, free_terminal=True)
    with pytest.raises(ValidationError):
        objective_D(problem, [0.1, 0.2])


@pytest.mark.parametrize("theta", [pi / 8, TH, pi / 2])
def test_solve_bb1_recovers_analytic_solution(theta):
    problem = broadband_problem(1, theta, 2, free_terminal=True)
    result = solve(problem, SolverConfig(rng_seed=7, max_restarts=200))
    assert result.converged
    assert result.residual_D <= 1e-10
    phi = acos(-theta / pi)
    got = [g.phi for g in result.sequence.gates[1:]] + [result.sequence.terminal_phase]
    assert phases_match(got, [phi, 3 * phi, -2 * phi])


def test_solve_bb2_recovers_analytic_solution():
    problem = broadband_problem(2, TH, 4)
    result = solve(problem, SolverConfig(rng_seed=7, max_restarts=300))
    assert result.converged and result.residual_D <= 1e-10
    phi = acos(-TH / (2 * pi))
    got = [g.phi for g in result.sequence.gates[1:]]
    assert phases_match(got, [phi, 3 * phi, 3 * phi, phi])


def test_solve_bb2_theta_dependence():
    problem = broadband_problem(2, pi / 2, 4)
    result = solve(problem, SolverConfig(rng_seed=7, max_restarts=300))
    assert result.converged
    phi = acos(-1 / 4)
    got = [g.phi for g in result.sequence.gates[1:]]
    assert phases_match(got, [phi, 3 * phi, 3 * phi, phi])


def test_solve_pb11_recovers_analytic_solution():
    problem = passband_problem(1, 1, TH, 2)
    result = solve(problem, SolverConfig(rng_seed=3, max_restarts=200))
    assert result.converged
    phi = acos(-1 / 8)
    got = [g.phi for g in result.sequence.gates[1:]]
    assert phases_match(got, [phi, -phi])


def test_converged_results_pass_residual_conditions():
    cases = [
        (broadband_problem(1, TH, 2, free_terminal=True), 7),
        (broadband_problem(2, TH, 4), 7),
        (passband_problem(1, 1, TH, 2), 3),
    ]
    for problem, seed in cases:
        result = solve(problem, SolverConfig(rng_seed=seed, max_restarts=200))
        assert result.converged
        seq = result.sequence
        n1, n2 = problem.orders
        assert max(broadband_residuals(seq, n1).scaled_norms) <= 1e-9
        if n2:
            assert max(narrowband_residuals(seq, n2).scaled_norms) <= 1e-9


def test_solver_determinism_bit_for_bit():
    problem = broadband_problem(1, TH, 2, free_terminal=True)
    for seed in (0, 1, 42):
        a = solve(problem, SolverConfig(rng_seed=seed, max_restarts=50))
        b = solve(problem, SolverConfig(rng_seed=seed, max_restarts=50))
        assert a.converged == b.converged
        assert a.restarts_used == b.restarts_used
        assert a.residual_D == b.residual_D
        pa = [g.phi for g in a.sequence.gates] + [a.sequence.terminal_phase]
        pb = [g.phi for g in b.sequence.gates] + [b.sequence.terminal_phase]
        assert pa == pb


def test_solver_log_format():
    problem = broadband_problem(1, TH, 2, free_terminal=True)
    log = io.StringIO()
    solve(problem, SolverConfig(rng_seed=7, max_restarts=50), log=log)
    lines = [ln for ln in log.getvalue().splitlines() if ln.startswith("restart=")]
    assert lines
    assert re.fullmatch(r"restart=\d+ iters=\d+ D=[\d.eE+-]+", lines[0])


def test_phases_reported_in_canonical_range():
    problem = broadband_problem(2, TH, 4)
    result = solve(problem, SolverConfig(rng_seed=7, max_restarts=300))
    for g in result.sequence.gates:
        assert 0.0 <= g.phi < 2 * pi


def test_escalation_bb1_stops_at_three_gates():
    result = solve_with_escalation(
        FAMILY_BROADBAND, 1, TH, SolverConfig(rng_seed=7, max_restarts=50)
    )
    assert result.converged
    assert result.attempted_gate_counts == (3,)
    assert abs(result.sequence.total_angle() - 1.25 * pi) < 1e-12


def test_escalation_bb3_reaches_published_length():
    config = SolverConfig(rng_seed=7, max_restarts=12, max_newton_iters=60)
    result = solve_with_escalation(FAMILY_BROADBAND, 3, TH, config)
    assert result.converged
    assert result.attempted_gate_counts == (3, 5, 7)
    assert abs(result.sequence.total_angle() - 3.25 * pi) < 1e-12


def test_escalation_bb6_total_angle():
    # seed the search with the catalog phases: the earlier (shorter) stages
    # cannot satisfy order six and are abandoned after the restart budget,
    # and the published twelve-gate shape converges immediately
    seed_phases = tuple(g.phi for g in catalog.broadband(6, TH).gates[1:])
    config = SolverConfig(
        rng_seed=1, max_restarts=2, max_newton_iters=150, initial_phases=seed_phases
    )
    result = solve_with_escalation(FAMILY_BROADBAND, 6, TH, config)
    assert result.converged
    assert result.sequence is not None
    assert abs(result.sequence.total_angle() - 5.75 * pi) < 1e-12
    assert result.attempted_gate_counts[-1] == 12


def test_polish_refines_catalog_decimals():
    seq = catalog.broadband(3, TH)
    result = polish(seq, 3)
    assert result.converged
    assert result.residual_D <= 1e-10
    # the polished phases stay near the printed decimals
    before = np.array([g.phi for g in seq.gates[1:]])
    after = np.array([g.phi for g in result.sequence.gates[1:]])
    assert np.max(np.abs(np.mod(after - before + pi, 2 * pi) - pi)) < 0.1


def test_passband_escalation_pb11():
    result = solve_with_escalation(
        FAMILY_PASSBAND, (1, 1), TH, SolverConfig(rng_seed=3, max_restarts=60)
    )
    assert result.converged
    assert result.attempted_gate_counts == (3,)
    assert abs(result.sequence.total_angle() - (2 * pi + TH)) < 1e-12
