import numpy as np
import pytest
from math import pi

from cpgates import catalog
from cpgates.analysis import sequence_fidelity
from cpgates.errors import ValidationError
from cpgates.gates import sequence_propagator
from cpgates.seqio import sequence_from_csv, sequence_to_csv


@pytest.mark.parametrize("n", catalog.BROADBAND_ORDERS)
def test_broadband_zero_error_fidelity(n):
    seq = catalog.broadband(n, pi / 4)
    fid = sequence_fidelity(seq)
    threshold = 1e-12 if catalog.has_analytic_phases(seq) else 1e-4
    assert fid >= 1 - threshold


@pytest.mark.parametrize("orders", catalog.PASSBAND_ORDERS)
def test_passband_zero_error_fidelity(orders):
    seq = catalog.passband(*orders, pi / 4)
    fid = sequence_fidelity(seq)
    threshold = 1e-12 if catalog.has_analytic_phases(seq) else 1e-4
    assert fid >= 1 - threshold


@pytest.mark.parametrize("theta", [pi / 8, pi / 4, pi / 2])
@pytest.mark.parametrize("n", [1, 2])
def test_parametric_broadband_any_theta(n, theta):
    assert sequence_fidelity(catalog.broadband(n, theta)) >= 1 - 1e-12


@pytest.mark.parametrize("orders", [(1, 1), (2, 2), (2, 1), (1, 2)])
@pytest.mark.parametrize("theta", [pi / 8, pi / 4, pi / 2])
def test_parametric_passband_any_theta(orders, theta):
    assert sequence_fidelity(catalog.passband(*orders, theta)) >= 1 - 1e-12


@pytest.mark.parametrize("n", catalog.BROADBAND_ORDERS)
def test_broadband_total_angles_exact(n):
    seq = catalog.broadband(n, pi / 4)
    assert abs(seq.total_angle() - catalog.BROADBAND_TOTAL_ANGLES[n] * pi) < 1e-12


def test_fixed_point_entries_require_quarter_pi():
    with pytest.raises(ValidationError):
        catalog.broadband(3, pi / 2)
    with pytest.raises(ValidationError):
        catalog.passband(3, 3, pi / 8)


def test_unknown_orders_rejected():
    with pytest.raises(ValidationError):
        catalog.broadband(7)
    with pytest.raises(ValidationError):
        catalog.passband(4, 4)


def test_passband_totals():
    # pi-chain entries: theta + N*pi; half-pi entries: theta + N*pi/2
    theta = pi / 4
    assert abs(catalog.passband(1, 1, theta).total_angle() - (2 * pi + theta)) < 1e-12
    assert abs(catalog.passband(2, 2, theta).total_angle() - (4 * pi + theta)) < 1e-12
    assert abs(catalog.passband(2, 1, theta).total_angle() - (3 * pi + theta)) < 1e-12
    assert abs(catalog.passband(1, 2, theta).total_angle() - (3 * pi + theta)) < 1e-12
    assert abs(catalog.passband(1, 3, theta).total_angle() - 4.25 * pi) < 1e-12
    assert abs(catalog.passband(3, 3, theta).total_angle() - 5.75 * pi) < 1e-12


@pytest.mark.parametrize("n", catalog.BROADBAND_ORDERS)
def test_csv_round_trip_broadband(n):
    seq = catalog.broadband(n, pi / 4)
    back = sequence_from_csv(sequence_to_csv(seq))
    assert len(back.gates) == len(seq.gates)
    assert np.allclose([g.theta for g in back.gates], [g.theta for g in seq.gates])
    assert np.allclose([g.phi for g in back.gates], [g.phi for g in seq.gates])
    assert abs(back.terminal_phase - seq.terminal_phase) < 1e-15
    assert abs(back.target_theta - seq.target_theta) < 1e-15
    assert back.family == seq.family
    assert np.linalg.norm(sequence_propagator(back, 0.17) - sequence_propagator(seq, 0.17)) < 1e-12


def test_csv_rejects_bad_header_and_labels():
    with pytest.raises(ValidationError):
        sequence_from_csv("a,b,c\n0,0.25,0\n")
    good = sequence_to_csv(catalog.single())
    with pytest.raises(ValidationError):
        sequence_from_csv(good + "mystery,1,2\n")
