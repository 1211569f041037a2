"""Composite two-qubit controlled-phase gates robust to rotation-angle
errors: sequence catalog, residual conditions, phase solver, fidelity
analysis, absolute-error composites and a trapped-ion physical model."""

from .errors import TruncationError, ValidationError
from .gates import (
    CompositeSequence,
    PhasedGate,
    convert_phase_conventions,
    ideal_cphase,
    interleaved_from_phases,
    merge_adjacent,
    phase_gate,
    phased_cphase,
    sequence_propagator,
)
from .catalog import broadband, passband, single
from .derivatives import (
    ErrorModel,
    ResidualVector,
    broadband_residuals,
    derivative_sequence,
    derivative_single_gate,
    narrowband_residuals,
    passband_residuals,
)
from .solver import (
    SolverConfig,
    SolverProblem,
    SolverResult,
    objective_D,
    polish,
    solve,
    solve_with_escalation,
)
from .analysis import (
    ScanResult,
    ToleranceBand,
    fidelity,
    infidelity_order,
    scan,
    sequence_fidelity,
    tolerance_band,
)
from .abserr import AbsoluteComposite, absolute_composite_propagator, wrap_sequence_absolute
from .iontrap import TrapConfig, analytic_propagator, composite_physical_gate, evolve_numerical, rotation_angle, two_pulse_gate
from .seqio import read_sequence, sequence_from_csv, sequence_to_csv, write_sequence

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
