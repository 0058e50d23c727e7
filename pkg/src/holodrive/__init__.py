"""Holonomic gates driven transitionlessly through degenerate subspaces.

Layers, bottom up:

- ``core``       complex linear algebra, unitary stepping, fidelities
- ``transport``  spectral frames, connections, counterdiabatic terms, holonomies
- ``paths``      smoothed control-parameter schedules on the (theta, phi) sphere
- ``gates``      the Lambda/tripod/two-qubit families and the concrete gates
- ``device``     charge-basis model of the two-island tunable-coupling transmon
- ``runner``     experiment execution behind the ``holodrive`` command line
"""

import os as _os
import sys as _sys

# Results must be byte-identical across repeat runs and thread counts; pin the
# BLAS pool before numpy first loads so concurrent sweep rows cannot change the
# reduction order inside a diagonalization.  A host application that imported
# numpy already keeps whatever configuration it chose.
if "numpy" not in _sys.modules:
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, "1")

__version__ = "0.1.0"

from .core import (
    DimensionError,
    HermiticityError,
    TimeDependentGenerator,
    check_hermitian,
    constant_generator,
    converged_propagator,
    eig_hermitian,
    evolve,
    frobenius,
    gate_fidelity,
    normalized_state,
    propagator,
    step_propagator,
    subspace_projector,
)
from .transport import (
    ConnectionBlock,
    DegeneracyError,
    HamiltonianFamily,
    HolonomyBlock,
    LoopError,
    ParameterSchedule,
    SpectralFrame,
    adiabatic_reference,
    check_schedule,
    connection,
    counterdiabatic,
    counterdiabatic_samples,
    degenerate_blocks,
    holonomy,
    polar_unitary,
    spectral_path,
    transitionless_generator,
)
from .paths import (
    LoopSchedule,
    PathSegment,
    geodesic_triangle_schedule,
    orange_slice_schedule,
    solid_angle,
    sweep_schedule,
)
from .gates import (
    GateReport,
    StructureReport,
    TripodParams,
    dark_frame,
    gate_u2,
    gate_ub,
    gate_up,
    lambda_dark_state,
    lambda_family,
    lambda_hamiltonian,
    run_loop,
    structure_check,
    tripod_family,
    tripod_hamiltonian,
    two_qubit_family,
)
from .device import (
    ChargeBasisConfig,
    DeviceParams,
    ForbiddenTransitionError,
    LevelTrackingError,
    SpectrumTable,
    TransitionTable,
    amplitude_for_coupling,
    charge_ops,
    converged_cutoff,
    derived_capacitances,
    drive_operator,
    effective_rabi,
    eigensystem,
    identify_levels,
    island_hamiltonian,
    spectrum_sweep,
    tct_hamiltonian,
    track_levels,
    transition_elements,
    transition_sweep,
    truncation_gap,
)
