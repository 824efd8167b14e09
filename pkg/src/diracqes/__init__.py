"""Radial Dirac operators with polynomial-preserving gauge transforms.

Public API re-exports; see the individual modules for details:

- ``model``: problem parametrization, presets, JSON round-trip.
- ``polyalg``: polynomials, 2x2 matrix differential operators, gauge
  transforms, finite matrix representations, nullspaces.
- ``odeoracle``: independent shooting-method eigenvalue oracle.
- ``exact``: closed-form spectra via polynomial-preserving transforms.
- ``qes``: quasi-exactly-solvable constraint systems and scans.
- ``cli``: command-line interface.
"""

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DiracQesError,
    DomainError,
    NoAlgebraicSolutionError,
    NoBoundStateError,
    NoRootInBracketError,
    NotQuantizedError,
    PoleError,
    SingularConfigurationError,
    StructureError,
    SupercriticalCouplingError,
    ValidationError,
)
from .model import (
    Geometry,
    PhysicalParams,
    PotentialSpec,
    Preset,
    ProblemInstance,
    dumps_instance,
    load_instance,
    loads_instance,
    preset,
    save_instance,
)
from .polyalg import (
    GaugeTransform,
    Poly,
    PolySpinor,
    Premultiply,
    RadialOperator,
    ScalarDiffOp,
    VarChange,
    conjugate,
    gauge_equivalence_residual,
    matrix_rep,
    matrix_rep_with_shape,
    nullspace,
    operator_residual,
    overflow_rows,
    radial_operator,
    sigma_min,
)
from .odeoracle import (
    ShootingConfig,
    ShootingResult,
    auto_r_max,
    find_eigenvalue,
    indicial_exponent,
    integrate,
)
from .exact import (
    ExactSpectrumResult,
    coulomb_eta,
    coulomb_spectrum,
    extended_oscillator_spectrum,
    oscillator_spectrum,
)
from .qes import (
    ExtendedQesCoefficients,
    ExtendedQesSolution,
    ExtendedQesSystem,
    PlanarSolution,
    PlanarSystem,
    extended_build,
    extended_physical_solution,
    extended_solve,
    extended_to_instance,
    planar_build,
    planar_n0_closed_form,
    planar_physical_solution,
    planar_solve,
    planar_t_parameters,
    planar_to_instance,
    realize_generator_poly,
    sl2_generators,
    t_action_matrix,
    t_corrected,
    t_display,
    t_qes_parts,
    t_roundtrip_residual,
)

__version__ = "0.1.0"
