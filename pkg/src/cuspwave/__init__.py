"""Nearcritical steady water waves with vorticity.

Streams and their critical data, the linear eigenvalue problem about a
stream, a hodograph finite-difference solver for Stokes and long (solitary)
waves, and the flow-force region in the (r, s) plane.
"""

from .errors import (
    BeyondR0Error,
    ConvergenceError,
    CuspwaveError,
    DomainError,
    NumericalError,
    SubcriticalParameterError,
    TurningPointError,
    ValidationError,
)
from .region import (
    CuspRegion,
    RegionPoint,
    branch_flow_force,
    build_region,
    contains,
    flow_force_stream,
    flow_force_variation,
    flow_force_wave,
)
from .spectral import SpectralPoint, bifurcation_wavenumber, mu0, mu1, sigma, spectral_point
from .streams import (
    CriticalData,
    ConjugatePair,
    bernoulli_of_lambda,
    conjugate_streams,
    critical_data,
    depth,
    stream_profile,
)
from .vorticity import OmegaClass, VorticityFn, VorticitySpec, capital_omega, classify, make_vorticity
from .waves import (
    PhysicalWave,
    SplitDiagnostics,
    HodographProblem,
    WaveGrid,
    assemble_residual,
    check_invariants,
    continue_branch,
    full_period_check,
    newton_solve,
    reconstruct_physical,
    seed_stokes,
    solitary_approx,
    spectral_split,
)

__version__ = "0.1.0"
