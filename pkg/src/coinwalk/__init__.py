"""Position-dependent coined quantum walks on the integer lattice.

Exact finite-window evolution, free-walk band structure and velocity laws,
finite-time wave operators, bound states by truncated diagonalization, and
an experiment harness comparing the law of ``X_t / t`` with its limit.
"""

from .coins import (
    CoinField,
    as_coin,
    coin_blocks,
    hadamard_coin,
    make_coin_field,
    random_coin,
    rotation,
    sigma_x_coin,
    sigma_z_coin,
)
from .errors import ConfigError, DegenerateBandsError, FieldMismatchError, NumericalFilterError
from .measures import VelocityMeasure, empirical_velocity_law, ks_distance, measure_cdf
from .momentum import (
    BandDecomposition,
    SymbolSample,
    decompose_bands,
    eigendecompose_symbol,
    group_velocity,
    hadamard_limit_cdf,
    hadamard_limit_density,
    konno_density,
    symbol,
    velocity_pushforward,
)
from .scattering import (
    TraceNormDiagnostic,
    WaveProbe,
    perturbed_velocity_measure,
    probe_wave,
    trace_norm_partial,
    wave_backward,
    wave_forward,
)
from .spectral import (
    BoundStateSet,
    TruncatedEvolution,
    build_truncated,
    find_bound_states,
    point_mass_weight,
    point_spectrum,
)
from .walk import (
    PositionDistribution,
    WalkState,
    delta_state,
    evolve,
    gaussian_packet,
    position_distribution,
    step_backward,
    step_forward,
)

__version__ = "0.1.0"
