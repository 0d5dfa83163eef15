"""Random symmetric +-1 matrix ensembles with dependent entries.

Simulation and verification toolkit: semicircle-law experiments for
Curie-Weiss-type ensembles, exact trace-moment combinatorics via Eulerian
circuit classes, mixing-measure quadrature with Laplace asymptotics, and the
largest-eigenvalue transition at the critical coupling.
"""

from .circuits import (
    CircuitClass,
    CircuitStats,
    circuit_stats,
    doubled_tree_count,
    enumerate_classes,
    exact_trace_moment,
    verify_simple_edge_bound,
)
from .correlations import (
    CorrelationReport,
    UncorrelatedFit,
    check_approx_uncorrelated,
    exact_correlation,
    mc_correlation,
    mc_trace_moment,
)
from .definetti import (
    DeFinettiMeasure,
    LaplaceExpansion,
    PointMass,
    Potential,
    curie_weiss_potential,
    find_minimum,
    laplace_moment_asymptotic,
    log_density_unnormalized,
    magnetization,
)
from .ensembles import (
    EnsembleConfig,
    ScaledMatrix,
    SpinMatrix,
    dump_matrix,
    mixing_measure,
    sample_diagonal_cw,
    sample_full_cw,
    sample_generalized,
    sample_iid,
    sample_matrix,
    scale,
    seed_stream,
)
from .spectral import (
    SpectralSummary,
    catalan,
    eigenvalues,
    esd_moment,
    ks_distance,
    semicircle_cdf,
    semicircle_moment,
    semicircle_pdf,
    summarize,
)

__version__ = "0.1.0"
