"""Response-kernel perturbation toolkit for spin-1/2 dynamics.

Builds the three reference models, estimates dynamics with exact
diagonalization or Krylov/typicality methods, checks the random-matrix
conditions (DOS/LDOS, sign randomization, perturbation profile) and
quantifies prediction accuracy with deviation metrics.
"""

__version__ = "0.1.0"

from .basis import SectorBasis
from .conditions import (
    ProfileEstimate,
    fit_profile,
    ks_statistic,
    perturbation_profile,
    sign_randomize,
    spectral_compare,
    wigner_semicircle,
    windowed_traceless,
)
from .dynamics import ExperimentPlan, run_dynamics
from .errors import TyppertError
from .kernels import (
    KernelKind,
    ResponseParams,
    bessel_j1,
    g1,
    g2,
    g3,
    g_adhoc,
    lambda_c,
    lorentz_profile,
    predict,
)
from .linalg import (
    Spectrum,
    chebyshev_gaussian_filter,
    exact_diag,
    krylov_propagate,
    mean_level_spacing,
    window_projector,
)
from .metrics import (
    FitResult,
    deviation,
    fit_kernel,
    mesoscopic_estimate,
    relaxation_time,
)
from .models import (
    Model,
    ModelSpec,
    StateSpec,
    build_chain_ladder,
    build_cross_ladder,
    build_lattice,
    build_model,
    initial_state_spec,
)
from .series import TimeSeries, normalize_series
from .sparse import OperatorBuilder, SparseHermitian
from .typicality import (
    Histogram,
    StatePrep,
    dos_histogram,
    estimate_expectation,
    ldos_histogram,
    random_state,
    realize_state_prep,
)
