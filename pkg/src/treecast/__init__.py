"""Broadcasting on d-ary trees: reconstruction schemes, BP, and phase scans."""

from .bp import (
    BruteForceResult,
    DensityEvolutionReport,
    ScorePool,
    bp_combine,
    brute_force_tree,
    build_hat_bar,
    density_evolution,
    mgf_curve,
)
from .dynamics import (
    BooleanClass,
    LevelRecord,
    PairTrajectory,
    SdpiScanResult,
    calibrate_barrier,
    classify_boolean,
    cycling_demo,
    cycling_table,
    evolve_pair,
    lyapunov_phi,
    majority_scheme,
    random_scheme,
    restricted_sdpi_scan,
    skl_contraction_ratio,
    tribes_scheme,
)
from .errors import DomainError, ResourceBudgetError, TreecastError
from .metrics import (
    DivergenceKind,
    alpha_bound,
    chi2_information,
    divergence,
    entropy,
    eps_critical,
    gaussian_threshold_sdpi,
    hellinger2,
    kl,
    nongaussianness,
    omega_bound,
    skl,
    tv,
    wasserstein,
)
from .model import (
    CondPair,
    FiniteDist,
    LevelRule,
    ModelParams,
    NoiseChannel,
    ReconstructionScheme,
    ScoreDist,
    make_params,
    mixture,
    posterior_scores,
    scheme_from_json,
    scheme_to_json,
)
from .qbp import (
    PowerlawFit,
    QbpConfig,
    QbpTrajectory,
    ThresholdRow,
    ThresholdTable,
    powerlaw_fit,
    qbp_evolve,
    quantize_symmetric,
    threshold_scan,
)

__version__ = "0.1.0"
