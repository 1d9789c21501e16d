"""Subsequence time-series clustering with max-pooled correlation matrices.

The package clusters every index of a single long time series into behaviour
classes, attaches a per-index confidence score, and estimates the natural
window size of a series from its moving-average residuals.
"""

from .core import (
    FLAT_EPSILON,
    InvalidArgumentError,
    InvalidWindowError,
    NoPeriodicityError,
    ResourceError,
    ConvergenceError,
    SubsequenceSpec,
    TimeSeries,
    extract_subsequences,
    make_rng,
    child_seed,
    znorm,
)
from .profile import (
    CorrelationMatrix,
    DistanceProfile,
    corr_to_dist,
    correlation_matrix,
    dist_to_corr,
    distance_profile,
)
from .augment import AugmentedCorrelationMatrix, BagSpec, augment_matrix, bag_correlation
from .cluster import (
    ClusterResult,
    ElbowCurve,
    KMeansConfig,
    confidence_score,
    elbow_sweep,
    expand_labels,
    kmeans_pp,
    time2cluster,
)
from .window import (
    MovingDistCurve,
    WindowEstimate,
    WindowMetaSeries,
    moving_average,
    moving_dist,
    multi_window_finder,
    variable_window,
    window_success_rate,
)
from .evaluation import (
    LabelVector,
    MetricsReport,
    adjusted_rand_index,
    baseline_euclidean_kmeans,
    evaluate,
    inject_spikes,
    macro_f1,
    purity,
    robustness_sweep,
    sensitivity_sweep,
)
from .synthgen import SegmentSpec, Scenario, generate, scenario
from .projection import project_2d

__version__ = "0.1.0"
