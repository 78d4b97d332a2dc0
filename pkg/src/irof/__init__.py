"""Faithfulness scoring of attribution heatmaps by iterative feature removal.

An image is partitioned into superpixels, segments are ranked by mean
relevance, and the classifier's confidence is tracked while top segments
are removed one by one. The area over the normalized degradation curve,
averaged over a dataset (and scaled by 100), is the method's score; paired
t-tests against seeded random orderings say whether a method beats chance.
"""

from .backend import (
    Backend,
    BackendConfig,
    CallableBackend,
    ClassScores,
    HttpBackend,
    OnnxBackend,
    ProcessBackend,
    backend_from_spec,
    class_score,
    open_backend,
    predict_batch,
)
from .baselines import random_ranking, sobel_relevance
from .dataset import discover_images, load_dataset
from .degradation import (
    DegradedSequence,
    RemovalSchedule,
    build_irof_schedule,
    build_pixel_schedule,
    build_samek_schedule,
    degrade,
)
from .engine import (
    EVALUATORS,
    DatasetItem,
    DegradationCurve,
    IROFResult,
    aoc,
    aoc_values,
    degradation_at_fraction,
    degradation_curve,
    fraction_statistic,
    irof,
    write_curves_csv,
)
from .errors import (
    BackendError,
    ConfigError,
    CurveError,
    DataError,
    IrofError,
)
from .imagery import (
    DatasetMean,
    Image,
    RelevanceMap,
    compute_dataset_mean,
    load_image,
    load_relevance,
    save_f32,
    save_png,
)
from .ranking import (
    EVIDENCE_MODES,
    SegmentRanking,
    preprocess_relevance,
    rank_segments,
)
from .rng import Xoshiro256StarStar, derive_seed
from .segmentation import (
    SegmentMap,
    SlicParams,
    export_segment_map,
    segment_pixel_lists,
    slic_segment,
)
from .stats import (
    PairedTTestResult,
    SensitivityCell,
    SensitivityReport,
    paired_t_test,
    regularized_incomplete_beta,
    sensitivity_report,
    student_t_two_sided_p,
)

__version__ = "0.1.0"
