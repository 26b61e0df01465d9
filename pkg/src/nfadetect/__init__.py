"""A-contrario small-target detection on score maps.

Scores become a discrete 3D point cloud (pixel coordinates x transformed
score level); every box with a bounded footprint is tested for point
over-density against an i.i.d. Bernoulli background, scored by a
Hoeffding-approximated significance, and the significant boxes are the
detections.  Fixed-threshold baselines, object-level metrics and a synthetic
corpus generator round out the toolkit.
"""

from .baselines import (
    Region,
    connected_components,
    morphological_open,
    threshold_binarize,
)
from .detector import (
    Box3D,
    Detection,
    DetectorParams,
    KappaTable,
    SaturationWarning,
    detect,
    merge_overlapping,
    min_volume_table,
    select_detections,
)
from .evaluation import (
    EvalReport,
    compute_prf,
    evaluate_dataset,
    match_objects,
    region_from_detection,
)
from .integral import IntegralVolume, build_integral, count_in_box
from .io import (
    BinaryMask,
    FormatError,
    RangeError,
    ScoreMap,
    load_detections,
    load_mask,
    load_scoremap,
    save_detections,
    save_mask,
    save_scoremap,
)
from .nfa import (
    NfaContext,
    Significance,
    eta_for_box,
    exact_nfa,
    log_binomial_tail,
    significance_exact,
    significance_hoeffding,
)
from .synth import (
    NoiseLaw,
    SynthSpec,
    TargetSpec,
    generate_corpus,
    generate_noise_map,
    plant_targets,
)
from .transform import (
    PointCloud3D,
    TransformParams,
    build_point_cloud,
    transform_score,
)

__version__ = "0.1.0"
