"""Real-time video analytics for concrete pour monitoring.

The library detects ready-mix truck chutes as rotated boxes, locks each
side's region of interest after a stable detection run, tracks the chute
center with sparse Lucas-Kanade optical flow until it crosses the chute's
bottom edge (the pour start), classifies slump-range clips by majority vote
and flags deliveries outside the ordered range.  A deterministic scene
simulator provides exact ground truth for end-to-end verification.
"""

from .detect import (
    Detection,
    DetectionClass,
    FileDetector,
    OracleDetector,
    RoiLock,
    RoiStabilizer,
    Side,
    assign_sides,
    crop_chute,
)
from .geometry import (
    EdgeLine,
    Point2,
    RotatedBox,
    UprightRect,
    bottom_edge,
    corners,
    crossed,
    deg_to_rad,
    enclosing_upright,
    rotated_iou,
    signed_distance,
)
from .metrics import (
    EvalReport,
    SceneOutcome,
    ScoredDetection,
    accuracy_f1,
    average_precision,
    location_grid,
    map_50_95,
    precision,
)
from .optflow import (
    FlowConfig,
    FlowResult,
    FlowStatus,
    FlowVector,
    Frame,
    lk_flow_at,
    spatial_gradients,
    temporal_gradient,
    track,
)
from .pipeline import PipelineConfig, RunResult, config_from_dict, load_config, run_pipeline
from .placement import DropEvent, Phase, PlacementConfig, SideTracker, advance, run_placement, seed
from .sim import (
    GridConfig,
    PourSpec,
    SceneSpec,
    SceneTruth,
    ShadowSpec,
    TextureSpec,
    flow_speed_for_bin,
    render,
    render_stereo,
    scenario_grid,
    truth,
)
from .slump import (
    ClassDistribution,
    ClipWindow,
    SlumpBin,
    SlumpConfig,
    SlumpOrder,
    SoftLabel,
    StubClassifier,
    Verdict,
    bin_of,
    classify,
    classify_at_drop,
    extract_clip,
    majority_vote,
    mix_labels,
    smooth_label,
    soft_cross_entropy,
    verdict,
)

__version__ = "0.1.0"
