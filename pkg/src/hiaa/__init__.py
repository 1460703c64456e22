"""Hierarchical multi-head aesthetic scoring for human images, desk scale.

The package covers the full loop: raw annotation records in, normalized
scored samples and rating-level QA pairs out; a small trainable encoder
with three scoring heads (rating-word classifier, scalar regression,
hierarchical expert network) trained jointly with a loss switch; a
batch-normalized fusion stage over the three head scores; and a
nine-metric evaluation suite reported overall and per dimension.
"""

from .taxonomy import (
    CANONICAL_ORDER,
    Dimension,
    LEAF_ORDER,
    RatingLevel,
    children,
    parent_of,
    rating_from_score,
    score_from_rating,
)
from .datapipe import (
    AnnotationRecord,
    QAPair,
    ScoredSample,
    aggregate_mos,
    build_samples,
    make_qa,
    make_scored_sample,
    minmax_normalize,
    parse_answer,
    split_dataset,
)
from .backbone import (
    BackboneParams,
    HiddenStates,
    PromptKind,
    SampleFeatures,
    derive_features,
    encode,
    init_backbone,
)
from .heads import (
    ExpertHeadParams,
    LMHeadParams,
    RegHeadParams,
    expert_scores,
    lm_logits,
    lm_score,
    normalize_lm_score,
    reg_score,
)
from .model import HeadScores, ModelParams, ModelSizes, init_model, score_sample, score_samples
from .trainer import (
    Checkpoint,
    Stage1Config,
    cross_entropy_loss,
    load_checkpoint,
    mse_loss,
    save_checkpoint,
    stage1_loss,
    train_stage1,
)
from .metavoter import (
    MetaVoterConfig,
    MetaVoterParams,
    mae_loss,
    metavoter_forward,
    train_metavoter,
)
from .metrics import (
    MetricsReport,
    classification_metrics,
    correlation_metrics,
    evaluate,
    regression_metrics,
)
from .synth import generate_records, generate_samples

__version__ = "0.1.0"
