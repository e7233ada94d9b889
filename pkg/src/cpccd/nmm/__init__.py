"""Numerical noise management module: dual-path features and contrastive losses."""
from cpccd.nmm.layers import (
    attention_weights,
    conv1d_forward,
    ffn_forward,
    l2_normalize,
    layer_norm,
    mhsa_forward,
    softmax,
)
from cpccd.nmm.losses import (
    LossBreakdown,
    chamfer_l1_batch,
    negative_loss,
    nmm_loss,
    positive_loss,
    total_loss,
)
from cpccd.nmm.model import (
    NmmConfig,
    NmmOutput,
    clean_path,
    decode,
    forward,
    init_params,
    noisy_path,
    objective,
)
from cpccd.nmm.train import (
    HISTORY_FIELDS,
    GradCheckReport,
    StepRecord,
    ToyData,
    TrainHistory,
    grad_check,
    make_toy_data,
    mean_cosine,
    train_toy,
    window_increase_ok,
)

__all__ = [
    "HISTORY_FIELDS", "GradCheckReport", "LossBreakdown", "NmmConfig", "NmmOutput",
    "StepRecord", "ToyData", "TrainHistory", "attention_weights", "chamfer_l1_batch",
    "clean_path", "conv1d_forward", "decode", "ffn_forward", "forward", "grad_check",
    "init_params", "l2_normalize", "layer_norm", "make_toy_data", "mean_cosine",
    "mhsa_forward", "negative_loss", "nmm_loss", "noisy_path", "objective",
    "positive_loss", "softmax", "total_loss", "train_toy", "window_increase_ok",
]
