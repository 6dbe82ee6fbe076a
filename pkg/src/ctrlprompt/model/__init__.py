from .prompting import (
    PretrainOptions,
    TrainOptions,
    add_prompts,
    forward_loss_enc_dec_prompt,
    forward_loss_single_prompt,
    init_soft_prompt,
    lm_loss,
    mean_loss,
    pretrain_backbone,
    sequences,
    train_prompts,
    trainable_params,
)
from .transformer import (
    DECODER_ONLY,
    ENCODER_DECODER,
    SITES,
    LmModel,
    ModelConfig,
    SoftPrompt,
    pad_batch,
    token_nll,
)

__all__ = [
    "DECODER_ONLY",
    "ENCODER_DECODER",
    "SITES",
    "LmModel",
    "ModelConfig",
    "PretrainOptions",
    "SoftPrompt",
    "TrainOptions",
    "add_prompts",
    "forward_loss_enc_dec_prompt",
    "forward_loss_single_prompt",
    "init_soft_prompt",
    "lm_loss",
    "mean_loss",
    "pad_batch",
    "pretrain_backbone",
    "sequences",
    "token_nll",
    "train_prompts",
    "trainable_params",
]
