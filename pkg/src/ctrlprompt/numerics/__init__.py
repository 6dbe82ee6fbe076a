from .adafactor import AdafactorConfig, AdafactorState, adafactor_step, sgd_momentum_step
from .rng import DEFAULT_SEED, make_rng
from .tensor import (
    Tensor,
    add,
    backward,
    concat,
    cross_entropy,
    embedding,
    exp,
    gelu,
    log,
    log_softmax,
    matmul,
    mean,
    mul,
    no_grad,
    reshape,
    rms_norm,
    softmax,
    sub,
    take,
    tanh,
    transpose,
    tsum,
)

__all__ = [
    "AdafactorConfig",
    "AdafactorState",
    "DEFAULT_SEED",
    "Tensor",
    "adafactor_step",
    "add",
    "backward",
    "concat",
    "cross_entropy",
    "embedding",
    "exp",
    "gelu",
    "log",
    "log_softmax",
    "make_rng",
    "matmul",
    "mean",
    "mul",
    "no_grad",
    "reshape",
    "rms_norm",
    "sgd_momentum_step",
    "softmax",
    "sub",
    "take",
    "tanh",
    "transpose",
    "tsum",
]
