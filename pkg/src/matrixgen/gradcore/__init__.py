"""Minimal reverse-mode differentiation on dense 2-D float arrays."""

from .checkpoint import FORMAT_VERSION, Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import NonDeterministicError, finite_difference_check
from .nn import GRUCell, Linear, LSTMCell, Module, gru_cell_step, lstm_cell_step
from .optim import AdamState, adam_step, clip_grad_norm, exponential_lr, global_norm
from .rng import GENERATOR_NAME, make_rng
from .tensor import (
    BACKWARD_RULES,
    NonFiniteError,
    ShapeError,
    Tape,
    Tensor,
    backward,
    concat,
    exp,
    get_default_dtype,
    huber,
    log,
    logsumexp,
    matmul,
    mean,
    no_grad,
    precision,
    relu,
    sigmoid,
    slice_,
    softmax,
    sqrt,
    square,
    sum_,
    take_cols,
    tanh,
)
