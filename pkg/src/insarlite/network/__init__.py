from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, grad_check
from .model import (
    HEADS,
    ModelSpec,
    StaleCacheError,
    apply_running_stats,
    backward,
    forward,
    init_params,
    loss_and_grad,
    param_shapes,
    trainable_names,
    zero_params,
)
from .optim import AdamState, adam_step
from .infer import compose_outputs, infer, predict_raw, tile_starts
from .train import TrainConfig, load_training_set, train, training_pair
