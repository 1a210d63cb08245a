from .checkpoint import load_checkpoint, save_checkpoint
from .config import EnhancerConfig
from .loss import LossResult, decorrelation_penalty, log_mse, loss
from .network import Tape, backward, enhance, forward, forward_log_gain, init_params, zero_final_layer
from .optim import AdamHyper, AdamState, adam_step
from .training import TrainRecord, TrainResult, train
