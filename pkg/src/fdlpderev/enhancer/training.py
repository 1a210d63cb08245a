"""Epoch loop: whole 2 s segments, seeded shuffling, Adam, best-validation
parameter selection."""
import logging
from dataclasses import dataclass

import numpy as np

from ..fdlp import FdlpConfig, fdlp_envelopes, segment
from . import network
from .loss import loss
from .optim import AdamHyper, AdamState, adam_step

log = logging.getLogger(__name__)


@dataclass
class Example:
    reverb: np.ndarray
    clean: np.ndarray
    valid_length: int


@dataclass(frozen=True)
class TrainRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainResult:
    params: dict  # best validation parameters
    records: list
    best_epoch: int
    last_params: dict


class TrainingAborted(ArithmeticError):
    def __init__(self, message, epoch, last_good):
        super().__init__(message)
        self.epoch = epoch
        self.last_good = last_good


def examples_from_signals(clean, reverberant, fdlp_config=FdlpConfig()):
    """Aligned (reverberant, clean) envelope pairs, one per segment."""
    out = []
    for cs, rs in zip(segment(clean, fdlp_config), segment(reverberant, fdlp_config)):
        ce = fdlp_envelopes(cs, fdlp_config)
        re = fdlp_envelopes(rs, fdlp_config)
        out.append(Example(re.values, ce.values, re.valid_length))
    return out


def examples_from_pairs(pairs, fdlp_config=FdlpConfig()):
    out = []
    for pair in pairs:
        out.extend(examples_from_signals(pair.clean, pair.reverberant, fdlp_config))
    return out


def example_loss(params, example, config, fdlp_config=FdlpConfig(), tape=None):
    z = network.forward_log_gain(example.reverb, params, config, tape)
    return loss(z, example.reverb, example.clean, config.reg_weight, fdlp_config,
                valid_length=example.valid_length)


def evaluate(params, examples, config, fdlp_config=FdlpConfig()):
    if not examples:
        return float("nan")
    return float(np.mean([example_loss(params, ex, config, fdlp_config).value
                          for ex in examples]))


def batch_gradient(params, batch, config, fdlp_config=FdlpConfig()):
    total = {k: np.zeros_like(v) for k, v in params.items()}
    values = []
    for ex in batch:
        tape = network.Tape()
        res = example_loss(params, ex, config, fdlp_config, tape)
        grads = network.backward(tape, params, config, res.grad)
        for k in total:
            total[k] += grads[k]
        values.append(res.value)
    n = len(batch)
    return {k: g / n for k, g in total.items()}, values


def train(train_examples, val_examples, config, fdlp_config=FdlpConfig(), params=None,
          on_epoch=None, on_improve=None):
    """Train for ``config.epochs`` epochs.

    ``on_epoch(record)`` runs after each epoch; ``on_improve(params, record)``
    whenever validation loss reaches a new best (use it to persist a
    checkpoint). On a numeric failure ``TrainingAborted`` carries the last
    good parameters.
    """
    if not train_examples:
        raise ValueError("no training examples")
    if params is None:
        params = network.init_params(config)
    network.check_params(params, config)
    hyper = AdamHyper.from_config(config)
    state = AdamState.zeros(params)
    rng = np.random.default_rng(config.seed)
    records = []
    best = (np.inf, params, 0)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_examples))
        epoch_losses = []
        try:
            for start in range(0, len(order), config.batch_size):
                batch = [train_examples[i] for i in order[start:start + config.batch_size]]
                grads, values = batch_gradient(params, batch, config, fdlp_config)
                params, state = adam_step(params, grads, state, hyper)
                epoch_losses.extend(values)
            val = evaluate(params, val_examples, config, fdlp_config)
        except ArithmeticError as exc:
            raise TrainingAborted(f"epoch {epoch}: {exc}", epoch, best[1]) from exc
        record = TrainRecord(epoch, float(np.mean(epoch_losses)), val)
        records.append(record)
        log.info("epoch %d train %.6f val %.6f", epoch, record.train_loss, record.val_loss)
        score = val if val_examples else record.train_loss
        if score < best[0]:
            best = (score, params, epoch)
            if on_improve is not None:
                on_improve(params, record)
        if on_epoch is not None:
            on_epoch(record)
    if config.epochs == 0:
        return TrainResult(params, records, 0, params)
    return TrainResult(best[1], records, best[2], params)
