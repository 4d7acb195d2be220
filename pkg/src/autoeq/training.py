"""Two-stage training: parameter-loss regression on synthetic pairs, then
spectral+penalty fine-tuning where the difference curve is its own target
and gradients flow through the differentiable EQ response.

All shuffling comes from the config seed, so a (seed, dataset, config)
triple pins the entire loss trajectory and the final weights.
"""

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor
from .diffeq import diff_cascade_response, response_from_normalized
from .losses import finetune_loss, parameter_loss
from .nn import Adam


@dataclass(frozen=True)
class TrainingConfig:
    lr: float = 1e-4
    batch_size: int = 128
    epochs: int = 3
    lr_decay_per_epoch: float = 0.1
    lam: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if min(self.lr, self.batch_size, self.epochs, self.lr_decay_per_epoch) <= 0:
            raise ValueError("lr, batch_size, epochs and lr decay must be positive")
        if self.lam < 0:
            raise ValueError("penalty weight must be >= 0")


@dataclass
class TrainHistory:
    stage: str
    epoch_losses: list[float] = field(default_factory=list)
    epoch_lrs: list[float] = field(default_factory=list)

    def summary(self) -> str:
        lines = [f"stage={self.stage}"]
        for i, (loss, lr) in enumerate(zip(self.epoch_losses, self.epoch_lrs), start=1):
            lines.append(f"  epoch {i}: mean loss {loss:.6f} (lr {lr:g})")
        return "\n".join(lines)


def _check_dataset(curves: np.ndarray, params: np.ndarray | None) -> None:
    if curves.ndim != 2 or curves.shape[0] == 0:
        raise ValueError("empty training dataset")
    if params is not None and params.shape[0] != curves.shape[0]:
        raise ValueError("curves and parameter targets disagree in length")


def _run_epochs(model, curves, step_fn, cfg: TrainingConfig, stage: str) -> TrainHistory:
    opt = Adam(model.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory(stage)
    n = curves.shape[0]
    for epoch in range(cfg.epochs):
        opt.lr = cfg.lr * cfg.lr_decay_per_epoch**epoch
        order = rng.permutation(n)
        total = 0.0
        batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            opt.zero_grad()
            loss = step_fn(idx)
            loss.backward()
            opt.step()
            total += float(loss.values)
            batches += 1
        history.epoch_losses.append(total / batches)
        history.epoch_lrs.append(opt.lr)
    return history


def train_base(model, curves: np.ndarray, params: np.ndarray, cfg: TrainingConfig) -> TrainHistory:
    """Stage 1: regress normalized parameters with the l1 parameter loss."""
    _check_dataset(curves, params)

    def step(idx):
        out = model.forward(Tensor(curves[idx]))
        return parameter_loss(params[idx], out)

    return _run_epochs(model, curves, step, cfg, stage="base")


def finetune(model, curves: np.ndarray, cfg: TrainingConfig) -> TrainHistory:
    """Stage 2: each curve is its own target; the loss compares it against
    the response of the predicted settings, plus the out-of-range penalty."""
    _check_dataset(curves, None)

    def step(idx):
        out = model.forward(Tensor(curves[idx]))
        response = diff_cascade_response(out)
        return finetune_loss(curves[idx], response, out, lam=cfg.lam)

    return _run_epochs(model, curves, step, cfg, stage="finetune")


def evaluate_mae(model, curves: np.ndarray, batch_size: int = 512) -> float:
    """Held-out response error in dB: predictions are clamped exactly as at
    inference, and the response is re-centered before comparison since
    difference curves are zero-mean by construction."""
    if curves.ndim != 2 or curves.shape[0] == 0:
        raise ValueError("empty evaluation dataset")
    total = 0.0
    for start in range(0, curves.shape[0], batch_size):
        block = curves[start : start + batch_size]
        v = np.clip(model.forward(Tensor(block)).values, 0.0, 1.0)
        responses = response_from_normalized(v)
        responses -= responses.mean(axis=1, keepdims=True)
        total += float(np.sum(np.mean(np.abs(responses - block), axis=1)))
    return total / curves.shape[0]


def per_sample_mae(model, curves: np.ndarray) -> np.ndarray:
    """MAE of each example separately (same convention as evaluate_mae)."""
    v = np.clip(model.forward(Tensor(np.atleast_2d(curves))).values, 0.0, 1.0)
    responses = response_from_normalized(v)
    responses -= responses.mean(axis=1, keepdims=True)
    return np.mean(np.abs(responses - np.atleast_2d(curves)), axis=1)


def out_of_range_magnitude(model, curves: np.ndarray) -> float:
    """Mean summed overshoot of raw predictions outside [0,1] (the quantity
    the penalty term suppresses)."""
    v = model.forward(Tensor(np.atleast_2d(curves))).values
    overshoot = np.maximum(0.0, -v) + np.maximum(0.0, v - 1.0)
    return float(overshoot.sum(axis=1).mean())
