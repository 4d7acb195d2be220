"""The three training losses, all differentiable Tensor expressions.

Conventions: parameter loss is the per-example sum of absolute normalized
errors (so "every component off by 0.1" reads 1.0), spectral loss is the
per-bin mean so it reads directly as dB MAE, and the penalty is the summed
out-of-range overshoot. All three average over the batch.
"""

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, as_tensor


def _batch_rows(t: Tensor) -> int:
    return t.values.shape[0] if t.values.ndim == 2 else 1


def parameter_loss(v_target, v_hat: Tensor) -> Tensor:
    v_target = np.asarray(v_target, dtype=np.float64)
    if v_target.shape != v_hat.values.shape:
        raise ValueError(f"parameter shapes differ: {v_target.shape} vs {v_hat.values.shape}")
    return ad.absolute(v_hat - v_target).sum() / float(_batch_rows(v_hat))


def spectral_loss(x_target, x_hat: Tensor) -> Tensor:
    x_target = np.asarray(x_target, dtype=np.float64)
    if x_target.shape != x_hat.values.shape:
        raise ValueError(f"spectrum shapes differ: {x_target.shape} vs {x_hat.values.shape}")
    return ad.absolute(x_hat - x_target).mean()


def penalty_loss(v_hat: Tensor) -> Tensor:
    v_hat = as_tensor(v_hat)
    over = ad.relu(v_hat - 1.0)
    under = ad.relu(-v_hat)
    return (over + under).sum() / float(_batch_rows(v_hat))


def finetune_loss(x_target, x_hat: Tensor, v_hat: Tensor, lam: float = 1.0) -> Tensor:
    return spectral_loss(x_target, x_hat) + lam * penalty_loss(v_hat)
