"""The two EQ-matching architectures and their checkpoint format.

Both map a 256-bin difference curve to 10 raw normalized parameters with no
output activation; range enforcement is the training penalty's job, plus a
clamp at inference.
"""

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .container import load_blob, save_blob
from .filters import NUM_PARAMS, EqSettings, denormalize_params
from .grid import GRID_SIZE
from .nn import Adam, Conv1d, Dense

CONV_KERNEL = 5
CNN_CHANNELS = (16, 32, 32)
CNN_FLAT_LEN = 7808  # 32 channels x 244 bins after three valid k=5 convs
HIDDEN = 256
CHECKPOINT_FORMAT = 1


class MlpModel:
    arch = "mlp"

    def __init__(self, rng: np.random.Generator):
        self.layers = [
            Dense(GRID_SIZE, HIDDEN, rng),
            Dense(HIDDEN, HIDDEN, rng),
            Dense(HIDDEN, HIDDEN, rng),
            Dense(HIDDEN, NUM_PARAMS, rng),
        ]

    def forward(self, x: Tensor) -> Tensor:
        h = x
        for layer in self.layers[:-1]:
            h = ad.relu(layer(h))
        return self.layers[-1](h)

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


class CnnModel:
    arch = "cnn"

    def __init__(self, rng: np.random.Generator, input_bins: int = GRID_SIZE):
        self.input_bins = input_bins
        self.convs = [
            Conv1d(1, CNN_CHANNELS[0], CONV_KERNEL, rng),
            Conv1d(CNN_CHANNELS[0], CNN_CHANNELS[1], CONV_KERNEL, rng),
            Conv1d(CNN_CHANNELS[1], CNN_CHANNELS[2], CONV_KERNEL, rng),
        ]
        out_bins = input_bins - len(self.convs) * (CONV_KERNEL - 1)
        self.flat_len = CNN_CHANNELS[-1] * out_bins
        if self.flat_len != CNN_FLAT_LEN:
            raise AssertionError(
                f"flattened conv output is {self.flat_len}, expected {CNN_FLAT_LEN}"
            )
        self.dense = [
            Dense(self.flat_len, HIDDEN, rng),
            Dense(HIDDEN, HIDDEN, rng),
            Dense(HIDDEN, NUM_PARAMS, rng),
        ]

    def forward(self, x: Tensor) -> Tensor:
        batch = x.values.shape[0]
        h = x.reshape(batch, 1, self.input_bins)
        for conv in self.convs:
            h = ad.relu(conv(h))
        h = h.reshape(batch, self.flat_len)
        h = ad.relu(self.dense[0](h))
        h = ad.relu(self.dense[1](h))
        return self.dense[2](h)

    def parameters(self) -> list[Tensor]:
        params = [p for conv in self.convs for p in conv.parameters()]
        params += [p for layer in self.dense for p in layer.parameters()]
        return params


def build_model(arch: str, rng: np.random.Generator):
    if arch == "mlp":
        return MlpModel(rng)
    if arch == "cnn":
        return CnnModel(rng)
    raise ValueError(f"unknown architecture {arch!r} (expected 'mlp' or 'cnn')")


def clone_model(model):
    """Independent copy with the same weights (shares nothing)."""
    twin = build_model(model.arch, np.random.default_rng(0))
    for mine, theirs in zip(model.parameters(), twin.parameters()):
        theirs.values = mine.values.copy()
    return twin


def predict_normalized(model, curves: np.ndarray) -> np.ndarray:
    """Raw forward pass on curve rows; returns (batch, 10), unclamped."""
    curves = np.atleast_2d(np.asarray(curves, dtype=np.float64))
    return model.forward(Tensor(curves)).values


def predict_eq(model, curve: np.ndarray) -> EqSettings:
    """Inference: forward, clamp to [0,1], denormalize to physical settings."""
    v = predict_normalized(model, curve)[0]
    return denormalize_params(v, clamp=True)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(path, model, optimizer: Adam | None = None, extra_meta: dict | None = None) -> None:
    meta = {
        "kind": "model-checkpoint",
        "format": CHECKPOINT_FORMAT,
        "arch": model.arch,
        "param_shapes": [list(p.values.shape) for p in model.parameters()],
    }
    if extra_meta:
        meta["extra"] = extra_meta
    arrays = {f"param_{i}": p.values for i, p in enumerate(model.parameters())}
    if optimizer is not None:
        meta["optimizer"] = {"lr": optimizer.lr, "beta1": optimizer.beta1,
                             "beta2": optimizer.beta2, "eps": optimizer.eps}
        arrays.update(optimizer.state_arrays())
    save_blob(path, meta, arrays)


def load_checkpoint(path):
    """Returns (model, meta). Optimizer state, if present, stays in meta['_arrays']
    for callers that resume training."""
    meta, arrays = load_blob(path)
    if meta.get("kind") != "model-checkpoint":
        raise ValueError(f"not a model checkpoint: {path}")
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {meta.get('format')!r}")
    model = build_model(meta["arch"], np.random.default_rng(0))
    params = model.parameters()
    if len(params) != len(meta["param_shapes"]):
        raise ValueError("checkpoint parameter count mismatch")
    for i, p in enumerate(params):
        stored = arrays[f"param_{i}"]
        if list(stored.shape) != meta["param_shapes"][i] or stored.shape != p.values.shape:
            raise ValueError(f"checkpoint shape mismatch at parameter {i}")
        p.values = stored.astype(np.float64)
    meta["_arrays"] = arrays
    return model, meta
