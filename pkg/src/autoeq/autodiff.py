"""Reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps a float64 ndarray plus the closure that routes its gradient
to its parents. Graphs are built eagerly during the forward pass;
``backward()`` on a scalar walks the tape once in reverse topological
order. Only the operations the EQ-matching models actually use exist here:
elementwise arithmetic, exp/log/sin/cos/sqrt/abs, relu, matmul, valid
1-D convolution, reductions, reshape, and basic indexing.
"""

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("values", "grad", "_parents", "_backward")

    def __init__(self, values, parents=(), backward=None):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = None
        self._parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self):
        return self.values.shape

    def __repr__(self):
        return f"Tensor(shape={self.values.shape})"

    def _accum(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    # -- graph walk ---------------------------------------------------------

    def backward(self) -> None:
        """Propagate d(self)/d(everything) through the recorded graph.

        `self` must be a scalar produced by at least one recorded op.
        """
        if self.values.size != 1:
            raise ValueError("backward() requires a scalar loss")
        if not self._parents:
            raise RuntimeError("backward() without a recorded forward pass")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.values)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        out = Tensor(self.values + other.values, (self, other))

        def back(g):
            self._accum(_unbroadcast(g, self.values.shape))
            other._accum(_unbroadcast(g, other.values.shape))

        out._backward = back
        return out

    __radd__ = __add__

    def __mul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.values * other.values, (self, other))

        def back(g):
            self._accum(_unbroadcast(g * other.values, self.values.shape))
            other._accum(_unbroadcast(g * self.values, other.values.shape))

        out._backward = back
        return out

    __rmul__ = __mul__

    def __neg__(self):
        out = Tensor(-self.values, (self,))
        out._backward = lambda g: self._accum(-g)
        return out

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __truediv__(self, other):
        other = as_tensor(other)
        out = Tensor(self.values / other.values, (self, other))

        def back(g):
            self._accum(_unbroadcast(g / other.values, self.values.shape))
            other._accum(_unbroadcast(-g * self.values / other.values**2, other.values.shape))

        out._backward = back
        return out

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __matmul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.values @ other.values, (self, other))

        def back(g):
            self._accum(g @ other.values.T)
            other._accum(self.values.T @ g)

        out._backward = back
        return out

    def __getitem__(self, key):
        out = Tensor(self.values[key], (self,))

        def back(g):
            full = np.zeros_like(self.values)
            np.add.at(full, key, g)
            self._accum(full)

        out._backward = back
        return out

    # -- shape ---------------------------------------------------------------

    def reshape(self, *shape):
        out = Tensor(self.values.reshape(*shape), (self,))
        out._backward = lambda g: self._accum(g.reshape(self.values.shape))
        return out

    # -- reductions ----------------------------------------------------------

    def sum(self):
        out = Tensor(self.values.sum(), (self,))
        out._backward = lambda g: self._accum(np.broadcast_to(g, self.values.shape))
        return out

    def mean(self):
        n = self.values.size
        out = Tensor(self.values.mean(), (self,))
        out._backward = lambda g: self._accum(np.broadcast_to(g / n, self.values.shape))
        return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _elementwise(x: Tensor, values: np.ndarray, dvalues: np.ndarray) -> Tensor:
    out = Tensor(values, (x,))
    out._backward = lambda g: x._accum(g * dvalues)
    return out


def exp(x: Tensor) -> Tensor:
    v = np.exp(x.values)
    return _elementwise(x, v, v)


def log(x: Tensor) -> Tensor:
    return _elementwise(x, np.log(x.values), 1.0 / x.values)


def sin(x: Tensor) -> Tensor:
    return _elementwise(x, np.sin(x.values), np.cos(x.values))


def cos(x: Tensor) -> Tensor:
    return _elementwise(x, np.cos(x.values), -np.sin(x.values))


def sqrt(x: Tensor) -> Tensor:
    v = np.sqrt(x.values)
    return _elementwise(x, v, 0.5 / v)


def absolute(x: Tensor) -> Tensor:
    # d|x|/dx at 0 taken as 0, matching np.sign
    return _elementwise(x, np.abs(x.values), np.sign(x.values))


def relu(x: Tensor) -> Tensor:
    # subgradient at exactly 0 is 0
    return _elementwise(x, np.maximum(x.values, 0.0), (x.values > 0.0).astype(np.float64))


def conv1d(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """Valid cross-correlation: x (B, C_in, L), kernels (C_out, C_in, K),
    bias (C_out,) -> (B, C_out, L - K + 1)."""
    xv, kv = x.values, kernels.values
    if xv.ndim != 3 or kv.ndim != 3 or xv.shape[1] != kv.shape[1]:
        raise ValueError(f"conv1d shape mismatch: input {xv.shape}, kernels {kv.shape}")
    k = kv.shape[2]
    if xv.shape[2] < k:
        raise ValueError("conv1d input shorter than kernel")
    windows = np.lib.stride_tricks.sliding_window_view(xv, k, axis=2)  # (B, C_in, L_out, K)
    out_vals = np.einsum("bclk,ock->bol", windows, kv, optimize=True) + bias.values[:, None]
    out = Tensor(out_vals, (x, kernels, bias))

    def back(g):
        kernels._accum(np.einsum("bclk,bol->ock", windows, g, optimize=True))
        bias._accum(g.sum(axis=(0, 2)))
        padded = np.pad(g, ((0, 0), (0, 0), (k - 1, k - 1)))
        gwin = np.lib.stride_tricks.sliding_window_view(padded, k, axis=2)  # (B, C_out, L, K)
        x._accum(np.einsum("boik,ock->bci", gwin, kv[:, :, ::-1], optimize=True))

    out._backward = back
    return out
