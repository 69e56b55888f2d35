"""Dense numeric primitives the networks are built from.

Tensors are plain float64 numpy arrays. Every function here is pure: inputs
are never modified and a fresh array is returned.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError

Tensor = np.ndarray

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def as_tensor(x) -> Tensor:
    """Return ``x`` as a C-contiguous float64 array (no copy if already one)."""
    return np.ascontiguousarray(x, dtype=np.float64)


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer, uint64 arithmetic wraps mod 2**64
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def mix64(value: int) -> int:
    """Scramble a 64-bit integer with the splitmix64 output function."""
    with np.errstate(over="ignore"):
        return int(_mix(np.array([value & MASK64], dtype=np.uint64))[0])


class SeededRng:
    """SplitMix64 generator.

    The n-th output (1-based) of a generator seeded with ``s`` is
    ``mix64(s + n * 0x9E3779B97F4A7C15 mod 2**64)``, so streams are defined
    independently of numpy's own bit generators and can be reproduced
    anywhere. Draws are vectorised over that counter.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self._counter = self.seed

    def next_u64(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self._counter) + steps * np.uint64(_GAMMA)
            out = _mix(z)
        self._counter = (self._counter + n * _GAMMA) & MASK64
        return out

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1) built from the top 53 bits of each draw."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard normal draws (Box-Muller, cos branch then sin branch)."""
        m = (n + 1) // 2
        u = self.uniform(2 * m)
        u1 = 1.0 - u[:m]  # (0, 1], keeps log finite
        u2 = u[m:]
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of ``range(n)``: stable argsort of fresh 64-bit keys."""
        return np.argsort(self.next_u64(n), kind="stable")

    def split(self, key: int) -> "SeededRng":
        """Independent child generator seeded with ``mix64(seed ^ key)``."""
        return SeededRng(mix64(self.seed ^ (int(key) & MASK64)))

    def __repr__(self):
        return f"SeededRng(seed={self.seed})"


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def _check_conv_shapes(x: Tensor, kernels: Tensor) -> None:
    if x.ndim not in (2, 3) or kernels.ndim != 3:
        raise ShapeError(
            f"conv1d expects input (L, Cin) or (B, L, Cin) and kernels (F, K, Cin); "
            f"got {x.shape} and {kernels.shape}"
        )
    if x.shape[-1] != kernels.shape[2]:
        raise ShapeError(f"channel mismatch: input {x.shape} vs kernels {kernels.shape}")
    if kernels.shape[1] > x.shape[-2]:
        raise ShapeError(
            f"kernel width {kernels.shape[1]} exceeds input length {x.shape[-2]}"
        )


def _columns(x: Tensor, width: int) -> Tensor:
    # (..., L, C) -> (..., T, K*C) with T = L - K + 1, k-major within a row
    win = sliding_window_view(x, width, axis=-2)  # (..., T, C, K)
    win = np.swapaxes(win, -1, -2)  # (..., T, K, C)
    return win.reshape(win.shape[:-2] + (-1,))


def conv1d_forward(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """Valid, stride-1 cross-correlation.

    ``out[t, f] = bias[f] + sum_{k,c} x[t + k, c] * kernels[f, k, c]``

    ``x`` may carry a leading batch axis; the output keeps it.
    """
    x = as_tensor(x)
    kernels = as_tensor(kernels)
    bias = as_tensor(bias)
    _check_conv_shapes(x, kernels)
    n_filters, width, _ = kernels.shape
    if bias.shape != (n_filters,):
        raise ShapeError(f"bias shape {bias.shape} does not match {n_filters} filters")
    cols = _columns(x, width)
    return cols @ kernels.reshape(n_filters, -1).T + bias


def conv1d_backward(x: Tensor, kernels: Tensor, upstream: Tensor):
    """Gradients of ``sum(upstream * conv1d_forward(x, kernels, bias))``.

    Returns ``(grad_input, grad_kernels, grad_bias)``. With a batched input
    the kernel and bias gradients are summed over the batch.
    """
    x = as_tensor(x)
    kernels = as_tensor(kernels)
    upstream = as_tensor(upstream)
    _check_conv_shapes(x, kernels)
    n_filters, width, n_in = kernels.shape
    n_out = x.shape[-2] - width + 1
    expected = x.shape[:-2] + (n_out, n_filters)
    if upstream.shape != expected:
        raise ShapeError(f"upstream gradient shape {upstream.shape}, expected {expected}")

    cols = _columns(x, width)
    flat_up = upstream.reshape(-1, n_filters)
    flat_cols = cols.reshape(-1, width * n_in)
    grad_kernels = (flat_up.T @ flat_cols).reshape(n_filters, width, n_in)
    grad_bias = flat_up.sum(axis=0)

    dcols = (upstream @ kernels.reshape(n_filters, -1)).reshape(
        upstream.shape[:-1] + (width, n_in)
    )
    grad_input = np.zeros_like(x)
    for k in range(width):
        grad_input[..., k : k + n_out, :] += dcols[..., :, k, :]
    return grad_input, grad_kernels, grad_bias


def relu(x: Tensor) -> Tensor:
    return np.maximum(as_tensor(x), 0.0)


def relu_grad(x: Tensor) -> Tensor:
    # subgradient at exactly 0 is taken as 0
    return (as_tensor(x) > 0.0).astype(np.float64)


def softmax(logits: Tensor) -> Tensor:
    """Row-wise softmax of a (N, C) array, shifted by the row max for stability."""
    logits = as_tensor(logits)
    if logits.ndim != 2 or logits.shape[1] < 2:
        raise ShapeError(f"softmax expects (N, C>=2) logits, got {logits.shape}")
    z = logits - logits.max(axis=1, keepdims=True) if logits.shape[0] else logits
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
