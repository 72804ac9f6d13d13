"""Layer primitives with explicit forward and backward passes.

Feature maps are ``(batch, channels, length)``; dense activations are
``(batch, features)``.
"""
from __future__ import annotations

import numpy as np

from .. import kernels

NEG_SLOPE = 0.01
NORM_EPS = 1e-5


def leaky_relu(x):
    """``x`` for positive inputs, ``0.01 * x`` otherwise. Works on scalars and arrays."""
    if np.isscalar(x):
        return x if x > 0 else NEG_SLOPE * x
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, x, NEG_SLOPE * x)


def leaky_relu_backward(x, dy):
    return np.where(x > 0, dy, NEG_SLOPE * dy)


def layer_norm(x, gain=1.0, shift=0.0, eps=NORM_EPS):
    """Normalize a feature vector to zero mean and unit variance, then scale and shift."""
    x = np.asarray(x, dtype=float)
    mu = x.mean()
    var = x.var()
    return (x - mu) / np.sqrt(var + eps) * gain + shift


def norm_axes(mode):
    """Reduction axes of a ``(B, C, L)`` map for the two normalization modes."""
    if mode == "joint":
        return (1, 2)
    if mode == "channel":
        return (2,)
    raise ValueError(f"unknown normalization mode {mode!r}")


def feature_norm_forward(x, gain, shift, axes, eps=NORM_EPS):
    """Normalize ``x`` over ``axes`` with per-channel ``gain`` and ``shift``.

    Returns ``(y, cache)``.
    """
    mu = x.mean(axis=axes, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=axes, keepdims=True) + eps)
    xhat = xc * inv
    y = xhat * gain[:, None] + shift[:, None]
    return y, (xhat, inv, gain, axes)


def feature_norm_backward(dy, cache):
    """Gradients ``(dx, dgain, dshift)``."""
    xhat, inv, gain, axes = cache
    dgain = (dy * xhat).sum(axis=(0, 2))
    dshift = dy.sum(axis=(0, 2))
    dxhat = dy * gain[:, None]
    dx = inv * (dxhat - dxhat.mean(axis=axes, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=axes, keepdims=True))
    return dx, dgain, dshift


def global_avg_pool(x):
    """Channel means. Accepts ``(C, L)`` or ``(B, C, L)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 1:
        raise ValueError("feature map must have positive length")
    return x.mean(axis=-1)


def global_avg_pool_backward(dy, length):
    return np.repeat(dy[..., None] / length, length, axis=-1)


def conv_forward(x, w, b):
    """Valid, stride-1 cross-correlation."""
    return kernels.conv1d_forward(x, w, b)


def conv_backward(x, w, dy):
    """Gradients ``(dx, dw, db)``."""
    return kernels.conv1d_backward(x, w, dy)


def dense_forward(x, w, b):
    return x @ w.T + b


def dense_backward(x, w, dy):
    return dy @ w, dy.T @ x, dy.sum(axis=0)
