"""Convolutional regressor mapping one raw IMU window to its noise variance."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch, ValidationError
from . import layers


@dataclass(frozen=True)
class Architecture:
    """Network shape.

    ``conv`` lists ``(filters, kernel)`` per convolution; ``hidden`` the widths
    of the dense layers before the scalar output. ``norm`` selects whether each
    normalization reduces over channels and length jointly or over length only.
    """

    window_length: int = 200
    conv: tuple = ((5, 20), (3, 10), (3, 5))
    hidden: tuple = (100, 80, 50, 20)
    norm: str = "joint"

    def __post_init__(self):
        object.__setattr__(self, "conv", tuple(tuple(int(v) for v in c) for c in self.conv))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        layers.norm_axes(self.norm)
        if self.feature_lengths()[-1] < 1:
            raise ValidationError("window too short for the convolution stack")

    def feature_lengths(self):
        out, n = [], self.window_length
        for _, k in self.conv:
            n = n - k + 1
            out.append(n)
        return out

    def shapes(self):
        """Ordered mapping of parameter name to shape."""
        s, cin = {}, 1
        for i, (cout, k) in enumerate(self.conv, 1):
            s[f"conv{i}.w"] = (cout, cin, k)
            s[f"conv{i}.b"] = (cout,)
            s[f"norm{i}.gain"] = (cout,)
            s[f"norm{i}.shift"] = (cout,)
            cin = cout
        widths = (cin,) + self.hidden + (1,)
        for j in range(1, len(widths)):
            s[f"dense{j}.w"] = (widths[j], widths[j - 1])
            s[f"dense{j}.b"] = (widths[j],)
        return s

    def to_dict(self):
        return {"window_length": self.window_length, "conv": [list(c) for c in self.conv],
                "hidden": list(self.hidden), "norm": self.norm}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["window_length"]), tuple(tuple(c) for c in d["conv"]),
                   tuple(d["hidden"]), d.get("norm", "joint"))


@dataclass
class NetworkParams:
    arch: Architecture
    tensors: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = self.arch.shapes()
        if list(self.tensors) != list(expected):
            raise ShapeMismatch("parameter names do not match the architecture")
        for name, shape in expected.items():
            t = np.asarray(self.tensors[name], dtype=float)
            if t.shape != shape:
                raise ShapeMismatch(f"{name}: expected {shape}, got {t.shape}")
            self.tensors[name] = t

    @classmethod
    def initialize(cls, arch=None, seed=0):
        """Uniform fan-in initialization; unit gains and zero shifts for the norms."""
        arch = arch or Architecture()
        rng = np.random.default_rng(seed)
        tensors = {}
        shapes = arch.shapes()
        for name, shape in shapes.items():
            if name.endswith(".gain"):
                tensors[name] = np.ones(shape)
            elif name.endswith(".shift"):
                tensors[name] = np.zeros(shape)
            else:
                wshape = shapes[name[:-1] + "w"]
                bound = 1.0 / np.sqrt(np.prod(wshape[1:]))
                tensors[name] = rng.uniform(-bound, bound, shape)
        return cls(arch, tensors)

    def copy(self):
        return NetworkParams(self.arch, {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self):
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}

    @property
    def size(self):
        return sum(v.size for v in self.tensors.values())

    def all_finite(self):
        return all(np.isfinite(v).all() for v in self.tensors.values())


def _as_batch(params, windows):
    x = np.asarray(windows, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.arch.window_length:
        raise ShapeMismatch(f"expected windows of length {params.arch.window_length}, "
                            f"got shape {np.shape(windows)}")
    return x, single


def _forward(params, x):
    t = params.tensors
    arch = params.arch
    axes = layers.norm_axes(arch.norm)
    cache = []
    h = (x - x.mean(axis=1, keepdims=True))[:, None, :]
    for i in range(1, len(arch.conv) + 1):
        z = layers.conv_forward(h, t[f"conv{i}.w"], t[f"conv{i}.b"])
        a = layers.leaky_relu(z)
        y, ncache = layers.feature_norm_forward(a, t[f"norm{i}.gain"], t[f"norm{i}.shift"], axes)
        cache.append(("conv", i, h, z, ncache))
        h = y
    length = h.shape[2]
    h = layers.global_avg_pool(h)
    n_dense = len(arch.hidden) + 1
    for j in range(1, n_dense + 1):
        z = layers.dense_forward(h, t[f"dense{j}.w"], t[f"dense{j}.b"])
        cache.append(("dense", j, h, z, None))
        h = layers.leaky_relu(z) if j < n_dense else z
    return h[:, 0], (cache, length)


def forward(params, windows):
    """Predicted variance for one window ``(N,)`` or a batch ``(B, N)``.

    Each window is shifted by its own mean before the first convolution.
    """
    x, single = _as_batch(params, windows)
    out, _ = _forward(params, x)
    return float(out[0]) if single else out


def loss(q_hat, q_true):
    """Mean squared error over a batch (or a single pair)."""
    d = np.asarray(q_true, dtype=float) - np.asarray(q_hat, dtype=float)
    return float(np.mean(d * d))


def backward(params, windows, q_true):
    """Gradients of the mean squared error with respect to every parameter.

    Returns ``(grads, loss_value)`` where ``grads`` maps names like
    ``params.tensors``.
    """
    x, _ = _as_batch(params, windows)
    q_true = np.atleast_1d(np.asarray(q_true, dtype=float))
    if q_true.shape != (x.shape[0],):
        raise ShapeMismatch("one target per window required")
    out, (cache, length) = _forward(params, x)
    t = params.tensors
    resid = out - q_true
    grads = {}
    dh = (2.0 / x.shape[0]) * resid[:, None]
    n_dense = len(params.arch.hidden) + 1
    for kind, idx, h_in, z, ncache in reversed(cache):
        if kind == "dense":
            dz = dh if idx == n_dense else layers.leaky_relu_backward(z, dh)
            dh, grads[f"dense{idx}.w"], grads[f"dense{idx}.b"] = layers.dense_backward(
                h_in, t[f"dense{idx}.w"], dz)
            if idx == 1:
                dh = layers.global_avg_pool_backward(dh, length)
        else:
            da, grads[f"norm{idx}.gain"], grads[f"norm{idx}.shift"] = \
                layers.feature_norm_backward(dh, ncache)
            dz = layers.leaky_relu_backward(z, da)
            dh, grads[f"conv{idx}.w"], grads[f"conv{idx}.b"] = layers.conv_backward(
                h_in, t[f"conv{idx}.w"], dz)
    ordered = {k: grads[k] for k in params.tensors}
    return ordered, float(np.mean(resid * resid))
