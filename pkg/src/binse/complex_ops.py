"""Complex-valued neural kernels: linear, layer norm, dropout, depthwise
separable ("light") convolution blocks, and squeeze-and-excitation.

All functions are pure and operate on complex ndarrays with the channel
axis at position 1, i.e. (B, C, T) or (B, C, F, T). Parameter containers
are plain dataclasses of ndarrays, immutable by convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch


@dataclass
class CLinearParams:
    weight: np.ndarray   # complex (out, in)
    bias: np.ndarray     # complex (out,)


@dataclass
class CLayerNormParams:
    gamma: np.ndarray    # complex (C,)
    beta: np.ndarray     # complex (C,)
    eps: float = 1e-5


@dataclass
class LightConvParams:
    """Depthwise complex conv + pointwise mix + complex LN + complex PReLU.

    depthwise: complex (C_in, k) for 1D blocks or (C_in, k_f, k_t) for 2D.
    The residual connection is applied only when C_in == C_out.
    """

    depthwise: np.ndarray
    pointwise: CLinearParams
    norm: CLayerNormParams
    prelu_slope: np.ndarray   # real scalar (0-d array), shared by re and im


@dataclass
class CSEParams:
    reduce: np.ndarray   # real (C // r, C)
    expand: np.ndarray   # real (C, C // r)


def cmul(a, b):
    """Complex product; inputs may be complex arrays or (re, im) pairs."""
    if isinstance(a, tuple):
        a = a[0] + 1j * a[1]
    if isinstance(b, tuple):
        b = b[0] + 1j * b[1]
    return a * b


def _channels_last_matmul(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply (out, in) matrix along axis 1 of x = (B, in, ...) via BLAS."""
    b = x.shape[0]
    rest = x.shape[2:]
    flat = x.reshape(b, x.shape[1], -1)
    y = np.matmul(w, flat)
    return y.reshape(b, w.shape[0], *rest)


def clinear(x: np.ndarray, p: CLinearParams, axis: int = 1) -> np.ndarray:
    """Complex affine map y = W x + b along the given feature axis."""
    x = np.asarray(x)
    if x.shape[axis] != p.weight.shape[1]:
        raise ShapeMismatch(
            f"feature axis {axis} has length {x.shape[axis]}, "
            f"weight expects {p.weight.shape[1]}"
        )
    moved = np.moveaxis(x, axis, 1)
    if moved.ndim == 1:
        y = p.weight @ moved + p.bias
        return y
    dtype = np.result_type(moved.dtype, p.weight.dtype)
    y = _channels_last_matmul(
        p.weight.astype(dtype, copy=False), moved.astype(dtype, copy=False)
    )
    bias = p.bias.reshape((1, -1) + (1,) * (moved.ndim - 2))
    return np.moveaxis(y + bias, 1, axis)


def cln(x: np.ndarray, p: CLayerNormParams, axis: int = 1) -> np.ndarray:
    """Complex layer norm over the channel axis.

    The complex mean is removed per position and the centered values are
    divided by sqrt(E[|x - mu|^2] + eps) -- a single real scale shared by
    the real and imaginary parts -- before the complex affine (gamma, beta).
    """
    x = np.asarray(x)
    mu = np.mean(x, axis=axis, keepdims=True)
    centered = x - mu
    var = np.mean(np.abs(centered) ** 2, axis=axis, keepdims=True)
    normed = centered / np.sqrt(var + p.eps)
    shape = [1] * x.ndim
    shape[axis] = -1
    return normed * p.gamma.reshape(shape) + p.beta.reshape(shape)


def cdropout(
    x: np.ndarray,
    rate: float,
    mode: str = "infer",
    seed: int | None = None,
) -> np.ndarray:
    """Complex-structure-preserving dropout.

    A single real Bernoulli mask is applied jointly to the real and
    imaginary parts (never independently), scaled by 1/(1 - rate). In
    "infer" mode this is the identity.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if mode == "infer" or rate == 0.0:
        return x
    if mode != "train":
        raise ValueError(f"unknown dropout mode {mode!r}")
    rng = np.random.default_rng(seed)
    mask = rng.random(x.shape) >= rate
    return x * (mask / (1.0 - rate))


def cprelu(x: np.ndarray, slope) -> np.ndarray:
    """PReLU applied to real and imaginary parts with a shared slope."""
    s = float(slope)
    if np.iscomplexobj(x):
        # elementwise on the interleaved (re, im) float view in one pass
        xc = np.ascontiguousarray(x)
        v = xc.view(xc.real.dtype)
        return np.where(v >= 0, v, s * v).view(xc.dtype).reshape(x.shape)
    return np.where(x >= 0, x, s * x)


def _depthwise_conv(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded same-size depthwise correlation over the trailing axes.

    kernel (C, k) correlates along the last axis; kernel (C, k_f, k_t)
    correlates along the last two. y[t] = sum_j h[j] x[t + j - k//2].
    """
    c = x.shape[1]
    if kernel.shape[0] != c:
        raise ShapeMismatch(f"depthwise kernel for {kernel.shape[0]} channels, input has {c}")
    if kernel.ndim == 2:
        k = kernel.shape[1]
        pad = k // 2
        padded = np.pad(x, [(0, 0)] * (x.ndim - 1) + [(pad, pad)])
        t = x.shape[-1]
        out = np.zeros_like(x)
        kshape = (1, c) + (1,) * (x.ndim - 2)
        for j in range(k):
            out += kernel[:, j].reshape(kshape) * padded[..., j : j + t]
        return out
    if kernel.ndim == 3:
        if x.ndim != 4:
            raise ShapeMismatch("2D depthwise conv expects (B, C, F, T) input")
        kf, kt = kernel.shape[1:]
        pf, pt = kf // 2, kt // 2
        padded = np.pad(x, [(0, 0), (0, 0), (pf, pf), (pt, pt)])
        f, t = x.shape[2], x.shape[3]
        out = np.zeros_like(x)
        for jf in range(kf):
            for jt in range(kt):
                out += (
                    kernel[:, jf, jt][None, :, None, None]
                    * padded[:, :, jf : jf + f, jt : jt + t]
                )
        return out
    raise ShapeMismatch(f"unsupported depthwise kernel ndim {kernel.ndim}")


def _lightconv(x: np.ndarray, p: LightConvParams) -> np.ndarray:
    y = _depthwise_conv(x, p.depthwise)
    y = clinear(y, p.pointwise, axis=1)
    y = cln(y, p.norm, axis=1)
    y = cprelu(y, p.prelu_slope)
    if y.shape[1] == x.shape[1]:
        y = y + x
    return y


def lightconv1d(x: np.ndarray, p: LightConvParams) -> np.ndarray:
    """Light conv block along the trailing (time) axis; x is (B, C, T) or
    (B, C, F, T) with the conv shared across frequencies."""
    if p.depthwise.ndim != 2:
        raise ShapeMismatch("lightconv1d requires a (C, k) depthwise kernel")
    return _lightconv(x, p)


def lightconv2d(x: np.ndarray, p: LightConvParams) -> np.ndarray:
    """Light conv block with a (k_f, k_t) depthwise kernel; x is (B, C, F, T)."""
    if p.depthwise.ndim != 3:
        raise ShapeMismatch("lightconv2d requires a (C, k_f, k_t) depthwise kernel")
    return _lightconv(x, p)


def cse(x: np.ndarray, p: CSEParams) -> np.ndarray:
    """Complex squeeze-and-excitation: phase-preserving per-channel scaling.

    The squeeze is the mean magnitude over (frequency, time) per channel;
    the excitation is sigmoid(expand @ relu(reduce @ s)), a real scale.
    """
    if x.ndim != 4:
        raise ShapeMismatch("cse expects (B, C, F, T) input")
    if p.reduce.shape[1] != x.shape[1]:
        raise ShapeMismatch(
            f"cse reduce expects {p.reduce.shape[1]} channels, input has {x.shape[1]}"
        )
    s = np.mean(np.abs(x), axis=(2, 3))              # (B, C)
    h = np.maximum(s @ p.reduce.T, 0.0)
    e = 1.0 / (1.0 + np.exp(-(h @ p.expand.T)))       # (B, C)
    return x * e[:, :, None, None]
