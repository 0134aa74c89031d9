"""Adaptive Fourier temporal modulator backbone.

Each frequency slice is processed independently: a global context vector
(time-averaged channel magnitudes) drives a small MLP whose output weights
a fixed orthonormal Fourier basis over the frame axis, yielding a real
temporal gate in (0, 1). The gate multiplies the slice (pure magnitude
modulation, phase untouched), followed by a complex linear projection,
dropout, a residual connection, and complex layer norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .complex_ops import CLayerNormParams, CLinearParams, cdropout, clinear, cln
from .errors import ShapeMismatch


@dataclass
class ModulatorParams:
    mlp_w1: np.ndarray        # real (H, C)
    mlp_b1: np.ndarray        # real (H,)
    mlp_w2: np.ndarray        # real (K, H)
    mlp_b2: np.ndarray        # real (K,)
    mlp_prelu_slope: np.ndarray   # real scalar
    tau: np.ndarray           # real scalar temperature > 0
    proj: CLinearParams       # complex (C, C)
    norm: CLayerNormParams
    dropout_rate: float = 0.0


@lru_cache(maxsize=64)
def fourier_basis(n_frames: int, n_basis: int) -> np.ndarray:
    """Orthonormal real Fourier basis (T x K), cached by length.

    Column 0 is DC; columns then pair cos/sin at harmonics 1..(K-1)/2 of
    the frame-sequence length, so the gate is built from the slowest
    frame-rate envelopes. Columns are mutually orthonormal for any T >= K.
    """
    if n_basis % 2 == 0:
        raise ValueError("n_basis must be odd (DC plus cos/sin pairs)")
    t = np.arange(n_frames)
    cols = [np.full(n_frames, 1.0 / np.sqrt(n_frames))]
    for h in range(1, (n_basis - 1) // 2 + 1):
        w = 2.0 * np.pi * h * t / n_frames
        cols.append(np.cos(w) * np.sqrt(2.0 / n_frames))
        cols.append(np.sin(w) * np.sqrt(2.0 / n_frames))
    phi = np.stack(cols, axis=1)
    phi.setflags(write=False)
    return phi


def context_vector(z_f: np.ndarray) -> np.ndarray:
    """Time-averaged channel magnitudes; (B, C, T) -> (B, C)."""
    return np.mean(np.abs(z_f), axis=-1)


def synth_gate(c_f: np.ndarray, basis: np.ndarray, p: ModulatorParams) -> np.ndarray:
    """Synthesize the temporal gate for one frequency: (B, C) -> (B, T)."""
    slope = float(p.mlp_prelu_slope)
    h = c_f @ p.mlp_w1.T + p.mlp_b1
    h = np.where(h >= 0, h, slope * h)
    a = h @ p.mlp_w2.T + p.mlp_b2                 # (B, K)
    if basis.shape[1] != a.shape[-1]:
        raise ShapeMismatch(
            f"basis has {basis.shape[1]} columns, coefficients have {a.shape[-1]}"
        )
    return 1.0 / (1.0 + np.exp(-float(p.tau) * (a @ basis.T)))


def _gates_all_freqs(z: np.ndarray, basis: np.ndarray, p: ModulatorParams) -> np.ndarray:
    """Vectorized gate synthesis over all frequencies: (B, C, F, T) -> (B, F, T)."""
    slope = float(p.mlp_prelu_slope)
    c = np.mean(np.abs(z), axis=-1)               # (B, C, F)
    h = np.einsum("hc,bcf->bhf", p.mlp_w1, c) + p.mlp_b1[None, :, None]
    h = np.where(h >= 0, h, slope * h)
    a = np.einsum("kh,bhf->bkf", p.mlp_w2, h) + p.mlp_b2[None, :, None]
    pre = np.einsum("tk,bkf->bft", basis, a)
    return 1.0 / (1.0 + np.exp(-float(p.tau) * pre))


def modulator_block(
    z: np.ndarray,
    p: ModulatorParams,
    basis: np.ndarray | None = None,
    mode: str = "infer",
    seed: int | None = None,
) -> np.ndarray:
    """Residual modulator update applied to every frequency independently.

    Per frequency f: out_f = CLN(z_f + Dropout(CLinear(z_f * gate_f))).
    Dropout is the identity in "infer" mode.
    """
    if z.ndim != 4:
        raise ShapeMismatch(f"expected (B, C, F, T) input, got shape {z.shape}")
    t = z.shape[-1]
    if basis is None:
        basis = fourier_basis(t, p.mlp_w2.shape[0])
    if basis.shape[0] != t:
        raise ShapeMismatch(f"basis built for T={basis.shape[0]}, input has T={t}")
    gates = _gates_all_freqs(z, basis, p)         # (B, F, T)
    gates = gates.astype(z.real.dtype, copy=False)  # keep z's precision
    modulated = z * gates[:, None, :, :]
    projected = clinear(modulated, p.proj, axis=1)
    projected = cdropout(projected, p.dropout_rate, mode=mode, seed=seed)
    return cln(z + projected, p.norm, axis=1)
