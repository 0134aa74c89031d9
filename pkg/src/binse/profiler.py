"""Parameter counting, analytic MAC counting, and real-time-factor timing.

Conventions: a complex parameter counts as 2 reals; one complex
multiply-accumulate counts as 4 real MACs; a real-by-complex product
counts as 2. Only multiplies are counted (magnitudes, sigmoids, and
norms are excluded), and the analysis/synthesis transforms are not part
of the network accounting.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .audio import Waveform
from .config import RunConfig
from .frontend import build_gammatone_bank, frame_count
from .params import ModelParams
from .pipeline import enhance


@dataclass
class ComplexityReport:
    n_params: int = 0
    macs: int = 0
    audio_seconds: float = 1.0
    rtf: float | None = None
    param_rows: dict[str, int] = field(default_factory=dict)
    mac_rows: dict[str, int] = field(default_factory=dict)

    def check_totals(self):
        assert self.n_params == sum(self.param_rows.values())
        assert self.macs == sum(self.mac_rows.values())


def _tensor_params(arr: np.ndarray) -> int:
    return int(arr.size) * (2 if np.iscomplexobj(arr) else 1)


def count_params(model: ModelParams) -> ComplexityReport:
    """Exact per-tensor parameter accounting, grouped by top-level module."""
    rows: dict[str, int] = {}
    for name, arr in model.tensors.items():
        module = name.split(".", 1)[0]
        rows[module] = rows.get(module, 0) + _tensor_params(arr)
    report = ComplexityReport(n_params=sum(rows.values()), param_rows=rows)
    return report


def count_macs(cfg: RunConfig, audio_seconds: float = 1.0) -> ComplexityReport:
    """Analytic MAC count for processing the given duration of audio."""
    a = cfg.analysis
    t = frame_count(int(round(audio_seconds * a.sample_rate)), a)
    f = a.n_freq_bins
    c = cfg.channels
    ng = cfg.n_gammatone
    k1 = cfg.kernel_time
    kf, kt = cfg.kernel_2d
    k = cfg.n_basis
    h = cfg.hidden
    r = cfg.se_reduction
    rows: dict[str, int] = {}

    def lightconv_macs(c_in, c_out, ksize, positions):
        dw = c_in * ksize * positions * 4           # complex depthwise
        pw = c_in * c_out * positions * 4           # complex pointwise
        return dw + pw

    enc = 0
    for i in range(cfg.n_encoder_blocks):
        c_in = 2 if i == 0 else c
        enc += lightconv_macs(c_in, c, k1, f * t)    # STFT stream
        enc += lightconv_macs(c_in, c, k1, ng * t)   # gammatone stream
    enc += c * f * ng * t * 2                        # real 64->F projection of complex data
    enc += c * c * f * t                             # real fusion conv on magnitudes
    enc += 2 * c * (c // r)                          # SE excitation (per utterance)
    rows["encoder"] = enc

    mod = 0
    if not cfg.no_gafm:
        mod += f * (c * h + h * k)                   # context MLP, all frequencies
        mod += f * t * k                             # basis synthesis Phi . a
        mod += c * f * t * 2                         # real gate x complex features
        mod += c * c * f * t * 4                     # complex projection
    rows["modulator"] = mod

    dec = 0
    for _ in range(2):                               # two parallel heads
        for _ in range(cfg.n_decoder_blocks):
            dec += lightconv_macs(c, c, kf * kt, f * t)
        dec += c * 1 * f * t * 4                     # complex output projection
    dec += c * f                                     # gate conv on pooled magnitudes
    rows["decoder"] = dec

    report = ComplexityReport(
        macs=sum(rows.values()), audio_seconds=audio_seconds, mac_rows=rows
    )
    return report


def measure_rtf(
    model: ModelParams,
    cfg: RunConfig,
    wav: Waveform | None = None,
    repeats: int = 20,
    warmup: int = 2,
    seed: int = 0,
) -> float:
    """Median wall-clock processing time divided by audio duration."""
    if wav is None:
        rng = np.random.default_rng(seed)
        wav = Waveform(
            0.1 * rng.standard_normal((2, 2 * cfg.analysis.sample_rate)),
            cfg.analysis.sample_rate,
        )
    bank = None
    if not cfg.no_gammatone:
        bank = build_gammatone_bank(
            cfg.analysis,
            cfg.n_gammatone,
            cfg.gammatone_lo_hz,
            cfg.gammatone_hi_hz,
            cfg.gammatone_taps,
        )
    for _ in range(warmup):
        enhance(wav, model, cfg, bank=bank)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        enhance(wav, model, cfg, bank=bank)
        times.append(time.perf_counter() - t0)
    return float(np.median(times) / wav.duration_s)


def full_report(
    model: ModelParams,
    cfg: RunConfig,
    audio_seconds: float = 1.0,
    with_rtf: bool = False,
    repeats: int = 20,
) -> ComplexityReport:
    params = count_params(model)
    macs = count_macs(cfg, audio_seconds)
    report = ComplexityReport(
        n_params=params.n_params,
        macs=macs.macs,
        audio_seconds=audio_seconds,
        param_rows=params.param_rows,
        mac_rows=macs.mac_rows,
    )
    if with_rtf:
        report.rtf = measure_rtf(model, cfg, repeats=repeats)
    report.check_totals()
    return report
