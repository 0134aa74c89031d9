"""Binaural dataset construction: HRIR spatialization of mono speech,
diffuse isotropic noise synthesis, and SNR-controlled mixing.

All randomness flows from explicit per-item seeds; the same manifest
produces byte-identical WAV output on every run.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .audio import Waveform, read_mono, read_wav, write_wav
from .errors import (
    AzimuthUnavailable,
    DegenerateMix,
    NoiseSourceTooShort,
    ShapeMismatch,
    UnsupportedFormat,
)


@dataclass
class HrirSet:
    """Azimuth-indexed stereo impulse responses on the horizontal plane."""

    entries: dict[float, np.ndarray]   # azimuth degrees -> (2, taps)
    sample_rate: int

    def __post_init__(self):
        lengths = {ir.shape for ir in self.entries.values()}
        if not self.entries:
            raise ValueError("HrirSet needs at least one azimuth")
        if len(lengths) != 1:
            raise ValueError("all impulse responses must share one shape")
        (shape,) = lengths
        if len(shape) != 2 or shape[0] != 2:
            raise ValueError("impulse responses must be shaped (2, taps)")
        for az in self.entries:
            if not -180.0 <= az < 180.0:
                raise ValueError(f"azimuth {az} outside [-180, 180)")

    @property
    def azimuths(self) -> list[float]:
        return sorted(self.entries)

    def nearest(self, azimuth: float, tolerance: float = 1.0) -> float:
        best = min(self.azimuths, key=lambda a: abs(a - azimuth))
        if abs(best - azimuth) > tolerance:
            raise AzimuthUnavailable(
                f"no impulse response within {tolerance} deg of {azimuth}"
            )
        return best


def load_hrir_dir(path, expected_rate: int = 16000) -> HrirSet:
    """Load a directory of per-azimuth stereo WAVs named '<azimuth>.wav'."""
    entries = {}
    for wav in sorted(Path(path).glob("*.wav")):
        try:
            az = float(wav.stem)
        except ValueError:
            continue
        x, _ = read_wav(wav, expected_rate=expected_rate)
        if x.shape[0] != 2:
            raise UnsupportedFormat(f"{wav}: HRIR must be stereo")
        entries[az] = x
    if not entries:
        raise UnsupportedFormat(f"{path}: no azimuth-named WAV files found")
    return HrirSet(entries, expected_rate)


def spatialize(mono: np.ndarray, h: HrirSet, azimuth: float) -> Waveform:
    """Convolve a mono signal with the stereo pair at the nearest azimuth,
    truncated to the input length."""
    mono = np.asarray(mono, dtype=np.float64)
    if mono.ndim != 1:
        raise ShapeMismatch("spatialize expects a 1-D mono signal")
    ir = h.entries[h.nearest(azimuth)]
    out = fftconvolve(mono[np.newaxis, :], ir, axes=-1)[:, : mono.shape[0]]
    return Waveform(out, h.sample_rate)


def make_diffuse_noise(
    noise_src: np.ndarray, h: HrirSet, duration_s: float, seed: int
) -> Waveform:
    """Diffuse isotropic noise: non-overlapping source segments, one per
    available azimuth, each spatialized and summed; normalized to unit RMS.

    The seed picks the starting offset into the source so different items
    draw different material deterministically.
    """
    noise_src = np.asarray(noise_src, dtype=np.float64)
    n = int(round(duration_s * h.sample_rate))
    azimuths = h.azimuths
    needed = n * len(azimuths)
    if noise_src.shape[0] < needed:
        raise NoiseSourceTooShort(
            f"need {needed} samples for {len(azimuths)} segments, have {noise_src.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    start = int(rng.integers(0, noise_src.shape[0] - needed + 1))
    acc = np.zeros((2, n))
    for k, az in enumerate(azimuths):
        seg = noise_src[start + k * n : start + (k + 1) * n]
        acc += spatialize(seg, h, az).samples
    rms = np.sqrt(np.mean(acc ** 2))
    if rms == 0.0:
        raise DegenerateMix("diffuse noise field is silent")
    return Waveform(acc / rms, h.sample_rate)


def mix_at_snr(
    speech: Waveform, noise: Waveform, snr_db: float
) -> tuple[Waveform, dict]:
    """Scale the noise so the speech-to-noise power ratio (summed over both
    ears) hits snr_db, then add. Returns the mixture and a scale report."""
    if speech.n_samples != noise.n_samples:
        raise ShapeMismatch("speech and noise lengths differ")
    p_s = float(np.sum(speech.samples ** 2))
    p_n = float(np.sum(noise.samples ** 2))
    if p_s == 0.0 or p_n == 0.0:
        raise DegenerateMix("speech or noise is silent")
    scale = np.sqrt(p_s / (p_n * 10.0 ** (snr_db / 10.0)))
    scaled = noise.samples * scale
    mix = Waveform(speech.samples + scaled, speech.sample_rate)
    measured = 10.0 * np.log10(p_s / float(np.sum(scaled ** 2)))
    report = {"noise_scale": float(scale), "measured_snr_db": float(measured)}
    return mix, report


@dataclass
class MixSpec:
    """One dataset item: which sources, where, how loud, which seed."""

    item_id: str
    speech: str
    noise: str
    hrir_dir: str
    azimuth: float
    snr_db: float
    seed: int
    duration_s: float = 2.0

    def __post_init__(self):
        if not -90.0 <= self.azimuth <= 90.0:
            raise ValueError("target azimuth must lie in the frontal span [-90, 90]")


def read_manifest(path) -> list[MixSpec]:
    """Read a line-delimited JSON manifest of MixSpec records."""
    specs = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                specs.append(MixSpec(**json.loads(line)))
    return specs


def synthesize_item(spec: MixSpec, sample_rate: int = 16000):
    """Build (clean, noise, mixture, report) for one manifest item."""
    hrirs = load_hrir_dir(spec.hrir_dir, expected_rate=sample_rate)
    n = int(round(spec.duration_s * sample_rate))
    speech_src = read_mono(spec.speech, expected_rate=sample_rate)
    if speech_src.shape[0] < n:
        speech_src = np.pad(speech_src, (0, n - speech_src.shape[0]))
    clean = spatialize(speech_src[:n], hrirs, spec.azimuth)
    noise_src = read_mono(spec.noise, expected_rate=sample_rate)
    noise = make_diffuse_noise(noise_src, hrirs, spec.duration_s, spec.seed)
    mixture, report = mix_at_snr(clean, noise, spec.snr_db)
    return clean, noise, mixture, report


def generate_dataset(specs: list[MixSpec], out_dir, sample_rate: int = 16000) -> dict:
    """Render every manifest item to disk: clean/noise/mix WAVs plus a
    metadata record per item. Per-item failures are collected, not fatal."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, failures = [], []
    for spec in specs:
        try:
            clean, noise, mixture, report = synthesize_item(spec, sample_rate)
        except Exception as exc:  # surface per-item, keep going
            failures.append({"item_id": spec.item_id, "error": str(exc)})
            continue
        write_wav(out / f"{spec.item_id}_clean.wav", clean.samples, sample_rate)
        write_wav(out / f"{spec.item_id}_noise.wav", noise.samples, sample_rate)
        write_wav(out / f"{spec.item_id}_mix.wav", mixture.samples, sample_rate)
        rec = asdict(spec) | report
        records.append(rec)
    meta_path = out / "metadata.jsonl"
    with open(meta_path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return {"n_ok": len(records), "failures": failures, "metadata": str(meta_path)}
