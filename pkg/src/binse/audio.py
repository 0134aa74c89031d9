"""WAV input/output and the stereo waveform container.

Supported on disk: PCM 16-bit and IEEE float-32, 16 kHz. Anything else is
rejected with UnsupportedFormat; there is no resampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .errors import UnsupportedFormat


@dataclass
class Waveform:
    """Stereo time-domain signal, samples shaped (2, n)."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[0] != 2:
            raise ValueError("Waveform requires samples shaped (2, n)")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("Waveform contains non-finite samples")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate


def read_wav(path, expected_rate: int | None = None) -> tuple[np.ndarray, int]:
    """Read a WAV file into a float64 array shaped (channels, n) in [-1, 1].

    Only PCM-16 and float-32 payloads are accepted. If ``expected_rate`` is
    given, a differing sample rate raises UnsupportedFormat.
    """
    try:
        rate, data = wavfile.read(str(path))
    except ValueError as exc:
        raise UnsupportedFormat(f"{path}: cannot parse WAV ({exc})") from exc
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        x = data.astype(np.float64)
    else:
        raise UnsupportedFormat(
            f"{path}: dtype {data.dtype} not supported (PCM-16 or float-32 only)"
        )
    if x.ndim == 1:
        x = x[np.newaxis, :]
    else:
        x = x.T
    if expected_rate is not None and rate != expected_rate:
        raise UnsupportedFormat(f"{path}: sample rate {rate}, expected {expected_rate}")
    return x, rate


def read_stereo(path, expected_rate: int = 16000) -> Waveform:
    x, rate = read_wav(path, expected_rate=expected_rate)
    if x.shape[0] != 2:
        raise UnsupportedFormat(f"{path}: {x.shape[0]} channel(s), expected 2")
    return Waveform(x, rate)


def read_mono(path, expected_rate: int = 16000) -> np.ndarray:
    x, _ = read_wav(path, expected_rate=expected_rate)
    if x.shape[0] != 1:
        raise UnsupportedFormat(f"{path}: {x.shape[0]} channel(s), expected 1")
    return x[0]


def write_wav(path, samples: np.ndarray, sample_rate: int, encoding: str = "float32"):
    """Write (channels, n) or (n,) samples to a WAV file.

    encoding: "float32" (default) or "pcm16".
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 2:
        x = x.T
    if encoding == "float32":
        wavfile.write(str(path), sample_rate, x.astype(np.float32))
    elif encoding == "pcm16":
        q = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
        wavfile.write(str(path), sample_rate, q)
    else:
        raise UnsupportedFormat(f"unknown encoding {encoding!r}")
