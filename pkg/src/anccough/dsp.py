"""Deterministic signal path: loading, rate conversion, windowing, normalization.

Channel convention used across the whole project: channel 0 is the feed-forward
(outer) microphone, channel 1 is the feedback (in-ear) microphone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.signal import oaconvolve

from . import wavio
from .errors import NonIntegerFactor, NotStereo, UnsupportedRate

SUPPORTED_RATES = (8000, 16000, 24000, 48000)

WINDOW_S = 0.5

# Decimation filter: Kaiser-windowed sinc, >= 60 dB stopband at the target
# Nyquist, passband edge at 0.45x the target rate.
_STOPBAND_DB = 60.0
_PASSBAND_EDGE = 0.45

_CONSTANT_CHANNEL_STD = 1e-8


@dataclass
class DualChannelRecording:
    """Time-aligned two-channel sample buffers with rate metadata."""

    samples_ff: np.ndarray
    samples_fb: np.ndarray
    sample_rate_hz: int
    source_id: str = ""

    def __post_init__(self) -> None:
        self.samples_ff = np.asarray(self.samples_ff, dtype=np.float32)
        self.samples_fb = np.asarray(self.samples_fb, dtype=np.float32)
        if self.samples_ff.ndim != 1 or self.samples_fb.ndim != 1:
            raise ValueError("channel buffers must be one-dimensional")
        if len(self.samples_ff) != len(self.samples_fb):
            raise ValueError("channel buffers must have identical length")
        if self.sample_rate_hz not in SUPPORTED_RATES:
            raise UnsupportedRate(f"rate {self.sample_rate_hz} not in {SUPPORTED_RATES}")
        if not (np.isfinite(self.samples_ff).all() and np.isfinite(self.samples_fb).all()):
            raise ValueError("samples must be finite")

    def __len__(self) -> int:
        return len(self.samples_ff)

    @property
    def duration_s(self) -> float:
        return len(self.samples_ff) / self.sample_rate_hz

    def stacked(self) -> np.ndarray:
        """Both channels as a (2, n) array, feed-forward first."""
        return np.stack([self.samples_ff, self.samples_fb])


@dataclass
class DualChannelWindow:
    """One 0.5 s two-channel clip, the unit of classification."""

    data: np.ndarray  # (2, L) with L = sample_rate_hz // 2
    sample_rate_hz: int
    source_id: str = ""
    start_s: float = 0.0
    normalized: bool = field(default=False)

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float32)
        expected = (2, self.sample_rate_hz // 2)
        if self.data.shape != expected:
            raise ValueError(f"window shape {self.data.shape} != {expected}")

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


def load_recording(path: str | Path) -> DualChannelRecording:
    """Load a stereo WAV file as a dual-channel recording.

    File channel 0 maps to the feed-forward mic, channel 1 to the feedback mic.
    """
    frames, rate = wavio.read_wav(path)
    if frames.shape[1] != 2:
        raise NotStereo(f"{path}: {frames.shape[1]} channels, need 2")
    if rate not in SUPPORTED_RATES:
        raise UnsupportedRate(f"{path}: rate {rate} not in {SUPPORTED_RATES}")
    return DualChannelRecording(
        samples_ff=frames[:, 0],
        samples_fb=frames[:, 1],
        sample_rate_hz=rate,
        source_id=str(path),
    )


def save_recording(rec: DualChannelRecording, path: str | Path, encoding: str = "int16") -> None:
    """Write a recording as a stereo WAV file (feed-forward = channel 0)."""
    wavio.write_wav(path, rec.stacked().T, rec.sample_rate_hz, encoding=encoding)


def design_decimation_taps(factor: int) -> np.ndarray:
    """Kaiser-windowed sinc lowpass for integer decimation by `factor`.

    Cutoff sits at 0.45/factor cycles per input sample; the transition band ends
    at the target Nyquist (0.5/factor) with >= 60 dB attenuation beyond it.
    Odd length, so the group delay is an integer number of samples.
    """
    cutoff = _PASSBAND_EDGE / factor
    transition = (0.5 - _PASSBAND_EDGE) / factor
    beta = 0.1102 * (_STOPBAND_DB - 8.7)
    n_taps = int(np.ceil((_STOPBAND_DB - 7.95) / (14.36 * transition))) + 1
    if n_taps % 2 == 0:
        n_taps += 1
    m = (n_taps - 1) / 2
    n = np.arange(n_taps)
    taps = 2.0 * cutoff * np.sinc(2.0 * cutoff * (n - m)) * np.kaiser(n_taps, beta)
    return taps / taps.sum()


def decimate(rec: DualChannelRecording, target_rate_hz: int) -> DualChannelRecording:
    """Anti-aliased integer-factor decimation of both channels.

    The FIR is linear phase and applied with centered "same" convolution, so the
    group delay is already compensated; the output keeps every factor-th sample
    and has length floor(n / factor).
    """
    if target_rate_hz <= 0 or rec.sample_rate_hz % target_rate_hz != 0:
        raise NonIntegerFactor(
            f"target {target_rate_hz} does not divide {rec.sample_rate_hz}"
        )
    factor = rec.sample_rate_hz // target_rate_hz
    if factor == 1:
        return DualChannelRecording(
            rec.samples_ff.copy(), rec.samples_fb.copy(), rec.sample_rate_hz, rec.source_id
        )
    taps = design_decimation_taps(factor)
    out_len = len(rec) // factor

    def one(channel: np.ndarray) -> np.ndarray:
        filtered = oaconvolve(channel.astype(np.float64), taps, mode="same")
        return filtered[::factor][:out_len].astype(np.float32)

    return DualChannelRecording(
        one(rec.samples_ff), one(rec.samples_fb), target_rate_hz, rec.source_id
    )


def slice_windows(rec: DualChannelRecording, hop_s: float = WINDOW_S) -> list[DualChannelWindow]:
    """Cut a recording into 0.5 s windows; a short trailing remainder is dropped.

    The default hop equals the window length, i.e. back-to-back non-overlapping
    windows; smaller hops give overlap.
    """
    length = rec.sample_rate_hz // 2
    hop = max(1, round(hop_s * rec.sample_rate_hz))
    data = rec.stacked()
    windows = []
    for start in range(0, len(rec) - length + 1, hop):
        windows.append(
            DualChannelWindow(
                data=data[:, start:start + length].copy(),
                sample_rate_hz=rec.sample_rate_hz,
                source_id=rec.source_id,
                start_s=start / rec.sample_rate_hz,
            )
        )
    return windows


def normalize(win: DualChannelWindow) -> DualChannelWindow:
    """Shift each channel to zero mean and scale to unit standard deviation.

    A nearly constant channel (std < 1e-8) becomes all zeros instead of
    blowing up. Statistics are computed in float64 so the result is idempotent
    well inside float32 resolution.
    """
    data = win.data.astype(np.float64)
    out = np.zeros_like(data)
    for ch in range(2):
        sd = data[ch].std()
        if sd >= _CONSTANT_CHANNEL_STD:
            out[ch] = (data[ch] - data[ch].mean()) / sd
    return replace(win, data=out.astype(np.float32), normalized=True)
