"""Shared fixtures: small synthetic datasets and windows, built once per session."""

from __future__ import annotations

import numpy as np
import pytest

from anccough import synth
from anccough.dsp import DualChannelRecording, DualChannelWindow


def make_window(rate_hz: int = 8000, seed: int = 0, scale: float = 0.5) -> DualChannelWindow:
    rng = np.random.default_rng(seed)
    data = (scale * rng.standard_normal((2, rate_hz // 2))).astype(np.float32)
    return DualChannelWindow(data=data, sample_rate_hz=rate_hz, source_id=f"seed{seed}")


def make_recording(duration_s: float, rate_hz: int = 8000, seed: int = 0,
                   scale: float = 0.3) -> DualChannelRecording:
    rng = np.random.default_rng(seed)
    n = round(duration_s * rate_hz)
    return DualChannelRecording(
        samples_ff=(scale * rng.standard_normal(n)).astype(np.float32),
        samples_fb=(scale * rng.standard_normal(n)).astype(np.float32),
        sample_rate_hz=rate_hz,
        source_id=f"rec{seed}",
    )


def sine_recording(freq_hz: float, rate_hz: int, duration_s: float = 1.0,
                   amp: float = 0.5) -> DualChannelRecording:
    t = np.arange(round(rate_hz * duration_s)) / rate_hz
    x = (amp * np.sin(2 * np.pi * freq_hz * t)).astype(np.float32)
    return DualChannelRecording(x, x.copy(), rate_hz, source_id=f"sine{freq_hz}")


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Three-user synthetic dataset shared by pipeline/cli tests."""
    root = tmp_path_factory.mktemp("smallds")
    manifest = synth.generate_dataset(root, n_users=3, seed=7)
    return root, manifest
