"""Generator tests: cough synthesis, channel rendering, dataset invariants."""

import numpy as np
import pytest

from anccough import synth
from anccough.dsp import load_recording
from anccough.synth import (
    ENV_COUGH_LABEL,
    SUBJECT_COUGH_LABELS,
    AnnotatedSegment,
    ChannelModel,
    DatasetManifest,
    GeneratorConfig,
    generate_noise_pool,
    read_annotations,
    read_manifest,
    render_environment,
    render_subject,
    synth_cough,
    write_annotations,
    write_manifest,
)


def band_noise_48k(n, lo, hi, seed=0, tilted=False):
    """Band-limited noise probe; tilted=True mimics the cough reference
    spectrum the environmental isolation is normalized over."""
    rng = np.random.default_rng(seed)
    freqs = np.fft.rfftfreq(n, 1 / 48000)
    band = (freqs >= lo) & (freqs <= hi)
    spec = np.zeros(len(freqs), complex)
    spec[band] = rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum())
    if tilted:
        spec[band] *= 1.0 / (1.0 + (freqs[band] / 900.0) ** 1.1)
    x = np.fft.irfft(spec, n)
    return (0.3 * x / np.abs(x).max()).astype(np.float32)


def rms(x):
    return float(np.sqrt(np.mean(np.square(np.asarray(x, np.float64)))))


# --- cough synthesis ---

def test_cough_band_energy():
    x = synth_cough(0.384, 48000, np.random.default_rng(5))
    spec = np.abs(np.fft.rfft(x.astype(np.float64))) ** 2
    freqs = np.fft.rfftfreq(len(x), 1 / 48000)
    in_band = spec[(freqs >= 350) & (freqs <= 4000)].sum()
    assert in_band / spec.sum() >= 0.95


def test_cough_deterministic():
    a = synth_cough(0.4, 48000, np.random.default_rng(8))
    b = synth_cough(0.4, 48000, np.random.default_rng(8))
    assert np.array_equal(a, b)


def test_cough_peak_range():
    for seed in range(5):
        x = synth_cough(0.5, 48000, np.random.default_rng(seed))
        assert 0.3 <= np.abs(x).max() <= 0.9


def test_cough_duration_bounds():
    with pytest.raises(ValueError):
        synth_cough(0.05, 48000, np.random.default_rng(0))
    with pytest.raises(ValueError):
        synth_cough(2.5, 48000, np.random.default_rng(0))


def test_cough_envelope_scales_with_duration():
    def t20(duration):
        y = np.abs(synth_cough(duration, 48000, np.random.default_rng(9)))
        k = max(1, len(y) // 200)
        env = np.convolve(y, np.ones(k) / k, mode="same")
        above = np.nonzero(env >= 0.1 * env.max())[0]
        return above[-1] / 48000

    ratio = t20(1.0) / t20(0.1)
    assert 8.0 <= ratio <= 12.0


# --- channel rendering ---

def test_render_subject_silence_and_level():
    model = ChannelModel()
    silent = np.zeros(4800, np.float32)
    out = render_subject(silent, model, np.random.default_rng(0))
    assert np.abs(out).max() < 1e-9
    x = band_noise_48k(48000, 350, 4000, seed=1)
    out = render_subject(x, model, np.random.default_rng(1))
    assert np.array_equal(out[0], x)
    assert rms(out[1]) >= rms(out[0])


def test_render_subject_shelf_boosts_lows_more():
    model = ChannelModel()
    t = np.arange(48000) / 48000
    low = np.sin(2 * np.pi * 200 * t).astype(np.float32)
    high = np.sin(2 * np.pi * 2000 * t).astype(np.float32)
    out_low = render_subject(low, model, np.random.default_rng(2))
    out_high = render_subject(high, model, np.random.default_rng(2))
    gain_low = rms(out_low[1]) / rms(out_low[0])
    gain_high = rms(out_high[1]) / rms(out_high[0])
    assert gain_low > gain_high


def test_render_environment_isolation_interval():
    model = ChannelModel()
    x = band_noise_48k(48000, 350, 4000, seed=3, tilted=True)
    for seed in range(8):
        out = render_environment(x, model, np.random.default_rng(seed))
        diff_db = 20 * np.log10(rms(out[0]) / rms(out[1]))
        assert 13.0 <= diff_db <= 32.0  # drawn from [15, 30]; comb ripple slack


def test_render_environment_silence():
    out = render_environment(np.zeros(4800, np.float32), ChannelModel(),
                             np.random.default_rng(0))
    assert np.abs(out).max() < 1e-9


def test_render_environment_lowpass_ordering():
    # narrowband noise probes; averaged over draws to wash out comb ripple
    model = ChannelModel()
    low = band_noise_48k(48000, 250, 350, seed=4)
    high = band_noise_48k(48000, 2800, 3300, seed=5)
    atten_low, atten_high = [], []
    for seed in range(6):
        out_l = render_environment(low, model, np.random.default_rng(seed))
        out_h = render_environment(high, model, np.random.default_rng(seed))
        atten_low.append(rms(out_l[0]) / rms(out_l[1]))
        atten_high.append(rms(out_h[0]) / rms(out_h[1]))
    assert np.mean(atten_high) > np.mean(atten_low)


def test_render_environment_fixed_isolation():
    model = ChannelModel()
    x = band_noise_48k(48000, 350, 4000, seed=6, tilted=True)
    out = render_environment(x, model, np.random.default_rng(3), isolation_db=20.0)
    diff_db = 20 * np.log10(rms(out[0]) / rms(out[1]))
    assert abs(diff_db - 20.0) < 2.5


def test_channel_model_validation():
    with pytest.raises(ValueError):
        ChannelModel(env_isolation_db=(5.0, 30.0))
    with pytest.raises(ValueError):
        ChannelModel(env_isolation_db=(30.0, 15.0))


# --- noise pool ---

def test_noise_pool_shapes_and_determinism():
    pool1 = generate_noise_pool(4, 8000, seed=3)
    pool2 = generate_noise_pool(4, 8000, seed=3)
    assert len(pool1) == 4
    for a, b in zip(pool1, pool2):
        assert a.data.shape == (2, 4000)
        assert np.array_equal(a.data, b.data)


# --- annotations and manifest ---

def test_annotation_round_trip(tmp_path):
    segs = [
        AnnotatedSegment(0.5, 1.0, "single_cough_sitting"),
        AnnotatedSegment(2.25, 3.5, "environmental_cough"),
    ]
    path = tmp_path / "a.tsv"
    write_annotations(segs, path)
    assert read_annotations(path) == segs


def test_annotation_validation():
    with pytest.raises(ValueError):
        AnnotatedSegment(1.0, 0.5, "laughing")
    with pytest.raises(ValueError):
        AnnotatedSegment(0.0, 1.0, "sneeze")


def test_manifest_round_trip(small_dataset, tmp_path):
    _, manifest = small_dataset
    path = tmp_path / "m.json"
    write_manifest(manifest, path)
    assert read_manifest(path) == manifest


# --- generated dataset properties ---

def test_dataset_layout(small_dataset):
    root, manifest = small_dataset
    assert isinstance(manifest, DatasetManifest)
    assert len(manifest.entries) == 3 * 3 * 10
    assert manifest.user_ids() == [0, 1, 2]
    for e in manifest.entries:
        assert (root / e.wav_path).exists()
        assert (root / e.annotation_path).exists()
        assert e.environment in ("quiet", "noisy", "env_cough")
        assert e.posture in ("sitting", "walking")


def test_dataset_channel_separability(small_dataset):
    root, manifest = small_dataset
    n_subj = n_env = 0
    for e in manifest.entries:
        rec = load_recording(root / e.wav_path)
        data = rec.stacked()
        for s in read_annotations(root / e.annotation_path):
            i0 = int(s.start_s * rec.sample_rate_hz)
            i1 = int(s.end_s * rec.sample_rate_hz)
            level = np.sqrt(np.mean(data[:, i0:i1].astype(np.float64) ** 2, axis=1))
            if s.label in SUBJECT_COUGH_LABELS:
                n_subj += 1
                assert level[1] >= level[0]
            elif s.label == ENV_COUGH_LABEL:
                n_env += 1
                assert 20 * np.log10(level[0] / level[1]) >= 10.0
    assert n_subj > 0 and n_env > 0


def test_dataset_cough_energy_over_background(small_dataset):
    root, manifest = small_dataset
    checked = 0
    for e in manifest.entries:
        rec = load_recording(root / e.wav_path)
        rate = rec.sample_rate_hz
        ff = rec.samples_ff.astype(np.float64)
        anns = read_annotations(root / e.annotation_path)
        for s in anns:
            if s.label not in SUBJECT_COUGH_LABELS and s.label != ENV_COUGH_LABEL:
                continue
            i0, i1 = int(s.start_s * rate), int(s.end_s * rate)
            inside = np.mean(ff[i0:i1] ** 2)
            adjacent = []
            for a0, a1 in ((i0 - rate // 4, i0), (i1, i1 + rate // 4)):
                a0, a1 = max(0, a0), min(len(ff), a1)
                span = (a0 / rate, a1 / rate)
                if a1 > a0 and not any(
                    o.overlap_s(*span) > 0 for o in anns if o is not s
                ):
                    adjacent.append(ff[a0:a1])
            if not adjacent:
                continue
            bg = np.mean(np.concatenate(adjacent) ** 2)
            assert 10 * np.log10(inside / bg) >= 10.0
            checked += 1
    assert checked > 10


def test_dataset_deterministic(tmp_path):
    cfg = GeneratorConfig()
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    synth.generate_dataset(a_dir, n_users=1, seed=5, config=cfg)
    synth.generate_dataset(b_dir, n_users=1, seed=5, config=cfg)
    a_files = sorted(p.relative_to(a_dir) for p in a_dir.rglob("*") if p.is_file())
    b_files = sorted(p.relative_to(b_dir) for p in b_dir.rglob("*") if p.is_file())
    assert a_files == b_files
    for rel in a_files:
        assert (a_dir / rel).read_bytes() == (b_dir / rel).read_bytes()


def test_dataset_rejects_bad_user_count(tmp_path):
    with pytest.raises(ValueError):
        synth.generate_dataset(tmp_path, n_users=0, seed=0)
