import numpy as np
import pytest

from binse.config import RunConfig
from binse.params import init_random
from binse.profiler import (
    ComplexityReport,
    count_macs,
    count_params,
    full_report,
    measure_rtf,
)
from conftest import small_config


def manual_param_count(model):
    """Independent oracle: walk the tensor directory, complex counts double."""
    total = 0
    for arr in model.tensors.values():
        total += arr.size * (2 if np.iscomplexobj(arr) else 1)
    return total


class TestCountParams:
    def test_matches_tensor_walk_oracle(self):
        for cfg in [small_config(), small_config(channels=16), RunConfig()]:
            model = init_random(cfg, seed=0)
            report = count_params(model)
            assert report.n_params == manual_param_count(model)
            report.check_totals()

    def test_rows_cover_the_three_modules(self):
        report = count_params(init_random(small_config(), seed=0))
        assert set(report.param_rows) == {"encoder", "modulator", "decoder"}
        assert all(v > 0 for v in report.param_rows.values())

    def test_default_architecture_hits_budget(self):
        """Total must sit within 10% of the 129.0K reference budget."""
        report = count_params(init_random(RunConfig(), seed=0))
        assert 116_000 <= report.n_params <= 142_000
        assert report.n_params == 127_649

    def test_independent_of_seed(self):
        cfg = small_config()
        a = count_params(init_random(cfg, seed=1))
        b = count_params(init_random(cfg, seed=2))
        assert a.n_params == b.n_params

    def test_scales_quadratically_in_channels(self):
        p8 = count_params(init_random(small_config(channels=8), seed=0)).n_params
        p16 = count_params(init_random(small_config(channels=16), seed=0)).n_params
        p32 = count_params(init_random(small_config(channels=32), seed=0)).n_params
        # second difference of a quadratic is constant-positive and dominates
        assert (p32 - p16) > 2 * (p16 - p8)


class TestCountMacs:
    def test_default_architecture_hits_budget(self):
        """One second of audio within 20% of the 2.79 GMAC reference."""
        report = count_macs(RunConfig(), audio_seconds=1.0)
        assert 2.2e9 <= report.macs <= 3.4e9
        report.check_totals()

    def test_affine_in_duration(self):
        """Frame-linear terms dominate: equal frame increments add equal MACs."""
        cfg = RunConfig()
        m1 = count_macs(cfg, 1.0).macs
        m2 = count_macs(cfg, 2.0).macs
        m3 = count_macs(cfg, 3.0).macs
        assert (m3 - m2) == (m2 - m1)
        assert m2 > m1 > 0

    def test_no_gafm_zeroes_the_modulator_row(self):
        cfg = small_config(no_gafm=True)
        report = count_macs(cfg)
        assert report.mac_rows["modulator"] == 0
        full = count_macs(small_config())
        assert full.mac_rows["modulator"] > 0
        assert report.mac_rows["encoder"] == full.mac_rows["encoder"]
        assert report.mac_rows["decoder"] == full.mac_rows["decoder"]

    def test_encoder_row_matches_hand_derivation_tiny_case(self):
        """Close the loop on the counting conventions with a 1-block config."""
        cfg = small_config(channels=4, n_encoder_blocks=1, n_gammatone=4)
        report = count_macs(cfg, audio_seconds=1.0)
        a = cfg.analysis
        t = (a.sample_rate - a.fft_size) // a.hop + 1
        f = a.n_freq_bins
        c, ng, k1 = 4, 4, cfg.kernel_time
        expected = 0
        expected += (2 * k1 + 2 * c) * f * t * 4        # STFT stream block
        expected += (2 * k1 + 2 * c) * ng * t * 4       # gammatone stream block
        expected += c * f * ng * t * 2                  # real projection of complex data
        expected += c * c * f * t                       # fusion conv on magnitudes
        expected += 2 * c * (c // cfg.se_reduction)     # SE excitation
        assert report.mac_rows["encoder"] == expected

    def test_decoder_row_matches_hand_derivation_tiny_case(self):
        cfg = small_config(channels=4, n_decoder_blocks=1)
        report = count_macs(cfg, audio_seconds=1.0)
        a = cfg.analysis
        t = (a.sample_rate - a.fft_size) // a.hop + 1
        f = a.n_freq_bins
        c = 4
        kf, kt = cfg.kernel_2d
        per_head = (c * kf * kt + c * c) * f * t * 4 + c * f * t * 4
        assert report.mac_rows["decoder"] == 2 * per_head + c * f


class TestMeasureRtf:
    def test_small_model_is_fast_and_positive(self):
        cfg = small_config()
        model = init_random(cfg, seed=0)
        rtf = measure_rtf(model, cfg, repeats=3, warmup=1)
        assert 0.0 < rtf < 1.0

    def test_reports_per_second_of_audio(self, rng):
        from binse.audio import Waveform

        cfg = small_config()
        model = init_random(cfg, seed=0)
        wav = Waveform(0.1 * rng.standard_normal((2, 16000)), 16000)
        rtf = measure_rtf(model, cfg, wav=wav, repeats=3, warmup=1)
        assert rtf > 0.0


class TestFullReport:
    def test_combines_rows_consistently(self):
        cfg = small_config()
        model = init_random(cfg, seed=0)
        report = full_report(model, cfg, audio_seconds=2.0)
        report.check_totals()
        assert report.audio_seconds == 2.0
        assert report.rtf is None
        assert report.n_params == count_params(model).n_params
        assert report.macs == count_macs(cfg, 2.0).macs

    def test_with_rtf(self):
        cfg = small_config()
        model = init_random(cfg, seed=0)
        report = full_report(model, cfg, with_rtf=True, repeats=2)
        assert report.rtf is not None and report.rtf > 0

    def test_check_totals_catches_inconsistency(self):
        bad = ComplexityReport(n_params=10, param_rows={"encoder": 5})
        with pytest.raises(AssertionError):
            bad.check_totals()
