from fractions import Fraction

import numpy as np
import pytest
import scipy.signal

from bwegan.audio_io import AudioBuffer
from bwegan.dsp import (
    RatioSpec,
    SosFilter,
    decimate,
    design_cheby1_lowpass,
    fft_resample,
    frequency_response,
    sosfiltfilt,
)


def sine(freq, rate, n, amp=0.5, phase=0.3):
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * np.arange(n) / rate + phase), rate)


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def fitted_amplitude(x, freq, rate):
    """Least-squares amplitude of a sinusoid at ``freq`` (oracle for gain checks)."""
    t = np.arange(len(x)) / rate
    basis = np.stack([np.sin(2 * np.pi * freq * t), np.cos(2 * np.pi * freq * t)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, x, rcond=None)
    return float(np.hypot(*coef))


def bandlimited(n, fraction, rng, level=0.1):
    """Random real signal with energy only below ``fraction`` of Nyquist."""
    k = np.arange(n // 2 + 1)
    spec = np.zeros(n // 2 + 1, dtype=complex)
    keep = (k > 0) & (k < fraction * n / 2)
    spec[keep] = rng.normal(size=keep.sum()) + 1j * rng.normal(size=keep.sum())
    x = np.fft.irfft(spec, n)
    return x * (level / rms(x))


class TestDesign:
    def test_dc_within_ripple(self):
        f = design_cheby1_lowpass(8, 0.05, 0.4)
        assert abs(20 * np.log10(abs(frequency_response(f, [0.0])[0]))) <= 0.05

    def test_half_nyquist_attenuation(self):
        f = design_cheby1_lowpass(8, 0.05, 0.4)
        h = np.abs(frequency_response(f, [0.0, 0.5]))
        assert 20 * np.log10(h[1] / h[0]) <= -30.0

    def test_passband_ripple_bound(self):
        f = design_cheby1_lowpass(8, 0.05, 0.4)
        db = 20 * np.log10(np.abs(frequency_response(f, np.linspace(0, 0.4, 500))))
        assert db.max() - db.min() <= 0.05 + 1e-9

    def test_monotone_stopband(self):
        f = design_cheby1_lowpass(8, 0.05, 0.4)
        mag = np.abs(frequency_response(f, np.linspace(0.41, 0.999, 400)))
        assert np.all(np.diff(mag) < 0)

    def test_stable_and_shaped(self):
        f = design_cheby1_lowpass()
        assert f.sections.shape == (4, 6) and f.order == 8
        assert np.max(np.abs(f.poles())) < 1.0 and f.is_stable()
        np.testing.assert_array_equal(f.sections[:, 3], 1.0)

    def test_response_matches_scipy(self):
        # independent evaluation of the same sections
        f = design_cheby1_lowpass(cutoff=0.2)
        w, h = scipy.signal.sosfreqz(f.sections, worN=256)
        np.testing.assert_allclose(frequency_response(f, w / np.pi), h, rtol=1e-9, atol=1e-12)

    def test_deterministic(self):
        a = design_cheby1_lowpass(cutoff=0.3).sections
        b = design_cheby1_lowpass(cutoff=0.3).sections
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize("kwargs", [{"cutoff": 0.0}, {"cutoff": 1.0}, {"ripple_db": 0.0}, {"order": 7}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            design_cheby1_lowpass(**kwargs)

    def test_sos_shape_validation(self):
        with pytest.raises(ValueError):
            SosFilter(np.zeros((2, 5)), 4, 0.05, 0.4)
        with pytest.raises(ValueError):
            SosFilter(np.zeros((2, 6)), 8, 0.05, 0.4)


class TestFiltfilt:
    def test_dc_preserved(self):
        out = sosfiltfilt(design_cheby1_lowpass(), AudioBuffer(np.full(2000, 0.3), 16000)).samples
        assert np.max(np.abs(out / 0.3 - 1)) < 1e-3

    def test_rejects_high_sine(self):
        x = sine(0.9 * 8000, 16000, 16000, phase=0.0)
        out = sosfiltfilt(design_cheby1_lowpass(cutoff=0.4), x)
        assert len(out) == len(x)
        assert rms(out.samples) < 0.01 * rms(x.samples)

    def test_high_sine_interior_any_phase(self):
        # Odd padding pins each end to the edge sample, so a nonzero start
        # leaves a short transient; away from the ends rejection is total.
        x = sine(0.9 * 8000, 16000, 8000, phase=0.3)
        out = sosfiltfilt(design_cheby1_lowpass(cutoff=0.4), x).samples
        assert rms(out[200:-200]) < 1e-4 * rms(x.samples)

    def test_time_reversal_symmetry(self):
        x = np.random.default_rng(0).normal(size=4000)
        f = design_cheby1_lowpass()
        fwd = sosfiltfilt(f, AudioBuffer(x, 16000)).samples
        rev = sosfiltfilt(f, AudioBuffer(x[::-1], 16000)).samples[::-1]
        # identical away from the padded edges
        assert np.max(np.abs(fwd[500:-500] - rev[500:-500])) < 1e-12

    def test_zero_phase(self):
        x = sine(500, 16000, 8000)
        out = sosfiltfilt(design_cheby1_lowpass(), x).samples
        mid = slice(1000, 7000)
        assert np.max(np.abs(out[mid] - x.samples[mid])) < 0.01 * 0.5

    def test_too_short(self):
        with pytest.raises(ValueError):
            sosfiltfilt(design_cheby1_lowpass(), AudioBuffer(np.zeros(24), 16000))


class TestDecimate:
    def test_length_and_rate(self):
        out = decimate(AudioBuffer(np.zeros(16000), 16000), 2)
        assert len(out) == 8000 and out.sample_rate == 8000

    @pytest.mark.parametrize("n,s", [(16001, 2), (16003, 4), (1001, 8), (999, 3)])
    def test_floor_length(self, n, s):
        assert len(decimate(AudioBuffer(np.zeros(n), 16000), s)) == n // s

    def test_1khz_survives(self):
        out = decimate(sine(1000, 16000, 16000), 2)
        mid = out.samples[400:-400]
        assert abs(fitted_amplitude(mid, 1000, 8000) / 0.5 - 1) < 0.01

    def test_7khz_removed(self):
        x = sine(7000, 16000, 16000)
        assert rms(decimate(x, 2).samples) < 0.02 * rms(x.samples)

    @pytest.mark.parametrize("s", [2, 3, 4, 8])
    def test_nyquist_invariant(self, s):
        # forward-backward magnitude |H|^2 above the new band edge, as power
        f = design_cheby1_lowpass(cutoff=0.8 / s)
        h = np.abs(frequency_response(f, np.linspace(1 / s, 1, 4000))) ** 2
        assert 20 * np.log10(h.max()) <= -40.0

    def test_non_integer_rejected(self):
        with pytest.raises(ValueError):
            decimate(AudioBuffer(np.zeros(1000), 16000), 2.5)

    def test_rate_mismatch(self):
        with pytest.raises(ValueError):
            decimate(AudioBuffer(np.zeros(1000), 8000), RatioSpec(2, 16000))

    def test_inverse_of_fft_upsampling(self):
        rng = np.random.default_rng(1)
        for s in (2, 4):
            x = bandlimited(16000 // s, 0.5, rng)
            up = fft_resample(AudioBuffer(x, 16000 // s), 16000)
            back = decimate(up, s)
            assert rms(back.samples - x) < 1e-3


class TestFftResample:
    def test_sine_upsampled(self):
        up = fft_resample(sine(1000, 8000, 8000), 16000)
        ref = 0.5 * np.sin(2 * np.pi * 1000 * np.arange(16000) / 16000 + 0.3)
        assert len(up) == 16000 and up.sample_rate == 16000
        assert np.corrcoef(up.samples, ref)[0, 1] > 0.999

    @pytest.mark.parametrize("n,src,dst", [(8000, 8000, 16000), (1001, 8000, 16000), (5333, 16000 / 3, 16000), (999, 16000, 44100)])
    def test_length(self, n, src, dst):
        assert len(fft_resample(AudioBuffer(np.zeros(n), src), dst)) == round(n * dst / src)

    @pytest.mark.parametrize("n", [4000, 4001])
    def test_round_trip(self, n):
        x = np.random.default_rng(n).normal(size=n)
        up = fft_resample(AudioBuffer(x, 8000), 24000)
        back = fft_resample(up, 8000)
        assert rms(back.samples - x) < 1e-6

    def test_white_noise_band_empty(self):
        x = np.random.default_rng(2).normal(size=4000)
        up = fft_resample(AudioBuffer(x, 8000), 16000).samples
        power = np.abs(np.fft.rfft(up)) ** 2
        k = np.arange(len(power))
        above = power[k > 2000].sum()
        below = power[k < 2000].sum()
        assert above <= below * 1e-6

    def test_shared_band_power(self):
        x = bandlimited(4000, 0.9, np.random.default_rng(3))
        up = fft_resample(AudioBuffer(x, 8000), 16000).samples
        assert abs(np.mean(up**2) / np.mean(x**2) - 1) < 1e-3

    def test_downsample_keeps_low_band(self):
        x = sine(1000, 16000, 16000)
        down = fft_resample(x, 8000)
        assert abs(fitted_amplitude(down.samples, 1000, 8000) - 0.5) < 1e-9

    def test_errors(self):
        with pytest.raises(ValueError):
            fft_resample(AudioBuffer([], 8000), 16000)
        with pytest.raises(ValueError):
            fft_resample(AudioBuffer([1.0], 8000), 0)


class TestRatioSpec:
    def test_exact_relation(self):
        r = RatioSpec(3, 16000)
        assert r.f_low == Fraction(16000, 3)
        assert r.f_high == r.s * r.f_low
        assert r.b_high == r.s * r.b_low and r.b_low == r.f_low / 2

    def test_integer_flags(self):
        assert RatioSpec(4).is_integer and not RatioSpec(2.5).is_integer
        assert RatioSpec(2.5).f_low == 6400

    def test_invalid(self):
        with pytest.raises(ValueError):
            RatioSpec(1)
