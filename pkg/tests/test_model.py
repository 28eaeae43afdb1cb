import numpy as np
import pytest

from bwegan import nn
from bwegan.audio_io import AudioBuffer
from bwegan.dsp import RatioSpec, fft_resample
from bwegan.model import (
    DiscriminatorConfig,
    Discriminators,
    Generator,
    GeneratorConfig,
    MRFBlock,
    MultiPeriodDiscriminator,
    MultiScaleDiscriminator,
    PeriodDiscriminator,
    ResidualBranch,
    generator_forward,
    mpd_forward,
    mrf_block,
    msd_forward,
    receptive_field,
)
from bwegan.spectral import mel_spectrogram
from gradcheck import max_relative_error, numeric_grad

SMALL_G = GeneratorConfig(
    upsample_rates=(4, 4),
    upsample_kernel_sizes=(8, 8),
    initial_channels=8,
    mrf_kernel_sizes=(3, 5),
    mrf_dilations=((1, 3), (1, 2)),
    n_mels=6,
    hop=16,
)
SMALL_D = DiscriminatorConfig(
    mpd_periods=(2, 3),
    mpd_channels=(2, 4),
    msd_scales=2,
    msd_channels=(2, 4, 4),
    msd_kernel_sizes=(5, 5, 3),
    msd_strides=(1, 2, 1),
)


@pytest.fixture(autouse=True)
def float64():
    with nn.default_dtype(np.float64):
        yield


class TestGeneratorConfig:
    def test_defaults(self):
        cfg = GeneratorConfig()
        assert np.prod(cfg.upsample_rates) == 256 == cfg.hop
        assert cfg.n_mels == 80 and cfg.initial_channels == 32

    def test_full_width(self):
        assert GeneratorConfig.full_width().initial_channels == 512

    def test_round_trip_dict(self):
        cfg = GeneratorConfig()
        assert GeneratorConfig.from_dict(cfg.as_dict()) == cfg

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"upsample_rates": (8, 8, 2)},  # product 128
            {"upsample_kernel_sizes": (16, 16, 4)},
            {"upsample_kernel_sizes": (15, 16, 4, 4)},
            {"initial_channels": 20},
            {"mrf_dilations": ((1, 3, 5),)},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            GeneratorConfig(**kwargs)


class TestGenerator:
    @pytest.mark.parametrize("frames", [1, 10, 63])
    def test_length(self, frames):
        mel = np.random.default_rng(0).normal(size=(1, 80, frames))
        assert Generator(seed=0)(mel).shape == (1, 1, frames * 256)

    def test_batch(self):
        out = Generator(seed=0)(np.zeros((3, 80, 4)))
        assert out.shape == (3, 1, 1024)

    def test_zero_input_zero_final_layer(self):
        out = Generator(seed=0, zero_output=True)(np.zeros((1, 80, 5))).data
        assert np.max(np.abs(out)) < 1e-12

    def test_bounded(self):
        mel = np.random.default_rng(1).normal(size=(2, 80, 8)) * 5 - 5
        out = Generator(seed=3)(mel).data
        assert np.all(np.abs(out) < 1.0)

    def test_functional_form(self):
        gen = Generator(SMALL_G, seed=4)
        mel = np.random.default_rng(2).normal(size=(7, 6))  # (T, n_mels)
        a = generator_forward(mel, SMALL_G, gen.state_dict()).data
        b = gen(mel.T[None]).data
        np.testing.assert_array_equal(a, b)
        assert a.shape == (1, 1, 7 * 16)

    def test_wrong_mel_bands(self):
        with pytest.raises(ValueError):
            Generator(seed=0)(np.zeros((1, 40, 3)))

    def test_param_mismatch(self):
        state = Generator(SMALL_G).state_dict()
        state.pop(next(iter(state)))
        with pytest.raises(KeyError):
            generator_forward(np.zeros((2, 6)), SMALL_G, state)

    def test_channels_halve(self):
        gen = Generator(seed=0)
        widths = [up.weight.shape[1] for up in gen.ups]
        assert widths == [16, 8, 4, 2]

    @pytest.mark.parametrize("s", [2, 3, 4, 5, 6, 8])
    def test_shape_invariant_over_ratios(self, s):
        # narrowband of any ratio -> 16 kHz -> mel -> frames * 256 samples
        rate = RatioSpec(s, 16000).f_low
        n_low = int(16000 // s)
        x = np.random.default_rng(s).normal(size=n_low) * 0.1
        up = fft_resample(AudioBuffer(x, float(rate)), 16000)
        mel = mel_spectrogram(up).values.T[None]
        with nn.default_dtype(np.float32), nn.no_grad():
            out = Generator(seed=0)(mel.astype(np.float32))
        assert out.shape[2] == mel.shape[2] * 256


class TestMrf:
    def _zero(self, module):
        for p in module.parameters().values():
            p.data[:] = 0.0

    def test_zeroed_branches_pass_input(self):
        rng = np.random.default_rng(0)
        block = MRFBlock(4, (3, 7, 11), ((1, 3, 5),) * 3, rng)
        self._zero(block)
        x = rng.normal(size=(2, 4, 50))
        np.testing.assert_allclose(block(x).data, x, rtol=0, atol=1e-15)  # (3x)/3 rounding

    def test_single_zeroed_branch(self):
        rng = np.random.default_rng(1)
        branch = ResidualBranch(3, 5, (1, 2), rng)
        self._zero(branch)
        x = rng.normal(size=(1, 3, 20))
        np.testing.assert_array_equal(mrf_block(nn.Tensor(x), [branch]).data, x)

    def test_mean_of_branches(self):
        rng = np.random.default_rng(2)
        block = MRFBlock(2, (3, 5), ((1,), (2,)), rng)
        x = rng.normal(size=(1, 2, 30))
        expected = (block.branches[0](x).data + block.branches[1](x).data) / 2
        np.testing.assert_allclose(block(x).data, expected, rtol=0, atol=1e-15)

    def test_branch_order_irrelevant(self):
        rng = np.random.default_rng(3)
        block = MRFBlock(3, (3, 7, 11), ((1, 3, 5),) * 3, rng)
        x = rng.normal(size=(1, 3, 64))
        a = mrf_block(nn.Tensor(x), block.branches).data
        b = mrf_block(nn.Tensor(x), block.branches[::-1]).data
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)

    def test_shape_preserved(self):
        block = MRFBlock(4, (3, 7, 11), ((1, 3, 5),) * 3, np.random.default_rng(4))
        assert block(np.zeros((2, 4, 33))).shape == (2, 4, 33)

    @pytest.mark.parametrize("k,dil", [(11, (1, 3, 5)), (3, (1, 3, 5)), (7, (1, 2))])
    def test_receptive_field_by_impulse(self, k, dil):
        # positive weights make every path contribute, so the support of the
        # residual change to an impulse is exactly the receptive field
        rng = np.random.default_rng(5)
        branch = ResidualBranch(1, k, dil, rng)
        for name, p in branch.parameters().items():
            p.data[:] = 0.0 if name.endswith("bias") else np.abs(p.data) + 0.1
        n = 400
        x = np.zeros((1, 1, n))
        x[0, 0, n // 2] = 1.0
        delta = branch(x).data[0, 0] - x[0, 0]
        support = np.flatnonzero(np.abs(delta) > 0)
        width = support[-1] - support[0] + 1
        assert width == receptive_field(k, dil)

    def test_receptive_field_formula(self):
        assert receptive_field(11, (1, 3, 5)) == 121
        assert receptive_field(3, (1,)) == 5


class TestMpd:
    def test_fold_padding(self):
        d = PeriodDiscriminator(3, DiscriminatorConfig(), np.random.default_rng(0))
        folded = d.fold(nn.Tensor(np.arange(100.0).reshape(1, 1, 100)))
        assert folded.shape == (1, 1, 34, 3)
        # reflection: the two padded samples mirror the tail
        np.testing.assert_array_equal(folded.data.reshape(-1)[100:], [98.0, 97.0])

    def test_exact_multiple_not_padded(self):
        d = PeriodDiscriminator(5, DiscriminatorConfig(), np.random.default_rng(0))
        assert d.fold(nn.Tensor(np.zeros((2, 1, 100)))).shape == (2, 1, 20, 5)

    def test_feature_count(self):
        cfg = DiscriminatorConfig()
        out = mpd_forward(np.random.default_rng(1).normal(size=(1, 1, 600)), cfg)
        assert len(out.scores) == len(cfg.mpd_periods) == 5
        assert all(len(f) == cfg.mpd_layers for f in out.features)
        assert len(out.flat_features()) == 5 * cfg.mpd_layers

    def test_periodic_vs_shuffled(self):
        rng = np.random.default_rng(2)
        cfg = DiscriminatorConfig()
        mpd = MultiPeriodDiscriminator(cfg, np.random.default_rng(3))
        periodic = np.tile(rng.normal(size=3), 200)
        shuffled = rng.permutation(periodic)
        a = mpd(periodic).features[1]  # period 3
        b = mpd(shuffled).features[1]
        norms_a = [np.linalg.norm(f.data) for f in a]
        norms_b = [np.linalg.norm(f.data) for f in b]
        assert not np.allclose(norms_a, norms_b, rtol=1e-3)

    def test_too_short(self):
        with pytest.raises(ValueError):
            mpd_forward(np.zeros((1, 1, 11)), DiscriminatorConfig())

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            DiscriminatorConfig(mpd_periods=(2, 2))
        with pytest.raises(ValueError):
            DiscriminatorConfig(msd_scales=0)


def strided_length(n, strides):
    for s in strides:
        n = -(-n // s)  # same padding, odd kernels
    return n


class TestMsd:
    def test_score_lengths(self):
        cfg = DiscriminatorConfig()
        out = msd_forward(np.random.default_rng(0).normal(size=(1, 1, 4096)), cfg)
        lengths = [s.shape[1] for s in out.scores]
        pooled = [4096, (4096 + 4 - 4) // 2 + 1]
        pooled.append((pooled[1] + 4 - 4) // 2 + 1)
        assert lengths == [strided_length(n, cfg.msd_strides) for n in pooled] == [64, 33, 17]
        assert all(len(f) == cfg.msd_layers for f in out.features)

    def test_zero_input_finite(self):
        out = msd_forward(np.zeros((1, 1, 2048)), DiscriminatorConfig())
        assert all(np.all(np.isfinite(s.data)) for s in out.scores)
        assert all(np.all(np.isfinite(f.data)) for f in out.flat_features())

    def test_pooled_path(self):
        cfg = DiscriminatorConfig()
        msd = MultiScaleDiscriminator(cfg, np.random.default_rng(0))
        wave = nn.Tensor(np.random.default_rng(1).normal(size=(1, 1, 2048)))
        out = msd(wave)
        direct, _ = msd.discs[1](nn.avg_pool1d(wave, 4, 2, 2))
        np.testing.assert_array_equal(out.scores[1].data, direct.data)

    def test_too_short(self):
        with pytest.raises(ValueError):
            msd_forward(np.zeros((1, 1, 100)), DiscriminatorConfig())

    def test_total_layer_count(self):
        cfg = DiscriminatorConfig()
        out = Discriminators(cfg)(np.zeros((1, 1, 1024)))
        assert len(out.flat_features()) == cfg.total_layers == 5 * 6 + 3 * 8
        assert len(out.scores) == 8


class TestGradients:
    def test_every_parameter_gets_gradient(self):
        gen = Generator(SMALL_G, seed=0)
        disc = Discriminators(SMALL_D, seed=1)
        mel = np.random.default_rng(0).normal(size=(2, 6, 8))
        out = disc(gen(mel))
        loss = None
        for s in out.scores:
            term = nn.square(s).mean()
            loss = term if loss is None else loss + term
        nn.backward(loss)
        for name, p in {**gen.parameters(), **disc.parameters()}.items():
            assert p.grad is not None and np.any(p.grad != 0), name

    def test_generator_finite_differences(self):
        gen = Generator(SMALL_G, seed=1)
        mel = np.random.default_rng(1).normal(size=(1, 6, 3))
        weights = np.random.default_rng(2).normal(size=(1, 1, 48))
        params = gen.parameters()

        def scalar(name):
            def f(value):
                old = params[name].data
                params[name].data = value
                with nn.no_grad():
                    out = float(np.sum(gen(mel).data * weights))
                params[name].data = old
                return out

            return f

        nn.backward((gen(mel) * nn.Tensor(weights)).sum())
        for name in ("conv_pre.weight", "ups.1.weight", "mrfs.0.branches.1.convs1.1.weight", "conv_post.bias"):
            num = numeric_grad(scalar(name), [params[name].data.copy()], 0, h=1e-6)
            assert max_relative_error(params[name].grad, num) < 1e-4, name

    def test_discriminator_input_gradient(self):
        disc = Discriminators(SMALL_D, seed=2)
        x = np.random.default_rng(3).normal(size=(1, 1, 40))

        def f(wave):
            with nn.no_grad():
                out = disc(wave)
            return float(sum(np.sum(np.square(s.data)) for s in out.scores))

        wave = nn.parameter(x)
        out = disc(wave)
        loss = None
        for s in out.scores:
            loss = nn.square(s).sum() if loss is None else loss + nn.square(s).sum()
        nn.backward(loss)
        assert max_relative_error(wave.grad, numeric_grad(f, [x], 0, h=1e-6)) < 1e-4

    def test_state_dict_round_trip(self):
        a = Generator(SMALL_G, seed=5)
        b = Generator(SMALL_G, seed=6)
        b.load_state_dict(a.state_dict())
        mel = np.ones((1, 6, 2))
        np.testing.assert_array_equal(a(mel).data, b(mel).data)
