from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from mixadc.baseline import LmmseConfig
from mixadc.channel import ChannelModelConfig, default_grid
from mixadc.config import ExperimentConfig
from mixadc.frontend import QuantizerSpec


class TestDefaults:
    def test_values(self):
        cfg = ExperimentConfig()
        assert (cfg.channel.M, cfg.channel.L, cfg.channel.sigma_alpha_sq) == (64, 8, 1.0)
        assert (cfg.n_train, cfg.n_val, cfg.n_test) == (90_000, 10_000, 10_000)
        t = cfg.training
        assert (t.epochs, t.learning_rate, t.batch_size) == (100, 1e-3, 128)
        assert cfg.c == 3.0
        assert cfg.snr_db == (0, 5, 10, 15, 20, 25, 30)

    def test_desk_preset(self):
        cfg = ExperimentConfig().with_preset("desk")
        assert (cfg.n_train, cfg.n_val, cfg.n_test, cfg.training.epochs) == (20_000, 2_000, 2_000, 50)

    @pytest.mark.parametrize("kw", [{"pattern": "diag"}, {"eta": (1.5,)}, {"methods": ("gamp",)},
                                    {"n_test": -1}, {"c": 0.0}, {"test_aoa": "x"}])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw)


class TestRoundTrip:
    def test_default(self):
        cfg = ExperimentConfig()
        assert ExperimentConfig.loads(cfg.dumps()) == cfg

    def test_customized(self):
        cfg = ExperimentConfig(
            channel=ChannelModelConfig(M=16, L=2, aoa_grid=default_grid(12, 0.1),
                                       aoa_sampling="grid-with-replacement"),
            snr_db=(3.0,), eta=(0.1, 0.9), pattern="random",
            quantizer=QuantizerSpec(bits_low=2, bits_high=8),
            lmmse=LmmseConfig(mode="paper-literal"), methods=("ls", "sip"), seed=2 ** 63 + 5,
            test_aoa="shifted")
        text = cfg.dumps()
        assert ExperimentConfig.loads(text) == cfg
        assert ExperimentConfig.loads(text).dumps() == text

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2 ** 64 - 1), snrs=st.lists(st.integers(-10, 40), min_size=1),
           eta=st.floats(0, 1), bits=st.integers(1, 4), epochs=st.integers(0, 500))
    def test_property(self, seed, snrs, eta, bits, epochs):
        base = ExperimentConfig()
        cfg = replace(base, seed=seed, snr_db=tuple(snrs), eta=(eta,),
                      quantizer=QuantizerSpec(bits_low=bits),
                      training=replace(base.training, epochs=epochs))
        assert ExperimentConfig.loads(cfg.dumps()) == cfg

    def test_partial_document(self):
        cfg = ExperimentConfig.loads("preset: desk\nsnr_db: 20\nquantizer: {bits_high: inf}\n")
        assert cfg.n_train == 20_000 and cfg.snr_db == (20.0,)
        assert cfg.quantizer.bits_high is None

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown"):
            ExperimentConfig.loads("snr: [1]\n")


class TestHashes:
    def test_changes_with_any_field(self):
        base = ExperimentConfig()
        h = base.config_hash()
        variants = [replace(base, seed=1), replace(base, c=2.0), replace(base, eta=(0.4,)),
                    replace(base, n_test=5), replace(base, training=replace(base.training, epochs=3)),
                    replace(base, channel=ChannelModelConfig(L=7))]
        hashes = {v.config_hash() for v in variants}
        assert h not in hashes and len(hashes) == len(variants)

    def test_out_is_ignored(self):
        base = ExperimentConfig()
        assert replace(base, out="elsewhere").config_hash() == base.config_hash()

    def test_point_hash_ignores_sweep_lists(self):
        base = ExperimentConfig()
        wider = replace(base, snr_db=(0.0, 20.0, 40.0), eta=(0.5, 0.7))
        assert base.point_hash(20.0, 0.5) == wider.point_hash(20.0, 0.5)
        assert base.point_hash(20.0, 0.5) != base.point_hash(25.0, 0.5)
        assert base.point_hash(20.0, 0.5) != replace(base, seed=9).point_hash(20.0, 0.5)
