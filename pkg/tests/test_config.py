import pytest

from matrixgen.config import Config, ConfigError


def test_defaults():
    cfg = Config()
    assert (cfg.data_h, cfg.data_f, cfg.data_dt) == (8, 12, 0.4)
    assert cfg.context_dim == 256
    assert cfg.train_lr == 0.001 and cfg.train_decay == 0.9999
    assert cfg.gen_samples == 20 and cfg.gmm_k == 4


def test_text_round_trip():
    cfg = Config().replace(train_epochs=7, metrics_asd_mode="mean", decoder_init_from_context=False)
    assert Config.loads(cfg.dumps()) == cfg


def test_overrides_coerce_types():
    cfg = Config().with_overrides({"train.epochs": "5", "reg.beta2": "3", "decoder.init_from_context": "false"})
    assert cfg.train_epochs == 5 and cfg.reg_beta2 == 3.0 and cfg.decoder_init_from_context is False


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="train.epoch\\b"):
        Config().with_overrides({"train.epoch": "3"})


@pytest.mark.parametrize("pairs", [
    {"data.dt": "0"}, {"gmm.k": "0"}, {"train.lr": "-1"}, {"metrics.asd_mode": "median"},
    {"gen.samples": "30", "gen.max_attempts": "10"}, {"train.epochs": "many"},
])
def test_invalid_values(pairs):
    with pytest.raises(ConfigError):
        Config().with_overrides(pairs)


def test_comments_and_blank_lines():
    cfg = Config.loads("# header\n\ntrain.epochs = 3  # trailing\n")
    assert cfg.train_epochs == 3


def test_missing_equals():
    with pytest.raises(ConfigError, match="line 1"):
        Config.loads("train.epochs 3\n")
