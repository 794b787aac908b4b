import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsenas.config import PROFILES, ExperimentConfig, parse_config, validate
from sparsenas.errors import ConfigError
from sparsenas.nas import EIGHT_OPS, ELU_VARIANT, FOUR_OPS, RELU_VARIANT


def test_minimal_config_defaults():
    cfg = parse_config("kind = sparse\n")
    assert (cfg.m, cfg.n, cfg.s, cfg.N, cfg.lr, cfg.epochs) == (50, 200, 4, 12500, 0.05, 2000)
    assert (cfg.K, cfg.batch_size, cfg.train_frac) == (6000, 128, 0.8)
    assert cfg.resolved_mode == "per-layer" and cfg.resolved_ops == FOUR_OPS
    assert cfg.eta_value is None and cfg.lam_value is None


def test_empty_kind_is_a_named_key_error():
    with pytest.raises(ConfigError, match="kind"):
        parse_config("kind =\n")
    with pytest.raises(ConfigError, match="kind"):
        parse_config("m = 5\n")


def test_negative_lr_is_a_range_error():
    with pytest.raises(ConfigError, match="lr"):
        parse_config("kind = sparse\nlr = -1\n")


@pytest.mark.parametrize("text,where", [
    ("kind = sparse\nbogus\n", "line 2"),
    ("kind = sparse\nwidth = 3\n", "width"),
    ("kind = sparse\nm = 5\nm = 6\n", "line 3"),
    ("kind = sparse\nm = five\n", "line 2"),
    ("kind = sparse\nK = 2.5\n", "line 2"),
])
def test_parse_errors_name_the_problem(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(text)


@pytest.mark.parametrize("text,key", [
    ("kind = nope\n", "kind"),
    ("kind = sparse\ns = 300\n", "s"),
    ("kind = sparse\nN = 100\nbatch_size = 200\n", "batch_size"),
    ("kind = sparse\nops = shrink\n", "ops"),
    ("kind = sparse\nops = shrink,shrink\n", "ops"),
    ("kind = sparse\neta = -1\n", "eta"),
    ("kind = signed\nsign_mode = signed\nvariant = gelu\n", "variant"),
])
def test_range_violations_name_the_key(text, key):
    with pytest.raises(ConfigError, match=f"'{key}'"):
        parse_config(text)


def test_kind_resolution():
    assert parse_config("kind = search-space-8").resolved_ops == EIGHT_OPS
    looped = parse_config("kind = looped")
    assert looped.resolved_mode == "looped" and looped.resolved_ops == FOUR_OPS
    planted = parse_config("kind = planted\nplanted_op = tanh")
    assert planted.resolved_mode == "looped" and planted.resolved_ops == EIGHT_OPS
    signed = parse_config("kind = signed")
    assert signed.resolved_sign_mode == "positive" and signed.resolved_ops == RELU_VARIANT
    assert parse_config("kind = signed\nvariant = elu").resolved_ops == ELU_VARIANT
    assert parse_config("kind = sparse\nmode = looped").resolved_mode == "looped"


def test_profiles_sit_below_explicit_keys():
    cfg = parse_config("kind = sparse\nK = 7\n", profile="desk")
    assert cfg.K == 7 and cfg.N == PROFILES["desk"]["N"] and cfg.epochs == 200
    full = parse_config("kind = sparse", profile="paper-full")
    assert (full.K, full.epochs, full.N) == (6000, 2000, 12500)
    with pytest.raises(ConfigError):
        parse_config("kind = sparse", profile="laptop")


def test_comments_blank_lines_and_numeric_forms():
    cfg = parse_config("# header\n\nkind = sparse  # trailing\nN = 1e3\nlambda = 0.001\neps = 1e-9\n")
    assert cfg.N == 1000 and cfg.lam_value == 0.001 and cfg.eps == 1e-9


@given(st.integers(2, 500), st.integers(1, 60), st.floats(1e-4, 1.0), st.integers(0, 2**31))
def test_config_echo_round_trips(N, K, lr, seed):
    cfg = ExperimentConfig(kind="sparse", N=N, K=K, lr=lr, seed=seed, batch_size=1)
    validate(cfg)
    assert parse_config(cfg.to_text()) == cfg


def test_with_overrides_revalidates():
    cfg = parse_config("kind = sparse")
    assert cfg.with_overrides(seed=3).seed == 3
    with pytest.raises(ConfigError):
        cfg.with_overrides(K=0)
