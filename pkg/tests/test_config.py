import pytest

from taghash.config import RunConfig, load_config, preset_path
from taghash.errors import InvalidConfig


def test_defaults_round_trip():
    cfg = RunConfig()
    params = cfg.train_params()
    assert params.r == cfg.bits
    assert params.variant == "full"


def test_parse_file_with_comments_and_include(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        "# experiment\n"
        "include mirflickr\n"
        "bits = 16  # short codes\n"
        "seed = 9\n"
        "cluster_spread = 2.5\n"
    )
    cfg = load_config(str(p))
    assert cfg.alpha == 0.01 and cfg.rho == 1.1  # from the preset
    assert cfg.bits == 16 and cfg.seed == 9
    assert cfg.cluster_spread == 2.5


def test_later_assignments_override_include(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("include mirflickr\nalpha = 7.5\n")
    assert load_config(str(p)).alpha == 7.5


def test_relative_include(tmp_path):
    (tmp_path / "base.cfg").write_text("bits = 64\n")
    p = tmp_path / "run.cfg"
    p.write_text("include base.cfg\nseed = 1\n")
    cfg = load_config(str(p))
    assert cfg.bits == 64 and cfg.seed == 1


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("bogus_knob = 3\n")
    with pytest.raises(InvalidConfig):
        load_config(str(p))


def test_bad_value_rejected(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("bits = many\n")
    with pytest.raises(InvalidConfig):
        load_config(str(p))


def test_invalid_optimizer_value_rejected(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("rho = 0.9\n")
    with pytest.raises(InvalidConfig):
        load_config(str(p))


def test_preset_names_resolve():
    for name in ("mirflickr", "nuswide", "synth-small"):
        assert preset_path(name).is_file()
    with pytest.raises(InvalidConfig):
        preset_path("no-such-preset")


def test_bare_preset_name_loads():
    cfg = load_config("nuswide")
    assert cfg.rho == 2.0 and cfg.mu0 == 1.0 and cfg.m == 700


def test_overrides_win(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("bits = 16\nseed = 3\n")
    cfg = load_config(str(p), overrides={"bits": 64, "seed": None})
    assert cfg.bits == 64
    assert cfg.seed == 3  # None overrides are ignored


def test_optional_sigma_fields(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("hyper_sigma_sq = 2.0\nanchor_sigma_sq = none\n")
    cfg = load_config(str(p))
    assert cfg.hyper_sigma_sq == 2.0
    assert cfg.anchor_sigma_sq is None


def test_circular_include_detected(tmp_path):
    a = tmp_path / "a.cfg"
    b = tmp_path / "b.cfg"
    a.write_text("include b.cfg\n")
    b.write_text("include a.cfg\n")
    with pytest.raises(InvalidConfig):
        load_config(str(a))
