import pytest

from deixis.config import PipelineConfig, env_overrides, load_config
from deixis.errors import ConfigInvalid, IoFailure


def test_defaults():
    cfg = PipelineConfig()
    assert cfg["run.fps"] == 30.0 and cfg["run.tau"] == 0.5
    assert cfg.gen_config().clip_len_s == (3.0, 5.0)
    assert cfg.resolver_config().angle_max == 15.0


def test_file_then_env_then_flags(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\nseed = 3\nn_clips = 20\n\n[resolver]\nangle_max = 10\n")
    cfg = load_config(ini, environ={"DEIXIS_RUN_SEED": "5", "DEIXIS_RESOLVER_DWELL_MIN_S": "0.8"},
                      overrides={"run.seed": 9})
    assert cfg.seed == 9 and cfg.n_clips == 20
    assert cfg["resolver.angle_max"] == 10.0 and cfg["resolver.dwell_min_s"] == 0.8


def test_env_names():
    env = {"DEIXIS_RUN_TAU": "0.3", "DEIXIS_QA_SPATIAL_BINARY_PROB": "0.5", "DEIXIS_NOPE": "1", "HOME": "/"}
    assert env_overrides(env) == {"run.tau": "0.3", "qa.spatial_binary_prob": "0.5"}


def test_bad_values_rejected():
    for bad in ({"run": {"seed": "x"}}, {"run": {"tau": 1.5}}, {"zzz": {"a": 1}}, {"run": {"nope": 1}},
                {"resolver": {"angle_max": 0}}, {"run": {"clip_len_s": "3"}}):
        with pytest.raises(ConfigInvalid):
            PipelineConfig(bad).resolver_config()


def test_missing_file():
    with pytest.raises(IoFailure):
        load_config("/nonexistent/run.ini", environ={})


def test_hash_tracks_relevant_values():
    base = PipelineConfig()
    assert base.hash() == PipelineConfig().hash()
    assert base.with_overrides({"run.seed": 1}).hash("gen") != base.hash("gen")
    assert base.with_overrides({"qa.counting": 3}).hash("gen") == base.hash("gen")
    assert base.with_overrides({"qa.counting": 3}).hash("qa") != base.hash("qa")
    assert base.with_overrides({"run.n_clips": 7}).hash() == base.hash()
    assert base.with_overrides({"run.tau": 0.9}).hash() == base.hash()


def test_ini_round_trip(tmp_path):
    cfg = PipelineConfig({"run": {"seed": 4}, "rephraser": {"fallback": "no"}})
    p = tmp_path / "c.ini"
    p.write_text(cfg.to_ini())
    again = load_config(p, environ={})
    assert again.to_dict() == cfg.to_dict() and again["rephraser.fallback"] is False
