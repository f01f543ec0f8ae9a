from __future__ import annotations

import json

import pytest

from worktrace.config import MetricSettings, load_config
from worktrace.errors import ConfigError


def write_config(tmp_path, **overrides):
    base = {
        "format_version": 1,
        "decomposition": "decomposition.json",
        "transcripts": "transcripts.csv",
        "reports_dir": "reports",
        "provider": {"kind": "lexical"},
        "windows": [20, 50, 100],
        "output_dir": "out",
    }
    base.update(overrides)
    base = {k: v for k, v in base.items() if v is not None}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(base))
    return path


def test_toy_config_loads(toy_workdir):
    cfg = load_config(toy_workdir)
    assert cfg.windows == (20, 50, 100)
    assert cfg.base_dir == toy_workdir.parent
    assert cfg.decomposition == cfg.base_dir / "decomposition.json"
    assert cfg.grades == cfg.base_dir / "grades.csv"
    assert cfg.output_dir == cfg.base_dir / "out"
    assert cfg.provider["kind"] == "file"
    assert cfg.sinkhorn.k_max == 1000
    assert cfg.sinkhorn.epsilon == 1e-9
    assert cfg.metrics.frontier_threshold == 0.25
    assert cfg.w100_child_inputs == "aggregated"
    assert cfg.raw["output_dir"] == "out"


def test_defaults_fill_optional_blocks(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert cfg.grades is None
    assert cfg.stopwords_extra is None
    assert cfg.sigmoid_steepness == 1.0
    assert cfg.score_floor == 0.0
    assert cfg.metrics == MetricSettings()
    assert cfg.include_uncoded_utterances is False
    assert cfg.random_free is True
    assert cfg.grades_ordinal_range == (0, 5)


def test_odd_window_rejected(tmp_path):
    path = write_config(tmp_path, windows=[20, 25, 100])
    with pytest.raises(ConfigError, match="25"):
        load_config(path)


def test_windows_must_increase(tmp_path):
    with pytest.raises(ConfigError, match="increasing"):
        load_config(write_config(tmp_path, windows=[50, 20]))
    with pytest.raises(ConfigError, match="increasing"):
        load_config(write_config(tmp_path, windows=[20, 20, 50]))


def test_single_window_rejected(tmp_path):
    with pytest.raises(ConfigError, match="two"):
        load_config(write_config(tmp_path, windows=[50]))


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="window_sizes"):
        load_config(write_config(tmp_path, window_sizes=[20, 50]))
    with pytest.raises(ConfigError, match="frontier"):
        load_config(write_config(tmp_path, metrics={"frontier": 0.3}))


def test_provider_kind_checked(tmp_path):
    with pytest.raises(ConfigError, match="provider.kind"):
        load_config(write_config(tmp_path, provider={"kind": "oracle"}))
    with pytest.raises(ConfigError, match="object"):
        load_config(write_config(tmp_path, provider="lexical"))


def test_numeric_knobs_checked(tmp_path):
    with pytest.raises(ConfigError, match="k_max"):
        load_config(write_config(tmp_path, sinkhorn={"k_max": 0}))
    with pytest.raises(ConfigError, match="epsilon"):
        load_config(write_config(tmp_path, sinkhorn={"epsilon": 0}))
    with pytest.raises(ConfigError, match="steepness"):
        load_config(write_config(tmp_path, sigmoid_steepness=-2))
    with pytest.raises(ConfigError, match="score_floor"):
        load_config(write_config(tmp_path, score_floor=1.5))
    with pytest.raises(ConfigError, match="year_range"):
        load_config(write_config(tmp_path, metrics={"year_range": [2100, 1900]}))
    with pytest.raises(ConfigError, match="threshold"):
        load_config(write_config(tmp_path, metrics={"frontier_threshold": 0}))
    with pytest.raises(ConfigError, match="ordinal"):
        load_config(write_config(tmp_path, grades_ordinal_range=[5, 0]))


def test_enum_knobs_checked(tmp_path):
    with pytest.raises(ConfigError, match="attention_speakers"):
        load_config(write_config(tmp_path, metrics={"attention_speakers": "all"}))
    with pytest.raises(ConfigError, match="w100_child_inputs"):
        load_config(write_config(tmp_path, w100_child_inputs="vectors"))


def test_format_version_checked(tmp_path):
    with pytest.raises(ConfigError, match="format_version"):
        load_config(write_config(tmp_path, format_version=9))


def test_unreadable_and_malformed(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="valid JSON"):
        load_config(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1]")
    with pytest.raises(ConfigError, match="object"):
        load_config(arr)


def test_missing_required_path(tmp_path):
    with pytest.raises(ConfigError, match="transcripts"):
        load_config(write_config(tmp_path, transcripts=None))
