import json
from pathlib import Path

import pytest

from theoremcast.config import AppConfig, load_config, price_table_tuples

REPO_ROOT = Path(__file__).parent.parent


def test_defaults_match_pinned_values():
    cfg = AppConfig()
    assert cfg.pipeline.max_fixes == 5
    assert cfg.retrieval.threshold == 0.5
    assert cfg.retrieval.k == 2
    assert cfg.evaluator.judge_temperature == 0.0
    assert cfg.planner.temperature == 0.7
    assert len(cfg.retrieval.plugin_catalog) == 7


def test_file_overlays_defaults(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"pipeline": {"max_fixes": 2}, "rag": True}), encoding="utf-8")
    cfg = load_config(path)
    assert cfg.pipeline.max_fixes == 2
    assert cfg.rag is True
    assert cfg.retrieval.k == 2  # untouched default


def test_env_overrides_beat_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"pipeline": {"max_fixes": 2}}), encoding="utf-8")
    cfg = load_config(path, env={"TEA_PIPELINE_MAX_FIXES": "3", "TEA_RAG": "true"})
    assert cfg.pipeline.max_fixes == 3
    assert cfg.rag is True


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"pipeline": {"no_such_key": 1}}), encoding="utf-8")
    with pytest.raises(KeyError):
        load_config(path)
    path.write_text(json.dumps({"no_such_section": {}}), encoding="utf-8")
    with pytest.raises(KeyError):
        load_config(path)


def test_shipped_example_config_loads():
    cfg = load_config(REPO_ROOT / "configs" / "example.json")
    assert cfg.models.default == "gpt-4o"
    table = price_table_tuples(cfg)
    assert table["o3-mini"] == (1.10, 4.40)
