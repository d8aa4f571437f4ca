"""Application configuration: one JSON file, dataclass sections, and
`TEA_SECTION_FIELD` environment overrides."""
from __future__ import annotations

import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .gateway import DEFAULT_PRICE_TABLE
from .retrieval import DEFAULT_PLUGIN_CATALOG

PLUGIN_VERSIONS = {
    "manim": "0.18.1",
    "manimpango": "0.6.0",
    "manim-physics": "0.4.0",
    "manim-ml": "0.0.24",
    "manim-chemistry": "0.4.4",
    "manim-dsa": "0.2.0",
    "manim-circuit": "0.0.3",
}


@dataclass
class GatewayConfig:
    providers: dict = field(default_factory=dict)  # model_id -> {base_url, env_key, model}
    price_table: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_PRICE_TABLE.items()})
    mock_dir: str | None = None
    max_retries: int = 3
    backoff_base_s: float = 0.5
    rate_per_s: float = 10.0
    burst: int = 10


@dataclass
class RetrievalSettings:
    k: int = 2
    threshold: float = 0.5
    plugin_catalog: list = field(default_factory=lambda: list(DEFAULT_PLUGIN_CATALOG))
    chunk_size: int = 1000
    chunk_overlap: int = 100
    embedder: str = "hashing"  # "hashing" | "http"
    embedder_dim: int = 256
    embedder_base_url: str = ""
    embedder_env_key: str = ""
    embedder_model: str = ""


@dataclass
class PlannerConfig:
    max_scenes: int = 8
    target_scenes: int = 7
    temperature: float = 0.7


@dataclass
class PipelineConfig:
    max_fixes: int = 5            # fix retries after the initial generation
    timeout_s: float = 600.0
    parallelism: int = 2
    stderr_limit: int = 8000
    min_duration_warn_s: float = 60.0
    fix_retrieval: str = "every_attempt"  # or "once"
    media_tool: str = "auto"      # "ffmpeg" | "cv2" | "auto"
    ffmpeg_path: str = "ffmpeg"
    python_bin: str = sys.executable
    stub_clip_seconds: float = 3.0


@dataclass
class EvaluatorConfig:
    fps: float = 1.0
    diff_threshold: float = 0.05
    max_keyframes: int = 50
    chunk_seconds: float = 30.0
    judge_temperature: float = 0.0


@dataclass
class ModelsConfig:
    default: str = "mock"
    planner: str | None = None
    coder: str | None = None
    judge: str | None = None

    def stage(self, name: str) -> str:
        return getattr(self, name, None) or self.default


@dataclass
class PathsConfig:
    corpus: str = "data/corpus.json"
    runs: str = "runs"
    index: str = "index"
    docs: str = "docs_corpus"
    mock_fixtures: str | None = None
    prompts: str | None = None
    plugin_probe: str | None = None  # plugins.json from the renderer probe


@dataclass
class AppConfig:
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    evaluator: EvaluatorConfig = field(default_factory=EvaluatorConfig)
    models: ModelsConfig = field(default_factory=ModelsConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    rag: bool = False


ENV_PREFIX = "TEA_"


def _coerce(raw: str, current):
    if isinstance(current, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def load_config(path: str | Path | None = None, env: dict | None = None) -> AppConfig:
    """Defaults, overlaid by the JSON config file, overlaid by TEA_* env vars."""
    cfg = AppConfig()
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        for section_name, section_data in data.items():
            if not hasattr(cfg, section_name):
                raise KeyError(f"unknown config section {section_name!r}")
            section = getattr(cfg, section_name)
            if dataclasses.is_dataclass(section):
                for key, value in section_data.items():
                    if not hasattr(section, key):
                        raise KeyError(f"unknown config key {section_name}.{key}")
                    setattr(section, key, value)
            else:
                setattr(cfg, section_name, section_data)
    env = env if env is not None else os.environ
    for section_field in dataclasses.fields(cfg):
        section = getattr(cfg, section_field.name)
        if not dataclasses.is_dataclass(section):
            var = ENV_PREFIX + section_field.name.upper()
            if var in env:
                setattr(cfg, section_field.name, _coerce(env[var], section))
            continue
        for leaf in dataclasses.fields(section):
            var = ENV_PREFIX + f"{section_field.name}_{leaf.name}".upper()
            if var in env:
                setattr(section, leaf.name, _coerce(env[var], getattr(section, leaf.name)))
    return cfg


def price_table_tuples(cfg: AppConfig) -> dict[str, tuple[float, float]]:
    return {k: (float(v[0]), float(v[1])) for k, v in cfg.gateway.price_table.items()}
