"""Probe which renderer plugins are importable in this environment and
publish the result for the retrieval side."""
from __future__ import annotations

import importlib.util
import json
from pathlib import Path

# catalog name -> import module; versions pinned in the deployment docs
PLUGIN_CATALOG = {
    "manim": "manim",
    "manimpango": "manimpango",
    "manim-physics": "manim_physics",
    "manim-ml": "manim_ml",
    "manim-chemistry": "manim_chemistry",
    "manim-dsa": "manim_dsa",
    "manim-circuit": "manim_circuit",
}

PROBE_FILENAME = "plugins.json"


def probe_plugins(catalog: dict[str, str] | None = None) -> list[str]:
    """Catalog entries whose import module resolves in this environment."""
    catalog = catalog if catalog is not None else PLUGIN_CATALOG
    available = []
    for name, module in catalog.items():
        try:
            found = importlib.util.find_spec(module) is not None
        except (ImportError, ValueError):
            found = False
        if found:
            available.append(name)
    return available


def write_probe_file(directory: str | Path = ".", catalog: dict[str, str] | None = None) -> Path:
    path = Path(directory) / PROBE_FILENAME
    path.write_text(json.dumps(probe_plugins(catalog)) + "\n", encoding="utf-8")
    return path


if __name__ == "__main__":
    print(json.dumps(probe_plugins()))
