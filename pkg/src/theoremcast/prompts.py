"""Prompt template assets, shipped with the package and overridable by path."""
from __future__ import annotations

from importlib import resources
from pathlib import Path


class PromptLibrary:
    """Loads named prompt templates; `{placeholders}` filled via format()."""

    def __init__(self, override_dir: str | Path | None = None):
        self.override_dir = Path(override_dir) if override_dir else None
        self._cache: dict[str, str] = {}

    def get(self, name: str) -> str:
        if name in self._cache:
            return self._cache[name]
        if self.override_dir is not None:
            candidate = self.override_dir / f"{name}.txt"
            if candidate.exists():
                text = candidate.read_text(encoding="utf-8")
                self._cache[name] = text
                return text
        text = (
            resources.files("theoremcast").joinpath(f"prompts/{name}.txt").read_text(encoding="utf-8")
        )
        self._cache[name] = text
        return text

    def render(self, name: str, **fields: str) -> str:
        # only named placeholders are substituted; literal braces (e.g. JSON
        # schemas inside judge prompts) pass through untouched
        text = self.get(name)
        for key, value in fields.items():
            text = text.replace("{" + key + "}", str(value))
        return text
