"""Scene base class for generated scripts: `self.narrate(...)` wires each
animation block to its narration span and leaves a timing sidecar next to
the media output."""
from __future__ import annotations

import os
from pathlib import Path

from .timing import NarrationSegment, TimingRecorder, with_narration

try:
    from manim import Scene as _ManimScene
except ImportError:  # renderer not installed; class still importable for tooling
    _ManimScene = object

SIDECAR_ENV = "SCENE_TIMING_PATH"


class NarratedScene(_ManimScene):
    """Subclass and call `with self.narrate("text", seconds) as anim:` around
    `anim.play(...)` calls inside construct()."""

    scene_index = 0

    def narrate(self, text: str, seconds: float):
        return with_narration(self, NarrationSegment(text, seconds), self._timing_recorder())

    def _timing_recorder(self) -> TimingRecorder:
        recorder = getattr(self, "_recorder", None)
        if recorder is None:
            default = f"scene_{self.scene_index}.timing.jsonl"
            path = Path(os.environ.get(SIDECAR_ENV, default))
            path.unlink(missing_ok=True)
            recorder = TimingRecorder(path)
            self._recorder = recorder
        return recorder
