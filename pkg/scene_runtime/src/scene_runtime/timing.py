"""Narration-to-animation timing: each narration segment claims a fixed
span of scene time; the wrapped animation block is stretched or freeze-padded
to fill it, and the span is logged to a JSONL sidecar for the video
assembler's subtitle pass."""
from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path


class OutsideSceneError(RuntimeError):
    """Narration helpers only work inside a renderer scene."""


@dataclass(frozen=True)
class NarrationSegment:
    text: str
    target_duration: float  # seconds

    def __post_init__(self):
        if self.target_duration <= 0:
            raise ValueError(f"target_duration must be > 0, got {self.target_duration}")


class TimingRecorder:
    """Appends (text, start_s, end_s) rows to the sidecar as segments play.

    The recorder's clock advances by exactly each segment's target duration,
    so consecutive segments are contiguous by construction.
    """

    def __init__(self, sidecar_path: str | Path):
        self.sidecar_path = Path(sidecar_path)
        self.clock = 0.0
        self.segments: list[tuple[str, float, float]] = []

    def record(self, text: str, duration: float) -> tuple[float, float]:
        start = self.clock
        end = start + duration
        self.clock = end
        self.segments.append((text, start, end))
        with self.sidecar_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"text": text, "start_s": start, "end_s": end}) + "\n")
        return start, end


class AnimationQueue:
    """Handle yielded inside a narration block; collects play requests so the
    block's total length is known before anything runs."""

    def __init__(self):
        self.requests: list[tuple[tuple, float]] = []

    def play(self, *animations, run_time: float = 1.0):
        if run_time <= 0:
            raise ValueError(f"run_time must be > 0, got {run_time}")
        self.requests.append((animations, run_time))

    @property
    def requested_seconds(self) -> float:
        return sum(rt for _, rt in self.requests)


@contextmanager
def with_narration(scene, segment: NarrationSegment, recorder: TimingRecorder):
    """Play the queued animation block inside `segment`'s time budget.

    Shorter blocks are freeze-padded with a wait; longer blocks are sped up
    uniformly so total playback equals the narration duration.
    """
    if scene is None or not (hasattr(scene, "play") and hasattr(scene, "wait")):
        raise OutsideSceneError("with_narration requires an active scene (play/wait)")
    queue = AnimationQueue()
    yield queue
    target = segment.target_duration
    requested = queue.requested_seconds
    if requested == 0:
        scene.wait(target)
    elif requested <= target:
        for animations, run_time in queue.requests:
            scene.play(*animations, run_time=run_time)
        pad = target - requested
        if pad > 1e-9:
            scene.wait(pad)
    else:
        factor = target / requested
        for animations, run_time in queue.requests:
            scene.play(*animations, run_time=run_time * factor)
    recorder.record(segment.text, target)


def read_sidecar(path: str | Path) -> list[tuple[str, float, float]]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            data = json.loads(line)
            rows.append((data["text"], float(data["start_s"]), float(data["end_s"])))
    return rows
