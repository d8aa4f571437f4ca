"""Runtime support imported by generated animation scripts."""

from .narrated import NarratedScene
from .probe import PLUGIN_CATALOG, probe_plugins, write_probe_file
from .timing import (
    AnimationQueue,
    NarrationSegment,
    OutsideSceneError,
    TimingRecorder,
    read_sidecar,
    with_narration,
)

__all__ = [
    "AnimationQueue",
    "NarratedScene",
    "NarrationSegment",
    "OutsideSceneError",
    "PLUGIN_CATALOG",
    "TimingRecorder",
    "probe_plugins",
    "read_sidecar",
    "with_narration",
    "write_probe_file",
]
