"""SubRip (SRT) cue model, strict parser, and emitter.

The emitter and parser are exact inverses on the dialect produced here:
1-based consecutive indices, `HH:MM:SS,mmm --> HH:MM:SS,mmm` timing lines,
non-overlapping cues, blank line between cues.
"""
from __future__ import annotations

import re
from dataclasses import dataclass


class SrtSyntaxError(ValueError):
    """Raised on any deviation from the strict SRT grammar."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class SrtCue:
    index: int          # 1-based, consecutive
    start_ms: int
    end_ms: int
    text: str

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"cue index must be >= 1, got {self.index}")
        if self.start_ms >= self.end_ms:
            raise ValueError(f"cue {self.index}: start {self.start_ms} >= end {self.end_ms}")
        if not self.text.strip():
            raise ValueError(f"cue {self.index}: empty text")


_TIMESTAMP = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d),(\d{3})$")
_TIMING_SEP = " --> "


def _parse_timestamp(token: str, line_no: int) -> int:
    m = _TIMESTAMP.match(token)
    if not m:
        raise SrtSyntaxError(line_no, f"bad timestamp {token!r}")
    h, mi, s, ms = (int(g) for g in m.groups())
    return ((h * 60 + mi) * 60 + s) * 1000 + ms


def _format_timestamp(ms: int) -> str:
    s, ms = divmod(ms, 1000)
    mi, s = divmod(s, 60)
    h, mi = divmod(mi, 60)
    return f"{h:02d}:{mi:02d}:{s:02d},{ms:03d}"


def parse_srt(text: str) -> list[SrtCue]:
    """Parse strict SRT text into cues.

    Enforces consecutive 1-based indices, start < end per cue, and
    non-overlapping, non-decreasing cue order.
    """
    cues: list[SrtCue] = []
    lines = text.split("\n")
    i = 0
    expected_index = 1
    while i < len(lines):
        if lines[i].strip() == "":
            i += 1
            continue
        # index line
        idx_line = lines[i].strip()
        if not idx_line.isdigit():
            raise SrtSyntaxError(i + 1, f"expected cue index, got {idx_line!r}")
        index = int(idx_line)
        if index != expected_index:
            raise SrtSyntaxError(i + 1, f"expected cue index {expected_index}, got {index}")
        i += 1
        if i >= len(lines):
            raise SrtSyntaxError(i, "missing timing line")
        timing = lines[i]
        if _TIMING_SEP not in timing:
            raise SrtSyntaxError(i + 1, f"expected timing line, got {timing!r}")
        left, _, right = timing.partition(_TIMING_SEP)
        start_ms = _parse_timestamp(left.strip(), i + 1)
        end_ms = _parse_timestamp(right.strip(), i + 1)
        if start_ms >= end_ms:
            raise SrtSyntaxError(i + 1, f"start {left.strip()} not before end {right.strip()}")
        if cues and start_ms < cues[-1].end_ms:
            raise SrtSyntaxError(i + 1, f"cue {index} overlaps cue {index - 1}")
        i += 1
        text_lines = []
        while i < len(lines) and lines[i].strip() != "":
            text_lines.append(lines[i])
            i += 1
        if not text_lines:
            raise SrtSyntaxError(i, f"cue {index} has no text")
        cues.append(SrtCue(index=index, start_ms=start_ms, end_ms=end_ms, text="\n".join(text_lines)))
        expected_index += 1
    return cues


def emit_srt(cues: list[SrtCue]) -> str:
    """Serialize cues to SRT text; inverse of parse_srt on this dialect."""
    blocks = []
    for cue in cues:
        blocks.append(
            f"{cue.index}\n"
            f"{_format_timestamp(cue.start_ms)}{_TIMING_SEP}{_format_timestamp(cue.end_ms)}\n"
            f"{cue.text}\n"
        )
    return "\n".join(blocks)
