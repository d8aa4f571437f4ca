"""Five-dimension video scoring: transcript judging, keyframe and chunk
judging, and the geometric-mean overall score."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import cv2
import numpy as np

from .corpus import TheoremEntry
from .gateway import ChatRequest, Gateway
from .prompts import PromptLibrary
from .srt import SrtCue, SrtSyntaxError, parse_srt  # noqa: F401  (module surface)
from .stats import (  # noqa: F401  (module surface)
    DegenerateInput,
    InsufficientData,
    LengthMismatch,
    krippendorff_alpha,
    spearman,
)


class Dimension(Enum):
    AccuracyDepth = "accuracy_depth"
    VisualRelevance = "visual_relevance"
    LogicalFlow = "logical_flow"
    ElementLayout = "element_layout"
    VisualConsistency = "visual_consistency"


class JudgeParseError(ValueError):
    pass


class UnreadableVideo(RuntimeError):
    pass


class ArityError(ValueError):
    pass


class RangeError(ValueError):
    pass


@dataclass(frozen=True)
class DimensionScore:
    dimension: Dimension
    value: float
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise RangeError(f"{self.dimension.value} score {self.value} outside [0, 1]")


@dataclass(frozen=True)
class EvaluationReport:
    theorem_id: str
    scores: tuple[DimensionScore, ...]
    overall: float

    def to_json(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "scores": {
                s.dimension.value: {"value": s.value, "evidence": s.evidence}
                for s in self.scores
            },
            "overall": self.overall,
        }


def overall_score(values: list[float]) -> float:
    """Geometric mean of exactly five [0,1] dimension values."""
    if len(values) != 5:
        raise ArityError(f"need exactly 5 dimension values, got {len(values)}")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise RangeError(f"dimension value {v} outside [0, 1]")
    return math.prod(values) ** (1 / 5)


def normalize_raw(raw: int) -> float:
    """Affine bridge from the 1-5 judge rubric onto [0, 1]."""
    if raw not in (1, 2, 3, 4, 5):
        raise JudgeParseError(f"raw judge score {raw!r} outside 1-5")
    return (raw - 1) / 4


@dataclass(frozen=True)
class Keyframe:
    frame_index: int
    time_s: float
    image: np.ndarray


def extract_keyframes(
    video_path: str | Path,
    fps: float = 1.0,
    diff_threshold: float = 0.05,
    cap: int = 50,
) -> list[Keyframe]:
    """Sample at `fps`; keep a frame iff its mean absolute grayscale
    difference from the last kept frame exceeds the threshold. The first
    sampled frame is always kept; collection stops at `cap` frames."""
    capture = cv2.VideoCapture(str(video_path))
    if not capture.isOpened():
        raise UnreadableVideo(str(video_path))
    native_fps = capture.get(cv2.CAP_PROP_FPS) or fps
    frame_count = int(capture.get(cv2.CAP_PROP_FRAME_COUNT) or 0)
    targets = []
    k = 0
    while True:
        idx = round(k * native_fps / fps)
        if frame_count and idx >= frame_count:
            break
        targets.append(idx)
        k += 1
        if len(targets) >= cap * 4 and frame_count == 0:
            break
    kept: list[Keyframe] = []
    last_gray: np.ndarray | None = None
    position = 0
    target_pos = 0
    while target_pos < len(targets) and len(kept) < cap:
        wanted = targets[target_pos]
        grabbed = True
        while position <= wanted:
            grabbed = capture.grab()
            if not grabbed:
                break
            position += 1
        if not grabbed:
            break
        ok, frame = capture.retrieve()
        if not ok:
            break
        gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY).astype(np.float64) / 255.0
        if last_gray is None or float(np.mean(np.abs(gray - last_gray))) > diff_threshold:
            kept.append(Keyframe(frame_index=wanted, time_s=wanted / native_fps, image=frame))
            last_gray = gray
        target_pos += 1
    capture.release()
    if not kept:
        raise UnreadableVideo(f"no decodable frames in {video_path}")
    return kept


def _frame_summary(image: np.ndarray) -> str:
    gray = cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)
    return (
        f"{image.shape[1]}x{image.shape[0]} px, "
        f"mean brightness {gray.mean() / 255:.3f}, contrast {gray.std() / 255:.3f}"
    )


class Judge:
    """Deterministic gateway judge: temperature 0, JSON replies, one
    re-prompt on a malformed reply, then a hard error."""

    def __init__(self, gateway: Gateway, model_id: str, prompts: PromptLibrary):
        self.gateway = gateway
        self.model_id = model_id
        self.prompts = prompts
        self.transcripts: list[dict] = []

    def ask(self, system: str, user: str, keys: dict[str, tuple[float, float]]) -> dict[str, float]:
        """keys maps field name -> inclusive (lo, hi) range."""
        text = self._call(system, user)
        try:
            return self._parse(text, keys)
        except JudgeParseError:
            retry_user = (
                user
                + "\n\nYour previous reply could not be parsed. Respond with only the JSON object, nothing else."
            )
            text = self._call(system, retry_user)
            return self._parse(text, keys)

    def _call(self, system: str, user: str) -> str:
        response = self.gateway.complete(
            ChatRequest(
                model_id=self.model_id, system=system, user=user,
                temperature=0.0, tag="judge",
            )
        )
        self.transcripts.append({"user": user[:500], "reply": response.text[:500]})
        return response.text

    @staticmethod
    def _parse(text: str, keys: dict[str, tuple[float, float]]) -> dict[str, float]:
        candidate = text.strip()
        if not candidate.startswith("{"):
            m = re.search(r"\{.*\}", candidate, re.DOTALL)
            if not m:
                raise JudgeParseError(f"no JSON object in reply: {text[:200]!r}")
            candidate = m.group(0)
        try:
            data = json.loads(candidate)
        except json.JSONDecodeError as exc:
            raise JudgeParseError(f"bad JSON: {exc}") from exc
        out = {}
        for key, (lo, hi) in keys.items():
            if key not in data:
                raise JudgeParseError(f"missing key {key!r} in {data}")
            value = data[key]
            if not isinstance(value, (int, float)) or not lo <= value <= hi:
                raise JudgeParseError(f"{key}={value!r} outside [{lo}, {hi}]")
            out[key] = float(value)
        return out


def score_text_dimensions(
    cues: list[SrtCue], theorem: TheoremEntry, judge: Judge
) -> dict[Dimension, DimensionScore]:
    """AccuracyDepth and LogicalFlow from the transcript, one judge call.
    An empty transcript scores 0 on both without consulting the judge."""
    if not cues:
        return {
            Dimension.AccuracyDepth: DimensionScore(
                Dimension.AccuracyDepth, 0.0, {"note": "empty transcript"}
            ),
            Dimension.LogicalFlow: DimensionScore(
                Dimension.LogicalFlow, 0.0, {"note": "empty transcript"}
            ),
        }
    transcript = "\n".join(c.text for c in cues)
    values = judge.ask(
        judge.prompts.get("eval_text_system"),
        judge.prompts.render(
            "eval_text",
            theorem_name=theorem.name,
            theorem_description=theorem.description,
            transcript=transcript,
        ),
        {"accuracy_depth": (0.0, 1.0), "logical_flow": (0.0, 1.0)},
    )
    evidence = {"judge": judge.transcripts[-1]}
    return {
        Dimension.AccuracyDepth: DimensionScore(
            Dimension.AccuracyDepth, values["accuracy_depth"], evidence
        ),
        Dimension.LogicalFlow: DimensionScore(
            Dimension.LogicalFlow, values["logical_flow"], evidence
        ),
    }


def score_frame_dimensions(
    frames: list[Keyframe], theorem: TheoremEntry, judge: Judge
) -> dict[Dimension, DimensionScore]:
    """VisualRelevance and ElementLayout: per-frame 1-5 raw scores,
    normalized to [0,1], then averaged across frames."""
    if not frames:
        raise ValueError("need at least one frame")
    relevance: list[float] = []
    layout: list[float] = []
    frame_ids = []
    for frame in frames:
        values = judge.ask(
            judge.prompts.get("eval_frame_system"),
            judge.prompts.render(
                "eval_frame",
                theorem_name=theorem.name,
                frame_id=str(frame.frame_index),
                frame_summary=_frame_summary(frame.image),
            ),
            {"visual_relevance": (1, 5), "element_layout": (1, 5)},
        )
        for key, bucket in (("visual_relevance", relevance), ("element_layout", layout)):
            raw = values[key]
            if raw != int(raw):
                raise JudgeParseError(f"{key}={raw} is not an integer raw score")
            bucket.append(normalize_raw(int(raw)))
        frame_ids.append(frame.frame_index)
    evidence = {"frame_ids": frame_ids}
    return {
        Dimension.VisualRelevance: DimensionScore(
            Dimension.VisualRelevance, sum(relevance) / len(relevance), evidence
        ),
        Dimension.ElementLayout: DimensionScore(
            Dimension.ElementLayout, sum(layout) / len(layout), evidence
        ),
    }


def video_chunks(duration_s: float, chunk_seconds: float = 30.0) -> list[tuple[float, float]]:
    """[(start, end)] covering the duration in fixed chunks; the last chunk
    may be shorter."""
    if duration_s <= 0:
        return []
    bounds = []
    start = 0.0
    while start < duration_s:
        end = min(start + chunk_seconds, duration_s)
        bounds.append((start, end))
        start = end
    return bounds


def score_chunk_dimension(
    video_path: str | Path,
    theorem: TheoremEntry,
    judge: Judge,
    chunk_seconds: float = 30.0,
) -> DimensionScore:
    """VisualConsistency: per-30s-chunk 1-5 raw scores, normalized and
    averaged."""
    capture = cv2.VideoCapture(str(video_path))
    if not capture.isOpened():
        raise UnreadableVideo(str(video_path))
    fps = capture.get(cv2.CAP_PROP_FPS) or 0.0
    frames = int(capture.get(cv2.CAP_PROP_FRAME_COUNT) or 0)
    capture.release()
    if fps <= 0 or frames <= 0:
        raise UnreadableVideo(f"no timing metadata: {video_path}")
    duration = frames / fps
    normalized: list[float] = []
    chunk_ids: list[int] = []
    for chunk_id, (start, end) in enumerate(video_chunks(duration, chunk_seconds)):
        values = judge.ask(
            judge.prompts.get("eval_chunk_system"),
            judge.prompts.render(
                "eval_chunk",
                theorem_name=theorem.name,
                chunk_id=str(chunk_id),
                start_s=f"{start:.1f}",
                end_s=f"{end:.1f}",
                chunk_summary=f"{end - start:.1f}s segment",
            ),
            {"visual_consistency": (1, 5)},
        )
        raw = values["visual_consistency"]
        if raw != int(raw):
            raise JudgeParseError(f"visual_consistency={raw} is not an integer raw score")
        normalized.append(normalize_raw(int(raw)))
        chunk_ids.append(chunk_id)
    return DimensionScore(
        Dimension.VisualConsistency,
        sum(normalized) / len(normalized),
        {"chunk_ids": chunk_ids},
    )


DIMENSION_ORDER = (
    Dimension.AccuracyDepth,
    Dimension.VisualRelevance,
    Dimension.LogicalFlow,
    Dimension.ElementLayout,
    Dimension.VisualConsistency,
)


def evaluate_run(
    run_dir: str | Path,
    theorem: TheoremEntry,
    judge: Judge,
    fps: float = 1.0,
    diff_threshold: float = 0.05,
    max_keyframes: int = 50,
    chunk_seconds: float = 30.0,
) -> EvaluationReport:
    """Score a completed run directory on all five dimensions and write
    evaluation.json next to the artifact."""
    run_dir = Path(run_dir)
    srt_text = (run_dir / "final.srt").read_text(encoding="utf-8")
    cues = parse_srt(srt_text)
    video_path = run_dir / "final.mp4"

    scores = dict(score_text_dimensions(cues, theorem, judge))
    frames = extract_keyframes(video_path, fps=fps, diff_threshold=diff_threshold, cap=max_keyframes)
    scores.update(score_frame_dimensions(frames, theorem, judge))
    scores[Dimension.VisualConsistency] = score_chunk_dimension(
        video_path, theorem, judge, chunk_seconds=chunk_seconds
    )

    ordered = tuple(scores[d] for d in DIMENSION_ORDER)
    report = EvaluationReport(
        theorem_id=theorem.id,
        scores=ordered,
        overall=overall_score([s.value for s in ordered]),
    )
    (run_dir / "evaluation.json").write_text(
        json.dumps(report.to_json(), indent=2), encoding="utf-8"
    )
    return report
