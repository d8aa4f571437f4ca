"""Orchestration: plan, refine, code, execute, narrate, and assemble a
narrated video with an SRT transcript, accounting success per run."""
from __future__ import annotations

import dataclasses
import json
import logging
import re
import shutil
import subprocess
import time
import wave
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .codegen import (
    CodeArtifact,
    CodeGenerator,
    ExecutionOutcome,
    SceneResult,
    run_scene_loop,
)
from .corpus import TheoremEntry
from .planner import Planner, SceneSpec, VideoPlan
from .retrieval import RetrievalConfig, Retriever, generate_queries
from .srt import SrtCue, emit_srt

log = logging.getLogger(__name__)

VIDEO_SUFFIXES = (".mp4", ".mov", ".avi", ".mkv", ".webm", ".gif")
WORDS_PER_SECOND = 2.5      # 150 wpm speech rate for the silent TTS stub
MIN_CLIP_SECONDS = 0.5


class RenderTimeout(RuntimeError):
    def __init__(self, seconds: float):
        super().__init__(f"render exceeded {seconds:.0f}s")
        self.seconds = seconds


class RendererUnavailable(RuntimeError):
    pass


class TtsPortError(RuntimeError):
    pass


class MediaToolFailure(RuntimeError):
    pass


class NonContiguousScenes(ValueError):
    pass


@dataclass(frozen=True)
class RenderedScene:
    scene_index: int
    video_path: str
    duration_s: float
    narration: str
    # (text, start_s, end_s) rows from a render-time timing sidecar, if the
    # scene script produced one; None falls back to proportional timing
    timing: tuple[tuple[str, float, float], ...] | None = None

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError(f"scene {self.scene_index} duration must be > 0")


@dataclass(frozen=True)
class VideoArtifact:
    theorem_id: str
    video_path: str
    srt_path: str
    total_duration_s: float
    scenes: tuple[RenderedScene, ...]
    ledger_path: str
    short_video_warning: bool = False


@dataclass
class RunRecord:
    theorem_id: str
    scene_results: list[SceneResult]
    success: bool
    wall_time_s: float
    model_id: str
    max_fixes: int

    def to_json(self, theorem: TheoremEntry | None = None) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "theorem_name": theorem.name if theorem else None,
            "theorem_description": theorem.description if theorem else None,
            "difficulty": theorem.difficulty if theorem else None,
            "subject": theorem.subject if theorem else None,
            "success": self.success,
            "wall_time_s": round(self.wall_time_s, 3),
            "model_id": self.model_id,
            "max_fixes": self.max_fixes,
            "scenes": [
                {
                    "scene_index": r.scene_index,
                    "succeeded_attempt": r.succeeded_attempt,
                    "attempts": [
                        {
                            "attempt": a.artifact.attempt,
                            "ok": a.outcome.ok,
                            "category": a.classification.category.value if a.classification else None,
                        }
                        for a in r.attempts
                    ],
                }
                for r in self.scene_results
            ],
        }


def probe_video(path: str | Path) -> tuple[float, float, int]:
    """(duration_s, fps, frame_count) via the local video decoder."""
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise MediaToolFailure(f"unreadable video: {path}")
    fps = cap.get(cv2.CAP_PROP_FPS) or 0.0
    frames = int(cap.get(cv2.CAP_PROP_FRAME_COUNT) or 0)
    cap.release()
    if fps <= 0 or frames <= 0:
        raise MediaToolFailure(f"video has no timing metadata: {path}")
    return frames / fps, fps, frames


def execute_script(
    artifact: CodeArtifact,
    work_dir: str | Path,
    python_bin: str,
    timeout_s: float,
) -> ExecutionOutcome:
    """Run one generated script in an isolated working directory.

    ok requires exit code 0 AND an output media file appearing under the
    working directory.
    """
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    script = work_dir / "scene.py"
    script.write_text(artifact.source, encoding="utf-8")
    try:
        proc = subprocess.run(
            [python_bin, str(script)],
            cwd=work_dir,
            capture_output=True,
            text=True,
            timeout=timeout_s,
        )
    except subprocess.TimeoutExpired:
        raise RenderTimeout(timeout_s)
    except FileNotFoundError:
        raise RendererUnavailable(f"interpreter not found: {python_bin}")
    media = sorted(
        p for p in work_dir.rglob("*") if p.suffix.lower() in VIDEO_SUFFIXES and p.is_file()
    )
    if proc.returncode != 0:
        return ExecutionOutcome(ok=False, stderr=proc.stderr or proc.stdout)
    if not media:
        return ExecutionOutcome(ok=False, stderr="no output produced")
    duration, _, _ = probe_video(media[0])
    return ExecutionOutcome(ok=True, media_path=str(media[0]), duration_s=duration)


class SubprocessExecutor:
    """Renderer-backed executor: scripts must render their own scene when
    run with plain python."""

    def __init__(self, base_dir: str | Path, python_bin: str, timeout_s: float):
        self.base_dir = Path(base_dir)
        self.python_bin = python_bin
        self.timeout_s = timeout_s

    def __call__(self, artifact: CodeArtifact) -> ExecutionOutcome:
        work = self.base_dir / str(artifact.scene_index) / f"work_{artifact.attempt}"
        try:
            return execute_script(artifact, work, self.python_bin, self.timeout_s)
        except RenderTimeout as exc:
            return ExecutionOutcome(ok=False, stderr=f"execution timed out: {exc}")


def write_stub_clip(path: str | Path, seconds: float, shade: int, fps: float = 8.0,
                    size: tuple[int, int] = (64, 64)) -> float:
    """Tiny solid-color clip, real enough for the evaluator to decode."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"mp4v"), fps, size)
    if not writer.isOpened():
        raise MediaToolFailure(f"cannot open video writer for {path}")
    frames = max(1, round(seconds * fps))
    frame = np.full((size[1], size[0], 3), shade % 256, dtype=np.uint8)
    for _ in range(frames):
        writer.write(frame)
    writer.release()
    return frames / fps


class StubExecutor:
    """Offline executor: never runs generated code; renders a placeholder
    clip per attempt according to a scripted pass/fail plan."""

    def __init__(self, base_dir: str | Path, clip_seconds: float = 3.0,
                 script: dict[int, list[bool]] | None = None,
                 failure_stderr: str = "AttributeError: 'Scene' object has no attribute 'make_it_work'"):
        self.base_dir = Path(base_dir)
        self.clip_seconds = clip_seconds
        self.script = script or {}
        self.failure_stderr = failure_stderr

    def __call__(self, artifact: CodeArtifact) -> ExecutionOutcome:
        plan = self.script.get(artifact.scene_index)
        ok = True if plan is None else (
            plan[artifact.attempt] if artifact.attempt < len(plan) else plan[-1]
        )
        if not ok:
            return ExecutionOutcome(ok=False, stderr=self.failure_stderr)
        clip = self.base_dir / str(artifact.scene_index) / f"work_{artifact.attempt}" / "out.mp4"
        duration = write_stub_clip(clip, self.clip_seconds, shade=40 * (artifact.scene_index + 1))
        return ExecutionOutcome(ok=True, media_path=str(clip), duration_s=duration)


class SilentTts:
    """Offline TTS port: silence sized by a 150-words-per-minute estimate."""

    def __init__(self, sample_rate: int = 22050):
        self.sample_rate = sample_rate

    def synthesize(self, narration: str, out_path: str | Path) -> float:
        words = len(narration.split())
        duration = max(MIN_CLIP_SECONDS, words / WORDS_PER_SECOND)
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fh = out_path.open("wb")
        except OSError as exc:
            raise TtsPortError(str(exc)) from exc
        with fh, wave.open(fh, "wb") as wav:
            wav.setnchannels(1)
            wav.setsampwidth(2)
            wav.setframerate(self.sample_rate)
            wav.writeframes(b"\x00\x00" * int(self.sample_rate * duration))
        return duration


def synthesize_voiceover(narration: str, out_path: str | Path, tts=None) -> tuple[str, float]:
    """Returns (audio path, duration seconds) from the configured TTS port."""
    port = tts or SilentTts()
    duration = port.synthesize(narration, out_path)
    return str(out_path), duration


class Cv2MediaTool:
    """Pure-decoder media tool: re-encodes scene clips at a common fps,
    freeze-padding each to its target duration, then concatenating."""

    def __init__(self, fps: float = 8.0):
        self.fps = fps

    def pad_and_concat(self, clips: list[str], targets: list[float], out_path: str | Path) -> float:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        first = cv2.VideoCapture(clips[0])
        if not first.isOpened():
            raise MediaToolFailure(f"unreadable clip: {clips[0]}")
        width = int(first.get(cv2.CAP_PROP_FRAME_WIDTH))
        height = int(first.get(cv2.CAP_PROP_FRAME_HEIGHT))
        first.release()
        writer = cv2.VideoWriter(
            str(out_path), cv2.VideoWriter_fourcc(*"mp4v"), self.fps, (width, height)
        )
        if not writer.isOpened():
            raise MediaToolFailure(f"cannot open writer for {out_path}")
        total_frames = 0
        for clip, target in zip(clips, targets):
            cap = cv2.VideoCapture(clip)
            if not cap.isOpened():
                writer.release()
                raise MediaToolFailure(f"unreadable clip: {clip}")
            src_fps = cap.get(cv2.CAP_PROP_FPS) or self.fps
            frames = []
            while True:
                ok, frame = cap.read()
                if not ok:
                    break
                frames.append(cv2.resize(frame, (width, height)))
            cap.release()
            if not frames:
                writer.release()
                raise MediaToolFailure(f"clip has no frames: {clip}")
            needed = max(len(frames), round(target * self.fps))
            for i in range(needed):
                src_idx = min(int(i * src_fps / self.fps), len(frames) - 1)
                writer.write(frames[src_idx])
            total_frames += needed
        writer.release()
        return total_frames / self.fps


class FfmpegMediaTool:
    """Concatenation through an external ffmpeg binary, freeze-padding each
    clip to its target duration."""

    def __init__(self, ffmpeg_path: str = "ffmpeg"):
        if shutil.which(ffmpeg_path) is None:
            raise MediaToolFailure(f"media tool not found: {ffmpeg_path}")
        self.ffmpeg_path = ffmpeg_path

    def pad_and_concat(self, clips: list[str], targets: list[float], out_path: str | Path) -> float:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        work = out_path.parent / "_concat"
        work.mkdir(exist_ok=True)
        padded = []
        for i, (clip, target) in enumerate(zip(clips, targets)):
            dst = work / f"part_{i}.mp4"
            cmd = [
                self.ffmpeg_path, "-y", "-i", clip,
                "-vf", f"tpad=stop_mode=clone:stop_duration={max(0.0, target - probe_video(clip)[0]):.3f}",
                "-an", str(dst),
            ]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode != 0:
                raise MediaToolFailure(proc.stderr[-500:])
            padded.append(dst)
        listing = work / "list.txt"
        listing.write_text("".join(f"file '{p.name}'\n" for p in padded), encoding="utf-8")
        proc = subprocess.run(
            [self.ffmpeg_path, "-y", "-f", "concat", "-safe", "0", "-i", str(listing),
             "-c", "copy", str(out_path)],
            capture_output=True, text=True, cwd=work,
        )
        if proc.returncode != 0:
            raise MediaToolFailure(proc.stderr[-500:])
        return probe_video(out_path)[0]


def pick_media_tool(kind: str, ffmpeg_path: str = "ffmpeg"):
    if kind == "ffmpeg":
        return FfmpegMediaTool(ffmpeg_path)
    if kind == "cv2":
        return Cv2MediaTool()
    if kind == "auto":
        return FfmpegMediaTool(ffmpeg_path) if shutil.which(ffmpeg_path) else Cv2MediaTool()
    raise ValueError(f"unknown media tool {kind!r}")


_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_SPLIT.split(text.strip()) if s.strip()]


def load_timing_sidecar(media_path: str | Path) -> tuple[tuple[str, float, float], ...] | None:
    """Timing rows from a `*.timing.jsonl` file next to the rendered clip,
    produced by the scene-runtime narration shim; None when absent."""
    sidecars = sorted(Path(media_path).parent.glob("*.timing.jsonl"))
    if not sidecars:
        return None
    rows = []
    for line in sidecars[0].read_text(encoding="utf-8").splitlines():
        if line.strip():
            data = json.loads(line)
            rows.append((str(data["text"]), float(data["start_s"]), float(data["end_s"])))
    return tuple(rows) or None


def _proportional_cues(text: str, window_start_ms: int, window_end_ms: int,
                       index: int, cues: list[SrtCue]) -> int:
    """Append one cue per sentence, lengths proportional to word counts."""
    sentences = split_sentences(text)
    if not sentences:
        return index
    weights = [max(1, len(s.split())) for s in sentences]
    total = sum(weights)
    span = window_end_ms - window_start_ms
    running = 0
    start = window_start_ms
    for sentence, weight in zip(sentences, weights):
        running += weight
        end = window_start_ms + round(span * running / total)
        if end <= start:
            end = start + 1
        cues.append(SrtCue(index=index, start_ms=start, end_ms=end, text=sentence))
        index += 1
        start = end
    return index


def srt_cues_for_scenes(scenes: list[RenderedScene]) -> list[SrtCue]:
    """One cue per narration sentence. A scene with a timing sidecar gets
    exact per-segment windows; otherwise sentence lengths are prorated by
    word count over the whole scene."""
    cues: list[SrtCue] = []
    offset_ms = 0
    index = 1
    for scene in scenes:
        duration_ms = round(scene.duration_s * 1000)
        if scene.timing:
            for text, start_s, end_s in scene.timing:
                index = _proportional_cues(
                    text,
                    offset_ms + round(start_s * 1000),
                    offset_ms + round(end_s * 1000),
                    index,
                    cues,
                )
        else:
            index = _proportional_cues(
                scene.narration, offset_ms, offset_ms + duration_ms, index, cues
            )
        offset_ms += duration_ms
    return cues


def assemble_video(
    scenes: list[RenderedScene],
    theorem_id: str,
    out_dir: str | Path,
    media_tool,
    ledger_path: str = "",
    min_duration_warn_s: float = 60.0,
) -> VideoArtifact:
    """Concatenate ordered scene clips and emit the SRT transcript."""
    if not scenes:
        raise NonContiguousScenes("no scenes to assemble")
    indices = [s.scene_index for s in scenes]
    if indices != list(range(len(scenes))):
        raise NonContiguousScenes(f"scene indices {indices} are not contiguous from 0")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    video_path = out_dir / "final.mp4"
    total = media_tool.pad_and_concat(
        [s.video_path for s in scenes], [s.duration_s for s in scenes], video_path
    )
    srt_path = out_dir / "final.srt"
    srt_path.write_text(emit_srt(srt_cues_for_scenes(scenes)), encoding="utf-8")
    short = total < min_duration_warn_s
    if short:
        log.warning("assembled video is %.1fs, shorter than %.0fs", total, min_duration_warn_s)
    return VideoArtifact(
        theorem_id=theorem_id,
        video_path=str(video_path),
        srt_path=str(srt_path),
        total_duration_s=total,
        scenes=tuple(scenes),
        ledger_path=ledger_path,
        short_video_warning=short,
    )


@dataclass
class PipelineContext:
    """Everything run_theorem needs, assembled once per run configuration."""

    planner: Planner
    generator: CodeGenerator
    executor: object                     # callable(CodeArtifact) -> ExecutionOutcome
    media_tool: object
    tts: object
    retriever: Retriever | None = None   # None disables retrieval
    retrieval_cfg: RetrievalConfig = dataclasses.field(default_factory=RetrievalConfig)
    rag: bool = False
    fix_retrieval: str = "every_attempt"
    max_fixes: int = 5
    parallelism: int = 2
    min_duration_warn_s: float = 60.0
    query_model_id: str = "mock"
    prompts: object = None
    gateway: object = None


def _retrieve_for(ctx: PipelineContext, stage: str, context_text: str) -> list:
    if not ctx.rag or ctx.retriever is None or len(ctx.retriever.index) == 0:
        return []
    try:
        queries = generate_queries(ctx.gateway, ctx.query_model_id, stage, context_text, ctx.prompts)
    except Exception as exc:
        log.warning("query generation failed for stage %s: %s", stage, exc)
        return []
    seen: dict[int, tuple] = {}
    for query in queries:
        for chunk, score in ctx.retriever.retrieve(query, ctx.retrieval_cfg, stage=stage):
            if chunk.chunk_id not in seen or score > seen[chunk.chunk_id][1]:
                seen[chunk.chunk_id] = (chunk, score)
    return sorted(seen.values(), key=lambda pair: -pair[1])[: ctx.retrieval_cfg.k]


def _scene_job(ctx: PipelineContext, run_dir: Path, plan: VideoPlan, index: int):
    spec = ctx.planner.refine_scene(plan, index)
    scene_dir = run_dir / "scenes" / str(index)
    scene_dir.mkdir(parents=True, exist_ok=True)
    impl_context = _retrieve_for(
        ctx, "implementation", f"{spec.outline.title}\n{spec.outline.description}"
    )
    render_log = scene_dir / "render.log"
    fix_state = {"used": False}

    def fix_context_fn(stderr: str):
        if ctx.fix_retrieval == "once" and fix_state["used"]:
            return []
        fix_state["used"] = True
        return _retrieve_for(ctx, "error_fix", stderr[:2000])

    def on_attempt(record):
        (scene_dir / f"attempt_{record.artifact.attempt}.py").write_text(
            record.artifact.source, encoding="utf-8"
        )
        with render_log.open("a", encoding="utf-8") as fh:
            status = "ok" if record.outcome.ok else "fail"
            category = record.classification.category.value if record.classification else "-"
            fh.write(f"attempt {record.artifact.attempt}: {status} category={category}\n")
            if record.outcome.stderr:
                fh.write(record.outcome.stderr[:4000] + "\n")

    result = run_scene_loop(
        scene_index=index,
        spec=spec,
        generator=ctx.generator,
        executor=ctx.executor,
        max_fixes=ctx.max_fixes,
        fix_context_fn=fix_context_fn if ctx.rag else None,
        initial_context=impl_context,
        plan_text=f"{spec.outline.title}: {spec.outline.description}",
        on_attempt=on_attempt,
    )
    return spec, result


def run_theorem(
    theorem: TheoremEntry,
    ctx: PipelineContext,
    runs_root: str | Path,
    run_id: str | None = None,
) -> tuple[RunRecord, VideoArtifact | None]:
    """Full orchestration for one theorem. Stage failures are recorded in
    the RunRecord, never raised; partial outputs stay on disk."""
    started = time.monotonic()
    run_id = run_id or time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    run_dir = Path(runs_root) / theorem.id / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    record = RunRecord(
        theorem_id=theorem.id,
        scene_results=[],
        success=False,
        wall_time_s=0.0,
        model_id=ctx.generator.model_id,
        max_fixes=ctx.max_fixes,
    )
    artifact: VideoArtifact | None = None
    try:
        story_context = _retrieve_for(ctx, "storyboard", f"{theorem.name}\n{theorem.description}")
        plan = ctx.planner.plan_video(
            theorem, context="\n\n".join(chunk.text for chunk, _ in story_context)
        )
        (run_dir / "plan.json").write_text(
            json.dumps(
                {
                    "theorem_id": plan.theorem_id,
                    "scenes": [dataclasses.asdict(s) for s in plan.scenes],
                },
                indent=2,
            ),
            encoding="utf-8",
        )
        specs: dict[int, SceneSpec] = {}
        results: dict[int, SceneResult] = {}
        if ctx.parallelism > 1 and len(plan.scenes) > 1:
            with ThreadPoolExecutor(max_workers=ctx.parallelism) as pool:
                futures = {
                    pool.submit(_scene_job, ctx, run_dir, plan, i): i
                    for i in range(len(plan.scenes))
                }
                for future, i in futures.items():
                    specs[i], results[i] = future.result()
        else:
            for i in range(len(plan.scenes)):
                specs[i], results[i] = _scene_job(ctx, run_dir, plan, i)
        record.scene_results = [results[i] for i in sorted(results)]
        record.success = all(r.succeeded for r in record.scene_results)

        media_dir = run_dir / "media"
        media_dir.mkdir(exist_ok=True)
        rendered: list[RenderedScene] = []
        for i in sorted(results):
            result = results[i]
            if not result.succeeded:
                continue
            final_attempt = result.attempts[-1]
            clip_src = final_attempt.outcome.media_path
            clip_dst = media_dir / f"scene_{i}.mp4"
            shutil.copyfile(clip_src, clip_dst)
            narration = specs[i].narration
            _, narration_s = synthesize_voiceover(
                narration, media_dir / f"narration_{i}.wav", ctx.tts
            )
            duration = max(final_attempt.outcome.duration_s, narration_s)
            rendered.append(
                RenderedScene(
                    scene_index=i,
                    video_path=str(clip_dst),
                    duration_s=duration,
                    narration=narration,
                    timing=load_timing_sidecar(clip_src),
                )
            )
        if record.success:
            artifact = assemble_video(
                rendered,
                theorem.id,
                run_dir,
                ctx.media_tool,
                ledger_path=str(run_dir / "ledger.jsonl"),
                min_duration_warn_s=ctx.min_duration_warn_s,
            )
    except Exception as exc:
        log.error("run for %s failed: %s", theorem.id, exc)
        (run_dir / "error.txt").write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
        record.success = False
    record.wall_time_s = time.monotonic() - started
    (run_dir / "run_record.json").write_text(
        json.dumps(record.to_json(theorem), indent=2), encoding="utf-8"
    )
    return record, artifact
