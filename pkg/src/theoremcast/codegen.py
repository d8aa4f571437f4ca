"""Coding stage: turn a scene spec plus retrieved context into an animation
script, classify execution errors, and repair within a bounded fix loop."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable

from .gateway import ChatRequest, Gateway
from .planner import SceneSpec
from .prompts import PromptLibrary

log = logging.getLogger(__name__)

DEFAULT_MAX_FIXES = 5          # fix retries after the initial generation
STDERR_PROMPT_LIMIT = 8000     # chars of stderr forwarded to fix prompts


class NoCodeBlock(ValueError):
    def __init__(self, raw_text: str):
        super().__init__(f"no fenced code block in response: {raw_text[:200]!r}")
        self.raw_text = raw_text


class RendererUnavailable(RuntimeError):
    pass


class ErrorCategory(Enum):
    ApiHallucination = "ApiHallucination"
    LatexRendering = "LatexRendering"
    GeneralCoding = "GeneralCoding"
    Unknown = "Unknown"


@dataclass(frozen=True)
class ErrorClassification:
    category: ErrorCategory
    evidence: str  # the matched pattern, or "" for Unknown


@dataclass(frozen=True)
class CodeArtifact:
    scene_index: int
    attempt: int
    source: str
    context_chunk_ids: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.source.strip():
            raise ValueError("artifact source is empty")
        if self.attempt < 0:
            raise ValueError("attempt must be >= 0")


@dataclass(frozen=True)
class ExecutionOutcome:
    ok: bool
    media_path: str | None = None
    duration_s: float = 0.0
    stderr: str = ""


@dataclass(frozen=True)
class AttemptRecord:
    artifact: CodeArtifact
    outcome: ExecutionOutcome
    classification: ErrorClassification | None  # None on success


@dataclass(frozen=True)
class SceneResult:
    scene_index: int
    attempts: tuple[AttemptRecord, ...]
    succeeded_attempt: int | None  # None means Failed

    @property
    def succeeded(self) -> bool:
        return self.succeeded_attempt is not None


_CODE_FENCE = re.compile(r"```(?:python|py)?\n(.*?)```", re.DOTALL)


def extract_code_block(text: str) -> str:
    """First fenced code block wins; extra blocks are logged, not used."""
    blocks = _CODE_FENCE.findall(text)
    blocks = [b for b in blocks if b.strip()]
    if not blocks:
        raise NoCodeBlock(text)
    if len(blocks) > 1:
        log.info("response contained %d code blocks; using the first", len(blocks))
    return blocks[0]


def load_pattern_table(path: str | Path | None = None) -> list[tuple[ErrorCategory, re.Pattern]]:
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
    else:
        raw = resources.files("theoremcast").joinpath("error_patterns.json").read_text(encoding="utf-8")
    table = []
    for row in json.loads(raw):
        table.append((ErrorCategory(row["category"]), re.compile(row["regex"])))
    return table


_DEFAULT_TABLE: list[tuple[ErrorCategory, re.Pattern]] | None = None


def classify_error(
    stderr: str, table: list[tuple[ErrorCategory, re.Pattern]] | None = None
) -> ErrorClassification:
    """First match over the ordered pattern table; Unknown if nothing hits."""
    global _DEFAULT_TABLE
    if table is None:
        if _DEFAULT_TABLE is None:
            _DEFAULT_TABLE = load_pattern_table()
        table = _DEFAULT_TABLE
    for category, pattern in table:
        m = pattern.search(stderr)
        if m:
            return ErrorClassification(category=category, evidence=m.group(0))
    return ErrorClassification(category=ErrorCategory.Unknown, evidence="")


class CodeGenerator:
    def __init__(self, gateway: Gateway, model_id: str, prompts: PromptLibrary,
                 temperature: float = 0.7, stderr_limit: int = STDERR_PROMPT_LIMIT):
        self.gateway = gateway
        self.model_id = model_id
        self.prompts = prompts
        self.temperature = temperature
        self.stderr_limit = stderr_limit

    def _ask(self, tag: str, system: str, user: str) -> str:
        request = ChatRequest(
            model_id=self.model_id, system=system, user=user,
            temperature=self.temperature, tag=tag,
        )
        return self.gateway.complete(request).text

    def generate_scene_code(
        self, scene_index: int, spec: SceneSpec, context_chunks: list = ()
    ) -> CodeArtifact:
        context_text = "\n\n".join(chunk.text for chunk, _ in context_chunks) or "(none)"
        user = self.prompts.render(
            "code_generation",
            title=spec.outline.title,
            description=spec.outline.description,
            layout=spec.outline.layout,
            narration=spec.narration,
            visual_elements="\n".join(f"- {v}" for v in spec.visual_elements),
            animation_notes=spec.animation_notes or "(none)",
            context=context_text,
        )
        text = self._ask("codegen", self.prompts.get("code_generation_system"), user)
        return CodeArtifact(
            scene_index=scene_index,
            attempt=0,
            source=extract_code_block(text),
            context_chunk_ids=tuple(chunk.chunk_id for chunk, _ in context_chunks),
        )

    def fix_code(
        self,
        artifact: CodeArtifact,
        stderr: str,
        plan_text: str,
        context_chunks: list = (),
        max_fixes: int = DEFAULT_MAX_FIXES,
    ) -> CodeArtifact:
        if artifact.attempt >= max_fixes:
            raise ValueError(f"attempt {artifact.attempt} has no fix budget left (N={max_fixes})")
        context_text = "\n\n".join(chunk.text for chunk, _ in context_chunks) or "(none)"
        user = self.prompts.render(
            "code_fix",
            implementation_plan=plan_text,
            manim_code=artifact.source,
            error_message=stderr[: self.stderr_limit],
            context=context_text,
        )
        text = self._ask("fix", self.prompts.get("code_fix_system"), user)
        return CodeArtifact(
            scene_index=artifact.scene_index,
            attempt=artifact.attempt + 1,
            source=extract_code_block(text),
            context_chunk_ids=tuple(chunk.chunk_id for chunk, _ in context_chunks),
        )


def run_scene_loop(
    scene_index: int,
    spec: SceneSpec,
    generator: CodeGenerator,
    executor: Callable[[CodeArtifact], ExecutionOutcome],
    max_fixes: int = DEFAULT_MAX_FIXES,
    pattern_table: list[tuple[ErrorCategory, re.Pattern]] | None = None,
    fix_context_fn: Callable[[str], list] | None = None,
    initial_context: list = (),
    plan_text: str = "",
    on_attempt: Callable[[AttemptRecord], None] | None = None,
) -> SceneResult:
    """Generate, execute, and repair a scene script, stopping at the first
    clean render or after `max_fixes` repairs (at most max_fixes+1 attempts).

    `fix_context_fn` maps stderr to retrieval context for the fix prompt;
    by default it is consulted on every failed attempt.
    """
    if executor is None:
        raise RendererUnavailable("no executor configured")
    attempts: list[AttemptRecord] = []
    artifact = generator.generate_scene_code(scene_index, spec, initial_context)
    while True:
        outcome = executor(artifact)
        if outcome.ok:
            record = AttemptRecord(artifact=artifact, outcome=outcome, classification=None)
            attempts.append(record)
            if on_attempt:
                on_attempt(record)
            return SceneResult(
                scene_index=scene_index,
                attempts=tuple(attempts),
                succeeded_attempt=artifact.attempt,
            )
        classification = classify_error(outcome.stderr, pattern_table)
        record = AttemptRecord(artifact=artifact, outcome=outcome, classification=classification)
        attempts.append(record)
        if on_attempt:
            on_attempt(record)
        if artifact.attempt >= max_fixes:
            return SceneResult(
                scene_index=scene_index, attempts=tuple(attempts), succeeded_attempt=None
            )
        fix_context = fix_context_fn(outcome.stderr) if fix_context_fn else []
        artifact = generator.fix_code(
            artifact, outcome.stderr, plan_text, fix_context, max_fixes=max_fixes
        )
