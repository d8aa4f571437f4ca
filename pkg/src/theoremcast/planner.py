"""Planner stage: high-level video plan, then per-scene refinement into an
implementable spec. Responses arrive as fenced, field-labeled blocks."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import TheoremEntry
from .gateway import ChatRequest, Gateway
from .prompts import PromptLibrary


class PlanParseError(ValueError):
    def __init__(self, raw_text: str, message: str = "could not parse plan"):
        super().__init__(f"{message}: {raw_text[:200]!r}")
        self.raw_text = raw_text


class PlanInvariantError(ValueError):
    def __init__(self, which: str):
        super().__init__(which)
        self.which = which


class SceneParseError(ValueError):
    def __init__(self, index: int, raw_text: str, message: str = "could not parse scene"):
        super().__init__(f"scene {index}: {message}: {raw_text[:200]!r}")
        self.index = index
        self.raw_text = raw_text


@dataclass(frozen=True)
class SceneOutline:
    title: str       # 2-5 words
    purpose: str
    description: str
    layout: str


@dataclass(frozen=True)
class VideoPlan:
    theorem_id: str
    scenes: tuple[SceneOutline, ...]


@dataclass(frozen=True)
class SceneSpec:
    outline: SceneOutline
    narration: str
    visual_elements: tuple[str, ...]
    animation_notes: str
    transitions: str


_FENCE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.DOTALL)


def _fenced_blocks(text: str) -> list[str]:
    return [m.group(1) for m in _FENCE.finditer(text)]


def _parse_labeled_block(block: str, labels: list[str]) -> dict[str, str]:
    """Line-anchored, case-insensitive `Label: value` fields; values run
    until the next label."""
    pattern = re.compile(
        r"^\s*(" + "|".join(re.escape(l) for l in labels) + r")\s*:\s*(.*)$",
        re.IGNORECASE,
    )
    fields: dict[str, list[str]] = {}
    current: str | None = None
    for line in block.splitlines():
        m = pattern.match(line)
        if m:
            current = m.group(1).lower()
            fields[current] = [m.group(2).strip()]
        elif current is not None:
            fields[current].append(line.rstrip())
    return {k: "\n".join(v).strip() for k, v in fields.items()}


PLAN_LABELS = ["Scene Title", "Scene Purpose", "Scene Description", "Scene Layout"]
REFINE_LABELS = ["Narration", "Visual Elements", "Animation Notes", "Transitions"]


def parse_plan_response(text: str) -> list[SceneOutline]:
    blocks = _fenced_blocks(text)
    if not blocks:
        raise PlanParseError(text, "no fenced scene blocks")
    outlines = []
    for block in blocks:
        fields = _parse_labeled_block(block, PLAN_LABELS)
        missing = [l for l in PLAN_LABELS if not fields.get(l.lower())]
        if missing:
            raise PlanParseError(block, f"scene block missing {missing}")
        outlines.append(
            SceneOutline(
                title=fields["scene title"],
                purpose=fields["scene purpose"],
                description=fields["scene description"],
                layout=fields["scene layout"],
            )
        )
    return outlines


def check_plan_invariants(outlines: list[SceneOutline], max_scenes: int) -> str | None:
    """Return a description of the first violated invariant, or None."""
    if not 1 <= len(outlines) <= max_scenes:
        return f"scene count {len(outlines)} outside [1, {max_scenes}]"
    for i, o in enumerate(outlines):
        words = len(o.title.split())
        if not 2 <= words <= 5:
            return f"scene {i} title has {words} words, need 2-5"
        for name in ("title", "purpose", "description", "layout"):
            if not getattr(o, name).strip():
                return f"scene {i} field {name} empty"
    return None


def parse_refine_response(index: int, text: str) -> dict:
    blocks = _fenced_blocks(text) or [text]
    fields = _parse_labeled_block(blocks[0], REFINE_LABELS)
    narration = fields.get("narration", "")
    if not narration.strip():
        raise SceneParseError(index, text, "missing narration")
    raw_visuals = fields.get("visual elements", "")
    visuals = [
        re.sub(r"^[-*\d.)\s]+", "", line).strip()
        for line in raw_visuals.splitlines()
        if line.strip()
    ]
    visuals = [v for v in visuals if v]
    if not visuals:
        raise SceneParseError(index, text, "missing visual elements")
    return {
        "narration": " ".join(narration.split()),
        "visual_elements": tuple(visuals),
        "animation_notes": fields.get("animation notes", "").strip(),
        "transitions": fields.get("transitions", "").strip(),
    }


class Planner:
    def __init__(self, gateway: Gateway, model_id: str, prompts: PromptLibrary,
                 max_scenes: int = 8, target_scenes: int = 7, temperature: float = 0.7):
        self.gateway = gateway
        self.model_id = model_id
        self.prompts = prompts
        self.max_scenes = max_scenes
        self.target_scenes = target_scenes
        self.temperature = temperature

    def _ask(self, tag: str, system: str, user: str) -> str:
        request = ChatRequest(
            model_id=self.model_id, system=system, user=user,
            temperature=self.temperature, tag=tag,
        )
        return self.gateway.complete(request).text

    def plan_video(self, theorem: TheoremEntry, context: str = "") -> VideoPlan:
        """One plan call; on a malformed or invariant-violating response,
        re-prompt once with a repair instruction before failing."""
        system = self.prompts.get("scene_plan_system")
        user = self.prompts.render(
            "scene_plan",
            topic=theorem.name,
            description=theorem.description,
            target_scenes=str(self.target_scenes),
            max_scenes=str(self.max_scenes),
            context=context,
        )
        text = self._ask("plan", system, user)
        for attempt in range(2):
            try:
                outlines = parse_plan_response(text)
                violation = check_plan_invariants(outlines, self.max_scenes)
            except PlanParseError as exc:
                if attempt == 1:
                    raise
                violation = str(exc)
                outlines = None
            if outlines is not None and violation is None:
                return VideoPlan(theorem_id=theorem.id, scenes=tuple(outlines))
            if attempt == 1:
                raise PlanInvariantError(violation)
            repair = self.prompts.render("plan_repair", problem=violation, previous=text)
            text = self._ask("plan", system, repair)
        raise AssertionError("unreachable")

    def refine_scene(self, plan: VideoPlan, index: int, context: str = "") -> SceneSpec:
        if not 0 <= index < len(plan.scenes):
            raise IndexError(f"scene index {index} outside plan of {len(plan.scenes)}")
        outline = plan.scenes[index]
        system = self.prompts.get("scene_refine_system")
        user = self.prompts.render(
            "scene_refine",
            title=outline.title,
            purpose=outline.purpose,
            description=outline.description,
            layout=outline.layout,
            context=context,
        )
        text = self._ask("refine", system, user)
        try:
            fields = parse_refine_response(index, text)
        except SceneParseError:
            repair = self.prompts.render(
                "refine_repair",
                problem="previous response was missing required labeled fields",
                previous=text,
            )
            text = self._ask("refine", system, repair)
            fields = parse_refine_response(index, text)
        return SceneSpec(outline=outline, **fields)
