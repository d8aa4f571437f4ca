"""Benchmark corpus of theorem entries: loading, validation, and stats."""
from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, asdict
from pathlib import Path

DIFFICULTIES = ("Easy", "Medium", "Hard")
SUBJECTS = ("Mathematics", "Physics", "Chemistry", "Computer Science")

ENTRY_FIELDS = ("id", "name", "description", "difficulty", "subject", "subfield")


class MissingFile(FileNotFoundError):
    pass


class MalformedRecord(ValueError):
    def __init__(self, index: int, field: str, message: str):
        super().__init__(f"record {index}, field {field!r}: {message}")
        self.index = index
        self.field = field


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class TheoremEntry:
    id: str
    name: str
    description: str
    difficulty: str
    subject: str
    subfield: str


@dataclass(frozen=True)
class CorpusStats:
    total: int
    per_difficulty: dict[str, int]
    per_subject: dict[str, int]
    subfield_count: int


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "entry"


def assign_ids(records: list[dict]) -> None:
    """Fill missing ids with slugified names, numeric suffix on collision."""
    seen: Counter[str] = Counter()
    for rec in records:
        if rec.get("id"):
            seen[rec["id"]] += 1
            continue
        base = slugify(str(rec.get("name", "")))
        slug = base
        while seen[slug]:
            slug = f"{base}-{seen[base] + 1}"
            seen[base] += 1
        seen[slug] += 1
        rec["id"] = slug


def _validate_record(index: int, rec: object) -> TheoremEntry:
    if not isinstance(rec, dict):
        raise MalformedRecord(index, "<record>", "not a JSON object")
    for field in ENTRY_FIELDS:
        if field not in rec:
            raise MalformedRecord(index, field, "missing")
        if not isinstance(rec[field], str):
            raise MalformedRecord(index, field, "not a string")
    if not rec["name"].strip():
        raise MalformedRecord(index, "name", "empty")
    if not rec["description"].strip():
        raise MalformedRecord(index, "description", "empty")
    if rec["difficulty"] not in DIFFICULTIES:
        raise MalformedRecord(index, "difficulty", f"{rec['difficulty']!r} not in {DIFFICULTIES}")
    if rec["subject"] not in SUBJECTS:
        raise MalformedRecord(index, "subject", f"{rec['subject']!r} not in {SUBJECTS}")
    return TheoremEntry(**{f: rec[f] for f in ENTRY_FIELDS})


def load_corpus(path: str | Path) -> list[TheoremEntry]:
    """Load a JSON-array corpus file, validating every record in order."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise MalformedRecord(0, "<root>", "corpus file is not a JSON array")
    entries = [_validate_record(i, rec) for i, rec in enumerate(data)]
    ids = Counter(e.id for e in entries)
    dupes = [i for i, e in enumerate(entries) if ids[e.id] > 1]
    if dupes:
        raise MalformedRecord(dupes[1], "id", f"duplicate id {entries[dupes[1]].id!r}")
    return entries


def save_corpus(entries: list[TheoremEntry], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([asdict(e) for e in entries], indent=2) + "\n", encoding="utf-8"
    )


def corpus_stats(entries: list[TheoremEntry]) -> CorpusStats:
    if not entries:
        raise EmptyCorpus("no entries")
    per_difficulty = Counter(e.difficulty for e in entries)
    per_subject = Counter(e.subject for e in entries)
    return CorpusStats(
        total=len(entries),
        per_difficulty={d: per_difficulty.get(d, 0) for d in DIFFICULTIES},
        per_subject={s: per_subject.get(s, 0) for s in SUBJECTS},
        subfield_count=len({e.subfield for e in entries}),
    )


def format_stats(stats: CorpusStats) -> str:
    lines = [f"total       {stats.total}"]
    for d in DIFFICULTIES:
        lines.append(f"{d:<12}{stats.per_difficulty[d]}")
    for s in SUBJECTS:
        lines.append(f"{s:<12}{stats.per_subject[s]}" if len(s) < 12 else f"{s}  {stats.per_subject[s]}")
    lines.append(f"subfields   {stats.subfield_count}")
    return "\n".join(lines)


def find_entry(entries: list[TheoremEntry], theorem_id: str) -> TheoremEntry:
    for e in entries:
        if e.id == theorem_id:
            return e
    raise KeyError(theorem_id)
