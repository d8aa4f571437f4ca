import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.conftest import synthetic_benchmark
from theoremcast.corpus import (
    EmptyCorpus,
    MalformedRecord,
    MissingFile,
    TheoremEntry,
    assign_ids,
    corpus_stats,
    find_entry,
    load_corpus,
    save_corpus,
    slugify,
)

TWO_RECORDS = [
    {
        "id": "mean-value-theorem",
        "name": "Mean Value Theorem",
        "description": "A differentiable function attains its average slope somewhere.",
        "difficulty": "Medium",
        "subject": "Mathematics",
        "subfield": "Real Analysis",
    },
    {
        "id": "hookes-law",
        "name": "Hooke's Law",
        "description": "Spring force is proportional to extension.",
        "difficulty": "Easy",
        "subject": "Physics",
        "subfield": "Mechanics",
    },
]


def write(tmp_path, records, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(records), encoding="utf-8")
    return path


def test_identity_load_preserves_order(tmp_path):
    entries = load_corpus(write(tmp_path, TWO_RECORDS))
    assert [e.id for e in entries] == ["mean-value-theorem", "hookes-law"]
    assert entries[0].subfield == "Real Analysis"


def test_full_benchmark_shape(tmp_path):
    entries = load_corpus(write(tmp_path, synthetic_benchmark()))
    assert len(entries) == 240
    stats = corpus_stats(entries)
    assert stats.per_difficulty == {"Easy": 80, "Medium": 80, "Hard": 80}
    assert stats.total == 240
    assert stats.subfield_count == 68
    assert sum(stats.per_subject.values()) == stats.total


def test_unknown_difficulty_rejected(tmp_path):
    bad = [dict(TWO_RECORDS[0], difficulty="Expert")]
    with pytest.raises(MalformedRecord) as err:
        load_corpus(write(tmp_path, bad))
    assert err.value.index == 0
    assert err.value.field == "difficulty"


def test_missing_file():
    with pytest.raises(MissingFile):
        load_corpus("/nonexistent/corpus.json")


@pytest.mark.parametrize("field", ["name", "description"])
def test_empty_text_fields_rejected(tmp_path, field):
    bad = [dict(TWO_RECORDS[0], **{field: "  "})]
    with pytest.raises(MalformedRecord):
        load_corpus(write(tmp_path, bad))


def test_duplicate_ids_rejected(tmp_path):
    with pytest.raises(MalformedRecord) as err:
        load_corpus(write(tmp_path, [TWO_RECORDS[0], dict(TWO_RECORDS[1], id="mean-value-theorem")]))
    assert err.value.field == "id"


def test_round_trip(tmp_path):
    entries = load_corpus(write(tmp_path, synthetic_benchmark(24)))
    out = tmp_path / "again.json"
    save_corpus(entries, out)
    assert load_corpus(out) == entries


def test_singleton_stats():
    entry = TheoremEntry("x", "X Inequality", "desc", "Easy", "Mathematics", "Analysis")
    stats = corpus_stats([entry])
    assert stats.total == 1
    assert stats.per_difficulty["Easy"] == 1
    assert stats.per_subject["Mathematics"] == 1
    assert stats.subfield_count == 1


def test_empty_corpus_stats():
    with pytest.raises(EmptyCorpus):
        corpus_stats([])


def test_stats_permutation_invariant():
    records = synthetic_benchmark(40)
    base = [TheoremEntry(**r) for r in records]
    shuffled = base[:]
    random.Random(5).shuffle(shuffled)
    assert corpus_stats(base) == corpus_stats(shuffled)


def test_find_entry():
    entries = [TheoremEntry(**r) for r in TWO_RECORDS]
    assert find_entry(entries, "hookes-law").name == "Hooke's Law"
    with pytest.raises(KeyError):
        find_entry(entries, "nope")


def test_slugify():
    assert slugify("Bayes' Theorem") == "bayes-theorem"
    assert slugify("  PV = nRT!  ") == "pv-nrt"


def test_assign_ids_collision_suffix():
    records = [{"name": "Same Name"}, {"name": "Same Name"}, {"name": "Same Name"}]
    assign_ids(records)
    assert [r["id"] for r in records] == ["same-name", "same-name-2", "same-name-3"]


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=3, max_value=120))
def test_totals_consistent_for_any_size(n):
    entries = [TheoremEntry(**r) for r in synthetic_benchmark(n)]
    stats = corpus_stats(entries)
    assert stats.total == n
    assert sum(stats.per_difficulty.values()) == n
    assert sum(stats.per_subject.values()) == n
