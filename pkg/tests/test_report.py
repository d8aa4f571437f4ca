import random

import pytest

from theoremcast.gateway import LedgerRecord, UsageLedger
from theoremcast.report import (
    EmptyLedger,
    EmptyReports,
    MissingTraces,
    RunEntry,
    cost_table,
    cumulative_success,
    cumulative_table,
    format_percent,
    score_table,
    success_table,
    theorem_success_at_budget,
)


def entry(i, success, difficulty="Easy", subject="Mathematics", model="o3-mini", attempts=None):
    if attempts is None:
        attempts = (0,) if success else (None,)
    return RunEntry(
        theorem_id=f"t{i}",
        difficulty=difficulty,
        subject=subject,
        success=success,
        model_id=model,
        scene_attempts=tuple(attempts),
    )


class TestFormatPercent:
    def test_round_half_up_one_decimal(self):
        assert format_percent(225, 240) == "93.8%"  # 93.75 rounds up
        assert format_percent(0, 240) == "0.0%"
        assert format_percent(1, 8) == "12.5%"
        assert format_percent(1, 3) == "33.3%"


class TestSuccessTable:
    def test_overall_matches_published_row(self):
        entries = [entry(i, i < 225) for i in range(240)]
        table = success_table(entries)
        assert table.rows[0][-1] == "93.8%"

    def test_zero_success(self):
        entries = [entry(i, False) for i in range(240)]
        assert success_table(entries).rows[0][-1] == "0.0%"

    def test_cell_partition_consistency(self):
        rng = random.Random(3)
        entries = [
            entry(
                i,
                rng.random() < 0.6,
                difficulty=rng.choice(["Easy", "Medium", "Hard"]),
                subject=rng.choice(
                    ["Mathematics", "Physics", "Chemistry", "Computer Science"]
                ),
            )
            for i in range(120)
        ]
        by_difficulty = sum(
            sum(e.success for e in entries if e.difficulty == d)
            for d in ("Easy", "Medium", "Hard")
        )
        assert by_difficulty == sum(e.success for e in entries)

    def test_empty_ledger(self):
        with pytest.raises(EmptyLedger):
            success_table([])

    def test_text_and_csv_render(self):
        table = success_table([entry(0, True)])
        assert "o3-mini" in table.to_text()
        assert table.to_csv().startswith("model,")

    def test_rerender_is_byte_identical(self):
        entries = [entry(i, i % 3 != 0) for i in range(30)]
        first = success_table(entries)
        second = success_table(list(entries))
        assert first.to_text() == second.to_text()
        assert first.to_csv() == second.to_csv()


def synthesize_easy_row(counts_by_first_success, total=100):
    """counts_by_first_success: {attempt_index_or_None: count}."""
    entries = []
    i = 0
    for attempt, count in counts_by_first_success.items():
        for _ in range(count):
            entries.append(entry(i, attempt is not None, attempts=(attempt,)))
            i += 1
    assert i == total
    return entries


class TestCumulativeSuccess:
    def test_all_succeed_at_zero(self):
        entries = [entry(i, True, attempts=(0, 0, 0)) for i in range(10)]
        rates = cumulative_success(entries, [0, 1, 5])
        assert rates["Easy"] == {0: 1.0, 1: 1.0, 5: 1.0}

    def test_monotone_in_budget(self):
        rng = random.Random(11)
        for _ in range(50):
            entries = []
            for i in range(30):
                scenes = tuple(
                    rng.choice([0, 1, 2, 3, 4, 5, None]) for _ in range(rng.randint(1, 4))
                )
                entries.append(entry(i, all(a is not None for a in scenes), attempts=scenes))
            rates = cumulative_success(entries, [0, 1, 2, 3, 4, 5])["Easy"]
            values = [rates[n] for n in (0, 1, 2, 3, 4, 5)]
            assert values == sorted(values)

    def test_published_easy_row_shape(self):
        # cumulative 7/51/73/86/91/93 per 100 theorems
        entries = synthesize_easy_row(
            {0: 7, 1: 44, 2: 22, 3: 13, 4: 5, 5: 2, None: 7}
        )
        rates = cumulative_success(entries, [0, 1, 2, 3, 4, 5])["Easy"]
        assert [round(rates[n] * 100) for n in (0, 1, 2, 3, 4, 5)] == [7, 51, 73, 86, 91, 93]
        table = cumulative_table(entries, [0, 1, 2, 3, 4, 5])
        assert table.rows[0] == ("Easy", "7.0%", "51.0%", "73.0%", "86.0%", "91.0%", "93.0%")

    def test_theorem_needs_every_scene_within_budget(self):
        multi = entry(0, True, attempts=(0, 3, 1))
        assert not theorem_success_at_budget(multi, 2)
        assert theorem_success_at_budget(multi, 3)

    def test_missing_traces(self):
        bad = entry(0, True, attempts=())
        with pytest.raises(MissingTraces):
            theorem_success_at_budget(bad, 1)


class TestScoreTable:
    def report_row(self, values):
        keys = (
            "accuracy_depth",
            "visual_relevance",
            "logical_flow",
            "element_layout",
            "visual_consistency",
        )
        return dict(zip(keys, values))

    def test_published_rows(self):
        table = score_table(
            {
                "gpt-4o": [self.report_row((0.79, 0.79, 0.89, 0.59, 0.87))],
                "claude-3.5-sonnet": [self.report_row((0.75, 0.87, 0.88, 0.57, 0.92))],
                "o3-mini": [self.report_row((0.76, 0.76, 0.89, 0.61, 0.88))],
            }
        )
        overall = {row[0]: row[-1] for row in table.rows}
        assert overall == {"gpt-4o": "0.78", "claude-3.5-sonnet": "0.79", "o3-mini": "0.77"}

    def test_mean_idempotent_on_duplicates(self):
        row = self.report_row((0.5, 0.6, 0.7, 0.8, 0.9))
        once = score_table({"m": [row]})
        twice = score_table({"m": [row, dict(row)]})
        assert once.rows == twice.rows

    def test_empty(self):
        with pytest.raises(EmptyReports):
            score_table({})


def one_record_ledger(model, in_tokens, out_tokens, prices, latency_ms=0.0):
    ledger = UsageLedger({model: prices})
    ledger.append(LedgerRecord("plan", model, in_tokens, out_tokens, latency_ms))
    return ledger


class TestCostTable:
    def test_published_cost_rows(self):
        table = cost_table(
            {
                "gpt-4o": [one_record_ledger("gpt-4o", 350_000, 84_000, (2.50, 10.00))],
                "o3-mini": [one_record_ledger("o3-mini", 434_000, 154_000, (1.10, 4.40))],
                "gemini-2.0-flash": [
                    one_record_ledger("gemini-2.0-flash", 595_000, 119_000, (0.10, 0.40))
                ],
            }
        )
        costs = {row[0]: row[3] for row in table.rows}
        assert costs["gpt-4o"] == "1.71"
        assert costs["o3-mini"] == "1.16"
        assert costs["gemini-2.0-flash"] == "0.11"
        assert any("rounded" in note for note in table.notes)

    def test_averages_over_ledgers(self):
        ledgers = [
            one_record_ledger("m", 1000, 0, (1.0, 1.0)),
            one_record_ledger("m", 3000, 0, (1.0, 1.0)),
        ]
        table = cost_table({"m": ledgers})
        assert table.rows[0][1] == "2000"

    def test_empty(self):
        with pytest.raises(EmptyReports):
            cost_table({})
