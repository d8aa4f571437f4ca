import json
import socket

import pytest

from theoremcast.corpus import TheoremEntry
from theoremcast.gateway import ChatResponse, Gateway, MockProvider, UsageLedger
from theoremcast.prompts import PromptLibrary

SUBFIELD_POOL = [f"Subfield {i:02d}" for i in range(68)]
SUBJECT_CYCLE = ("Mathematics", "Physics", "Chemistry", "Computer Science")


def synthetic_benchmark(n: int = 240) -> list[dict]:
    """Benchmark-shaped corpus: 80 per difficulty, subjects balanced,
    68 distinct subfields."""
    records = []
    for i in range(n):
        difficulty = ("Easy", "Medium", "Hard")[i * 3 // n] if n >= 3 else "Easy"
        records.append(
            {
                "id": f"synthetic-{i:03d}",
                "name": f"Synthetic Result {i:03d}",
                "description": f"Statement and context for synthetic benchmark item {i}.",
                "difficulty": difficulty,
                "subject": SUBJECT_CYCLE[i % 4],
                "subfield": SUBFIELD_POOL[i % len(SUBFIELD_POOL)],
            }
        )
    return records


@pytest.fixture
def benchmark_file(tmp_path):
    path = tmp_path / "benchmark.json"
    path.write_text(json.dumps(synthetic_benchmark()), encoding="utf-8")
    return path


@pytest.fixture
def theorem():
    return TheoremEntry(
        id="pythagorean-theorem",
        name="Pythagorean Theorem",
        description="In a right triangle the square of the hypotenuse equals the sum of the squares of the legs.",
        difficulty="Easy",
        subject="Mathematics",
        subfield="Geometry",
    )


@pytest.fixture
def chem_theorem():
    return TheoremEntry(
        id="le-chatelier",
        name="Le Chatelier's Principle",
        description="An equilibrium shifts to counteract imposed changes.",
        difficulty="Medium",
        subject="Chemistry",
        subfield="Chemical Equilibrium",
    )


@pytest.fixture
def prompts():
    return PromptLibrary()


class ScriptedProvider:
    """Test double returning queued responses in order; records requests."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        if not self.responses:
            raise AssertionError("scripted provider exhausted")
        text = self.responses.pop(0)
        if isinstance(text, Exception):
            raise text
        return ChatResponse(text=text, input_tokens=10, output_tokens=20, latency_ms=1.0)


@pytest.fixture
def scripted_gateway():
    def build(responses, model_id="mock", price_table=None):
        provider = ScriptedProvider(responses)
        gateway = Gateway(
            {model_id: provider},
            ledger=UsageLedger(price_table or {model_id: (0.0, 0.0)}),
        )
        return gateway, provider

    return build


@pytest.fixture
def mock_gateway(tmp_path):
    def build(model_id="mock", fixture_dir=None):
        return Gateway(
            {model_id: MockProvider(fixture_dir)},
            ledger=UsageLedger({model_id: (0.0, 0.0)}),
        )

    return build


@pytest.fixture
def no_network(monkeypatch):
    """Any socket connection attempt fails the test."""

    def guard(*args, **kwargs):
        raise AssertionError("network access attempted in offline test")

    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(socket, "create_connection", guard)
