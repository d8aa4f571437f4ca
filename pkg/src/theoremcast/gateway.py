"""Uniform chat-completion gateway over hosted providers, with a
deterministic offline mock, usage metering, and cost accounting.

All network traffic in the pipeline flows through Gateway.complete().
"""
from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

STAGE_TAGS = ("plan", "refine", "codegen", "fix", "judge", "query")


class AuthError(RuntimeError):
    pass


class RateLimited(RuntimeError):
    pass


class ProviderError(RuntimeError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider returned {status}: {body[:200]}")
        self.status = status
        self.body = body


class MissingPrice(KeyError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    system: str
    user: str
    temperature: float = 0.7
    max_output_tokens: int = 4096
    tag: str = "plan"

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.tag not in STAGE_TAGS:
            raise ValueError(f"unknown stage tag {self.tag!r}")
        if self.tag == "judge" and self.temperature != 0.0:
            raise ValueError("judge requests must use temperature 0")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    input_tokens: int
    output_tokens: int
    latency_ms: float


@dataclass(frozen=True)
class LedgerRecord:
    tag: str
    model_id: str
    input_tokens: int
    output_tokens: int
    latency_ms: float


@dataclass
class UsageLedger:
    """Append-only usage records plus the price table used to cost them."""

    price_table: dict[str, tuple[float, float]] = field(default_factory=dict)
    records: list[LedgerRecord] = field(default_factory=list)

    def append(self, record: LedgerRecord) -> None:
        self.records.append(record)

    def total_tokens(self) -> tuple[int, int]:
        return (
            sum(r.input_tokens for r in self.records),
            sum(r.output_tokens for r in self.records),
        )


def ledger_cost(ledger: UsageLedger) -> float:
    """Total USD cost: sum of per-record token counts times per-1M prices."""
    total = 0.0
    for rec in ledger.records:
        if rec.model_id not in ledger.price_table:
            raise MissingPrice(rec.model_id)
        in_price, out_price = ledger.price_table[rec.model_id]
        total += rec.input_tokens * in_price / 1e6 + rec.output_tokens * out_price / 1e6
    return total


def format_cost(cost: float) -> str:
    return f"{cost:.2f}"


# Per-1M-token USD prices implied by the published per-video cost figures.
DEFAULT_PRICE_TABLE: dict[str, tuple[float, float]] = {
    "gpt-4o": (2.50, 10.00),
    "claude-3.5-sonnet": (3.00, 15.00),
    "gemini-2.0-flash": (0.10, 0.40),
    "o3-mini": (1.10, 4.40),
    "mock": (0.0, 0.0),
}


def canonical_digest(model_id: str, system: str, user: str, temperature: float) -> str:
    """Stable request key: whitespace-normalized prompts, fixed field order."""

    def norm(text: str) -> str:
        return " ".join(text.split())

    payload = json.dumps(
        [model_id, norm(system), norm(user), round(temperature, 6)],
        ensure_ascii=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:32]


def _approx_tokens(text: str) -> int:
    return max(1, len(text) // 4)


_SCHEMA_KEY = re.compile(r'"(\w+)":\s*<([^>]*)>')


class MockProvider:
    """Offline provider: byte-exact fixture echo by request digest, with a
    deterministic synthesized fallback so unfixtured runs still complete."""

    def __init__(self, fixture_dir: str | Path | None = None):
        self.fixture_dir = Path(fixture_dir) if fixture_dir else None

    def complete(self, request: ChatRequest) -> ChatResponse:
        digest = canonical_digest(
            request.model_id, request.system, request.user, request.temperature
        )
        text = None
        if self.fixture_dir is not None:
            path = self.fixture_dir / f"{digest}.json"
            if path.exists():
                text = json.loads(path.read_text(encoding="utf-8"))["text"]
        if text is None:
            text = self._synthesize(request, digest)
        return ChatResponse(
            text=text,
            input_tokens=_approx_tokens(request.system + request.user),
            output_tokens=_approx_tokens(text),
            latency_ms=0.0,
        )

    @staticmethod
    def put_fixture(fixture_dir: str | Path, request: ChatRequest, text: str) -> Path:
        digest = canonical_digest(
            request.model_id, request.system, request.user, request.temperature
        )
        path = Path(fixture_dir) / f"{digest}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"text": text}), encoding="utf-8")
        return path

    def _synthesize(self, request: ChatRequest, digest: str) -> str:
        schema_keys = _SCHEMA_KEY.findall(request.user)
        if schema_keys:
            # Judge-style call that declares its JSON schema in the prompt.
            values = {}
            for key, hint in schema_keys:
                if "1-5" in hint or "1 to 5" in hint:
                    values[key] = 4
                else:
                    values[key] = 0.8
            return json.dumps(values)
        if request.tag == "plan":
            seed = digest[:6]
            scenes = [
                ("Setting The Stage", "Introduce the statement and why it matters."),
                ("Heart Of The Idea", "Walk through the core construction step by step."),
                ("Proof And Payoff", "Close the argument and show an application."),
            ]
            blocks = []
            for title, purpose in scenes:
                blocks.append(
                    "```\n"
                    f"Scene Title: {title}\n"
                    f"Scene Purpose: {purpose}\n"
                    f"Scene Description: Deterministic walkthrough {seed} of this part of the result.\n"
                    "Scene Layout: Title at the top, main figure centered, labels kept clear of edges.\n"
                    "```"
                )
            return "\n\n".join(blocks)
        if request.tag == "refine":
            return (
                "```\n"
                "Narration: We look at the statement one piece at a time. "
                "The picture shows exactly why the claim must hold.\n"
                "Visual Elements:\n"
                "- labeled diagram of the main object\n"
                "- step counter in the corner\n"
                "Animation Notes: Fade elements in as the narration mentions them.\n"
                "Transitions: Crossfade into the next scene.\n"
                "```"
            )
        if request.tag in ("codegen", "fix"):
            return (
                "Here is the scene script.\n\n"
                "```python\n"
                f"# deterministic stub scene {digest[:6]}\n"
                "print('render ok')\n"
                "```"
            )
        if request.tag == "query":
            return (
                "1. positioning text labels relative to shapes\n"
                "2. animating the construction of a diagram\n"
                "3. timing animations against narration\n"
            )
        # judge calls without a declared schema (e.g. plugin classification)
        return "none"


class HttpChatProvider:
    """OpenAI-compatible chat-completions client (most hosted providers
    expose this wire format)."""

    def __init__(self, base_url: str, api_key: str, model: str, timeout_s: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout_s = timeout_s

    def complete(self, request: ChatRequest) -> ChatResponse:
        import requests

        started = time.monotonic()
        resp = requests.post(
            f"{self.base_url}/chat/completions",
            headers={"Authorization": f"Bearer {self.api_key}"},
            json={
                "model": self.model,
                "messages": [
                    {"role": "system", "content": request.system},
                    {"role": "user", "content": request.user},
                ],
                "temperature": request.temperature,
                "max_tokens": request.max_output_tokens,
            },
            timeout=self.timeout_s,
        )
        latency_ms = (time.monotonic() - started) * 1000.0
        if resp.status_code in (401, 403):
            raise AuthError(f"auth failed for {self.model}: {resp.text[:200]}")
        if resp.status_code == 429:
            raise RateLimited(resp.text[:200])
        if resp.status_code >= 400:
            raise ProviderError(resp.status_code, resp.text)
        data = resp.json()
        choice = data["choices"][0]
        text = choice["message"]["content"] or ""
        if not text and choice.get("finish_reason") != "length":
            raise ProviderError(resp.status_code, "empty completion without truncation")
        usage = data.get("usage", {})
        return ChatResponse(
            text=text,
            input_tokens=int(usage.get("prompt_tokens", _approx_tokens(request.user))),
            output_tokens=int(usage.get("completion_tokens", _approx_tokens(text))),
            latency_ms=latency_ms,
        )


class _TokenBucket:
    def __init__(self, rate_per_s: float, burst: int):
        self.rate = rate_per_s
        self.capacity = float(burst)
        self.tokens = float(burst)
        self.updated = time.monotonic()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self.lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(wait)


class Gateway:
    """Provider registry plus shared usage ledger. Thread-safe for
    concurrent complete() callers; ledger appends are serialized."""

    def __init__(
        self,
        providers: dict[str, object],
        ledger: UsageLedger | None = None,
        max_retries: int = 3,
        backoff_base_s: float = 0.5,
        rate_per_s: float = 10.0,
        burst: int = 10,
        ledger_path: str | Path | None = None,
    ):
        self.providers = providers
        self.ledger = ledger if ledger is not None else UsageLedger(dict(DEFAULT_PRICE_TABLE))
        self.max_retries = max_retries
        self.backoff_base_s = backoff_base_s
        self._ledger_lock = threading.Lock()
        self._buckets = {
            model_id: _TokenBucket(rate_per_s, burst) for model_id in providers
        }
        self.ledger_path = Path(ledger_path) if ledger_path else None

    def complete(self, request: ChatRequest) -> ChatResponse:
        provider = self.providers.get(request.model_id)
        if provider is None:
            raise ProviderError(0, f"model {request.model_id!r} not in provider registry")
        self._buckets[request.model_id].acquire()
        attempt = 0
        while True:
            try:
                response = provider.complete(request)
                break
            except (RateLimited, ConnectionError, TimeoutError) as exc:
                attempt += 1
                if attempt > self.max_retries:
                    raise
                time.sleep(self.backoff_base_s * (2 ** (attempt - 1)))
            except Exception as exc:
                # requests' transport errors, without importing requests eagerly
                if type(exc).__module__.startswith("requests") and "HTTPError" not in type(exc).__name__:
                    attempt += 1
                    if attempt > self.max_retries:
                        raise
                    time.sleep(self.backoff_base_s * (2 ** (attempt - 1)))
                else:
                    raise
        record = LedgerRecord(
            tag=request.tag,
            model_id=request.model_id,
            input_tokens=response.input_tokens,
            output_tokens=response.output_tokens,
            latency_ms=response.latency_ms,
        )
        with self._ledger_lock:
            self.ledger.append(record)
            if self.ledger_path is not None:
                with self.ledger_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record.__dict__) + "\n")
        return response


def load_ledger_file(path: str | Path, price_table: dict[str, tuple[float, float]]) -> UsageLedger:
    ledger = UsageLedger(price_table=dict(price_table))
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            ledger.append(LedgerRecord(**json.loads(line)))
    return ledger
