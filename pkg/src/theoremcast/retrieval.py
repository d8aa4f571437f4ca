"""Agentic retrieval over renderer documentation: chunking, a small exact
vector index, plugin classification, stage-specific query generation, and a
memoizing query cache."""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gateway import ChatRequest, Gateway
from .prompts import PromptLibrary

PROSE_SEPARATORS = ("\n\n", "\n", " ")
CODE_SEPARATORS = ("\nclass ", "\ndef ", "\n\tdef ", "\n\n", "\n", " ")

CODE_SUFFIXES = {".py", ".js", ".ts", ".rs", ".c", ".cc", ".cpp", ".java", ".go"}
PROSE_SUFFIXES = {".md", ".rst", ".txt", ".html"}

# Renderer toolkit plus the pinned plugin set the docs corpus covers.
DEFAULT_PLUGIN_CATALOG = (
    "manim",
    "manimpango",
    "manim-physics",
    "manim-ml",
    "manim-chemistry",
    "manim-dsa",
    "manim-circuit",
)


def load_plugin_probe(path: str | Path) -> tuple[str, ...]:
    """Plugin names published by the renderer-side probe file
    (plugins.json, a JSON array)."""
    names = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise ValueError(f"probe file {path} is not a JSON array of names")
    return tuple(names)

QUERY_STAGES = ("storyboard", "implementation", "error_fix")


class EmptyCorpus(ValueError):
    pass


class IndexEmpty(RuntimeError):
    pass


class EmbeddingPortUnavailable(RuntimeError):
    pass


class QueryParseError(ValueError):
    pass


@dataclass(frozen=True)
class DocChunk:
    chunk_id: int
    source_path: str
    kind: str  # "prose" | "code"
    text: str
    embedding: np.ndarray | None = None


@dataclass(frozen=True)
class RetrievalConfig:
    k: int = 2
    threshold: float = 0.5
    plugin_allowlist: tuple[str, ...] = DEFAULT_PLUGIN_CATALOG

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside [0, 1]")


@dataclass
class IngestStats:
    sources: int = 0
    chunks_by_kind: dict[str, int] = field(default_factory=dict)

    @property
    def total_chunks(self) -> int:
        return sum(self.chunks_by_kind.values())


def split_text(
    text: str,
    size: int = 1000,
    overlap: int = 100,
    separators: tuple[str, ...] = PROSE_SEPARATORS,
) -> list[str]:
    """Recursive splitter: split on the strongest separator present, merge
    pieces back up to `size` characters with a best-effort `overlap` tail.
    Spans with no separator fall back to overlapping hard windows.
    """
    if not text:
        return []
    items = list(_atomize(text, size, overlap, list(separators)))
    chunks: list[str] = []
    current: list[str] = []
    current_len = 0
    for kind, piece in items:
        if kind == "final":
            if current:
                chunks.append("".join(current))
                current, current_len = [], 0
            chunks.append(piece)
            continue
        if current and current_len + len(piece) > size:
            chunks.append("".join(current))
            kept: list[str] = []
            kept_len = 0
            for prev in reversed(current):
                if kept_len + len(prev) > overlap:
                    break
                kept.insert(0, prev)
                kept_len += len(prev)
            while kept and kept_len + len(piece) > size:
                kept_len -= len(kept.pop(0))
            current, current_len = kept, kept_len
        current.append(piece)
        current_len += len(piece)
    if current:
        chunks.append("".join(current))
    return [c for c in chunks if c.strip()]


def _atomize(text: str, size: int, overlap: int, separators: list[str]):
    """Yield ("atom", piece) items no longer than `size`, or ("final", window)
    overlapping windows for spans no separator can break."""
    if len(text) <= size:
        yield ("atom", text)
        return
    sep = next((s for s in separators if s in text), None)
    if sep is None:
        step = max(1, size - min(overlap, size // 2))
        for start in range(0, len(text) - (size - step), step):
            yield ("final", text[start:start + size])
        return
    rest = separators[separators.index(sep) + 1:]
    parts = text.split(sep)
    for i, part in enumerate(parts):
        piece = part + sep if i < len(parts) - 1 else part
        if not piece:
            continue
        if len(piece) <= size:
            yield ("atom", piece)
        else:
            yield from _atomize(piece, size, overlap, rest)


class HashingEmbedder:
    """Deterministic offline embedding port: signed token hashing into a
    fixed-dimension unit vector."""

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.calls = 0

    def embed(self, texts: list[str]) -> np.ndarray:
        self.calls += 1
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = re.findall(r"\w+", text.lower()) or [text or "<empty>"]
            for token in tokens:
                h = int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")
                sign = 1.0 if h & 1 else -1.0
                out[row, (h >> 1) % self.dim] += sign
            norm = np.linalg.norm(out[row])
            if norm == 0.0:
                out[row, 0] = 1.0
                norm = 1.0
            out[row] /= norm
        return out


class HttpEmbedder:
    """OpenAI-compatible /embeddings port for production indexes."""

    def __init__(self, base_url: str, api_key: str, model: str, timeout_s: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout_s = timeout_s
        self.calls = 0

    def embed(self, texts: list[str]) -> np.ndarray:
        import requests

        self.calls += 1
        resp = requests.post(
            f"{self.base_url}/embeddings",
            headers={"Authorization": f"Bearer {self.api_key}"},
            json={"model": self.model, "input": texts},
            timeout=self.timeout_s,
        )
        if resp.status_code >= 400:
            raise EmbeddingPortUnavailable(f"{resp.status_code}: {resp.text[:200]}")
        rows = sorted(resp.json()["data"], key=lambda d: d["index"])
        mat = np.asarray([r["embedding"] for r in rows], dtype=np.float64)
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
        return mat / np.where(norms == 0.0, 1.0, norms)


class VectorIndex:
    """Exact-scan cosine index over document chunks."""

    def __init__(self):
        self.chunks: list[DocChunk] = []
        self.matrix: np.ndarray | None = None  # unit rows, float64

    def __len__(self) -> int:
        return len(self.chunks)

    def add(self, chunks: list[DocChunk], vectors: np.ndarray) -> None:
        base = len(self.chunks)
        for offset, chunk in enumerate(chunks):
            self.chunks.append(
                DocChunk(
                    chunk_id=base + offset,
                    source_path=chunk.source_path,
                    kind=chunk.kind,
                    text=chunk.text,
                    embedding=vectors[offset],
                )
            )
        self.matrix = vectors if self.matrix is None else np.vstack([self.matrix, vectors])

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with (directory / "chunks.jsonl").open("w", encoding="utf-8") as fh:
            for c in self.chunks:
                fh.write(json.dumps(
                    {"chunk_id": c.chunk_id, "source_path": c.source_path, "kind": c.kind, "text": c.text}
                ) + "\n")
        vectors = self.matrix if self.matrix is not None else np.zeros((0, 0))
        (directory / "vectors.bin").write_bytes(vectors.astype("<f4").tobytes(order="C"))
        (directory / "meta.json").write_text(
            json.dumps({"dimension": int(vectors.shape[1]) if vectors.size else 0, "count": len(self.chunks)}),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, directory: str | Path) -> "VectorIndex":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        raw = np.frombuffer((directory / "vectors.bin").read_bytes(), dtype="<f4")
        matrix = raw.reshape(meta["count"], meta["dimension"]).astype(np.float64)
        records = [
            json.loads(line)
            for line in (directory / "chunks.jsonl").read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        index = cls()
        index.chunks = [DocChunk(embedding=matrix[i], **rec) for i, rec in enumerate(records)]
        index.matrix = matrix
        return index


class QueryCache:
    """Memoizes retrieval results keyed by (stage, query, config digest)."""

    def __init__(self):
        self._store: dict[tuple[str, str, str], list[tuple[int, float]]] = {}
        self.hits = 0
        self.misses = 0

    @staticmethod
    def config_digest(cfg: RetrievalConfig) -> str:
        payload = json.dumps([cfg.k, cfg.threshold, sorted(cfg.plugin_allowlist)])
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def get(self, stage: str, query: str, cfg: RetrievalConfig):
        key = (stage, query, self.config_digest(cfg))
        result = self._store.get(key)
        if result is not None:
            self.hits += 1
        return result

    def put(self, stage: str, query: str, cfg: RetrievalConfig, result: list[tuple[int, float]]):
        self.misses += 1
        self._store[(stage, query, self.config_digest(cfg))] = list(result)


class Retriever:
    def __init__(self, embedder, index: VectorIndex | None = None, cache: QueryCache | None = None,
                 chunk_size: int = 1000, chunk_overlap: int = 100):
        self.embedder = embedder
        self.index = index if index is not None else VectorIndex()
        self.cache = cache if cache is not None else QueryCache()
        self.chunk_size = chunk_size
        self.chunk_overlap = chunk_overlap

    def ingest_docs(self, roots: list[str | Path]) -> IngestStats:
        """Chunk and embed every prose/code file under the given roots."""
        if self.embedder is None:
            raise EmbeddingPortUnavailable("no embedding port configured")
        stats = IngestStats()
        pending_chunks: list[DocChunk] = []
        for root in roots:
            root = Path(root)
            if not root.exists():
                raise EmptyCorpus(f"root does not exist: {root}")
            files = [root] if root.is_file() else sorted(p for p in root.rglob("*") if p.is_file())
            for path in files:
                if path.suffix in CODE_SUFFIXES:
                    kind, separators = "code", CODE_SEPARATORS
                elif path.suffix in PROSE_SUFFIXES:
                    kind, separators = "prose", PROSE_SEPARATORS
                else:
                    continue
                text = path.read_text(encoding="utf-8", errors="replace")
                pieces = split_text(text, self.chunk_size, self.chunk_overlap, separators)
                if not pieces:
                    continue
                stats.sources += 1
                stats.chunks_by_kind[kind] = stats.chunks_by_kind.get(kind, 0) + len(pieces)
                for piece in pieces:
                    pending_chunks.append(DocChunk(0, str(path), kind, piece))
        if not pending_chunks:
            raise EmptyCorpus(f"no prose or code files under {', '.join(str(r) for r in roots)}")
        vectors = self.embedder.embed([c.text for c in pending_chunks])
        self.index.add(pending_chunks, vectors)
        return stats

    def retrieve(
        self, query: str, cfg: RetrievalConfig, stage: str = "implementation"
    ) -> list[tuple[DocChunk, float]]:
        """Top-k chunks with (1+cos)/2 relevance at or above cfg.threshold."""
        if len(self.index) == 0:
            raise IndexEmpty("ingest documents before retrieving")
        cached = self.cache.get(stage, query, cfg)
        if cached is not None:
            return [(self.index.chunks[cid], score) for cid, score in cached]
        q = self.embedder.embed([query])[0]
        scored: list[tuple[int, float]] = []
        for chunk in self.index.chunks:
            cos = float(np.dot(chunk.embedding, q))
            score = (1.0 + cos) / 2.0
            if score >= cfg.threshold:
                scored.append((chunk.chunk_id, score))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        result = scored[: cfg.k]
        self.cache.put(stage, query, cfg, result)
        return [(self.index.chunks[cid], score) for cid, score in result]


def classify_plugins(
    gateway: Gateway,
    model_id: str,
    theorem_name: str,
    theorem_description: str,
    prompts: PromptLibrary,
    catalog: tuple[str, ...] = DEFAULT_PLUGIN_CATALOG,
) -> list[str]:
    """Judge call choosing which catalog plugins suit a theorem; names not
    in the catalog are dropped."""
    request = ChatRequest(
        model_id=model_id,
        system=prompts.get("plugin_classify_system"),
        user=prompts.render(
            "plugin_classify",
            theorem_name=theorem_name,
            theorem_description=theorem_description,
            catalog=", ".join(catalog),
        ),
        temperature=0.0,
        tag="judge",
    )
    response = gateway.complete(request)
    names: list[str] = []
    for token in re.split(r"[,\n]", response.text):
        name = token.strip().strip("-*").strip()
        if name in catalog and name not in names:
            names.append(name)
    return names


def generate_queries(
    gateway: Gateway,
    model_id: str,
    stage: str,
    context: str,
    prompts: PromptLibrary,
    temperature: float = 0.7,
) -> list[str]:
    """Stage-specific retrieval queries parsed from a numbered list."""
    if stage not in QUERY_STAGES:
        raise ValueError(f"unknown query stage {stage!r}")
    request = ChatRequest(
        model_id=model_id,
        system=prompts.get("query_system"),
        user=prompts.render(f"query_{stage}", context=context),
        temperature=temperature,
        tag="query",
    )
    response = gateway.complete(request)
    queries: list[str] = []
    for line in response.text.splitlines():
        m = re.match(r"^\s*(?:\d+[.)]|[-*])\s+(.*\S)\s*$", line)
        if m:
            queries.append(m.group(1))
    if not queries:
        raise QueryParseError(f"no queries found in response: {response.text[:200]!r}")
    return queries[:5]
