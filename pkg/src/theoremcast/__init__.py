"""theoremcast: agentic generation and evaluation of narrated
theorem-explainer videos."""

__version__ = "0.1.0"

from .corpus import CorpusStats, TheoremEntry, corpus_stats, load_corpus
from .evaluator import EvaluationReport, overall_score
from .gateway import ChatRequest, ChatResponse, Gateway, UsageLedger, ledger_cost
from .planner import SceneSpec, VideoPlan
from .pipeline import RunRecord, VideoArtifact, run_theorem
from .stats import krippendorff_alpha, spearman

__all__ = [
    "ChatRequest",
    "ChatResponse",
    "CorpusStats",
    "EvaluationReport",
    "Gateway",
    "RunRecord",
    "SceneSpec",
    "TheoremEntry",
    "UsageLedger",
    "VideoArtifact",
    "VideoPlan",
    "corpus_stats",
    "krippendorff_alpha",
    "ledger_cost",
    "load_corpus",
    "overall_score",
    "run_theorem",
    "spearman",
]
