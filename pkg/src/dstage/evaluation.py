"""Score a sealed run against a historical reference timeline.

Three signals: embedding cosine similarity (scaled to 0-100), judge-rated
similarity, and whether the final outcome category matches the expected
one. Aggregation is per-row mean over rows that have a simulated
counterpart, with a whole-transcript comparison exposed alongside since
single-number aggregation is ambiguous.
"""

from __future__ import annotations

import math
from datetime import date
from pathlib import Path

from pydantic import BaseModel, ConfigDict, model_validator

from .canonical import read_document
from .errors import DegenerateEmbeddingError, DstageError, ExtractionError
from .gateway import Gateway, make_request
from .prompts import render
from .runtime import OutcomeCategory, RunLog
from .script_model import Frozen


class TimelineRow(Frozen):
    date: date
    event: str
    actions: str


class HistoricalTimeline(Frozen):
    rows: tuple[TimelineRow, ...]
    expected_category: OutcomeCategory | None = None

    @model_validator(mode="after")
    def _check(self) -> "HistoricalTimeline":
        for earlier, later in zip(self.rows, self.rows[1:]):
            if later.date <= earlier.date:
                raise ValueError("timeline dates must be strictly increasing")
        return self

    @classmethod
    def load(cls, path: str | Path) -> "HistoricalTimeline":
        return cls.model_validate(read_document(path))


class RowScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    date: date
    historical_actions: str
    simulated_decisions: str
    embedding_score: float | None = None
    judge_score: float | None = None
    error: str | None = None


class OutcomeMatch(BaseModel):
    model_config = ConfigDict(frozen=True)

    expected_category: OutcomeCategory | None
    actual_category: OutcomeCategory | None
    matched: bool


class SimilarityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    per_row: tuple[RowScore, ...]
    mean_embedding: float | None
    mean_judge: float | None
    whole_embedding: float | None
    whole_judge: float | None
    outcome_match: OutcomeMatch


def align(run: RunLog, timeline: HistoricalTimeline) -> list[tuple[TimelineRow, str]]:
    """Pair each timeline row with the run's same-date decisions.

    Dates outside the run, or days without decisions, pair with the empty
    string. Duplicate-date decisions concatenate in channel order.
    """
    if not run.sealed:
        raise DstageError("run must be sealed before evaluation")
    pairs = []
    for row in timeline.rows:
        decisions = run.decisions_on(row.date)
        text = "\n".join(decision for _, decision in decisions)
        pairs.append((row, text))
    return pairs


def cosine(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(x * x for x in b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateEmbeddingError("degenerate embedding: zero vector")
    dot = sum(x * y for x, y in zip(a, b))
    return dot / (norm_a * norm_b)


def embedding_similarity(a: str, b: str, embedder: Gateway) -> float:
    """100 x cosine similarity of the two embeddings, clamped to [0, 100]."""
    va = embedder.embed(a)
    vb = embedder.embed(b)
    if len(va) != len(vb):
        raise DegenerateEmbeddingError(f"embedding dimensions differ: {len(va)} vs {len(vb)}")
    return min(100.0, max(0.0, 100.0 * cosine(va, vb)))


def judge_similarity(a: str, b: str, gateway: Gateway) -> float:
    """Judge-rated 0-100 similarity; locally clamped; retried once."""
    request = make_request(
        "judge",
        render("judge_similarity", reference=a, candidate=b),
        "Rate now.",
        response_schema="similarity_score",
        temperature=0.0,
    )
    last_error: Exception | None = None
    for _ in range(2):
        try:
            _, doc = gateway.complete_document(request)
            return min(100.0, max(0.0, float(doc["score"])))
        except ExtractionError as exc:
            last_error = exc
    raise DstageError(f"similarity judge output unparseable after retry: {last_error}")


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def evaluate_run(
    run: RunLog,
    timeline: HistoricalTimeline,
    embedder: Gateway,
    gateway: Gateway,
) -> SimilarityReport:
    """Full similarity report; row-level failures flag the row, not the report."""
    pairs = align(run, timeline)

    rows: list[RowScore] = []
    embedding_scores: list[float] = []
    judge_scores: list[float] = []
    for row, simulated in pairs:
        if not simulated:
            rows.append(
                RowScore(date=row.date, historical_actions=row.actions, simulated_decisions="")
            )
            continue
        embedding_score: float | None = None
        judge_score: float | None = None
        error: str | None = None
        try:
            embedding_score = embedding_similarity(row.actions, simulated, embedder)
            embedding_scores.append(embedding_score)
        except DstageError as exc:
            error = f"embedding: {exc}"
        try:
            judge_score = judge_similarity(row.actions, simulated, gateway)
            judge_scores.append(judge_score)
        except DstageError as exc:
            error = f"{error}; judge: {exc}" if error else f"judge: {exc}"
        rows.append(
            RowScore(
                date=row.date,
                historical_actions=row.actions,
                simulated_decisions=simulated,
                embedding_score=embedding_score,
                judge_score=judge_score,
                error=error,
            )
        )

    whole_embedding: float | None = None
    whole_judge: float | None = None
    historical_whole = "\n".join(row.actions for row in timeline.rows)
    simulated_whole = "\n".join(text for _, text in pairs if text)
    if simulated_whole:
        try:
            whole_embedding = embedding_similarity(historical_whole, simulated_whole, embedder)
        except DstageError:
            pass
        try:
            whole_judge = judge_similarity(historical_whole, simulated_whole, gateway)
        except DstageError:
            pass

    actual = run.final_outcome.category if run.final_outcome else None
    expected = timeline.expected_category
    matched = expected is not None and actual is not None and expected == actual

    return SimilarityReport(
        per_row=tuple(rows),
        mean_embedding=_mean(embedding_scores),
        mean_judge=_mean(judge_scores),
        whole_embedding=whole_embedding,
        whole_judge=whole_judge,
        outcome_match=OutcomeMatch(expected_category=expected, actual_category=actual, matched=matched),
    )


def report_as_table(report: SimilarityReport) -> str:
    """Plain-text table for the CLI and exports."""
    lines = [
        f"{'date':<12} {'embedding':>9} {'judge':>7}  historical vs simulated",
        "-" * 72,
    ]
    for row in report.per_row:
        emb = f"{row.embedding_score:.2f}" if row.embedding_score is not None else "-"
        jdg = f"{row.judge_score:.2f}" if row.judge_score is not None else "-"
        snippet = (row.historical_actions[:24] + "…") if len(row.historical_actions) > 25 else row.historical_actions
        lines.append(f"{row.date.isoformat():<12} {emb:>9} {jdg:>7}  {snippet}")
    mean_emb = f"{report.mean_embedding:.2f}" if report.mean_embedding is not None else "absent"
    mean_jdg = f"{report.mean_judge:.2f}" if report.mean_judge is not None else "absent"
    lines.append("-" * 72)
    lines.append(f"mean embedding: {mean_emb}   mean judge: {mean_jdg}")
    lines.append(
        f"outcome: expected={report.outcome_match.expected_category} "
        f"actual={report.outcome_match.actual_category} matched={report.outcome_match.matched}"
    )
    return "\n".join(lines)
