"""Chief-director finalization: criterion scores, weighted total, selection.

Totals are always computed locally from the six criterion scores; any
total the provider reports is ignored. A script is eliminated when its
ethics score is 0 or its weighted total falls below 50.
"""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .canonical import canonical_dumps
from .errors import ExtractionError, NoAdmissibleScriptError, ScoringError
from .gateway import Gateway, make_request
from .prompts import render
from .script_model import Script, UserRequirement, script_to_document

ELIMINATION_THRESHOLD = 50.0
_SUM_TOLERANCE = 1e-9


class CriterionId(str, Enum):
    SCIENTIFIC_SOUNDNESS = "scientific_soundness"
    IMPLEMENTATION_DIFFICULTY = "implementation_difficulty"
    CONDITIONS_CONTROLLABILITY = "conditions_controllability"
    RISK_ROBUSTNESS = "risk_robustness"
    REQUIREMENT_ALIGNMENT = "requirement_alignment"
    ETHICS_COMPLIANCE = "ethics_compliance"


CRITERIA = tuple(CriterionId)

DEFAULT_WEIGHTS = {
    CriterionId.SCIENTIFIC_SOUNDNESS: 0.15,
    CriterionId.IMPLEMENTATION_DIFFICULTY: 0.05,
    CriterionId.CONDITIONS_CONTROLLABILITY: 0.10,
    CriterionId.RISK_ROBUSTNESS: 0.05,
    CriterionId.REQUIREMENT_ALIGNMENT: 0.15,
    CriterionId.ETHICS_COMPLIANCE: 0.50,
}


class WeightVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    weights: dict[CriterionId, float] = Field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    @model_validator(mode="after")
    def _check(self) -> "WeightVector":
        missing = [c.value for c in CRITERIA if c not in self.weights]
        if missing:
            raise ValueError(f"weights missing criteria {missing}")
        for c, w in self.weights.items():
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"weight for {c.value} out of [0,1]: {w}")
        total = sum(self.weights.values())
        if abs(total - 1.0) > _SUM_TOLERANCE:
            raise ValueError(f"weights must sum to 1.0, got {total!r}")
        return self

    @classmethod
    def default(cls) -> "WeightVector":
        return cls()

    def __getitem__(self, criterion: CriterionId) -> float:
        return self.weights[criterion]


class CriterionScores(BaseModel):
    model_config = ConfigDict(frozen=True)

    scores: dict[CriterionId, float]
    rationale: dict[CriterionId, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check(self) -> "CriterionScores":
        missing = [c.value for c in CRITERIA if c not in self.scores]
        if missing:
            raise ValueError(f"scores missing criteria {missing}")
        for c, s in self.scores.items():
            if not 0.0 <= s <= 100.0:
                raise ValueError(f"score for {c.value} out of [0,100]: {s}")
        ethics = self.scores[CriterionId.ETHICS_COMPLIANCE]
        if ethics not in (0.0, 100.0):
            raise ValueError(f"ethics score must be 0 or 100, got {ethics!r}")
        return self

    @classmethod
    def from_values(cls, values: list[float] | tuple[float, ...], rationale: dict | None = None) -> "CriterionScores":
        """Build from six numbers in canonical criterion order."""
        if len(values) != len(CRITERIA):
            raise ValueError(f"expected {len(CRITERIA)} scores, got {len(values)}")
        return cls(scores=dict(zip(CRITERIA, (float(v) for v in values))), rationale=rationale or {})


class ScriptEvaluation(BaseModel):
    model_config = ConfigDict(frozen=True)

    script_id: str
    candidate_index: int = 0
    criterion_scores: CriterionScores
    total: float
    eliminated: bool
    elimination_reason: str | None = None


def score_total(a: CriterionScores, w: WeightVector) -> float:
    """Weighted sum of the six criterion scores; pure."""
    return sum(w[c] * a.scores[c] for c in CRITERIA)


def build_evaluation(
    script_id: str,
    candidate_index: int,
    scores: CriterionScores,
    weights: WeightVector,
) -> ScriptEvaluation:
    total = score_total(scores, weights)
    eliminated = False
    reason = None
    if total < ELIMINATION_THRESHOLD:
        eliminated = True
        reason = f"total {total:g} falls below {ELIMINATION_THRESHOLD:g}"
    elif scores.scores[CriterionId.ETHICS_COMPLIANCE] == 0.0:
        eliminated = True
        reason = "ethics compliance scored 0; ethical soundness is a non-negotiable prerequisite"
    return ScriptEvaluation(
        script_id=script_id,
        candidate_index=candidate_index,
        criterion_scores=scores,
        total=total,
        eliminated=eliminated,
        elimination_reason=reason,
    )


def evaluate_script(
    script: Script,
    req: UserRequirement,
    weights: WeightVector,
    gateway: Gateway,
    *,
    sibling_scripts: list[Script] | None = None,
) -> ScriptEvaluation:
    """Obtain criterion scores from the chief director; compute the total locally.

    Sibling candidates, when given, are shown for horizontal comparison;
    they never enter the arithmetic.
    """
    others = [script_to_document(s) for s in (sibling_scripts or []) if s is not script]
    request = make_request(
        "chief_director",
        render(
            "chief_director",
            requirement=canonical_dumps(req.model_dump(mode="json")),
            other_candidates=canonical_dumps(others) if others else "(none)",
            candidate=canonical_dumps(script_to_document(script)),
        ),
        "Score the candidate now.",
        response_schema="chief_scores",
        temperature=0.0,
    )

    doc = None
    last_error: Exception | None = None
    for _ in range(2):  # one retry on unparseable output
        try:
            _, doc = gateway.complete_document(request)
            break
        except ExtractionError as exc:
            last_error = exc
    if doc is None:
        raise ScoringError(f"chief director output unparseable after retry: {last_error}")

    scores = CriterionScores(
        scores={c: float(doc["scores"][c.value]) for c in CRITERIA},
        rationale={c: str(doc["rationales"].get(c.value, "")) for c in CRITERIA},
    )
    return build_evaluation(script.script_id, script.provenance.candidate_index, scores, weights)


def select_final(evals: list[ScriptEvaluation]) -> str:
    """Argmax over non-eliminated totals; ties go to the lowest candidate index."""
    if not evals:
        raise NoAdmissibleScriptError("no evaluations to select from")
    admissible = [e for e in evals if not e.eliminated]
    if not admissible:
        raise NoAdmissibleScriptError(
            "no admissible script: every candidate was eliminated; revise the requirement"
        )
    best = min(admissible, key=lambda e: (-e.total, e.candidate_index))
    return best.script_id


def evaluation_report_rows(evaluation: ScriptEvaluation, weights: WeightVector) -> list[dict]:
    """Six-row table (criterion, weight, score, rationale) for the user-facing report."""
    return [
        {
            "criterion": c.value,
            "weight": weights[c],
            "score": evaluation.criterion_scores.scores[c],
            "rationale": evaluation.criterion_scores.rationale.get(c, ""),
        }
        for c in CRITERIA
    ]
