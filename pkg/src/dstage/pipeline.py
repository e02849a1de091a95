"""Assembly-line script composition.

One screenwriter drafts the four script sections in order; a dedicated
director gates each section; a failed gate sends targeted feedback back
for a rewrite of that section only. Candidates are isolated from each
other, stages within a candidate are strictly sequential, and every
action lands in an append-only event log.
"""

from __future__ import annotations

import time
from enum import Enum

from pydantic import BaseModel, ConfigDict, model_validator

from .canonical import append_jsonl, canonical_dumps
from .errors import (
    AllCandidatesAbortedError,
    AttemptCapReachedError,
    CompositionError,
    ExtractionError,
    ReplayMissError,
    TransportError,
)
from .gateway import CompletionRequest, Gateway, extract_structured, make_request
from .prompts import render
from .wire_schemas import get_schema
from .script_model import (
    DesignPoint,
    ExperimentGoal,
    InfluenceFactor,
    Provenance,
    ResponseFactor,
    Script,
    UserRequirement,
    ValidationReport,
    parse_script,
    script_from_document,
    script_to_document,
    validate_requirement,
    validate_script,
)

DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_CANDIDATES = 4

# The screenwriter cycles through these angles, one per candidate.
PERSPECTIVES = (
    "research objectives",
    "variable design",
    "operational process",
    "expected outcomes",
)

SCREENWRITER_TEMPERATURE = 0.8
DIRECTOR_TEMPERATURE = 0.0


class Stage(str, Enum):
    GOAL = "goal"
    FACTORS = "influence_and_response_factors"
    DESIGN_POINTS = "design_points"
    FORMAT_CHECK = "format_check"
    COMPLETE = "complete"

    @property
    def order(self) -> int:
        return _STAGE_ORDER[self]


_STAGE_ORDER = {s: i for i, s in enumerate(Stage)}
WORK_STAGES = (Stage.GOAL, Stage.FACTORS, Stage.DESIGN_POINTS, Stage.FORMAT_CHECK)

_DIRECTOR_FOR_STAGE = {
    Stage.GOAL: "director_goal",
    Stage.FACTORS: "director_factors",
    Stage.DESIGN_POINTS: "director_design",
    Stage.FORMAT_CHECK: "director_format",
}

_DRAFT_TEMPLATE = {
    Stage.GOAL: "screenwriter_goal",
    Stage.FACTORS: "screenwriter_factors",
    Stage.DESIGN_POINTS: "screenwriter_design_points",
}

_SECTION_SCHEMA = {
    Stage.GOAL: "goal_section",
    Stage.FACTORS: "factors_section",
    Stage.DESIGN_POINTS: "design_points_section",
    Stage.FORMAT_CHECK: "script_document",
}


class EventAction(str, Enum):
    DRAFTED = "drafted"
    REVIEWED_PASS = "reviewed_pass"
    REVIEWED_FAIL = "reviewed_fail"
    REWRITTEN = "rewritten"
    ABORTED = "aborted"


class CompositionEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    seq: int
    timestamp: float
    candidate_index: int
    stage: Stage
    action: EventAction


class ReviewVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    passed: bool
    feedback: str = ""
    reviewer: str
    stage: Stage

    @model_validator(mode="after")
    def _check(self) -> "ReviewVerdict":
        if not self.passed and not self.feedback.strip():
            raise ValueError("a failed verdict must carry feedback")
        return self


class Section:
    """One stage's drafted content: parsed document plus the raw response."""

    def __init__(self, content: dict | None, raw_text: str):
        self.content = content  # None when the screenwriter output was unparseable
        self.raw_text = raw_text

    def rendered(self) -> str:
        if self.content is not None:
            return canonical_dumps(self.content)
        return self.raw_text


class CandidateBuilder:
    """Partial script under construction; never a Script with holes."""

    def __init__(self, index: int, perspective: str):
        self.index = index
        self.perspective = perspective
        self.sections: dict[Stage, Section] = {}
        self.attempts: dict[Stage, int] = {s: 0 for s in WORK_STAGES}
        self.passed: dict[Stage, bool] = {s: False for s in WORK_STAGES}
        self.aborted = False

    def stage_ready(self, stage: Stage) -> bool:
        """All stages before ``stage`` reviewed and passed."""
        return all(self.passed[s] for s in WORK_STAGES if s.order < stage.order)

    def script_so_far(self) -> dict:
        merged: dict = {}
        for s in (Stage.GOAL, Stage.FACTORS, Stage.DESIGN_POINTS):
            section = self.sections.get(s)
            if section and section.content is not None:
                if s == Stage.GOAL:
                    merged["goal"] = section.content
                else:
                    merged.update(section.content)
        return merged


class CompositionRun:
    """Mutable record of one composition: candidates, caps, event log."""

    def __init__(
        self,
        requirement: UserRequirement,
        candidates: list[CandidateBuilder],
        max_attempts_per_stage: int = DEFAULT_MAX_ATTEMPTS,
    ):
        self.requirement = requirement
        self.candidates = candidates
        self.max_attempts_per_stage = max_attempts_per_stage
        self.event_log: list[CompositionEvent] = []
        self._seq = 0

    def log(self, candidate_index: int, stage: Stage, action: EventAction) -> None:
        self.event_log.append(
            CompositionEvent(
                seq=self._seq,
                timestamp=time.time(),
                candidate_index=candidate_index,
                stage=stage,
                action=action,
            )
        )
        self._seq += 1

    def export_event_log(self, path) -> None:
        """One JSON object per event, line-delimited, for audit and UI streaming."""
        for event in self.event_log:
            append_jsonl(path, event.model_dump(mode="json"))

    def events_for(self, candidate_index: int) -> list[CompositionEvent]:
        return [e for e in self.event_log if e.candidate_index == candidate_index]


def _screenwriter_system(req: UserRequirement, perspective: str) -> str:
    return render(
        "screenwriter_system",
        requirement=canonical_dumps(req.model_dump(mode="json")),
        perspective=perspective,
    )


def _draft_request(candidate: CandidateBuilder, stage: Stage, req: UserRequirement) -> CompletionRequest:
    if stage == Stage.GOAL:
        user = render("screenwriter_goal")
    else:
        user = render(
            _DRAFT_TEMPLATE[stage],
            script_so_far=canonical_dumps(candidate.script_so_far()),
        )
    return make_request(
        "screenwriter",
        _screenwriter_system(req, candidate.perspective),
        user,
        response_schema=_SECTION_SCHEMA[stage],
        temperature=SCREENWRITER_TEMPERATURE,
    )


def _assemble_document(candidate: CandidateBuilder) -> dict:
    goal = ExperimentGoal.model_validate(candidate.sections[Stage.GOAL].content)
    factors_doc = candidate.sections[Stage.FACTORS].content or {}
    points_doc = candidate.sections[Stage.DESIGN_POINTS].content or {}
    script = Script(
        goal=goal,
        factors=tuple(InfluenceFactor.model_validate(f) for f in factors_doc.get("factors", [])),
        responses=tuple(ResponseFactor.model_validate(r) for r in factors_doc.get("responses", [])),
        design_points=tuple(DesignPoint.model_validate(p) for p in points_doc.get("design_points", [])),
        perspective=candidate.perspective,
        provenance=Provenance(
            candidate_index=candidate.index,
            stage_attempts={s.value: candidate.attempts[s] for s in WORK_STAGES},
        ),
    )
    return script_to_document(script)


def _request_section(gateway: Gateway, request: CompletionRequest) -> Section:
    text = gateway.complete(request)
    try:
        doc = extract_structured(text, get_schema(request.response_schema) if request.response_schema else None)
        return Section(doc, text)
    except ExtractionError:
        return Section(None, text)


def _draft(candidate: CandidateBuilder, stage: Stage, req: UserRequirement, gateway: Gateway, run: CompositionRun) -> None:
    candidate.attempts[stage] += 1
    if stage == Stage.FORMAT_CHECK:
        # Assembly is local: the section content is the full script document.
        candidate.sections[stage] = Section(_assemble_document(candidate), "")
    else:
        candidate.sections[stage] = _request_section(gateway, _draft_request(candidate, stage, req))
    run.log(candidate.index, stage, EventAction.DRAFTED)


def _local_format_report(section: Section) -> ValidationReport:
    if section.content is None:
        return ValidationReport.model_validate(
            {"issues": [{"path": "root", "message": "assembled document is not valid JSON"}]}
        )
    try:
        script = script_from_document(section.content)
    except Exception as exc:  # malformed shapes surface as a single root issue
        return ValidationReport.model_validate({"issues": [{"path": "root", "message": str(exc)}]})
    return validate_script(script)


def review_section(
    candidate: CandidateBuilder,
    stage: Stage,
    req: UserRequirement,
    gateway: Gateway,
) -> ReviewVerdict:
    """One director's gate for one stage.

    The format stage also validates the assembled document locally and
    fails the verdict on any structural violation regardless of what the
    provider answered.
    """
    if stage not in candidate.sections:
        raise CompositionError(f"stage {stage.value} has no drafted content to review")
    if not candidate.stage_ready(stage):
        raise CompositionError(f"stage {stage.value} reviewed before earlier stages passed")

    section = candidate.sections[stage]
    reviewer = _DIRECTOR_FOR_STAGE[stage]

    if section.content is None and stage != Stage.FORMAT_CHECK:
        # Nothing structured to show the director; gate locally.
        return ReviewVerdict(passed=False, feedback="screenwriter output unparseable", reviewer=reviewer, stage=stage)

    if stage == Stage.FORMAT_CHECK:
        user = "Review the assembled script document."
        system = render("director_format", section=section.rendered())
    else:
        user = "Review the drafted section."
        system = render(
            _DIRECTOR_FOR_STAGE[stage],
            requirement=canonical_dumps(req.model_dump(mode="json")),
            section=section.rendered(),
        )

    request = make_request(reviewer, system, user, response_schema="review_verdict", temperature=DIRECTOR_TEMPERATURE)
    try:
        _, doc = gateway.complete_document(request)
        passed = bool(doc["passed"])
        feedback = str(doc.get("feedback", ""))
        if not passed and not feedback.strip():
            feedback = "reviewer rejected the section without details"
    except ExtractionError:
        passed, feedback = False, "reviewer output unparseable"

    if stage == Stage.FORMAT_CHECK:
        report = _local_format_report(section)
        if not report.valid:
            details = "; ".join(f"{i.path}: {i.message}" for i in report.issues)
            return ReviewVerdict(
                passed=False,
                feedback=f"structural validation failed: {details}",
                reviewer=reviewer,
                stage=stage,
            )

    return ReviewVerdict(passed=passed, feedback=feedback, reviewer=reviewer, stage=stage)


def rewrite_section(
    candidate: CandidateBuilder,
    stage: Stage,
    feedback: str,
    req: UserRequirement,
    gateway: Gateway,
    run: CompositionRun,
) -> CandidateBuilder:
    """Replace one stage's content based on director feedback.

    Earlier stages are untouched. The feedback text is passed to the
    screenwriter verbatim.
    """
    if candidate.attempts[stage] >= run.max_attempts_per_stage:
        raise AttemptCapReachedError(
            f"candidate {candidate.index} used all {run.max_attempts_per_stage} attempts at {stage.value}"
        )
    section = candidate.sections[stage]
    template = "screenwriter_format_fix" if stage == Stage.FORMAT_CHECK else "screenwriter_rewrite"
    values = {"feedback": feedback, "current_section": section.rendered()}
    if template == "screenwriter_rewrite":
        values["stage"] = stage.value
    request = make_request(
        "screenwriter",
        _screenwriter_system(req, candidate.perspective),
        render(template, **values),
        response_schema=_SECTION_SCHEMA[stage],
        temperature=SCREENWRITER_TEMPERATURE,
    )
    candidate.attempts[stage] += 1
    candidate.sections[stage] = _request_section(gateway, request)
    run.log(candidate.index, stage, EventAction.REWRITTEN)
    return candidate


def _finalize_candidate(candidate: CandidateBuilder) -> Script:
    doc = dict(candidate.sections[Stage.FORMAT_CHECK].content or {})
    # provenance reflects the true attempt counts, including format rewrites
    doc["provenance"] = {
        "candidate_index": candidate.index,
        "stage_attempts": {s.value: candidate.attempts[s] for s in WORK_STAGES},
    }
    doc["perspective"] = candidate.perspective
    return parse_script(doc)


def compose_candidates(
    req: UserRequirement,
    n: int,
    gateway: Gateway,
    *,
    max_attempts_per_stage: int = DEFAULT_MAX_ATTEMPTS,
) -> tuple[list[Script], CompositionRun]:
    """Compose up to ``n`` complete scripts, one perspective per candidate.

    Candidates that exhaust the attempt cap at any stage are aborted and
    excluded from the result. The event log reconstructs every gate.
    """
    report = validate_requirement(req)
    if not report.valid:
        raise CompositionError(f"requirement invalid: {report.paths()}")
    if n < 1:
        raise CompositionError("need at least one candidate")

    candidates = [CandidateBuilder(i, PERSPECTIVES[i % len(PERSPECTIVES)]) for i in range(n)]
    run = CompositionRun(req, candidates, max_attempts_per_stage)

    scripts: list[Script] = []
    for candidate in candidates:
        try:
            script = _compose_one(candidate, req, gateway, run)
        except (TransportError, ReplayMissError) as exc:
            raise CompositionError(f"provider failure during composition: {exc}", run=run) from exc
        if script is not None:
            scripts.append(script)

    if not scripts:
        raise AllCandidatesAbortedError("all candidates aborted before completing a script", run=run)
    return scripts, run


def _compose_one(
    candidate: CandidateBuilder,
    req: UserRequirement,
    gateway: Gateway,
    run: CompositionRun,
) -> Script | None:
    for stage in WORK_STAGES:
        _draft(candidate, stage, req, gateway, run)
        while True:
            verdict = review_section(candidate, stage, req, gateway)
            run.log(candidate.index, stage, EventAction.REVIEWED_PASS if verdict.passed else EventAction.REVIEWED_FAIL)
            if verdict.passed:
                candidate.passed[stage] = True
                break
            if candidate.attempts[stage] >= run.max_attempts_per_stage:
                run.log(candidate.index, stage, EventAction.ABORTED)
                candidate.aborted = True
                return None
            rewrite_section(candidate, stage, verdict.feedback, req, gateway, run)
    return _finalize_candidate(candidate)
