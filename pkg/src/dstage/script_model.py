"""Experiment-script data model.

A script is the executable plan of a computational experiment: an
objective, discrete influence factors, measured response factors, and
parameterized design points. Models here are deliberately permissive at
construction time; semantic rules live in ``validate_requirement`` /
``validate_script`` so that invalid inputs yield reports instead of
exceptions, which is what the review gates need.
"""

from __future__ import annotations

import itertools
import json
from enum import Enum
from importlib import resources
from typing import Union

import jsonschema
from pydantic import BaseModel, ConfigDict, Field, computed_field

from .canonical import pretty_dumps
from .errors import DesignSpaceTooLargeError, DocumentParseError, InvalidScriptError

SCHEMA_VERSION = "1"

LevelValue = Union[str, int, float]


class ResponseKind(str, Enum):
    SCALAR = "scalar"
    PROBABILITY_VECTOR = "probability_vector"
    CATEGORICAL = "categorical"


class Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


class UserRequirement(Frozen):
    """What the user must supply: goal, core variables, target object."""

    research_goal: str = ""
    core_variables: tuple[str, ...] = ()
    target_object: str = ""
    narrative: str | None = None
    scenario_tag: str | None = None


class ExperimentGoal(Frozen):
    statement: str = ""
    success_criteria: tuple[str, ...] = ()


class InfluenceFactor(Frozen):
    """A controllable input with discrete levels."""

    name: str
    description: str = ""
    levels: tuple[LevelValue, ...] = ()
    unit: str | None = None


class ResponseFactor(Frozen):
    """A measured output: a scalar or a category distribution."""

    name: str
    description: str = ""
    kind: ResponseKind = ResponseKind.SCALAR
    categories: tuple[str, ...] = ()


class DesignPoint(Frozen):
    id: str
    assignments: dict[str, LevelValue] = Field(default_factory=dict)


class Provenance(Frozen):
    """Generation metadata: which candidate, how many attempts per stage."""

    candidate_index: int = 0
    stage_attempts: dict[str, int] = Field(default_factory=dict)


class Script(Frozen):
    goal: ExperimentGoal = ExperimentGoal()
    factors: tuple[InfluenceFactor, ...] = ()
    responses: tuple[ResponseFactor, ...] = ()
    design_points: tuple[DesignPoint, ...] = ()
    perspective: str = ""
    provenance: Provenance = Provenance()

    @property
    def factor_names(self) -> set[str]:
        return {f.name for f in self.factors}

    def factor(self, name: str) -> InfluenceFactor:
        for f in self.factors:
            if f.name == name:
                return f
        raise KeyError(name)

    @property
    def script_id(self) -> str:
        return f"script-{self.provenance.candidate_index:02d}"


class ValidationIssue(Frozen):
    path: str
    message: str


class ValidationReport(Frozen):
    issues: tuple[ValidationIssue, ...] = ()

    @computed_field  # type: ignore[prop-decorator]
    @property
    def valid(self) -> bool:
        return not self.issues

    def paths(self) -> list[str]:
        return [i.path for i in self.issues]


def _blank(text: str) -> bool:
    return not text or not text.strip()


def validate_requirement(req: UserRequirement) -> ValidationReport:
    """Check the three essential elements; always returns a report."""
    issues = []
    if _blank(req.research_goal):
        issues.append(ValidationIssue(path="research_goal", message="research goal is missing or empty"))
    if not any(not _blank(v) for v in req.core_variables):
        issues.append(ValidationIssue(path="core_variables", message="at least one non-empty core variable is required"))
    if _blank(req.target_object):
        issues.append(ValidationIssue(path="target_object", message="target object is missing or empty"))
    return ValidationReport(issues=tuple(issues))


def validate_script(script: Script) -> ValidationReport:
    """Enumerate every violated invariant with the path of the offending field.

    Deterministic and side-effect free: issues are reported in document
    order (goal, factors, responses, design points).
    """
    issues: list[ValidationIssue] = []

    if _blank(script.goal.statement):
        issues.append(ValidationIssue(path="goal.statement", message="goal statement is empty"))

    if not script.factors:
        issues.append(ValidationIssue(path="factors", message="a complete script needs at least one influence factor"))
    seen_factor_names: set[str] = set()
    for i, factor in enumerate(script.factors):
        if _blank(factor.name):
            issues.append(ValidationIssue(path=f"factors[{i}].name", message="factor name is empty"))
        elif factor.name in seen_factor_names:
            issues.append(ValidationIssue(path=f"factors[{i}].name", message=f"duplicate factor name {factor.name!r}"))
        else:
            seen_factor_names.add(factor.name)
        distinct = []
        for level in factor.levels:
            if level not in distinct:
                distinct.append(level)
        if len(distinct) < 2:
            issues.append(
                ValidationIssue(path=f"factors[{i}].levels", message="factor needs at least 2 distinct levels")
            )

    if not script.responses:
        issues.append(ValidationIssue(path="responses", message="a complete script needs at least one response factor"))
    seen_response_names: set[str] = set()
    for i, resp in enumerate(script.responses):
        if _blank(resp.name):
            issues.append(ValidationIssue(path=f"responses[{i}].name", message="response name is empty"))
        elif resp.name in seen_response_names:
            issues.append(ValidationIssue(path=f"responses[{i}].name", message=f"duplicate response name {resp.name!r}"))
        else:
            seen_response_names.add(resp.name)
        if resp.kind != ResponseKind.SCALAR and len(resp.categories) < 2:
            issues.append(
                ValidationIssue(
                    path=f"responses[{i}].categories",
                    message=f"{resp.kind.value} response needs at least 2 categories",
                )
            )

    if not script.design_points:
        issues.append(ValidationIssue(path="design_points", message="a complete script needs at least one design point"))
    factor_by_name = {f.name: f for f in script.factors}
    for i, point in enumerate(script.design_points):
        for key, value in point.assignments.items():
            if key not in factor_by_name:
                issues.append(
                    ValidationIssue(
                        path=f"design_points[{i}].assignments[{key!r}]",
                        message=f"assignment names undeclared factor {key!r}",
                    )
                )
            elif value not in factor_by_name[key].levels:
                issues.append(
                    ValidationIssue(
                        path=f"design_points[{i}].assignments[{key!r}]",
                        message=f"value {value!r} is not a level of factor {key!r}",
                    )
                )

    return ValidationReport(issues=tuple(issues))


def script_to_document(script: Script) -> dict:
    doc = script.model_dump(mode="json")
    doc["schema_version"] = SCHEMA_VERSION
    return doc


def script_from_document(doc: dict) -> Script:
    data = dict(doc)
    data.pop("schema_version", None)
    return Script.model_validate(data)


def load_script_schema() -> dict:
    text = resources.files("dstage.data").joinpath("script.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


_SCHEMA_CACHE: dict | None = None


def _schema() -> dict:
    global _SCHEMA_CACHE
    if _SCHEMA_CACHE is None:
        _SCHEMA_CACHE = load_script_schema()
    return _SCHEMA_CACHE


def _json_path(error: jsonschema.ValidationError) -> str:
    parts = ["root"]
    for part in error.absolute_path:
        if isinstance(part, int):
            parts[-1] += f"[{part}]"
        else:
            parts.append(str(part))
    path = ".".join(parts)
    if error.validator == "required":
        # point at the missing key, not its parent
        missing = error.message.split("'")[1] if "'" in error.message else ""
        if missing:
            path = f"{path}.{missing}"
    return path


def serialize_script(script: Script) -> str:
    """Canonical document text; requires a structurally valid script."""
    report = validate_script(script)
    if not report.valid:
        raise InvalidScriptError(f"cannot serialize invalid script: {report.paths()}")
    return pretty_dumps(script_to_document(script))


def parse_script(document: str | dict) -> Script:
    """Parse and fully validate a script document.

    Raises DocumentParseError with the path of the first violation, covering
    malformed JSON, schema shape errors and semantic invariant violations.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise DocumentParseError("root", f"malformed JSON: {exc.msg}") from exc
    else:
        doc = document

    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        first = jsonschema.exceptions.best_match(errors)
        raise DocumentParseError(_json_path(first), first.message)

    script = script_from_document(doc)
    report = validate_script(script)
    if not report.valid:
        issue = report.issues[0]
        raise DocumentParseError(issue.path, issue.message)
    return script


def full_factorial_design(factors: tuple[InfluenceFactor, ...] | list[InfluenceFactor], cap: int) -> tuple[DesignPoint, ...]:
    """All level combinations, at most ``cap`` of them.

    Ordering is deterministic: factors sorted by name, points enumerated
    lexicographically by level index with the first factor most significant.
    """
    ordered = sorted(factors, key=lambda f: f.name)
    size = 1
    for factor in ordered:
        size *= max(len(factor.levels), 1)
    if size > cap:
        raise DesignSpaceTooLargeError(size, cap)

    names = [f.name for f in ordered]
    points = []
    for i, combo in enumerate(itertools.product(*(f.levels for f in ordered)), start=1):
        assignments = dict(zip(names, combo))
        points.append(DesignPoint(id=f"dp-{i:03d}", assignments=assignments))
    return tuple(points)
