"""Day-tick simulation runtime.

Each day, every actor perceives the world channel and its own state,
decides via the gateway, and posts its action to the channel; then the
judge samples every response variable and the tension index. Ticks are
atomic: a provider failure leaves the run exactly as it was after the
last completed day. Emergent events and decision overrides are queued
and applied at tick boundaries, which is what makes live steering safe.
"""

from __future__ import annotations

import copy
from datetime import date, timedelta
from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .actors import Cast, cast_from_document, cast_to_document, validate_cast
from .canonical import canonical_dumps, digest, read_document, write_document
from .errors import ExtractionError, RunStateError, UnknownAgentError
from .gateway import Gateway, extract_structured, make_request
from .prompts import render
from .wire_schemas import get_schema
from .script_model import (
    ResponseKind,
    Script,
    script_from_document,
    script_to_document,
    validate_script,
)

NEUTRAL_TENSION = 50.0  # day-0 fallback anchor when the judge is unusable


class MessageKind(str, Enum):
    STATEMENT = "statement"
    ACTION = "action"
    EMERGENT_EVENT = "emergent_event"
    OVERRIDE_NOTICE = "override_notice"


class OutcomeCategory(str, Enum):
    PEACE = "peace"
    LIMITED_CONFLICT = "limited_conflict"
    CONVENTIONAL_WAR = "conventional_war"
    NUCLEAR_WAR = "nuclear_war"
    UNDETERMINED = "undetermined"


class WorldMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    day_index: int
    seq: int
    sender: str  # agent id or "system"
    text: str
    kind: MessageKind


class EmergentEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    day_index: int
    description: str
    injected_by: str = "user"


class DecisionOverride(BaseModel):
    model_config = ConfigDict(frozen=True)

    day_index: int
    agent_id: str
    replacement: str


class PersonaConstraint(BaseModel):
    model_config = ConfigDict(frozen=True)

    agent_id: str
    directive: str

    @field_validator("directive")
    @classmethod
    def _non_empty(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("persona constraint directive must be non-empty")
        return v


class DecisionRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    prompt_digest: str
    decision: str
    overridden: bool = False


class FinalOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    category: OutcomeCategory
    raw_text: str | None = None


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    run_id: str = "run"
    days: int = Field(ge=1)
    start_date: date
    seed: int = 0
    constraints: tuple[PersonaConstraint, ...] = ()
    design_point_id: str | None = None
    tension_source: str | None = None  # scalar response factor mirrored into the tension series
    channel_window: int | None = None  # None = agents see the full history


class DayRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    day_index: int
    calendar_date: date
    messages: tuple[WorldMessage, ...]
    decisions: dict[str, DecisionRecord]
    samples: dict[str, Any]
    tension: float
    warnings: tuple[str, ...] = ()
    agent_states: dict[str, dict[str, Any]]


class WorldState(BaseModel):
    """Read-only view of a run for snapshots and the UI."""

    day_index: int
    calendar_date: date
    channel: tuple[WorldMessage, ...]
    agent_states: dict[str, dict[str, Any]]
    tension_series: tuple[float, ...]
    response_series: dict[str, tuple[Any, ...]]


class RunLog:
    """Append-only record of one simulation run; replayable under fixtures."""

    def __init__(self, script: Script, cast: Cast, config: SimConfig):
        self.script = script
        self.cast = cast
        self.config = config
        self.opening_messages: list[WorldMessage] = []
        self.day_records: list[DayRecord] = []
        self.agent_states: dict[str, dict[str, Any]] = {a.id: {} for a in cast.actors}
        self.pending_events: list[EmergentEvent] = []
        self.pending_overrides: list[DecisionOverride] = []
        self.sealed = False
        self.final_outcome: FinalOutcome | None = None
        self._next_seq = 0

    # -- derived views -------------------------------------------------

    @property
    def current_day(self) -> int:
        return len(self.day_records)

    @property
    def finished(self) -> bool:
        return self.current_day >= self.config.days

    @property
    def channel(self) -> list[WorldMessage]:
        messages = list(self.opening_messages)
        for record in self.day_records:
            messages.extend(record.messages)
        return messages

    @property
    def tension_series(self) -> list[float]:
        return [r.tension for r in self.day_records]

    @property
    def response_series(self) -> dict[str, list[Any]]:
        series: dict[str, list[Any]] = {r.name: [] for r in self.script.responses}
        for record in self.day_records:
            for name, value in record.samples.items():
                series.setdefault(name, []).append(value)
        return series

    def calendar_for(self, day_index: int) -> date:
        return self.config.start_date + timedelta(days=day_index)

    def decisions_on(self, calendar_date: date) -> list[tuple[str, str]]:
        """(agent id, decision text) pairs for one calendar date, in channel order."""
        pairs: list[tuple[str, str]] = []
        for record in self.day_records:
            if record.calendar_date == calendar_date:
                for agent in (a.id for a in self.cast.actors):
                    if agent in record.decisions:
                        pairs.append((agent, record.decisions[agent].decision))
        return pairs

    def world_state(self) -> WorldState:
        return WorldState(
            day_index=self.current_day,
            calendar_date=self.calendar_for(self.current_day),
            channel=tuple(self.channel),
            agent_states=copy.deepcopy(self.agent_states),
            tension_series=tuple(self.tension_series),
            response_series={k: tuple(v) for k, v in self.response_series.items()},
        )

    def state_digest(self) -> str:
        """Digest of everything a tick may change; timestamp-free by design."""
        return digest(
            {
                "channel": [m.model_dump(mode="json") for m in self.channel],
                "days": [r.model_dump(mode="json") for r in self.day_records],
                "agent_states": self.agent_states,
                "pending_events": [e.model_dump(mode="json") for e in self.pending_events],
                "pending_overrides": [o.model_dump(mode="json") for o in self.pending_overrides],
                "sealed": self.sealed,
                "outcome": self.final_outcome.model_dump(mode="json") if self.final_outcome else None,
            }
        )

    # -- persistence -----------------------------------------------------

    def to_dir(self, path: str | Path) -> None:
        path = Path(path)
        write_document(path / "config.json", _config_document(self.config))
        write_document(path / "script.json", script_to_document(self.script))
        write_document(path / "cast.json", cast_to_document(self.cast))
        write_document(path / "opening.json", [m.model_dump(mode="json") for m in self.opening_messages])
        for record in self.day_records:
            self.write_day(path, record)
        self.write_state(path)
        self.write_series(path)
        if self.final_outcome is not None:
            write_document(path / "outcome.json", self.final_outcome.model_dump(mode="json"))

    def write_day(self, path: str | Path, record: DayRecord) -> None:
        write_document(Path(path) / "days" / f"day_{record.day_index:03d}.json", record.model_dump(mode="json"))

    def write_state(self, path: str | Path) -> None:
        write_document(
            Path(path) / "state.json",
            {
                "completed_days": self.current_day,
                "next_seq": self._next_seq,
                "pending_events": [e.model_dump(mode="json") for e in self.pending_events],
                "pending_overrides": [o.model_dump(mode="json") for o in self.pending_overrides],
                "sealed": self.sealed,
                "agent_states": self.agent_states,
            },
        )

    def write_series(self, path: str | Path) -> None:
        write_document(
            Path(path) / "series.json",
            {"tension": self.tension_series, "responses": self.response_series},
        )

    @classmethod
    def from_dir(cls, path: str | Path) -> "RunLog":
        path = Path(path)
        config = _config_from_document(read_document(path / "config.json"))
        script = script_from_document(read_document(path / "script.json"))
        cast = cast_from_document(read_document(path / "cast.json"))
        run = cls(script, cast, config)
        run.opening_messages = [WorldMessage.model_validate(m) for m in read_document(path / "opening.json")]
        days_dir = path / "days"
        if days_dir.is_dir():
            for day_file in sorted(days_dir.glob("day_*.json")):
                run.day_records.append(DayRecord.model_validate(read_document(day_file)))
        state = read_document(path / "state.json")
        run.pending_events = [EmergentEvent.model_validate(e) for e in state["pending_events"]]
        run.pending_overrides = [DecisionOverride.model_validate(o) for o in state["pending_overrides"]]
        run.sealed = state["sealed"]
        run.agent_states = state["agent_states"]
        run._next_seq = state["next_seq"]
        outcome_file = path / "outcome.json"
        if outcome_file.exists():
            run.final_outcome = FinalOutcome.model_validate(read_document(outcome_file))
        return run


def _config_document(config: SimConfig) -> dict:
    return config.model_dump(mode="json")


def _config_from_document(doc: dict) -> SimConfig:
    return SimConfig.model_validate(doc)


# -- operations ----------------------------------------------------------


def init_run(script: Script, cast: Cast, config: SimConfig) -> RunLog:
    """Set up day 0: design-point attributes applied, scenario announced."""
    report = validate_script(script)
    if not report.valid:
        raise RunStateError(f"script invalid: {report.paths()}")
    problems = validate_cast(cast, script)
    if problems:
        raise RunStateError(f"cast invalid: {problems}")

    actor_ids = {a.id for a in cast.actors}
    for constraint in config.constraints:
        if constraint.agent_id not in actor_ids:
            raise UnknownAgentError(f"persona constraint names unknown agent {constraint.agent_id!r}")

    if config.tension_source is not None:
        source = next((r for r in script.responses if r.name == config.tension_source), None)
        if source is None:
            raise RunStateError(f"tension source {config.tension_source!r} is not a response factor")
        if source.kind != ResponseKind.SCALAR:
            raise RunStateError(f"tension source {config.tension_source!r} must be a scalar response")

    run = RunLog(script, cast, config)

    if config.design_point_id is not None:
        point = next((p for p in script.design_points if p.id == config.design_point_id), None)
        if point is None:
            raise RunStateError(f"design point {config.design_point_id!r} does not belong to the script")
        for factor_name, level in point.assignments.items():
            for actor in cast.actors:
                if factor_name in actor.influence_factors:
                    run.agent_states[actor.id][factor_name] = level

    announcement = WorldMessage(
        day_index=0,
        seq=run._next_seq,
        sender="system",
        text=f"Scenario start ({config.start_date.isoformat()}): {script.goal.statement}",
        kind=MessageKind.STATEMENT,
    )
    run.opening_messages.append(announcement)
    run._next_seq += 1
    return run


def _tension_source_name(run: RunLog) -> str | None:
    if run.config.tension_source is not None:
        return run.config.tension_source
    for response in run.script.responses:
        if response.kind == ResponseKind.SCALAR and "tension" in response.name.lower():
            return response.name
    return None


def _render_channel(messages: list[WorldMessage], window: int | None) -> str:
    view = messages if window is None else messages[-window:]
    if not view:
        return "(empty)"
    return "\n".join(f"[day {m.day_index}] {m.sender}: {m.text}" for m in view)


def _render_decisions(decisions: dict[str, DecisionRecord], order: list[str]) -> str:
    lines = [f"- {agent}: {decisions[agent].decision}" for agent in order if agent in decisions]
    return "\n".join(lines) if lines else "(none)"


def _actor_system_prompt(run: RunLog, agent_id: str) -> str:
    actor = run.cast.actor(agent_id)
    constraint = next((c.directive for c in run.config.constraints if c.agent_id == agent_id), None)
    relationships = []
    for other in run.cast.actors:
        if other.id == agent_id:
            continue
        label = run.cast.network.label_for(agent_id, other.id)
        if label:
            relationships.append(f"- {other.intrinsic.name} ({other.id}): {label}")
    factor_lines = []
    state = run.agent_states.get(agent_id, {})
    for name in sorted(actor.influence_factors):
        if name in state:
            factor_lines.append(f"- {name} = {state[name]}")
        else:
            factor_lines.append(f"- {name} (no current setting)")
    return render(
        "actor_system",
        name=actor.intrinsic.name,
        identity=actor.intrinsic.identity,
        description=actor.intrinsic.description,
        goals="\n".join(f"- {g}" for g in actor.goals),
        knowledge="\n".join(f"- {k}" for k in actor.knowledge) or "- (none recorded)",
        relationships="\n".join(relationships) or "- (none of substance)",
        factors="\n".join(factor_lines) or "- (none)",
        persona_constraint=f"\nStanding directive you must always honor: {constraint}\n" if constraint else "",
    )


def _decision_request(run: RunLog, agent_id: str, day: int, staged_channel: list[WorldMessage], events_today: list[EmergentEvent]):
    events_text = "\n".join(f"- {e.description}" for e in events_today) or "(none)"
    user = render(
        "actor_decision",
        scenario=run.script.goal.statement,
        day_index=str(day),
        calendar_date=run.calendar_for(day).isoformat(),
        own_state=canonical_dumps(run.agent_states.get(agent_id, {})),
        events_today=events_text,
        channel=_render_channel(staged_channel, run.config.channel_window),
    )
    return make_request(
        f"actor:{agent_id}",
        _actor_system_prompt(run, agent_id),
        user,
        temperature=0.7,
    )


def normalize_weights(raw: list[float], n_categories: int) -> list[float]:
    """Clamp to non-negative and renormalize to sum exactly 1."""
    if len(raw) != n_categories:
        raise ValueError(f"expected {n_categories} weights, got {len(raw)}")
    clamped = [max(0.0, float(w)) for w in raw]
    total = sum(clamped)
    if total <= 0.0:
        raise ValueError("weights sum to zero after clamping")
    normalized = [w / total for w in clamped]
    # guard against floating drift at the boundaries
    return [min(1.0, max(0.0, w)) for w in normalized]


def _judge_sample(
    run: RunLog,
    response,
    day: int,
    decisions: dict[str, DecisionRecord],
    staged_channel: list[WorldMessage],
    gateway: Gateway,
) -> Any:
    order = [a.id for a in run.cast.actors]
    decisions_text = _render_decisions(decisions, order)
    channel_text = _render_channel(staged_channel, run.config.channel_window)
    if response.kind == ResponseKind.SCALAR:
        request = make_request(
            "judge",
            render(
                "judge_scalar",
                factor_name=response.name,
                factor_description=response.description or "(no description)",
                day_index=str(day),
                decisions=decisions_text,
                channel=channel_text,
            ),
            "Score now.",
            response_schema="scalar_score",
            temperature=0.0,
        )
        _, doc = gateway.complete_document(request)
        return min(100.0, max(0.0, float(doc["score"])))

    request = make_request(
        "judge",
        render(
            "judge_probability",
            factor_name=response.name,
            factor_description=response.description or "(no description)",
            categories=", ".join(response.categories),
            day_index=str(day),
            decisions=decisions_text,
            channel=channel_text,
        ),
        "Estimate the distribution now.",
        response_schema="probability_weights",
        temperature=0.0,
    )
    _, doc = gateway.complete_document(request)
    weights = normalize_weights([float(w) for w in doc["weights"]], len(response.categories))
    if response.kind == ResponseKind.CATEGORICAL:
        # a categorical response samples one label per day: the modal category
        best = max(range(len(weights)), key=lambda i: (weights[i], -i))
        return response.categories[best]
    return weights


def _fallback_sample(run: RunLog, response, day: int) -> Any:
    if day > 0:
        return run.day_records[day - 1].samples[response.name]
    if response.kind == ResponseKind.SCALAR:
        return NEUTRAL_TENSION
    if response.kind == ResponseKind.CATEGORICAL:
        return response.categories[0]
    uniform = 1.0 / len(response.categories)
    return [uniform for _ in response.categories]


def compute_responses(
    run: RunLog,
    day: int,
    gateway: Gateway,
    *,
    staged_decisions: dict[str, DecisionRecord] | None = None,
    staged_channel: list[WorldMessage] | None = None,
) -> tuple[dict[str, Any], float, list[str]]:
    """One sample per response factor plus the day's tension index.

    Probability vectors are clamped non-negative and renormalized to sum
    1; scalars are clamped to [0,100]. An unusable judge answer is retried
    once and then falls back to the previous day's sample with a warning.
    """
    if staged_decisions is None:
        if day >= len(run.day_records):
            raise RunStateError(f"day {day} has no recorded decisions yet")
        staged_decisions = run.day_records[day].decisions
    if staged_channel is None:
        staged_channel = [m for m in run.channel if m.day_index <= day]

    warnings: list[str] = []
    samples: dict[str, Any] = {}
    for response in run.script.responses:
        value: Any = None
        for _ in range(2):  # one retry on unusable output
            try:
                value = _judge_sample(run, response, day, staged_decisions, staged_channel, gateway)
                break
            except (ExtractionError, ValueError):
                continue
        if value is None:
            value = _fallback_sample(run, response, day)
            warnings.append(f"judge output unusable for {response.name!r}; carried fallback sample")
        samples[response.name] = value

    source = _tension_source_name(run)
    if source is not None and source in samples:
        tension = float(samples[source])
    else:
        tension = None
        order = [a.id for a in run.cast.actors]
        request = make_request(
            "judge",
            render(
                "judge_tension",
                day_index=str(day),
                decisions=_render_decisions(staged_decisions, order),
                channel=_render_channel(staged_channel, run.config.channel_window),
            ),
            "Score now.",
            response_schema="scalar_score",
            temperature=0.0,
        )
        for _ in range(2):
            try:
                _, doc = gateway.complete_document(request)
                tension = min(100.0, max(0.0, float(doc["score"])))
                break
            except (ExtractionError, ValueError):
                continue
        if tension is None:
            tension = run.day_records[day - 1].tension if day > 0 else NEUTRAL_TENSION
            warnings.append("tension judge unusable; carried previous value")

    return samples, tension, warnings


def step_day(run: RunLog, gateway: Gateway) -> dict:
    """Advance the run one day, atomically."""
    if run.sealed:
        raise RunStateError("run is sealed")
    if run.finished:
        raise RunStateError("all configured days are already stepped")

    day = run.current_day
    seq = run._next_seq
    staged_messages: list[WorldMessage] = []
    staged_channel = list(run.channel)

    def post(sender: str, text: str, kind: MessageKind) -> None:
        nonlocal seq
        message = WorldMessage(day_index=day, seq=seq, sender=sender, text=text, kind=kind)
        seq += 1
        staged_messages.append(message)
        staged_channel.append(message)

    events_today = [e for e in run.pending_events if e.day_index == day]
    for event in events_today:
        post("system", event.description, MessageKind.EMERGENT_EVENT)

    overrides_today = {o.agent_id: o for o in run.pending_overrides if o.day_index == day}
    decisions: dict[str, DecisionRecord] = {}
    for actor in run.cast.actors:
        request = _decision_request(run, actor.id, day, staged_channel, events_today)
        decision_text = gateway.complete(request).strip()
        overridden = False
        if actor.id in overrides_today:
            decision_text = overrides_today[actor.id].replacement
            overridden = True
            post(
                "system",
                f"Decision override applied to {actor.id} for day {day}.",
                MessageKind.OVERRIDE_NOTICE,
            )
        decisions[actor.id] = DecisionRecord(
            prompt_digest=request.request_digest(),
            decision=decision_text,
            overridden=overridden,
        )
        post(actor.id, decision_text, MessageKind.ACTION)

    samples, tension, warnings = compute_responses(
        run, day, gateway, staged_decisions=decisions, staged_channel=staged_channel
    )

    record = DayRecord(
        day_index=day,
        calendar_date=run.calendar_for(day),
        messages=tuple(staged_messages),
        decisions=decisions,
        samples=samples,
        tension=tension,
        warnings=tuple(warnings),
        agent_states=copy.deepcopy(run.agent_states),
    )

    # commit point: nothing above mutated the run
    run.day_records.append(record)
    run._next_seq = seq
    run.pending_events = [e for e in run.pending_events if e.day_index != day]
    run.pending_overrides = [o for o in run.pending_overrides if o.day_index != day]

    return {
        "day_index": day,
        "calendar_date": record.calendar_date.isoformat(),
        "messages": len(staged_messages),
        "samples": samples,
        "tension": tension,
        "warnings": list(warnings),
    }


def inject_event(run: RunLog, event: EmergentEvent) -> dict:
    if run.sealed:
        raise RunStateError("run is sealed; no further mutation")
    if event.day_index < run.current_day:
        raise RunStateError(
            f"event targets past day {event.day_index}; current day is {run.current_day}"
        )
    run.pending_events.append(event)
    return {"accepted": True, "day_index": event.day_index, "kind": "emergent_event"}


def override_decision(run: RunLog, override: DecisionOverride) -> dict:
    if run.sealed:
        raise RunStateError("run is sealed; no further mutation")
    if override.day_index < run.current_day:
        raise RunStateError(
            f"override targets past day {override.day_index}; current day is {run.current_day}"
        )
    if override.agent_id not in {a.id for a in run.cast.actors}:
        raise UnknownAgentError(f"override names unknown agent {override.agent_id!r}")
    run.pending_overrides = [
        o for o in run.pending_overrides if not (o.day_index == override.day_index and o.agent_id == override.agent_id)
    ] + [override]
    return {"accepted": True, "day_index": override.day_index, "agent_id": override.agent_id, "kind": "override"}


def finalize_run(run: RunLog, gateway: Gateway) -> FinalOutcome:
    """Judge the whole channel into an outcome label + category and seal the run."""
    if run.sealed:
        raise RunStateError("run is already sealed")
    if not run.finished:
        raise RunStateError(f"run has stepped {run.current_day} of {run.config.days} days")

    request = make_request(
        "judge",
        render(
            "judge_outcome",
            scenario=run.script.goal.statement,
            channel=_render_channel(run.channel, None),
        ),
        "Deliver the verdict now.",
        response_schema="outcome",
        temperature=0.0,
    )
    outcome: FinalOutcome | None = None
    raw = ""
    for _ in range(2):
        raw = gateway.complete(request)
        try:
            doc = extract_structured(raw, get_schema("outcome"))
            outcome = FinalOutcome(label=str(doc["label"]), category=OutcomeCategory(doc["category"]))
            break
        except (ExtractionError, ValueError, KeyError):
            continue
    if outcome is None:
        outcome = FinalOutcome(
            label="outcome undetermined: judge output unparseable",
            category=OutcomeCategory.UNDETERMINED,
            raw_text=raw,
        )

    run.final_outcome = outcome
    run.sealed = True
    return outcome
