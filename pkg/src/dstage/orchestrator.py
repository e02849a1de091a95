"""End-to-end flow: requirement -> candidates -> selection -> cast -> run.

Shared by the CLI, the HTTP service worker and the fixture tooling so
that recorded and replayed sessions traverse byte-identical request
sequences. Artifacts are written incrementally (one file per completed
day) which is what makes interrupted runs resumable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from pydantic import BaseModel, ConfigDict, Field

from .actors import Cast, CastAudit, cast_to_document, generate_cast, supervisor_review
from .canonical import write_document
from .errors import RunStateError, UnknownAgentError
from .evaluation import HistoricalTimeline, SimilarityReport, evaluate_run
from .gateway import Gateway
from .pipeline import CompositionRun, compose_candidates
from .runtime import (
    DecisionOverride,
    EmergentEvent,
    FinalOutcome,
    PersonaConstraint,
    RunLog,
    SimConfig,
    finalize_run,
    init_run,
    inject_event,
    override_decision,
    step_day,
)
from .scoring import (
    ScriptEvaluation,
    WeightVector,
    evaluate_script,
    evaluation_report_rows,
    select_final,
)
from .script_model import Script, UserRequirement, script_to_document

EventSink = Callable[[str, dict], None]
CommandSource = Callable[[], list[dict]]


class FlowConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_candidates: int = 4
    max_attempts_per_stage: int = 3
    weights: WeightVector = Field(default_factory=WeightVector.default)
    days: int = 1
    start_date: date
    run_id: str = "run"
    seed: int = 0
    constraints: tuple[PersonaConstraint, ...] = ()
    design_point_id: str | None = None
    tension_source: str | None = None
    channel_window: int | None = None
    events: tuple[EmergentEvent, ...] = ()  # steering script queued at init
    timeline: str | None = None  # bundled timeline name or a file path
    tick_interval_s: float = 0.0

    def sim_config(self) -> SimConfig:
        return SimConfig(
            run_id=self.run_id,
            days=self.days,
            start_date=self.start_date,
            seed=self.seed,
            constraints=self.constraints,
            design_point_id=self.design_point_id,
            tension_source=self.tension_source,
            channel_window=self.channel_window,
        )


@dataclass
class FlowResult:
    scripts: list[Script]
    composition: CompositionRun
    evaluations: list[ScriptEvaluation]
    selected: Script
    cast: Cast
    cast_audit: CastAudit
    runlog: RunLog
    outcome: FinalOutcome
    similarity: SimilarityReport | None = None
    warnings: list[str] = field(default_factory=list)


def bundled_timeline_path(name: str) -> Path:
    return Path(str(resources.files("dstage.data").joinpath(f"timelines/{name}.json")))


def load_timeline(name_or_path: str) -> HistoricalTimeline:
    path = Path(name_or_path)
    if not path.exists():
        path = bundled_timeline_path(name_or_path)
    return HistoricalTimeline.load(path)


def bundled_scenario_dir(name: str) -> Path:
    return Path(str(resources.files("dstage.data").joinpath(f"scenarios/{name}")))


def build_report(
    evaluations: list[ScriptEvaluation],
    weights: WeightVector,
    scripts: list[Script],
    selected_id: str | None,
    outcome: FinalOutcome | None = None,
    similarity: SimilarityReport | None = None,
) -> dict:
    """The user-facing closed-loop report: scorecards, outcome, similarity."""
    by_index = {s.provenance.candidate_index: s for s in scripts}
    scorecards = []
    for evaluation in sorted(evaluations, key=lambda e: e.candidate_index):
        script = by_index.get(evaluation.candidate_index)
        scorecards.append(
            {
                "script_id": evaluation.script_id,
                "candidate_index": evaluation.candidate_index,
                "perspective": script.perspective if script else "",
                "rows": evaluation_report_rows(evaluation, weights),
                "total": evaluation.total,
                "eliminated": evaluation.eliminated,
                "elimination_reason": evaluation.elimination_reason,
            }
        )
    report: dict[str, Any] = {"scorecards": scorecards, "selected_script_id": selected_id}
    if outcome is not None:
        report["outcome"] = outcome.model_dump(mode="json")
    if similarity is not None:
        report["similarity"] = similarity.model_dump(mode="json")
    return report


class FlowRunner:
    """Drives the whole flow, emitting events and draining steering commands."""

    def __init__(
        self,
        gateway: Gateway,
        on_event: EventSink | None = None,
        command_source: CommandSource | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.gateway = gateway
        self.on_event = on_event or (lambda _type, _data: None)
        self.command_source = command_source
        self.sleeper = sleeper

    def run(self, requirement: UserRequirement, config: FlowConfig, out_dir: str | Path | None = None) -> FlowResult:
        out = Path(out_dir) if out_dir is not None else None
        if out is not None:
            write_document(out / "requirement.json", requirement.model_dump(mode="json"))
            write_document(out / "flow_config.json", config.model_dump(mode="json"))
            write_document(out / "meta.json", {"created_at": time.time()})

        scripts, composition = self.compose(requirement, config, out)
        evaluations, selected = self.finalize(scripts, requirement, config, out)
        cast, audit = self.cast(selected, requirement, config, out)
        runlog, outcome = self.simulate(selected, cast, config, out)
        similarity = self.evaluate(runlog, config, out)

        if out is not None:
            report = build_report(evaluations, config.weights, scripts, selected.script_id, outcome, similarity)
            write_document(out / "report.json", report)

        return FlowResult(
            scripts=scripts,
            composition=composition,
            evaluations=evaluations,
            selected=selected,
            cast=cast,
            cast_audit=audit,
            runlog=runlog,
            outcome=outcome,
            similarity=similarity,
        )

    # -- stages ----------------------------------------------------------

    def compose(self, requirement: UserRequirement, config: FlowConfig, out: Path | None):
        self.on_event("phase", {"phase": "composing"})
        scripts, composition = compose_candidates(
            requirement,
            config.n_candidates,
            self.gateway,
            max_attempts_per_stage=config.max_attempts_per_stage,
        )
        for event in composition.event_log:
            self.on_event("pipeline", event.model_dump(mode="json"))
        if out is not None:
            for script in scripts:
                write_document(
                    out / "candidates" / f"candidate_{script.provenance.candidate_index:02d}.json",
                    script_to_document(script),
                )
            composition.export_event_log(out / "pipeline_events.jsonl")
        return scripts, composition

    def finalize(self, scripts: list[Script], requirement: UserRequirement, config: FlowConfig, out: Path | None):
        self.on_event("phase", {"phase": "finalizing"})
        evaluations = [
            evaluate_script(script, requirement, config.weights, self.gateway, sibling_scripts=scripts)
            for script in scripts
        ]
        selected_id = select_final(evaluations)
        selected = next(s for s in scripts if s.script_id == selected_id)
        self.on_event("selection", {"selected_script_id": selected_id})
        if out is not None:
            write_document(
                out / "evaluations.json",
                {
                    "weights": {c.value: w for c, w in config.weights.weights.items()},
                    "evaluations": [e.model_dump(mode="json") for e in evaluations],
                },
            )
            write_document(
                out / "selected.json",
                {"script_id": selected_id, "candidate_index": selected.provenance.candidate_index},
            )
        return evaluations, selected

    def cast(self, script: Script, requirement: UserRequirement, config: FlowConfig, out: Path | None):
        self.on_event("phase", {"phase": "casting"})
        cast, audit = generate_cast(script, requirement, self.gateway)
        cast, review_audit = supervisor_review(cast, script, self.gateway)
        audit = CastAudit(
            added=audit.added + review_audit.added,
            removed=audit.removed + review_audit.removed,
            changed=audit.changed + review_audit.changed,
            edge_changes=audit.edge_changes + review_audit.edge_changes,
            warnings=audit.warnings + review_audit.warnings,
        )
        self.on_event("cast", {"actors": [a.id for a in cast.actors]})
        if out is not None:
            write_document(out / "cast.json", cast_to_document(cast))
            write_document(out / "cast_audit.json", audit.model_dump(mode="json"))
        return cast, audit

    def simulate(self, script: Script, cast: Cast, config: FlowConfig, out: Path | None):
        self.on_event("phase", {"phase": "simulating"})
        runlog = init_run(script, cast, config.sim_config())
        for event in config.events:
            inject_event(runlog, event)
        run_dir = out / "run" if out is not None else None
        if run_dir is not None:
            runlog.to_dir(run_dir)

        while not runlog.finished:
            self._drain_commands(runlog)
            summary = step_day(runlog, self.gateway)
            if run_dir is not None:
                runlog.write_day(run_dir, runlog.day_records[-1])
                runlog.write_state(run_dir)
                runlog.write_series(run_dir)
            self.on_event("day", summary)
            if config.tick_interval_s > 0:
                self.sleeper(config.tick_interval_s)

        self._drain_commands(runlog, final=True)
        outcome = finalize_run(runlog, self.gateway)
        if run_dir is not None:
            runlog.write_state(run_dir)
            write_document(run_dir / "outcome.json", outcome.model_dump(mode="json"))
        self.on_event("outcome", outcome.model_dump(mode="json"))
        return runlog, outcome

    def evaluate(self, runlog: RunLog, config: FlowConfig, out: Path | None) -> SimilarityReport | None:
        if config.timeline is None:
            return None
        timeline = load_timeline(config.timeline)
        similarity = evaluate_run(runlog, timeline, self.gateway, self.gateway)
        self.on_event(
            "similarity",
            {
                "mean_embedding": similarity.mean_embedding,
                "mean_judge": similarity.mean_judge,
                "outcome_matched": similarity.outcome_match.matched,
            },
        )
        if out is not None:
            write_document(out / "similarity.json", similarity.model_dump(mode="json"))
        return similarity

    def _drain_commands(self, runlog: RunLog, final: bool = False) -> None:
        if self.command_source is None:
            return
        for command in self.command_source():
            kind = command.get("kind")
            payload = command.get("payload", {})
            try:
                if final:
                    raise RunStateError("run already finished; command not applicable")
                if kind == "event":
                    ack = inject_event(runlog, EmergentEvent.model_validate(payload))
                elif kind == "override":
                    ack = override_decision(runlog, DecisionOverride.model_validate(payload))
                else:
                    raise RunStateError(f"unknown command kind {kind!r}")
                self.on_event("command", {"kind": kind, "payload": payload, "ack": ack})
            except (RunStateError, UnknownAgentError, ValueError) as exc:
                self.on_event("command_rejected", {"kind": kind, "payload": payload, "reason": str(exc)})


def run_simulation_flow(
    script: Script,
    cast: Cast,
    config: FlowConfig,
    gateway: Gateway,
    out_dir: str | Path | None = None,
    on_event: EventSink | None = None,
    command_source: CommandSource | None = None,
    sleeper: Callable[[float], None] = time.sleep,
) -> tuple[RunLog, FinalOutcome, SimilarityReport | None]:
    """Simulation-only flow over a prebuilt script and cast."""
    runner = FlowRunner(gateway, on_event=on_event, command_source=command_source, sleeper=sleeper)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        write_document(out / "flow_config.json", config.model_dump(mode="json"))
        write_document(out / "meta.json", {"created_at": time.time()})
    runlog, outcome = runner.simulate(script, cast, config, out)
    similarity = runner.evaluate(runlog, config, out)
    if out is not None:
        write_document(
            out / "report.json",
            {"scorecards": [], "selected_script_id": script.script_id, "outcome": outcome.model_dump(mode="json"),
             **({"similarity": similarity.model_dump(mode="json")} if similarity else {})},
        )
    return runlog, outcome, similarity
