"""Command-line interface.

Verbs mirror the flow stages: design, finalize, cast, simulate, eval,
serve, plus fixture management for the record/replay system.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from pathlib import Path

from .actors import cast_from_document, cast_to_document, generate_cast, supervisor_review
from .canonical import read_document, write_document
from .errors import DstageError
from .evaluation import evaluate_run, report_as_table
from .gateway import Fixture, Gateway, GatewayMode
from .orchestrator import FlowConfig, load_timeline, run_simulation_flow
from .pipeline import compose_candidates
from .runtime import EmergentEvent, PersonaConstraint, RunLog, finalize_run, step_day
from .scoring import ScriptEvaluation, WeightVector, evaluate_script, select_final
from .script_model import UserRequirement, parse_script, script_to_document, validate_requirement


def _gateway(args: argparse.Namespace) -> Gateway:
    if getattr(args, "fixture", None):
        return Gateway(GatewayMode.REPLAY, fixture=args.fixture)
    if getattr(args, "record", None):
        return Gateway(GatewayMode.RECORD, record_path=args.record)
    return Gateway.from_env()


def _load_requirement(path: str) -> UserRequirement:
    req = UserRequirement.model_validate(read_document(path))
    report = validate_requirement(req)
    if not report.valid:
        raise DstageError(f"requirement invalid: {[i.message for i in report.issues]}")
    return req


def cmd_design(args: argparse.Namespace) -> int:
    requirement = _load_requirement(args.requirement)
    gateway = _gateway(args)
    out = Path(args.out)
    scripts, run = compose_candidates(requirement, args.candidates, gateway)
    weights = WeightVector.default()
    evaluations = [
        evaluate_script(s, requirement, weights, gateway, sibling_scripts=scripts) for s in scripts
    ]
    for script in scripts:
        write_document(out / "candidates" / f"candidate_{script.provenance.candidate_index:02d}.json", script_to_document(script))
    run.export_event_log(out / "pipeline_events.jsonl")
    write_document(
        out / "evaluations.json",
        {
            "weights": {c.value: w for c, w in weights.weights.items()},
            "evaluations": [e.model_dump(mode="json") for e in evaluations],
        },
    )
    for evaluation in evaluations:
        flag = " (eliminated)" if evaluation.eliminated else ""
        print(f"{evaluation.script_id}: total {evaluation.total:g}{flag}")
    print(f"wrote {len(scripts)} candidates to {out}")
    return 0


def cmd_finalize(args: argparse.Namespace) -> int:
    out = Path(args.out)
    doc = read_document(out / "evaluations.json")
    evaluations = [ScriptEvaluation.model_validate(e) for e in doc["evaluations"]]
    selected_id = select_final(evaluations)
    selected = next(e for e in evaluations if e.script_id == selected_id)
    write_document(out / "selected.json", {"script_id": selected_id, "candidate_index": selected.candidate_index})
    print(f"selected {selected_id} (total {selected.total:g})")
    return 0


def cmd_cast(args: argparse.Namespace) -> int:
    script = parse_script(read_document(args.script))
    requirement = _load_requirement(args.requirement)
    gateway = _gateway(args)
    cast, audit = generate_cast(script, requirement, gateway)
    cast, review_audit = supervisor_review(cast, script, gateway)
    write_document(args.out, cast_to_document(cast))
    for warning in audit.warnings + review_audit.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"cast of {len(cast.actors)} actors -> {args.out}")
    return 0


def _parse_constraints(raw: list[str]) -> tuple[PersonaConstraint, ...]:
    constraints = []
    for item in raw:
        if "=" not in item:
            raise DstageError(f"constraint must look like agent=directive, got {item!r}")
        agent, directive = item.split("=", 1)
        constraints.append(PersonaConstraint(agent_id=agent.strip(), directive=directive.strip()))
    return tuple(constraints)


def cmd_simulate(args: argparse.Namespace) -> int:
    gateway = _gateway(args)

    if args.resume:
        run_dir = Path(args.resume)
        runlog = RunLog.from_dir(run_dir)
        print(f"resuming from day {runlog.current_day} of {runlog.config.days}")
        while not runlog.finished:
            summary = step_day(runlog, gateway)
            runlog.write_day(run_dir, runlog.day_records[-1])
            runlog.write_state(run_dir)
            runlog.write_series(run_dir)
            print(f"day {summary['day_index']} ({summary['calendar_date']}): tension {summary['tension']:g}")
        outcome = finalize_run(runlog, gateway)
        runlog.write_state(run_dir)
        write_document(run_dir / "outcome.json", outcome.model_dump(mode="json"))
        print(f"outcome: {outcome.category.value} — {outcome.label}")
        return 0

    script = parse_script(read_document(args.script))
    cast = cast_from_document(read_document(args.cast))
    events = tuple(
        EmergentEvent.model_validate(e) for e in (read_document(args.events) if args.events else [])
    )
    config = FlowConfig(
        days=args.days,
        start_date=date.fromisoformat(args.start_date),
        run_id=args.run_id,
        constraints=_parse_constraints(args.constraint),
        design_point_id=args.design_point,
        tension_source=args.tension_source,
        events=events,
        timeline=args.timeline,
    )
    runlog, outcome, similarity = run_simulation_flow(
        script, cast, config, gateway, out_dir=args.out,
        on_event=lambda t, d: print(f"[{t}] {json.dumps(d, default=str)}") if args.verbose else None,
    )
    print(f"completed {runlog.current_day} days; outcome: {outcome.category.value} — {outcome.label}")
    if similarity is not None:
        print(report_as_table(similarity))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    gateway = _gateway(args)
    runlog = RunLog.from_dir(args.run)
    timeline = load_timeline(args.timeline)
    report = evaluate_run(runlog, timeline, gateway, gateway)
    if args.out:
        write_document(args.out, report.model_dump(mode="json"))
    print(report_as_table(report))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app
    from .store import DocumentStore

    app = create_app(store=DocumentStore(args.data_dir) if args.data_dir else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_fixture(args: argparse.Namespace) -> int:
    fixture = Fixture.load(args.path)
    if args.action == "inspect":
        print(f"{len(fixture.entries)} entries")
        for role, count in sorted(fixture.role_counts().items()):
            print(f"  {role}: {count}")
    elif args.action == "head":
        for entry in fixture.entries[: args.n]:
            preview = entry.response_text.replace("\n", " ")[:100]
            print(f"{entry.metadata.get('role_id', '?'):>18}  {entry.request_digest[:12]}  {preview}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dstage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="compose candidate scripts and score them")
    p.add_argument("--requirement", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--candidates", type=int, default=4)
    p.add_argument("--fixture")
    p.add_argument("--record")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("finalize", help="select the best candidate from stored evaluations")
    p.add_argument("--out", required=True, help="directory produced by design")
    p.set_defaults(func=cmd_finalize)

    p = sub.add_parser("cast", help="generate and supervise the actor cast")
    p.add_argument("--script", required=True)
    p.add_argument("--requirement", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fixture")
    p.add_argument("--record")
    p.set_defaults(func=cmd_cast)

    p = sub.add_parser("simulate", help="run the day-tick simulation")
    p.add_argument("--script")
    p.add_argument("--cast")
    p.add_argument("--days", type=int, default=13)
    p.add_argument("--start-date", default="1962-10-16")
    p.add_argument("--run-id", default="run")
    p.add_argument("--constraint", action="append", default=[], help="agent=directive, repeatable")
    p.add_argument("--events", help="JSON file with emergent events to queue")
    p.add_argument("--design-point")
    p.add_argument("--tension-source")
    p.add_argument("--timeline")
    p.add_argument("--out")
    p.add_argument("--resume", help="existing run directory to continue")
    p.add_argument("--fixture")
    p.add_argument("--record")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="score a sealed run against a historical timeline")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--timeline", required=True)
    p.add_argument("--out")
    p.add_argument("--fixture")
    p.add_argument("--record")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("fixture", help="inspect recorded fixtures")
    p.add_argument("action", choices=["inspect", "head"])
    p.add_argument("path")
    p.add_argument("-n", type=int, default=5)
    p.set_defaults(func=cmd_fixture)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DstageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
