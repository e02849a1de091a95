"""HTTP service: the operational shell over the pipeline and runtime.

Endpoints:
  POST /runs                      create a run (requirement + config)
  GET  /runs/{id}                 state snapshot
  GET  /runs/{id}/events          server-sent event stream (resumable)
  POST /runs/{id}/emergent-events queue an emergent event (simulating only)
  POST /runs/{id}/overrides       queue a decision override (simulating only)
  POST /runs/{id}/revise          new run pre-filled from this one's requirement
  GET  /runs/{id}/report          evaluation report (+ outcome & similarity when sealed)

Each run's mutations are serialized through its command queue; reads are
snapshots of persisted artifacts.
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from .errors import DstageError, RunNotFoundError
from .gateway import Gateway, GatewayMode
from .orchestrator import FlowConfig, FlowRunner
from .script_model import UserRequirement, validate_requirement
from .store import TERMINAL_PHASES, DocumentStore, Phase, RunRecord


class CreateRunBody(BaseModel):
    requirement: UserRequirement
    config: dict = Field(default_factory=dict)


class EmergentEventBody(BaseModel):
    day_index: int
    description: str
    idempotency_key: str | None = None


class OverrideBody(BaseModel):
    day_index: int
    agent_id: str
    replacement: str
    idempotency_key: str | None = None


class ReviseBody(BaseModel):
    requirement: dict = Field(default_factory=dict)
    config: dict | None = None


class _Worker:
    def __init__(self, record: RunRecord, store: DocumentStore, gateway: Gateway):
        self.record = record
        self.store = store
        self.gateway = gateway
        self.commands: "queue.Queue[dict]" = queue.Queue()
        self.thread = threading.Thread(target=self._run, name=f"run-{record.run_id}", daemon=True)

    def start(self) -> None:
        self.thread.start()

    def _drain(self) -> list[dict]:
        drained = []
        while True:
            try:
                drained.append(self.commands.get_nowait())
            except queue.Empty:
                return drained

    def _on_event(self, event_type: str, data: dict) -> None:
        self.store.append_event(self.record.run_id, event_type, data)
        if event_type == "phase":
            phase = Phase(data["phase"])
            if phase != self.record.phase:
                self.store.set_phase(self.record, phase)

    def _run(self) -> None:
        try:
            config = FlowConfig.model_validate(self.record.config)
            runner = FlowRunner(self.gateway, on_event=self._on_event, command_source=self._drain)
            runner.run(self.record.requirement, config, out_dir=self.store.run_dir(self.record.run_id))
            self.store.set_phase(self.record, Phase.SEALED)
            self.store.append_event(self.record.run_id, "phase", {"phase": "sealed"})
        except Exception as exc:  # noqa: BLE001 - any failure marks the run failed
            self.store.set_phase(self.record, Phase.FAILED, error=str(exc))
            self.store.append_event(self.record.run_id, "phase", {"phase": "failed", "error": str(exc)})


def default_gateway_factory(config: dict) -> Gateway:
    fixture = config.get("fixture")
    if fixture:
        return Gateway(GatewayMode.REPLAY, fixture=fixture)
    return Gateway.from_env()


def create_app(store: DocumentStore | None = None, gateway_factory=None) -> FastAPI:
    app = FastAPI(title="dstage", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store or DocumentStore()
    app.state.gateway_factory = gateway_factory or default_gateway_factory
    app.state.workers: dict[str, _Worker] = {}

    def _store() -> DocumentStore:
        return app.state.store

    def _load(run_id: str) -> RunRecord:
        return _store().load(run_id)

    @app.exception_handler(RunNotFoundError)
    async def _not_found(_req: Request, exc: RunNotFoundError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(DstageError)
    async def _domain_error(_req: Request, exc: DstageError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.post("/runs", status_code=201)
    def create_run(body: CreateRunBody) -> dict:
        report = validate_requirement(body.requirement)
        if not report.valid:
            return JSONResponse(status_code=422, content={"detail": report.model_dump(mode="json")})
        record = _store().create(body.requirement, body.config)
        _store().append_event(record.run_id, "phase", {"phase": "composing"})
        gateway = app.state.gateway_factory(record.config)
        worker = _Worker(record, _store(), gateway)
        app.state.workers[record.run_id] = worker
        worker.start()
        return {"run_id": record.run_id, "phase": record.phase.value}

    @app.get("/runs/{run_id}")
    def get_state(run_id: str) -> dict:
        record = _load(run_id)
        return build_snapshot(_store(), record)

    @app.get("/runs/{run_id}/events")
    async def stream_state(run_id: str, request: Request, from_index: int = 0):
        _load(run_id)  # 404 for unknown runs
        last_event_id = request.headers.get("last-event-id")
        start = int(last_event_id) + 1 if last_event_id else from_index

        async def generate():
            index = start
            store = _store()
            while True:
                for event in store.read_events(run_id, index):
                    payload = json.dumps(event["data"], sort_keys=True)
                    yield f"id: {event['index']}\nevent: {event['type']}\ndata: {payload}\n\n"
                    index = event["index"] + 1
                record = store.load(run_id)
                if record.phase in TERMINAL_PHASES and not store.read_events(run_id, index):
                    return
                await asyncio.sleep(0.05)

        return StreamingResponse(generate(), media_type="text/event-stream")

    def _queue_command(run_id: str, kind: str, payload: dict, idempotency_key: str | None) -> Response:
        record = _load(run_id)
        if record.phase != Phase.SIMULATING:
            return JSONResponse(
                status_code=409,
                content={"detail": f"run is in phase {record.phase.value}; commands need the simulating phase"},
            )
        if idempotency_key and _store().idempotency_seen(run_id, idempotency_key):
            return JSONResponse(status_code=200, content={"queued": False, "duplicate": True})
        worker = app.state.workers.get(run_id)
        if worker is None:
            return JSONResponse(status_code=409, content={"detail": "run has no active worker on this server"})
        worker.commands.put({"kind": kind, "payload": payload})
        _store().append_event(run_id, "command_queued", {"kind": kind, "payload": payload})
        return JSONResponse(status_code=202, content={"queued": True})

    @app.post("/runs/{run_id}/emergent-events")
    def post_event(run_id: str, body: EmergentEventBody):
        payload = {"day_index": body.day_index, "description": body.description, "injected_by": "user"}
        return _queue_command(run_id, "event", payload, body.idempotency_key)

    @app.post("/runs/{run_id}/overrides")
    def post_override(run_id: str, body: OverrideBody):
        payload = {"day_index": body.day_index, "agent_id": body.agent_id, "replacement": body.replacement}
        return _queue_command(run_id, "override", payload, body.idempotency_key)

    @app.post("/runs/{run_id}/revise", status_code=201)
    def revise(run_id: str, body: ReviseBody):
        old = _load(run_id)
        merged = old.requirement.model_dump(mode="json")
        merged.update(body.requirement)
        requirement = UserRequirement.model_validate(merged)
        report = validate_requirement(requirement)
        if not report.valid:
            return JSONResponse(status_code=422, content={"detail": report.model_dump(mode="json")})
        config = body.config if body.config is not None else old.config
        record = _store().create(requirement, config, parent_run_id=run_id)
        _store().append_event(record.run_id, "phase", {"phase": "composing"})
        gateway = app.state.gateway_factory(record.config)
        worker = _Worker(record, _store(), gateway)
        app.state.workers[record.run_id] = worker
        worker.start()
        return {"run_id": record.run_id, "phase": record.phase.value, "parent_run_id": run_id}

    @app.get("/runs/{run_id}/report")
    def get_report(run_id: str):
        record = _load(run_id)
        report = _store().artifact(run_id, "report.json")
        if report is not None:
            return report
        evaluations = _store().artifact(run_id, "evaluations.json")
        if evaluations is None:
            return JSONResponse(
                status_code=409,
                content={"detail": f"report not ready; run is in phase {record.phase.value}"},
            )
        selected = _store().artifact(run_id, "selected.json") or {}
        return {
            "scorecards": _scorecards_from_artifact(evaluations),
            "selected_script_id": selected.get("script_id"),
        }

    return app


def _scorecards_from_artifact(evaluations_doc: dict) -> list[dict]:
    from .scoring import CRITERIA

    weights = evaluations_doc.get("weights", {})
    cards = []
    for evaluation in evaluations_doc.get("evaluations", []):
        scores = evaluation["criterion_scores"]["scores"]
        rationale = evaluation["criterion_scores"].get("rationale", {})
        cards.append(
            {
                "script_id": evaluation["script_id"],
                "candidate_index": evaluation["candidate_index"],
                "rows": [
                    {
                        "criterion": c.value,
                        "weight": weights.get(c.value),
                        "score": scores[c.value],
                        "rationale": rationale.get(c.value, ""),
                    }
                    for c in CRITERIA
                ],
                "total": evaluation["total"],
                "eliminated": evaluation["eliminated"],
                "elimination_reason": evaluation.get("elimination_reason"),
            }
        )
    return cards


def build_snapshot(store: DocumentStore, record: RunRecord) -> dict:
    """Everything the UI needs, assembled from persisted artifacts only."""
    run_id = record.run_id
    snapshot: dict[str, Any] = {
        "run_id": run_id,
        "phase": record.phase.value,
        "error": record.error,
        "created_at": record.created_at,
        "requirement": record.requirement.model_dump(mode="json"),
        "parent_run_id": record.parent_run_id,
    }

    candidates_dir = store.run_dir(run_id) / "candidates"
    if candidates_dir.is_dir():
        snapshot["candidates"] = [
            json.loads(p.read_text(encoding="utf-8")) for p in sorted(candidates_dir.glob("candidate_*.json"))
        ]

    for name, key in [
        ("evaluations.json", "evaluations"),
        ("selected.json", "selected"),
        ("cast.json", "cast"),
        ("cast_audit.json", "cast_audit"),
        ("similarity.json", "similarity"),
    ]:
        artifact = store.artifact(run_id, name)
        if artifact is not None:
            snapshot[key] = artifact

    state = store.artifact(run_id, "run/state.json")
    if state is not None:
        snapshot["day"] = state["completed_days"]
        snapshot["days_total"] = record.config.get("days")
        snapshot["pending_events"] = state["pending_events"]
        snapshot["pending_overrides"] = state["pending_overrides"]
        snapshot["agent_states"] = state["agent_states"]

    series = store.artifact(run_id, "run/series.json")
    if series is not None:
        snapshot["tension_series"] = series["tension"]
        snapshot["response_series"] = series["responses"]

    channel: list[dict] = []
    opening = store.artifact(run_id, "run/opening.json")
    if opening is not None:
        channel.extend(opening)
        days_dir = store.run_dir(run_id) / "run" / "days"
        if days_dir.is_dir():
            for day_file in sorted(days_dir.glob("day_*.json")):
                channel.extend(json.loads(day_file.read_text(encoding="utf-8"))["messages"])
        snapshot["channel"] = channel

    outcome = store.artifact(run_id, "run/outcome.json")
    if outcome is not None:
        snapshot["outcome"] = outcome

    return snapshot
