"""Shared constructors and scripted transports for the test suite."""

from __future__ import annotations

import json
from datetime import date

from dstage.actors import ActorAgent, Cast, Intrinsic, RelationshipNetwork, complete_edges
from dstage.demo import DemoTransport
from dstage.errors import TransportError
from dstage.gateway import CompletionRequest, Fixture, Gateway, GatewayMode
from dstage.runtime import SimConfig
from dstage.script_model import (
    DesignPoint,
    ExperimentGoal,
    InfluenceFactor,
    ResponseFactor,
    ResponseKind,
    Script,
    UserRequirement,
)


def make_requirement(**overrides) -> UserRequirement:
    data = {
        "research_goal": "factors of salesperson efficiency",
        "core_variables": ["order difficulty"],
        "target_object": "salesperson Zhang Qiang",
    }
    data.update(overrides)
    return UserRequirement.model_validate(data)


def make_script(n_factors: int = 2, candidate_index: int = 0) -> Script:
    factors = tuple(
        InfluenceFactor(name=f"factor_{i}", description=f"factor {i}", levels=("low", "high"))
        for i in range(n_factors)
    )
    return Script(
        goal=ExperimentGoal(statement="measure the effect of the levers"),
        factors=factors,
        responses=(
            ResponseFactor(name="mood", kind=ResponseKind.PROBABILITY_VECTOR, categories=("up", "flat", "down", "crash")),
            ResponseFactor(name="intensity", kind=ResponseKind.SCALAR),
        ),
        design_points=(
            DesignPoint(id="dp-1", assignments={f.name: f.levels[0] for f in factors}),
            DesignPoint(id="dp-2", assignments={f.name: f.levels[1] for f in factors}),
        ),
        perspective="research objectives",
        provenance={"candidate_index": candidate_index},
    )


def make_cast(script: Script, actor_ids: tuple[str, ...] = ("alpha", "environment")) -> Cast:
    names = sorted(script.factor_names)
    split = max(1, len(names) // 2) if len(actor_ids) > 1 else len(names)
    actors = []
    for i, actor_id in enumerate(actor_ids):
        if len(actor_ids) == 1:
            owned = names
        elif i == 0:
            owned = names[:split]
        elif i == 1:
            owned = names[split:]
        else:
            owned = []
        actors.append(
            ActorAgent(
                id=actor_id,
                intrinsic=Intrinsic(name=actor_id.title(), identity=f"{actor_id} of the scenario"),
                influence_factors=tuple(owned),
                knowledge=(),
                goals=(f"pursue {actor_id} interests",),
            )
        )
    ids = [a.id for a in actors]
    network = RelationshipNetwork(agents=tuple(sorted(ids)), edges=complete_edges(ids, {}))
    return Cast(actors=tuple(actors), network=network, script_id=script.script_id)


def make_sim_config(**overrides) -> SimConfig:
    data = {"run_id": "test-run", "days": 3, "start_date": date(1962, 10, 16), "tension_source": "intensity"}
    data.update(overrides)
    return SimConfig.model_validate(data)


class WorldTransport:
    """Scripted provider for small simulation worlds.

    ``prob_weights``/``scalars`` map day -> raw values; ``decisions`` maps
    (agent_id, day) -> text. ``fail`` is a predicate over requests that
    raises a transport error, for atomicity tests.
    """

    def __init__(
        self,
        decisions: dict | None = None,
        prob_weights: dict | None = None,
        scalars: dict | None = None,
        outcome: dict | None = None,
        fail=None,
        director=None,
        raw_overrides: dict | None = None,
    ):
        self.decisions = decisions or {}
        self.prob_weights = prob_weights or {}
        self.scalars = scalars or {}
        self.outcome = outcome or {"label": "quiet ending", "category": "peace"}
        self.fail = fail
        self.director = director
        self.raw_overrides = raw_overrides or {}
        self.fallback = DemoTransport()

    def __call__(self, req: CompletionRequest) -> str:
        if self.fail is not None and self.fail(req):
            raise TransportError("scripted transport failure")
        text = "\n\n".join(m.text for m in req.messages)
        for marker, response in self.raw_overrides.items():
            if marker in text:
                return response if isinstance(response, str) else response(req)
        day = _day_of(text)
        if req.role_id.startswith("actor:"):
            agent = req.role_id.split(":", 1)[1]
            return self.decisions.get((agent, day), f"{agent} holds course on day {day}.")
        if req.role_id.startswith("director_") and self.director is not None:
            return self.director(req)
        if req.role_id == "judge":
            if "delivering the final verdict" in text:
                return json.dumps(self.outcome)
            if "one non-negative weight per category" in text:
                weights = self.prob_weights.get(day, [1, 1, 1, 1])
                return json.dumps({"weights": weights})
            if day in self.scalars:
                return json.dumps({"score": self.scalars[day]})
        return self.fallback(req)


def _day_of(text: str) -> int:
    import re

    match = re.search(r"Day index: (\d+)", text)
    return int(match.group(1)) if match else 0


def record_gateway(transport=None) -> Gateway:
    return Gateway(GatewayMode.RECORD, transport=transport or DemoTransport())


def replay_of(recorded: Gateway) -> Gateway:
    fixture = Fixture(list(recorded.fixture.entries))
    return Gateway(GatewayMode.REPLAY, fixture=fixture)


class VectorEmbedderTransport:
    """Embedder whose vectors are supplied per exact text."""

    def __init__(self, vectors: dict[str, list[float]]):
        self.vectors = vectors
        self.fallback = DemoTransport()

    def __call__(self, req: CompletionRequest) -> str:
        if req.role_id == "embedder":
            text = req.messages[-1].text
            if text in self.vectors:
                return json.dumps(self.vectors[text])
        return self.fallback(req)
