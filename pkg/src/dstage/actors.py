"""Actor factory: cast generation, relationship network, supervisor review.

The relationship network is structurally a complete graph: every
unordered pair of actors carries a label, possibly empty. The union of
all actors' influence factors must exactly cover the script's factors;
an always-present "environment" actor absorbs factors no character
plausibly owns.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .canonical import canonical_dumps
from .errors import CastGenerationError, ExtractionError
from .gateway import Gateway, make_request
from .prompts import render
from .script_model import Script, UserRequirement, script_to_document

ENVIRONMENT_ACTOR_ID = "environment"
DEFAULT_MIN_ACTORS = 2
DEFAULT_MAX_ACTORS = 50

FACTORY_TEMPERATURE = 0.3
SUPERVISOR_TEMPERATURE = 0.0


class Intrinsic(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    identity: str
    description: str = ""


class ActorAgent(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    intrinsic: Intrinsic
    influence_factors: tuple[str, ...] = ()
    knowledge: tuple[str, ...] = ()
    goals: tuple[str, ...]

    @model_validator(mode="after")
    def _check(self) -> "ActorAgent":
        if not self.id.strip():
            raise ValueError("actor id must be non-empty")
        if not self.intrinsic.name.strip() or not self.intrinsic.identity.strip():
            raise ValueError("actor name and identity must be non-empty")
        if not self.goals:
            raise ValueError("actor needs at least one role goal")
        return self


class Edge(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: str
    b: str
    label: str = ""

    @model_validator(mode="after")
    def _check(self) -> "Edge":
        if self.a == self.b:
            raise ValueError("self edges are not allowed")
        if self.b < self.a:
            raise ValueError("edge endpoints must be ordered a < b")
        return self

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b)


class RelationshipNetwork(BaseModel):
    model_config = ConfigDict(frozen=True)

    agents: tuple[str, ...]
    edges: tuple[Edge, ...]

    @model_validator(mode="after")
    def _check(self) -> "RelationshipNetwork":
        ids = set(self.agents)
        if len(ids) != len(self.agents):
            raise ValueError("duplicate agent ids in network")
        n = len(self.agents)
        expected = n * (n - 1) // 2
        if len(self.edges) != expected:
            raise ValueError(f"complete graph over {n} agents needs {expected} edges, got {len(self.edges)}")
        keys = set()
        for edge in self.edges:
            if edge.a not in ids or edge.b not in ids:
                raise ValueError(f"edge ({edge.a}, {edge.b}) references unknown agent")
            keys.add(edge.key)
        if len(keys) != expected:
            raise ValueError("duplicate edges in network")
        return self

    def label_for(self, x: str, y: str) -> str:
        a, b = sorted((x, y))
        for edge in self.edges:
            if edge.key == (a, b):
                return edge.label
        raise KeyError((x, y))


class Cast(BaseModel):
    model_config = ConfigDict(frozen=True)

    actors: tuple[ActorAgent, ...]
    network: RelationshipNetwork
    script_id: str = ""

    @model_validator(mode="after")
    def _check(self) -> "Cast":
        actor_ids = [a.id for a in self.actors]
        if len(set(actor_ids)) != len(actor_ids):
            raise ValueError("duplicate actor ids")
        if set(actor_ids) != set(self.network.agents):
            raise ValueError("network agents do not match the actor list")
        return self

    def actor(self, actor_id: str) -> ActorAgent:
        for a in self.actors:
            if a.id == actor_id:
                return a
        raise KeyError(actor_id)

    def factor_union(self) -> set[str]:
        union: set[str] = set()
        for a in self.actors:
            union |= set(a.influence_factors)
        return union


class CastAudit(BaseModel):
    """Diff and repair notes from factory or supervisor passes."""

    added: list[str] = Field(default_factory=list)
    removed: list[str] = Field(default_factory=list)
    changed: list[str] = Field(default_factory=list)
    edge_changes: list[str] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)


def complete_edges(actor_ids: list[str], labeled: dict[tuple[str, str], str]) -> tuple[Edge, ...]:
    """All n(n-1)/2 edges in (a, b) lexicographic order; missing labels empty."""
    ordered = sorted(actor_ids)
    edges = []
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            edges.append(Edge(a=a, b=b, label=labeled.get((a, b), "")))
    return tuple(edges)


def validate_cast(cast: Cast, script: Script) -> list[str]:
    """Cross-checks against the script; type invariants hold by construction."""
    problems = []
    script_factors = script.factor_names
    union = cast.factor_union()
    if union != script_factors:
        missing = sorted(script_factors - union)
        extra = sorted(union - script_factors)
        if missing:
            problems.append(f"factors not covered by any actor: {missing}")
        if extra:
            problems.append(f"actors reference undeclared factors: {extra}")
    return problems


def cast_to_document(cast: Cast) -> dict:
    """Canonical cast document: actors sorted by id, edges by (a, b)."""
    return {
        "script_id": cast.script_id,
        "actors": [
            {
                "id": a.id,
                "name": a.intrinsic.name,
                "identity": a.intrinsic.identity,
                "description": a.intrinsic.description,
                "influence_factors": sorted(a.influence_factors),
                "knowledge": list(a.knowledge),
                "goals": list(a.goals),
            }
            for a in sorted(cast.actors, key=lambda a: a.id)
        ],
        "edges": [
            {"a": e.a, "b": e.b, "label": e.label}
            for e in sorted(cast.network.edges, key=lambda e: e.key)
        ],
    }


def cast_from_document(doc: dict) -> Cast:
    actors = tuple(
        ActorAgent(
            id=a["id"],
            intrinsic=Intrinsic(
                name=a["name"],
                identity=a["identity"],
                description=a.get("description", ""),
            ),
            influence_factors=tuple(a.get("influence_factors", ())),
            knowledge=tuple(a.get("knowledge", ())),
            goals=tuple(a.get("goals", ())),
        )
        for a in doc["actors"]
    )
    ids = [a.id for a in actors]
    labeled = {}
    for e in doc.get("edges", []):
        a, b = sorted((e["a"], e["b"]))
        labeled[(a, b)] = e.get("label", "")
    network = RelationshipNetwork(agents=tuple(sorted(ids)), edges=complete_edges(ids, labeled))
    return Cast(actors=actors, network=network, script_id=doc.get("script_id", ""))


def _repair_document(doc: dict, script: Script, audit: CastAudit, *, max_size: int) -> dict:
    """Make a provider cast document satisfy every invariant.

    Unknown factor references are dropped, the environment actor is
    ensured and absorbs uncovered factors, the network is recompleted,
    and the cast size is clamped.
    """
    script_factors = script.factor_names
    actors = [dict(a) for a in doc.get("actors", [])]

    # drop duplicates by id, keeping the first occurrence
    seen: set[str] = set()
    unique = []
    for a in actors:
        if a["id"] in seen:
            audit.warnings.append(f"dropped duplicate actor id {a['id']!r}")
            continue
        seen.add(a["id"])
        unique.append(a)
    actors = unique

    if len(actors) > max_size:
        dropped = [a["id"] for a in actors[max_size:]]
        audit.warnings.append(f"cast larger than {max_size}; dropped {dropped}")
        actors = actors[:max_size]

    for a in actors:
        factors = [f for f in a.get("influence_factors", []) if f in script_factors]
        unknown = [f for f in a.get("influence_factors", []) if f not in script_factors]
        if unknown:
            audit.warnings.append(f"actor {a['id']!r} referenced undeclared factors {sorted(unknown)}; dropped")
        a["influence_factors"] = factors

    env = next((a for a in actors if a["id"] == ENVIRONMENT_ACTOR_ID), None)
    if env is None:
        env = {
            "id": ENVIRONMENT_ACTOR_ID,
            "name": "Environment",
            "identity": "ambient conditions and background processes of the scenario",
            "description": "Carries influence factors that no character plausibly owns.",
            "influence_factors": [],
            "knowledge": [],
            "goals": ["evolve ambient conditions plausibly and impartially"],
        }
        actors.append(env)
        audit.added.append(ENVIRONMENT_ACTOR_ID)

    covered: set[str] = set()
    for a in actors:
        covered |= set(a.get("influence_factors", []))
    uncovered = sorted(script_factors - covered)
    if uncovered:
        env["influence_factors"] = sorted(set(env.get("influence_factors", [])) | set(uncovered))
        audit.warnings.append(f"factors {uncovered} not owned by any actor; assigned to environment")

    ids = [a["id"] for a in actors]
    id_set = set(ids)
    labeled: dict[tuple[str, str], str] = {}
    for e in doc.get("edges", []):
        ea, eb = e.get("a", ""), e.get("b", "")
        if ea == eb or ea not in id_set or eb not in id_set:
            audit.warnings.append(f"dropped invalid edge ({ea!r}, {eb!r})")
            continue
        a, b = sorted((ea, eb))
        labeled[(a, b)] = e.get("label", "")

    return {
        "script_id": script.script_id,
        "actors": actors,
        "edges": [{"a": a, "b": b, "label": label} for (a, b), label in labeled.items()],
    }


def generate_cast(
    script: Script,
    req: UserRequirement,
    gateway: Gateway,
    *,
    min_size: int = DEFAULT_MIN_ACTORS,
    max_size: int = DEFAULT_MAX_ACTORS,
) -> tuple[Cast, CastAudit]:
    audit = CastAudit()
    request = make_request(
        "supervisor",
        render(
            "actor_factory",
            requirement=canonical_dumps(req.model_dump(mode="json")),
            script=canonical_dumps(script_to_document(script)),
        ),
        "Generate the cast now.",
        response_schema="cast_document",
        temperature=FACTORY_TEMPERATURE,
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
        raise CastGenerationError(f"actor factory output unparseable after retry: {last_error}")
    if not doc.get("actors"):
        raise CastGenerationError("actor factory produced zero actors")

    repaired = _repair_document(doc, script, audit, max_size=max_size)
    if len(repaired["actors"]) < min_size:
        raise CastGenerationError(f"cast has {len(repaired['actors'])} actors; at least {min_size} required")
    cast = cast_from_document(repaired)
    problems = validate_cast(cast, script)
    if problems:
        raise CastGenerationError(f"cast invalid after repair: {problems}")
    return cast, audit


def supervisor_review(cast: Cast, script: Script, gateway: Gateway) -> tuple[Cast, CastAudit]:
    """Supervisor pass: may add/delete/update actors and relabel edges.

    The revised cast is re-validated and locally repaired; the audit
    carries the add/remove/change diff. An unusable supervisor response
    keeps the original cast and notes a warning.
    """
    audit = CastAudit()
    request = make_request(
        "supervisor",
        render(
            "supervisor",
            script=canonical_dumps(script_to_document(script)),
            cast=canonical_dumps(cast_to_document(cast)),
        ),
        "Review the cast now.",
        response_schema="cast_document",
        temperature=SUPERVISOR_TEMPERATURE,
    )
    doc = None
    for _ in range(2):
        try:
            _, doc = gateway.complete_document(request)
            break
        except ExtractionError:
            continue
    if doc is None or not doc.get("actors"):
        audit.warnings.append("supervisor output unusable; cast kept unchanged")
        return cast, audit

    repaired = _repair_document(doc, script, audit, max_size=DEFAULT_MAX_ACTORS)
    if len(repaired["actors"]) < DEFAULT_MIN_ACTORS:
        audit.warnings.append("supervisor left fewer than the minimum number of actors; cast kept unchanged")
        return cast, audit
    revised = cast_from_document(repaired)
    problems = validate_cast(revised, script)
    if problems:
        audit.warnings.append(f"supervisor result invalid even after repair ({problems}); cast kept unchanged")
        return cast, audit

    _diff_casts(cast, revised, audit)
    return revised, audit


def _diff_casts(before: Cast, after: Cast, audit: CastAudit) -> None:
    before_by_id = {a.id: a for a in before.actors}
    after_by_id = {a.id: a for a in after.actors}
    for actor_id in sorted(after_by_id.keys() - before_by_id.keys()):
        if actor_id not in audit.added:
            audit.added.append(actor_id)
    audit.removed.extend(sorted(before_by_id.keys() - after_by_id.keys()))
    for actor_id in sorted(before_by_id.keys() & after_by_id.keys()):
        if before_by_id[actor_id] != after_by_id[actor_id]:
            audit.changed.append(actor_id)
    before_labels = {e.key: e.label for e in before.network.edges}
    for edge in after.network.edges:
        old = before_labels.get(edge.key)
        if old is not None and old != edge.label:
            audit.edge_changes.append(f"{edge.a}--{edge.b}: {old!r} -> {edge.label!r}")
