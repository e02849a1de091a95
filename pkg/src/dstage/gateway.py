"""Single boundary for all model traffic.

Three modes:

* ``live``   — forward requests to an HTTP chat-completion provider.
* ``record`` — forward to a transport (HTTP or any callable) and append
  every request/response pair to a fixture.
* ``replay`` — answer from a fixture only; a miss is an error. Repeated
  identical requests consume recorded responses in order, so fixtures can
  script fail-then-succeed retries.

No other module performs network traffic.
"""

from __future__ import annotations

import json
import os
import re
import time
from enum import Enum
from pathlib import Path
from typing import Any, Callable

import jsonschema
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .canonical import append_jsonl, canonical_dumps, digest, read_jsonl
from .errors import (
    ExtractionError,
    GatewayConfigError,
    ReplayMissError,
    TransportError,
)
from .wire_schemas import get_schema

ROLE_PATTERN = re.compile(
    r"^(screenwriter|director_(goal|factors|design|format)|chief_director"
    r"|supervisor|judge|embedder|actor:[A-Za-z0-9_.\-]+)$"
)

EMBEDDER_ROLE = "embedder"

# Role-to-model mapping is configuration, not a hardcode; these defaults
# mirror the generator/reviewer split the system was tuned with.
DEFAULT_ROLE_MODELS = {
    "screenwriter": "gpt-4o",
    "director_goal": "gpt-5-mini",
    "director_factors": "gpt-5-mini",
    "director_design": "gpt-5-mini",
    "director_format": "gpt-5-mini",
    "chief_director": "gpt-5-mini",
    "supervisor": "gpt-5-mini",
    "judge": "gpt-5-mini",
    "actor": "gpt-4o",
    "embedder": "text-embedding",
}

ENV_BASE_URL = "DSTAGE_LLM_BASE_URL"
ENV_API_KEY = "DSTAGE_LLM_API_KEY"


class Speaker(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class Message(BaseModel):
    model_config = ConfigDict(frozen=True)

    speaker: Speaker
    text: str


class CompletionRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    role_id: str
    messages: tuple[Message, ...]
    response_schema: str | None = None
    temperature: float = Field(default=0.0, ge=0.0)
    model_hint: str = ""

    @field_validator("role_id")
    @classmethod
    def _check_role(cls, v: str) -> str:
        if not ROLE_PATTERN.match(v):
            raise ValueError(f"unknown role_id {v!r}")
        return v

    @field_validator("messages")
    @classmethod
    def _check_messages(cls, v: tuple[Message, ...]) -> tuple[Message, ...]:
        if not v:
            raise ValueError("messages must be non-empty")
        if v[0].speaker != Speaker.SYSTEM:
            raise ValueError("first message must come from the system speaker")
        return v

    def request_digest(self) -> str:
        return digest(
            {
                "role_id": self.role_id,
                "messages": [{"speaker": m.speaker.value, "text": m.text} for m in self.messages],
                "response_schema": self.response_schema,
                "temperature": self.temperature,
                "model_hint": self.model_hint,
            }
        )


def make_request(
    role_id: str,
    system: str,
    user: str,
    *,
    response_schema: str | None = None,
    temperature: float = 0.0,
    model_hint: str = "",
) -> CompletionRequest:
    return CompletionRequest(
        role_id=role_id,
        messages=(
            Message(speaker=Speaker.SYSTEM, text=system),
            Message(speaker=Speaker.USER, text=user),
        ),
        response_schema=response_schema,
        temperature=temperature,
        model_hint=model_hint,
    )


class FixtureEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    request_digest: str
    response_text: str
    metadata: dict[str, Any] = Field(default_factory=dict)


class GatewayMode(str, Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


class Fixture:
    """Ordered request/response log, stored as line-delimited JSON.

    Replay lookups consume entries per digest in recording order and stick
    to the last one once exhausted, so a replayed session that repeats a
    request more often than the recording stays deterministic.
    """

    def __init__(self, entries: list[FixtureEntry] | None = None):
        self.entries: list[FixtureEntry] = list(entries or [])
        self._queues: dict[str, list[str]] | None = None
        self._cursors: dict[str, int] = {}

    @classmethod
    def load(cls, path: str | Path) -> "Fixture":
        rows = read_jsonl(Path(path))
        return cls([FixtureEntry.model_validate(r) for r in rows])

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for entry in self.entries:
                fh.write(canonical_dumps(entry.model_dump(mode="json")) + "\n")

    def append(self, entry: FixtureEntry) -> None:
        self.entries.append(entry)
        self._queues = None  # invalidate replay index

    def reset_cursors(self) -> None:
        self._cursors = {}

    def _index(self) -> dict[str, list[str]]:
        if self._queues is None:
            queues: dict[str, list[str]] = {}
            for entry in self.entries:
                queues.setdefault(entry.request_digest, []).append(entry.response_text)
            self._queues = queues
        return self._queues

    def lookup(self, request_digest: str) -> str | None:
        queue = self._index().get(request_digest)
        if not queue:
            return None
        cursor = self._cursors.get(request_digest, 0)
        response = queue[min(cursor, len(queue) - 1)]
        self._cursors[request_digest] = cursor + 1
        return response

    def role_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for entry in self.entries:
            role = entry.metadata.get("role_id", "?")
            counts[role] = counts.get(role, 0) + 1
        return counts


class HttpTransport:
    """Chat-completions + embeddings client with bounded retry.

    ``post`` is injectable for tests; the default uses httpx against the
    base URL from the environment.
    """

    MAX_RETRIES = 2

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        post: Callable[[str, dict, dict], dict] | None = None,
        backoff_s: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, "")).rstrip("/")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        self._post = post or self._http_post
        self._backoff_s = backoff_s
        self._sleep = sleep

    def _http_post(self, url: str, headers: dict, payload: dict) -> dict:
        import httpx

        response = httpx.post(url, headers=headers, json=payload, timeout=120.0)
        response.raise_for_status()
        return response.json()

    def __call__(self, req: CompletionRequest) -> str:
        if not self.base_url:
            raise GatewayConfigError(f"live mode needs {ENV_BASE_URL} (or an explicit base_url)")
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        if req.role_id == EMBEDDER_ROLE:
            url = f"{self.base_url}/embeddings"
            payload = {"model": self._model_for(req), "input": req.messages[-1].text}
        else:
            url = f"{self.base_url}/chat/completions"
            payload = {
                "model": self._model_for(req),
                "messages": [{"role": m.speaker.value, "content": m.text} for m in req.messages],
                "temperature": req.temperature,
            }

        last_error: Exception | None = None
        for attempt in range(self.MAX_RETRIES + 1):
            try:
                body = self._post(url, headers, payload)
                if req.role_id == EMBEDDER_ROLE:
                    return json.dumps(body["data"][0]["embedding"])
                return body["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - any transport hiccup retries
                last_error = exc
                if attempt < self.MAX_RETRIES:
                    self._sleep(self._backoff_s * (2**attempt))
        raise TransportError(f"provider unreachable after {self.MAX_RETRIES + 1} attempts: {last_error}")

    def _model_for(self, req: CompletionRequest) -> str:
        if req.model_hint:
            return req.model_hint
        role = "actor" if req.role_id.startswith("actor:") else req.role_id
        return DEFAULT_ROLE_MODELS.get(role, "gpt-4o")


class Gateway:
    """Completion/embedding provider with record/replay support."""

    def __init__(
        self,
        mode: GatewayMode | str = GatewayMode.REPLAY,
        transport: Callable[[CompletionRequest], str] | None = None,
        fixture: Fixture | str | Path | None = None,
        record_path: str | Path | None = None,
    ):
        self.mode = GatewayMode(mode)
        if isinstance(fixture, (str, Path)):
            fixture = Fixture.load(fixture)
        self.fixture = fixture
        self.record_path = Path(record_path) if record_path else None

        if self.mode == GatewayMode.REPLAY:
            if self.fixture is None:
                raise GatewayConfigError("replay mode needs a fixture")
            self.transport = None
        else:
            self.transport = transport or HttpTransport()
            if self.mode == GatewayMode.RECORD and self.fixture is None:
                self.fixture = Fixture()

    @classmethod
    def from_env(cls) -> "Gateway":
        """Replay when DSTAGE_FIXTURE points at a fixture file, else live."""
        fixture_path = os.environ.get("DSTAGE_FIXTURE")
        if fixture_path:
            return cls(GatewayMode.REPLAY, fixture=fixture_path)
        return cls(GatewayMode.LIVE)

    def complete(self, req: CompletionRequest) -> str:
        req_digest = req.request_digest()
        if self.mode == GatewayMode.REPLAY:
            assert self.fixture is not None
            response = self.fixture.lookup(req_digest)
            if response is None:
                raise ReplayMissError(req_digest, req.role_id)
            return response

        assert self.transport is not None
        response = self.transport(req)
        if self.mode == GatewayMode.RECORD:
            entry = FixtureEntry(
                request_digest=req_digest,
                response_text=response,
                metadata={"role_id": req.role_id, "request": _request_preview(req)},
            )
            assert self.fixture is not None
            self.fixture.append(entry)
            if self.record_path is not None:
                append_jsonl(self.record_path, entry.model_dump(mode="json"))
        return response

    def complete_document(self, req: CompletionRequest) -> tuple[str, Any]:
        """Complete and extract the structured document the request asked for."""
        text = self.complete(req)
        schema = get_schema(req.response_schema) if req.response_schema else None
        return text, extract_structured(text, schema)

    def embed(self, text: str) -> tuple[float, ...]:
        req = make_request(
            EMBEDDER_ROLE,
            "Embed the user text and answer with the raw JSON vector only.",
            text,
            response_schema="embedding_vector",
        )
        _, doc = self.complete_document(req)
        return tuple(float(x) for x in doc)


def _request_preview(req: CompletionRequest) -> dict:
    return {
        "role_id": req.role_id,
        "messages": [{"speaker": m.speaker.value, "text": m.text} for m in req.messages],
        "response_schema": req.response_schema,
        "temperature": req.temperature,
    }


def extract_structured(text: str, schema: dict | None = None) -> Any:
    """Locate the first schema-conforming JSON document inside free text.

    Scans forward over candidate '{' / '[' positions, tolerating prose and
    code fences; a well-formed document that fails the schema is skipped
    whole and the scan resumes after it.
    """
    decoder = json.JSONDecoder()
    i = 0
    n = len(text)
    saw_document = False
    last_reason = "no JSON document found"
    while i < n:
        ch = text[i]
        if ch not in "{[":
            i += 1
            continue
        try:
            doc, end = decoder.raw_decode(text, i)
        except json.JSONDecodeError:
            i += 1
            continue
        saw_document = True
        if schema is None:
            return doc
        try:
            jsonschema.validate(doc, schema)
            return doc
        except jsonschema.ValidationError as exc:
            last_reason = f"document at offset {i} violates schema: {exc.message}"
            i = end  # skip past the invalid document, nested parts included
    if saw_document:
        raise ExtractionError(last_reason)
    raise ExtractionError(last_reason)
