import json

import pytest

from dstage.demo import DemoTransport
from dstage.errors import (
    ExtractionError,
    GatewayConfigError,
    ReplayMissError,
    TransportError,
)
from dstage.gateway import (
    CompletionRequest,
    Fixture,
    FixtureEntry,
    Gateway,
    GatewayMode,
    HttpTransport,
    Message,
    Speaker,
    extract_structured,
    make_request,
)


def _req(text="hello", role="judge", **kwargs):
    return make_request(role, "system prompt", text, **kwargs)


class TestDigests:
    def test_identical_requests_share_a_digest(self):
        assert _req().request_digest() == _req().request_digest()

    def test_any_field_change_changes_the_digest(self):
        base = _req().request_digest()
        assert _req(role="supervisor").request_digest() != base
        assert _req(temperature=0.5).request_digest() != base
        assert _req(response_schema="scalar_score").request_digest() != base
        assert _req("hello ").request_digest() != base

    def test_construction_order_does_not_matter(self):
        a = CompletionRequest(
            role_id="judge",
            messages=(Message(speaker=Speaker.SYSTEM, text="s"), Message(speaker=Speaker.USER, text="u")),
            temperature=0.0,
            model_hint="",
        )
        b = CompletionRequest(
            model_hint="",
            temperature=0.0,
            messages=(Message(text="s", speaker=Speaker.SYSTEM), Message(text="u", speaker=Speaker.USER)),
            role_id="judge",
        )
        assert a.request_digest() == b.request_digest()

    def test_bad_role_rejected(self):
        with pytest.raises(ValueError):
            _req(role="producer")

    def test_first_message_must_be_system(self):
        with pytest.raises(ValueError):
            CompletionRequest(role_id="judge", messages=(Message(speaker=Speaker.USER, text="u"),))


class TestReplay:
    def test_replay_returns_recorded_bytes(self):
        req = _req()
        fixture = Fixture([FixtureEntry(request_digest=req.request_digest(), response_text="recorded\nexactly")])
        gateway = Gateway(GatewayMode.REPLAY, fixture=fixture)
        assert gateway.complete(req) == "recorded\nexactly"

    def test_miss_names_role_and_digest(self):
        gateway = Gateway(GatewayMode.REPLAY, fixture=Fixture())
        req = _req(role="director_goal")
        with pytest.raises(ReplayMissError) as exc:
            gateway.complete(req)
        assert exc.value.role_id == "director_goal"
        assert exc.value.digest == req.request_digest()
        assert "director_goal" in str(exc.value)

    def test_repeated_requests_consume_entries_in_order(self):
        req = _req()
        digest = req.request_digest()
        fixture = Fixture(
            [
                FixtureEntry(request_digest=digest, response_text="first"),
                FixtureEntry(request_digest=digest, response_text="second"),
            ]
        )
        gateway = Gateway(GatewayMode.REPLAY, fixture=fixture)
        assert gateway.complete(req) == "first"
        assert gateway.complete(req) == "second"
        # exhausted queues stick to the last recorded answer
        assert gateway.complete(req) == "second"

    def test_replay_mode_requires_fixture(self):
        with pytest.raises(GatewayConfigError):
            Gateway(GatewayMode.REPLAY)


class TestRecordReplayRoundTrip:
    def test_record_then_replay_is_identical(self, tmp_path):
        record = Gateway(GatewayMode.RECORD, transport=DemoTransport(), record_path=tmp_path / "f.jsonl")
        requests = [_req(f"question {i}") for i in range(5)] + [_req("question 0")]
        recorded = [record.complete(r) for r in requests]

        replay = Gateway(GatewayMode.REPLAY, fixture=tmp_path / "f.jsonl")
        replayed = [replay.complete(r) for r in requests]
        assert replayed == recorded

    def test_fixture_file_round_trips(self, tmp_path):
        fixture = Fixture([FixtureEntry(request_digest="d1", response_text="r1", metadata={"role_id": "judge"})])
        fixture.save(tmp_path / "f.jsonl")
        loaded = Fixture.load(tmp_path / "f.jsonl")
        assert loaded.entries == fixture.entries
        assert loaded.role_counts() == {"judge": 1}

    def test_corrupt_log_lines_do_not_block_loading(self, tmp_path):
        path = tmp_path / "f.jsonl"
        good = '{"request_digest": "d%d", "response_text": "r", "metadata": {}}'
        # a crash leftover mid-file is skipped; a partial tail is "not yet written"
        path.write_text(f"{good % 1}\n{{\"request_digest\": \"tru\n{good % 2}\n{{\"partial", encoding="utf-8")
        loaded = Fixture.load(path)
        assert [e.request_digest for e in loaded.entries] == ["d1", "d2"]


class TestFromEnv:
    def test_fixture_env_var_selects_replay_mode(self, monkeypatch, cuban_bundle):
        monkeypatch.setenv("DSTAGE_FIXTURE", str(cuban_bundle / "fixture.jsonl"))
        gateway = Gateway.from_env()
        assert gateway.mode == GatewayMode.REPLAY
        assert gateway.fixture is not None and gateway.fixture.entries

    def test_no_fixture_means_live_mode(self, monkeypatch):
        monkeypatch.delenv("DSTAGE_FIXTURE", raising=False)
        gateway = Gateway.from_env()
        assert gateway.mode == GatewayMode.LIVE


class TestEmbedding:
    def test_embed_deterministic_for_identical_text(self):
        gateway = Gateway(GatewayMode.RECORD, transport=DemoTransport())
        assert gateway.embed("same text") == gateway.embed("same text")
        assert gateway.embed("same text") != gateway.embed("other text")


class TestExtractStructured:
    def test_fenced_document(self):
        text = 'Sure, here you go:\n```json\n{"passed": true}\n```\nAnything else?'
        assert extract_structured(text) == {"passed": True}

    def test_prose_only_raises(self):
        with pytest.raises(ExtractionError):
            extract_structured("no structure here at all")

    def test_first_invalid_second_valid_returns_second(self):
        schema = {"type": "object", "required": ["score"]}
        text = 'thoughts {"verdict": "maybe"} then final {"score": 42}'
        assert extract_structured(text, schema) == {"score": 42}

    def test_schema_violation_with_single_document_raises(self):
        with pytest.raises(ExtractionError):
            extract_structured('{"nope": 1}', {"type": "object", "required": ["score"]})

    def test_nested_documents_inside_rejected_outer_are_skipped(self):
        schema = {"type": "object", "required": ["score"]}
        text = '{"inner": {"score": "but wrong context"}} {"score": 7}'
        assert extract_structured(text, schema) == {"score": 7}


class TestHttpTransport:
    def test_retries_then_succeeds(self):
        calls = []

        def post(url, headers, payload):
            calls.append(url)
            if len(calls) < 3:
                raise OSError("boom")
            return {"choices": [{"message": {"content": "answer"}}]}

        transport = HttpTransport(base_url="http://example.test/v1", post=post, sleep=lambda _s: None)
        assert transport(_req()) == "answer"
        assert len(calls) == 3

    def test_exhaustion_raises_transport_error(self):
        def post(url, headers, payload):
            raise OSError("down")

        transport = HttpTransport(base_url="http://example.test/v1", post=post, sleep=lambda _s: None)
        with pytest.raises(TransportError):
            transport(_req())

    def test_embedder_uses_embeddings_endpoint(self):
        seen = {}

        def post(url, headers, payload):
            seen["url"] = url
            seen["payload"] = payload
            return {"data": [{"embedding": [0.5, 0.5]}]}

        transport = HttpTransport(base_url="http://example.test/v1", post=post, sleep=lambda _s: None)
        out = transport(make_request("embedder", "embed", "text to embed"))
        assert json.loads(out) == [0.5, 0.5]
        assert seen["url"].endswith("/embeddings")
        assert seen["payload"]["input"] == "text to embed"

    def test_missing_base_url_is_config_error(self, monkeypatch):
        monkeypatch.delenv("DSTAGE_LLM_BASE_URL", raising=False)
        transport = HttpTransport(post=lambda *a: {}, sleep=lambda _s: None)
        with pytest.raises(GatewayConfigError):
            transport(_req())

    def test_role_model_defaults(self):
        captured = {}

        def post(url, headers, payload):
            captured["model"] = payload["model"]
            return {"choices": [{"message": {"content": "ok"}}]}

        transport = HttpTransport(base_url="http://example.test/v1", post=post, sleep=lambda _s: None)
        transport(make_request("screenwriter", "s", "u"))
        assert captured["model"] == "gpt-4o"
        transport(make_request("director_goal", "s", "u"))
        assert captured["model"] == "gpt-5-mini"
        transport(make_request("actor:kennedy", "s", "u", model_hint="custom-model"))
        assert captured["model"] == "custom-model"
