import json
import random

import pytest

from dstage.canonical import read_document
from dstage.demo import DemoTransport
from dstage.errors import AllCandidatesAbortedError, AttemptCapReachedError, CompositionError
from dstage.gateway import Gateway, GatewayMode
from dstage.pipeline import (
    WORK_STAGES,
    CandidateBuilder,
    CompositionRun,
    EventAction,
    Stage,
    _draft,
    compose_candidates,
    review_section,
    rewrite_section,
)
from dstage.script_model import UserRequirement, validate_script
from support import make_requirement, record_gateway, replay_of


def assert_gate_ordering(run: CompositionRun) -> None:
    """No stage k+1 draft may precede the first reviewed_pass of stage k."""
    order = {s: i for i, s in enumerate(WORK_STAGES)}
    for index in {e.candidate_index for e in run.event_log}:
        events = run.events_for(index)
        first_pass: dict[Stage, int] = {}
        for pos, event in enumerate(events):
            if event.action == EventAction.REVIEWED_PASS and event.stage not in first_pass:
                first_pass[event.stage] = pos
        for pos, event in enumerate(events):
            if event.action == EventAction.DRAFTED and order.get(event.stage, 0) > 0:
                previous = WORK_STAGES[order[event.stage] - 1]
                assert previous in first_pass and first_pass[previous] < pos, (
                    f"candidate {index}: {event.stage.value} drafted before {previous.value} passed"
                )


def assert_attempt_caps(run: CompositionRun) -> None:
    for candidate in run.candidates:
        for stage, attempts in candidate.attempts.items():
            assert 0 <= attempts <= run.max_attempts_per_stage
        counted: dict[Stage, int] = {s: 0 for s in WORK_STAGES}
        for event in run.events_for(candidate.index):
            if event.action in (EventAction.DRAFTED, EventAction.REWRITTEN):
                counted[event.stage] += 1
        for stage, n in counted.items():
            assert n <= run.max_attempts_per_stage


class _FailingDirector:
    """Wraps the demo transport; fails chosen director roles on demand."""

    def __init__(self, role: str, times: int | None = None, feedback: str = "needs work"):
        self.role = role
        self.remaining = times  # None = always fail
        self.feedback = feedback
        self.demo = DemoTransport()

    def __call__(self, req):
        if req.role_id == self.role and (self.remaining is None or self.remaining > 0):
            if self.remaining is not None:
                self.remaining -= 1
            return json.dumps({"passed": False, "feedback": self.feedback})
        return self.demo(req)


class TestComposeCandidates:
    def test_cuban_requirement_yields_four_complete_scripts(self, cuban_bundle):
        req = UserRequirement.model_validate(read_document(cuban_bundle / "requirement.json"))
        gateway = record_gateway()
        scripts, run = compose_candidates(req, 4, gateway)
        assert len(scripts) == 4
        assert [s.provenance.candidate_index for s in scripts] == [0, 1, 2, 3]
        assert all(validate_script(s).valid for s in scripts)
        assert len({s.perspective for s in scripts}) == 4
        assert_gate_ordering(run)
        assert_attempt_caps(run)

    def test_bundled_scenario_exercises_one_rewrite(self, cuban_bundle):
        req = UserRequirement.model_validate(read_document(cuban_bundle / "requirement.json"))
        scripts, run = compose_candidates(req, 4, record_gateway())
        factor_events = [
            e.action
            for e in run.events_for(2)
            if e.stage == Stage.FACTORS
        ]
        assert factor_events == [
            EventAction.DRAFTED,
            EventAction.REVIEWED_FAIL,
            EventAction.REWRITTEN,
            EventAction.REVIEWED_PASS,
        ]

    def test_always_failing_stage_aborts_after_three_attempts(self):
        transport = _FailingDirector("director_factors")
        with pytest.raises(AllCandidatesAbortedError) as exc:
            compose_candidates(make_requirement(), 1, record_gateway(transport))
        run = exc.value.run
        candidate = run.candidates[0]
        assert candidate.aborted
        assert candidate.attempts[Stage.FACTORS] == 3
        events = [e.action for e in run.events_for(0) if e.stage == Stage.FACTORS]
        assert events == [
            EventAction.DRAFTED,
            EventAction.REVIEWED_FAIL,
            EventAction.REWRITTEN,
            EventAction.REVIEWED_FAIL,
            EventAction.REWRITTEN,
            EventAction.REVIEWED_FAIL,
            EventAction.ABORTED,
        ]

    def test_fail_once_then_pass_event_order(self):
        transport = _FailingDirector("director_factors", times=1)
        scripts, run = compose_candidates(make_requirement(), 1, record_gateway(transport))
        assert len(scripts) == 1
        events = [e.action for e in run.events_for(0) if e.stage == Stage.FACTORS]
        assert events == [
            EventAction.DRAFTED,
            EventAction.REVIEWED_FAIL,
            EventAction.REWRITTEN,
            EventAction.REVIEWED_PASS,
        ]

    def test_invalid_requirement_rejected(self):
        with pytest.raises(CompositionError):
            compose_candidates(UserRequirement(), 1, record_gateway())

    def test_provider_failure_carries_partial_event_log(self):
        from dstage.errors import TransportError

        demo = DemoTransport()
        calls = {"n": 0}

        def flaky(req):
            calls["n"] += 1
            if calls["n"] > 3:
                raise TransportError("provider went away")
            return demo(req)

        with pytest.raises(CompositionError) as exc:
            compose_candidates(make_requirement(), 2, record_gateway(flaky))
        assert not isinstance(exc.value, AllCandidatesAbortedError)
        assert exc.value.run is not None
        assert len(exc.value.run.event_log) > 0

    def test_replay_miss_surfaces_as_run_level_error_with_partial_log(self):
        from dstage.gateway import Fixture, GatewayMode

        recorded = record_gateway()
        compose_candidates(make_requirement(), 1, recorded)
        truncated = Gateway(GatewayMode.REPLAY, fixture=Fixture(recorded.fixture.entries[:3]))
        with pytest.raises(CompositionError) as exc:
            compose_candidates(make_requirement(), 1, truncated)
        assert exc.value.run is not None
        assert len(exc.value.run.event_log) >= 3

    def test_cap_two_aborts_after_two_failures(self):
        transport = _FailingDirector("director_goal")
        with pytest.raises(AllCandidatesAbortedError) as exc:
            compose_candidates(make_requirement(), 1, record_gateway(transport), max_attempts_per_stage=2)
        assert exc.value.run.candidates[0].attempts[Stage.GOAL] == 2

    def test_surviving_candidates_returned_when_one_aborts(self):
        # director rejects only the generic goal drafted by candidate 0's
        # perspective marker; with identical demo content across candidates
        # we instead abort everyone via an always-fail and check the error,
        # so here assert partial survival with a one-shot failure instead
        transport = _FailingDirector("director_design", times=3)
        scripts, run = compose_candidates(make_requirement(), 2, record_gateway(transport))
        assert len(scripts) == 1
        assert run.candidates[0].aborted
        assert not run.candidates[1].aborted


class TestReviewSection:
    def _drafted_candidate(self, stages=(Stage.GOAL,)):
        req = make_requirement()
        gateway = record_gateway()
        candidate = CandidateBuilder(0, "research objectives")
        run = CompositionRun(req, [candidate])
        for stage in stages:
            _draft(candidate, stage, req, gateway, run)
            candidate.passed[stage] = True
        return req, gateway, candidate, run

    def test_director_feedback_passes_through_the_verdict(self):
        req, _, candidate, run = self._drafted_candidate()
        candidate.passed[Stage.GOAL] = False
        rejecting = Gateway(
            GatewayMode.RECORD,
            transport=lambda r: '{"passed": false, "feedback": "goal lacks measurable outcome"}',
        )
        verdict = review_section(candidate, Stage.GOAL, req, rejecting)
        assert not verdict.passed
        assert verdict.feedback == "goal lacks measurable outcome"
        assert verdict.reviewer == "director_goal"
        assert verdict.stage == Stage.GOAL

    def test_unparseable_reviewer_output_is_a_conservative_fail(self):
        req, _, candidate, run = self._drafted_candidate()
        candidate.passed[Stage.GOAL] = False
        prose = Gateway(GatewayMode.RECORD, transport=lambda req: "I think it looks fine!")
        verdict = review_section(candidate, Stage.GOAL, req, prose)
        assert not verdict.passed
        assert verdict.feedback == "reviewer output unparseable"

    def test_format_check_local_validation_dominates_provider_pass(self):
        req, gateway, candidate, run = self._drafted_candidate(
            stages=(Stage.GOAL, Stage.FACTORS, Stage.DESIGN_POINTS)
        )
        # corrupt the design points so the assembled document is invalid
        broken = dict(candidate.sections[Stage.DESIGN_POINTS].content)
        broken["design_points"] = [{"id": "dp-1", "assignments": {"unknown_factor": "low"}}]
        candidate.sections[Stage.DESIGN_POINTS].content = broken
        _draft(candidate, Stage.FORMAT_CHECK, req, gateway, run)  # assembly is local

        always_pass = Gateway(GatewayMode.RECORD, transport=lambda r: '{"passed": true, "feedback": ""}')
        verdict = review_section(candidate, Stage.FORMAT_CHECK, req, always_pass)
        assert not verdict.passed
        assert "structural validation failed" in verdict.feedback
        assert "unknown_factor" in verdict.feedback

    def test_review_requires_prior_stages_passed(self):
        req, gateway, candidate, run = self._drafted_candidate()
        candidate.passed[Stage.GOAL] = False
        _draft(candidate, Stage.FACTORS, req, gateway, run)
        with pytest.raises(CompositionError):
            review_section(candidate, Stage.FACTORS, req, gateway)


class TestRewriteSection:
    def test_rewrite_leaves_earlier_stages_byte_identical(self):
        req = make_requirement()
        gateway = record_gateway()
        candidate = CandidateBuilder(0, "research objectives")
        run = CompositionRun(req, [candidate])
        for stage in (Stage.GOAL, Stage.FACTORS, Stage.DESIGN_POINTS):
            _draft(candidate, stage, req, gateway, run)
            candidate.passed[stage] = True
        goal_before = candidate.sections[Stage.GOAL].rendered()
        factors_before = candidate.sections[Stage.FACTORS].rendered()

        rewrite_section(candidate, Stage.DESIGN_POINTS, "tighten the levels", req, gateway, run)
        assert candidate.sections[Stage.GOAL].rendered() == goal_before
        assert candidate.sections[Stage.FACTORS].rendered() == factors_before
        assert candidate.attempts[Stage.DESIGN_POINTS] == 2

    def test_rewrite_past_cap_raises_abort_signal(self):
        req = make_requirement()
        gateway = record_gateway()
        candidate = CandidateBuilder(0, "research objectives")
        run = CompositionRun(req, [candidate], max_attempts_per_stage=1)
        _draft(candidate, Stage.GOAL, req, gateway, run)
        with pytest.raises(AttemptCapReachedError):
            rewrite_section(candidate, Stage.GOAL, "redo it", req, gateway, run)

    def test_rewrite_prompt_carries_feedback_verbatim(self):
        feedback = "the objective lacks a measurable outcome threshold (case 7731)"
        transport = _FailingDirector("director_goal", times=1, feedback=feedback)
        gateway = record_gateway(transport)
        compose_candidates(make_requirement(), 1, gateway)
        rewrite_requests = [
            entry
            for entry in gateway.fixture.entries
            if entry.metadata.get("role_id") == "screenwriter"
            and any(feedback in m["text"] for m in entry.metadata["request"]["messages"])
        ]
        assert rewrite_requests, "no screenwriter request carried the director feedback"


class _SeededDirectors:
    def __init__(self, seed: int, p_fail: float = 0.4):
        self.rng = random.Random(seed)
        self.p_fail = p_fail
        self.demo = DemoTransport()

    def __call__(self, req):
        if req.role_id.startswith("director_"):
            if self.rng.random() < self.p_fail:
                return json.dumps({"passed": False, "feedback": f"rejected ({self.rng.randint(0, 999)})"})
            return json.dumps({"passed": True, "feedback": ""})
        return self.demo(req)


def test_randomized_gates_preserve_ordering_and_caps():
    aborted_seen = False
    for seed in range(20):
        gateway = record_gateway(_SeededDirectors(seed))
        try:
            _, run = compose_candidates(make_requirement(), 2, gateway)
        except AllCandidatesAbortedError as exc:
            run = exc.run
        assert_gate_ordering(run)
        assert_attempt_caps(run)
        for candidate in run.candidates:
            if candidate.aborted:
                aborted_seen = True
                fails = [
                    e
                    for e in run.events_for(candidate.index)
                    if e.action == EventAction.REVIEWED_FAIL and e.stage == run.events_for(candidate.index)[-1].stage
                ]
                assert len(fails) == run.max_attempts_per_stage
    assert aborted_seen


def test_replay_reproduces_scripts_and_event_log(cuban_bundle):
    req = UserRequirement.model_validate(read_document(cuban_bundle / "requirement.json"))
    recorded = record_gateway()
    scripts_a, run_a = compose_candidates(req, 4, recorded)

    replayed = replay_of(recorded)
    scripts_b, run_b = compose_candidates(req, 4, replayed)

    assert scripts_a == scripts_b
    log_a = [(e.seq, e.candidate_index, e.stage, e.action) for e in run_a.event_log]
    log_b = [(e.seq, e.candidate_index, e.stage, e.action) for e in run_b.event_log]
    assert log_a == log_b


def test_event_log_exports_one_json_object_per_line(tmp_path):
    scripts, run = compose_candidates(make_requirement(), 1, record_gateway())
    out = tmp_path / "events.jsonl"
    run.export_event_log(out)
    lines = out.read_text().strip().splitlines()
    assert len(lines) == len(run.event_log)
    first = json.loads(lines[0])
    assert {"seq", "timestamp", "candidate_index", "stage", "action"} <= set(first)
