from datetime import date

import pytest

from dstage.errors import RunStateError, TransportError, UnknownAgentError
from dstage.gateway import Gateway, GatewayMode
from dstage.runtime import (
    DecisionOverride,
    EmergentEvent,
    MessageKind,
    OutcomeCategory,
    RunLog,
    compute_responses,
    finalize_run,
    init_run,
    inject_event,
    normalize_weights,
    override_decision,
    step_day,
)
from support import (
    WorldTransport,
    make_cast,
    make_script,
    make_sim_config,
    replay_of,
)


def small_world(**config_overrides):
    script = make_script()
    cast = make_cast(script)
    config = make_sim_config(**config_overrides)
    return script, cast, init_run(script, cast, config)


def world_gateway(**kwargs) -> Gateway:
    return Gateway(GatewayMode.RECORD, transport=WorldTransport(**kwargs))


class TestInitRun:
    def test_day_indices_map_calendar_dates(self):
        _, _, run = small_world(days=13, start_date=date(1962, 10, 16))
        assert run.calendar_for(0) == date(1962, 10, 16)
        assert run.calendar_for(12) == date(1962, 10, 28)

    def test_design_point_levels_written_to_owning_agents(self):
        script = make_script()
        cast = make_cast(script)
        run = init_run(script, cast, make_sim_config(design_point_id="dp-2"))
        merged = {}
        for state in run.agent_states.values():
            merged.update(state)
        assert merged == {"factor_0": "high", "factor_1": "high"}

    def test_unknown_design_point_rejected(self):
        script = make_script()
        with pytest.raises(RunStateError):
            init_run(script, make_cast(script), make_sim_config(design_point_id="dp-404"))

    def test_constraint_on_cast_member_accepted_on_stranger_rejected(self):
        script = make_script()
        cast = make_cast(script)
        ok = make_sim_config(constraints=({"agent_id": "alpha", "directive": "stay firm"},))
        init_run(script, cast, ok)
        bad = make_sim_config(constraints=({"agent_id": "napoleon", "directive": "stay firm"},))
        with pytest.raises(UnknownAgentError):
            init_run(script, cast, bad)

    def test_scenario_announcement_posted_at_day_zero(self):
        _, _, run = small_world()
        assert len(run.opening_messages) == 1
        announcement = run.opening_messages[0]
        assert announcement.sender == "system"
        assert announcement.day_index == 0

    def test_tension_source_must_be_scalar_response(self):
        script = make_script()
        cast = make_cast(script)
        with pytest.raises(RunStateError):
            init_run(script, cast, make_sim_config(tension_source="mood"))


class TestStepDay:
    def test_one_day_run_then_finalize(self):
        _, _, run = small_world(days=1)
        gateway = world_gateway()
        step_day(run, gateway)
        assert run.current_day == 1
        outcome = finalize_run(run, gateway)
        assert run.sealed
        assert outcome.category == OutcomeCategory.PEACE

    def test_tension_series_length_equals_days(self):
        _, _, run = small_world(days=4)
        gateway = world_gateway()
        for _ in range(4):
            step_day(run, gateway)
        assert len(run.tension_series) == 4
        with pytest.raises(RunStateError):
            step_day(run, gateway)

    def test_decisions_recorded_per_agent_in_cast_order(self):
        _, _, run = small_world(days=1)
        step_day(run, world_gateway(decisions={("alpha", 0): "alpha makes a move."}))
        record = run.day_records[0]
        assert set(record.decisions) == {"alpha", "environment"}
        assert record.decisions["alpha"].decision == "alpha makes a move."
        actions = [m for m in record.messages if m.kind == MessageKind.ACTION]
        assert [m.sender for m in actions] == ["alpha", "environment"]

    def test_mirrored_tension_source(self):
        _, _, run = small_world(days=2)
        gateway = world_gateway(scalars={0: 33, 1: 66})
        step_day(run, gateway)
        step_day(run, gateway)
        assert run.tension_series == [33.0, 66.0]
        assert run.response_series["intensity"] == [33.0, 66.0]

    def test_channel_seq_strictly_increases(self):
        _, _, run = small_world(days=3)
        gateway = world_gateway()
        for _ in range(3):
            step_day(run, gateway)
        seqs = [m.seq for m in run.channel]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)


class TestNormalization:
    def test_hand_case_two_one_one_zero(self):
        assert normalize_weights([2, 1, 1, 0], 4) == [0.5, 0.25, 0.25, 0.0]

    def test_already_normalized_unchanged(self):
        assert normalize_weights([0.5, 0.3, 0.15, 0.05], 4) == [0.5, 0.3, 0.15, 0.05]

    def test_negative_entries_clamped_before_normalizing(self):
        assert normalize_weights([-1, 1, 1, 0], 4) == [0.0, 0.5, 0.5, 0.0]

    def test_zero_sum_rejected(self):
        with pytest.raises(ValueError):
            normalize_weights([0, 0], 2)

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            normalize_weights([1, 2, 3], 4)

    def test_samples_stored_normalized(self):
        _, _, run = small_world(days=1)
        step_day(run, world_gateway(prob_weights={0: [2, 1, 1, 0]}))
        assert run.day_records[0].samples["mood"] == [0.5, 0.25, 0.25, 0.0]


class TestJudgeFallbacks:
    def test_unusable_judge_carries_previous_day_forward_with_warning(self):
        _, _, run = small_world(days=2)
        good = world_gateway(prob_weights={0: [4, 3, 2, 1]})
        step_day(run, good)

        bad = Gateway(
            GatewayMode.RECORD,
            transport=WorldTransport(raw_overrides={"one non-negative weight per category": "not json"}),
        )
        step_day(run, bad)
        day1 = run.day_records[1]
        assert day1.samples["mood"] == run.day_records[0].samples["mood"]
        assert any("mood" in w for w in day1.warnings)

    def test_day_zero_fallback_is_uniform(self):
        _, _, run = small_world(days=1)
        bad = Gateway(
            GatewayMode.RECORD,
            transport=WorldTransport(raw_overrides={"one non-negative weight per category": "not json"}),
        )
        step_day(run, bad)
        assert run.day_records[0].samples["mood"] == [0.25, 0.25, 0.25, 0.25]

    def test_compute_responses_recomputes_completed_day(self):
        _, _, run = small_world(days=1)
        gateway = world_gateway(prob_weights={0: [1, 1, 1, 1]}, scalars={0: 70})
        step_day(run, gateway)
        samples, tension, warnings = compute_responses(run, 0, gateway)
        assert samples["mood"] == [0.25, 0.25, 0.25, 0.25]
        assert tension == 70.0
        assert warnings == []


class TestAtomicity:
    def test_failed_tick_leaves_state_identical(self):
        _, _, run = small_world(days=3)
        gateway = world_gateway()
        step_day(run, gateway)
        digest_before = run.state_digest()

        failing = Gateway(
            GatewayMode.RECORD,
            transport=WorldTransport(fail=lambda req: req.role_id == "judge"),
        )
        with pytest.raises(TransportError):
            step_day(run, failing)
        assert run.state_digest() == digest_before
        assert run.current_day == 1

        step_day(run, gateway)  # resumable after the failure
        assert run.current_day == 2

    def test_actor_failure_also_atomic(self):
        _, _, run = small_world(days=1)
        digest_before = run.state_digest()
        failing = Gateway(
            GatewayMode.RECORD,
            transport=WorldTransport(fail=lambda req: req.role_id == "actor:environment"),
        )
        with pytest.raises(TransportError):
            step_day(run, failing)
        assert run.state_digest() == digest_before


class TestSteering:
    def test_event_visible_in_every_agent_prompt_of_its_day(self):
        _, _, run = small_world(days=4)
        gateway = world_gateway()
        inject_event(run, EmergentEvent(day_index=2, description="a sudden dockside strike halts loading"))
        for _ in range(4):
            step_day(run, gateway)
        day2_actor_requests = [
            entry.metadata["request"]
            for entry in gateway.fixture.entries
            if entry.metadata["role_id"].startswith("actor:")
            and any("Day index: 2" in m["text"] for m in entry.metadata["request"]["messages"])
        ]
        assert len(day2_actor_requests) == 2
        for request in day2_actor_requests:
            assert any("dockside strike" in m["text"] for m in request["messages"])

    def test_past_day_event_rejected(self):
        _, _, run = small_world(days=3)
        gateway = world_gateway()
        step_day(run, gateway)
        with pytest.raises(RunStateError):
            inject_event(run, EmergentEvent(day_index=0, description="too late"))

    def test_two_events_same_day_preserve_arrival_order(self):
        _, _, run = small_world(days=1)
        inject_event(run, EmergentEvent(day_index=0, description="first bulletin"))
        inject_event(run, EmergentEvent(day_index=0, description="second bulletin"))
        step_day(run, world_gateway())
        events = [m for m in run.day_records[0].messages if m.kind == MessageKind.EMERGENT_EVENT]
        assert [m.text for m in events] == ["first bulletin", "second bulletin"]

    def test_override_fires_exactly_once_and_marks_decision(self):
        _, _, run = small_world(days=4)
        gateway = world_gateway()
        override_decision(run, DecisionOverride(day_index=2, agent_id="alpha", replacement="alpha stands down."))
        for _ in range(4):
            step_day(run, gateway)
        assert run.day_records[2].decisions["alpha"].overridden
        assert run.day_records[2].decisions["alpha"].decision == "alpha stands down."
        assert not run.day_records[1].decisions["alpha"].overridden
        notices = [m for m in run.channel if m.kind == MessageKind.OVERRIDE_NOTICE]
        assert len(notices) == 1
        assert notices[0].day_index == 2

    def test_override_unknown_agent_rejected(self):
        _, _, run = small_world(days=1)
        with pytest.raises(UnknownAgentError):
            override_decision(run, DecisionOverride(day_index=0, agent_id="nobody", replacement="x"))

    def test_sealed_run_rejects_commands(self):
        _, _, run = small_world(days=1)
        gateway = world_gateway()
        step_day(run, gateway)
        finalize_run(run, gateway)
        with pytest.raises(RunStateError):
            inject_event(run, EmergentEvent(day_index=5, description="late"))
        with pytest.raises(RunStateError):
            override_decision(run, DecisionOverride(day_index=5, agent_id="alpha", replacement="x"))

    def test_persona_constraint_text_reaches_every_prompt(self):
        script = make_script()
        cast = make_cast(script)
        run = init_run(
            script,
            cast,
            make_sim_config(days=2, constraints=({"agent_id": "alpha", "directive": "never concede on price"},)),
        )
        gateway = world_gateway()
        step_day(run, gateway)
        step_day(run, gateway)
        alpha_requests = [
            e.metadata["request"] for e in gateway.fixture.entries if e.metadata["role_id"] == "actor:alpha"
        ]
        assert len(alpha_requests) == 2
        for request in alpha_requests:
            assert any("never concede on price" in m["text"] for m in request["messages"])


class TestFinalize:
    def test_unfinished_run_cannot_finalize(self):
        _, _, run = small_world(days=2)
        gateway = world_gateway()
        step_day(run, gateway)
        with pytest.raises(RunStateError):
            finalize_run(run, gateway)

    def test_unparseable_outcome_becomes_undetermined_with_raw_preserved(self):
        _, _, run = small_world(days=1)
        step_day(run, world_gateway())
        bad = Gateway(
            GatewayMode.RECORD,
            transport=WorldTransport(raw_overrides={"delivering the final verdict": "the ending was ambiguous"}),
        )
        outcome = finalize_run(run, bad)
        assert outcome.category == OutcomeCategory.UNDETERMINED
        assert outcome.raw_text == "the ending was ambiguous"
        assert run.sealed

    def test_categorical_response_stores_modal_label(self):
        script = make_script()
        # swap the probability response for a categorical one
        responses = (
            script.responses[0].model_copy(update={"kind": "categorical"}),
            script.responses[1],
        )
        script = script.model_copy(update={"responses": responses})
        cast = make_cast(script)
        run = init_run(script, cast, make_sim_config(days=1))
        step_day(run, world_gateway(prob_weights={0: [1, 5, 2, 1]}))
        assert run.day_records[0].samples["mood"] == "flat"


class TestPersistenceAndReplay:
    def test_directory_round_trip_preserves_state_digest(self, tmp_path):
        _, _, run = small_world(days=3)
        gateway = world_gateway()
        step_day(run, gateway)
        step_day(run, gateway)
        inject_event(run, EmergentEvent(day_index=2, description="late bulletin"))
        run.to_dir(tmp_path / "run")

        loaded = RunLog.from_dir(tmp_path / "run")
        assert loaded.state_digest() == run.state_digest()
        assert loaded.current_day == 2
        assert len(loaded.pending_events) == 1

    def test_loaded_run_continues_stepping(self, tmp_path):
        _, _, reference = small_world(days=3)
        gateway = world_gateway()
        step_day(reference, gateway)
        step_day(reference, gateway)

        # replay day 0, persist, reload, then continue with day 1
        replay = replay_of(gateway)
        _, _, run = small_world(days=3)
        step_day(run, replay)
        run.to_dir(tmp_path / "run")

        loaded = RunLog.from_dir(tmp_path / "run")
        step_day(loaded, replay)
        assert loaded.current_day == 2
        assert loaded.state_digest() == reference.state_digest()

    def test_record_then_replay_produces_identical_run(self):
        _, _, run_a = small_world(days=3)
        recorded = world_gateway()
        inject_event(run_a, EmergentEvent(day_index=1, description="storm warning"))
        for _ in range(3):
            step_day(run_a, recorded)
        finalize_run(run_a, recorded)

        _, _, run_b = small_world(days=3)
        replayed = replay_of(recorded)
        inject_event(run_b, EmergentEvent(day_index=1, description="storm warning"))
        for _ in range(3):
            step_day(run_b, replayed)
        finalize_run(run_b, replayed)

        assert run_a.state_digest() == run_b.state_digest()
