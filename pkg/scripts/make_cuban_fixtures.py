#!/usr/bin/env python3
"""Regenerate the bundled Cuban-scenario replay fixtures.

Runs the full flow (and the counterfactual simulation) against the
deterministic demo transport in record mode, then replays both fixtures
as a sanity check. Run this after changing prompt templates or any code
that alters the request sequence, then commit the updated fixtures.
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from dstage.canonical import read_document, write_document  # noqa: E402
from dstage.demo import COUNTERFACTUAL_RESPONSES, DemoTransport  # noqa: E402
from dstage.gateway import Gateway, GatewayMode  # noqa: E402
from dstage.orchestrator import FlowConfig, FlowRunner, run_simulation_flow  # noqa: E402
from dstage.script_model import ResponseFactor, UserRequirement, script_to_document  # noqa: E402
from dstage.actors import cast_from_document, cast_to_document  # noqa: E402
from dstage.script_model import parse_script  # noqa: E402

DATA = REPO / "src" / "dstage" / "data"
CUBAN = DATA / "scenarios" / "cuban"
COUNTERFACTUAL = DATA / "scenarios" / "cuban_counterfactual"


def main() -> int:
    requirement = UserRequirement.model_validate(read_document(CUBAN / "requirement.json"))
    flow = FlowConfig.model_validate(read_document(CUBAN / "flow.json"))

    # -- historical bundle: record the full flow --------------------------
    fixture_path = CUBAN / "fixture.jsonl"
    fixture_path.unlink(missing_ok=True)
    gateway = Gateway(GatewayMode.RECORD, transport=DemoTransport(), record_path=fixture_path)
    with tempfile.TemporaryDirectory() as tmp:
        result = FlowRunner(gateway).run(requirement, flow, out_dir=Path(tmp) / "artifacts")
    print(f"historical: {len(result.scripts)} scripts, selected {result.selected.script_id}, "
          f"outcome {result.outcome.category.value}, {len(gateway.fixture.entries)} fixture entries")
    assert result.outcome.category.value == "peace"
    assert result.similarity is not None and result.similarity.outcome_match.matched

    # the selected script doubles as the bundled example document
    write_document(DATA / "examples" / "cuban_script.json", script_to_document(result.selected))

    # -- counterfactual bundle: same scenario, hawkish Kennedy ------------
    cf_script = result.selected.model_copy(
        update={"responses": tuple(ResponseFactor.model_validate(r) for r in COUNTERFACTUAL_RESPONSES)}
    )
    write_document(COUNTERFACTUAL / "script.json", script_to_document(cf_script))
    write_document(COUNTERFACTUAL / "cast.json", cast_to_document(result.cast))

    cf_flow = FlowConfig.model_validate(read_document(COUNTERFACTUAL / "flow.json"))
    cf_fixture_path = COUNTERFACTUAL / "fixture.jsonl"
    cf_fixture_path.unlink(missing_ok=True)
    cf_gateway = Gateway(GatewayMode.RECORD, transport=DemoTransport(), record_path=cf_fixture_path)
    with tempfile.TemporaryDirectory() as tmp:
        runlog, outcome, similarity = run_simulation_flow(
            cf_script, result.cast, cf_flow, cf_gateway, out_dir=Path(tmp) / "artifacts"
        )
    print(f"counterfactual: outcome {outcome.category.value}, "
          f"{len(cf_gateway.fixture.entries)} fixture entries")
    assert outcome.category.value == "limited_conflict"
    assert similarity is not None and not similarity.outcome_match.matched

    # -- replay sanity check ----------------------------------------------
    replay = Gateway(GatewayMode.REPLAY, fixture=fixture_path)
    with tempfile.TemporaryDirectory() as tmp:
        replay_result = FlowRunner(replay).run(requirement, flow, out_dir=Path(tmp) / "artifacts")
    assert replay_result.outcome.category.value == "peace"

    cf_replay = Gateway(GatewayMode.REPLAY, fixture=cf_fixture_path)
    script = parse_script(read_document(COUNTERFACTUAL / "script.json"))
    cast = cast_from_document(read_document(COUNTERFACTUAL / "cast.json"))
    with tempfile.TemporaryDirectory() as tmp:
        _, cf_outcome, _ = run_simulation_flow(script, cast, cf_flow, cf_replay, out_dir=Path(tmp) / "artifacts")
    assert cf_outcome.category.value == "limited_conflict"

    print("replay sanity checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
