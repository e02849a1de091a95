import json

from dstage.canonical import read_document
from dstage.cli import main


def test_design_then_finalize_via_bundle_fixture(tmp_path, cuban_bundle, capsys):
    out = tmp_path / "design"
    code = main(
        [
            "design",
            "--requirement", str(cuban_bundle / "requirement.json"),
            "--out", str(out),
            "--candidates", "4",
            "--fixture", str(cuban_bundle / "fixture.jsonl"),
        ]
    )
    assert code == 0
    assert len(list((out / "candidates").glob("candidate_*.json"))) == 4
    evaluations = read_document(out / "evaluations.json")
    assert len(evaluations["evaluations"]) == 4

    code = main(["finalize", "--out", str(out)])
    assert code == 0
    assert read_document(out / "selected.json")["script_id"] == "script-01"
    printed = capsys.readouterr().out
    assert "script-01" in printed
    assert "83.5" in printed


def test_cast_command(tmp_path, cuban_bundle, counterfactual_bundle):
    out = tmp_path / "cast.json"
    code = main(
        [
            "cast",
            "--script", str(counterfactual_bundle.parent.parent / "examples" / "cuban_script.json"),
            "--requirement", str(cuban_bundle / "requirement.json"),
            "--out", str(out),
            "--fixture", str(cuban_bundle / "fixture.jsonl"),
        ]
    )
    assert code == 0
    doc = read_document(out)
    ids = {a["id"] for a in doc["actors"]}
    assert {"kennedy", "khrushchev", "environment"} <= ids


def test_simulate_and_eval_counterfactual(tmp_path, counterfactual_bundle, capsys):
    flow = read_document(counterfactual_bundle / "flow.json")
    events_file = tmp_path / "events.json"
    events_file.write_text(json.dumps(flow["events"]))
    out = tmp_path / "sim"

    code = main(
        [
            "simulate",
            "--script", str(counterfactual_bundle / "script.json"),
            "--cast", str(counterfactual_bundle / "cast.json"),
            "--days", "13",
            "--start-date", "1962-10-16",
            "--run-id", flow["run_id"],
            "--constraint", "kennedy=Always maintain a tough attitude when dealing with events.",
            "--events", str(events_file),
            "--design-point", "dp-001",
            "--tension-source", "international_tension",
            "--timeline", "cuban_missile_crisis",
            "--out", str(out),
            "--fixture", str(counterfactual_bundle / "fixture.jsonl"),
        ]
    )
    assert code == 0
    printed = capsys.readouterr().out
    assert "limited_conflict" in printed
    assert read_document(out / "run" / "outcome.json")["category"] == "limited_conflict"

    code = main(
        [
            "eval",
            "--run", str(out / "run"),
            "--timeline", "cuban_missile_crisis",
            "--fixture", str(counterfactual_bundle / "fixture.jsonl"),
            "--out", str(tmp_path / "similarity.json"),
        ]
    )
    assert code == 0
    report = read_document(tmp_path / "similarity.json")
    assert report["outcome_match"]["matched"] is False


def test_fixture_inspection(cuban_bundle, capsys):
    code = main(["fixture", "inspect", str(cuban_bundle / "fixture.jsonl")])
    assert code == 0
    printed = capsys.readouterr().out
    assert "entries" in printed
    assert "screenwriter" in printed

    code = main(["fixture", "head", str(cuban_bundle / "fixture.jsonl"), "-n", "3"])
    assert code == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 3


def test_cli_reports_domain_errors_cleanly(tmp_path, capsys):
    req = tmp_path / "req.json"
    req.write_text(json.dumps({"research_goal": "", "core_variables": [], "target_object": ""}))
    code = main(["design", "--requirement", str(req), "--out", str(tmp_path / "out"), "--fixture", "missing.jsonl"])
    assert code == 1
    assert "error:" in capsys.readouterr().err
