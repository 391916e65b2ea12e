"""End-to-end runs of the command line via main(argv)."""

from __future__ import annotations

import json

import pytest

from poplotto import SolverError
from poplotto.cli import main

PAIR = {
    "subpopulations": [
        {"budget": 1.0, "mass": 0.5},
        {"budget": 1.5, "mass": 0.5},
    ]
}

NEAR_TIE = {
    "subpopulations": [
        {"budget": 1.0, "mass": 1 / 3},
        {"budget": 1.5, "mass": 1 / 3},
        {"budget": 1.501, "mass": 1 / 3},
    ]
}


def write_json(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_solve_writes_machine_output_to_file(tmp_path, capsys):
    src = write_json(tmp_path, "pair.json", PAIR)
    out = tmp_path / "solution.json"
    assert main(["solve", src, "--out", str(out)]) == 0
    captured = capsys.readouterr()
    # summary moves to stdout once the document has its own file
    assert "league" in captured.out
    assert "worst violation" in captured.out
    assert captured.err == ""
    payload = json.loads(out.read_text())
    assert set(payload) == {"subpopulations", "strategies", "aggregate", "reports"}
    assert set(payload["reports"]) == {"nash", "linear_bounds", "leagues"}
    assert payload["reports"]["nash"]["passed"] is True
    assert payload["aggregate"]["heights"] == [pytest.approx(0.4, abs=1e-12)]


def test_solve_streams_machine_output_without_out(tmp_path, capsys):
    src = write_json(tmp_path, "pair.json", PAIR)
    assert main(["solve", src]) == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert payload["reports"]["nash"]["passed"] is True
    assert "worst violation" in captured.err


def test_solve_then_verify_round_trip(tmp_path, capsys):
    src = write_json(tmp_path, "pair.json", PAIR)
    out = tmp_path / "solution.json"
    main(["solve", src, "--out", str(out)])
    capsys.readouterr()
    assert main(["verify", str(out)]) == 0
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["nash"]["passed"] is True
    assert report["linear_bounds"]["passed"] is True
    assert "nash: pass" in captured.err


def test_verify_rejects_tampered_solution(tmp_path, capsys):
    src = write_json(tmp_path, "pair.json", PAIR)
    out = tmp_path / "solution.json"
    main(["solve", src, "--out", str(out)])
    capsys.readouterr()
    payload = json.loads(out.read_text())
    # same unit mass, wrong shape: strategies no longer mix to it
    payload["aggregate"]["breakpoints"] = [0.0, 2.0]
    payload["aggregate"]["heights"] = [0.5]
    tampered = write_json(tmp_path, "tampered.json", payload)
    assert main(["verify", tampered]) == 2
    captured = capsys.readouterr()
    assert "FAIL" in captured.err


def test_outputs_are_byte_deterministic(tmp_path, capsys):
    src = write_json(tmp_path, "near_tie.json", NEAR_TIE)
    runs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert main(["rewire", src, "--seed", "3", "--out", str(out)]) == 0
        capsys.readouterr()
        runs.append(out.read_bytes())
    assert runs[0] == runs[1]


def test_rewire_reports_flips_and_broken_prefix(tmp_path, capsys):
    src = write_json(tmp_path, "near_tie.json", NEAR_TIE)
    assert main(["rewire", src]) == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    reports = payload["reports"]
    assert reports["nash"]["passed"] is True
    assert reports["flips"]
    assert reports["matrix_before"] != reports["matrix_after"]
    verdicts = [row["passed"] for row in reports["prefix_consistency"]]
    assert False in verdicts
    assert "edge(s) flipped" in captured.err


def test_rewired_solution_passes_verify(tmp_path, capsys):
    src = write_json(tmp_path, "near_tie.json", NEAR_TIE)
    out = tmp_path / "rewired.json"
    assert main(["rewire", src, "--out", str(out)]) == 0
    capsys.readouterr()
    # solution fields sit at top level, so verify can re-read any payload
    assert main(["verify", str(out)]) == 0


def test_analyze_reports_structure(tmp_path, capsys):
    src = write_json(tmp_path, "near_tie.json", NEAR_TIE)
    assert main(["analyze", src]) == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert set(payload["reports"]) == {
        "nash",
        "linear_bounds",
        "leagues",
        "outcome_matrix",
        "transitivity",
        "sub_leagues",
    }
    assert payload["reports"]["transitivity"]["flags"]["weak_stochastic"] is True
    subs = payload["reports"]["sub_leagues"]["sub_leagues"]
    assert subs == [{"members": [0, 1], "thresholds": [1.5]}]
    assert "sub-league [0, 1]: a league when truncated at budget 1.5" in captured.err


def test_dice_defaults_to_searched_triple(capsys):
    assert main(["dice"]) == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert payload["dice"] == [
        [1, 1, 6, 6, 8, 8],
        [3, 3, 5, 5, 7, 7],
        [2, 2, 4, 4, 9, 9],
    ]
    assert payload["reports"]["nash"]["passed"] is True
    assert "P(die 0 beats die 1) = 0.555556" in captured.err


def test_dice_reads_custom_faces(tmp_path, capsys):
    src = write_json(tmp_path, "dice.json", {"dice": [[1, 3, 5], [1, 3, 5]]})
    assert main(["dice", src]) == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert payload["reports"]["outcome_matrix"]["probs"][0][1] == pytest.approx(0.5)
    bad = write_json(tmp_path, "notdice.json", {"faces": [[1, 2]]})
    assert main(["dice", bad]) == 1


def test_export_formats(tmp_path, capsys):
    src = write_json(tmp_path, "pair.json", PAIR)
    assert main(["export", src]) == 0
    dot = capsys.readouterr().out
    assert dot.startswith("digraph outcomes {")
    assert main(["export", src, "--format", "csv"]) == 0
    csv_text = capsys.readouterr().out
    assert csv_text.splitlines()[0] == "series,kind,x,value"
    assert main(["export", src, "--format", "json"]) == 0
    graph = json.loads(capsys.readouterr().out)
    assert {node["id"] for node in graph["nodes"]} == {0, 1}


def test_mass_normalization_warning(tmp_path, capsys):
    doubled = {
        "subpopulations": [
            {"budget": 1.0, "mass": 1.0},
            {"budget": 1.5, "mass": 1.0},
        ]
    }
    src = write_json(tmp_path, "doubled.json", doubled)
    assert main(["solve", src, "--out", str(tmp_path / "o.json")]) == 0
    captured = capsys.readouterr()
    assert "normalizing" in captured.err


def test_invalid_inputs_exit_one(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert main(["solve", missing]) == 1
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    assert main(["solve", str(bad_json)]) == 1
    array = tmp_path / "array.json"
    array.write_text("[1, 2]")
    assert main(["solve", str(array)]) == 1
    unsorted = write_json(
        tmp_path,
        "unsorted.json",
        {
            "subpopulations": [
                {"budget": 2.0, "mass": 0.5},
                {"budget": 1.0, "mass": 0.5},
            ]
        },
    )
    assert main(["solve", unsorted]) == 1
    capsys.readouterr()


def test_invalid_arguments_exit_one(tmp_path, capsys):
    src = write_json(tmp_path, "pair.json", PAIR)
    assert main(["verify", src, "--format", "csv"]) == 1
    assert main(["solve", src, "--tol", "0"]) == 1
    assert main(["solve", src, "--format", "dot"]) == 1
    captured = capsys.readouterr()
    assert "error:" in captured.err


def test_usage_errors_exit_one_and_help_exits_zero(tmp_path, capsys):
    # exit 2 must stay exclusive to failed verification
    src = write_json(tmp_path, "pair.json", PAIR)
    assert main(["solve", src, "--seeed", "3"]) == 1
    assert main([]) == 1
    assert main(["--help"]) == 0
    capsys.readouterr()


def test_unwritable_output_exits_one(tmp_path, capsys):
    src = write_json(tmp_path, "pair.json", PAIR)
    target = str(tmp_path / "no" / "such" / "dir" / "out.json")
    assert main(["solve", src, "--out", target]) == 1
    captured = capsys.readouterr()
    assert "cannot write" in captured.err


def test_solver_failure_exits_three(tmp_path, capsys, monkeypatch):
    def explode(dist):
        raise SolverError("synthetic failure", group_index=0)

    monkeypatch.setattr("poplotto.cli.solve", explode)
    src = write_json(tmp_path, "pair.json", PAIR)
    assert main(["solve", src]) == 3
    captured = capsys.readouterr()
    assert "solver failure" in captured.err
