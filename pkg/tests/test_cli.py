import json
import subprocess
import sys
from pathlib import Path

from layoutlab.cli import main
from layoutlab.layout import layout_from_snapshot, snapshot_hash
from layoutlab.netlist import parse_netlist

FIXTURES = Path(__file__).parent.parent / "fixtures"
NETLIST = str(FIXTURES / "ota.ckt")
PLACEMENT = str(FIXTURES / "ota_placement.txt")


def test_exec_runs_script_and_writes_snapshot(tmp_path, capsys):
    script = tmp_path / "edit.lcs"
    script.write_text("symAdd M34 M35\nnetReroute net092\n")
    out = tmp_path / "after.snap"
    rc = main(
        ["exec", str(script), "--netlist", NETLIST, "--placement", PLACEMENT,
         "--out", str(out)]
    )
    captured = capsys.readouterr()
    assert rc == 0
    assert "symAdd M34 M35" in captured.out
    digest = captured.out.strip().splitlines()[-1].split()[-1]
    netlist = parse_netlist(Path(NETLIST).read_text())
    assert snapshot_hash(layout_from_snapshot(out.read_text(), netlist)) == digest


def test_exec_rejects_invalid_script(tmp_path, capsys):
    script = tmp_path / "bad.lcs"
    script.write_text("deviceMove M3 100\n")
    rc = main(["exec", str(script), "--netlist", NETLIST, "--placement", PLACEMENT])
    captured = capsys.readouterr()
    assert rc == 1
    assert "S2" in captured.err


def test_exec_reports_runtime_failure(tmp_path, capsys):
    script = tmp_path / "doomed.lcs"
    script.write_text("symAdd M34 M35 1\n")
    rc = main(["exec", str(script), "--netlist", NETLIST, "--placement", PLACEMENT])
    captured = capsys.readouterr()
    assert rc == 1
    assert "failed" in captured.err


def test_route_all_routes_nets(tmp_path, capsys):
    out = tmp_path / "routed.snap"
    rc = main(["route-all", "--netlist", NETLIST, "--placement", PLACEMENT,
               "--out", str(out)])
    captured = capsys.readouterr()
    assert rc == 0
    assert "routed " in captured.out
    netlist = parse_netlist(Path(NETLIST).read_text())
    rebuilt = layout_from_snapshot(out.read_text(), netlist)
    multi_terminal = {
        n for n in netlist.nets if len(netlist.nets[n]) >= 2
    }
    routed = {n for n, r in rebuilt.nets.items() if r.routed}
    assert routed == multi_terminal


def test_eval_pipeline_end_to_end(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(
        {"n_valid": 8, "n_invalid": 2, "min_commands": 5, "max_commands": 12, "seed": 4}
    ))
    out_dir = tmp_path / "out"
    rc = main(["eval", "--spec", str(spec), "--netlist", NETLIST,
               "--placement", PLACEMENT, "--out-dir", str(out_dir)])
    captured = capsys.readouterr()
    assert rc == 0
    assert "Overall" in captured.out and "100.00%" in captured.out
    for name in ("corpus.jsonl", "results.jsonl", "metrics.txt", "metrics.json"):
        assert (out_dir / name).exists(), name
    doc = json.loads((out_dir / "metrics.json").read_text())
    assert doc["Overall"]["total"] == 10

    capsys.readouterr()
    rc = main(["metrics", str(out_dir / "results.jsonl")])
    assert rc == 0
    assert capsys.readouterr().out == (out_dir / "metrics.txt").read_text()


def test_eval_without_backend_fails_cleanly(tmp_path, capsys, monkeypatch):
    for var in ("FIXTURE_PATH", "MODEL_ENDPOINT"):
        monkeypatch.delenv(var, raising=False)
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_valid": 1, "n_invalid": 0}))
    rc = main(["eval", "--spec", str(spec), "--netlist", NETLIST,
               "--placement", PLACEMENT, "--backend", "remote",
               "--out-dir", str(tmp_path / "out")])
    assert rc == 2
    assert "no model backend" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    script = tmp_path / "noop.lcs"
    script.write_text("# comment only\n")
    proc = subprocess.run(
        [sys.executable, "-m", "layoutlab.cli", "exec", str(script),
         "--netlist", NETLIST, "--placement", PLACEMENT],
        capture_output=True, text=True, cwd="/root/pkg",
    )
    assert proc.returncode == 0, proc.stderr
    assert "final snapshot hash" in proc.stdout


def test_missing_file_reports_error(capsys):
    rc = main(["exec", "/nonexistent.lcs", "--netlist", NETLIST,
               "--placement", PLACEMENT])
    assert rc == 1
    assert "error:" in capsys.readouterr().err
