import json

import pytest

from flowlab.cli import export_dot, load_gadget, main
from flowlab.experiments import decide_via_ns, decide_via_ssp
from flowlab.gadgets import build_counting_ssp, build_gns, normalize_instance


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_writes_network_and_sidecar(tmp_path, capsys):
    net = tmp_path / "net.json"
    code, out, _ = run_cli(capsys, "gen", "gssp", "--a", "1,2,3", "-o", str(net))
    assert code == 0
    side = json.loads((tmp_path / "net.sidecar.json").read_text())
    assert set(side) >= {"watched", "roles", "initialFlow", "initialBasis"}
    assert len(side["watched"]) == 1
    assert json.loads(out)["arcs"] == 8 * 3 + 7


@pytest.mark.parametrize("family", ["nssp", "gssp", "ns-gadget", "ns-harness", "gns"])
def test_json_round_trip_byte_identical(tmp_path, capsys, family):
    net = tmp_path / "g.json"
    assert main(["gen", family, "--a", "1/2,3,5/7", "-o", str(net)]) == 0
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "export", str(net), "--format", "json")
    assert code == 0 and out == net.read_text()


def test_decide_matches_library(capsys):
    for algo, fn in (("ssp", decide_via_ssp), ("ns", decide_via_ns)):
        for raw in ("1,1,3", "1,2,3"):
            code, out, _ = run_cli(capsys, "decide", "--a", raw, "--algo", algo)
            data = json.loads(out)
            verdict = fn(normalize_instance([int(x) for x in raw.split(",")]))
            assert code == 0
            assert data["answer"] == verdict.answer
            assert data["witnessIteration"] == verdict.witness
    code, out, _ = run_cli(capsys, "decide", "--a", "1,1,3", "--algo", "ns")
    assert json.loads(out)["answer"] is False
    code, out, _ = run_cli(capsys, "decide", "--a", "1,2,3", "--algo", "oracle")
    assert json.loads(out)["oracleSubset"] == [0, 1]
    code, out, _ = run_cli(capsys, "decide", "--a", "1,2,3", "--algo", "ssp", "--census")
    assert json.loads(out)["census"]["thresholdExceeded"] is True


def test_decide_batch_parallel(tmp_path, capsys):
    batch = tmp_path / "batch.txt"
    batch.write_text("# instances\n1,2,3\n1,1,3\n5,5\n")
    code, out, _ = run_cli(capsys, "decide", "--batch", str(batch), "--algo", "ssp", "--jobs", "2")
    assert code == 0
    assert [d["answer"] for d in json.loads(out)] == [True, False, True]


def test_run_ssp_trace_on_no_instance(tmp_path, capsys):
    net = tmp_path / "net.json"
    main(["gen", "gssp", "--a", "1,1,3", "-o", str(net)])
    capsys.readouterr()
    trace = tmp_path / "t.json"
    code, out, _ = run_cli(capsys, "run", "ssp", str(net), "--watch", "e", "--trace", str(trace))
    assert code == 0
    data = json.loads(trace.read_text())
    assert len(data["iterations"]) == 2 ** (3 + 1)
    assert all(it["watchedFlow"] == "0" for it in data["iterations"])
    assert json.loads(out)["watchedEvent"] is None

    code, out, _ = run_cli(capsys, "curve", str(trace), "--arrival-horizon", "100")
    curve = json.loads(out)
    assert curve["breakpointCount"] == 16
    assert curve["breakpoints"][0] == ["0", "0"]


def test_run_ns_and_trace_determinism(tmp_path, capsys):
    net = tmp_path / "gns.json"
    main(["gen", "gns", "--a", "1,2,3", "-o", str(net)])
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", "ns", str(net), "--trace", str(a)]) == 0
    assert main(["run", "ns", str(net), "--trace", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    data = json.loads(a.read_text())
    assert len(data["iterations"]) == 100


def test_export_dot_conventions(tmp_path):
    g0 = build_counting_ssp(normalize_instance([1]), 1, 0)
    dot = export_dot(g0)
    assert dot.count("->") == 1 and '[label="0; 1"]' in dot

    g = build_gns(normalize_instance([1, 2]))
    dot = export_dot(g)
    n = g.meta.n
    assert f'"s" -> "t" [label="{2 ** (n + 1)}; inf", style="bold"]' in dot
    assert '"c+" -> "c-" [label="0; 1/2", style="dashed"]' in dot

    path = tmp_path / "g.json"
    main(["gen", "gns", "--a", "1,2", "-o", str(path)])
    assert export_dot(load_gadget(path)) == dot


def test_exit_codes(tmp_path, capsys):
    assert run_cli(capsys, "frobnicate")[0] == 2
    assert run_cli(capsys, "decide", "--algo", "ssp")[0] == 2
    assert run_cli(capsys, "decide", "--a", "1,x")[0] == 1
    assert run_cli(capsys, "decide", "--a", "1,-2")[0] == 1
    assert run_cli(capsys, "gen", "ns-harness", "--a", "1,2", "--r", "1/2", "-o", str(tmp_path / "h.json"))[0] == 1
    assert run_cli(capsys, "run", "ssp", str(tmp_path / "missing.json"))[0] == 1
    net = tmp_path / "n.json"
    main(["gen", "nssp", "--a", "1,2", "-o", str(net)])
    assert run_cli(capsys, "run", "ns", str(net))[0] == 2
    assert run_cli(capsys, "run", "ssp", str(net), "--watch", "nope")[0] == 2
