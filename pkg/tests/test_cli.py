import csv
import io
import json

import pytest

from twembed.cli import main
from twembed.generators import generate_graph, random_planar
from twembed.graph import GraphError, connected_components, diameter
from twembed.graphio import format_edge_list, parse_edge_list, read_json
from twembed.pipeline import ExperimentConfig, run_pipeline, runs_to_csv


def test_generators():
    g = generate_graph("grid(2,2,1)")
    assert (g.n, g.m) == (4, 4)
    p = generate_graph("path(5)")
    assert (p.n, p.m) == (5, 4) and diameter(p) == 4
    assert generate_graph("grid:3x4").n == 12
    for n, s in [(10, 0), (50, 1), (120, 2)]:
        g = random_planar(n, s)
        assert g.n == n and g.m <= 3 * n - 6
        assert len(connected_components(g)) == 1


@pytest.mark.parametrize("spec", ["grid(2)", "nope(3)", "path(x)", "grid(2,2", ""])
def test_generator_errors(spec):
    with pytest.raises(GraphError):
        generate_graph(spec)


def test_edge_list_round_trip():
    g = random_planar(30, 3)
    back = parse_edge_list(format_edge_list(g))
    assert back.n == g.n and back.edges == g.edges
    h = parse_edge_list("# comment\n3 2\n0 1 1.5\n1 2 2\n")
    assert h.n == 3 and h.length(0, 1) == 1.5
    with pytest.raises(GraphError):
        parse_edge_list("2 1\n0 1\n")


def test_pipeline_single_vertex():
    b = run_pipeline(ExperimentConfig("path(1)", seeds=2))
    assert b["summary"]["invalid"] == 0 and b["summary"]["errors"] == 0
    assert all(r["violations"] == 0 and r["width"] == 0 for r in b["runs"])


def test_pipeline_zero_seeds():
    b = run_pipeline(ExperimentConfig("grid(3,3)", seeds=0))
    assert b["runs"] == [] and b["summary"]["runs"] == 0


def test_pipeline_tiny_auto_tau_recovers():
    # tau starts at 1 and doubles until every cut exists
    b = run_pipeline(ExperimentConfig("grid(6,6)", seeds=2, tau="auto:1e-9"))
    assert b["summary"]["invalid"] == 0
    assert b["summary"]["calibration_events"] > 0


def test_pipeline_csv():
    b = run_pipeline(ExperimentConfig("grid(5,5)", seeds=2, psi=4, tau="2"))
    rows = list(csv.DictReader(io.StringIO(runs_to_csv(b["runs"], {"psi": 4}))))
    assert [r["seed"] for r in rows] == ["0", "1"]
    assert all(r["valid"] == "True" and r["psi"] == "4" for r in rows)


def test_config_validation():
    with pytest.raises(GraphError):
        ExperimentConfig("path(3)", seeds=-1)
    with pytest.raises(GraphError):
        ExperimentConfig("path(3)", pairs="some")


def _run(argv, capsys):
    rc = main(argv)
    return rc, capsys.readouterr()


def test_cli_gen_and_verify(tmp_path, capsys):
    gfile = tmp_path / "g.txt"
    assert main(["gen", "grid(6,6)", "--out", str(gfile)]) == 0
    for cmd, extra in [("chain", []), ("shortcut", []), ("cops", ["--delta", "2"]),
                       ("cut", ["--psi", "4", "--tau", "2"]), ("embed", ["--psi", "4", "--tau", "3"])]:
        art = tmp_path / f"{cmd}.json"
        assert main([cmd, str(gfile), "--seed", "3", "--out", str(art)] + extra) == 0
        rc, out = _run(["verify", str(art), str(gfile)], capsys)
        assert rc == 0, out.out


def test_cli_tampered_chain(tmp_path, capsys):
    gfile = tmp_path / "g.txt"
    main(["gen", "path(6)", "--out", str(gfile)])
    art = tmp_path / "c.json"
    main(["chain", str(gfile), "--out", str(art)])
    d = read_json(art)
    d["levels"][0] = [[0, 1]] + d["levels"][0][2:]
    d["parents"][0] = d["parents"][0][1:]
    art.write_text(json.dumps(d))
    rc, out = _run(["verify", str(art), str(gfile)], capsys)
    assert rc == 1


def test_cli_errors(tmp_path, capsys):
    rc, out = _run(["cops", "path(4)"], capsys)
    assert rc == 2 and "delta" in out.err
    rc, out = _run(["chain", "bogus(1)"], capsys)
    assert rc == 2
    bad = tmp_path / "x.json"
    bad.write_text('{"kind": "mystery"}')
    rc, out = _run(["verify", str(bad), "path(3)"], capsys)
    assert rc == 2


def test_cli_sweep_deterministic(tmp_path, capsys):
    outs = []
    for jobs in ("1", "2"):
        f = tmp_path / f"s{jobs}.csv"
        assert main(["sweep", "grid(5,5)", "--seeds", "3", "--psi", "2,4", "--tau", "2",
                     "--format", "csv", "--jobs", jobs, "--out", str(f)]) == 0
        outs.append(f.read_text())
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(io.StringIO(outs[0])))
    assert len(rows) == 6 and {r["psi"] for r in rows} == {"2", "4"}


def test_cli_sweep_artifacts(tmp_path):
    d = tmp_path / "arts"
    f = tmp_path / "s.json"
    assert main(["sweep", "grid(4,4)", "--seeds", "1", "--psi", "2", "--tau", "2",
                 "--artifacts", str(d), "--out", str(f)]) == 0
    assert (d / "chain-0.json").exists() and (d / "embedding-0.json").exists()
    bundle = read_json(f)
    assert bundle["summary"]["invalid"] == 0
    assert main(["verify", str(d / "embedding-0.json"), "grid(4,4)"]) == 0
