import json
import math
import subprocess
import sys

import pytest

from chromatic_pb.cli import main
from chromatic_pb.depgraph import DependencyGraph, write_graph
from chromatic_pb.harness import make_blobs, write_dataset


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def value(out, key):
    for line in out.splitlines():
        k, _, v = line.partition("=")
        if k.strip() == key:
            return v.strip()
    raise KeyError(key)


def test_chi_one_edge_graph(tmp_path, capsys):
    path = tmp_path / "g.txt"
    write_graph(DependencyGraph(4, ((1, 2),)), path)
    code, out, _ = run(capsys, "chi", str(path))
    assert code == 0 and "chi_star = 2" in out
    code, out, _ = run(capsys, "chi", str(path), "--json")
    rec = json.loads(out)
    assert rec["chi_star"] == 2 and rec["clique_lower"] == 2


def test_chi_bounds_only(tmp_path, capsys):
    path = tmp_path / "c5.txt"
    write_graph(DependencyGraph.cycle(5), path)
    code, out, _ = run(capsys, "chi", str(path), "--bounds")
    assert code == 0 and "chi_star" not in out and value(out, "chi_upper") == "3"


def test_cover_auc_validate(capsys):
    code, out, _ = run(capsys, "cover", "auc", "4", "2", "--validate")
    assert code == 0 and out.splitlines()[0] == "ok, omega = 4"
    code, out, _ = run(capsys, "cover", "ustat", "4", "--validate", "--exact", "--json")
    rec = json.loads(out)
    assert rec["omega"] == 6 and rec["chi_star"] == 6 and rec["valid"]


def test_cover_beta_blocks(capsys):
    code, out, _ = run(capsys, "cover", "beta-blocks", "12", "2", "--json")
    rec = json.loads(out)
    assert rec["z0_blocks"] == [[0, 1], [4, 5], [8, 9]] and rec["omega"] == 2


def test_bound_desk_values(capsys):
    code, out, _ = run(capsys, "bound", "auc-linear", "--lmin", "100", "--mu", "1", "--delta", "0.05", "--ehat", "0")
    assert code == 0 and abs(float(value(out, "budget")) - 0.0811086) < 1e-6
    code, out, _ = run(capsys, "bound", "ranking", "--l", "100", "--delta", "0.05", "--kl", "0", "--json")
    assert abs(json.loads(out)["budget"] - math.log(1020) / 50) < 1e-9


@pytest.mark.parametrize(
    "argv",
    [
        ["iid", "--m", "100", "--delta", "1"],
        ["chromatic-2", "--m", "10", "--chi", "5/2"],
        ["chromatic-1", "--m", "10", "--weights", "1,1", "--kls", "0,1", "--delta", "0.1"],
        ["subgraph", "--m", "10", "--k", "1", "--candidate", "9:1:0", "--candidate", "9:2:0"],
        ["auc", "--lpos", "100", "--lneg", "300", "--kl", "4.5"],
        ["beta-mixing", "--m", "200", "--a", "10", "--beta-a", "0.001", "--delta", "0.05"],
        ["generalized", "--m", "1000", "--chi", "1", "--delta", "0.05"],
        ["phi-mixing", "--m", "10000", "--phi", "0.5", "--delta", "0.05"],
        ["generic", "--alpha", "1", "--beta", "101"],
        ["bayes", "--ehat", "0.2"],
    ],
)
def test_every_bound_name_runs(capsys, argv):
    code, out, _ = run(capsys, "bound", *argv, "--json")
    assert code == 0
    assert json.loads(out)


def test_bound_chromatic_1_matches_example(capsys):
    _, out, _ = run(capsys, "bound", "chromatic-1", "--m", "10", "--weights", "1,1", "--kls", "0,1", "--delta", "0.1")
    assert float(value(out, "budget")) == pytest.approx(0.2 * (0.5 + math.log(12 / 0.2)), rel=1e-9)


def test_exit_codes(capsys):
    code, _, err = run(capsys, "bound", "iid")
    assert code == 2 and "--m" in err
    code, _, err = run(capsys, "bound", "beta-mixing", "--m", "200", "--a", "10", "--beta-a", "0.01", "--delta", "0.05")
    assert code == 1 and "DeltaTooSmall" in err
    code, _, err = run(capsys, "chi", "/nonexistent/graph")
    assert code == 1
    assert run(capsys, "nonsense")[0] == 2


def test_gibbs_command(tmp_path, capsys):
    path = tmp_path / "d.csv"
    write_dataset(make_blobs(40, 2, seed=0), path)
    w = tmp_path / "w.txt"
    w.write_text("1,1\n")
    code, out, _ = run(capsys, "gibbs", str(path), "--w-file", str(w), "--mu", "2", "--samples", "20000", "--json")
    rec = json.loads(out)
    assert code == 0 and rec["kl"] == 2.0
    assert abs(rec["mc_gibbs_binary"] - rec["gibbs_binary"]) <= 4 * rec["mc_std_error"]
    code, _, _ = run(capsys, "gibbs", str(path), "--train", "1")
    assert code == 0
    assert run(capsys, "gibbs", str(path))[0] == 2


def test_sweep_and_validate_commands(tmp_path, capsys):
    write_dataset(make_blobs(80, 2, seed=1), tmp_path / "train.csv")
    write_dataset(make_blobs(80, 2, seed=2), tmp_path / "test.csv")
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("train = train.csv\ntest = test.csv\nc_grid = 0.1, 1\nepochs = 5\n")
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--csv", str(tmp_path / "o.csv"))
    assert code == 0 and out == (tmp_path / "o.csv").read_text()
    vcfg = tmp_path / "v.cfg"
    vcfg.write_text("mean_pos = 1\nmean_neg = 0\nl = 10\nn_draws = 100\nreference_size = 20000\n")
    code, out, _ = run(capsys, "validate", "--config", str(vcfg), "--json")
    assert code == 0 and json.loads(out)["passed"]


def test_moments_command(capsys):
    code, out, _ = run(capsys, "moments", "--lpos", "3", "--lneg", "3", "--draws", "500", "--json")
    rec = json.loads(out)
    assert code == 0 and [r["r"] for r in rec["results"]] == [1, 2]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "chromatic_pb", "bound", "bayes", "--ehat", "0.3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "0.6" in res.stdout
