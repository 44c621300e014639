import json
import math
import subprocess
import sys

import numpy as np
import pytest

from distbound.cli import load_channel, load_distance, run
from distbound.channels import ternary_unilateral
from distbound.distances import build_cycle, build_hamming, build_lee, build_psk, bsc


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_theta_example(capsys):
    code, out, _ = call(capsys, "theta", "--distance", "hamming:2", "--rho", "1", "--P", "0.5,0.5")
    assert code == 0
    js = json.loads(out)
    assert js["value"] == pytest.approx(0.379885493062, abs=1e-9)
    assert len(js["gram"]) == 3


def test_theta_conditional(capsys):
    code, out, _ = call(capsys, "theta", "--distance", "hamming:2", "--rho", "2",
                        "--V", "0.9,0.1;0.1,0.9", "--F", "0.5,0.5")
    assert code == 0 and json.loads(out)["value"] > 0


def test_elias_example(capsys):
    code, out, _ = call(capsys, "bound", "--method", "elias-binary", "--lambda", "0.25")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "R,delta,method,params_json"
    assert lines[1].startswith("0.130812035941,0.375,elias_binary,")


def test_stable_example(capsys):
    code, out, _ = call(capsys, "oracle", "stable", "--graph", "pentagon", "--n", "2", "--eps", "0")
    assert code == 0 and json.loads(out)["size"] == 5


def test_min_distance(capsys):
    code, out, _ = call(capsys, "oracle", "min-distance", "--distance", "hamming:2", "--n", "5", "--M", "4")
    js = json.loads(out)
    assert code == 0 and js["distance"] == 3 and len(js["witness"]) == 4


def test_distance_and_embedding(capsys):
    code, out, _ = call(capsys, "distance", "--distance", "lee:5", "--x", "0,1", "--y", "2,4")
    assert code == 0 and json.loads(out)["sequence_distance"] == 4
    code, out, _ = call(capsys, "check-embedding", "--distance", "lee:5")
    assert code == 0 and json.loads(out)["negative_type"] is True


def test_channel_commands(capsys):
    code, out, _ = call(capsys, "channel", "chernoff", "--Q1", "0.9,0.1", "--Q2", "0.1,0.9")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(-math.log(2 * math.sqrt(0.09)), abs=1e-11)
    code, out, _ = call(capsys, "channel", "reversible", "--channel", "ternary-unilateral:0.01")
    assert code == 0 and json.loads(out)["pairwise_reversible"] is False


def test_bound_methods(capsys):
    cases = [
        ("umbrella", "--distance", "hamming:2", "--rho", "1"),
        ("berlekamp", "--distance", "lee:5", "--R", "0.5"),
        ("piret", "--distance", "qpsk", "--Q", "0.25,0.25,0.25,0.25", "--R", "1.3862943611198906"),
        ("plotkin", "--distance", "hamming:2", "--rho", "1", "--M", "2", "--n", "3"),
        ("eps-capacity", "--distance", "pentagon", "--rho", "inf", "--eps", "0"),
    ]
    for method, *rest in cases:
        code, out, err = call(capsys, "bound", "--method", method, *rest)
        assert code == 0, (method, err)
        assert out


def test_curve_and_output_file(tmp_path, capsys):
    path = tmp_path / "c.csv"
    code, _, _ = call(capsys, "curve", "--distance", "hamming:2", "--R-grid", "0.1:0.5:3",
                      "--methods", "elias_binary", "-o", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    assert len(lines) == 4 and lines[0] == "R,delta,method,params_json"


def test_exit_codes(capsys, tmp_path):
    assert run(["theta", "--bogus"]) == 64
    assert run([]) == 64
    assert run(["theta", "--distance", "nope:3", "--rho", "1"]) == 1
    assert run(["theta", "--distance", str(tmp_path / "missing.json"), "--rho", "1"]) == 1
    assert run(["oracle", "stable", "--graph", "hamming:2", "--n", "20", "--eps", "0"]) == 2
    assert run(["bound", "--method", "piret", "--distance", "qpsk", "--Q", "1,0,0,0", "--R", "0.1"]) == 1
    capsys.readouterr()


def test_deterministic_output(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"o{k}.csv"
        assert run(["curve", "--distance", "lee:4", "--R-grid", "0.2,0.8", "--methods", "berlekamp,piret,blahut",
                    "-o", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_shorthands_match_constructors():
    assert load_distance("hamming:4") == build_hamming(4)
    assert load_distance("lee:6") == build_lee(6)
    assert load_distance("pentagon") == build_cycle(5)
    assert load_distance("square") == build_cycle(4)
    assert load_distance("qpsk") == build_psk(4)
    assert np.array_equal(load_channel("ternary-unilateral:0.1").W, ternary_unilateral(0.1).W)
    assert np.array_equal(load_channel("bsc:0.2").W, bsc(0.2).W)
    assert load_distance('[[0, 1], [1, 0]]') == build_hamming(2)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "distbound", "bound", "--method", "elias-binary",
                        "--lambda", "0.1"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("R,delta")
