import csv
import io
import json
import subprocess
import sys

import pytest

from maecpolar.cli import main

CASE1 = {"q": 6, "masses": {"2": "3/10", "3": "3/5", "6": "1/10"}}


@pytest.fixture
def spec_file(tmp_path):
    def write(doc, name="spec.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)

    return write


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def blocks(text):
    return [list(csv.reader(io.StringIO(b))) for b in text.strip().split("\n\n")]


def ramp4500_doc():
    from maecpolar.lattice import lattice_for

    weights = list(range(10)) * 3 + list(range(6))
    return {"q": 4500, "masses": {str(d): f"{w}/150" for d, w in zip(lattice_for(4500).divisors, weights)}}


def test_capacity_case1(spec_file, capsys):
    code, out, _ = run(["capacity", "-i", spec_file(CASE1), "--log-base", "e", "--alpha", "1"], capsys)
    assert code == 0
    rows = blocks(out)[0]
    assert rows[0] == ["alpha", "capacity", "capacity_exact", "bhattacharyya", "error_prob"]
    assert abs(float(rows[1][1]) - 1.046287) < 1e-6
    assert rows[1][3] == "6/25" and rows[1][4] == "1/2"


def test_capacity_noiseless(capsys):
    code, out, _ = run(["capacity", "--spec", '{"q": 12, "masses": {"12": 1}}', "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["rows"]) == 5
    assert all(abs(r["capacity"] - 1) < 1e-12 for r in doc["rows"])


def test_capacity_ramp4500_exact_z(spec_file, capsys):
    code, out, _ = run(["capacity", "-i", spec_file(ramp4500_doc()), "--alpha", "1"], capsys)
    z = blocks(out)[0][1][3]
    assert code == 0 and "/" in z and "." not in z


def test_capacity_float_spec(capsys):
    spec = '{"q": 6, "masses": {"1": 0.25, "2": 0.25, "3": 0.25, "6": 0.25}}'
    code, out, _ = run(["capacity", "--spec", spec], capsys)
    assert code == 0 and blocks(out)[0][1][3] == "0.4"
    code, _, err = run(["capacity", "--spec", spec, "--mode", "exact"], capsys)
    assert code == 2 and "exact mode" in err


def test_transform(spec_file, capsys):
    path = spec_file(CASE1)
    code, out, _ = run(["transform", "minus", "-i", path, "--format", "json"], capsys)
    assert json.loads(out) == {"q": 6, "masses": {"1": "9/25", "2": "3/20", "3": "12/25", "6": "1/100"}}
    code, out, _ = run(["transform", "-i", path, "--", "+-"], capsys)
    assert code == 0 and blocks(out)[0][0] == ["divisor", "mass"]
    other = spec_file({"q": 6, "masses": {"6": 1}}, "other.json")
    code, out, _ = run(["transform", "plus", "-i", path, "--other", other, "--format", "json"], capsys)
    assert json.loads(out)["masses"] == {"6": "1/1"}


def test_polarize_case1(spec_file, capsys):
    code, out, _ = run(["polarize", "-i", spec_file(CASE1), "--steps", "12"], capsys)
    assert code == 0
    branches, summary = blocks(out)
    assert branches[0] == ["rank", "branch_weight", "capacity"]
    assert len(branches) == 1 + 4096
    caps = [float(r[2]) for r in branches[1:]]
    assert caps == sorted(caps)
    assert sorted(int(r[1]) for r in branches[1:]) == list(range(4096))
    assert summary[0] == ["divisor", "mu_n", "prop_near_one", "prop_near_zero", "prop_intermediate"]
    mu = {r[0]: float(r[1]) for r in summary[1:]}
    for d, target in (("1", 0.3), ("2", 0.0), ("3", 0.3), ("6", 0.4)):
        assert abs(mu[d] - target) < 1e-3
    near = {r[0]: float(r[2]) for r in summary[1:]}
    _, out8, _ = run(["polarize", "-i", spec_file(CASE1), "--steps", "8"], capsys)
    near8 = {r[0]: float(r[2]) for r in blocks(out8)[1][1:]}
    for d, target in (("1", 0.3), ("3", 0.3), ("6", 0.4)):
        assert near8[d] < near[d] < target


def test_polarize_n0(spec_file, capsys):
    code, out, _ = run(["polarize", "-i", spec_file(CASE1), "-n", "0", "--log-base", "e"], capsys)
    rows = blocks(out)[0]
    assert len(rows) == 2 and abs(float(rows[1][2]) - 1.0462874742916548) < 1e-12


def test_polarize_deterministic(spec_file, tmp_path, capsys):
    path = spec_file(CASE1)
    outs = []
    for k in range(2):
        target = tmp_path / f"out{k}.csv"
        assert main(["polarize", "-i", path, "-n", "10", "--samples", "300", "--seed", "4", "-o", str(target)]) == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    doc_code, out, _ = run(["polarize", "-i", path, "-n", "6", "--samples", "50", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["kind"] == "sample" and len(doc["branches"]) == 50 and "std_err" in doc


def test_polarize_exact_mode(spec_file, capsys):
    code, out, _ = run(["polarize", "-i", spec_file(CASE1), "-n", "3", "--mode", "exact"], capsys)
    summary = blocks(out)[1]
    assert code == 0 and all("/" in r[1] for r in summary[1:])


def test_polarize_guard(spec_file, capsys):
    code, _, err = run(["polarize", "-i", spec_file(CASE1), "-n", "30"], capsys)
    assert code == 2 and "guard" in err


def test_asymptotic_ramp4500(spec_file, capsys):
    code, out, _ = run(["asymptotic", "-i", spec_file(ramp4500_doc()), "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["masses"]["1"] == "29/150" and doc["masses"]["4500"] == "6/25"
    assert doc["masses"]["2"] == "0/1"


def test_asymptotic_trace(spec_file, capsys):
    code, out, _ = run(["asymptotic", "-i", spec_file(ramp4500_doc()), "--trace"], capsys)
    mu, steps, comps = blocks(out)
    assert len(steps) == 9 and steps[-1][-1] == "1/1"
    assert comps[1] == ["1", "1", "2", "1", "1", "16/75", "43/150"]


def test_asymptotic_examples(capsys):
    spec = json.dumps({"q": 512, "masses": {str(2**k): "1/10" for k in range(10)}})
    code, out, _ = run(["asymptotic", "--spec", spec, "--format", "json"], capsys)
    assert set(json.loads(out)["masses"].values()) == {"1/10"}
    spec = json.dumps({"q": 45, "masses": {"9": "1/3", "15": "2/3"}})
    code, out, _ = run(["asymptotic", "--spec", spec, "--format", "json"], capsys)
    masses = json.loads(out)["masses"]
    assert [masses[d] for d in ("1", "3", "5", "9", "15", "45")] == ["0/1", "1/3", "0/1", "0/1", "1/3", "1/3"]


def test_asymptotic_float_rejected(spec_file, capsys):
    code, _, err = run(["asymptotic", "-i", spec_file(CASE1), "--mode", "float"], capsys)
    assert code == 2


def test_verify(capsys):
    code, out, _ = run(["verify", "--q", "6", "--trials", "5", "--seed", "7"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["pass"]
    names = {c["name"] for c in doc["checks"]}
    assert {"minus_Q1", "minus_Q2", "plus_Q3", "plus_Q4"} <= names
    code, out, _ = run(["verify", "--q", "2", "--trials", "3"], capsys)
    assert code == 0


def test_verify_guard(capsys):
    code, _, err = run(["verify", "--q", "4500"], capsys)
    assert code == 2 and "guard" in err


def test_bad_inputs(spec_file, capsys):
    code, _, err = run(["capacity", "-i", spec_file({"q": 6, "masses": {"4": 1}})], capsys)
    assert code == 2 and "divisor" in err
    code, _, _ = run(["capacity"], capsys)
    assert code == 2
    code, _, _ = run(["capacity", "--spec", "{not json"], capsys)
    assert code == 2
    with pytest.raises(SystemExit):
        main(["polarize", "--spec", "{}", "--delta", "0.7"])


def test_fraction_roundtrip(spec_file, capsys):
    doc = {"q": 12, "masses": {"1": "1/7", "4": "2/7", "6": "4/7"}}
    code, out, _ = run(["transform", "+", "-i", spec_file(doc), "--format", "json"], capsys)
    back = json.loads(out)
    code, out2, _ = run(["transform", "", "--spec", json.dumps(back), "--format", "json"], capsys)
    assert json.loads(out2) == back


def test_console_script(spec_file):
    res = subprocess.run(
        [sys.executable, "-m", "maecpolar", "asymptotic", "-i", spec_file(CASE1)],
        capture_output=True, text=True, check=True,
    )
    assert res.stdout.splitlines()[1:] == ["1,3/10", "2,0/1", "3,3/10", "6,2/5"]
