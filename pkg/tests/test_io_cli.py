import json
import os

import numpy as np
import pytest

from qsep import cli
from qsep.io import (
    SchemaError,
    dumps,
    family_from_doc,
    family_to_doc,
    format_float,
    load_family,
    save_family,
    save_state,
    state_from_doc,
    state_to_doc,
)
from qsep.measurements import build_gsic, build_mubs, build_mums, validate_family
from qsep.states import StateSpec, generate, isotropic

from conftest import two_qubit_mubs


def test_format_float():
    assert format_float(2.0) == "2.0"
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1 / 3)) == 1 / 3
    assert format_float(-0.0) == "0.0"
    for x in (1e-300, 6.02e23, -2.5e-17):
        assert float(format_float(x)) == x
    with pytest.raises(ValueError):
        format_float(float("nan"))


def test_state_round_trip_byte_identical():
    rho = generate(StateSpec("separable-mixture", (2, 3), {"terms": 3}, 5))
    text = dumps(state_to_doc(rho, {"seed": 5}))
    back = state_from_doc(json.loads(text))
    assert np.array_equal(back.matrix, rho.matrix)
    assert dumps(state_to_doc(back, {"seed": 5})) == text


@pytest.mark.parametrize(
    "family", [build_mubs(3), build_mums(3, 0.5), build_gsic(2, 0.2), two_qubit_mubs()], ids=["mub", "mum", "gsic", "mub4"]
)
def test_family_round_trip_byte_identical(family):
    text = dumps(family_to_doc(family))
    back = family_from_doc(json.loads(text))
    assert type(back) is type(family)
    assert validate_family(back).passed
    assert dumps(family_to_doc(back)) == text


def test_schema_errors():
    good = family_to_doc(build_mums(2, 0.7))
    for mutate in (
        lambda d: d.pop("data"),
        lambda d: d.update(schema_version=2),
        lambda d: d.update(kind="tensor"),
        lambda d: d.update(dims=[0]),
        lambda d: d["metadata"].pop("kappa"),
        lambda d: d.update(data=[[[[1, 0]]]]),
        lambda d: d["metadata"].update(kappa=0.6),
    ):
        doc = json.loads(dumps(good))
        mutate(doc)
        with pytest.raises(SchemaError):
            family_from_doc(doc)
    bad_state = state_to_doc(isotropic(2, 0.5))
    bad_state["data"][0][0] = [2.0, 0.0]
    with pytest.raises(SchemaError):
        state_from_doc(bad_state)


def test_atomic_write_leaves_no_partial(tmp_path, monkeypatch):
    target = tmp_path / "f.json"
    target.write_text("old")

    def fail(*args):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", fail)
    with pytest.raises(OSError):
        save_state(target, isotropic(2, 0.5))
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["f.json"]


def _run(args, capsys):
    code = cli.main([str(a) for a in args])
    return code, capsys.readouterr()


def test_construct_commands(tmp_path, capsys):
    out = tmp_path / "mum.json"
    code, _ = _run(["construct", "mum", "--dim", 3, "--kappa", 0.5, "--out", out], capsys)
    assert code == 0
    fam = load_family(out)
    assert fam.count == 4 and all(len(p) == 3 for p in fam.povms)

    code, io = _run(["construct", "mub", "--dim", 4], capsys)
    assert code == 2 and "prime" in io.err

    code, _ = _run(["construct", "gsic", "--dim", 2, "--a", 0.25, "--out", tmp_path / "g.json"], capsys)
    assert code == 0
    assert load_family(tmp_path / "g.json").elements.shape == (4, 2, 2)

    code, io = _run(["construct", "mum", "--dim", 3, "--kappa", 1.0], capsys)
    assert code == 2 and "0.5555" in io.err

    code, _ = _run(["construct", "mum", "--dim", 3, "--kappa", 0.2], capsys)
    assert code == 2

    code, _ = _run(["construct", "mub", "--dim", 2, "--out", tmp_path / "missing" / "x.json"], capsys)
    assert code == 3


def test_validate_command(tmp_path, capsys):
    path = tmp_path / "f.json"
    save_family(path, build_mums(2, 0.7))
    assert _run(["validate", path], capsys)[0] == 0
    doc = json.loads(path.read_text())
    doc["metadata"]["kappa"] = 0.6
    path.write_text(json.dumps(doc))
    code, io = _run(["validate", path], capsys)
    assert code == 4 and "kappa consistency" in io.out
    path.write_text("{not json")
    assert _run(["validate", path], capsys)[0] == 4
    assert _run(["validate", tmp_path / "nope.json"], capsys)[0] == 3


@pytest.fixture
def qubit_files(tmp_path, capsys):
    _run(["construct", "mub", "--dim", 2, "--out", tmp_path / "m2.json"], capsys)
    _run(["generate", "--family", "isotropic", "--dims", "2,2", "--p", 1, "--out", tmp_path / "phi.json"], capsys)
    return tmp_path


def test_evaluate_phi_plus(qubit_files, capsys):
    t = qubit_files
    report = t / "r.json"
    code, _ = _run(
        ["evaluate", "t2", "--state", t / "phi.json", "--family", t / "m2.json", "--family", t / "m2.json", "--out", report],
        capsys,
    )
    assert code == 0
    data = json.loads(report.read_text())
    res = data["results"][0]
    assert res["violated"] is True
    assert res["lhs"] == pytest.approx(3.0, abs=1e-9)
    assert res["bound"] == pytest.approx(2.0, abs=1e-9)
    assert data["input_digests"]["state"].startswith("sha256:")
    assert "timing_seconds" not in data


def test_evaluate_dimension_mismatch(qubit_files, capsys):
    t = qubit_files
    _run(["construct", "mub", "--dim", 3, "--out", t / "m3.json"], capsys)
    code, io = _run(["evaluate", "t1", "--state", t / "phi.json", "--family", t / "m3.json", "--family", t / "m3.json"], capsys)
    assert code == 5
    assert "[2, 2]" in io.err and "[3, 3]" in io.err


def test_evaluate_schema_errors(qubit_files, capsys):
    t = qubit_files
    code, _ = _run(["evaluate", "t1", "--state", t / "m2.json", "--family", t / "m2.json", "--family", t / "m2.json"], capsys)
    assert code == 4
    code, _ = _run(["evaluate", "t1", "--state", t / "phi.json", "--family", t / "m2.json"], capsys)
    assert code == 5


def test_compare_2x4(tmp_path, capsys):
    save_family(tmp_path / "a.json", build_mubs(2))
    save_family(tmp_path / "b.json", two_qubit_mubs())
    _run(["generate", "--family", "product", "--dims", "2,4", "--seed", 3, "--out", tmp_path / "s.json"], capsys)
    code, _ = _run(
        ["compare", "--state", tmp_path / "s.json", "--family", tmp_path / "a.json", "--family", tmp_path / "b.json",
         "--out", tmp_path / "c.json"],
        capsys,
    )
    assert code == 0
    results = {r["theorem"]: r for r in json.loads((tmp_path / "c.json").read_text())["results"]}
    assert results["T1"]["bound"] == pytest.approx(3.0)
    assert results["SR-T2"]["bound"] == pytest.approx(3.5)


def test_evaluate_multipartite(tmp_path, capsys):
    _run(["construct", "mub", "--dim", 2, "--out", tmp_path / "m.json"], capsys)
    _run(["generate", "--family", "ghz", "--dims", "2,2,2", "--out", tmp_path / "g.json"], capsys)
    code, _ = _run(
        ["evaluate", "t4-mub", "--state", tmp_path / "g.json", "--strategy", "exhaustive", "--out", tmp_path / "r.json"]
        + sum((["--family", tmp_path / "m.json"] for _ in range(3)), []),
        capsys,
    )
    assert code == 0
    assert json.loads((tmp_path / "r.json").read_text())["results"][0]["lhs"] == pytest.approx(1.5)


def test_seed_resolution(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("QSEP_SEED", "11")
    assert cli.resolve_seed(None) == 11
    assert cli.resolve_seed(4) == 4
    _run(["generate", "--family", "pure-random", "--dims", "2,2", "--out", tmp_path / "env.json"], capsys)
    _run(["generate", "--family", "pure-random", "--dims", "2,2", "--seed", 11, "--out", tmp_path / "flag.json"], capsys)
    assert (tmp_path / "env.json").read_bytes() == (tmp_path / "flag.json").read_bytes()
    monkeypatch.setenv("QSEP_SEED", "x")
    assert _run(["generate", "--family", "pure-random", "--dims", "2,2"], capsys)[0] == 2
    monkeypatch.delenv("QSEP_SEED")
    assert cli.resolve_seed(None) == 0


def test_generate_bad_params(capsys):
    assert _run(["generate", "--family", "isotropic", "--dims", "2,3", "--p", 0.5], capsys)[0] == 2
    assert _run(["generate", "--family", "isotropic", "--dims", "2,2", "--p", 2], capsys)[0] == 2


def test_grid_parser():
    assert cli._grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert cli._grid("0.5") == [0.5]
    assert len(cli._grid("0:1:0.01")) == 101


def test_sweep_isotropic_threshold(tmp_path, capsys):
    out, summary = tmp_path / "s.csv", tmp_path / "s.json"
    code, _ = _run(
        ["sweep", "--state-family", "isotropic", "--dims", "3,3", "--grid", "0:1:0.01", "--criteria", "t2-mub",
         "--out", out, "--summary", summary, "--jobs", 3],
        capsys,
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "p,t2-mub_lhs,t2-mub_bound,t2-mub_violated,ppt,ppt_min_eig"
    assert len(lines) == 102
    s = json.loads(summary.read_text())
    lo, hi = s["thresholds"]["t2-mub"]["bracket"]
    assert lo <= 0.25 <= hi and hi - lo <= 0.01 + 1e-12
    assert abs(s["thresholds"]["ppt"]["interpolated"] - 0.25) < 0.01


def test_sweep_single_point_and_errors(tmp_path, capsys):
    out = tmp_path / "one.csv"
    code, _ = _run(["sweep", "--state-family", "isotropic", "--dims", "2,2", "--grid", "0.5", "--criteria", "t1", "--out", out], capsys)
    assert code == 0 and len(out.read_text().splitlines()) == 2
    code, _ = _run(["sweep", "--state-family", "isotropic", "--dims", "2,2", "--grid", "1:0:0.1", "--criteria", "t1", "--out", out], capsys)
    assert code == 2
    code, _ = _run(["sweep", "--state-family", "isotropic", "--dims", "2,2", "--grid", "0.5", "--criteria", "t9", "--out", out], capsys)
    assert code == 2


def test_sweep_embedded_window(tmp_path, capsys):
    save_family(tmp_path / "a.json", build_mubs(2))
    save_family(tmp_path / "b.json", two_qubit_mubs())
    code, _ = _run(
        ["sweep", "--state-family", "embedded-max-entangled", "--dims", "2,4", "--grid", "0:1:0.02",
         "--criteria", "t1,t2,sr", "--family", tmp_path / "a.json", "--family", tmp_path / "b.json",
         "--out", tmp_path / "e.csv", "--summary", tmp_path / "e.json"],
        capsys,
    )
    assert code == 0
    windows = json.loads((tmp_path / "e.json").read_text())["detection_windows"]
    assert "t2 not sr" in windows
    assert "sr not t2" not in windows
