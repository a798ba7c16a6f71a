import json

import numpy as np
import pytest

from preschwarz.cli import run
from preschwarz.maps import MapSpec, build_germ, normalize

POLY = {"schema": "preschwarz.map/1", "family": "polynomial", "n": 2,
        "components": [{"1,0": 1, "0,2": 1}, {"0,1": 1}]}
RS = {"family": "roper_suffridge", "inner": {"family": "koebe"}}


@pytest.fixture
def write(tmp_path):
    def _write(name, obj):
        p = tmp_path / name
        p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(p)
    return _write


def call(argv, capsys):
    code = run(argv)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out else None), out.err


def test_ops_polynomial(write, capsys):
    code, rep, _ = call(["ops", "--map", write("f.json", POLY)], capsys)
    assert code == 0
    P = rep["results"]["preschwarzian"]
    assert P["1,2,2"] == [2.0, 0.0]
    assert all(v == [0.0, 0.0] for k, v in P.items() if k != "1,2,2")
    gold = next(c for c in rep["checks"] if c["name"] == "goldberg_identity")
    assert gold["residual"] <= 1e-10


def test_ops_point_formats_agree(write, capsys):
    path = write("rs.json", RS)
    a = call(["ops", "--map", path, "--point", "0.1,0;0,0.2"], capsys)[1]
    b = call(["ops", "--map", path, "--point", "[[0.1, 0], [0, 0.2]]"], capsys)[1]
    assert a["results"] == b["results"]


def test_one_variable_ops(write, capsys):
    code, rep, _ = call(["ops", "--map", write("e.json", {"family": "exp"}), "--point", "0.2,0"], capsys)
    assert code == 1  # the tensor is undefined in one variable: reported, not skipped
    assert rep["results"]["preschwarzian"]["1,1,1"] == [1.0, 0.0]
    assert any(c.get("error") == "unsupported_dimension" for c in rep["checks"])


def test_falpha_identity_exponent(write, capsys):
    code, rep, _ = call(["falpha", "--map", write("rs.json", RS), "--alpha", "1,0",
                         "--mode", "jet", "--point", "0.1,0;0.2,0", "--order", "5"], capsys)
    assert code == 0
    N = normalize(build_germ(MapSpec.from_json(RS), [0.1, 0.2], order=5))
    for comp, want in zip(rep["results"]["coefficients"], N.components):
        got = {tuple(e): complex(*v) for e, v in comp}
        for e, c in want.to_dict(1e-15).items():
            assert got[e] == pytest.approx(c, abs=1e-10)


def test_falpha_non_integrable_reported(write, capsys):
    code, rep, _ = call(["falpha", "--map", write("rs.json", RS), "--alpha", "0.5,0"], capsys)
    assert code == 1
    assert rep["checks"][0]["name"] == "integrable" and rep["checks"][0]["verdict"] == "fail"


def test_falpha_path(write, capsys):
    spec = {"family": "product", "factors": [{"family": "cayley"}, {"family": "identity"}]}
    code, rep, _ = call(["falpha", "--map", write("p.json", spec), "--alpha", "2,0",
                         "--mode", "path", "--point", "0.3,0;0.1,0"], capsys)
    assert code == 0
    z = 0.3
    # f' = (1-z)^-2, so f_2 = ((1-z)^-3 - 1)/3
    assert rep["results"]["value"][0][0] == pytest.approx(((1 - z) ** -3 - 1) / 3, abs=1e-9)


def test_prescribe(write, capsys):
    good = {"schema": "preschwarz.field/1", "n": 2, "order": 4,
            "coefficients": {"1,2,2": [[[0, 0], 2]]}}
    code, rep, _ = call(["prescribe", "--field", write("a.json", good)], capsys)
    assert code == 0 and rep["results"]["prescribable"] is True
    asym = {"n": 2, "order": 4, "coefficients": {"1,1,2": [[[0, 0], 1]]}}
    code, rep, _ = call(["prescribe", "--field", write("b.json", asym)], capsys)
    assert code == 1
    assert [c["verdict"] for c in rep["checks"]][0] == "fail"
    fromap = {"map": RS, "alpha": [1, 0], "order": 5}
    code, rep, _ = call(["prescribe", "--field", write("c.json", fromap)], capsys)
    assert code == 0


def test_univalence(write, capsys):
    code, rep, _ = call(["univalence", "--map", write("rs.json", RS), "--alpha", "0.1,0",
                         "--samples", "50", "--seed", "2"], capsys)
    assert code == 0 and rep["seed"] == 2 and rep["checks"][0]["verdict"] == "pass"


@pytest.mark.parametrize("argv_tail,content", [
    (["ops"], '{"family": "roper_suffridge", '),
    (["ops"], '{"family": "nope"}'),
    (["ops"], '{"schema": "other/9", "family": "exp"}'),
])
def test_input_errors_exit_2(write, capsys, argv_tail, content):
    code, rep, err = call(argv_tail + ["--map", write("bad.json", content)], capsys)
    assert code == 2 and rep is None and "error" in err


def test_bad_point_and_missing_file(write, capsys):
    assert call(["ops", "--map", write("f.json", POLY), "--point", "1,2,3"], capsys)[0] == 2
    assert call(["ops", "--map", write("f.json", POLY), "--point", "0,0"], capsys)[0] == 2
    assert call(["ops", "--map", "/nonexistent.json"], capsys)[0] == 2
    assert call(["verify", "--suite", "nope"], capsys)[0] == 2


def test_domain_error_is_a_report_entry(write, capsys):
    code, rep, _ = call(["ops", "--map", write("rs.json", RS), "--point", "0.9,0;0.9,0"], capsys)
    assert code == 1 and rep["checks"][0]["error"] == "domain_error"


def test_verify_writes_identical_files(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["verify", "--suite", "schwarzian", "--seed", "3", "--out", str(a)]) == 0
    assert run(["verify", "--suite", "schwarzian", "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["seed"] == 3 and {c["criterion"] for c in rep["checks"]} == {1, 2, 3, 4, 5, 6, 8}


def test_verify_tolerance_override(tmp_path, capsys):
    code, rep, _ = call(["verify", "--suite", "schwarzian", "--tol", "1e-30"], capsys)
    assert code == 1
    assert all(c["tolerance"] == 1e-30 for c in rep["checks"])
