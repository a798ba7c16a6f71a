"""Acceptance criteria, one test each, at their stated tolerances.

Criteria 1-15 are read from a single ``verify --suite all --seed 7`` report
(the suites map one-to-one onto the criteria); criterion 16 runs the same
command a second time and compares bytes.  Each test prints one line:

    criterion  7: FAIL  prescribable_alpha_preschwarzian=0.986 (<= 1e-09) ...

Run alone with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``.
"""

import sys
import time

import pytest

from preschwarz.cli import run
from preschwarz.suites import c01_mobius_annihilation

SEED = 7
CRITERIA = list(range(1, 17))


@pytest.fixture(scope="module")
def reports(tmp_path_factory):
    d = tmp_path_factory.mktemp("acceptance")
    paths = [d / "first.json", d / "second.json"]
    codes = [run(["verify", "--suite", "all", "--seed", str(SEED), "--out", str(p)]) for p in paths]
    return codes, [p.read_bytes() for p in paths]


def _line(number, ok, detail):
    return f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def _emit(capsys, text):
    with capsys.disabled():
        print("\n" + text, end="")


def _checks_for(report_bytes, number):
    import json
    rep = json.loads(report_bytes)
    return [c for c in rep["checks"] if c.get("criterion") == number]


def _describe(checks):
    parts = []
    for c in checks:
        rel = c["relation"]
        r = c["residual"]
        r = f"{r:.3g}" if isinstance(r, float) else str(r)
        parts.append(f"{c['name']}={r} ({rel} {c['tolerance']:g})"
                     + (f" error={c['error']}" if "error" in c else ""))
    return "; ".join(parts)


@pytest.mark.parametrize("number", CRITERIA[:-1])
def test_criterion(number, reports, capsys):
    _, blobs = reports
    checks = _checks_for(blobs[0], number)
    assert checks, f"criterion {number} produced no checks"
    ok = all(c["verdict"] == "pass" for c in checks)
    detail = _describe(checks)
    if number == 1:
        t0 = time.perf_counter()
        c01_mobius_annihilation(SEED)
        elapsed = time.perf_counter() - t0
        ok = ok and elapsed < 5.0
        detail += f"; runtime={elapsed:.2f}s (< 5 s)"
    _emit(capsys, _line(number, ok, detail))
    assert ok, detail


def test_criterion_16_cli_determinism(reports, capsys):
    codes, blobs = reports
    ok = blobs[0] == blobs[1] and codes[0] == codes[1]
    _emit(capsys, _line(16, ok, f"two runs byte-identical={blobs[0] == blobs[1]} "
                                f"({len(blobs[0])} bytes, exit codes {codes})"))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
