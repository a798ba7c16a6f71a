"""Command-line interface.

Every subcommand prints one canonical JSON report (or writes it to
``--out``).  Exit status: 0 when every check passes, 1 when a check fails,
2 on bad input.  Complex numbers are ``[re, im]`` pairs; tensor indices in
reports are 1-based, ``"k,i,j"`` for ``a^k_ij``.

Points are given as JSON (``'[[0.1, 0], [0, 0.2]]'``) or as
``"re,im;re,im"`` with one ``re,im`` pair per coordinate.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import InvalidSpec, PreschwarzError
from .geometry import SampleConfig, injectivity_scan
from .jets import Jet
from .maps import MapSpec, build_germ, complex_pair, parse_complex
from .operators import (STRUCTURAL_TOL, BilinearField, goldberg_residual,
                        oda_schwarzian, preschwarzian)
from .prescribe import check_prescription, falpha_jet_with_discrepancy, falpha_path
from .report import Check, canonical_dumps, make_report
from .suites import SUITES, run_suite

MAP_SCHEMA = "preschwarz.map/1"
FIELD_SCHEMA = "preschwarz.field/1"


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# input parsing


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from None


def _check_schema(obj, expected: str):
    if isinstance(obj, dict) and "schema" in obj and obj["schema"] != expected:
        raise InputError(f"unsupported schema {obj['schema']!r}, expected {expected!r}")


def load_map(path: str) -> tuple[MapSpec, dict]:
    obj = _load_json(path)
    _check_schema(obj, MAP_SCHEMA)
    if isinstance(obj, dict):
        obj = {k: v for k, v in obj.items() if k != "schema"}
    try:
        spec = MapSpec.from_json(obj)
        spec.dimension
    except (InvalidSpec, ValueError, TypeError, KeyError) as exc:
        raise InputError(f"invalid map spec in {path}: {exc}") from None
    return spec, spec.to_json()


def parse_point(text: str | None, n: int) -> np.ndarray:
    if text is None:
        return np.zeros(n, dtype=complex)
    try:
        if text.strip().startswith("["):
            vals = [parse_complex(x) for x in json.loads(text)]
        else:
            vals = []
            for tok in text.split(";"):
                parts = [p for p in tok.split(",") if p.strip()]
                if len(parts) == 2:
                    vals.append(complex(float(parts[0]), float(parts[1])))
                elif len(parts) == 1:
                    vals.append(parse_complex(parts[0].strip()))
                else:
                    raise ValueError(tok)
    except (ValueError, InvalidSpec, json.JSONDecodeError):
        raise InputError(f"cannot parse point {text!r}") from None
    if len(vals) != n:
        raise InputError(f"point has {len(vals)} coordinates, map has {n}")
    return np.array(vals, dtype=complex)


def parse_scalar(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
        return parse_complex(text.strip())
    except (ValueError, InvalidSpec):
        raise InputError(f"cannot parse complex scalar {text!r}") from None


def _terms_to_jet(obj, n: int, order: int, basepoint) -> Jet:
    from .maps import _read_terms
    terms = _read_terms(obj, n)
    deg = max((sum(e) for e in terms), default=0)
    return Jet.from_dict(n, max(deg, order), terms).shift(basepoint).truncate(order)


def load_field(path: str):
    """A bilinear field: either explicit polynomial coefficients
    ``{"n", "order", "basepoint", "coefficients": {"k,i,j": terms}}`` (1-based,
    missing entries zero, ``terms`` as in polynomial map specs), or
    ``{"map": spec, "alpha": a}`` for ``alpha * P_f``."""
    obj = _load_json(path)
    _check_schema(obj, FIELD_SCHEMA)
    if not isinstance(obj, dict):
        raise InputError("field must be a JSON object")
    try:
        order = int(obj.get("order", 6))
        if "map" in obj:
            spec = MapSpec.from_json(obj["map"])
            n = spec.dimension
            p = parse_point(json.dumps(obj["basepoint"]), n) if "basepoint" in obj \
                else np.zeros(n, dtype=complex)
            alpha = parse_complex(obj.get("alpha", 1.0))
            field = preschwarzian(build_germ(spec, p, order=order + 2)).scaled(alpha)
            return field, {"map": spec.to_json(), "alpha": complex_pair(alpha),
                           "basepoint": [complex_pair(x) for x in p], "order": order}
        n = int(obj["n"])
        p = np.array([parse_complex(x) for x in obj.get("basepoint", [0] * n)], dtype=complex)
        if p.shape != (n,):
            raise InputError("basepoint has the wrong length")
        coeffs = [[[Jet(n, order) for _ in range(n)] for _ in range(n)] for _ in range(n)]
        for key, terms in obj["coefficients"].items():
            k, i, j = (int(s) - 1 for s in key.split(","))
            if not all(0 <= x < n for x in (k, i, j)):
                raise InputError(f"index {key!r} out of range")
            coeffs[k][i][j] = _terms_to_jet(terms, n, order, p)
        field = BilinearField(tuple(tuple(tuple(r) for r in m) for m in coeffs), p)
    except InputError:
        raise
    except (KeyError, ValueError, TypeError, InvalidSpec) as exc:
        raise InputError(f"invalid field in {path}: {exc}") from None
    return field, obj


# ---------------------------------------------------------------------------
# output helpers


def _tensor3(arr) -> dict:
    n = arr.shape[0]
    return {f"{k + 1},{i + 1},{j + 1}": complex_pair(arr[k, i, j])
            for k in range(n) for i in range(n) for j in range(n)}


def _tensor2(arr) -> dict:
    n = arr.shape[0]
    return {f"{i + 1},{j + 1}": complex_pair(arr[i, j]) for i in range(n) for j in range(n)}


def _coefficients(G) -> list:
    return [[[list(e), complex_pair(c)] for e, c in comp.to_dict().items()]
            for comp in G.components]


def _error_check(name: str, exc: PreschwarzError) -> Check:
    return Check(name, float("inf"), 0.0, error=exc.code, witnesses={"message": str(exc)})


# ---------------------------------------------------------------------------
# subcommands


def cmd_ops(args):
    spec, spec_json = load_map(args.map)
    n = spec.dimension
    p = parse_point(args.point, n)
    inputs = {"map": spec_json, "point": [complex_pair(x) for x in p], "order": args.order}
    tol = args.tol if args.tol is not None else STRUCTURAL_TOL
    checks, results = [], {}
    try:
        F = build_germ(spec, p, order=args.order)
        results["preschwarzian"] = _tensor3(preschwarzian(F).at_base())
        checks.append(Check("goldberg_identity", goldberg_residual(F), tol))
        T = oda_schwarzian(F)
        results["schwarzian"] = _tensor3(T.at_base())
        results["companion"] = _tensor2(T.S0_at_base())
        checks.append(Check("schwarzian_symmetry", T.symmetry_residual(), tol))
        checks.append(Check("schwarzian_trace", T.trace_residual(), tol))
    except PreschwarzError as exc:
        checks.append(_error_check("ops", exc))
    return make_report("ops", inputs, checks, results=results)


def cmd_falpha(args):
    spec, spec_json = load_map(args.map)
    n = spec.dimension
    alpha = parse_scalar(args.alpha)
    inputs = {"map": spec_json, "alpha": complex_pair(alpha), "mode": args.mode,
              "order": args.order, "point": args.point}
    tol = args.tol if args.tol is not None else 1e-10
    checks, results = [], {}
    try:
        if args.mode == "jet":
            p = parse_point(args.point, n)
            F = build_germ(spec, p, order=args.order)
            G, disc = falpha_jet_with_discrepancy(F, alpha, tol=tol, strict=False)
            results["coefficients"] = _coefficients(G)
            checks.append(Check("integrable", disc, tol))
        else:
            if args.point is None:
                raise InputError("--mode path needs --point")
            z = parse_point(args.point, n)
            results["value"] = [complex_pair(x) for x in falpha_path(spec, alpha, z, tol=tol)]
    except PreschwarzError as exc:
        checks.append(_error_check("falpha", exc))
    return make_report("falpha", inputs, checks, results=results)


def cmd_prescribe(args):
    field, field_json = load_field(args.field)
    tol = args.tol if args.tol is not None else 1e-9
    checks, results = [], {}
    try:
        rep = check_prescription(field, tol=tol, raise_on_failure=False)
        checks += [Check("symmetry", rep.symmetry_residual, tol),
                   Check("trace_form_closed", rep.closedness_residual, tol),
                   Check("flatness", rep.flatness_residual, tol),
                   Check("u0_solves_system", rep.u0_residual, tol)]
        if rep.trace_potential is not None:
            results["trace_potential"] = [[list(e), complex_pair(c)] for e, c in
                                          rep.trace_potential.to_dict().items()]
        results["prescribable"] = rep.prescribable
    except PreschwarzError as exc:
        checks.append(_error_check("prescribe", exc))
    return make_report("prescribe", {"field": field_json}, checks, results=results)


def cmd_verify(args):
    checks = run_suite(args.suite, args.seed, args.tol)
    inputs = {"suite": args.suite, "tol": args.tol}
    results = {"summary": [f"{'PASS' if c.passed else 'FAIL'} {c.criterion} {c.name}"
                           for c in checks]}
    return make_report("verify", inputs, checks, seed=args.seed, results=results)


def cmd_univalence(args):
    spec, spec_json = load_map(args.map)
    alpha = parse_scalar(args.alpha)
    try:
        cfg = SampleConfig(seed=args.seed, count=args.samples, radius=args.radius,
                           pair_separation=args.separation,
                           tolerance=args.tol if args.tol is not None else 1e-8)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    inputs = {"map": spec_json, "alpha": complex_pair(alpha), "samples": args.samples,
              "radius": args.radius, "separation": args.separation}
    checks, results = [], {}
    try:
        res = injectivity_scan(spec, alpha, cfg)
        wit = {"pairs_checked": res.pairs_checked, "closest_ratio": res.closest_ratio}
        if res.witness is not None:
            wit["z"] = [complex_pair(x) for x in res.witness[0]]
            wit["w"] = [complex_pair(x) for x in res.witness[1]]
            wit["gap"] = res.gap
        checks.append(Check("no_collision", 0.0 if res.passed else 1.0, 0.0, witnesses=wit))
    except PreschwarzError as exc:
        checks.append(_error_check("univalence", exc))
    return make_report("univalence", inputs, checks, seed=args.seed, results=results)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="preschwarz", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--tol", type=float, default=None, help="override the tolerance")

    p = sub.add_parser("ops", help="P_f, Oda's Schwarzian and S0 at a point")
    p.add_argument("--map", required=True)
    p.add_argument("--point")
    p.add_argument("--order", type=int, default=6)
    common(p)
    p.set_defaults(func=cmd_ops)

    p = sub.add_parser("falpha", help="f_alpha as a jet or by path integration")
    p.add_argument("--map", required=True)
    p.add_argument("--alpha", required=True, help="re,im")
    p.add_argument("--mode", choices=("jet", "path"), default="jet")
    p.add_argument("--point")
    p.add_argument("--order", type=int, default=6)
    common(p)
    p.set_defaults(func=cmd_falpha)

    p = sub.add_parser("prescribe", help="decide whether a bilinear field is a preSchwarzian")
    p.add_argument("--field", required=True)
    common(p)
    p.set_defaults(func=cmd_prescribe)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", choices=sorted(SUITES), default="all")
    p.add_argument("--seed", type=int, default=7)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("univalence", help="sampled injectivity scan of f_alpha")
    p.add_argument("--map", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--samples", type=int, default=2000, help="pair budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--radius", type=float, default=0.8)
    p.add_argument("--separation", type=float, default=0.3)
    common(p)
    p.set_defaults(func=cmd_univalence)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        report = args.func(args)
    except InputError as exc:
        print(f"preschwarz: error: {exc}", file=sys.stderr)
        return 2
    text = canonical_dumps(report) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report["passed"] else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
