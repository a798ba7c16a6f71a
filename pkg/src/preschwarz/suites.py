"""Verification suites: every invariant the library promises, as checks.

Each criterion function takes a seed and returns a list of
:class:`~preschwarz.report.Check`.  Randomness comes from
``np.random.default_rng([seed, criterion])`` so criteria are independent of
each other and of execution order.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import PreschwarzError
from .geometry import (SampleConfig, ball_points, becker_bound_margin,
                       convexity_margin, injectivity_scan, norm_order_estimate)
from .jets import Jet, monomials
from .maps import (JetMap, MapSpec, affine_compose, build_germ, complex_pair,
                   max_coeff_diff, normalize)
from .operators import (_flat, chain_rule_residual, goldberg_residual,
                        jacobian_solution, oda_schwarzian, oda_schwarzian_direct,
                        affine_invariance_residual, preschwarzian,
                        relative_residual, system_from_schwarzian)
from .prescribe import (check_prescription, falpha_jet, falpha_jet_with_discrepancy,
                        falpha_path, flatness_residual, integrate_system)
from .report import Check

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# generators


def _cnormal(rng, size, scale=1.0):
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / _SQRT2


def random_polynomial(rng, n: int, degree: int = 3, scale: float = 0.3) -> MapSpec:
    """``z + (random terms of degree 2..degree)``."""
    comps = []
    for k in range(n):
        terms = {tuple(int(i == k) for i in range(n)): 1.0}
        for e in monomials(n, degree):
            if sum(e) >= 2:
                terms[e] = complex(_cnormal(rng, None, scale))
        comps.append(terms)
    return MapSpec.polynomial(n, comps)


def random_mobius(rng, n: int, scale: float = 0.3) -> MapSpec:
    return MapSpec.mobius(np.eye(n + 1) + _cnormal(rng, (n + 1, n + 1), scale))


def random_affine(rng, n: int):
    return np.eye(n) + _cnormal(rng, (n, n), 0.5), _cnormal(rng, n, 1.0)


def random_alpha(rng) -> complex:
    r = rng.uniform(0.3, 1.8)
    return complex(r * cmath.exp(1j * rng.uniform(-1.0, 1.0)))


def convex_mobius() -> MapSpec:
    """``z / (1 - z_1)`` on B^2."""
    return MapSpec.mobius([[1, -1, 0], [0, 1, 0], [0, 0, 1]])


def royster_product(mu: complex = -2.0) -> MapSpec:
    return MapSpec.product(MapSpec.one_variable("royster", mu=mu), MapSpec.identity(1))


def builtin_families(n: int) -> list[tuple[str, MapSpec]]:
    ov = MapSpec.one_variable
    if n == 1:
        return [("koebe", ov("koebe")), ("cayley", ov("cayley")),
                ("royster(-2)", ov("royster", mu=-2)),
                ("royster(0.5)", ov("royster", mu=0.5)), ("exp", ov("exp"))]
    if n == 2:
        A = [[1.0, 0.5j], [-0.25, 2.0]]
        return [
            ("product(koebe,cayley)", MapSpec.product(ov("koebe"), ov("cayley"))),
            ("product(royster(-2),exp)", MapSpec.product(ov("royster", mu=-2), ov("exp"))),
            ("roper_suffridge(koebe)", MapSpec.roper_suffridge(ov("koebe"))),
            ("roper_suffridge(cayley)", MapSpec.roper_suffridge(ov("cayley"))),
            ("mobius(convex)", convex_mobius()),
            ("polynomial", MapSpec.polynomial(2, [{(1, 0): 1, (0, 2): 1}, {(0, 1): 1}])),
            ("affine(roper_suffridge(exp))",
             MapSpec.affine(MapSpec.roper_suffridge(ov("exp")), A, [0.1, -0.2j])),
        ]
    if n == 3:
        return [
            ("product(koebe,cayley,exp)", MapSpec.product(ov("koebe"), ov("cayley"), ov("exp"))),
            ("roper_suffridge3(koebe)", MapSpec.roper_suffridge(ov("koebe"), n=3)),
            ("mobius3", MapSpec.mobius([[1, -0.5, 0, 0.25j], [0, 1, 0.3, 0],
                                        [0.2, 0, 1, 0], [0, 0, 0, 1]])),
            ("polynomial3", MapSpec.polynomial(3, [{(1, 0, 0): 1, (0, 1, 1): 1},
                                                   {(0, 1, 0): 1, (2, 0, 0): 0.5j},
                                                   {(0, 0, 1): 1, (0, 2, 0): -1}])),
        ]
    raise ValueError("built-in families exist for n = 1, 2, 3")


def family_basepoints(n: int, count: int, seed: int, radius: float = 0.5) -> np.ndarray:
    """The origin followed by ``count - 1`` low-discrepancy points."""
    pts = ball_points(n, count - 1, radius, seed, stream=5)
    return np.vstack([np.zeros((1, n), dtype=complex), pts])


# ---------------------------------------------------------------------------
# one-variable oracles (plain Python, no jets)


def taylor_coefficients(family: str, degree: int, mu: complex = 0.0) -> list[complex]:
    """Coefficients ``a_0..a_degree`` of a one-variable family at 0."""
    out = [0j] * (degree + 1)
    for k in range(1, degree + 1):
        if family == "koebe":
            out[k] = complex(k)
        elif family == "cayley":
            out[k] = 1 + 0j
        elif family == "exp":
            out[k] = 1 / math.factorial(k) + 0j
        elif family == "royster":
            c = 1 + 0j
            for j in range(k):
                c *= (mu - j) / (j + 1)
            out[k] = c * (-1) ** k
        elif family == "identity":
            out[k] = 1 + 0j if k == 1 else 0j
        else:
            raise ValueError(family)
    return out


def series_power(a: list[complex], lam: complex) -> list[complex]:
    """``a(z)^lam`` for ``a_0 = 1`` by the J.C.P. Miller recurrence."""
    b = [0j] * len(a)
    b[0] = 1 + 0j
    for k in range(1, len(a)):
        s = 0j
        for j in range(1, k + 1):
            s += ((lam + 1) * j - k) * a[j] * b[k - j]
        b[k] = s / k
    return b


def falpha_oracle(family: str, alpha: complex, degree: int, mu: complex = 0.0) -> list[complex]:
    """Coefficients of the one-variable ``f_alpha``:
    ``f_alpha' = (f'/f'(0))^alpha``, ``f_alpha(0) = 0``."""
    a = taylor_coefficients(family, degree + 1, mu)
    d = [(k + 1) * a[k + 1] for k in range(degree)]
    d = [x / d[0] for x in d]
    p = series_power(d, alpha)
    return [0j] + [p[k - 1] / k for k in range(1, degree + 1)]


# ---------------------------------------------------------------------------
# helpers


def _rng(seed: int, criterion: int):
    return np.random.default_rng([seed, criterion])


def _pt(z) -> list:
    return [complex_pair(complex(x)) for x in np.atleast_1d(z)]


class _Worst:
    """Running maximum with the witness that attains it."""

    def __init__(self):
        self.value = 0.0
        self.witness: dict = {}

    def update(self, value: float, **witness) -> None:
        if value > self.value or not self.witness:
            self.value = float(value)
            self.witness = witness


def _guard(name: str, tol: float, criterion: int, fn):
    try:
        return fn()
    except PreschwarzError as exc:
        return [Check(name, float("inf"), tol, error=exc.code, criterion=criterion,
                      witnesses={"message": str(exc)})]


def _tensor_residuals(T, worst: _Worst, **wit):
    worst.update(max(T.symmetry_residual(), T.trace_residual()), **wit)


# ---------------------------------------------------------------------------
# schwarzian suite


def c01_mobius_annihilation(seed: int, tensors: _Worst | None = None):
    rng = _rng(seed, 1)
    worst = _Worst()
    for n, count in ((2, 100), (3, 20)):
        for s in range(count):
            spec = random_mobius(rng, n)
            T = oda_schwarzian(build_germ(spec, np.zeros(n), order=5))
            val = max(T.max_abs(), max((x.max_abs() for x in _flat(T.S0)), default=0.0))
            worst.update(val, n=n, sample=s, map=spec.to_json())
            if tensors is not None:
                _tensor_residuals(T, tensors, criterion=1, n=n, sample=s)
    return [Check("mobius_annihilation", worst.value, 1e-10, witnesses=worst.witness,
                  criterion=1)]


def _chain_inputs(seed: int):
    rng = _rng(seed, 2)
    for s in range(50):
        f_spec, g_spec = random_polynomial(rng, 2), random_polynomial(rng, 2)
        p = ball_points(2, 1, 0.3, seed * 1000 + s, stream=6)[0]
        f = build_germ(f_spec, p, order=6)
        g = build_germ(g_spec, f.value, order=6)
        yield s, f_spec, g_spec, p, f, g


def c02_chain_rule(seed: int, tensors: _Worst | None = None):
    worst = _Worst()
    for s, f_spec, g_spec, p, f, g in _chain_inputs(seed):
        worst.update(chain_rule_residual(f, g), sample=s, basepoint=_pt(p))
        if tensors is not None:
            for G in (f, g, g.compose(f)):
                _tensor_residuals(oda_schwarzian(G), tensors, criterion=2, sample=s)
    return [Check("chain_rule", worst.value, 1e-9, witnesses=worst.witness, criterion=2)]


def c03_goldberg(seed: int, tensors: _Worst | None = None):
    worst = _Worst()
    for n in (1, 2, 3):
        for name, spec in builtin_families(n):
            for b, p in enumerate(family_basepoints(n, 10, seed)):
                F = build_germ(spec, p, order=6)
                worst.update(goldberg_residual(F), family=name, basepoint=_pt(p))
                if tensors is not None and n >= 2:
                    _tensor_residuals(oda_schwarzian(F), tensors, criterion=3,
                                      family=name, basepoint=_pt(p))
    return [Check("goldberg_identity", worst.value, 1e-10, witnesses=worst.witness,
                  criterion=3)]


def c04_tensor_structure(seed: int):
    tensors = _Worst()
    c01_mobius_annihilation(seed, tensors)
    c02_chain_rule(seed, tensors)
    c03_goldberg(seed, tensors)
    return [Check("tensor_symmetry_and_trace", tensors.value, 1e-10,
                  witnesses=tensors.witness, criterion=4)]


def c05_direct_route(seed: int):
    worst = _Worst()
    for s, f_spec, g_spec, p, f, g in _chain_inputs(seed):
        for role, G in (("f", f), ("g", g), ("g o f", g.compose(f))):
            T = oda_schwarzian(G)
            D = oda_schwarzian_direct(G)
            diffs = [a - b for a, b in zip(_flat(D), _flat(T.S))]
            worst.update(relative_residual(diffs, _flat(T.S)), sample=s, germ=role)
    return [Check("direct_vs_preschwarzian_route", worst.value, 1e-10,
                  witnesses=worst.witness, criterion=5)]


def c06_affine_invariance(seed: int):
    rng = _rng(seed, 6)
    inv, uniq = _Worst(), _Worst()
    for s in range(20):
        spec = random_polynomial(rng, 2)
        A, b = random_affine(rng, 2)
        F = build_germ(spec, np.zeros(2), order=6)
        inv.update(affine_invariance_residual(F, A, b), sample=s)
        G = affine_compose(F, A, b)
        # same P_f: the germ rebuilt from P alone is the normalized germ
        rebuilt = falpha_jet(G, 1.0)
        uniq.update(max(max_coeff_diff(rebuilt, normalize(F)),
                        max_coeff_diff(normalize(G), normalize(F))), sample=s)
    return [Check("affine_invariance", inv.value, 1e-12, witnesses=inv.witness, criterion=6),
            Check("equal_preschwarzian_normalized_germs", uniq.value, 1e-9,
                  witnesses=uniq.witness, criterion=6)]


def c08_flatness(seed: int):
    worst = _Worst()
    for n in (2, 3):
        for name, spec in builtin_families(n):
            for p in family_basepoints(n, 3, seed):
                F = build_germ(spec, p, order=6)
                worst.update(flatness_residual(system_from_schwarzian(F)),
                             family=name, basepoint=_pt(p))
    return [Check("frame_connection_flatness", worst.value, 1e-9,
                  witnesses=worst.witness, criterion=8)]


# ---------------------------------------------------------------------------
# prescription suite


def c07_prescription(seed: int):
    rng = _rng(seed, 7)
    worst = _Worst()
    for s in range(20):
        spec = random_polynomial(rng, 2)
        alpha = random_alpha(rng)
        F = build_germ(spec, np.zeros(2), order=6)
        rep = check_prescription(preschwarzian(F).scaled(alpha), tol=1e-9,
                                 raise_on_failure=False)
        worst.update(max(rep.symmetry_residual, rep.closedness_residual,
                         rep.flatness_residual, rep.u0_residual),
                     sample=s, alpha=alpha, symmetry=rep.symmetry_residual,
                     closedness=rep.closedness_residual, flatness=rep.flatness_residual,
                     u0=rep.u0_residual)
    checks = [Check("prescribable_alpha_preschwarzian", worst.value, 1e-9,
                    witnesses=worst.witness, criterion=7)]

    rt = _Worst()
    for s in range(20):
        spec = random_polynomial(rng, 2)
        F = build_germ(spec, np.zeros(2), order=7)
        u0 = jacobian_solution(F)
        seeds = [(u0.const, [u0.partial(k).const for k in range(2)])]
        for l in range(2):
            u = F.components[l].truncate(u0.order) * u0
            seeds.append((u.const, [u.partial(k).const for k in range(2)]))
        G = integrate_system(system_from_schwarzian(F), seeds)
        rt.update(max_coeff_diff(G.truncate(6), F.truncate(6)), sample=s, order=G.order)
    checks.append(Check("integrate_system_roundtrip", rt.value, 1e-10,
                        witnesses=rt.witness, criterion=7))
    return checks


RS_KOEBE = MapSpec.roper_suffridge(MapSpec.one_variable("koebe"))
DUAL_ALPHAS = (0.25, 0.5 + 0.25j)


def c09_dual_construction(seed: int, order: int = 24, points: int = 20):
    agree, indep = _Worst(), _Worst()
    F = build_germ(RS_KOEBE, np.zeros(2), order=order)
    zs = ball_points(2, points, 0.4, seed, stream=7)
    for alpha in DUAL_ALPHAS:
        G, disc = falpha_jet_with_discrepancy(F, alpha, strict=False)
        for z in zs:
            ray = falpha_path(RS_KOEBE, alpha, z, tol=1e-12)
            bent = falpha_path(RS_KOEBE, alpha, z, tol=1e-12, via=[z[0], 0])
            agree.update(float(np.abs(G.eval(z) - ray).max()), alpha=alpha, point=_pt(z),
                         recursion_discrepancy=disc)
            indep.update(float(np.abs(bent - ray).max()), alpha=alpha, point=_pt(z))
    return [Check("falpha_jet_vs_path", agree.value, 1e-6, witnesses=agree.witness,
                  criterion=9),
            Check("falpha_path_independence", indep.value, 1e-6, witnesses=indep.witness,
                  criterion=9)]


PRODUCT_FACTORS = (("koebe", 0.0), ("royster", -2.0), ("cayley", 0.0), ("exp", 0.0))


def c10_product_structure(seed: int):
    rng = _rng(seed, 10)
    worst = _Worst()
    degree = 6
    for s in range(4):
        (fa, mua), (fb, mub) = PRODUCT_FACTORS[s], PRODUCT_FACTORS[(s + 1) % 4]
        alpha = random_alpha(rng)
        spec = MapSpec.product(_one(fa, mua), _one(fb, mub))
        G = falpha_jet(build_germ(spec, np.zeros(2), order=degree + 1), alpha)
        oracles = (falpha_oracle(fa, alpha, degree, mua), falpha_oracle(fb, alpha, degree, mub))
        diff = 0.0
        for l in range(2):
            for e, c in G.components[l].truncate(degree).to_dict().items():
                want = oracles[l][e[l]] if e[1 - l] == 0 else 0.0
                diff = max(diff, abs(c - want))
        worst.update(diff, factors=[fa, fb], alpha=alpha)
    return [Check("product_map_falpha", worst.value, 1e-10, witnesses=worst.witness,
                  criterion=10)]


def _one(family, mu):
    return MapSpec.one_variable(family, mu=mu) if family == "royster" else MapSpec(family, {})


def c11_roper_suffridge(seed: int, degree: int = 5):
    first, yeq = _Worst(), _Worst()
    F = build_germ(RS_KOEBE, np.zeros(2), order=degree + 2)
    f = build_germ(MapSpec.one_variable("koebe"), np.zeros(1), order=degree + 2).components[0]
    for alpha in DUAL_ALPHAS:
        G, disc = falpha_jet_with_discrepancy(F, alpha, strict=False)
        oracle = falpha_oracle("koebe", alpha, degree + 2)
        diff = 0.0
        for e, c in G.components[0].to_dict().items():
            want = oracle[e[0]] if e[1] == 0 else 0.0
            diff = max(diff, abs(c - want))
        first.update(diff, alpha=alpha)

        # y(z1): the z2-free part of the second component
        y = Jet.from_dict(1, degree + 2, {(e[0],): c for e, c in
                                          G.components[1].to_dict().items() if e[1] == 0})
        fp = f.partial(0)
        q = fp.partial(0) * fp.truncate(degree).reciprocal()
        m = degree
        q = q.truncate(m)
        force = q * q * fp.truncate(m).pow(alpha / 2) * (alpha * (alpha - 1) / 4)
        lhs = y.partial(0).partial(0).truncate(m) - q * y.partial(0).truncate(m) * alpha
        yeq.update(relative_residual([lhs - force], [lhs, force]), alpha=alpha,
                   y_coefficients=[complex_pair(y.coef((k,))) for k in range(m + 1)],
                   recursion_discrepancy=disc)
    return [Check("rs_first_component", first.value, 1e-10, witnesses=first.witness,
                  criterion=11),
            Check("rs_y_equation", yeq.value, 1e-8, witnesses=yeq.witness, criterion=11)]


def c15_semigroup(seed: int):
    rng = _rng(seed, 15)
    worst = _Worst()
    for s in range(10):
        spec = random_polynomial(rng, 2)
        alpha, beta = random_alpha(rng), random_alpha(rng)
        F = build_germ(spec, np.zeros(2), order=6)
        Ga, d1 = falpha_jet_with_discrepancy(F, alpha, strict=False)
        Gab, d2 = falpha_jet_with_discrepancy(Ga, beta, strict=False)
        H, d3 = falpha_jet_with_discrepancy(F, alpha * beta, strict=False)
        worst.update(max_coeff_diff(Gab, H), sample=s, alpha=alpha, beta=beta,
                     recursion_discrepancy=max(d1, d2, d3))
    return [Check("falpha_semigroup", worst.value, 1e-10, witnesses=worst.witness,
                  criterion=15)]


# ---------------------------------------------------------------------------
# geometry suite

ROYSTER_POINTS = tuple(1 - 0.5 * cmath.exp(s * 1j * math.pi / 5) for s in (1, -1))


def c12_royster(seed: int, pairs: int = 2000, radius: float = 0.9):
    spec = royster_product(-2.0)
    cfg = SampleConfig(seed=seed, count=pairs, radius=radius)
    res = injectivity_scan(spec, 2.0, cfg)
    wit = {"pairs_checked": res.pairs_checked, "closest_ratio": res.closest_ratio}
    if res.witness is not None:
        wit.update(z=_pt(res.witness[0]), w=_pt(res.witness[1]),
                   separation=float(np.linalg.norm(res.witness[0] - res.witness[1])))
    gap = res.gap if res.gap is not None else float("inf")
    checks = [Check("royster_collision_found", gap, cfg.tolerance, witnesses=wit,
                    criterion=12)]

    vals, closed = [], 0.0
    for zc in ROYSTER_POINTS:
        v = falpha_path(spec, 2.0, np.array([zc, 0]), tol=1e-12)
        want = ((1 - zc) ** -5 - 1) / 5
        closed = max(closed, abs(v[0] - want), abs(v[1]))
        vals.append(v)
    checks.append(Check("royster_closed_form", closed, 1e-8, criterion=12, witnesses={
        "points": [complex_pair(z) for z in ROYSTER_POINTS],
        "collision_gap": float(np.abs(vals[0] - vals[1]).max()),
        "unnormalized_value": complex_pair(4 * ((1 - ROYSTER_POINTS[0]) ** -5 - 1) / 5),
    }))

    small = injectivity_scan(spec, 0.2, cfg)
    checks.append(Check("royster_small_alpha_injective", 0.0 if small.passed else 1.0, 0.0,
                        criterion=12, witnesses={"pairs_checked": small.pairs_checked,
                                                 "closest_ratio": small.closest_ratio}))
    return checks


CONVEX_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)


def c13_convexity(seed: int):
    cfg = SampleConfig(seed=seed, count=500, radius=0.8)
    margins = {a: convexity_margin(convex_mobius(), a, cfg) for a in CONVEX_ALPHAS}
    worst = min(margins, key=margins.get)
    return [Check("convexity_margin", margins[worst], 0.0, relation=">", criterion=13,
                  witnesses={"alpha": worst,
                             "margins": [[a, margins[a]] for a in CONVEX_ALPHAS]})]


def c14_becker(seed: int, pairs: int = 2000):
    cfg = SampleConfig(seed=seed, count=200, radius=0.8)
    est = norm_order_estimate(RS_KOEBE, cfg)
    alpha = 1.0 / (2 * est.beta_hat + 1)
    margin = becker_bound_margin(RS_KOEBE, alpha, est.beta_hat, cfg)
    wit = {"beta_hat": est.beta_hat, "alpha": alpha,
           "automorphism_parameter": _pt(est.witness)}
    scan = injectivity_scan(RS_KOEBE, alpha, SampleConfig(seed=seed, count=pairs, radius=0.8))
    return [Check("becker_bound", margin, 1e-8, witnesses=wit, criterion=14),
            Check("univalence_radius_injective", 0.0 if scan.passed else 1.0, 0.0,
                  criterion=14, witnesses={"pairs_checked": scan.pairs_checked,
                                           "closest_ratio": scan.closest_ratio})]


# ---------------------------------------------------------------------------

SUITES = {
    "schwarzian": [(1, c01_mobius_annihilation), (2, c02_chain_rule), (3, c03_goldberg),
                   (4, c04_tensor_structure), (5, c05_direct_route),
                   (6, c06_affine_invariance), (8, c08_flatness)],
    "prescribe": [(7, c07_prescription), (9, c09_dual_construction),
                  (10, c10_product_structure), (11, c11_roper_suffridge),
                  (15, c15_semigroup)],
    "geometry": [(12, c12_royster), (13, c13_convexity), (14, c14_becker)],
}
SUITES["all"] = sorted(SUITES["schwarzian"] + SUITES["prescribe"] + SUITES["geometry"])

CRITERIA = dict(SUITES["all"])


def run_criterion(number: int, seed: int, tol: float | None = None) -> list[Check]:
    fn = CRITERIA[number]
    checks = _guard(fn.__name__, tol if tol is not None else 0.0, number, lambda: fn(seed))
    if tol is not None:
        for c in checks:
            if c.relation == "<=" and c.tolerance > 0:
                c.tolerance = tol
    return checks


def run_suite(name: str, seed: int, tol: float | None = None) -> list[Check]:
    """All checks of a suite in criterion order.  ``tol`` replaces every
    positive ``<=`` tolerance when given."""
    out: list[Check] = []
    for number, _ in SUITES[name]:
        out += run_criterion(number, seed, tol)
    return out
