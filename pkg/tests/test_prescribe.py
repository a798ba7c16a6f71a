import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from preschwarz.errors import (BadIndex, DependentSeeds, NotExact, NotIntegrable,
                               SingularBasepoint, SymmetryViolation, UnsupportedDimension)
from preschwarz.jets import Jet
from preschwarz.maps import JetMap, MapSpec, build_germ, identity_germ, max_coeff_diff, normalize
from preschwarz.operators import (BilinearField, SystemCoefficients, _flat, jacobian_solution,
                                  preschwarzian, system_from_schwarzian)
from preschwarz.prescribe import (check_prescription, closedness_residual, falpha_jet,
                                  falpha_jet_with_discrepancy, falpha_path, flatness_residual,
                                  integrate_closed_form, integrate_system)
from preschwarz.suites import falpha_oracle, random_polynomial

KOEBE = MapSpec("koebe", {})
CAYLEY = MapSpec("cayley", {})
RS = MapSpec.roper_suffridge(KOEBE)


def field(n, order, entries, basepoint=None):
    """Bilinear field with the given constant or jet entries, 0-indexed keys."""
    bp = np.zeros(n, dtype=complex) if basepoint is None else basepoint
    zero = Jet(n, order)
    c = [[[entries.get((k, i, j), zero) for j in range(n)] for i in range(n)] for k in range(n)]
    c = [[[x if isinstance(x, Jet) else Jet.constant(n, order, x) for x in r] for r in m] for m in c]
    return BilinearField(tuple(tuple(tuple(r) for r in m) for m in c), bp)


def zero_system(n, order):
    z = Jet(n, order)
    P = tuple(tuple(tuple(z for _ in range(n)) for _ in range(n)) for _ in range(n))
    return SystemCoefficients(P, tuple(tuple(z for _ in range(n)) for _ in range(n)), np.zeros(n))


STANDARD_SEEDS = [(1.0, [0, 0]), (0.0, [1, 0]), (0.0, [0, 1])]


# --- prescription ------------------------------------------------------------

def test_constant_field_is_prescribable():
    A = field(2, 5, {(0, 1, 1): 2.0})
    rep = check_prescription(A)
    assert rep.prescribable
    assert rep.trace_potential.max_abs() == 0
    P = rep.system.P
    assert P[0][1][1].to_dict() == {(0, 0): 2}
    assert max(x.max_abs() for x in _flat(rep.system.P0)) == 0


def test_asymmetric_field_rejected():
    with pytest.raises(SymmetryViolation):
        check_prescription(field(2, 4, {(0, 0, 1): 1.0}))
    rep = check_prescription(field(2, 4, {(0, 0, 1): 1.0}), raise_on_failure=False)
    assert not rep.symmetry_ok and not rep.prescribable


def test_non_closed_trace_form_rejected():
    z1 = Jet.variable(2, 4, 1)
    # trace form (z2, 0): d(omega_1)/dz2 = 1 but d(omega_2)/dz1 = 0
    with pytest.raises(NotExact):
        check_prescription(field(2, 4, {(0, 0, 0): z1}))


def test_dimension_one_rejected():
    with pytest.raises(UnsupportedDimension):
        check_prescription(field(1, 3, {(0, 0, 0): 1.0}))


@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_trivial_multiples_prescribable(alpha):
    F = build_germ(random_polynomial(np.random.default_rng(3), 2), [0, 0], order=7)
    assert check_prescription(preschwarzian(F).scaled(alpha)).prescribable


@settings(max_examples=10, deadline=None)
@given(st.complex_numbers(max_magnitude=2, allow_nan=False))
def test_product_map_multiples_prescribable(alpha):
    F = build_germ(MapSpec.product(KOEBE, MapSpec("exp", {})), [0.1, 0.2j], order=7)
    rep = check_prescription(preschwarzian(F).scaled(alpha))
    assert rep.prescribable
    # two routes to P0: the defining formula and the system of f_alpha itself
    G = falpha_jet(F, alpha)
    P0 = system_from_schwarzian(G).P0
    m = min(P0[0][0].order, rep.system.P0[0][0].order)
    assert max(np.abs((a.truncate(m) - b.truncate(m)).coeffs).max()
               for a, b in zip(_flat(P0), _flat(rep.system.P0))) <= 1e-9


def test_generic_multiples_are_not_flat():
    # alpha * P_f is generically not a preSchwarzian: the frame connection
    # picks up curvature (alpha^2 - alpha) [B_i, B_j]
    F = build_germ(random_polynomial(np.random.default_rng(5), 2), [0, 0], order=7)
    rep = check_prescription(preschwarzian(F).scaled(0.5), raise_on_failure=False)
    assert rep.symmetry_ok and rep.exact_ok and rep.u0_residual <= 1e-9
    assert rep.flatness_residual > 1e-3


def test_roper_suffridge_connection_curvature_symbolic():
    z1, z2, a = sp.symbols("z1 z2 alpha")
    f = sp.Function("f")(z1)
    F = [f, z2 * sp.sqrt(sp.diff(f, z1))]
    zs = [z1, z2]
    D = sp.Matrix([[sp.diff(c, z) for z in zs] for c in F])
    Dinv = sp.simplify(D.inv())
    P = [[[sp.simplify(sum(Dinv[k, l] * sp.diff(F[l], zs[i], zs[j]) for l in range(2)))
           for j in range(2)] for i in range(2)] for k in range(2)]
    # gradient rows g satisfy d_i g = g B_i with (B_i)[k, l] = P^k_il
    B = [sp.Matrix(2, 2, lambda k, l: P[k][i][l]) for i in range(2)]

    def curvature(M):
        return sp.simplify(sp.diff(M[0], z2) - sp.diff(M[1], z1) + M[1] * M[0] - M[0] * M[1])

    assert curvature(B) == sp.zeros(2, 2)
    q = sp.diff(f, z1, 2) / sp.diff(f, z1)
    comm = sp.simplify(B[0] * B[1] - B[1] * B[0])
    assert sp.simplify(comm - sp.Matrix([[0, 0], [-q ** 2 / 4, 0]])) == sp.zeros(2, 2)
    assert sp.simplify(curvature([a * b for b in B]) - (a - a ** 2) * comm) == sp.zeros(2, 2)


def test_roper_suffridge_system_has_curvature_numerically():
    F = build_germ(RS, [0, 0], order=7)
    assert flatness_residual(system_from_schwarzian(F)) <= 1e-9
    A = preschwarzian(F).scaled(0.25)
    rep = check_prescription(A, raise_on_failure=False)
    assert rep.flatness_residual > 0.1


# --- system integration ------------------------------------------------------

def test_integrate_constant_field_system():
    rep = check_prescription(field(2, 5, {(0, 1, 1): 2.0}))
    f = integrate_system(rep.system, STANDARD_SEEDS)
    assert f.components[0].to_dict(1e-13) == pytest.approx({(1, 0): 1, (0, 2): 1})
    assert f.components[1].to_dict(1e-13) == pytest.approx({(0, 1): 1})


def test_integrate_zero_system():
    f = integrate_system(zero_system(2, 4), STANDARD_SEEDS)
    assert max_coeff_diff(f, identity_germ(2, 6)) <= 1e-15


def test_bad_seeds():
    with pytest.raises(BadIndex):
        integrate_system(zero_system(2, 4), STANDARD_SEEDS[:2])
    with pytest.raises(DependentSeeds):
        integrate_system(zero_system(2, 4), [(1.0, [0, 0]), (0.0, [1, 0]), (0.0, [2, 0])])
    with pytest.raises(SingularBasepoint):
        integrate_system(zero_system(2, 4), [(0.0, [1, 1]), (1.0, [1, 0]), (0.0, [0, 1])])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_roundtrip(seed):
    F = build_germ(random_polynomial(np.random.default_rng(seed), 2), [0.1, 0.0], order=7)
    u0 = jacobian_solution(F)
    seeds = [(u0.const, [u0.partial(k).const for k in range(2)])]
    for comp in F.components:
        u = comp.truncate(u0.order) * u0
        seeds.append((u.const, [u.partial(k).const for k in range(2)]))
    G = integrate_system(system_from_schwarzian(F), seeds)
    assert max_coeff_diff(G.truncate(6), F.truncate(6)) <= 1e-10


def test_inconsistent_system_raises():
    F = build_germ(RS, [0, 0], order=6)
    with pytest.raises(NotIntegrable) as info:
        falpha_jet(F, 0.25)
    assert info.value.discrepancy > 0.1


def test_closed_forms():
    z1, z2 = Jet.variable(2, 5, 0), Jet.variable(2, 5, 1)
    omega = [2 * z1 * z2, z1 * z1]           # d(z1^2 z2)
    phi = integrate_closed_form(omega, 3.0)
    assert phi.to_dict(1e-14) == pytest.approx({(0, 0): 3, (2, 1): 1})
    assert closedness_residual([z2, z1 * 0]) > 0.5
    with pytest.raises(NotExact):
        integrate_closed_form([z2, z1 * 0])


# --- f_alpha ------------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.3, 1.5 - 0.5j, -1.0])
def test_cayley_product_falpha(alpha):
    F = build_germ(MapSpec.product(CAYLEY, MapSpec.identity(1)), [0, 0], order=5)
    G = falpha_jet(F, alpha)
    c = G.components[0]
    assert c.coef((1, 0)) == pytest.approx(1)
    assert c.coef((2, 0)) == pytest.approx(alpha)
    assert c.coef((3, 0)) == pytest.approx(alpha * (2 * alpha + 1) / 3)
    assert max((abs(v) for e, v in c.to_dict().items() if e[1]), default=0) < 1e-14
    assert G.components[1].to_dict(1e-14) == pytest.approx({(0, 1): 1})


@pytest.mark.parametrize("spec,p", [(RS, [0.1, 0.2]), (MapSpec.polynomial(2, [{(1, 0): 2, (0, 2): 1j},
                                                                             {(0, 1): 1, (1, 1): 1}]), [0, 0])])
def test_alpha_one_gives_normalized_germ(spec, p):
    F = build_germ(spec, p, order=6)
    assert max_coeff_diff(falpha_jet(F, 1.0), normalize(F)) <= 1e-10


def test_alpha_zero():
    F = build_germ(RS, [0, 0], order=6)
    G = falpha_jet(F, 0.0)
    assert max_coeff_diff(G, identity_germ(2, 6)) == 0
    z = np.array([0.3, -0.2j])
    assert np.array_equal(falpha_path(RS, 0.0, z), z)


def test_product_map_oracle():
    alpha = 0.7 + 0.2j
    spec = MapSpec.product(KOEBE, MapSpec.one_variable("royster", mu=-2))
    G = falpha_jet(build_germ(spec, [0, 0], order=8), alpha)
    for l, fam, mu in ((0, "koebe", 0), (1, "royster", -2)):
        want = falpha_oracle(fam, alpha, 8, mu)
        for k in range(9):
            e = (k, 0) if l == 0 else (0, k)
            assert G.components[l].coef(e) == pytest.approx(want[k], abs=1e-10)


def test_falpha_oracle_matches_closed_form():
    # koebe: f' = (1+z)/(1-z)^3; alpha = 1 gives back the Koebe coefficients k
    assert falpha_oracle("koebe", 1.0, 6) == pytest.approx([0, 1, 2, 3, 4, 5, 6])
    # royster mu=-2, alpha=2: f_alpha = ((1-z)^-5 - 1)/5
    z = sp.Symbol("z")
    ser = sp.series(((1 - z) ** -5 - 1) / 5, z, 0, 7).removeO()
    want = [complex(ser.coeff(z, k)) for k in range(7)]
    assert falpha_oracle("royster", 2.0, 6, -2.0) == pytest.approx(want)


@pytest.mark.parametrize("alpha", [0.25, 0.5 + 0.25j, 2.0])
def test_path_agrees_with_jet_on_product_maps(alpha):
    spec = MapSpec.product(KOEBE, MapSpec("exp", {}))
    G = falpha_jet(build_germ(spec, [0, 0], order=30), alpha)
    for z in ([0.3, 0.1j], [-0.2 + 0.2j, 0.35]):
        z = np.array(z)
        ray = falpha_path(spec, alpha, z, tol=1e-12)
        bent = falpha_path(spec, alpha, z, tol=1e-12, via=[0.3j, 0.1])
        assert np.abs(G.eval(z) - ray).max() <= 1e-8
        assert np.abs(bent - ray).max() <= 1e-8


def test_path_dependence_for_roper_suffridge():
    z = np.array([0.3, 0.2j])
    ray = falpha_path(RS, 0.25, z, tol=1e-12)
    bent = falpha_path(RS, 0.25, z, tol=1e-12, via=[z[0], 0])
    assert np.abs(ray - bent).max() > 1e-4


def test_roper_suffridge_structure():
    alpha = 0.5 + 0.25j
    F = build_germ(RS, [0, 0], order=7)
    G, disc = falpha_jet_with_discrepancy(F, alpha, strict=False)
    assert disc > 0.1
    want = falpha_oracle("koebe", alpha, 7)
    for e, c in G.components[0].to_dict().items():
        assert c == pytest.approx(want[e[0]] if e[1] == 0 else 0, abs=1e-10)
    # the z2-free part of the second component is forced to vanish by the
    # d1 d1 equation, so it cannot carry the nonzero forcing term
    assert not [e for e in G.components[1].to_dict() if e[1] == 0]


@settings(max_examples=10, deadline=None)
@given(st.complex_numbers(max_magnitude=1.5, allow_nan=False),
       st.complex_numbers(max_magnitude=1.5, allow_nan=False))
def test_semigroup_on_product_maps(alpha, beta):
    F = build_germ(MapSpec.product(CAYLEY, MapSpec.one_variable("royster", mu=0.5)), [0, 0], order=6)
    lhs = falpha_jet(falpha_jet(F, alpha), beta)
    rhs = falpha_jet(F, alpha * beta)
    assert max_coeff_diff(lhs, rhs) <= 1e-10
