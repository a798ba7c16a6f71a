import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from preschwarz import _kernels_py
from preschwarz.errors import BadIndex, BranchError, IncompatibleJets
from preschwarz.jets import Jet, compose, count, embed, layout, monomials


def J(n, m, terms):
    return Jet.from_dict(n, m, terms)


# --- worked examples -------------------------------------------------------

def test_difference_of_squares():
    z = Jet.variable(1, 2, 0)
    assert ((1 + z) * (1 - z)).allclose(J(1, 2, {(0,): 1, (2,): -1}))


def test_product_truncated_away():
    z1, z2 = Jet.variable(2, 1, 0), Jet.variable(2, 1, 1)
    assert (z1 * z2).max_abs() == 0


def test_square_of_linear_form():
    z1, z2 = Jet.variable(2, 2, 0), Jet.variable(2, 2, 1)
    got = (1 + z1 + z2) ** 2
    want = J(2, 2, {(0, 0): 1, (1, 0): 2, (0, 1): 2, (2, 0): 1, (1, 1): 2, (0, 2): 1})
    assert got.allclose(want)


def test_compose_examples():
    w = Jet.variable(1, 2, 0)
    z1, z2 = Jet.variable(2, 2, 0), Jet.variable(2, 2, 1)
    assert compose(w * w, [z1 + z2]).allclose(J(2, 2, {(2, 0): 1, (1, 1): 2, (0, 2): 1}))

    geo = (1 - Jet.variable(1, 3, 0)).reciprocal()
    assert compose(geo, [Jet.variable(1, 3, 0)]).allclose(J(1, 3, {(k,): 1 for k in range(4)}))

    inner = J(1, 3, {(1,): 2.0, (2,): 0.5j, (3,): -1})
    assert compose(Jet.variable(1, 3, 0), [inner]).allclose(inner)


def test_partials_and_antiderivative():
    z = J(2, 3, {(2, 1): 1})
    assert z.partial(0).allclose(J(2, 2, {(1, 1): 2}))
    assert J(2, 3, {(2, 0): 1}).partial(1).max_abs() == 0
    assert J(2, 2, {(1, 1): 2}).antiderivative(0).allclose(J(2, 3, {(2, 1): 1}))


def test_elementary_functions():
    assert Jet.constant(2, 3, 0).exp().allclose(Jet.constant(2, 3, 1))
    z = Jet.variable(1, 2, 0)
    assert (1 - z).pow(-2).allclose(J(1, 2, {(0,): 1, (1,): 2, (2,): 3}))
    s = Jet.variable(2, 5, 0) + Jet.variable(2, 5, 1)
    assert s.exp().log().allclose(s)


def test_evaluation():
    assert (1 + Jet.variable(1, 1, 0)).eval([0.5]) == pytest.approx(1.5)
    assert (Jet.variable(2, 2, 0) * Jet.variable(2, 2, 1)).eval([2, 3]) == pytest.approx(6)
    geo = (1 - Jet.variable(1, 3, 0)).reciprocal()
    assert geo.eval([0.1]) == pytest.approx(1.111)


# --- errors ----------------------------------------------------------------

def test_mismatched_shapes_rejected():
    with pytest.raises(IncompatibleJets):
        Jet.variable(2, 3, 0) + Jet.variable(2, 2, 0)
    with pytest.raises(IncompatibleJets):
        Jet.variable(2, 3, 0) * Jet.variable(1, 3, 0)


def test_bad_index_and_branch():
    with pytest.raises(BadIndex):
        Jet.variable(2, 3, 2)
    with pytest.raises(BadIndex):
        Jet.variable(2, 3, 0).partial(5)
    with pytest.raises(BranchError):
        Jet.variable(1, 3, 0).log()
    with pytest.raises(BranchError):
        Jet.variable(1, 3, 0).reciprocal()


def test_layout_sizes():
    for n in (1, 2, 3):
        for m in range(6):
            assert count(n, m) == math.comb(n + m, n) == len(monomials(n, m))
    lay = layout(2, 3)
    assert lay.monomials[:4] == ((0, 0), (1, 0), (0, 1), (2, 0))


def test_embed():
    z = Jet.variable(1, 3, 0)
    e = embed(z * z, 3, [2])
    assert e.coef((0, 0, 2)) == 1 and e.max_abs() == 1


# --- properties ------------------------------------------------------------

coef = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


@st.composite
def jet_pair(draw, k=2):
    n = draw(st.integers(1, 3))
    m = draw(st.integers(0, 5))
    size = count(n, m)
    out = []
    for _ in range(k):
        cs = draw(st.lists(coef, min_size=size, max_size=size))
        out.append(Jet(n, m, np.array(cs, dtype=complex)))
    return out


def close(a, b, tol=1e-9):
    return np.abs(a.coeffs - b.coeffs).max(initial=0.0) <= tol * max(1.0, np.abs(a.coeffs).max(initial=0.0))


@settings(max_examples=60, deadline=None)
@given(jet_pair(3))
def test_ring_axioms(js):
    a, b, c = js
    assert close(a * b, b * a)
    assert close((a * b) * c, a * (b * c), 1e-8)
    assert close(a * (b + c), a * b + a * c)
    assert close(a - a, Jet(a.nvars, a.order))


@settings(max_examples=60, deadline=None)
@given(jet_pair(2), st.integers(0, 5))
def test_truncation_is_a_homomorphism(js, k):
    a, b = js
    k = min(k, a.order)
    assert close((a * b).truncate(k), a.truncate(k) * b.truncate(k))


@settings(max_examples=40, deadline=None)
@given(jet_pair(1))
def test_exp_log_roundtrip(js):
    (a,) = js
    a = Jet(a.nvars, a.order, np.where(np.arange(a.coeffs.size) == 0, 0.3, a.coeffs * 0.3))
    assert close(a.exp().log(), a, 1e-8)


@settings(max_examples=40, deadline=None)
@given(jet_pair(1), coef, coef)
def test_power_law(js, lam, mu):
    (a,) = js
    a = Jet(a.nvars, a.order, np.where(np.arange(a.coeffs.size) == 0, 1.0, a.coeffs * 0.3))
    assert close(a.pow(lam) * a.pow(mu), a.pow(lam + mu), 1e-7)


@settings(max_examples=40, deadline=None)
@given(jet_pair(1))
def test_partial_undoes_antiderivative(js):
    (a,) = js
    for i in range(a.nvars):
        assert close(a.antiderivative(i).partial(i), a)


@settings(max_examples=40, deadline=None)
@given(jet_pair(2))
def test_leibniz_rule(js):
    a, b = js
    if a.order == 0:
        return
    for i in range(a.nvars):
        lhs = (a * b).partial(i)
        rhs = a.partial(i) * b.truncate(a.order - 1) + a.truncate(a.order - 1) * b.partial(i)
        assert close(lhs, rhs, 1e-8)


@settings(max_examples=30, deadline=None)
@given(jet_pair(1), st.lists(st.complex_numbers(max_magnitude=0.3, allow_nan=False), min_size=3, max_size=3))
def test_shift_matches_evaluation(js, center):
    (a,) = js
    c = np.array(center[:a.nvars])
    # a polynomial recentred at c, evaluated at 0, is a(c)
    assert abs(a.shift(c).const - a.eval(c)) <= 1e-9 * max(1.0, np.abs(a.coeffs).sum())


# --- backends --------------------------------------------------------------

def test_backend_parity():
    kernels = pytest.importorskip("preschwarz._kernels")
    rng = np.random.default_rng(0)
    lay = layout(3, 6)
    ia, ib, ic = lay.mul_a, lay.mul_b, lay.mul_c
    a = rng.standard_normal(lay.size) + 1j * rng.standard_normal(lay.size)
    b = rng.standard_normal(lay.size) + 1j * rng.standard_normal(lay.size)
    fast = kernels.series_mul(a, b, ia, ib, ic, lay.size)
    slow = _kernels_py.series_mul(a, b, ia, ib, ic, lay.size)
    assert np.allclose(fast, slow, rtol=0, atol=1e-12)


def test_pure_python_backend_selected_by_environment():
    code = ("from preschwarz import _backend; from preschwarz.jets import Jet;"
            "z=Jet.variable(2,3,0); print(_backend.BACKEND, ((1+z)**2).coef((1,0)))")
    env = dict(os.environ, PRESCHWARZ_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out[0] == "python"
    assert complex(out[1]) == 2
