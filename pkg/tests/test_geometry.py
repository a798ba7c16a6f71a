import cmath
import math

import numpy as np
import pytest

from preschwarz.geometry import (SampleConfig, _newton_preimage, automorphism_parameters,
                                 ball_points, becker_bound_margin, becker_quantity,
                                 bilinear_norm, convexity_margin, convexity_margins,
                                 injectivity_scan, koebe_transform_second_derivative,
                                 norm_order_estimate, unit_grid, unit_vectors)
from preschwarz.prescribe import falpha_path
from preschwarz.maps import MapSpec
from preschwarz.suites import ROYSTER_POINTS, convex_mobius, royster_product

CAYLEY = MapSpec("cayley", {})
RS = MapSpec.roper_suffridge(MapSpec("koebe", {}))


def test_streams_are_deterministic_prefixes():
    a = ball_points(2, 50, 0.7, seed=3)
    b = ball_points(2, 20, 0.7, seed=3)
    assert np.array_equal(a[:20], b)
    assert np.all(np.linalg.norm(a, axis=1) < 0.7)
    assert not np.array_equal(a, ball_points(2, 50, 0.7, seed=4))
    u = unit_vectors(3, 30, seed=1)
    assert np.allclose(np.linalg.norm(u, axis=1), 1)


def test_sample_config_validation():
    with pytest.raises(ValueError):
        SampleConfig(radius=1.0)
    with pytest.raises(ValueError):
        SampleConfig(count=0)


# --- convexity -----------------------------------------------------------------

def test_identity_margin_is_one():
    cfg = SampleConfig(seed=1, count=50)
    assert np.all(convexity_margins(MapSpec.identity(2), 1.0, cfg) == 1.0)
    assert np.all(convexity_margins(RS, 0.0, cfg) == 1.0)


@pytest.mark.parametrize("alpha", [1.0, 0.5 + 0.5j])
def test_disk_margin_is_the_classical_expression(alpha):
    cfg = SampleConfig(seed=2, count=60, radius=0.9)
    got = convexity_margins(CAYLEY, alpha, cfg)
    zs = ball_points(1, 60, 0.9, seed=2)[:, 0]
    # tangential u in one variable: margin = 1 + Re(alpha z f''/f')
    want = 1 + (alpha * zs * 2 / (1 - zs)).real
    assert np.allclose(got, want, atol=1e-12)


def test_literal_form_fails_for_a_convex_disk_map():
    cfg = SampleConfig(seed=2, count=200, radius=0.8)
    assert convexity_margin(CAYLEY, 1.0, cfg) > 0
    assert convexity_margin(CAYLEY, 1.0, cfg, tangent=False) < 0


def test_convex_mobius_margins_positive():
    cfg = SampleConfig(seed=5, count=150, radius=0.8)
    margins = [convexity_margin(convex_mobius(), a, cfg) for a in (0, 0.25, 0.5, 0.75, 1)]
    assert margins[0] == 1.0
    assert all(m > 0 for m in margins)
    assert margins == sorted(margins, reverse=True)


# --- injectivity ---------------------------------------------------------------

def test_identity_scan_passes():
    res = injectivity_scan(MapSpec.identity(2), 0.7, SampleConfig(seed=0, count=300))
    assert res.passed and res.pairs_checked > 0
    assert res.closest_ratio == pytest.approx(1.0)


def test_royster_closed_form_collision():
    spec = royster_product(-2.0)
    vals = [falpha_path(spec, 2.0, np.array([z, 0]), tol=1e-12) for z in ROYSTER_POINTS]
    assert abs(ROYSTER_POINTS[0] - ROYSTER_POINTS[1]) > 0.3
    assert np.abs(vals[0] - vals[1]).max() <= 1e-9
    want = ((1 - ROYSTER_POINTS[0]) ** -5 - 1) / 5
    assert vals[0][0] == pytest.approx(want, abs=1e-9)


def test_newton_finds_the_second_preimage():
    spec = royster_product(-2.0)
    z = np.array([0.5 + 0.3j, 0.1])
    target = falpha_path(spec, 2.0, z, tol=1e-10)
    guess = np.array([1 - (1 - z[0]) * cmath.exp(2j * math.pi / 5) + 0.05, 0.12])
    w, res = _newton_preimage(spec, 2.0, target, guess, 1e-10)
    assert res <= 1e-8 and np.linalg.norm(w - z) > 0.3
    assert w[0] == pytest.approx(1 - (1 - z[0]) * cmath.exp(2j * math.pi / 5), abs=1e-8)


# --- norm order ------------------------------------------------------------------

def _automorphism_oracle(a, u, v):
    """D(phi)(0)^-1 D^2(phi)(0)(u, v) for phi(z) = (a + P z + s Q z)/(1 + <z, a>)."""
    r2 = np.vdot(a, a).real
    P = np.outer(a, a.conj()) / r2
    L = P + math.sqrt(1 - r2) * (np.eye(a.size) - P)
    ip = lambda x: np.sum(x * a.conj())
    D2 = -(L @ u) * ip(v) - (L @ v) * ip(u) + 2 * a * ip(u) * ip(v)
    D1 = L - np.outer(a, a.conj())
    return np.linalg.solve(D1, D2)


def test_identity_contributions():
    grid = unit_grid(2, 12)
    assert bilinear_norm(koebe_transform_second_derivative(MapSpec.identity(2), np.zeros(2)), grid)[0] == 0
    a = np.array([0.3, 0.2j])
    T = koebe_transform_second_derivative(MapSpec.identity(2), a)
    rng = np.random.default_rng(0)
    for _ in range(5):
        u, v = rng.standard_normal(2) + 1j * rng.standard_normal(2), rng.standard_normal(2)
        assert np.allclose(np.einsum("kij,i,j->k", T, u, v), _automorphism_oracle(a, u, v), atol=1e-12)


def test_beta_invariant_under_affine_postcomposition():
    cfg = SampleConfig(seed=4, count=15, radius=0.7)
    b1 = norm_order_estimate(RS, cfg, resolution=12)
    spec = MapSpec.affine(RS, [[2, 1j], [0.5, 1]], [1, -1])
    b2 = norm_order_estimate(spec, cfg, resolution=12)
    assert b1.beta_hat == pytest.approx(b2.beta_hat, rel=1e-10)
    assert np.all(np.diff(b1.history) >= 0)
    assert automorphism_parameters(2, cfg)[0].tolist() == [0, 0]


def test_becker_identity_and_zero_alpha():
    cfg = SampleConfig(seed=1, count=40)
    assert becker_quantity(RS, 0.3, np.zeros(2)) == 0
    assert becker_bound_margin(RS, 0.0, 1.0, cfg) <= 0
    beta = norm_order_estimate(MapSpec.identity(2), cfg, resolution=12).beta_hat
    for alpha in (0.2, 1.0, 0.5j):
        assert becker_bound_margin(MapSpec.identity(2), alpha, beta, cfg) <= 0
