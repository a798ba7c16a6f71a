"""Sampled geometry on the unit ball: convexity margins, injectivity scans,
the norm order of the linearly invariant family generated by a map, and the
univalence-radius inequality for ``f_alpha``.

All sampling is deterministic: points come from a scrambled Halton
sequence seeded by ``SampleConfig.seed``, so the first ``k`` samples of a
larger draw are exactly the samples of a smaller one.  Nothing here proves
anything; a passing scan is evidence only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import DomainError, NoConvergence, NotLocallyBiholomorphic
from .maps import MapSpec, ball_automorphism, build_germ
from .prescribe import falpha_path, preschwarzian_at


@dataclass(frozen=True)
class SampleConfig:
    seed: int = 0
    count: int = 200
    radius: float = 0.8
    pair_separation: float = 0.3
    tolerance: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.radius < 1.0):
            raise ValueError("radius must lie in (0, 1)")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.pair_separation <= 0:
            raise ValueError("pair_separation must be positive")


# ---------------------------------------------------------------------------
# deterministic streams

_STREAM_POINTS, _STREAM_DIRECTIONS, _STREAM_AUTOMORPHISMS = 0, 1, 2


def _halton(dim: int, count: int, seed: int, stream: int) -> np.ndarray:
    sampler = qmc.Halton(d=dim, scramble=True, seed=np.random.default_rng([seed, stream]))
    return sampler.random(count)


def ball_points(n: int, count: int, radius: float, seed: int, stream: int = _STREAM_POINTS):
    """``count`` points of the complex ball of the given radius in C^n."""
    u = _halton(2 * n + 1, count, seed, stream)
    g = ndtri(np.clip(u[:, :2 * n], 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * u[:, 2 * n] ** (1.0 / (2 * n))
    pts = (g[:, :n] + 1j * g[:, n:]) * r[:, None]
    return pts


def unit_vectors(n: int, count: int, seed: int, stream: int = _STREAM_DIRECTIONS):
    u = _halton(2 * n, count, seed, stream)
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, :n] + 1j * g[:, n:]


def unit_grid(n: int, resolution: int = 24) -> np.ndarray:
    """Deterministic grid of unit vectors, one per complex line up to phase."""
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    if n == 2:
        th = np.linspace(0.0, np.pi / 2, resolution // 2 + 1)
        ph = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
        T, Ph = np.meshgrid(th, ph, indexing="ij")
        vecs = np.stack([np.cos(T).ravel(), (np.sin(T) * np.exp(1j * Ph)).ravel()], axis=1)
        return vecs
    return unit_vectors(n, resolution * resolution, seed=0, stream=99)


def _inner(a, z):
    """Hermitian product <a, z> = sum a_k conj(z_k)."""
    return np.sum(a * np.conj(z), axis=-1)


# ---------------------------------------------------------------------------
# convexity


def tangential(u: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Unit vector obtained from ``u`` by removing the real part of <u, z>."""
    r2 = float(np.vdot(z, z).real)
    if r2 == 0.0:
        return u
    u = u - (_inner(u, z).real / r2) * z
    return u / np.linalg.norm(u)


def convexity_margins(spec, alpha, cfg: SampleConfig, tangent: bool = True) -> np.ndarray:
    """Per-sample ``1 - Re <P_g(z)(u, u), z>`` with ``P_g = alpha * P_f``
    (``alpha=None`` means ``g = f``).

    Kikuchi's criterion quantifies over unit ``u`` with ``Re <z, u> = 0``;
    ``tangent=False`` drops that constraint (then even the half-plane map
    ``z/(1-z)`` of the disk scores negative).
    """
    spec = MapSpec.from_json(spec)
    n = spec.dimension
    zs = ball_points(n, cfg.count, cfg.radius, cfg.seed)
    us = unit_vectors(n, cfg.count, cfg.seed)
    a = 1.0 if alpha is None else complex(alpha)
    out = np.empty(cfg.count)
    for s, (z, u) in enumerate(zip(zs, us)):
        if tangent:
            u = tangential(u, z)
        P = preschwarzian_at(spec, z)
        Puu = np.einsum("kij,i,j->k", P, u, u)
        out[s] = 1.0 - (a * _inner(Puu, z)).real
    return out


def convexity_margin(spec, alpha, cfg: SampleConfig, tangent: bool = True) -> float:
    return float(convexity_margins(spec, alpha, cfg, tangent).min())


# ---------------------------------------------------------------------------
# injectivity


@dataclass
class InjectivityResult:
    passed: bool
    pairs_checked: int
    witness: tuple | None = None          # (z, w)
    images: tuple | None = None           # (f(z), f(w))
    gap: float | None = None              # ||f(z) - f(w)||
    refined: int = 0
    closest_ratio: float = field(default=float("inf"))


def _newton_preimage(spec, alpha, target, w, path_tol, iters=30, avoid=None, radius=0.0):
    """Solve ``f_alpha(w) = target`` by Newton from ``w``.

    Gives up (returns the best iterate so far) once the residual stops
    shrinking for three steps, and returns None if ``w`` leaves the ball or
    falls within ``radius`` of ``avoid`` (the trivial preimage).
    """
    best, stalls = None, 0
    for _ in range(iters):
        if np.linalg.norm(w) >= 1.0:
            return None
        if avoid is not None and np.linalg.norm(w - avoid) < radius:
            return None
        try:
            val, V = falpha_path(spec, alpha, w, tol=path_tol, with_differential=True)
        except (DomainError, NoConvergence, NotLocallyBiholomorphic):
            return None
        res = val - target
        nres = float(np.linalg.norm(res))
        if best is None or nres < 0.5 * best[1]:
            stalls = 0
        else:
            stalls += 1
        if best is None or nres < best[1]:
            best = (w.copy(), nres)
        if nres <= 10 * path_tol * max(1.0, np.linalg.norm(target)) or stalls >= 3:
            break
        try:
            w = w - np.linalg.solve(V, res)
        except np.linalg.LinAlgError:
            break
    return best


def injectivity_scan(spec, alpha, cfg: SampleConfig, path_tol: float = 1e-10,
                     refine: int = 24) -> InjectivityResult:
    """Look for ``z != w`` with ``||f_alpha(z) - f_alpha(w)|| <= cfg.tolerance``.

    Every pair of sample points at distance ``>= pair_separation`` is
    tested; ``cfg.count`` is the pair budget.  The ``refine`` pairs with the
    smallest ``||df|| / ||dz||`` ratio are then polished by Newton's method on
    ``f_alpha(w) = f_alpha(z)`` with ``z`` fixed.  A witness is re-evaluated
    from scratch before it is returned.
    """
    spec = MapSpec.from_json(spec)
    n = spec.dimension
    m = 2
    while m * (m - 1) // 2 < cfg.count:
        m += 1
    zs = ball_points(n, m, cfg.radius, cfg.seed)
    vals = np.array([falpha_path(spec, alpha, z, tol=path_tol) for z in zs])
    iu, ju = np.triu_indices(m, k=1)
    dz = np.linalg.norm(zs[iu] - zs[ju], axis=1)
    df = np.linalg.norm(vals[iu] - vals[ju], axis=1)
    ok = dz >= cfg.pair_separation
    checked = int(ok.sum())
    result = InjectivityResult(True, checked)
    if not ok.any():
        return result
    ratio = np.where(ok, df / np.maximum(dz, 1e-300), np.inf)
    result.closest_ratio = float(ratio.min())
    hits = np.nonzero(ok & (df <= cfg.tolerance))[0]
    candidates = [(int(h), None) for h in hits]
    order = np.argsort(ratio, kind="stable")[:refine]
    candidates += [(int(c), "refine") for c in order if ok[c]]
    for c, mode in candidates:
        i, j = iu[c], ju[c]
        if mode == "refine":
            result.refined += 1
            # polish either end of the pair, keeping the other fixed
            tries = [(i, j), (j, i)]
        else:
            tries = [(i, j)]
        for a, b in tries:
            z, w = zs[a], zs[b]
            if mode == "refine":
                polished = _newton_preimage(spec, alpha, vals[a], w.copy(), path_tol,
                                            avoid=z, radius=0.5 * cfg.pair_separation)
                if polished is None:
                    continue
                w = polished[0]
            if np.linalg.norm(z - w) >= cfg.pair_separation and np.linalg.norm(w) < 1.0:
                break
        else:
            continue
        fz = falpha_path(spec, alpha, z, tol=path_tol)
        fw = falpha_path(spec, alpha, w, tol=path_tol)
        gap = float(np.linalg.norm(fz - fw))
        if gap <= cfg.tolerance:
            result.passed = False
            result.witness = (z, w)
            result.images = (fz, fw)
            result.gap = gap
            return result
    return result


# ---------------------------------------------------------------------------
# linearly invariant family order


@dataclass
class LIFEstimate:
    beta_hat: float
    witness: np.ndarray            # automorphism parameter attaining beta_hat
    witness_vectors: tuple         # (u, v)
    samples: int
    history: np.ndarray            # running maximum after each sample


def automorphism_parameters(n: int, cfg: SampleConfig) -> np.ndarray:
    """The origin followed by ``count - 1`` Halton points of radius <= cfg.radius."""
    pts = ball_points(n, max(cfg.count - 1, 0), cfg.radius, cfg.seed, _STREAM_AUTOMORPHISMS)
    return np.vstack([np.zeros((1, n), dtype=complex), pts])[:cfg.count]


def koebe_transform_second_derivative(spec, a) -> np.ndarray:
    """``D^2 g(0)`` as ``[k, i, j]`` for
    ``g = Dphi(0)^-1 Df(a)^-1 (f(phi(z)) - f(a))``, ``phi`` the ball
    automorphism with ``phi(0) = a``, computed by jet composition."""
    spec = MapSpec.from_json(spec)
    n = spec.dimension
    a = np.asarray(a, dtype=complex)
    phi = build_germ(ball_automorphism(a), np.zeros(n), order=2)
    f = build_germ(spec, phi.value, order=2)
    h = f.compose(phi)
    Dphi = phi.differential_at_base()
    Df = f.differential_at_base()
    L = np.linalg.inv(Df @ Dphi)
    H = h.second_derivatives_at_base()
    return np.einsum("kl,lij->kij", L, H)


def bilinear_norm(D2: np.ndarray, grid: np.ndarray):
    """max over grid pairs of ||D2(u, v)||; returns (value, u, v)."""
    left = np.einsum("kij,ai->akj", D2, grid)
    vals = left @ grid.T                       # [a, k, b]
    norms = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
    a, b = np.unravel_index(int(np.argmax(norms)), norms.shape)
    return float(norms[a, b]), grid[a], grid[b]


def norm_order_estimate(spec, cfg: SampleConfig, resolution: int = 24) -> LIFEstimate:
    spec = MapSpec.from_json(spec)
    n = spec.dimension
    grid = unit_grid(n, resolution)
    params = automorphism_parameters(n, cfg)
    best, wit, vecs = -1.0, None, None
    history = np.empty(len(params))
    for s, a in enumerate(params):
        val, u, v = bilinear_norm(koebe_transform_second_derivative(spec, a), grid)
        if val > best:
            best, wit, vecs = val, a, (u, v)
        history[s] = best
    return LIFEstimate(best, wit, vecs, len(params), history)


def becker_quantity(spec, alpha, zeta) -> float:
    """``||(1 - |zeta|^2) alpha P_f(zeta)(zeta, .) + alpha |zeta|^2 Id||``."""
    zeta = np.asarray(zeta, dtype=complex)
    n = zeta.size
    P = preschwarzian_at(spec, zeta)
    r2 = float(np.vdot(zeta, zeta).real)
    M = complex(alpha) * ((1 - r2) * np.einsum("kil,i->kl", P, zeta) + r2 * np.eye(n))
    return float(np.linalg.norm(M, 2))


def becker_bound_margin(spec, alpha, beta: float, cfg: SampleConfig) -> float:
    """max over sampled zeta of the quantity above minus ``|alpha|(2 beta + 1)``.
    Samples are the automorphism parameters used by :func:`norm_order_estimate`."""
    spec = MapSpec.from_json(spec)
    n = spec.dimension
    bound = abs(complex(alpha)) * (2 * beta + 1)
    return max(becker_quantity(spec, alpha, z) for z in automorphism_parameters(n, cfg)) - bound
