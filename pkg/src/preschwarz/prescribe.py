"""Prescribing the preSchwarzian.

Given a symmetric bilinear field ``A``, decide whether ``A = P_f`` for some
locally biholomorphic ``f`` and reconstruct ``f``.  The reconstruction
solves the overdetermined linear system

    d_i d_j u = sum_k P^k_ij d_k u + P^0_ij u

degree by degree: every Taylor coefficient of ``u`` of degree ``d`` is read
off the degree ``d - 2`` part of each equation it appears in, and all these
readings must agree.  Disagreement means the system is not integrable and
is reported loudly (:class:`NotIntegrable`).

The ``f -> f_alpha`` transform is built the same way from ``alpha * P_f``
(:func:`falpha_jet`) and, independently, by integrating ``Df_alpha`` along
straight paths (:func:`falpha_path`).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (BadIndex, DomainError, IncompatibleJets, NoConvergence,
                     NotExact, NotIntegrable, SingularBasepoint,
                     SymmetryViolation, DependentSeeds)
from .jets import Jet, layout
from .maps import JetMap, MapSpec, build_germ
from .operators import (THIRD_ORDER_TOL, BilinearField, SystemCoefficients,
                        _flat, companion_tensor, preschwarzian,
                        relative_residual, solution_residual)

# ---------------------------------------------------------------------------
# degree-by-degree solvers


@functools.lru_cache(maxsize=None)
def _hessian_slots(n: int, d: int):
    """For every monomial of degree ``d``: the (pair, lower monomial, factor)
    triples with ``d_i d_j z^e = factor * z^lower``, ``i <= j``.

    Returns flat arrays (mono, pair, lower, factor) with monomial and lower
    indices relative to the start of their degree block.
    """
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    hi = layout(n, d)
    lo = layout(n, d - 2)
    base_hi, base_lo = hi.starts[d], lo.starts[d - 2]
    mono, pair, lower, fac = [], [], [], []
    for e in hi.monomials[base_hi:]:
        for p, (i, j) in enumerate(pairs):
            low = list(e)
            low[i] -= 1
            low[j] -= 1
            if min(low) < 0:
                continue
            f = e[i] * (e[j] - (1 if i == j else 0))
            mono.append(hi.index[e] - base_hi)
            pair.append(p)
            lower.append(lo.index[tuple(low)] - base_lo)
            fac.append(f)
    return (np.array(mono), np.array(pair), np.array(lower), np.array(fac, float), pairs)


def solve_second_order(P, P0, value: complex, gradient, order: int,
                       tol: float = 1e-10, strict: bool = True):
    """Jet of the solution ``u`` with ``u(p) = value``, ``grad u(p) = gradient``.

    ``P[k][i][j]`` and ``P0[i][j]`` (or ``None`` for a zero term) must be
    known to order ``order - 2``.  Returns ``(u, discrepancy)`` where
    ``discrepancy`` is the largest relative disagreement between competing
    determinations of one coefficient.
    """
    n = len(P)
    gradient = np.asarray(gradient, dtype=complex)
    if gradient.shape != (n,):
        raise BadIndex("seed gradient has the wrong length")
    lay = layout(n, order)
    u = np.zeros(lay.size, dtype=complex)
    u[0] = value
    if order >= 1:
        u[1:1 + n] = gradient
    worst = 0.0
    for d in range(2, order + 1):
        q = d - 2
        U = Jet(n, q + 1, u[:layout(n, q + 1).size])
        grads = [U.partial(k) for k in range(n)]          # order q
        Uq = U.truncate(q)
        mono, pair, lower, fac, pairs = _hessian_slots(n, d)
        lo_start, lo_end = layout(n, q).starts[q], layout(n, q).starts[q + 1]
        R = np.empty((len(pairs), lo_end - lo_start), dtype=complex)
        for p, (i, j) in enumerate(pairs):
            acc = Jet(n, q)
            for k in range(n):
                coef = P[k][i][j]
                if np.any(coef.coeffs[:layout(n, q).size]):
                    acc = acc + coef.truncate(q) * grads[k]
            if P0 is not None:
                acc = acc + P0[i][j].truncate(q) * Uq
            R[p] = acc.coeffs[lo_start:lo_end]
        cand = R[pair, lower] / fac
        nmono = lay.starts[d + 1] - lay.starts[d]
        total = np.zeros(nmono, dtype=complex)
        counts = np.zeros(nmono)
        np.add.at(total, mono, cand)
        np.add.at(counts, mono, 1.0)
        mean = total / counts
        spread = np.abs(cand - mean[mono])
        scale = max(1.0, float(np.abs(mean).max(initial=0.0)))
        disc = float(spread.max(initial=0.0)) / scale
        worst = max(worst, disc)
        if strict and disc > tol:
            raise NotIntegrable(
                f"overdetermined coefficients disagree at degree {d} "
                f"(relative discrepancy {disc:.3e})", discrepancy=disc)
        u[lay.starts[d]:lay.starts[d + 1]] = mean
    return Jet(n, order, u), worst


def integrate_closed_form(omega: Sequence[Jet], value: complex = 0.0,
                          tol: float = 1e-10) -> Jet:
    """Potential ``phi`` with ``d phi = sum_j omega_j dz_j`` and
    ``phi(p) = value``; order one more than the form.  Raises NotExact if the
    form is not closed."""
    n = len(omega)
    q = omega[0].order
    lay = layout(n, q + 1)
    phi = np.zeros(lay.size, dtype=complex)
    phi[0] = value
    low = layout(n, q)
    worst = 0.0
    for d in range(1, q + 2):
        for e in lay.monomials[lay.starts[d]:lay.starts[d + 1]]:
            vals = []
            for j in range(n):
                if e[j]:
                    lower = list(e)
                    lower[j] -= 1
                    vals.append(omega[j].coeffs[low.index[tuple(lower)]] / e[j])
            mean = sum(vals) / len(vals)
            phi[lay.index[e]] = mean
            dev = max(abs(v - mean) for v in vals)
            worst = max(worst, dev)
    scale = max([1.0] + [w.max_abs() for w in omega])
    if worst / scale > tol:
        raise NotExact(f"one-form is not closed (relative discrepancy {worst / scale:.3e})")
    return Jet(n, q + 1, phi)


def closedness_residual(omega: Sequence[Jet]) -> float:
    n = len(omega)
    diffs = [omega[j].partial(l) - omega[l].partial(j)
             for j in range(n) for l in range(j + 1, n)]
    return relative_residual(diffs, omega)


# ---------------------------------------------------------------------------
# flat connection of the frame system


@dataclass(frozen=True)
class FlatConnection:
    """``d_i U = Gamma[i] U`` for the frame ``U = (u, d_1 u, ..., d_n u)``."""

    Gamma: tuple  # Gamma[i][a][b] : Jet, a, b in 0..n

    @classmethod
    def from_system(cls, system: SystemCoefficients) -> "FlatConnection":
        n, m = system.n, system.order
        zero = Jet(n, m)
        one = Jet.constant(n, m, 1.0)
        gammas = []
        for i in range(n):
            rows = [tuple([zero] + [one if j == i else zero for j in range(n)])]
            for j in range(n):
                rows.append(tuple([system.P0[i][j].truncate(m)] +
                                  [system.P[k][i][j].truncate(m) for k in range(n)]))
            gammas.append(tuple(rows))
        return cls(tuple(gammas))

    @property
    def n(self) -> int:
        return len(self.Gamma)

    def curvature(self, i: int, j: int) -> list[list[Jet]]:
        """``d_j Gamma_i - d_i Gamma_j + Gamma_i Gamma_j - Gamma_j Gamma_i``."""
        G = self.Gamma
        size = self.n + 1
        m = G[0][0][0].order - 1
        out = []
        for a in range(size):
            row = []
            for b in range(size):
                acc = G[i][a][b].partial(j) - G[j][a][b].partial(i)
                for c in range(size):
                    x, y = G[i][a][c].truncate(m), G[j][c][b].truncate(m)
                    if np.any(x.coeffs) and np.any(y.coeffs):
                        acc = acc + x * y
                    x, y = G[j][a][c].truncate(m), G[i][c][b].truncate(m)
                    if np.any(x.coeffs) and np.any(y.coeffs):
                        acc = acc - x * y
                row.append(acc)
            out.append(row)
        return out

    def curvature_residual(self) -> float:
        n = self.n
        diffs = []
        for i in range(n):
            for j in range(i + 1, n):
                diffs.extend(_flat(self.curvature(i, j)))
        return relative_residual(diffs, _flat(self.Gamma))


def flatness_residual(system: SystemCoefficients) -> float:
    return FlatConnection.from_system(system).curvature_residual()


# ---------------------------------------------------------------------------
# prescription


@dataclass(frozen=True)
class PrescriptionReport:
    symmetry_residual: float
    closedness_residual: float
    trace_potential: Jet | None
    system: SystemCoefficients | None
    flatness_residual: float
    u0_residual: float
    tolerance: float

    @property
    def symmetry_ok(self) -> bool:
        return self.symmetry_residual <= self.tolerance

    @property
    def exact_ok(self) -> bool:
        return self.closedness_residual <= self.tolerance

    @property
    def flat_ok(self) -> bool:
        return self.flatness_residual <= self.tolerance

    @property
    def prescribable(self) -> bool:
        return (self.symmetry_ok and self.exact_ok and self.flat_ok
                and self.u0_residual <= self.tolerance)


def canonical_part(A: BilinearField, omega: Sequence[Jet] | None = None) -> tuple:
    """``a^k_ij - (delta^k_i tr A(e_j) + delta^k_j tr A(e_i)) / (n+1)``."""
    n = A.n
    omega = A.trace_form() if omega is None else omega
    c = 1.0 / (n + 1)
    out = []
    for k in range(n):
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                x = A[k, i, j]
                if k == i:
                    x = x - omega[j] * c
                if k == j:
                    x = x - omega[i] * c
                row.append(x)
            rows.append(tuple(row))
        out.append(tuple(rows))
    return tuple(out)


def check_prescription(A: BilinearField, tol: float = THIRD_ORDER_TOL,
                       raise_on_failure: bool = True) -> PrescriptionReport:
    """Test the three prescription conditions on ``A``.

    (i) symmetry ``a^k_ij = a^k_ji``; (ii) the trace form
    ``omega_j = sum_i a^i_ij`` is exact, ``omega = d phi`` with
    ``phi(p) = 0``; (iii) ``u0 = exp(-phi/(n+1))`` solves the canonical system
    whose ``P^0`` is defined from ``u0``, and that system is flat.
    """
    if A.n < 2:
        from .errors import UnsupportedDimension
        raise UnsupportedDimension("prescription needs n >= 2")
    n = A.n
    sym = A.symmetry_residual()
    if sym > tol and raise_on_failure:
        raise SymmetryViolation(f"a^k_ij != a^k_ji (residual {sym:.3e})")
    omega = A.trace_form()
    closed = closedness_residual(omega)
    if closed > tol and raise_on_failure:
        raise NotExact(f"trace form is not closed (residual {closed:.3e})")
    if sym > tol or closed > tol:
        return PrescriptionReport(sym, closed, None, None, float("inf"),
                                  float("inf"), tol)
    phi = integrate_closed_form(omega, 0.0, tol=max(tol, closed * 10))
    P = canonical_part(A, omega)
    u0 = (phi * (-1.0 / (n + 1))).exp()
    P0 = companion_tensor(P, u0, n)
    system = SystemCoefficients(P, P0, A.basepoint)
    flat = flatness_residual(system)
    ures = solution_residual(system, u0)
    return PrescriptionReport(sym, closed, phi, system, flat, ures, tol)


def integrate_system(system: SystemCoefficients,
                     init: Sequence[tuple[complex, Sequence[complex]]],
                     tol: float = 1e-10) -> JetMap:
    """Build ``f = (u_1/u_0, ..., u_n/u_0)`` from ``n + 1`` solutions seeded by
    ``(value, gradient)`` at the basepoint.  Result order is
    ``system.order + 2``."""
    n = system.n
    if len(init) != n + 1:
        raise BadIndex(f"need {n + 1} seeds, got {len(init)}")
    seeds = [(complex(v), np.asarray(g, dtype=complex)) for v, g in init]
    frame = np.array([[v] + list(g) for v, g in seeds])
    if abs(np.linalg.det(frame)) <= 1e-13 * max(1.0, np.abs(frame).max()) ** (n + 1):
        raise DependentSeeds("initial frame is linearly dependent")
    if abs(seeds[0][0]) <= 1e-14 * max(1.0, np.abs(frame).max()):
        raise SingularBasepoint("u_0 vanishes at the basepoint")
    order = system.order + 2
    us = [solve_second_order(system.P, system.P0, v, g, order, tol=tol)[0]
          for v, g in seeds]
    inv = us[0].reciprocal()
    return JetMap(tuple(u * inv for u in us[1:]), system.basepoint)


# ---------------------------------------------------------------------------
# f_alpha


def falpha_jet(F: JetMap, alpha: complex, tol: float = 1e-10,
               strict: bool = True) -> JetMap:
    """Jet of ``f_alpha``: ``G(p) = 0``, ``DG(p) = Id``, ``P_G = alpha * P_F``.

    ``F`` need not be normalized; ``P_F`` is unchanged by the affine
    normalization.  Raises NotIntegrable when ``alpha * P_F`` is not a
    preSchwarzian (competing coefficient determinations disagree).
    """
    G, _ = falpha_jet_with_discrepancy(F, alpha, tol, strict)
    return G


def falpha_jet_with_discrepancy(F: JetMap, alpha: complex, tol: float = 1e-10,
                                strict: bool = True):
    P = preschwarzian(F).scaled(complex(alpha))
    n = F.n
    comps, worst = [], 0.0
    for l in range(n):
        grad = np.zeros(n, dtype=complex)
        grad[l] = 1.0
        u, disc = solve_second_order(P.coeffs, None, 0.0, grad, F.order,
                                     tol=tol, strict=strict)
        comps.append(u)
        worst = max(worst, disc)
    return JetMap(tuple(comps), F.basepoint), worst


def preschwarzian_at(spec: MapSpec, point) -> np.ndarray:
    """``P_f(point)`` as an array ``[k, i, j]`` from an order-2 germ."""
    F = build_germ(spec, point, order=2)
    D = F.differential_at_base()
    H = F.second_derivatives_at_base()
    n = F.n
    return np.linalg.solve(D, H.reshape(n, n * n)).reshape(n, n, n)


def falpha_path(spec, alpha: complex, z, tol: float = 1e-10, via=None,
                with_differential: bool = False, max_steps: int = 20000):
    """``f_alpha(z)`` by integrating ``V' = V B`` along the polygon
    ``0 -> via... -> z``, where ``V = Df_alpha`` and
    ``B(x) = alpha * P_f(x)(direction, .)``; the value accumulates
    ``int V direction dt`` alongside.

    Classical RK4 with step doubling: a step is accepted when the full step
    and two half steps agree to ``tol`` (relative to the state size), and
    the half-step result is Richardson-corrected.
    """
    spec = MapSpec.from_json(spec)
    n = spec.dimension
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape != (n,):
        raise BadIndex("point has the wrong length")
    alpha = complex(alpha)
    points = [np.zeros(n, dtype=complex)]
    if via is not None:
        via = np.asarray(via, dtype=complex)
        points += list(via.reshape(-1, n))
    points.append(z)
    V = np.eye(n, dtype=complex)
    y = np.zeros(n, dtype=complex)
    if alpha == 0:
        y = z.copy()
        return (y, V) if with_differential else y
    steps = 0
    for a, b in zip(points[:-1], points[1:]):
        V, y, used = _integrate_leg(spec, alpha, a, b - a, V, y, tol, max_steps - steps)
        steps += used
    return (y, V) if with_differential else y


def _integrate_leg(spec, alpha, start, direction, V, y, tol, max_steps):
    n = start.size
    if not np.any(direction):
        return V, y, 0

    cache: dict[float, np.ndarray] = {}

    def B(t):
        if t not in cache:
            P = preschwarzian_at(spec, start + t * direction)
            cache[t] = alpha * np.einsum("kil,i->kl", P, direction)
        return cache[t]

    def rhs(t, V):
        return V @ B(t), V @ direction

    def rk4(t, h, V, y):
        k1V, k1y = rhs(t, V)
        k2V, k2y = rhs(t + h / 2, V + h / 2 * k1V)
        k3V, k3y = rhs(t + h / 2, V + h / 2 * k2V)
        k4V, k4y = rhs(t + h, V + h * k3V)
        return (V + h / 6 * (k1V + 2 * k2V + 2 * k3V + k4V),
                y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y))

    t, h, steps = 0.0, 0.125, 0
    while t < 1.0:
        h = min(h, 1.0 - t)
        if h < 1e-10:
            raise NoConvergence("step size underflow in f_alpha path integration")
        Vf, yf = rk4(t, h, V, y)
        Vh, yh = rk4(t, h / 2, V, y)
        Vh, yh = rk4(t + h / 2, h / 2, Vh, yh)
        err = max(np.abs(Vh - Vf).max(), np.abs(yh - yf).max())
        scale = max(1.0, np.abs(Vh).max(), np.abs(yh).max())
        steps += 1
        if steps > max_steps:
            raise NoConvergence("too many steps in f_alpha path integration")
        if err <= tol * scale:
            V = Vh + (Vh - Vf) / 15.0
            y = yh + (yh - yf) / 15.0
            t = t + h if t + h < 1.0 - 1e-14 else 1.0
            cache = {k: v for k, v in cache.items() if k >= t}
            grow = 2.0 if err == 0 else min(2.0, 0.9 * (tol * scale / err) ** 0.2)
            h *= max(grow, 1.0)
        else:
            h *= max(0.25, 0.9 * (tol * scale / err) ** 0.2)
    return V, y, steps
