"""Derivative operators on germs: the preSchwarzian ``P_f = [Df]^{-1} D^2 f``,
Oda's Schwarzian tensor ``S^k_ij f`` with its companion ``S^0_ij f``, and
residual checks of the identities relating them.

Index conventions: tensors are stored as ``T[k][i][j]`` (upper index first),
indices run from 0.  All residuals are relative: the maximal coefficient
discrepancy divided by ``max(1, largest coefficient magnitude involved)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (BadIndex, IncompatibleJets, NotLocallyBiholomorphic,
                     ObstructionNonzero, UnsupportedDimension)
from .jets import Jet
from .maps import JetMap, affine_compose, jacobian_det

STRUCTURAL_TOL = 1e-10
THIRD_ORDER_TOL = 1e-9


def relative_residual(diffs, refs=()) -> float:
    """max |diff| / max(1, max |ref|) over jets or arrays."""
    num = max((_maxabs(d) for d in diffs), default=0.0)
    den = max((_maxabs(r) for r in refs), default=0.0)
    return num / max(1.0, den)


def _maxabs(x) -> float:
    if isinstance(x, Jet):
        return x.max_abs()
    arr = np.abs(np.asarray(x))
    return float(arr.max()) if arr.size else 0.0


def _flat(t):
    if isinstance(t, Jet):
        yield t
    else:
        for x in t:
            yield from _flat(x)


# ---------------------------------------------------------------------------
# jet-valued linear algebra

def jet_inverse(M: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    """Inverse of a square matrix of jets by Gauss-Jordan elimination,
    pivoting on the largest constant term in each column."""
    n = len(M)
    nv, m = M[0][0].nvars, M[0][0].order
    A = [list(row) for row in M]
    B = [[Jet.constant(nv, m, 1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    scale = max(abs(x.const) for row in A for x in row) or 1.0
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(A[r][col].const))
        if abs(A[piv][col].const) <= 1e-14 * scale:
            raise NotLocallyBiholomorphic("matrix is singular at the basepoint")
        A[col], A[piv] = A[piv], A[col]
        B[col], B[piv] = B[piv], B[col]
        inv = A[col][col].reciprocal()
        A[col] = [x * inv for x in A[col]]
        B[col] = [x * inv for x in B[col]]
        for r in range(n):
            if r == col:
                continue
            f = A[r][col]
            if not np.any(f.coeffs):
                continue
            A[r] = [x - f * y for x, y in zip(A[r], A[col])]
            B[r] = [x - f * y for x, y in zip(B[r], B[col])]
    return B


def adjugate(M: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    """Classical adjugate by cofactor expansion (n <= 4)."""
    n = len(M)
    if n == 1:
        return [[Jet.constant(M[0][0].nvars, M[0][0].order, 1.0)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[M[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            adj[j][i] = _det(minor) * ((-1) ** (i + j))
    return adj


def _det(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    total = None
    for c in range(n):
        minor = [[M[r][k] for k in range(n) if k != c] for r in range(1, n)]
        term = M[0][c] * _det(minor)
        if c % 2:
            term = -term
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------------------
# data types

@dataclass(frozen=True)
class BilinearField:
    """Field of bilinear maps ``A(z)(v, w)_k = sum_ij a[k][i][j](z) v_i w_j``."""

    coeffs: tuple  # coeffs[k][i][j] : Jet
    basepoint: np.ndarray

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @property
    def order(self) -> int:
        return self.coeffs[0][0][0].order

    def __getitem__(self, kij):
        k, i, j = kij
        return self.coeffs[k][i][j]

    @classmethod
    def from_function(cls, n: int, fn, basepoint) -> "BilinearField":
        return cls(tuple(tuple(tuple(fn(k, i, j) for j in range(n)) for i in range(n))
                         for k in range(n)), np.asarray(basepoint, dtype=complex))

    def at_base(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n, n), dtype=complex)
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    out[k, i, j] = self.coeffs[k][i][j].const
        return out

    def scaled(self, alpha: complex) -> "BilinearField":
        return BilinearField.from_function(
            self.n, lambda k, i, j: self.coeffs[k][i][j] * alpha, self.basepoint)

    def truncate(self, order: int) -> "BilinearField":
        return BilinearField.from_function(
            self.n, lambda k, i, j: self.coeffs[k][i][j].truncate(order), self.basepoint)

    def symmetry_residual(self) -> float:
        n = self.n
        diffs = [self[k, i, j] - self[k, j, i]
                 for k in range(n) for i in range(n) for j in range(i + 1, n)]
        return relative_residual(diffs, _flat(self.coeffs))

    def trace_form(self) -> list[Jet]:
        """``omega_j = sum_i a^i_{ij}``, the trace of ``A(e_j, .)`` for
        symmetric fields."""
        n = self.n
        return [sum((self[i, i, j] for i in range(1, n)), self[0, 0, j]) for j in range(n)]

    def apply(self, v, w) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        w = np.asarray(w, dtype=complex)
        if v.shape != (self.n,) or w.shape != (self.n,):
            raise BadIndex("vector length mismatch")
        return np.einsum("kij,i,j->k", self.at_base(), v, w)


@dataclass(frozen=True)
class SchwarzianTensor:
    """Oda's ``S^k_ij`` (as ``S[k][i][j]``) and ``S^0_ij`` (as ``S0[i][j]``)."""

    S: tuple
    S0: tuple
    basepoint: np.ndarray

    @property
    def n(self) -> int:
        return len(self.S)

    @property
    def order(self) -> int:
        return self.S[0][0][0].order

    def field(self) -> BilinearField:
        return BilinearField(self.S, self.basepoint)

    def at_base(self) -> np.ndarray:
        return self.field().at_base()

    def S0_at_base(self) -> np.ndarray:
        return np.array([[x.const for x in row] for row in self.S0])

    def symmetry_residual(self) -> float:
        n = self.n
        diffs = [self.S[k][i][j] - self.S[k][j][i]
                 for k in range(n) for i in range(n) for j in range(i + 1, n)]
        diffs += [self.S0[i][j] - self.S0[j][i] for i in range(n) for j in range(i + 1, n)]
        return relative_residual(diffs, _flat(self.S))

    def trace_residual(self) -> float:
        n = self.n
        diffs = [sum((self.S[j][i][j] for j in range(1, n)), self.S[0][i][0])
                 for i in range(n)]
        return relative_residual(diffs, _flat(self.S))

    def max_abs(self) -> float:
        return max(x.max_abs() for x in list(_flat(self.S)) + list(_flat(self.S0)))


# ---------------------------------------------------------------------------
# operators

def _second_partials(F: JetMap) -> list[list[list[Jet]]]:
    """``H[l][i][j]`` = d^2 f_l / dz_i dz_j (order m - 2)."""
    n = F.n
    out = []
    for c in F.components:
        grads = [c.partial(i) for i in range(n)]
        out.append([[grads[i].partial(j) for j in range(n)] for i in range(n)])
    return out


def inverse_differential(F: JetMap, order: int | None = None) -> list[list[Jet]]:
    """Jets of ``[Df]^{-1}``, i.e. ``dz_k / df_l``, at the requested order."""
    order = F.order - 1 if order is None else order
    D = [[x.truncate(order) for x in row] for row in F.differential()]
    return jet_inverse(D)


def preschwarzian(F: JetMap) -> BilinearField:
    """``P_f = [Df]^{-1} D^2 f`` as jets of order ``F.order - 2``."""
    if F.order < 2:
        raise IncompatibleJets("preschwarzian needs order >= 2")
    n, m = F.n, F.order - 2
    inv = inverse_differential(F, m)
    H = _second_partials(F)
    coeffs = []
    for k in range(n):
        rows = []
        for i in range(n):
            row = []
            for j in range(i + 1):
                acc = inv[k][0] * H[0][i][j]
                for l in range(1, n):
                    acc = acc + inv[k][l] * H[l][i][j]
                row.append(acc)
            rows.append(row)
        # fill the upper triangle from mixed-partial symmetry of D^2 f
        coeffs.append(tuple(tuple(rows[max(i, j)][min(i, j)] for j in range(n))
                            for i in range(n)))
    return BilinearField(tuple(coeffs), F.basepoint)


def log_jacobian_gradient(F: JetMap) -> list[Jet]:
    """``d/dz_i log J_f`` (order m - 2); branch free."""
    J = jacobian_det(F)
    logJ = J.log()
    return [logJ.partial(i) for i in range(F.n)]


def _u0(F: JetMap) -> Jet:
    """``(J_f / J_f(p)) ** (-1/(n+1))``: ``J_f^{-1/(n+1)}`` up to a constant
    factor, which cancels in every formula that uses it."""
    J = jacobian_det(F)
    return (J / J.const).pow(-1.0 / (F.n + 1))


def _require_tensor_regime(F: JetMap, min_order: int) -> None:
    if F.n < 2:
        raise UnsupportedDimension("Schwarzian tensor operations need n >= 2")
    if F.order < min_order:
        raise IncompatibleJets(f"need germ order >= {min_order}")


def _schwarzian_from_P(P: BilinearField, grad: Sequence[Jet]) -> tuple:
    n = P.n
    c = 1.0 / (n + 1)
    S = []
    for k in range(n):
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                x = P[k, i, j]
                if k == i:
                    x = x - grad[j] * c
                if k == j:
                    x = x - grad[i] * c
                row.append(x)
            rows.append(tuple(row))
        S.append(tuple(rows))
    return tuple(S)


def companion_tensor(S: tuple, u0: Jet, n: int) -> tuple:
    """``S^0_ij = (d_i d_j u0 - sum_k d_k u0 S^k_ij) / u0``."""
    grads = [u0.partial(i) for i in range(n)]
    m = u0.order - 2
    inv = u0.truncate(m).reciprocal()
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = grads[i].partial(j)
            for k in range(n):
                acc = acc - grads[k].truncate(m) * S[k][i][j].truncate(m)
            row.append(acc * inv)
        out.append(tuple(row))
    return tuple(out)


def oda_schwarzian(F: JetMap) -> SchwarzianTensor:
    """Oda's Schwarzian via ``S = P_f - (grad log J (x) Id + Id (x) grad log J)/(n+1)``.

    ``S`` has order ``m - 2`` and ``S0`` order ``m - 3``.
    """
    _require_tensor_regime(F, 3)
    P = preschwarzian(F)
    S = _schwarzian_from_P(P, log_jacobian_gradient(F))
    S0 = companion_tensor(S, _u0(F), F.n)
    return SchwarzianTensor(S, S0, F.basepoint)


def oda_schwarzian_direct(F: JetMap) -> tuple:
    """``S^k_ij`` straight from the defining sum over ``l`` of
    ``d^2 f_l/dz_i dz_j * dz_k/df_l``, with the inverse differential taken as
    adjugate / determinant and ``d log J = dJ / J``.  Independent of the
    elimination-based route in :func:`oda_schwarzian`."""
    _require_tensor_regime(F, 2)
    n, m = F.n, F.order - 2
    D = [[x.truncate(m) for x in row] for row in F.differential()]
    J = jacobian_det(F)
    Jinv = J.truncate(m).reciprocal()
    adj = adjugate(D)
    H = _second_partials(F)
    dlogJ = [J.partial(i) * Jinv for i in range(n)]
    c = 1.0 / (n + 1)
    S = []
    for k in range(n):
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = Jet(n, m)
                for l in range(n):
                    acc = acc + H[l][i][j] * adj[k][l]
                acc = acc * Jinv
                if k == i:
                    acc = acc - dlogJ[j] * c
                if k == j:
                    acc = acc - dlogJ[i] * c
                row.append(acc)
            rows.append(tuple(row))
        S.append(tuple(rows))
    return tuple(S)


def schwarzian_apply(T: SchwarzianTensor, v, w) -> np.ndarray:
    """``S_f(p)(v, w)``: component k is ``v^t S^k w`` at the basepoint."""
    return T.field().apply(v, w)


def goldberg_residual(F: JetMap) -> float:
    """Relative residual of ``tr P_f(e_i, .) = d_i log J_f`` over all
    retained coefficients."""
    P = preschwarzian(F)
    grad = log_jacobian_gradient(F)
    n = F.n
    diffs, refs = [], []
    for i in range(n):
        tr = sum((P[k, i, k] for k in range(1, n)), P[0, i, 0])
        diffs.append(tr - grad[i])
        refs += [tr, grad[i]]
    return relative_residual(diffs, refs)


def compose_field(T: tuple, F: JetMap) -> tuple:
    """Re-express jets (in local coordinates at ``F.value``) as jets in
    ``F``'s source coordinates: ``T(F(z))``."""
    w0 = F.value
    sample = next(_flat(T))
    m = sample.order
    inners = [(c - w0[l]).truncate(m) for l, c in enumerate(F.components)]
    return _map_nested(T, lambda x: x.compose(inners))


def _map_nested(t, fn):
    if isinstance(t, Jet):
        return fn(t)
    return tuple(_map_nested(x, fn) for x in t)


def chain_rule_residual(f: JetMap, g: JetMap) -> float:
    """Residual of ``S(g∘f) = S f + sum S^r_lm g(w) dw_l/dz_i dw_m/dz_j dz_k/dw_r``."""
    _require_tensor_regime(f, 3)
    h = g.compose(f)
    n = f.n
    Sh = oda_schwarzian(h).S
    Sf = oda_schwarzian(f).S
    Sg = compose_field(oda_schwarzian(g).S, f)
    m = Sh[0][0][0].order
    D = [[x.truncate(m) for x in row] for row in f.differential()]
    inv = inverse_differential(f, m)
    diffs, refs = [], []
    for k in range(n):
        for i in range(n):
            for j in range(n):
                rhs = Sf[k][i][j].truncate(m)
                for r in range(n):
                    inner = Jet(n, m)
                    for l in range(n):
                        for mm in range(n):
                            s = Sg[r][l][mm]
                            if np.any(s.coeffs):
                                inner = inner + s * D[l][i] * D[mm][j]
                    rhs = rhs + inner * inv[k][r]
                diffs.append(Sh[k][i][j] - rhs)
                refs.append(Sh[k][i][j])
    return relative_residual(diffs, refs)


# ---------------------------------------------------------------------------
# system (2nd order overdetermined) coefficients

@dataclass(frozen=True)
class SystemCoefficients:
    """Coefficients of ``d_i d_j u = sum_k P[k][i][j] d_k u + P0[i][j] u``."""

    P: tuple
    P0: tuple
    basepoint: np.ndarray

    @property
    def n(self) -> int:
        return len(self.P)

    @property
    def order(self) -> int:
        """Common order to which both coefficient sets are known."""
        return min(self.P[0][0][0].order, self.P0[0][0].order)

    def symmetry_residual(self) -> float:
        n = self.n
        diffs = [self.P[k][i][j] - self.P[k][j][i]
                 for k in range(n) for i in range(n) for j in range(i + 1, n)]
        diffs += [self.P0[i][j] - self.P0[j][i] for i in range(n) for j in range(i + 1, n)]
        return relative_residual(diffs, list(_flat(self.P)) + list(_flat(self.P0)))

    def canonical_residual(self) -> float:
        n = self.n
        diffs = [sum((self.P[j][i][j] for j in range(1, n)), self.P[0][i][0])
                 for i in range(n)]
        return relative_residual(diffs, _flat(self.P))


def system_from_schwarzian(F: JetMap) -> SystemCoefficients:
    T = oda_schwarzian(F)
    return SystemCoefficients(T.S, T.S0, F.basepoint)


def solution_residual(system: SystemCoefficients, u: Jet) -> float:
    """Relative residual of the system evaluated on ``u``."""
    n = system.n
    m = min(u.order - 2, system.order)
    grads = [u.partial(k) for k in range(n)]
    ut = u.truncate(m)
    diffs, refs = [], []
    for i in range(n):
        for j in range(n):
            lhs = grads[i].partial(j).truncate(m)
            rhs = system.P0[i][j].truncate(m) * ut
            for k in range(n):
                rhs = rhs + system.P[k][i][j].truncate(m) * grads[k].truncate(m)
            diffs.append(lhs - rhs)
            refs += [lhs, rhs]
    return relative_residual(diffs, refs)


def jacobian_solution(F: JetMap) -> Jet:
    """``u0 = J_f^{-1/(n+1)}`` (principal branch at the basepoint value)."""
    return jacobian_det(F).pow(-1.0 / (F.n + 1))


# ---------------------------------------------------------------------------
# normalized companion

def normalized_companion(F: JetMap, tol: float = THIRD_ORDER_TOL) -> JetMap:
    """A germ ``g`` with ``S_g = S_f`` and constant Jacobian, ``g(p) = F(p)``.

    Requires ``S^0 f = 0``.  When the forms ``J_f^{-2/(n+1)} df^i`` are closed
    (exactly when ``J_f`` is constant) ``g`` is their integral, so that
    ``Dg = Df J_f^{-2/(n+1)}``.  Otherwise ``g`` comes from integrating the
    system with the constant solution ``u0 = 1``; then ``Dg`` matches
    ``Df J_f^{-2/(n+1)}`` at the basepoint only.
    """
    from .prescribe import integrate_system, integrate_closed_form

    T = oda_schwarzian(F)
    obstruction = relative_residual(_flat(T.S0))
    if obstruction > tol:
        raise ObstructionNonzero(f"S^0 does not vanish (residual {obstruction:.3e})")
    n = F.n
    J = jacobian_det(F)
    factor = J.pow(-2.0 / (n + 1))
    m = F.order - 1
    D = F.differential()
    forms = [[(D[l][i] * factor) for i in range(n)] for l in range(n)]
    try:
        comps = [integrate_closed_form(forms[l], F.value[l], tol) for l in range(n)]
        g = JetMap(tuple(comps), F.basepoint)
    except Exception as exc:  # noqa: BLE001 - closedness failure routes below
        from .errors import NotExact
        if not isinstance(exc, NotExact):
            raise
        system = SystemCoefficients(T.S, T.S0, F.basepoint)
        D0 = F.differential_at_base() * factor.const
        seeds = [(1.0, np.zeros(n))] + [(F.value[l], D0[l]) for l in range(n)]
        g = integrate_system(system, seeds, tol=tol)
        g = JetMap(tuple(c.truncate(min(m, g.order)) for c in g.components), F.basepoint)
    return g


def affine_invariance_residual(F: JetMap, A, b) -> float:
    """``P_{A F + b} - P_F`` over all coefficients (relative)."""
    P1 = preschwarzian(affine_compose(F, A, b))
    P2 = preschwarzian(F)
    return relative_residual([x - y for x, y in zip(_flat(P1.coeffs), _flat(P2.coeffs))],
                             _flat(P2.coeffs))
