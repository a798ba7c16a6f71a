"""Truncated multivariate power series ("jets") with complex coefficients.

A :class:`Jet` in ``nvars`` variables of order ``m`` stores every Taylor
coefficient of total degree ``<= m`` in a dense array.  Monomials are laid
out in graded lexicographic order: all degree-0 terms, then degree 1, and
so on, with ``z_0`` ranking highest inside each degree.  Truncating to a
lower order is therefore a slice.

Variables are indexed from 0.  Arithmetic is exact modulo terms of degree
above ``order`` (and modulo floating point roundoff).
"""

from __future__ import annotations

import cmath
import functools
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _backend
from .errors import BadIndex, BranchError, IncompatibleJets

__all__ = ["Jet", "MultiIndex", "layout", "compose", "monomials"]

MultiIndex = tuple  # tuple[int, ...]; degree is sum(exponents)


def _exponents(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of one total degree, lexicographically descending."""
    if nvars == 1:
        return [(degree,)]
    out = []
    for first in range(degree, -1, -1):
        for rest in _exponents(nvars - 1, degree - first):
            out.append((first,) + rest)
    return out


class _Layout:
    """Index tables shared by all jets with the same (nvars, order)."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        exps: list[tuple[int, ...]] = []
        self.starts = [0]
        for d in range(order + 1):
            exps.extend(_exponents(nvars, d))
            self.starts.append(len(exps))
        self.size = len(exps)
        self.exps = np.array(exps, dtype=np.intp).reshape(self.size, nvars)
        self.exps.flags.writeable = False
        self.degrees = self.exps.sum(axis=1)
        self.index = {e: k for k, e in enumerate(exps)}
        self.monomials = tuple(exps)

        # Cauchy product table: every pair whose degrees sum to <= order.
        base = order + 1
        weights = base ** np.arange(nvars, dtype=np.int64)
        keys = self.exps.astype(np.int64) @ weights
        lookup = np.full(base ** nvars, -1, dtype=np.intp)
        lookup[keys] = np.arange(self.size)
        ia, ib = np.nonzero(self.degrees[:, None] + self.degrees[None, :] <= order)
        ic = lookup[keys[ia] + keys[ib]]
        self.mul_a = np.ascontiguousarray(ia, dtype=np.intp)
        self.mul_b = np.ascontiguousarray(ib, dtype=np.intp)
        self.mul_c = np.ascontiguousarray(ic, dtype=np.intp)
        self._lookup = lookup
        self._weights = weights

    def position(self, exponent: Sequence[int]) -> int:
        return self.index[tuple(int(e) for e in exponent)]

    @functools.cached_property
    def partial_tables(self):
        """Per variable: (source, target, factor) for differentiation."""
        tables = []
        if self.order == 0:
            empty = np.zeros(0, dtype=np.intp)
            return [(empty, empty, np.zeros(0))] * self.nvars
        lower = layout(self.nvars, self.order - 1)
        for i in range(self.nvars):
            src = np.nonzero(self.exps[:, i] > 0)[0]
            shifted = self.exps[src].copy()
            shifted[:, i] -= 1
            dst = np.array([lower.index[tuple(e)] for e in shifted.tolist()],
                           dtype=np.intp)
            tables.append((src, dst, self.exps[src, i].astype(float)))
        return tables

    def antiderivative_table(self, i: int, new_order: int):
        upper = layout(self.nvars, new_order)
        keep = np.nonzero(self.degrees + 1 <= new_order)[0]
        shifted = self.exps[keep].copy()
        shifted[:, i] += 1
        dst = np.array([upper.index[tuple(e)] for e in shifted.tolist()],
                       dtype=np.intp)
        return keep, dst, 1.0 / shifted[:, i]

    @functools.cached_property
    def predecessor(self):
        """For each monomial of degree >= 1: (lower monomial, variable) with
        ``lower + e_var == monomial``; the variable is the last nonzero slot."""
        pred = [(-1, -1)]
        for e in self.monomials[1:]:
            var = max(k for k, x in enumerate(e) if x)
            lower = list(e)
            lower[var] -= 1
            pred.append((self.index[tuple(lower)], var))
        return pred


@functools.lru_cache(maxsize=None)
def layout(nvars: int, order: int) -> _Layout:
    if nvars < 1 or order < 0:
        raise ValueError(f"invalid jet shape nvars={nvars} order={order}")
    return _Layout(nvars, order)


def monomials(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All exponent tuples of degree <= order in storage order."""
    return layout(nvars, order).monomials


def _is_scalar(x) -> bool:
    return isinstance(x, (int, float, complex, np.number))


class Jet:
    """Immutable truncated power series in ``nvars`` variables."""

    __slots__ = ("nvars", "order", "coeffs")

    def __init__(self, nvars: int, order: int, coeffs=None):
        lay = layout(nvars, order)
        if coeffs is None:
            arr = np.zeros(lay.size, dtype=np.complex128)
        else:
            arr = np.array(coeffs, dtype=np.complex128)
            if arr.shape != (lay.size,):
                raise IncompatibleJets(
                    f"expected {lay.size} coefficients, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, nvars: int, order: int, value: complex) -> "Jet":
        c = np.zeros(layout(nvars, order).size, dtype=np.complex128)
        c[0] = value
        return cls(nvars, order, c)

    @classmethod
    def variable(cls, nvars: int, order: int, i: int, value: complex = 0) -> "Jet":
        """The jet of ``value + z_i``."""
        _check_index(i, nvars)
        lay = layout(nvars, order)
        c = np.zeros(lay.size, dtype=np.complex128)
        c[0] = value
        if order >= 1:
            c[1 + i] = 1.0
        return cls(nvars, order, c)

    @classmethod
    def from_dict(cls, nvars: int, order: int,
                  terms: Mapping[Sequence[int], complex]) -> "Jet":
        """Build from ``{exponent tuple: coefficient}``; terms of degree above
        ``order`` are dropped."""
        lay = layout(nvars, order)
        c = np.zeros(lay.size, dtype=np.complex128)
        for exp, val in terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars or min(exp) < 0:
                raise BadIndex(f"bad exponent {exp} for {nvars} variables")
            if sum(exp) <= order:
                c[lay.index[exp]] += val
        return cls(nvars, order, c)

    # -- inspection ---------------------------------------------------
    @property
    def const(self) -> complex:
        return complex(self.coeffs[0])

    def coef(self, exponent: Sequence[int]) -> complex:
        exponent = tuple(exponent)
        if len(exponent) != self.nvars:
            raise BadIndex(f"exponent {exponent} has wrong length")
        if sum(exponent) > self.order:
            return 0j
        return complex(self.coeffs[layout(self.nvars, self.order).index[exponent]])

    def to_dict(self, tol: float = 0.0) -> dict[tuple[int, ...], complex]:
        lay = layout(self.nvars, self.order)
        return {e: complex(v) for e, v in zip(lay.monomials, self.coeffs)
                if abs(v) > tol}

    def degree_part(self, d: int) -> np.ndarray:
        lay = layout(self.nvars, self.order)
        return self.coeffs[lay.starts[d]:lay.starts[d + 1]]

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def __repr__(self):
        terms = self.to_dict(tol=0.0)
        body = " + ".join(f"({v:.6g})*z^{e}" for e, v in terms.items()) or "0"
        return f"Jet(n={self.nvars}, m={self.order}: {body})"

    # -- structural ---------------------------------------------------
    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise IncompatibleJets(f"cannot raise order {self.order} -> {order}")
        return Jet(self.nvars, order, self.coeffs[:layout(self.nvars, order).size])

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.nvars != self.nvars or other.order != self.order:
                raise IncompatibleJets(
                    f"shape mismatch: (n={self.nvars}, m={self.order}) vs "
                    f"(n={other.nvars}, m={other.order})")
            return other
        if _is_scalar(other):
            return Jet.constant(self.nvars, self.order, complex(other))
        return NotImplemented

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        if _is_scalar(other):
            c = self.coeffs.copy()
            c[0] += other
            return Jet(self.nvars, self.order, c)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet(self.nvars, self.order, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.nvars, self.order, -self.coeffs)

    def __sub__(self, other):
        if _is_scalar(other):
            return self + (-other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet(self.nvars, self.order, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if _is_scalar(other):
            return Jet(self.nvars, self.order, self.coeffs * complex(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        lay = layout(self.nvars, self.order)
        out = _backend.series_mul(self.coeffs, other.coeffs, lay.mul_a,
                                  lay.mul_b, lay.mul_c, lay.size)
        return Jet(self.nvars, self.order, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if _is_scalar(other):
            return Jet(self.nvars, self.order, self.coeffs / complex(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if isinstance(k, (int, np.integer)) and k >= 0:
            result = Jet.constant(self.nvars, self.order, 1.0)
            base = self
            while k:
                if k & 1:
                    result = result * base
                k >>= 1
                if k:
                    base = base * base
            return result
        return self.pow(k)

    def scale(self, s: complex) -> "Jet":
        return self * s

    # -- calculus -----------------------------------------------------
    def partial(self, i: int) -> "Jet":
        """Derivative in variable ``i``; the result has order ``order - 1``."""
        _check_index(i, self.nvars)
        if self.order == 0:
            raise IncompatibleJets("cannot differentiate an order-0 jet")
        src, dst, fac = layout(self.nvars, self.order).partial_tables[i]
        c = np.zeros(layout(self.nvars, self.order - 1).size, dtype=np.complex128)
        c[dst] = self.coeffs[src] * fac
        return Jet(self.nvars, self.order - 1, c)

    def antiderivative(self, i: int, max_order: int | None = None) -> "Jet":
        """Antiderivative in variable ``i`` with no ``z_i``-free terms.

        The result has order ``order + 1`` unless capped by ``max_order``.
        """
        _check_index(i, self.nvars)
        new_order = self.order + 1 if max_order is None else min(self.order + 1, max_order)
        keep, dst, fac = layout(self.nvars, self.order).antiderivative_table(i, new_order)
        c = np.zeros(layout(self.nvars, new_order).size, dtype=np.complex128)
        c[dst] = self.coeffs[keep] * fac
        return Jet(self.nvars, new_order, c)

    def gradient(self) -> list["Jet"]:
        return [self.partial(i) for i in range(self.nvars)]

    # -- elementary functions -----------------------------------------
    def _split(self):
        c = self.const
        h = self.coeffs.copy()
        h[0] = 0
        return c, Jet(self.nvars, self.order, h)

    def _series(self, coefficients: Sequence[complex], t: "Jet") -> "Jet":
        """sum_k coefficients[k] * t**k by Horner; ``t`` is nilpotent."""
        acc = Jet.constant(self.nvars, self.order, coefficients[-1])
        for a in reversed(coefficients[:-1]):
            acc = acc * t + a
        return acc

    def exp(self) -> "Jet":
        c, h = self._split()
        m = self.order
        facts = [1.0]
        for k in range(1, m + 1):
            facts.append(facts[-1] / k)
        return self._series(facts, h) * cmath.exp(c)

    def log(self) -> "Jet":
        """Principal-branch logarithm at the constant term."""
        c, h = self._split()
        if c == 0:
            raise BranchError("log of a jet with zero constant term")
        coeffs = [0j] + [(-1) ** (k + 1) / k for k in range(1, self.order + 1)]
        return self._series(coeffs, h / c) + cmath.log(c)

    def pow(self, lam: complex) -> "Jet":
        """``self ** lam`` with the principal branch at the constant term."""
        c, h = self._split()
        if c == 0:
            raise BranchError("fractional power of a jet with zero constant term")
        binoms = [1.0 + 0j]
        for k in range(1, self.order + 1):
            binoms.append(binoms[-1] * (lam - k + 1) / k)
        lead = cmath.exp(lam * cmath.log(c))
        return self._series(binoms, h / c) * lead

    def sqrt(self) -> "Jet":
        return self.pow(0.5)

    def reciprocal(self) -> "Jet":
        c, h = self._split()
        if c == 0:
            raise BranchError("reciprocal of a jet with zero constant term")
        alt = [(-1.0) ** k for k in range(self.order + 1)]
        return self._series(alt, h / c) / c

    # -- composition and evaluation ------------------------------------
    def shift(self, center: Sequence[complex]) -> "Jet":
        """Re-expand the truncated polynomial around ``center``: returns the
        jet of ``w -> self(center + w)``, exact since ``self`` is a polynomial."""
        center = _as_point(center, self.nvars)
        if not np.any(center):
            return self
        inners = [Jet.variable(self.nvars, self.order, i, center[i])
                  for i in range(self.nvars)]
        return _substitute(self, inners, self.order, nilpotent=False)

    def compose(self, inners: Sequence["Jet"]) -> "Jet":
        return compose(self, inners)

    def __call__(self, point):
        return self.eval(point)

    def eval(self, point) -> complex:
        """Evaluate the truncation at ``point`` (graded-lex summation order)."""
        point = _as_point(point, self.nvars)
        lay = layout(self.nvars, self.order)
        powers = np.prod(point[None, :] ** lay.exps, axis=1)
        total = 0j
        for v in self.coeffs * powers:
            total += v
        return complex(total)

    def allclose(self, other: "Jet", tol: float = 1e-12) -> bool:
        other = self._coerce(other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs), initial=0.0) <= tol)


def _check_index(i: int, nvars: int) -> None:
    if not (0 <= i < nvars):
        raise BadIndex(f"variable index {i} out of range for {nvars} variables")


def _as_point(point, nvars: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(point, dtype=np.complex128))
    if arr.shape != (nvars,):
        raise BadIndex(f"point has length {arr.size}, expected {nvars}")
    return arr


def _substitute(outer: Jet, inners: Sequence[Jet], order: int, nilpotent: bool) -> Jet:
    """sum_e outer_e * prod_i inners[i]**e_i, one product per monomial."""
    nv = inners[0].nvars
    lay = layout(outer.nvars, outer.order)
    pred = lay.predecessor
    one = Jet.constant(nv, order, 1.0)
    acc = np.zeros(layout(nv, order).size, dtype=np.complex128)
    acc[0] = outer.coeffs[0]
    products: list[Jet | None] = [one] + [None] * (lay.size - 1)
    limit = lay.starts[min(order, outer.order) + 1] if nilpotent else lay.size
    needed = np.zeros(lay.size, dtype=bool)
    # a monomial's product is needed if it or any multiple has a coefficient
    nz = np.nonzero(outer.coeffs[:limit])[0]
    for k in nz[::-1]:
        while k > 0 and not needed[k]:
            needed[k] = True
            k = pred[k][0]
    for k in range(1, limit):
        if not needed[k]:
            continue
        low, var = pred[k]
        products[k] = products[low] * inners[var]
        if outer.coeffs[k] != 0:
            acc += outer.coeffs[k] * products[k].coeffs
    return Jet(nv, order, acc)


def compose(outer: Jet, inners: Sequence[Jet]) -> Jet:
    """Taylor expansion of ``outer(inners)``.

    ``outer`` is read as a germ in local coordinates; when the inners carry
    constant terms ``c`` the outer polynomial is first recentred at ``c``.
    The result has the inners' variable count and order ``min(outer.order,
    inner order)``.
    """
    inners = list(inners)
    if len(inners) != outer.nvars:
        raise IncompatibleJets(
            f"outer jet has {outer.nvars} variables but {len(inners)} inners given")
    if not inners:
        raise IncompatibleJets("no inner jets")
    nv, m_in = inners[0].nvars, inners[0].order
    for g in inners:
        if g.nvars != nv or g.order != m_in:
            raise IncompatibleJets("inner jets must share nvars and order")
    order = min(outer.order, m_in)
    centre = np.array([g.const for g in inners])
    shifted = outer.shift(centre).truncate(order)
    local = []
    for g in inners:
        c = g.coeffs[:layout(nv, order).size].copy()
        c[0] = 0
        local.append(Jet(nv, order, c))
    return _substitute(shifted, local, order, nilpotent=True)


def embed(jet: Jet, nvars: int, variables: Iterable[int]) -> Jet:
    """View ``jet`` (in ``len(variables)`` variables) as a jet in ``nvars``
    variables, its k-th variable becoming ``variables[k]``."""
    variables = list(variables)
    inners = [Jet.variable(nvars, jet.order, v) for v in variables]
    return _substitute(jet, inners, jet.order, nilpotent=True)


def binomial_series(lam: complex, order: int) -> list[complex]:
    """Coefficients of (1 + x)**lam up to x**order."""
    out = [1.0 + 0j]
    for k in range(1, order + 1):
        out.append(out[-1] * (lam - k + 1) / k)
    return out


def count(nvars: int, order: int) -> int:
    return comb(nvars + order, nvars)
