"""Germs of holomorphic maps at arbitrary basepoints.

Every map enters through a :class:`MapSpec` (a family tag plus parameters);
:func:`build_germ` turns a spec into a :class:`JetMap`, the n-tuple of jets
of the map's components expanded at a basepoint in local coordinates
``z = basepoint + h``.

Families
--------
identity         ``{"family": "identity", "n": 2}``
polynomial       explicit coefficients about the origin
mobius           ``(l_1/l_0, ..., l_n/l_0)`` from an (n+1)x(n+1) matrix whose
                 row 0 holds ``l_0``
koebe            ``z/(1-z)**2``                       (one variable)
cayley           ``z/(1-z)``                          (one variable)
royster          ``(1-z)**mu - 1``                    (one variable)
exp              ``exp(z) - 1``                       (one variable)
product          ``(phi_1(z_1), ..., phi_n(z_n))``
roper_suffridge  ``(f(z_1), sqrt(f'(z_1)) * z_2, ..., sqrt(f'(z_1)) * z_n)``
affine           ``A @ base(z) + b``
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (BadIndex, DomainError, IncompatibleJets, InvalidSpec,
                     NotLocallyBiholomorphic, SingularAffine)
from .jets import Jet, embed, layout

ONE_VARIABLE = ("koebe", "cayley", "royster", "exp")
FAMILIES = ("identity", "polynomial", "mobius", "product", "roper_suffridge",
            "affine") + ONE_VARIABLE


# ---------------------------------------------------------------------------
# complex JSON helpers

def parse_complex(x) -> complex:
    """``[re, im]`` pairs or plain numbers."""
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise InvalidSpec(f"complex scalar must be [re, im], got {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, (int, float, complex)):
        return complex(x)
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    raise InvalidSpec(f"cannot read complex scalar from {x!r}")


def complex_pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _matrix(obj) -> np.ndarray:
    return np.array([[parse_complex(x) for x in row] for row in obj], dtype=complex)


def _vector(obj) -> np.ndarray:
    return np.array([parse_complex(x) for x in obj], dtype=complex)


# ---------------------------------------------------------------------------
# MapSpec

@dataclass(frozen=True)
class MapSpec:
    """A family tag plus validated parameters.

    Parameters hold Python values (complex numbers, numpy arrays, nested
    specs); :meth:`from_json` / :meth:`to_json` convert to the wire format in
    which complex scalars are ``[re, im]`` pairs.
    """

    family: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpec(f"unknown family {self.family!r}")
        _validate(self)

    @property
    def dimension(self) -> int:
        f, p = self.family, self.params
        if f in ONE_VARIABLE:
            return 1
        if f in ("identity", "polynomial"):
            return int(p["n"])
        if f == "mobius":
            return p["matrix"].shape[0] - 1
        if f == "product":
            return len(p["factors"])
        if f == "roper_suffridge":
            return int(p.get("n", 2))
        return p["base"].dimension  # affine

    # -- wire format ----------------------------------------------------
    @classmethod
    def from_json(cls, obj) -> "MapSpec":
        if isinstance(obj, MapSpec):
            return obj
        if not isinstance(obj, Mapping) or "family" not in obj:
            raise InvalidSpec("map spec must be an object with a 'family' key")
        fam = obj["family"]
        try:
            if fam == "identity":
                params = {"n": int(obj.get("n", 1))}
            elif fam == "polynomial":
                n = int(obj["n"])
                comps = [_read_terms(c, n) for c in obj["components"]]
                params = {"n": n, "components": comps}
            elif fam == "mobius":
                params = {"matrix": _matrix(obj["matrix"])}
            elif fam == "royster":
                params = {"mu": parse_complex(obj["mu"])}
            elif fam in ("koebe", "cayley", "exp"):
                params = {}
            elif fam == "product":
                params = {"factors": tuple(cls.from_json(f) for f in obj["factors"])}
            elif fam == "roper_suffridge":
                params = {"inner": cls.from_json(obj["inner"]), "n": int(obj.get("n", 2))}
            elif fam == "affine":
                base = cls.from_json(obj["base"])
                n = base.dimension
                A = _matrix(obj["A"]) if "A" in obj else np.eye(n, dtype=complex)
                b = _vector(obj["b"]) if "b" in obj else np.zeros(n, dtype=complex)
                params = {"base": base, "A": A, "b": b}
            else:
                raise InvalidSpec(f"unknown family {fam!r}")
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"malformed {fam!r} spec: {exc}") from None
        return cls(fam, params)

    def to_json(self) -> dict:
        f, p = self.family, self.params
        out: dict[str, Any] = {"family": f}
        if f == "identity":
            out["n"] = p["n"]
        elif f == "polynomial":
            out["n"] = p["n"]
            out["components"] = [
                [[list(e), complex_pair(v)] for e, v in sorted(c.items(), key=_grlex_key)]
                for c in p["components"]]
        elif f == "mobius":
            out["matrix"] = [[complex_pair(x) for x in row] for row in p["matrix"]]
        elif f == "royster":
            out["mu"] = complex_pair(p["mu"])
        elif f == "product":
            out["factors"] = [s.to_json() for s in p["factors"]]
        elif f == "roper_suffridge":
            out["inner"] = p["inner"].to_json()
            out["n"] = p["n"]
        elif f == "affine":
            out["base"] = p["base"].to_json()
            out["A"] = [[complex_pair(x) for x in row] for row in p["A"]]
            out["b"] = [complex_pair(x) for x in p["b"]]
        return out

    # -- convenience constructors ----------------------------------------
    @classmethod
    def identity(cls, n: int) -> "MapSpec":
        return cls("identity", {"n": n})

    @classmethod
    def polynomial(cls, n: int, components: Sequence[Mapping]) -> "MapSpec":
        return cls("polynomial", {"n": n, "components": [
            {tuple(int(x) for x in e): complex(v) for e, v in c.items()} for c in components]})

    @classmethod
    def mobius(cls, matrix) -> "MapSpec":
        return cls("mobius", {"matrix": np.array(matrix, dtype=complex)})

    @classmethod
    def one_variable(cls, family: str, **params) -> "MapSpec":
        if family == "royster":
            params = {"mu": complex(params["mu"])}
        return cls(family, params)

    @classmethod
    def product(cls, *factors: "MapSpec") -> "MapSpec":
        return cls("product", {"factors": tuple(factors)})

    @classmethod
    def roper_suffridge(cls, inner: "MapSpec", n: int = 2) -> "MapSpec":
        return cls("roper_suffridge", {"inner": inner, "n": n})

    @classmethod
    def affine(cls, base: "MapSpec", A, b) -> "MapSpec":
        return cls("affine", {"base": base, "A": np.array(A, dtype=complex),
                              "b": np.array(b, dtype=complex)})

    def __hash__(self):
        return hash(repr(self.to_json()))

    def __eq__(self, other):
        return isinstance(other, MapSpec) and self.to_json() == other.to_json()


def _grlex_key(item):
    e = item[0]
    return (sum(e), tuple(-x for x in e))


def _read_terms(obj, n: int) -> dict[tuple[int, ...], complex]:
    """Coefficient list ``[[exponent, value], ...]`` or ``{"1,0": value}``."""
    terms: dict[tuple[int, ...], complex] = {}
    items = obj.items() if isinstance(obj, Mapping) else obj
    for key, val in items:
        if isinstance(key, str):
            key = [int(s) for s in key.split(",")]
        exp = tuple(int(e) for e in key)
        if len(exp) != n or min(exp) < 0:
            raise InvalidSpec(f"bad exponent {exp} for n={n}")
        terms[exp] = terms.get(exp, 0j) + parse_complex(val)
    return terms


def _validate(spec: MapSpec) -> None:
    f, p = spec.family, spec.params
    if f in ("identity", "polynomial") and int(p.get("n", 0)) < 1:
        raise InvalidSpec("dimension must be >= 1")
    if f == "polynomial" and len(p["components"]) != p["n"]:
        raise InvalidSpec("polynomial map needs n components")
    if f == "mobius":
        M = p["matrix"]
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 2:
            raise InvalidSpec("mobius matrix must be (n+1)x(n+1) with n >= 1")
        if abs(np.linalg.det(M)) <= 1e-14 * max(1.0, np.abs(M).max()) ** M.shape[0]:
            raise InvalidSpec("mobius matrix is singular")
    if f == "product":
        for s in p["factors"]:
            if s.dimension != 1:
                raise InvalidSpec("product factors must be one-variable specs")
    if f == "roper_suffridge":
        if p["inner"].dimension != 1:
            raise InvalidSpec("roper_suffridge needs a one-variable inner spec")
        if int(p.get("n", 2)) < 2:
            raise InvalidSpec("roper_suffridge needs n >= 2")
    if f == "affine":
        n = p["base"].dimension
        A, b = p["A"], p["b"]
        if A.shape != (n, n) or b.shape != (n,):
            raise InvalidSpec("affine A must be n x n and b length n")
        if abs(np.linalg.det(A)) <= 1e-14 * max(1.0, np.abs(A).max()) ** n:
            raise SingularAffine("affine matrix A is singular")


def ball_automorphism(a) -> MapSpec:
    """Unit-ball automorphism with ``phi(0) = a``:

    ``phi(z) = (a + P_a z + s Q_a z) / (1 + <z, a>)`` where ``P_a`` projects
    onto ``a``, ``Q_a = I - P_a`` and ``s = sqrt(1 - |a|^2)``.  Returned as a
    Möbius spec.
    """
    a = np.asarray(a, dtype=complex)
    n = a.size
    r2 = float(np.vdot(a, a).real)
    if r2 >= 1.0:
        raise DomainError("automorphism parameter must lie in the open unit ball")
    s = np.sqrt(1.0 - r2)
    P = np.outer(a, a.conj()) / r2 if r2 > 0 else np.zeros((n, n), dtype=complex)
    L = P + s * (np.eye(n) - P)
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[0, 0] = 1.0
    M[0, 1:] = a.conj()
    M[1:, 0] = a
    M[1:, 1:] = L
    return MapSpec.mobius(M)


# ---------------------------------------------------------------------------
# JetMap

@dataclass(frozen=True)
class JetMap:
    """Taylor germ of a map C^n -> C^n at ``basepoint``.

    ``components[l]`` is the jet of ``f_l(basepoint + h)`` in ``h``.
    """

    components: tuple
    basepoint: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise IncompatibleJets("JetMap needs at least one component")
        n, m = comps[0].nvars, comps[0].order
        for c in comps:
            if c.nvars != n or c.order != m:
                raise IncompatibleJets("components must share nvars and order")
        if len(comps) != n:
            raise IncompatibleJets(f"{len(comps)} components for {n} variables")
        bp = np.array(self.basepoint, dtype=complex).reshape(n)
        bp.flags.writeable = False
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "basepoint", bp)

    @property
    def n(self) -> int:
        return self.components[0].nvars

    @property
    def order(self) -> int:
        return self.components[0].order

    @property
    def value(self) -> np.ndarray:
        return np.array([c.const for c in self.components])

    def __getitem__(self, l: int) -> Jet:
        return self.components[l]

    def __len__(self):
        return self.n

    def differential(self) -> list[list[Jet]]:
        """``D[l][i]`` = jet of d f_l / d z_i (order ``order - 1``)."""
        return [[c.partial(i) for i in range(self.n)] for c in self.components]

    def differential_at_base(self) -> np.ndarray:
        lay = layout(self.n, self.order)
        if self.order < 1:
            raise IncompatibleJets("order-0 germ has no differential")
        return np.array([c.coeffs[1:1 + self.n] for c in self.components])

    def second_derivatives_at_base(self) -> np.ndarray:
        """``H[l, i, j]`` = d^2 f_l / dz_i dz_j at the basepoint."""
        n = self.n
        lay = layout(n, self.order)
        H = np.zeros((n, n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                fac = 2.0 if i == j else 1.0
                k = lay.index[tuple(e)]
                for l, c in enumerate(self.components):
                    H[l, i, j] = fac * c.coeffs[k]
        return H

    def truncate(self, order: int) -> "JetMap":
        return JetMap(tuple(c.truncate(order) for c in self.components), self.basepoint)

    def eval(self, offset) -> np.ndarray:
        """Evaluate the truncation at ``basepoint + offset``."""
        offset = np.atleast_1d(np.asarray(offset, dtype=complex))
        if offset.shape != (self.n,):
            raise BadIndex("offset length mismatch")
        return np.array([c.eval(offset) for c in self.components])

    def compose(self, inner: "JetMap", atol: float = 1e-9) -> "JetMap":
        """``self ∘ inner``; ``self`` must be centred at ``inner``'s value."""
        if inner.n != self.n:
            raise IncompatibleJets("composition dimension mismatch")
        w0 = inner.value
        if np.max(np.abs(w0 - self.basepoint)) > atol * max(1.0, np.abs(w0).max()):
            raise IncompatibleJets("outer germ is not centred at the inner value")
        # inner carries constants = self.basepoint; compose() recentres at them,
        # so strip them to read self in its own local coordinates
        local = [c - w0[l] for l, c in enumerate(inner.components)]
        comps = [c.compose(local) for c in self.components]
        return JetMap(tuple(comps), inner.basepoint)

    def allclose(self, other: "JetMap", tol: float = 1e-12) -> bool:
        return max_coeff_diff(self, other) <= tol

    def coefficients(self) -> list[dict]:
        return [c.to_dict() for c in self.components]


def max_coeff_diff(F: JetMap, G: JetMap) -> float:
    m = min(F.order, G.order)
    return max(float(np.max(np.abs(a.truncate(m).coeffs - b.truncate(m).coeffs)))
               for a, b in zip(F.components, G.components))


def identity_germ(n: int, order: int, basepoint=None) -> JetMap:
    bp = np.zeros(n, dtype=complex) if basepoint is None else np.asarray(basepoint, complex)
    return JetMap(tuple(Jet.variable(n, order, i, bp[i]) for i in range(n)), bp)


# ---------------------------------------------------------------------------
# germ construction

def _one_variable_jet(spec: MapSpec, p: complex, order: int) -> Jet:
    z = Jet.variable(1, order, 0, p)
    f = spec.family
    if f in ("koebe", "cayley", "royster") and abs(p) >= 1.0:
        raise DomainError(f"{f} germ requested outside the unit disk at {p}")
    if f == "koebe":
        return z * (1 - z).reciprocal() ** 2
    if f == "cayley":
        return z * (1 - z).reciprocal()
    if f == "royster":
        return (1 - z).pow(spec.params["mu"]) - 1
    if f == "exp":
        return z.exp() - 1
    if f == "identity":
        return z
    raise InvalidSpec(f"{f} is not a one-variable family")


def _components(spec: MapSpec, p: np.ndarray, order: int) -> list[Jet]:
    f, prm = spec.family, spec.params
    n = spec.dimension
    if p.shape != (n,):
        raise BadIndex(f"basepoint has length {p.size}, expected {n}")
    if f in ONE_VARIABLE:
        return [_one_variable_jet(spec, complex(p[0]), order)]
    if f == "identity":
        return [Jet.variable(n, order, i, p[i]) for i in range(n)]
    if f == "polynomial":
        deg = max((sum(e) for c in prm["components"] for e in c), default=0)
        out = []
        for terms in prm["components"]:
            poly = Jet.from_dict(n, max(deg, order), terms)
            out.append(poly.shift(p).truncate(order))
        return out
    if f == "mobius":
        M = prm["matrix"]
        ls = []
        for row in M:
            jet = Jet.constant(n, order, row[0] + np.dot(row[1:], p))
            for i in range(n):
                if row[i + 1] != 0:
                    jet = jet + Jet.variable(n, order, i) * row[i + 1]
            ls.append(jet)
        l0 = ls[0]
        scale = np.abs(M).max() * (1 + np.abs(p).sum())
        if abs(l0.const) <= 1e-12 * scale:
            raise DomainError("basepoint lies on the polar hyperplane of the Möbius map")
        inv = l0.reciprocal()
        return [l * inv for l in ls[1:]]
    if f == "product":
        out = []
        for i, fac in enumerate(prm["factors"]):
            one = _one_variable_jet(fac, complex(p[i]), order)
            out.append(embed(one, n, [i]))
        return out
    if f == "roper_suffridge":
        if np.linalg.norm(p) >= 1.0:
            raise DomainError("roper_suffridge germ requested outside the unit ball")
        inner = _one_variable_jet(prm["inner"], complex(p[0]), order + 1)
        fprime = inner.partial(0)
        d0 = fprime.const
        if d0.imag == 0.0 and d0.real <= 0.0:
            raise DomainError("f'(z_1) on the closed negative real axis: sqrt branch cut")
        root = embed(fprime.sqrt(), n, [0])
        out = [embed(inner.truncate(order), n, [0])]
        for i in range(1, n):
            out.append(root * Jet.variable(n, order, i, p[i]))
        return out
    if f == "affine":
        base = _components(prm["base"], p, order)
        A, b = prm["A"], prm["b"]
        return [sum((base[j] * A[k, j] for j in range(n)), Jet.constant(n, order, b[k]))
                for k in range(n)]
    raise InvalidSpec(f"unknown family {f!r}")


def build_germ(spec, basepoint, order: int = 6, check: bool = True) -> JetMap:
    """Taylor germ of ``spec`` at ``basepoint`` to total degree ``order``.

    Raises DomainError outside the family's domain and NotLocallyBiholomorphic
    when the differential at the basepoint is singular (``check=True``).
    """
    spec = MapSpec.from_json(spec)
    p = np.atleast_1d(np.asarray(basepoint, dtype=complex))
    comps = _components(spec, p, order)
    F = JetMap(tuple(comps), p)
    if check and order >= 1:
        D = F.differential_at_base()
        scale = np.prod(np.maximum(np.linalg.norm(D, axis=1), 1e-300))
        if abs(np.linalg.det(D)) <= 1e-13 * scale:
            raise NotLocallyBiholomorphic(f"singular differential at {p}")
    return F


def jacobian_det(F: JetMap) -> Jet:
    """Determinant of the Jacobian matrix as a jet of order ``F.order - 1``
    (Leibniz expansion: ring operations only)."""
    D = F.differential()
    n = F.n
    total = Jet(n, F.order - 1)
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        term = D[0][perm[0]]
        for r in range(1, n):
            term = term * D[r][perm[r]]
        total = total + term if sign > 0 else total - term
    return total


def _perm_sign(perm) -> int:
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def affine_compose(F: JetMap, A, b) -> JetMap:
    """Germ of ``A @ F + b`` (basepoint unchanged)."""
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = F.n
    if A.shape != (n, n) or b.shape != (n,):
        raise BadIndex("affine data has the wrong shape")
    if abs(np.linalg.det(A)) <= 1e-14 * max(1.0, np.abs(A).max()) ** n:
        raise SingularAffine("affine matrix A is singular")
    comps = []
    for k in range(n):
        acc = Jet.constant(n, F.order, b[k])
        for j in range(n):
            if A[k, j] != 0:
                acc = acc + F.components[j] * A[k, j]
        comps.append(acc)
    return JetMap(tuple(comps), F.basepoint)


def normalize(F: JetMap) -> JetMap:
    """``Df(p)^{-1} (F - F(p))``: value 0 and identity differential."""
    D = F.differential_at_base()
    Dinv = np.linalg.inv(D)
    return affine_compose(F, Dinv, -Dinv @ F.value)


def principal_root(z: complex, k: float) -> complex:
    return cmath.exp(k * cmath.log(z))
