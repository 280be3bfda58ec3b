"""Smooth compact operators: rapidly decreasing Z x Z matrices with coefficients in A."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeff import CoefficientAlgebra, DomainError, FunctionAlgebra, ScalarAlgebra
from .crossed import CrossedContext, CrossedElement
from .linalg import matrix_norm


class SmoothCompactElement:
    """Sparse map (r, s) -> coefficient."""

    __slots__ = ("algebra", "data")

    def __init__(self, algebra: CoefficientAlgebra, data: dict):
        self.algebra = algebra
        self.data = {(int(r), int(s)): a for (r, s), a in data.items() if not algebra.is_zero(a)}

    def __getitem__(self, rs):
        return self.data.get(tuple(rs), self.algebra.zero())

    def keys(self):
        return sorted(self.data)

    def __add__(self, other):
        out = dict(self.data)
        for k, a in other.data.items():
            out[k] = out[k] + a if k in out else a
        return SmoothCompactElement(self.algebra, out)

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, other):
        if isinstance(other, SmoothCompactElement):
            return sk_multiply(self, other)
        return SmoothCompactElement(self.algebra, {k: a * other for k, a in self.data.items()})

    __rmul__ = __mul__

    def bounds(self):
        if not self.data:
            return 0, 0
        idx = [i for k in self.data for i in k]
        return min(idx), max(idx)

    def to_json(self):
        return [[r, s, self.algebra.to_json(self.data[(r, s)])] for r, s in self.keys()]

    def __repr__(self):
        return f"SmoothCompactElement({len(self.data)} entries)"


def sk_element(data, algebra: CoefficientAlgebra | None = None) -> SmoothCompactElement:
    alg = algebra if algebra is not None else ScalarAlgebra()
    items = data.items() if isinstance(data, dict) else ((tuple(x[:2]), x[2]) for x in data)
    conv = (lambda a: complex(a)) if isinstance(alg, ScalarAlgebra) and not alg.exact else (lambda a: a)
    return SmoothCompactElement(alg, {k: conv(a) for k, a in items})


def matrix_unit(r: int, s: int, algebra: CoefficientAlgebra | None = None, a=None) -> SmoothCompactElement:
    alg = algebra if algebra is not None else ScalarAlgebra()
    return SmoothCompactElement(alg, {(r, s): alg.one() if a is None else a})


def sk_seminorm(phi: SmoothCompactElement, q: int = 0) -> float:
    """sum_{r,s} (1 + |r| + |s|)^q ||phi(r, s)||_q."""
    alg = phi.algebra
    return sum((1 + abs(r) + abs(s)) ** q * alg.norm(a, q) for (r, s), a in sorted(phi.data.items()))


def sk_multiply(phi: SmoothCompactElement, psi: SmoothCompactElement) -> SmoothCompactElement:
    """(phi * psi)(r, t) = sum_s phi(r, s) psi(s, t)."""
    if phi.algebra is not psi.algebra and phi.algebra.name != psi.algebra.name:
        raise DomainError("smooth compact elements over different coefficient algebras")
    alg = phi.algebra
    rows: dict = {}
    for (s, t), b in sorted(psi.data.items()):
        rows.setdefault(s, []).append((t, b))
    out: dict = {}
    for (r, s), a in sorted(phi.data.items()):
        for t, b in rows.get(s, ()):
            k = (r, t)
            v = alg.mul(a, b)
            out[k] = out[k] + v if k in out else v
    return SmoothCompactElement(alg, out)


def _window(lo: int, hi: int):
    if hi < lo:
        raise DomainError("empty window")
    return hi - lo + 1


def sk_apply(phi: SmoothCompactElement, xi: np.ndarray, window: tuple[int, int]) -> np.ndarray:
    """(phi xi)(r) = sum_t phi(r, t) xi(t) on the index window [lo, hi].

    ``xi`` has shape (W,) for scalar coefficients or (W, dim_L) otherwise.
    """
    lo, hi = window
    W = _window(lo, hi)
    alg = phi.algebra
    xi = np.asarray(xi, dtype=complex)
    if xi.shape[0] != W:
        raise DomainError(f"vector length {xi.shape[0]} does not match window size {W}")
    out = np.zeros_like(xi)
    for (r, t), a in sorted(phi.data.items()):
        if not (lo <= r <= hi and lo <= t <= hi):
            raise DomainError(f"window [{lo}, {hi}] does not cover entry ({r}, {t})")
        out[r - lo] = out[r - lo] + alg.act_on_vector(a, xi[t - lo])
    return out


def sk_dense(phi: SmoothCompactElement, window: tuple[int, int]) -> np.ndarray:
    """Dense matrix of phi acting on l2(window) tensor L."""
    lo, hi = window
    W = _window(lo, hi)
    alg = phi.algebra
    d = alg.dim_L
    M = np.zeros((W * d, W * d), dtype=complex)
    for (r, t), a in phi.data.items():
        if not (lo <= r <= hi and lo <= t <= hi):
            raise DomainError(f"window [{lo}, {hi}] does not cover entry ({r}, {t})")
        i, j = (r - lo) * d, (t - lo) * d
        M[i:i + d, j:j + d] += alg.as_operator(a)
    return M


def sk_operator_norm(phi: SmoothCompactElement, window: tuple[int, int] | None = None,
                     tol: float = 1e-10) -> float:
    """Operator norm on a covering window, plus the power-iteration residual."""
    if not phi.data:
        return 0.0
    if window is None:
        window = phi.bounds()
    res = matrix_norm(sk_dense(phi, window), tol)
    return res.value + res.residual


@dataclass
class IdealBound:
    lhs: float
    rhs: float
    c: float
    ok: bool

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "c": self.c, "ok": self.ok}


def sk_ideal_bound(psi1: SmoothCompactElement, phi: SmoothCompactElement, psi2: SmoothCompactElement,
                   window: tuple[int, int] | None = None) -> IdealBound:
    """||psi1 phi psi2||_0 against c ||psi1||_0 ||psi2||_0 with c the operator norm of phi."""
    lhs = float(sk_seminorm(sk_multiply(sk_multiply(psi1, phi), psi2), 0))
    c = sk_operator_norm(phi, window)
    rhs = c * float(sk_seminorm(psi1, 0)) * float(sk_seminorm(psi2, 0))
    return IdealBound(lhs, rhs, c, lhs <= rhs * (1 + 1e-9))


def split_inequality_holds(q: int, r1: int, r2: int) -> bool:
    lhs = (1 + abs(r1) + abs(r2)) ** q
    return lhs <= 2 ** q * ((1 + abs(r1)) ** q + (1 + abs(r2)) ** q)


class SmoothCompactAlgebra:
    """Tower view of S(Z^2, A) for the generic chain verifiers."""

    def __init__(self, algebra: CoefficientAlgebra | None = None):
        self.algebra = algebra if algebra is not None else ScalarAlgebra()
        self.name = f"S(Z^2, {self.algebra.name})"

    def mul(self, x, y):
        return sk_multiply(x, y)

    def norm(self, x, m=0):
        return sk_seminorm(x, m)


def crossed_to_smooth_compact(phi: CrossedElement) -> SmoothCompactElement:
    """Z x| S(Z) with translation -> S(Z^2): K(r, s) = phi(r - s)(r)."""
    alg = phi.ctx.algebra
    if not isinstance(alg, FunctionAlgebra) or getattr(phi.ctx.group, "d", None) != 1:
        raise DomainError("needs the Z translation crossed product over a function algebra on Z")
    out = {}
    for (j,), f in phi.data.items():
        for pos in np.flatnonzero(f):
            r = alg.labels[pos]
            out[(r, r - j)] = complex(f[pos])
    return SmoothCompactElement(ScalarAlgebra(), out)


def smooth_compact_to_crossed(K: SmoothCompactElement, ctx: CrossedContext) -> CrossedElement:
    """Inverse of crossed_to_smooth_compact; entries must lie in the coefficient window."""
    alg = ctx.algebra
    coeffs: dict = {}
    for (r, s), a in K.data.items():
        j = r - s
        if r not in alg.index:
            raise DomainError(f"row index {r} outside the coefficient window")
        f = coeffs.setdefault(j, alg.zero())
        f[alg.index[r]] += a
    return ctx.element({(j,): f for j, f in coeffs.items()})
