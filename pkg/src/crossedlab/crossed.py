"""Finitely supported crossed-product elements: twisted convolution, involution, weighted norms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .coeff import (CoefficientAlgebra, DomainError, FunctionAlgebra, GroupAction, ScalarAlgebra,
                    make_action)
from .groups import BudgetExceeded, FreeAbelian, Gauge, Group, gauge_for

DEFAULT_SUPPORT_BUDGET = 2_000_000


class CrossedContext:
    """The triple (G, A, alpha) plus the word gauge used for weights."""

    def __init__(self, group: Group, algebra: CoefficientAlgebra | None = None,
                 action: GroupAction | None = None, gauge: Gauge | None = None,
                 support_budget: int = DEFAULT_SUPPORT_BUDGET):
        self.group = group
        self.algebra = algebra if algebra is not None else ScalarAlgebra()
        if action is None:
            action = make_action(group, self.algebra, "trivial", fit=False)
        if action.group is not group or action.algebra is not self.algebra:
            raise DomainError("action does not match the group and algebra")
        self.action = action
        self.gauge = gauge if gauge is not None else gauge_for(group)
        self.support_budget = support_budget
        self._fast = isinstance(self.algebra, ScalarAlgebra) and action.trivial

    # -- element construction
    def key(self, g):
        if isinstance(self.group, FreeAbelian):
            if isinstance(g, (int, np.integer)) and self.group.d == 1:
                return (int(g),)
            if isinstance(g, list):
                return tuple(g)
        if isinstance(g, list):
            return self.group.from_json(g)
        return g

    def coeff(self, a):
        alg = self.algebra
        if isinstance(alg, ScalarAlgebra):
            return a if alg.exact else complex(a)
        if isinstance(alg, FunctionAlgebra) and isinstance(a, dict):
            return alg.element(a)
        return np.asarray(a, dtype=complex)

    def element(self, data=None, err: float = 0.0) -> "CrossedElement":
        items = data.items() if isinstance(data, dict) else (data or [])
        out: dict = {}
        for g, a in items:
            g = self.key(g)
            a = self.coeff(a)
            out[g] = out[g] + a if g in out else a
        return CrossedElement(self, out, err)

    def delta(self, g, a=None) -> "CrossedElement":
        if a is None:
            a = self.algebra.one()
        return self.element([(g, a)])

    def one(self) -> "CrossedElement":
        return self.delta(self.group.identity)

    def zero(self) -> "CrossedElement":
        return CrossedElement(self, {})

    def from_json(self, x) -> "CrossedElement":
        return self.element([(self.group.from_json(g), self.algebra.from_json(a)) for g, a in x])

    # -- tower protocol used by the generic verifiers
    def mul(self, x, y):
        return convolve(x, y)

    def norm(self, x, m: int = 0):
        """Crossed tower ||x||'_m = ||x||_{m,m}."""
        return weighted_norm(x, m, m)

    def tau(self, g) -> int:
        return self.gauge.word_length(g)

    def sort_key(self, g):
        return (self.tau(g), repr(g))


class CrossedElement:
    """Sparse map G -> A. Zero coefficients are never stored."""

    __slots__ = ("ctx", "data", "err")

    def __init__(self, ctx: CrossedContext, data: dict, err: float = 0.0):
        alg = ctx.algebra
        self.ctx = ctx
        self.data = {g: a for g, a in data.items() if not alg.is_zero(a)}
        self.err = float(err)

    # -- basic protocol
    def __getitem__(self, g):
        g = self.ctx.key(g)
        return self.data.get(g, self.ctx.algebra.zero())

    def __len__(self):
        return len(self.data)

    def support(self) -> list:
        return sorted(self.data, key=self.ctx.sort_key)

    def items(self):
        return [(g, self.data[g]) for g in self.support()]

    def _check(self, other):
        if not isinstance(other, CrossedElement) or other.ctx is not self.ctx:
            raise DomainError("elements belong to different crossed contexts")

    def __add__(self, other):
        self._check(other)
        out = dict(self.data)
        for g, a in other.data.items():
            out[g] = out[g] + a if g in out else a
        return CrossedElement(self.ctx, out, self.err + other.err)

    def __neg__(self):
        return CrossedElement(self.ctx, {g: -a for g, a in self.data.items()}, self.err)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, CrossedElement):
            return convolve(self, other)
        return CrossedElement(self.ctx, {g: a * other for g, a in self.data.items()}, self.err * abs(other))

    def __rmul__(self, other):
        return CrossedElement(self.ctx, {g: other * a for g, a in self.data.items()}, self.err * abs(other))

    def __truediv__(self, c):
        return CrossedElement(self.ctx, {g: a / c for g, a in self.data.items()}, self.err / abs(c))

    def __pow__(self, n: int):
        return power(self, n)

    def star(self) -> "CrossedElement":
        return involution(self)

    def norm(self, d: int = 0, m: int = 0):
        return weighted_norm(self, d, m)

    def to_json(self):
        G, A = self.ctx.group, self.ctx.algebra
        return [[G.to_json(g), A.to_json(a)] for g, a in self.items()]

    def __repr__(self):
        return f"CrossedElement({len(self.data)} terms)"


def _same(phi: CrossedElement, psi: CrossedElement):
    if phi.ctx is not psi.ctx:
        raise DomainError("elements belong to different crossed contexts")


def convolve(phi: CrossedElement, psi: CrossedElement) -> CrossedElement:
    """(phi * psi)(g) = sum_h phi(h) alpha_h(psi(h^-1 g)).

    Inner sums run over supports sorted by canonical order so results are
    reproducible bit for bit.
    """
    _same(phi, psi)
    ctx = phi.ctx
    mul = ctx.group.mul
    out: dict = {}
    left = phi.items()
    right = psi.items()
    if ctx._fast:
        for h, a in left:
            for k, b in right:
                g = mul(h, k)
                t = a * b
                out[g] = out[g] + t if g in out else t
            if len(out) > ctx.support_budget:
                raise BudgetExceeded(ctx.support_budget, "support")
    else:
        alg, act = ctx.algebra, ctx.action
        for h, a in left:
            for k, b in right:
                g = mul(h, k)
                t = alg.mul(a, act.apply(h, b))
                out[g] = out[g] + t if g in out else t
            if len(out) > ctx.support_budget:
                raise BudgetExceeded(ctx.support_budget, "support")
    err = 0.0
    if phi.err or psi.err:
        err = phi.err * (weighted_norm(psi, 0, 0) + psi.err) + weighted_norm(phi, 0, 0) * psi.err
    return CrossedElement(ctx, out, err)


def involution(phi: CrossedElement) -> CrossedElement:
    """phi*(g) = alpha_g(phi(g^-1)^*), unimodular case."""
    ctx = phi.ctx
    G, alg, act = ctx.group, ctx.algebra, ctx.action
    out = {}
    for h, a in phi.data.items():
        g = G.inv(h)
        out[g] = act.apply(g, alg.adjoint(a))
    return CrossedElement(ctx, out, phi.err)


def weighted_norm(phi: CrossedElement, d: int = 0, m: int = 0):
    """sum_g (1 + tau(g))^d ||phi(g)||_m. Exact for integer or Fraction scalars."""
    ctx = phi.ctx
    alg = ctx.algebra
    tau = ctx.tau
    total = 0
    for g, a in phi.items():
        w = (1 + tau(g)) ** d
        total = total + w * alg.norm(a, m)
    return total


def gauge_multiplier(phi: CrossedElement, k: int) -> CrossedElement:
    """g -> tau(g)^k phi(g), raw gauge."""
    if k == 0:
        return CrossedElement(phi.ctx, dict(phi.data), phi.err)
    tau = phi.ctx.tau
    return CrossedElement(phi.ctx, {g: tau(g) ** k * a for g, a in phi.data.items()})


def prune(phi: CrossedElement, eps: float) -> CrossedElement:
    """Drop coefficients with ||.||_0 < eps, adding their l1 mass to the error bound."""
    if eps <= 0:
        return phi
    alg = phi.ctx.algebra
    keep, lost = {}, 0.0
    for g, a in phi.data.items():
        n = alg.norm(a, 0)
        if n < eps:
            lost += float(n)
        else:
            keep[g] = a
    return CrossedElement(phi.ctx, keep, phi.err + lost)


def power(phi: CrossedElement, n: int, eps: float = 0.0) -> CrossedElement:
    """phi^n by repeated squaring; eps > 0 prunes after every product."""
    if n < 0:
        raise DomainError("negative power")
    out = phi.ctx.one()
    base = phi
    while n:
        if n & 1:
            out = prune(convolve(out, base), eps)
        n >>= 1
        if n:
            base = prune(convolve(base, base), eps)
    return out


def powers(phi: CrossedElement, n_max: int, eps: float = 0.0) -> Iterable[CrossedElement]:
    """phi^1, ..., phi^n_max computed sequentially."""
    cur = phi
    yield cur
    for _ in range(n_max - 1):
        cur = prune(convolve(cur, phi), eps)
        yield cur


def exponential(phi: CrossedElement, tol: float = 1e-14, max_terms: int = 400) -> CrossedElement:
    """sum_k phi^k / k!, stopped once the l1 tail bound L^(K+1) e^L / (K+1)! is below tol."""
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    L = float(weighted_norm(phi, 0, 0))
    out = phi.ctx.one()
    term = phi.ctx.one()
    for k in range(1, max_terms + 1):
        log_tail = (k * math.log(L) + L - math.lgamma(k + 1)) if L > 0 else -math.inf
        if log_tail < math.log(tol):
            return out
        term = convolve(term, phi) / k
        out = out + term
    raise DomainError(f"exponential series did not reach tolerance {tol} in {max_terms} terms")


# ---------------------------------------------------------------- unitization


class UnitizedElement:
    """a + lam*1 over any tower algebra exposing mul(x, y) and norm(x, m).

    ||a + lam 1||'_0 = ||a||_0 + |lam| and ||a + lam 1||'_m = ||a||_m for m > 0.
    """

    __slots__ = ("alg", "a", "lam")

    def __init__(self, alg, a, lam=0.0):
        self.alg = alg
        self.a = a
        self.lam = lam

    def __mul__(self, other: "UnitizedElement") -> "UnitizedElement":
        a, lam, b, mu = self.a, self.lam, other.a, other.lam
        return UnitizedElement(self.alg, self.alg.mul(a, b) + lam * b + mu * a, lam * mu)

    def __add__(self, other: "UnitizedElement") -> "UnitizedElement":
        return UnitizedElement(self.alg, self.a + other.a, self.lam + other.lam)

    def seminorm(self, m: int = 0):
        n = self.alg.norm(self.a, m)
        return n + abs(self.lam) if m == 0 else n

    def __repr__(self):
        return f"UnitizedElement(lam={self.lam!r})"


def unitize(phi, lam=0.0, alg=None) -> UnitizedElement:
    if alg is None:
        alg = phi.ctx
    return UnitizedElement(alg, phi, lam)


def unitized_seminorm(x: UnitizedElement, m: int = 0):
    return x.seminorm(m)


# ---------------------------------------------------------------- kernels


@dataclass
class KernelBound:
    schur: float
    bound: float
    ok: bool


def regular_kernel(phi: CrossedElement, window: list) -> np.ndarray:
    """Scalar kernel K(g, h) = alpha_{g^-1}(phi(g h^-1)) on a finite window.

    For function coefficients the result has the extra axis of the coefficient's index set.
    """
    ctx = phi.ctx
    G, act = ctx.group, ctx.action
    n = len(window)
    shape = (n, n) + np.shape(ctx.algebra.one())
    K = np.zeros(shape, dtype=complex)
    for i, g in enumerate(window):
        gi = G.inv(g)
        for j, h in enumerate(window):
            x = G.mul(g, G.inv(h))
            a = phi.data.get(x)
            if a is not None:
                K[i, j] = act.apply(gi, a)
    return K


def kernel_derivation_bound(phi: CrossedElement, radius: int) -> KernelBound:
    """Schur bound of i(tau(g) - tau(h)) K(g, h) against ||gauge_multiplier(phi, 1)||_{0,0}."""
    ctx = phi.ctx
    window = ctx.gauge.ball(radius)
    K = regular_kernel(phi, window)
    tau = np.array([ctx.tau(g) for g in window], dtype=float)
    diff = tau[:, None] - tau[None, :]
    absK = np.abs(K) if K.ndim == 2 else np.abs(K).max(axis=tuple(range(2, K.ndim)))
    D = np.abs(diff) * absK
    schur = float(max(D.sum(axis=0).max(), D.sum(axis=1).max()))
    bound = float(weighted_norm(gauge_multiplier(phi, 1), 0, 0))
    return KernelBound(schur, bound, schur <= bound * (1 + 1e-9) + 1e-12)


def crossed_context(group: Group, algebra: CoefficientAlgebra | None = None, rule: str = "trivial",
                    **kw) -> CrossedContext:
    alg = algebra if algebra is not None else ScalarAlgebra()
    return CrossedContext(group, alg, make_action(group, alg, rule, fit=False, **kw))
