"""Coefficient *-algebras with seminorm towers, and isometric group actions on them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .groups import Gauge, Group, gauge_for

DEFAULT_M_MAX = 8


class DomainError(ValueError):
    """Element or argument outside the domain of an operation."""


class ActionError(ValueError):
    def __init__(self, msg: str, witness: Any = None):
        super().__init__(msg)
        self.witness = witness


class CoefficientAlgebra:
    """Normed *-algebra B with an increasing tower of seminorms ||.||_0 <= ||.||_1 <= ...

    Subclasses fix the element representation. ``L`` is the Hilbert space the
    algebra is faithfully represented on; ``dim_L`` its dimension.
    """

    name = "abstract"
    m_max: int = DEFAULT_M_MAX
    exact: bool = False
    pointwise = False

    def mul(self, a, b):
        raise NotImplementedError

    def adjoint(self, a):
        raise NotImplementedError

    def norm(self, a, m: int = 0):
        raise NotImplementedError

    def one(self):
        raise NotImplementedError

    def zero(self):
        raise NotImplementedError

    def is_zero(self, a) -> bool:
        return self.norm(a, 0) == 0

    def basis(self) -> list:
        raise NotImplementedError

    @property
    def dim_L(self) -> int:
        raise NotImplementedError

    def as_operator(self, a) -> np.ndarray:
        """Dense matrix of a acting on L."""
        raise NotImplementedError

    def act_on_vector(self, a, v):
        return self.as_operator(a) @ v

    def random(self, rng: np.random.Generator, heavy: bool = False):
        raise NotImplementedError

    def to_json(self, a):
        raise NotImplementedError

    def from_json(self, x):
        raise NotImplementedError

    def __repr__(self):
        return f"<{self.name}>"


def _complex_json(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _parse_complex(x):
    if isinstance(x, (list, tuple)):
        return complex(x[0], x[1])
    return x


class ScalarAlgebra(CoefficientAlgebra):
    """The complex numbers, with every seminorm equal to the modulus.

    With ``exact=True`` coefficients are Python ints or Fractions and norms are exact.
    """

    pointwise = True

    def __init__(self, exact: bool = False, m_max: int = DEFAULT_M_MAX):
        self.exact = exact
        self.m_max = m_max
        self.name = "scalar-exact" if exact else "scalar"

    def mul(self, a, b):
        return a * b

    def adjoint(self, a):
        return a.conjugate()

    def norm(self, a, m=0):
        return abs(a)

    def one(self):
        return 1 if self.exact else 1.0 + 0j

    def zero(self):
        return 0 if self.exact else 0j

    def is_zero(self, a):
        return a == 0

    def basis(self):
        return [self.one()]

    @property
    def dim_L(self):
        return 1

    def as_operator(self, a):
        return np.array([[complex(a)]])

    def act_on_vector(self, a, v):
        return a * v

    def random(self, rng, heavy=False):
        if self.exact:
            return int(rng.integers(-3, 4)) or 1
        if heavy:
            return complex(rng.standard_cauchy(), rng.standard_cauchy())
        return complex(rng.standard_normal(), rng.standard_normal())

    def to_json(self, a):
        if self.exact:
            return a if isinstance(a, int) else str(a)
        return _complex_json(a)

    def from_json(self, x):
        if self.exact:
            from fractions import Fraction
            return Fraction(x) if isinstance(x, str) else x
        return complex(_parse_complex(x))


def scalar_algebra(exact: bool = False) -> ScalarAlgebra:
    return ScalarAlgebra(exact=exact)


class FunctionAlgebra(CoefficientAlgebra):
    """Pointwise-multiplied functions on a finite index set M.

    Seminorms ||f||_d = max_m (1 + sigma(m))^d |f(m)|. Elements are complex
    numpy vectors indexed by position in ``labels``.
    """

    pointwise = True

    def __init__(self, labels: Sequence[Hashable], scale: Sequence[float], name: str = "functions",
                 m_max: int = DEFAULT_M_MAX):
        scale = np.asarray(scale, dtype=float)
        if len(scale) != len(labels):
            raise DomainError("one scale value per index required")
        if np.any(scale < 0):
            raise DomainError("scale values must be nonnegative")
        self.labels = list(labels)
        self.index = {x: i for i, x in enumerate(self.labels)}
        self.scale = scale
        self.name = name
        self.m_max = m_max
        self._weights = np.array([(1.0 + scale) ** d for d in range(m_max + 1)])

    def weight(self, d: int) -> np.ndarray:
        if d < len(self._weights):
            return self._weights[d]
        return (1.0 + self.scale) ** d

    def element(self, values: dict) -> np.ndarray:
        f = np.zeros(len(self.labels), dtype=complex)
        for x, v in values.items():
            if x not in self.index:
                raise DomainError(f"index {x!r} outside the index set of {self.name}")
            f[self.index[x]] = _parse_complex(v)
        return f

    def delta(self, x, value=1.0) -> np.ndarray:
        return self.element({x: value})

    def mul(self, a, b):
        return a * b

    def adjoint(self, a):
        return np.conj(a)

    def norm(self, a, m=0):
        return float(np.max(self.weight(m) * np.abs(a))) if len(a) else 0.0

    def norms(self, a, m_max: int) -> np.ndarray:
        absa = np.abs(a)
        return np.array([np.max(self.weight(m) * absa) for m in range(m_max + 1)])

    def one(self):
        return np.ones(len(self.labels), dtype=complex)

    def zero(self):
        return np.zeros(len(self.labels), dtype=complex)

    def is_zero(self, a):
        return not np.any(a)

    def basis(self):
        return [self.delta(x) for x in self.labels]

    @property
    def dim_L(self):
        return len(self.labels)

    def as_operator(self, a):
        return np.diag(a)

    def act_on_vector(self, a, v):
        return a * v

    def random(self, rng, heavy=False, radius: int | None = None):
        """Random element supported near the low-scale part of the index set."""
        order = np.argsort(self.scale, kind="stable")
        r = len(order) if radius is None else min(len(order), 2 * radius + 1)
        k = int(rng.integers(1, r + 1))
        pos = rng.choice(order[:r], size=k, replace=False)
        f = self.zero()
        if heavy:
            f[pos] = rng.standard_cauchy(k) + 1j * rng.standard_cauchy(k)
        else:
            f[pos] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        return f

    def to_json(self, a):
        return [[self.labels[i], _complex_json(a[i])] for i in np.flatnonzero(a)]

    def from_json(self, x):
        return self.element({lab: v for lab, v in x})


def schwartz_Z(N: int, m_max: int = DEFAULT_M_MAX) -> FunctionAlgebra:
    """Rapidly decreasing sequences on [-N, N] with ||f||_m = sup (1+|n|)^m |f(n)|."""
    if N < 1:
        raise DomainError("truncation radius must be >= 1")
    labels = list(range(-N, N + 1))
    alg = FunctionAlgebra(labels, [abs(n) for n in labels], name=f"schwartz_Z({N})", m_max=m_max)
    alg.N = N
    return alg


def scale_schwartz(M: Sequence[Hashable], sigma, m_max: int = DEFAULT_M_MAX) -> FunctionAlgebra:
    """sigma-rapidly vanishing functions on a finite set M (derivative-free case).

    ``sigma`` is a dict, a callable, or a sequence aligned with M.
    """
    M = list(M)
    if isinstance(sigma, dict):
        vals = [sigma[x] for x in M]
    elif callable(sigma):
        vals = [sigma(x) for x in M]
    else:
        vals = list(sigma)
    return FunctionAlgebra(M, vals, name="scale_schwartz", m_max=m_max)


class MatrixLift(CoefficientAlgebra):
    """M_l(A) with the entrywise-max tower ||[a]||'_m = max_ij ||a_ij||_m.

    ||.||'_0 is only equivalent to the operator norm (within a factor l).
    """

    def __init__(self, base: CoefficientAlgebra, l: int):
        if l < 1:
            raise DomainError("matrix size must be >= 1")
        self.base = base
        self.l = l
        self.m_max = base.m_max
        self.name = f"M_{l}({base.name})"
        self.pointwise = False
        b1 = base.one()
        self._bshape = np.shape(b1)

    def _empty(self):
        return np.zeros((self.l, self.l) + self._bshape, dtype=complex)

    def _check(self, a):
        if np.shape(a)[:2] != (self.l, self.l):
            raise DomainError(f"dimension mismatch: expected {self.l}x{self.l}, got {np.shape(a)[:2]}")

    def mul(self, a, b):
        self._check(a)
        self._check(b)
        if self.base.pointwise:
            return np.einsum("ik...,kj...->ij...", a, b)
        out = self._empty()
        for i in range(self.l):
            for j in range(self.l):
                acc = self.base.zero()
                for k in range(self.l):
                    acc = acc + self.base.mul(a[i, k], b[k, j])
                out[i, j] = acc
        return out

    def adjoint(self, a):
        out = self._empty()
        for i in range(self.l):
            for j in range(self.l):
                out[i, j] = self.base.adjoint(a[j, i])
        return out

    def norm(self, a, m=0):
        return max(self.base.norm(a[i, j], m) for i in range(self.l) for j in range(self.l))

    def one(self):
        out = self._empty()
        for i in range(self.l):
            out[i, i] = self.base.one()
        return out

    def zero(self):
        return self._empty()

    def is_zero(self, a):
        return not np.any(a)

    def entry(self, i, j, b):
        out = self._empty()
        out[i, j] = b
        return out

    def basis(self):
        return [self.entry(i, j, b) for i in range(self.l) for j in range(self.l) for b in self.base.basis()]

    @property
    def dim_L(self):
        return self.l * self.base.dim_L

    def as_operator(self, a):
        d = self.base.dim_L
        op = np.zeros((self.l * d, self.l * d), dtype=complex)
        for i in range(self.l):
            for j in range(self.l):
                op[i * d:(i + 1) * d, j * d:(j + 1) * d] = self.base.as_operator(a[i, j])
        return op

    def random(self, rng, heavy=False):
        out = self._empty()
        for i in range(self.l):
            for j in range(self.l):
                out[i, j] = self.base.random(rng, heavy)
        return out

    def map_entries(self, fn: Callable, a):
        out = self._empty()
        for i in range(self.l):
            for j in range(self.l):
                out[i, j] = fn(a[i, j])
        return out

    def to_json(self, a):
        return [[self.base.to_json(a[i, j]) for j in range(self.l)] for i in range(self.l)]

    def from_json(self, x):
        out = self._empty()
        for i in range(self.l):
            for j in range(self.l):
                out[i, j] = self.base.from_json(x[i][j])
        return out


def matrix_lift(A: CoefficientAlgebra, l: int) -> MatrixLift:
    return MatrixLift(A, l)


def matrix_algebra(l: int) -> MatrixLift:
    return MatrixLift(ScalarAlgebra(), l)


# ---------------------------------------------------------------- actions


@dataclass
class TemperedFit:
    m: int
    C: float
    d: int
    k: int
    ok: bool
    witness: Any = None

    def to_dict(self):
        return {"m": self.m, "C": self.C, "d": self.d, "k": self.k, "ok": self.ok,
                "witness": None if self.witness is None else repr(self.witness)}


@dataclass
class GroupAction:
    """alpha: G -> Aut(B). ``rule`` is "trivial", "translation", "permutation" or "custom"."""

    group: Group
    algebra: CoefficientAlgebra
    rule: str = "trivial"
    point_action: Callable | None = None
    custom: Callable | None = None
    certificate: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    @property
    def point_algebra(self) -> "FunctionAlgebra":
        alg = self.algebra
        return alg.base if isinstance(alg, MatrixLift) else alg

    @property
    def trivial(self) -> bool:
        return self.rule == "trivial"

    def _index_map(self, g):
        m = self._cache.get(g)
        if m is None:
            alg = self.point_algebra
            src, dst, lost = [], [], []
            for i, x in enumerate(alg.labels):
                y = self.point_action(g, x)
                j = alg.index.get(y)
                if j is None:
                    lost.append(i)
                else:
                    src.append(i)
                    dst.append(j)
            m = (np.array(src, dtype=int), np.array(dst, dtype=int), np.array(lost, dtype=int))
            if len(self._cache) < 100_000:
                self._cache[g] = m
        return m

    def _act_function(self, g, f):
        src, dst, lost = self._index_map(g)
        if len(lost) and np.any(f[lost]):
            raise DomainError(f"translation by {g!r} moves support outside the index set")
        out = np.zeros_like(f)
        out[dst] = f[src]
        return out

    def apply(self, g, a):
        if self.rule == "trivial" or g == self.group.identity:
            return a
        if self.rule == "custom":
            return self.custom(g, a)
        alg = self.algebra
        if isinstance(alg, MatrixLift):
            return alg.map_entries(lambda b: self._act_function(g, b), a)
        return self._act_function(g, a)

    __call__ = apply


def _default_point_action(group: Group, algebra: CoefficientAlgebra) -> Callable:
    sample = algebra.labels[0]
    if isinstance(sample, int) and getattr(group, "d", None) == 1 and group.kind == "free-abelian":
        return lambda g, n: n + g[0]
    if group.kind == "cyclic" and isinstance(sample, int):
        return lambda g, n: (n + g) % group.n
    return lambda g, x: group.mul(g, x)


def make_action(group: Group, algebra: CoefficientAlgebra, rule: str = "trivial",
                point_action: Callable | None = None, custom: Callable | None = None,
                check_radius: int = 2, fit: bool = True, fit_radius: int = 6,
                m_max: int | None = None, seed: int = 0) -> GroupAction:
    """Build an action and verify it is isometric on ||.||_0 over a ball of group elements.

    ``point_action(g, x)`` gives the G-set structure for "translation" and
    "permutation" rules; functions transform by (alpha_g f)(x) = f(g^-1 x).
    """
    if rule not in ("trivial", "translation", "permutation", "custom"):
        raise ActionError(f"unknown action rule {rule!r}")
    base = algebra.base if isinstance(algebra, MatrixLift) else algebra
    if rule in ("translation", "permutation"):
        if not isinstance(base, FunctionAlgebra):
            raise ActionError(f"rule {rule!r} needs a function algebra over a G-set")
        if point_action is None:
            point_action = _default_point_action(group, base)
    if rule == "custom" and custom is None:
        raise ActionError("custom rule needs a callable")
    act = GroupAction(group, algebra, rule, point_action, custom)
    rng = np.random.default_rng(seed)
    gs = _group_sample(group, check_radius)
    samples = algebra.basis()[:64] + [algebra.random(rng) for _ in range(4)]
    for g in gs:
        for a in samples:
            try:
                b = act.apply(g, a)
            except DomainError:
                continue
            na, nb = algebra.norm(a, 0), algebra.norm(b, 0)
            if abs(na - nb) > 1e-9 * max(1.0, na):
                raise ActionError(f"action is not isometric at g={g!r}", witness=(g, a))
    if fit and rule != "custom":
        m_top = algebra.m_max if m_max is None else m_max
        act.certificate = [fit_tempered(act, m, radius=fit_radius) for m in range(min(m_top, 4) + 1)]
    return act


def _group_sample(group: Group, radius: int) -> list:
    if hasattr(group, "elements"):
        return group.elements()
    return gauge_for(group).ball(radius)


def fit_tempered(action: GroupAction, m: int, radius: int = 6, samples: list | None = None,
                 d_cap: int = 12, growth_tol: float = 1.25, gauge: Gauge | None = None) -> TemperedFit:
    """Smallest d (then smallest k >= m) with ||alpha_g a||_m <= C (1+tau(g))^d ||a||_k.

    The constant is accepted only if it has stabilised in the radius of the
    group sample, as in ``gauge_dominates``; finite groups are bounded so any
    finite constant is accepted.
    """
    alg = action.algebra
    group = action.group
    finite = hasattr(group, "elements")
    ga = gauge or gauge_for(group)
    gs = _group_sample(group, radius)
    if samples is None:
        rng = np.random.default_rng(1234 + m)
        samples = alg.basis()[:200] + [alg.random(rng) for _ in range(8)]
    k_max = max(alg.m_max, m)
    rows = []  # (tau, index of a, ||alpha_g a||_m)
    for g in gs:
        t = ga.word_length(g)
        for i, a in enumerate(samples):
            try:
                b = action.apply(g, a)
            except DomainError:
                continue
            rows.append((t, i, g, alg.norm(b, m)))
    if not rows:
        return TemperedFit(m, math.inf, d_cap, m, False)
    taus = np.array([r[0] for r in rows], dtype=float)
    lhs = np.array([r[3] for r in rows], dtype=float)
    a_norms = {k: np.array([alg.norm(samples[r[1]], k) for r in rows], dtype=float) for k in range(m, k_max + 1)}
    inner = taus <= taus.max() / 2
    worst = None
    for d in range(d_cap + 1):
        w = (1.0 + taus) ** d
        for k in range(m, k_max + 1):
            den = w * a_norms[k]
            with np.errstate(divide="ignore", invalid="ignore"):
                req = np.where(den > 0, lhs / den, np.where(lhs > 0, np.inf, 0.0))
            c_full = float(req.max())
            c_inner = float(req[inner].max()) if inner.any() else 0.0
            j = int(np.argmax(req))
            if worst is None or d == 0:
                worst = (rows[j][2], samples[rows[j][1]])
            if math.isfinite(c_full) and (finite or c_full <= growth_tol * c_inner or c_full == 0.0):
                return TemperedFit(m, max(1.0, c_full), d, k, True)
    return TemperedFit(m, math.inf, d_cap, k_max, False, worst)


def failing_degree_witness(action: GroupAction, m: int, d: int, radius: int = 6,
                           growth_tol: float = 1.25) -> tuple | None:
    """Witness (g, a, required C) showing degree d does not bound the action at level m."""
    alg = action.algebra
    ga = gauge_for(action.group)
    gs = _group_sample(action.group, radius)
    samples = alg.basis()[:200]
    best = None
    inner_best = 0.0
    rmax = max(ga.word_length(g) for g in gs)
    for g in gs:
        t = ga.word_length(g)
        for a in samples:
            try:
                b = action.apply(g, a)
            except DomainError:
                continue
            den = (1.0 + t) ** d * alg.norm(a, m)
            if den == 0:
                continue
            r = alg.norm(b, m) / den
            if t <= rmax / 2:
                inner_best = max(inner_best, r)
            if best is None or r > best[2]:
                best = (g, a, r)
    if best is not None and best[2] > growth_tol * inner_best:
        return best
    return None
