"""Finitely generated discrete groups with canonical element forms.

Elements are plain hashable Python values in canonical form, so equality of
group elements is equality of their representations:

* free-abelian(d): tuples of d ints
* cyclic(n): ints in range(n)
* heisenberg: integer triples (a, b, c) with (a,b,c)(a',b',c') = (a+a', b+b', c+c'+a*b')
* free(k): reduced words, tuples of nonzero ints where -i is the inverse of letter i
* finite-table: ints indexing a Cayley table
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

Element = Hashable

DEFAULT_RADIUS_CAP = 256
DEFAULT_BALL_BUDGET = 2_000_000


class GroupError(ValueError):
    """Malformed group descriptor or table."""


class GaugeOverflow(RuntimeError):
    """BFS hit the configured radius cap before reaching an element."""

    def __init__(self, cap: int, element: Any = None):
        super().__init__(f"gauge-overflow: radius cap {cap} exceeded (element {element!r})")
        self.cap = cap
        self.element = element


class BudgetExceeded(RuntimeError):
    def __init__(self, budget: int, what: str = "ball"):
        super().__init__(f"{what} budget of {budget} elements exceeded")
        self.budget = budget


class Group:
    """Base class; subclasses implement mul, inv and the element codecs."""

    kind: str = "abstract"
    identity: Element
    generators: tuple

    def mul(self, g, h):
        raise NotImplementedError

    def inv(self, g):
        raise NotImplementedError

    def to_json(self, g) -> Any:
        return list(g) if isinstance(g, tuple) else g

    def from_json(self, x) -> Element:
        return tuple(x) if isinstance(x, list) else x

    def is_abelian(self) -> bool:
        return False

    def descriptor(self) -> dict:
        raise NotImplementedError

    def with_generators(self, gens: Iterable) -> "Group":
        """Same group, different symmetric generating set."""
        raise NotImplementedError

    def _set_generators(self, gens: Iterable) -> None:
        sym = []
        for g in gens:
            g = self.from_json(g) if isinstance(g, list) else g
            for x in (g, self.inv(g)):
                if x != self.identity and x not in sym:
                    sym.append(x)
        if not sym:
            raise GroupError("generating set is empty")
        self.generators = tuple(sym)

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor()})"

    def power(self, g, n: int):
        if n < 0:
            g, n = self.inv(g), -n
        out, base = self.identity, g
        while n:
            if n & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            n >>= 1
        return out


class FreeAbelian(Group):
    kind = "free-abelian"

    def __init__(self, d: int, generators: Iterable | None = None):
        if d < 1:
            raise GroupError("free-abelian rank must be >= 1")
        self.d = d
        self.identity = (0,) * d
        if generators is None:
            generators = [tuple(int(i == j) for j in range(d)) for i in range(d)]
        self._set_generators(tuple(int(v) for v in g) for g in generators)

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def is_abelian(self):
        return True

    def descriptor(self):
        return {"kind": self.kind, "d": self.d, "generators": [list(g) for g in self.generators]}

    def with_generators(self, gens):
        return FreeAbelian(self.d, gens)


class Cyclic(Group):
    kind = "cyclic"

    def __init__(self, n: int, generators: Iterable | None = None):
        if n < 2:
            raise GroupError("cyclic order must be >= 2")
        self.n = n
        self.identity = 0
        self._set_generators(int(g) % n for g in (generators or [1]))

    def mul(self, g, h):
        return (g + h) % self.n

    def inv(self, g):
        return (-g) % self.n

    def is_abelian(self):
        return True

    def elements(self):
        return list(range(self.n))

    def descriptor(self):
        return {"kind": self.kind, "n": self.n, "generators": list(self.generators)}

    def with_generators(self, gens):
        return Cyclic(self.n, gens)


class Heisenberg(Group):
    kind = "heisenberg"

    def __init__(self, generators: Iterable | None = None):
        self.identity = (0, 0, 0)
        self._set_generators(generators or [(1, 0, 0), (0, 1, 0)])

    def mul(self, g, h):
        return (g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1])

    def inv(self, g):
        return (-g[0], -g[1], g[0] * g[1] - g[2])

    def descriptor(self):
        return {"kind": self.kind, "generators": [list(g) for g in self.generators]}

    def with_generators(self, gens):
        return Heisenberg(gens)


class Free(Group):
    kind = "free"

    def __init__(self, k: int, generators: Iterable | None = None):
        if k < 1:
            raise GroupError("free rank must be >= 1")
        self.k = k
        self.identity = ()
        if generators is None:
            generators = [(i,) for i in range(1, k + 1)]
        self._set_generators(self._reduce(tuple(g)) for g in generators)

    def _reduce(self, word: Sequence[int]) -> tuple:
        out: list[int] = []
        for x in word:
            if x == 0 or abs(x) > self.k:
                raise GroupError(f"letter {x} not in free({self.k})")
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def mul(self, g, h):
        i = 0
        n = min(len(g), len(h))
        while i < n and g[-1 - i] == -h[i]:
            i += 1
        return g[: len(g) - i] + h[i:]

    def inv(self, g):
        return tuple(-x for x in reversed(g))

    def from_json(self, x):
        return self._reduce(tuple(x))

    def descriptor(self):
        return {"kind": self.kind, "k": self.k, "generators": [list(g) for g in self.generators]}

    def with_generators(self, gens):
        return Free(self.k, gens)


class FiniteTable(Group):
    kind = "finite-table"

    def __init__(self, table: Sequence[Sequence[int]], generators: Iterable | None = None):
        t = np.asarray(table, dtype=int)
        n = t.shape[0]
        if t.ndim != 2 or t.shape != (n, n) or n < 1:
            raise GroupError("Cayley table must be square")
        if t.min() < 0 or t.max() >= n:
            raise GroupError("Cayley table entries out of range")
        ids = [e for e in range(n) if all(t[e, x] == x and t[x, e] == x for x in range(n))]
        if not ids:
            raise GroupError("Cayley table has no identity")
        e = ids[0]
        # associativity, exhaustively: t[t[a,b],c] == t[a,t[b,c]]
        lhs = t[t, :]  # lhs[a,b,c] = t[t[a,b], c]
        rhs = t[:, t]  # rhs[a,b,c] = t[a, t[b,c]]
        if not np.array_equal(lhs, rhs):
            a, b, c = np.argwhere(lhs != rhs)[0]
            raise GroupError(f"Cayley table not associative at ({a},{b},{c})")
        inv = []
        for x in range(n):
            row = np.flatnonzero(t[x] == e)
            if len(row) != 1 or t[row[0], x] != e:
                raise GroupError(f"element {x} has no two-sided inverse")
            inv.append(int(row[0]))
        self.table = t
        self.n = n
        self.identity = e
        self._inv = inv
        if generators is None:
            generators = [x for x in range(n) if x != e]
        if n == 1:
            self.generators = ()
        else:
            self._set_generators(int(g) for g in generators)

    def mul(self, g, h):
        return int(self.table[g, h])

    def inv(self, g):
        return self._inv[g]

    def is_abelian(self):
        return bool(np.array_equal(self.table, self.table.T))

    def elements(self):
        return list(range(self.n))

    def descriptor(self):
        return {"kind": self.kind, "table": self.table.tolist(), "generators": list(self.generators)}

    def with_generators(self, gens):
        return FiniteTable(self.table, gens)


def make_group(spec) -> Group:
    """Build a group from a descriptor.

    Accepts a dict such as ``{"kind": "free", "k": 2}`` or a short string:
    ``Z``, ``Z^3``, ``free-abelian(2)``, ``cyclic(5)``, ``heisenberg``, ``free(2)``.
    """
    if isinstance(spec, Group):
        return spec
    if isinstance(spec, str):
        spec = _parse_group_string(spec)
    spec = dict(spec)
    kind = spec.pop("kind")
    gens = spec.pop("generators", None)
    if kind == "free-abelian":
        g: Group = FreeAbelian(int(spec.get("d", 1)), gens)
    elif kind == "cyclic":
        g = Cyclic(int(spec["n"]), gens)
    elif kind == "heisenberg":
        g = Heisenberg(gens)
    elif kind == "free":
        g = Free(int(spec.get("k", 2)), gens)
    elif kind == "finite-table":
        g = FiniteTable(spec["table"], gens)
    else:
        raise GroupError(f"unknown group kind {kind!r}")
    _check_axioms(g)
    return g


def _parse_group_string(s: str) -> dict:
    s = s.strip().lower().replace(" ", "")
    if s in ("z", "free-abelian"):
        return {"kind": "free-abelian", "d": 1}
    if s.startswith("z^"):
        return {"kind": "free-abelian", "d": int(s[2:])}
    if s == "heisenberg":
        return {"kind": "heisenberg"}
    for prefix, kind, key in (("free-abelian(", "free-abelian", "d"), ("cyclic(", "cyclic", "n"),
                              ("free(", "free", "k"), ("z_", "cyclic", "n")):
        if s.startswith(prefix):
            return {"kind": kind, key: int(s[len(prefix):].rstrip(")"))}
    if s.startswith("free") and s[4:].isdigit():
        return {"kind": "free", "k": int(s[4:])}
    raise GroupError(f"cannot parse group descriptor {s!r}")


def _check_axioms(g: Group) -> None:
    e = g.identity
    for u in g.generators:
        if g.mul(e, u) != u or g.mul(u, e) != u:
            raise GroupError(f"identity axiom fails at {u!r}")
        if g.mul(u, g.inv(u)) != e or g.mul(g.inv(u), u) != e:
            raise GroupError(f"inverse axiom fails at {u!r}")
        if g.inv(u) not in g.generators:
            raise GroupError(f"generating set not symmetric at {u!r}")


@dataclass
class Gauge:
    """Word length with respect to a symmetric generating set, computed by BFS.

    Values are memoized layer by layer; extension of the BFS frontier is
    guarded by a lock so concurrent readers see a consistent table.
    """

    group: Group
    generators: tuple | None = None
    radius_cap: int = DEFAULT_RADIUS_CAP
    budget: int = DEFAULT_BALL_BUDGET
    normalized: bool = False
    _dist: dict = field(default_factory=dict, init=False, repr=False)
    _layers: list = field(default_factory=list, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)
    _exhausted: bool = field(default=False, init=False, repr=False)
    _closed: Any = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.generators is None:
            self.generators = self.group.generators
        else:
            gens = []
            for u in self.generators:
                for x in (u, self.group.inv(u)):
                    if x != self.group.identity and x not in gens:
                        gens.append(x)
            self.generators = tuple(gens)
        self._dist[self.group.identity] = 0
        self._layers.append([self.group.identity])
        self._closed = _closed_form(self.group, self.generators)

    @property
    def radius(self) -> int:
        """Largest radius whose ball is fully enumerated."""
        return len(self._layers) - 1

    def _grow(self) -> bool:
        frontier = self._layers[-1]
        if not frontier:
            self._exhausted = True
            return False
        n = len(self._layers)
        if n > self.radius_cap:
            return False
        mul, dist = self.group.mul, self._dist
        new = []
        for g in frontier:
            for u in self.generators:
                h = mul(g, u)
                if h not in dist:
                    dist[h] = n
                    new.append(h)
        if len(dist) > self.budget:
            for h in new:
                del dist[h]
            raise BudgetExceeded(self.budget)
        self._layers.append(new)
        if not new:
            self._exhausted = True
        return bool(new)

    def ensure_radius(self, r: int) -> None:
        if r > self.radius_cap:
            raise GaugeOverflow(self.radius_cap)
        with self._lock:
            while self.radius < r and not self._exhausted:
                self._grow()

    def word_length(self, g) -> int:
        d = self._dist.get(g)
        if d is not None:
            return d
        if self._closed is not None:
            return self._closed(g)
        with self._lock:
            while g not in self._dist:
                if self._exhausted:
                    raise GroupError(f"{g!r} is not generated by {self.generators}")
                if self.radius >= self.radius_cap:
                    raise GaugeOverflow(self.radius_cap, g)
                self._grow()
            return self._dist[g]

    def __call__(self, g) -> int:
        """Gauge value; 1 + word length when normalized."""
        w = self.word_length(g)
        return w + 1 if self.normalized else w

    def ball(self, r: int) -> list:
        """Elements of word length <= r, in BFS order."""
        self.ensure_radius(r)
        out = []
        for layer in self._layers[: r + 1]:
            out.extend(layer)
        return out

    def sphere(self, r: int) -> list:
        self.ensure_radius(r)
        return list(self._layers[r]) if r < len(self._layers) else []

    def normalize(self) -> "Gauge":
        """A gauge sharing this BFS table that reports 1 + word length."""
        other = Gauge(self.group, self.generators, self.radius_cap, self.budget, normalized=True)
        other._dist, other._layers, other._lock = self._dist, self._layers, self._lock
        other._exhausted = self._exhausted
        other._closed = self._closed
        return other


def _closed_form(group: Group, gens: tuple):
    """Exact word length for standard generating sets where it has a formula."""
    if isinstance(group, FreeAbelian):
        std = {tuple(s * int(i == j) for j in range(group.d)) for i in range(group.d) for s in (1, -1)}
        if set(gens) == std:
            return lambda g: sum(abs(a) for a in g)
    if isinstance(group, Free):
        std = {(s * i,) for i in range(1, group.k + 1) for s in (1, -1)}
        if set(gens) == std:
            return len
    return None


def word_gauge(group: Group, g, radius_cap: int = DEFAULT_RADIUS_CAP) -> int:
    """Exact word length of g with respect to the group's generating set."""
    return gauge_for(group, radius_cap).word_length(g)


_GAUGES: dict = {}


def gauge_for(group: Group, radius_cap: int = DEFAULT_RADIUS_CAP) -> Gauge:
    """Shared memoized word gauge for a group instance."""
    key = id(group)
    ga = _GAUGES.get(key)
    if ga is None or ga.group is not group:
        ga = Gauge(group, radius_cap=radius_cap)
        _GAUGES[key] = ga
    return ga


@dataclass
class GrowthReport:
    sizes: list
    degree: float | None
    classification: str
    window: tuple
    partial: bool = False

    def to_dict(self) -> dict:
        return {
            "sizes": [int(s) for s in self.sizes],
            "degree": self.degree,
            "classification": self.classification,
            "window": list(self.window),
            "partial": self.partial,
        }

    def volume_constant(self) -> float:
        """Smallest K with |B_n| <= K n^r over the recorded radii n >= 1."""
        if self.degree is None:
            raise ValueError("growth degree undefined")
        return max(s / n**self.degree for n, s in enumerate(self.sizes) if n >= 1)


def ball_sizes(group: Group, n_max: int, budget: int = DEFAULT_BALL_BUDGET,
               gauge: Gauge | None = None) -> GrowthReport:
    """Exact ball counts |B_0|, ..., |B_n_max| and a log-log growth fit."""
    ga = gauge or Gauge(group, radius_cap=max(n_max, 1), budget=budget)
    partial = False
    try:
        ga.ensure_radius(n_max)
    except BudgetExceeded:
        partial = True
    sizes = []
    total = 0
    for layer in ga._layers[: n_max + 1]:
        total += len(layer)
        sizes.append(total)
    while not partial and len(sizes) < n_max + 1:
        sizes.append(total)  # finite group: ball saturates
    n_hi = len(sizes) - 1
    lo = max(1, n_hi // 2)
    window = (lo, n_hi)
    ns = np.arange(lo, n_hi + 1)
    if partial or len(ns) < 3:
        return GrowthReport(sizes, None, "inconclusive", window, partial)
    logs = np.log(np.asarray(sizes, dtype=float)[lo:])
    A = np.vstack([np.log(ns), np.ones_like(ns, dtype=float)]).T
    (slope, _), res_poly, *_ = np.linalg.lstsq(A, logs, rcond=None)
    B = np.vstack([ns.astype(float), np.ones_like(ns, dtype=float)]).T
    (rate, _), res_exp, *_ = np.linalg.lstsq(B, logs, rcond=None)
    rp = float(res_poly[0]) if len(res_poly) else 0.0
    re_ = float(res_exp[0]) if len(res_exp) else 0.0
    if sizes[-1] == sizes[lo]:
        return GrowthReport(sizes, 0.0, "polynomial(0)", window)
    if re_ < rp and rate > 0.1:
        return GrowthReport(sizes, float(slope), "exponential", window)
    return GrowthReport(sizes, float(slope), f"polynomial({slope:.3g})", window)


@dataclass
class Domination:
    C: float
    d: int
    ok: bool
    detail: str = ""


def gauge_dominates(tau1, tau2, sample: Iterable, d_max: int = 6,
                    growth_tol: float = 1.25) -> Domination:
    """Find the smallest d with tau1 <= C (1 + tau2)^d on the sample.

    A finite sample can always be covered by a large enough C, so a degree is
    accepted only if the required constant has stabilised: the constant needed
    on the whole sample may exceed the one needed on its inner half (points
    with tau1 at most half the maximum) by at most ``growth_tol``.
    """
    pts = list(sample)
    if not pts:
        raise ValueError("empty sample")
    t1 = np.array([tau1(g) for g in pts], dtype=float)
    t2 = np.array([tau2(g) for g in pts], dtype=float)
    inner = t1 <= t1.max() / 2
    for d in range(d_max + 1):
        req = t1 / (1.0 + t2) ** d
        c_full = float(req.max())
        c_inner = float(req[inner].max()) if inner.any() else 0.0
        if c_full <= growth_tol * c_inner or c_full == 0.0:
            return Domination(max(1.0, float(math.ceil(c_full - 1e-12))), d, True)
    return Domination(math.inf, d_max, False, "required constant keeps growing with the sample")
