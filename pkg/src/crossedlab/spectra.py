"""Spectral radii, C*-norm estimates, Neumann inversion and decay profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
import scipy.sparse as sps

from .coeff import DomainError, FunctionAlgebra, MatrixLift, ScalarAlgebra
from .crossed import (CrossedElement, UnitizedElement, convolve, gauge_multiplier, involution,
                      powers, weighted_norm)
from .groups import BudgetExceeded, FreeAbelian, ball_sizes
from .linalg import top_singular


class UnsupportedMethod(ValueError):
    pass


class NonInvertibilityEvidence(RuntimeError):
    """The Neumann series showed no decay; evidence, not proof, of non-invertibility."""


def exact_root(x, n: int):
    """x^(1/n), exact when x is an int or Fraction that is a perfect n-th power."""
    if n == 1:
        return x
    if isinstance(x, Fraction):
        p, q = exact_root(x.numerator, n), exact_root(x.denominator, n)
        if isinstance(p, int) and isinstance(q, int):
            return Fraction(p, q)
        return float(x) ** (1.0 / n)
    if isinstance(x, int) and x >= 0:
        if x in (0, 1):
            return x
        r = int(round(math.exp(math.log(x) / n)))
        for c in (r - 1, r, r + 1):
            if c >= 0 and c ** n == x:
                return c
        return math.exp(math.log(x) / n)
    return float(x) ** (1.0 / n)


def _as_float(x) -> float:
    return float(x)


# ---------------------------------------------------------------- spectral radius


@dataclass
class SpectralReport:
    d: int
    m: int
    sequence: list          # (n, ||phi^n||_{d,m}^(1/n))
    estimate: Any           # min over the sequence
    last: Any
    monotone: bool          # sequence nonincreasing
    partial: bool = False

    def value(self, n: int):
        for k, v in self.sequence:
            if k == n:
                return v
        raise KeyError(n)

    def to_dict(self):
        enc = lambda v: str(v) if isinstance(v, Fraction) else v
        return {"norm": {"d": self.d, "m": self.m}, "sequence": [[n, enc(v)] for n, v in self.sequence],
                "estimate": enc(self.estimate), "last": enc(self.last), "monotone": self.monotone,
                "partial": self.partial}


def spectral_radius(phi: CrossedElement, d: int = 0, m: int = 0, n_max: int = 64,
                    eps: float = 0.0) -> SpectralReport:
    """Sequence ||phi^n||_{d,m}^(1/n) for n = 1..n_max; the estimate is its minimum."""
    if not phi.data:
        raise DomainError("spectral radius of the zero element")
    if n_max < 2:
        raise DomainError("n_max must be >= 2")
    seq = []
    partial = False
    try:
        for n, p in enumerate(powers(phi, n_max, eps), start=1):
            seq.append((n, exact_root(weighted_norm(p, d, m), n)))
    except BudgetExceeded:
        partial = True
    if not seq:
        raise BudgetExceeded(phi.ctx.support_budget, "support")
    vals = [v for _, v in seq]
    est = min(vals)
    mono = all(vals[i + 1] <= vals[i] for i in range(len(vals) - 1))
    return SpectralReport(d, m, seq, est, vals[-1], mono, partial)


# ---------------------------------------------------------------- C*-norm estimates


@dataclass
class CstarEstimate:
    method: str
    value: float
    error: float               # certified grid error (fourier) or iteration residual (compression)
    lower_bound: bool          # compression values only bound the norm from below
    R: int | None = None
    iterations: int = 0
    converged: bool = True

    def to_dict(self):
        return {"method": self.method, "value": self.value, "error": self.error,
                "lower_bound": self.lower_bound, "R": self.R, "iterations": self.iterations,
                "converged": self.converged}


def _coeff_matrix(ctx, a) -> np.ndarray:
    alg = ctx.algebra
    if isinstance(alg, ScalarAlgebra):
        return np.array([[complex(a)]])
    return alg.as_operator(a)


def cstar_fourier(phi: CrossedElement, grid: int | None = None) -> CstarEstimate:
    """sup over a torus grid of the symbol norm, with first-derivative grid error."""
    ctx = phi.ctx
    G = ctx.group
    if not isinstance(G, FreeAbelian):
        raise UnsupportedMethod("Fourier estimate needs a free-abelian group")
    if not ctx.action.trivial:
        raise UnsupportedMethod("Fourier estimate needs the trivial action")
    d = G.d
    if grid is None:
        grid = {1: 2 ** 16, 2: 2 ** 9, 3: 2 ** 6}.get(d, 2 ** 4)
    if not phi.data:
        return CstarEstimate("fourier", 0.0, 0.0, False)
    span = max(max(abs(c) for c in g) for g in phi.data)
    if 2 * span + 1 > grid:
        raise DomainError(f"grid {grid} too small for support radius {span}")
    alg = ctx.algebra
    if isinstance(alg, ScalarAlgebra):
        arr = np.zeros((grid,) * d, dtype=complex)
        for g, a in phi.data.items():
            arr[tuple(c % grid for c in g)] += complex(a)
        value = float(np.abs(np.fft.fftn(arr)).max())
    elif isinstance(alg, FunctionAlgebra):
        arr = np.zeros((grid,) * d + (alg.dim_L,), dtype=complex)
        for g, a in phi.data.items():
            arr[tuple(c % grid for c in g)] += a
        value = float(np.abs(np.fft.fftn(arr, axes=tuple(range(d)))).max())
    else:
        k = alg.dim_L
        arr = np.zeros((grid,) * d + (k, k), dtype=complex)
        for g, a in phi.data.items():
            arr[tuple(c % grid for c in g)] += alg.as_operator(a)
        sym = np.fft.fftn(arr, axes=tuple(range(d))).reshape(-1, k, k)
        value = 0.0
        for i in range(0, len(sym), 4096):
            value = max(value, float(np.linalg.norm(sym[i:i + 4096], ord=2, axis=(1, 2)).max()))
    lip = sum(ctx.tau(g) * float(alg.norm(a, 0) if not isinstance(alg, MatrixLift)
                                  else np.linalg.norm(alg.as_operator(a), 2))
              for g, a in phi.data.items())
    err = lip * (2 * math.pi / grid) * d
    return CstarEstimate("fourier", value, err, False)


def regular_operator(phi: CrossedElement, radius: int):
    """Sparse matrix of lambda(phi) restricted to l2(B_R) (x) L, rows over B_R . supp(phi).

    Block (g, k) is alpha_{g^-1}(phi(g k^-1)) acting on L.
    """
    ctx = phi.ctx
    G, act = ctx.group, ctx.action
    cols = ctx.gauge.ball(radius)
    row_index: dict = {}
    for g in cols:
        row_index[g] = len(row_index)
    dL = 1 if isinstance(ctx.algebra, ScalarAlgebra) else ctx.algebra.dim_L
    items = phi.items()
    scalar_trivial = ctx._fast and not ctx.algebra.exact
    R, C, V = [], [], []
    for j, k in enumerate(cols):
        for h, a in items:
            g = G.mul(h, k)
            i = row_index.get(g)
            if i is None:
                i = row_index[g] = len(row_index)
            if scalar_trivial:
                R.append(i)
                C.append(j)
                V.append(a)
            else:
                blk = _coeff_matrix(ctx, act.apply(G.inv(g), a) if not act.trivial else a)
                r0, c0 = i * dL, j * dL
                for p in range(dL):
                    for q in range(dL):
                        if blk[p, q] != 0:
                            R.append(r0 + p)
                            C.append(c0 + q)
                            V.append(blk[p, q])
    shape = (len(row_index) * dL, len(cols) * dL)
    T = sps.csr_matrix((np.asarray(V, dtype=complex), (R, C)), shape=shape)
    return T, cols, dL


def cstar_compression(phi: CrossedElement, R: int, tol: float = 1e-10, seed: int = 0,
                      max_iter: int = 50000) -> CstarEstimate:
    """sqrt of the top eigenvalue of P lambda(phi* phi) P on l2(B_R), by power iteration.

    Starts from delta_e (x) unit vector, then one random restart; reports the larger.
    """
    if not phi.data:
        return CstarEstimate(f"compression({R})", 0.0, 0.0, True, R)
    T, cols, dL = regular_operator(phi, R)
    TH = T.conj().T.tocsr()
    mv, rmv = T.dot, TH.dot
    n = T.shape[1]
    e = cols.index(phi.ctx.group.identity)
    start = np.zeros(n, dtype=complex)
    start[e * dL:(e + 1) * dL] = 1.0 / math.sqrt(dL)
    best = top_singular(mv, rmv, start, tol, max_iter)
    rng = np.random.default_rng(seed)
    alt = top_singular(mv, rmv, rng.standard_normal(n) + 1j * rng.standard_normal(n), tol, max_iter)
    if alt.value > best.value:
        best = alt
    return CstarEstimate(f"compression({R})", best.value, best.residual, True, R, best.iterations,
                         best.converged)


# ---------------------------------------------------------------- Neumann inversion


@dataclass
class InversionCertificate:
    terms: int
    tail_ratios: dict = field(default_factory=dict)     # (d, m) -> geometric tail ratio
    verdicts: dict = field(default_factory=dict)        # (d, m) -> bool
    residual: float = 0.0
    tol: float = 0.0

    @property
    def ok(self) -> bool:
        return self.residual <= self.tol and all(self.verdicts.values())

    def to_dict(self):
        return {"terms": self.terms, "residual": self.residual, "tol": self.tol,
                "tail_ratios": [[d, m, r] for (d, m), r in sorted(self.tail_ratios.items())],
                "verdicts": [[d, m, v] for (d, m), v in sorted(self.verdicts.items())]}


def neumann_inverse(x, tol: float = 1e-10, d_max: int = 6, m_max: int = 0, n_cap: int = 5000,
                    decay_window: int = 50):
    """Invert x = 1 - a by the Neumann series, stopping when ||a^(N+1)||_{0,0} < tol.

    ``x`` is a crossed element in a unital context or a UnitizedElement with
    nonzero scalar part. Returns (inverse, certificate).
    """
    scale = 1.0
    if isinstance(x, UnitizedElement):
        if x.lam == 0:
            raise NonInvertibilityEvidence("unitized element with zero scalar part")
        scale = x.lam
        a = x.a * (-1.0 / x.lam)
        ctx = a.ctx
        one = None
    else:
        ctx = x.ctx
        one = ctx.one()
        a = one - x
    levels = [(d, m) for d in range(d_max + 1) for m in range(m_max + 1)]
    hist: dict = {lv: [] for lv in levels}
    total = ctx.one() if one is not None else None
    term = None
    n = 0
    while True:
        nxt = a if term is None else convolve(term, a)
        n += 1
        nn = float(weighted_norm(nxt, 0, 0))
        for lv in levels:
            hist[lv].append(float(weighted_norm(nxt, *lv)))
        if nn < tol:
            break
        if n >= n_cap:
            raise NonInvertibilityEvidence(f"||a^n|| still {nn:.3g} after {n_cap} terms")
        if n > decay_window and nn >= hist[(0, 0)][n - 1 - decay_window]:
            raise NonInvertibilityEvidence(f"no decay of ||a^n|| over {decay_window} terms at n={n}")
        term = nxt
        total = term if total is None else total + term
    terms = n - 1
    ratios, verdicts = {}, {}
    for lv, seq in hist.items():
        L = max(1, len(seq) // 4)
        hi, lo = seq[-1], seq[-1 - L] if len(seq) > L else seq[0]
        if len(seq) <= L or lo == 0:
            r = 0.0
        else:
            r = (hi / lo) ** (1.0 / L)
        ratios[lv] = r
        verdicts[lv] = r < 1.0
    if one is None:
        # inverse of lam(1 - a) is lam^-1 (1 + sum a^n)
        inv = UnitizedElement(ctx, (total if total is not None else ctx.zero()) * (1.0 / scale), 1.0 / scale)
        prod = x * inv
        residual = float(ctx.norm(prod.a, 0)) + abs(prod.lam - 1)
    else:
        inv = total
        residual = float(weighted_norm(convolve(x, inv) - one, 0, 0))
    cert = InversionCertificate(terms, ratios, verdicts, residual, tol)
    return inv, cert


# ---------------------------------------------------------------- Pytlik sequences


@dataclass
class RatioReport:
    ratios: list         # a_n for n = 0..n_max
    running_max: list    # max over a_k, k >= n (tail sup)
    limsup: Any

    def to_dict(self):
        enc = lambda v: str(v) if isinstance(v, Fraction) else v
        return {"ratios": [enc(v) for v in self.ratios], "running_max": [enc(v) for v in self.running_max],
                "limsup": enc(self.limsup)}


def _ratio(a, b):
    if isinstance(a, int) and isinstance(b, int) or isinstance(a, Fraction) or isinstance(b, Fraction):
        r = Fraction(a) / Fraction(b)
        return int(r) if r.denominator == 1 else r
    return a / b


def _self_adjoint_defect(phi: CrossedElement) -> float:
    return float(weighted_norm(phi - involution(phi), 0, 0))


def pytlik_ratio(phi: CrossedElement, n_max: int = 32) -> RatioReport:
    """a_n = ||phi^(n+2)||_1 / ||phi^n||_1; its limsup approaches nu(phi)^2."""
    if _self_adjoint_defect(phi) > 1e-12 * max(1.0, float(weighted_norm(phi, 0, 0))):
        raise DomainError("element is not self-adjoint")
    norms = [weighted_norm(phi.ctx.one(), 0, 0)]
    for p in powers(phi, n_max + 2):
        norms.append(weighted_norm(p, 0, 0))
    ratios = [_ratio(norms[n + 2], norms[n]) for n in range(n_max + 1)]
    run = list(ratios)
    for i in range(len(run) - 2, -1, -1):
        run[i] = max(run[i], run[i + 1])
    tail = ratios[len(ratios) // 2:]
    return RatioReport(ratios, run, max(tail))


@dataclass
class SplitBound:
    m: int
    lhs: float
    rhs: float
    psi_norm: float
    compression: float
    M: float
    N: float
    r: float
    ok: bool

    def to_dict(self):
        return dict(self.__dict__)


def _l2(f: CrossedElement) -> float:
    return math.sqrt(sum(abs(complex(a)) ** 2 for a in f.data.values()))


def pytlik_split_bound(psi: CrossedElement, f1: CrossedElement, f2: CrossedElement, q: int, m: int,
                       growth=None, cstar=None, compression_R: int = 4) -> SplitBound:
    """Both sides of ||f1 psi f2||_1 <= ||psi|| M m^r + ||psi tau^q||_1 N m^-q.

    M = ||f1*||_2 ||f2||_2 K with K = max_n |B_n| / n^r the volume constant,
    N = ||f1 tau^q||_1 ||f2 tau^q||_1 with the normalized gauge. ||psi|| is a
    certified upper bound: the Fourier value plus its error on Z^d, else ||psi||_1.
    """
    ctx = psi.ctx
    if not isinstance(ctx.algebra, ScalarAlgebra):
        raise UnsupportedMethod("split bound is implemented for scalar coefficients")
    if m < 1:
        raise DomainError("m must be >= 1")
    G = ctx.group
    if growth is None:
        growth = ball_sizes(G, max(8, m))
    if not growth.classification.startswith("polynomial"):
        raise UnsupportedMethod(f"growth is {growth.classification}; degree undefined")
    r = growth.degree
    sizes = growth.sizes if len(growth.sizes) > m else ball_sizes(G, m).sizes
    K = max(s / n ** r for n, s in enumerate(sizes) if n >= 1)
    M = _l2(involution(f1)) * _l2(f2) * K
    N = float(weighted_norm(f1, q, 0)) * float(weighted_norm(f2, q, 0))
    if cstar is None:
        if isinstance(G, FreeAbelian) and ctx.action.trivial:
            est = cstar_fourier(psi)
            cstar = min(est.value + est.error, float(weighted_norm(psi, 0, 0)))
        else:
            cstar = float(weighted_norm(psi, 0, 0))
    comp = cstar_compression(psi, compression_R).value if compression_R else float("nan")
    lhs = float(weighted_norm(convolve(convolve(f1, psi), f2), 0, 0))
    rhs = cstar * M * m ** r + float(weighted_norm(psi, q, 0)) * N * m ** (-q)
    return SplitBound(m, lhs, rhs, cstar, comp, M, N, r, lhs <= rhs * (1 + 1e-9))


# ---------------------------------------------------------------- derivations


@dataclass
class DerivationCheck:
    operator_side: np.ndarray
    multiplier_side: np.ndarray
    max_diff: float
    ok: bool
    window: list

    def to_dict(self):
        return {"max_diff": self.max_diff, "ok": self.ok, "window_size": len(self.window)}


def derivation_check(phi: CrossedElement, k: int, R: int, eta: np.ndarray | None = None,
                     tol: float = 1e-12) -> DerivationCheck:
    """Compare delta^k(T) applied to delta_e (x) eta with i^k tau(g)^k alpha_{g^-1}(phi(g)) eta.

    T is the regular kernel of phi on B_R, D the raw gauge as a diagonal
    operator, and delta(T) = i[D, T] computed with matrix products.
    """
    ctx = phi.ctx
    G, act = ctx.group, ctx.action
    window = ctx.gauge.ball(R)
    pos = {g: i for i, g in enumerate(window)}
    for g in phi.data:
        if g not in pos:
            raise DomainError(f"window B_{R} does not contain support point {g!r}")
    dL = 1 if isinstance(ctx.algebra, ScalarAlgebra) else ctx.algebra.dim_L
    if eta is None:
        eta = np.ones(dL, dtype=complex) / math.sqrt(dL)
    W = len(window)
    T = np.zeros((W * dL, W * dL), dtype=complex)
    for i, g in enumerate(window):
        gi = G.inv(g)
        for j, h in enumerate(window):
            a = phi.data.get(G.mul(g, G.inv(h)))
            if a is not None:
                blk = _coeff_matrix(ctx, a if act.trivial else act.apply(gi, a))
                T[i * dL:(i + 1) * dL, j * dL:(j + 1) * dL] = blk
    tau = np.repeat(np.array([ctx.tau(g) for g in window], dtype=float), dL)
    D = np.diag(tau.astype(complex))
    for _ in range(k):
        T = 1j * (D @ T - T @ D)
    xi = np.zeros(W * dL, dtype=complex)
    e = pos[G.identity]
    xi[e * dL:(e + 1) * dL] = eta
    lhs = T @ xi
    rhs = np.zeros(W * dL, dtype=complex)
    for g, a in phi.data.items():
        i = pos[g]
        blk = _coeff_matrix(ctx, a if act.trivial else act.apply(G.inv(g), a))
        rhs[i * dL:(i + 1) * dL] = (1j ** k) * ctx.tau(g) ** k * (blk @ eta)
    diff = float(np.abs(lhs - rhs).max()) if W else 0.0
    scale = max(1.0, float(np.abs(rhs).max()) if W else 0.0)
    return DerivationCheck(lhs, rhs, diff, diff <= tol * scale, window)


def multiplier_side_norm(phi: CrossedElement, k: int) -> float:
    return float(weighted_norm(gauge_multiplier(phi, k), 0, 0))
