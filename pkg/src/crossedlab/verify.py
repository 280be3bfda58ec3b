"""Property-test engine: samplers, chain-constant fits, verdicts with witnesses."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Sequence

import numpy as np
from scipy.special import gammaln, jv, logsumexp

from .coeff import (CoefficientAlgebra, DomainError, FunctionAlgebra, GroupAction, MatrixLift,
                    ScalarAlgebra, failing_degree_witness, fit_tempered)
from .crossed import CrossedContext, CrossedElement, UnitizedElement, exponential, power, weighted_norm
from .groups import Group
from .smoothk import SmoothCompactAlgebra, SmoothCompactElement
from .spectra import cstar_fourier

SLACK = 1e-9
C_CAP = 64.0
D_CAP = 1e6
P_SPAN = 8


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named stream derived from one seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(name.encode()),)))


# ---------------------------------------------------------------- samplers


@dataclass
class Sampler:
    name: str
    draw: Callable[[np.random.Generator], Any]
    description: dict = field(default_factory=dict)

    def __call__(self, rng):
        return self.draw(rng)


def _coeffs(rng, k, heavy):
    if heavy:
        return rng.standard_cauchy(k) + 1j * rng.standard_cauchy(k)
    return rng.standard_normal(k) + 1j * rng.standard_normal(k)


def _subset(rng, pool: list, p: float = 0.5) -> list:
    keep = [x for x in pool if rng.random() < p]
    return keep or [pool[int(rng.integers(len(pool)))]]


def function_sampler(alg: FunctionAlgebra, radii: Sequence[int] = (3, 4, 5, 6), heavy_every: int = 5) -> Sampler:
    """Support: random subset of the scale ball {sigma <= r}, r uniform over ``radii``."""
    state = {"i": 0}

    def draw(rng):
        state["i"] += 1
        heavy = heavy_every > 0 and state["i"] % heavy_every == 0
        r = int(rng.choice(radii))
        pool = [i for i, s in enumerate(alg.scale) if s <= r]
        pos = _subset(rng, pool)
        f = alg.zero()
        f[pos] = _coeffs(rng, len(pos), heavy)
        return f

    return Sampler(f"functions[{alg.name}]", draw, {"radii": list(radii), "heavy_every": heavy_every})


def scalar_sampler(heavy_every: int = 5) -> Sampler:
    state = {"i": 0}

    def draw(rng):
        state["i"] += 1
        return complex(_coeffs(rng, 1, heavy_every > 0 and state["i"] % heavy_every == 0)[0])

    return Sampler("scalar", draw, {"heavy_every": heavy_every})


def matrix_sampler(lift: MatrixLift, base: Sampler) -> Sampler:
    def draw(rng):
        out = lift.zero()
        for i in range(lift.l):
            for j in range(lift.l):
                out[i, j] = base(rng)
        return out

    return Sampler(f"matrix[{lift.l}]({base.name})", draw, {"l": lift.l, "base": base.description})


def crossed_sampler(ctx: CrossedContext, coeff: Sampler, radii: Sequence[int] = (3, 4, 5, 6),
                    p: float = 0.5) -> Sampler:
    """Support: random subset of the word ball B_r; coefficients from ``coeff``."""
    ga = ctx.gauge

    def draw(rng):
        r = int(rng.choice(radii))
        pool = ga.ball(r)
        pts = _subset(rng, pool, p)
        return ctx.element([(g, coeff(rng)) for g in pts])

    return Sampler(f"crossed[{ctx.group.kind}]({coeff.name})", draw, {"radii": list(radii), "p": p})


def smooth_compact_sampler(alg: CoefficientAlgebra | None = None, radii: Sequence[int] = (3, 4, 5, 6),
                           p: float = 0.3) -> Sampler:
    alg = alg if alg is not None else ScalarAlgebra()

    def draw(rng):
        r = int(rng.choice(radii))
        pool = [(a, b) for a in range(-r, r + 1) for b in range(-r, r + 1)]
        pts = _subset(rng, pool, p)
        return SmoothCompactElement(alg, {k: complex(_coeffs(rng, 1, False)[0]) for k in pts})

    return Sampler("smooth_compact", draw, {"radii": list(radii), "p": p})


# ---------------------------------------------------------------- chain profiles


@dataclass
class ChainProfile:
    n: int
    lhs: np.ndarray        # ||a_1...a_n||_m for m = 0..m_max
    norms: np.ndarray      # (n, k_max + 1) table ||a_i||_k


def profile_chain(alg, chain: Sequence, m_max: int, k_max: int) -> ChainProfile:
    prod = chain[0]
    for a in chain[1:]:
        prod = alg.mul(prod, a)
    lhs = np.array([float(alg.norm(prod, m)) for m in range(m_max + 1)])
    norms = np.array([[float(alg.norm(a, k)) for k in range(k_max + 1)] for a in chain])
    return ChainProfile(len(chain), lhs, norms)


def chain_sums(norms: np.ndarray, p_max: int) -> np.ndarray:
    """S[p] = sum over k_1+...+k_n <= p of prod_i norms[i, k_i], for p = 0..p_max."""
    dp = np.zeros(p_max + 1)
    dp[0] = 1.0
    for row in norms:
        row = row[: p_max + 1]
        dp = np.convolve(dp, row)[: p_max + 1]
    return np.cumsum(dp)


def chain_exact_sums(norms: np.ndarray, m: int) -> float:
    """sum over k_1+...+k_n == m of prod_i norms[i, k_i]."""
    dp = np.zeros(m + 1)
    dp[0] = 1.0
    for row in norms:
        dp = np.convolve(dp, row[: m + 1])[: m + 1]
    return float(dp[m])


def sample_chains(alg, sampler: Sampler, rng, n_chains: int, n_max: int, m_max: int, k_max: int,
                  lengths: Sequence[int] | None = None) -> list:
    lens = list(lengths) if lengths is not None else list(range(1, n_max + 1))
    out = []
    for i in range(n_chains):
        n = lens[i % len(lens)]
        out.append(profile_chain(alg, [sampler(rng) for _ in range(n)], m_max, k_max))
    return out


# ---------------------------------------------------------------- fits


@dataclass
class FitReport:
    tag: str
    sample: dict
    C: float | None = None
    D: list = field(default_factory=list)
    p: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    verdict: bool = False
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"tag": self.tag, "sample": self.sample, "C": self.C, "D": self.D, "p": self.p,
                "witnesses": self.witnesses, "verdict": self.verdict, "diagnostics": self.diagnostics}


def _c_grid(c_cap: float) -> np.ndarray:
    k = int(math.ceil(4 * math.log2(c_cap)))
    return np.array([2 ** (i / 4) for i in range(k + 1)])


def fit_chain_constants(profiles: list, m_max: int, c_cap: float = C_CAP, d_cap: float = D_CAP,
                        p_span: int = P_SPAN, p_floor: Callable[[int], int] = lambda m: m) -> dict:
    """Smallest C on a log grid (then bisected) for which every m admits D_m <= d_cap.

    For each m the exponent p ranges over [p_floor(m), m + p_span]; the p with
    the smallest D_m wins, ties going to the smallest p. Constants are reported
    normalized to be >= 1.
    """
    # ratios[m][p] = per chain lhs / S_p; D(C) = max_j ratios / C^n_j
    table = {}
    for m in range(m_max + 1):
        ps = list(range(p_floor(m), m + p_span + 1))
        rows = []
        for pr in profiles:
            sums = chain_sums(pr.norms, ps[-1])
            lhs = pr.lhs[m]
            rows.append([0.0 if lhs == 0 else (lhs / sums[p] if sums[p] > 0 else math.inf) for p in ps])
        table[m] = (ps, np.array(rows), np.array([pr.n for pr in profiles], dtype=float))

    def solve(C):
        Ds, Ps = [], []
        for m in range(m_max + 1):
            ps, R, ns = table[m]
            req = (R / (C ** ns)[:, None]).max(axis=0) if len(R) else np.zeros(len(ps))
            # rounding-level excess over 1 counts as 1; near-ties go to the smallest p
            req = np.where(req <= 1.0 + SLACK, 1.0, req)
            i = int(np.flatnonzero(req <= req.min() * (1 + SLACK))[0])
            Ds.append(float(req[i]))
            Ps.append(ps[i])
        return Ds, Ps

    grid = _c_grid(c_cap)
    found = None
    for i, C in enumerate(grid):
        Ds, Ps = solve(C)
        if max(Ds) <= d_cap:
            found = i
            break
    if found is None:
        Ds, Ps = solve(grid[-1])
        return {"ok": False, "C": float(grid[-1]), "D": Ds, "p": Ps}
    C = float(grid[found])
    if found > 0:
        lo, hi = float(grid[found - 1]), C
        for _ in range(30):
            mid = math.sqrt(lo * hi)
            if max(solve(mid)[0]) <= d_cap:
                hi = mid
            else:
                lo = mid
        C = hi
    Ds, Ps = solve(C)
    return {"ok": True, "C": C, "D": Ds, "p": Ps}


def _lsq_diagnostic(profiles: list, m: int, p: int) -> dict:
    """Least-squares fit of log(max ratio at length n) = log D + n log C."""
    by_n: dict = {}
    for pr in profiles:
        s = chain_sums(pr.norms, p)[p]
        if pr.lhs[m] > 0 and s > 0:
            by_n[pr.n] = max(by_n.get(pr.n, 0.0), pr.lhs[m] / s)
    if len(by_n) < 2:
        return {}
    ns = np.array(sorted(by_n), dtype=float)
    ys = np.log([by_n[int(n)] for n in ns])
    A = np.vstack([np.ones_like(ns), ns]).T
    (logD, logC), *_ = np.linalg.lstsq(A, ys, rcond=None)
    return {"m": m, "p": p, "D": float(math.exp(logD)), "C": float(math.exp(logC))}


def evaluate_constants(profiles: list, C: float, D: Sequence[float], p: Sequence[int],
                       extra: Callable[[int], float] = lambda n: 1.0, slack: float = SLACK) -> list:
    """Violations of lhs <= D_m C^n extra(n) S_{p_m}: list of (chain index, m, lhs, rhs)."""
    bad = []
    for i, pr in enumerate(profiles):
        for m in range(len(D)):
            rhs = D[m] * C ** pr.n * extra(pr.n) * chain_sums(pr.norms, p[m])[p[m]]
            if pr.lhs[m] > rhs * (1 + slack):
                bad.append((i, m, float(pr.lhs[m]), float(rhs)))
    return bad


def check_strong_spec_inv(alg, sampler: Sampler, n_max: int = 6, m_max: int = 4, n_chains: int = 200,
                          seed: int = 0, c_cap: float = C_CAP, d_cap: float = D_CAP,
                          p_span: int = P_SPAN, profiles: list | None = None) -> FitReport:
    """Fit (C, D_m, p_m) for the chain inequality over sampled chains of length <= n_max."""
    k_max = m_max + p_span
    if profiles is None:
        rng = rng_stream(seed, "strong_spec_inv")
        profiles = sample_chains(alg, sampler, rng, n_chains, n_max, m_max, k_max)
    fit = fit_chain_constants(profiles, m_max, c_cap, d_cap, p_span)
    bad = evaluate_constants(profiles, fit["C"], fit["D"], fit["p"])
    ok = fit["ok"] and not bad
    rep = FitReport("strong_spectral_invariance",
                    {"chains": len(profiles), "n_max": n_max, "m_max": m_max, "seed": seed,
                     "sampler": sampler.name if sampler else None},
                    fit["C"], fit["D"], fit["p"], [list(b) for b in bad[:10]], ok)
    rep.diagnostics["lsq"] = [_lsq_diagnostic(profiles, m, fit["p"][m]) for m in range(m_max + 1)]
    rep.diagnostics["caps"] = {"C": c_cap, "D": d_cap, "p_span": p_span}
    return rep


def replay(report: FitReport, alg, sampler: Sampler) -> bool:
    """Regenerate the report's samples from its seed and re-evaluate with its constants."""
    s = report.sample
    rng = rng_stream(s["seed"], "strong_spec_inv")
    k_max = s["m_max"] + P_SPAN
    profiles = sample_chains(alg, sampler, rng, s["chains"], s["n_max"], s["m_max"], k_max)
    return not evaluate_constants(profiles, report.C, report.D, report.p) and bool(report.verdict)


def check_bc_condition(alg, sampler: Sampler, m_max: int = 4, n_pairs: int = 200, seed: int = 0,
                       c_cap: float = C_CAP) -> FitReport:
    """Fit C in ||ab||_m <= C sum_{i+j=m} ||a||_i ||b||_j."""
    rng = rng_stream(seed, "bc_condition")
    worst, wit = 0.0, None
    for t in range(n_pairs):
        a, b = sampler(rng), sampler(rng)
        pr = profile_chain(alg, [a, b], m_max, m_max)
        for m in range(m_max + 1):
            rhs = chain_exact_sums(pr.norms, m)
            if pr.lhs[m] == 0:
                continue
            r = pr.lhs[m] / rhs if rhs > 0 else math.inf
            if r > worst:
                worst, wit = r, (t, m, float(pr.lhs[m]), float(rhs))
    C = max(1.0, worst * (1 - SLACK))
    if C <= 1.0 + SLACK:
        C = 1.0
    ok = C <= c_cap
    return FitReport("blackadar_cuntz", {"pairs": n_pairs, "m_max": m_max, "seed": seed,
                                         "sampler": sampler.name},
                     C, [], [], [] if ok else [list(wit)], ok, {"max_ratio": worst})


def check_bc_implies_chain(alg, sampler: Sampler, C: float | None = None, n_max: int = 5, m_max: int = 4,
                           n_chains: int = 100, seed: int = 0,
                           extra: Callable[[int], float] = lambda n: 1.0) -> FitReport:
    """lhs <= extra(n) C^(n-1) sum_{k_1+...+k_n = m} prod ||a_i||_{k_i}."""
    if C is None:
        C = check_bc_condition(alg, sampler, m_max, seed=seed).C
    rng = rng_stream(seed, "bc_chain")
    bad = []
    for t in range(n_chains):
        n = 1 + t % n_max
        pr = profile_chain(alg, [sampler(rng) for _ in range(n)], m_max, m_max)
        for m in range(m_max + 1):
            rhs = extra(n) * C ** (n - 1) * chain_exact_sums(pr.norms, m)
            if pr.lhs[m] > rhs * (1 + SLACK):
                bad.append([t, m, float(pr.lhs[m]), float(rhs)])
    return FitReport("bc_chain", {"chains": n_chains, "n_max": n_max, "m_max": m_max, "seed": seed,
                                  "sampler": sampler.name},
                     C, [], [], bad[:10], not bad)


def check_sum_power(r_max: int = 6, n_max: int = 5, samples: int = 10_000, seed: int = 0) -> FitReport:
    """(a_1 + ... + a_n)^r <= 2^(rn) (a_1^r + ... + a_n^r) on random nonnegative tuples."""
    rng = rng_stream(seed, "sum_power")
    bad = []
    for n in range(1, n_max + 1):
        a = rng.exponential(size=(samples, n)) * 10 ** rng.uniform(-3, 3, size=(samples, 1))
        for r in range(r_max + 1):
            lhs = a.sum(axis=1) ** r
            rhs = 2.0 ** (r * n) * (a ** r).sum(axis=1)
            viol = np.flatnonzero(lhs > rhs * (1 + SLACK))
            for i in viol[:3]:
                bad.append([n, r, a[i].tolist()])
    return FitReport("sum_power", {"samples": samples, "r_max": r_max, "n_max": n_max, "seed": seed},
                     None, [], [], bad, not bad)


def check_tempered(action: GroupAction, m_max: int = 3, radius: int = 6, samples: list | None = None) -> dict:
    """Per-m minimal (C, d, k); for d > 0 also a witness that d - 1 fails."""
    fits, ok = [], True
    for m in range(m_max + 1):
        f = fit_tempered(action, m, radius=radius, samples=samples)
        row = f.to_dict()
        if f.ok and f.d > 0:
            w = failing_degree_witness(action, m, f.d - 1, radius=radius)
            row["below_witness"] = None if w is None else {"g": repr(w[0]), "ratio": w[2],
                                                           "a_support": _support_repr(action.algebra, w[1])}
        ok = ok and f.ok
        fits.append(row)
    return {"fits": fits, "ok": ok}


def _support_repr(alg, a):
    if isinstance(alg, FunctionAlgebra):
        return [alg.labels[i] for i in np.flatnonzero(a)]
    return None


def check_sk_chain(sampler: Sampler, n_max: int = 5, q_max: int = 4, n_chains: int = 100, seed: int = 0,
                   C: float = 1.0, D: float = 1.0, p_of_q: Callable[[int], int] = lambda q: q,
                   alg: SmoothCompactAlgebra | None = None) -> FitReport:
    """Smooth compact chains: ||phi_1...phi_n||_q <= D 2^q C^n sum_{k <= p_q + q} prod ||phi_i||_{k_i}."""
    alg = alg if alg is not None else SmoothCompactAlgebra()
    rng = rng_stream(seed, "sk_chain")
    k_max = q_max + p_of_q(q_max)
    profiles = sample_chains(alg, sampler, rng, n_chains, n_max, q_max, k_max)
    bad = []
    for i, pr in enumerate(profiles):
        for q in range(q_max + 1):
            t = p_of_q(q) + q
            rhs = D * 2 ** q * C ** pr.n * chain_sums(pr.norms, t)[t]
            if pr.lhs[q] > rhs * (1 + SLACK):
                bad.append([i, q, float(pr.lhs[q]), float(rhs)])
    return FitReport("smooth_compact_chain", {"chains": n_chains, "n_max": n_max, "q_max": q_max,
                                              "seed": seed, "sampler": sampler.name},
                     C, [D] * (q_max + 1), [p_of_q(q) + q for q in range(q_max + 1)], bad[:10], not bad)


class UnitizedTower:
    """Tower view of the unitization: mul is the unitized product, norm the primed seminorms."""

    def __init__(self, alg):
        self.alg = alg

    def mul(self, x, y):
        return x * y

    def norm(self, x, m=0):
        return x.seminorm(m)


def unitized_sampler(alg, base: Sampler, zero_every: int = 4) -> Sampler:
    state = {"i": 0}

    def draw(rng):
        state["i"] += 1
        lam = 0.0 if state["i"] % zero_every == 0 else complex(rng.standard_normal(), rng.standard_normal())
        a = base(rng) if state["i"] % (zero_every + 1) else base(rng) * 0
        return UnitizedElement(alg, a, lam)

    return Sampler(f"unitized({base.name})", draw, base.description)


def check_unitized_chain(alg, sampler: Sampler, C: float, D: Sequence[float], p: Sequence[int],
                         n_max: int = 5, n_chains: int = 100, seed: int = 0) -> FitReport:
    """Unitized chains against D_m 2^n max(1, C)^n sum_{k <= p_m} prod ||x_i||'_{k_i}."""
    m_max = len(D) - 1
    tower = UnitizedTower(alg)
    rng = rng_stream(seed, "unitized_chain")
    profiles = sample_chains(tower, unitized_sampler(alg, sampler), rng, n_chains, n_max, m_max, max(p))
    C2 = 2 * max(1.0, C)
    bad = evaluate_constants(profiles, C2, D, p)
    return FitReport("unitized_chain", {"chains": n_chains, "n_max": n_max, "m_max": m_max, "seed": seed,
                                        "sampler": sampler.name},
                     C2, list(D), list(p), [list(b) for b in bad[:10]], not bad)


# ---------------------------------------------------------------- restriction


def check_restriction(alg, sampler: Sampler, predicate: Callable[[Any], bool], ambient: FitReport,
                      project: Callable[[Any], Any] | None = None, n_max: int = 6, m_max: int = 4,
                      n_chains: int = 200, seed: int = 0, closure_pairs: int = 50) -> FitReport:
    """Restrict samples to a subalgebra and check that the ambient constants still cover them."""
    rng = rng_stream(seed, "restriction")

    def draw(r):
        for _ in range(1000):
            a = sampler(r)
            if project is not None:
                a = project(a)
            if predicate(a):
                return a
        raise DomainError("predicate rejected 1000 consecutive samples")

    restricted = Sampler(f"restricted({sampler.name})", draw, sampler.description)
    for _ in range(closure_pairs):
        a, b = draw(rng), draw(rng)
        if not predicate(alg.mul(a, b)):
            err = DomainError("predicate is not closed under multiplication")
            err.witness = (a, b)
            raise err
    k_max = m_max + P_SPAN
    profiles = sample_chains(alg, restricted, rng, n_chains, n_max, m_max, k_max)
    bad = evaluate_constants(profiles, ambient.C, ambient.D[: m_max + 1], ambient.p[: m_max + 1])
    own = fit_chain_constants(profiles, m_max)
    return FitReport("restriction", {"chains": n_chains, "n_max": n_max, "m_max": m_max, "seed": seed,
                                     "sampler": restricted.name},
                     ambient.C, ambient.D[: m_max + 1], ambient.p[: m_max + 1], [list(b) for b in bad[:10]],
                     not bad, {"restricted_fit": own})


# ---------------------------------------------------------------- finite crossed products


def _finite_elements(G: Group) -> list:
    if hasattr(G, "elements"):
        return list(G.elements())
    raise DomainError("finite group required")


def _vec(a) -> np.ndarray:
    return np.atleast_1d(np.asarray(a, dtype=complex))


@dataclass
class FiniteCrossedReport:
    homomorphism: bool
    fixed_points: bool
    norms: bool
    image_dim: int
    fixed_dim: int
    detail: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.homomorphism and self.fixed_points and self.norms

    def to_dict(self):
        return {"homomorphism": self.homomorphism, "fixed_points": self.fixed_points, "norms": self.norms,
                "image_dim": self.image_dim, "fixed_dim": self.fixed_dim, "ok": self.ok, "detail": self.detail}


def check_finite_crossed(G: Group, alg: CoefficientAlgebra, action: GroupAction,
                         m_max: int = 2, tol: float = 1e-12) -> FiniteCrossedReport:
    """Embedding i(F)(g,h) = alpha_g(F(g^-1 h)) of G x| B into B-valued G x G matrices.

    Checks (a) multiplicativity against S*T(g,h) = sum_k S(g,k) T(k,h) on basis
    pairs, (b) image = fixed points of theta_g(S)(k,h) = alpha_{g^-1}(S(gk, gh)),
    (c) max-entry norm of i(F) within [1, |G|] of the l1 norm of F.
    """
    els = _finite_elements(G)
    if len(els) > 8:
        raise DomainError("finite crossed check is exhaustive; |G| <= 8 required")
    ctx = CrossedContext(G, alg, action)
    idx = {g: i for i, g in enumerate(els)}
    n = len(els)
    basis = alg.basis()
    dB = _vec(basis[0]).size

    def embed(F: CrossedElement) -> np.ndarray:
        S = np.zeros((n, n, dB), dtype=complex)
        for g in els:
            gi = G.inv(g)
            for h in els:
                a = F.data.get(G.mul(gi, h))
                if a is not None:
                    S[idx[g], idx[h]] = _vec(action.apply(g, a))
        return S

    def matmul(S, T):
        # pointwise coefficient products for scalar and function algebras
        return np.einsum("gkb,khb->ghb", S, T)

    def theta(g, S):
        gi = G.inv(g)
        out = np.zeros_like(S)
        for k in els:
            for h in els:
                v = S[idx[G.mul(g, k)], idx[G.mul(g, h)]]
                out[idx[k], idx[h]] = _vec(action.apply(gi, _unvec(alg, v)))
        return out

    elems = [ctx.delta(x, b) for x in els for b in basis]
    hom_err = 0.0
    for F1 in elems:
        E1 = embed(F1)
        for F2 in elems:
            diff = embed(ctx.mul(F1, F2)) - matmul(E1, embed(F2))
            hom_err = max(hom_err, float(np.abs(diff).max()))
    hom = hom_err <= tol
    # image inside the fixed points
    fix_err = 0.0
    images = []
    for F in elems:
        E = embed(F)
        images.append(E.ravel())
        for g in els:
            fix_err = max(fix_err, float(np.abs(theta(g, E) - E).max()))
    img_dim = int(np.linalg.matrix_rank(np.array(images)))
    # dimension of the fixed-point space: rank of the averaging projector
    N = n * n * dB
    P = np.zeros((N, N), dtype=complex)
    for j in range(N):
        e = np.zeros(N, dtype=complex)
        e[j] = 1
        S = e.reshape(n, n, dB)
        acc = np.zeros_like(S)
        for g in els:
            acc += theta(g, S)
        P[:, j] = (acc / n).ravel()
    fix_dim = int(np.linalg.matrix_rank(P, tol=1e-9))
    fixed = fix_err <= tol and img_dim == fix_dim == n * len(basis)
    # norm equivalence on samples, per seminorm level
    rng = np.random.default_rng(0)
    worst = {}
    norms_ok = True
    for m in range(m_max + 1):
        lo_r, hi_r = math.inf, 0.0
        for _ in range(50):
            F = ctx.element([(x, alg.random(rng)) for x in els])
            E = embed(F)
            emax = max(float(alg.norm(_unvec(alg, E[i, j]), m)) for i in range(n) for j in range(n))
            l1 = sum(float(alg.norm(a, m)) for a in F.data.values())
            if l1 == 0:
                continue
            lo_r, hi_r = min(lo_r, emax / l1), max(hi_r, emax / l1)
        worst[m] = [lo_r, hi_r]
        if m == 0:
            norms_ok = norms_ok and lo_r >= 1 / n - 1e-12 and hi_r <= 1 + 1e-12
    return FiniteCrossedReport(hom, fixed, norms_ok, img_dim, fix_dim,
                               {"hom_err": hom_err, "fix_err": fix_err, "norm_ratios": worst})


def _unvec(alg, v):
    if isinstance(alg, ScalarAlgebra):
        return complex(v[0])
    return v


# ---------------------------------------------------------------- Katznelson growth


def bessel_l1(x: float, tol: float = 1e-16) -> float:
    """sum_n |J_n(x)|, the l1 norm of exp(i x cos theta)."""
    x = abs(x)
    K = int(x + 10 * max(1.0, x ** (1 / 3)) + 40)
    k = np.arange(1, K + 1)
    return float(abs(jv(0, x)) + 2 * np.abs(jv(k, x)).sum())


@lru_cache(maxsize=65536)
def log_bessel_l1(x: float) -> float:
    """log sum_n |J_n(x)|, accurate for small x."""
    if x < 1e-3:
        x = abs(x)
        # |J_0| + 2|J_1| + 2|J_2| + ... = 1 + x - x^2/4 + x^2/4 + O(x^3)
        k = np.arange(1, 8)
        excess = (jv(0, x) - 1) + 2 * np.abs(jv(k, x)).sum()
        return float(np.log1p(excess))
    return math.log(bessel_l1(x))


@dataclass
class KatznelsonRow:
    r: float
    l1: float
    oracle: float
    cstar: float
    bound: float
    chain_l1: float

    def to_dict(self):
        return dict(self.__dict__)


def katznelson_demo(r_values: Sequence[float] = tuple(range(11)), tol: float = 1e-14,
                    chain_n: int = 4) -> list:
    """For psi_r = (r/2)(delta_1 + delta_-1): ||exp(i psi_r)||_1, Bessel oracle, C*-norm, e^r.

    ``chain_l1`` is ||exp(i psi_r / n)^n||_1 with n = chain_n, the factorization
    used in the growth argument; it must agree with ``l1``.
    """
    from .groups import make_group
    Z = make_group("Z")
    ctx = CrossedContext(Z)
    rows = []
    for r in r_values:
        psi = ctx.element({1: r / 2, -1: r / 2})
        e = exponential(psi * 1j, tol)
        l1 = float(weighted_norm(e, 0, 0))
        oracle = bessel_l1(r)
        if abs(l1 - oracle) > 1e-8 * max(1.0, oracle):
            raise DomainError(f"series truncation missed the oracle at r={r}: {l1} vs {oracle}")
        cstar = cstar_fourier(e).value
        small = exponential(psi * (1j / chain_n), tol)
        chain = float(weighted_norm(power(small, chain_n), 0, 0))
        rows.append(KatznelsonRow(float(r), l1, oracle, cstar, math.exp(r), chain))
    return rows


def _log_rhs(logD: float, C: float, n: int, p: int, logL: float) -> float:
    js = np.arange(0, min(n, p) + 1)
    lbin = lambda a, b: gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)
    return logD + n * math.log(C) + float(logsumexp(lbin(n, js) + lbin(p, js) + js * logL))


def dissociated_log_l1(r: float, K: int) -> float:
    """log ||exp(i psi_{r,K})||_1 for psi_{r,K} = (r/2K) sum_j (delta_{N_j} + delta_{-N_j})
    with dissociated frequencies N_j; the norm factorizes as S(r/K)^K."""
    return K * log_bessel_l1(r / K)


@dataclass
class RefutationReport:
    fit: dict
    violations: list          # per (C, p): r, n, log lhs, log rhs
    all_violated: bool
    factorization_error: float

    def to_dict(self):
        return {"fit": self.fit, "violations": self.violations, "all_violated": self.all_violated,
                "factorization_error": self.factorization_error}


def katznelson_refutation(train_r: Sequence[float] = (0.25, 0.5, 1.0, 1.5, 2.0), n_max: int = 6,
                          c_cap: float = C_CAP, d_cap: float = D_CAP, p_span: int = P_SPAN,
                          r_max: float = 1e5, K_of_r: Callable[[float], int] = lambda r: max(1, int(math.ceil(r * r)))
                          ) -> RefutationReport:
    """Fit (C, D_1, p_1) for the tower {C*-norm, l1} on exp(i psi / n)^n chains at small r, then
    show every (C, p) on the cap grid, taken with D = d_cap, is violated at some larger r.

    The tower at level 0 is the C*-norm (equal to 1 on these unitaries) and
    at every level k >= 1 the l1 norm, so sum_{k_1+..+k_n <= p} prod ||a_i||_{k_i}
    equals sum_j binom(n, j) binom(p, j) L^j with L = ||exp(i psi / n)||_1.
    """
    profiles = []
    k_max = 1 + p_span
    for r in train_r:
        K = K_of_r(r)
        for n in range(1, n_max + 1):
            L = math.exp(dissociated_log_l1(r / n, K))
            norms = np.array([[1.0] + [L] * k_max for _ in range(n)])
            lhs = np.array([1.0, math.exp(dissociated_log_l1(r, K))])
            profiles.append(ChainProfile(n, lhs, norms))
    fit = fit_chain_constants(profiles, 1, c_cap, d_cap, p_span)
    violations = []
    all_v = True
    logD = math.log(d_cap)
    grid = list(_c_grid(c_cap))
    if fit["ok"] and fit["C"] not in grid:
        grid.append(fit["C"])
    for C in grid:
        for p in range(1, 1 + p_span + 1):
            hit = None
            for n in range(p + 1, 2 * p + 3):
                r = 1.0
                while r <= r_max:
                    K = K_of_r(r)
                    ll = dissociated_log_l1(r, K)
                    lr = _log_rhs(logD, C, n, p, dissociated_log_l1(r / n, K))
                    if ll > lr:
                        if hit is None or r < hit["r"]:
                            hit = {"C": float(C), "p": p, "n": n, "r": r, "log_lhs": ll, "log_rhs": lr}
                        break
                    r = round(r * 1.25, 6)
            if hit is None:
                all_v = False
                hit = {"C": float(C), "p": p, "n": None, "r": None}
            violations.append(hit)
    fact = _factorization_check()
    return RefutationReport(fit, violations, all_v, fact)


def _factorization_check(r: float = 2.0) -> float:
    """||exp(i psi)||_1 on Z with two dissociated frequencies versus S(r/2)^2."""
    from .groups import make_group
    Z = make_group("Z")
    ctx = CrossedContext(Z)
    K = 2
    psi = ctx.element({1: r / (2 * K), -1: r / (2 * K), 64: r / (2 * K), -64: r / (2 * K)})
    e = exponential(psi * 1j, 1e-15)
    l1 = float(weighted_norm(e, 0, 0))
    return abs(l1 - math.exp(dissociated_log_l1(r, K)))
