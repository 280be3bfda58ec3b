"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines, or
``python3 tests/test_acceptance.py`` for the summary table alone.
"""
import math
from fractions import Fraction

import numpy as np

from crossedlab.coeff import FunctionAlgebra, make_action, matrix_lift, schwartz_Z, ScalarAlgebra
from crossedlab.crossed import CrossedContext, convolve
from crossedlab.groups import ball_sizes, gauge_for, make_group
from crossedlab.smoothk import crossed_to_smooth_compact, sk_dense, sk_multiply, split_inequality_holds
from crossedlab.spectra import (cstar_compression, cstar_fourier, derivation_check, neumann_inverse,
                                pytlik_ratio, pytlik_split_bound, spectral_radius)
from crossedlab.verify import (check_finite_crossed, check_sk_chain, check_strong_spec_inv, check_sum_power,
                               check_unitized_chain, crossed_sampler, evaluate_constants, function_sampler,
                               katznelson_demo, katznelson_refutation, matrix_sampler, rng_stream,
                               sample_chains, scalar_sampler, smooth_compact_sampler)

SEED = 0


def _report(n, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}", flush=True)
    return ok


def _walk(G, weight):
    ctx = CrossedContext(G, ScalarAlgebra(exact=True))
    return ctx.element([(u, weight) for u in G.generators])


# ---------------------------------------------------------------- criteria


def criterion_1():
    Z = make_group("Z")
    phi = _walk(Z, 1)
    rep = spectral_radius(phi, n_max=64)
    exact = all(v == 2 for _, v in rep.sequence) and len(rep.sequence) == 64
    fl = CrossedContext(Z).element({1: 1.0, -1: 1.0})
    four = cstar_fourier(fl)
    four_ok = abs(four.value - 2) <= 1e-3 and four.error <= 1e-3
    comp = cstar_compression(fl, 64)
    comp_ok = 1.99 <= comp.value <= 2.0
    return (exact and four_ok and comp_ok,
            f"Z: ||phi^n||^(1/n) == 2 for n<=64: {exact}; fourier {four.value:.6f} +- {four.error:.1e}; "
            f"compression(64) {comp.value:.6f}")


def criterion_2():
    Z = make_group("Z")
    rep = spectral_radius(_walk(Z, 1), d=2, n_max=64)
    v = {n: float(rep.value(n)) for n in (8, 16, 32, 64)}
    close = abs(v[64] - 2) <= 0.1 * 2
    dec = v[8] > v[16] > v[32] > v[64]
    return close and dec, "d=2 values " + ", ".join(f"n={n}: {x:.4f}" for n, x in v.items())


def criterion_3():
    F = make_group("free(2)")
    rep = spectral_radius(_walk(F, Fraction(1, 4)), n_max=8)
    mass = all(v == 1 for _, v in rep.sequence)
    comp = cstar_compression(CrossedContext(F).element([(u, 0.25) for u in F.generators]), 8)
    in_range = 0.83 <= comp.value <= 0.86603
    gap = 1 - comp.value
    return (mass and in_range and gap >= 0.13,
            f"free(2): l1 radius == 1: {mass}; compression(8) {comp.value:.6f} (Kesten {math.sqrt(3) / 2:.5f}); "
            f"gap {gap:.4f}")


def criterion_4():
    H = make_group("heisenberg")
    growth = ball_sizes(H, 14)
    deg_ok = 3.6 <= growth.degree <= 4.4
    ga = gauge_for(H)
    ball = ga.ball(8)
    rng = rng_stream(SEED, "acceptance_gauge")
    ia, ib = rng.integers(len(ball), size=100_000), rng.integers(len(ball), size=100_000)
    tau = ga.word_length
    fails = 0 if tau(H.identity) == 0 else 1
    for i, j in zip(ia, ib):
        g, h = ball[i], ball[j]
        if tau(H.mul(g, h)) > tau(g) + tau(h) or tau(H.inv(g)) != tau(g):
            fails += 1
    return (deg_ok and fails == 0,
            f"heisenberg degree {growth.degree:.4f} (n_max=14); gauge axiom failures on 1e5 B8 pairs: {fails}")


def criterion_5():
    H = make_group("heisenberg")
    rep = spectral_radius(_walk(H, Fraction(1, 4)), n_max=10)
    mass = all(v == 1 for _, v in rep.sequence)
    comp = cstar_compression(CrossedContext(H).element([(u, 0.25) for u in H.generators]), 6)
    return (mass and comp.value >= 0.95,
            f"heisenberg: l1 radius == 1: {mass}; compression(6) {comp.value:.6f} (need >= 0.95)")


def criterion_6():
    Z = make_group("Z")
    ctx = CrossedContext(Z)
    x = ctx.element({0: 1.0, 1: -0.3, -1: -0.3})
    inv, cert = neumann_inverse(x, tol=1e-10, d_max=6)
    res_ok = cert.residual <= 1e-10
    # 1 / (1 - 0.3(z + 1/z)) has coefficients beta^|n| / s, s = sqrt(1 - 4 c^2), beta = (1 - s) / 2c
    s = math.sqrt(1 - 4 * 0.09)
    beta = (1 - s) / 0.6
    C = 1 / s
    worst = max(abs(complex(inv[n]).real / (C * 3.0 ** -abs(n)) - 1)
                for n in list(range(5, 21)) + list(range(-20, -4)))
    coeff_ok = abs(beta - 1 / 3) <= 1e-15 and worst <= 0.1
    tails = [cert.tail_ratios[(d, 0)] for d in range(7)]
    tail_ok = all(r < 0.9 for r in tails)
    return (res_ok and coeff_ok and tail_ok,
            f"wiener: residual {cert.residual:.2e}; max rel dev from {C:.2f}*3^-|n| on 5<=|n|<=20: {worst:.2e}; "
            f"max tail ratio d<=6: {max(tails):.3f}")


def criterion_7():
    A = schwartz_Z(10)
    rep = check_strong_spec_inv(A, function_sampler(A), n_max=6, m_max=4, n_chains=200, seed=SEED)
    ok = rep.verdict and rep.C == 1.0 and rep.D == [1.0] * 5 and rep.p == [0, 1, 2, 3, 4]
    return ok, f"schwartz_Z fit over 200 chains: C={rep.C}, D={rep.D}, p={rep.p}"


def criterion_8():
    rows = katznelson_demo(list(range(11)))
    cstar_ok = all(abs(r.cstar - 1) <= 1e-8 for r in rows)
    oracle_ok = all(abs(r.l1 - r.oracle) <= 1e-8 for r in rows)
    grows = rows[-1].l1 > 2.0
    ref = katznelson_refutation()
    return (cstar_ok and oracle_ok and grows and ref.all_violated,
            f"katznelson: cstar==1: {cstar_ok}; bessel match: {oracle_ok}; l1(r=10) {rows[-1].l1:.4f}; "
            f"fit C={ref.fit['C']:.3g} p={ref.fit['p']}; all {len(ref.violations)} cap-grid (C, p) violated: "
            f"{ref.all_violated}")


def criterion_9():
    rng = rng_stream(SEED, "acceptance_sk")
    samp = smooth_compact_sampler(radii=(3, 4))
    worst = 0.0
    for _ in range(100):
        a, b = samp(rng), samp(rng)
        lo = min(a.bounds()[0], b.bounds()[0])
        hi = max(a.bounds()[1], b.bounds()[1])
        W = (lo, hi)
        prod = sk_multiply(a, b)
        ref = sk_dense(a, W) @ sk_dense(b, W)
        worst = max(worst, float(np.abs(sk_dense(prod, W) - ref).max()))
    dense_ok = worst <= 1e-14
    chain = check_sk_chain(smooth_compact_sampler(), n_max=5, q_max=4, n_chains=100, seed=SEED, C=1.0, D=1.0)
    Z = make_group("Z")
    A = schwartz_Z(20)
    ctx = CrossedContext(Z, A, make_action(Z, A, "translation", fit=False))
    cs = crossed_sampler(ctx, function_sampler(A, radii=(3, 4)), radii=(2, 3))
    err = 0.0
    for _ in range(50):
        f, g = cs(rng), cs(rng)
        d = crossed_to_smooth_compact(convolve(f, g)) - crossed_to_smooth_compact(f) * crossed_to_smooth_compact(g)
        err = max([err] + [abs(v) for v in d.data.values()])
    return (dense_ok and chain.verdict and err <= 1e-12,
            f"smooth compacts: dense oracle max err {worst:.1e}; chain (C=1, D=1) pass: {chain.verdict}; "
            f"intertwining err {err:.1e}")


def criterion_10():
    Z = make_group("Z")
    A = schwartz_Z(40)
    ctx = CrossedContext(Z, A, make_action(Z, A, "translation", fit=False))
    s = crossed_sampler(ctx, function_sampler(A, radii=(3, 4, 5, 6)), radii=(3, 4, 5, 6))
    rep = check_strong_spec_inv(ctx, s, n_max=4, m_max=3, n_chains=200, seed=SEED)
    G = make_group("cyclic(2)")
    B = FunctionAlgebra([0, 1], [0, 0], name="C^2")
    fin = check_finite_crossed(G, B, make_action(G, B, "permutation"))
    finite_fit = rep.verdict and math.isfinite(rep.C) and all(math.isfinite(d) for d in rep.D)
    return (finite_fit and fin.ok,
            f"Z x| S(Z): C={rep.C:.4g}, D={[round(d, 4) for d in rep.D]}, p={rep.p}, pass {rep.verdict}; "
            f"Z2 finite crossed product ok: {fin.ok} (image dim {fin.image_dim} = fixed dim {fin.fixed_dim})")


def criterion_11():
    parts = {}
    parts["sum_power"] = check_sum_power(samples=10_000, seed=SEED).verdict
    parts["split_2^q"] = all(split_inequality_holds(q, r1, r2)
                             for q in range(7) for r1 in range(-20, 21) for r2 in range(-20, 21))
    A = schwartz_Z(10)
    parts["unitized"] = check_unitized_chain(A, function_sampler(A), C=1.0, D=[1.0] * 5, p=[0, 1, 2, 3, 4],
                                             n_chains=100, seed=SEED).verdict
    l = 3
    L = matrix_lift(A, l)
    profiles = sample_chains(L, matrix_sampler(L, function_sampler(A)), rng_stream(SEED, "acceptance_lift"),
                             100, 6, 4, 4)
    parts["matrix_lift"] = not evaluate_constants(profiles, 1.0, [1.0] * 5, [0, 1, 2, 3, 4],
                                                  extra=lambda n: l ** (n - 1))
    rng = rng_stream(SEED, "acceptance_split")
    split_ok = True
    for name in ("Z", "heisenberg"):
        G = make_group(name)
        ctx = CrossedContext(G)
        s = crossed_sampler(ctx, scalar_sampler(0), radii=(2, 3))
        growth = ball_sizes(G, 10)
        for m in range(1, 9):
            sb = pytlik_split_bound(s(rng), s(rng), s(rng), q=2, m=m, growth=growth, compression_R=0)
            split_ok = split_ok and sb.ok
    parts["split_bound"] = split_ok
    deriv_ok = True
    for name in ("Z", "heisenberg"):
        G = make_group(name)
        ctx = CrossedContext(G)
        s = crossed_sampler(ctx, scalar_sampler(0), radii=(2,))
        for _ in range(3):
            x = s(rng)
            deriv_ok = deriv_ok and all(derivation_check(x, k, 3, tol=1e-12).ok for k in range(4))
    parts["derivation"] = deriv_ok
    return all(parts.values()), "micro-suite " + ", ".join(f"{k}: {v}" for k, v in parts.items())


def criterion_12():
    rep = pytlik_ratio(_walk(make_group("Z"), 1), n_max=32)
    ok = all(a == 4 for a in rep.ratios) and rep.limsup == 4
    return ok, f"pytlik a_n == 4 exactly for n <= 32: {ok}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def _run(n):
    ok, detail = CRITERIA[n - 1]()
    assert _report(n, ok, detail), detail


def test_criterion_1():
    _run(1)


def test_criterion_2():
    _run(2)


def test_criterion_3():
    _run(3)


def test_criterion_4():
    _run(4)


def test_criterion_5():
    _run(5)


def test_criterion_6():
    _run(6)


def test_criterion_7():
    _run(7)


def test_criterion_8():
    _run(8)


def test_criterion_9():
    _run(9)


def test_criterion_10():
    _run(10)


def test_criterion_11():
    _run(11)


def test_criterion_12():
    _run(12)


if __name__ == "__main__":
    import sys
    results = []
    for i, fn in enumerate(CRITERIA, start=1):
        try:
            ok, detail = fn()
        except Exception as e:  # report and keep going
            ok, detail = False, f"error {type(e).__name__}: {e}"
        results.append(_report(i, ok, detail))
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
