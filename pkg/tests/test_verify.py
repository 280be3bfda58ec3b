import math

import numpy as np
import pytest
from scipy.special import jv

from crossedlab.coeff import (DomainError, FunctionAlgebra, make_action, matrix_algebra, matrix_lift,
                              scalar_algebra, schwartz_Z)
from crossedlab.groups import FiniteTable, make_group
from crossedlab.verify import (bessel_l1, check_bc_condition, check_bc_implies_chain, check_finite_crossed,
                               check_restriction, check_sk_chain, check_strong_spec_inv, check_sum_power,
                               check_tempered, check_unitized_chain, chain_exact_sums, chain_sums,
                               dissociated_log_l1, fit_chain_constants, function_sampler, katznelson_demo,
                               matrix_sampler, replay, rng_stream, sample_chains, scalar_sampler,
                               smooth_compact_sampler)


def test_rng_streams_are_named_and_reproducible():
    a1 = rng_stream(3, "alpha").random(5)
    a2 = rng_stream(3, "alpha").random(5)
    b = rng_stream(3, "beta").random(5)
    assert np.array_equal(a1, a2) and not np.array_equal(a1, b)


def test_chain_sums_brute_force():
    rng = np.random.default_rng(0)
    norms = rng.random((3, 5))
    sums = chain_sums(norms, 4)
    for p in range(5):
        brute = sum(norms[0, i] * norms[1, j] * norms[2, k]
                    for i in range(5) for j in range(5) for k in range(5) if i + j + k <= p)
        assert abs(sums[p] - brute) <= 1e-12
        exact = sum(norms[0, i] * norms[1, j] * norms[2, k]
                    for i in range(5) for j in range(5) for k in range(5) if i + j + k == p)
        assert abs(chain_exact_sums(norms, p) - exact) <= 1e-12


def test_schwartz_fit_exact_constants_and_replay():
    A = schwartz_Z(10)
    s = function_sampler(A)
    rep = check_strong_spec_inv(A, s, n_max=6, m_max=4, n_chains=60, seed=1)
    assert rep.verdict and rep.C == 1.0
    assert rep.D == [1.0] * 5 and rep.p == list(range(5))
    assert replay(rep, A, function_sampler(A))


def test_single_norm_algebra_fits_p_zero():
    S = scalar_algebra()
    rep = check_strong_spec_inv(S, scalar_sampler(), n_max=5, m_max=3, n_chains=40, seed=2)
    # smallest admissible p at every level, so p_0 = 0
    assert rep.verdict and rep.C == 1.0 and rep.p == [0, 1, 2, 3] and all(d == 1.0 for d in rep.D)


def test_fitted_C_monotone_in_samples():
    L = matrix_lift(schwartz_Z(6), 3)
    s = matrix_sampler(L, function_sampler(L.base, radii=(3, 4)))
    profiles = sample_chains(L, s, rng_stream(4, "mono"), 80, 4, 2, 10)
    small = fit_chain_constants(profiles[:40], 2)
    large = fit_chain_constants(profiles, 2)
    assert small["ok"] and large["ok"]
    assert large["C"] >= small["C"] * (1 - 1e-6)
    tight = fit_chain_constants(profiles[:40], 2, c_cap=1.0, d_cap=1.0)
    if not tight["ok"]:
        assert not fit_chain_constants(profiles, 2, c_cap=1.0, d_cap=1.0)["ok"]


def test_bc_condition_and_chain():
    A = schwartz_Z(10)
    bc = check_bc_condition(A, function_sampler(A), n_pairs=80)
    assert bc.verdict and bc.C == 1.0
    l = 3
    L = matrix_lift(A, l)
    s = matrix_sampler(L, function_sampler(A, radii=(3, 4)))
    # max-entry norm: the two-factor constant is at most l, the chain factor l^(n-1)
    lbc = check_bc_condition(L, s, m_max=3, n_pairs=80)
    assert 1.0 <= lbc.C <= l
    ch = check_bc_implies_chain(L, s, C=1.0, n_max=4, m_max=3, n_chains=40, extra=lambda n: l ** (n - 1))
    assert ch.verdict


def test_sum_power():
    assert check_sum_power(samples=2000).verdict


def test_check_tempered_translation():
    Z = make_group("Z")
    act = make_action(Z, schwartz_Z(24), "translation", fit=False)
    rep = check_tempered(act, m_max=2)
    assert rep["ok"]
    for row in rep["fits"]:
        assert row["d"] == row["m"]
        if row["m"] > 0:
            assert row["below_witness"]["ratio"] > 1


def test_sk_chain_scalar_base():
    rep = check_sk_chain(smooth_compact_sampler(radii=(2, 3)), n_max=4, q_max=3, n_chains=40)
    assert rep.verdict


def test_unitized_chain():
    A = schwartz_Z(10)
    from crossedlab.verify import UnitizedTower
    from crossedlab.crossed import CrossedContext, unitize
    rep = check_unitized_chain(A, function_sampler(A), C=1.0, D=[1.0] * 4, p=[0, 1, 2, 3], n_chains=60)
    assert rep.verdict
    # the primed level-0 seminorm is |lambda| + ||a||_0 on the crossed side too
    Z = make_group("Z")
    ctx = CrossedContext(Z)
    x = unitize(ctx.delta(1, 2.0), 3.0)
    assert UnitizedTower(ctx).norm(x, 0) == 5.0


def _ambient(A):
    return check_strong_spec_inv(A, function_sampler(A), n_max=5, m_max=3, n_chains=40, seed=5)


def test_restriction_ideal_and_full():
    A = schwartz_Z(10)
    amb = _ambient(A)
    i0 = A.index[0]

    def kill0(f):
        g = f.copy()
        g[i0] = 0
        return g

    rep = check_restriction(A, function_sampler(A), lambda f: f[i0] == 0, amb, project=kill0,
                            n_max=5, m_max=3, n_chains=40)
    assert rep.verdict
    full = check_restriction(A, function_sampler(A), lambda f: True, amb, n_max=5, m_max=3, n_chains=40)
    assert full.verdict


def test_restriction_matrix_diagonal():
    M = matrix_algebra(3)
    s = matrix_sampler(M, scalar_sampler())
    amb = check_strong_spec_inv(M, s, n_max=4, m_max=2, n_chains=40)
    rep = check_restriction(M, s, lambda a: np.allclose(a, np.diag(np.diag(a))), amb,
                            project=lambda a: np.diag(np.diag(a)), n_max=4, m_max=2, n_chains=40)
    assert rep.verdict


def test_restriction_not_closed():
    A = schwartz_Z(6)
    amb = _ambient(A)

    def center(f):
        g = f.copy()
        nz = np.flatnonzero(g)
        g[nz] -= g[nz].mean()
        return g

    with pytest.raises(DomainError) as e:
        check_restriction(A, function_sampler(A), lambda f: abs(f.sum()) <= 1e-9, amb, project=center)
    assert e.value.witness is not None


def test_finite_crossed_swap_Z2():
    G = make_group("cyclic(2)")
    B = FunctionAlgebra([0, 1], [0, 0], name="C^2")
    rep = check_finite_crossed(G, B, make_action(G, B, "permutation"))
    assert rep.ok and rep.image_dim == rep.fixed_dim == 4


def test_finite_crossed_trivial_actions():
    G = make_group("cyclic(3)")
    S = scalar_algebra()
    assert check_finite_crossed(G, S, make_action(G, S, "trivial")).ok
    T = FiniteTable([[0]])
    rep = check_finite_crossed(T, S, make_action(T, S, "trivial"))
    assert rep.ok and rep.image_dim == 1


def test_bessel_oracle():
    assert bessel_l1(0.0) == 1.0
    ref = sum(abs(jv(n, 2.0)) for n in range(-60, 61))
    assert abs(bessel_l1(2.0) - ref) <= 1e-14
    assert abs(dissociated_log_l1(2.0, 1) - math.log(ref)) <= 1e-13


def test_katznelson_demo_small():
    rows = katznelson_demo([0, 1, 2, 4])
    assert (rows[0].l1, rows[0].oracle, rows[0].cstar) == (1.0, 1.0, 1.0)
    for row in rows:
        assert abs(row.cstar - 1) <= 1e-8
        assert abs(row.l1 - row.oracle) <= 1e-8
        assert row.l1 <= row.bound
        assert abs(row.chain_l1 - row.l1) <= 1e-10 * row.l1
