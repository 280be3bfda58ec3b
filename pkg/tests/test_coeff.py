import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crossedlab.coeff import (ActionError, DomainError, FunctionAlgebra, fit_tempered, make_action, matrix_algebra,
                              matrix_lift, scalar_algebra, scale_schwartz, schwartz_Z)
from crossedlab.groups import gauge_for, make_group

REL = 1e-9


def test_scalar_algebra_examples():
    S = scalar_algebra()
    assert S.norm(3 + 4j, 0) == 5
    assert S.adjoint(3 + 4j) == 3 - 4j
    assert all(S.norm(3 + 4j, m) == 5 for m in range(5))


@settings(max_examples=100, deadline=None)
@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_scalar_norm_multiplicative(a, b):
    S = scalar_algebra()
    assert abs(S.norm(S.mul(a, b)) - S.norm(a) * S.norm(b)) <= REL * max(1.0, S.norm(a) * S.norm(b))


def test_schwartz_examples():
    A = schwartz_Z(5)
    assert A.norm(A.delta(3), 2) == 16
    assert all(A.norm(A.delta(0), m) == 1 for m in range(8))
    with pytest.raises(DomainError):
        A.delta(6)
    with pytest.raises(DomainError):
        schwartz_Z(0)


def test_scale_schwartz_examples():
    A = scale_schwartz([0, 1, 2], [0, 1, 2])
    assert A.norm(A.one(), 1) == 3
    flat = scale_schwartz(["a", "b"], {"a": 0, "b": 0})
    f = flat.element({"a": 2, "b": -3j})
    assert all(flat.norm(f, m) == 3 for m in range(5))
    with pytest.raises(DomainError):
        scale_schwartz([0, 1], [0, -1])


def _rand_functions(alg, rng, k):
    return [alg.random(rng) for _ in range(k)]


@pytest.mark.parametrize("alg", [schwartz_Z(10), scale_schwartz(range(7), lambda x: x * x / 3)])
def test_function_tower_properties(alg):
    rng = np.random.default_rng(1)
    for f, g in zip(_rand_functions(alg, rng, 40), _rand_functions(alg, rng, 40)):
        for m in range(6):
            assert alg.norm(f, m) <= alg.norm(f, m + 1) * (1 + REL)
            assert abs(alg.norm(alg.adjoint(f), m) - alg.norm(f, m)) <= REL * alg.norm(f, m)
            assert alg.norm(alg.mul(f, g), m) <= alg.norm(f, m) * alg.norm(g, 0) * (1 + REL)
            bc = sum(alg.norm(f, i) * alg.norm(g, m - i) for i in range(m + 1))
            assert alg.norm(alg.mul(f, g), m) <= bc * (1 + REL)
        assert alg.norm(alg.mul(f, g), 0) <= alg.norm(f, 0) * alg.norm(g, 0) * (1 + REL)


def test_schwartz_chain_inequality_exact_constants():
    A = schwartz_Z(8)
    rng = np.random.default_rng(2)
    for n in range(1, 7):
        for _ in range(10):
            chain = _rand_functions(A, rng, n)
            prod = chain[0]
            for f in chain[1:]:
                prod = A.mul(prod, f)
            for m in range(5):
                # C = 1, D = 1, p = m: sum over k_1 + ... + k_n <= m
                dp = np.zeros(m + 1)
                dp[0] = 1
                for f in chain:
                    dp = np.convolve(dp, [A.norm(f, k) for k in range(m + 1)])[: m + 1]
                assert A.norm(prod, m) <= dp.sum() * (1 + REL)


def test_matrix_lift_examples():
    M = matrix_algebra(3)
    assert all(M.norm(M.one(), m) == 1 for m in range(4))
    A = schwartz_Z(4)
    L1 = matrix_lift(A, 1)
    f = A.delta(2, 3.0)
    assert all(L1.norm(L1.entry(0, 0, f), m) == A.norm(f, m) for m in range(5))
    L2 = matrix_lift(A, 2)
    with pytest.raises(DomainError):
        L2.mul(L2.one(), matrix_lift(A, 3).one())


def test_matrix_lift_mul_matches_loop():
    A = schwartz_Z(4)
    L = matrix_lift(A, 3)
    rng = np.random.default_rng(3)
    a, b = L.random(rng), L.random(rng)
    ref = L.zero()
    for i in range(3):
        for j in range(3):
            for k in range(3):
                ref[i, j] += a[i, k] * b[k, j]
    assert np.allclose(L.mul(a, b), ref)
    assert np.allclose(L.adjoint(L.adjoint(a)), a)


def test_matrix_lift_chain_bound():
    A = schwartz_Z(8)
    l = 3
    L = matrix_lift(A, l)
    rng = np.random.default_rng(4)
    for n in range(1, 5):
        for _ in range(5):
            chain = [L.random(rng) for _ in range(n)]
            prod = chain[0]
            for x in chain[1:]:
                prod = L.mul(prod, x)
            for m in range(4):
                dp = np.zeros(m + 1)
                dp[0] = 1
                for x in chain:
                    dp = np.convolve(dp, [L.norm(x, k) for k in range(m + 1)])[: m + 1]
                assert L.norm(prod, m) <= l ** (n - 1) * dp.sum() * (1 + REL)


def test_trivial_action_certificate():
    Z = make_group("Z")
    act = make_action(Z, schwartz_Z(12), "trivial")
    for f in act.certificate:
        assert (f.d, f.k, f.C) == (0, f.m, 1.0)


def test_translation_action_degree_m():
    Z = make_group("Z")
    A = schwartz_Z(24)
    act = make_action(Z, A, "translation")
    for f in act.certificate:
        assert f.ok and f.d == f.m and f.k == f.m
    g = (2,)
    assert np.array_equal(act.apply(g, A.delta(3)), A.delta(5))
    with pytest.raises(DomainError):
        act.apply((5,), A.delta(22))


def test_translation_functorial_on_B3():
    Z = make_group("Z")
    A = schwartz_Z(16)
    act = make_action(Z, A, "translation", fit=False)
    rng = np.random.default_rng(5)
    fs = [A.random(rng, radius=6) for _ in range(5)]
    ball = gauge_for(Z).ball(3)
    for g in ball:
        for h in ball:
            for f in fs:
                assert np.array_equal(act.apply(g, act.apply(h, f)), act.apply(Z.mul(g, h), f))
    assert all(np.array_equal(act.apply(Z.identity, f), f) for f in fs)


def test_permutation_action_Z2():
    G = make_group("cyclic(2)")
    A = FunctionAlgebra([0, 1], [0, 0], name="two-point")
    act = make_action(G, A, "permutation")
    f = A.element({0: 1.0, 1: 2j})
    assert np.array_equal(act.apply(1, f), A.element({0: 2j, 1: 1.0}))
    assert all(c.d == 0 for c in act.certificate)


def test_non_isometric_rule_rejected():
    Z = make_group("Z")
    A = schwartz_Z(4)
    with pytest.raises(ActionError) as e:
        make_action(Z, A, "custom", custom=lambda g, f: 2 * f)
    assert e.value.witness is not None


def test_tempered_fit_lower_degree_fails():
    from crossedlab.coeff import failing_degree_witness
    Z = make_group("Z")
    A = schwartz_Z(24)
    act = make_action(Z, A, "translation", fit=False)
    assert fit_tempered(act, 2).d == 2
    w = failing_degree_witness(act, 2, 1)
    assert w is not None and w[2] > 1


def test_json_roundtrip():
    A = schwartz_Z(3)
    f = A.element({-2: 1 + 2j, 3: -1})
    assert np.array_equal(A.from_json(A.to_json(f)), f)
