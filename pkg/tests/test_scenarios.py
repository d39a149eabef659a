import itertools

import numpy as np
import pytest

from lqhv.errors import TrivialFunctionalError
from lqhv.scenarios import (
    BellFunctional,
    OutcomeSpace,
    Scenario,
    analog_inequality_check,
    chsh_functional,
    correlation_functional,
    joint_distribution,
    lhv_constants,
    pm_outcomes,
    projective_scenario,
    quantum_value,
    violation_ratio,
)
from lqhv.states import QuantumState, make_singlet

from conftest import random_density, random_projective_scenario, random_separable

CHSH_ANGLES = [[0.0, np.pi / 2], [np.pi / 4, -np.pi / 4]]


def chsh_scenario():
    return projective_scenario(make_singlet(), CHSH_ANGLES)


def test_joint_distribution_singlet_z_basis():
    sc = projective_scenario(make_singlet(), [[0.0], [0.0]])
    table = joint_distribution(sc, (0, 0))
    np.testing.assert_allclose(table, [[0.0, 0.5], [0.5, 0.0]], atol=1e-12)


def test_joint_distribution_product_state_factorizes():
    rng = np.random.default_rng(0)
    a = random_density(rng, (2,)).rho
    b = random_density(rng, (2,)).rho
    state = QuantumState((2, 2), np.kron(a, b))
    sc = random_projective_scenario(rng, state, (2, 2))
    for s in itertools.product(range(2), repeat=2):
        table = joint_distribution(sc, s)
        marg_a = table.sum(axis=1)
        marg_b = table.sum(axis=0)
        np.testing.assert_allclose(table, np.outer(marg_a, marg_b), atol=1e-10)


def test_joint_distribution_maximally_mixed_uniform():
    state = QuantumState((2, 2), np.eye(4, dtype=complex) / 4)
    sc = random_projective_scenario(np.random.default_rng(1), state, (2, 2))
    for s in itertools.product(range(2), repeat=2):
        np.testing.assert_allclose(joint_distribution(sc, s), np.full((2, 2), 0.25),
                                   atol=1e-12)


def test_nonsignaling_marginals():
    rng = np.random.default_rng(2)
    state = random_density(rng, (2, 2))
    sc = random_projective_scenario(rng, state, (2, 2))
    # site-0 marginal must not depend on site-1 setting and vice versa
    t00, t01 = joint_distribution(sc, (0, 0)), joint_distribution(sc, (0, 1))
    t10 = joint_distribution(sc, (1, 0))
    np.testing.assert_allclose(t00.sum(axis=1), t01.sum(axis=1), atol=1e-9)
    np.testing.assert_allclose(t00.sum(axis=0), t10.sum(axis=0), atol=1e-9)


def chsh_constants_oracle():
    # brute force over the 16 deterministic +-1 assignments
    best, worst = -np.inf, np.inf
    weights = np.array([[-1.0, -1.0], [-1.0, 1.0]])
    for a0, a1, b0, b1 in itertools.product((1, -1), repeat=4):
        val = sum(
            weights[s1, s2] * (a0, a1)[s1] * (b0, b1)[s2]
            for s1 in range(2) for s2 in range(2)
        )
        best, worst = max(best, val), min(worst, val)
    return worst, best


def test_chsh_lhv_constants_match_bruteforce():
    b_inf, b_sup, b_abs = lhv_constants(chsh_functional())
    oracle_inf, oracle_sup = chsh_constants_oracle()
    assert (b_inf, b_sup) == (oracle_inf, oracle_sup) == (-2.0, 2.0)
    assert b_abs == 2.0


def test_all_ones_functional_constants():
    sizes = (2, 2)
    settings = (2, 3)
    coeffs = np.ones(settings + sizes)
    f = BellFunctional(settings, sizes, coeffs)
    b_inf, b_sup, _ = lhv_constants(f)
    assert b_inf == b_sup == settings[0] * settings[1]


def test_zero_functional():
    f = BellFunctional((2, 2), (2, 2), np.zeros((2, 2, 2, 2)))
    assert lhv_constants(f) == (0.0, 0.0, 0.0)
    with pytest.raises(TrivialFunctionalError):
        violation_ratio(chsh_scenario(), f)


def test_constants_scaling():
    rng = np.random.default_rng(3)
    coeffs = rng.standard_normal((2, 2, 2, 2))
    f = BellFunctional((2, 2), (2, 2), coeffs)
    b_inf, b_sup, b_abs = lhv_constants(f)
    # power-of-two scalings commute with float arithmetic exactly
    for c in (2.0, -0.5, 4.0):
        ci, cs, ca = lhv_constants(f.scaled(c))
        if c > 0:
            assert (ci, cs) == (c * b_inf, c * b_sup)
        else:
            assert (ci, cs) == (c * b_sup, c * b_inf)
        assert ca == abs(c) * b_abs
    for c in (2.5, -1.5):
        ci, cs, ca = lhv_constants(f.scaled(c))
        lo, hi = sorted((c * b_inf, c * b_sup))
        assert abs(ci - lo) < 1e-12 and abs(cs - hi) < 1e-12
    assert b_inf <= b_sup


def test_quantum_value_chsh():
    assert abs(quantum_value(chsh_scenario(), chsh_functional()) - 2 * np.sqrt(2)) < 1e-9


def test_quantum_value_product_state_within_lhv():
    rng = np.random.default_rng(4)
    state = random_separable(rng, (2, 2))
    sc = projective_scenario(state, CHSH_ANGLES)
    assert abs(quantum_value(sc, chsh_functional())) <= 2 + 1e-9


def test_quantum_value_zero_functional():
    f = BellFunctional((2, 2), (2, 2), np.zeros((2, 2, 2, 2)))
    assert quantum_value(chsh_scenario(), f) == 0.0


def test_violation_ratio():
    assert abs(violation_ratio(chsh_scenario(), chsh_functional()) - np.sqrt(2)) < 1e-9
    mixed = QuantumState((2, 2), np.eye(4, dtype=complex) / 4)
    sc = projective_scenario(mixed, CHSH_ANGLES)
    assert violation_ratio(sc, chsh_functional()) <= 1 + 1e-9


def test_analog_inequality_check():
    sc = chsh_scenario()
    f = chsh_functional()
    assert analog_inequality_check(sc, f, np.sqrt(2) + 1e-9)
    assert not analog_inequality_check(sc, f, 1.0)
    lhv_sc = projective_scenario(random_separable(np.random.default_rng(5), (2, 2)),
                                 CHSH_ANGLES)
    assert analog_inequality_check(lhv_sc, f, 1.0)
    with pytest.raises(ValueError):
        analog_inequality_check(sc, f, 0.5)


def test_correlation_functional_values():
    outcomes = OutcomeSpace(((1.0, -1.0), (1.0, 0.0)))
    f = correlation_functional([[2.0]], outcomes)
    assert f.coeffs[0, 0, 0, 0] == 2.0   # +1 * +1
    assert f.coeffs[0, 0, 1, 0] == -2.0  # -1 * +1
    assert f.coeffs[0, 0, 0, 1] == 0.0


def test_scenario_validation():
    state = make_singlet()
    good = projective_scenario(state, [[0.0], [0.0]])
    assert good.settings == (1, 1)
    bad_effects = (((np.eye(2, dtype=complex) * 0.9, np.eye(2, dtype=complex) * 0.2),),
                   ((np.eye(2, dtype=complex) * 0.5, np.eye(2, dtype=complex) * 0.5),))
    with pytest.raises(ValueError):
        Scenario(state, bad_effects, pm_outcomes(2))
