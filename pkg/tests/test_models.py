import itertools

import numpy as np
import pytest

from lqhv.errors import ShapeMismatchError
from lqhv.models import (
    SignedMeasure,
    compute_gamma,
    covering_split_measure,
    estimate_upsilon,
    extract_optimal_functional,
    measure_from_source_operator,
)
from lqhv.positivity import covering_upper
from lqhv.scenarios import (
    OutcomeSpace,
    Scenario,
    joint_distribution,
    lhv_constants,
    pm_outcomes,
    projective_scenario,
    violation_ratio,
)
from lqhv.source_ops import build_separable_positive, build_singlet_special, build_tau, build_tau_tilde
from lqhv.states import make_singlet

from conftest import (
    random_density,
    random_projective_scenario,
    random_pure,
    random_separable,
    random_separable_components,
)

CHSH_ANGLES = [[0.0, np.pi / 2], [np.pi / 4, -np.pi / 4]]


def chsh_scenario():
    return projective_scenario(make_singlet(), CHSH_ANGLES)


def test_gamma_chsh():
    g = compute_gamma(chsh_scenario())
    assert abs(g.gamma - np.sqrt(2)) < 1e-6
    assert not g.lhv
    assert (g.n_variables, g.n_constraints) == (32, 16)
    assert g.max_marginal_error <= 1e-8
    assert abs(g.optimal_measure.total_variation() - g.gamma) < 1e-9
    assert abs(g.optimal_measure.total_mass() - 1.0) < 1e-9


def test_gamma_dual_functional_achieves_gamma():
    sc = chsh_scenario()
    g = compute_gamma(sc)
    f = extract_optimal_functional(g)
    assert abs(violation_ratio(sc, f) - g.gamma) < 1e-5
    _, _, b_abs = lhv_constants(f)
    assert abs(b_abs - 1.0) < 1e-6


def test_gamma_separable_states_are_lhv():
    rng = np.random.default_rng(10)
    for _ in range(10):
        state = random_separable(rng, (2, 2))
        sc = random_projective_scenario(rng, state, (2, 2))
        g = compute_gamma(sc)
        assert abs(g.gamma - 1.0) <= 1e-7
        assert g.lhv
        f = extract_optimal_functional(g)
        assert violation_ratio(sc, f) <= 1.0 + 1e-6


def test_gamma_single_multisetting_site_is_lhv():
    rng = np.random.default_rng(11)
    state = random_density(rng, (2, 2))
    sc = random_projective_scenario(rng, state, (1, 3))
    g = compute_gamma(sc)
    assert abs(g.gamma - 1.0) <= 1e-7


def test_gamma_monotone_under_setting_reduction():
    rng = np.random.default_rng(12)
    state = random_pure(rng, (2, 2))
    sc = random_projective_scenario(rng, state, (2, 2))
    g_full = compute_gamma(sc).gamma
    sub = Scenario(state, (sc.povms[0][:1], sc.povms[1]), sc.outcomes)
    g_sub = compute_gamma(sub).gamma
    assert g_sub <= g_full + 1e-8


def test_gamma_bounded_by_source_operator_bracket():
    rng = np.random.default_rng(13)
    for _ in range(5):
        state = random_density(rng, (2, 2))
        sc = random_projective_scenario(rng, state, (2, 2))
        gamma = compute_gamma(sc).gamma
        uppers = []
        for site in range(2):
            settings = tuple(1 if i == site else 2 for i in range(2))
            tau = build_tau(state, settings)
            uppers.append(covering_upper(tau.op))
        assert gamma <= min(uppers) + 1e-6


def test_measure_from_separable_positive_operator():
    rng = np.random.default_rng(14)
    comps = random_separable_components(rng, (2, 2))
    t = build_separable_positive(comps, (2, 2))
    sc = random_projective_scenario(rng, t.origin_state, (2, 2))
    m = measure_from_source_operator(t, sc.povms, sc.outcomes)
    assert m.weights.min() >= -1e-10
    assert abs(m.total_variation() - 1.0) < 1e-9
    assert abs(m.total_mass() - 1.0) < 1e-9


def test_measure_marginals_match_scenario():
    rng = np.random.default_rng(15)
    for _ in range(5):
        state = random_density(rng, (2, 2))
        sc = random_projective_scenario(rng, state, (2, 2))
        t = build_tau(state, (2, 2))
        m = measure_from_source_operator(t, sc.povms, sc.outcomes)
        assert abs(m.total_mass() - 1.0) < 1e-9
        assert m.total_variation() <= t.trace_norm() + 1e-8
        for s in itertools.product(range(2), repeat=2):
            np.testing.assert_allclose(m.marginal(s), joint_distribution(sc, s), atol=1e-9)


def test_singlet_special_measure_variation():
    t = build_singlet_special()
    sc = projective_scenario(make_singlet(), [[0.0], [0.0, np.pi / 2]])
    m = measure_from_source_operator(t, sc.povms, sc.outcomes)
    assert m.total_variation() <= np.sqrt(3) + 1e-8
    for s in itertools.product(range(1), range(2)):
        np.testing.assert_allclose(m.marginal(s), joint_distribution(sc, s), atol=1e-9)


def test_covering_split_measure_chsh():
    t = build_singlet_special()
    sc = chsh_scenario()
    m = covering_split_measure(t, sc.povms, sc.outcomes)
    assert m.settings == (2, 2)
    assert abs(m.total_mass() - 1.0) < 1e-9
    assert m.total_variation() <= np.sqrt(3) + 1e-8
    for s in itertools.product(range(2), repeat=2):
        np.testing.assert_allclose(m.marginal(s), joint_distribution(sc, s), atol=1e-8)


def test_covering_split_measure_positive_case():
    rng = np.random.default_rng(16)
    comps = random_separable_components(rng, (2, 2))
    t = build_separable_positive(comps, (1, 2))
    sc = random_projective_scenario(rng, t.origin_state, (2, 2))
    m = covering_split_measure(t, sc.povms, sc.outcomes)
    assert abs(m.total_variation() - 1.0) < 1e-8
    for s in itertools.product(range(2), repeat=2):
        np.testing.assert_allclose(m.marginal(s), joint_distribution(sc, s), atol=1e-8)


def test_covering_split_measure_zero_marginal_cells():
    # a deterministic setting at site 1: effects {I, 0} concentrate all mass,
    # leaving zero-mass cells whose conditionals default to uniform
    state = make_singlet()
    eye = np.eye(2, dtype=complex)
    zero = np.zeros((2, 2), dtype=complex)
    povms = (
        ((eye / 2 + np.diag([0.5, -0.5]), eye / 2 - np.diag([0.5, -0.5])),) ,
        ((eye, zero), (eye / 2 + np.diag([0.5, -0.5]), eye / 2 - np.diag([0.5, -0.5]))),
    )
    sc = Scenario(state, povms, pm_outcomes(2))
    t = build_tau_tilde(state, (1, 2))
    m = covering_split_measure(t, sc.povms, sc.outcomes)
    assert abs(m.total_mass() - 1.0) < 1e-9
    for s in itertools.product(range(1), range(2)):
        np.testing.assert_allclose(m.marginal(s), joint_distribution(sc, s), atol=1e-8)


def test_total_variation_identity():
    rng = np.random.default_rng(17)
    w = rng.standard_normal((2, 2, 2, 2))
    w /= w.sum()
    m = SignedMeasure((2, 2), (2, 2), w)
    assert abs(m.total_variation() - (1.0 + 2.0 * m.negative_mass())) < 1e-12


def test_measure_shape_validation():
    with pytest.raises(ShapeMismatchError):
        SignedMeasure((2, 2), (2, 2), np.zeros((2, 2, 2)))


def test_estimate_upsilon_product_state():
    rng = np.random.default_rng(18)
    state = random_separable(rng, (2, 2), n_components=1)
    best, povms = estimate_upsilon(state, (2, 2), (2, 2), search_budget=40, seed=0)
    assert abs(best - 1.0) <= 1e-7
    assert povms is not None


def test_estimate_upsilon_singlet_small_budget():
    best, _ = estimate_upsilon(make_singlet(), (2, 2), (2, 2), search_budget=600, seed=0)
    assert best >= np.sqrt(2) - 1e-3
    assert best <= np.sqrt(2) + 1e-6


def test_estimate_upsilon_qutrit_random_bases():
    from lqhv.states import make_ghz

    best, povms = estimate_upsilon(make_ghz(3, 2), (2, 2), (3, 3),
                                   search_budget=15, seed=1)
    assert best >= 1.0 - 1e-9
    assert best <= 2 * min(2, 3) - 1 + 1e-6  # bipartite analytic ceiling
    assert povms is not None


def test_every_functional_ratio_bounded_by_gamma():
    rng = np.random.default_rng(19)
    sc = chsh_scenario()
    gamma = compute_gamma(sc).gamma
    from lqhv.scenarios import BellFunctional

    for _ in range(20):
        coeffs = rng.standard_normal((2, 2, 2, 2))
        f = BellFunctional((2, 2), (2, 2), coeffs)
        assert violation_ratio(sc, f) <= gamma + 1e-6


def test_gamma_results_respect_floor():
    rng = np.random.default_rng(20)
    for _ in range(5):
        state = random_density(rng, (2, 2))
        sc = random_projective_scenario(rng, state, (2, 2))
        g = compute_gamma(sc)
        assert g.gamma >= 1.0 - 1e-9


def test_lp_cap_enforced():
    from lqhv.errors import SizeLimitError

    sc = chsh_scenario()
    with pytest.raises(SizeLimitError):
        compute_gamma(sc, lp_cap=8)


def test_enumeration_cap_enforced():
    from lqhv.errors import SizeLimitError
    from lqhv.scenarios import BellFunctional, lhv_constants

    f = BellFunctional((2, 2), (2, 2), np.ones((2, 2, 2, 2)))
    with pytest.raises(SizeLimitError):
        lhv_constants(f, enum_cap=4)
