import itertools

import numpy as np

from lqhv.bounds import (
    alternating_settings_bound,
    state_bound,
    universal_violation_bound,
    settings_bound,
    dimension_bound,
)
from lqhv.models import compute_gamma
from lqhv.states import make_generalized_ghz, make_ghz, make_singlet

from conftest import random_density, random_projective_scenario


def test_xi_examples():
    assert dimension_bound((2, 2)) == 3.0
    assert dimension_bound((2, 2, 2)) == 13.0
    assert dimension_bound((7, 1, 1)) == 1.0


def test_theta_examples():
    assert settings_bound((4, 2)) == 2 * 2 - 1
    assert settings_bound((2, 2, 2)) == 9.0
    assert settings_bound((1, 1, 1)) == 1.0


def test_bipartite_closed_form_regression():
    for s1, s2 in itertools.product(range(1, 6), repeat=2):
        assert settings_bound((s1, s2)) == 2 * min(s1, s2) - 1
    for d1, d2 in itertools.product(range(1, 6), repeat=2):
        assert dimension_bound((d1, d2)) == 2 * min(d1, d2) - 1


def test_tripartite_closed_form_regression():
    for s in itertools.product(range(1, 6), repeat=3):
        oracle = min(
            4 * s[i] * s[j] - 2 * (s[i] + s[j]) + 1
            for i, j in itertools.combinations(range(3), 2)
        )
        assert settings_bound(s) == oracle
    for d in itertools.product(range(1, 6), repeat=3):
        assert dimension_bound(d) == 4 * d[0] * d[1] * d[2] / max(d) - 3


def test_alternating_sum_equals_subset_product():
    rng = np.random.default_rng(0)
    for _ in range(30):
        m = int(rng.integers(1, 5))
        s = [int(rng.integers(1, 7)) for _ in range(m)]
        prod = 1.0
        for v in s:
            prod *= 2 * v - 1
        assert abs(alternating_settings_bound(s) - prod) < 1e-9


def test_induction_inequality():
    for s in range(1, 11):
        for n in range(2, 7):
            assert (2 * s - 1) ** (n - 1) <= 2 ** (n - 1) * (s ** (n - 1) - 1) + 1


def test_monotonicity():
    for base in ((2, 2), (2, 3, 2)):
        for i in range(len(base)):
            bumped = tuple(v + 1 if j == i else v for j, v in enumerate(base))
            assert dimension_bound(bumped) >= dimension_bound(base)
            assert settings_bound(bumped) >= settings_bound(base)


def test_universal_bound_examples():
    assert universal_violation_bound((2, 2), (2, 2)).final_upper == 3.0
    r = universal_violation_bound((2, 2, 2), (2, 2, 2))
    assert r.universal_min == min(13.0, 9.0) == 9.0
    assert universal_violation_bound((5, 9), (1, 1)).final_upper == 1.0
    # the relaxed single-formula bound never undercuts min(xi, theta)
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(2, 5))
        dims = tuple(int(rng.integers(1, 5)) for _ in range(n))
        settings = tuple(int(rng.integers(1, 5)) for _ in range(n))
        rep = universal_violation_bound(dims, settings)
        assert rep.universal_min <= rep.state_specific["relaxed_min_bound"] + 1e-9
        assert rep.final_upper >= 1.0 - 1e-12
        assert rep.final_upper == min(rep.universal_min, rep.state_specific["relaxed_min_bound"])


def test_state_bound_singlet():
    for s in (2, 3, 4):
        rep = state_bound(make_singlet(), (s, 2))
        assert rep.final_upper <= np.sqrt(3) + 1e-9
        assert rep.state_specific["singlet_two_setting_site"] == np.sqrt(3)
        assert all(v >= 1.0 - 1e-9 for _, v in rep.source_norm_bounds)


def test_state_bound_ghz():
    rep = state_bound(make_ghz(2, 3), (2, 2, 2))
    assert rep.state_specific["ghz_closed_form"] == 5.0
    assert rep.final_upper <= min((2 * 2 - 1) ** 2, 1 + 2 ** 2 * (2 - 1)) + 1e-9


def test_state_bound_generalized_ghz():
    phi = 0.4
    rep = state_bound(make_generalized_ghz(phi, 3), (2, 2, 2))
    closed = 1 + 2 ** 2 * abs(np.sin(2 * phi))
    assert abs(rep.state_specific["generalized_ghz_closed_form"] - closed) < 1e-9
    assert rep.final_upper <= closed + 1e-9
    sep = state_bound(make_generalized_ghz(0.0, 3), (2, 2, 2))
    assert abs(sep.final_upper - 1.0) < 1e-9


def test_gamma_within_bounds():
    rng = np.random.default_rng(2)
    for _ in range(5):
        state = random_density(rng, (2, 2))
        sc = random_projective_scenario(rng, state, (2, 2))
        gamma = compute_gamma(sc).gamma
        rep = state_bound(state, (2, 2))
        assert gamma <= rep.final_upper + 1e-6
        assert gamma <= universal_violation_bound((2, 2), (2, 2)).final_upper + 1e-6
