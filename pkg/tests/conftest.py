import numpy as np
import pytest

from lqhv.linalg import random_unitary
from lqhv.scenarios import OutcomeSpace, Scenario, basis_projective_effects, pm_outcomes
from lqhv.states import QuantumState, make_separable_mixture, state_from_vector


def random_pure(rng, dims):
    d = int(np.prod(dims))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return state_from_vector(tuple(dims), v)


def random_density(rng, dims, rank=None):
    d = int(np.prod(dims))
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return QuantumState(tuple(dims), rho / np.trace(rho))


def random_single_site_density(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_separable_components(rng, dims, n_components=3):
    weights = rng.dirichlet(np.ones(n_components))
    comps = []
    for w in weights:
        comps.append((float(w), [random_single_site_density(rng, d) for d in dims]))
    return comps


def random_separable(rng, dims, n_components=3):
    return make_separable_mixture(random_separable_components(rng, dims, n_components))


def random_projective_scenario(rng, state, settings, outcomes=None):
    povms = tuple(
        tuple(tuple(basis_projective_effects(random_unitary(rng, d))) for _ in range(s))
        for d, s in zip(state.site_dims, settings)
    )
    if outcomes is None:
        if all(d == 2 for d in state.site_dims):
            outcomes = pm_outcomes(state.num_sites)
        else:
            outcomes = OutcomeSpace(tuple(tuple(float(v) for v in range(d))
                                          for d in state.site_dims))
    return Scenario(state, povms, outcomes)


@pytest.fixture(scope="session")
def builder_corpus():
    """50 randomized (state, settings) draws with qubit/qutrit sites, N in {2, 3}."""
    rng = np.random.default_rng(20240801)
    corpus = []
    while len(corpus) < 50:
        n = int(rng.integers(2, 4))
        dims = tuple(int(rng.integers(2, 4)) for _ in range(n))
        settings = tuple(int(rng.integers(1, 4)) for _ in range(n))
        dilated = int(np.prod([d ** s for d, s in zip(dims, settings)]))
        normal_form = (1,) + settings[1:]
        dilated_nf = int(np.prod([d ** s for d, s in zip(dims, normal_form)]))
        if max(dilated, dilated_nf) > 768:
            continue
        state = random_pure(rng, dims) if rng.random() < 0.5 else random_density(rng, dims)
        corpus.append((state, settings))
    return corpus
