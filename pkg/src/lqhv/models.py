"""Signed-measure simulation models for quantum scenarios.

The scenario parameter gamma is the minimal total variation of a normalized
real-valued measure on the product of per-slot outcome spaces whose marginals
reproduce every joint distribution of the scenario.  It equals 1 exactly when
the scenario admits a classical (positive-measure) model, and by LP duality it
equals the largest normalized violation of any Bell functional on the
scenario.  This module computes gamma exactly as a linear program, extracts
the optimal functional from the dual, builds the two explicit reproducing
measures from source operators, and searches measurement families for the
state-level maximum of gamma.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.sparse import coo_matrix, hstack

from .errors import LqhvError, ShapeMismatchError, SizeLimitError
from .linalg import abs_operator, effect_distribution, random_unitary
from .scenarios import (
    BellFunctional,
    OutcomeSpace,
    Scenario,
    all_joint_distributions,
    basis_projective_effects,
    lhv_constants,
    projective_scenario,
)
from .source_ops import SourceOperator
from .states import QuantumState

DEFAULT_LP_CAP = 10 ** 6
LHV_GAMMA_TOL = 1e-7


@dataclass(frozen=True)
class SignedMeasure:
    """Dense real measure over the product of per-slot outcome alphabets.

    ``weights`` has one axis per slot, ordered site-major, setting-minor.
    """

    settings: tuple[int, ...]
    outcome_sizes: tuple[int, ...]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        expected = tuple(k for k, s in zip(self.outcome_sizes, self.settings) for _ in range(s))
        if w.shape != expected:
            raise ShapeMismatchError(f"weights have shape {w.shape}, expected {expected}")
        object.__setattr__(self, "weights", w)

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def total_variation(self) -> float:
        return float(np.abs(self.weights).sum())

    def negative_mass(self) -> float:
        return float(np.clip(-self.weights, 0.0, None).sum())

    def _slot_offsets(self):
        return np.concatenate(([0], np.cumsum(self.settings)))

    def marginal(self, setting_tuple) -> np.ndarray:
        """Outcome-tuple marginal selecting slot s_n at each site n."""
        offs = self._slot_offsets()
        keep = [int(offs[n] + s) for n, s in enumerate(setting_tuple)]
        drop = tuple(i for i in range(self.weights.ndim) if i not in keep)
        return self.weights.sum(axis=drop)


@dataclass(frozen=True)
class GammaResult:
    gamma: float
    optimal_measure: SignedMeasure
    dual_functional: BellFunctional
    lhv: bool
    n_variables: int
    n_constraints: int
    max_marginal_error: float


def _lp_system(sc: Scenario, lp_cap: int):
    settings = sc.settings
    sizes = sc.outcomes.sizes
    slot_sizes = tuple(k for k, s in zip(sizes, settings) for _ in range(s))
    cells = prod(slot_sizes)
    if 2 * cells > lp_cap:
        raise SizeLimitError(f"LP with {2 * cells} variables exceeds LP size cap {lp_cap}")
    setting_tuples = list(itertools.product(*(range(s) for s in settings)))
    n_out = prod(sizes)
    offs = np.concatenate(([0], np.cumsum(settings)))
    multi = np.indices(slot_sizes).reshape(len(slot_sizes), cells)
    rows_all, cols_all = [], []
    b = np.empty(len(setting_tuples) * n_out)
    joints = all_joint_distributions(sc)
    cols = np.arange(cells)
    for t_i, s_tuple in enumerate(setting_tuples):
        sel = multi[[offs[n] + s_tuple[n] for n in range(len(settings))]]
        marg = np.ravel_multi_index(sel, sizes)
        rows_all.append(t_i * n_out + marg)
        cols_all.append(cols)
        b[t_i * n_out:(t_i + 1) * n_out] = joints[s_tuple].reshape(-1)
    rows_idx = np.concatenate(rows_all)
    cols_idx = np.concatenate(cols_all)
    data = np.ones(rows_idx.size)
    a = coo_matrix((data, (rows_idx, cols_idx)), shape=(len(setting_tuples) * n_out, cells)).tocsr()
    return a, b, slot_sizes, setting_tuples


def compute_gamma(sc: Scenario, lp_cap: int = DEFAULT_LP_CAP) -> GammaResult:
    """Exact scenario parameter gamma via linear programming.

    Variables are the positive and negative parts (p, q >= 0) of a signed
    measure over the outcome cells; one equality constraint per (setting
    tuple, outcome tuple) forces the marginals of p - q onto the scenario's
    joint distributions; the objective is the total mass of p + q.  The dual
    multipliers are exactly Bell-functional coefficients whose deterministic
    strategy values are bounded by 1, so the repackaged dual achieves the
    violation ratio gamma.
    """
    a, b, slot_sizes, _ = _lp_system(sc, lp_cap)
    cells = a.shape[1]
    a_eq = hstack([a, -a]).tocsr()
    c = np.ones(2 * cells)
    res = linprog(c, A_eq=a_eq, b_eq=b, bounds=(0, None), method="highs")
    if not res.success:
        raise LqhvError(f"gamma LP did not solve: {res.message}")
    gamma = float(res.fun)
    weights = (res.x[:cells] - res.x[cells:]).reshape(slot_sizes)
    measure = SignedMeasure(sc.settings, sc.outcomes.sizes, weights)

    y = np.asarray(res.eqlin.marginals, dtype=float)
    coeffs = y.reshape(tuple(sc.settings) + tuple(sc.outcomes.sizes))
    dual = BellFunctional(sc.settings, sc.outcomes.sizes, coeffs)
    _, _, b_abs = lhv_constants(dual)
    if b_abs > 1e-12:
        dual = dual.scaled(1.0 / b_abs)
    else:
        # degenerate dual: any supporting functional with ratio gamma = 1;
        # the all-ones functional has quantum value and B_abs both prod(S)
        ones = np.ones(tuple(sc.settings) + tuple(sc.outcomes.sizes))
        dual = BellFunctional(sc.settings, sc.outcomes.sizes, ones / prod(sc.settings))

    err = 0.0
    for s_tuple, table in all_joint_distributions(sc).items():
        err = max(err, float(np.abs(measure.marginal(s_tuple) - table).max()))
    return GammaResult(
        gamma=gamma,
        optimal_measure=measure,
        dual_functional=dual,
        lhv=gamma <= 1.0 + LHV_GAMMA_TOL,
        n_variables=2 * cells,
        n_constraints=a.shape[0],
        max_marginal_error=err,
    )


def extract_optimal_functional(g: GammaResult) -> BellFunctional:
    """The normalized dual functional; its violation ratio equals gamma."""
    return g.dual_functional


def _check_povm_shapes(t: SourceOperator, povms, outcomes: OutcomeSpace):
    if len(povms) != t.shape.num_sites:
        raise ShapeMismatchError("one POVM list per site required")
    sizes = outcomes.sizes
    for n, site in enumerate(povms):
        d = t.shape.site_dims[n]
        for effects in site:
            if len(effects) != sizes[n]:
                raise ShapeMismatchError(f"site {n}: {len(effects)} effects vs alphabet {sizes[n]}")
            for e in effects:
                if np.asarray(e).shape != (d, d):
                    raise ShapeMismatchError(f"site {n} effect shape {np.asarray(e).shape} != {d}x{d}")


def measure_from_source_operator(t: SourceOperator, povms, outcomes: OutcomeSpace) -> SignedMeasure:
    """The reproducing measure tr[T (M_1^(1) x ... x M_N^(S_N))] over all slots.

    ``povms[n][s]`` must supply exactly one POVM per slot of ``t``; the
    resulting normalized signed measure returns every joint distribution of
    the scenario as a marginal and has total variation at most the trace norm
    of ``t``.
    """
    _check_povm_shapes(t, povms, outcomes)
    for n, site in enumerate(povms):
        if len(site) != t.shape.multiplicities[n]:
            raise ShapeMismatchError(
                f"site {n} has {len(site)} settings, source operator expects "
                f"{t.shape.multiplicities[n]}"
            )
    stacks = []
    for n, site in enumerate(povms):
        for s in range(t.shape.multiplicities[n]):
            stacks.append(np.stack([np.asarray(e, dtype=complex) for e in site[s]]))
    weights = effect_distribution(t.op, t.shape.slot_dims, stacks)
    return SignedMeasure(t.shape.multiplicities, outcomes.sizes, weights)


def covering_split_measure(t: SourceOperator, povms, outcomes: OutcomeSpace,
                           zero_marginal_tol: float = 1e-14) -> SignedMeasure:
    """Reproducing measure splitting T into |T| +- T halves at the undilated site.

    ``t`` must have multiplicity 1 at site 0; ``povms[0]`` may hold any number
    S_1 of settings.  The positive operators |T| +- T define, per site-0
    setting, conditional distributions of the site-0 outcome given the rest;
    their products weighted by the rest-marginals assemble a measure over all
    S_1 site-0 slots and the dilated rest.  Cells with vanishing rest-marginal
    get uniform conditionals.  Total variation never exceeds tr|T|.
    """
    if t.shape.multiplicities[0] != 1:
        raise ShapeMismatchError("source operator must be undilated (multiplicity 1) at site 0")
    _check_povm_shapes(t, povms, outcomes)
    for n, site in enumerate(povms):
        if n >= 1 and len(site) != t.shape.multiplicities[n]:
            raise ShapeMismatchError(
                f"site {n} has {len(site)} settings, source operator expects "
                f"{t.shape.multiplicities[n]}"
            )
    s1 = len(povms[0])
    k1 = outcomes.sizes[0]
    abs_t = abs_operator(t.op)
    tau_plus = abs_t + t.op
    tau_minus = abs_t - t.op

    rest_stacks = []
    for n in range(1, t.shape.num_sites):
        for s in range(t.shape.multiplicities[n]):
            rest_stacks.append(np.stack([np.asarray(e, dtype=complex) for e in povms[n][s]]))

    def conditionals(tau):
        joints = []
        for s in range(s1):
            stack0 = np.stack([np.asarray(e, dtype=complex) for e in povms[0][s]])
            joints.append(effect_distribution(tau, t.shape.slot_dims, [stack0] + rest_stacks))
        rest_marginal = joints[0].sum(axis=0)
        alphas = []
        mask = np.abs(rest_marginal) <= zero_marginal_tol
        safe = np.where(mask, 1.0, rest_marginal)
        for s in range(s1):
            alpha = joints[s] / safe
            alpha = np.where(mask, 1.0 / k1, alpha)
            alphas.append(alpha)
        return alphas, rest_marginal

    rest_shape = tuple(k for k, m in zip(outcomes.sizes[1:], t.shape.multiplicities[1:])
                       for _ in range(m))

    def half_product(alphas, rest_marginal):
        out = np.ones((1,) * s1 + rest_shape)
        for s, alpha in enumerate(alphas):
            shape = [1] * s1 + list(rest_shape)
            shape[s] = k1
            out = out * alpha.reshape(shape)
        return out * rest_marginal.reshape((1,) * s1 + rest_shape)

    ap, rp = conditionals(tau_plus)
    am, rm = conditionals(tau_minus)
    weights = 0.5 * half_product(ap, rp) - 0.5 * half_product(am, rm)
    settings = (s1,) + tuple(t.shape.multiplicities[1:])
    return SignedMeasure(settings, outcomes.sizes, weights)


# -- measurement search --------------------------------------------------------

def _angle_scenario(state: QuantumState, settings, flat_angles) -> Scenario:
    site_angles = []
    i = 0
    for s in settings:
        angles = []
        for _ in range(s):
            angles.append((flat_angles[i], flat_angles[i + 1]))
            i += 2
        site_angles.append(angles)
    return projective_scenario(state, site_angles)


def estimate_upsilon(state: QuantumState, settings, outcome_sizes,
                     search_budget: int = 2000, seed: int = 0,
                     lp_cap: int = DEFAULT_LP_CAP):
    """Certified lower bound on the measurement supremum of gamma.

    Maximizes ``compute_gamma`` over rank-1 projective families: for qubit
    sites with two outcomes, a coarse planar grid over Bloch angles (first
    angle pinned to zero) followed by Nelder-Mead refinement over all angles;
    for larger sites, seeded random projective bases.  Every evaluation is an
    exact LP, so the best value found is a true lower bound.  The budget caps
    the number of LP solves; exhausting it returns the best value found.

    Returns ``(best_gamma, best_povms)``.
    """
    settings = tuple(int(s) for s in settings)
    outcome_sizes = tuple(int(k) for k in outcome_sizes)
    if len(settings) != state.num_sites or len(outcome_sizes) != state.num_sites:
        raise ShapeMismatchError("settings/outcome sizes must match the number of sites")
    evals = {"n": 0}
    qubit_case = all(d == 2 for d in state.site_dims) and all(k == 2 for k in outcome_sizes)

    best = {"gamma": -np.inf, "povms": None}

    def record(sc: Scenario):
        if evals["n"] >= search_budget:
            return None
        evals["n"] += 1
        g = compute_gamma(sc, lp_cap=lp_cap).gamma
        if g > best["gamma"]:
            best["gamma"] = g
            best["povms"] = sc.povms
        return g

    if qubit_case:
        n_settings = sum(settings)
        nfree = n_settings - 1

        def eval_flat(flat):
            sc = _angle_scenario(state, settings, flat)
            g = record(sc)
            return -np.inf if g is None else g

        grid_budget = max(1, int(0.6 * search_budget))
        grid_n = 0
        for g_res in (8, 6, 5, 4, 3):
            if g_res ** nfree <= grid_budget:
                grid_n = g_res
                break
        best_flat = np.zeros(2 * n_settings)
        if grid_n:
            thetas = [k * np.pi / grid_n for k in range(grid_n)]
            best_val = -np.inf
            for combo in itertools.product(thetas, repeat=nfree):
                flat = np.zeros(2 * n_settings)
                flat[2::2] = combo  # planar grid: phi = 0, first theta pinned at 0
                val = eval_flat(flat)
                if val > best_val:
                    best_val = val
                    best_flat = flat.copy()
        remaining = search_budget - evals["n"]
        if remaining > 4:
            res = minimize(lambda x: -eval_flat(x), best_flat, method="Nelder-Mead",
                           options={"maxfev": remaining, "xatol": 1e-7, "fatol": 1e-10})
            eval_flat(res.x)
    else:
        rng = np.random.default_rng(seed)
        outcomes = OutcomeSpace(tuple(tuple(float(v) for v in range(k)) for k in outcome_sizes))
        for n, (d, k) in enumerate(zip(state.site_dims, outcome_sizes)):
            if k != d:
                raise ValueError(
                    f"site {n}: rank-1 projective parametrization needs outcomes == dimension"
                )
        while evals["n"] < search_budget:
            povms = tuple(
                tuple(tuple(basis_projective_effects(random_unitary(rng, d)))
                      for _ in range(s))
                for d, s in zip(state.site_dims, settings)
            )
            record(Scenario(state, povms, outcomes))

    return best["gamma"], best["povms"]
