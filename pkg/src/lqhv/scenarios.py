"""Finite-outcome measurement scenarios, Bell functionals, and their constants.

A scenario couples a state with one POVM per (site, setting) over fixed
per-site outcome alphabets.  A Bell functional is a real coefficient tensor
indexed by (setting tuple, outcome tuple); its deterministic extrema over all
per-site outcome assignments give the classical constants that normalize
quantum violations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .errors import ShapeMismatchError, SizeLimitError, TrivialFunctionalError
from .linalg import effect_distribution, require_hermitian
from .states import QuantumState

EFFECT_TOL = 1e-10
PROB_CLIP = 1e-10
DEFAULT_ENUM_CAP = 10 ** 7


@dataclass(frozen=True)
class OutcomeSpace:
    """Per-site outcome alphabets carrying real values."""

    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        for n, vals in enumerate(self.values):
            if len(vals) < 1:
                raise ValueError(f"site {n} has an empty outcome alphabet")
            if len(set(vals)) != len(vals):
                raise ValueError(f"site {n} has duplicate outcome values")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.values)


def pm_outcomes(n_sites: int) -> OutcomeSpace:
    """The +-1 dichotomic alphabet at every site."""
    return OutcomeSpace(((1.0, -1.0),) * n_sites)


@dataclass(frozen=True)
class Scenario:
    """State + POVM family + outcome alphabets.

    ``povms[n][s][k]`` is the effect of outcome k for setting s at site n.
    """

    state: QuantumState
    povms: tuple
    outcomes: OutcomeSpace

    def __post_init__(self):
        if len(self.povms) != self.state.num_sites:
            raise ShapeMismatchError("one POVM list per site required")
        sizes = self.outcomes.sizes
        if len(sizes) != self.state.num_sites:
            raise ShapeMismatchError("outcome alphabets must match the number of sites")
        povms = []
        for n, site_povms in enumerate(self.povms):
            d = self.state.site_dims[n]
            site_out = []
            for s, effects in enumerate(site_povms):
                if len(effects) != sizes[n]:
                    raise ShapeMismatchError(
                        f"site {n} setting {s} has {len(effects)} effects, alphabet size {sizes[n]}"
                    )
                eff_out = []
                total = np.zeros((d, d), dtype=complex)
                for e in effects:
                    e = require_hermitian(np.asarray(e, dtype=complex))
                    if e.shape != (d, d):
                        raise ShapeMismatchError(f"effect at site {n} is {e.shape}, expected {d}x{d}")
                    if np.linalg.eigvalsh(e).min() < -EFFECT_TOL:
                        raise ValueError(f"effect at site {n}, setting {s} is not positive")
                    total += e
                    eff_out.append(e)
                if np.abs(total - np.eye(d)).max() > EFFECT_TOL:
                    raise ValueError(f"effects at site {n}, setting {s} do not sum to identity")
                site_out.append(tuple(eff_out))
            povms.append(tuple(site_out))
        object.__setattr__(self, "povms", tuple(povms))

    @property
    def settings(self) -> tuple[int, ...]:
        return tuple(len(site) for site in self.povms)

    @property
    def num_sites(self) -> int:
        return self.state.num_sites


@dataclass(frozen=True)
class BellFunctional:
    """Real coefficients beta[(s_1..s_N)][(k_1..k_N)]."""

    settings: tuple[int, ...]
    outcome_sizes: tuple[int, ...]
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        expected = tuple(self.settings) + tuple(self.outcome_sizes)
        if coeffs.shape != expected:
            raise ShapeMismatchError(f"coefficients have shape {coeffs.shape}, expected {expected}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    def scaled(self, c: float) -> "BellFunctional":
        return BellFunctional(self.settings, self.outcome_sizes, c * self.coeffs)


def correlation_functional(setting_weights, outcomes: OutcomeSpace) -> BellFunctional:
    """Full-correlation functional: beta[s][k] = weight[s] * prod_n value_n[k_n]."""
    w = np.asarray(setting_weights, dtype=float)
    n = w.ndim
    sizes = outcomes.sizes
    if len(sizes) != n:
        raise ShapeMismatchError("weights tensor order must equal the number of sites")
    value_product = np.array([1.0])
    for vals in outcomes.values:
        value_product = np.multiply.outer(value_product, np.asarray(vals, dtype=float))
    value_product = value_product.reshape(sizes)
    coeffs = np.multiply.outer(w, value_product)
    return BellFunctional(tuple(w.shape), sizes, coeffs)


def chsh_functional(outcomes: OutcomeSpace | None = None) -> BellFunctional:
    """The two-site correlation functional with weights -[[1,1],[1,-1]]."""
    if outcomes is None:
        outcomes = pm_outcomes(2)
    return correlation_functional([[-1.0, -1.0], [-1.0, 1.0]], outcomes)


def joint_distribution(sc: Scenario, setting_tuple) -> np.ndarray:
    """Outcome-tuple probabilities tr[rho (M_1 x ... x M_N)] for one setting tuple."""
    setting_tuple = tuple(int(s) for s in setting_tuple)
    if len(setting_tuple) != sc.num_sites:
        raise ShapeMismatchError("setting tuple length differs from the number of sites")
    stacks = []
    for n, s in enumerate(setting_tuple):
        if not 0 <= s < sc.settings[n]:
            raise ShapeMismatchError(f"setting {s} out of range at site {n}")
        stacks.append(np.stack(sc.povms[n][s]))
    table = effect_distribution(sc.state.rho, sc.state.site_dims, stacks)
    low = float(table.min())
    if low < -PROB_CLIP:
        raise ValueError(f"joint probability {low!r} below -1e-10; inconsistent scenario")
    table = np.clip(table, 0.0, None)
    total = table.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"joint probabilities sum to {total!r}, expected 1 within 1e-9")
    return table / total


def all_joint_distributions(sc: Scenario) -> dict[tuple[int, ...], np.ndarray]:
    return {
        s: joint_distribution(sc, s)
        for s in itertools.product(*(range(k) for k in sc.settings))
    }


def strategy_value_table(f: BellFunctional, enum_cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
    """Functional value of every deterministic strategy.

    A deterministic strategy assigns one outcome index per (site, setting)
    slot; the table has one axis per slot (site-major, setting-minor) and
    entry sum_s beta[s][assigned outcomes].
    """
    settings = f.settings
    sizes = f.outcome_sizes
    n = len(settings)
    cells = prod(k ** s for k, s in zip(sizes, settings))
    if cells > enum_cap:
        raise SizeLimitError(f"{cells} deterministic strategies exceed enumeration cap {enum_cap}")
    slot_sizes = tuple(k for k, s in zip(sizes, settings) for _ in range(s))
    table = np.zeros(slot_sizes, dtype=float)
    slot_offset = np.concatenate(([0], np.cumsum(settings)))
    for s_tuple in itertools.product(*(range(s) for s in settings)):
        beta = f.coeffs[s_tuple]
        bshape = [1] * len(slot_sizes)
        for site in range(n):
            bshape[slot_offset[site] + s_tuple[site]] = sizes[site]
        table += beta.reshape(bshape)
    return table


def lhv_constants(f: BellFunctional, enum_cap: int = DEFAULT_ENUM_CAP) -> tuple[float, float, float]:
    """(B_inf, B_sup, B_abs): deterministic extrema and their max modulus."""
    table = strategy_value_table(f, enum_cap=enum_cap)
    b_inf = float(table.min())
    b_sup = float(table.max())
    return b_inf, b_sup, max(abs(b_inf), abs(b_sup))


def quantum_value(sc: Scenario, f: BellFunctional) -> float:
    """sum over setting and outcome tuples of beta * joint probability."""
    if f.settings != sc.settings or f.outcome_sizes != sc.outcomes.sizes:
        raise ShapeMismatchError("functional indices do not match the scenario")
    total = 0.0
    for s_tuple, table in all_joint_distributions(sc).items():
        total += float(np.sum(f.coeffs[s_tuple] * table))
    return total


def violation_ratio(sc: Scenario, f: BellFunctional) -> float:
    """|quantum value| / B_abs, the normalized violation of the functional."""
    _, _, b_abs = lhv_constants(f)
    if b_abs <= 0.0:
        raise TrivialFunctionalError("functional has B_abs = 0")
    return abs(quantum_value(sc, f)) / b_abs


def analog_inequality_check(sc: Scenario, f: BellFunctional, upsilon: float,
                            slack: float = 1e-9) -> bool:
    """Whether the quantum value obeys the widened classical constraints.

    With width w = (upsilon - 1)/2 * (B_sup - B_inf) the check is
    B_inf - w <= quantum value <= B_sup + w, up to ``slack`` roundoff.
    """
    if upsilon < 1.0:
        raise ValueError("upsilon must be >= 1")
    b_inf, b_sup, _ = lhv_constants(f)
    width = (upsilon - 1.0) / 2.0 * (b_sup - b_inf)
    qv = quantum_value(sc, f)
    return (b_inf - width - slack) <= qv <= (b_sup + width + slack)


# -- measurement constructors -------------------------------------------------

def qubit_projective_effects(theta: float, phi: float = 0.0) -> list[np.ndarray]:
    """Rank-1 qubit projectors for the Bloch direction (theta, phi)."""
    nx = np.sin(theta) * np.cos(phi)
    ny = np.sin(theta) * np.sin(phi)
    nz = np.cos(theta)
    pauli = nx * np.array([[0, 1], [1, 0]], dtype=complex) \
        + ny * np.array([[0, -1j], [1j, 0]], dtype=complex) \
        + nz * np.array([[1, 0], [0, -1]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    return [(eye + pauli) / 2, (eye - pauli) / 2]


def basis_projective_effects(unitary: np.ndarray) -> list[np.ndarray]:
    """Rank-1 projective effects onto the columns of a unitary."""
    u = np.asarray(unitary, dtype=complex)
    return [np.outer(u[:, k], u[:, k].conj()) for k in range(u.shape[1])]


def projective_scenario(state: QuantumState, site_angles,
                        outcomes: OutcomeSpace | None = None) -> Scenario:
    """Qubit scenario from per-site lists of Bloch angles (theta or (theta, phi))."""
    povms = []
    for angles in site_angles:
        site = []
        for a in angles:
            theta, phi = (a if isinstance(a, (tuple, list)) else (a, 0.0))
            site.append(qubit_projective_effects(theta, phi))
        povms.append(site)
    if outcomes is None:
        outcomes = pm_outcomes(state.num_sites)
    return Scenario(state, tuple(tuple(s) for s in povms), outcomes)
