"""Analytic upper bounds on the maximal normalized Bell violation of a state.

Two families of bounds apply for S_1 x ... x S_N settings: one driven by the
local Hilbert dimensions and one by the setting counts, both of the form
1 + 2^{N-1}(... - 1); their minimum holds for every state.  For a concrete
state the trace norms of one-site-undilated source operators give sharper,
state-aware bounds, with closed forms for the singlet and GHZ-type families.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .linalg import FactorShape, dim_cap
from .positivity import covering_upper
from .source_ops import build_tau, build_tau_tilde
from .states import QuantumState, state_vector


@dataclass(frozen=True)
class BoundReport:
    dimension_bound: float
    settings_bound: float
    universal_min: float
    source_norm_bounds: list = field(default_factory=list)
    state_specific: dict | None = None
    final_upper: float = float("inf")


def _elementary_symmetric(values, k: int) -> float:
    # e_k via the polynomial recursion prod (1 + v x)
    coeffs = np.zeros(k + 1)
    coeffs[0] = 1.0
    for v in values:
        coeffs[1:] += v * coeffs[:-1].copy()
    return float(coeffs[k])


def alternating_settings_bound(dilated_settings) -> float:
    """sum_k (-1)^k 2^{m-k} e_{m-k}(S) + (-1)^m over the dilated sites' settings."""
    s = [int(x) for x in dilated_settings]
    m = len(s)
    if m == 0:
        return 1.0
    total = (-1.0) ** m
    for k in range(m):
        total += (-1.0) ** k * 2.0 ** (m - k) * _elementary_symmetric(s, m - k)
    return total


def dimension_bound(dims) -> float:
    """Dimension bound 1 + 2^{N-1} (prod d / max d - 1)."""
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise ValueError("dimensions must be >= 1")
    n = len(dims)
    return 1.0 + 2.0 ** (n - 1) * (prod(dims) / max(dims) - 1.0)


def settings_bound(settings) -> float:
    """Settings bound: minimum of the alternating sum over all (N-1)-site subsets."""
    settings = [int(s) for s in settings]
    n = len(settings)
    if n < 2:
        raise ValueError("need at least two sites")
    best = min(
        alternating_settings_bound([settings[i] for i in sub])
        for sub in itertools.combinations(range(n), n - 1)
    )
    return best


def universal_violation_bound(dims, settings) -> BoundReport:
    """State-independent ceiling: min of the dimension and settings bounds.

    The report also carries the relaxed single-formula bound
    1 + 2^{N-1}(min{prod d/max d, prod S/max S} - 1), which the minimum never
    exceeds; it is kept for cross-checking.
    """
    dims = [int(d) for d in dims]
    settings = [int(s) for s in settings]
    if len(dims) != len(settings):
        raise ValueError("dims and settings must have equal length")
    n = len(dims)
    dim_b = dimension_bound(dims)
    set_b = settings_bound(settings)
    relaxed = 1.0 + 2.0 ** (n - 1) * (
        min(prod(dims) / max(dims), prod(settings) / max(settings)) - 1.0
    )
    m = min(dim_b, set_b)
    return BoundReport(
        dimension_bound=dim_b,
        settings_bound=set_b,
        universal_min=m,
        source_norm_bounds=[],
        state_specific={"relaxed_min_bound": relaxed},
        final_upper=min(m, relaxed),
    )


def _is_singlet(rho: QuantumState, tol: float = 1e-10) -> bool:
    if rho.site_dims != (2, 2):
        return False
    from .states import make_singlet

    return bool(np.abs(rho.rho - make_singlet().rho).max() <= tol)


def _ghz_diagonal_amplitudes(rho: QuantumState, tol: float = 1e-10):
    """Amplitudes c_j when the state is (near) pure sum_j c_j |j...j>, else None."""
    dims = rho.site_dims
    if len(set(dims)) != 1 or rho.purity() < 1.0 - 1e-8:
        return None
    d, n = dims[0], len(dims)
    vec = state_vector(rho)
    step = (d ** n - 1) // (d - 1) if d > 1 else 1
    diag_idx = [j * step for j in range(d)]
    mask = np.ones(len(vec), dtype=bool)
    mask[diag_idx] = False
    if np.abs(vec[mask]).max(initial=0.0) > tol:
        return None
    return vec[diag_idx]


def state_bound(rho: QuantumState, settings, cap: int | None = None) -> BoundReport:
    """State-aware bound from one-site-undilated source operators.

    For each choice of undilated site the symmetrized and rank-one-block
    constructions are built and their covering upper edges (trace norm, or
    the trace when ordinary positivity certifies exactness) collected;
    applicable closed forms for named families are added; the report's final
    upper bound is the minimum of all entries together with the settings and
    dimension bounds.
    """
    settings = tuple(int(s) for s in settings)
    n = rho.num_sites
    if len(settings) != n:
        raise ValueError("settings length differs from the number of sites")
    report = universal_violation_bound(rho.site_dims, settings)
    entries: list[tuple[str, float]] = []
    limit = dim_cap(cap)

    for site in range(n):
        reduced_settings = tuple(1 if i == site else s for i, s in enumerate(settings))
        shape = FactorShape(rho.site_dims, reduced_settings)
        if shape.total_dim > limit:
            entries.append((f"tau@site{site}", float("inf")))
            continue
        tau = build_tau(rho, reduced_settings, cap=cap)
        entries.append((f"tau@site{site}", max(1.0, covering_upper(tau.op))))
        perm = [site] + [i for i in range(n) if i != site]
        permuted = rho.permuted(perm)
        tt_settings = tuple(reduced_settings[p] for p in perm)
        tt = build_tau_tilde(permuted, tt_settings, cap=cap)
        entries.append((f"tau_tilde@site{site}", max(1.0, covering_upper(tt.op))))

    specific: dict[str, float] = dict(report.state_specific or {})
    if _is_singlet(rho) and min(settings) == 2:
        specific["singlet_two_setting_site"] = float(np.sqrt(3.0))
    amps = _ghz_diagonal_amplitudes(rho)
    if amps is not None:
        d = rho.site_dims[0]
        if np.allclose(np.abs(amps), 1.0 / np.sqrt(d), atol=1e-10):
            specific["ghz_closed_form"] = 1.0 + 2.0 ** (n - 1) * (d - 1)
        elif d == 2:
            sin2phi = 2.0 * float(abs(amps[0])) * float(abs(amps[1]))
            specific["generalized_ghz_closed_form"] = 1.0 + 2.0 ** (n - 1) * sin2phi

    candidates = [report.dimension_bound, report.settings_bound] + [v for _, v in entries] + list(specific.values())
    return BoundReport(
        dimension_bound=report.dimension_bound,
        settings_bound=report.settings_bound,
        universal_min=report.universal_min,
        source_norm_bounds=entries,
        state_specific=specific,
        final_upper=min(candidates),
    )
