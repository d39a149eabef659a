"""Construction and verification of setting-dilated source operators.

A source operator for a state rho with multiplicities (S_1, ..., S_N) is a
Hermitian unit-trace operator T on the dilated space such that probing any
single slot per site with bounded operators X_n reproduces
tr[rho (X_1 x ... x X_N)], for every choice of slots.  ``build_tau`` uses an
inclusion-exclusion recursion over site subsets built from symmetrized
single-slot dilations; ``build_tau_tilde`` contracts each dilated site with
rank-one tensor-power blocks and carries explicit trace-norm bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import ShapeMismatchError
from .linalg import (
    FactorShape,
    apply_site_map,
    kron_all,
    partial_trace,
    permute_factors,
    product_trace,
    random_hermitian,
    require_hermitian,
    slot_choice_traces,
    trace_norm,
)
from .states import QuantumState, SchmidtForm, schmidt

TRACE_TOL = 1e-9


@dataclass(frozen=True)
class SourceOperator:
    shape: FactorShape
    op: np.ndarray
    origin_state: QuantumState
    builder_tag: str

    def __post_init__(self):
        op = require_hermitian(self.op)
        if op.shape != (self.shape.total_dim, self.shape.total_dim):
            raise ShapeMismatchError(
                f"operator is {op.shape}, shape expects dimension {self.shape.total_dim}"
            )
        if tuple(self.origin_state.site_dims) != tuple(self.shape.site_dims):
            raise ShapeMismatchError("origin state dims disagree with shape site dims")
        tr = float(np.trace(op).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"source operator trace {tr!r} differs from 1 beyond {TRACE_TOL}")
        object.__setattr__(self, "op", op)

    def trace_norm(self) -> float:
        return trace_norm(self.op)


def _default_sigmas(site_dims, sigma=None):
    out = []
    for n, d in enumerate(site_dims):
        s = None if sigma is None else sigma[n]
        if s is None:
            out.append(np.eye(d, dtype=complex) / d)
        else:
            s = require_hermitian(np.asarray(s, dtype=complex))
            if s.shape != (d, d):
                raise ShapeMismatchError(f"reference state for site {n} is {s.shape}, expected {d}x{d}")
            if abs(np.trace(s).real - 1.0) > 1e-10 or np.linalg.eigvalsh(s).min() < -1e-10:
                raise ValueError(f"reference operator for site {n} is not a state")
            out.append(s)
    return out


def _kron_power(a: np.ndarray, k: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for _ in range(k):
        out = np.kron(out, a)
    return out


def _sym_dilation_tensor(d: int, s: int, sigma: np.ndarray) -> np.ndarray:
    """Map tensor of |i><j| -> sum_k sigma^{x k} x |i><j| x sigma^{x (s-1-k)}."""
    ds = d ** s
    powers = [_kron_power(sigma, k) for k in range(s)]
    m = np.zeros((d, d, ds, ds), dtype=complex)
    unit = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            unit[:] = 0.0
            unit[i, j] = 1.0
            acc = np.zeros((ds, ds), dtype=complex)
            for k in range(s):
                acc += np.kron(np.kron(powers[k], unit), powers[s - 1 - k])
            m[i, j] = acc
    return m


def _rank_one_power(v: np.ndarray, s: int) -> np.ndarray:
    return _kron_power(np.outer(v, v.conj()), s)


def _w_block(gi: np.ndarray, gj: np.ndarray, s: int) -> np.ndarray:
    """Dilation block for the matrix unit |g_i><g_j| (i != j) on s slots.

    Each slot probe of the block reproduces |g_i><g_j| exactly; the block has
    trace norm at most 2.
    """
    plus = _rank_one_power(gi + gj, s)
    minus = _rank_one_power(gi - gj, s)
    plus_i = _rank_one_power(gi + 1j * gj, s)
    minus_i = _rank_one_power(gi - 1j * gj, s)
    return (plus - minus + 1j * plus_i - 1j * minus_i) / 2 ** (s + 1)


def _w_map_tensor(basis: np.ndarray, s: int) -> np.ndarray:
    """Map tensor sending |g_i><g_j| (in the given orthonormal basis) to its W block."""
    d = basis.shape[0]
    r = basis.shape[1]
    ds = d ** s
    blocks = np.zeros((r, r, ds, ds), dtype=complex)
    for i in range(r):
        for j in range(r):
            if i == j:
                blocks[i, j] = _rank_one_power(basis[:, i], s)
            else:
                blocks[i, j] = _w_block(basis[:, i], basis[:, j], s)
    if r == d and np.allclose(basis, np.eye(d)):
        return blocks
    # re-express in computational matrix units:
    # |a><b| = sum_{ij} conj(basis[a,i]) basis[b,j] |g_i><g_j|
    m = np.einsum("ai,bj,ijNM->abNM", basis.conj(), basis, blocks, optimize=True)
    return m


def dilate_symmetrized(state: QuantumState, settings, sigmas) -> np.ndarray:
    """Apply the symmetrized single-slot dilation to every site of ``state``."""
    op = state.rho
    dims = list(state.site_dims)
    for n, s in enumerate(settings):
        if s == 1:
            continue
        m = _sym_dilation_tensor(state.site_dims[n], s, sigmas[n])
        op, dims = apply_site_map(op, dims, n, m)
    return op


def build_tau(rho: QuantumState, settings, sigma=None, cap: int | None = None) -> SourceOperator:
    """Symmetrized-dilation source operator for arbitrary settings.

    Parameters
    ----------
    rho : QuantumState
        State on N sites.
    settings : sequence of int
        Multiplicity S_n >= 1 per site.
    sigma : optional sequence
        Per-site reference states; default is maximally mixed.

    The construction subtracts, for every nonempty site subset J with all
    S_n > 1, the recursively built source operator of the reduced state on
    the complementary sites interleaved with sigma_n^{x S_n} blocks, weighted
    by prod_{n in J} (S_n - 1).  For two sites this is the explicit
    symmetrization formula; with one undilated site it reproduces the
    three- and four-partite closed forms.
    """
    settings = tuple(int(s) for s in settings)
    if len(settings) != rho.num_sites:
        raise ShapeMismatchError("settings length differs from number of sites")
    if any(s < 1 for s in settings):
        raise ValueError("settings must be >= 1")
    shape = FactorShape(rho.site_dims, settings)
    shape.check_cap(cap)
    sigmas = _default_sigmas(rho.site_dims, sigma)

    all_sites = tuple(range(rho.num_sites))
    memo: dict[tuple[int, ...], np.ndarray] = {}

    def rec(sites: tuple[int, ...]) -> np.ndarray:
        if sites in memo:
            return memo[sites]
        sub_state = rho if sites == all_sites else rho.reduced(sites)
        if len(sites) == 1:
            n = sites[0]
            out = _kron_power(sub_state.rho, settings[n]) if settings[n] > 1 else sub_state.rho
            memo[sites] = out
            return out
        local_settings = [settings[n] for n in sites]
        out = dilate_symmetrized(sub_state, local_settings, [sigmas[n] for n in sites])
        dilatable = [n for n in sites if settings[n] > 1]
        for mask in range(1, 2 ** len(dilatable)):
            j_sites = tuple(n for b, n in enumerate(dilatable) if mask >> b & 1)
            kept = tuple(n for n in sites if n not in j_sites)
            coeff = prod(settings[n] - 1 for n in j_sites)
            if kept:
                sub = rec(kept)
                block = np.kron(sub, kron_all([_kron_power(sigmas[n], settings[n]) for n in j_sites]))
                factor_order = list(kept) + list(j_sites)
                factor_dims = [rho.site_dims[n] ** settings[n] for n in factor_order]
                perm = [factor_order.index(n) for n in sites]
                term = permute_factors(block, factor_dims, perm)
            else:
                term = kron_all([_kron_power(sigmas[n], settings[n]) for n in j_sites])
            out = out - coeff * term
        memo[sites] = out
        return out

    op = rec(all_sites)
    return SourceOperator(shape, op, rho, "tau")


def _tau_tilde_pure_bipartite(sf: SchmidtForm, s2: int) -> np.ndarray:
    xi = sf.coefficients
    r = len(xi)
    d1 = sf.left_basis.shape[0]
    d2 = sf.right_basis.shape[0]
    out = np.zeros((d1 * d2 ** s2, d1 * d2 ** s2), dtype=complex)
    for j in range(r):
        lj = sf.left_basis[:, j]
        out += xi[j] ** 2 * np.kron(np.outer(lj, lj.conj()),
                                    _rank_one_power(sf.right_basis[:, j], s2))
    for j in range(r):
        for j1 in range(r):
            if j == j1:
                continue
            lu = np.outer(sf.left_basis[:, j], sf.left_basis[:, j1].conj())
            out += xi[j] * xi[j1] * np.kron(
                lu, _w_block(sf.right_basis[:, j], sf.right_basis[:, j1], s2))
    return out


def build_tau_tilde(rho: QuantumState, settings, cap: int | None = None) -> SourceOperator:
    """Rank-one-block source operator with the first site undilated.

    Requires ``settings[0] == 1``.  Pure bipartite inputs go through their
    Schmidt form; mixed bipartite states are handled by convexity over the
    spectral decomposition.  For three or more sites every dilated site is
    contracted with the rank-one tensor-power blocks in the computational
    basis, which keeps the trace norm within 2^{N-1}(d_2...d_N - 1) + 1.
    """
    settings = tuple(int(s) for s in settings)
    if len(settings) != rho.num_sites:
        raise ShapeMismatchError("settings length differs from number of sites")
    if any(s < 1 for s in settings):
        raise ValueError("settings must be >= 1")
    if settings[0] != 1:
        raise ValueError("build_tau_tilde requires a single setting at the first site")
    shape = FactorShape(rho.site_dims, settings)
    shape.check_cap(cap)

    if rho.num_sites == 1:
        return SourceOperator(shape, rho.rho, rho, "tau_tilde")

    if rho.num_sites == 2:
        s2 = settings[1]
        if rho.purity() >= 1.0 - 1e-8:
            op = _tau_tilde_pure_bipartite(schmidt(rho), s2)
        else:
            vals, vecs = np.linalg.eigh(rho.rho)
            op = np.zeros((shape.total_dim, shape.total_dim), dtype=complex)
            for a, v in zip(vals, vecs.T):
                if a < 1e-12:
                    continue
                pure = QuantumState(rho.site_dims, np.outer(v, v.conj()))
                op += a * _tau_tilde_pure_bipartite(schmidt(pure), s2)
        return SourceOperator(shape, op, rho, "tau_tilde")

    op = rho.rho
    dims = list(rho.site_dims)
    for n in range(1, rho.num_sites):
        if settings[n] == 1:
            continue
        m = _w_map_tensor(np.eye(rho.site_dims[n], dtype=complex), settings[n])
        op, dims = apply_site_map(op, dims, n, m)
    return SourceOperator(shape, op, rho, "tau_tilde")


def build_singlet_special() -> SourceOperator:
    """The explicit 8x8 two-setting operator for the singlet (trace norm sqrt(3))."""
    from .states import make_singlet

    e = np.eye(2, dtype=complex)
    p0 = np.outer(e[0], e[0])
    p1 = np.outer(e[1], e[1])
    e01 = np.outer(e[0], e[1])
    e10 = np.outer(e[1], e[0])
    half_i = np.eye(2, dtype=complex) / 2
    op = (
        0.5 * kron_all([p0, p1, p1])
        + 0.5 * kron_all([p1, p0, p0])
        - 0.5 * kron_all([e01, e10, half_i])
        - 0.5 * kron_all([e10, e01, half_i])
        - 0.5 * kron_all([e01, half_i, e10])
        - 0.5 * kron_all([e10, half_i, e01])
    )
    shape = FactorShape((2, 2), (1, 2))
    return SourceOperator(shape, op, make_singlet(), "singlet_special")


def build_separable_positive(components, settings, cap: int | None = None) -> SourceOperator:
    """Positive source operator sum_i a_i (rho_1^(i))^{x S_1} x ... for separable input."""
    from .states import make_separable_mixture

    state = make_separable_mixture(components)
    settings = tuple(int(s) for s in settings)
    if len(settings) != state.num_sites:
        raise ShapeMismatchError("settings length differs from number of sites")
    shape = FactorShape(state.site_dims, settings)
    shape.check_cap(cap)
    op = np.zeros((shape.total_dim, shape.total_dim), dtype=complex)
    for w, factors in components:
        op += w * kron_all([_kron_power(np.asarray(f, dtype=complex), s)
                            for f, s in zip(factors, settings)])
    return SourceOperator(shape, op, state, "separable_positive")


def verify_defining_relation(t: SourceOperator, trials: int = 20, seed: int = 0) -> float:
    """Max probe residual of the defining relation over random operator tuples.

    Draws ``trials`` tuples of unit-spectral-norm Hermitian operators, one per
    site, and compares the dilated-slot traces against tr[rho (X_1 x ... x X_N)]
    for every slot combination.
    """
    rng = np.random.default_rng(seed)
    state = t.origin_state
    dims = state.site_dims
    worst = 0.0
    for _ in range(trials):
        xs = [random_hermitian(rng, d) for d in dims]
        probe_values = slot_choice_traces(t.op, t.shape, xs)
        target = product_trace(state.rho, dims, xs)
        worst = max(worst, float(np.abs(probe_values - target).max()))
    return worst


def reduce_settings(t: SourceOperator, new_mult) -> SourceOperator:
    """Partial trace over dropped setting slots (keeps the leading L_n per site)."""
    new_mult = tuple(int(m) for m in new_mult)
    if len(new_mult) != t.shape.num_sites:
        raise ValueError("new multiplicity list has the wrong length")
    for n, (l, s) in enumerate(zip(new_mult, t.shape.multiplicities)):
        if not 1 <= l <= s:
            raise ValueError(f"site {n}: target multiplicity {l} outside 1..{s}")
    keep = []
    for n in range(t.shape.num_sites):
        keep.extend(list(t.shape.site_slots(n))[: new_mult[n]])
    op = partial_trace(t.op, t.shape, keep)
    return SourceOperator(FactorShape(t.shape.site_dims, new_mult), op, t.origin_state,
                          t.builder_tag)
