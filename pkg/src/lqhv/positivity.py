"""Tensor positivity probing and covering-norm bracketing.

An operator on a factored space is tensor positive when its expectation on
every product vector is nonnegative; this is weaker than positivity for two
or more factors.  Tensor positivity is only ever refuted here (by a product
witness) or implied by ordinary positivity; "undetermined" is a first-class
verdict.  The covering norm is reported as a certified bracket: the lower
edge is an achieved product-observable value, the upper edge the trace norm
(or the trace when ordinary positivity certifies it exactly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    FactorShape,
    eig_hermitian,
    min_eigenvalue,
    require_hermitian,
    spectral_norm,
    trace_norm,
)

REFUTATION_RTOL = 1e-8
PSD_TOL = 1e-10
DEFAULT_RESTARTS = 64


@dataclass(frozen=True)
class PositivityVerdict:
    status: str  # not_tensor_positive | certified_positive | undetermined
    min_found: float
    witness: list | None = None  # product-vector factors achieving min_found

    @property
    def refuted(self) -> bool:
        return self.status == "not_tensor_positive"


@dataclass(frozen=True)
class CoveringBracket:
    lower: float
    upper: float


def _factor_tensor(z: np.ndarray, dims):
    return np.asarray(z, dtype=complex).reshape(tuple(dims) + tuple(dims))


def _effective_vector_operator(t: np.ndarray, dims, vectors, j: int) -> np.ndarray:
    """Contract all factors except ``j`` with |psi_i><psi_i|."""
    m = len(dims)
    if m == 1:
        return t
    letters = [chr(ord('a') + i) for i in range(m)]
    lets2 = [chr(ord('A') + i) for i in range(m)]
    args, subs = [], []
    for i in range(m):
        if i == j:
            continue
        args.append(vectors[i].conj())
        subs.append(letters[i])
        args.append(vectors[i])
        subs.append(lets2[i])
    subscripts = "".join(letters) + "".join(lets2) + "," + ",".join(subs) + "->" + letters[j] + lets2[j]
    return np.einsum(subscripts, t, *args, optimize=True)


def product_expectation(z: np.ndarray, shape: FactorShape, vectors) -> float:
    """<psi_1 x ... x psi_m | Z | psi_1 x ... x psi_m> for unit factors."""
    t = _factor_tensor(z, shape.slot_dims)
    m = shape.num_slots
    letters = [chr(ord('a') + i) for i in range(m)]
    lets2 = [chr(ord('A') + i) for i in range(m)]
    args, subs = [], []
    for i in range(m):
        args.append(vectors[i].conj())
        subs.append(letters[i])
        args.append(vectors[i])
        subs.append(lets2[i])
    subscripts = "".join(letters) + "".join(lets2) + "," + ",".join(subs) + "->"
    return float(np.real(np.einsum(subscripts, t, *args, optimize=True)))


def _random_unit(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _minimize_product_expectation(t, dims, vectors, sweeps=60, tol=1e-13):
    value = None
    for _ in range(sweeps):
        prev = value
        for j in range(len(dims)):
            eff = _effective_vector_operator(t, dims, vectors, j)
            eff = (eff + eff.conj().T) / 2
            vals, vecs = np.linalg.eigh(eff)
            vectors[j] = vecs[:, 0]
            value = float(vals[0])
        if prev is not None and abs(prev - value) <= tol * max(1.0, abs(value)):
            break
    return value, vectors


def probe_tensor_positivity(z: np.ndarray, shape: FactorShape, restarts: int = DEFAULT_RESTARTS,
                            seed: int = 0) -> PositivityVerdict:
    """Search for a product vector giving a negative expectation of ``z``.

    Alternating minimization over unit product vectors: with all factors but
    one fixed, the optimal remaining factor is the bottom eigenvector of the
    contracted single-factor operator.  Runs ``restarts`` random starts plus
    one start seeded from the global bottom eigenvector of ``z``.
    """
    z = require_hermitian(z)
    dims = shape.slot_dims
    eigs = np.linalg.eigvalsh(z)
    scale = max(1.0, float(np.abs(eigs).max(initial=0.0)))
    if eigs.min() >= -PSD_TOL:
        return PositivityVerdict("certified_positive", min_found=float(eigs.min()))

    t = _factor_tensor(z, dims)
    rng = np.random.default_rng(seed)

    best = np.inf
    best_vectors = None

    # eigenvector-seeded start: closest product factors of the bottom eigenvector
    _, vecs = eig_hermitian(z)
    bottom = vecs[:, -1]
    seed_vectors = []
    amp = bottom.reshape(dims)
    for j, d in enumerate(dims):
        axes = tuple(i for i in range(len(dims)) if i != j)
        red = np.tensordot(amp, amp.conj(), axes=(axes, axes))
        w, u = np.linalg.eigh((red + red.conj().T) / 2)
        seed_vectors.append(u[:, -1])

    starts = [seed_vectors] + [[_random_unit(rng, d) for d in dims] for _ in range(restarts)]
    for start in starts:
        val, vectors = _minimize_product_expectation(t, dims, [v.copy() for v in start])
        if val < best:
            best = val
            best_vectors = vectors

    if best < -REFUTATION_RTOL * scale:
        return PositivityVerdict("not_tensor_positive", min_found=best, witness=best_vectors)
    return PositivityVerdict("undetermined", min_found=best, witness=best_vectors)


def _effective_observable(t, dims, xs, j: int) -> np.ndarray:
    """Contract tr with all observables except slot ``j``: result E with value tr[E X_j]."""
    m = len(dims)
    if m == 1:
        return t
    letters = [chr(ord('a') + i) for i in range(m)]
    lets2 = [chr(ord('A') + i) for i in range(m)]
    args, subs = [], []
    for i in range(m):
        if i == j:
            continue
        args.append(xs[i])
        subs.append(lets2[i] + letters[i])  # X[j_i, i_i]
    subscripts = "".join(letters) + "".join(lets2) + "," + ",".join(subs) + "->" + letters[j] + lets2[j]
    return np.einsum(subscripts, t, *args, optimize=True)


def _sign_operator(e: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((e + e.conj().T) / 2)
    signs = np.where(vals >= 0.0, 1.0, -1.0)
    return (vecs * signs) @ vecs.conj().T


def product_observable_value(w: np.ndarray, shape: FactorShape, xs) -> float:
    """tr[W (X_1 x ... x X_m)] for Hermitian unit-norm observables."""
    from .linalg import product_trace

    return float(np.real(product_trace(w, shape.slot_dims, xs)))


def _maximize_product_observable(t, dims, xs, sweeps=60, tol=1e-12):
    m = len(dims)
    value = None
    for _ in range(sweeps):
        prev = value
        for j in range(m):
            e = _effective_observable(t, dims, xs, j)
            e = (e + e.conj().T) / 2
            xs[j] = _sign_operator(e)
            value = float(np.abs(np.linalg.eigvalsh(e)).sum())
        if prev is not None and abs(value - prev) <= tol * max(1.0, abs(value)):
            break
    return value, xs


def covering_bracket(w: np.ndarray, shape: FactorShape, restarts: int = DEFAULT_RESTARTS,
                     seed: int = 0) -> CoveringBracket:
    """Certified bracket [lower, upper] around the covering norm of ``w``.

    lower: best found |tr[W (X_1 x ... x X_m)]| over Hermitian product
    observables with unit operator norm, by see-saw (the optimal factor given
    the others is the sign operator of the contracted effective operator).
    The all-identity start guarantees lower >= |tr W|.  upper: trace norm,
    replaced by tr[W] when ordinary positivity certifies the exact value.
    """
    w = require_hermitian(w)
    dims = shape.slot_dims
    if w.shape != (shape.total_dim, shape.total_dim):
        from .errors import ShapeMismatchError

        raise ShapeMismatchError(f"operator is {w.shape}, shape expects {shape.total_dim}")
    upper = covering_upper(w)

    t = _factor_tensor(w, dims)
    rng = np.random.default_rng(seed)
    from .linalg import random_hermitian

    best = abs(float(np.trace(w).real))
    starts = [[np.eye(d, dtype=complex) for d in dims]]
    starts += [[random_hermitian(rng, d) for d in dims] for _ in range(restarts)]
    for start in starts:
        val, _ = _maximize_product_observable(t, dims, [x.copy() for x in start])
        if val is not None and val > best:
            best = val
    lower = min(best, upper)  # roundoff guard: the bracket must nest
    return CoveringBracket(lower=lower, upper=upper)


def covering_upper(w: np.ndarray) -> float:
    """Upper covering-norm edge: tr[W] when W >= 0, otherwise the trace norm."""
    w = require_hermitian(w)
    if min_eigenvalue(w) >= -PSD_TOL:
        return float(np.trace(w).real)
    return trace_norm(w)


def reduced_monotonicity_check(w: np.ndarray, shape: FactorShape, keep,
                               restarts: int = 32, seed: int = 0, tol: float = 1e-8) -> bool:
    """Checkable consequence of covering-norm monotonicity under reduction.

    Returns whether lower(W_reduced) <= upper(W) within ``tol``.
    """
    from .linalg import partial_trace

    keep = sorted(set(keep))
    w_red = partial_trace(w, shape, keep)
    red_shape = FactorShape(tuple(shape.slot_dims[k] for k in keep), (1,) * len(keep))
    lower_red = covering_bracket(w_red, red_shape, restarts=restarts, seed=seed).lower
    return lower_red <= covering_upper(w) + tol
