"""Dense complex linear algebra over tensor-product factor structures.

Operators live on a product of per-site, per-setting Hilbert factors.  The
factor ("slot") ordering is site-major, setting-minor: all copies of site 0
first, then all copies of site 1, and so on.  Everything here is a pure
function on immutable numpy arrays.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import HermiticityError, ShapeMismatchError, SizeLimitError

DEFAULT_DIM_CAP = 4096
HERMITICITY_RTOL = 1e-10


def dim_cap(override: int | None = None) -> int:
    """Active total-dimension cap (env LQHV_DIM_CAP overrides the default)."""
    if override is not None:
        return int(override)
    return int(os.environ.get("LQHV_DIM_CAP", DEFAULT_DIM_CAP))


@dataclass(frozen=True)
class FactorShape:
    """Factor structure of a setting-dilated operator.

    ``site_dims[n]`` is the Hilbert dimension of site ``n`` and
    ``multiplicities[n]`` the number of copies (one per measurement setting)
    that site contributes.  Slot ``(n, s)`` denotes copy ``s`` of site ``n``.
    """

    site_dims: tuple[int, ...]
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        if len(self.site_dims) != len(self.multiplicities):
            raise ShapeMismatchError("site_dims and multiplicities differ in length")
        if any(d < 1 for d in self.site_dims) or any(m < 1 for m in self.multiplicities):
            raise ShapeMismatchError("dimensions and multiplicities must be >= 1")

    @property
    def num_sites(self) -> int:
        return len(self.site_dims)

    @property
    def slot_dims(self) -> tuple[int, ...]:
        return tuple(d for d, m in zip(self.site_dims, self.multiplicities) for _ in range(m))

    @property
    def num_slots(self) -> int:
        return sum(self.multiplicities)

    @property
    def total_dim(self) -> int:
        return prod(self.slot_dims)

    def slot_index(self, site: int, setting: int) -> int:
        if not 0 <= site < self.num_sites:
            raise ShapeMismatchError(f"site {site} out of range")
        if not 0 <= setting < self.multiplicities[site]:
            raise ShapeMismatchError(f"setting {setting} out of range for site {site}")
        return sum(self.multiplicities[:site]) + setting

    def site_slots(self, site: int) -> range:
        start = sum(self.multiplicities[:site])
        return range(start, start + self.multiplicities[site])

    def check_cap(self, cap: int | None = None) -> None:
        limit = dim_cap(cap)
        if self.total_dim > limit:
            raise SizeLimitError(
                f"total dimension {self.total_dim} exceeds dimension cap {limit}"
            )


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeMismatchError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def hermiticity_defect(a: np.ndarray) -> float:
    """max|A - A^dagger| relative to max(1, max|A|)."""
    a = _as_matrix(a)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return float(np.abs(a - a.conj().T).max(initial=0.0)) / scale


def require_hermitian(a: np.ndarray, rtol: float = HERMITICITY_RTOL) -> np.ndarray:
    """Return the symmetrized (A + A^dagger)/2, or raise if A is too far from Hermitian."""
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatchError(f"matrix is {a.shape[0]}x{a.shape[1]}, not square")
    if hermiticity_defect(a) > rtol:
        raise HermiticityError(
            f"matrix deviates from Hermitian by {hermiticity_defect(a):.3e} (tolerance {rtol:.1e})"
        )
    return (a + a.conj().T) / 2.0


def kron(a: np.ndarray, b: np.ndarray, cap: int | None = None) -> np.ndarray:
    """Kronecker product with a total-dimension cap on the result."""
    a, b = _as_matrix(a), _as_matrix(b)
    limit = dim_cap(cap)
    if a.shape[0] * b.shape[0] > limit or a.shape[1] * b.shape[1] > limit:
        raise SizeLimitError(
            f"kron result dimension {a.shape[0] * b.shape[0]} exceeds dimension cap {limit}"
        )
    return np.kron(a, b)


def kron_all(mats, cap: int | None = None) -> np.ndarray:
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = kron(out, m, cap=cap)
    return out


def embed_at_slot(x: np.ndarray, shape: FactorShape, site: int, setting: int,
                  cap: int | None = None) -> np.ndarray:
    """Identity-padded embedding of ``x`` at slot ``(site, setting)``.

    With a single slot the operator is returned unchanged (the zero-padding
    convention for an empty identity factor).
    """
    x = _as_matrix(x)
    d = shape.site_dims[site]
    if x.shape != (d, d):
        raise ShapeMismatchError(f"operator is {x.shape}, site {site} has dimension {d}")
    shape.check_cap(cap)
    slot = shape.slot_index(site, setting)
    dims = shape.slot_dims
    before = prod(dims[:slot])
    after = prod(dims[slot + 1:])
    out = x
    if before > 1:
        out = np.kron(np.eye(before), out)
    if after > 1:
        out = np.kron(out, np.eye(after))
    return out


def partial_trace(w: np.ndarray, shape: FactorShape, keep) -> np.ndarray:
    """Trace out every slot not listed in ``keep`` (kept slots stay in order)."""
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one slot")
    dims = shape.slot_dims
    m = len(dims)
    if any(k < 0 or k >= m for k in keep):
        raise ShapeMismatchError(f"keep slots {keep} out of range for {m} slots")
    w = _as_matrix(w)
    if w.shape != (shape.total_dim, shape.total_dim):
        raise ShapeMismatchError(
            f"operator is {w.shape}, shape expects {shape.total_dim}x{shape.total_dim}"
        )
    t = w.reshape(dims + dims)
    # process high slots first so the row position of a pending slot stays
    # equal to its slot index
    n_rows = m
    for slot in reversed(range(m)):
        if slot in keep:
            continue
        t = np.trace(t, axis1=slot, axis2=n_rows + slot)
        n_rows -= 1
    kept = prod(dims[k] for k in keep)
    return t.reshape(kept, kept)


def eig_hermitian(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching eigenvector columns of a Hermitian matrix."""
    a = require_hermitian(a)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def trace_norm(a: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    a = require_hermitian(a)
    return float(np.abs(np.linalg.eigvalsh(a)).sum())


def spectral_norm(a: np.ndarray) -> float:
    a = require_hermitian(a)
    return float(np.abs(np.linalg.eigvalsh(a)).max(initial=0.0))


def abs_operator(a: np.ndarray) -> np.ndarray:
    """|A| = sqrt(A^2) from the eigendecomposition of a Hermitian matrix."""
    vals, vecs = eig_hermitian(a)
    return (vecs * np.abs(vals)) @ vecs.conj().T


def positive_negative_parts(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral parts A = A+ - A- with A+, A- >= 0 and A+ A- = 0."""
    vals, vecs = eig_hermitian(a)
    pos = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
    neg = (vecs * np.clip(-vals, 0.0, None)) @ vecs.conj().T
    return pos, neg


def min_eigenvalue(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(require_hermitian(a)).min())


# ---------------------------------------------------------------------------
# Contraction helpers.  Operators are reshaped to tensors with one row axis
# and one column axis per slot; slots are always consumed from the front so
# axis bookkeeping stays trivial.

def _contract_leading(t: np.ndarray, n_rows: int, a: np.ndarray) -> np.ndarray:
    # sum_{i,j} T[i,...,j,...] a[j,i]
    return np.tensordot(t, a, axes=([0, n_rows], [1, 0]))


def _trace_leading(t: np.ndarray, n_rows: int) -> np.ndarray:
    return np.trace(t, axis1=0, axis2=n_rows)


def product_trace(op: np.ndarray, dims, factors) -> complex:
    """tr[op (A_1 x ... x A_M)] without forming the product operator."""
    dims = tuple(dims)
    t = np.asarray(op, dtype=complex).reshape(dims + dims)
    n = len(dims)
    for a in factors:
        t = _contract_leading(t, n, np.asarray(a, dtype=complex))
        n -= 1
    return complex(t)


def slot_choice_traces(op: np.ndarray, shape: FactorShape, xs) -> np.ndarray:
    """tr[op embedded(X_1..X_N at slots k_1..k_N)] for every slot tuple.

    ``xs[n]`` acts on site ``n``; all other slots carry identities.  Returns
    a complex array indexed by the slot tuple (k_1, ..., k_N).
    """
    dims = shape.slot_dims
    t0 = np.asarray(op, dtype=complex).reshape(dims + dims)
    mults = shape.multiplicities

    def rec(t, site, n_rows):
        if site == shape.num_sites:
            return complex(t)
        s = mults[site]
        x = np.asarray(xs[site], dtype=complex)
        branch = []
        for k in range(s):
            u, n = t, n_rows
            for slot in range(s):
                if slot == k:
                    u = _contract_leading(u, n, x)
                else:
                    u = _trace_leading(u, n)
                n -= 1
            branch.append(rec(u, site + 1, n))
        return branch

    nested = rec(t0, 0, shape.num_slots)
    return np.asarray(nested, dtype=complex).reshape(tuple(mults))


def effect_distribution(op: np.ndarray, dims, effect_stacks) -> np.ndarray:
    """tr[op (E^1_{k_1} x ... x E^M_{k_M})] for every outcome tuple.

    ``effect_stacks[m]`` is an array of shape (K_m, d_m, d_m).  The result is
    real-valued up to roundoff for Hermitian inputs; the real part is
    returned with axis order (k_1, ..., k_M).
    """
    dims = tuple(dims)
    t = np.asarray(op, dtype=complex).reshape(dims + dims)
    n = len(dims)
    for stack in effect_stacks:
        stack = np.asarray(stack, dtype=complex)
        # rows 0..n-1, cols n..2n-1, then outcome axes already produced
        t = np.tensordot(t, stack, axes=([0, n], [2, 1]))
        n -= 1
    return np.real(t)


def permute_factors(op: np.ndarray, dims, perm) -> np.ndarray:
    """Reorder tensor factors: new factor ``i`` is old factor ``perm[i]``."""
    dims = tuple(dims)
    m = len(dims)
    perm = list(perm)
    if sorted(perm) != list(range(m)):
        raise ValueError(f"perm {perm} is not a permutation of {m} factors")
    t = np.asarray(op, dtype=complex).reshape(dims + dims)
    order = perm + [m + p for p in perm]
    t = t.transpose(order)
    d = prod(dims)
    return t.reshape(d, d)


def apply_site_map(op: np.ndarray, factor_dims, site: int, map_tensor: np.ndarray
                   ) -> tuple[np.ndarray, list[int]]:
    """Apply a one-factor linear map (given as tensor M[i,j,I,J]) to factor ``site``.

    The map sends the matrix unit |i><j| of the input factor to the operator
    with entries M[i,j,I,J] on the (possibly larger) output factor.  Returns
    the new operator and the updated factor dimension list.
    """
    dims = list(factor_dims)
    r = len(dims)
    t = np.asarray(op, dtype=complex).reshape(dims + dims)
    t = np.tensordot(t, map_tensor, axes=([site, r + site], [0, 1]))
    t = np.moveaxis(t, -2, site)
    t = np.moveaxis(t, -1, r + site)
    new_dims = dims[:site] + [map_tensor.shape[2]] + dims[site + 1:]
    d = prod(new_dims)
    return t.reshape(d, d), new_dims


def random_hermitian(rng: np.random.Generator, d: int, unit_norm: bool = True) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (g + g.conj().T) / 2.0
    if unit_norm:
        top = np.abs(np.linalg.eigvalsh(h)).max()
        if top > 0:
            h = h / top
    return h


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases
