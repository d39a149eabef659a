"""Density operators, named state families, and Schmidt decomposition."""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, prod, sin, sqrt

import numpy as np

from .errors import PurityError, ShapeMismatchError
from .linalg import FactorShape, dim_cap, partial_trace, require_hermitian
from .errors import SizeLimitError

STATE_TOL = 1e-10
PURITY_TOL = 1e-8


@dataclass(frozen=True)
class QuantumState:
    """A density operator together with its per-site dimensions."""

    site_dims: tuple[int, ...]
    rho: np.ndarray

    def __post_init__(self):
        rho = require_hermitian(self.rho)
        d = prod(self.site_dims)
        if rho.shape != (d, d):
            raise ShapeMismatchError(
                f"density matrix is {rho.shape}, site dims {self.site_dims} expect {d}x{d}"
            )
        if abs(np.trace(rho).real - 1.0) > STATE_TOL:
            raise ValueError(f"trace {np.trace(rho).real!r} is not 1 within {STATE_TOL}")
        if np.linalg.eigvalsh(rho).min() < -STATE_TOL:
            raise ValueError("density matrix has an eigenvalue below -1e-10")
        object.__setattr__(self, "rho", rho)

    @property
    def num_sites(self) -> int:
        return len(self.site_dims)

    @property
    def dim(self) -> int:
        return prod(self.site_dims)

    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)

    def reduced(self, keep_sites) -> "QuantumState":
        keep = sorted(set(keep_sites))
        shape = FactorShape(self.site_dims, (1,) * self.num_sites)
        sub = partial_trace(self.rho, shape, keep)
        return QuantumState(tuple(self.site_dims[k] for k in keep), sub)

    def permuted(self, perm) -> "QuantumState":
        """State with sites reordered so new site i is old site perm[i]."""
        from .linalg import permute_factors

        perm = list(perm)
        rho = permute_factors(self.rho, self.site_dims, perm)
        return QuantumState(tuple(self.site_dims[p] for p in perm), rho)


def state_from_vector(site_dims, vec) -> QuantumState:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    d = prod(site_dims)
    if vec.shape != (d,):
        raise ShapeMismatchError(f"vector has length {vec.shape[0]}, dims expect {d}")
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ValueError("zero vector is not a state")
    vec = vec / nrm
    return QuantumState(tuple(site_dims), np.outer(vec, vec.conj()))


def state_vector(state: QuantumState, tol: float = PURITY_TOL) -> np.ndarray:
    """Extract the vector of a (near) rank-1 state; raise PurityError otherwise."""
    vals, vecs = np.linalg.eigh(state.rho)
    if vals[-1] < 1.0 - tol:
        raise PurityError(f"largest eigenvalue {vals[-1]:.12f} < 1 - {tol}; state is mixed")
    return vecs[:, -1]


def make_singlet() -> QuantumState:
    """Two-qubit singlet (|01> - |10>)/sqrt(2)."""
    v = np.zeros(4, dtype=complex)
    v[1] = 1.0 / sqrt(2.0)
    v[2] = -1.0 / sqrt(2.0)
    return state_from_vector((2, 2), v)


def make_ghz(d: int, n: int, cap: int | None = None) -> QuantumState:
    """n-partite GHZ state of local dimension d: sum_j |j>^{x n} / sqrt(d)."""
    if d < 2 or n < 2:
        raise ValueError("GHZ needs d >= 2 and n >= 2")
    total = d ** n
    if total > dim_cap(cap):
        raise SizeLimitError(f"GHZ dimension {total} exceeds dimension cap {dim_cap(cap)}")
    v = np.zeros(total, dtype=complex)
    step = (total - 1) // (d - 1)  # index of |j,...,j> is j * (d^{n-1} + ... + 1)
    for j in range(d):
        v[j * step] = 1.0 / sqrt(d)
    return state_from_vector((d,) * n, v)


def make_generalized_ghz(phi: float, n: int) -> QuantumState:
    """n-qubit sin(phi)|0...0> + cos(phi)|1...1>."""
    if n < 2:
        raise ValueError("need n >= 2 sites")
    v = np.zeros(2 ** n, dtype=complex)
    v[0] = sin(phi)
    v[-1] = cos(phi)
    return state_from_vector((2,) * n, v)


def make_separable_mixture(components) -> QuantumState:
    """Convex mixture sum_i a_i rho_1^(i) x ... x rho_N^(i).

    ``components`` is a list of ``(weight, [per-site density matrices])``.
    """
    if not components:
        raise ValueError("at least one component required")
    weights = np.array([w for w, _ in components], dtype=float)
    if np.any(weights <= 0):
        raise ValueError("component weights must be positive")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights sum to {weights.sum()!r}, expected 1 within 1e-12")
    site_dims = None
    rho = None
    for w, factors in components:
        block = np.array([[1.0 + 0j]])
        dims = []
        for f in factors:
            f = require_hermitian(f)
            dims.append(f.shape[0])
            block = np.kron(block, f)
        if site_dims is None:
            site_dims = tuple(dims)
            rho = np.zeros_like(block)
        elif tuple(dims) != site_dims:
            raise ShapeMismatchError("components disagree on site dimensions")
        rho = rho + w * block
    return QuantumState(site_dims, rho)


@dataclass(frozen=True)
class SchmidtForm:
    """Schmidt data of a pure bipartite state: descending positive weights and bases."""

    coefficients: np.ndarray
    left_basis: np.ndarray   # columns are the site-1 vectors
    right_basis: np.ndarray  # columns are the site-2 vectors

    def reconstruct(self) -> np.ndarray:
        d1, d2 = self.left_basis.shape[0], self.right_basis.shape[0]
        v = np.zeros(d1 * d2, dtype=complex)
        for x, l, r in zip(self.coefficients, self.left_basis.T, self.right_basis.T):
            v += x * np.kron(l, r)
        return v


def schmidt(state: QuantumState, tol: float = 1e-12) -> SchmidtForm:
    """Schmidt decomposition of a pure two-site state."""
    if state.num_sites != 2:
        raise ShapeMismatchError("Schmidt decomposition needs exactly two sites")
    if state.purity() < 1.0 - PURITY_TOL:
        raise PurityError(f"purity {state.purity():.10f} below 1 - {PURITY_TOL}")
    d1, d2 = state.site_dims
    vec = state_vector(state).reshape(d1, d2)
    u, s, vh = np.linalg.svd(vec, full_matrices=False)
    keep = s > tol
    return SchmidtForm(s[keep], u[:, keep], vh[keep, :].T)
