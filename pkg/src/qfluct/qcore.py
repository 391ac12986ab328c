"""Finite-dimensional quantum states, observables and entropic functionals.

Units: hbar = k_B = 1 and energies are measured in a reference quantum
(the qubit splitting for the Rabi model). All logarithms are natural, so
every entropy and divergence is in nats.

Matrix functions are evaluated through eigendecompositions only; the
supported dimensions are small (d <= 16), where this is both the simplest
and the most accurate route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, InvalidState, LengthMismatch, NonHermitianInput, NotNormalized

HERMITIAN_TOL = 1e-12
EIGENVALUE_FLOOR = 1e-14
SUPPORT_WEIGHT_TOL = 1e-12
GROUP_TOL = 1e-12
MAX_DIM = 16

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _square(matrix) -> np.ndarray:
    if isinstance(matrix, (DensityMatrix, Observable)):
        return matrix.matrix
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")


def hermitian_residual(matrix) -> float:
    m = np.asarray(matrix)
    return float(np.max(np.abs(m - m.conj().T)))


class DensityMatrix:
    """Positive, unit-trace, Hermitian matrix.

    The stored array is a read-only copy of the input.

    Parameters
    ----------
    matrix : array_like
        Square complex matrix.
    atol : float
        Tolerance for the Hermiticity, trace and positivity checks.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix, atol: float = 1e-12):
        m = np.array(_square(matrix), dtype=complex)
        if hermitian_residual(m) > atol:
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > atol:
            raise InvalidState(f"trace {np.trace(m).real!r} differs from 1")
        if np.linalg.eigvalsh(m).min() < -atol:
            raise InvalidState("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        self._matrix = m

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self._matrix @ self._matrix)))

    @classmethod
    def pure(cls, vector) -> DensityMatrix:
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def from_populations(cls, populations, basis=None) -> DensityMatrix:
        """Diagonal state with the given populations in ``basis`` (columns)."""
        p = np.asarray(populations, dtype=float)
        if basis is None:
            return cls(np.diag(p).astype(complex))
        v = np.asarray(basis, dtype=complex)
        return cls((v * p) @ v.conj().T)

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim, dtype=complex) / dim)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


class Observable:
    """Hermitian matrix together with its grouped spectral decomposition.

    Use :func:`spectral_decompose` to build one.

    Attributes
    ----------
    levels : ndarray
        Distinct eigenvalues, ascending.
    projectors : ndarray, shape (m, d, d)
        Orthogonal projector onto each eigenvalue group.
    ranks : ndarray of int
    eigenvectors : ndarray, shape (d, d)
        Orthonormal eigenvectors as columns, sorted by eigenvalue.
    group_of : ndarray of int
        Group index of each eigenvector column.
    """

    def __init__(self, matrix, levels, projectors, eigenvectors, group_of):
        self.matrix = matrix
        self.levels = levels
        self.projectors = projectors
        self.eigenvectors = eigenvectors
        self.group_of = group_of
        self.ranks = np.bincount(group_of, minlength=len(levels))
        for arr in (matrix, levels, projectors, eigenvectors, group_of, self.ranks):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def min_gap(self) -> float:
        """Smallest distance between distinct levels (inf for one level)."""
        if len(self.levels) < 2:
            return math.inf
        return float(np.min(np.diff(self.levels)))

    def populations(self, rho) -> np.ndarray:
        """Group populations Tr(Pi_i rho)."""
        m = _square(rho)
        _same_dim(m, self.matrix)
        return np.real(np.einsum("kij,ji->k", self.projectors, m))

    def commutes_with(self, rho, atol: float = 1e-10) -> bool:
        m = _square(rho)
        return float(np.max(np.abs(self.matrix @ m - m @ self.matrix))) <= atol * max(
            1.0, float(np.max(np.abs(self.matrix)))
        )

    def shifted(self, c: float) -> Observable:
        return spectral_decompose(self.matrix + c * np.eye(self.dim))

    def __repr__(self):
        return f"Observable(levels={np.array2string(self.levels, precision=6)})"


def spectral_decompose(H, group_tol: float = GROUP_TOL) -> Observable:
    """Group the eigenvalues of a Hermitian matrix into orthogonal projectors.

    Eigenvalues closer than ``group_tol`` (scaled by the spectral range when
    that exceeds one) share one projector group, since measurement kernels
    only see eigenvalues.

    Raises
    ------
    NonHermitianInput
        If ``max|H - H^dagger|`` exceeds 1e-12.
    """
    m = _square(H)
    if m.shape[0] > MAX_DIM:
        raise DimensionMismatch(f"dimension {m.shape[0]} exceeds the supported maximum {MAX_DIM}")
    if hermitian_residual(m) > HERMITIAN_TOL:
        raise NonHermitianInput(f"Hermiticity residual {hermitian_residual(m):.3e}")
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    tol = group_tol * max(1.0, float(w[-1] - w[0]))
    group_of = np.zeros(len(w), dtype=int)
    start = 0
    for k in range(1, len(w)):
        if w[k] - w[start] >= tol:
            start = k
            group_of[k] = group_of[k - 1] + 1
        else:
            group_of[k] = group_of[k - 1]
    n_groups = group_of[-1] + 1
    levels = np.array([w[group_of == g].mean() for g in range(n_groups)])
    projectors = np.empty((n_groups, len(w), len(w)), dtype=complex)
    for g in range(n_groups):
        vg = v[:, group_of == g]
        projectors[g] = vg @ vg.conj().T
    return Observable(m, levels, projectors, v, group_of)


@dataclass(frozen=True, eq=False)
class ThermalEnsemble:
    """Gibbs state exp(-beta H)/Z of an observable.

    ``populations`` are per eigenvalue group (so they include degeneracy).
    ``free_energy`` is -log_z/beta, or -inf at beta = 0.
    """

    observable: Observable
    beta: float
    populations: np.ndarray
    state: DensityMatrix
    log_z: float
    free_energy: float


def gibbs_state(H: Observable, beta: float) -> ThermalEnsemble:
    """Canonical state of ``H`` at inverse temperature ``beta``.

    The exponent is shifted by the ground level before exponentiating, so
    large ``beta`` neither overflows nor loses the excited populations.
    """
    if not (beta >= 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be finite and non-negative, got {beta!r}")
    x = -beta * (H.levels - H.levels[0])
    w = H.ranks * np.exp(x)
    populations = w / w.sum()
    log_z = float(-beta * H.levels[0] + logsumexp(x, b=H.ranks))
    per_state = populations / H.ranks
    state = np.einsum("k,kij->ij", per_state, H.projectors)
    state = 0.5 * (state + state.conj().T)
    populations.setflags(write=False)
    free_energy = -log_z / beta if beta > 0 else -math.inf
    return ThermalEnsemble(H, float(beta), populations, DensityMatrix(state, atol=1e-10), log_z, free_energy)


def spectrum_entropy(eigenvalues) -> np.ndarray:
    """-sum lambda ln lambda along the last axis, with 0 ln 0 := 0.

    Eigenvalues below ``EIGENVALUE_FLOOR`` contribute nothing.
    """
    w = np.asarray(eigenvalues, dtype=float)
    safe = np.where(w > EIGENVALUE_FLOOR, w, 1.0)
    return -np.sum(np.where(w > EIGENVALUE_FLOOR, w * np.log(safe), 0.0), axis=-1)


def von_neumann_entropy(rho) -> float:
    return float(spectrum_entropy(np.linalg.eigvalsh(_square(rho))))


def relative_entropy(rho, sigma) -> float:
    """Quantum relative entropy S(rho||sigma) = Tr rho ln rho - Tr rho ln sigma.

    Returns ``math.inf`` when rho has weight (> 1e-12) on an eigenvector of
    sigma whose eigenvalue is below the 1e-14 floor. If ``sigma`` is a
    :class:`ThermalEnsemble` the exact ln sigma = -beta H - ln Z is used,
    which keeps full accuracy when some thermal populations are tiny.
    """
    r = _square(rho)
    if isinstance(sigma, ThermalEnsemble):
        h = sigma.observable.matrix
        _same_dim(r, h)
        return -von_neumann_entropy(r) + sigma.beta * expectation(h, r) + sigma.log_z
    s = _square(sigma)
    _same_dim(r, s)
    ws, vs = np.linalg.eigh(s)
    weights = np.real(np.einsum("ik,ij,jk->k", vs.conj(), r, vs))
    null = ws < EIGENVALUE_FLOOR
    if np.any(null & (weights > SUPPORT_WEIGHT_TOL)):
        return math.inf
    cross = float(np.sum(weights[~null] * np.log(ws[~null])))
    return -von_neumann_entropy(r) - cross


def dephase(rho, H: Observable) -> DensityMatrix:
    """Delete coherences between eigenvalue groups of ``H``: sum_i Pi_i rho Pi_i."""
    r = _square(rho)
    _same_dim(r, H.matrix)
    out = np.einsum("kij,jl,klm->im", H.projectors, r, H.projectors)
    return DensityMatrix(out, atol=1e-10)


def coherence(rho, H: Observable) -> float:
    """Relative entropy of coherence S(dephase(rho)) - S(rho) in the basis of ``H``."""
    return von_neumann_entropy(dephase(rho, H)) - von_neumann_entropy(rho)


def kl_divergence(p, q) -> float:
    """Kullback-Leibler divergence sum p ln(p/q) between population vectors.

    Returns ``math.inf`` if some q < 1e-14 where p > 1e-12.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise LengthMismatch(f"population vectors of shapes {p.shape} and {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if abs(v.sum() - 1.0) > 1e-10 or np.any(v < -1e-15):
            raise NotNormalized(f"{name} is not a probability vector")
    if np.any((q < EIGENVALUE_FLOOR) & (p > SUPPORT_WEIGHT_TOL)):
        return math.inf
    keep = (p > 0) & (q >= EIGENVALUE_FLOOR)
    return float(np.sum(p[keep] * np.log(p[keep] / q[keep])))


def expectation(H, rho) -> float:
    """Tr(H rho), imaginary round-off discarded."""
    h = _square(H)
    r = _square(rho)
    _same_dim(h, r)
    return float(np.real(np.einsum("ij,ji->", h, r)))


def hermitian_function(H, fn) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its eigenbasis."""
    m = _square(H)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * fn(w)) @ v.conj().T


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random state from a Ginibre matrix (Hilbert-Schmidt measure for full rank)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(m / np.trace(m).real)

