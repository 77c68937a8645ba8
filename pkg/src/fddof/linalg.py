"""Finite-dimensional operator toolkit: singular systems, subspaces, preimages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

EPS = np.finfo(float).eps
ANGLE_TOL = 1e-8


def as_matrix(c) -> np.ndarray:
    m = np.asarray(c, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def default_rel_tol(shape: tuple[int, int]) -> float:
    return max(shape[0], shape[1], 1) * EPS * 64


@dataclass(frozen=True)
class Subspace:
    """Span of the orthonormal columns of `basis` inside C^ambient_dim."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2 or b.shape[0] != self.ambient_dim:
            raise ValueError(f"basis of shape {b.shape} does not live in C^{self.ambient_dim}")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, np.zeros((ambient_dim, 0), dtype=complex))

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, np.eye(ambient_dim, dtype=complex))

    @classmethod
    def span(cls, vectors, rel_tol: float | None = None) -> "Subspace":
        """Orthonormal basis for the column span of `vectors`."""
        v = as_matrix(vectors)
        return range_space(v, rel_tol)

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.conj().T @ x)

    def orthonormality_residual(self) -> float:
        if self.dim == 0:
            return 0.0
        gram = self.basis.conj().T @ self.basis
        return float(np.max(np.abs(gram - np.eye(self.dim))))

    def distance(self, x: np.ndarray) -> float:
        """Euclidean distance from vector x to the subspace."""
        return float(np.linalg.norm(x - self.project(x)))


@dataclass(frozen=True)
class SingularSystem:
    sigmas: np.ndarray
    left: np.ndarray
    right: np.ndarray
    rank: int


def singular_system(c, rel_tol: float | None = None) -> SingularSystem:
    """Full SVD with a relative rank cut.

    Ties among equal singular values keep whatever order LAPACK returns.
    """
    m = as_matrix(c)
    rows, cols = m.shape
    if rel_tol is None:
        rel_tol = default_rel_tol(m.shape)
    if rows == 0 or cols == 0:
        return SingularSystem(
            np.zeros(0), np.eye(rows, dtype=complex), np.eye(cols, dtype=complex), 0
        )
    u, s, vh = np.linalg.svd(m, full_matrices=True)
    rank = 0 if s[0] == 0 else int(np.count_nonzero(s > rel_tol * s[0]))
    return SingularSystem(s, u, vh.conj().T, rank)


def numerical_rank(c, rel_tol: float | None = None) -> int:
    return singular_system(c, rel_tol).rank


def nullspace(c, rel_tol: float | None = None) -> Subspace:
    m = as_matrix(c)
    sv = singular_system(m, rel_tol)
    return Subspace(m.shape[1], sv.right[:, sv.rank:])


def range_space(c, rel_tol: float | None = None) -> Subspace:
    m = as_matrix(c)
    sv = singular_system(m, rel_tol)
    return Subspace(m.shape[0], sv.left[:, : sv.rank])


def orth_complement(s: Subspace, within: Subspace | None = None) -> Subspace:
    """Orthogonal complement of s, taken inside `within` (default: ambient)."""
    if within is None:
        within = Subspace.full(s.ambient_dim)
    if within.ambient_dim != s.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    if s.dim == 0:
        return within
    coeffs = nullspace(s.basis.conj().T @ within.basis, rel_tol=1e-10)
    return Subspace(s.ambient_dim, within.basis @ coeffs.basis)


def pseudoinverse(c, rel_tol: float | None = None) -> np.ndarray:
    m = as_matrix(c)
    sv = singular_system(m, rel_tol)
    r = sv.rank
    inv = 1.0 / sv.sigmas[:r]
    return (sv.right[:, :r] * inv) @ sv.left[:, :r].conj().T


def pseudoinverse_regularized(c, rel_delta: float = 1e-5, levels: int = 10) -> np.ndarray:
    """Moore-Penrose inverse as the limit of (C^H C + d I)^-1 C^H as d -> 0.

    Each regularized inverse is a stacked least-squares solve; Richardson
    extrapolation over halving d removes the leading bias terms.
    """
    m = as_matrix(c)
    rows, cols = m.shape
    scale = np.linalg.norm(m, 2) if m.size else 0.0
    if scale == 0.0:
        return np.zeros((cols, rows), dtype=complex)
    rhs = np.vstack([np.eye(rows, dtype=complex), np.zeros((cols, rows), dtype=complex)])
    table = []
    for k in range(levels):
        delta = rel_delta * scale**2 / 2**k
        stacked = np.vstack([m, np.sqrt(delta) * np.eye(cols)])
        table.append(np.linalg.lstsq(stacked, rhs, rcond=None)[0])
    # Neville-style elimination for a polynomial in delta with ratio 2
    for order in range(1, levels):
        factor = 2.0**order
        table = [(factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)]
    return table[0]


def principal_angles(a: Subspace, b: Subspace) -> np.ndarray:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    if a.dim == 0 or b.dim == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(a.basis, b.basis)


def subspaces_equal(a: Subspace, b: Subspace, tol: float = ANGLE_TOL) -> bool:
    if a.dim != b.dim:
        return False
    return bool(np.all(principal_angles(a, b) <= tol))


def intersect(a: Subspace, b: Subspace, tol: float = ANGLE_TOL) -> Subspace:
    """Vectors of `a` within angle `tol` of `b`.

    Uses the sines of the principal angles (singular values of the part of
    `a` orthogonal to `b`), which stay accurate for tiny angles.
    """
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(f"ambient dimension mismatch: {a.ambient_dim} vs {b.ambient_dim}")
    if a.dim == 0 or b.dim == 0:
        return Subspace.zero(a.ambient_dim)
    residual = a.basis - b.project(a.basis)
    _, sines, vh = np.linalg.svd(residual, full_matrices=True)
    sines = np.concatenate([sines, np.zeros(a.dim - len(sines))])
    keep = vh.conj().T[:, sines <= tol]
    return Subspace(a.ambient_dim, a.basis @ keep)


def preimage(c, s: Subspace, rel_tol: float | None = None) -> Subspace:
    """{x : C x in S}, as the nullspace of the part of C orthogonal to S."""
    m = as_matrix(c)
    rows, cols = m.shape
    if s.ambient_dim != rows:
        raise ValueError(f"subspace lives in C^{s.ambient_dim} but C has {rows} rows")
    if cols == 0:
        return Subspace.zero(0)
    residual = m - s.project(m)
    norm_c = np.linalg.norm(m, 2) if m.size else 0.0
    if norm_c == 0.0:
        return Subspace.full(cols)
    if rel_tol is None:
        rel_tol = default_rel_tol(m.shape)
    _, sig, vh = np.linalg.svd(residual, full_matrices=True)
    rank = int(np.count_nonzero(sig > rel_tol * norm_c))
    return Subspace(cols, vh.conj().T[:, rank:])


def random_orthonormal(space: Subspace, count: int, rng: np.random.Generator) -> np.ndarray:
    """`count` orthonormal vectors drawn from a seeded random rotation of `space`."""
    if count > space.dim:
        raise ValueError(f"cannot draw {count} orthonormal vectors from a {space.dim}-dim subspace")
    if count == 0:
        return np.zeros((space.ambient_dim, 0), dtype=complex)
    g = rng.standard_normal((space.dim, count)) + 1j * rng.standard_normal((space.dim, count))
    q, _ = np.linalg.qr(g)
    return space.basis @ q
