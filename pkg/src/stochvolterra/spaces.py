"""Finite-dimensional model of the state, smoothness and noise spaces.

Everything lives in R^n: the state space H is R^{dim_H} with the Euclidean
inner product, an optional weight matrix turns a subspace copy into the
smoothness space G, and the noise space U is R^{dim_U} in a basis that
diagonalizes the covariance operator.  In finite dimensions all operators are
bounded, so the grading between the spaces is recorded, not enforced.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "HilbertSpec",
    "CovOperator",
    "HSOperator",
    "hs_norm",
    "as_matrix",
]


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HilbertSpec:
    """Dimensions of the state space and the noise space.

    ``g_weight``, when given, is a symmetric positive definite matrix defining
    the squared norm x' W x of the smoothness space; absent means the two
    spaces coincide.
    """

    dim_H: int
    dim_U: int
    g_weight: np.ndarray | None = None

    def __post_init__(self):
        if not (isinstance(self.dim_H, int) and self.dim_H >= 1):
            raise ValueError(f"dim_H must be a positive integer, got {self.dim_H!r}")
        if not (isinstance(self.dim_U, int) and self.dim_U >= 1):
            raise ValueError(f"dim_U must be a positive integer, got {self.dim_U!r}")
        if self.g_weight is not None:
            w = _readonly(self.g_weight)
            if w.shape != (self.dim_H, self.dim_H):
                raise DimensionMismatch("g_weight shape", w.shape, (self.dim_H, self.dim_H))
            if not np.allclose(w, w.T, rtol=1e-12, atol=1e-12):
                raise ValueError("g_weight must be symmetric")
            if np.min(np.linalg.eigvalsh(0.5 * (w + w.T))) <= 0.0:
                raise ValueError("g_weight must be positive definite")
            object.__setattr__(self, "g_weight", w)

    def h_norm(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim_H,):
            raise DimensionMismatch("vector shape", x.shape, (self.dim_H,))
        return float(np.linalg.norm(x))

    def g_norm(self, x):
        """Weighted norm of the smoothness space (equals h_norm without a weight)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim_H,):
            raise DimensionMismatch("vector shape", x.shape, (self.dim_H,))
        if self.g_weight is None:
            return float(np.linalg.norm(x))
        return float(np.sqrt(x @ (self.g_weight @ x)))


@dataclass(frozen=True, eq=False)
class CovOperator:
    """Covariance operator of the driving noise, diagonal in the canonical basis.

    ``q`` holds the nonnegative eigenvalues.  ``cylindrical`` records that the
    modeled operator has infinite trace and ``q`` is a finite-mode stand-in;
    the flag is bookkeeping only, every computation uses the listed modes.
    """

    q: np.ndarray
    cylindrical: bool = False

    def __post_init__(self):
        q = _readonly(self.q)
        if q.ndim != 1 or q.size < 1:
            raise ValueError("q must be a nonempty vector of eigenvalues")
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            raise ValueError("covariance eigenvalues must be finite and >= 0")
        object.__setattr__(self, "q", q)

    @property
    def dim(self):
        return self.q.size

    @property
    def trace(self):
        return float(np.sum(self.q))

    @classmethod
    def cylindrical_truncation(cls, modes):
        """Identity covariance on `modes` modes, flagged as a cylindrical stand-in."""
        return cls(np.ones(modes), cylindrical=True)


@dataclass(frozen=True, eq=False)
class HSOperator:
    """A bounded operator from the noise space into the state space, as a matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrix)
        if m.ndim != 2:
            raise ValueError(f"expected a matrix, got array of ndim {m.ndim}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim_H(self):
        return self.matrix.shape[0]

    @property
    def dim_U(self):
        return self.matrix.shape[1]


def as_matrix(B):
    """Accept an HSOperator or a plain array and return the underlying matrix."""
    if isinstance(B, HSOperator):
        return B.matrix
    m = np.asarray(B, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {m.ndim}")
    return m


def hs_norm(B, Q):
    """Hilbert-Schmidt norm of B with respect to the covariance Q.

    Because the canonical basis diagonalizes Q, the norm reduces to
    sqrt(sum_k q_k |column_k(B)|^2), which equals sqrt(Tr(B Q B')).
    Zero exactly when B vanishes on the modes Q charges.
    """
    m = as_matrix(B)
    q = Q.q if isinstance(Q, CovOperator) else np.asarray(Q, dtype=float)
    if m.shape[1] != q.size:
        raise DimensionMismatch("operator columns vs covariance modes", m.shape, (q.size,))
    return float(np.sqrt(np.sum(q * np.sum(m * m, axis=0))))
