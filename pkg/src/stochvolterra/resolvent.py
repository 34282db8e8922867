"""Resolvent families for linear Volterra equations with operator kernels.

The central object is a table of the family S(t_n) solving the second
resolvent equation

    S(t) = I + integral_0^t of the kernel applied to S,

together with its running integral U(t_n).  Tables are built by marching a
discrete convolution; the kernel enters through one weight matrix per grid
cell, which is exact for scalar-type kernels (cell moments of a times the
operator) and Gauss-quadrature-exact for smooth nonscalar kernels.

Schemes
-------
``product``
    Exact kernel mass per cell against the endpoint average of the unknown.
    Empirically second order on smooth kernels; the default.
``conv``
    Left-rectangle convolution quadrature: lag-j weight applied to S(t_{k-j}),
    j < k.  First order, but the stochastic convolution built on such a table
    satisfies the discrete Volterra identity to machine precision, which is
    what the identity verifiers exploit.
"""

import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure, SmoothnessError
from .grids import TimeGrid
from .kernels import ScalarKernel, march_scalar

__all__ = [
    "OperatorKernel",
    "ScalarTypeKernel",
    "NonscalarKernel",
    "ResolventTable",
    "compute_resolvent",
    "ResolventResiduals",
    "resolvent_residuals",
    "spectral_resolvent",
    "ExponentialBound",
    "exponential_bound_fit",
    "operator_2norm",
    "SCHEMES",
]

SCHEMES = ("product", "conv")

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)

_OVERFLOW_LIMIT = 1e100


class OperatorKernel(ABC):
    """Matrix-valued memory kernel A(t) of the state dimension."""

    @property
    @abstractmethod
    def dim(self):
        """State dimension."""

    @abstractmethod
    def cell_weights(self, grid):
        """(N, d, d) stack of exact (or quadrature-exact) cell integrals of A."""

    @abstractmethod
    def value(self, t):
        """A(t) as a matrix, t > 0 (t = 0 only when the kernel is regular there)."""

    @property
    def smoothness(self):
        """'W11' when a time derivative and the value at zero are available."""
        return "L1loc"

    def derivative(self, t):
        raise SmoothnessError(f"{self.label()} provides no time derivative")

    def value_at_zero(self):
        raise SmoothnessError(f"{self.label()} provides no value at t = 0")

    def label(self):
        return type(self).__name__


class ScalarTypeKernel(OperatorKernel):
    """A(t) = a(t) * A for a scalar kernel a and a fixed matrix A."""

    def __init__(self, a: ScalarKernel, A):
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("A must have finite entries")
        A.setflags(write=False)
        self.a = a
        self.A = A

    @property
    def dim(self):
        return self.A.shape[0]

    def cell_weights(self, grid):
        w = self.a.cell_moments(grid.h, grid.N)
        return w[:, None, None] * self.A

    def value(self, t):
        return float(self.a(t)) * self.A

    @property
    def smoothness(self):
        return "W11" if self.a.differentiable else "L1loc"

    def derivative(self, t):
        return float(self.a.deriv(t)) * self.A

    def value_at_zero(self):
        if self.a.singular_at_zero:
            raise SmoothnessError(f"{self.a.label()} is singular at t = 0")
        return float(self.a(0.0)) * self.A

    def label(self):
        return f"scalar-type[{self.a.label()}, {self.dim}x{self.dim}]"


class NonscalarKernel(OperatorKernel):
    """A general matrix-valued kernel given by an evaluation rule.

    The rule must be evaluable on the whole horizon (weakly singular kernels
    belong in :class:`ScalarTypeKernel`, where exact moments absorb the
    singularity).  Supplying a derivative rule together with the value at
    zero upgrades the smoothness class; :meth:`w11_residual` measures their
    mutual consistency.
    """

    def __init__(self, A_of_t, A_dot=None, A_at_zero=None):
        self.A_of_t = A_of_t
        self.A_dot = A_dot
        A0 = np.asarray(A_of_t(0.0), dtype=float) if A_at_zero is None else np.asarray(
            A_at_zero, dtype=float
        )
        if A0.ndim != 2 or A0.shape[0] != A0.shape[1]:
            raise ValueError(f"kernel values must be square matrices, got shape {A0.shape}")
        self._A0 = A0
        self._dim = A0.shape[0]
        self._explicit_zero = A_at_zero is not None

    @property
    def dim(self):
        return self._dim

    def cell_weights(self, grid):
        h = grid.h
        d = self._dim
        W = np.zeros((grid.N, d, d))
        half = 0.5 * h
        for j in range(grid.N):
            mid = (j + 0.5) * h
            for x, wt in zip(_GL_NODES, _GL_WEIGHTS):
                W[j] += (half * wt) * np.asarray(self.A_of_t(mid + half * x), dtype=float)
        return W

    def value(self, t):
        return np.asarray(self.A_of_t(t), dtype=float)

    @property
    def smoothness(self):
        return "W11" if (self.A_dot is not None and self._explicit_zero) else "L1loc"

    def derivative(self, t):
        if self.A_dot is None:
            raise SmoothnessError("no derivative rule was supplied")
        return np.asarray(self.A_dot(t), dtype=float)

    def value_at_zero(self):
        return self._A0

    def w11_residual(self, T, n=64):
        """max_t |A(t) - A(0) - integral of the derivative| over n checkpoints."""
        if self.A_dot is None:
            raise SmoothnessError("no derivative rule was supplied")
        grid = TimeGrid(float(T), int(n))
        dot_cells = NonscalarKernel(self.A_dot).cell_weights(grid)
        running = np.cumsum(dot_cells, axis=0)
        worst = 0.0
        for i, t in enumerate(grid.nodes()[1:], start=0):
            worst = max(worst, float(np.max(np.abs(self.value(t) - self._A0 - running[i]))))
        return worst

    def label(self):
        return f"nonscalar[{self.dim}x{self.dim}]"


# ---------------------------------------------------------------------------
# table construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ResolventTable:
    """Grid values S(t_n) with the running integral U(t_n) and quadrature data.

    S[0] is the identity and U is the composite trapezoid integral of S;
    `cell_weights` are the exact weight matrices the marching used, kept so
    identity verifiers can share them.
    """

    grid: TimeGrid
    S: np.ndarray
    U: np.ndarray
    kernel: OperatorKernel
    scheme: str
    quadrature_id: str
    cell_weights: np.ndarray

    def __post_init__(self):
        for name in ("S", "U", "cell_weights"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        d = self.dim
        if not np.array_equal(self.S[0], np.eye(d)):
            raise NumericalFailure("table does not start at the identity")
        if not np.array_equal(self.U[0], np.zeros((d, d))):
            raise NumericalFailure("integrated family does not start at zero")
        sup = float(np.max(np.abs(self.S)))
        if not np.isfinite(sup) or sup > _OVERFLOW_LIMIT:
            raise NumericalFailure(f"resolvent table overflowed: sup entry {sup}")

    @property
    def dim(self):
        return self.S.shape[1]

    def sup_norm(self):
        """max_n of the operator 2-norm of S(t_n)."""
        return max(operator_2norm(Sn) for Sn in self.S)

    def u_lipschitz(self):
        """Discrete Lipschitz estimate of U: max_n |U(t_{n+1}) - U(t_n)| / h."""
        h = self.grid.h
        return max(operator_2norm(d) for d in np.diff(self.U, axis=0)) / h


def _march(W, scheme):
    n_cells, d = W.shape[0], W.shape[1]
    eye = np.eye(d)
    S = np.empty((n_cells + 1, d, d))
    S[0] = eye
    M = eye - (0.5 * W[0] if scheme == "product" else W[0])
    try:
        M_inv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"singular step matrix at step 1: {exc}") from exc
    for k in range(1, n_cells + 1):
        if scheme == "product":
            rhs = eye + 0.5 * (W[0] @ S[k - 1])
            if k > 1:
                avg = 0.5 * (S[k - 1:0:-1] + S[k - 2::-1])
                rhs = rhs + np.einsum("jab,jbc->ac", W[1:k], avg)
        else:
            rhs = eye.copy()
            if k > 1:
                rhs = rhs + np.einsum("jab,jbc->ac", W[1:k], S[k - 1:0:-1])
        S[k] = M_inv @ rhs
        sup = np.max(np.abs(S[k]))
        if not np.isfinite(sup) or sup > _OVERFLOW_LIMIT:
            raise NumericalFailure(f"overflow at step {k}: sup entry {sup}")
    return S


def _trapezoid_integral(S, h):
    U = np.zeros_like(S)
    U[1:] = np.cumsum(0.5 * h * (S[1:] + S[:-1]), axis=0)
    return U


def compute_resolvent(kernel, grid, scheme="product"):
    """Build the resolvent table of the kernel on the grid.

    One small linear system per step; the step matrix is constant on a
    uniform grid and factored once.  With the zero kernel the table is
    identically the identity under either scheme.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if grid.N < 2:
        raise ValueError("need at least two cells")
    W = kernel.cell_weights(grid)
    S = _march(W, scheme)
    U = _trapezoid_integral(S, grid.h)
    return ResolventTable(
        grid=grid,
        S=S,
        U=U,
        kernel=kernel,
        scheme=scheme,
        quadrature_id=f"{scheme}/cell-exact/v1",
        cell_weights=W,
    )


@dataclass(frozen=True)
class ResolventResiduals:
    """Max-node residuals of the two resolvent equations.

    The second equation is the defining discretization, so its residual is
    machine level by construction.  The first equation is discretized
    independently (kernel at t_n - t_j against S(t_j) h, the left-point
    Stieltjes sum through U' = S) and its residual decreases at first order
    under grid refinement.
    """

    res_first: float
    res_second: float


def resolvent_residuals(table):
    grid, S, W = table.grid, table.S, table.cell_weights
    d = table.dim
    eye = np.eye(d)
    h = grid.h
    t = grid.nodes()
    A_vals = np.empty((grid.N + 1, d, d))
    for i in range(1, grid.N + 1):
        A_vals[i] = table.kernel.value(t[i])
    res1 = 0.0
    res2 = 0.0
    for n in range(1, grid.N + 1):
        if table.scheme == "product":
            avg = 0.5 * (S[n:0:-1] + S[n - 1::-1][:n])
            conv2 = np.einsum("jab,jbc->ac", W[:n], avg)
        else:
            conv2 = np.einsum("jab,jbc->ac", W[:n], S[n:0:-1])
        res2 = max(res2, float(np.max(np.abs(S[n] - eye - conv2))))
        conv1 = h * np.einsum("jab,jbc->ac", A_vals[n:0:-1], S[:n])
        res1 = max(res1, float(np.max(np.abs(S[n] - eye - conv1))))
    return ResolventResiduals(res_first=res1, res_second=res2)


def spectral_resolvent(a, A, grid, scheme="product"):
    """Resolvent table of a scalar-type kernel through the eigenbasis of A.

    Requires symmetric A; each eigenchannel solves the scalar relaxation
    equation with the same weights the direct marching would use, so the
    result is algebraically the direct table conjugated into the eigenbasis.
    Positive eigenvalues are accepted but flagged: the corresponding channel
    coefficients fall outside the complete-positivity regime.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-12 * max(1.0, np.max(np.abs(A)))):
        raise ValueError("A must be symmetric for the spectral construction")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    lam, V = np.linalg.eigh(0.5 * (A + A.T))
    if np.any(lam > 0.0):
        warnings.warn(
            "A has positive eigenvalues; channel coefficients mu = -lambda < 0 fall "
            "outside the complete-positivity regime",
            stacklevel=2,
        )
    w = a.cell_moments(grid.h, grid.N)
    channels = np.empty((grid.N + 1, lam.size))
    for k, lk in enumerate(lam):
        channels[:, k] = march_scalar(w, -lk, scheme=scheme)
    S = np.einsum("ik,nk,jk->nij", V, channels, V)
    S[0] = np.eye(lam.size)
    U = _trapezoid_integral(S, grid.h)
    kernel = ScalarTypeKernel(a, A)
    return ResolventTable(
        grid=grid,
        S=S,
        U=U,
        kernel=kernel,
        scheme=scheme,
        quadrature_id=f"{scheme}/cell-exact/v1",
        cell_weights=w[:, None, None] * kernel.A,
    )


# ---------------------------------------------------------------------------
# norms and growth bounds
# ---------------------------------------------------------------------------


def operator_2norm(M, iterations=64, tol=1e-10):
    """Largest singular value by power iteration on M'M.

    Deterministic start vector; 64 iterations with a relative-change stop are
    ample for the dense matrices this package works with.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[1]
    if d == 1:
        return float(np.linalg.norm(M[:, 0]))
    G = M.T @ M
    v = np.linspace(1.0, 2.0, d)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iterations):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = float(np.sqrt(max(v @ (G @ v), 0.0)))
        if abs(new - sigma) <= tol * max(new, 1.0):
            return new
        sigma = new
    return sigma


@dataclass(frozen=True)
class ExponentialBound:
    """Constants of a verified bound |S(t_n)| <= M exp(w t_n) on the grid."""

    M: float
    w: float


def exponential_bound_fit(table):
    """Fit growth constants from the table's operator norms.

    Least squares of log |S(t_n)| against t_n over the tail half of the grid
    gives the rate; the prefactor is then inflated minimally so the bound
    holds at every node (and never drops below one, which S(0) = I forces
    anyway).
    """
    if table.grid.N < 8:
        raise ValueError("need at least 8 cells for a meaningful fit")
    t = table.grid.nodes()
    eta = np.array([operator_2norm(Sn) for Sn in table.S])
    log_eta = np.log(np.maximum(eta, 1e-300))
    half = table.grid.N // 2
    design = np.vstack([t[half:], np.ones(t.size - half)]).T
    (w, log_M), *_ = np.linalg.lstsq(design, log_eta[half:], rcond=None)
    M = float(max(np.exp(log_M), np.max(eta * np.exp(-w * t)), 1.0))
    return ExponentialBound(M=M, w=float(w))
