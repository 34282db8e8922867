"""Scalar convolution kernels and the scalar relaxation equation.

The kernels here are the memory functions a(t) of the linear Volterra
equation.  Each kernel knows its pointwise values and the exact integrals
over grid cells; the latter are what the product-integration solver for

    s(t) + mu * (a * s)(t) = 1

consumes, so weakly singular kernels (the fractional family with exponent
below one) need no special casing anywhere downstream.

Two marching schemes are provided.  ``product`` approximates the unknown on
each cell by the average of its endpoint values against the exact kernel
moments (empirically second order on smooth kernels); ``conv`` is the
left-rectangle convolution quadrature whose lag weights never touch s(0),
the form under which the discrete stochastic identities hold exactly.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import KernelDomainError, NumericalFailure, SmoothnessError
from .grids import TimeGrid

__all__ = [
    "ScalarKernel",
    "FractionalKernel",
    "ExponentialKernel",
    "ConstantKernel",
    "LinearKernel",
    "TabulatedKernel",
    "ScalarResolventPath",
    "march_scalar",
    "solve_scalar_resolvent",
    "MonotonicityReport",
    "check_nonneg_nonincreasing",
    "MuProbe",
    "CompletePositivityReport",
    "check_complete_positivity",
    "mittag_leffler",
    "DEFAULT_MU_GRID",
]

DEFAULT_MU_GRID = (0.5, 1.0, 2.0, 5.0, 10.0)


class ScalarKernel(ABC):
    """A locally integrable kernel a(t) on the half line."""

    #: True when a(t) diverges as t -> 0+ (evaluation at 0 is then rejected).
    singular_at_zero = False

    @abstractmethod
    def __call__(self, t):
        """Pointwise values a(t); accepts scalars or arrays, t > 0 required
        when the kernel is singular at zero."""

    @abstractmethod
    def primitive(self, t):
        """The running integral of a from 0 to t."""

    def cell_moments(self, h, n):
        """Exact integrals of a over the n cells [ih, (i+1)h], i = 0..n-1."""
        t = np.arange(n + 1) * h
        return np.diff(self.primitive(t))

    def deriv(self, t):
        """Time derivative a'(t); only smooth kernels provide one."""
        raise SmoothnessError(f"{self.label()} has no usable time derivative")

    @property
    def differentiable(self):
        try:
            self.deriv(1.0)
        except SmoothnessError:
            return False
        return True

    def label(self):
        return type(self).__name__


class FractionalKernel(ScalarKernel):
    """a(t) = t^(alpha-1) / Gamma(alpha) with alpha in (0, 2).

    Integrable at the origin for the whole range; singular there for
    alpha < 1, identically one for alpha = 1.
    """

    def __init__(self, alpha):
        alpha = float(alpha)
        if not (0.0 < alpha < 2.0):
            raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
        self.alpha = alpha
        self.singular_at_zero = alpha < 1.0
        self._gamma = math.gamma(alpha)
        self._gamma1 = math.gamma(alpha + 1.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.singular_at_zero and np.any(t <= 0.0):
            raise KernelDomainError(
                f"fractional kernel with alpha={self.alpha} is singular at t <= 0"
            )
        if np.any(t < 0.0):
            raise KernelDomainError("kernel evaluated at negative time")
        out = np.power(t, self.alpha - 1.0) / self._gamma
        return out if out.ndim else float(out)

    def primitive(self, t):
        t = np.asarray(t, dtype=float)
        out = np.power(t, self.alpha) / self._gamma1
        return out if out.ndim else float(out)

    def deriv(self, t):
        if self.alpha == 1.0:
            return np.zeros_like(np.asarray(t, dtype=float)) + 0.0
        raise SmoothnessError(
            "fractional kernel derivative is unbounded near t = 0; "
            "no W^{1,1} evaluation is provided"
        )

    def label(self):
        return f"fractional(alpha={self.alpha})"


class ExponentialKernel(ScalarKernel):
    """a(t) = c * exp(-b t), c > 0, b >= 0."""

    def __init__(self, c=1.0, b=1.0):
        c, b = float(c), float(b)
        if c <= 0.0:
            raise ValueError(f"c must be positive, got {c}")
        if b < 0.0:
            raise ValueError(f"b must be >= 0, got {b}")
        self.c, self.b = c, b

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.c * np.exp(-self.b * t)
        return out if out.ndim else float(out)

    def primitive(self, t):
        t = np.asarray(t, dtype=float)
        if self.b == 0.0:
            out = self.c * t
        else:
            out = (self.c / self.b) * (1.0 - np.exp(-self.b * t))
        return out if out.ndim else float(out)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = -self.b * self.c * np.exp(-self.b * t)
        return out if out.ndim else float(out)

    def label(self):
        return f"exponential(c={self.c}, b={self.b})"


class ConstantKernel(ScalarKernel):
    """a(t) = c >= 0."""

    def __init__(self, c=1.0):
        c = float(c)
        if c < 0.0:
            raise ValueError(f"c must be >= 0, got {c}")
        self.c = c

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.c)
        return out if out.ndim else float(out)

    def primitive(self, t):
        t = np.asarray(t, dtype=float)
        out = self.c * t
        return out if out.ndim else float(out)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        return out if out.ndim else float(out)

    def label(self):
        return f"constant({self.c})"


class LinearKernel(ScalarKernel):
    """a(t) = t."""

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return t if t.ndim else float(t)

    def primitive(self, t):
        t = np.asarray(t, dtype=float)
        out = 0.5 * t * t
        return out if out.ndim else float(out)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        return out if out.ndim else float(out)

    def label(self):
        return "linear"


class TabulatedKernel(ScalarKernel):
    """Piecewise-linear interpolation of tabulated values.

    The table must start at t = 0 with strictly increasing abscissae; beyond
    the last point the kernel is held constant at the last value.
    """

    def __init__(self, times, values):
        times = np.array(times, dtype=float)
        values = np.array(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ValueError("need matching 1-d tables with at least two entries")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
            raise ValueError("abscissae must start at 0 and increase strictly")
        if not np.all(np.isfinite(values)):
            raise ValueError("tabulated values must be finite")
        times.setflags(write=False)
        values.setflags(write=False)
        self.times, self.values = times, values

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0):
            raise KernelDomainError("kernel evaluated at negative time")
        out = np.interp(t, self.times, self.values)
        return out if out.ndim else float(out)

    def primitive(self, t):
        # exact integral of the interpolant: accumulate full table cells,
        # then the partial cell that t lands in
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * np.diff(self.times) * (self.values[1:] + self.values[:-1]))]
        )
        idx = np.clip(np.searchsorted(self.times, t_arr, side="right") - 1, 0, self.times.size - 1)
        base = cum[idx]
        t0 = self.times[idx]
        head = 0.5 * (self.values[idx] + np.interp(t_arr, self.times, self.values)) * (t_arr - t0)
        # past the end of the table the interpolant is constant
        past = t_arr > self.times[-1]
        head[past] = self.values[-1] * (t_arr[past] - self.times[-1])
        base = base + np.where(past, cum[-1] - cum[idx], 0.0)
        out = base + head
        return out if np.asarray(t).ndim else float(out[0])

    def label(self):
        return f"tabulated({self.times.size} points)"


# ---------------------------------------------------------------------------
# scalar relaxation equation
# ---------------------------------------------------------------------------


def march_scalar(weights, mu, scheme="product"):
    """March the discrete equation s + mu * (a convolved with s) = 1.

    `weights` are the exact kernel cell integrals.  Returns the N+1 node
    values with s[0] = 1.  Any real mu is accepted; the guarded failure is a
    nonpositive diagonal coefficient, which cannot occur for mu >= 0 and a
    nonnegative kernel.
    """
    w = np.asarray(weights, dtype=float)
    n_cells = w.size
    s = np.empty(n_cells + 1)
    s[0] = 1.0
    if scheme == "product":
        denom = 1.0 + 0.5 * mu * w[0]
        if denom <= 0.0:
            raise NumericalFailure(f"nonpositive diagonal coefficient {denom} in marching scheme")
        for n in range(1, n_cells + 1):
            acc = 0.5 * w[0] * s[n - 1]
            if n > 1:
                acc += np.dot(w[1:n], 0.5 * (s[n - 1:0:-1] + s[n - 2::-1]))
            s[n] = (1.0 - mu * acc) / denom
    elif scheme == "conv":
        denom = 1.0 + mu * w[0]
        if denom <= 0.0:
            raise NumericalFailure(f"nonpositive diagonal coefficient {denom} in marching scheme")
        for n in range(1, n_cells + 1):
            acc = np.dot(w[1:n], s[n - 1:0:-1]) if n > 1 else 0.0
            s[n] = (1.0 - mu * acc) / denom
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not np.all(np.isfinite(s)):
        raise NumericalFailure("scalar marching overflowed")
    return s


@dataclass(frozen=True, eq=False)
class ScalarResolventPath:
    """Grid solution of s + mu * (a * s) = 1 together with its provenance."""

    grid: TimeGrid
    mu: float
    s: np.ndarray
    kernel: ScalarKernel
    scheme: str = "product"

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    def residual(self):
        """Max node residual of the discrete equation (machine level by construction)."""
        w = self.kernel.cell_moments(self.grid.h, self.grid.N)
        s = self.s
        if self.scheme == "product":
            savg = 0.5 * (s[:-1] + s[1:])
        else:
            savg = s[1:]
        conv = np.convolve(w, savg)[: self.grid.N]
        return float(np.max(np.abs(s[1:] + self.mu * conv - 1.0)))


def solve_scalar_resolvent(kernel, mu, grid, scheme="product"):
    """Solve s(t) + mu * (a * s)(t) = 1 on the grid by product integration.

    The kernel enters only through its exact cell integrals, so weak
    singularities at the origin are handled without special treatment.
    For mu = 0 the solution is identically one.  mu >= 0 is the regime
    the complete-positivity theory speaks about, but negative values are
    accepted (they arise as eigenchannels of operators with spectrum of
    either sign).
    """
    w = kernel.cell_moments(grid.h, grid.N)
    s = march_scalar(w, mu, scheme=scheme)
    path = ScalarResolventPath(grid=grid, mu=float(mu), s=s, kernel=kernel, scheme=scheme)
    res = path.residual()
    if res > 1e-12 * (1.0 + abs(mu)):
        raise NumericalFailure(f"discrete residual {res} exceeds construction tolerance")
    return path


# ---------------------------------------------------------------------------
# kernel classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotonicityReport:
    nonnegative: bool
    nonincreasing: bool
    first_violation_t: float | None

    @property
    def ok(self):
        return self.nonnegative and self.nonincreasing


def check_nonneg_nonincreasing(kernel, grid, tol=1e-12):
    """Sampled check that the kernel is nonnegative and nonincreasing.

    Samples on (0, T] (the origin is skipped, where singular kernels have no
    value); the sufficient criterion for complete positivity.  Reports the
    first violating node, if any.
    """
    t = grid.nodes()[1:]
    vals = np.asarray(kernel(t), dtype=float)
    neg = vals < -tol
    inc = np.diff(vals) > tol
    nonnegative = not bool(np.any(neg))
    nonincreasing = not bool(np.any(inc))
    first = None
    if not nonnegative:
        first = float(t[np.argmax(neg)])
    if not nonincreasing:
        t_inc = float(t[1:][np.argmax(inc)])
        first = t_inc if first is None else min(first, t_inc)
    return MonotonicityReport(nonnegative, nonincreasing, first)


@dataclass(frozen=True, eq=False)
class MuProbe:
    """Outcome of one relaxation solve inside the complete-positivity check."""

    mu: float
    min_s: float
    t_at_min: float
    first_violation_t: float | None
    path: ScalarResolventPath


@dataclass(frozen=True, eq=False)
class CompletePositivityReport:
    """Falsification-only classification over a finite set of mu values.

    A negative excursion below -tol is a witness against complete positivity;
    its absence is only consistency on the tested grid, never a proof (the
    definition quantifies over every mu >= 0).
    """

    grid: TimeGrid
    tol: float
    probes: tuple

    @property
    def consistent(self):
        return self.witness is None

    @property
    def witness(self):
        for p in self.probes:
            if p.first_violation_t is not None:
                return (p.mu, p.first_violation_t)
        return None

    @property
    def verdict(self):
        if self.consistent:
            return "consistent with complete positivity on tested grid"
        mu, t = self.witness
        return f"not completely positive (witness mu={mu:g}, t={t:g})"


def check_complete_positivity(kernel, mu_list=None, T=1.0, N=1024, tol=None):
    """Probe the sign of the relaxation solution for each mu >= 0 given.

    tol defaults to 1e-8 plus an O(h) allowance for discretization error.
    """
    if mu_list is None:
        mu_list = DEFAULT_MU_GRID
    mu_list = [float(m) for m in mu_list]
    if not mu_list:
        raise ValueError("mu_list must be nonempty")
    if any(m < 0 for m in mu_list):
        raise ValueError("complete positivity is defined over mu >= 0")
    grid = TimeGrid(float(T), int(N))
    if tol is None:
        tol = 1e-8 + 10.0 * grid.h
    probes = []
    t_nodes = grid.nodes()
    for mu in mu_list:
        path = solve_scalar_resolvent(kernel, mu, grid)
        i_min = int(np.argmin(path.s))
        below = path.s < -tol
        first = float(t_nodes[np.argmax(below)]) if np.any(below) else None
        probes.append(
            MuProbe(mu, float(path.s[i_min]), float(t_nodes[i_min]), first, path)
        )
    return CompletePositivityReport(grid=grid, tol=float(tol), probes=tuple(probes))


# ---------------------------------------------------------------------------
# series oracle
# ---------------------------------------------------------------------------


def mittag_leffler(alpha, z, max_terms=200):
    """One-parameter Mittag-Leffler function by its Taylor series.

    Accurate for |z| <= 2 with the default term budget; larger arguments
    would need asymptotic branches that are deliberately not implemented.
    """
    if abs(z) > 2.0:
        raise ValueError("series evaluation is restricted to |z| <= 2")
    total = 0.0
    for k in range(max_terms):
        term = z**k / math.gamma(alpha * k + 1.0)
        total += term
        if k > 10 and abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total
