"""Reproducible truncated Q-Wiener increments and elementary Ito integrals.

Streams are derived counter-based: the Philox generator is keyed with the
pair (master seed, path index), so every path is an independent stream that
can be regenerated bit-identically in any order, on any number of threads.
"""

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .grids import TimeGrid
from .spaces import CovOperator, as_matrix

__all__ = [
    "NoiseSpec",
    "WienerIncrements",
    "sample_wiener",
    "sample_wiener_batch",
    "DiffusionProcess",
    "ConstantDiffusion",
    "StepDiffusion",
    "RuleDiffusion",
    "stochastic_integral",
]


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Covariance, mode truncation and master seed of the driving noise.

    Identical (cov, truncation, seed) and grid reproduce increments exactly;
    modes beyond the truncation contribute nothing.
    """

    cov: CovOperator
    truncation: int
    seed: int

    def __post_init__(self):
        if not (isinstance(self.truncation, int) and 1 <= self.truncation <= self.cov.dim):
            raise ValueError(
                f"truncation must lie in [1, {self.cov.dim}], got {self.truncation!r}"
            )
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class WienerIncrements:
    """K x N array of increments over the grid cells for one path.

    Entry (k, m) is Gaussian with variance h * q_k, independent across modes
    and cells.
    """

    grid: TimeGrid
    dW: np.ndarray
    path_id: int
    spec: NoiseSpec

    def __post_init__(self):
        a = np.asarray(self.dW, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "dW", a)

    @property
    def modes(self):
        return self.dW.shape[0]

    def cumulative(self):
        """The sampled Wiener path: (K, N+1) with a zero first column."""
        K = self.modes
        out = np.zeros((K, self.grid.N + 1))
        out[:, 1:] = np.cumsum(self.dW, axis=1)
        return out


def _stream(seed, path_id):
    key = np.array([seed, path_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_wiener(spec, grid, path_id=0):
    """Draw the truncated increments of one path.

    Distinct path ids give statistically independent streams; the same
    (seed, path_id, grid) reproduces the array bit for bit.
    """
    if path_id < 0:
        raise ValueError(f"path_id must be >= 0, got {path_id}")
    K = spec.truncation
    sd = np.sqrt(grid.h * spec.cov.q[:K])
    z = _stream(spec.seed, path_id).standard_normal((K, grid.N))
    return WienerIncrements(grid=grid, dW=sd[:, None] * z, path_id=path_id, spec=spec)


def sample_wiener_batch(spec, grid, path_ids, threads=1):
    """Increments for many paths as a (P, K, N) array.

    Each path is generated from its own counter-based stream and written into
    its own slot, so the result is independent of the thread count and of
    scheduling order.
    """
    path_ids = list(path_ids)
    K = spec.truncation
    out = np.empty((len(path_ids), K, grid.N))
    sd = np.sqrt(grid.h * spec.cov.q[:K])

    def fill(i):
        pid = path_ids[i]
        if pid < 0:
            raise ValueError(f"path_id must be >= 0, got {pid}")
        out[i] = sd[:, None] * _stream(spec.seed, pid).standard_normal((K, grid.N))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(len(path_ids))))
    else:
        for i in range(len(path_ids)):
            fill(i)
    return out


# ---------------------------------------------------------------------------
# integrands
# ---------------------------------------------------------------------------


class DiffusionProcess(ABC):
    """A deterministic operator-valued integrand for the Ito integral.

    Integrators evaluate it at the left endpoint of every grid cell, the
    discrete stand-in for predictability.  ``range_in_generator_domain``
    records the hypothesis that values map the noise modes into the domain of
    the state operator; in finite dimensions it is bookkeeping.
    """

    range_in_generator_domain = False

    @abstractmethod
    def value(self, t):
        """Matrix value at time t."""

    @property
    @abstractmethod
    def shape(self):
        """(dim_H, dim_U) of the values."""

    def values_on_grid(self, grid):
        """(N, dim_H, dim_U) stack of left-endpoint values."""
        t = grid.nodes()[:-1]
        out = np.empty((grid.N,) + self.shape)
        for m, tm in enumerate(t):
            out[m] = self.value(tm)
        return out

    def integrated_hs_norm_sq(self, grid, cov, modes=None):
        """Squared time-integrated Hilbert-Schmidt norm, sum_m h |value(t_m)|^2.

        `modes` restricts the covariance to its first K eigenvalues, matching
        a truncated simulation.
        """
        q = cov.q if modes is None else cov.q[:modes]
        vals = self.values_on_grid(grid)[:, :, : q.size]
        return float(grid.h * np.sum(q * np.sum(vals * vals, axis=1)))

    def label(self):
        return type(self).__name__


class ConstantDiffusion(DiffusionProcess):
    """Constant integrand."""

    def __init__(self, B, range_in_generator_domain=False):
        self.B = as_matrix(B)
        self.range_in_generator_domain = bool(range_in_generator_domain)

    def value(self, t):
        return self.B

    @property
    def shape(self):
        return self.B.shape

    def values_on_grid(self, grid):
        return np.broadcast_to(self.B, (grid.N,) + self.B.shape)

    def label(self):
        return f"constant({self.shape[0]}x{self.shape[1]})"


class StepDiffusion(DiffusionProcess):
    """Piecewise-constant integrand switching at given breakpoints.

    The value on a cell is the one in force at the cell's left endpoint:
    breakpoint b_i starts the value v_i, which holds up to (and excluding)
    the next breakpoint.
    """

    def __init__(self, breakpoints, values, range_in_generator_domain=False):
        bp = np.array([float(b) for b in breakpoints])
        if bp.size == 0 or bp[0] != 0.0 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        mats = [as_matrix(v) for v in values]
        if len(mats) != bp.size:
            raise ValueError("need one value per breakpoint")
        if any(m.shape != mats[0].shape for m in mats):
            raise DimensionMismatch("step values", *(m.shape for m in mats))
        bp.setflags(write=False)
        self.breakpoints = bp
        self.values = tuple(mats)
        self.range_in_generator_domain = bool(range_in_generator_domain)

    def value(self, t):
        i = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[max(i, 0)]

    @property
    def shape(self):
        return self.values[0].shape

    def label(self):
        return f"step({len(self.values)} pieces)"


class RuleDiffusion(DiffusionProcess):
    """Integrand given by an arbitrary deterministic evaluation rule."""

    def __init__(self, fn, shape, range_in_generator_domain=False):
        self.fn = fn
        self._shape = (int(shape[0]), int(shape[1]))
        self.range_in_generator_domain = bool(range_in_generator_domain)

    def value(self, t):
        v = np.asarray(self.fn(t), dtype=float)
        if v.shape != self._shape:
            raise DimensionMismatch("rule value shape", v.shape, self._shape)
        return v

    @property
    def shape(self):
        return self._shape

    def label(self):
        return f"rule({self._shape[0]}x{self._shape[1]})"


# ---------------------------------------------------------------------------
# elementary Ito integral
# ---------------------------------------------------------------------------


def _psi_increments(psi, inc):
    """Left-point products value(t_m) dW_m as an (N, dim_H) array."""
    K = inc.modes
    if psi.shape[1] != inc.spec.cov.dim:
        raise DimensionMismatch(
            "integrand columns vs noise dimension", psi.shape, (inc.spec.cov.dim,)
        )
    vals = psi.values_on_grid(inc.grid)
    return np.einsum("mik,km->mi", vals[:, :, :K], inc.dW)


def stochastic_integral(psi, inc):
    """Left-point Ito sums of the integrand against the increments.

    Returns the (N+1, dim_H) running integral, zero at the origin.  The
    left-point evaluation keeps the sum adapted by construction, and the Ito
    isometry holds in expectation against the integrand's time-integrated
    Hilbert-Schmidt norm.
    """
    steps = _psi_increments(psi, inc)
    out = np.zeros((inc.grid.N + 1, psi.shape[0]))
    out[1:] = np.cumsum(steps, axis=0)
    return out
