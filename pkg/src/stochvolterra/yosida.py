"""Bounded approximations of the state operator and their resolvent families.

For a matrix A whose symmetric part is negative semidefinite, the regularized
operators

    J_lam = (I - lam A)^{-1},     A_lam = A J_lam = (J_lam - I) / lam

are contractive resolvents and bounded surrogates converging to A at first
order in lam.  The convergence study rebuilds the resolvent family for each
A_lam on the same grid and weights as the base family, so the reported gaps
isolate the regularization error, and couples all stochastic columns through
common noise per path (independent noise would swamp the signal and must not
be used).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .convolution import _convolve_paths, _left_point_products
from .errors import NumericalFailure
from .kernels import check_complete_positivity
from .noise import sample_wiener_batch
from .resolvent import (
    ScalarTypeKernel,
    compute_resolvent,
    exponential_bound_fit,
    operator_2norm,
)

__all__ = [
    "AccretivityReport",
    "accretivity_check",
    "YosidaFamily",
    "make_yosida",
    "YosidaStudy",
    "yosida_convergence_study",
]


@dataclass(frozen=True)
class AccretivityReport:
    """Outcome of the contraction-generator criterion.

    In finite dimensions the dissipative (contraction semigroup) condition is
    that the symmetric part has no positive eigenvalue.
    """

    dissipative: bool
    max_symmetric_eigenvalue: float


def accretivity_check(A, tol=1e-12):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    top = float(np.max(np.linalg.eigvalsh(0.5 * (A + A.T))))
    return AccretivityReport(dissipative=top <= tol, max_symmetric_eigenvalue=top)


@dataclass(frozen=True, eq=False)
class YosidaFamily:
    """Resolvents J_lam and bounded approximations A_lam for a ladder of lam."""

    A: np.ndarray
    lambdas: np.ndarray
    J: np.ndarray
    A_lam: np.ndarray

    def __post_init__(self):
        for name in ("A", "lambdas", "J", "A_lam"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def identity_defect(self):
        """max over lam of |A_lam - (J_lam - I)/lam|, an exact identity."""
        eye = np.eye(self.A.shape[0])
        worst = 0.0
        for lam, J, Al in zip(self.lambdas, self.J, self.A_lam):
            worst = max(worst, float(np.max(np.abs(Al - (J - eye) / lam))))
        return worst

    def resolvent_norms(self):
        """Operator norms of the J_lam (at most one for a dissipative A)."""
        return np.array([operator_2norm(J) for J in self.J])


def make_yosida(A, lambdas, force=False):
    """Build the family by one linear solve per lam.

    Requires a dissipative A unless `force` is given; lam values must be
    positive and strictly decreasing.  Fails naming the offending lam if a
    regularized matrix is singular (impossible in the dissipative case).
    """
    A = np.asarray(A, dtype=float)
    lambdas = np.asarray([float(l) for l in lambdas])
    if lambdas.size == 0 or np.any(lambdas <= 0) or np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambdas must be positive and strictly decreasing")
    report = accretivity_check(A)
    if not report.dissipative and not force:
        raise ValueError(
            f"A is not dissipative (max symmetric eigenvalue "
            f"{report.max_symmetric_eigenvalue:g}); pass force=True to proceed"
        )
    d = A.shape[0]
    eye = np.eye(d)
    J = np.empty((lambdas.size, d, d))
    A_lam = np.empty_like(J)
    for i, lam in enumerate(lambdas):
        try:
            J[i] = np.linalg.solve(eye - lam * A, eye)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"I - lam*A is singular at lam={lam:g}") from exc
        A_lam[i] = A @ J[i]
    family = YosidaFamily(A=A, lambdas=lambdas, J=J, A_lam=A_lam)
    # (J - I)/lam loses lam^{-1} * eps to cancellation, so the check scales
    defect = family.identity_defect()
    tol = (1.0 + float(np.max(np.abs(A)))) * (1e-12 + 16 * np.finfo(float).eps / lambdas[-1])
    if defect > tol:
        raise NumericalFailure(f"resolvent identity defect {defect} out of tolerance")
    return family


@dataclass(frozen=True, eq=False)
class YosidaStudy:
    """Convergence table of the regularized families toward the base family.

    Per lam: the sup-norm gap of the resolvent tables, and Monte Carlo
    estimates (common noise across lam) of the worst mean-square gaps of the
    stochastic convolutions and of the operator-applied convolutions.
    `bound_M`/`bound_w` are uniform exponential-bound constants fitted across
    the whole family including the base table.
    """

    lambdas: np.ndarray
    e_S: np.ndarray
    e_W: np.ndarray
    e_AW: np.ndarray
    bound_M: float
    bound_w: float
    n_paths: int
    cp_consistent: bool


def yosida_convergence_study(
    a, A, psi, spec, lambdas, grid, n_paths, scheme="product", threads=1
):
    """Measure how the regularized solutions approach the base solution.

    Hypothesis checks (complete positivity of the kernel on the study grid,
    dissipativity of A) are advisory: violations warn rather than fail, since
    the point of the study is to watch the limits the theory promises under
    those hypotheses.
    """
    A = np.asarray(A, dtype=float)
    cp = check_complete_positivity(a, T=grid.T, N=max(grid.N, 256))
    if not cp.consistent:
        warnings.warn(f"kernel hypothesis violated: {cp.verdict}", stacklevel=2)
    acc = accretivity_check(A)
    if not acc.dissipative:
        warnings.warn(
            f"A is not dissipative (max symmetric eigenvalue "
            f"{acc.max_symmetric_eigenvalue:g})",
            stacklevel=2,
        )
    family = make_yosida(A, lambdas, force=True)
    base = compute_resolvent(ScalarTypeKernel(a, A), grid, scheme=scheme)
    tables = [
        compute_resolvent(ScalarTypeKernel(a, Al), grid, scheme=scheme)
        for Al in family.A_lam
    ]

    e_S = np.array(
        [
            max(operator_2norm(tb.S[n] - base.S[n]) for n in range(grid.N + 1))
            for tb in tables
        ]
    )

    # common noise: one increment batch reused for the base and every lam
    increments = sample_wiener_batch(spec, grid, range(n_paths), threads=threads)
    dw = _left_point_products(psi, grid, increments)
    W_base = _convolve_paths(base.S, dw)
    AW_base = np.einsum("ab,pnb->pna", A, W_base)
    e_W = np.empty(family.lambdas.size)
    e_AW = np.empty(family.lambdas.size)
    for i, tb in enumerate(tables):
        W_lam = _convolve_paths(tb.S, dw)
        diff = W_lam - W_base
        e_W[i] = float(np.max(np.mean(np.sum(diff**2, axis=2), axis=0)))
        diff_A = np.einsum("ab,pnb->pna", family.A_lam[i], W_lam) - AW_base
        e_AW[i] = float(np.max(np.mean(np.sum(diff_A**2, axis=2), axis=0)))

    fits = [exponential_bound_fit(tb) for tb in tables + [base]]
    return YosidaStudy(
        lambdas=family.lambdas,
        e_S=e_S,
        e_W=e_W,
        e_AW=e_AW,
        bound_M=max(f.M for f in fits),
        bound_w=max(f.w for f in fits),
        n_paths=int(n_paths),
        cp_consistent=cp.consistent,
    )
