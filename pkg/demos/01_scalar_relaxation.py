"""Scalar relaxation equation: product integration against closed forms.

Three kernels whose relaxation solutions are known exactly:

  * a = 1        ->  s(t) = exp(-t)
  * a(t) = t     ->  s(t) = cos(t)
  * a = t^{-1/2}/Gamma(1/2) -> s(t) = exp(t) erfc(sqrt(t)), the classic
    stretched relaxation of the half-order kernel

The same solver handles all three; the weakly singular kernel needs no
special treatment because only its exact cell integrals enter.
"""

import math

import numpy as np

from stochvolterra import (
    ConstantKernel,
    FractionalKernel,
    LinearKernel,
    TimeGrid,
    mittag_leffler,
    solve_scalar_resolvent,
)

grid = TimeGrid(1.0, 1024)
t = grid.nodes()

path = solve_scalar_resolvent(ConstantKernel(1.0), 1.0, grid)
print("a = 1, mu = 1 (exponential decay)")
print(f"  s(1) = {path.s[-1]:.8f}   exact {math.exp(-1):.8f}")
print(f"  max error on [0,1]: {np.max(np.abs(path.s - np.exp(-t))):.2e}")

grid6 = TimeGrid(6.0, 1536)  # t = 2 falls on node 512
path6 = solve_scalar_resolvent(LinearKernel(), 1.0, grid6)
print("\na(t) = t, mu = 1 (oscillation: the solution is cos t)")
print(f"  s(2) = {path6.s[512]:.8f}   exact {math.cos(2.0):.8f}")
print(f"  max error on [0,6]: {np.max(np.abs(path6.s - np.cos(grid6.nodes()))):.2e}")

grid_f = TimeGrid(1.0, 2048)
tf = grid_f.nodes()
path_f = solve_scalar_resolvent(FractionalKernel(0.5), 1.0, grid_f)
closed = np.exp(tf) * np.array([math.erfc(math.sqrt(x)) for x in tf])
print("\nfractional kernel, alpha = 1/2, mu = 1")
print(f"  s(1) = {path_f.s[-1]:.6f}   exp(t)erfc(sqrt t) = {closed[-1]:.6f}"
      f"   series oracle = {mittag_leffler(0.5, -1.0):.6f}")
print(f"  max error on [0,1]: {np.max(np.abs(path_f.s - closed)):.2e}")

print("\nconvergence under grid halving (a = 1, mu = 1):")
for n in (256, 512, 1024, 2048):
    g = TimeGrid(1.0, n)
    err = np.max(np.abs(solve_scalar_resolvent(ConstantKernel(1.0), 1.0, g).s
                        - np.exp(-g.nodes())))
    print(f"  N = {n:5d}   max error = {err:.3e}")
