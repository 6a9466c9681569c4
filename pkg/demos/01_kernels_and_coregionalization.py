"""Kernels and the coregionalization structure.

A multi-fidelity covariance factors into two independent pieces: a core
kernel over domain points (shared by every fidelity) and a small task
matrix of inter-fidelity covariances. This script builds both kernel
families on a toy grid and shows the Kronecker block layout.

Run:  python3 demos/01_kernels_and_coregionalization.py
"""

import numpy as np

from synthfid import (
    RbfKernel,
    SpectralMixtureKernel,
    TaskMatrix,
    chol_with_jitter,
    eval_core,
    eval_coreg,
)

x = np.linspace(0.0, 1.0, 6)[:, None]

# -- the RBF kernel decays monotonically with distance --------------------
rbf = RbfKernel(lengthscales=[0.25], signal_variance=1.0)
core = eval_core(rbf, x, x)
print("RBF core matrix (6 grid points, lengthscale 0.25):")
print(core.round(3), end="\n\n")

# -- a spectral mixture can also oscillate: it multiplies a Gaussian
#    envelope with a cosine at each component's mean frequency ------------
sm = SpectralMixtureKernel(
    weights=[0.6, 0.4],
    means=[[2.0], [0.2]],     # cycles per domain unit
    variances=[[0.05], [0.05]],
)
print("spectral mixture values against the first grid point:")
print(eval_core(sm, x, x)[0].round(3), end="\n\n")

# -- the task matrix holds inter-fidelity covariances; storing its
#    triangular factor keeps it PSD no matter what the entries are --------
task = TaskMatrix([[1.0, 0.0], [0.8, 0.6]])
print("task matrix (2 fidelities):")
print(task.matrix.round(3))
print("implied inter-fidelity correlation:",
      round(task.correlation()[0, 1], 4), end="\n\n")

# -- the full covariance is the Kronecker product: block (k, l) is
#    t_kl times the core matrix, plus per-fidelity noise on the diagonal --
noisy = RbfKernel(lengthscales=[0.25], signal_variance=1.0,
                  noise_variance=[0.01, 0.04])
full = eval_coreg(noisy, task, x)
print(f"coregionalization matrix: {full.shape[0]} x {full.shape[1]}")
print("block (0,1) equals t_01 * core:",
      np.allclose(full[:6, 6:], task.matrix[0, 1] * core))

# -- every covariance here factorizes, escalating diagonal jitter only
#    when conditioning demands it ------------------------------------------
chol, jitter = chol_with_jitter(full)
print(f"Cholesky succeeded with jitter {jitter:g}")
