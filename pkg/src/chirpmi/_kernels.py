"""Jitted inner loops for the accumulator passes.

Both kernels visit cells in ascending index order per theta column, which is
the same summation order np.bincount uses, so results match the plain numpy
formulation bit for bit.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def vote_sums(rho_idx, values, n_rho):
    """Per (theta, rho-bin) sums of cell values."""
    n_theta, n_cells = rho_idx.shape
    sums = np.zeros((n_theta, n_rho))
    for j in range(n_theta):
        row = rho_idx[j]
        acc = sums[j]
        for c in range(n_cells):
            acc[row[c]] += values[c]
    return sums


@njit(cache=True)
def vote_sums_sq(rho_idx, values, n_rho):
    """Per (theta, rho-bin) sums of values and squared values, one pass."""
    n_theta, n_cells = rho_idx.shape
    sums = np.zeros((n_theta, n_rho))
    sumsq = np.zeros((n_theta, n_rho))
    for j in range(n_theta):
        row = rho_idx[j]
        acc = sums[j]
        acc2 = sumsq[j]
        for c in range(n_cells):
            v = values[c]
            b = row[c]
            acc[b] += v
            acc2[b] += v * v
    return sums, sumsq


@njit(cache=True)
def gather_sums_sq(rho_idx, param_by_theta):
    """Per-cell sums of the param values each cell votes into, and squares."""
    n_theta, n_cells = rho_idx.shape
    s1 = np.zeros(n_cells)
    s2 = np.zeros(n_cells)
    for j in range(n_theta):
        row = rho_idx[j]
        col = param_by_theta[j]
        for c in range(n_cells):
            v = col[row[c]]
            s1[c] += v
            s2[c] += v * v
    return s1, s2
