"""Double-precision Ulam discretisation of the transfer operator.

An independent, low-accuracy oracle for density shape and the Lyapunov
exponent; nothing here is certified.
"""

import logging
from dataclasses import dataclass
from numbers import Integral

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigs
from sklearn.utils._param_validation import Interval, validate_params

from .maps import MapSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UlamEstimate:
    edges: np.ndarray
    density: np.ndarray
    eigenvalue: float
    lyapunov: float

    def density_at(self, x):
        """Histogram density at the points ``x``."""
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.density) - 1)
        return self.density[idx]


@validate_params(
    {
        "map": [MapSpec],
        "n_cells": [Interval(Integral, 4, None, closed="left")],
        "samples_per_cell": [Interval(Integral, 1, None, closed="left")],
        "seed": [Interval(Integral, 0, None, closed="left")],
    },
    prefer_skip_nested_validation=True,
)
def ulam_estimate(map, n_cells=10_000, samples_per_cell=16, seed=0):
    """Ulam matrix from sampled inverse-branch images.

    ``P[i, j]`` approximates the fraction of cell ``i`` mapped into cell
    ``j``: for samples ``u`` in cell ``j`` each branch contributes
    ``|f_k'(u)|`` to the cell holding ``f_k(u)``. The stationary row vector
    of ``P`` gives the density histogram.

    Returns
    -------
    UlamEstimate
    """
    a, b = (float(v) for v in map.interval)
    edges = np.linspace(a, b, n_cells + 1)
    h = (b - a) / n_cells
    rng = np.random.default_rng(seed)
    u = (edges[:-1, None] + h * rng.random((n_cells, samples_per_cell))).ravel()
    target = np.repeat(np.arange(n_cells), samples_per_cell)

    rows, cols, weights, logs = [], [], [], []
    for branch in map.branches:
        inverse, deriv = branch.inverse.to_numpy(), branch.deriv_abs.to_numpy()
        y = np.broadcast_to(inverse(u), u.shape)
        d = np.abs(np.broadcast_to(deriv(u), u.shape)).astype(float)
        source = np.clip(((y - a) / h).astype(int), 0, n_cells - 1)
        rows.append(source)
        cols.append(target)
        weights.append(d / samples_per_cell)
        logs.append(-d * np.log(d) / samples_per_cell)

    rows, cols = np.concatenate(rows), np.concatenate(cols)
    P = sp.csr_matrix((np.concatenate(weights), (rows, cols)), shape=(n_cells, n_cells))
    values, vectors = eigs(P.T, k=1, which="LM")
    pi = np.abs(np.real(vectors[:, 0]))
    density = pi / (pi.sum() * h)

    # lambda = -int sum_k |f_k'| log|f_k'| rho(f_k(u)) du, with rho the histogram
    log_weights = np.concatenate(logs)
    lyapunov = float(np.sum(log_weights * density[rows]) * h)
    eigenvalue = float(np.real(values[0]))
    logger.info(f"Ulam estimate ({n_cells} cells): eigenvalue={eigenvalue:.6f} lyapunov={lyapunov:.8f}")
    return UlamEstimate(edges=edges, density=density, eigenvalue=eigenvalue, lyapunov=lyapunov)
