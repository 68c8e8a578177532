"""Stationary complex Ornstein-Uhlenbeck noise and the memory shift.

The process has zero mean, zero pseudo-correlation and correlation
``M[z*(t) z(s)] = (Gamma*gamma/2) * exp(-gamma*|t-s|)``.  Paths are generated
with the exact discretization, so the target correlation holds at every grid
lag for any step size.  The shift memory accumulates the kernel-weighted
history of <L^dagger> used by the norm-preserving trajectory equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .model import SystemParams

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def stationary_variance(params: SystemParams) -> float:
    """M[|z|^2] of the stationary process."""
    return 0.5 * params.Gamma * params.gamma


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one trajectory, fixed by (master seed, index)."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(int(index),))
    return np.random.default_rng(ss)


@dataclass
class NoisePath:
    """One noise realization on the grid, plus the shift bookkeeping."""

    values: np.ndarray
    shift_memory: complex = 0.0 + 0.0j
    shifted: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.values)


def _standard_complex_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.standard_normal((n, 2))
    return (x[:, 0] + 1j * x[:, 1]) * _SQRT_HALF


def sample_ou_values(params: SystemParams, rng: np.random.Generator,
                     n_points: int | None = None) -> np.ndarray:
    """Raw path array z_k on the grid t_k = k*dt (exact discretization)."""
    n = params.n_points if n_points is None else n_points
    var = stationary_variance(params)
    a = np.exp(-params.gamma * params.dt)
    b = np.sqrt(var * (1.0 - a * a))
    xi = _standard_complex_normals(rng, n)
    drive = np.empty(n, dtype=complex)
    drive[0] = np.sqrt(var) * xi[0]
    drive[1:] = b * xi[1:]
    # z_k = a*z_{k-1} + drive_k is an AR(1) recursion
    return lfilter([1.0], [1.0, -a], drive)


def sample_ou_path(params: SystemParams, rng: np.random.Generator) -> NoisePath:
    return NoisePath(values=sample_ou_values(params, rng))


def sample_ou_block(params: SystemParams, indices) -> np.ndarray:
    """Noise paths for a set of trajectory indices, shape (len(indices), n).

    Each row is generated from its own (seed, index) stream, so the result is
    independent of how trajectories are grouped into blocks.
    """
    indices = list(indices)
    n = params.n_points
    out = np.empty((len(indices), n), dtype=complex)
    for row, idx in enumerate(indices):
        out[row] = sample_ou_values(params, trajectory_rng(params.seed, idx))
    return out


def update_shift(memory: complex, l_dag_expect: complex,
                 params: SystemParams, dt: float | None = None) -> complex:
    """Advance the shift memory by one step (decay then inject).

    memory <- memory * exp(-gamma*dt) + (Gamma*gamma/2) * <L^dagger> * dt;
    the shifted noise at the new grid point is z + memory.
    """
    h = params.dt if dt is None else dt
    return (memory * np.exp(-params.gamma * h)
            + 0.5 * params.Gamma * params.gamma * l_dag_expect * h)


def fill_shifted(path: NoisePath, l_dag_series, params: SystemParams) -> NoisePath:
    """Populate the shifted values from a raising-operator expectation history
    sampled on the same grid."""
    l_dag_series = np.asarray(l_dag_series)
    if len(l_dag_series) != len(path.values):
        raise ValueError("expectation history length must match the path")
    shifted = np.empty_like(path.values)
    m = 0.0 + 0.0j
    for k, z in enumerate(path.values):
        shifted[k] = z + m
        m = update_shift(m, l_dag_series[k], params)
    path.shifted = shifted
    path.shift_memory = m
    return path


def autocorrelation_stats(params: SystemParams, n_paths: int,
                          lag_indices) -> dict[str, np.ndarray]:
    """Ensemble statistics of the path correlation at the given grid lags.

    Estimates M[z*(lag) z(0)] and the pseudo-correlation M[z(lag) z(0)] over
    ``n_paths`` independent paths, with per-lag standard errors of the complex
    estimators, against the target (Gamma*gamma/2)*exp(-gamma*lag*dt).
    """
    lag_indices = np.asarray(list(lag_indices), dtype=int)
    n_keep = int(lag_indices.max()) + 1
    samples = np.empty((n_paths, len(lag_indices)), dtype=complex)
    pseudo = np.empty_like(samples)
    for p in range(n_paths):
        z = sample_ou_values(params, trajectory_rng(params.seed, p),
                             n_points=n_keep)
        samples[p] = np.conj(z[lag_indices]) * z[0]
        pseudo[p] = z[lag_indices] * z[0]

    def _mean_stderr(x):
        mean = x.mean(axis=0)
        spread = np.sqrt((np.abs(x - mean) ** 2).mean(axis=0) / (x.shape[0] - 1))
        return mean, spread

    corr, corr_se = _mean_stderr(samples)
    pcorr, pcorr_se = _mean_stderr(pseudo)
    lags_t = lag_indices * params.dt
    target = stationary_variance(params) * np.exp(-params.gamma * lags_t)
    return {
        "lag": lags_t,
        "corr": corr,
        "corr_stderr": corr_se,
        "pseudo": pcorr,
        "pseudo_stderr": pcorr_se,
        "target": target,
    }
