"""Ensemble reduction: many trajectories -> density matrix with error bars.

Trajectories are partitioned into contiguous index batches (20 by default,
doubling as the batch-means error estimator).  Every batch is reduced in
index order and batch partials combine through a fixed pairwise tree, so the
result is bit-identical for a given seed no matter how many worker threads
the kernel uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coeffs import CoeffTables, integrate_coeff_tables
from .entanglement import negativity
from .kernels import LINEAR_NORM_CAP, propagate_block
from .model import SystemParams, make_initial_state
from .noise import sample_ou_block

DEFAULT_BATCHES = 20
MAX_FAILURE_RATE = 1e-3


class EnsembleError(RuntimeError):
    """Raised when an ensemble run is statistically unusable."""


@dataclass
class DensityTrajectory:
    """Time-gridded ensemble density matrix with batch-means error bars."""

    times: np.ndarray
    rho: np.ndarray                    # (S, 6, 6)
    stderr_negativity: np.ndarray      # (S,)
    stderr_populations: np.ndarray     # (S, 6)
    n_requested: int
    n_used: int
    n_failed: int
    mode: str
    batch_negativity: np.ndarray = field(repr=False, default=None)  # (n_batches, S)

    def negativity_series(self) -> np.ndarray:
        return np.array([negativity(r) for r in self.rho])

    def population_series(self) -> np.ndarray:
        return np.real(np.einsum('sii->si', self.rho))

    def purity_series(self) -> np.ndarray:
        return np.real(np.einsum('sij,sji->s', self.rho, self.rho))


def _pairwise_sum(parts: list[np.ndarray]) -> np.ndarray:
    while len(parts) > 1:
        merged = []
        for i in range(0, len(parts) - 1, 2):
            merged.append(parts[i] + parts[i + 1])
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def _batch_ranges(n: int, n_batches: int) -> list[tuple[int, int]]:
    n_batches = max(1, min(n_batches, n))
    edges = np.linspace(0, n, n_batches + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_ensemble(params: SystemParams, initial_state="bell",
                 mode: str = "nonlinear", stride: float = 0.05,
                 tables: CoeffTables | None = None,
                 n_batches: int = DEFAULT_BATCHES,
                 backend_name: str | None = None,
                 index_offset: int = 0,
                 linear_norm_cap: float = LINEAR_NORM_CAP) -> DensityTrajectory:
    """Average projectors of ``params.n_traj`` trajectories per output stride.

    Nonlinear mode averages unit-trace projectors; linear mode averages the
    raw (unnormalized) ones.  Failed trajectories are dropped and counted; a
    failure rate above 0.1% aborts the run.
    """
    if mode not in ("nonlinear", "linear"):
        raise ValueError(f"unknown mode '{mode}'")
    if tables is None:
        tables = integrate_coeff_tables(params)
    stride_steps = max(1, int(round(stride / params.dt)))
    psi0 = make_initial_state(initial_state, kappa=params.kappa)

    batch_sums = []
    batch_counts = []
    batch_neg = []
    batch_pops = []
    n_failed = 0
    first_failure = (-1, -1)
    for start, stop in _batch_ranges(params.n_traj, n_batches):
        indices = range(index_offset + start, index_offset + stop)
        zb = sample_ou_block(params, indices)
        states, _eld, _drift, fail, fail_step = propagate_block(
            params, psi0, zb, tables, mode=mode, stride_steps=stride_steps,
            backend_name=backend_name, linear_norm_cap=linear_norm_cap)
        ok = fail == 0
        if not ok.all():
            n_failed += int((~ok).sum())
            if first_failure[0] < 0:
                j = int(np.argmax(~ok))
                first_failure = (index_offset + start + j, int(fail_step[j]))
        good = states[ok]
        batch_sums.append(np.einsum('bsi,bsj->sij', good, good.conj()))
        batch_counts.append(int(ok.sum()))

    n_used = sum(batch_counts)
    if n_failed / params.n_traj > MAX_FAILURE_RATE:
        raise EnsembleError(
            f"{n_failed}/{params.n_traj} trajectories failed "
            f"(first: index {first_failure[0]} at step {first_failure[1]}); "
            "decrease dt or check parameters")
    if n_used == 0:
        raise EnsembleError("no trajectory completed")

    rho = _pairwise_sum(list(batch_sums)) / n_used
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
    n_strides = rho.shape[0]
    times = params.dt * stride_steps * np.arange(n_strides)

    for total, count in zip(batch_sums, batch_counts):
        if count == 0:
            batch_neg.append(np.full(n_strides, np.nan))
            batch_pops.append(np.full((n_strides, 6), np.nan))
            continue
        rb = total / count
        batch_neg.append(np.array([negativity(0.5 * (r + r.conj().T)) for r in rb]))
        batch_pops.append(np.real(np.einsum('sii->si', rb)))
    batch_neg = np.array(batch_neg)
    batch_pops = np.array(batch_pops)
    valid = ~np.isnan(batch_neg[:, 0])
    nb = int(valid.sum())
    if nb >= 2:
        se_neg = batch_neg[valid].std(axis=0, ddof=1) / np.sqrt(nb)
        se_pop = batch_pops[valid].std(axis=0, ddof=1) / np.sqrt(nb)
    else:
        se_neg = np.full(n_strides, np.nan)
        se_pop = np.full((n_strides, 6), np.nan)

    return DensityTrajectory(
        times=times, rho=rho, stderr_negativity=se_neg,
        stderr_populations=se_pop, n_requested=params.n_traj,
        n_used=n_used, n_failed=n_failed, mode=mode,
        batch_negativity=batch_neg)


def observable_series(dens: DensityTrajectory, which: str):
    """CSV-ready series. Returns (times, values, stderr-or-None)."""
    if which == "negativity":
        return dens.times, dens.negativity_series(), dens.stderr_negativity
    if which == "populations":
        return dens.times, dens.population_series(), dens.stderr_populations
    if which == "purity":
        return dens.times, dens.purity_series(), None
    if which == "coherences":
        iu, ju = np.triu_indices(6, k=1)
        mags = np.abs(dens.rho[:, iu, ju])
        return dens.times, mags, None
    raise ValueError(f"unknown observable '{which}'")
