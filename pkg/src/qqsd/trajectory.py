"""Single-trajectory stepping and records.

The step functions here are the readable matrix-form reference of the scheme
the block kernels implement (exact diagonal Hamiltonian rotation, Heun on the
rest, noise and memory operator frozen over the step); tests hold both routes
together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import CoeffTables
from .kernels import LINEAR_NORM_CAP, MIN_NORM, propagate_block
from .model import SystemParams, make_initial_state
from .noise import sample_ou_values, trajectory_rng


class TrajectoryFailure(RuntimeError):
    """A trajectory left the representable range (norm under/overflow)."""

    def __init__(self, message: str, index: int = -1, step: int = -1):
        if index >= 0:
            message = f"trajectory {index}: {message}"
        super().__init__(message)
        self.index = index
        self.step = step


@dataclass
class TrajectoryRecord:
    """Per-stride observables of one propagated trajectory."""

    index: int
    times: np.ndarray
    states: np.ndarray | None          # (S, 6) unit-norm in nonlinear mode
    l_dag_expectation: np.ndarray      # (S,)
    norm_drift: np.ndarray             # (S,) max pre-normalization drift
    failed: bool
    failure_step: int = -1


def _drift_part(state, memory_op, noise_value, L, nonlinear):
    n2 = np.vdot(state, state).real
    low = L @ state
    mem = memory_op @ state
    mix = L.conj().T @ mem
    if not nonlinear:
        return noise_value * low - mix
    e_low = np.vdot(state, low) / n2
    e_mem = np.vdot(state, mem) / n2
    e_mix = np.vdot(state, mix) / n2
    return (noise_value * (low - e_low * state)
            - (mix - e_mix * state)
            + np.conj(e_low) * (mem - e_mem * state))


def _heun_step(state, memory_op, noise_value, H, L, dt, nonlinear):
    with np.errstate(all="ignore"):
        uphase = np.exp(-1j * np.real(np.diag(H)) * dt)
        g1 = _drift_part(state, memory_op, noise_value, L, nonlinear)
        pred = uphase * (state + dt * g1)
        g2 = _drift_part(pred, memory_op, noise_value, L, nonlinear)
        return uphase * (state + 0.5 * dt * g1) + 0.5 * dt * g2


def step_nonlinear(state, memory_op, shifted_noise, H, L, dt):
    """One norm-preserving step; returns (new unit state, pre-norm drift)."""
    raw = _heun_step(state, memory_op, shifted_noise, H, L, dt, nonlinear=True)
    nrm = np.linalg.norm(raw)
    if not np.isfinite(nrm) or nrm < MIN_NORM:
        raise TrajectoryFailure(f"norm collapsed to {nrm:.3g}")
    return raw / nrm, abs(nrm - 1.0)


def step_linear(state, memory_op, noise_value, H, L, dt):
    """One step of the unnormalized equation (memory operator built from the
    raw noise); raises on norm overflow."""
    raw = _heun_step(state, memory_op, noise_value, H, L, dt, nonlinear=False)
    nrm = np.linalg.norm(raw)
    if not np.isfinite(nrm) or nrm > LINEAR_NORM_CAP:
        raise TrajectoryFailure(f"norm overflow ({nrm:.3g})")
    return raw


def run_trajectory(params: SystemParams, tables: CoeffTables, index: int,
                   initial_state="bell", mode: str = "nonlinear",
                   stride_steps: int = 1, store_states: bool = True,
                   backend_name: str | None = None) -> TrajectoryRecord:
    """Propagate one trajectory; deterministic given (params.seed, index)."""
    if mode not in ("nonlinear", "linear"):
        raise ValueError(f"unknown mode '{mode}'")
    psi0 = make_initial_state(initial_state, kappa=params.kappa)
    z = sample_ou_values(params, trajectory_rng(params.seed, index))[None, :]
    states, eld, drift, fail, fail_step = propagate_block(
        params, psi0, z, tables, mode=mode, stride_steps=stride_steps,
        backend_name=backend_name)
    times = params.dt * stride_steps * np.arange(states.shape[1])
    return TrajectoryRecord(
        index=index,
        times=times,
        states=states[0] if store_states else None,
        l_dag_expectation=eld[0],
        norm_drift=drift[0],
        failed=bool(fail[0]),
        failure_step=int(fail_step[0]),
    )
