#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the coefficient integration and a trajectory block on both backends and
reports wall times, speedup, and the worst deviation between the paths.

    python benchmarks/bench_backends.py [--traj N] [--t-max T]
"""

import argparse
import time

import numpy as np

from qqsd.backend import HAVE_NUMBA
from qqsd.coeffs import integrate_coeff_tables
from qqsd.kernels import propagate_block
from qqsd.model import SystemParams, make_initial_state
from qqsd.noise import sample_ou_block


def _time(fn, repeat=3):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--traj", type=int, default=128)
    ap.add_argument("--t-max", type=float, default=10.0)
    args = ap.parse_args()

    params = SystemParams(gamma=0.3, kappa=1.0, Gamma=1.0, dt=1e-3,
                          t_max=args.t_max, n_traj=args.traj, seed=2024)
    psi0 = make_initial_state("bell")
    zb = sample_ou_block(params, range(args.traj))
    steps = args.traj * params.n_steps

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if not HAVE_NUMBA:
        print("numba not importable; benchmarking the numpy path only")

    print(f"coefficient tables ({2 * params.n_steps + 1} half-grid points):")
    coeff = {}
    for b in backends:
        integrate_coeff_tables(params, backend_name=b)  # warm-up / compile
        dt, tab = _time(lambda b=b: integrate_coeff_tables(params, backend_name=b))
        coeff[b] = (dt, tab)
        print(f"  {b:6s}: {dt * 1e3:8.1f} ms")
    if len(backends) == 2:
        dev = np.abs(coeff["numba"][1].c0 - coeff["numpy"][1].c0).max()
        print(f"  speedup x{coeff['numpy'][0] / coeff['numba'][0]:.1f}, "
              f"max deviation {dev:.2e}")

    print(f"\ntrajectory block ({args.traj} trajectories x {params.n_steps} steps):")
    tables = coeff[backends[-1]][1]
    block = {}
    for b in backends:
        propagate_block(params, psi0, zb[:2], tables, stride_steps=50,
                        backend_name=b)  # warm-up / compile
        dt, out = _time(lambda b=b: propagate_block(
            params, psi0, zb, tables, stride_steps=50, backend_name=b), repeat=2)
        block[b] = (dt, out)
        print(f"  {b:6s}: {dt:8.3f} s   ({steps / dt / 1e6:.2f} M steps/s)")
    if len(backends) == 2:
        dev = np.abs(block["numba"][1][0] - block["numpy"][1][0]).max()
        print(f"  speedup x{block['numpy'][0] / block['numba'][0]:.1f}, "
              f"max state deviation {dev:.2e}")


if __name__ == "__main__":
    main()
