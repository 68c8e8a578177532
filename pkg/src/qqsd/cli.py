"""Command-line front end: config parsing, subcommands, CSV emission.

Config files are plain ``key = value`` lines with ``#`` comments.  Every run
writes, next to each CSV, a ``.meta.txt`` sidecar with the fully resolved
parameters and seed.  Exit codes: 0 success, 1 configuration/usage error,
2 simulation failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .coeffs import CoefficientBlowupError, integrate_coeff_tables
from .ensemble import EnsembleError, run_ensemble
from .entanglement import negativity, purity
from .markov import ConvergenceError, integrate_master, scan_kappa
from .model import (INITIAL_STATE_TAGS, ParameterError, SystemParams,
                    make_initial_state)
from .noise import autocorrelation_stats

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUN = 2
EXIT_IO = 3

FIGURE_GAMMAS = (0.1, 0.3, 3.0)
FIGURE_KAPPAS = (0.0, 0.25, 0.5, 0.75, 1.0)


class ConfigError(ValueError):
    """Bad configuration input; message carries the offending line number."""


@dataclass
class RunConfig:
    """Resolved run configuration: physics, grid, mode and output choices."""

    params: SystemParams = field(default_factory=SystemParams)
    mode: str = "nonlinear"
    initial: str | tuple = "bell"
    stride: float = 0.05
    out: str = "."

    def initial_state(self) -> np.ndarray:
        spec = list(self.initial) if isinstance(self.initial, tuple) else self.initial
        return make_initial_state(spec, kappa=self.params.kappa)

    def initial_tag(self) -> str:
        if isinstance(self.initial, str):
            return self.initial
        return "custom"


_PARAM_KEYS = {
    "omega_A": float, "omega_B": float, "kappa": float, "Gamma": float,
    "gamma": float, "dt": float, "t_max": float, "n_traj": int,
    "seed": int, "order": int,
}


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; unknown keys and bad values are rejected
    with their line number."""
    values: dict = {}
    mode, initial, stride, out = "nonlinear", "bell", 0.05, "."
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value' (got {rawline!r})")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        try:
            if key in _PARAM_KEYS:
                values[key] = _PARAM_KEYS[key](val)
            elif key == "mode":
                if val not in ("nonlinear", "linear"):
                    raise ValueError(f"mode must be nonlinear or linear (got {val!r})")
                mode = val
            elif key == "initial":
                parts = val.split()
                if parts and parts[0] == "custom":
                    if len(parts) != 7:
                        raise ValueError("custom initial state needs 6 amplitudes")
                    initial = tuple(complex(p) for p in parts[1:])
                elif val in INITIAL_STATE_TAGS:
                    initial = val
                else:
                    raise ValueError(f"unknown initial state {val!r}")
            elif key == "stride":
                stride = float(val)
                if stride <= 0:
                    raise ValueError(f"stride must be > 0 (got {stride})")
            elif key == "out":
                out = val
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    try:
        params = SystemParams(**values)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(params=params, mode=mode, initial=initial,
                     stride=stride, out=out)


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]):
    rows = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def _write_metadata(csv_path: Path, cfg: RunConfig, extra: dict | None = None):
    p = cfg.params
    lines = [f"{k} = {getattr(p, k)}" for k in _PARAM_KEYS]
    lines += [f"mode = {cfg.mode}", f"initial = {cfg.initial_tag()}",
              f"stride = {cfg.stride}"]
    if isinstance(cfg.initial, tuple):
        lines.append("initial_amplitudes = " + " ".join(str(a) for a in cfg.initial))
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    csv_path.with_suffix(csv_path.suffix + ".meta.txt").write_text(
        "\n".join(lines) + "\n")


def _cmd_simulate(cfg: RunConfig, outdir: Path, name: str = "simulate.csv") -> int:
    dens = run_ensemble(cfg.params, initial_state=cfg.initial_state(),
                        mode=cfg.mode, stride=cfg.stride)
    neg = dens.negativity_series()
    pops = dens.population_series()
    pur = dens.purity_series()
    path = outdir / name
    _write_csv(path,
               ["t", "negativity", "stderr_negativity"]
               + [f"rho_{i}{i}" for i in range(1, 7)] + ["purity"],
               [dens.times, neg, dens.stderr_negativity]
               + [pops[:, i] for i in range(6)] + [pur])
    _write_metadata(path, cfg, {"n_used": dens.n_used, "n_failed": dens.n_failed})
    return EXIT_OK


def _cmd_master(cfg: RunConfig, outdir: Path) -> int:
    psi0 = cfg.initial_state()
    rho0 = np.outer(psi0, psi0.conj())
    stride_steps = max(1, int(round(cfg.stride / cfg.params.dt)))
    times, rhos = integrate_master(rho0, cfg.params, cfg.params.t_max,
                                   dt=cfg.params.dt, stride_steps=stride_steps)
    neg = np.array([negativity(r) for r in rhos])
    pops = np.real(np.einsum('sii->si', rhos))
    pur = np.array([purity(r) for r in rhos])
    path = outdir / "master.csv"
    _write_csv(path,
               ["t", "negativity"] + [f"rho_{i}{i}" for i in range(1, 7)] + ["purity"],
               [times, neg] + [pops[:, i] for i in range(6)] + [pur])
    _write_metadata(path, cfg)
    return EXIT_OK


def _cmd_steady(cfg: RunConfig, outdir: Path) -> int:
    grid = np.round(np.arange(0.01, 1.0001, 0.01), 10)
    cols = {"kappa": [], "rho11_inf": [], "N_s": [], "purity": [], "tag": []}
    for tag_id, family in enumerate(("product-20", "phi-kappa")):
        scan = scan_kappa(family, grid, omega=cfg.params.omega_A,
                          Gamma=cfg.params.Gamma)
        cols["kappa"].append(scan["kappa"])
        cols["rho11_inf"].append(scan["rho11"])
        cols["N_s"].append(scan["negativity"])
        cols["purity"].append(scan["purity"])
        cols["tag"].append(np.full(len(grid), tag_id, dtype=float))
    path = outdir / "steady.csv"
    _write_csv(path, ["kappa", "rho11_inf", "N_s", "purity", "initial_state_tag"],
               [np.concatenate(cols[k]) for k in
                ("kappa", "rho11_inf", "N_s", "purity", "tag")])
    _write_metadata(path, cfg, {"tag_0": "product-20", "tag_1": "phi-kappa"})
    return EXIT_OK


def _cmd_coeffs(cfg: RunConfig, outdir: Path) -> int:
    tables = integrate_coeff_tables(cfg.params)
    t = tables.t[::2]
    c0 = tables.c0_grid
    c1 = tables.c1bar_grid
    c2 = tables.c2bar_grid
    header = ["t"]
    columns = [t]
    for j in range(8):
        header += [f"re_c0_{j + 1}", f"im_c0_{j + 1}"]
        columns += [c0[:, j].real, c0[:, j].imag]
    for j in range(4):
        header += [f"re_c1bar_{j + 9}", f"im_c1bar_{j + 9}"]
        columns += [c1[:, j].real, c1[:, j].imag]
    header += ["re_c2bar_13", "im_c2bar_13"]
    columns += [c2.real, c2.imag]
    path = outdir / "coeffs.csv"
    _write_csv(path, header, columns)
    _write_metadata(path, cfg)
    return EXIT_OK


def _cmd_noise_check(cfg: RunConfig, outdir: Path) -> int:
    p = cfg.params
    stride_steps = max(1, int(round(cfg.stride / p.dt)))
    lag_indices = np.arange(0, p.n_points, stride_steps)
    stats = autocorrelation_stats(p, p.n_traj, lag_indices)
    path = outdir / "noise_check.csv"
    _write_csv(path, ["lag", "empirical_re", "empirical_im", "target", "stderr"],
               [stats["lag"], stats["corr"].real, stats["corr"].imag,
                stats["target"], stats["corr_stderr"]])
    _write_metadata(path, cfg, {"n_paths": p.n_traj})
    return EXIT_OK


def _cmd_figure(cfg: RunConfig, outdir: Path, which: str) -> int:
    if which not in ("1a", "1b", "2a", "2b", "3"):
        raise ConfigError(f"unknown figure preset '{which}'")
    if which == "3":
        return _cmd_steady(cfg, outdir)
    initial = "bell" if which.startswith("1") else "product-20"
    if which.endswith("a"):
        presets = [replace(cfg.params, gamma=g, kappa=1.0) for g in FIGURE_GAMMAS]
        labels = [f"gamma{g:g}" for g in FIGURE_GAMMAS]
    else:
        presets = [replace(cfg.params, gamma=0.3, kappa=k) for k in FIGURE_KAPPAS]
        labels = [f"kappa{k:g}" for k in FIGURE_KAPPAS]
    for par, label in zip(presets, labels):
        sub = RunConfig(params=par, mode=cfg.mode, initial=initial,
                        stride=cfg.stride, out=cfg.out)
        _cmd_simulate(sub, outdir, name=f"fig{which}_{label}.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qqsd",
        description="Trajectory simulator for the dissipative qubit-qutrit pair")
    parser.add_argument("--config", type=str, default=None, help="config file path")
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override seed")
    parser.add_argument("--traj", type=int, default=None,
                        help="override trajectory count")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", help="ensemble run -> CSV")
    sub.add_parser("master", help="memoryless reference evolution -> CSV")
    sub.add_parser("steady", help="steady-state kappa scan -> CSV")
    sub.add_parser("coeffs", help="memory-operator coefficient tables -> CSV")
    sub.add_parser("noise-check", help="noise correlation statistics -> CSV")
    fig = sub.add_parser("figure", help="preset parameter sweeps")
    fig.add_argument("which", choices=["1a", "1b", "2a", "2b", "3"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = parse_config(Path(args.config).read_text())
        else:
            cfg = RunConfig()
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.traj is not None:
            overrides["n_traj"] = args.traj
        if overrides:
            cfg = replace(cfg, params=replace(cfg.params, **overrides))
        if args.out is not None:
            cfg = replace(cfg, out=args.out)
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)

        if args.command == "simulate":
            return _cmd_simulate(cfg, outdir)
        if args.command == "master":
            return _cmd_master(cfg, outdir)
        if args.command == "steady":
            return _cmd_steady(cfg, outdir)
        if args.command == "coeffs":
            return _cmd_coeffs(cfg, outdir)
        if args.command == "noise-check":
            return _cmd_noise_check(cfg, outdir)
        if args.command == "figure":
            return _cmd_figure(cfg, outdir, args.which)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EnsembleError, CoefficientBlowupError, ConvergenceError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
