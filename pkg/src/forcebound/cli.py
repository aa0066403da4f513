"""Experiment runner: configure, compute bounds, run Monte Carlo campaigns.

Subcommands
-----------
bound       bound and noise spectra plus the scalar error bound
simulate    write simulated trajectory CSVs
estimate    trajectories plus Wiener-smoothed estimates and errors
montecarlo  full campaign: empirical error vs the bound, saturation ratios
fisher      discrete-time matrix bound vs the spectral bound

All outputs are CSV with '#'-prefixed metadata lines (config hash, seed,
version); reruns with identical config and seed are byte-identical,
independent of thread count.  Diagnostics go to stderr only.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    fisher_matrices,
    matrix_point_bound,
    point_qcrb,
    spectral_qcrb,
    sql_spectrum,
)
from .estimate import evaluate_estimate, smoother_error_spectrum, wiener_smoother
from .grids import TimeGrid, circulant_eigenvalues, spectrum_integral
from .models import (
    BandLimitedFlatPrior,
    NoiseModel,
    OrnsteinUhlenbeckPrior,
    OscillatorParams,
    PriorModel,
    SensorModel,
    Topology,
    backaction_position_spectrum,
    observation_noise_spectrum,
    prior_spectrum,
)
from .sim import SeedSpec, simulate_record

THREADS_ENV = "FORCEBOUND_THREADS"
FISHER_DENSE_CAP = 8192


class ConfigError(ValueError):
    """Invalid or missing experiment configuration key."""


@dataclass(frozen=True)
class Experiment:
    sensor: SensorModel
    prior: PriorModel
    grid: TimeGrid
    trials: int
    master_seed: int
    config_hash: str
    raw: dict


def _require(cfg: dict, key: str, kind, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{where} key '{key}': missing")
    value = cfg[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{where} key '{key}': expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{where} key '{key}': expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where} key '{key}': expected a boolean, got {value!r}")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where} key '{key}': expected an object, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where} key '{key}': expected a string, got {value!r}")
        return value
    raise TypeError(kind)


def _build_prior(cfg: dict) -> PriorModel:
    kind = _require(cfg, "type", str, "config key 'prior'").lower()
    if kind in ("ou", "ornstein-uhlenbeck", "ornstein_uhlenbeck"):
        return OrnsteinUhlenbeckPrior(
            kappa=_require(cfg, "kappa", float, "config key 'prior'"),
            p_var=_require(cfg, "p_var", float, "config key 'prior'"),
        )
    if kind in ("flat", "band-limited-flat", "band_limited_flat"):
        return BandLimitedFlatPrior(
            s0=_require(cfg, "s0", float, "config key 'prior'"),
            omega_c=_require(cfg, "omega_c", float, "config key 'prior'"),
        )
    raise ConfigError(f"config key 'prior.type': unknown prior type {kind!r}")


def build_experiment(cfg: dict) -> Experiment:
    """Validate a config document and build the model objects.

    Emits stationarity warnings (record vs correlation times) on stderr.
    """
    units = cfg.get("units", "natural")
    if units not in ("natural", "si"):
        raise ConfigError(f"config key 'units': expected 'natural' or 'si', got {units!r}")
    hbar = cfg.get("hbar", 1.0)
    omega_m = _require(cfg, "omega_m", float)
    gamma = cfg.get("gamma", 1e-3 * omega_m)
    try:
        osc = OscillatorParams(
            m=_require(cfg, "m", float), omega_m=omega_m, gamma=gamma, hbar=hbar
        )
    except ValueError as exc:
        raise ConfigError(f"config keys m/omega_m/gamma/hbar: {exc}") from exc
    quantum_limited = cfg.get("quantum_limited", False)
    s_xi = _require(cfg, "s_xi", float)
    if quantum_limited and "s_eta" not in cfg:
        noise = NoiseModel.quantum_limited_pair(s_xi, hbar=osc.hbar)
    else:
        noise = NoiseModel(
            s_xi=s_xi,
            s_eta=_require(cfg, "s_eta", float),
            quantum_limited=quantum_limited,
        )
    topo_name = _require(cfg, "topology", str).lower()
    try:
        topology = Topology(topo_name)
    except ValueError:
        raise ConfigError(
            f"config key 'topology': expected 'standard' or 'qnc', got {topo_name!r}"
        ) from None
    try:
        sensor = SensorModel(osc=osc, noise=noise, topology=topology)
    except ValueError as exc:
        raise ConfigError(f"config key 's_xi'/'s_eta'/'gamma': {exc}") from exc
    prior = _build_prior(_require(cfg, "prior", dict))
    grid_cfg = _require(cfg, "grid", dict)
    try:
        grid = TimeGrid(
            n=_require(grid_cfg, "n", int, "config key 'grid'"),
            dt=_require(grid_cfg, "dt", float, "config key 'grid'"),
        )
    except ValueError as exc:
        raise ConfigError(f"config key 'grid': {exc}") from exc
    trials = cfg.get("trials", 100)
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"config key 'trials': expected a positive integer, got {trials!r}")
    master_seed = cfg.get("master_seed", 0)
    if not isinstance(master_seed, int) or master_seed < 0:
        raise ConfigError(
            f"config key 'master_seed': expected a nonnegative integer, got {master_seed!r}"
        )

    if isinstance(prior, OrnsteinUhlenbeckPrior) and grid.duration < 50.0 / prior.kappa:
        print(
            f"warning: record duration T={grid.duration:g} s < 50/kappa="
            f"{50.0 / prior.kappa:g} s; edge effects may bias statistics",
            file=sys.stderr,
        )
    if osc.gamma > 0 and grid.duration < 50.0 / osc.gamma:
        print(
            f"warning: record duration T={grid.duration:g} s < 50/gamma="
            f"{50.0 / osc.gamma:g} s; the backaction-driven position is only "
            "quasi-stationary over the record",
            file=sys.stderr,
        )

    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    config_hash = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
    return Experiment(
        sensor=sensor,
        prior=prior,
        grid=grid,
        trials=trials,
        master_seed=master_seed,
        config_hash=config_hash,
        raw=cfg,
    )


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, meta: dict, names, columns):
    columns = [np.asarray(c) for c in columns]
    lines = [f"# {k}={_fmt(v)}" for k, v in meta.items()]
    lines.append(",".join(names))
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _meta(exp: Experiment, **extra) -> dict:
    meta = {
        "artifact_version": __version__,
        "config_hash": exp.config_hash,
        "master_seed": exp.master_seed,
    }
    meta.update(extra)
    return meta


def cmd_bound(exp: Experiment, out: Path) -> None:
    fgrid = exp.grid.frequencies()
    order = fgrid.sort_order
    s_dx = prior_spectrum(exp.prior, fgrid).values
    s_dq = backaction_position_spectrum(exp.sensor, fgrid).values
    s_z = observation_noise_spectrum(exp.sensor, fgrid).values
    s_sql = sql_spectrum(exp.sensor, fgrid).values
    c_min = spectral_qcrb(exp.sensor, exp.prior, fgrid)
    pi_min = spectrum_integral(c_min)
    _write_csv(
        out / "bound_spectra.csv",
        _meta(exp),
        ["omega", "s_dx", "s_dq", "s_z", "s_sql", "c_min"],
        [
            fgrid.omega[order],
            s_dx[order],
            s_dq[order],
            s_z[order],
            s_sql[order],
            c_min.values[order],
        ],
    )
    _write_csv(
        out / "bound_summary.csv",
        _meta(exp),
        ["quantity", "value"],
        [["pi_min", "n", "dt"], [pi_min, exp.grid.n, exp.grid.dt]],
    )


def _trajectory_columns(traj):
    return (
        ["t", "x", "xi", "eta", "position", "y"],
        [traj.grid.times, traj.x, traj.xi, traj.eta, traj.position, traj.y],
    )


def cmd_simulate(exp: Experiment, out: Path, threads: int) -> None:
    def run(i):
        return simulate_record(
            exp.sensor, exp.prior, exp.grid, SeedSpec(exp.master_seed, i)
        )

    trajectories = _parallel_map(run, exp.trials, threads)
    for i, traj in enumerate(trajectories):
        names, cols = _trajectory_columns(traj)
        _write_csv(out / f"trajectory_{i:04d}.csv", _meta(exp, trial=i), names, cols)


def cmd_estimate(exp: Experiment, out: Path, threads: int) -> None:
    def run(i):
        traj = simulate_record(
            exp.sensor, exp.prior, exp.grid, SeedSpec(exp.master_seed, i)
        )
        est = wiener_smoother(traj.y, exp.sensor, exp.prior, exp.grid)
        return traj, est

    for i, (traj, est) in enumerate(_parallel_map(run, exp.trials, threads)):
        names, cols = _trajectory_columns(traj)
        names += ["x_hat", "err"]
        cols += [est, est - traj.x]
        _write_csv(out / f"estimate_{i:04d}.csv", _meta(exp, trial=i), names, cols)


def _parallel_map(fn, count: int, threads: int):
    """Deterministic index-ordered gather, regardless of thread count."""
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def cmd_montecarlo(exp: Experiment, out: Path, threads: int) -> None:
    if exp.trials < 2:
        raise ConfigError("config key 'trials': montecarlo requires trials >= 2")
    fgrid = exp.grid.frequencies()
    order = fgrid.sort_order

    def run(i):
        traj = simulate_record(
            exp.sensor, exp.prior, exp.grid, SeedSpec(exp.master_seed, i)
        )
        est = wiener_smoother(traj.y, exp.sensor, exp.prior, exp.grid)
        res = evaluate_estimate(est, traj.x, exp.grid)
        return res.empirical_mse, res.error_spectrum.values

    results = _parallel_map(run, exp.trials, threads)
    mses = np.array([r[0] for r in results])
    err_spec = np.mean(np.stack([r[1] for r in results]), axis=0)

    c_min = spectral_qcrb(exp.sensor, exp.prior, fgrid)
    pi_min = spectrum_integral(c_min)
    model_err = smoother_error_spectrum(exp.sensor, exp.prior, exp.grid)
    s_z = observation_noise_spectrum(exp.sensor, fgrid).values
    s_sql = sql_spectrum(exp.sensor, fgrid).values
    pi_emp = float(np.mean(mses))
    pi_se = float(np.std(mses, ddof=1) / np.sqrt(exp.trials))
    with np.errstate(divide="ignore", invalid="ignore"):
        saturation = np.where(c_min.values > 0, err_spec / c_min.values, np.nan)

    _write_csv(
        out / "campaign_spectra.csv",
        _meta(exp, trials=exp.trials),
        ["omega", "c_min", "s_sql", "s_z", "err_model", "err_empirical", "saturation"],
        [
            fgrid.omega[order],
            c_min.values[order],
            s_sql[order],
            s_z[order],
            model_err.values[order],
            err_spec[order],
            saturation[order],
        ],
    )
    _write_csv(
        out / "campaign_trials.csv",
        _meta(exp, trials=exp.trials),
        ["trial", "mse"],
        [np.arange(exp.trials), mses],
    )
    _write_csv(
        out / "campaign_summary.csv",
        _meta(exp, trials=exp.trials),
        ["quantity", "value"],
        [
            [
                "pi_min",
                "pi_empirical",
                "pi_empirical_se",
                "pi_model",
                "ratio_empirical_over_min",
                "trials",
                "n",
                "dt",
            ],
            [
                pi_min,
                pi_emp,
                pi_se,
                spectrum_integral(model_err),
                pi_emp / pi_min,
                exp.trials,
                exp.grid.n,
                exp.grid.dt,
            ],
        ],
    )


def cmd_fisher(exp: Experiment, out: Path, fast: bool) -> None:
    fgrid = exp.grid.frequencies()
    pi_spectral = point_qcrb(exp.sensor, exp.prior, fgrid)
    if fast:
        # Circulant fast path: eigenvalues straight from the spectra.
        from .bounds import probe_backaction_spectrum

        s_dq = probe_backaction_spectrum(exp.sensor, fgrid).values
        s_dx = prior_spectrum(exp.prior, fgrid).values
        if np.any(s_dx <= 0):
            raise ConfigError(
                "config key 'prior': fisher requires a strictly positive prior spectrum"
            )
        hbar = exp.sensor.osc.hbar
        lam_q = 4.0 * exp.grid.dt * s_dq / hbar**2
        lam_c = exp.grid.dt / s_dx
        lam = lam_q + lam_c
        pi_matrix = float(np.mean(1.0 / lam))
        min_eig_q, min_eig_c = float(lam_q.min()), float(lam_c.min())
        min_eig_total = float(lam.min())
    else:
        if exp.grid.n > FISHER_DENSE_CAP:
            raise ConfigError(
                f"config key 'grid.n': {exp.grid.n} exceeds the dense-matrix cap "
                f"{FISHER_DENSE_CAP}; rerun with --fast for the circulant path"
            )
        fm = fisher_matrices(exp.sensor, exp.prior, exp.grid)
        pi_matrix = matrix_point_bound(fm)
        min_eig_q = float(circulant_eigenvalues(fm.f_quantum).min())
        min_eig_c = float(circulant_eigenvalues(fm.f_classical).min())
        min_eig_total = float(circulant_eigenvalues(fm.total).min())
    rel = abs(pi_matrix - pi_spectral) / pi_spectral
    _write_csv(
        out / "fisher_report.csv",
        _meta(exp, fast=fast),
        ["quantity", "value"],
        [
            [
                "matrix_point_bound",
                "point_qcrb",
                "relative_difference",
                "min_eig_f_quantum",
                "min_eig_f_classical",
                "min_eig_f_total",
                "n",
                "dt",
            ],
            [
                pi_matrix,
                pi_spectral,
                rel,
                min_eig_q,
                min_eig_c,
                min_eig_total,
                exp.grid.n,
                exp.grid.dt,
            ],
        ],
    )


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forcebound",
        description="Force-sensing error bounds, simulation, and estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("bound", "compute bound and noise spectra"),
        ("simulate", "write simulated trajectories"),
        ("estimate", "trajectories plus Wiener-smoothed estimates"),
        ("montecarlo", "full Monte Carlo campaign against the bound"),
        ("fisher", "discrete matrix bound vs the spectral bound"),
    ]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--trials", type=int, help="override config trial count")
        p.add_argument("--seed", type=int, help="override config master seed")
        p.add_argument("--threads", type=int, help="worker threads for trials")
        if name == "fisher":
            p.add_argument(
                "--fast",
                action="store_true",
                help="circulant fast path (no dense matrices, no size cap)",
            )
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.trials is not None:
        cfg["trials"] = args.trials
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    try:
        exp = build_experiment(cfg)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "bound":
            cmd_bound(exp, out)
        elif args.command == "simulate":
            cmd_simulate(exp, out, threads)
        elif args.command == "estimate":
            cmd_estimate(exp, out, threads)
        elif args.command == "montecarlo":
            cmd_montecarlo(exp, out, threads)
        elif args.command == "fisher":
            cmd_fisher(exp, out, args.fast)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
