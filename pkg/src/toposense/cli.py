"""Command-line front end: one subcommand per experiment.

Every subcommand writes CSV files (one-line header) plus ``manifest.json``
into ``--out``. Settings come from defaults, then an optional ``--config``
file (``key = value`` lines, or a previous manifest.json), then flags.

Exit codes: 0 success, 1 validation error, 2 numerical error. Failures also
print a one-line JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import typing
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .bayes import (EstimationConfig, PriorInterval, away_from_dips,
                    crb_ratio, dephasing_error_sweep, disorder_error_sweep, error_vs_time,
                    error_vs_truth, posterior_snapshot)
from .boundstates import (analytic_bound_energy, analytic_overlap, numeric_bound_states,
                          siegert_factor)
from .dynamics import (TimeGrid, approx_population, excited_population, lindblad_evolve,
                       rabi_reference)
from .fisher import dip_factor, fisher_approx, fisher_numeric, rabi_fisher
from .io import write_amplitudes, write_table
from .model import (DisorderSpec, ModelParams, NumericalError, build_hamiltonian,
                    eigendecompose, in_gap_mask)

log = logging.getLogger("toposense")

COMMANDS = {
    "bands": "energies and bound-state amplitudes.  bands.csv: index,energy,in_gap,"
             "emitter_weight; amplitudes.csv: index,label,amplitude_plus,amplitude_minus; "
             "bound_state.csv: quantity,analytic,numeric",
    "dynamics": "emitter population.  dynamics.csv: t,p1,p1_approx,p1_rabi[,p1_dephased]",
    "fisher": "Fisher information.  fisher_<which>.csv: t,F,masked,F_approx,A,F_rabi; "
              "fisher_<which>_inset.csv: t,F@<scan value>...",
    "bayes-time": "error vs time.  bayes_time_<which>.csv: t,mean_delta_sq,stderr,"
                  "away_from_dip,crb_ratio,hl_ref,sql_ref",
    "bayes-range": "error vs true value.  bayes_range_<which>.csv: x_true,"
                   "mean_delta_sq@t,stderr@t...",
    "posterior": "posterior snapshots.  posterior_<which>.csv: x,weight@t...",
    "disorder": "error vs time with bond disorder.  disorder_<which>.csv: t,mean_delta_sq,"
                "stderr,hl_ref,sql_ref",
    "dephasing": "error vs time with emitter dephasing.  dephasing_<which>.csv: t,"
                 "mean_delta_sq,stderr,hl_ref,sql_ref",
    "finite-size": "Fisher traces for several N.  finite_size_<which>.csv: t,F@N=<N>...",
    "even-n": "bands and error vs time (g and delta) for even N: bands.csv, amplitudes.csv, "
              "bound_state.csv, bayes_time_g.csv, bayes_time_delta.csv",
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    N: int = 201
    delta: float = 0.2
    g: float = 0.1
    Delta: float = 0.0
    which: str = "g"
    W: float = 0.0
    gamma: float = 0.0
    M: int = 10_000
    n_samples: int = 100
    n_grid: int = 2001
    prior_lo: Optional[float] = None
    prior_hi: Optional[float] = None
    t_min: float = 0.0
    t_max: float = 100.0
    t_step: float = 0.5
    times: Optional[list[float]] = None
    truths: Optional[list[float]] = None
    scan: Optional[list[float]] = None
    sizes: list[int] = dataclasses.field(default_factory=lambda: [100, 400])
    companions: list[float] = dataclasses.field(default_factory=lambda: [1.07, 1.13])
    n_realizations: int = 50
    inference: str = "matched"
    fd_step: float = 1e-5
    seed: int = 0
    workers: int = 1

    def model_params(self, **overrides) -> ModelParams:
        kw = dict(N=self.N, delta=self.delta, g=self.g, Delta=self.Delta)
        kw.update(overrides)
        return ModelParams(**kw)

    def time_grid(self) -> TimeGrid:
        if self.t_step <= 0 or self.t_max <= self.t_min:
            raise ConfigError("need t_step > 0 and t_max > t_min")
        n = int(round((self.t_max - self.t_min) / self.t_step)) + 1
        return TimeGrid(np.linspace(self.t_min, self.t_min + (n - 1) * self.t_step, n))

    def prior(self, which: str) -> PriorInterval:
        default = PriorInterval.default(which, self.n_grid)
        lo = default.lo if self.prior_lo is None else self.prior_lo
        hi = default.hi if self.prior_hi is None else self.prior_hi
        return PriorInterval(lo, hi, self.n_grid)

    def estimation(self, which: Optional[str] = None, t: float = 50.0) -> EstimationConfig:
        which = which or self.which
        params = self.model_params()
        return EstimationConfig(which=which, x_true=getattr(params, which), params=params,
                                t=t, M=self.M, n_samples=self.n_samples, seed=self.seed,
                                prior=self.prior(which), companions=tuple(self.companions))


_FIELD_TYPES = typing.get_type_hints(ExperimentConfig)


def _base_type(tp):
    args = [a for a in typing.get_args(tp) if a is not type(None)]
    if typing.get_origin(tp) is typing.Union:
        return _base_type(args[0])
    return tp


def _parse_value(name: str, text: str):
    tp = _base_type(_FIELD_TYPES[name])
    text = text.strip()
    if text.lower() in ("none", "") and typing.get_origin(_FIELD_TYPES[name]) is typing.Union:
        return None
    try:
        if typing.get_origin(tp) is list:
            (item,) = typing.get_args(tp)
            return [item(float(v)) if item is int else item(v)
                    for v in text.replace(",", " ").split()]
        if tp is int:
            f = float(text)
            if f != int(f):
                raise ValueError
            return int(f)
        return tp(text)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None


def _coerce(name: str, value):
    if name not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key: {name!r}")
    if isinstance(value, str):
        return _parse_value(name, value)
    if isinstance(value, list):
        return _parse_value(name, " ".join(str(v) for v in value))
    if value is None:
        return None
    return _parse_value(name, str(value))


def load_config_file(path) -> dict:
    """``key = value`` lines (``#`` comments) or a manifest.json."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
        data = data.get("config", data)
        return {k: _coerce(k, v) for k, v in data.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = _coerce(k, v)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toposense",
        description="Emitter + SSH waveguide sensing simulations.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="CSV schemas:\n" + "\n".join(f"  {k}: {v}" for k, v in COMMANDS.items())
        + "\n\nEnvironment: TOPOSENSE_WORKERS sets the default worker count.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="key = value file or manifest.json")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    for f in fields(ExperimentConfig):
        flags = dict.fromkeys(["--" + f.name.replace("_", "-"), "--" + f.name])
        parser.add_argument(*flags, dest=f.name, default=None, metavar="VALUE")
    return parser


def resolve_config(args) -> ExperimentConfig:
    import os

    values = {}
    env_workers = os.environ.get("TOPOSENSE_WORKERS")
    if env_workers:
        values["workers"] = _coerce("workers", env_workers)
    if args.config:
        values.update(load_config_file(args.config))
    for f in fields(ExperimentConfig):
        raw = getattr(args, f.name)
        if raw is not None:
            values[f.name] = _coerce(f.name, raw)
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    cfg.model_params()
    if cfg.which not in ("g", "delta"):
        raise ConfigError("which must be 'g' or 'delta'")
    if cfg.inference not in ("matched", "clean"):
        raise ConfigError("inference must be 'matched' or 'clean'")
    if cfg.W < 0 or cfg.gamma < 0:
        raise ConfigError("W and gamma must be >= 0")
    if cfg.M < 1 or cfg.n_samples < 1 or cfg.n_realizations < 1 or cfg.workers < 1:
        raise ConfigError("M, n_samples, n_realizations and workers must be >= 1")
    if cfg.fd_step <= 0:
        raise ConfigError("fd_step must be > 0")
    cfg.prior("g"), cfg.prior("delta")
    cfg.time_grid()


# -- subcommands ---------------------------------------------------------------

def _bands(cfg: ExperimentConfig, out: Path) -> list:
    params = cfg.model_params()
    spectrum = eigendecompose(build_hamiltonian(params))
    files = [write_table(out / "bands.csv", ["index", "energy", "in_gap", "emitter_weight"],
                         [range(spectrum.energies.size), spectrum.energies,
                          in_gap_mask(spectrum.energies, params.delta),
                          spectrum.emitter_weights])]
    pair = numeric_bound_states(spectrum, params)
    files.append(write_amplitudes(out / "amplitudes.csv", pair.amplitudes_plus,
                                  pair.amplitudes_minus))
    files.append(write_table(out / "bound_state.csv", ["quantity", "analytic", "numeric"], [
        ["E_B", "b", "q"],
        [analytic_bound_energy(params), analytic_overlap(params), siegert_factor(params)],
        [pair.E_B, pair.b, pair.q]]))
    return files


def _dynamics(cfg, out):
    params = cfg.model_params()
    grid = cfg.time_grid()
    H = build_hamiltonian(params, DisorderSpec(cfg.W, cfg.seed) if cfg.W else None)
    trace = excited_population(eigendecompose(H), grid)
    header = ["t", "p1", "p1_approx", "p1_rabi"]
    cols = [grid.t, trace.p1, approx_population(params, grid.t), rabi_reference(params, grid.t)]
    if cfg.gamma > 0:
        header.append("p1_dephased")
        cols.append(lindblad_evolve(H, cfg.gamma, grid).p1)
    return [write_table(out / "dynamics.csv", header, cols)]


def _fisher_inset_scan(cfg):
    if cfg.scan:
        return cfg.scan
    return [0.15, 0.2, 0.3] if cfg.which == "g" else [0.05, 0.1, 0.15]


def _fisher(cfg, out):
    params = cfg.model_params()
    grid = cfg.time_grid()
    w = cfg.which
    tr = fisher_numeric(params, w, grid, cfg.fd_step)
    files = [write_table(out / f"fisher_{w}.csv",
                         ["t", "F", "masked", "F_approx", "A", "F_rabi"],
                         [grid.t, tr.values, ~tr.mask, fisher_approx(params, w, grid.t),
                          dip_factor(params, grid.t), rabi_fisher(params, w, grid.t)])]
    other = "delta" if w == "g" else "g"
    scan = _fisher_inset_scan(cfg)
    cols = [fisher_numeric(params.with_value(other, v), w, grid, cfg.fd_step).values for v in scan]
    files.append(write_table(out / f"fisher_{w}_inset.csv",
                             ["t"] + [f"F@{other}={v:g}" for v in scan], [grid.t] + cols))
    return files


def _bayes_times(cfg):
    return cfg.times or [float(t) for t in np.arange(10.0, 100.1, 5.0)]


def _refs(times, values):
    times = np.asarray(times)
    hl = values[0] * (times[0] / times) ** 2
    sql = values[0] * (times[0] / times)
    return hl, sql


def _time_table(path, times, results, extra_header=(), extra_cols=()):
    vals = np.array([r.delta_sq for r in results])
    hl, sql = _refs(times, vals)
    return write_table(path, ["t", "mean_delta_sq", "stderr", *extra_header, "hl_ref", "sql_ref"],
                       [times, vals, [r.stderr for r in results], *extra_cols, hl, sql])


def _bayes_time(cfg, out, which=None):
    which = which or cfg.which
    times = _bayes_times(cfg)
    base = cfg.estimation(which)
    res = error_vs_time(base, times)
    crb = [crb_ratio(base.replace(t=t), r) for t, r in zip(times, res)]
    away = away_from_dips(base.true_params, times, ratios=(1.0,))
    return [_time_table(out / f"bayes_time_{which}.csv", times, res,
                        ["away_from_dip", "crb_ratio"], [away, crb])]


def _bayes_range(cfg, out):
    which = cfg.which
    times = cfg.times or [25.0, 50.0, 100.0]
    truths = cfg.truths or ([0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16] if which == "g"
                            else [0.1, 0.15, 0.2, 0.25, 0.3])
    base = cfg.estimation(which)
    header, cols = ["x_true"], [truths]
    for t in times:
        res = error_vs_truth(base.replace(t=t), truths)
        header += [f"mean_delta_sq@t={t:g}", f"stderr@t={t:g}"]
        cols += [[r.delta_sq for r in res], [r.stderr for r in res]]
    return [write_table(out / f"bayes_range_{which}.csv", header, cols)]


def _posterior(cfg, out):
    which = cfg.which
    times = cfg.times or [20.0, 50.0, 100.0]
    base = cfg.estimation(which)
    posts = [posterior_snapshot(base.replace(t=t)) for t in times]
    return [write_table(out / f"posterior_{which}.csv",
                        ["x"] + [f"weight@t={t:g}" for t in times],
                        [posts[0].x] + [p.weights for p in posts])]


def _disorder(cfg, out):
    if cfg.W <= 0:
        raise ConfigError("disorder needs W > 0")
    times = _bayes_times(cfg)
    res = disorder_error_sweep(cfg.estimation(), cfg.W, cfg.n_realizations, times,
                               cfg.inference, cfg.workers)
    return [_time_table(out / f"disorder_{cfg.which}.csv", times, res)]


def _dephasing(cfg, out):
    if cfg.gamma <= 0:
        raise ConfigError("dephasing needs gamma > 0")
    times = cfg.times or [20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0]
    res = dephasing_error_sweep(cfg.estimation(), cfg.gamma, times, cfg.inference, cfg.workers)
    return [_time_table(out / f"dephasing_{cfg.which}.csv", times, res)]


def _finite_size(cfg, out):
    grid = cfg.time_grid()
    cols = [fisher_numeric(cfg.model_params(N=n), cfg.which, grid, cfg.fd_step).values
            for n in cfg.sizes]
    return [write_table(out / f"finite_size_{cfg.which}.csv",
                        ["t"] + [f"F@N={n}" for n in cfg.sizes], [grid.t] + cols)]


def _even_n(cfg, out):
    if cfg.N % 2:
        raise ConfigError(f"even-n needs an even N, got {cfg.N}")
    files = _bands(cfg, out)
    for which in ("g", "delta"):
        files += _bayes_time(cfg, out, which)
    return files


HANDLERS = {
    "bands": _bands, "dynamics": _dynamics, "fisher": _fisher, "bayes-time": _bayes_time,
    "bayes-range": _bayes_range, "posterior": _posterior, "disorder": _disorder,
    "dephasing": _dephasing, "finite-size": _finite_size, "even-n": _even_n,
}


def manifest(command: str, cfg: ExperimentConfig, files) -> dict:
    return {
        "command": command,
        "config": dataclasses.asdict(cfg),
        "seed": cfg.seed,
        "versions": {"toposense": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "outputs": sorted(Path(f).name for f in files),
    }


def run(command: str, cfg: ExperimentConfig, out) -> list:
    """Run one subcommand; returns the written paths (manifest last)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.workers > 1:
        import os
        os.environ["TOPOSENSE_WORKERS"] = str(cfg.workers)
    log.info("running %s", command)
    files = HANDLERS[command](cfg, out)
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest(command, cfg, files), indent=2, sort_keys=True) + "\n")
    return list(files) + [mpath]


def _fail(exc: Exception, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        run(args.command, cfg, args.out)
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(exc, 2)
    except (ValueError, TypeError, OSError) as exc:
        return _fail(exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
