"""Grid-posterior Bayesian estimation of g or delta from M-shot emitter
readouts.

A single readout time leaves modulo-pi ambiguities in the accumulated phase
E_B t, so by default each estimate combines records taken at t and at the
slightly longer companion times 1.07 t and 1.13 t. Pass ``companions=()`` to
get the bare single-time estimator.
"""
from __future__ import annotations

import dataclasses
import functools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import TimeGrid, lindblad_evolve, population_from_spectral, renewal_population
from .fisher import PARAMETERS, fisher_numeric
from .model import (DisorderSpec, ModelParams, NumericalError, ParameterDomainError,
                    build_hamiltonian, emitter_spectral_data)

P_FLOOR = 1e-12
DEFAULT_COMPANIONS = (1.07, 1.13)
DEFAULT_PRIORS = {"g": (0.0, 0.2), "delta": (0.0, 0.4)}
INFERENCE_MODES = ("matched", "clean")


def default_workers() -> int:
    return max(1, int(os.environ.get("TOPOSENSE_WORKERS", "1")))


def _pmap(fn, items, workers: int):
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


@dataclass(frozen=True)
class PriorInterval:
    """Uniform prior on [lo, hi] discretized on ``n_grid`` points (ends included)."""

    lo: float
    hi: float
    n_grid: int = 2001

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterDomainError(f"prior needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_grid < 2:
            raise ParameterDomainError("prior grid needs at least 2 points")

    @classmethod
    def default(cls, which: str, n_grid: int = 2001) -> "PriorInterval":
        lo, hi = DEFAULT_PRIORS[which]
        return cls(lo, hi, n_grid)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_grid)


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    x: np.ndarray
    weights: np.ndarray

    @classmethod
    def uniform(cls, prior: PriorInterval) -> "PosteriorGrid":
        return cls(prior.points, np.full(prior.n_grid, 1.0 / prior.n_grid))

    @property
    def mean(self) -> float:
        return float(self.weights @ self.x)

    @property
    def variance(self) -> float:
        return float(self.weights @ (self.x - self.mean) ** 2)

    @property
    def mode(self) -> float:
        return float(self.x[np.argmax(self.weights)])


@dataclass(frozen=True, eq=False)
class EstimationResult:
    """Posterior summaries averaged over independent records.

    ``mean`` and ``variance`` are sample averages of the posterior mean and
    variance; ``delta_sq`` is the averaged squared relative error.
    """

    mean: float
    variance: float
    delta_sq: float
    per_sample: np.ndarray = field(repr=False)

    @property
    def stderr(self) -> float:
        n = self.per_sample.size
        return float(self.per_sample.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")


@dataclass(frozen=True)
class EstimationConfig:
    """One estimation experiment.

    ``params`` supplies the chain length, Delta and the fixed (not estimated)
    parameter; its entry for ``which`` is replaced by ``x_true``.
    """

    which: str = "g"
    x_true: float = 0.1
    params: ModelParams = ModelParams()
    t: float = 50.0
    M: int = 10_000
    n_samples: int = 100
    seed: int = 0
    prior: Optional[PriorInterval] = None
    companions: tuple = DEFAULT_COMPANIONS

    def __post_init__(self):
        if self.which not in PARAMETERS:
            raise ParameterDomainError(f"which must be one of {PARAMETERS}")
        if self.M < 1 or self.n_samples < 1:
            raise ParameterDomainError("M and n_samples must be >= 1")
        if self.t < 0:
            raise ParameterDomainError("evolution time must be >= 0")
        if self.prior is None:
            object.__setattr__(self, "prior", PriorInterval.default(self.which))
        if not self.prior.lo <= self.x_true <= self.prior.hi:
            raise ParameterDomainError(f"x_true = {self.x_true} outside the prior")
        object.__setattr__(self, "companions", tuple(float(c) for c in self.companions))

    @property
    def true_params(self) -> ModelParams:
        return self.params.with_value(self.which, self.x_true)

    @property
    def record_times(self) -> np.ndarray:
        return self.t * np.array((1.0,) + self.companions)

    def replace(self, **changes) -> "EstimationConfig":
        return dataclasses.replace(self, **changes)


# -- forward models over the prior grid -------------------------------------

class GridModel:
    """Exact unitary P1 at every prior grid point.

    One diagonalization per grid point; populations at any time are then a
    cheap spectral sum.
    """

    def __init__(self, params: ModelParams, which: str, prior: PriorInterval,
                 disorder: Optional[DisorderSpec] = None, workers: int = 1):
        self.params, self.which, self.prior, self.disorder = params, which, prior, disorder
        x = prior.points
        data = _pmap(functools.partial(_spectral_at, params, which, disorder), list(x), workers)
        self.energies = np.array([d[0] for d in data])
        self.weights = np.array([d[1] for d in data])

    def p1(self, times) -> np.ndarray:
        """Model populations, shape (n_grid, len(times))."""
        return population_from_spectral(self.energies, self.weights, np.atleast_1d(times))


def _spectral_at(params, which, disorder, x):
    return emitter_spectral_data(build_hamiltonian(params.with_value(which, x), disorder))


@functools.lru_cache(maxsize=8)
def clean_grid_model(params: ModelParams, which: str, prior: PriorInterval) -> GridModel:
    return GridModel(params, which, prior, workers=default_workers())


class DephasedGridModel:
    """P1 under emitter dephasing at every prior grid point (renewal route)."""

    def __init__(self, params: ModelParams, which: str, prior: PriorInterval, gamma: float,
                 workers: int = 1, dt: float = 0.01):
        self.params, self.which, self.prior, self.gamma = params, which, prior, gamma
        self.workers, self.dt = workers, dt
        self._cache = {}

    def p1(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        key = tuple(times)
        if key not in self._cache:
            order = np.argsort(times)
            grid = TimeGrid(times[order])
            fn = functools.partial(_renewal_at, self.params, self.which, self.gamma, grid, self.dt)
            rows = np.array(_pmap(fn, list(self.prior.points), self.workers))
            out = np.empty_like(rows)
            out[:, order] = rows
            self._cache = {key: out}
        return self._cache[key]


def _renewal_at(params, which, gamma, grid, dt, x):
    H = build_hamiltonian(params.with_value(which, x))
    return renewal_population(H, gamma, grid, dt)


# -- single-record machinery -------------------------------------------------

def simulate_record(p1_true: float, M: int, rng: np.random.Generator) -> int:
    """Number of excited outcomes in M projective readouts."""
    if not -1e-9 <= p1_true <= 1 + 1e-9:
        raise ParameterDomainError(f"probability out of range: {p1_true}")
    return int(rng.binomial(M, min(max(p1_true, 0.0), 1.0)))


def posterior_update(m: int, M: int, model_p1: np.ndarray,
                     prior: PosteriorGrid) -> PosteriorGrid:
    """Bayes update with the binomial likelihood, in log space."""
    p = np.clip(np.asarray(model_p1, dtype=float), P_FLOOR, 1 - P_FLOOR)
    with np.errstate(divide="ignore"):
        log_w = np.log(prior.weights) + m * np.log(p) + (M - m) * np.log1p(-p)
    top = np.max(log_w)
    if not np.isfinite(top):
        raise NumericalError("posterior vanished on the whole grid")
    w = np.exp(log_w - top)
    total = w.sum()
    if not total > 0:
        raise NumericalError("posterior normalization underflow")
    return PosteriorGrid(prior.x, w / total)


def squared_relative_error(post: PosteriorGrid, x_true: float) -> float:
    """(posterior variance + bias^2) / x_true^2."""
    if x_true == 0:
        raise ParameterDomainError("relative error undefined for x_true = 0")
    mu = post.mean
    return (post.variance + (mu - x_true) ** 2) / x_true ** 2


def sample_seeds(seed: int, n: int) -> list:
    return np.random.SeedSequence(seed).spawn(n)


# -- pipelines ---------------------------------------------------------------

def unitary_data(config: EstimationConfig, disorder: Optional[DisorderSpec] = None):
    """Callable times -> exact P1 of the true system."""
    H = build_hamiltonian(config.true_params, disorder)
    energies, weights = emitter_spectral_data(H)
    return lambda times: population_from_spectral(energies, weights, np.asarray(times))


def _run_samples(config: EstimationConfig, model_rows: np.ndarray,
                 data_p1: np.ndarray) -> EstimationResult:
    prior = PosteriorGrid.uniform(config.prior)
    errs = np.empty(config.n_samples)
    means = np.empty(config.n_samples)
    variances = np.empty(config.n_samples)
    for s, ss in enumerate(sample_seeds(config.seed, config.n_samples)):
        rng = np.random.default_rng(ss)
        post = prior
        for k in range(len(data_p1)):
            m = simulate_record(data_p1[k], config.M, rng)
            post = posterior_update(m, config.M, model_rows[:, k], post)
        means[s], variances[s] = post.mean, post.variance
        errs[s] = squared_relative_error(post, config.x_true)
    return EstimationResult(float(means.mean()), float(variances.mean()), float(errs.mean()), errs)


def average_error(config: EstimationConfig, model=None,
                  data: Optional[Callable] = None) -> EstimationResult:
    """Mean squared relative error over ``n_samples`` independent estimates.

    ``model`` provides ``p1(times) -> (n_grid, n_times)`` for the likelihood
    (default: the clean unitary model); ``data`` maps times to the true P1
    used to draw the counts (default: the clean system at ``x_true``).
    Each sample uses its own RNG substream spawned from ``config.seed``.
    """
    if model is None:
        model = clean_grid_model(config.params, config.which, config.prior)
    if data is None:
        data = unitary_data(config)
    times = config.record_times
    return _run_samples(config, model.p1(times), np.asarray(data(times)))


def error_vs_time(config: EstimationConfig, times: Sequence[float], model=None,
                  data: Optional[Callable] = None) -> list:
    return [average_error(config.replace(t=float(t)), model, data) for t in times]


def error_vs_truth(config: EstimationConfig, truths: Sequence[float], model=None) -> list:
    """Mean error as a function of the true parameter value (same prior grid)."""
    return [average_error(config.replace(x_true=float(x)), model) for x in truths]


def sequential_estimate(config: EstimationConfig, times: Sequence[float], model=None,
                        data: Optional[Callable] = None) -> PosteriorGrid:
    """Chain one M-shot record per listed time into a single posterior.

    Uses the first RNG substream of ``config.seed``; ``config.companions`` is
    ignored since the times are given explicitly.
    """
    times = np.asarray(times, dtype=float)
    if model is None:
        model = clean_grid_model(config.params, config.which, config.prior)
    if data is None:
        data = unitary_data(config)
    rows = model.p1(times)
    p_true = np.asarray(data(times))
    rng = np.random.default_rng(sample_seeds(config.seed, 1)[0])
    post = PosteriorGrid.uniform(config.prior)
    for k in range(times.size):
        post = posterior_update(simulate_record(p_true[k], config.M, rng), config.M, rows[:, k], post)
    return post


def secondary_mode_ratio(post: PosteriorGrid) -> float:
    """Height of the second-highest local maximum relative to the highest
    (0 for a unimodal posterior)."""
    from scipy.signal import find_peaks

    w = post.weights
    idx, _ = find_peaks(np.concatenate(([-1.0], w, [-1.0])))
    heights = np.sort(w[idx - 1])[::-1]
    return float(heights[1] / heights[0]) if heights.size > 1 else 0.0


def posterior_snapshot(config: EstimationConfig, model=None) -> PosteriorGrid:
    """Posterior of one estimate at ``config.t`` (with companions)."""
    return sequential_estimate(config, config.record_times, model)


def realization_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence([seed, r]).generate_state(1, np.uint64)[0])


def _check_inference(inference: str):
    if inference not in INFERENCE_MODES:
        raise ValueError(f"inference must be one of {INFERENCE_MODES}")


def disorder_error_sweep(config: EstimationConfig, W: float, n_realizations: int,
                         times: Sequence[float], inference: str = "matched",
                         workers: int = 1) -> list:
    """Disorder-averaged error at several evolution times.

    Each realization draws fresh bond disorder; counts come from the
    disordered chain. With ``inference="matched"`` the likelihood is built
    from the same disordered chain (the device is characterized), with
    ``"clean"`` from the disorder-free model. Shot noise uses the same sample
    substreams for every realization, so W = 0 reproduces ``average_error``.
    """
    _check_inference(inference)
    if n_realizations < 1:
        raise ParameterDomainError("need at least one disorder realization")
    clean = None
    errs = [[] for _ in times]
    means = [[] for _ in times]
    variances = [[] for _ in times]
    for r in range(n_realizations):
        disorder = DisorderSpec(W, realization_seed(config.seed, r))
        if inference == "matched" and W > 0:
            model = GridModel(config.params, config.which, config.prior, disorder, workers)
        else:
            clean = clean or clean_grid_model(config.params, config.which, config.prior)
            model = clean
        data = unitary_data(config, disorder)
        for i, res in enumerate(error_vs_time(config, times, model, data)):
            errs[i].append(res.per_sample)
            means[i].append(res.mean)
            variances[i].append(res.variance)
    return [EstimationResult(float(np.mean(m)), float(np.mean(v)),
                             float(np.concatenate(e).mean()), np.concatenate(e))
            for e, m, v in zip(errs, means, variances)]


def disorder_averaged_error(config: EstimationConfig, W: float, n_realizations: int,
                            inference: str = "matched", workers: int = 1) -> EstimationResult:
    return disorder_error_sweep(config, W, n_realizations, [config.t], inference, workers)[0]


def dephased_data(config: EstimationConfig, gamma: float, times: Sequence[float]):
    """Callable times -> P1' of the true system, from one density-matrix run
    covering every record time of every sweep point."""
    all_times = np.unique(np.concatenate(
        [config.replace(t=float(t)).record_times for t in times]))
    H = build_hamiltonian(config.true_params)
    trace = lindblad_evolve(H, gamma, TimeGrid(all_times))
    table = dict(zip(np.round(all_times, 12), trace.p1))
    return lambda ts: np.array([table[round(float(x), 12)] for x in np.atleast_1d(ts)])


def dephasing_error_sweep(config: EstimationConfig, gamma: float, times: Sequence[float],
                          inference: str = "matched", workers: int = 1) -> list:
    """Error at several evolution times when the emitter dephases at rate gamma.

    Counts are drawn from the integrated master equation. ``"matched"``
    inference uses the dephased model at the same gamma (renewal route),
    ``"clean"`` the unitary one.
    """
    _check_inference(inference)
    if gamma < 0:
        raise ParameterDomainError("dephasing rate must be >= 0")
    data = dephased_data(config, gamma, times)
    if inference == "clean" or gamma == 0:
        model = clean_grid_model(config.params, config.which, config.prior)
    else:
        model = DephasedGridModel(config.params, config.which, config.prior, gamma, workers)
        all_times = np.concatenate([config.replace(t=float(t)).record_times for t in times])
        rows = model.p1(all_times)
        table = {round(float(x), 12): rows[:, k] for k, x in enumerate(all_times)}
        model = _TableModel(table)
    return error_vs_time(config, times, model, data)


class _TableModel:
    def __init__(self, table):
        self.table = table

    def p1(self, times):
        return np.stack([self.table[round(float(x), 12)] for x in np.atleast_1d(times)], axis=1)


def dephasing_error(config: EstimationConfig, gamma: float, inference: str = "matched",
                    workers: int = 1) -> EstimationResult:
    return dephasing_error_sweep(config, gamma, [config.t], inference, workers)[0]


def total_fisher(config: EstimationConfig) -> float:
    """Sum of the exact Fisher information over the record times at x_true."""
    tr = fisher_numeric(config.true_params, config.which, TimeGrid(config.record_times),
                        require_gap=False)
    return float(np.nansum(tr.values))


def crb_ratio(config: EstimationConfig, result: EstimationResult) -> float:
    """Averaged posterior variance times M times the total Fisher information;
    1 when the Cramer-Rao bound is saturated."""
    return result.variance * config.M * total_fisher(config)


def dip_times(params: ModelParams, t_max: float) -> np.ndarray:
    from .boundstates import analytic_bound_energy

    period = np.pi / analytic_bound_energy(params)
    return period * np.arange(1, int(t_max / period) + 1)


def away_from_dips(params: ModelParams, times, ratios=(1.0,) + DEFAULT_COMPANIONS,
                   min_phase: float = 0.3) -> np.ndarray:
    """Mask of times whose record times all keep E_B t at least ``min_phase``
    away from a multiple of pi."""
    from .boundstates import analytic_bound_energy

    E = analytic_bound_energy(params)
    times = np.asarray(times, dtype=float)
    ok = np.ones(times.shape, dtype=bool)
    for r in ratios:
        phase = np.mod(E * r * times, np.pi)
        ok &= np.minimum(phase, np.pi - phase) >= min_phase
    return ok
