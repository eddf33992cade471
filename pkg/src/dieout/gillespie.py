"""Exact event-by-event simulation of the locality epidemic.

The epidemic is a continuous-time Markov chain over per-node infection
counts: node u gains an infection at rate
``[ (beta(n) W + beta_int(n) diag(D)) X ]_u`` and loses one at rate
``delta * X_u``, where n is the system-wide total.  Events are drawn
one at a time with exponential waiting times (no leaping, no
approximation); the all-zero state is absorbing.

Because both infectiousness functions depend on the total n, every
birth rate rescales at every event.  The simulator therefore caches the
pressure vector W @ X and the modulation products D * X, updating only
the column touched by an event, and applies the profile values as
scalar factors when rates are needed.

Runs are reproducible: the generator for run ``i`` is derived from
``SeedSequence((master_seed, i))``, so any subset of runs can be
recomputed independently and in any order (including across worker
processes).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .graphs import DiagonalModulation, LocalityGraph
from .rates import Constant, RateProfile

# Cached pressure vectors are refreshed from scratch at this cadence to
# stop float drift from accumulating over long runs.
_REFRESH_EVERY = 8192


@dataclass(frozen=True)
class EpidemicState:
    """Per-node infection counts with the system total cached."""

    counts: np.ndarray
    total: int

    @classmethod
    def from_counts(cls, counts) -> "EpidemicState":
        arr = np.asarray(counts, dtype=np.int64)
        if (arr < 0).any():
            raise ValueError("counts must be nonnegative")
        arr = arr.copy()
        arr.setflags(write=False)
        return cls(arr, int(arr.sum()))

    @property
    def extinct(self) -> bool:
        return self.total == 0


@dataclass(frozen=True)
class SimConfig:
    """Configuration of one stochastic run ensemble.

    ``initial`` pins the initial counts exactly; when None, all ``n0``
    cases are placed on one node chosen uniformly at random per run.
    """

    beta: RateProfile
    beta_int: RateProfile
    delta: float
    t_max: float
    n0: int
    master_seed: int
    modulation: DiagonalModulation | None = None
    initial: np.ndarray | None = None
    record_events: bool = False

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.n0 < 1:
            raise ValueError("n0 must be at least 1")
        if self.initial is not None:
            arr = np.asarray(self.initial, dtype=np.int64).copy()
            if (arr < 0).any():
                raise ValueError("initial counts must be nonnegative")
            if int(arr.sum()) != self.n0:
                raise ValueError("initial counts must sum to n0")
            arr.setflags(write=False)
            object.__setattr__(self, "initial", arr)


@dataclass
class Trajectory:
    """One realized run.

    ``grid_totals`` samples the right-continuous total on the output
    grid; ``events`` holds (time, node, +-1) tuples when event
    recording was requested.  Exactly one of ``extinct_at`` /
    ``truncated_at`` is set.
    """

    run_index: int
    initial: np.ndarray
    extinct_at: float | None
    truncated_at: float | None
    grid: np.ndarray | None = None
    grid_totals: np.ndarray | None = None
    events: list[tuple[float, int, int]] | None = None
    final_counts: np.ndarray | None = None


@dataclass
class EnsembleSummary:
    """Cross-run statistics on a fixed time grid.

    The envelope discards the top and bottom 2.5% of runs at each grid
    point (``floor(0.025 * runs)`` from each side) before taking the
    extremes; the mean is over all runs.  Extinct runs keep
    contributing zeros, so the envelope can show die-outs inside a
    growing ensemble.
    """

    time_grid: np.ndarray
    mean_total: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray
    survival_fraction: np.ndarray
    extinction_times: np.ndarray
    run_count: int
    master_seed: int
    per_run_totals: np.ndarray | None = None
    run_extinctions: list[tuple[int, float]] | None = None
    run_events: list[list[tuple[float, int, int]]] | None = None


@dataclass(frozen=True)
class SurvivalEstimate:
    probability: float
    stderr: float
    runs: int
    horizon: float


def run_rng(master_seed: int, run_index: int) -> np.random.Generator:
    """Independent, reproducible stream for one run."""
    return np.random.default_rng(
        np.random.SeedSequence((int(master_seed), int(run_index))))


def trimmed_interval(values, trim_fraction: float = 0.025
                     ) -> tuple[float, float]:
    """Extremes after discarding ``floor(trim_fraction * len)`` entries
    from each side; the same rule the ensemble envelopes use, applied
    e.g. to extinction times."""
    arr = np.sort(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("no values to summarize")
    k = int(math.floor(trim_fraction * arr.size))
    return float(arr[k]), float(arr[arr.size - 1 - k])


def node_rates(state: EpidemicState, g: LocalityGraph,
               modulation: DiagonalModulation | None, beta: RateProfile,
               beta_int: RateProfile, delta: float):
    """Instantaneous birth/death rates from scratch (reference path).

    Returns (birth_rates, death_rates, total_rate).  The simulator's
    incremental caches must agree with this to rounding error.
    """
    counts = np.asarray(state.counts, dtype=float)
    n = state.total
    if n == 0:
        zeros = np.zeros(g.node_count)
        return zeros, zeros.copy(), 0.0
    d = (modulation.values if modulation is not None
         else np.ones(g.node_count))
    pressure = np.asarray(g.weights @ counts).ravel()
    birth = beta.value(n) * pressure + beta_int.value(n) * (d * counts)
    death = delta * counts
    return birth, death, float(birth.sum() + death.sum())


def step(state: EpidemicState, rates, rng: np.random.Generator):
    """Draw one exponential waiting time and one event category.

    ``rates`` is the (birth, death, total) triple from
    :func:`node_rates`.  Returns (dt, node, delta_count).
    """
    birth, death, total = rates
    if total <= 0:
        raise ValueError("no transitions available from an absorbing state")
    dt = rng.exponential(1.0 / total)
    u = rng.random() * total
    birth_sum = float(birth.sum())
    if u < birth_sum:
        node = int(np.searchsorted(np.cumsum(birth), u, side="right"))
        node = min(node, birth.size - 1)
        return dt, node, +1
    u -= birth_sum
    node = int(np.searchsorted(np.cumsum(death), u, side="right"))
    node = min(node, death.size - 1)
    return dt, node, -1


def _initial_counts(cfg: SimConfig, n_nodes: int,
                    rng: np.random.Generator) -> np.ndarray:
    if cfg.initial is not None:
        if cfg.initial.size != n_nodes:
            raise ValueError("initial vector length does not match graph")
        return np.asarray(cfg.initial, dtype=np.int64).copy()
    counts = np.zeros(n_nodes, dtype=np.int64)
    counts[int(rng.integers(n_nodes))] = cfg.n0
    return counts


def simulate_run(cfg: SimConfig, g: LocalityGraph, run_index: int,
                 grid: np.ndarray | None = None) -> Trajectory:
    """Simulate one run until extinction or t_max.

    Args:
        cfg: run configuration; the per-run stream comes from
            (cfg.master_seed, run_index).
        g: locality graph.
        run_index: run number within the ensemble.
        grid: optional increasing sample times; totals are recorded as
            a right-continuous step function.

    Returns:
        Trajectory with extinct_at set iff the run hit the all-zero
        state by t_max, else truncated_at = t_max.
    """
    rng = run_rng(cfg.master_seed, run_index)
    n_nodes = g.node_count
    counts = _initial_counts(cfg, n_nodes, rng)
    initial = counts.copy()

    weights = g.weights
    if g.is_dense:
        columns = None
    else:
        csc = weights.tocsc()  # per-column slices for pressure updates
        columns = csc.indptr, csc.indices, csc.data
    col_sums = np.asarray(weights.sum(axis=0)).ravel()
    d = (cfg.modulation.values if cfg.modulation is not None
         else np.ones(n_nodes))
    beta_f = cfg.beta.as_float_fn()
    betaint_f = cfg.beta_int.as_float_fn()
    delta = float(cfg.delta)

    fcounts = counts.astype(float)
    pressure = np.asarray(weights @ fcounts).ravel()  # W @ X, per event
    pressure_sum = float(pressure.sum())
    mod_counts = d * fcounts                          # D * X, per event
    mod_sum = float(mod_counts.sum())
    n = int(counts.sum())

    record = cfg.record_events
    events: list[tuple[float, int, int]] | None = [] if record else None
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        totals = np.zeros(grid.size, dtype=np.int64)
    else:
        totals = None
    gi = 0  # next grid index to fill

    t = 0.0
    t_max = float(cfg.t_max)
    extinct_at: float | None = None
    birth_buf = np.empty(n_nodes)
    since_refresh = 0

    while True:
        if n == 0:
            extinct_at = t
            break
        b = beta_f(n)
        bi = betaint_f(n)
        birth_total = b * pressure_sum + bi * mod_sum
        total_rate = birth_total + delta * n

        t_next = t + rng.exponential(1.0 / total_rate)
        if grid is not None:
            while gi < grid.size and grid[gi] < t_next:
                totals[gi] = n
                gi += 1
        if t_next > t_max:
            t = t_max
            break
        t = t_next

        u = rng.random() * total_rate
        if u < birth_total:
            np.multiply(pressure, b, out=birth_buf)
            if bi != 0.0:
                birth_buf += bi * mod_counts
            np.maximum(birth_buf, 0.0, out=birth_buf)
            cum = np.cumsum(birth_buf)
            node = int(np.searchsorted(cum, u, side="right"))
            node = min(node, n_nodes - 1)
            delta_count = 1
        else:
            u2 = (u - birth_total) / delta
            cum = np.cumsum(fcounts)
            node = int(np.searchsorted(cum, u2, side="right"))
            node = min(node, n_nodes - 1)
            while fcounts[node] <= 0:  # boundary rounding guard
                node -= 1
            delta_count = -1

        counts[node] += delta_count
        fcounts[node] += delta_count
        n += delta_count
        if columns is None:
            col_update = weights[:, node]
            if delta_count > 0:
                pressure += col_update
            else:
                pressure -= col_update
        else:
            indptr, indices, data = columns
            sl = slice(indptr[node], indptr[node + 1])
            if delta_count > 0:
                pressure[indices[sl]] += data[sl]
            else:
                pressure[indices[sl]] -= data[sl]
        if delta_count > 0:
            pressure_sum += col_sums[node]
            mod_counts[node] += d[node]
            mod_sum += d[node]
        else:
            pressure_sum -= col_sums[node]
            mod_counts[node] -= d[node]
            mod_sum -= d[node]
        if record:
            events.append((t, node, delta_count))

        since_refresh += 1
        if since_refresh >= _REFRESH_EVERY:
            since_refresh = 0
            pressure = np.asarray(weights @ fcounts).ravel()
            pressure_sum = float(pressure.sum())
            mod_counts = d * fcounts
            mod_sum = float(mod_counts.sum())

    if grid is not None:
        # remaining grid points see the final (absorbed or frozen) total
        totals[gi:] = n

    return Trajectory(
        run_index=run_index,
        initial=initial,
        extinct_at=extinct_at,
        truncated_at=None if extinct_at is not None else t_max,
        grid=grid,
        grid_totals=totals,
        events=events,
        final_counts=counts,
    )


def _run_for_ensemble(args):
    cfg, g, run_index, grid = args
    traj = simulate_run(cfg, g, run_index, grid=grid)
    return run_index, traj.grid_totals, traj.extinct_at, traj.events


def run_ensemble(cfg: SimConfig, g: LocalityGraph, runs: int,
                 grid: np.ndarray, threads: int = 1,
                 keep_per_run: bool = False) -> EnsembleSummary:
    """Simulate an ensemble and aggregate trimmed envelopes on a grid.

    Args:
        cfg: shared run configuration.
        g: locality graph.
        runs: ensemble size; at least 40 so the 2.5% trimming removes
            at least one run per side.
        grid: increasing sample times.
        threads: worker processes; 0 picks the machine default, 1 runs
            inline.  Results are independent of the worker count.
        keep_per_run: attach the per-run grid totals and per-run
            extinction times (needed for trajectory export).
    """
    if runs < 40:
        raise ValueError("need at least 40 runs for 2.5% trimming")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a nonempty increasing 1-D array")

    totals = np.zeros((runs, grid.size), dtype=np.int64)
    extinctions: list[tuple[int, float]] = []
    events: list | None = [None] * runs if cfg.record_events else None
    if threads == 1:
        for i in range(runs):
            traj = simulate_run(cfg, g, i, grid=grid)
            totals[i] = traj.grid_totals
            if traj.extinct_at is not None:
                extinctions.append((i, traj.extinct_at))
            if events is not None:
                events[i] = traj.events
    else:
        workers = threads if threads > 0 else None
        jobs = ((cfg, g, i, grid) for i in range(runs))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for run_index, row, extinct_at, run_ev in pool.map(
                    _run_for_ensemble, jobs, chunksize=16):
                totals[run_index] = row
                if extinct_at is not None:
                    extinctions.append((run_index, extinct_at))
                if events is not None:
                    events[run_index] = run_ev
        extinctions.sort()

    trim = int(math.floor(0.025 * runs))
    sorted_totals = np.sort(totals, axis=0)
    lower = sorted_totals[trim, :].astype(float)
    upper = sorted_totals[runs - 1 - trim, :].astype(float)
    mean = totals.mean(axis=0)
    survival = (totals > 0).mean(axis=0)

    return EnsembleSummary(
        time_grid=grid,
        mean_total=mean,
        lower95=lower,
        upper95=upper,
        survival_fraction=survival,
        extinction_times=np.array(sorted(t for _, t in extinctions)),
        run_count=runs,
        master_seed=cfg.master_seed,
        per_run_totals=totals if keep_per_run else None,
        run_extinctions=extinctions if keep_per_run else None,
        run_events=events,
    )


def estimate_survival_probability(cfg: SimConfig, g: LocalityGraph,
                                  runs: int, horizon: float,
                                  threads: int = 1) -> SurvivalEstimate:
    """Fraction of runs with active cases at the horizon, with its
    binomial standard error."""
    if not 0 < horizon <= cfg.t_max:
        raise ValueError("horizon must lie in (0, t_max]")
    clipped = replace(cfg, t_max=horizon, record_events=False)
    alive = 0
    if threads == 1:
        for i in range(runs):
            traj = simulate_run(clipped, g, i)
            alive += traj.extinct_at is None
    else:
        workers = threads if threads > 0 else None
        jobs = ((clipped, g, i, None) for i in range(runs))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for _, _, extinct_at, _ in pool.map(_run_for_ensemble, jobs,
                                                chunksize=16):
                alive += extinct_at is None
    p = alive / runs
    return SurvivalEstimate(probability=p,
                            stderr=math.sqrt(p * (1.0 - p) / runs),
                            runs=runs, horizon=horizon)


def _constant_value(profile_or_value, name: str) -> float:
    if isinstance(profile_or_value, RateProfile):
        if not isinstance(profile_or_value, Constant):
            raise ValueError(
                f"{name} must be a constant profile for the mean-field "
                "trajectory")
        return float(profile_or_value.c)
    return float(profile_or_value)


def mean_field_trajectory(g: LocalityGraph, beta_const, betaint_const,
                          delta: float, x0, grid) -> np.ndarray:
    """Expected trajectory of the linear ODE for constant profiles.

    Integrates d E[X]/dt = (beta W + beta_int I - delta I) E[X] on the
    grid via the matrix exponential (one propagator per distinct step,
    reused across a uniform grid).  Projected on the Perron eigenvector
    q of a symmetric W, the solution is the scalar exponential
    exp(t (beta lambda_r + beta_int - delta)) * q.X(0).

    Args:
        beta_const, betaint_const: floats, or Constant profiles.
        x0: initial expected counts per node.
        grid: increasing times (first entry may be 0).

    Returns:
        Array of shape (len(grid), node_count).
    """
    beta = _constant_value(beta_const, "beta")
    beta_int = _constant_value(betaint_const, "beta_int")
    if delta <= 0:
        raise ValueError("delta must be positive")
    grid = np.asarray(grid, dtype=float)
    x = np.asarray(x0, dtype=float)
    if x.shape != (g.node_count,):
        raise ValueError("x0 length does not match the graph")

    gen = beta * g.dense_weights().astype(float)
    gen = gen + (beta_int - delta) * np.eye(g.node_count)

    out = np.empty((grid.size, g.node_count))
    steps = np.diff(grid, prepend=0.0)
    propagators: dict[float, np.ndarray] = {}
    cur = x
    for k, dt in enumerate(steps):
        if dt != 0.0:
            prop = propagators.get(dt)
            if prop is None:
                prop = scipy.linalg.expm(gen * dt)
                propagators[dt] = prop
            cur = prop @ cur
        out[k] = cur
    return out
