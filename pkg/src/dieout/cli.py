"""Command-line front end.

Subcommands::

    dieout classify  --config cfg.ini [--out DIR]
    dieout simulate  --config cfg.ini [--out DIR] [--seed N] [--threads N]
    dieout hitting   --config cfg.ini [--out DIR]
    dieout asymptote --config cfg.ini [--out DIR]
    dieout meanfield --config cfg.ini [--out DIR]

All numeric output is plain decimal (no locale formatting); given the
same configuration and seed the emitted CSV files are byte-identical
across runs.  Version information lives in ``meta.json``, never in the
data files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from .chains import (BirthDeathSpec, InfiniteHittingTimeError,
                     PrecisionConfig, asymptote_ratio, hitting_table)
from .config import (ConfigError, ExperimentConfig, config_sha256,
                     load_config, load_graph, load_modulation, load_profiles,
                     simulation_grid)
from .gillespie import (SimConfig, mean_field_trajectory, run_ensemble,
                        trimmed_interval)
from .graphs import (EdgeListError, SpectralError, is_strongly_connected,
                     spectral_radius)
from .rates import (Constant, ProfileError, parse_parameter, parse_profile)
from .regime import (classify_decoupled, classify_general, classify_scalar_D,
                     classify_symmetric)


def _fmt(x) -> str:
    """Locale-independent decimal rendering for CSV cells."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _fmt_precise(x, digits: int) -> str:
    """Full-precision decimal string for kernel numbers."""
    if isinstance(x, Fraction):
        with mpmath.mp.workprec(int(digits * 3.33) + 16):
            return mpmath.nstr(
                mpmath.mpf(x.numerator) / x.denominator, digits,
                strip_zeros=True)
    return mpmath.nstr(x, digits, strip_zeros=True)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_meta(out_dir: Path, command: str, cfg: ExperimentConfig,
                extra: dict | None = None) -> None:
    import scipy
    meta = {
        "command": command,
        "config_sha256": config_sha256(cfg),
        "versions": {
            "dieout": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "mpmath": mpmath.__version__,
        },
    }
    if extra:
        meta.update(extra)
    with open(out_dir / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(cfg: ExperimentConfig, args) -> Path:
    out = Path(args.out) if args.out else cfg.resolve(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_classify(cfg: ExperimentConfig, args) -> int:
    """Classify the epidemic regime; one JSON record per applicable method."""
    g = load_graph(cfg)
    modulation = load_modulation(cfg, g)
    beta, beta_int = load_profiles(cfg)
    beta_inf, betaint_inf = beta.limit, beta_int.limit
    delta = float(parse_parameter(cfg.dynamics.delta))
    tol = cfg.classify.boundary_tol
    stol = cfg.classify.spectral_tol

    reports = []
    dense = g.dense_weights()
    symmetric = bool(np.allclose(dense, dense.T))
    identity_mod = modulation.is_scalar and modulation.values[0] == 1.0
    general = classify_general(g, modulation, beta_inf, betaint_inf, delta,
                               boundary_tol=tol, spectral_tol=stol)
    if symmetric and identity_mod:
        reports.append(classify_symmetric(
            _symmetric_lambda(g, stol), beta_inf, betaint_inf, delta,
            boundary_tol=tol))
    reports.append(general)
    if modulation.is_scalar:
        reports.append(classify_scalar_D(
            g, float(modulation.values[0]), beta_inf, betaint_inf, delta,
            boundary_tol=tol, spectral_tol=stol))
    reports.append(classify_decoupled(g, modulation, beta_inf, betaint_inf,
                                      delta, boundary_tol=tol,
                                      spectral_tol=stol))
    records = [r.as_record() for r in reports]
    text = json.dumps(records, indent=2)
    print(text)
    if args.out or cfg.output.directory:
        out = _out_dir(cfg, args)
        (out / "classify.json").write_text(text + "\n", encoding="utf-8")
        _write_meta(out, "classify", cfg)
    if not is_strongly_connected(g):
        print("warning: graph is not strongly connected; spectral "
              "positivity guarantees do not apply", file=sys.stderr)
    return 0


def _symmetric_lambda(g, spectral_tol: float) -> float:
    return spectral_radius(g.weights, tol=spectral_tol).radius


def _sim_config(cfg: ExperimentConfig, g, args) -> SimConfig:
    beta, beta_int = load_profiles(cfg)
    modulation = load_modulation(cfg, g)
    sim = cfg.simulation
    seed = args.seed if args.seed is not None else sim.master_seed
    initial = None
    if sim.initial_file:
        table = {}
        with open(cfg.resolve(sim.initial_file), "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if line:
                    lab, count = line.split()
                    table[lab] = int(count)
        initial = np.array([table.get(lab, 0) for lab in g.labels],
                           dtype=np.int64)
    return SimConfig(
        beta=beta, beta_int=beta_int,
        delta=float(parse_parameter(cfg.dynamics.delta)),
        t_max=sim.t_max, n0=sim.n0 if initial is None else int(initial.sum()),
        master_seed=seed, modulation=modulation, initial=initial,
        record_events=sim.record_events)


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    """Run the ensemble and write trajectory/summary/extinction CSVs."""
    g = load_graph(cfg)
    sim_cfg = _sim_config(cfg, g, args)
    grid = simulation_grid(cfg.simulation)
    summary = run_ensemble(sim_cfg, g, cfg.simulation.runs, grid,
                           threads=args.threads, keep_per_run=True)
    out = _out_dir(cfg, args)

    _write_csv(out / "trajectories.csv", ["t", "run_id", "total"],
               ((_fmt(t), run, int(total))
                for run in range(summary.run_count)
                for t, total in zip(grid, summary.per_run_totals[run])))
    _write_csv(out / "summary.csv",
               ["t", "mean", "lower95", "upper95", "survival_fraction"],
               ((_fmt(t), _fmt(m), _fmt(lo), _fmt(hi), _fmt(sv))
                for t, m, lo, hi, sv in zip(
                    grid, summary.mean_total, summary.lower95,
                    summary.upper95, summary.survival_fraction)))
    _write_csv(out / "extinctions.csv", ["run_id", "t_extinct"],
               ((run, _fmt(t)) for run, t in summary.run_extinctions))
    if summary.run_events is not None:
        event_dir = out / "events"
        event_dir.mkdir(exist_ok=True)
        for run, events in enumerate(summary.run_events):
            _write_csv(event_dir / f"run_{run:05d}.csv",
                       ["t", "node_label", "delta"],
                       ((_fmt(t), g.labels[node], dc)
                        for t, node, dc in events))
    extra = {
        "master_seed": sim_cfg.master_seed,
        "runs": summary.run_count,
        "extinct_runs": len(summary.run_extinctions),
    }
    if summary.extinction_times.size >= 40:
        lo, hi = trimmed_interval(summary.extinction_times)
        extra["extinction_time_95"] = [lo, hi]
    _write_meta(out, "simulate", cfg, extra)
    print(f"simulate: {summary.run_count} runs, "
          f"{len(summary.run_extinctions)} extinct by t={sim_cfg.t_max}, "
          f"outputs in {out}")
    return 0


def _precision_from(section) -> PrecisionConfig:
    kwargs = dict(mode=section.mode, bits=section.bits,
                  series_rel_tol=section.rel_tol)
    if hasattr(section, "max_terms"):
        kwargs["max_terms"] = section.max_terms
    return PrecisionConfig(**kwargs)


def cmd_hitting(cfg: ExperimentConfig, args) -> int:
    """Write the certified S_n / E[T_n] table for the configured chain."""
    if not cfg.hitting.gamma:
        raise ConfigError("[hitting] gamma is required")
    gamma = parse_profile(cfg.hitting.gamma, base_dir=cfg.base_dir)
    spec = BirthDeathSpec(gamma, parse_parameter(cfg.dynamics.delta))
    precision = _precision_from(cfg.hitting)
    table = hitting_table(spec, cfg.hitting.n_max, precision)
    out = _out_dir(cfg, args)
    digits = precision.decimal_digits
    _write_csv(out / "hitting.csv", ["n", "S_n", "T_n", "certified"],
               ((n + 1, _fmt_precise(s, digits), _fmt_precise(t, digits),
                 _fmt(c))
                for n, (s, t, c) in enumerate(
                    zip(table.S, table.T, table.row_certified))))
    _write_meta(out, "hitting", cfg, {
        "certified": table.certified,
        "truncated_at": table.truncated_at,
    })
    print(f"hitting: {table.n_max} rows "
          f"({'certified' if table.certified else 'NOT all certified'}), "
          f"series truncated at index {table.truncated_at}, "
          f"output in {out}")
    return 0


def cmd_asymptote(cfg: ExperimentConfig, args) -> int:
    """Write delta*E[T_n]/ln(n) ratio columns for several profiles."""
    asym = cfg.asymptote
    if not asym.gammas:
        raise ConfigError("[asymptote] gammas is required")
    if asym.n_values:
        states = sorted(set(asym.n_values))
    else:
        pts = np.unique(np.round(np.geomspace(
            max(2, asym.n_min), asym.n_max, asym.points)).astype(int))
        states = [int(n) for n in pts]
    precision = _precision_from(asym)
    delta = parse_parameter(cfg.dynamics.delta)

    columns = []
    for text in asym.gammas:
        gamma = parse_profile(text, base_dir=cfg.base_dir)
        spec = BirthDeathSpec(gamma, delta)
        ratios = dict(asymptote_ratio(spec, states, precision))
        columns.append((text, ratios))
    out = _out_dir(cfg, args)
    header = ["n"] + [f"ratio[{text}]" for text, _ in columns]
    _write_csv(out / "ratios.csv", header,
               (([n] + [_fmt(ratios[n]) for _, ratios in columns])
                for n in states))
    _write_meta(out, "asymptote", cfg, {"states": len(states)})
    print(f"asymptote: {len(states)} states x {len(columns)} profiles, "
          f"output in {out}")
    return 0


def cmd_meanfield(cfg: ExperimentConfig, args) -> int:
    """Integrate the expected-trajectory ODE and write per-node columns."""
    g = load_graph(cfg)
    beta, beta_int = load_profiles(cfg)
    if not isinstance(beta, Constant) or not isinstance(beta_int, Constant):
        raise ConfigError(
            "mean-field integration requires constant profiles")
    mf = cfg.meanfield
    steps = int(round(mf.t_max / mf.grid_step))
    grid = np.arange(steps + 1) * mf.grid_step
    n0 = cfg.simulation.n0
    if mf.x0 == "uniform":
        x0 = np.full(g.node_count, n0 / g.node_count)
    elif mf.x0.startswith("node:"):
        x0 = np.zeros(g.node_count)
        x0[g.index(mf.x0[len("node:"):])] = n0
    else:
        raise ConfigError(f"[meanfield] x0 {mf.x0!r}: use uniform or node:LABEL")
    delta = float(parse_parameter(cfg.dynamics.delta))
    series = mean_field_trajectory(g, beta, beta_int, delta, x0, grid)
    out = _out_dir(cfg, args)
    _write_csv(out / "meanfield.csv", ["t", *g.labels, "total"],
               (([_fmt(t)] + [_fmt(v) for v in row] + [_fmt(row.sum())])
                for t, row in zip(grid, series)))
    _write_meta(out, "meanfield", cfg, {"nodes": g.node_count})
    print(f"meanfield: {grid.size} grid points over {g.node_count} nodes, "
          f"output in {out}")
    return 0


_COMMANDS = {
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "hitting": cmd_hitting,
    "asymptote": cmd_asymptote,
    "meanfield": cmd_meanfield,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dieout",
        description="Epidemic regime classification, exact simulation, and "
                    "extinction-time computation on locality networks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="experiment file")
        p.add_argument("--out", default=None,
                       help="output directory (overrides [output])")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed override")
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes for ensembles (0 = auto)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](load_config(args.config), args)
    except InfiniteHittingTimeError as exc:
        print("error: infinite expected extinction time -- the curing "
              f"rate is at or below the chain's growth threshold ({exc})",
              file=sys.stderr)
        return 2
    except (ConfigError, ProfileError, EdgeListError, SpectralError,
            OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
