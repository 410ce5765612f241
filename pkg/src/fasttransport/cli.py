"""Command-line front end.

Every subcommand reads a JSON config (``--config``) and writes CSV series
and JSON reports into ``--out``.  Exit codes: 0 success, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .energy import bounds_report, energy_report
from .modes import TransportMode
from .perturbation import perturbation_report, perturbation_sweep
from .params import TransportSpec
from .tdse import (
    CompensatedTrap,
    ConvergenceError,
    GaussianBeamLongitudinal,
    MovingHarmonic,
    NumericalError,
    QuarticExpanded,
    TransitionlessMomentum,
    simulate,
)
from .trajectories import sample_design, stopping_region_map

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n")
    return path


def build_potential(cfg: RunConfig, traj):
    kind = cfg.options.get("potential", "harmonic")
    if kind == "harmonic":
        return MovingHarmonic(traj)
    if kind == "compensated_harmonic":
        return CompensatedTrap(traj)
    if kind == "transitionless":
        return TransitionlessMomentum(traj, cfg.options.get("include_H0", True))
    beam = cfg.require_beam()
    if kind == "gaussian_beam":
        return GaussianBeamLongitudinal(beam.V0, beam.x_R, traj)
    if kind == "compensated_gaussian":
        return CompensatedTrap(traj, GaussianBeamLongitudinal(beam.V0, beam.x_R, traj).profile)
    if kind == "quartic":
        return QuarticExpanded(beam.V0, beam.x_R, traj, cfg.options.get("strength", 1.0))
    raise ConfigError(f"unknown potential {kind!r}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_design(cfg: RunConfig, out, threads=1):
    """Sampled q_c/d and q_0/d versus s = t/t_f for each case."""
    samples = cfg.options.get("samples", 201)
    written, shared = [], None
    for label, spec in cfg.all_specs():
        s, qc, q0 = sample_design(cfg.trajectory(spec), samples)
        written.append(write_csv(cfg.output_path(f"design_{label}", out, f"design_{label}.csv"),
                                 ["s", "qc_over_d", "q0_over_d"], zip(s, qc, q0)))
        shared = qc if shared is None else (shared if np.allclose(shared, qc, rtol=0, atol=1e-12) else False)
    if shared is not False and len(written) > 1:
        written.append(write_csv(cfg.output_path("design_qc", out, "design_qc.csv"),
                                 ["s", "qc_over_d"], zip(s, shared)))
    return written


def _region_rows(cfg: RunConfig, threads: int):
    sw = cfg.sweep or {}
    res = sw.get("resolution", 200)
    res = (res, res) if isinstance(res, int) else tuple(res)
    a_vals = np.linspace(*sw.get("a_range", (0.0, 5.0)), res[0])
    b_vals = np.linspace(*sw.get("b_over_2pi_range", (0.05, 2.0)), res[1])
    chunks = [c for c in np.array_split(a_vals, max(1, threads)) if c.size]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        maps = list(pool.map(lambda c: stopping_region_map(a_values=c, b_over_2pi_values=b_vals), chunks))
    for m in maps:
        yield from m.rows()


def cmd_scan(cfg: RunConfig, out, threads=1):
    """Stopping-protocol domain map over (a, b/2pi)."""
    path = cfg.output_path("region_map", out, "region_map.csv")
    return [write_csv(path, ["a", "b_over_2pi", "below", "above"], _region_rows(cfg, threads))]


def cmd_bounds(cfg: RunConfig, out, threads=1):
    """Lower bounds on energies and trap motion."""
    if cfg.spec is None:
        raise ConfigError("bounds needs a 'spec' block")
    rep = bounds_report(cfg.spec, cfg.params, cfg.n)
    return [write_json(cfg.output_path("bounds", out, "bounds.json"), rep.to_dict())]


def cmd_energy(cfg: RunConfig, out, threads=1):
    """Energy time series and averages of a transport mode."""
    rep = energy_report(TransportMode(cfg.n, cfg.trajectory()), samples=cfg.numerics.samples,
                        rtol=cfg.numerics.tolerances.quadrature)
    return [
        write_csv(cfg.output_path("energy", out, "energy.csv"), ["t", "EH", "EP", "Ekin_c", "dH"],
                  zip(rep.t, rep.EH, rep.EP, rep.Ekin_c, rep.dH)),
        write_json(cfg.output_path("energy_averages", out, "energy_averages.json"), rep.averages()),
    ]


def cmd_simulate(cfg: RunConfig, out, threads=1):
    """Propagate the wave function through the protocol."""
    traj = cfg.trajectory()
    res = simulate(build_potential(cfg, traj), cfg.numerics, n=cfg.n)
    series = cfg.output_path("series", out, "series.csv")
    series.parent.mkdir(parents=True, exist_ok=True)
    res.write_csv(series)
    return [write_json(cfg.output_path("result", out, "result.json"), res.to_dict(series=False)), series]


def cmd_perturb(cfg: RunConfig, out, threads=1):
    """First-order anharmonicity estimate for the protocol."""
    rep = perturbation_report(cfg.trajectory(), cfg.n, cfg.require_beam())
    return [write_json(cfg.output_path("perturbation", out, "perturbation.json"), rep.to_dict())]


def _energy_row(cfg: RunConfig, tf: float):
    spec = TransportSpec(cfg.spec.distance, float(tf))
    rep = energy_report(TransportMode(cfg.n, cfg.trajectory(spec)), samples=2,
                        rtol=cfg.numerics.tolerances.quadrature)
    b = bounds_report(spec, cfg.params, cfg.n)
    return float(tf), rep.EP_avg, b.euler_lagrange_bound, rep.dH_avg, b.aa_bound_on_avg_dH


def _perturbation_row(cfg: RunConfig, N: int, n: int):
    return perturbation_sweep(cfg.spec.distance, cfg.params, cfg.require_beam(), (N,), (n,))[0]


def cmd_sweep(cfg: RunConfig, out, threads=1):
    """Region-map, energy or perturbation sweep."""
    if cfg.sweep is None:
        raise ConfigError("the sweep command needs a 'sweep' block")
    kind = cfg.sweep["kind"]
    path = cfg.output_path("sweep", out, "sweep.csv")
    if kind == "region_map":
        return [write_csv(path, ["a", "b_over_2pi", "below", "above"], _region_rows(cfg, threads))]
    if cfg.spec is None:
        raise ConfigError("this sweep needs a 'spec' block for the distance")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        if kind == "energy":
            rows = list(pool.map(lambda tf: _energy_row(cfg, tf), cfg.durations()))
            header = ["t_f", "EP_avg", "EP_bound", "dH_avg", "AA_bound"]
        else:
            points = [(N, n) for N in cfg.sweep.get("N", [1, 2, 3]) for n in cfg.sweep.get("n", [0, 1, 2])]
            rows = list(pool.map(lambda pt: _perturbation_row(cfg, *pt), points))
            header = ["N", "n", "F_bb", "F_inv", "F_numeric_bb", "F_numeric_inv"]
    return [write_csv(path, header, rows)]


COMMANDS = {
    "design": cmd_design,
    "scan": cmd_scan,
    "bounds": cmd_bounds,
    "energy": cmd_energy,
    "simulate": cmd_simulate,
    "perturb": cmd_perturb,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fasttransport", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
        p.add_argument("--seed", type=int, default=0, help="reserved; all algorithms are deterministic")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        written = COMMANDS[args.command](cfg, Path(args.out), args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
