"""Command-line surface.

Subcommands:
  certify         evaluate all functionals on ingested count tables
  simulate        run a configured experiment (exact or sampled) and certify
  decay           dephasing-with-echo prediction of gamma over waiting time
  swap-curve      gamma of the partial-swap protocol over an angle sweep
  classical-bound exact classical minima by brute-force enumeration
  jm-scan         joint-measurability margin of the partial-swap assemblage

Exit codes: 0 success, 2 parse/validation error, 3 domain error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import certify, classical, compat, dataio, proclib
from .exceptions import DomainError, ParseError, ResourceLimitError, ValidationError


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--resamples", type=int, default=None)
    p.add_argument("--sigma-k", type=float, default=None)
    p.add_argument("--out", default=".", help="output directory (default: cwd)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpmcert",
        description="Device-independent quantum-memory certification from "
        "two-point-measurement statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="certify ingested count tables")
    p.add_argument("--counts", required=True, help="observational CSV (x,a,b,count)")
    p.add_argument("--do-counts", help="interventional CSV (do_a,x,b,count)")
    p.add_argument("--frozen-argmin", action="store_true",
                   help="keep the point-estimate argmin during the bootstrap")
    _add_common(p)

    p = sub.add_parser("simulate", help="simulate a configuration and certify it")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=["memory_test", "partial_swap"])
    group.add_argument("--config", help="YAML configuration file")
    p.add_argument("--alpha", type=float, help="partial-swap angle in radians")
    shots = p.add_mutually_exclusive_group()
    shots.add_argument("--exact", action="store_true", help="exact probabilities")
    shots.add_argument("--shots", type=int, help="multinomial shots per setting")
    p.add_argument("--wait", type=float, default=None,
                   help="waiting time in ms (needs a noise block in the config)")
    _add_common(p)

    p = sub.add_parser("decay", help="predicted gamma over waiting time")
    p.add_argument("--t2", type=float, required=True, help="dephasing time, ms")
    p.add_argument("--t1", type=float, default=1170.0, help="relaxation time, ms")
    p.add_argument("--echo-fidelity", type=float, required=True)
    p.add_argument("--echo-interval", type=float, required=True, help="ms")
    p.add_argument("--initial-gamma", type=float, required=True)
    p.add_argument("--include-t1", action="store_true")
    p.add_argument("--t-max", type=float, default=200.0)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out", default=None, help="write decay_curve.csv here")

    p = sub.add_parser("swap-curve", help="gamma over a partial-swap angle sweep")
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--out", default=None, help="write swap_curve.csv here")

    p = sub.add_parser("classical-bound", help="exact classical minima")
    p.add_argument("--x", type=int, default=4, help="setting-alphabet size")
    p.add_argument("--skip-crosstalk", action="store_true")

    p = sub.add_parser("jm-scan", help="joint-measurability margin per angle")
    p.add_argument("--points", type=int, default=33, help="alpha grid points")
    p.add_argument("--grid-density", type=int, default=20)
    p.add_argument("--out", default=None, help="write jm_scan.csv here")

    return parser


def _cmd_certify(args) -> int:
    table = dataio.ingest_counts(args.counts)
    if table.kind != "observational":
        raise ValidationError("--counts must be an observational table")
    behavior = dataio.counts_to_behavior(table)
    do_table = None
    if args.do_counts:
        do_raw = dataio.ingest_counts(args.do_counts)
        if do_raw.kind != "interventional":
            raise ValidationError("--do-counts must be an interventional table")
        do_table = dataio.counts_to_behavior(do_raw)
    report = certify.certify_behavior(
        behavior,
        do_table=do_table,
        n_resamples=args.resamples if args.resamples is not None
        else certify.DEFAULT_RESAMPLES,
        seed=args.seed if args.seed is not None else 0,
        sigma_k=args.sigma_k if args.sigma_k is not None else certify.DEFAULT_SIGMA_K,
        frozen_argmin=args.frozen_argmin,
    )
    dataio.emit_report(report, out_dir=args.out)
    d = report.to_json_dict()
    print(f"gamma           = {d['gamma']:.6f}"
          + (f" +- {d['gamma_stderr']:.6f}" if d["gamma_stderr"] else ""))
    print(f"pearl_delta     = {d['pearl_delta']:.6f}")
    if d["acde"] is not None:
        print(f"acde            = {d['acde']:.6f}")
    print(f"fidelity_lb     = {d['fidelity_lb']:.6f}")
    print(f"nonclassical    = {d['verdict_nonclassical']}")
    print(f"crosstalk       = {d['verdict_crosstalk_witnessed']}")
    return 0


def _cmd_simulate(args) -> int:
    overrides: dict = {}
    if args.exact:
        overrides["shots"] = None
    elif args.shots is not None:
        overrides["shots"] = args.shots
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.resamples is not None:
        overrides["resamples"] = args.resamples
    if args.sigma_k is not None:
        overrides["sigma_k"] = args.sigma_k
    if args.wait is not None:
        overrides["wait_ms"] = args.wait
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.config:
        cfg = dataio.load_config(args.config)
        cfg = dataio.ExperimentConfig(**{**cfg.__dict__, **overrides})
    else:
        cfg = dataio.preset_config(args.preset, **overrides)
    _, _, report = dataio.run_experiment(cfg)
    dataio.emit_report(report, out_dir=args.out)
    d = report.to_json_dict()
    print(f"gamma        = {d['gamma']:.9f}")
    print(f"pearl_delta  = {d['pearl_delta']:.9f}")
    print(f"acde         = {d['acde']:.9f}")
    print(f"fidelity_lb  = {d['fidelity_lb']:.6f}")
    print(f"nonclassical = {d['verdict_nonclassical']}")
    return 0


def _cmd_decay(args) -> int:
    params = proclib.NoiseParams(
        t2=args.t2,
        t1=args.t1,
        echo_fidelity=args.echo_fidelity,
        echo_interval=args.echo_interval,
        initial_gamma=args.initial_gamma,
    )
    times = np.linspace(0.0, args.t_max, args.points)
    curve = proclib.decay_prediction(params, times, include_t1=args.include_t1)
    crossing = proclib.classical_crossing_time(params, include_t1=args.include_t1)
    print(f"classical crossing time: {crossing:.4f} ms")
    for t, g in curve[:: max(1, len(curve) // 10)]:
        print(f"  t = {t:8.2f} ms   gamma = {g:.6f}")
    if args.out:
        path = dataio.write_curve(args.out, "decay_curve", curve)
        print(f"wrote {path}")
    return 0


def _cmd_swap_curve(args) -> int:
    alphas = np.linspace(0.0, math.pi, args.points)
    curve = proclib.partial_swap_gamma_curve(alphas)
    for alpha, gamma in curve[:: max(1, len(curve) // 10)]:
        print(f"  alpha = {alpha:.4f}   gamma = {gamma:.9f}")
    violations = [a for a, g in curve if g < 1.0 - 1e-9]
    if violations:
        print(f"violations (gamma < 1) for alpha in "
              f"[{min(violations):.4f}, {max(violations):.4f}]")
    if args.out:
        path = dataio.write_curve(args.out, "swap_curve", curve)
        print(f"wrote {path}")
    return 0


def _cmd_classical_bound(args) -> int:
    min_gamma = classical.classical_minimum_gamma(args.x)
    n_plain = len(classical.enumerate_strategies(args.x, crosstalk=False))
    print(f"min gamma over {n_plain} no-crosstalk vertices: {min_gamma:.12f}")
    if not args.skip_crosstalk:
        vertices = classical.enumerate_strategies(args.x, crosstalk=True)
        worst = classical.check_corrected_bound(vertices)
        print(f"min (gamma + 2 ACDE) over {len(vertices)} crosstalk vertices: "
              f"{worst:.12f}")
    return 0


def _cmd_jm_scan(args) -> int:
    alphas = np.linspace(0.0, math.pi, args.points)
    region = compat.partial_swap_compat_region(alphas, args.grid_density)
    rows = []
    for alpha in alphas:
        margin = region[float(alpha)]
        flag = "incompatible" if margin < -1e-9 else "compatible"
        rows.append((float(alpha), margin))
        print(f"  alpha = {alpha:.4f}   min margin = {margin:+.6f}   {flag}")
    if args.out:
        path = dataio.write_curve(args.out, "jm_scan", rows)
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "certify": _cmd_certify,
    "simulate": _cmd_simulate,
    "decay": _cmd_decay,
    "swap-curve": _cmd_swap_curve,
    "classical-bound": _cmd_classical_bound,
    "jm-scan": _cmd_jm_scan,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, ValidationError, ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
