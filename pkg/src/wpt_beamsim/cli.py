"""Command-line front end: ``wpt-beamsim <subcommand> [flags]``.

Exit codes are 0 on success, 1 on a runtime or numeric failure and 2 on a
usage error (bad flag, bad configuration key).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .beamformer import find_optimal_beamformer, make_basis
from .channel import alignment, sample_channel
from .errors import BeamsimError, ParameterError
from .harvester import MODEL_KINDS, FeedbackConverter, StorageCircuit, model_from_dict
from .oracle import SimulatedHarvester
from .rng import trial_seed
from .validation import flipped_gamma_solver, run_checks

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _float_list(text: str) -> list:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _int_list(text: str) -> list:
    values = _float_list(text)
    if any(v != int(v) or v < 2 for v in values):
        raise argparse.ArgumentTypeError(f"antenna counts must be integers >= 2, got {text!r}")
    return [int(v) for v in values]


def _time_limit(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("time limit must be positive (or inf)")
    return value


def _add_channel_flags(p: argparse.ArgumentParser, lists: bool) -> None:
    kind = "comma-separated list" if lists else "value"
    p.add_argument("--n", type=_int_list, help=f"antenna count ({kind})")
    p.add_argument("--kf", type=_float_list, help=f"Rician K-factor, 'inf' for pure LoS ({kind})")
    p.add_argument("--pt", type=_float_list, help=f"transmit power in W ({kind})")
    p.add_argument("--dist", type=_float_list, help=f"distance in m ({kind})")
    p.add_argument("--beta", type=float, help="path-loss exponent")
    p.add_argument("--gain", type=float, help="combined antenna gain G")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help=f"base seed (default {ex.DEFAULT_SEED})")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials per point")
    p.add_argument("--t-lim", type=_time_limit, help="per-slot time limit in s ('inf' disables)")
    p.add_argument("--basis", help="probing basis: dft, identity or file:PATH")
    p.add_argument("--model", choices=sorted(MODEL_KINDS), help="RF-to-DC efficiency model")
    p.add_argument("--resistance", type=float, help="storage resistance R in ohm")
    p.add_argument("--capacitance", type=float, help="storage capacitance C in F")
    p.add_argument("--q0", type=float, help="charge after a transmission, in C")
    p.add_argument("--qm", type=float, help="charge that triggers a transmission, in C")
    p.add_argument("--config", type=Path, help="JSON experiment configuration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wpt-beamsim",
        description="Energy beamforming from time-to-recharge feedback.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probe-demo", help="run one feedback phase and print every slot")
    _add_channel_flags(p, lists=False)
    _add_common_flags(p)
    p.add_argument("--force-weak-direction", action="store_true",
                   help="weaken the second basis direction so its probe exceeds the time limit")
    p.set_defaults(handler=cmd_probe_demo)

    p = sub.add_parser("sweep", help="Monte-Carlo sweep over transmit power or distance")
    p.add_argument("axis", choices=("power", "distance"))
    _add_channel_flags(p, lists=True)
    _add_common_flags(p)
    p.add_argument("--reorder", action="store_true", help="combine columns in descending tau order")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("validate", help="run the built-in invariant checks")
    p.add_argument("--quick", action="store_true", help="fewer random instances, same checks")
    p.add_argument("--inject-gamma-sign-flip", action="store_true",
                   help="test hook: flip the sign of the recovered imaginary part")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("fixed-vs-float", help="16-bit golden model against floating point (N = 5)")
    _add_channel_flags(p, lists=False)
    p.add_argument("--seed", type=int, help=f"base seed (default {ex.DEFAULT_SEED})")
    p.add_argument("--trials", type=int, default=500, help="channels to compare")
    p.add_argument("--model", choices=sorted(MODEL_KINDS), help="RF-to-DC efficiency model")
    p.add_argument("--cordic-samples", type=int, default=10_000)
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.set_defaults(handler=cmd_fixed_vs_float)

    p = sub.add_parser("curves", help="write efficiency and recharge-time curve samples")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--config", type=Path, help="JSON experiment configuration")
    p.set_defaults(handler=cmd_curves)
    return parser


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def load_config(args) -> ex.ExperimentConfig:
    """Config file (if any), then every flag that was given on top of it."""
    data = {}
    if getattr(args, "config", None) is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise UsageError(f"{args.config}: top level must be an object")
    try:
        config = ex.ExperimentConfig.from_dict(data)
    except ParameterError as exc:
        raise UsageError(f"{args.config}: {exc}") from None

    updates = {}
    get = lambda name: getattr(args, name, None)  # noqa: E731
    if get("n") is not None:
        updates["n_antennas"] = get("n")
    if get("kf") is not None:
        updates["rician_factors"] = get("kf")
    if get("pt") is not None:
        updates["transmit_powers_w"] = get("pt")
        if len(get("pt")) == 1:
            updates["transmit_power_w"] = get("pt")[0]
    if get("dist") is not None:
        updates["distances_m"] = get("dist")
        if len(get("dist")) == 1:
            updates["distance_m"] = get("dist")[0]
    for flag, key in (("beta", "pathloss_exponent"), ("gain", "antenna_gain"), ("trials", "trials"),
                      ("seed", "base_seed"), ("t_lim", "time_limit_s"), ("basis", "basis")):
        if get(flag) is not None:
            updates[key] = get(flag)
    if get("reorder"):
        updates["reorder"] = True
    if get("model") is not None:
        updates["model"] = model_from_dict(get("model"))
    circuit = {}
    for flag, key in (("resistance", "resistance_ohm"), ("capacitance", "capacitance_f"),
                      ("q0", "q_initial_c"), ("qm", "q_max_c")):
        if get(flag) is not None:
            circuit[key] = get(flag)
    if circuit:
        updates["circuit"] = StorageCircuit(**{**config.circuit.__dict__, **circuit})
    try:
        return ex.ExperimentConfig(**{**config.__dict__, **updates})
    except ParameterError as exc:
        raise UsageError(str(exc)) from None


def _single(flag_values: list | None, config_values: list, flag: str):
    """The one value a single-run command uses: the flag, else the first configured entry."""
    if flag_values is None:
        return config_values[0]
    if len(flag_values) != 1:
        raise UsageError(f"{flag} takes a single value here, got {flag_values}")
    return flag_values[0]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_probe_demo(args) -> int:
    config = load_config(args)
    n = _single(args.n, config.n_antennas, "--n")
    kf = _single(args.kf, config.rician_factors, "--kf")
    params = config.channel(n, kf)
    time_limit = config.time_limit_s if args.t_lim is not None or args.force_weak_direction else math.inf
    if args.seed is None:
        print(f"seed: {config.base_seed} (default)")
    basis = make_basis(config.basis, n)
    converter = FeedbackConverter(config.circuit, config.model, params)
    h = sample_channel(params, trial_seed(config.base_seed, 0))
    if args.force_weak_direction:
        if not math.isfinite(time_limit):
            raise UsageError("--force-weak-direction needs a finite --t-lim")
        h = ex.weaken_direction(h, basis, 1, converter, 3.0 * time_limit)
    oracle = SimulatedHarvester(h, params, config.circuit, config.model)
    w, trace = find_optimal_beamformer(oracle, basis, converter, time_limit=time_limit,
                                       reorder=config.reorder)
    print(f"{'slot':>4}  {'label':<18} {'column':>6} {'t_tr [s]':>14} {'tau':>14}")
    for s in trace.slots:
        col = "" if s.column is None else str(s.column)
        t = "timeout" if not math.isfinite(s.t_tr) else f"{s.t_tr:.6f}"
        print(f"{s.index + 1:>4}  {s.label:<18} {col:>6} {t:>14} {s.tau:>14.6e}")
    print(f"slots: {len(trace)}  FAP duration: {trace.duration:.6f} s")
    print(f"alignment |h^H w|/||h||: {alignment(h, w):.12f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    if args.seed is None:
        print(f"seed: {config.base_seed} (default)")
    if args.axis == "power":
        result = ex.sweep_transmit_power(config)
    else:
        result = ex.sweep_distance(config)
    csv_path = args.out / f"sweep_{args.axis}.csv"
    json_path = args.out / f"sweep_{args.axis}.json"
    ex.write_csv(result, csv_path)
    ex.write_json(result, config, json_path)
    durations = result.metric("mean_duration_s")
    for (n, kf), row in zip(result.series, durations):
        print(f"{ex.series_label(n, kf):<12} FAP duration [s]: " + " ".join(f"{d:9.3f}" for d in row))
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    kwargs = {"gamma_solver": flipped_gamma_solver} if args.inject_gamma_sign_flip else {}
    results = run_checks(quick=args.quick, **kwargs)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return EXIT_FAILURE
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_fixed_vs_float(args) -> int:
    args.config = None
    config = load_config(args)
    if args.n is not None and args.n != [5]:
        raise UsageError("the fixed-point datapath is built for N = 5")
    params = config.channel(5, _single(args.kf, config.rician_factors, "--kf"))
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.seed is None:
        print(f"seed: {config.base_seed} (default)")
    args.out.mkdir(parents=True, exist_ok=True)
    rows = ex.compare_fixed_and_float(params, args.trials, config.base_seed, config.circuit, config.model,
                                     config.time_limit_s)
    csv_path = args.out / "fixed_vs_float.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write(",".join(ex.FIXED_FLOAT_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(ex._fmt(r[c]) for c in ex.FIXED_FLOAT_COLUMNS) + "\n")
    if args.trials == 1:
        trace_path = args.out / "oeb_trace.csv"
        rows[0]["run"].write_csv(trace_path)
        print(f"wrote register trace {trace_path}")
    fixed = np.array([r["fixed_alignment"] for r in rows])
    flt = np.array([r["float_alignment"] for r in rows])
    print(f"trials: {len(rows)}")
    print(f"float alignment: min {flt.min():.9f}  mean {flt.mean():.9f}")
    print(f"fixed alignment: min {fixed.min():.9f}  mean {fixed.mean():.9f}")
    print(f"saturated runs: {sum(r['fixed_saturated'] for r in rows)}")
    atan_err, sincos_err = ex.cordic_error(args.cordic_samples, config.base_seed)
    print(f"CORDIC atan2 max error: {atan_err:.3e} rad (2^-11 = {2.0 ** -11:.3e})")
    print(f"CORDIC sin/cos max error: {sincos_err:.3e}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_curves(args) -> int:
    config = load_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    models = [cls() for cls in MODEL_KINDS.values()]
    eff_path = args.out / "efficiency_curves.csv"
    ttr_path = args.out / "recharge_time.csv"
    ex.write_columns_csv(ex.efficiency_curves(models, np.logspace(-7, -1, args.points)), eff_path)
    ex.write_columns_csv(ex.recharge_time_curve(config.circuit, np.logspace(-7, -1, args.points)), ttr_path)
    print(f"wrote {eff_path} and {ttr_path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    try:
        return args.handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BeamsimError, OSError, FloatingPointError) as exc:
        print(f"{parser.prog}: failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
