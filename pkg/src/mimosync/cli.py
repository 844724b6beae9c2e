"""Command-line front end: sweep / single / bench / validate."""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load_config, write_config
from .evaluation import _run_trial, complexity_trend, monte_carlo_sweep
from .model import SystemConfig
from .recovery import HAVE_COMPILED, active_backend

ENV_OUTPUT_DIR = "MIMOSYNC_OUTPUT_DIR"


def _fmt(value):
    if value is None:
        return ""
    return format(value, ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _metric_csv(path, summary, estimators, metric_key, crlb_key=None,
                crlb_col="crlb"):
    header = ["snr_db"] + list(estimators)
    if crlb_key:
        header.append(crlb_col)
    header.append("trials")
    rows = []
    for row in summary.rows:
        cells = [_fmt(row["snr_db"])]
        cells += [_fmt(row.get(f"{metric_key}_{e}")) for e in estimators]
        if crlb_key:
            cells.append(_fmt(row.get(crlb_key)))
        cells.append(str(row["n_trials"]))
        rows.append(cells)
    _write_csv(path, header, rows)


def write_sweep_outputs(summary, cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    est = cfg.estimators
    _metric_csv(os.path.join(out_dir, "mse_cfo.csv"), summary, est,
                "mse_eps", crlb_key="crlb_eps")
    _metric_csv(os.path.join(out_dir, "mse_sfo.csv"), summary, est,
                "mse_eta", crlb_key="crlb_eta")
    _metric_csv(os.path.join(out_dir, "mse_channel.csv"), summary, est,
                "mse_h", crlb_key="crlb_h_trace", crlb_col="crlb_trace")
    _metric_csv(os.path.join(out_dir, "ptf.csv"), summary, est, "ptf")
    meta = [
        f"mimosync {__version__}",
        f"backend = {active_backend()}",
        f"theta_shift = {cfg.theta_shift}",
        f"p_fail = {cfg.p_fail}",
        f"failed_trials = {summary.n_failures}",
        "",
        write_config(cfg),
    ]
    with open(os.path.join(out_dir, "meta.txt"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("\n".join(meta))


def _resolve_output_dir(args, cfg):
    if getattr(args, "output", None):
        return args.output
    return os.environ.get(ENV_OUTPUT_DIR) or cfg.output_dir


def _warn_underdetermined(cfg, file=None):
    if file is None:
        file = sys.stderr
    retained = cfg.samples_per_antenna * cfg.system.n_rx
    if "ls" in cfg.estimators and retained < cfg.system.n_taps_total:
        print(
            f"warning: least-squares estimator with {retained} retained samples "
            f"< {cfg.system.n_taps_total} channel unknowns (under-determined); "
            "expect channel estimation failure",
            file=file,
        )


def cmd_sweep(args):
    cfg = load_config(args.config)
    _warn_underdetermined(cfg)
    summary = monte_carlo_sweep(
        cfg.system, cfg.grids, cfg.snr_list, cfg.trials, cfg.samples_per_antenna,
        cfg.estimators, cfg.master_seed, truth_mode=cfg.truth_mode,
        fixed_truth=cfg.truth, pilot_mode=cfg.pilot_mode,
        selection_mode=cfg.selection_mode, p_fail=cfg.p_fail,
        workers=cfg.workers,
    )
    out_dir = _resolve_output_dir(args, cfg)
    try:
        write_sweep_outputs(summary, cfg, out_dir)
    except OSError as exc:
        print(f"error: cannot write outputs to {out_dir!r}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote mse_cfo.csv mse_sfo.csv mse_channel.csv ptf.csv meta.txt to {out_dir}")
    return 0


def cmd_single(args):
    cfg = load_config(args.config)
    _warn_underdetermined(cfg)
    task = (cfg.system, cfg.grids, args.snr, 0, 0, cfg.samples_per_antenna,
            cfg.estimators, args.seed, cfg.truth_mode, cfg.truth,
            cfg.pilot_mode, cfg.selection_mode, cfg.p_fail, False, None,
            args.noiseless)
    rec = _run_trial(task)
    shift = cfg.theta_shift
    print(f"snr_db = {args.snr}  seed = {args.seed}  noiseless = {args.noiseless}")
    print(f"truth: epsilon = {rec.truth.epsilon:.6g}  eta = {rec.truth.eta:.6g}  "
          f"theta = {rec.truth.theta - shift}")
    for name in cfg.estimators:
        if name in rec.failures:
            print(f"{name}: FAILED ({rec.failures[name]})")
            continue
        res = rec.results[name]
        rel = (np.linalg.norm(res.h_hat - rec.channel.taps)
               / max(np.linalg.norm(rec.channel.taps), 1e-300))
        print(f"{name}: epsilon_hat = {res.epsilon_hat:.6g}  "
              f"eta_hat = {res.eta_hat:.6g}  theta_hat = {res.theta_hat - shift}")
        print(f"     min_cost_offset = {res.min_cost_offset:.6g}  "
              f"min_cost_timing = {res.min_cost_timing:.6g}  "
              f"channel_rel_err = {rel:.3g}  wall_time = {rec.wall_times[name]:.3f} s")
    return 0


def _bench_configs(base):
    """Problem sizes that double the channel-unknown count."""
    cfgs = []
    for mult in (1, 2, 4):
        taps = base.max_taps * mult
        cfgs.append(SystemConfig(
            n_subcarriers=max(2 * taps, 256),
            n_tx=2, n_rx=1,
            max_taps=taps, sparsity=base.sparsity,
            theta_max=base.theta_max,
            cp_len=taps + base.theta_max + 1,
        ))
    return cfgs


def cmd_bench(args):
    cfg = load_config(args.config)
    cfgs = _bench_configs(cfg.system)
    print("channel-estimation solve time vs problem size")
    print(f"{'unknowns':>9} {'sp_time':>12} {'ls_time':>12}")
    rows = complexity_trend(cfgs, reps=args.reps)
    for row in rows:
        print(f"{row['n_unknowns']:>9} {row['sp_time']:>12.3e} {row['ls_time']:>12.3e}")
    if HAVE_COMPILED:
        print("\nsubspace pursuit backend comparison (same instances)")
        print(f"{'unknowns':>9} {'compiled':>12} {'python':>12}")
        comp = complexity_trend(cfgs, reps=args.reps, backend="compiled")
        pure = complexity_trend(cfgs, reps=args.reps, backend="python")
        for c, p in zip(comp, pure):
            print(f"{c['n_unknowns']:>9} {c['sp_time']:>12.3e} {p['sp_time']:>12.3e}")
    else:
        print("\ncompiled kernel not built; python backend only")
    return 0


def cmd_validate(args):
    cfg = load_config(args.config)
    print(write_config(cfg), end="")
    print(f"# ok: {len(cfg.estimators)} estimator(s), "
          f"{len(cfg.snr_list)} SNR point(s), backend = {active_backend()}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mimosync",
        description="Joint CFO/SFO/timing and sparse channel estimation for MIMO-OFDM",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep and write CSV results")
    p.add_argument("config")
    p.add_argument("--output", help=f"output directory (overrides {ENV_OUTPUT_DIR} and config)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("single", help="run one trial and print the result")
    p.add_argument("config")
    p.add_argument("--snr", type=float, required=True, help="SNR in dB")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noiseless", action="store_true", help="disable noise (snr ignored)")
    p.set_defaults(func=cmd_single)

    p = sub.add_parser("bench", help="channel-estimator runtime trends and backend comparison")
    p.add_argument("config")
    p.add_argument("--reps", type=int, default=5)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="validate a config file and echo resolved values")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
