"""Command-line entry point: ``laa-dpp {run,sweep,compare,csma-table,validate}``.

Exit codes: 0 success, 1 configuration error, 2 solver failure.
Log verbosity comes from the ``LAA_DPP_LOG`` environment variable (e.g. ``DEBUG``).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import csma, harness
from .baselines import PolicyId
from .config import ConfigError, Experiment, load_config
from .core import validate_config
from .solver import SolverError


def _parse_V_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad V list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML experiment file (default: shipped defaults)")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the environment seed")
    common.add_argument("--slots", type=int, default=None, help="override the horizon T")

    p = argparse.ArgumentParser(prog="laa-dpp", description="LAA/Wi-Fi energy-aware scheduling simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="simulate one policy")
    run.add_argument("--policy", default=None, help="proposed | pcmps | zero (default from config)")
    run.add_argument("--V", type=float, default=None, help="control parameter for the proposed policy")
    run.add_argument("--per-user", action="store_true", help="add per-user queue columns to the series CSV")

    for name, helptext in (("sweep", "sweep V for the proposed policy"), ("compare", "sweep V and compare with PCMPS")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--V", type=_parse_V_list, default=None, help="comma-separated ascending V values")
        sp.add_argument("--workers", type=int, default=None, help="parallel worker processes")

    ct = sub.add_parser("csma-table", parents=[common], help="print coexistence fixed points")
    ct.add_argument("--n-max", type=int, default=None, help="largest Wi-Fi population (default: env wifi_max)")

    sub.add_parser("validate", parents=[common], help="check the configuration")
    return p


def _apply_overrides(exp: Experiment, args) -> Experiment:
    env = exp.env if args.seed is None else dataclasses.replace(exp.env, seed=args.seed)
    sim = exp.sim
    if args.slots is not None:
        sim = dataclasses.replace(sim, slots=args.slots)
    if getattr(args, "workers", None) is not None:
        sim = dataclasses.replace(sim, workers=args.workers)
    return dataclasses.replace(exp, env=env, sim=sim)


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _cmd_run(exp: Experiment, args) -> int:
    V = args.V if args.V is not None else exp.sim.V
    policy = PolicyId.parse(args.policy or exp.sim.policy, V)
    m = harness.run_episode(exp.network, exp.env, policy, exp.sim.slots, exp.sca)
    _print_summary(m.summary())
    out = _out_dir(args)
    if out is not None:
        harness.write_series_csv([m], out / "series.csv", per_user=args.per_user)
        harness.write_json(m.summary(), out / "summary.json")
    return 0


def _V_list(exp: Experiment, args) -> list[float]:
    return list(args.V) if args.V else list(exp.sim.V_list)


def _cmd_sweep(exp: Experiment, args) -> int:
    table = harness.sweep_V(exp.network, exp.env, _V_list(exp, args), exp.sim.slots, exp.sca, exp.sim.workers)
    for row in table.summary()["rows"]:
        _print_summary(row)
    out = _out_dir(args)
    if out is not None:
        table.to_csv(out / "tradeoff.csv")
        harness.write_series_csv(table.runs, out / "series.csv")
        harness.write_json(table.summary(), out / "summary.json")
    return 0


def _cmd_compare(exp: Experiment, args) -> int:
    rep = harness.compare_policies(
        exp.network, exp.env, _V_list(exp, args), exp.sim.slots, exp.sca, workers=exp.sim.workers
    )
    s = rep.summary()
    print(f"PCMPS: power {rep.baseline.avg_power:.4f} W, delay {rep.baseline.avg_delay:.4f} slots, "
          f"flagged slots {rep.baseline.infeasible_slot_count}")
    if rep.matched_V is None:
        print(rep.message)
    else:
        print(f"matched V {rep.matched_V:g}: power {rep.matched_power:.4f} W, "
              f"reduction {rep.reduction_pct:.2f}% (reference {harness.REFERENCE_REDUCTION_PCT}%)")
    print("dominance window:", ", ".join(f"{v:g}" for v in rep.dominance_window) or "empty")
    out = _out_dir(args)
    if out is not None:
        rep.table.to_csv(out / "tradeoff.csv")
        harness.write_series_csv([rep.baseline, *rep.table.runs], out / "series.csv")
        harness.write_json(s, out / "summary.json")
    return 0


def _cmd_csma_table(exp: Experiment, args) -> int:
    n_max = exp.env.wifi_max if args.n_max is None else args.n_max
    rows = csma.coexistence_table(
        n_max, csma.BackoffLadder(exp.network.wifi_backoff), csma.BackoffLadder(exp.network.sbs_backoff)
    )
    head = ("N", "tau_w", "tau_l", "p_w", "p_l", "P_suc")
    lines = [",".join(head)] + [f"{r[0]}," + ",".join(f"{v:.10f}" for v in r[1:]) for r in rows]
    print("\n".join(lines))
    out = _out_dir(args)
    if out is not None:
        (out / "csma_table.csv").write_text("\n".join(lines) + "\n")
    return 0


def _cmd_validate(exp: Experiment, args) -> int:
    report = validate_config(exp.network)
    print(report)
    return 0 if report.valid else 1


def _print_summary(d: dict) -> None:
    print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in d.items()))


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "csma-table": _cmd_csma_table,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get("LAA_DPP_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        exp = _apply_overrides(load_config(args.config), args)
        if args.command != "validate":
            report = validate_config(exp.network)
            if not report.valid:
                raise ConfigError(str(report))
        return _COMMANDS[args.command](exp, args)
    except (ConfigError, ValueError) as exc:
        print(f"laa-dpp: configuration error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, csma.FixedPointError) as exc:
        print(f"laa-dpp: solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
