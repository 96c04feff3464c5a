"""Command-line front end: run, sweep and compare commands with CSV output.

Exit codes: 0 success, 2 configuration error, 3 divergence.  A diverging
run still writes the records collected so far, followed by a trailing
comment line naming the failure time.  Passing --plot renders matplotlib
figures next to the CSV.
"""

from __future__ import annotations

import argparse
import sys
import time as _time
from pathlib import Path
from typing import Sequence

from . import config as config_mod
from .core import StepRecord
from .errors import ConfigurationError, CosimError, DivergenceError
from .estimators import ecco_total_residual
from .master import compare_with_reference, run_adaptive, run_fixed
from .subsystems import run_monolithic

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _fmt(value: float) -> str:
    # 17 significant digits: every finite double round-trips exactly
    return f"{value:.16e}"


def _sanitize(label: str) -> str:
    return "".join(c if c.isalnum() or c == "_" else "_" for c in label)


def _run_columns(record: StepRecord) -> list[str]:
    y_labels = record.y.labels or tuple(f"y{k}" for k in range(len(record.y)))
    u_labels = record.u.labels or tuple(f"u{k}" for k in range(len(record.u)))
    columns = ["t", "dt"]
    columns += [f"y_{_sanitize(l)}" for l in y_labels]
    columns += [f"u_{_sanitize(l)}" for l in u_labels]
    columns.append("eps")
    for residual in record.residuals:
        columns.append(f"deltaP_{_sanitize(residual.label)}")
    for residual in record.residuals:
        columns.append(f"deltaE_{_sanitize(residual.label)}")
    columns.append("E_total")
    return columns


def write_run_csv(path: Path, records: Sequence[StepRecord],
                  diverged_at: float | None = None) -> None:
    lines = [",".join(_run_columns(records[0]))]
    for record in records:
        row = [_fmt(record.t), _fmt(record.dt)]
        row += [_fmt(v) for v in record.y.values]
        row += [_fmt(v) for v in record.u.values]
        row.append(_fmt(record.eps))
        row += [_fmt(r.delta_p) for r in record.residuals]
        row += [_fmt(r.delta_e) for r in record.residuals]
        row.append(_fmt(record.energy))
        lines.append(",".join(row))
    if diverged_at is not None:
        lines.append(f"# diverged at t={diverged_at!r}")
    path.write_text("\n".join(lines) + "\n")


def _out_path(args, cfg: dict, command: str) -> Path:
    if args.out:
        out = Path(args.out)
    elif cfg.get("output"):
        out = Path(cfg["output"])
    else:
        out = Path(f"{cfg['scenario']}_{command}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: dict, out: Path) -> None:
    config_mod.write_effective_config(cfg, out.with_name(out.stem + ".config.json"))


def cmd_run(args) -> int:
    cfg = config_mod.effective_config(config_mod.load_config(args.config))
    scenario = config_mod.build_scenario(cfg)
    out = _out_path(args, cfg, "run")
    _echo_config(cfg, out)
    try:
        runner = run_adaptive if scenario.mode == "adaptive" else run_fixed
        records = runner(scenario)
    except DivergenceError as exc:
        if exc.records:
            write_run_csv(out, exc.records, diverged_at=exc.time)
        print(f"diverged at t={exc.time!r}; partial output in {out}", file=sys.stderr)
        return EXIT_DIVERGED
    write_run_csv(out, records)
    print(f"wrote {out} ({len(records)} synchronisation points)")
    if args.plot:
        from . import plotting

        figure = plotting.plot_run(records, out.with_suffix(".png"))
        print(f"wrote {figure}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = config_mod.effective_config(config_mod.load_config(args.config))
    try:
        dts = [float(v) for v in args.dt.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigurationError(f"invalid --dt list {args.dt!r}: {exc}") from exc
    if len(dts) < 2:
        raise ConfigurationError("sweep needs at least 2 step sizes in --dt")
    if any(dt <= 0 for dt in dts):
        raise ConfigurationError("all sweep step sizes must be positive")
    out = _out_path(args, cfg, "sweep")
    _echo_config(cfg, out)

    rows = []
    for dt in sorted(dts):
        scenario = config_mod.build_scenario(cfg, dt=dt, mode="fixed")
        started = _time.perf_counter()
        diverged = False
        try:
            records = run_fixed(scenario)
        except DivergenceError as exc:
            records = exc.records
            diverged = True
        elapsed = _time.perf_counter() - started
        cumulative = abs(sum(
            ecco_total_residual(record.residuals) for record in records
        ))
        rows.append({
            "dt": dt,
            "cumulative_abs_delta_e": cumulative,
            "diverged": diverged,
            "steps": max(0, len(records) - 1),
            "wall_time_s": elapsed,
        })

    lines = ["dt,cumulative_abs_delta_e,diverged,steps,wall_time_s"]
    for row in rows:
        lines.append(",".join([
            _fmt(row["dt"]),
            _fmt(row["cumulative_abs_delta_e"]),
            "true" if row["diverged"] else "false",
            str(row["steps"]),
            _fmt(row["wall_time_s"]),
        ]))
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(rows)} step sizes)")
    if args.plot:
        from . import plotting

        figure = plotting.plot_sweep(rows, out.with_suffix(".png"))
        print(f"wrote {figure}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = config_mod.effective_config(config_mod.load_config(args.config))
    scenario = config_mod.build_scenario(cfg)
    model = config_mod.build_monolithic(cfg)
    out = _out_path(args, cfg, "compare")
    _echo_config(cfg, out)

    diverged_at = None
    try:
        runner = run_adaptive if scenario.mode == "adaptive" else run_fixed
        records = runner(scenario)
    except DivergenceError as exc:
        records = [r for r in exc.records if not r.diverged]
        diverged_at = exc.time
        if not records:
            print(f"diverged at t={exc.time!r}; nothing to compare", file=sys.stderr)
            return EXIT_DIVERGED

    series = run_monolithic(
        model, t_stop=records[-1].t, dt=float(cfg["micro_dt"]),
        t_start=float(cfg["t_start"]), sample_times=[r.t for r in records],
    )
    comparison = compare_with_reference(records, series)

    labels = records[0].y.labels or tuple(f"y{k}" for k in range(len(records[0].y)))
    header = ["t"] + [f"dy_{_sanitize(l)}" for l in labels]
    header += ["E_cosim", "E_mono", "E_err"]
    lines = [",".join(header)]
    for i, t in enumerate(comparison.times):
        row = [_fmt(t)]
        row += [_fmt(v) for v in comparison.dy[i]]
        row += [_fmt(comparison.energy_cosim[i]), _fmt(comparison.energy_mono[i]),
                _fmt(comparison.energy_error[i])]
        lines.append(",".join(row))
    if diverged_at is not None:
        lines.append(f"# diverged at t={diverged_at!r}")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(comparison.times)} synchronisation points)")
    if args.plot:
        from . import plotting

        figure = plotting.plot_compare(comparison, labels, out.with_suffix(".png"))
        print(f"wrote {figure}")
    return EXIT_DIVERGED if diverged_at is not None else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cosim",
        description="Co-simulation with coupling-error estimation and "
                    "adaptive macro step size control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write a CSV time series")
    run_p.add_argument("config", help="path to a JSON run config")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser(
        "sweep", help="repeat fixed-step runs over several macro step sizes"
    )
    sweep_p.add_argument("config", help="path to a JSON run config")
    sweep_p.add_argument("--dt", required=True,
                         help="comma-separated macro step sizes, e.g. 0.001,0.002")
    sweep_p.set_defaults(func=cmd_sweep)

    compare_p = sub.add_parser(
        "compare", help="compare a run against its monolithic reference"
    )
    compare_p.add_argument("config", help="path to a JSON run config")
    compare_p.set_defaults(func=cmd_compare)

    for p in (run_p, sweep_p, compare_p):
        p.add_argument("--out", help="output CSV path", default=None)
        p.add_argument("--plot", action="store_true",
                       help="render figures next to the CSV")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"diverged at t={exc.time!r}", file=sys.stderr)
        return EXIT_DIVERGED
    except CosimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
