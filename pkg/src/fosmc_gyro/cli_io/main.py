"""Command-line entry point: ``fosmc-gyro simulate|compare|validate-frac|sweep``.

Exit status 0 on success, 1 on usage or configuration errors (including
unreadable files and mismatched comparisons), 2 when a simulation aborts on
a non-finite state.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..sim import ConfigError, SimConfig, SimulationAborted, Telemetry, compare, compute_metrics, reference, run
from .config import PRESETS, config_from_dict, config_to_dict, dumps_config, load_config, set_dotted
from .selftest import format_table, run_checks, wrong_recurrence_weights
from .svg import Panel, Series, write_panels
from .telemetry_io import format_metrics, write_metrics, write_telemetry_csv

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2

_FAULTS = {"wrong-recurrence": wrong_recurrence_weights}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _axis_panels(tel: Telemetry, cfg: SimConfig, what: str) -> list[Panel]:
    panels = []
    if what == "velocity":
        qd_dot = reference(tel.t[:, None], cfg.reference)[1]
    for i, axis in enumerate("xy"):
        if what == "position":
            series = [Series("q", tel.t, tel.q[:, i]), Series("q_d", tel.t, tel.q_d[:, i], dashed=True)]
        elif what == "velocity":
            series = [Series("qdot", tel.t, tel.qdot[:, i]), Series("qdot_d", tel.t, qd_dot[:, i], dashed=True)]
        elif what == "error":
            series = [Series("e", tel.t, tel.e[:, i])]
        else:
            series = [Series("u", tel.t, tel.u_total[:, i])]
        panels.append(Panel(f"{what} ({axis}-axis)", f"{what} {axis}", series))
    return panels


def _write_run(tel: Telemetry, cfg: SimConfig, out: Path) -> None:
    write_telemetry_csv(tel, out / "telemetry.csv")
    write_metrics(compute_metrics(tel), out / "metrics.txt")
    (out / "config.json").write_text(dumps_config(cfg))
    for what in ("position", "error", "velocity"):
        write_panels(out / f"{what}.svg", _axis_panels(tel, cfg, what))


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tel = run(cfg)
    _write_run(tel, cfg, out)
    m = compute_metrics(tel)
    print(format_metrics(m), end="")
    print(f"wrote {len(tel)} records to {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = load_config(args.config_a)
    b = load_config(args.config_b)
    try:
        cmp = compare(a, b)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        return _fail(str(exc), EXIT_CONFIG)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    la, lb = f"A:{a.controller}", f"B:{b.controller}"
    lines = [f"# A = {args.config_a} ({a.controller})", f"# B = {args.config_b} ({b.controller})"]
    lines.append(format_metrics(cmp.metrics_a, "A.").rstrip())
    lines.append(format_metrics(cmp.metrics_b, "B.").rstrip())
    lines.append(format_metrics({f"delta.{k}": v for k, v in cmp.deltas.items()}).rstrip())
    for name in ("chattering_index", "max_overshoot", "rms_error"):
        for i, axis in enumerate("xy"):
            va = getattr(cmp.metrics_a, name)[i]
            vb = getattr(cmp.metrics_b, name)[i]
            rel = "<" if vb < va else (">" if vb > va else "=")
            lines.append(f"ordering.{name}_{axis}=B {rel} A")
    report = "\n".join(lines) + "\n"
    (out / "compare.txt").write_text(report)
    write_metrics(cmp.metrics_a, out / "metrics_a.txt")
    write_metrics(cmp.metrics_b, out / "metrics_b.txt")
    ta, tb = cmp.telemetry_a, cmp.telemetry_b
    for what, attr in (("error", "e"), ("control", "u_total"), ("position", "q")):
        panels = []
        for i, axis in enumerate("xy"):
            series = [Series(la, ta.t, getattr(ta, attr)[:, i]), Series(lb, tb.t, getattr(tb, attr)[:, i], dashed=True)]
            if what == "position":
                series.append(Series("q_d", ta.t, ta.q_d[:, i], dashed=True))
            panels.append(Panel(f"{what} ({axis}-axis)", f"{what} {axis}", series))
        write_panels(out / f"compare_{what}.svg", panels)
    print(report, end="")
    return EXIT_OK


def cmd_validate_frac(args) -> int:
    weights = _FAULTS[args.inject_fault] if args.inject_fault else None
    checks = run_checks(weights) if weights else run_checks()
    print(format_table(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CONFIG


def _parse_value(tok: str):
    try:
        return json.loads(tok)
    except json.JSONDecodeError:
        return tok


def _sweep_one(doc: dict) -> dict:
    cfg = config_from_dict(doc)
    try:
        return {"status": "ok", **compute_metrics(run(cfg)).as_dict()}
    except SimulationAborted as exc:
        return {"status": f"aborted: {exc}"}


def cmd_sweep(args) -> int:
    base = config_to_dict(load_config(args.config))
    values = [_parse_value(v.strip()) for v in args.values.split(",") if v.strip()]
    if not values:
        return _fail("--values: no values given", EXIT_CONFIG)
    docs = [set_dotted(base, args.param, v) for v in values]
    for doc in docs:
        config_from_dict(doc)  # fail fast on a bad value, naming the key
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, docs))
    else:
        results = [_sweep_one(d) for d in docs]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = sorted({k for r in results for k in r}, key=lambda k: (k != "status", k))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([args.param] + keys)
        for v, r in zip(values, results):
            w.writerow([json.dumps(v)] + [r.get(k, "") for k in keys])
    print(f"wrote {len(results)} runs to {out / 'sweep.csv'}")
    return EXIT_OK if all(r["status"] == "ok" for r in results) else EXIT_ABORT


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fosmc-gyro", description="Fractional sliding-mode gyroscope experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one config and write telemetry, metrics and plots")
    s.add_argument("config", help=f"JSON config file or preset name ({', '.join(PRESETS)})")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="run two configs on the same plant and report metric deltas")
    c.add_argument("config_a")
    c.add_argument("config_b")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate-frac", help="run the GL analytic oracle checks")
    v.add_argument("--inject-fault", choices=sorted(_FAULTS), help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_validate_frac)

    w = sub.add_parser("sweep", help="vary one config key over a list of values")
    w.add_argument("config")
    w.add_argument("--param", required=True, help="dotted key, e.g. surface.K_s")
    w.add_argument("--values", required=True, help="comma-separated JSON values")
    w.add_argument("--out", required=True)
    w.add_argument("--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(f"invalid config: {exc}", EXIT_CONFIG)
    except (OSError, ValueError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    except SimulationAborted as exc:
        return _fail(str(exc), EXIT_ABORT)


if __name__ == "__main__":
    sys.exit(main())
