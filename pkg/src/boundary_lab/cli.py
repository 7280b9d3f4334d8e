"""``lab <subcommand> --config <path> [--out <path>] [--plot]``.

Exit codes: 0 success, 1 invariant violation, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

from .config import load_config
from .errors import ConfigError, InvariantViolation, LabError, ParamError, TailDivergence
from .experiments import EXPERIMENTS, Report, run_selftest

COMMANDS = ["selftest", *EXPERIMENTS]


def _cell(v) -> str:
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    if isinstance(v, complex):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
        return str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


def render_csv(report: Report) -> tuple[str, str]:
    """Rows file and summary sidecar, both RFC 4180 style."""
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\r\n")
    w.writerow(report.columns)
    for r in report.rows:
        w.writerow([_cell(x) for x in r])
    summ = io.StringIO()
    w = csv.writer(summ, lineterminator="\r\n")
    w.writerow(["key", "value"])
    w.writerow(["experiment", report.experiment])
    for k, v in report.summary.items():
        w.writerow([k, _cell(v)])
    for msg in report.failures:
        w.writerow(["failure", msg])
    return rows.getvalue(), summ.getvalue()


def render_json(report: Report) -> str:
    doc = {
        "experiment": report.experiment,
        "params": report.params,
        "columns": report.columns,
        "rows": [[_jsonable(x) for x in r] for r in report.rows],
        "summary": {k: _jsonable(v) for k, v in report.summary.items()},
        "failures": report.failures,
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def write_report(report: Report, path: Path, fmt: str) -> list[Path]:
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path.write_text(render_json(report), encoding="utf-8")
        return [path]
    rows, summary = render_csv(report)
    side = path.with_name(path.stem + ".summary.csv")
    path.write_text(rows, encoding="utf-8", newline="")
    side.write_text(summary, encoding="utf-8", newline="")
    return [path, side]


def write_plot(report: Report, path: Path) -> Path | None:
    if report.plot is None or not report.rows:
        return None
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "boundary-lab"
    x_name, y_name, group = report.plot
    xs, ys = report.column(x_name), report.column(y_name)
    groups = report.column(group) if group else [""] * len(xs)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in dict.fromkeys(groups):
        pts = [(x, y) for x, y, g in zip(xs, ys, groups) if g == key and y == y]
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3, lw=0.8,
                    label=f"{group}={key}" if group else None)
    ax.set_xlabel(x_name)
    ax.set_ylabel(y_name)
    ax.set_title(report.experiment)
    if group:
        ax.legend(fontsize=7)
    out = path.with_suffix(".svg")
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lab", description="Boundary Sobolev laboratory")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--out", help="report path (overrides output_path)")
        sp.add_argument("--plot", action="store_true", help="also write an SVG plot")
        if name == "selftest":
            sp.add_argument("--inject-fault", action="store_true",
                            help="perturb one derivative to check that failures are caught")
    return ap


def run_command(name: str, cfg, inject_fault: bool = False) -> Report:
    if name == "selftest":
        return run_selftest(cfg, inject_fault=inject_fault)
    return EXPERIMENTS[name](cfg)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args.config)
        start = time.perf_counter()
        report = run_command(args.command, cfg, getattr(args, "inject_fault", False))
        report.wall_time = time.perf_counter() - start
    except (ConfigError, ParamError, TailDivergence) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 1
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out or cfg.output_path)
    written = write_report(report, out, cfg.format)
    if args.plot or cfg.plot:
        svg = write_plot(report, out)
        if svg:
            written.append(svg)
    print(f"{report.experiment}: {len(report.rows)} rows in {report.wall_time:.2f}s", file=sys.stderr)
    for p in written:
        print(f"wrote {p}", file=sys.stderr)
    if report.failures:
        for msg in report.failures:
            print(f"FAIL {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
