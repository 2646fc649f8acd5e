"""Command-line interface: synth, grid, validate, report.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 runtime
failure. Commands never mutate their inputs; outputs go to explicit paths.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import kernels, report as report_mod
from .embstore import (
    SPLIT_NAMES,
    EmbsFormatError,
    read_embs_file,
    split_view,
    write_embs_file,
)
from .gridrun import GridReport, GridRunError, GridSpec, default_workers, run_grid
from .synthgen import GROUP_TUPLE_LABELS, GROUP_TUPLE_ORDER, SpecError, SynthSpec, generate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="probe-bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic EMBS dataset from a spec file")
    p_synth.add_argument("spec", help="JSON spec file (dim, core_snr, spur_snr, counts, seed)")
    p_synth.add_argument("--out", required=True, help="output .embs path")

    p_grid = sub.add_parser("grid", help="run the hyperparameter grid on an EMBS dataset")
    p_grid.add_argument("embs", help="input .embs dataset")
    p_grid.add_argument("--grid", help="JSON grid config; defaults to the standard grid")
    p_grid.add_argument("--method", choices=["erm", "subg"], default="erm")
    p_grid.add_argument("--out", required=True, help="output report JSON path")
    p_grid.add_argument(
        "--workers",
        type=int,
        help="parallel training runs (default: PROBE_BENCH_WORKERS or all cores)",
    )

    p_val = sub.add_parser("validate", help="check an EMBS file and print its structure")
    p_val.add_argument("embs", help=".embs file to validate")

    p_rep = sub.add_parser("report", help="emit tables or scatter data from grid reports")
    rep_sub = p_rep.add_subparsers(dest="kind", required=True)
    p_tab = rep_sub.add_parser("table", help="per-cell table for one report")
    p_tab.add_argument("report", help="grid report JSON")
    p_tab.add_argument("--format", choices=list(report_mod.TABLE_FORMATS), default="markdown")
    p_tab.add_argument("--out", required=True)
    p_sca = rep_sub.add_parser("scatter", help="OA-vs-WGA scatter CSV incl. reference points")
    p_sca.add_argument(
        "reports", nargs="*", help="grid report JSONs, each optionally prefixed LABEL="
    )
    p_sca.add_argument("--out", required=True)

    return parser


def _split_group_summary(ds) -> list[str]:
    lines = []
    tuple_header = "/".join(GROUP_TUPLE_LABELS)
    for sid, name in SPLIT_NAMES.items():
        view = split_view(ds, sid)
        if len(view) == 0:
            lines.append(f"{name}: total=0")
            continue
        counts = view.group_counts()
        if ds.group_count == 4:
            ordered = "/".join(str(int(counts[g])) for g in GROUP_TUPLE_ORDER)
            lines.append(f"{name}: total={len(view)} counts {tuple_header}: {ordered}")
        else:
            by_id = " ".join(f"g{g}={int(c)}" for g, c in enumerate(counts))
            lines.append(f"{name}: total={len(view)} {by_id}")
    return lines


def _cmd_synth(args) -> int:
    try:
        text = Path(args.spec).read_text()
    except OSError as e:
        print(f"cannot read spec file: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        spec = SynthSpec.from_json(text)
    except SpecError as e:
        print(f"invalid spec: {e}", file=sys.stderr)
        return EXIT_USAGE
    ds = generate(spec)
    try:
        write_embs_file(ds, args.out)
    except OSError as e:
        print(f"write failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {args.out} ({ds.file_size()} bytes)")
    print(f"n={ds.n} dim={ds.dim} classes={ds.class_count} groups={ds.group_count}")
    for line in _split_group_summary(ds):
        print(line)
    return EXIT_OK


def _load_dataset(path: str):
    try:
        return read_embs_file(path), EXIT_OK
    except OSError as e:
        print(f"cannot read {path}: {e}", file=sys.stderr)
        return None, EXIT_DATA
    except (EmbsFormatError, ValueError) as e:
        print(f"invalid dataset {path}: {e}", file=sys.stderr)
        return None, EXIT_DATA


def _cmd_grid(args) -> int:
    ds, code = _load_dataset(args.embs)
    if ds is None:
        return code
    try:
        if args.grid is not None:
            grid = GridSpec.from_json(Path(args.grid).read_text(), method=args.method)
        else:
            grid = GridSpec(method=args.method)
    except OSError as e:
        print(f"cannot read grid config: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, TypeError) as e:
        print(f"invalid grid config: {e}", file=sys.stderr)
        return EXIT_DATA

    workers = args.workers if args.workers is not None else default_workers()
    try:
        rep = run_grid(ds, grid, workers=workers)
    except GridRunError as e:
        print(f"grid run failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as e:
        print(f"cannot run grid: {e}", file=sys.stderr)
        return EXIT_DATA

    try:
        Path(args.out).write_text(rep.to_canonical_json())
    except OSError as e:
        print(f"write failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    n_runs = len(grid.lrs) * len(grid.wds) * len(grid.seeds)
    sel = rep.selected_result()
    print(
        f"method={rep.method} runs={n_runs} workers={workers} "
        f"backend={kernels.active_backend_name()}"
    )
    print(f"selected cell {rep.selected.cell_id}: lr={rep.selected.lr:g} wd={rep.selected.wd:g}")
    print(
        f"selected val  WGA={sel.val_agg.mean_wga:.6f} OA={sel.val_agg.mean_oa:.6f} "
        f"(mean over {sel.val_agg.repeat_count} seeds)"
    )
    if sel.test_agg is not None:
        print(f"selected test WGA={sel.test_agg.mean_wga:.6f} OA={sel.test_agg.mean_oa:.6f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    ds, code = _load_dataset(args.embs)
    if ds is None:
        return code
    print(f"n={ds.n} dim={ds.dim} classes={ds.class_count} groups={ds.group_count}")
    for sid, name in SPLIT_NAMES.items():
        view = split_view(ds, sid)
        counts = view.group_counts() if len(view) else np.zeros(ds.group_count, dtype=int)
        hist = " ".join(f"g{g}={int(c)}" for g, c in enumerate(counts))
        print(f"split {name}: total={len(view)} {hist}")
    for msg in ds.split_coverage_warnings():
        print(f"warning: {msg}")
    print("ok")
    return EXIT_OK


def _load_report(path: str) -> GridReport:
    raw = json.loads(Path(path).read_text())
    return GridReport.from_json_dict(raw)


def _cmd_report(args) -> int:
    try:
        if args.kind == "table":
            rep = _load_report(args.report)
            text = report_mod.emit_table(rep, args.format)
        else:
            labeled = []
            for item in args.reports:
                label, sep, path = item.partition("=")
                if not sep:
                    label, path = Path(item).stem, item
                labeled.append((label, _load_report(path)))
            text = report_mod.emit_scatter(labeled)
    except OSError as e:
        print(f"cannot read report: {e}", file=sys.stderr)
        return EXIT_DATA
    except report_mod.UnknownFormatError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except (KeyError, ValueError) as e:
        print(f"invalid report: {e}", file=sys.stderr)
        return EXIT_DATA
    try:
        Path(args.out).write_text(text)
    except OSError as e:
        print(f"write failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    handlers = {
        "synth": _cmd_synth,
        "grid": _cmd_grid,
        "validate": _cmd_validate,
        "report": _cmd_report,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
