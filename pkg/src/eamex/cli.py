"""Command-line front end.

Exit codes: 0 success, 1 invalid input or fit failure, 2 external-model
transport failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from eamex.core import Task, ValidationError
from eamex.explain import compute_pdp_curves
from eamex.external import ExternalError
from eamex.models import ModelFitError
from eamex.radar import render_radar
from eamex.report import (
    ALL_FAMILIES,
    MetricsReport,
    deviation_map_csv,
    load_config_file,
    render_table,
    run_suite,
)


def _add_common(parser: argparse.ArgumentParser, deviations: bool = False):
    parser.add_argument("--config", required=True,
                        help="path to the run-config JSON document")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out-json", metavar="PATH",
                        help="write the JSON report here")
    parser.add_argument("--out-table", metavar="PATH",
                        help="write the text table here instead of stdout")
    if deviations:
        parser.add_argument("--out-deviations", metavar="PATH",
                            help="write the rank-deviation matrix CSV here "
                                 "(single-model configs only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eamex",
        description="Explainer-agnostic model-explainability metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every metric family")
    _add_common(run)
    run.add_argument("--out-radar", metavar="PATH",
                     help="write the radar-chart SVG here")
    run.add_argument("--parallel-models", action="store_true",
                     help="evaluate models concurrently (same output)")
    run.set_defaults(families=ALL_FAMILIES, func=_cmd_suite)

    for name, family, help_text in (
        ("global", "global", "global-importance metrics only"),
        ("local", "local", "local-importance metrics only"),
        ("surrogate", "surrogate", "surrogate metrics only"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        _add_common(cmd, deviations=(name == "local"))
        cmd.set_defaults(families=(family,), func=_cmd_suite)

    pdp = sub.add_parser("pdp", help="emit one feature's dependence grid as CSV")
    pdp.add_argument("--config", required=True)
    pdp.add_argument("--feature", required=True,
                     help="feature name from the dataset header")
    pdp.add_argument("--model", default=None,
                     help="model name (required when the config has several)")
    pdp.add_argument("--grid-size", type=int, default=None,
                     help="override config.params.grid_size")
    pdp.add_argument("--out", metavar="PATH",
                     help="write the CSV here instead of stdout")
    pdp.set_defaults(func=_cmd_pdp)
    return parser


def _write_outputs(report: MetricsReport, args) -> None:
    table = render_table(report)
    if args.out_json:
        Path(args.out_json).write_text(report.to_json(), encoding="utf-8")
    if args.out_table:
        Path(args.out_table).write_text(table, encoding="utf-8")
    if getattr(args, "out_radar", None):
        Path(args.out_radar).write_bytes(render_radar(report))
    if not args.out_table:
        sys.stdout.write(table)


def _cmd_suite(args) -> int:
    config = load_config_file(args.config)
    report = run_suite(config, families=args.families, seed=args.seed,
                       parallel=getattr(args, "parallel_models", False))
    _write_outputs(report, args)
    if getattr(args, "out_deviations", None):
        maps = {name: m for name, m in report.deviation_maps.items()
                if m is not None}
        if not maps:
            raise ValidationError(
                "no local importance matrix was computed, so there is no "
                "rank-deviation matrix to write"
            )
        if len(maps) > 1:
            raise ValidationError(
                "--out-deviations works with a single model; the config has "
                f"{len(maps)} ({sorted(maps)})"
            )
        ((_, dev_map),) = maps.items()
        Path(args.out_deviations).write_text(deviation_map_csv(dev_map),
                                             encoding="utf-8")
    return 0


def _cmd_pdp(args) -> int:
    from eamex.report import _resolve_handle  # shared model resolution

    config = load_config_file(args.config)
    dataset = config.dataset
    if args.feature not in dataset.feature_names:
        raise ValidationError(
            f"unknown feature {args.feature!r}; dataset has "
            f"{list(dataset.feature_names)}"
        )
    feature_index = dataset.feature_names.index(args.feature)

    specs = {spec.name: spec for spec in config.models}
    if args.model is None:
        if len(specs) > 1:
            raise ValidationError(
                f"config has {len(specs)} models; pick one with --model"
            )
        spec = config.models[0]
    elif args.model in specs:
        spec = specs[args.model]
    else:
        raise ValidationError(
            f"unknown model {args.model!r}; config has {sorted(specs)}"
        )

    grid_size = args.grid_size or config.params.grid_size
    handle = _resolve_handle(spec, dataset, dataset.task)
    try:
        curves = compute_pdp_curves(dataset, handle, feature_index,
                                    grid_size=grid_size)
    finally:
        close = getattr(handle.impl, "close", None)
        if close is not None:
            close()

    if dataset.task is Task.CLASSIFICATION and len(curves) > 1:
        header = ["x"] + [f"class_{c}" for c in range(len(curves))]
    else:
        header = ["x", "value"]
    lines = [",".join(header)]
    grid = curves[0].grid
    for i, x in enumerate(grid):
        row = [repr(float(x))] + [repr(float(c.values[i])) for c in curves]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExternalError as exc:
        print(f"eamex: external model failure: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ModelFitError) as exc:
        print(f"eamex: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"eamex: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
