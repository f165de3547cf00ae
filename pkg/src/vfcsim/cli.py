"""Command-line front end.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage or validation
errors.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import logging
import sys
from pathlib import Path

from . import catalog as catalog_mod
from . import dataset as dataset_mod
from . import engine
from . import graph as graph_mod
from .config import ConfigError, load_config
from .io import RunManifest, atomic_write_text, dumps_json, lines_text, timeseries_csv

logger = logging.getLogger("vfcsim")


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


# gen-graph


def build_graph_from_args(args) -> graph_mod.CollaborationGraph:
    mode = args.mode
    if mode == "config-model":
        if args.input or args.degrees_from:
            raise UsageError("config-model mode takes --degrees or --n, not --in/--degrees-from")
        if args.degrees is not None:
            if args.n is not None and args.n != len(args.degrees):
                raise UsageError("--n does not match the length of --degrees")
            degrees = args.degrees
        elif args.n is not None:
            degrees = graph_mod.lognormal_degrees(
                args.n, args.mean_degree, args.sigma, engine.derive_seed(args.seed, 1)
            )
        else:
            raise UsageError("config-model mode needs --degrees or --n")
        if any(d < 0 for d in degrees):
            raise UsageError("degrees must be non-negative")
        return graph_mod.generate_configuration_model(degrees, args.seed)
    if mode == "inflate":
        if args.input or args.degrees is not None:
            raise UsageError("inflate mode takes --degrees-from and --n only")
        if not args.degrees_from or args.n is None:
            raise UsageError("inflate mode needs --degrees-from and --n")
        records = dataset_mod.read_dataset(args.degrees_from)
        source = [r.degree for r in records.users.values()]
        degrees = graph_mod.resample_degrees(source, args.n, engine.derive_seed(args.seed, 1))
        return graph_mod.generate_configuration_model(degrees, args.seed)
    if args.degrees is not None or args.degrees_from or args.n is not None:
        raise UsageError("edge-list mode takes --in only")
    if not args.input:
        raise UsageError("edge-list mode needs --in")
    return graph_mod.read_edge_list(args.input)


def cmd_gen_graph(args) -> int:
    manifest = RunManifest("gen-graph", _echo(args), [args.seed])
    graph = build_graph_from_args(args)
    out = Path(args.out)
    atomic_write_text(out, graph.dumps() + "\n")
    manifest.outputs.append(str(out))
    manifest.finish(_manifest_path(out))
    logger.info("wrote %d users, %d edges to %s", graph.n_users, graph.n_edges, out)
    return 0


# gen-catalog


def cmd_gen_catalog(args) -> int:
    manifest = RunManifest("gen-catalog", _echo(args), [args.seed])
    try:
        cat = catalog_mod.generate_synthetic_catalog(
            n_apps=args.n_apps,
            zipf_exponent=args.zipf,
            apps_per_vendor_mean=args.apps_per_vendor,
            related_size=args.related,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    atomic_write_text(out, lines_text(cat.dump()))
    manifest.outputs.append(str(out))
    manifest.finish(_manifest_path(out))
    return 0


# simulate


def simulation_outputs(config: engine.SimConfig, results) -> dict[str, str]:
    """File name -> contents for a finished simulation."""
    files = {}
    if len(results) == 1:
        (only,) = results.values()
        files["timeseries.csv"] = timeseries_csv(only)
    else:
        for name, reps in results.items():
            files[f"timeseries_{name}.csv"] = timeseries_csv(reps)
    files["summary.json"] = dumps_json(engine.summarize(config, results))
    return files


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.replicates is not None:
        if args.replicates < 1:
            raise UsageError("--replicates must be at least 1")
        config.replicates = args.replicates
    seeds = [engine.replicate_seed(config.seed, r) for r in range(config.replicates)]
    manifest = RunManifest("simulate", config.to_dict(), seeds)
    results = engine.run(config)
    out = Path(args.out)
    for name, text in simulation_outputs(config, results).items():
        atomic_write_text(out / name, text)
        manifest.outputs.append(str(out / name))
    for name, reps in results.items():
        sat = sum(r.events[engine.SATURATED] for r in reps)
        if sat:
            logger.warning("%s: %d saturated step(s)", name, sat)
    manifest.finish(out / "manifest.json")
    return 0


# analyze


def run_analysis(dataset_path, thresholds, seed, n_files_min, n_apps_min) -> str:
    records = dataset_mod.read_dataset(dataset_path)
    records = dataset_mod.impute_collaborator_apps(records, seed)
    rows = dataset_mod.sweep_p_min_shared(records, thresholds, n_files_min, n_apps_min)
    return dataset_mod.analysis_csv(rows)


def cmd_analyze(args) -> int:
    thresholds = args.thresholds
    if any(not 0.0 <= t <= 1.0 for t in thresholds):
        raise UsageError("thresholds must lie in [0, 1]")
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise UsageError("thresholds must be ascending")
    manifest = RunManifest("analyze", _echo(args), [args.seed])
    text = run_analysis(args.dataset, thresholds, args.seed, args.n_files_min, args.n_apps_min)
    out = Path(args.out)
    atomic_write_text(out, text)
    manifest.outputs.append(str(out))
    manifest.finish(_manifest_path(out))
    return 0


# report

REPORT_HEADER = [
    "source", "model", "replicates",
    "final_avg_aggregate_vfc_mean", "final_avg_aggregate_vfc_std",
    "ratio_mean", "ratio_std", "ratio_stderr",
]


def report_table(summaries: list[tuple[str, dict]]) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for source, summary in summaries:
        for name in sorted(summary["models"]):
            m = summary["models"][name]
            ratio = m.get("ratio_vs_baseline") or {}
            fin = m["final_avg_aggregate_vfc"]

            def cell(x):
                return "" if x is None else repr(x)

            writer.writerow([
                source, name, summary["replicates"], cell(fin["mean"]), cell(fin["std"]),
                cell(ratio.get("mean")), cell(ratio.get("std")), cell(ratio.get("stderr")),
            ])
    return buf.getvalue()


def cmd_report(args) -> int:
    summaries = []
    for path in args.summaries:
        with open(path, encoding="utf-8") as fh:
            summaries.append((str(path), json.load(fh)))
    out = Path(args.out)
    manifest = RunManifest("report", _echo(args), [])
    atomic_write_text(out, report_table(summaries))
    manifest.outputs.append(str(out))
    manifest.finish(_manifest_path(out))
    return 0


def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vfcsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-graph", help="build a collaboration graph")
    g.add_argument("--mode", choices=["config-model", "inflate", "edge-list"], required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--degrees", type=_ints)
    g.add_argument("--degrees-from", dest="degrees_from")
    g.add_argument("--in", dest="input")
    g.add_argument("--mean-degree", type=float, default=15.0)
    g.add_argument("--sigma", type=float, default=0.8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_graph)

    c = sub.add_parser("gen-catalog", help="generate a synthetic app catalog")
    c.add_argument("--n-apps", type=int, default=1000)
    c.add_argument("--zipf", type=float, default=1.0)
    c.add_argument("--related", type=int, default=5)
    c.add_argument("--apps-per-vendor", type=float, default=1.3)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_gen_catalog)

    s = sub.add_parser("simulate", help="run the adoption simulation")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--replicates", type=int)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="collaborator-impact sweep over a dataset")
    a.add_argument("--dataset", required=True)
    a.add_argument("--thresholds", type=_floats, default=[0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--n-files-min", type=int, default=dataset_mod.N_FILES_MIN)
    a.add_argument("--n-apps-min", type=int, default=dataset_mod.N_APPS_MIN)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("report", help="merge summary.json files into one table")
    r.add_argument("--summaries", nargs="+", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"vfcsim {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - top-level runtime failure
        print(f"vfcsim {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
