"""Operator command line.

Subcommands: ingest (validate a panel CSV into a store), lights (batch
zonal statistics over monthly rasters), run (execute an experiment
config), gradcheck (finite-difference audit of a model family), report
(re-render the tables recorded in a CVRun manifest).

Exit codes: 0 success, 1 runtime or data error, 2 usage or config error.
No subcommand touches the network.
"""

import argparse
import json
import os
import re
import sys

import numpy as np

from .errors import ConfigError, GdpbenchError
from .lights import LightTable, load_mask, load_raster, zonal_stats
from .nn import gradient_check
from .panel import PanelSchema, load_panel
from .pipeline import ExperimentConfig, rows_from_jsonable, run_experiment
from .report import emit_report
from .training import build_model

_RASTER_STEM = re.compile(r"(\d{4})[-_](\d{2})$")


def _cmd_ingest(args) -> int:
    with open(args.schema, encoding="utf-8") as fh:
        raw = json.load(fh)
    schema = PanelSchema(tuple(raw["indicators"]), raw["target"], raw["frequency"])
    panel = load_panel(args.data, schema)
    store = {
        "schema": {
            "indicators": list(schema.indicator_names),
            "target": schema.target_name,
            "frequency": schema.frequency,
        },
        "schema_fingerprint": schema.fingerprint(),
        "countries": list(panel.countries),
        "periods": list(panel.periods),
        "values": [
            [[panel.values[c, p, j] if panel.present[c, p, j] else None
              for j in range(panel.values.shape[2])]
             for p in range(len(panel.periods))]
            for c in range(len(panel.countries))
        ],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(store, fh, sort_keys=True, indent=2)
        fh.write("\n")
    present = int(panel.present.sum())
    total = int(panel.present.size)
    print(f"ingested {len(panel.countries)} countries x {len(panel.periods)} periods "
          f"({present}/{total} cells present) -> {args.out}")
    print(f"schema fingerprint: {schema.fingerprint()}")
    return 0


def _cmd_lights(args) -> int:
    mask = load_mask(args.mask, country=args.country)
    names = sorted(n for n in os.listdir(args.rasters) if n.endswith(".rast"))
    if not names:
        raise GdpbenchError(f"no .rast files in {args.rasters}")
    table = LightTable()
    for name in names:
        stem = os.path.splitext(name)[0]
        match = _RASTER_STEM.search(stem)
        if not match:
            raise GdpbenchError(
                f"{name}: raster names must end in YYYY_MM or YYYY-MM")
        year, month = int(match.group(1)), int(match.group(2))
        grid = load_raster(os.path.join(args.rasters, name))
        total, mean, std = zonal_stats(grid, mask)
        table.add(args.country, year, month, total, mean, std)
    table.to_csv(args.out)
    print(f"wrote {len(names)} monthly rows for {args.country} -> {args.out}")
    return 0


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.out:
        # a command-line override is relative to the caller's directory,
        # not the config file's
        cfg.output_dir = os.path.abspath(args.out)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    result = run_experiment(cfg, base_dir=base_dir, jobs=args.jobs)
    run = result["run"]
    print(f"config hash: {result['config_hash']}")
    print(f"winning grid point: {run.grid[run.winner]}")
    print(f"mean fold loss: {run.mean_losses[run.winner]:.6f}")
    print(f"manifest: {result['manifest']}")
    print(f"report:   {result['report_markdown']}")
    return 0


_GRADCHECK_BUILDERS = {
    "mlp": ("mlp", {"input_dim": 4, "hidden": (6,), "activation": "tanh"},
            lambda rng: rng.normal(size=(3, 4))),
    "lstm": ("lstm", {"input_dim": 2, "hidden_size": 3},
             lambda rng: rng.normal(size=(2, 4, 2))),
    "patch": ("patch", {"window": 4, "channels": 2, "patch_len": 2, "stride": 2,
                        "d_model": 4, "heads": 2, "depth": 1},
              lambda rng: rng.normal(size=(2, 4, 2))),
    "rt": ("rt", {"embed_dim": 8, "proj_dim": 4, "value_dim": 2, "depth": 1,
                  "heads": 2, "max_tokens": 8},
           lambda rng: (rng.normal(size=(2, 4, 8)), rng.normal(size=(2, 4)))),
}


def _cmd_gradcheck(args) -> int:
    family, config, sampler = _GRADCHECK_BUILDERS[args.family]
    model = build_model(family, config)
    params = model.init_params(args.seed)
    rng = np.random.default_rng(args.seed + 1)
    x = sampler(rng)
    g, pred = model.build(params, 2 if family != "mlp" else 3, x)
    loss = g.mean(g.mul(pred, pred))
    report = gradient_check(g, loss, model.bindings(x), eps=1e-5)
    print(f"{args.family}: max relative gradient error {report.max_rel_err:.3e} "
          f"(eps={report.eps})")
    for name in sorted(report.per_param):
        print(f"  {name}: {report.per_param[name]:.3e}")
    if report.excluded:
        print(f"  excluded (relu at 0): {', '.join(report.excluded)}")
    return 0 if report.max_rel_err < 1e-4 else 1


def _cmd_report(args) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if "report_rows" not in manifest:
        raise GdpbenchError(f"{args.manifest} carries no report rows")
    rows = rows_from_jsonable(manifest["report_rows"])
    emit_report(rows, args.format, args.out)
    print(f"re-rendered {len(rows)} row(s) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gdpbench",
        description="Multi-country GDP growth forecasting benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a panel CSV into a JSON store")
    p.add_argument("--data", required=True, help="panel CSV path")
    p.add_argument("--schema", required=True, help="schema JSON path")
    p.add_argument("--out", required=True, help="store output path")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("lights", help="zonal statistics over monthly rasters")
    p.add_argument("--rasters", required=True, help="directory of *.rast files")
    p.add_argument("--mask", required=True, help="country mask file")
    p.add_argument("--country", required=True, help="country code for the CSV")
    p.add_argument("--out", required=True, help="light CSV output path")
    p.set_defaults(fn=_cmd_lights)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--jobs", type=int, default=1,
                   help="max parallel fold trainings (results are identical)")
    p.add_argument("--out", default=None, help="override the output directory")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("family", choices=sorted(_GRADCHECK_BUILDERS))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_gradcheck)

    p = sub.add_parser("report", help="re-render reports from a CVRun manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return 1
    except GdpbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
