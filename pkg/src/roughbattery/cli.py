"""Command-line entry point: ``roughbattery <subcommand> [options]``.

Exit status is 0 on success, 1 on a usage error and 2 on a data, config or
I/O error. Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import ConfigError, RunConfig, build_run_config, load_schema, read_run_file
from .evaluation import PipelineError, compare_models, preprocess, run_experiment, select_features
from .models import dumps_model
from .reporting import predictions_csv, to_json, to_markdown
from .tabular import (
    CHICAGO_SCHEMA,
    DEFAULT_MISSING,
    SYNTH_SCHEMA,
    CsvParseError,
    SchemaError,
    load_csv,
    synth_generate,
    validate_ranges,
)


SEED_ENV = "ROUGHBATTERY_SEED"

COMMANDS = ("validate", "preprocess", "reduce", "train", "evaluate", "compare", "synth")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run configuration file (INI)")
    p.add_argument("--data", help="input CSV")
    p.add_argument("--schema", help="schema file (INI); defaults to the built-in sensor schema")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help=f"global seed (fallback: ${SEED_ENV}, then 42)")
    p.add_argument("--model", choices=("mlp", "linear", "gbt"))
    p.add_argument("--roughsets", choices=("on", "off"))
    p.add_argument("--threshold", type=float, help="significance threshold for feature retention")
    p.add_argument("--bins", type=int, help="equal-frequency bins per conditional attribute")
    p.add_argument("--ratio", type=float, help="test fraction of the train/test split")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="roughbattery", description="Rough-set battery-life prediction pipeline.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}", parser_class=_Parser)
    helps = {
        "validate": "report values outside the schema's soft ranges",
        "preprocess": "write the encoded, scaled table plus encoder/scaler JSON",
        "reduce": "rough-set feature reduction; writes reduct JSON and the reduced table",
        "train": "train one model on the training split; writes model JSON and loss trace",
        "evaluate": "train and score one model; writes metrics JSON",
        "compare": "run every model with and without reduction; writes JSON, markdown and predictions",
    }
    for name, text in helps.items():
        _add_pipeline_flags(sub.add_parser(name, help=text, description=text))
    synth = sub.add_parser("synth", help="generate a synthetic sensor table", description="generate a synthetic sensor table")
    synth.add_argument("--rows", type=int, required=True)
    synth.add_argument("--seed", type=int)
    synth.add_argument("-o", "--out", required=True, help="output CSV path")
    return parser


def _run_config(args) -> RunConfig:
    file_values = read_run_file(args.config) if args.config else {}
    overrides = {
        "run": {"data": args.data, "schema": args.schema, "out": args.out, "seed": args.seed},
        "pipeline": {
            "model": args.model,
            "roughsets": args.roughsets,
            "threshold": args.threshold,
            "bins": args.bins,
            "ratio": args.ratio,
        },
    }
    return build_run_config(file_values, overrides, os.environ.get(SEED_ENV))


def _header(path: str) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return next(csv.reader(fh), [])


def _load_table(cfg: RunConfig):
    if not cfg.data:
        raise DataError("no dataset given (--data or [run] data)")
    if not Path(cfg.data).is_file():
        raise DataError(f"dataset not found: {cfg.data}")
    if cfg.schema:
        schema, missing = load_schema(cfg.schema)
    else:
        header = set(_header(cfg.data))
        schema = SYNTH_SCHEMA if header == {c.name for c in SYNTH_SCHEMA} else CHICAGO_SCHEMA
        missing = DEFAULT_MISSING
    return load_csv(cfg.data, schema, missing)


def _out_dir(cfg: RunConfig) -> Path:
    if not cfg.out:
        raise DataError("no output directory given (--out or [run] out)")
    return Path(cfg.out)


def _write_all(files: dict[Path, str]) -> None:
    """Write only after every artifact has been computed, so failures leave nothing behind."""
    try:
        for path in files:
            path.parent.mkdir(parents=True, exist_ok=True)
        for path, text in files.items():
            path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write output: {exc}") from exc


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _manifest(cfg: RunConfig, command: str, files: dict[Path, str]) -> dict[Path, str]:
    # CSV artifacts cannot carry the config inline; the manifest records it for them.
    out = _out_dir(cfg)
    names = sorted(p.name for p in files)
    files[out / "manifest.json"] = _dump({"command": command, "config": cfg.to_dict(), "files": names})
    return files


def cmd_validate(cfg: RunConfig) -> None:
    report = validate_ranges(_load_table(cfg))
    for name, count in report.violations.items():
        if count:
            sys.stderr.write(f"roughbattery: warning: {name}: {count} value(s) outside the soft range\n")
    sys.stdout.write(_dump({**report.to_dict(), "config": cfg.to_dict()}))


def cmd_preprocess(cfg: RunConfig) -> None:
    table = _load_table(cfg)
    prep = preprocess(table, cfg.experiment)
    out = _out_dir(cfg)
    encoded = prep.features.select(prep.features.names)
    files = {
        out / "preprocessed.csv": _with_target(encoded, prep.target, cfg.experiment.target),
        out / "scaler.json": _dump({"config": cfg.to_dict(), "scaler": prep.scaler.to_dict()}),
        out / "encoder.json": _dump({"config": cfg.to_dict(), "encoder": prep.encoder.to_dict()}),
    }
    _write_all(_manifest(cfg, "preprocess", files))


def _with_target(features, target, name) -> str:
    from .tabular import ColumnSchema, DataTable

    cols = {n: features.column(n) for n in features.names}
    cols[name] = target
    return DataTable((*features.schema, ColumnSchema(name)), cols).to_csv()


def cmd_reduce(cfg: RunConfig) -> None:
    table = _load_table(cfg)
    prep = preprocess(table, cfg.experiment)
    retained, reduct = select_features(prep.features, prep.target, cfg.experiment)
    out = _out_dir(cfg)
    doc = {
        **reduct.to_dict(),
        "config": cfg.to_dict(),
        "features_after": len(retained),
        "features_before": len(prep.features.names),
        "retained": list(retained),
    }
    files = {
        out / "reduct.json": _dump(doc),
        out / "reduced.csv": _with_target(prep.features.select(retained), prep.target, cfg.experiment.target),
    }
    _write_all(_manifest(cfg, "reduce", files))


def cmd_train(cfg: RunConfig) -> None:
    result = run_experiment(_load_table(cfg), cfg.experiment)
    out = _out_dir(cfg)
    trace = "step,loss\n" + "".join(f"{i + 1},{float(v)!r}\n" for i, v in enumerate(result.loss_trace))
    model = dumps_model(
        result.model,
        config=cfg.to_dict(),
        features=list(result.retained),
        encoder=result.encoder.to_dict(),
        scaler=result.scaler.to_dict(),
    )
    files = {out / "model.json": model, out / "loss_trace.csv": trace}
    _write_all(_manifest(cfg, "train", files))


def cmd_evaluate(cfg: RunConfig) -> None:
    result = run_experiment(_load_table(cfg), cfg.experiment)
    out = _out_dir(cfg)
    doc = {
        **result.report.to_dict(),
        "config": cfg.to_dict(),
        "features_after": result.features_after,
        "features_before": result.features_before,
        "retained": list(result.retained),
    }
    files = {out / "metrics.json": _dump(doc)}
    _write_all(_manifest(cfg, "evaluate", files))


def cmd_compare(cfg: RunConfig) -> None:
    table = compare_models(_load_table(cfg), cfg.experiment)
    out = _out_dir(cfg)
    markdown = to_markdown(table)
    files = {
        out / "comparison.json": to_json(table, cfg.to_dict()),
        out / "comparison.md": markdown,
    }
    for row in table.rows:
        if row.result is not None:
            name = f"predictions_{row.model}_{'roughsets' if row.use_roughsets else 'full'}.csv"
            files[out / name] = predictions_csv(row.result.observed, row.result.predicted)
    _write_all(_manifest(cfg, "compare", files))
    sys.stdout.write(markdown)


def cmd_synth(args) -> None:
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        seed = int(env) if env else 42
    if args.rows < 1:
        raise UsageError("--rows must be >= 1")
    table = synth_generate(args.rows, seed)
    path = Path(args.out)
    meta = _dump({"command": "synth", "rows": args.rows, "seed": seed})
    _write_all({path: table.to_csv(), path.with_name(path.name + ".json"): meta})


HANDLERS = {
    "validate": cmd_validate,
    "preprocess": cmd_preprocess,
    "reduce": cmd_reduce,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage())
        if args.command == "synth":
            cmd_synth(args)
        else:
            cfg = _run_config(args)
            HANDLERS[args.command](cfg)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except (
        ConfigError,
        DataError,
        SchemaError,
        CsvParseError,
        PipelineError,
        OSError,
        ValueError,
    ) as exc:
        sys.stderr.write(f"roughbattery: error: {exc}\n")
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
