"""INI-style schema and run configuration files.

Schema file: an optional ``[schema]`` section with ``missing``, then one
``[column <name>]`` section per column, in column order::

    [schema]
    missing = "", NA

    [column Water Temperature]
    kind = numeric
    unit = degC
    range = 9.1, 31.5

Run file: sections ``[run]`` (data, schema, out, seed), ``[pipeline]``
(model, roughsets, threshold, bins, decision_bins, ratio, target, ridge,
treat_numeric_as_categorical), ``[mlp]`` (layer_widths, learning_rate,
adam_beta1, adam_beta2, adam_epsilon, epochs, batch_size) and ``[gbt]``
(n_rounds, max_depth, learning_rate, reg_lambda, min_samples_leaf). Every key
is optional.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .evaluation import ExperimentConfig
from .models import GbtConfig, MlpConfig
from .tabular import DEFAULT_MISSING, ColumnSchema, DiscretizationSpec, SchemaError

__all__ = ["ConfigError", "RunConfig", "build_run_config", "dump_schema", "load_schema", "read_run_file"]

COLUMN_PREFIX = "column "


class ConfigError(ValueError):
    pass


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    return parser


def _read(path: str | Path) -> configparser.ConfigParser:
    parser = _parser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parser


def _split_list(text: str) -> list[str]:
    row = next(csv.reader([text], skipinitialspace=True), [])
    return [cell.strip() for cell in row]


def load_schema(path: str | Path) -> tuple[tuple[ColumnSchema, ...], tuple[str, ...]]:
    """Read a schema file; returns the columns and the missing-value sentinels."""
    parser = _read(path)
    missing = DEFAULT_MISSING
    if parser.has_section("schema") and "missing" in parser["schema"]:
        missing = tuple(_split_list(parser["schema"]["missing"]))
    columns = []
    for section in parser.sections():
        if section == "schema":
            continue
        if not section.startswith(COLUMN_PREFIX):
            raise ConfigError(f"{path}: unexpected section [{section}]")
        name = section[len(COLUMN_PREFIX) :].strip()
        body = parser[section]
        unknown = set(body) - {"kind", "unit", "range"}
        if unknown:
            raise ConfigError(f"{path}: [{section}] unknown key {sorted(unknown)[0]!r}")
        soft_range = None
        if "range" in body:
            parts = _split_list(body["range"])
            if len(parts) != 2:
                raise ConfigError(f"{path}: [{section}] range needs 'min, max'")
            try:
                soft_range = (float(parts[0]), float(parts[1]))
            except ValueError as exc:
                raise ConfigError(f"{path}: [{section}] bad range: {exc}") from exc
        try:
            columns.append(ColumnSchema(name, body.get("kind", "numeric"), body.get("unit", ""), soft_range))
        except SchemaError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if not columns:
        raise ConfigError(f"{path}: no [column ...] sections")
    names = [c.name for c in columns]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: duplicate column sections")
    return tuple(columns), missing


def dump_schema(schema, missing=DEFAULT_MISSING) -> str:
    lines = ["[schema]", "missing = " + ", ".join(f'"{m}"' if m == "" else m for m in missing), ""]
    for col in schema:
        lines.append(f"[{COLUMN_PREFIX}{col.name}]")
        lines.append(f"kind = {col.kind}")
        if col.unit:
            lines.append(f"unit = {col.unit}")
        if col.soft_range is not None:
            lines.append(f"range = {col.soft_range[0]!r}, {col.soft_range[1]!r}")
        lines.append("")
    return "\n".join(lines)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _bool(value: Any, key: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ConfigError(f"{key}: expected on/off, got {value!r}")


_PIPELINE_KEYS = {
    "model": str,
    "roughsets": None,
    "threshold": float,
    "bins": int,
    "decision_bins": int,
    "ratio": float,
    "target": str,
    "ridge": float,
    "treat_numeric_as_categorical": None,
}
_MLP_KEYS = {
    "layer_widths": None,
    "learning_rate": float,
    "adam_beta1": float,
    "adam_beta2": float,
    "adam_epsilon": float,
    "epochs": int,
    "batch_size": int,
}
_GBT_KEYS = {
    "n_rounds": int,
    "max_depth": int,
    "learning_rate": float,
    "reg_lambda": float,
    "min_samples_leaf": int,
}
_RUN_KEYS = {"data": str, "schema": str, "out": str, "seed": int}
_SECTIONS = {"run": _RUN_KEYS, "pipeline": _PIPELINE_KEYS, "mlp": _MLP_KEYS, "gbt": _GBT_KEYS}


def read_run_file(path: str | Path) -> dict[str, dict[str, str]]:
    parser = _read(path)
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, value in parser[section].items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{path}: [{section}] unknown key {key!r}")
            out.setdefault(section, {})[key] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    data: str | None
    schema: str | None
    out: str | None
    seed: int
    experiment: ExperimentConfig

    def to_dict(self) -> dict:
        return {
            "data": self.data,
            "experiment": self.experiment.to_dict(),
            "out": self.out,
            "schema": self.schema,
            "seed": self.seed,
        }


def _convert(section: str, key: str, value: Any):
    conv = _SECTIONS[section][key]
    try:
        if key in ("roughsets", "treat_numeric_as_categorical"):
            return _bool(value, key)
        if key == "layer_widths":
            if isinstance(value, str):
                return tuple(int(v) for v in _split_list(value))
            return tuple(int(v) for v in value)
        return conv(value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def build_run_config(
    file_values: Mapping[str, Mapping[str, Any]] | None = None,
    overrides: Mapping[str, Mapping[str, Any]] | None = None,
    env_seed: str | None = None,
) -> RunConfig:
    """Layer defaults, then file values, then explicit overrides.

    ``env_seed`` is used only when neither the file nor the overrides give a seed.
    """
    merged: dict[str, dict[str, Any]] = {s: {} for s in _SECTIONS}
    for layer in (file_values or {}, overrides or {}):
        for section, values in layer.items():
            for key, value in values.items():
                if value is None:
                    continue
                if section not in _SECTIONS or key not in _SECTIONS[section]:
                    raise ConfigError(f"unknown setting {section}.{key}")
                merged[section][key] = _convert(section, key, value)
    run = merged["run"]
    if "seed" not in run:
        run["seed"] = _convert("run", "seed", env_seed) if env_seed not in (None, "") else 42
    seed = run["seed"]
    pipe = merged["pipeline"]
    try:
        disc = DiscretizationSpec(
            bins_per_feature=pipe.pop("bins", DiscretizationSpec.bins_per_feature),
            decision_bins=pipe.pop("decision_bins", DiscretizationSpec.decision_bins),
        )
        mlp = MlpConfig(seed=seed, **merged["mlp"])
        gbt = GbtConfig(**merged["gbt"])
        if "roughsets" in pipe:
            pipe["use_roughsets"] = pipe.pop("roughsets")
        experiment = ExperimentConfig(discretization=disc, seed=seed, mlp=mlp, gbt=gbt, **pipe)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return RunConfig(run.get("data"), run.get("schema"), run.get("out"), seed, experiment)


def experiment_from_dict(doc: Mapping) -> ExperimentConfig:
    """Inverse of :meth:`ExperimentConfig.to_dict`."""
    doc = dict(doc)
    doc["discretization"] = DiscretizationSpec(**doc["discretization"])
    doc["mlp"] = MlpConfig(**doc["mlp"])
    doc["gbt"] = GbtConfig(**doc["gbt"])
    return dataclasses.replace(ExperimentConfig(), **doc)
