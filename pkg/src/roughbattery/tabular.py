"""Typed tables for the beach-sensor data and the preprocessing steps around them.

A :class:`DataTable` is immutable. Numeric columns are float arrays with NaN
marking a missing cell; categorical and timestamp columns are object arrays
holding ``str`` labels or ``None``. Every transformation returns a new table.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "CHICAGO_SCHEMA",
    "SYNTH_SCHEMA",
    "TARGET",
    "ColumnSchema",
    "CsvParseError",
    "DataTable",
    "DiscretizationSpec",
    "EncoderMap",
    "ScalerParams",
    "SchemaError",
    "ValidationReport",
    "decode_one_hot",
    "discretize",
    "drop_columns",
    "imputation_values",
    "impute_mean",
    "load_csv",
    "one_hot_encode",
    "retype_categorical",
    "standard_scale",
    "synth_generate",
    "validate_ranges",
]

NUMERIC = "numeric"
CATEGORICAL = "categorical"
TIMESTAMP = "timestamp"
KINDS = (NUMERIC, CATEGORICAL, TIMESTAMP)

DEFAULT_MISSING = ("", "NA")


class SchemaError(ValueError):
    pass


class CsvParseError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(message)
        self.lineno = lineno


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str = NUMERIC
    unit: str = ""
    soft_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.soft_range is not None:
            if self.kind != NUMERIC:
                raise SchemaError(f"column {self.name!r}: soft_range only allowed on numeric columns")
            lo, hi = self.soft_range
            if lo > hi:
                raise SchemaError(f"column {self.name!r}: soft_range min {lo} > max {hi}")
            object.__setattr__(self, "soft_range", (float(lo), float(hi)))


def _check_schema(schema: Sequence[ColumnSchema]) -> tuple[ColumnSchema, ...]:
    seen = set()
    for col in schema:
        if col.name in seen:
            raise SchemaError(f"duplicate column name {col.name!r}")
        seen.add(col.name)
    return tuple(schema)


TARGET = "Battery Life"

# Column names, units and ranges of the Chicago Park District beach water sensor export.
CHICAGO_SCHEMA: tuple[ColumnSchema, ...] = (
    ColumnSchema("Beach Name", CATEGORICAL, "text"),
    ColumnSchema("Measurement Timestamp", TIMESTAMP, "date and time"),
    ColumnSchema("Water Temperature", NUMERIC, "degC", (9.1, 31.5)),
    ColumnSchema("Turbidity", NUMERIC, "NTU", (0.01, 1683.48)),
    ColumnSchema("Transducer Depth", NUMERIC, "m", (-0.082, 2.214)),
    ColumnSchema("Wave Height", NUMERIC, "m", (0.013, 1.467)),
    ColumnSchema("Wave Period", NUMERIC, "s", (1.0, 10.0)),
    ColumnSchema(TARGET, NUMERIC, "V", (4.8, 13.3)),
    ColumnSchema("Measurement Timestamp Label", TIMESTAMP, "text"),
    ColumnSchema("Measurement ID", TIMESTAMP, "text"),
)

SYNTH_SCHEMA: tuple[ColumnSchema, ...] = CHICAGO_SCHEMA[:8]

BEACHES = (
    "63rd Street Beach",
    "Calumet Beach",
    "Montrose Beach",
    "Ohio Street Beach",
    "Osterman Beach",
    "Rainbow Beach",
)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DataTable:
    schema: tuple[ColumnSchema, ...]
    columns: Mapping[str, np.ndarray] = field(repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "schema", _check_schema(self.schema))
        cols = {}
        lengths = set()
        for col in self.schema:
            if col.name not in self.columns:
                raise SchemaError(f"no data for column {col.name!r}")
            data = self.columns[col.name]
            if col.kind == NUMERIC:
                data = np.array(data, dtype=np.float64)
            else:
                data = np.array(
                    [None if v is None else str(v) for v in data], dtype=object
                ).reshape(-1)
            lengths.add(len(data))
            cols[col.name] = _freeze(data)
        extra = set(self.columns) - set(cols)
        if extra:
            raise SchemaError(f"columns without schema entry: {sorted(extra)}")
        if len(lengths) > 1:
            raise SchemaError("columns have different lengths")
        object.__setattr__(self, "columns", cols)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.schema)

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __len__(self) -> int:
        return self.n_rows

    def spec(self, name: str) -> ColumnSchema:
        for col in self.schema:
            if col.name == name:
                return col
        raise SchemaError(f"unknown column {name!r}")

    def column(self, name: str) -> np.ndarray:
        self.spec(name)
        return self.columns[name]

    def missing_mask(self, name: str) -> np.ndarray:
        data = self.column(name)
        if self.spec(name).kind == NUMERIC:
            return np.isnan(data)
        return np.array([v is None for v in data], dtype=bool)

    def missing_count(self) -> int:
        return int(sum(self.missing_mask(n).sum() for n in self.names))

    def rows(self) -> Iterator[tuple]:
        """Row records; missing cells come back as ``None``."""
        for i in range(self.n_rows):
            yield tuple(self._cell(name, i) for name in self.names)

    def _cell(self, name: str, i: int):
        v = self.columns[name][i]
        if isinstance(v, float) and math.isnan(v):
            return None
        return v

    def select(self, names: Sequence[str]) -> "DataTable":
        schema = [self.spec(n) for n in names]
        return DataTable(tuple(schema), {n: self.columns[n] for n in names})

    def take(self, indices: Sequence[int]) -> "DataTable":
        idx = np.asarray(indices, dtype=np.int64)
        return DataTable(self.schema, {n: self.columns[n][idx] for n in self.names})

    def replace(self, schema: Sequence[ColumnSchema], columns: Mapping[str, np.ndarray]) -> "DataTable":
        return DataTable(tuple(schema), columns)

    def matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        names = self.names if names is None else names
        for n in names:
            if self.spec(n).kind != NUMERIC:
                raise SchemaError(f"column {n!r} is not numeric")
        if not names:
            return np.empty((self.n_rows, 0))
        return np.column_stack([self.columns[n] for n in names])

    def equals(self, other: "DataTable") -> bool:
        """Cell-wise equality; missing cells compare equal to each other."""
        if self.schema != other.schema or self.n_rows != other.n_rows:
            return False
        for n in self.names:
            a, b = self.columns[n], other.columns[n]
            if self.spec(n).kind == NUMERIC:
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif list(a) != list(b):
                return False
        return True

    def to_csv(self, dest: str | Path | io.TextIOBase | None = None) -> str | None:
        """Write as CSV in column order. Returns the text when ``dest`` is None."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.names)
        for row in self.rows():
            writer.writerow(["" if v is None else _fmt(v) for v in row])
        text = buf.getvalue()
        if dest is None:
            return text
        if isinstance(dest, (str, Path)):
            Path(dest).write_text(text, encoding="utf-8")
        else:
            dest.write(text)
        return None


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def load_csv(
    path: str | Path,
    schema: Sequence[ColumnSchema],
    missing: Iterable[str] = DEFAULT_MISSING,
) -> DataTable:
    """Parse a comma-delimited UTF-8 file with a header row.

    Column order follows the file header; the header has to name exactly the
    schema columns. Empty, sentinel, or unparseable numeric cells become missing.
    """
    schema = _check_schema(schema)
    sentinels = set(missing)
    by_name = {c.name: c for c in schema}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file", 1) from None
        for name in header:
            if name not in by_name:
                raise SchemaError(f"{path}: column {name!r} is not in the schema")
        for name in by_name:
            if name not in header:
                raise SchemaError(f"{path}: schema column {name!r} missing from header")
        if len(set(header)) != len(header):
            dup = [n for n, k in Counter(header).items() if k > 1]
            raise SchemaError(f"{path}: duplicate header column {dup[0]!r}")
        raw: list[list[str]] = [[] for _ in header]
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParseError(
                    f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}",
                    reader.line_num,
                )
            for j, cell in enumerate(row):
                raw[j].append(cell)

    columns = {}
    for name, cells in zip(header, raw):
        if by_name[name].kind == NUMERIC:
            columns[name] = np.array([_parse_float(c, sentinels) for c in cells], dtype=np.float64)
        else:
            columns[name] = [None if c.strip() in sentinels else c for c in cells]
    return DataTable(tuple(by_name[n] for n in header), columns)


def _parse_float(cell: str, sentinels: set[str]) -> float:
    cell = cell.strip()
    if cell in sentinels:
        return math.nan
    try:
        value = float(cell)
    except ValueError:
        return math.nan
    return value if math.isfinite(value) else math.nan


@dataclass(frozen=True)
class ValidationReport:
    violations: dict[str, int]
    checked: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.violations.values())

    def to_dict(self) -> dict:
        return {"checked": dict(self.checked), "total": self.total, "violations": dict(self.violations)}


def validate_ranges(table: DataTable) -> ValidationReport:
    """Count non-missing values outside each numeric column's inclusive soft range."""
    violations, checked = {}, {}
    for col in table.schema:
        if col.soft_range is None:
            continue
        lo, hi = col.soft_range
        data = table.column(col.name)
        present = data[~np.isnan(data)]
        checked[col.name] = int(present.size)
        violations[col.name] = int(((present < lo) | (present > hi)).sum())
    return ValidationReport(violations, checked)


def drop_columns(table: DataTable, names: Sequence[str]) -> DataTable:
    for n in names:
        table.spec(n)
    drop = set(names)
    return table.select([n for n in table.names if n not in drop])


def imputation_values(table: DataTable) -> dict[str, object]:
    """Column mean for numeric columns, mode for the rest (ties: smallest label)."""
    fills = {}
    for col in table.schema:
        data = table.column(col.name)
        mask = table.missing_mask(col.name)
        if mask.all():
            raise ValueError(f"column {col.name!r} has no values to impute from")
        if col.kind == NUMERIC:
            fills[col.name] = float(data[~mask].mean())
        else:
            counts = Counter(v for v in data if v is not None)
            top = max(counts.values())
            fills[col.name] = min(label for label, k in counts.items() if k == top)
    return fills


def impute_mean(table: DataTable, fills: Mapping[str, object] | None = None) -> DataTable:
    """Fill numeric gaps with the column mean and label gaps with the column mode.

    ``fills`` overrides the per-column values, e.g. to reuse statistics from a
    training table on a test table.
    """
    if fills is None:
        fills = imputation_values(table)
    cols = {}
    for name in table.names:
        data = table.column(name)
        mask = table.missing_mask(name)
        if mask.any():
            data = data.copy()
            data[mask] = fills[name]
        cols[name] = data
    return table.replace(table.schema, cols)


def retype_categorical(table: DataTable, names: Sequence[str]) -> DataTable:
    """Reinterpret numeric columns as categorical labels so they get one-hot encoded."""
    names = set(names)
    schema, cols = [], {}
    for col in table.schema:
        data = table.column(col.name)
        if col.name in names and col.kind == NUMERIC:
            schema.append(ColumnSchema(col.name, CATEGORICAL, col.unit))
            cols[col.name] = [None if math.isnan(v) else repr(float(v)) for v in data]
        else:
            schema.append(col)
            cols[col.name] = data
    return table.replace(schema, cols)


@dataclass(frozen=True)
class EncoderMap:
    """Per categorical column, its sorted labels; derived columns are ``"<column>=<label>"``."""

    categories: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self):
        names = [n for col, labels in self.categories for n in self.derived(col, labels)]
        if len(set(names)) != len(names):
            raise SchemaError("derived one-hot column names are not unique")

    @staticmethod
    def derived(column: str, labels: Sequence[str]) -> list[str]:
        return [f"{column}={label}" for label in labels]

    def labels(self, column: str) -> tuple[str, ...]:
        return dict(self.categories)[column]

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.categories)

    def to_dict(self) -> dict:
        return {col: list(labels) for col, labels in self.categories}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Sequence[str]]) -> "EncoderMap":
        return cls(tuple((col, tuple(labels)) for col, labels in doc.items()))


def one_hot_encode(
    table: DataTable, encoder: EncoderMap | None = None, unknown: str = "error"
) -> tuple[DataTable, EncoderMap]:
    """Expand each categorical column into 0/1 indicator columns, in place.

    Without ``encoder`` the label set is learned from ``table``; with it, the
    given map is applied. A label the map does not know raises, or with
    ``unknown="ignore"`` encodes as an all-zero row.
    """
    if unknown not in ("error", "ignore"):
        raise ValueError(f"unknown must be 'error' or 'ignore', not {unknown!r}")
    cat_cols = [c.name for c in table.schema if c.kind == CATEGORICAL]
    for name in cat_cols:
        if table.missing_mask(name).any():
            raise ValueError(f"column {name!r} has missing cells; impute before encoding")
    if encoder is None:
        encoder = EncoderMap(
            tuple((n, tuple(sorted(set(table.column(n))))) for n in cat_cols)
        )
    elif set(encoder.columns) != set(cat_cols):
        raise SchemaError(
            f"encoder columns {sorted(encoder.columns)} do not match table {sorted(cat_cols)}"
        )
    known = dict(encoder.categories)
    taken = {c.name for c in table.schema if c.kind != CATEGORICAL}
    schema, cols = [], {}
    for col in table.schema:
        data = table.column(col.name)
        if col.kind != CATEGORICAL:
            schema.append(col)
            cols[col.name] = data
            continue
        labels = known[col.name]
        index = {label: i for i, label in enumerate(labels)}
        unseen = sorted(set(data) - set(index))
        if unseen and unknown == "error":
            raise ValueError(f"column {col.name!r}: label {unseen[0]!r} not in encoder map")
        codes = np.array([index.get(v, -1) for v in data], dtype=np.int64)
        for i, derived in enumerate(EncoderMap.derived(col.name, labels)):
            if derived in taken:
                raise SchemaError(f"derived column {derived!r} collides with an existing column")
            taken.add(derived)
            schema.append(ColumnSchema(derived, NUMERIC))
            cols[derived] = (codes == i).astype(np.float64)
    return table.replace(schema, cols), encoder


def decode_one_hot(table: DataTable, encoder: EncoderMap) -> DataTable:
    """Collapse indicator columns back into the categorical columns they came from."""
    first_of = {}
    for col, labels in encoder.categories:
        derived = EncoderMap.derived(col, labels)
        first_of[derived[0]] = (col, labels, derived)
    skip = {d for _, labels, ds in first_of.values() for d in ds}
    schema, cols = [], {}
    for col in table.schema:
        if col.name in first_of:
            source, labels, derived = first_of[col.name]
            hot = table.matrix(derived)
            if not np.all(hot.sum(axis=1) == 1):
                raise ValueError(f"rows of {source!r} indicators are not one-hot")
            schema.append(ColumnSchema(source, CATEGORICAL))
            cols[source] = [labels[i] for i in hot.argmax(axis=1)]
        elif col.name not in skip:
            schema.append(col)
            cols[col.name] = table.column(col.name)
    return table.replace(schema, cols)


@dataclass(frozen=True)
class ScalerParams:
    columns: tuple[str, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]

    def to_dict(self) -> dict:
        return {c: {"mean": m, "std": s} for c, m, s in zip(self.columns, self.mean, self.std)}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Mapping[str, float]]) -> "ScalerParams":
        cols = tuple(doc)
        return cls(cols, tuple(float(doc[c]["mean"]) for c in cols), tuple(float(doc[c]["std"]) for c in cols))


def standard_scale(table: DataTable, params: ScalerParams | None = None) -> tuple[DataTable, ScalerParams]:
    """Z-score every column with population statistics. Constant columns become zeros."""
    for col in table.schema:
        if col.kind != NUMERIC:
            raise SchemaError(f"column {col.name!r} is not numeric; encode before scaling")
        if table.missing_mask(col.name).any():
            raise ValueError(f"column {col.name!r} has missing cells; impute before scaling")
    if params is None:
        means, stds = [], []
        for name in table.names:
            data = table.column(name)
            if data.size and np.all(data == data[0]):
                means.append(float(data[0]))
                stds.append(0.0)
            else:
                means.append(float(data.mean()))
                stds.append(float(data.std()))
        params = ScalerParams(table.names, tuple(means), tuple(stds))
    elif tuple(params.columns) != table.names:
        raise SchemaError(
            f"scaler columns {list(params.columns)} do not match table columns {list(table.names)}"
        )
    cols = {}
    for name, mean, std in zip(params.columns, params.mean, params.std):
        data = table.column(name)
        cols[name] = np.zeros_like(data) if std == 0 else (data - mean) / std
    return table.replace(table.schema, cols), params


@dataclass(frozen=True)
class DiscretizationSpec:
    bins_per_feature: int = 10
    decision_bins: int = 5
    method: str = "equal-frequency"

    def __post_init__(self):
        if self.bins_per_feature < 2 or self.decision_bins < 2:
            raise ValueError("discretization needs at least 2 bins")
        if self.method != "equal-frequency":
            raise ValueError(f"unsupported discretization method {self.method!r}")


def _equal_frequency(x: np.ndarray, bins: int) -> np.ndarray:
    distinct = np.unique(x)
    if distinct.size <= bins:
        return np.searchsorted(distinct, x).astype(np.float64)
    ordered = np.sort(x)
    n = x.size
    cuts = np.array([ordered[math.ceil(i * n / bins) - 1] for i in range(1, bins)])
    # a value equal to a cut point lands in the lower bin
    raw = np.searchsorted(cuts, x, side="left")
    _, labels = np.unique(raw, return_inverse=True)
    return labels.reshape(-1).astype(np.float64)


def discretize(
    table: DataTable, spec: DiscretizationSpec = DiscretizationSpec(), decision: str | None = None
) -> DataTable:
    """Map every column to integer bin labels by equal-frequency cut points.

    ``decision`` (if given) is binned with ``spec.decision_bins``, all other
    columns with ``spec.bins_per_feature``. Columns with no more distinct
    values than bins get one bin per distinct value.
    """
    if table.n_rows == 0:
        raise ValueError("cannot discretize an empty table")
    cols = {}
    for col in table.schema:
        if col.kind != NUMERIC:
            raise SchemaError(f"column {col.name!r} is not numeric")
        data = table.column(col.name)
        if np.isnan(data).any():
            raise ValueError(f"column {col.name!r} has missing cells")
        bins = spec.decision_bins if col.name == decision else spec.bins_per_feature
        cols[col.name] = _equal_frequency(data, bins)
    return table.replace(table.schema, cols)


# Planted battery model used by synth_generate.
SYNTH_BASE_VOLTAGE = 5.1
SYNTH_TEMP_SLOPE = 0.15  # V per degC above 9.1
SYNTH_WAVE_SLOPE = 2.0  # V per metre of wave height
SYNTH_BEACH_OFFSET = dict(zip(BEACHES, (0.0, 0.3, 0.6, 0.9, 0.45, 0.15)))
SYNTH_NOISE = 0.25  # half-width of the uniform voltage noise
SYNTH_SIGNAL = ("Beach Name", "Water Temperature", "Wave Height")

_TEMP_LEVELS = np.round(np.linspace(9.1, 31.5, 9), 1)
_WAVE_LEVELS = np.round(np.linspace(0.013, 1.467, 5), 3)
_EPOCH = datetime(2013, 8, 30, 8, 0)
_LAST = datetime(2019, 9, 11, 11, 0)


def synth_battery(beach: str, temperature: float, wave_height: float) -> float:
    """Noise-free battery voltage of the planted model."""
    return (
        SYNTH_BASE_VOLTAGE
        + SYNTH_TEMP_SLOPE * (temperature - 9.1)
        + SYNTH_WAVE_SLOPE * wave_height
        + SYNTH_BEACH_OFFSET[beach]
    )


def synth_generate(n_rows: int, seed: int, noise: float = SYNTH_NOISE) -> DataTable:
    """Sensor-like table whose battery life depends on beach, water temperature and wave height only.

    Water temperature and wave height are reported on coarse sensor levels
    (9 and 5 levels spanning the documented ranges). Battery life is
    :func:`synth_battery` plus uniform noise of half-width ``noise``.
    Turbidity, transducer depth and wave period are drawn independently of
    everything else. All values stay inside the soft ranges of
    :data:`SYNTH_SCHEMA`.
    """
    if n_rows < 1:
        raise ValueError("n_rows must be >= 1")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = np.random.default_rng(seed)
    beach = [BEACHES[i] for i in rng.integers(0, len(BEACHES), n_rows)]
    hours = int((_LAST - _EPOCH).total_seconds() // 3600)
    stamps = [
        (_EPOCH + timedelta(hours=int(h))).strftime("%m/%d/%Y %I:%M:%S %p")
        for h in rng.integers(0, hours + 1, n_rows)
    ]
    temp = _TEMP_LEVELS[rng.integers(0, _TEMP_LEVELS.size, n_rows)]
    wave = _WAVE_LEVELS[rng.integers(0, _WAVE_LEVELS.size, n_rows)]
    turbidity = np.round(np.clip(rng.lognormal(0.5, 1.5, n_rows), 0.01, 1683.48), 2)
    depth = np.round(rng.uniform(-0.082, 2.214, n_rows), 3)
    period = rng.integers(1, 11, n_rows).astype(np.float64)
    eps = rng.uniform(-noise, noise, n_rows)
    battery = np.array([synth_battery(b, t, w) for b, t, w in zip(beach, temp, wave)]) + eps
    battery = np.round(np.clip(battery, 4.8, 13.3), 3)
    columns = {
        "Beach Name": beach,
        "Measurement Timestamp": stamps,
        "Water Temperature": temp,
        "Turbidity": turbidity,
        "Transducer Depth": depth,
        "Wave Height": wave,
        "Wave Period": period,
        TARGET: battery,
    }
    return DataTable(SYNTH_SCHEMA, columns)
