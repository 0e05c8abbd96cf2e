"""Train/test splitting, regression metrics, and the model comparison harness."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import roughsets, tabular
from .models import GbtConfig, MlpConfig, gbt_fit, linear_fit, mlp_train, predict
from .tabular import TARGET, DataTable, DiscretizationSpec

__all__ = [
    "CELL_LABELS",
    "ComparisonRow",
    "ComparisonTable",
    "ExperimentConfig",
    "ExperimentResult",
    "MetricsReport",
    "PipelineError",
    "Split",
    "compare_models",
    "compute_metrics",
    "decision_table",
    "preprocess",
    "select_features",
    "run_experiment",
    "train_test_split",
]

MODEL_KINDS = ("mlp", "linear", "gbt")

# Row labels and order of the published comparison table.
CELL_LABELS = {
    ("mlp", True): "DNN + Rough sets (Proposed)",
    ("mlp", False): "DNN",
    ("linear", True): "Linear Regression + Rough sets",
    ("linear", False): "Linear Regression",
    ("gbt", True): "XGBoost + Rough sets",
    ("gbt", False): "XGBoost",
}


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names which one."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray
    ratio: float
    seed: int


def train_test_split(n_rows: int, ratio: float = 0.2, seed: int = 42) -> Split:
    """Seeded shuffle; the first ``round(ratio * n_rows)`` indices become the test set."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    if n_rows < 2:
        raise ValueError("need at least 2 rows to split")
    n_test = int(math.floor(ratio * n_rows + 0.5))
    if not 1 <= n_test < n_rows:
        raise ValueError(f"ratio {ratio} gives a degenerate split of {n_rows} rows")
    order = np.random.default_rng(seed).permutation(n_rows)
    return Split(np.sort(order[n_test:]), np.sort(order[:n_test]), ratio, seed)


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mse: float
    rmse: float
    tvs: float | None
    r2: float | None
    n: int

    def to_dict(self) -> dict:
        return {"mae": self.mae, "mse": self.mse, "n": self.n, "r2": self.r2, "rmse": self.rmse, "tvs": self.tvs}

    @classmethod
    def from_dict(cls, doc) -> "MetricsReport":
        return cls(doc["mae"], doc["mse"], doc["rmse"], doc["tvs"], doc.get("r2"), doc["n"])


def compute_metrics(observed, predicted) -> MetricsReport:
    """MAE, MSE, RMSE and the test variance score.

    The test variance score is the explained variance
    ``1 - Var(observed - predicted) / Var(observed)``; ``r2`` is the
    coefficient of determination. Both are ``None`` when the observed values
    are constant.
    """
    x = np.asarray(observed, dtype=np.float64).reshape(-1)
    xp = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if x.size == 0 or x.size != xp.size:
        raise ValueError(f"need equal nonzero lengths, got {x.size} and {xp.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xp))):
        raise ValueError("metrics need finite values")
    err = x - xp
    mse = float(np.mean(err**2))
    var_x = float(np.var(x))
    if var_x > 0:
        tvs = 1.0 - float(np.var(err)) / var_x
        r2 = 1.0 - mse / var_x
    else:
        tvs = r2 = None
    return MetricsReport(float(np.mean(np.abs(err))), mse, math.sqrt(mse), tvs, r2, int(x.size))


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "mlp"
    use_roughsets: bool = True
    threshold: float = 0.0
    discretization: DiscretizationSpec = DiscretizationSpec()
    ratio: float = 0.2
    seed: int = 42
    target: str = TARGET
    ridge: float = 0.0
    mlp: MlpConfig = MlpConfig()
    gbt: GbtConfig = GbtConfig()
    treat_numeric_as_categorical: bool = False

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie strictly between 0 and 1")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ExperimentResult:
    report: MetricsReport
    features_before: int
    features_after: int
    retained: tuple[str, ...]
    observed: np.ndarray = field(repr=False)
    predicted: np.ndarray = field(repr=False)
    scaler: tabular.ScalerParams = field(repr=False)
    encoder: tabular.EncoderMap = field(repr=False)
    reduct: roughsets.ReductResult | None = field(default=None, repr=False)
    information_table: roughsets.InformationTable | None = field(default=None, repr=False)
    model: object = field(default=None, repr=False)
    loss_trace: tuple[float, ...] = field(default=(), repr=False)


def _stage(name):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PipelineError:
                raise
            except Exception as exc:
                raise PipelineError(name, exc) from exc

        return run

    return wrap


@_stage("drop")
def _drop_timestamps(table: DataTable, config: ExperimentConfig) -> DataTable:
    table.spec(config.target)
    stamps = [c.name for c in table.schema if c.kind == tabular.TIMESTAMP]
    table = tabular.drop_columns(table, stamps)
    if config.treat_numeric_as_categorical:
        table = tabular.retype_categorical(
            table, [n for n in table.names if n != config.target]
        )
    return table


@_stage("impute")
def _impute(train: DataTable, test: DataTable) -> tuple[DataTable, DataTable]:
    fills = tabular.imputation_values(train)
    return tabular.impute_mean(train, fills), tabular.impute_mean(test, fills)


@_stage("encode")
def _encode(train: DataTable, test: DataTable):
    train_enc, encoder = tabular.one_hot_encode(train)
    test_enc, _ = tabular.one_hot_encode(test, encoder, unknown="ignore")
    return train_enc, test_enc, encoder


@_stage("scale")
def _scale(train: DataTable, test: DataTable, features: Sequence[str]):
    train_s, params = tabular.standard_scale(train.select(features))
    test_s, _ = tabular.standard_scale(test.select(features), params)
    return train_s, test_s, params


def decision_table(features: DataTable, y: np.ndarray, config: ExperimentConfig) -> roughsets.InformationTable:
    """Discretize scaled features plus the target into a rough-set information table."""
    cols = {n: features.column(n) for n in features.names}
    cols[config.target] = y
    schema = (*features.schema, tabular.ColumnSchema(config.target))
    binned = tabular.discretize(DataTable(schema, cols), config.discretization, decision=config.target)
    return roughsets.InformationTable.from_table(binned, config.target)


@_stage("reduce")
def _reduce(features: DataTable, y: np.ndarray, config: ExperimentConfig):
    it = decision_table(features, y, config)
    return it, roughsets.significance_filter(it, config.threshold), roughsets.quick_reduct(it)


def select_features(
    features: DataTable, y: np.ndarray, config: ExperimentConfig
) -> tuple[tuple[str, ...], roughsets.ReductResult]:
    """Features kept by the significance filter, and the reduct behind it."""
    _, retained, reduct = _reduce(features, y, config)
    return retained, reduct


@dataclass(frozen=True)
class Preprocessed:
    features: DataTable
    target: np.ndarray
    encoder: tabular.EncoderMap
    scaler: tabular.ScalerParams


def preprocess(table: DataTable, config: ExperimentConfig) -> Preprocessed:
    """Drop timestamps, impute, encode and scale the whole table (no split)."""
    table = _drop_timestamps(table, config)
    filled, _ = _impute(table, table.take([]))
    encoded, _, encoder = _encode(filled, filled.take([]))
    features = [n for n in encoded.names if n != config.target]
    scaled, _, scaler = _scale(encoded, encoded.take([]), features)
    return Preprocessed(scaled, encoded.column(config.target), encoder, scaler)


@_stage("train")
def _train(X: np.ndarray, y: np.ndarray, config: ExperimentConfig):
    if config.model == "mlp":
        net, trace = mlp_train(config.mlp, (X, y))
        return net, tuple(trace)
    if config.model == "linear":
        return linear_fit(X, y, config.ridge), ()
    model = gbt_fit(X, y, config.gbt)
    trace = tuple(
        float(np.mean((y - model.predict(X, n_trees=k)) ** 2)) for k in range(1, len(model.trees) + 1)
    )
    return model, trace


@_stage("evaluate")
def _evaluate(model, X: np.ndarray, y: np.ndarray):
    pred = predict(model, X)
    return compute_metrics(y, pred), pred


def run_experiment(table: DataTable, config: ExperimentConfig, split: Split | None = None) -> ExperimentResult:
    """Preprocess, optionally reduce, train one model, and score it on held-out rows.

    Stage order: drop timestamp columns, split, impute, one-hot encode, scale,
    rough-set reduction, train, evaluate. Every fitted statistic (imputation
    values, encoder labels, scaler, discretization, selected features) comes
    from the training rows alone. ``split`` overrides the seeded split.
    """
    table = _drop_timestamps(table, config)
    if split is None:
        try:
            split = train_test_split(table.n_rows, config.ratio, config.seed)
        except ValueError as exc:
            raise PipelineError("split", exc) from exc
    train, test = _impute(table.take(split.train), table.take(split.test))
    train, test, encoder = _encode(train, test)
    features = [n for n in train.names if n != config.target]
    train_s, test_s, scaler = _scale(train, test, features)
    y_train = train.column(config.target)
    y_test = test.column(config.target)

    it = reduct = None
    retained = tuple(features)
    if config.use_roughsets:
        it, retained, reduct = _reduce(train_s, y_train, config)
    model, trace = _train(train_s.matrix(retained), y_train, config)
    report, pred = _evaluate(model, test_s.matrix(retained), y_test)
    return ExperimentResult(
        report=report,
        features_before=len(features),
        features_after=len(retained),
        retained=tuple(retained),
        observed=np.asarray(y_test),
        predicted=pred,
        scaler=scaler,
        encoder=encoder,
        reduct=reduct,
        information_table=it,
        model=model,
        loss_trace=trace,
    )


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    model: str
    use_roughsets: bool
    report: MetricsReport | None
    features_before: int | None
    features_after: int | None
    error: str | None = None
    result: ExperimentResult | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "error": self.error,
            "features_after": self.features_after,
            "features_before": self.features_before,
            "label": self.label,
            "metrics": None if self.report is None else self.report.to_dict(),
            "model": self.model,
            "use_roughsets": self.use_roughsets,
        }


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    split_seed: int
    ratio: float

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "rows": [r.to_dict() for r in self.rows], "split_seed": self.split_seed}


def compare_models(table: DataTable, base: ExperimentConfig) -> ComparisonTable:
    """Run every model with and without rough-set reduction on one shared split.

    A failing cell keeps its error message; the remaining cells still run.
    """
    rows = []
    for (kind, reduced), label in CELL_LABELS.items():
        config = dataclasses.replace(base, model=kind, use_roughsets=reduced)
        try:
            result = run_experiment(table, config)
        except PipelineError as exc:
            rows.append(ComparisonRow(label, kind, reduced, None, None, None, str(exc)))
            continue
        rows.append(
            ComparisonRow(
                label, kind, reduced, result.report, result.features_before, result.features_after, None, result
            )
        )
    return ComparisonTable(tuple(rows), base.seed, base.ratio)
