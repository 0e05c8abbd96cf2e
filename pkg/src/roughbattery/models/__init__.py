"""Regressors behind one ``predict`` contract, plus JSON persistence."""

from __future__ import annotations

import json
from typing import Union

import numpy as np

from .gbt import GbtConfig, GbtEnsemble, RegressionTree, gbt_fit
from .linear import LinearModel, linear_fit
from .mlp import (
    AdamState,
    DivergenceError,
    MlpConfig,
    MlpNetwork,
    adam_init,
    mlp_forward,
    mlp_gradients,
    mlp_init,
    mlp_train,
    mlp_train_step,
)

RegressorModel = Union[MlpNetwork, LinearModel, GbtEnsemble]

MODEL_SCHEMA_VERSION = 1

__all__ = [
    "AdamState",
    "DivergenceError",
    "GbtConfig",
    "GbtEnsemble",
    "LinearModel",
    "MODEL_SCHEMA_VERSION",
    "MlpConfig",
    "MlpNetwork",
    "RegressionTree",
    "RegressorModel",
    "adam_init",
    "gbt_fit",
    "linear_fit",
    "mlp_forward",
    "mlp_gradients",
    "mlp_init",
    "mlp_train",
    "mlp_train_step",
    "model_from_dict",
    "model_to_dict",
    "predict",
]


def predict(model: RegressorModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("predict expects a 2-D feature matrix")
    if X.shape[1] != model.input_width:
        raise ValueError(f"model expects {model.input_width} features, got {X.shape[1]}")
    return model.predict(X)


def model_to_dict(model: RegressorModel) -> dict:
    if isinstance(model, MlpNetwork):
        body = {
            "kind": "mlp",
            "layers": [
                {"shape": list(w.shape), "weights": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(model.weights, model.biases)
            ],
        }
    elif isinstance(model, LinearModel):
        body = {
            "kind": "linear",
            "coefficients": model.coefficients.tolist(),
            "intercept": model.intercept,
            "ridge": model.ridge,
            "regularized": model.regularized,
        }
    elif isinstance(model, GbtEnsemble):
        cfg = model.config
        body = {
            "kind": "gbt",
            "base_score": model.base_score,
            "input_width": model.input_width,
            "hyperparameters": {
                "n_rounds": cfg.n_rounds,
                "max_depth": cfg.max_depth,
                "learning_rate": cfg.learning_rate,
                "reg_lambda": cfg.reg_lambda,
                "min_samples_leaf": cfg.min_samples_leaf,
            },
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "value": t.value.tolist(),
                }
                for t in model.trees
            ],
        }
    else:
        raise TypeError(f"not a regressor model: {type(model).__name__}")
    return {"schema_version": MODEL_SCHEMA_VERSION, **body}


def model_from_dict(doc: dict) -> RegressorModel:
    version = doc.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version {version!r}")
    kind = doc.get("kind")
    if kind == "mlp":
        weights, biases = [], []
        for layer in doc["layers"]:
            weights.append(np.array(layer["weights"], dtype=np.float64).reshape(layer["shape"]))
            biases.append(np.array(layer["bias"], dtype=np.float64))
        return MlpNetwork(tuple(weights), tuple(biases))
    if kind == "linear":
        return LinearModel(
            np.array(doc["coefficients"], dtype=np.float64),
            float(doc["intercept"]),
            float(doc["ridge"]),
            bool(doc["regularized"]),
        )
    if kind == "gbt":
        trees = tuple(
            RegressionTree(
                np.array(t["feature"], dtype=np.int64),
                np.array(t["threshold"], dtype=np.float64),
                np.array(t["left"], dtype=np.int64),
                np.array(t["right"], dtype=np.int64),
                np.array(t["value"], dtype=np.float64),
            )
            for t in doc["trees"]
        )
        return GbtEnsemble(float(doc["base_score"]), trees, int(doc["input_width"]), GbtConfig(**doc["hyperparameters"]))
    raise ValueError(f"unknown model kind {kind!r}")


def dumps_model(model: RegressorModel, **extra) -> str:
    """Model JSON with ``extra`` top-level entries (e.g. the producing config)."""
    doc = model_to_dict(model)
    clash = sorted(set(doc) & set(extra))
    if clash:
        raise ValueError(f"extra keys collide with model fields: {clash}")
    doc.update(extra)
    return json.dumps(doc, sort_keys=True) + "\n"
