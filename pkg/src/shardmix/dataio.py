"""Serialization: model documents, data files, label files.

Model document (JSON)::

    {"format": "mixture-v1", "d": int, "K": int,
     "weights": [float, ...],
     "components": [{"mean": [...], "cov": [[...], ...]}, ...]}

Data files are either CSV with header ``x0,...,x{d-1}[,label]`` or raw
little-endian float64 row-major binary with a ``<path>.json`` sidecar
``{"n": ..., "d": ...}``.  Floats are written with round-trip precision,
so save/load is exact.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .gaussian import Gaussian
from .mixture import LabeledSample, MixingDistribution

__all__ = [
    "SchemaError",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "save_data",
    "load_data",
    "load_labels",
]

MODEL_FORMAT = "mixture-v1"


class SchemaError(ValueError):
    """A document violates one of the file schemas."""


def model_to_dict(G: MixingDistribution) -> dict:
    return {
        "format": MODEL_FORMAT,
        "d": G.dim,
        "K": G.order,
        "weights": [float(w) for w in G.weights],
        "components": [
            {
                "mean": [float(x) for x in g.mean],
                "cov": [[float(x) for x in row] for row in g.cov],
            }
            for g in G.components
        ],
    }


def _require(condition: bool, message: str):
    if not condition:
        raise SchemaError(message)


def model_from_dict(doc) -> MixingDistribution:
    _require(isinstance(doc, dict), "model document must be a JSON object")
    allowed = {"format", "d", "K", "weights", "components"}
    unknown = set(doc) - allowed
    _require(not unknown, f"unknown model keys: {sorted(unknown)}")
    _require(set(doc) == allowed, f"missing model keys: {sorted(allowed - set(doc))}")
    _require(doc["format"] == MODEL_FORMAT, f"format must be {MODEL_FORMAT!r}")
    d, K = doc["d"], doc["K"]
    _require(isinstance(d, int) and d >= 1, "d must be a positive integer")
    _require(isinstance(K, int) and K >= 1, "K must be a positive integer")
    weights = np.asarray(doc["weights"], dtype=float)
    _require(weights.shape == (K,), "weights must have length K")
    comps = doc["components"]
    _require(isinstance(comps, list) and len(comps) == K, "components must have length K")
    gaussians = []
    for idx, entry in enumerate(comps):
        _require(isinstance(entry, dict), f"component {idx} must be an object")
        _require(
            set(entry) == {"mean", "cov"},
            f"component {idx} must have exactly the keys mean and cov",
        )
        mean = np.asarray(entry["mean"], dtype=float)
        cov = np.asarray(entry["cov"], dtype=float)
        _require(mean.shape == (d,), f"component {idx} mean must have length d={d}")
        _require(cov.shape == (d, d), f"component {idx} cov must be {d}x{d}")
        try:
            gaussians.append(Gaussian(mean, cov))
        except ValueError as exc:
            raise SchemaError(f"component {idx}: {exc}") from None
    try:
        return MixingDistribution(weights, gaussians)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def save_model(path: str, G: MixingDistribution):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(model_to_dict(G), handle, indent=2)
        handle.write("\n")


def load_model(path: str) -> MixingDistribution:
    with open(path, encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from None
    return model_from_dict(doc)


# ---------------------------------------------------------------------------
# Data files


def _sidecar_path(path) -> str:
    return str(path) + ".json"


def save_data(path: str, sample: LabeledSample, fmt: str = "csv"):
    """Write observations as CSV (with labels, if present) or raw binary."""
    if fmt == "csv":
        d = sample.dim
        columns = [f"x{i}" for i in range(d)]
        if sample.labels is not None:
            columns.append("label")
            body = np.column_stack([sample.points, sample.labels.astype(float)])
        else:
            body = sample.points
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(",".join(columns) + "\n")
            for row in body:
                cells = [f"{x:.17g}" for x in row[:d]]
                if sample.labels is not None:
                    cells.append(str(int(row[d])))
                handle.write(",".join(cells) + "\n")
    elif fmt == "bin":
        np.ascontiguousarray(sample.points, dtype="<f8").tofile(path)
        with open(_sidecar_path(path), "w", encoding="utf-8") as handle:
            json.dump({"n": sample.n, "d": sample.dim}, handle)
            handle.write("\n")
    else:
        raise ValueError(f"unknown data format {fmt!r}")


def load_data(path: str) -> LabeledSample:
    """Read a data file; binary is detected by the presence of a sidecar."""
    if os.path.exists(_sidecar_path(path)):
        with open(_sidecar_path(path), encoding="utf-8") as handle:
            meta = json.load(handle)
        _require(
            isinstance(meta, dict) and set(meta) == {"n", "d"},
            "binary sidecar must contain exactly n and d",
        )
        n, d = int(meta["n"]), int(meta["d"])
        raw = np.fromfile(path, dtype="<f8")
        _require(raw.size == n * d, f"binary payload has {raw.size} values, expected {n * d}")
        return LabeledSample(points=raw.reshape(n, d).astype(float))
    return _load_csv(path)


def _load_csv(path: str) -> LabeledSample:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
        names = header.split(",") if header else []
        has_label = bool(names) and names[-1] == "label"
        d = len(names) - (1 if has_label else 0)
        expected = [f"x{i}" for i in range(d)] + (["label"] if has_label else [])
        _require(names == expected, f"CSV header must be x0,...,x{{d-1}}[,label], got {header!r}")
        body = np.loadtxt(handle, delimiter=",", ndmin=2)
    _require(body.size > 0, "data file has no rows")
    _require(body.shape[1] == len(names), "CSV rows do not match the header")
    points = body[:, :d]
    labels = body[:, d].astype(int) if has_label else None
    return LabeledSample(points=points, labels=labels)


def load_labels(path: str) -> np.ndarray:
    """Read integer labels from a one-column file or a CSV label column."""
    with open(path, encoding="utf-8") as handle:
        first = handle.readline().strip()
        names = first.split(",")
        if "label" in names:
            idx = names.index("label")
            body = np.loadtxt(handle, delimiter=",", ndmin=2)
            return body[:, idx].astype(int)
        handle.seek(0)
        return np.loadtxt(handle, dtype=int, ndmin=1)
