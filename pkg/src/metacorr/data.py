"""Score matrices, meta-evaluation datasets and their on-disk formats.

A score matrix holds one row per system and one column per input. A dataset
pairs one human matrix with one or more metric matrices of identical shape.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised when a score matrix or dataset fails validation."""


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    system_ids: tuple[str, ...]
    input_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        object.__setattr__(self, "system_ids", tuple(str(s) for s in self.system_ids))
        object.__setattr__(self, "input_ids", tuple(str(s) for s in self.input_ids))
        if values.ndim != 2:
            raise DatasetError(f"score matrix must be 2-D, got shape {values.shape}")
        n, m = values.shape
        if (n, m) != (len(self.system_ids), len(self.input_ids)):
            raise DatasetError(
                f"values shape {values.shape} does not match "
                f"{len(self.system_ids)} system ids x {len(self.input_ids)} input ids"
            )
        if n < 2 or m < 2:
            raise DatasetError(f"need at least 2 systems and 2 inputs, got {n}x{m}")
        if not np.all(np.isfinite(values)):
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise DatasetError(
                f"non-finite score at system {self.system_ids[i]!r}, input {self.input_ids[j]!r}"
            )
        _check_unique(self.system_ids, "system")
        _check_unique(self.input_ids, "input")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_array(cls, values, system_ids=None, input_ids=None) -> "ScoreMatrix":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise DatasetError(f"score matrix must be 2-D, got shape {values.shape}")
        n, m = values.shape
        if system_ids is None:
            system_ids = [f"sys{i}" for i in range(n)]
        if input_ids is None:
            input_ids = [f"in{j}" for j in range(m)]
        return cls(tuple(system_ids), tuple(input_ids), values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def aligned_with(self, other: "ScoreMatrix") -> bool:
        return self.system_ids == other.system_ids and self.input_ids == other.input_ids

    def with_values(self, values) -> "ScoreMatrix":
        return ScoreMatrix(self.system_ids, self.input_ids, values)


def _check_unique(ids: Sequence[str], kind: str) -> None:
    seen = set()
    for ident in ids:
        if ident in seen:
            raise DatasetError(f"duplicate {kind} id {ident!r}")
        seen.add(ident)


@dataclass(frozen=True)
class MetaEvalDataset:
    human: ScoreMatrix
    metrics: tuple[tuple[str, ScoreMatrix], ...]
    # declared (lo, hi) score scale per matrix; key "human" or a metric name
    scales: dict = field(default_factory=dict)
    source: str | None = None

    def __post_init__(self):
        metrics = tuple((str(name), m) for name, m in self.metrics)
        object.__setattr__(self, "metrics", metrics)
        if not metrics:
            raise DatasetError("dataset needs at least one metric")
        names = [name for name, _ in metrics]
        _check_unique(names, "metric")
        if "human" in names:
            raise DatasetError("'human' is reserved and cannot name a metric")
        for name, m in metrics:
            if m.shape != self.human.shape:
                raise DatasetError(
                    f"metric {name!r} has shape {m.shape}, human has {self.human.shape}"
                )
            if not m.aligned_with(self.human):
                raise DatasetError(f"metric {name!r} ids do not match the human matrix ids")
        for key, scale in self.scales.items():
            if scale is None:
                continue
            lo, hi = scale
            if not lo < hi:
                raise DatasetError(f"scale for {key!r} must satisfy lo < hi, got {scale}")

    @property
    def N(self) -> int:
        return self.human.shape[0]

    @property
    def M(self) -> int:
        return self.human.shape[1]

    @property
    def K(self) -> int:
        return len(self.metrics)

    @property
    def metric_names(self) -> list[str]:
        return [name for name, _ in self.metrics]

    def metric(self, name: str) -> ScoreMatrix:
        for n, m in self.metrics:
            if n == name:
                return m
        raise KeyError(name)

    def metric_stack(self) -> np.ndarray:
        """All metric values as a (K, N, M) array, in dataset order."""
        return np.stack([m.values for _, m in self.metrics])

    def scale(self, key: str):
        return self.scales.get(key)

    def normalized(self) -> "MetaEvalDataset":
        """Map every matrix with a declared scale to [0, 1]; others are left as-is."""
        human = self.human
        if self.scale("human") is not None:
            human = normalize_01(human, self.scale("human"))
        metrics = []
        for name, m in self.metrics:
            if self.scale(name) is not None:
                m = normalize_01(m, self.scale(name))
            metrics.append((name, m))
        return MetaEvalDataset(human, tuple(metrics), {}, self.source)


@dataclass(frozen=True)
class GranularitySpec:
    scale_points: int
    annotators: int = 1

    def __post_init__(self):
        if int(self.scale_points) != self.scale_points or self.scale_points < 2:
            raise ValueError(f"scale_points must be an integer >= 2, got {self.scale_points}")
        if int(self.annotators) != self.annotators or self.annotators < 1:
            raise ValueError(f"annotators must be an integer >= 1, got {self.annotators}")


def granularity(spec: GranularitySpec) -> int:
    """Number of distinct scores obtainable by averaging ``annotators`` ratings."""
    return spec.annotators * (spec.scale_points - 1) + 1


def normalize_01(m: ScoreMatrix, scale=None) -> ScoreMatrix:
    """Affinely map scores to [0, 1].

    With ``scale=(lo, hi)`` the declared bounds map to 0 and 1 and every value
    must lie inside them. Without a scale the empirical min/max are used.
    """
    v = m.values
    if scale is not None:
        lo, hi = float(scale[0]), float(scale[1])
        if not lo < hi:
            raise ValueError(f"scale must satisfy lo < hi, got {scale}")
        if v.min() < lo or v.max() > hi:
            raise ValueError(f"values [{v.min()}, {v.max()}] fall outside scale [{lo}, {hi}]")
    else:
        lo, hi = float(v.min()), float(v.max())
        if lo == hi:
            raise ValueError("cannot normalize a constant matrix without a declared scale")
    return m.with_values((v - lo) / (hi - lo))


def tie_ratio(m) -> float:
    """Fraction of unordered pairs of entries (over the flattened matrix) that are equal."""
    values = np.ravel(m.values if isinstance(m, ScoreMatrix) else np.asarray(m, dtype=np.float64))
    n = values.size
    if n < 2:
        raise ValueError("tie ratio needs at least 2 values")
    _, counts = np.unique(values, return_counts=True)
    tied = int(np.sum(counts * (counts - 1) // 2))
    return tied / (n * (n - 1) // 2)


def distinct_values(m: ScoreMatrix) -> int:
    return int(np.unique(m.values).size)


# -- file formats ----------------------------------------------------------


def read_matrix(path) -> ScoreMatrix:
    """Read a matrix CSV: header row of input ids, first column of system ids."""
    path = os.fspath(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise DatasetError(f"{path}: needs a header row and at least one system row")
    header = rows[0]
    input_ids = header[1:]
    system_ids = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetError(
                f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
            )
        system_ids.append(row[0])
        parsed = []
        for col, cell in enumerate(row[1:], start=1):
            try:
                val = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}:{lineno}: non-numeric cell {cell!r} in column {header[col]!r}"
                ) from None
            if not math.isfinite(val):
                raise DatasetError(
                    f"{path}:{lineno}: non-finite cell {cell!r} in column {header[col]!r}"
                )
            parsed.append(val)
        values.append(parsed)
    try:
        return ScoreMatrix(tuple(system_ids), tuple(input_ids), np.array(values, dtype=np.float64))
    except DatasetError as exc:
        raise DatasetError(f"{path}: {exc}") from None


def write_matrix(m: ScoreMatrix, path, corner: str = "system") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([corner, *m.input_ids])
        for sid, row in zip(m.system_ids, m.values):
            w.writerow([sid, *(repr(float(v)) for v in row)])


def _parse_scale(entry, where):
    scale = entry.get("scale")
    if scale is None:
        return None
    if not isinstance(scale, (list, tuple)) or len(scale) != 2:
        raise DatasetError(f"{where}: scale must be a [lo, hi] pair")
    lo, hi = float(scale[0]), float(scale[1])
    if not lo < hi:
        raise DatasetError(f"{where}: scale must satisfy lo < hi, got {scale}")
    return (lo, hi)


def load_dataset(manifest_path) -> MetaEvalDataset:
    """Load and validate a dataset from its JSON manifest.

    Matrix paths are resolved relative to the manifest's directory. Missing
    files raise ``FileNotFoundError``; every other problem raises
    ``DatasetError`` naming the offending file.
    """
    manifest_path = os.fspath(manifest_path)
    with open(manifest_path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{manifest_path}: invalid JSON ({exc})") from None
    base = os.path.dirname(os.path.abspath(manifest_path))
    if not isinstance(doc, dict) or "human" not in doc or "metrics" not in doc:
        raise DatasetError(f"{manifest_path}: manifest needs 'human' and 'metrics' keys")

    def resolve(entry, where):
        if not isinstance(entry, dict) or "path" not in entry:
            raise DatasetError(f"{manifest_path}: {where} entry needs a 'path'")
        return os.path.join(base, entry["path"])

    human_path = resolve(doc["human"], "human")
    human = read_matrix(human_path)
    scales = {"human": _parse_scale(doc["human"], human_path)}
    metrics = []
    if not isinstance(doc["metrics"], list) or not doc["metrics"]:
        raise DatasetError(f"{manifest_path}: 'metrics' must be a non-empty list")
    for entry in doc["metrics"]:
        path = resolve(entry, "metric")
        name = entry.get("name")
        if not name:
            raise DatasetError(f"{manifest_path}: metric entry for {path} has no name")
        m = read_matrix(path)
        if m.shape != human.shape:
            raise DatasetError(
                f"{path}: metric {name!r} has shape {m.shape[0]}x{m.shape[1]}, "
                f"human matrix has {human.shape[0]}x{human.shape[1]}"
            )
        if not m.aligned_with(human):
            raise DatasetError(f"{path}: system/input ids do not match the human matrix")
        metrics.append((name, m))
        scales[name] = _parse_scale(entry, path)
    try:
        return MetaEvalDataset(human, tuple(metrics), scales, source=manifest_path)
    except DatasetError as exc:
        raise DatasetError(f"{manifest_path}: {exc}") from None


def save_dataset(dataset: MetaEvalDataset, directory, scales: bool = True) -> str:
    """Write a dataset as matrix CSVs plus ``manifest.json``; returns the manifest path."""
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    write_matrix(dataset.human, os.path.join(directory, "human.csv"))
    human_entry = {"path": "human.csv"}
    if scales and dataset.scale("human") is not None:
        human_entry["scale"] = list(dataset.scale("human"))
    entries = []
    for k, (name, m) in enumerate(dataset.metrics):
        fname = f"metric_{k:03d}.csv"
        write_matrix(m, os.path.join(directory, fname))
        entry = {"name": name, "path": fname}
        if scales and dataset.scale(name) is not None:
            entry["scale"] = list(dataset.scale(name))
        entries.append(entry)
    manifest = os.path.join(directory, "manifest.json")
    with open(manifest, "w", encoding="utf-8") as fh:
        json.dump({"human": human_entry, "metrics": entries}, fh, indent=2)
        fh.write("\n")
    return manifest
