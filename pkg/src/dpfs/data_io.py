"""Dataset ingestion, class subsetting / splitting, and results CSV output.

Two input formats are supported:

* dense CSV: UTF-8, comma separated, one header row, one integer label column;
* sparse libsvm-style text: ``label idx:val idx:val ...`` per line with
  1-based, strictly increasing indices.

Both are densified and their labels remapped to ``1..K`` in sorted order of
the original label values.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from dpfs.errors import DomainError, ParseError
from dpfs.gaussian_model import LabeledDataset
from dpfs.numerics import Seed, rng_from_seed

RESULTS_HEADER = ("method", "m", "epsilon", "delta", "replicate", "test_error", "bound")
METHODS = ("dfs", "tstat", "none")


def _parse_float(token: str, line: int, path: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"non-numeric value {token!r}", line, path) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {token!r}", line, path)
    return value


def _parse_label(token: str, line: int, path: str) -> int:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"label {token!r} is not an integer", line, path) from None
    if not math.isfinite(value) or value != int(value):
        raise ParseError(f"label {token!r} is not an integer", line, path)
    return int(value)


def remap_labels(raw: Sequence[int]) -> np.ndarray:
    """Map arbitrary integer labels onto ``1..K`` preserving their sorted order."""
    values = np.asarray(raw, dtype=np.int64)
    _, inverse = np.unique(values, return_inverse=True)
    return inverse.reshape(-1) + 1


def load_dense_csv(path, label_column: str) -> LabeledDataset:
    path = str(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot open file: {exc.strerror}", None, path) from None
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ParseError("file is empty", 1, path)
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ParseError(f"label column {label_column!r} not in header", 1, path)
        label_at = header.index(label_column)
        names = tuple(h for i, h in enumerate(header) if i != label_at)
        rows: list[list[float]] = []
        labels: list[int] = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", line, path)
            labels.append(_parse_label(row[label_at].strip(), line, path))
            rows.append([_parse_float(cell.strip(), line, path) for i, cell in enumerate(row) if i != label_at])
    if not rows:
        raise ParseError("no data rows after the header", None, path)
    return LabeledDataset(np.asarray(rows, dtype=float).reshape(len(rows), len(names)), remap_labels(labels), names)


def load_sparse_libsvm(path, dimension: int) -> LabeledDataset:
    path = str(path)
    if dimension < 1:
        raise DomainError(f"dimension must be positive, got {dimension}")
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot open file: {exc.strerror}", None, path) from None
    rows: list[np.ndarray] = []
    labels: list[int] = []
    with handle:
        for line_no, text in enumerate(handle, start=1):
            tokens = text.split()
            if not tokens:
                continue
            labels.append(_parse_label(tokens[0], line_no, path))
            row = np.zeros(dimension)
            last = 0
            for token in tokens[1:]:
                idx_text, sep, val_text = token.partition(":")
                if not sep:
                    raise ParseError(f"malformed token {token!r}", line_no, path)
                try:
                    idx = int(idx_text)
                except ValueError:
                    raise ParseError(f"malformed index in {token!r}", line_no, path) from None
                if not 1 <= idx <= dimension:
                    raise ParseError(f"index {idx} outside [1, {dimension}]", line_no, path)
                if idx <= last:
                    raise ParseError(f"index {idx} does not increase (previous {last})", line_no, path)
                row[idx - 1] = _parse_float(val_text, line_no, path)
                last = idx
            rows.append(row)
    if not rows:
        raise ParseError("no data rows", None, path)
    names = tuple(f"f{j + 1}" for j in range(dimension))
    return LabeledDataset(np.vstack(rows), remap_labels(labels), names)


def load_dataset(path, fmt: str = "csv", label_column: str = "label", dimension: int | None = None) -> LabeledDataset:
    if fmt == "csv":
        return load_dense_csv(path, label_column)
    if fmt == "libsvm":
        if dimension is None:
            raise DomainError("--dimension is required for libsvm input")
        return load_sparse_libsvm(path, dimension)
    raise DomainError(f"unknown format {fmt!r}")


def write_dense_csv(data: LabeledDataset, path, label_column: str = "label") -> None:
    """Write ``data`` as a dense CSV with the label column last."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([*data.names(), label_column])
        for row, label in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


@dataclass(frozen=True)
class SplitSpec:
    """How to draw a train/test split.

    With both ``class_a`` and ``class_b`` set, only those two classes are kept
    and relabelled 1 and 2. With neither set, every class passes through.
    """

    train_per_class: int
    test_per_class: int
    seed: Seed = 0
    class_a: int | None = None
    class_b: int | None = None

    def __post_init__(self):
        if self.train_per_class < 2:
            raise DomainError("train_per_class must be at least 2")
        if self.test_per_class < 1:
            raise DomainError("test_per_class must be at least 1")
        if (self.class_a is None) != (self.class_b is None):
            raise DomainError("give both class_a and class_b, or neither")
        if self.class_a is not None and self.class_a == self.class_b:
            raise DomainError("class_a and class_b must differ")


def split(data: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Sample disjoint per-class train and test rows without replacement."""
    if spec.class_a is None:
        classes = list(range(1, data.class_count + 1))
    else:
        classes = [spec.class_a, spec.class_b]
    rng = rng_from_seed(spec.seed)
    need = spec.train_per_class + spec.test_per_class
    train_idx, test_idx, train_lab, test_lab = [], [], [], []
    for new_label, cls in enumerate(classes, start=1):
        rows = np.flatnonzero(data.labels == cls)
        if rows.size < need:
            raise DomainError(f"class {cls} has {rows.size} rows, {need} requested")
        picked = rng.permutation(rows)[:need]
        train_idx.append(np.sort(picked[: spec.train_per_class]))
        test_idx.append(np.sort(picked[spec.train_per_class :]))
        train_lab.append(np.full(spec.train_per_class, new_label))
        test_lab.append(np.full(spec.test_per_class, new_label))
    tr, te = np.concatenate(train_idx), np.concatenate(test_idx)
    names = data.feature_names
    return (
        LabeledDataset(data.features[tr], np.concatenate(train_lab), names),
        LabeledDataset(data.features[te], np.concatenate(test_lab), names),
    )


@dataclass(frozen=True)
class SweepRecord:
    method: str
    m: int
    epsilon: float
    delta: float
    replicate: int
    test_error: float
    bound: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if not 0.0 <= self.test_error <= 1.0:
            raise DomainError(f"test_error {self.test_error} outside [0, 1]")

    @property
    def key(self) -> tuple:
        return (self.method, self.m, self.epsilon, self.replicate)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def write_results_csv(records: Iterable[SweepRecord], path) -> None:
    """Write sweep records sorted by (method, m, epsilon, replicate)."""
    records = sorted(records, key=lambda r: r.key)
    if not records:
        raise DomainError("no records to write")
    keys = [r.key for r in records]
    if len(set(keys)) != len(keys):
        raise DomainError("duplicate (method, m, epsilon, replicate) rows")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for r in records:
            writer.writerow([
                r.method,
                r.m,
                _fmt(r.epsilon),
                _fmt(r.delta),
                r.replicate,
                _fmt(r.test_error),
                "" if r.bound is None else _fmt(r.bound),
            ])


def read_results_csv(path) -> list[SweepRecord]:
    path = str(path)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != RESULTS_HEADER:
            raise ParseError(f"unexpected header {header}", 1, path)
        out = []
        for row in reader:
            line = reader.line_num
            if len(row) != len(RESULTS_HEADER):
                raise ParseError(f"expected {len(RESULTS_HEADER)} fields, found {len(row)}", line, path)
            try:
                out.append(SweepRecord(
                    method=row[0],
                    m=int(row[1]),
                    epsilon=float(row[2]),
                    delta=float(row[3]),
                    replicate=int(row[4]),
                    test_error=float(row[5]),
                    bound=float(row[6]) if row[6] else None,
                ))
            except ValueError as exc:
                raise ParseError(str(exc), line, path) from None
    return out

