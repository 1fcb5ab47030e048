"""Parsing, validation, and scoring of assessment data files.

All tables are plain frozen dataclasses wrapping numpy arrays; they are
immutable after construction and safe to share across threads. CSV is the
only ingestion format: UTF-8, comma-delimited, first row header, first
column examinee id.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateColumn,
    DuplicateId,
    EmptyMatrix,
    MalformedCell,
    MalformedInput,
    MissingCell,
    NonFinite,
    TooFewRows,
    UnknownItem,
)

DIMENSIONS = ("Know&Understand", "Use&Apply", "Evaluate&Create", "Ethics")


@dataclass(frozen=True)
class ResponseMatrix:
    """N x J dichotomous scored responses with row/column identifiers."""

    examinee_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    cells: np.ndarray  # (N, J) int8 in {0, 1}

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int8)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        n, j = cells.shape
        if n < 1 or j < 2:
            raise EmptyMatrix(f"need N >= 1 and J >= 2, got {n} x {j}")
        if len(self.examinee_ids) != n or len(self.item_ids) != j:
            raise MalformedInput("id lists do not match matrix shape")
        if len(set(self.examinee_ids)) != n:
            raise DuplicateId("duplicate examinee ids")
        if len(set(self.item_ids)) != j:
            raise DuplicateId("duplicate item ids")
        if not np.isin(cells, (0, 1)).all():
            raise MalformedCell("response cells must be 0 or 1")

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    @property
    def j(self) -> int:
        return self.cells.shape[1]

    def total_scores(self) -> np.ndarray:
        return self.cells.sum(axis=1)

    def select_items(self, item_ids) -> "ResponseMatrix":
        """Submatrix keeping only the given items, in the order given."""
        idx = [self.item_ids.index(i) for i in item_ids]
        return ResponseMatrix(self.examinee_ids, tuple(item_ids), self.cells[:, idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", *self.item_ids])
        for eid, row in zip(self.examinee_ids, self.cells):
            w.writerow([eid, *(int(v) for v in row)])
        return buf.getvalue()


@dataclass(frozen=True)
class BankItem:
    item_id: str
    dimension: str
    stem: str
    options: tuple[str, ...]
    key: str

    def __post_init__(self):
        if len(self.options) < 2:
            raise MalformedInput(f"item {self.item_id}: needs >= 2 options")
        if self.key not in self.options:
            raise MalformedInput(f"item {self.item_id}: key not among options")
        if self.dimension not in DIMENSIONS:
            raise MalformedInput(f"item {self.item_id}: unknown dimension {self.dimension!r}")


@dataclass(frozen=True)
class ItemBank:
    items: tuple[BankItem, ...]

    def __post_init__(self):
        ids = [it.item_id for it in self.items]
        if len(set(ids)) != len(ids):
            raise DuplicateId("duplicate item ids in bank")

    def key_for(self, item_id: str) -> str:
        for it in self.items:
            if it.item_id == item_id:
                return it.key
        raise UnknownItem(f"item {item_id!r} not in bank")

    @classmethod
    def from_json(cls, path) -> "ItemBank":
        with open(path, encoding="utf-8") as f:
            records = json.load(f)
        items = tuple(
            BankItem(r["id"], r["dimension"], r["stem"], tuple(r["options"]), r["key"])
            for r in records
        )
        return cls(items)

    def to_json(self) -> str:
        records = [
            {
                "id": it.item_id,
                "dimension": it.dimension,
                "stem": it.stem,
                "options": list(it.options),
                "key": it.key,
            }
            for it in self.items
        ]
        return json.dumps(records, indent=2)


@dataclass(frozen=True)
class ScoreTable:
    """Named numeric columns over N examinees."""

    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        cols = {}
        n = None
        for name, xs in self.columns.items():
            xs = np.asarray(xs, dtype=np.float64)
            if n is None:
                n = xs.shape[0]
            elif xs.shape[0] != n:
                raise MalformedInput("score columns have unequal lengths")
            if not np.isfinite(xs).all():
                raise NonFinite(f"column {name!r} contains non-finite values")
            xs.setflags(write=False)
            cols[name] = xs
        if n is None or n < 3:
            raise TooFewRows("score table needs at least 3 rows")
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return next(iter(self.columns.values())).shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


@dataclass(frozen=True)
class LikertTable:
    """N x Q integer matrix with declared scale bounds [lo, hi]."""

    cells: np.ndarray
    lo: int = 1
    hi: int = 5

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        if cells.ndim != 2 or cells.size == 0:
            raise EmptyMatrix("Likert table must be a non-empty 2-D matrix")
        if ((cells < self.lo) | (cells > self.hi)).any():
            raise MalformedCell(f"Likert cells must lie in [{self.lo}, {self.hi}]")


def _read_rows(source) -> list[list[str]]:
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return list(csv.reader(io.StringIO(data)))
    with open(source, encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


def parse_response_csv(source, mode: str = "scored", key: ItemBank | None = None) -> ResponseMatrix:
    """Parse a response CSV into a ResponseMatrix.

    mode="scored": cells are already 0/1. mode="raw": cells are option
    labels, scored 1 where the cell equals the bank's key for that item.
    Row and column order are preserved from the file.
    """
    if mode not in ("scored", "raw"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "raw" and key is None:
        raise ValueError("raw mode requires an ItemBank key")
    rows = [r for r in _read_rows(source) if r]
    if len(rows) < 2 or len(rows[0]) < 3:
        raise EmptyMatrix("response CSV needs a header and at least one data row")
    item_ids = tuple(rows[0][1:])
    if mode == "raw":
        keys = [key.key_for(i) for i in item_ids]
    examinee_ids = []
    cells = []
    for r in rows[1:]:
        if len(r) != len(item_ids) + 1:
            raise MalformedInput(f"row {r[0]!r}: expected {len(item_ids)} cells, got {len(r) - 1}")
        examinee_ids.append(r[0])
        row = []
        for jx, cell in enumerate(r[1:]):
            cell = cell.strip()
            if cell == "":
                raise MissingCell(f"row {r[0]!r}, item {item_ids[jx]!r}: empty cell")
            if mode == "scored":
                if cell not in ("0", "1"):
                    raise MalformedCell(f"row {r[0]!r}, item {item_ids[jx]!r}: {cell!r} not in {{0,1}}")
                row.append(int(cell))
            else:
                row.append(1 if cell == keys[jx] else 0)
        cells.append(row)
    return ResponseMatrix(tuple(examinee_ids), item_ids, np.array(cells, dtype=np.int8))


def parse_score_csv(source) -> ScoreTable:
    """Parse a numeric score CSV (header of measure names, numeric body)."""
    rows = [r for r in _read_rows(source) if r]
    if not rows:
        raise EmptyMatrix("empty score CSV")
    names = [h.strip() for h in rows[0]]
    body = []
    for r in rows[1:]:
        if len(r) != len(names):
            raise MalformedInput("ragged row in score CSV")
        vals = []
        for name, cell in zip(names, r):
            try:
                v = float(cell)
            except ValueError:
                raise MalformedCell(f"column {name!r}: non-numeric cell {cell!r}") from None
            if not math.isfinite(v):
                raise NonFinite(f"column {name!r}: non-finite cell {cell!r}")
            vals.append(v)
        body.append(vals)
    if len(body) < 3:
        raise TooFewRows(f"score table needs >= 3 rows, got {len(body)}")
    arr = np.array(body, dtype=np.float64)
    return ScoreTable({name: arr[:, k] for k, name in enumerate(names)})


def column_standardize(xs) -> np.ndarray:
    """Center to mean 0 and scale to sample (n-1) standard deviation 1."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.shape[0] < 2:
        raise DegenerateColumn("need at least 2 values to standardize")
    sd = xs.std(ddof=1)
    if sd == 0.0:
        raise DegenerateColumn("zero variance column")
    return (xs - xs.mean()) / sd
