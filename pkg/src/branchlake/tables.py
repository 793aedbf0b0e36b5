"""Columnar tables: a schema of typed columns backed by numpy arrays.

Four scalar types only (int64, float64, bool, string) and no nulls; that is
all the demo workload needs. String columns are object arrays so values
round-trip exactly through CSV.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError

COLUMN_TYPES = ("int64", "float64", "bool", "string")

_DTYPES = {
    "int64": np.int64,
    "float64": np.float64,
    "bool": np.bool_,
    "string": object,
}

BRANCH_COLUMN = "__branch_id"


@dataclass(frozen=True)
class Schema:
    """Ordered list of (name, type) column declarations."""

    columns: tuple[tuple[str, str], ...]

    def __post_init__(self):
        seen = set()
        for name, ctype in self.columns:
            if not name:
                raise SchemaError("column names must be nonempty")
            if name in seen:
                raise SchemaError(f"duplicate column name {name!r}")
            if ctype not in COLUMN_TYPES:
                raise SchemaError(f"unknown column type {ctype!r}")
            seen.add(name)

    @staticmethod
    def of(*cols: tuple[str, str]) -> "Schema":
        return Schema(tuple(cols))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    def type_of(self, name: str) -> str:
        for col, ctype in self.columns:
            if col == name:
                return ctype
        raise SchemaError(f"no column named {name!r}")

    def has(self, name: str) -> bool:
        return any(col == name for col, _ in self.columns)


def _coerce(values, ctype: str) -> np.ndarray:
    if ctype == "string":
        if isinstance(values, np.ndarray) and values.dtype == object:
            return values
        return np.array([str(v) for v in values], dtype=object)
    return np.asarray(values, dtype=_DTYPES[ctype])


@dataclass
class ColumnarTable:
    """Immutable-by-convention table; all column vectors share one length."""

    schema: Schema
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        lengths = {len(self.columns[name]) for name in self.schema.names}
        if len(self.columns) != len(self.schema.names) or set(
            self.columns
        ) != set(self.schema.names):
            raise SchemaError("columns do not match schema")
        if len(lengths) > 1:
            raise SchemaError(f"ragged columns: lengths {sorted(lengths)}")

    @property
    def row_count(self) -> int:
        if not self.schema.names:
            return 0
        return len(self.columns[self.schema.names[0]])

    @staticmethod
    def from_values(schema: Schema, data: dict[str, list]) -> "ColumnarTable":
        cols = {}
        for name, ctype in schema.columns:
            if name not in data:
                raise SchemaError(f"missing column {name!r}")
            cols[name] = _coerce(data[name], ctype)
        return ColumnarTable(schema, cols)

    @staticmethod
    def empty(schema: Schema) -> "ColumnarTable":
        cols = {
            name: np.empty(0, dtype=_DTYPES[ctype])
            for name, ctype in schema.columns
        }
        return ColumnarTable(schema, cols)

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def take(self, indices: np.ndarray) -> "ColumnarTable":
        return ColumnarTable(
            self.schema,
            {name: self.columns[name][indices] for name in self.schema.names},
        )

    def row(self, i: int) -> tuple:
        return tuple(self.columns[name][i] for name in self.schema.names)

    def rows(self) -> list[tuple]:
        return [self.row(i) for i in range(self.row_count)]


def concat_tables(parts: list[ColumnarTable]) -> ColumnarTable:
    """Concatenate same-schema tables, preserving part order."""
    if not parts:
        raise SchemaError("cannot concatenate zero tables")
    schema = parts[0].schema
    for p in parts[1:]:
        if p.schema != schema:
            raise SchemaError("schema mismatch in concatenation")
    cols = {
        name: np.concatenate([p.columns[name] for p in parts])
        for name in schema.names
    }
    return ColumnarTable(schema, cols)


def tables_equal(
    a: ColumnarTable, b: ColumnarTable, float_tol: float = 0.0
) -> bool:
    """Value equality with optional float tolerance; order-sensitive."""
    if a.schema != b.schema or a.row_count != b.row_count:
        return False
    for name, ctype in a.schema.columns:
        ca, cb = a.columns[name], b.columns[name]
        if ctype == "float64":
            if not np.allclose(ca, cb, rtol=0.0, atol=float_tol):
                return False
        elif not (np.asarray(ca == cb)).all():
            return False
    return True
