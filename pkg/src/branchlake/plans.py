"""Relational plan operators and their executor.

The operator set is exactly what the seven demo questions need: scan,
filter, project, hash join, grouped aggregation, window rank, and top-k,
plus a branch-union leaf used by the unified cross-branch strategy. Plans
are frozen trees so structurally identical subplans share one evaluation
per execution (the memo lives for a single query).

Ordering contracts: Filter and Project preserve input order; Aggregate
sorts by its group keys; TopK orders by the sort column with ties broken
by the first non-branch input column ascending; HashJoin preserves probe
(right) input order, expanding duplicate build keys in left input order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .errors import DivideByZero, PlanTypeError
from .exprs import Expr, evaluate, infer_type
from .tables import BRANCH_COLUMN, ColumnarTable, Schema

AGG_KINDS = ("count", "count_if", "sum", "avg")


@dataclass(frozen=True)
class AggSpec:
    kind: str
    arg: Expr | None
    name: str

    @staticmethod
    def count(name: str = "count") -> "AggSpec":
        return AggSpec("count", None, name)

    @staticmethod
    def count_if(pred: Expr, name: str) -> "AggSpec":
        return AggSpec("count_if", pred, name)

    @staticmethod
    def sum_(arg: Expr, name: str) -> "AggSpec":
        return AggSpec("sum", arg, name)

    @staticmethod
    def avg(arg: Expr, name: str) -> "AggSpec":
        return AggSpec("avg", arg, name)


@dataclass(frozen=True)
class Scan:
    table: str


@dataclass(frozen=True)
class BranchUnion:
    """All branch variants of a table concatenated with a branch id column."""

    table: str


@dataclass(frozen=True)
class Filter:
    input: "Plan"
    predicate: Expr


@dataclass(frozen=True)
class Project:
    input: "Plan"
    exprs: tuple[Expr, ...]
    names: tuple[str, ...]


@dataclass(frozen=True)
class HashJoin:
    left: "Plan"
    right: "Plan"
    left_keys: tuple[str, ...]
    right_keys: tuple[str, ...]


@dataclass(frozen=True)
class Aggregate:
    input: "Plan"
    group_keys: tuple[str, ...]
    aggs: tuple[AggSpec, ...]


@dataclass(frozen=True)
class WindowRank:
    input: "Plan"
    partition_keys: tuple[str, ...]
    order_col: str
    descending: bool
    output: str


@dataclass(frozen=True)
class TopK:
    input: "Plan"
    order_col: str
    descending: bool
    k: int
    partition_keys: tuple[str, ...] = ()


Plan = Scan | BranchUnion | Filter | Project | HashJoin | Aggregate | WindowRank | TopK


class SourceResolver(Protocol):
    """Supplies table data and schemas to the executor."""

    def scan(self, table: str) -> ColumnarTable: ...

    def scan_union(self, table: str) -> ColumnarTable: ...

    def schema_of(self, table: str) -> Schema: ...

    def union_schema_of(self, table: str) -> Schema: ...


# -- type checking ------------------------------------------------------


def output_schema(plan: Plan, schema_of: Callable[[str], Schema],
                  union_schema_of: Callable[[str], Schema] | None = None) -> Schema:
    """Derive the output schema bottom-up, rejecting ill-typed plans."""
    if isinstance(plan, Scan):
        return schema_of(plan.table)
    if isinstance(plan, BranchUnion):
        if union_schema_of is None:
            raise PlanTypeError("BranchUnion outside a branch-union context")
        return union_schema_of(plan.table)
    if isinstance(plan, Filter):
        schema = output_schema(plan.input, schema_of, union_schema_of)
        if infer_type(plan.predicate, schema) != "bool":
            raise PlanTypeError("filter predicate must be boolean")
        return schema
    if isinstance(plan, Project):
        schema = output_schema(plan.input, schema_of, union_schema_of)
        if len(plan.exprs) != len(plan.names):
            raise PlanTypeError("projection arity mismatch")
        cols = tuple(
            (name, infer_type(e, schema))
            for e, name in zip(plan.exprs, plan.names)
        )
        return Schema(cols)
    if isinstance(plan, HashJoin):
        ls = output_schema(plan.left, schema_of, union_schema_of)
        rs = output_schema(plan.right, schema_of, union_schema_of)
        if len(plan.left_keys) != len(plan.right_keys) or not plan.left_keys:
            raise PlanTypeError("join key arity mismatch")
        for lk, rk in zip(plan.left_keys, plan.right_keys):
            if ls.type_of(lk) != rs.type_of(rk):
                raise PlanTypeError(f"join key type mismatch {lk!r}/{rk!r}")
        right_kept = [
            (n, t) for n, t in rs.columns if n not in plan.right_keys
        ]
        overlap = {n for n, _ in ls.columns} & {n for n, _ in right_kept}
        if overlap:
            raise PlanTypeError(f"join output column collision: {sorted(overlap)}")
        return Schema(tuple(ls.columns) + tuple(right_kept))
    if isinstance(plan, Aggregate):
        schema = output_schema(plan.input, schema_of, union_schema_of)
        cols = [(k, schema.type_of(k)) for k in plan.group_keys]
        for agg in plan.aggs:
            if agg.kind not in AGG_KINDS:
                raise PlanTypeError(f"unknown aggregate {agg.kind!r}")
            if agg.kind == "count":
                cols.append((agg.name, "int64"))
            elif agg.kind == "count_if":
                if infer_type(agg.arg, schema) != "bool":
                    raise PlanTypeError("count_if needs a boolean argument")
                cols.append((agg.name, "int64"))
            else:
                t = infer_type(agg.arg, schema)
                if t not in ("int64", "float64"):
                    raise PlanTypeError(f"{agg.kind} over non-numeric {t}")
                cols.append((agg.name, t if agg.kind == "sum" else "float64"))
        return Schema(tuple(cols))
    if isinstance(plan, WindowRank):
        schema = output_schema(plan.input, schema_of, union_schema_of)
        for k in plan.partition_keys:
            schema.type_of(k)
        if schema.type_of(plan.order_col) not in ("int64", "float64"):
            raise PlanTypeError("window rank order column must be numeric")
        if schema.has(plan.output):
            raise PlanTypeError(f"rank output {plan.output!r} already exists")
        return Schema(tuple(schema.columns) + ((plan.output, "int64"),))
    if isinstance(plan, TopK):
        schema = output_schema(plan.input, schema_of, union_schema_of)
        if plan.k <= 0:
            raise PlanTypeError("k must be positive")
        for k in plan.partition_keys:
            schema.type_of(k)
        if schema.type_of(plan.order_col) not in ("int64", "float64"):
            raise PlanTypeError("top-k order column must be numeric")
        return schema
    raise PlanTypeError(f"unknown plan node {plan!r}")


# -- execution helpers ---------------------------------------------------


def _group_codes(cols: list[np.ndarray]) -> np.ndarray:
    """Mixed-radix codes whose ascending order equals lexicographic key order."""
    n = len(cols[0]) if cols else 0
    codes = np.zeros(n, dtype=np.int64)
    for c in cols:
        u, inv = np.unique(c, return_inverse=True)
        codes = codes * np.int64(max(len(u), 1)) + inv.astype(np.int64)
    return codes


def _sort_keys(
    order: np.ndarray, descending: bool
) -> np.ndarray:
    return -order if descending else order


def _tiebreak_col(schema: Schema) -> str | None:
    for name, _ in schema.columns:
        if name != BRANCH_COLUMN:
            return name
    return None


# -- executor ------------------------------------------------------------


class Executor:
    """Evaluates a plan tree against a resolver with structural memoization."""

    def __init__(self, resolver: SourceResolver):
        self.resolver = resolver
        self._memo: dict[Plan, ColumnarTable] = {}

    def run(self, plan: Plan) -> ColumnarTable:
        output_schema(plan, self.resolver.schema_of, self.resolver.union_schema_of)
        return self._eval(plan)

    def _eval(self, plan: Plan) -> ColumnarTable:
        hit = self._memo.get(plan)
        if hit is not None:
            return hit
        out = self._eval_node(plan)
        self._memo[plan] = out
        return out

    def _eval_node(self, plan: Plan) -> ColumnarTable:
        if isinstance(plan, Scan):
            return self.resolver.scan(plan.table)
        if isinstance(plan, BranchUnion):
            return self.resolver.scan_union(plan.table)
        if isinstance(plan, Filter):
            table = self._eval(plan.input)
            mask = np.asarray(evaluate(plan.predicate, table), dtype=np.bool_)
            return table.take(np.flatnonzero(mask))
        if isinstance(plan, Project):
            table = self._eval(plan.input)
            schema = output_schema(
                plan, self.resolver.schema_of, self.resolver.union_schema_of
            )
            cols = {
                name: evaluate(e, table)
                for e, name in zip(plan.exprs, plan.names)
            }
            return ColumnarTable(schema, cols)
        if isinstance(plan, HashJoin):
            return self._join(plan)
        if isinstance(plan, Aggregate):
            return self._aggregate(plan)
        if isinstance(plan, WindowRank):
            return self._window_rank(plan)
        if isinstance(plan, TopK):
            return self._top_k(plan)
        raise PlanTypeError(f"unknown plan node {plan!r}")

    def _join(self, plan: HashJoin) -> ColumnarTable:
        left = self._eval(plan.left)
        right = self._eval(plan.right)
        # Shared code space: encode both sides together, then split.
        both = _group_codes(
            [
                np.concatenate([left.columns[lk], right.columns[rk]])
                for lk, rk in zip(plan.left_keys, plan.right_keys)
            ]
        )
        lcodes, rcodes = both[: left.row_count], both[left.row_count:]
        order = np.argsort(lcodes, kind="stable")
        sorted_codes = lcodes[order]
        starts = np.searchsorted(sorted_codes, rcodes, side="left")
        ends = np.searchsorted(sorted_codes, rcodes, side="right")
        counts = ends - starts
        total = int(counts.sum())
        right_idx = np.repeat(np.arange(right.row_count), counts)
        offsets = np.repeat(np.cumsum(counts) - counts, counts)
        left_pos = starts.repeat(counts) + (np.arange(total) - offsets)
        left_idx = order[left_pos]
        schema = output_schema(
            plan, self.resolver.schema_of, self.resolver.union_schema_of
        )
        cols: dict[str, np.ndarray] = {}
        for name in left.schema.names:
            cols[name] = left.columns[name][left_idx]
        for name in right.schema.names:
            if name not in plan.right_keys:
                cols[name] = right.columns[name][right_idx]
        return ColumnarTable(schema, cols)

    def _aggregate(self, plan: Aggregate) -> ColumnarTable:
        table = self._eval(plan.input)
        schema = output_schema(
            plan, self.resolver.schema_of, self.resolver.union_schema_of
        )
        n = table.row_count
        if not plan.group_keys:
            row = {}
            for agg in plan.aggs:
                row[agg.name] = [self._global_agg(agg, table, n)]
            return ColumnarTable.from_values(schema, row)
        key_cols = [table.columns[k] for k in plan.group_keys]
        codes = _group_codes(key_cols)
        _, first, inv = np.unique(codes, return_index=True, return_inverse=True)
        n_groups = len(first)
        out: dict[str, np.ndarray] = {
            k: table.columns[k][first] for k in plan.group_keys
        }
        counts = np.bincount(inv, minlength=n_groups).astype(np.int64)
        for agg in plan.aggs:
            if agg.kind == "count":
                out[agg.name] = counts.copy()
            elif agg.kind == "count_if":
                pred = np.asarray(evaluate(agg.arg, table), dtype=np.bool_)
                out[agg.name] = np.bincount(
                    inv[pred], minlength=n_groups
                ).astype(np.int64)
            else:
                values = evaluate(agg.arg, table)
                if values.dtype == np.int64:
                    sums = np.zeros(n_groups, dtype=np.int64)
                    np.add.at(sums, inv, values)
                else:
                    sums = np.bincount(inv, weights=values, minlength=n_groups)
                if agg.kind == "sum":
                    out[agg.name] = sums.astype(values.dtype)
                else:
                    out[agg.name] = sums.astype(np.float64) / counts
        return ColumnarTable(schema, {k: out[k] for k in schema.names})

    def _global_agg(self, agg: AggSpec, table: ColumnarTable, n: int):
        if agg.kind == "count":
            return n
        if agg.kind == "count_if":
            pred = np.asarray(evaluate(agg.arg, table), dtype=np.bool_)
            return int(pred.sum())
        values = evaluate(agg.arg, table)
        if agg.kind == "sum":
            if n == 0:
                return 0 if values.dtype == np.int64 else 0.0
            total = values.sum()
            return int(total) if values.dtype == np.int64 else float(total)
        if n == 0:
            raise DivideByZero("avg over zero rows")
        return float(values.sum()) / n

    def _window_rank(self, plan: WindowRank) -> ColumnarTable:
        table = self._eval(plan.input)
        schema = output_schema(
            plan, self.resolver.schema_of, self.resolver.union_schema_of
        )
        n = table.row_count
        if n == 0:
            cols = dict(table.columns)
            cols[plan.output] = np.empty(0, dtype=np.int64)
            return ColumnarTable(schema, cols)
        if plan.partition_keys:
            codes = _group_codes(
                [table.columns[k] for k in plan.partition_keys]
            )
        else:
            codes = np.zeros(n, dtype=np.int64)
        order_vals = _sort_keys(table.columns[plan.order_col], plan.descending)
        tb = _tiebreak_col(table.schema)
        keys = [order_vals, codes] if tb is None else [
            table.columns[tb], order_vals, codes
        ]
        if tb is not None and table.columns[tb].dtype == object:
            # lexsort cannot take object arrays; fall back to codes
            keys[0] = np.unique(table.columns[tb], return_inverse=True)[1]
        perm = np.lexsort(keys)
        sorted_codes = codes[perm]
        boundary = np.empty(n, dtype=np.bool_)
        boundary[0] = True
        boundary[1:] = sorted_codes[1:] != sorted_codes[:-1]
        group_start = np.maximum.accumulate(
            np.where(boundary, np.arange(n), 0)
        )
        ranks_sorted = np.arange(n) - group_start + 1
        ranks = np.empty(n, dtype=np.int64)
        ranks[perm] = ranks_sorted
        cols = dict(table.columns)
        cols[plan.output] = ranks
        return ColumnarTable(schema, cols)

    def _top_k(self, plan: TopK) -> ColumnarTable:
        table = self._eval(plan.input)
        n = table.row_count
        if n == 0:
            return table
        if plan.partition_keys:
            codes = _group_codes(
                [table.columns[k] for k in plan.partition_keys]
            )
        else:
            codes = np.zeros(n, dtype=np.int64)
        order_vals = _sort_keys(table.columns[plan.order_col], plan.descending)
        tb = _tiebreak_col(table.schema)
        keys = [order_vals, codes] if tb is None else [
            table.columns[tb], order_vals, codes
        ]
        if tb is not None and table.columns[tb].dtype == object:
            keys[0] = np.unique(table.columns[tb], return_inverse=True)[1]
        perm = np.lexsort(keys)
        sorted_codes = codes[perm]
        boundary = np.empty(n, dtype=np.bool_)
        boundary[0] = True
        boundary[1:] = sorted_codes[1:] != sorted_codes[:-1]
        group_start = np.maximum.accumulate(np.where(boundary, np.arange(n), 0))
        within = np.arange(n) - group_start
        keep = perm[within < plan.k]
        return table.take(keep)
