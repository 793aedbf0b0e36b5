"""Typed scalar expressions evaluated columnwise over a table.

Comparisons require same-type operands; arithmetic is numeric-only with
division always producing float64. All nodes are frozen so whole plans can
be hashed structurally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivideByZero, PlanTypeError
from .tables import ColumnarTable, Schema

COMPARE_OPS = ("<", "<=", ">", ">=", "=", "!=")
ARITH_OPS = ("+", "-", "*", "/")
BOOL_OPS = ("and", "or", "not")


@dataclass(frozen=True)
class ColumnRef:
    name: str


@dataclass(frozen=True)
class Literal:
    value: int | float | bool | str


@dataclass(frozen=True)
class Compare:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Arith:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str
    operands: tuple["Expr", ...]


Expr = ColumnRef | Literal | Compare | Arith | BoolOp


def _literal_type(value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int64"
    if isinstance(value, float):
        return "float64"
    if isinstance(value, str):
        return "string"
    raise PlanTypeError(f"unsupported literal {value!r}")


def infer_type(expr: Expr, schema: Schema) -> str:
    """Column type produced by ``expr``; raises PlanTypeError when ill-typed."""
    if isinstance(expr, ColumnRef):
        if not schema.has(expr.name):
            raise PlanTypeError(f"unknown column {expr.name!r}")
        return schema.type_of(expr.name)
    if isinstance(expr, Literal):
        return _literal_type(expr.value)
    if isinstance(expr, Compare):
        if expr.op not in COMPARE_OPS:
            raise PlanTypeError(f"unknown comparison {expr.op!r}")
        lt = infer_type(expr.lhs, schema)
        rt = infer_type(expr.rhs, schema)
        if lt != rt:
            raise PlanTypeError(f"comparison between {lt} and {rt}")
        return "bool"
    if isinstance(expr, Arith):
        if expr.op not in ARITH_OPS:
            raise PlanTypeError(f"unknown arithmetic op {expr.op!r}")
        lt = infer_type(expr.lhs, schema)
        rt = infer_type(expr.rhs, schema)
        if lt not in ("int64", "float64") or rt not in ("int64", "float64"):
            raise PlanTypeError(f"arithmetic over {lt} and {rt}")
        if expr.op == "/":
            return "float64"
        return "int64" if lt == rt == "int64" else "float64"
    if isinstance(expr, BoolOp):
        if expr.op not in BOOL_OPS:
            raise PlanTypeError(f"unknown boolean op {expr.op!r}")
        if expr.op == "not" and len(expr.operands) != 1:
            raise PlanTypeError("'not' takes exactly one operand")
        if expr.op != "not" and len(expr.operands) < 2:
            raise PlanTypeError(f"{expr.op!r} needs at least two operands")
        for o in expr.operands:
            if infer_type(o, schema) != "bool":
                raise PlanTypeError(f"{expr.op!r} over non-boolean operand")
        return "bool"
    raise PlanTypeError(f"unknown expression node {expr!r}")


def evaluate(expr: Expr, table: ColumnarTable) -> np.ndarray:
    """Evaluate ``expr`` to a vector of ``table.row_count`` values."""
    n = table.row_count
    if isinstance(expr, ColumnRef):
        return table.columns[expr.name]
    if isinstance(expr, Literal):
        ctype = _literal_type(expr.value)
        if ctype == "string":
            out = np.empty(n, dtype=object)
            out[:] = expr.value
            return out
        dtype = {"int64": np.int64, "float64": np.float64, "bool": np.bool_}[ctype]
        return np.full(n, expr.value, dtype=dtype)
    if isinstance(expr, Compare):
        lhs = evaluate(expr.lhs, table)
        rhs = evaluate(expr.rhs, table)
        op = expr.op
        if op == "<":
            out = lhs < rhs
        elif op == "<=":
            out = lhs <= rhs
        elif op == ">":
            out = lhs > rhs
        elif op == ">=":
            out = lhs >= rhs
        elif op == "=":
            out = lhs == rhs
        else:
            out = lhs != rhs
        return np.asarray(out, dtype=np.bool_)
    if isinstance(expr, Arith):
        lhs = evaluate(expr.lhs, table)
        rhs = evaluate(expr.rhs, table)
        if expr.op == "+":
            return lhs + rhs
        if expr.op == "-":
            return lhs - rhs
        if expr.op == "*":
            return lhs * rhs
        if np.any(rhs == 0):
            raise DivideByZero("division by zero")
        return lhs.astype(np.float64) / rhs.astype(np.float64)
    if isinstance(expr, BoolOp):
        parts = [np.asarray(evaluate(o, table), dtype=np.bool_) for o in expr.operands]
        if expr.op == "not":
            return ~parts[0]
        out = parts[0]
        for p in parts[1:]:
            out = (out & p) if expr.op == "and" else (out | p)
        return out
    raise PlanTypeError(f"unknown expression node {expr!r}")


def col(name: str) -> ColumnRef:
    return ColumnRef(name)


def lit(value) -> Literal:
    return Literal(value)


def cmp_(op: str, lhs: Expr, rhs: Expr) -> Compare:
    return Compare(op, lhs, rhs)


def and_(*operands: Expr) -> BoolOp:
    return BoolOp("and", tuple(operands))
