"""Git-like branching catalog over CSV table files.

A catalog is a directory with a ``catalog.json`` manifest mapping branches to
table-file references. Branching is copy-on-write: a new branch reuses its
parent's files by reference, and every write lands in a new content-addressed
file under the writing branch's data directory, so files referenced by other
branches are never mutated. Shared-table detection compares content hashes,
not paths.
"""

from __future__ import annotations

import csv
import io
import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AlreadyExists,
    CatalogNotFound,
    DuplicateBranch,
    HashMismatch,
    InvalidName,
    SchemaError,
    UnknownBranch,
    UnknownTable,
)
from .hashing import fnv1a64, fnv1a64_bytes, hex16
from .tables import BRANCH_COLUMN, COLUMN_TYPES, ColumnarTable, Schema

MANIFEST_NAME = "catalog.json"
MANIFEST_VERSION = 1
MAIN = "main"

_NAME_RE = re.compile(r"^[a-z0-9_\-]+$")


def _check_name(name: str, kind: str) -> None:
    if not _NAME_RE.match(name or ""):
        raise InvalidName(f"invalid {kind} name {name!r} (allowed: [a-z0-9_-]+)")


@dataclass(frozen=True)
class TableRef:
    """Reference to one immutable table file plus its schema sidecar."""

    table_name: str
    file: str
    content_hash: str
    schema_file: str


@dataclass
class Branch:
    parent: str | None
    commit: str
    tables: dict[str, TableRef] = field(default_factory=dict)


@dataclass
class CatalogManifest:
    version: int
    branches: dict[str, Branch]

    def branch(self, name: str) -> Branch:
        if name not in self.branches:
            raise UnknownBranch(f"no branch named {name!r}")
        return self.branches[name]


def commit_id(tables: dict[str, TableRef]) -> str:
    """Deterministic commit id: FNV-1a over sorted (name, hash) pairs."""
    h = fnv1a64(b"")
    for name in sorted(tables):
        h = fnv1a64(name.encode() + b"\x00", h)
        h = fnv1a64(tables[name].content_hash.encode() + b"\x00", h)
    return hex16(h)


def _manifest_to_dict(m: CatalogManifest) -> dict:
    return {
        "version": m.version,
        "branches": {
            name: {
                "parent": b.parent,
                "commit": b.commit,
                "tables": {
                    t: {
                        "table_name": r.table_name,
                        "file": r.file,
                        "content_hash": r.content_hash,
                        "schema_file": r.schema_file,
                    }
                    for t, r in b.tables.items()
                },
            }
            for name, b in m.branches.items()
        },
    }


def _manifest_from_dict(d: dict) -> CatalogManifest:
    branches = {}
    for name, bd in d["branches"].items():
        tables = {
            t: TableRef(
                table_name=rd["table_name"],
                file=rd["file"],
                content_hash=rd["content_hash"],
                schema_file=rd["schema_file"],
            )
            for t, rd in bd["tables"].items()
        }
        branches[name] = Branch(bd["parent"], bd["commit"], tables)
    return CatalogManifest(d["version"], branches)


def schema_to_json(schema: Schema) -> str:
    return (
        json.dumps(
            {"columns": [{"name": n, "type": t} for n, t in schema.columns]},
            sort_keys=True,
            indent=2,
        )
        + "\n"
    )


def schema_from_json(text: str) -> Schema:
    d = json.loads(text)
    cols = []
    for c in d["columns"]:
        if c["type"] not in COLUMN_TYPES:
            raise SchemaError(f"unknown column type {c['type']!r}")
        cols.append((c["name"], c["type"]))
    return Schema(tuple(cols))


def _format_value(v, ctype: str) -> str:
    if ctype == "bool":
        return "true" if v else "false"
    if ctype == "float64":
        return repr(float(v))
    if ctype == "int64":
        return str(int(v))
    return str(v)


def table_to_csv_bytes(table: ColumnarTable) -> bytes:
    """RFC-4180 CSV with header row; floats as shortest round-trip decimals."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(table.schema.names)
    ctypes = [t for _, t in table.schema.columns]
    raw = [table.columns[n] for n in table.schema.names]
    lists = [
        c.tolist() if t != "string" else list(c)
        for c, t in zip(raw, ctypes)
    ]
    writer.writerows(
        [
            tuple(_format_value(v, t) for v, t in zip(row, ctypes))
            for row in zip(*lists)
        ]
    )
    return buf.getvalue().encode("utf-8")


_BOOL_VALUES = {"true": True, "false": False}


def table_from_csv_bytes(data: bytes, schema: Schema) -> ColumnarTable:
    text = data.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty table file (missing header)") from None
    if tuple(header) != schema.names:
        raise SchemaError(
            f"header {header!r} does not match schema {schema.names!r}"
        )
    raw_cols: list[list] = [[] for _ in schema.names]
    for row in reader:
        if len(row) != len(schema.names):
            raise SchemaError(f"row width {len(row)} != {len(schema.names)}")
        for i, v in enumerate(row):
            raw_cols[i].append(v)
    cols: dict[str, np.ndarray] = {}
    for (name, ctype), values in zip(schema.columns, raw_cols):
        if ctype == "int64":
            cols[name] = np.array([int(v) for v in values], dtype=np.int64)
        elif ctype == "float64":
            cols[name] = np.array([float(v) for v in values], dtype=np.float64)
        elif ctype == "bool":
            try:
                cols[name] = np.array(
                    [_BOOL_VALUES[v] for v in values], dtype=np.bool_
                )
            except KeyError as e:
                raise SchemaError(f"bad boolean literal {e.args[0]!r}") from None
        else:
            cols[name] = np.array(values, dtype=object)
    return ColumnarTable(schema, cols)


class Catalog:
    """A manifest plus the directory holding its table files."""

    def __init__(self, root: Path, manifest: CatalogManifest):
        self.root = Path(root)
        self.manifest = manifest

    # -- lifecycle -----------------------------------------------------

    @staticmethod
    def init(root: str | Path) -> "Catalog":
        root = Path(root)
        if (root / MANIFEST_NAME).exists():
            raise AlreadyExists(f"catalog already initialized at {root}")
        root.mkdir(parents=True, exist_ok=True)
        manifest = CatalogManifest(
            MANIFEST_VERSION, {MAIN: Branch(None, commit_id({}), {})}
        )
        cat = Catalog(root, manifest)
        cat._save()
        return cat

    @staticmethod
    def load(root: str | Path) -> "Catalog":
        root = Path(root)
        path = root / MANIFEST_NAME
        if not path.exists():
            raise CatalogNotFound(f"no catalog at {root}")
        manifest = _manifest_from_dict(json.loads(path.read_text()))
        return Catalog(root, manifest)

    def _save(self) -> None:
        text = json.dumps(_manifest_to_dict(self.manifest), sort_keys=True, indent=2)
        (self.root / MANIFEST_NAME).write_text(text + "\n")

    # -- branch operations ---------------------------------------------

    def branch_names(self) -> list[str]:
        return sorted(self.manifest.branches)

    def create_branch(self, new: str, from_branch: str = MAIN) -> None:
        _check_name(new, "branch")
        src = self.manifest.branch(from_branch)
        if new in self.manifest.branches:
            raise DuplicateBranch(f"branch {new!r} already exists")
        tables = dict(src.tables)
        self.manifest.branches[new] = Branch(from_branch, commit_id(tables), tables)
        self._save()

    def write_table(self, branch: str, table_name: str, table: ColumnarTable) -> TableRef:
        _check_name(table_name, "table")
        b = self.manifest.branch(branch)
        if table.schema.has(BRANCH_COLUMN):
            raise SchemaError(f"{BRANCH_COLUMN!r} is a reserved column name")
        data = table_to_csv_bytes(table)
        content_hash = hex16(fnv1a64_bytes(data))
        data_dir = self.root / "data" / branch
        data_dir.mkdir(parents=True, exist_ok=True)
        stem = f"{table_name}.{content_hash}"
        file_rel = f"data/{branch}/{stem}.csv"
        schema_rel = f"data/{branch}/{stem}.schema.json"
        (self.root / file_rel).write_bytes(data)
        (self.root / schema_rel).write_text(schema_to_json(table.schema))
        ref = TableRef(table_name, file_rel, content_hash, schema_rel)
        b.tables[table_name] = ref
        b.commit = commit_id(b.tables)
        self._save()
        return ref

    def merge_branch(self, src: str, dst: str) -> None:
        """Table-granularity merge; on conflict the source version wins."""
        s = self.manifest.branch(src)
        d = self.manifest.branch(dst)
        d.tables.update(s.tables)
        d.commit = commit_id(d.tables)
        self._save()

    def resolve_variants(self, table_name: str) -> tuple[dict[str, TableRef], bool]:
        """Per-branch refs for a table, plus whether all variants share bytes."""
        refs = {
            name: b.tables[table_name]
            for name, b in self.manifest.branches.items()
            if table_name in b.tables
        }
        if not refs:
            raise UnknownTable(f"table {table_name!r} exists in no branch")
        shared = len({r.content_hash for r in refs.values()}) == 1
        return dict(sorted(refs.items())), shared

    def table_ref(self, branch: str, table_name: str) -> TableRef:
        b = self.manifest.branch(branch)
        if table_name not in b.tables:
            raise UnknownTable(f"no table {table_name!r} on branch {branch!r}")
        return b.tables[table_name]

    # -- reads ----------------------------------------------------------

    def read_table(self, branch: str, table_name: str) -> ColumnarTable:
        return self.load_ref(self.table_ref(branch, table_name))

    def load_ref(self, ref: TableRef) -> ColumnarTable:
        data = (self.root / ref.file).read_bytes()
        actual = hex16(fnv1a64_bytes(data))
        if actual != ref.content_hash:
            raise HashMismatch(
                f"{ref.file}: stored hash {ref.content_hash}, bytes hash {actual}"
            )
        schema = schema_from_json((self.root / ref.schema_file).read_text())
        if schema.has(BRANCH_COLUMN):
            raise SchemaError(f"{BRANCH_COLUMN!r} is a reserved column name")
        return table_from_csv_bytes(data, schema)

    def file_size(self, ref: TableRef) -> int:
        return (self.root / ref.file).stat().st_size


class TableStore:
    """Process-level cache of parsed tables keyed by content hash.

    Acts as the buffer pool: a file is parsed at most once per process, while
    engines keep their own logical scan accounting on top. Thread-safe.
    """

    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self._cache: dict[str, ColumnarTable] = {}
        self._lock = threading.Lock()

    def get(self, ref: TableRef) -> ColumnarTable:
        with self._lock:
            hit = self._cache.get(ref.content_hash)
        if hit is not None:
            return hit
        table = self.catalog.load_ref(ref)
        with self._lock:
            self._cache[ref.content_hash] = table
        return table
