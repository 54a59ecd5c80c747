"""Run records and their on-disk form."""

from __future__ import annotations

import csv
import io
import json
import operator
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np

_OPS = {"<=": operator.le, "<": operator.lt, ">=": operator.ge, ">": operator.gt,
        "==": operator.eq}


@dataclass
class Criterion:
    name: str
    measured: object
    threshold: object
    op: str
    passed: bool
    note: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: measured {_fmt(self.measured)} {self.op} {_fmt(self.threshold)}"


@dataclass
class RunSummary:
    scenario: str
    statement: str
    criteria: list
    numbers: dict
    wall_time: float
    config: dict
    config_hash: str
    artifacts: list = dc_field(default_factory=list)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.criteria) and all(c.passed for c in self.criteria)

    def failures(self) -> list:
        return [c for c in self.criteria if not c.passed]

    def criterion(self, name: str) -> Criterion:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(_plain(d), indent=2, sort_keys=True)

    def report(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.scenario}: {self.statement}"
        lines = [head] + ["  " + c.line() for c in self.criteria]
        if self.error:
            lines.append(f"  ERROR {self.error}")
        lines.append(f"  wall time {self.wall_time:.1f} s")
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def compare(measured, threshold, op: str) -> bool:
    if op == "in":
        lo, hi = threshold
        return bool(lo <= measured <= hi)
    if op == "in_all":
        lo, hi = threshold
        return all(lo <= m <= hi for m in measured)
    try:
        return bool(_OPS[op](measured, threshold))
    except KeyError:
        raise ValueError(f"unknown comparison {op!r}") from None


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def csv_text(columns, rows, config_hash: str, scenario: str) -> str:
    buf = io.StringIO()
    buf.write(f"# scenario={scenario}\n# config_hash={config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_cell(v) for v in r])
    return buf.getvalue()


def read_csv(path):
    """Columns and rows of a harness CSV, comments skipped; numbers parsed where possible."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    columns = next(reader)
    rows = []
    for r in reader:
        parsed = []
        for v in r:
            try:
                parsed.append(float(v))
            except ValueError:
                parsed.append(v)
        rows.append(parsed)
    return columns, rows


class Context:
    """Collects criteria, tables and numbers while a scenario runs."""

    def __init__(self, config, out_dir: Path | None):
        self.config = config
        self.out_dir = out_dir
        self.criteria: list[Criterion] = []
        self.numbers: dict = {}
        self.tables: dict = {}
        self.artifacts: list[str] = []

    def check(self, name, measured, threshold, op="<=", note="") -> bool:
        ok = compare(measured, threshold, op)
        self.criteria.append(Criterion(name, _plain(measured), _plain(threshold), op, ok, note))
        return ok

    def record(self, **numbers) -> None:
        self.numbers.update(_plain(numbers))

    def table(self, name: str, columns, rows) -> None:
        columns, rows = list(columns), [list(r) for r in rows]
        self.tables[name] = (columns, rows)
        if self.out_dir is not None:
            path = self.out_dir / f"{name}.csv"
            path.write_text(csv_text(columns, rows, self.config.hash, self.config.scenario))
            self.artifacts.append(str(path))
