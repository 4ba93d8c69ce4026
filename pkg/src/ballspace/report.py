"""Verification reports: per-probe records, aggregates, pass/fail and a config snapshot."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1


def _clean(obj):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


@dataclass
class VerificationReport:
    check: str
    passed: bool = True
    asserted: bool = True  # informational reports never fail a run
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add(self, **record) -> None:
        self.records.append(record)

    def require(self, condition: bool, note: str | None = None) -> bool:
        condition = bool(condition)
        if not condition:
            self.passed = False
            if note:
                self.notes.append(note)
        return condition

    @property
    def ok(self) -> bool:
        return self.passed or not self.asserted

    def to_dict(self) -> dict:
        return _clean(
            {
                "schema": SCHEMA_VERSION,
                "check": self.check,
                "passed": self.passed,
                "asserted": self.asserted,
                "aggregates": self.aggregates,
                "records": self.records,
                "config": self.config,
                "notes": self.notes,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def plot_rows(self) -> list[tuple]:
        """(check, probe_id, x, value) rows: every numeric field of every record."""
        rows = []
        for i, rec in enumerate(self.records):
            pid = rec.get("probe", i)
            for key in sorted(rec):
                v = rec[key]
                if isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) and key != "probe":
                    rows.append((self.check, pid, key, float(v)))
        return rows


def text_table(reports: list[VerificationReport]) -> str:
    rows = [("check", "status", "key aggregates")]
    for r in reports:
        status = "PASS" if r.passed else ("FAIL" if r.asserted else "INFO")
        aggs = ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(r.aggregates.items()) if not isinstance(v, (dict, list)))
        rows.append((str(r.config.get("name", r.check)), status, aggs))
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    return "\n".join(f"{a:<{w0}}  {b:<{w1}}  {c}".rstrip() for a, b, c in rows) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def plot_csv(reports: list[VerificationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "probe_id", "x", "value"])
    for r in reports:
        for row in r.plot_rows():
            w.writerow([row[0], row[1], row[2], repr(row[3])])
    return buf.getvalue()
