"""Verification cases and their byte-stable JSON / CSV rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

RELATIONS = ("<=", "==")


@dataclass(frozen=True)
class Case:
    """One checked inequality ``lhs <= rhs`` or identity ``lhs == rhs``.

    ``slack`` is rhs - lhs for "<=" and -|lhs - rhs| for "=="; the case
    passes when slack >= -tol.  Report-only cases (``asserted=False``)
    always pass but keep their measured slack.
    """

    key: tuple
    inputs: dict
    lhs: float
    rhs: float
    relation: str = "<="
    tol: float = 0.0
    asserted: bool = True

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")

    @property
    def slack(self) -> float:
        if self.relation == "<=":
            return self.rhs - self.lhs
        return -abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        if not self.asserted:
            return True
        s = self.slack
        return bool(math.isfinite(s) and s >= -self.tol)


@dataclass
class VerificationReport:
    suite: str
    statement: str
    cases: list[Case]
    metadata: dict = field(default_factory=dict)

    @property
    def pass_count(self) -> int:
        return sum(c.passed for c in self.cases)

    @property
    def fail_count(self) -> int:
        return len(self.cases) - self.pass_count

    @property
    def worst_slack(self) -> float:
        asserted = [c.slack for c in self.cases if c.asserted]
        if not asserted:
            return math.nan
        return min(asserted, key=lambda s: -math.inf if math.isnan(s) else s)

    @property
    def exit_code(self) -> int:
        return 0 if self.fail_count == 0 else 1


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    text = format(x, ".17g")
    # keep floats recognisable as floats: 1.0 -> "1.0", not "1"
    return text if any(ch in text for ch in ".e") else text + ".0"


def _json(value: Any, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return fmt_float(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {_json(v, indent, level + 1)}"
                 for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in value):
            return "[" + ", ".join(_json(v, indent, level + 1) for v in value) + "]"
        items = [inner + _json(v, indent, level + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if hasattr(value, "item"):  # numpy scalar
        return _json(value.item(), indent, level)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dumps(value: Any, indent: int = 2) -> str:
    """JSON text with insertion-ordered keys and 17-digit floats; ends in LF."""
    return _json(value, indent, 0) + "\n"


def case_record(case: Case) -> dict:
    return {
        "inputs": case.inputs,
        "lhs": case.lhs,
        "relation": case.relation,
        "rhs": case.rhs,
        "tol": case.tol,
        "slack": case.slack,
        "asserted": case.asserted,
        "passed": case.passed,
    }


def report_record(report: VerificationReport) -> dict:
    return {
        "suite": report.suite,
        "statement": report.statement,
        "summary": {
            "cases": len(report.cases),
            "passed": report.pass_count,
            "failed": report.fail_count,
            "worst_slack": report.worst_slack,
        },
        "metadata": report.metadata,
        "cases": [case_record(c) for c in report.cases],
    }


def fmt_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt_float(value)
    if isinstance(value, (list, tuple)):
        return " ".join(fmt_cell(v) for v in value)
    if value is None:
        return ""
    return str(value)


def render_csv(report: VerificationReport) -> str:
    """``#`` metadata lines, then one header row and one row per case."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    buf.write(f"# suite: {report.suite}\n")
    buf.write(f"# statement: {report.statement}\n")
    buf.write(f"# summary: cases={len(report.cases)} passed={report.pass_count} "
              f"failed={report.fail_count} worst_slack={fmt_float(report.worst_slack)}\n")
    for key, value in report.metadata.items():
        if isinstance(value, dict):
            for k, v in value.items():
                buf.write(f"# {key}.{k}: {fmt_cell(v)}\n")
        else:
            buf.write(f"# {key}: {fmt_cell(value)}\n")
    columns: list[str] = []
    for c in report.cases:
        for k in c.inputs:
            if k not in columns:
                columns.append(k)
    tail = ["lhs", "relation", "rhs", "tol", "slack", "asserted", "passed"]
    writer.writerow(columns + tail)
    for c in report.cases:
        rec = case_record(c)
        writer.writerow([fmt_cell(c.inputs.get(k)) for k in columns] + [fmt_cell(rec[k]) for k in tail])
    return buf.getvalue()


def render(report: VerificationReport, fmt: str) -> str:
    if fmt == "json":
        return dumps(report_record(report))
    if fmt == "csv":
        return render_csv(report)
    raise ValueError(f"unknown format {fmt!r}")
