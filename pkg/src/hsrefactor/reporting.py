"""Pre/post comparison tables and their text and JSON renderings."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from hsrefactor.corpus import MetricsRecord, Phase
from hsrefactor.errors import HsRefactorError

SCHEMA_VERSION = 1
TWO_PLACES = Decimal("0.01")


class DivisionByZeroPre(HsRefactorError):
    pass


class SnapshotMismatch(HsRefactorError):
    pass


class Direction(str, enum.Enum):
    IMPROVED = "Improved"
    REGRESSED = "Regressed"
    UNCHANGED = "Unchanged"


def percent_reduction(pre, post) -> Decimal:
    """(pre - post) / pre * 100, rounded half-up to two decimals."""
    pre, post = Decimal(str(pre)), Decimal(str(post))
    if pre == 0:
        raise DivisionByZeroPre("percent change is undefined when the pre value is 0")
    return ((pre - post) / pre * 100).quantize(TWO_PLACES, rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class Row:
    label: str
    pre: int | None
    post: int | None
    percent_change: Decimal | None
    direction: Direction
    pre_text: str = ""
    post_text: str = ""
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "pre": self.pre,
            "post": self.post,
            "percent_change": None if self.percent_change is None else str(self.percent_change),
            "direction": self.direction.value,
            "pre_text": self.pre_text,
            "post_text": self.post_text,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Row:
        pct = data.get("percent_change")
        return cls(
            data["label"], data["pre"], data["post"], None if pct is None else Decimal(pct),
            Direction(data["direction"]), data.get("pre_text", ""), data.get("post_text", ""),
            data.get("note", ""),
        )


@dataclass(frozen=True)
class ComparisonTable:
    snapshot_id: str
    rows: tuple[Row, ...] = field(default_factory=tuple)

    def row(self, label: str) -> Row:
        return next(r for r in self.rows if r.label == label)

    def to_dict(self) -> dict:
        return {"snapshot_id": self.snapshot_id, "rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict) -> ComparisonTable:
        return cls(data["snapshot_id"], tuple(Row.from_dict(r) for r in data["rows"]))


CC_LABEL = "Cyclomatic Complexity (CC)"
RUNTIME_LABEL = "Runtime Efficiency"
MEMORY_LABEL = "Memory Allocation"
HLINT_LABEL = "HLint Comparison"


def _row(label: str, pre: int | None, post: int | None, pre_text: str, post_text: str) -> Row:
    if pre is None or post is None:
        return Row(label, pre, post, None, Direction.UNCHANGED, pre_text, post_text, "not measured")
    try:
        pct = percent_reduction(pre, post)
    except DivisionByZeroPre:
        direction = Direction.UNCHANGED if post == 0 else Direction.REGRESSED
        return Row(label, pre, post, None, direction, pre_text, post_text, "pre value is 0; percent undefined")
    if pct > 0:
        direction = Direction.IMPROVED
    elif pct < 0:
        direction = Direction.REGRESSED
    else:
        direction = Direction.UNCHANGED
    return Row(label, pre, post, pct, direction, pre_text, post_text)


def _hints(n: int | None) -> str:
    if n is None:
        return "n/a"
    return "No hints" if n == 0 else f"{n} hint" + ("" if n == 1 else "s")


def _runtime(rec: MetricsRecord) -> str:
    if rec.T_ticks is None:
        return "n/a"
    return f"{rec.T_secs} secs ({rec.T_ticks} ticks)"


def build_comparison(pre: MetricsRecord, post: MetricsRecord) -> ComparisonTable:
    """One row per metric; runtime compares ticks, memory compares allocated bytes."""
    if pre.snapshot_id != post.snapshot_id:
        raise SnapshotMismatch(f"records belong to {pre.snapshot_id} and {post.snapshot_id}")
    if pre.phase is not Phase.PRE or post.phase is not Phase.POST:
        raise SnapshotMismatch("need one pre and one post record")
    rows = (
        _row(CC_LABEL, pre.C, post.C, str(pre.C), str(post.C)),
        _row(RUNTIME_LABEL, pre.T_ticks, post.T_ticks, _runtime(pre), _runtime(post)),
        _row(MEMORY_LABEL, pre.M, post.M,
             "n/a" if pre.M is None else f"{pre.M:,} bytes", "n/a" if post.M is None else f"{post.M:,} bytes"),
        _row(HLINT_LABEL, pre.H, post.H, _hints(pre.H), _hints(post.H)),
    )
    return ComparisonTable(pre.snapshot_id, rows)


def render_text(table: ComparisonTable | None, metadata: dict | None = None) -> str:
    lines = []
    for key, value in sorted((metadata or {}).items()):
        lines.append(f"{key}: {value}")
    if lines:
        lines.append("")
    if table is None:
        lines.append("No comparison available: the run did not produce post-refactor metrics.")
        return "\n".join(lines) + "\n"
    lines.append("| Metric | Pre-Refactor | Post-Refactor | Change | Direction |")
    lines.append("|---|---|---|---|---|")
    for r in table.rows:
        change = "n/a" if r.percent_change is None else f"{r.percent_change}%"
        lines.append(f"| {r.label} | {r.pre_text} | {r.post_text} | {change} | {r.direction.value} |")
    notes = [f"- {r.label}: {r.note}" for r in table.rows if r.note]
    if notes:
        lines += ["", *notes]
    return "\n".join(lines) + "\n"


def render_json(table: ComparisonTable | None, metadata: dict | None = None) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "metadata": metadata or {},
           "table": None if table is None else table.to_dict()}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_json(text: str) -> tuple[ComparisonTable | None, dict]:
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise HsRefactorError(f"unsupported report schema version {doc.get('schema_version')}")
    table = doc.get("table")
    return (None if table is None else ComparisonTable.from_dict(table)), doc.get("metadata", {})


def render_report(table: ComparisonTable | None, metadata: dict | None = None, format: str = "text") -> str:
    if format == "text":
        return render_text(table, metadata)
    if format in ("json", "structured"):
        return render_json(table, metadata)
    raise ValueError(f"unknown report format {format!r}")
