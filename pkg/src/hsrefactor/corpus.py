"""Codebase snapshots, selection checks and the metrics store."""

from __future__ import annotations

import enum
import fnmatch
import json
import os
import tempfile
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from hsrefactor.artifacts import files_hash
from hsrefactor.errors import HsRefactorError, NoSources
from hsrefactor.metrics import SizeClass, classify_size, feature_count
from hsrefactor.syntax import LexError, ParseError, count_loc, parse_module
from hsrefactor.toolchain import CommandRunner, HlintReport, ProfileStats, ToolConfig, ToolError, run_hlint

DEFAULT_EXCLUDES = (".*", "dist", "dist-newstyle", ".stack-work", "build", "_build", "node_modules")


class IoError(HsRefactorError):
    def __init__(self, path: Path, detail: str = ""):
        super().__init__(f"cannot read {path}{': ' + detail if detail else ''}")
        self.path = path


class DuplicatePhase(HsRefactorError):
    pass


@dataclass(frozen=True)
class CodebaseSnapshot:
    id: str
    root: Path
    files: dict[str, str]
    loc: int
    content_hash: str

    @classmethod
    def from_files(cls, root: Path, files: dict[str, str]) -> CodebaseSnapshot:
        ordered = {path: files[path] for path in sorted(files)}
        digest = files_hash(ordered)
        loc = sum(count_loc(src) for src in ordered.values())
        return cls(digest[:16], Path(root), ordered, loc, digest)

    def modules(self):
        """Parsed modules, skipping files outside the supported subset."""
        out = []
        for path, source in self.files.items():
            try:
                out.append(parse_module(source, path))
            except (ParseError, LexError):
                continue
        return out

    def manifest(self) -> dict:
        return {
            "id": self.id,
            "content_hash": self.content_hash,
            "loc": self.loc,
            "files": {p: files_hash({p: s}) for p, s in self.files.items()},
        }


def _excluded(rel: Path, excludes: tuple[str, ...]) -> bool:
    return any(fnmatch.fnmatch(part, pat) for part in rel.parts for pat in excludes)


def load_snapshot(root: str | Path, excludes: tuple[str, ...] = DEFAULT_EXCLUDES) -> CodebaseSnapshot:
    """Read every ``.hs`` file under ``root`` in a stable order."""
    root = Path(root)
    if not root.is_dir():
        raise NoSources(f"{root} is not a directory")
    files: dict[str, str] = {}
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        rel_dir = Path(dirpath).relative_to(root)
        dirnames[:] = [d for d in dirnames if not _excluded(rel_dir / d, excludes)]
        for name in sorted(filenames):
            rel = rel_dir / name
            if not name.endswith(".hs") or _excluded(rel, excludes):
                continue
            try:
                files[rel.as_posix()] = (root / rel).read_bytes().decode("utf-8")
            except (OSError, UnicodeDecodeError) as exc:
                raise IoError(root / rel, str(exc)) from exc
    if not files:
        raise NoSources(f"no .hs files under {root}")
    return CodebaseSnapshot.from_files(root, files)


# selection


@dataclass(frozen=True)
class SelectionCriteria:
    language: str = "Haskell"
    min_stars: int = 50
    max_size_kb: int = 2000
    size_class: SizeClass | None = None
    min_features: int = 3

    def __post_init__(self):
        if min(self.min_stars, self.max_size_kb, self.min_features) < 0:
            raise ValueError("selection bounds must be non-negative")


@dataclass
class SelectionVerdict:
    accepted: bool
    reasons: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "reasons": list(self.reasons)}


def build_search_filter(criteria: SelectionCriteria) -> str:
    return f"language:{criteria.language} stars:>{criteria.min_stars} size:<{criteria.max_size_kb}"


def evaluate_candidate(snapshot: CodebaseSnapshot, criteria: SelectionCriteria,
                       runner: CommandRunner | None = None, tools: ToolConfig | None = None,
                       workdir: Path | None = None) -> SelectionVerdict:
    """Check size class, functional-feature count and (when a runner is given) HLint."""
    ok = True
    reasons = []
    size = classify_size(snapshot.loc)
    if criteria.size_class is not None:
        size_ok = size is criteria.size_class
        wanted = criteria.size_class.value
    else:
        size_ok = size is not SizeClass.BELOW_RANGE
        wanted = "Small, Medium or Large"
    ok &= size_ok
    reasons.append(f"size: {snapshot.loc} LOC is {size.value} ({'ok' if size_ok else 'wanted ' + wanted})")
    features = feature_count(snapshot.modules())
    f_ok = features.F >= criteria.min_features
    ok &= f_ok
    reasons.append(
        f"features: F={features.F} (higher-order {features.higher_order_functions}, "
        f"type classes {features.type_classes}, monadic {features.monadic_compositions}), "
        f"{'ok' if f_ok else f'below {criteria.min_features}'}"
    )
    if runner is None:
        reasons.append("hlint: not checked (no tool runner)")
    else:
        try:
            with tempfile.TemporaryDirectory() as tmp:
                target = Path(workdir or tmp)
                write_files(target, snapshot.files)
                report = run_hlint(target, runner, tools)
            reasons.append(f"hlint: {report.hint_count} hints, ok")
        except ToolError as exc:
            ok = False
            reasons.append(f"hlint: failed ({exc})")
    return SelectionVerdict(bool(ok), reasons)


def write_files(root: Path, files: dict[str, str]) -> None:
    for rel, source in files.items():
        target = Path(root) / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(source, encoding="utf-8")


# metrics records


class Phase(str, enum.Enum):
    PRE = "pre"
    POST = "post"


@dataclass(frozen=True)
class MetricsRecord:
    phase: Phase
    C: int
    T_secs: Decimal | None
    T_ticks: int | None
    M: int | None
    H: int | None
    snapshot_id: str
    candidate_hash: str = ""

    def __post_init__(self):
        for name in ("C", "T_ticks", "M", "H"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return {
            "phase": self.phase.value,
            "C": self.C,
            "T": None if self.T_ticks is None else {"secs": str(self.T_secs), "ticks": self.T_ticks},
            "M": self.M,
            "H": self.H,
            "snapshot_id": self.snapshot_id,
            "candidate_hash": self.candidate_hash,
        }

    @classmethod
    def from_dict(cls, data: dict) -> MetricsRecord:
        t = data.get("T")
        return cls(
            Phase(data["phase"]),
            int(data["C"]),
            None if t is None else Decimal(t["secs"]),
            None if t is None else int(t["ticks"]),
            data.get("M"),
            data.get("H"),
            data["snapshot_id"],
            data.get("candidate_hash", ""),
        )


def make_record(phase: Phase, snapshot_id: str, cc_total: int, profile: ProfileStats | None,
                hlint: HlintReport | None, candidate_hash: str = "") -> MetricsRecord:
    return MetricsRecord(
        phase,
        cc_total,
        profile.total_time_secs if profile else None,
        profile.ticks if profile else None,
        profile.total_alloc_bytes if profile else None,
        hlint.hint_count if hlint else None,
        snapshot_id,
        candidate_hash,
    )


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


class MetricsStore:
    """``<root>/metrics/<run_id>/<phase>.json`` plus snapshot manifests."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, run_id: str, phase: Phase) -> Path:
        return self.root / "metrics" / run_id / f"{phase.value}.json"

    def record(self, run_id: str, record: MetricsRecord) -> Path:
        path = self.path(run_id, record.phase)
        if path.exists():
            raise DuplicatePhase(f"{record.phase.value} metrics already recorded for run {run_id}")
        if record.phase is Phase.POST and not self.path(run_id, Phase.PRE).exists():
            raise HsRefactorError(f"post metrics for run {run_id} recorded before pre metrics")
        _atomic_write(path, json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    def load(self, run_id: str, phase: Phase) -> MetricsRecord | None:
        path = self.path(run_id, phase)
        if not path.exists():
            return None
        return MetricsRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def save_manifest(self, snapshot: CodebaseSnapshot) -> Path:
        path = self.root / "snapshots" / f"{snapshot.id}.json"
        _atomic_write(path, json.dumps(snapshot.manifest(), indent=2, sort_keys=True) + "\n")
        return path

    def clear_run(self, run_id: str) -> None:
        for phase in Phase:
            self.path(run_id, phase).unlink(missing_ok=True)


def record_metrics(store: MetricsStore, run_id: str, record: MetricsRecord) -> MetricsRecord:
    store.record(run_id, record)
    return record
