"""Workspace directory: artifact paths, stage manifests, and the process lock.

Each completed stage leaves ``stages/<name>.json`` holding a fingerprint of
the configuration it ran with and of its upstream stage. A stage whose
fingerprint is unchanged and whose outputs all exist is skipped on rerun.
"""

from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Mapping

from filelock import FileLock, Timeout

STAGES = ("ingest", "split", "score", "rank", "aggregate", "merge", "eval")


class StageError(RuntimeError):
    """A stage's prerequisite is missing or stale."""


class WorkspaceLocked(RuntimeError):
    pass


def fingerprint(stage: str, settings: Mapping[str, str], upstream: str = "") -> str:
    payload = json.dumps({"stage": stage, "settings": dict(settings), "upstream": upstream}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Workspace:
    def __init__(self, root: str | Path, reports: str | Path | None = None) -> None:
        self.root = Path(root)
        self.reports = Path(reports) if reports is not None else self.root / "reports"

    # layout
    @property
    def clean_events(self) -> Path:
        return self.root / "clean" / "events.csv"

    @property
    def clean_truth(self) -> Path:
        return self.root / "clean" / "truth.csv"

    @property
    def clean_info(self) -> Path:
        return self.root / "clean" / "info.json"

    @property
    def stats_dir(self) -> Path:
        return self.root / "stats"

    @property
    def split_manifest(self) -> Path:
        return self.root / "split" / "manifest.csv"

    @property
    def ego_dump(self) -> Path:
        return self.root / "split" / "egos.csv"

    def score_table(self, label: str, set_name: str) -> Path:
        return self.root / "scores" / label / f"{set_name}.csv"

    def ranking(self, label: str, set_name: str, ranking_id: str) -> Path:
        return self.root / "rankings" / label / set_name / f"{ranking_id}.csv"

    def model(self, label: str) -> Path:
        return self.root / "models" / f"{label}.json"

    def g_scores(self, label: str) -> Path:
        return self.root / "models" / f"{label}_g.csv"

    def report_dir(self, label: str, set_name: str | None = None) -> Path:
        base = self.reports / label
        return base / set_name if set_name else base

    # stage bookkeeping
    def _manifest(self, stage: str) -> Path:
        return self.root / "stages" / f"{stage}.json"

    def stage_record(self, stage: str) -> dict | None:
        path = self._manifest(stage)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def require(self, stage: str) -> dict:
        record = self.stage_record(stage)
        if record is None:
            raise StageError(f"stage '{stage}' has not been run in {self.root}")
        return record

    def up_to_date(self, stage: str, fp: str) -> bool:
        record = self.stage_record(stage)
        if record is None or record.get("fingerprint") != fp:
            return False
        return all((self.root / rel).exists() for rel in record.get("outputs", []))

    def complete(self, stage: str, fp: str, outputs: list[Path], info: Mapping | None = None) -> None:
        rels = sorted(_relative(p, self.root) for p in outputs)
        record = {"stage": stage, "fingerprint": fp, "outputs": rels, "info": dict(info or {})}
        path = self._manifest(stage)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @contextmanager
    def locked(self) -> Iterator["Workspace"]:
        self.root.mkdir(parents=True, exist_ok=True)
        lock = FileLock(str(self.root / ".lock"))
        try:
            lock.acquire(timeout=0)
        except Timeout:
            raise WorkspaceLocked(f"workspace {self.root} is in use by another process") from None
        try:
            yield self
        finally:
            lock.release()


def _relative(path: str | Path, root: Path) -> str:
    """Path relative to the workspace root when inside it, absolute otherwise."""
    resolved = Path(path).resolve()
    try:
        return str(resolved.relative_to(root.resolve()))
    except ValueError:
        return str(resolved)
