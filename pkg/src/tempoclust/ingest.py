"""Parsing of event logs and task catalogs into per-learner trajectories.

An event log is a flat table of ``(learner_id, task_id, timestamp)`` rows,
timestamps measured in fractional days since course start.  A task catalog
fixes the ordering of tasks along the course axis.  Trajectories are
length-M vectors of completion times, one entry per catalog task, with a
configurable policy for tasks a learner never completed.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

EVENT_HEADER = ["learner_id", "task_id", "timestamp"]
CATALOG_HEADER = ["task_id", "order_index"]

MISSING_POLICIES = ("sentinel_end_of_course", "drop")
EVENT_FORMATS = ("completion", "click")


class IngestError(ValueError):
    """Malformed input data; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class EventLog:
    """Deduplicated completion events, one record per (learner, task)."""

    records: list[tuple[str, str, float]]

    def __post_init__(self):
        if not self.records:
            raise IngestError("event log holds no records")
        for lid, tid, ts in self.records:
            if not math.isfinite(ts) or ts < 0:
                raise IngestError(f"invalid timestamp {ts!r} for ({lid}, {tid})")

    @property
    def learner_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for lid, _, _ in self.records:
            seen.setdefault(lid)
        return list(seen)

    def events_for(self, learner_id: str) -> dict[str, float]:
        out: dict[str, float] = {}
        for lid, tid, ts in self.records:
            if lid == learner_id and (tid not in out or ts < out[tid]):
                out[tid] = ts
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_event_csv(self, fh)


def write_event_csv(log: EventLog, fh) -> None:
    """Serialize with exact round-trip float formatting."""
    writer = csv.writer(fh)
    writer.writerow(EVENT_HEADER)
    for lid, tid, ts in log.records:
        writer.writerow([lid, tid, repr(float(ts))])


@dataclass
class TaskCatalog:
    """Ordered task list; order_index maps task_id -> 1..M."""

    tasks: list[str]
    order_index: dict[str, int] = field(init=False)

    def __post_init__(self):
        if not self.tasks:
            raise IngestError("catalog holds no tasks")
        if len(set(self.tasks)) != len(self.tasks):
            raise IngestError("catalog task ids are not unique")
        self.order_index = {tid: k + 1 for k, tid in enumerate(self.tasks)}

    @property
    def size(self) -> int:
        return len(self.tasks)


@dataclass
class Trajectory:
    """One learner's completion-time vector over the catalog task axis."""

    learner_id: str
    values: np.ndarray
    completed: np.ndarray  # bool mask; False marks sentinel-imputed entries

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.completed = np.asarray(self.completed, dtype=bool)
        if self.values.ndim != 1 or self.values.shape != self.completed.shape:
            raise IngestError(f"malformed trajectory for {self.learner_id!r}")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise IngestError(f"non-finite or negative times for {self.learner_id!r}")

    def __len__(self) -> int:
        return self.values.size

    def completed_values(self) -> np.ndarray:
        return self.values[self.completed]


def _parse_rows(source) -> list[tuple[int, list[str]]]:
    if isinstance(source, (str, bytes)):
        text = source.decode("utf-8") if isinstance(source, bytes) else source
        fh = io.StringIO(text)
    elif isinstance(source, io.TextIOBase):
        fh = source
    else:  # byte stream
        fh = io.TextIOWrapper(source, encoding="utf-8")
    reader = csv.reader(fh)
    return [(lineno, row) for lineno, row in enumerate(reader, start=1) if row]


def parse_event_log(source, format: str = "completion") -> EventLog:
    """Parse a delimited event stream into a deduplicated EventLog.

    ``completion`` keeps the earliest timestamp per (learner, task).
    ``click`` additionally coarse-grains timestamps to whole days before
    keeping the first occurrence per (learner, page).
    """
    if format not in EVENT_FORMATS:
        raise IngestError(f"unknown event format {format!r}")
    rows = _parse_rows(source)
    if not rows:
        raise IngestError("empty event file")
    first_line, header = rows[0]
    if [h.strip() for h in header] != EVENT_HEADER:
        raise IngestError(f"expected header {','.join(EVENT_HEADER)}", line=first_line)
    earliest: dict[tuple[str, str], float] = {}
    order: list[tuple[str, str]] = []
    for lineno, row in rows[1:]:
        if [h.strip() for h in row] == EVENT_HEADER:
            raise IngestError("duplicate header", line=lineno)
        if len(row) != 3:
            raise IngestError(f"expected 3 fields, got {len(row)}", line=lineno)
        lid, tid, raw_ts = (f.strip() for f in row)
        if not lid or not tid:
            raise IngestError("empty learner or task id", line=lineno)
        try:
            ts = float(raw_ts)
        except ValueError:
            raise IngestError(f"unparseable timestamp {raw_ts!r}", line=lineno) from None
        if not math.isfinite(ts) or ts < 0:
            raise IngestError(f"timestamp {raw_ts} out of range", line=lineno)
        if format == "click":
            ts = float(math.floor(ts))
        key = (lid, tid)
        if key not in earliest:
            earliest[key] = ts
            order.append(key)
        elif ts < earliest[key]:
            earliest[key] = ts
    if not earliest:
        raise IngestError("event file holds a header but no data rows")
    return EventLog([(lid, tid, earliest[(lid, tid)]) for lid, tid in order])


def parse_task_catalog(source) -> TaskCatalog:
    """Parse a ``task_id,order_index`` table into an ordered catalog."""
    rows = _parse_rows(source)
    if not rows:
        raise IngestError("empty catalog file")
    first_line, header = rows[0]
    if [h.strip() for h in header] != CATALOG_HEADER:
        raise IngestError(
            f"expected header {','.join(CATALOG_HEADER)}", line=first_line
        )
    entries: list[tuple[int, str]] = []
    for lineno, row in rows[1:]:
        if len(row) != 2:
            raise IngestError(f"expected 2 fields, got {len(row)}", line=lineno)
        tid, raw_idx = (f.strip() for f in row)
        try:
            idx = int(raw_idx)
        except ValueError:
            raise IngestError(f"unparseable order index {raw_idx!r}", line=lineno) from None
        entries.append((idx, tid))
    if not entries:
        raise IngestError("catalog file holds a header but no data rows")
    entries.sort(key=lambda e: e[0])
    indices = [idx for idx, _ in entries]
    if len(set(indices)) != len(indices):
        raise IngestError("catalog order indices are not unique")
    return TaskCatalog([tid for _, tid in entries])


def build_trajectory(
    log: EventLog,
    catalog: TaskCatalog,
    learner_id: str,
    missing_policy: str = "sentinel_end_of_course",
    course_end: float | None = None,
    unknown_tasks: str = "skip",
) -> Trajectory:
    """Assemble one learner's completion-time vector over the catalog order.

    With ``sentinel_end_of_course`` never-completed tasks are imputed at
    ``course_end`` so every trajectory has length M; with ``drop`` only
    completed tasks are kept, in catalog order.
    """
    if missing_policy not in MISSING_POLICIES:
        raise IngestError(f"unknown missing policy {missing_policy!r}")
    events = log.events_for(learner_id)
    if not events:
        raise IngestError(f"unknown learner {learner_id!r}")
    unknown = sorted(set(events) - set(catalog.order_index))
    if unknown:
        if unknown_tasks != "skip":
            raise IngestError(f"unknown task ids in log: {unknown}")
        logger.warning(
            "learner %s: skipping %d task ids absent from catalog: %s",
            learner_id, len(unknown), unknown[:5],
        )
    if missing_policy == "sentinel_end_of_course":
        if course_end is None or not math.isfinite(course_end):
            raise IngestError("sentinel_end_of_course policy requires course_end")
        values = np.full(catalog.size, float(course_end))
        completed = np.zeros(catalog.size, dtype=bool)
        for tid, ts in events.items():
            k = catalog.order_index.get(tid)
            if k is not None:
                values[k - 1] = ts
                completed[k - 1] = True
        return Trajectory(learner_id, values, completed)
    pairs = sorted(
        (catalog.order_index[tid], ts) for tid, ts in events.items()
        if tid in catalog.order_index
    )
    if not pairs:
        raise IngestError(f"learner {learner_id!r} has no catalog tasks on record")
    values = np.array([ts for _, ts in pairs])
    return Trajectory(learner_id, values, np.ones(len(pairs), dtype=bool))


def build_trajectories(
    log: EventLog,
    catalog: TaskCatalog,
    missing_policy: str = "sentinel_end_of_course",
    course_end: float | None = None,
) -> list[Trajectory]:
    """Trajectories for every learner in the log, in first-seen order."""
    return [
        build_trajectory(log, catalog, lid, missing_policy, course_end)
        for lid in log.learner_ids
    ]


def parse_grades(source) -> dict[str, float]:
    """Optional ``learner_id,grade`` table used only for post-hoc reports."""
    rows = _parse_rows(source)
    if not rows:
        raise IngestError("empty grades file")
    first_line, header = rows[0]
    if [h.strip() for h in header] != ["learner_id", "grade"]:
        raise IngestError("expected header learner_id,grade", line=first_line)
    grades: dict[str, float] = {}
    for lineno, row in rows[1:]:
        if len(row) != 2:
            raise IngestError(f"expected 2 fields, got {len(row)}", line=lineno)
        lid, raw = (f.strip() for f in row)
        try:
            grades[lid] = float(raw)
        except ValueError:
            raise IngestError(f"unparseable grade {raw!r}", line=lineno) from None
    return grades
