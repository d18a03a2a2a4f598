"""Per-learner temporal statistics: isotonic fit, massed sessions, completion.

Completion times plotted against the course task order are roughly
increasing for steady learners; flat stretches mark many tasks finished at
effectively one time (massed, or binge, sessions).  The monotone shape is
extracted with an exact pool-adjacent-violators isotonic regression and
sessions are read off as plateau runs of the fitted curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import EventLog, TaskCatalog, Trajectory


@dataclass
class IsotonicFit:
    """Euclidean projection of a vector onto the non-decreasing cone."""

    x: np.ndarray
    sse: float
    plateau_runs: list[tuple[int, int, float]]  # (start, length, level)


def isotonic_fit(y) -> IsotonicFit:
    """Pool-adjacent-violators least-squares monotone fit (exact)."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("isotonic_fit requires a non-empty vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("isotonic_fit requires finite entries")
    # blocks of (total, count, mean) merged while adjacent means violate order
    totals: list[float] = []
    counts: list[int] = []
    means: list[float] = []
    for v in y:
        totals.append(float(v))
        counts.append(1)
        means.append(float(v))
        while len(means) > 1 and means[-2] > means[-1]:
            t = totals.pop() + totals.pop()
            c = counts.pop() + counts.pop()
            means.pop()
            means.pop()
            totals.append(t)
            counts.append(c)
            means.append(t / c)
    x = np.repeat(means, counts)
    runs: list[tuple[int, int, float]] = []
    start = 0
    for c, m in zip(counts, means):
        if runs and runs[-1][2] == m:
            s, length, level = runs[-1]
            runs[-1] = (s, length + c, level)
        else:
            runs.append((start, c, m))
        start += c
    return IsotonicFit(x, float(np.sum((y - x) ** 2)), runs)


@dataclass
class SessionStats:
    """Plateau-run session lengths; sizes partition the task axis."""

    lengths: list[int]
    mean_massed_length: float


def massed_sessions(traj, level_tol: float = 0.5) -> SessionStats:
    """Massed-session lengths from the isotonic fit of a trajectory.

    A session is a maximal run of consecutive tasks whose fitted times lie
    within ``level_tol`` days of the run's first fitted time.  The mean is
    taken over runs of length >= 2 (a lone task is not a binge); if no
    such run exists the mean is 1.
    """
    values = traj.values if isinstance(traj, Trajectory) else np.asarray(traj, float)
    if values.size == 0:
        raise ValueError("empty trajectory")
    if level_tol < 0:
        raise ValueError("level_tol must be >= 0")
    fit = isotonic_fit(values)
    lengths: list[int] = []
    run_start_value = fit.x[0]
    run_len = 0
    for v in fit.x:
        if v - run_start_value <= level_tol:
            run_len += 1
        else:
            lengths.append(run_len)
            run_start_value = v
            run_len = 1
    lengths.append(run_len)
    massed = [n for n in lengths if n >= 2]
    mean = float(np.mean(massed)) if massed else 1.0
    return SessionStats(lengths, mean)


def completion_percentage(log: EventLog, catalog: TaskCatalog, learner_id: str) -> float:
    """100 * (distinct catalog tasks completed) / (catalog size)."""
    events = log.events_for(learner_id)
    if not events:
        raise ValueError(f"unknown learner {learner_id!r}")
    done = sum(1 for tid in events if tid in catalog.order_index)
    return 100.0 * done / catalog.size


@dataclass
class LearnerStats:
    learner_id: str
    mean_massed_session_length: float
    completion_pct: float
    cluster_label: int = -1


def cohort_stats(
    log: EventLog,
    catalog: TaskCatalog,
    level_tol: float = 0.5,
    labels: dict[str, int] | None = None,
) -> list[LearnerStats]:
    """Session and completion statistics for every learner in the log.

    Sessions are measured on completed tasks only; imputing never-completed
    tasks at course end would manufacture a spurious final plateau.
    """
    out: list[LearnerStats] = []
    for lid in log.learner_ids:
        events = log.events_for(lid)
        # completion times ordered by catalog position, not by time
        by_order = [
            ts
            for _, ts in sorted(
                (catalog.order_index[tid], ts)
                for tid, ts in events.items()
                if tid in catalog.order_index
            )
        ]
        if by_order:
            mean_len = massed_sessions(np.asarray(by_order), level_tol).mean_massed_length
        else:
            mean_len = 1.0
        out.append(
            LearnerStats(
                learner_id=lid,
                mean_massed_session_length=mean_len,
                completion_pct=completion_percentage(log, catalog, lid),
                cluster_label=(labels or {}).get(lid, -1),
            )
        )
    return out


def write_stats_csv(path, stats: list[LearnerStats]) -> None:
    with open(path, "w") as fh:
        fh.write("learner_id,mean_massed_session_length,completion_pct,cluster_label\n")
        for s in stats:
            fh.write(
                f"{s.learner_id},{s.mean_massed_session_length:.12g},"
                f"{s.completion_pct:.12g},{s.cluster_label}\n"
            )
