"""Partition robustness: variation of information and robust-scale selection.

Two complementary diagnostics identify meaningful scales in a stability
scan: consistency of the optimizer ensemble at a fixed time (low VI(t))
and persistence of the optimum across times (low, block-structured
VI(t, t')).  Scales passing both are returned ranked by plateau length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .mstability import Partition

if TYPE_CHECKING:  # pragma: no cover
    from .mstability import ScanResult


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def variation_of_information(p1: Partition, p2: Partition) -> float:
    """Normalised VI distance in [0, 1]; 0 iff equal up to relabeling.

    ``(2 H(joint) - H(p1) - H(p2)) / log N`` with natural-log Shannon
    entropies over community frequencies.
    """
    if p1.n != p2.n:
        raise ValueError(f"partition sizes differ: {p1.n} vs {p2.n}")
    n = p1.n
    if n < 2:
        raise ValueError("VI needs at least 2 nodes")
    c2 = p2.n_communities
    joint = np.bincount(p1.labels * c2 + p2.labels, minlength=p1.n_communities * c2)
    h1 = _entropy(np.bincount(p1.labels))
    h2 = _entropy(np.bincount(p2.labels))
    hj = _entropy(joint)
    vi = (2.0 * hj - h1 - h2) / math.log(n)
    return max(0.0, vi)


def _dedup(partitions) -> tuple[list[Partition], np.ndarray]:
    reps: list[Partition] = []
    index: dict[bytes, int] = {}
    counts: list[int] = []
    for p in partitions:
        k = p.key()
        if k in index:
            counts[index[k]] += 1
        else:
            index[k] = len(reps)
            reps.append(p)
            counts.append(1)
    return reps, np.asarray(counts)


def ensemble_vi(partitions: list[Partition]) -> float:
    """Mean pairwise VI over all ordered pairs of an optimizer ensemble."""
    ell = len(partitions)
    if ell < 2:
        raise ValueError("ensemble VI needs at least 2 partitions")
    reps, counts = _dedup(partitions)
    if len(reps) == 1:
        return 0.0
    total = 0.0
    for g in range(len(reps)):
        for h in range(g + 1, len(reps)):
            total += 2.0 * counts[g] * counts[h] * variation_of_information(reps[g], reps[h])
    return total / (ell * (ell - 1))


def cross_time_vi(best: list[Partition]) -> np.ndarray:
    """VI between the optimal partitions of every pair of grid times."""
    nt = len(best)
    if nt < 2:
        raise ValueError("cross-time VI needs at least 2 times")
    keys: dict[bytes, int] = {}
    class_of = np.empty(nt, dtype=int)
    reps: list[Partition] = []
    for i, p in enumerate(best):
        k = p.key()
        if k not in keys:
            keys[k] = len(reps)
            reps.append(p)
        class_of[i] = keys[k]
    nc = len(reps)
    class_vi = np.zeros((nc, nc))
    for g in range(nc):
        for h in range(g + 1, nc):
            class_vi[g, h] = class_vi[h, g] = variation_of_information(reps[g], reps[h])
    return class_vi[np.ix_(class_of, class_of)]


@dataclass
class RobustScale:
    """One selected scale: a persistent, consistently found partition."""

    rank: int
    t: float
    time_index: int
    partition: Partition
    n_communities: int
    t_start: float
    t_end: float
    plateau_decades: float
    vi_at_t: float
    block_mean_vi: float

    @property
    def trivial(self) -> bool:
        return self.n_communities in (1, self.partition.n)

    def to_json_obj(self) -> dict:
        return {
            "rank": self.rank,
            "t": self.t,
            "time_index": self.time_index,
            "n_communities": self.n_communities,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "plateau_decades": self.plateau_decades,
            "vi_at_t": self.vi_at_t,
            "block_mean_vi": self.block_mean_vi,
            "trivial": self.trivial,
            "partition": [int(x) for x in self.partition.labels],
        }


def select_robust(
    scan: "ScanResult",
    min_plateau_decades: float = 0.5,
    vi_dip_quantile: float = 0.25,
    vi_block_max: float = 0.05,
) -> list[RobustScale]:
    """Robust scales of a scan, ranked by plateau length.

    A plateau is a maximal run of times with a constant community count;
    it qualifies when it spans at least ``min_plateau_decades`` decades,
    its VI(t, t') block mean is at most ``vi_block_max``, and its VI(t)
    dips to or below the ``vi_dip_quantile`` quantile of the whole VI(t)
    curve.  The representative time is the plateau's VI(t) minimizer.
    An empty list signals a lack of natural clusters.
    """
    if scan.n_times == 0:
        raise ValueError("empty scan")
    times = scan.times
    counts = scan.n_communities
    vi_t = scan.vi_t
    dip_threshold = float(np.quantile(vi_t, vi_dip_quantile)) + 1e-12
    scales: list[RobustScale] = []
    start = 0
    for i in range(1, scan.n_times + 1):
        if i < scan.n_times and counts[i] == counts[start]:
            continue
        end = i - 1  # inclusive
        decades = math.log10(times[end] / times[start]) if end > start else 0.0
        if decades >= min_plateau_decades:
            block = scan.cross_vi[start : end + 1, start : end + 1]
            off_diag = block[~np.eye(block.shape[0], dtype=bool)]
            block_mean = float(off_diag.mean()) if off_diag.size else 0.0
            plateau_vi = vi_t[start : end + 1]
            if block_mean <= vi_block_max and plateau_vi.min() <= dip_threshold:
                local = int(np.argmin(plateau_vi))
                idx = start + local
                scales.append(
                    RobustScale(
                        rank=0,
                        t=float(times[idx]),
                        time_index=idx,
                        partition=scan.best[idx],
                        n_communities=int(counts[start]),
                        t_start=float(times[start]),
                        t_end=float(times[end]),
                        plateau_decades=float(decades),
                        vi_at_t=float(vi_t[idx]),
                        block_mean_vi=block_mean,
                    )
                )
        start = i
    scales.sort(key=lambda s: (-s.plateau_decades, s.t))
    for r, s in enumerate(scales, start=1):
        s.rank = r
    return scales


def hierarchy_consistency(fine: Partition, coarse: Partition) -> float:
    """Fraction of nodes whose coarse label matches the majority coarse
    label of their fine community (1.0 for an exact hierarchy)."""
    if fine.n != coarse.n:
        raise ValueError("partition sizes differ")
    consistent = 0
    for c in range(fine.n_communities):
        members = fine.members(c)
        coarse_labels = coarse.labels[members]
        consistent += int(np.bincount(coarse_labels).max())
    return consistent / fine.n


def write_vi_curve_csv(path, times, vi_t) -> None:
    with open(path, "w") as fh:
        fh.write("t,vi\n")
        for t, v in zip(times, vi_t):
            fh.write(f"{t:.12g},{v:.12g}\n")


def write_vi_matrix_csv(path, times, cross_vi) -> None:
    with open(path, "w") as fh:
        fh.write("t," + ",".join(f"{t:.12g}" for t in times) + "\n")
        for t, row in zip(times, cross_vi):
            fh.write(f"{t:.12g}," + ",".join(f"{v:.12g}" for v in row) + "\n")
