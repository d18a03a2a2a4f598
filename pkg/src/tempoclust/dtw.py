"""Dynamic-time-warping distances and the similarity kernel between learners.

The distance between two completion-time series is the minimal cumulative
cost over monotone warping paths from (1,1) to (n,m), with cell cost
``(x_i - y_j)**2`` and steps down/right/diagonal.  Distances map to
similarities in (0, 1] through ``exp(-d / sigma2)``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .ingest import Trajectory

CACHE_FORMAT_VERSION = 1


@dataclass
class KernelConfig:
    """Kernel bandwidth selection: fixed sigma2 or the median heuristic."""

    sigma2: float | None = None
    sigma_rule: str = "median_distance"

    def __post_init__(self):
        if self.sigma_rule not in ("fixed", "median_distance"):
            raise ValueError(f"unknown sigma rule {self.sigma_rule!r}")
        if self.sigma_rule == "fixed":
            if self.sigma2 is None or self.sigma2 <= 0:
                raise ValueError("fixed sigma rule requires sigma2 > 0")

    def resolve_sigma2(self, distances: np.ndarray) -> float:
        """Bandwidth actually used for a given distance matrix."""
        if self.sigma_rule == "fixed":
            return float(self.sigma2)
        off_diag = distances[~np.eye(distances.shape[0], dtype=bool)]
        med = float(np.median(off_diag)) if off_diag.size else 0.0
        if med <= 0:
            # degenerate cohort (all series identical); any bandwidth gives A=1
            return 1.0
        return med


@njit(cache=True)
def _dtw_cost(x, y):
    n = x.shape[0]
    m = y.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for j in range(m):
        d = x[0] - y[j]
        c = d * d
        prev[j] = c if j == 0 else prev[j - 1] + c
    for i in range(1, n):
        d = x[i] - y[0]
        cur[0] = prev[0] + d * d
        for j in range(1, m):
            d = x[i] - y[j]
            best = prev[j]
            if prev[j - 1] < best:
                best = prev[j - 1]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = best + d * d
        prev, cur = cur, prev
    return prev[m - 1]


@njit(cache=True)
def _pairwise_dtw(series):
    n = series.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = _dtw_cost(series[i], series[j])
            out[i, j] = d
            out[j, i] = d
    return out


def dtw_distance(x, y) -> float:
    """Minimal warping cost between two series (squared-difference cells).

    Arguments are canonicalized before the recursion so the result is
    exactly symmetric in floating point.
    """
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("dtw_distance requires non-empty series")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("dtw_distance requires finite entries")
    if (x.size, x.tobytes()) > (y.size, y.tobytes()):
        x, y = y, x
    return float(_dtw_cost(x, y))


def dtw_kernel(d: float, cfg_or_sigma2) -> float:
    """Map a DTW distance to a similarity in (0, 1]."""
    sigma2 = cfg_or_sigma2.sigma2 if isinstance(cfg_or_sigma2, KernelConfig) else cfg_or_sigma2
    if sigma2 is None or sigma2 <= 0:
        raise ValueError("kernel requires sigma2 > 0")
    if d < 0:
        raise ValueError("kernel requires a nonnegative distance")
    return float(np.exp(-d / sigma2))


@dataclass
class SimilarityMatrix:
    """Pairwise DTW distances and kernel similarities over a cohort."""

    ids: list[str]
    distances: np.ndarray
    similarities: np.ndarray
    sigma2: float
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.distances = np.asarray(self.distances, dtype=float)
        self.similarities = np.asarray(self.similarities, dtype=float)
        n = len(self.ids)
        if self.distances.shape != (n, n) or self.similarities.shape != (n, n):
            raise ValueError("matrix shape does not match id count")
        self.index = {lid: i for i, lid in enumerate(self.ids)}

    @property
    def n(self) -> int:
        return len(self.ids)

    @classmethod
    def from_distances(cls, distances, cfg: KernelConfig | None = None, ids=None):
        """Build the kernel view of an externally computed distance matrix."""
        distances = np.asarray(distances, dtype=float)
        cfg = cfg or KernelConfig()
        if ids is None:
            ids = [str(i) for i in range(distances.shape[0])]
        sigma2 = cfg.resolve_sigma2(distances)
        sims = np.exp(-distances / sigma2)
        np.fill_diagonal(sims, 1.0)
        return cls(list(ids), distances, sims, sigma2)


def similarity_matrix(
    trajectories: list[Trajectory], cfg: KernelConfig | None = None
) -> SimilarityMatrix:
    """All-pairs DTW distances and similarities for a cohort.

    Every trajectory must have the same length (guaranteed by the
    end-of-course imputation policy at ingest).
    """
    cfg = cfg or KernelConfig()
    if len(trajectories) < 2:
        raise ValueError("need at least 2 trajectories")
    lengths = {len(t) for t in trajectories}
    if len(lengths) != 1:
        raise ValueError(f"trajectory length mismatch: {sorted(lengths)}")
    series = np.ascontiguousarray([t.values for t in trajectories], dtype=float)
    distances = _pairwise_dtw(series)
    return SimilarityMatrix.from_distances(
        distances, cfg, ids=[t.learner_id for t in trajectories]
    )


def matrix_digest(trajectories: list[Trajectory], cfg: KernelConfig) -> str:
    """Content digest keying the binary matrix cache."""
    h = hashlib.sha256()
    h.update(f"v{CACHE_FORMAT_VERSION};{cfg.sigma_rule};{cfg.sigma2}".encode())
    for t in trajectories:
        h.update(t.learner_id.encode())
        h.update(t.values.tobytes())
    return h.hexdigest()


def save_matrix_cache(path, sim: SimilarityMatrix, digest: str) -> None:
    np.savez_compressed(
        path,
        meta=json.dumps(
            {"version": CACHE_FORMAT_VERSION, "digest": digest, "sigma2": sim.sigma2}
        ),
        ids=np.array(sim.ids),
        distances=sim.distances,
        similarities=sim.similarities,
    )


def load_matrix_cache(path, digest: str | None = None) -> SimilarityMatrix:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != CACHE_FORMAT_VERSION:
            raise ValueError(f"unsupported cache version {meta.get('version')}")
        if digest is not None and meta.get("digest") != digest:
            raise ValueError("cache digest mismatch; inputs changed")
        return SimilarityMatrix(
            [str(s) for s in data["ids"]],
            data["distances"],
            data["similarities"],
            float(meta["sigma2"]),
        )


def write_matrix_csv(path, ids, matrix) -> None:
    """CSV export with an id header row/column."""
    matrix = np.asarray(matrix)
    with open(path, "w") as fh:
        fh.write("id," + ",".join(ids) + "\n")
        for lid, row in zip(ids, matrix):
            fh.write(lid + "," + ",".join(f"{v:.12g}" for v in row) + "\n")


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        ids = header[1:]
        rows = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append([float(v) for v in parts[1:]])
    return ids, np.array(rows)
