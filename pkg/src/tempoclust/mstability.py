"""Markov Stability evaluation and optimization across Markov times.

A diffusion on the similarity graph scans partitions at all resolutions:
small Markov times favour fine partitions, large times coarse ones.  The
quality of a partition H at time t is the trace of the block
auto-covariance ``R(t; H) = H^T (Pi exp(-tL) - pi^T pi) H``, maximized by
repeated seeded runs of a greedy Louvain optimizer on the stability
matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numba import njit

from .rmst import SimGraph

LAPLACIAN_MODES = ("combinatorial", "normalized")


@dataclass(frozen=True)
class Partition:
    """Node-to-community assignment with contiguous labels 0..c-1.

    Labels are canonicalized by first appearance, so two assignments that
    differ only by a label permutation compare equal.
    """

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty 1-d array")
        remap: dict[int, int] = {}
        canonical = np.empty_like(labels)
        for i, lab in enumerate(labels):
            canonical[i] = remap.setdefault(int(lab), len(remap))
        canonical.setflags(write=False)
        object.__setattr__(self, "labels", canonical)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def n_communities(self) -> int:
        return int(self.labels.max()) + 1

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_communities)

    def membership(self) -> np.ndarray:
        """Indicator matrix H, shape (n, c)."""
        h = np.zeros((self.n, self.n_communities))
        h[np.arange(self.n), self.labels] = 1.0
        return h

    def members(self, c: int) -> np.ndarray:
        return np.nonzero(self.labels == c)[0]

    def key(self) -> bytes:
        return self.labels.tobytes()

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.key())

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n))

    @classmethod
    def all_in_one(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=np.int64))


@dataclass
class LaplacianSystem:
    """Diffusion operator on a graph with a cached spectral factorization.

    In both modes ``Pi exp(-tL) = W diag(exp(-t lam)) W^T`` with
    ``W = diag(sqrt(pi)) V`` and (lam, V) the eigensystem of the symmetric
    form of the generator, so stability matrices are symmetric by
    construction.
    """

    mode: str
    laplacian: np.ndarray  # the actual generator (L or L_rw)
    pi: np.ndarray
    eigenvalues: np.ndarray
    W: np.ndarray
    pi_L: np.ndarray  # Pi @ L, symmetric; used by the linearised propagator

    @property
    def n(self) -> int:
        return self.pi.size

    def propagator(self, t: float) -> np.ndarray:
        """exp(-tL); rows sum to 1 for every t >= 0."""
        pe = self.pi_propagator(t)
        return pe / self.pi[:, None]

    def pi_propagator(self, t: float) -> np.ndarray:
        """Pi exp(-tL), the flow term of the auto-covariance."""
        decay = np.exp(-t * self.eigenvalues)
        return (self.W * decay) @ self.W.T

    def stability_matrix(self, t: float, linearised: bool = False) -> np.ndarray:
        """B(t) = Pi exp(-tL) - pi^T pi, or its first-order expansion."""
        if linearised:
            base = np.diag(self.pi) - t * self.pi_L
        else:
            base = self.pi_propagator(t)
        b = base - np.outer(self.pi, self.pi)
        return 0.5 * (b + b.T)

    def numerical_floor(self) -> float:
        """Magnitude below which stability-matrix structure is rounding noise.

        Once the diffusion has equilibrated, B(t) decays towards zero and
        only the reconstruction error of the factorization remains; gains
        under this floor must not drive the optimizer.
        """
        return 32.0 * np.finfo(float).eps * self.n * float(self.pi.max())


def build_system(graph: SimGraph, mode: str = "combinatorial") -> LaplacianSystem:
    """Laplacian, stationary distribution and spectral factorization."""
    if mode not in LAPLACIAN_MODES:
        raise ValueError(f"unknown Laplacian mode {mode!r}")
    adj = graph.adjacency
    n = adj.shape[0]
    deg = adj.sum(axis=1)
    if np.any(deg <= 0):
        raise ValueError("graph has a zero-degree node")
    if mode == "combinatorial":
        lap = np.diag(deg) - adj
        pi = np.full(n, 1.0 / n)
        lam, vec = np.linalg.eigh(lap)
        w = vec / np.sqrt(n)
        pi_l = lap / n
        generator = lap
    else:
        inv_sqrt = 1.0 / np.sqrt(deg)
        lap_sym = np.eye(n) - inv_sqrt[:, None] * adj * inv_sqrt[None, :]
        lam, vec = np.linalg.eigh(lap_sym)
        pi = deg / deg.sum()
        w = np.sqrt(pi)[:, None] * vec
        generator = np.eye(n) - adj / deg[:, None]
        pi_l = (np.diag(deg) - adj) / deg.sum()
    lam = np.where(np.abs(lam) < 1e-12, 0.0, lam)
    return LaplacianSystem(mode, generator, pi, lam, w, pi_l)


@dataclass
class StabilityEvaluation:
    """Block auto-covariance of one partition at one Markov time."""

    t: float
    R: np.ndarray
    trace: float


def block_autocovariance(
    sys: LaplacianSystem, p: Partition, t: float
) -> StabilityEvaluation:
    """R(t; H) = H^T (Pi exp(-tL) - pi^T pi) H and its trace."""
    if p.n != sys.n:
        raise ValueError(f"partition has {p.n} nodes, system has {sys.n}")
    if t < 0:
        raise ValueError("Markov time must be >= 0")
    h = p.membership()
    r = h.T @ sys.stability_matrix(t) @ h
    return StabilityEvaluation(t, r, float(np.trace(r)))


def trace_curve(
    sys: LaplacianSystem, p: Partition, taus, linearised: bool = False
) -> np.ndarray:
    """Tr R(tau; H) over a grid of times, via the spectral factorization."""
    taus = np.asarray(taus, dtype=float)
    h = p.membership()
    pic = h.T @ sys.pi
    const = float(pic @ pic)
    if linearised:
        a0 = float(np.sum(sys.pi[:, None] * h * h))  # Tr H^T Pi H
        a1 = float(np.einsum("ic,ij,jc->", h, sys.pi_L, h))
        return a0 - taus * a1 - const
    g = sys.W.T @ h
    rowsq = np.einsum("kc,kc->k", g, g)
    return np.exp(-np.outer(taus, sys.eigenvalues)) @ rowsq - const


def stability(sys: LaplacianSystem, p: Partition, t: float, tau_grid) -> float:
    """Running minimum of Tr R(tau; H) over the grid points tau <= t."""
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid.size == 0:
        raise ValueError("empty tau grid")
    if np.any(tau_grid > t * (1 + 1e-12)):
        raise ValueError("tau grid extends beyond t")
    return float(trace_curve(sys, p, tau_grid).min())


@njit(cache=True)
def _louvain_labels(B, seed, tol):
    n = B.shape[0]
    np.random.seed(seed)
    node_to_comm = np.arange(n)
    M = B.copy()
    cur_n = n
    while True:
        labels = np.arange(cur_n)
        counts = np.ones(cur_n, dtype=np.int64)
        moved_any = False
        improved = True
        while improved:
            improved = False
            order = np.random.permutation(cur_n)
            for oi in range(cur_n):
                i = order[oi]
                ci = labels[i]
                s = np.zeros(cur_n)
                for j in range(cur_n):
                    if j != i:
                        s[labels[j]] += M[i, j]
                base = s[ci]
                best_c = ci
                best_gain = tol
                empty_slot = -1
                for c in range(cur_n):
                    if c == ci:
                        continue
                    if counts[c] == 0:
                        if empty_slot < 0:
                            empty_slot = c
                        continue
                    gain = s[c] - base
                    if gain > best_gain:
                        best_gain = gain
                        best_c = c
                if empty_slot >= 0 and counts[ci] > 1:
                    gain = 0.0 - base
                    if gain > best_gain:
                        best_gain = gain
                        best_c = empty_slot
                if best_c != ci:
                    labels[i] = best_c
                    counts[ci] -= 1
                    counts[best_c] += 1
                    improved = True
                    moved_any = True
        # contiguous relabel by first appearance
        remap = np.full(cur_n, -1, dtype=np.int64)
        c_total = 0
        for i in range(cur_n):
            if remap[labels[i]] < 0:
                remap[labels[i]] = c_total
                c_total += 1
            labels[i] = remap[labels[i]]
        for v in range(n):
            node_to_comm[v] = labels[node_to_comm[v]]
        if c_total == cur_n or not moved_any:
            return node_to_comm
        m2 = np.zeros((c_total, c_total))
        for u in range(cur_n):
            lu = labels[u]
            for v in range(cur_n):
                m2[lu, labels[v]] += M[u, v]
        M = m2
        cur_n = c_total


def partition_objective(B: np.ndarray, p: Partition) -> float:
    """Tr H^T B H: total intra-community weight of a quality matrix."""
    q = 0.0
    for c in range(p.n_communities):
        idx = p.members(c)
        q += float(B[np.ix_(idx, idx)].sum())
    return q


def louvain_optimize(B: np.ndarray, seed: int = 0, min_gain: float = 0.0) -> Partition:
    """Greedy two-phase maximization of Tr H^T B H.

    The matrix is symmetrized before optimization; node visit order is
    drawn from the seed, so equal seeds give identical partitions.
    ``min_gain`` sets an absolute floor under which moves are rejected
    (used to ignore structure below numerical precision).
    """
    B = np.asarray(B, dtype=float)
    if not np.all(np.isfinite(B)):
        raise ValueError("stability matrix has non-finite entries")
    sym = 0.5 * (B + B.T)
    tol = max(1e-12 * float(np.abs(sym).max()), min_gain, 1e-300)
    labels = _louvain_labels(sym, np.uint32(seed & 0xFFFFFFFF), tol)
    return Partition(labels)


def _derive_seed(seed: int, t_index: int, run_index: int) -> int:
    return int(np.random.SeedSequence([seed, t_index, run_index]).generate_state(1)[0])


@dataclass
class ScanConfig:
    """Markov-time grid, restart count and seeding for a stability scan."""

    time_grid: np.ndarray | None = None
    ell: int = 100
    seed: int = 0
    use_linearised: bool = False

    def __post_init__(self):
        if self.time_grid is None:
            self.time_grid = default_time_grid()
        self.time_grid = np.asarray(self.time_grid, dtype=float)
        if self.time_grid.ndim != 1 or self.time_grid.size == 0:
            raise ValueError("time grid must be a non-empty 1-d array")
        if np.any(self.time_grid <= 0) or np.any(np.diff(self.time_grid) <= 0):
            raise ValueError("time grid must be strictly increasing and positive")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")


def default_time_grid(t_min: float = 1e-2, t_max: float = 1e2, n: int = 100):
    return np.logspace(np.log10(t_min), np.log10(t_max), n)


@dataclass
class ScanResult:
    """Per-time optimized partitions and robustness diagnostics."""

    times: np.ndarray
    best: list[Partition]
    ensembles: list[list[Partition]]
    r_star: np.ndarray
    n_communities: np.ndarray
    vi_t: np.ndarray
    cross_vi: np.ndarray
    mode: str = "combinatorial"
    linearised: bool = False
    seed: int = 0

    @property
    def n_times(self) -> int:
        return self.times.size

    def to_json_obj(self) -> dict:
        return {
            "mode": self.mode,
            "linearised": self.linearised,
            "seed": self.seed,
            "times": [
                {
                    "t": float(t),
                    "n_communities": int(c),
                    "r_star": float(r),
                    "vi_t": float(v),
                    "partition": [int(x) for x in p.labels],
                }
                for t, c, r, v, p in zip(
                    self.times, self.n_communities, self.r_star, self.vi_t, self.best
                )
            ],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_obj(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def scan(sys: LaplacianSystem, cfg: ScanConfig | None = None) -> ScanResult:
    """Optimize the stability objective at every grid time.

    At each time the Louvain optimizer restarts ``ell`` times from
    distinct seeds; the partition with the highest objective is kept and
    scored by the running-minimum stability over the grid so far.
    """
    from .robustness import cross_time_vi, ensemble_vi

    cfg = cfg or ScanConfig()
    times = cfg.time_grid
    nt = times.size
    best: list[Partition] = []
    ensembles: list[list[Partition]] = []
    r_star = np.empty(nt)
    n_comm = np.empty(nt, dtype=int)
    vi_t = np.empty(nt)
    floor = sys.numerical_floor()
    for ti, t in enumerate(times):
        try:
            b = sys.stability_matrix(float(t), cfg.use_linearised)
        except Exception as exc:  # pragma: no cover - defensive
            raise RuntimeError(f"propagator failed at t={t!r}: {exc}") from exc
        tol = max(1e-12 * float(np.abs(b).max()), floor, 1e-300)
        runs: list[Partition] = []
        objectives = np.empty(cfg.ell)
        for run in range(cfg.ell):
            labels = _louvain_labels(
                b, np.uint32(_derive_seed(cfg.seed, ti, run)), tol
            )
            p = Partition(labels)
            runs.append(p)
            objectives[run] = partition_objective(b, p)
        best_idx = int(np.argmax(objectives))
        chosen = runs[best_idx]
        best.append(chosen)
        ensembles.append(runs)
        r_star[ti] = float(
            trace_curve(sys, chosen, times[: ti + 1], cfg.use_linearised).min()
        )
        n_comm[ti] = chosen.n_communities
        vi_t[ti] = ensemble_vi(runs) if cfg.ell > 1 else 0.0
    cross = cross_time_vi(best)
    return ScanResult(
        times=times.copy(),
        best=best,
        ensembles=ensembles,
        r_star=r_star,
        n_communities=n_comm,
        vi_t=vi_t,
        cross_vi=cross,
        mode=sys.mode,
        linearised=cfg.use_linearised,
        seed=cfg.seed,
    )


def dense_expm_autocovariance(
    graph_or_sys, p: Partition, t: float, mode: str = "combinatorial"
) -> np.ndarray:
    """Dense matrix-exponential evaluation of R(t; H) (reference path).

    Computes exp(-tL) with scipy's expm on the actual generator rather
    than through the spectral factorization; intended for cross-checks.
    """
    sys = graph_or_sys if isinstance(graph_or_sys, LaplacianSystem) else build_system(
        graph_or_sys, mode
    )
    h = p.membership()
    expm = scipy.linalg.expm(-t * sys.laplacian)
    b = np.diag(sys.pi) @ expm - np.outer(sys.pi, sys.pi)
    return h.T @ b @ h
