"""Gaussian-process characterization of cluster trajectories.

A squared-exponential GP with observation noise summarizes the pooled
(task index, completion time) points of a cluster as a mean curve with
uncertainty.  Marginal likelihoods of alternative groupings are compared
through a Bayes factor: the summed per-cluster log evidence minus the
whole-cohort log evidence, all evaluated under the cohort-fitted process
(equal prior odds).

Cohort designs repeat the same task grid for every learner.  Replicated
observations at one input are equivalent to observing their mean with
noise variance sigma^2 / count, so the likelihood factorizes into exact
within-location terms plus a Cholesky solve on the unique-input system;
with all-distinct inputs this reduces to the classic algorithm.  The
implementation agrees with the dense textbook formula to rounding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .ingest import Trajectory
from .mstability import Partition

LOG_2PI = math.log(2.0 * math.pi)
JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)
GP_AXES = ("task_index", "time")


class GPFitError(RuntimeError):
    pass


def _se_kernel(x1: np.ndarray, x2: np.ndarray, amp2: float, ls: float) -> np.ndarray:
    d = (x1[:, None] - x2[None, :]) / ls
    return amp2 * np.exp(-0.5 * d * d)


@dataclass
class _Design:
    """Sufficient statistics of a (possibly repeated-input) training set."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray       # unique inputs
    counts: np.ndarray  # observations per unique input
    ybar: np.ndarray    # target mean per unique input
    ss_within: float    # sum of squared deviations from per-location means

    @classmethod
    def build(cls, inputs, targets) -> "_Design":
        x = np.asarray(inputs, dtype=float).ravel()
        y = np.asarray(targets, dtype=float).ravel()
        if x.size != y.size or x.size < 2:
            raise GPFitError("need at least 2 (input, target) pairs")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise GPFitError("non-finite inputs or targets")
        u, inv = np.unique(x, return_inverse=True)
        counts = np.bincount(inv).astype(float)
        ybar = np.bincount(inv, weights=y) / counts
        ss = float(y @ y - counts @ (ybar * ybar))
        return cls(x, y, u, counts, ybar, max(ss, 0.0))

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def q(self) -> int:
        return self.u.size


def _chol_with_jitter(mat: np.ndarray, scale: float) -> np.ndarray:
    for jit in JITTER_LADDER:
        try:
            return np.linalg.cholesky(mat + jit * scale * np.eye(mat.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise GPFitError("kernel matrix not positive definite after max jitter")


def _lml_core(theta: np.ndarray, design: _Design, grad: bool = True):
    """Log marginal likelihood on the aggregated design.

    Replicates at one input are summarized by their mean observed with
    noise sigma^2/count; within-location scatter enters in closed form.
    With all-unique inputs this is the textbook Cholesky algorithm.
    """
    amp2, ls, noise2 = np.exp(theta)
    u, c, ybar = design.u, design.counts, design.ybar
    q, n = design.q, design.n
    k = _se_kernel(u, u, amp2, ls)
    keff = k + np.diag(noise2 / c)
    lfac = _chol_with_jitter(keff, amp2 + noise2)
    alpha = scipy.linalg.cho_solve((lfac, True), ybar)
    lml = (
        -0.5 * float(ybar @ alpha)
        - float(np.log(np.diag(lfac)).sum())
        - 0.5 * q * LOG_2PI
        - 0.5 * design.ss_within / noise2
        - 0.5 * (n - q) * (LOG_2PI + math.log(noise2))
        - 0.5 * float(np.log(c).sum())
    )
    if not grad:
        return lml, None
    kinv = scipy.linalg.cho_solve((lfac, True), np.eye(q))
    a = np.outer(alpha, alpha) - kinv
    d = (u[:, None] - u[None, :]) / ls
    dk_ls = k * d * d
    grads = np.array(
        [
            0.5 * float(np.sum(a * k)),
            0.5 * float(np.sum(a * dk_ls)),
            0.5 * noise2 * float(np.diag(a) @ (1.0 / c))
            + 0.5 * design.ss_within / noise2
            - 0.5 * (n - q),
        ]
    )
    return lml, grads


def log_marginal_likelihood(theta, inputs, targets, grad: bool = False):
    """LML (and optionally its gradient w.r.t. log hyperparameters).

    ``theta`` is (log amplitude^2, log length-scale, log noise variance).
    """
    theta = np.asarray(theta, dtype=float)
    design = _Design.build(inputs, targets)
    lml, grads = _lml_core(theta, design, grad=grad)
    return (lml, grads) if grad else lml


@dataclass
class GPModel:
    """Fitted GP: hyperparameters, factorization and prediction state."""

    theta: np.ndarray
    design: _Design
    lml: float
    factor: np.ndarray = field(repr=False)  # lower Cholesky of K(u,u) + diag(noise2/c)
    alpha: np.ndarray = field(repr=False, default=None)

    @property
    def amplitude2(self) -> float:
        return float(np.exp(self.theta[0]))

    @property
    def lengthscale(self) -> float:
        return float(np.exp(self.theta[1]))

    @property
    def noise2(self) -> float:
        return float(np.exp(self.theta[2]))

    def predict(self, query) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and latent variance on query inputs."""
        xq = np.asarray(query, dtype=float).ravel()
        kq = _se_kernel(self.design.u, xq, self.amplitude2, self.lengthscale)
        mean = kq.T @ self.alpha
        v = scipy.linalg.solve_triangular(self.factor, kq, lower=True)
        var = self.amplitude2 - np.einsum("qn,qn->n", v, v)
        return mean, np.maximum(var, 0.0)


def _finalize_model(theta: np.ndarray, design: _Design, lml: float) -> GPModel:
    amp2, ls, noise2 = np.exp(theta)
    keff = _se_kernel(design.u, design.u, amp2, ls) + np.diag(noise2 / design.counts)
    lfac = _chol_with_jitter(keff, amp2 + noise2)
    alpha = scipy.linalg.cho_solve((lfac, True), design.ybar)
    return GPModel(theta, design, lml, lfac, alpha)


def gp_fit(
    inputs,
    targets,
    hyper_init=None,
    n_restarts: int = 2,
    seed: int = 0,
    noise_floor: float = 1e-6,
    optimize: bool = True,
) -> GPModel:
    """Fit hyperparameters by multi-start gradient ascent on the LML.

    Initial scales come from the data: length-scale = input span / 10,
    amplitude^2 = target variance; ``noise_floor`` is relative to the
    target variance.
    """
    if noise_floor <= 0:
        raise GPFitError("noise variance floor must be > 0")
    design = _Design.build(inputs, targets)
    span = max(float(np.ptp(design.u)), 1e-6)
    var = max(float(np.var(design.y)), 1e-8)
    floor2 = noise_floor * var
    if hyper_init is None:
        theta0 = np.log([var, span / 10.0, max(var / 10.0, floor2)])
    else:
        theta0 = np.asarray(hyper_init, dtype=float).copy()
        theta0[2] = max(theta0[2], math.log(floor2))
    bounds = [
        (math.log(var) - 14.0, math.log(var) + 14.0),
        (math.log(span) - 7.0, math.log(span) + 5.0),
        (math.log(floor2), math.log(var * 1e3)),
    ]
    theta0 = np.array([min(max(v, lo), hi) for v, (lo, hi) in zip(theta0, bounds)])

    if not optimize:
        lml, _ = _lml_core(theta0, design, grad=False)
        return _finalize_model(theta0, design, lml)

    def objective(theta):
        try:
            lml, grads = _lml_core(theta, design, grad=True)
        except GPFitError:
            return 1e12, np.zeros(3)
        if not np.isfinite(lml):
            return 1e12, np.zeros(3)
        return -lml, -grads

    rng = np.random.default_rng(seed)
    starts = [theta0] + [
        np.array(
            [min(max(v, lo), hi) for v, (lo, hi) in zip(theta0 + rng.normal(0.0, 0.7, 3), bounds)]
        )
        for _ in range(n_restarts)
    ]
    best_theta, best_lml = None, -np.inf
    for start in starts:
        res = scipy.optimize.minimize(
            objective, start, jac=True, method="L-BFGS-B", bounds=bounds
        )
        if np.isfinite(res.fun) and -res.fun > best_lml:
            best_lml = -float(res.fun)
            best_theta = np.asarray(res.x)
    if best_theta is None:
        raise GPFitError("hyperparameter optimization failed from every start")
    return _finalize_model(best_theta, design, best_lml)


def _pooled_points(
    cluster: list[Trajectory], axis: str = "task_index", task_stride: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Completed-task points of a cluster, optionally on a task subgrid."""
    if axis not in GP_AXES:
        raise ValueError(f"unknown GP axis {axis!r}")
    if not cluster:
        raise GPFitError("empty cluster")
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    for traj in cluster:
        idx = np.arange(1, len(traj) + 1, dtype=float)
        keep = traj.completed.copy()
        if task_stride > 1:
            on_grid = np.zeros(len(traj), dtype=bool)
            on_grid[::task_stride] = True
            keep &= on_grid
        if axis == "task_index":
            xs.append(idx[keep])
            ys.append(traj.values[keep])
        else:
            xs.append(traj.values[keep])
            ys.append(idx[keep])
    return np.concatenate(xs), np.concatenate(ys)


@dataclass
class CurveResult:
    """Posterior mean/variance of a cluster's pooled trajectory."""

    query: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    model: GPModel

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("task_index,mean,variance\n")
            for x, m, v in zip(self.query, self.mean, self.variance):
                fh.write(f"{x:.12g},{m:.12g},{v:.12g}\n")


def cluster_mean_trajectory(
    cluster: list[Trajectory],
    query=None,
    axis: str = "task_index",
    task_stride: int = 1,
    **fit_kwargs,
) -> CurveResult:
    """GP posterior over the pooled completion points of a cluster."""
    x, y = _pooled_points(cluster, axis, task_stride)
    model = gp_fit(x, y, **fit_kwargs)
    if query is None:
        query = np.arange(1, len(cluster[0]) + 1, dtype=float) if axis == "task_index" else np.sort(
            np.unique(x)
        )
    mean, var = model.predict(query)
    return CurveResult(np.asarray(query, dtype=float), mean, var, model)


@dataclass
class BayesComparison:
    """Evidence for per-cluster processes against one shared process."""

    log_likelihood_whole: float
    log_likelihoods_per_cluster: list[float]
    log_K: float

    def to_json_obj(self) -> dict:
        return {
            "log_likelihood_whole": self.log_likelihood_whole,
            "log_likelihoods_per_cluster": self.log_likelihoods_per_cluster,
            "log_K": self.log_K,
        }


def bayes_factor(
    partition: Partition,
    trajectories: list[Trajectory],
    axis: str = "task_index",
    task_stride: int = 1,
    refit_clusters: bool = False,
    whole_model: GPModel | None = None,
    **fit_kwargs,
) -> BayesComparison:
    """log K = sum of per-cluster log evidences minus the whole-set one.

    Cluster evidences are evaluated under the whole-set fitted process
    (equal prior odds); ``refit_clusters`` re-optimizes hyperparameters
    per cluster instead.
    """
    if partition.n != len(trajectories):
        raise ValueError("partition size does not match trajectory count")
    if whole_model is None:
        x, y = _pooled_points(trajectories, axis, task_stride)
        whole_model = gp_fit(x, y, **fit_kwargs)
    ll_whole = whole_model.lml
    per_cluster: list[float] = []
    for c in range(partition.n_communities):
        members = [trajectories[i] for i in partition.members(c)]
        xc, yc = _pooled_points(members, axis, task_stride)
        try:
            if refit_clusters:
                per_cluster.append(gp_fit(xc, yc, **fit_kwargs).lml)
            else:
                per_cluster.append(log_marginal_likelihood(whole_model.theta, xc, yc))
        except GPFitError as exc:
            raise GPFitError(f"cluster {c}: {exc}") from exc
    log_k = float(sum(per_cluster) - ll_whole)
    return BayesComparison(float(ll_whole), per_cluster, log_k)


def neighbor_bayes_factors(
    partition: Partition,
    trajectories: list[Trajectory],
    axis: str = "task_index",
    task_stride: int = 1,
    **fit_kwargs,
) -> list[dict]:
    """Bayes factors between clusters adjacent in mean completion time."""
    order = sorted(
        range(partition.n_communities),
        key=lambda c: float(
            np.mean([trajectories[i].completed_values().mean() for i in partition.members(c)])
        ),
    )
    out: list[dict] = []
    for a, b in zip(order, order[1:]):
        members = list(partition.members(a)) + list(partition.members(b))
        pair_labels = [0] * len(partition.members(a)) + [1] * len(partition.members(b))
        comparison = bayes_factor(
            Partition(np.asarray(pair_labels)),
            [trajectories[i] for i in members],
            axis=axis,
            task_stride=task_stride,
            **fit_kwargs,
        )
        out.append(
            {"cluster_a": int(a), "cluster_b": int(b), "log_K": comparison.log_K}
        )
    return out


def write_bayes_json(path, comparison: BayesComparison, neighbors: list[dict]) -> None:
    obj = comparison.to_json_obj()
    obj["neighbor_pairs"] = neighbors
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")
