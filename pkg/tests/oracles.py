"""Independent brute-force oracles used to freeze expected values.

Everything here is deliberately naive: exhaustive path/partition/tree
enumeration and dense closed-form linear algebra that the production code
never uses, so agreement is meaningful.
"""

import itertools

import numpy as np
import scipy.linalg


def dtw_brute(x, y):
    """Minimal path cost by explicit enumeration of all monotone paths."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = len(x), len(y)
    best = [np.inf]

    def walk(i, j, acc):
        acc = acc + (x[i] - y[j]) ** 2
        if i == n - 1 and j == m - 1:
            best[0] = min(best[0], acc)
            return
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)

    walk(0, 0, 0.0)
    return best[0]


def all_partitions(n):
    """Every set partition of range(n) as a label array (restricted growth)."""
    labels = np.zeros(n, dtype=np.int64)

    def rec(i, max_label):
        if i == n:
            yield labels.copy()
            return
        for lab in range(max_label + 2):
            labels[i] = lab
            yield from rec(i + 1, max(max_label, lab))

    yield from rec(1, 0) if n > 1 else iter([labels.copy()])


def partition_quality(B, labels):
    """Tr H^T B H computed with an explicit double loop."""
    q = 0.0
    n = len(labels)
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                q += B[i, j]
    return q


def exhaustive_best_partition(B):
    """(best quality, best labels) over all set partitions."""
    best_q, best_labels = -np.inf, None
    for labels in all_partitions(B.shape[0]):
        q = partition_quality(B, labels)
        if q > best_q:
            best_q, best_labels = q, labels
    return best_q, best_labels


def spanning_trees_brute(d):
    """All spanning trees of a complete graph with their total distances."""
    n = d.shape[0]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    trees = []
    for combo in itertools.combinations(pairs, n - 1):
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        ok = True
        for i, j in combo:
            ri, rj = find(i), find(j)
            if ri == rj:
                ok = False
                break
            parent[ri] = rj
        if ok:
            trees.append((sum(d[i, j] for i, j in combo), combo))
    return trees


def isotonic_minimax(y):
    """Exact isotonic regression via the max-min of interval means."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    prefix = np.concatenate([[0.0], np.cumsum(y)])

    def mean(a, b):  # inclusive interval [a, b]
        return (prefix[b + 1] - prefix[a]) / (b + 1 - a)

    x = np.empty(n)
    for i in range(n):
        x[i] = max(min(mean(a, b) for b in range(i, n)) for a in range(i + 1))
    return x


def autocov_expm(adjacency, labels, t, mode="combinatorial"):
    """R(t; H) through scipy's dense matrix exponential of the generator."""
    a = np.asarray(adjacency, dtype=float)
    n = a.shape[0]
    deg = a.sum(axis=1)
    if mode == "combinatorial":
        lap = np.diag(deg) - a
        pi = np.full(n, 1.0 / n)
    else:
        lap = np.eye(n) - a / deg[:, None]
        pi = deg / deg.sum()
    h = np.zeros((n, int(np.max(labels)) + 1))
    h[np.arange(n), labels] = 1.0
    b = np.diag(pi) @ scipy.linalg.expm(-t * lap) - np.outer(pi, pi)
    return h.T @ b @ h


def lml_naive(theta, x, y):
    """GP log marginal likelihood by direct inverse and slogdet."""
    amp2, ls, noise2 = np.exp(theta)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = amp2 * np.exp(-0.5 * ((x[:, None] - x[None, :]) / ls) ** 2)
    k = k + noise2 * np.eye(len(x))
    _, logdet = np.linalg.slogdet(k)
    return float(-0.5 * y @ np.linalg.solve(k, y) - 0.5 * logdet - 0.5 * len(x) * np.log(2 * np.pi))


def vi_by_hand(labels_a, labels_b):
    """Normalised variation of information from explicit cell counts."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    n = len(labels_a)

    def entropy(groups):
        return -sum((len(g) / n) * np.log(len(g) / n) for g in groups if len(g))

    groups_a = [np.nonzero(labels_a == c)[0] for c in np.unique(labels_a)]
    groups_b = [np.nonzero(labels_b == c)[0] for c in np.unique(labels_b)]
    ha, hb = entropy(groups_a), entropy(groups_b)
    hj = -sum(
        (len(np.intersect1d(ga, gb)) / n) * np.log(len(np.intersect1d(ga, gb)) / n)
        for ga in groups_a
        for gb in groups_b
        if len(np.intersect1d(ga, gb))
    )
    return (2 * hj - ha - hb) / np.log(n)
