import io
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tempoclust.ingest import build_trajectories, parse_task_catalog
from tempoclust.rmst import SimGraph
from tempoclust.synth import ArchetypeSpec, generate_cohort


def clique_pair_graph(clique: int = 5, weight: float = 1.0) -> SimGraph:
    """Two cliques of the given size joined by a single edge."""
    n = 2 * clique
    a = np.zeros((n, n))
    a[:clique, :clique] = weight
    a[clique:, clique:] = weight
    np.fill_diagonal(a, 0.0)
    a[clique - 1, clique] = a[clique, clique - 1] = weight
    return SimGraph([f"n{i}" for i in range(n)], a)


def random_graph(rng, n: int, p: float = 0.6) -> SimGraph:
    """Random connected weighted graph (edges resampled until connected)."""
    while True:
        a = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    a[i, j] = a[j, i] = rng.uniform(0.2, 1.0)
        for i in range(1, n):  # ensure connectivity with a random tree
            j = rng.integers(0, i)
            if a[i, j] == 0:
                a[i, j] = a[j, i] = rng.uniform(0.2, 1.0)
        if (a.sum(axis=1) > 0).all():
            return SimGraph([f"n{i}" for i in range(n)], a)


def make_catalog(m: int):
    text = "task_id,order_index\n" + "\n".join(f"T{k + 1:04d},{k + 1}" for k in range(m))
    return parse_task_catalog(io.StringIO(text))


def archetype_cohort(n_per: int = 20, m: int = 240, span: float = 70.0, seed: int = 42):
    """The standard four-archetype cohort used across tests."""
    specs = [
        ArchetypeSpec("early", n_per, offset=-10.0, jitter=1.5),
        ArchetypeSpec("on_time", n_per, offset=0.0, jitter=1.5),
        ArchetypeSpec(
            "skipper", n_per, offset=3.0, jitter=1.5, skip_prob=0.35, skip_shared=0.85
        ),
        ArchetypeSpec("crammer", n_per, jitter=1.5, binge_block=max(8, m // 6)),
    ]
    log, labels = generate_cohort(specs, n_tasks=m, span=span, seed=seed)
    catalog = make_catalog(m)
    trajs = build_trajectories(log, catalog, "sentinel_end_of_course", span)
    return log, catalog, trajs, labels


@pytest.fixture(scope="session")
def small_cohort():
    return archetype_cohort(n_per=12, m=120, seed=7)


def write_synth_manifest(
    path: Path,
    outdir: Path,
    n_per: int = 12,
    m: int = 120,
    seed: int = 42,
    ell: int = 40,
    n_times: int = 60,
    extra: str = "",
) -> Path:
    """Manifest for a simulate-then-run flow of the four-archetype cohort."""
    block = max(8, m // 6)
    path.write_text(
        f"""
output_dir = {outdir}
seed = {seed}
events_csv = {outdir}/events.csv
catalog_csv = {outdir}/catalog.csv
labels_csv = {outdir}/labels.csv
course_start = 0
course_end = 70
synth_tasks = {m}
synth_span = 70
archetype.early.count = {n_per}
archetype.early.offset = -10
archetype.early.jitter = 1.5
archetype.on_time.count = {n_per}
archetype.on_time.jitter = 1.5
archetype.skipper.count = {n_per}
archetype.skipper.offset = 3
archetype.skipper.jitter = 1.5
archetype.skipper.skip_prob = 0.35
archetype.skipper.skip_shared = 0.85
archetype.crammer.count = {n_per}
archetype.crammer.jitter = 1.5
archetype.crammer.binge_block = {block}
n_times = {n_times}
ell = {ell}
gp_max_tasks = 40
{extra}
""".strip()
        + "\n"
    )
    return path
