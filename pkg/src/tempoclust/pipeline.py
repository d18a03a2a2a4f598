"""End-to-end pipeline: ingest -> dtw -> rmst -> scan -> select -> analytics.

Every stage writes its artifacts under the manifest's output directory and
records a digest of its effective inputs; ``resume`` reuses a stage's
cached output when the digest still matches.  All randomness flows from
the single manifest seed, so repeated runs produce byte-identical numeric
artifacts.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dtw, features, gpr, plots, robustness, synth
from .ingest import (
    EventLog,
    TaskCatalog,
    build_trajectories,
    parse_event_log,
    parse_grades,
    parse_task_catalog,
)
from .manifest import RunManifest
from .mstability import Partition, ScanConfig, ScanResult, build_system, default_time_grid, scan as run_scan
from .rmst import RmstConfig, SimGraph, knn_graph, rmst_graph

STAGES = (
    "ingest",
    "similarity",
    "graph",
    "scan",
    "select",
    "stats",
    "characterize",
    "report",
)

_INGEST_KEYS = ["events_csv", "catalog_csv", "event_format", "course_start",
                "course_end", "missing_policy"]
_SIM_KEYS = ["sigma_rule", "sigma2"]
_GRAPH_KEYS = ["sparsifier", "rmst_gamma", "rmst_k", "knn_k"]
_SCAN_KEYS = ["laplacian", "t_min", "t_max", "n_times", "ell", "linearised", "seed"]
_SELECT_KEYS = ["min_plateau_decades", "vi_dip_quantile", "vi_block_max"]
_STATS_KEYS = ["level_tol"]
_GP_KEYS = ["gp_axis", "gp_max_tasks", "gp_restarts", "run_gpr", "seed"]


class StageError(RuntimeError):
    """Failure attributed to one pipeline stage."""

    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        super().__init__(f"[{stage}] {cause}")


@dataclass
class PipelineResult:
    outdir: Path
    log: EventLog | None = None
    catalog: TaskCatalog | None = None
    trajectories: list = None
    sim: dtw.SimilarityMatrix | None = None
    graph: SimGraph | None = None
    scan: ScanResult | None = None
    scales: list[robustness.RobustScale] = field(default_factory=list)
    stats: list[features.LearnerStats] = field(default_factory=list)
    curves: list = field(default_factory=list)
    cohort_curve: gpr.CurveResult | None = None
    bayes: gpr.BayesComparison | None = None
    neighbor_factors: list = field(default_factory=list)
    grades: dict[str, float] | None = None
    artifacts: list[Path] = field(default_factory=list)

    def primary_scale(self) -> robustness.RobustScale | None:
        for s in self.scales:
            if not s.trivial:
                return s
        return self.scales[0] if self.scales else None


def _file_digest(h, path: Path) -> None:
    h.update(path.name.encode())
    h.update(path.read_bytes())


class Pipeline:
    def __init__(self, man: RunManifest, resume: bool = False):
        self.man = man
        self.resume = resume
        self.outdir = man.require_path("output_dir")
        self.cache_dir = self.outdir / "cache"
        self.fig_dir = self.outdir / "figures"
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.cache_dir.mkdir(exist_ok=True)
        self.result = PipelineResult(outdir=self.outdir)
        self._digests: dict[str, str] = {}

    # -- caching helpers -------------------------------------------------

    def _digest(self, stage: str, keys: list[str], files: list[Path], extra: str = "") -> str:
        h = hashlib.sha256()
        h.update(stage.encode())
        h.update(self.man.config_digest_text(keys).encode())
        h.update(extra.encode())
        for path in files:
            _file_digest(h, path)
        digest = h.hexdigest()
        self._digests[stage] = digest
        return digest

    def _fresh(self, stage: str, digest: str, artifacts: list[Path]) -> bool:
        if not self.resume:
            return False
        marker = self.cache_dir / f"{stage}.digest"
        if not marker.exists() or marker.read_text() != digest:
            return False
        return all(p.exists() for p in artifacts)

    def _mark(self, stage: str, digest: str) -> None:
        (self.cache_dir / f"{stage}.digest").write_text(digest)

    def _note_artifacts(self, *paths: Path) -> None:
        self.result.artifacts.extend(paths)

    # -- stages ----------------------------------------------------------

    def stage_ingest(self) -> None:
        man = self.man
        try:
            events_path = man.require_path("events_csv")
            catalog_path = man.require_path("catalog_csv")
            digest = self._digest("ingest", _INGEST_KEYS, [events_path, catalog_path])
            traj_csv = self.outdir / "trajectories.csv"
            cache = self.cache_dir / "ingest.npz"
            if self._fresh("ingest", digest, [traj_csv, cache]):
                self._load_ingest(cache)
            else:
                with open(events_path) as fh:
                    log = parse_event_log(fh, man.get_str("event_format"))
                with open(catalog_path) as fh:
                    catalog = parse_task_catalog(fh)
                policy = man.get_str("missing_policy")
                course_end = man.get_float("course_end")
                trajs = build_trajectories(log, catalog, policy, course_end)
                self.result.log = log
                self.result.catalog = catalog
                self.result.trajectories = trajs
                self._save_ingest(cache, traj_csv)
                self._mark("ingest", digest)
            grades_path = man.get_path("grades_csv")
            if grades_path is not None:
                with open(grades_path) as fh:
                    self.result.grades = parse_grades(fh)
            self._note_artifacts(traj_csv)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("ingest", exc) from exc

    def _save_ingest(self, cache: Path, traj_csv: Path) -> None:
        res = self.result
        lids, tids, tss = zip(*res.log.records)
        np.savez_compressed(
            cache,
            rec_lids=np.array(lids),
            rec_tids=np.array(tids),
            rec_ts=np.array(tss, dtype=float),
            tasks=np.array(res.catalog.tasks),
            traj_ids=np.array([t.learner_id for t in res.trajectories]),
            traj_values=np.array([t.values for t in res.trajectories])
            if len({len(t) for t in res.trajectories}) == 1
            else np.empty(0),
            traj_completed=np.array([t.completed for t in res.trajectories])
            if len({len(t) for t in res.trajectories}) == 1
            else np.empty(0),
        )
        with open(traj_csv, "w") as fh:
            m = max(len(t) for t in res.trajectories)
            fh.write("learner_id," + ",".join(f"t{k + 1}" for k in range(m)) + "\n")
            for t in res.trajectories:
                vals = ",".join(f"{v:.12g}" for v in t.values)
                fh.write(f"{t.learner_id},{vals}\n")

    def _load_ingest(self, cache: Path) -> None:
        from .ingest import Trajectory

        with np.load(cache, allow_pickle=False) as data:
            records = [
                (str(a), str(b), float(c))
                for a, b, c in zip(data["rec_lids"], data["rec_tids"], data["rec_ts"])
            ]
            self.result.log = EventLog(records)
            self.result.catalog = TaskCatalog([str(t) for t in data["tasks"]])
            if data["traj_values"].size:
                self.result.trajectories = [
                    Trajectory(str(lid), vals, comp)
                    for lid, vals, comp in zip(
                        data["traj_ids"], data["traj_values"], data["traj_completed"]
                    )
                ]
            else:  # ragged (drop policy); rebuild from the log
                self.result.trajectories = build_trajectories(
                    self.result.log,
                    self.result.catalog,
                    self.man.get_str("missing_policy"),
                    self.man.get_float("course_end"),
                )

    def stage_similarity(self) -> None:
        man = self.man
        try:
            cfg = dtw.KernelConfig(
                sigma2=man.get_float("sigma2"), sigma_rule=man.get_str("sigma_rule")
            )
            digest_in = self._digests["ingest"] + dtw.matrix_digest(
                self.result.trajectories, cfg
            )
            digest = self._digest("similarity", _SIM_KEYS, [], extra=digest_in)
            d_csv = self.outdir / "distances.csv"
            a_csv = self.outdir / "similarities.csv"
            cache = self.cache_dir / "similarity.npz"
            if self._fresh("similarity", digest, [d_csv, a_csv, cache]):
                self.result.sim = dtw.load_matrix_cache(cache)
            else:
                sim = dtw.similarity_matrix(self.result.trajectories, cfg)
                self.result.sim = sim
                dtw.save_matrix_cache(cache, sim, digest)
                dtw.write_matrix_csv(d_csv, sim.ids, sim.distances)
                dtw.write_matrix_csv(a_csv, sim.ids, sim.similarities)
                self._mark("similarity", digest)
            self._note_artifacts(d_csv, a_csv)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("similarity", exc) from exc

    def stage_graph(self) -> None:
        man = self.man
        try:
            digest = self._digest(
                "graph", _GRAPH_KEYS, [], extra=self._digests["similarity"]
            )
            gml = self.outdir / "graph.graphml"
            cache = self.cache_dir / "graph.npz"
            if self._fresh("graph", digest, [gml, cache]):
                with np.load(cache, allow_pickle=False) as data:
                    self.result.graph = SimGraph(
                        [str(s) for s in data["ids"]], data["adjacency"]
                    )
            else:
                sparsifier = man.get_str("sparsifier")
                if sparsifier == "rmst":
                    cfg = RmstConfig(
                        gamma=man.get_float("rmst_gamma"), k=man.get_int("rmst_k")
                    )
                    graph = rmst_graph(self.result.sim, cfg)
                elif sparsifier == "knn":
                    graph = knn_graph(self.result.sim, man.get_int("knn_k"))
                else:
                    raise ValueError(f"unknown sparsifier {sparsifier!r}")
                self.result.graph = graph
                np.savez_compressed(
                    cache, ids=np.array(graph.ids), adjacency=graph.adjacency
                )
                graph.write_graphml(gml)
                self._mark("graph", digest)
            self._note_artifacts(gml)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("graph", exc) from exc

    def stage_scan(self) -> None:
        man = self.man
        try:
            digest = self._digest("scan", _SCAN_KEYS, [], extra=self._digests["graph"])
            scan_json = self.outdir / "scan.json"
            cache = self.cache_dir / "scan.npz"
            if self._fresh("scan", digest, [scan_json, cache]):
                self.result.scan = _load_scan(cache)
            else:
                system = build_system(self.result.graph, man.get_str("laplacian"))
                cfg = ScanConfig(
                    time_grid=default_time_grid(
                        man.get_float("t_min"),
                        man.get_float("t_max"),
                        man.get_int("n_times"),
                    ),
                    ell=man.get_int("ell"),
                    seed=man.seed(),
                    use_linearised=man.get_bool("linearised"),
                )
                result = run_scan(system, cfg)
                self.result.scan = result
                _save_scan(cache, result)
                result.write_json(scan_json)
                self._mark("scan", digest)
            self._note_artifacts(scan_json)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("scan", exc) from exc

    def stage_select(self) -> None:
        man = self.man
        try:
            digest = self._digest(
                "select", _SELECT_KEYS, [], extra=self._digests["scan"]
            )
            sel_json = self.outdir / "selected_scales.json"
            vi_t_csv = self.outdir / "vi_t.csv"
            vi_tt_csv = self.outdir / "vi_tt.csv"
            scan_res = self.result.scan
            scales = robustness.select_robust(
                scan_res,
                min_plateau_decades=man.get_float("min_plateau_decades"),
                vi_dip_quantile=man.get_float("vi_dip_quantile"),
                vi_block_max=man.get_float("vi_block_max"),
            )
            self.result.scales = scales
            part_paths = [
                self.outdir / f"partition_rank{s.rank}_c{s.n_communities}.csv"
                for s in scales
            ]
            if not self._fresh("select", digest, [sel_json, vi_t_csv, vi_tt_csv] + part_paths):
                with open(sel_json, "w") as fh:
                    json.dump(
                        {"scales": [s.to_json_obj() for s in scales]},
                        fh,
                        indent=1,
                        sort_keys=True,
                    )
                    fh.write("\n")
                robustness.write_vi_curve_csv(vi_t_csv, scan_res.times, scan_res.vi_t)
                robustness.write_vi_matrix_csv(vi_tt_csv, scan_res.times, scan_res.cross_vi)
                ids = self.result.graph.ids
                for s, path in zip(scales, part_paths):
                    with open(path, "w") as fh:
                        fh.write("node_id,label\n")
                        for lid, lab in zip(ids, s.partition.labels):
                            fh.write(f"{lid},{int(lab)}\n")
                self._mark("select", digest)
            self._note_artifacts(sel_json, vi_t_csv, vi_tt_csv, *part_paths)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("select", exc) from exc

    def stage_stats(self) -> None:
        man = self.man
        try:
            digest = self._digest(
                "stats", _STATS_KEYS, [], extra=self._digests["select"]
            )
            stats_csv = self.outdir / "learner_stats.csv"
            primary = self.result.primary_scale()
            labels: dict[str, int] = {}
            if primary is not None:
                ids = self.result.graph.ids
                labels = {
                    lid: int(lab) for lid, lab in zip(ids, primary.partition.labels)
                }
            stats = features.cohort_stats(
                self.result.log,
                self.result.catalog,
                level_tol=man.get_float("level_tol"),
                labels=labels,
            )
            self.result.stats = stats
            if not self._fresh("stats", digest, [stats_csv]):
                features.write_stats_csv(stats_csv, stats)
                self._mark("stats", digest)
            self._note_artifacts(stats_csv)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("stats", exc) from exc

    def stage_characterize(self) -> None:
        man = self.man
        try:
            if not man.get_bool("run_gpr", True):
                return
            primary = self.result.primary_scale()
            if primary is None or primary.trivial:
                return
            digest = self._digest(
                "characterize", _GP_KEYS, [], extra=self._digests["select"]
            )
            bayes_json = self.outdir / "bayes_comparison.json"
            cohort_csv = self.outdir / "gp_curves_cohort.csv"
            trajs = self.result.trajectories
            m = len(trajs[0])
            stride = max(1, math.ceil(m / man.get_int("gp_max_tasks")))
            axis = man.get_str("gp_axis")
            fit_kw = {"n_restarts": man.get_int("gp_restarts"), "seed": man.seed()}
            partition = primary.partition
            curve_paths = [
                self.outdir / f"gp_curves_cluster{c}.csv"
                for c in range(partition.n_communities)
            ]
            query = np.arange(1, m + 1, dtype=float)
            cohort_curve = gpr.cluster_mean_trajectory(
                trajs, query=query, axis=axis, task_stride=stride, **fit_kw
            )
            curves = []
            for c in range(partition.n_communities):
                members = [trajs[i] for i in partition.members(c)]
                curves.append(
                    (
                        c,
                        gpr.cluster_mean_trajectory(
                            members, query=query, axis=axis, task_stride=stride, **fit_kw
                        ),
                    )
                )
            bayes = gpr.bayes_factor(
                partition,
                trajs,
                axis=axis,
                task_stride=stride,
                whole_model=cohort_curve.model,
            )
            neighbors = gpr.neighbor_bayes_factors(
                partition, trajs, axis=axis, task_stride=stride, **fit_kw
            )
            self.result.cohort_curve = cohort_curve
            self.result.curves = curves
            self.result.bayes = bayes
            self.result.neighbor_factors = neighbors
            if not self._fresh("characterize", digest, [bayes_json, cohort_csv] + curve_paths):
                cohort_curve.write_csv(cohort_csv)
                for (c, curve), path in zip(curves, curve_paths):
                    curve.write_csv(path)
                gpr.write_bayes_json(bayes_json, bayes, neighbors)
                self._mark("characterize", digest)
            self._note_artifacts(bayes_json, cohort_csv, *curve_paths)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("characterize", exc) from exc

    def stage_report(self) -> None:
        try:
            self.fig_dir.mkdir(exist_ok=True)
            res = self.result
            fig_paths = {}
            if res.scan is not None:
                p = self.fig_dir / "scan_overview.png"
                plots.plot_scan_overview(res.scan, res.scales, p)
                fig_paths["scan_overview"] = p
                p = self.fig_dir / "vi_heatmap.png"
                plots.plot_vi_heatmap(res.scan, p)
                fig_paths["vi_heatmap"] = p
            if res.curves:
                p = self.fig_dir / "cluster_curves.png"
                plots.plot_cluster_curves(res.curves, res.cohort_curve, p)
                fig_paths["cluster_curves"] = p
            if res.stats:
                p = self.fig_dir / "stats_scatter.png"
                plots.plot_stats_scatter(res.stats, p)
                fig_paths["stats_scatter"] = p
            report_path = self.outdir / "report.md"
            report_path.write_text(self._render_report(fig_paths))
            self._note_artifacts(report_path, *fig_paths.values())
        except StageError:
            raise
        except Exception as exc:
            raise StageError("report", exc) from exc

    def _render_report(self, fig_paths: dict[str, Path]) -> str:
        man, res = self.man, self.result
        lines: list[str] = ["# tempoclust run report", ""]
        lines += ["## Configuration", ""]
        cfg_keys = _INGEST_KEYS + _SIM_KEYS + _GRAPH_KEYS + _SCAN_KEYS + _SELECT_KEYS + _STATS_KEYS
        for key in cfg_keys:
            lines.append(f"- `{key}` = `{man._raw(key)}`")
        if res.sim is not None:
            lines.append(f"- resolved kernel bandwidth sigma2 = `{res.sim.sigma2:.6g}`")
        lines.append("")
        if res.log is not None:
            n = len(res.trajectories)
            m = res.catalog.size
            lines += [
                "## Cohort",
                "",
                f"- {n} learners, {m} tasks, {len(res.log.records)} completion events",
            ]
            if res.stats:
                pct = [s.completion_pct for s in res.stats]
                lines.append(
                    f"- task completion: mean {np.mean(pct):.1f}%, "
                    f"min {np.min(pct):.1f}%, max {np.max(pct):.1f}%"
                )
            lines.append("")
        lines += ["## Robust scales", ""]
        if not res.scales:
            lines += [
                "No robust scales were found: the scan signals a lack of natural "
                "clusters in this cohort.",
                "",
            ]
        else:
            lines += [
                "| rank | t | communities | plateau | decades | VI(t) | block VI | trivial |",
                "| --- | --- | --- | --- | --- | --- | --- | --- |",
            ]
            for s in res.scales:
                lines.append(
                    f"| {s.rank} | {s.t:.4g} | {s.n_communities} "
                    f"| [{s.t_start:.4g}, {s.t_end:.4g}] | {s.plateau_decades:.2f} "
                    f"| {s.vi_at_t:.4f} | {s.block_mean_vi:.4f} "
                    f"| {'yes' if s.trivial else 'no'} |"
                )
            lines.append("")
        primary = res.primary_scale()
        if primary is not None and not primary.trivial:
            lines += [
                f"## Primary scale: {primary.n_communities} communities at t = {primary.t:.4g}",
                "",
            ]
            sizes = primary.partition.sizes()
            lines.append(
                "- cluster sizes: "
                + ", ".join(f"{c}: {int(s)}" for c, s in enumerate(sizes))
            )
            if res.stats:
                lines += ["", "| cluster | learners | mean massed session | mean completion % |",
                          "| --- | --- | --- | --- |"]
                for c in range(primary.partition.n_communities):
                    rows = [s for s in res.stats if s.cluster_label == c]
                    if rows:
                        lines.append(
                            f"| {c} | {len(rows)} "
                            f"| {np.mean([r.mean_massed_session_length for r in rows]):.2f} "
                            f"| {np.mean([r.completion_pct for r in rows]):.1f} |"
                        )
            if res.bayes is not None:
                lines += [
                    "",
                    f"- GP Bayes factor (per-cluster vs whole cohort): log K = "
                    f"{res.bayes.log_K:.2f}",
                ]
                for pair in res.neighbor_factors:
                    lines.append(
                        f"- neighbours {pair['cluster_a']} vs {pair['cluster_b']}: "
                        f"log K = {pair['log_K']:.2f}"
                    )
            lines.append("")
            if res.grades:
                lines += self._grade_section(primary)
        if fig_paths:
            lines += ["## Figures", ""]
            for name, path in fig_paths.items():
                rel = path.relative_to(self.outdir)
                lines.append(f"![{name}]({rel.as_posix()})")
            lines.append("")
        lines += ["## Artifacts", ""]
        for p in sorted({a.relative_to(self.outdir).as_posix() for a in res.artifacts}):
            lines.append(f"- `{p}`")
        lines.append("")
        return "\n".join(lines)

    def _grade_section(self, primary) -> list[str]:
        from scipy.stats import hypergeom

        man, res = self.man, self.result
        low_thr = man.get_float("grade_low")
        high_thr = man.get_float("grade_high")
        ids = res.graph.ids
        labels = primary.partition.labels
        known = [(lid, lab) for lid, lab in zip(ids, labels) if lid in res.grades]
        if not known:
            return []
        n_total = len(known)
        n_low = sum(1 for lid, _ in known if res.grades[lid] < low_thr)
        lines = [
            "### Grades",
            "",
            f"- graded learners: {n_total}; low (< {low_thr:g}): {n_low}; "
            f"high (> {high_thr:g}): "
            f"{sum(1 for lid, _ in known if res.grades[lid] > high_thr)}",
            "",
            "| cluster | graded | low | high | low-enrichment p |",
            "| --- | --- | --- | --- | --- |",
        ]
        for c in range(primary.partition.n_communities):
            members = [(lid, lab) for lid, lab in known if lab == c]
            if not members:
                continue
            k_low = sum(1 for lid, _ in members if res.grades[lid] < low_thr)
            k_high = sum(1 for lid, _ in members if res.grades[lid] > high_thr)
            p_val = float(hypergeom.sf(k_low - 1, n_total, n_low, len(members)))
            lines.append(
                f"| {c} | {len(members)} | {k_low} | {k_high} | {p_val:.4g} |"
            )
        lines.append("")
        return lines

    # -- driver ----------------------------------------------------------

    def run(self, upto: str = "report") -> PipelineResult:
        if upto not in STAGES:
            raise ValueError(f"unknown stage {upto!r}")
        stop = STAGES.index(upto)
        methods = [
            self.stage_ingest,
            self.stage_similarity,
            self.stage_graph,
            self.stage_scan,
            self.stage_select,
            self.stage_stats,
            self.stage_characterize,
            self.stage_report,
        ]
        for method in methods[: stop + 1]:
            method()
        return self.result


def _save_scan(path: Path, result: ScanResult) -> None:
    ensembles = np.array(
        [[p.labels for p in runs] for runs in result.ensembles], dtype=np.int32
    )
    np.savez_compressed(
        path,
        times=result.times,
        best=np.array([p.labels for p in result.best], dtype=np.int32),
        ensembles=ensembles,
        r_star=result.r_star,
        n_communities=result.n_communities,
        vi_t=result.vi_t,
        cross_vi=result.cross_vi,
        meta=json.dumps(
            {"mode": result.mode, "linearised": result.linearised, "seed": result.seed}
        ),
    )


def _load_scan(path: Path) -> ScanResult:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        return ScanResult(
            times=data["times"],
            best=[Partition(row) for row in data["best"]],
            ensembles=[[Partition(row) for row in runs] for runs in data["ensembles"]],
            r_star=data["r_star"],
            n_communities=data["n_communities"],
            vi_t=data["vi_t"],
            cross_vi=data["cross_vi"],
            mode=meta["mode"],
            linearised=meta["linearised"],
            seed=meta["seed"],
        )


def run_pipeline(man: RunManifest, resume: bool = False, upto: str = "report") -> PipelineResult:
    """Execute the pipeline from a manifest; see Pipeline for staging."""
    return Pipeline(man, resume=resume).run(upto=upto)


def simulate(man: RunManifest) -> dict[str, Path]:
    """Generate a synthetic cohort at the paths named by the manifest."""
    outdir = man.require_path("output_dir")
    outdir.mkdir(parents=True, exist_ok=True)
    specs = man.archetypes()
    if not specs:
        raise StageError("simulate", "manifest defines no archetype.* keys")
    try:
        log, labels = synth.generate_cohort(
            specs,
            n_tasks=man.get_int("synth_tasks"),
            span=man.get_float("synth_span"),
            seed=man.seed(),
            start=man.get_float("course_start"),
        )
    except ValueError as exc:
        raise StageError("simulate", exc) from exc
    events_path = man.get_path("events_csv") or outdir / "events.csv"
    catalog_path = man.get_path("catalog_csv") or outdir / "catalog.csv"
    labels_path = man.get_path("labels_csv") or outdir / "labels.csv"
    events_path.parent.mkdir(parents=True, exist_ok=True)
    log.to_csv(events_path)
    synth.write_catalog_csv(catalog_path, man.get_int("synth_tasks"))
    synth.write_labels_csv(labels_path, labels)
    return {"events": events_path, "catalog": catalog_path, "labels": labels_path}
