import json
import shutil
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from tempoclust.cli import main
from tempoclust.manifest import RunManifest
from tempoclust.pipeline import run_pipeline, simulate
from tempoclust.synth import read_labels_csv

from conftest import write_synth_manifest

NUMERIC_GLOBS = ("*.csv", "*.json", "*.graphml")


def _numeric_artifacts(outdir: Path) -> dict[str, bytes]:
    out = {}
    for pattern in NUMERIC_GLOBS:
        for p in sorted(outdir.glob(pattern)):
            out[p.name] = p.read_bytes()
    return out


@pytest.fixture(scope="module")
def run_once(tmp_path_factory):
    """One small full pipeline run shared by the cheap assertions."""
    base = tmp_path_factory.mktemp("cli_run")
    manifest = write_synth_manifest(
        base / "run.manifest", base / "out", n_per=8, m=60, ell=20, n_times=40
    )
    runner = CliRunner()
    sim = runner.invoke(main, ["simulate", "-m", str(manifest)])
    assert sim.exit_code == 0, sim.output
    res = runner.invoke(main, ["run", "-m", str(manifest)])
    assert res.exit_code == 0, res.output
    return base, manifest, res


def test_run_reports_scales(run_once):
    _, _, res = run_once
    assert "rank 1:" in res.output
    assert "report:" in res.output


def test_run_writes_expected_artifacts(run_once):
    base, _, _ = run_once
    out = base / "out"
    for name in (
        "trajectories.csv",
        "distances.csv",
        "similarities.csv",
        "graph.graphml",
        "scan.json",
        "selected_scales.json",
        "vi_t.csv",
        "vi_tt.csv",
        "learner_stats.csv",
        "report.md",
    ):
        assert (out / name).exists(), name
    assert (out / "figures" / "scan_overview.png").exists()
    assert (out / "figures" / "vi_heatmap.png").exists()


def test_scan_json_schema(run_once):
    base, _, _ = run_once
    obj = json.loads((base / "out" / "scan.json").read_text())
    rec = obj["times"][0]
    assert {"t", "n_communities", "r_star", "vi_t", "partition"} <= set(rec)


def test_partition_csv_labels_learners(run_once):
    base, _, _ = run_once
    out = base / "out"
    labels = read_labels_csv(out / "labels.csv")
    parts = sorted(out.glob("partition_rank*.csv"))
    assert parts
    lines = parts[0].read_text().splitlines()
    assert lines[0] == "node_id,label"
    assert {line.split(",")[0] for line in lines[1:]} == set(labels)


def test_missing_catalog_is_ingest_stage_error(tmp_path):
    manifest = tmp_path / "bad.manifest"
    manifest.write_text(
        f"output_dir = {tmp_path / 'out'}\n"
        f"events_csv = {tmp_path / 'nope.csv'}\n"
        f"catalog_csv = {tmp_path / 'nope2.csv'}\n"
        "course_end = 70\n"
    )
    runner = CliRunner()
    res = runner.invoke(main, ["run", "-m", str(manifest)])
    assert res.exit_code != 0
    assert "[ingest]" in res.output


def test_unknown_sparsifier_is_graph_stage_error(tmp_path):
    manifest = write_synth_manifest(
        tmp_path / "m.manifest", tmp_path / "out", n_per=4, m=20, ell=3, n_times=5,
        extra="sparsifier = nonsense",
    )
    runner = CliRunner()
    assert runner.invoke(main, ["simulate", "-m", str(manifest)]).exit_code == 0
    res = runner.invoke(main, ["run", "-m", str(manifest)])
    assert res.exit_code != 0
    assert "[graph]" in res.output


def test_rerun_is_byte_identical(run_once):
    base, manifest, _ = run_once
    before = _numeric_artifacts(base / "out")
    runner = CliRunner()
    assert runner.invoke(main, ["simulate", "-m", str(manifest)]).exit_code == 0
    assert runner.invoke(main, ["run", "-m", str(manifest)]).exit_code == 0
    after = _numeric_artifacts(base / "out")
    assert before.keys() == after.keys()
    for name in before:
        assert before[name] == after[name], f"{name} changed between runs"


def test_resume_reuses_caches_and_preserves_bytes(run_once):
    base, manifest, _ = run_once
    before = _numeric_artifacts(base / "out")
    runner = CliRunner()
    res = runner.invoke(main, ["run", "-m", str(manifest), "--resume"])
    assert res.exit_code == 0
    after = _numeric_artifacts(base / "out")
    for name in before:
        assert before[name] == after[name], f"{name} changed under --resume"


def test_chained_subcommands_equal_run(run_once, tmp_path):
    base, manifest, _ = run_once
    chain_dir = tmp_path / "chain"
    chain_manifest = write_synth_manifest(
        tmp_path / "chain.manifest", chain_dir, n_per=8, m=60, ell=20, n_times=40
    )
    runner = CliRunner()
    assert runner.invoke(main, ["simulate", "-m", str(chain_manifest)]).exit_code == 0
    for sub in ("ingest", "similarity", "graph", "scan", "select", "stats", "characterize"):
        res = runner.invoke(main, [sub, "-m", str(chain_manifest), "--resume"])
        assert res.exit_code == 0, f"{sub}: {res.output}"
    ref = _numeric_artifacts(base / "out")
    got = _numeric_artifacts(chain_dir)
    skip = {"events.csv", "catalog.csv", "labels.csv"}  # same bytes, but compare anyway below
    for name in ref:
        if name in got:
            assert ref[name] == got[name], f"{name} differs between run and chained stages"
    assert set(ref) - set(got) <= set()  # run-only artifacts are from the report stage


def test_stats_labels_follow_primary_scale(run_once):
    base, _, _ = run_once
    out = base / "out"
    sel = json.loads((out / "selected_scales.json").read_text())
    non_trivial = [s for s in sel["scales"] if not s["trivial"]]
    assert non_trivial
    primary = non_trivial[0]
    stats_lines = (out / "learner_stats.csv").read_text().splitlines()[1:]
    labels_in_stats = [int(line.split(",")[-1]) for line in stats_lines]
    assert sorted(set(labels_in_stats)) == sorted(set(primary["partition"]))


def test_run_pipeline_api_matches_cli(run_once, tmp_path):
    base, _, _ = run_once
    outdir = tmp_path / "api_out"
    man = RunManifest(
        {
            "output_dir": str(outdir),
            "seed": "42",
            "events_csv": str(base / "out" / "events.csv"),
            "catalog_csv": str(base / "out" / "catalog.csv"),
            "course_end": "70",
            "ell": "20",
            "n_times": "40",
            "gp_max_tasks": "40",
        }
    )
    result = run_pipeline(man)
    assert result.scales
    ref = _numeric_artifacts(base / "out")
    got = _numeric_artifacts(outdir)
    for name in ("distances.csv", "scan.json", "selected_scales.json", "learner_stats.csv"):
        assert got[name] == ref[name]


def test_simulate_requires_archetypes(tmp_path):
    manifest = tmp_path / "m.manifest"
    manifest.write_text(f"output_dir = {tmp_path / 'out'}\n")
    runner = CliRunner()
    res = runner.invoke(main, ["simulate", "-m", str(manifest)])
    assert res.exit_code != 0
    assert "archetype" in res.output
