"""Command-line interface: run the pipeline or any prefix of it."""

from __future__ import annotations

import sys

import click

from .manifest import ManifestError, RunManifest
from .pipeline import StageError, run_pipeline, simulate


def _load_manifest(path: str) -> RunManifest:
    try:
        return RunManifest.from_file(path)
    except ManifestError as exc:
        raise click.ClickException(str(exc)) from exc


def _run_stage(manifest_path: str, resume: bool, upto: str) -> None:
    man = _load_manifest(manifest_path)
    try:
        result = run_pipeline(man, resume=resume, upto=upto)
    except StageError as exc:
        click.echo(f"error {exc}", err=True)
        sys.exit(1)
    except ManifestError as exc:
        click.echo(f"error [manifest] {exc}", err=True)
        sys.exit(1)
    if upto == "report":
        primary = result.primary_scale()
        if result.scales:
            for s in result.scales:
                tag = " (trivial)" if s.trivial else ""
                click.echo(
                    f"rank {s.rank}: {s.n_communities} communities at t={s.t:.4g}, "
                    f"plateau {s.plateau_decades:.2f} decades{tag}"
                )
            if primary is not None and not primary.trivial:
                click.echo(
                    f"primary scale: {primary.n_communities} communities "
                    f"(t={primary.t:.4g})"
                )
        else:
            click.echo("no robust scales found: data shows no natural clusters")
        click.echo(f"report: {result.outdir / 'report.md'}")
    else:
        click.echo(f"stage '{upto}' complete; artifacts in {result.outdir}")


manifest_option = click.option(
    "--manifest", "-m", "manifest_path", required=True, type=click.Path(),
    help="run manifest (flat key = value file)",
)
resume_option = click.option(
    "--resume", is_flag=True, default=False,
    help="reuse cached stage outputs when input digests match",
)


@click.group()
@click.version_option()
def main() -> None:
    """Cluster learners by temporal behaviour of task completion."""


def _make_stage_command(name: str, helptext: str):
    @main.command(name=name, help=helptext)
    @manifest_option
    @resume_option
    def _cmd(manifest_path: str, resume: bool) -> None:
        _run_stage(manifest_path, resume, _UPTO[name])

    return _cmd


_UPTO = {
    "ingest": "ingest",
    "similarity": "similarity",
    "graph": "graph",
    "scan": "scan",
    "select": "select",
    "stats": "stats",
    "characterize": "characterize",
    "run": "report",
}

_make_stage_command("ingest", "Parse events and catalog into trajectories.")
_make_stage_command("similarity", "Compute DTW distance and similarity matrices.")
_make_stage_command("graph", "Sparsify the similarity matrix into a graph.")
_make_stage_command("scan", "Scan Markov Stability across the time grid.")
_make_stage_command("select", "Select robust scales from the scan.")
_make_stage_command("stats", "Per-learner session and completion statistics.")
_make_stage_command("characterize", "GP cluster curves and Bayes factors.")
_make_stage_command("run", "Run the full pipeline and write the report.")


@main.command(name="simulate", help="Generate a synthetic cohort from archetype keys.")
@manifest_option
def _simulate(manifest_path: str) -> None:
    man = _load_manifest(manifest_path)
    try:
        paths = simulate(man)
    except StageError as exc:
        click.echo(f"error {exc}", err=True)
        sys.exit(1)
    for kind, path in paths.items():
        click.echo(f"{kind}: {path}")


if __name__ == "__main__":
    main()
