"""Command-line interface: synth, edit, eval, serve, render."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import SecadError


def _fail(exc: SecadError):
    click.echo(json.dumps(exc.to_json()), err=True)
    sys.exit(1)


@click.group()
@click.version_option("0.1.0", prog_name="secad")
def main():
    """Sketch-and-extrude CAD editing toolkit."""


@main.command()
@click.option("--count", type=int, required=True, help="Number of triplets to synthesize.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--max-se", type=int, default=3, show_default=True)
@click.option("--max-tokens", type=int, default=1024, show_default=True)
def synth(count, seed, out, max_se, max_tokens):
    """Synthesize a filtered, split, deduplicated triplet dataset (JSONL)."""
    from .captioning import assemble_dataset, synthesize
    from .variation import VariationConfig

    try:
        config = VariationConfig(max_se=max_se, max_tokens=max_tokens)
        triplets = synthesize(count, seed, config=config)
        assemble_dataset(triplets, out)
    except SecadError as exc:
        _fail(exc)
    click.echo(f"wrote {count} triplets to {out}")


def _make_backend(spec: str):
    from .pipeline import HttpBackend, ScriptedBackend

    if spec.startswith("scripted:"):
        from .captioning import load_dataset

        return ScriptedBackend.from_triplets(load_dataset(spec.split(":", 1)[1]))
    if spec.startswith("http://") or spec.startswith("https://"):
        import os

        return HttpBackend(spec, token=os.environ.get("SECAD_BACKEND_TOKEN", ""))
    raise SecadError(f"backend must be scripted:<dataset.jsonl> or an http(s) URL, got {spec!r}")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="File containing one serialized CAD sequence.")
@click.option("--instruction", required=True)
@click.option("--backend", "backend_spec", required=True, help="scripted:<dataset.jsonl> or backend URL.")
@click.option("-k", type=int, default=5, show_default=True)
@click.option("--temperature", type=float, default=0.9, show_default=True)
@click.option("--top-p", type=float, default=0.9, show_default=True)
@click.option("--max-tokens", type=int, default=1024, show_default=True)
@click.option("--retries", type=int, default=3, show_default=True)
def edit(model_path, instruction, backend_spec, k, temperature, top_p, max_tokens, retries):
    """Run locate-then-infill on one model; prints the candidate set."""
    from .pipeline import SamplingConfig, edit as run_edit

    try:
        orig_text = Path(model_path).read_text(encoding="utf-8").strip()
        backend = _make_backend(backend_spec)
        sampling = SamplingConfig(temperature=temperature, top_p=top_p, max_tokens=max_tokens)
        result = run_edit(orig_text, instruction, backend, k=k, sampling=sampling, retries=retries)
    except SecadError as exc:
        _fail(exc)
    click.echo(json.dumps(result.to_json(), indent=2))


@main.command(name="eval")
@click.option("--testset", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--results", "results_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Pre-generated results JSONL; omit to run the pipeline.")
@click.option("--backend", "backend_spec", default=None,
              help="scripted:<dataset.jsonl>, 'scripted' (testset-programmed), or URL.")
@click.option("-k", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--points", type=int, default=2000, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Write report.json/.txt/.csv (and figures) here.")
@click.option("--figures/--no-figures", default=True, show_default=True)
def eval_cmd(testset, results_path, backend_spec, k, seed, points, out_dir, figures):
    """Score results against a testset; prints the standard metric table."""
    from .harness import evaluate_files
    from .metrics import save_report

    try:
        backend = None
        if backend_spec == "scripted":
            backend = _make_backend(f"scripted:{testset}")
        elif backend_spec:
            backend = _make_backend(backend_spec)
        report = evaluate_files(
            testset_path=testset,
            results_path=results_path,
            backend=backend,
            k=k,
            seed=seed,
            n_points=points,
        )
        if out_dir:
            save_report(report, out_dir, figures=figures)
    except SecadError as exc:
        _fail(exc)
    click.echo(report.table())


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8008, show_default=True)
def serve(config_path, host, port):
    """Run the HTTP editing service."""
    from .service import serve as run_serve
    from .store import StoreConfig, load_config

    try:
        config = load_config(config_path) if config_path else StoreConfig()
        run_serve(config, host=host, port=port)
    except SecadError as exc:
        _fail(exc)


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True,
              help="Destination: .obj mesh, .png preview, or .xyz point cloud.")
@click.option("--points", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def render(model_path, out_path, points, seed):
    """Export geometry for one model."""
    from .cad_seq import parse
    from .geometry import assemble, export_obj, export_xyz, mesh, render_preview, sample_point_cloud

    try:
        model = parse(Path(model_path).read_text(encoding="utf-8").strip())
        suffix = Path(out_path).suffix.lower()
        if suffix == ".obj":
            Path(out_path).write_text(export_obj(mesh(model)), encoding="utf-8")
        elif suffix == ".png":
            Path(out_path).write_bytes(render_preview(mesh(model)).to_png())
        elif suffix == ".xyz":
            cloud = sample_point_cloud(assemble(model), n=points, seed=seed)
            Path(out_path).write_text(export_xyz(cloud), encoding="utf-8")
        else:
            raise SecadError(f"unsupported output format {suffix!r} (use .obj, .png, or .xyz)")
    except SecadError as exc:
        _fail(exc)
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
