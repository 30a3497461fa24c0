"""Command-line entry points: serving, evaluation suites, data generation,
index building, recall evaluation, and the business scenario scripts."""

from __future__ import annotations

import json
import sys

import click

from . import annotation, datagen, replay, report, retrieval, scenarios
from .config import ConfigError, load_config


@click.group()
def main():
    """Office-collaboration agents: simulator, pipeline, datagen, evaluation."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, host, port):
    """Run the HTTP chat/trace service."""
    import uvicorn

    from .service import create_app

    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    if host:
        cfg.host = host
    if port:
        cfg.port = port
    app = create_app(cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port)


@main.command("datagen")
@click.argument("flow", default="mixed")
@click.option("--count", default=100, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--noise", default=0.0, show_default=True)
@click.option("--out", type=click.Path(), default="samples.jsonl", show_default=True)
@click.option("--annotations-out", type=click.Path(), default=None)
def datagen_cmd(flow, count, seed, noise, out, annotations_out):
    """Generate dialogue samples for FLOW and write them as JSONL."""
    try:
        samples = datagen.run_flow(flow, count, seed, noise)
    except KeyError as exc:
        raise click.ClickException(str(exc))
    datagen.export_jsonl(samples, out)
    click.echo(f"wrote {len(samples)} samples to {out}")
    if annotations_out:
        annotation.export_annotation_file(samples, annotations_out)
        click.echo(f"wrote annotation tasks to {annotations_out}")


@main.command("index-build")
@click.option("--out", type=click.Path(), default="tool_index.json", show_default=True)
@click.option("--dim", default=256, show_default=True)
def index_build(out, dim):
    """Embed the tool catalog and persist the retrieval index."""
    index = retrieval.build_index(dim=dim)
    retrieval.save_index(index, out)
    click.echo(f"wrote index ({index.embedder_id}, {len(index.names)} tools) to {out}")


@main.command("recall-eval")
@click.option("--k", "ks", multiple=True, type=int, default=(3, 5), show_default=True)
@click.option("--count", default=200, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--index", "index_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None)
def recall_eval(ks, count, seed, index_path, out):
    """Build v1/v2 recall sets from generated dialogues and report top-k recall."""
    index = retrieval.load_index(index_path) if index_path else retrieval.build_index()
    samples = datagen.run_flow("mixed", count, seed)
    single = [s for s in samples if len(s.transition_path) < 2]
    multi = [s for s in samples if len(s.transition_path) == 2]
    rows = {}
    for version, builder in (
        ("v1", lambda ss: retrieval.build_pairs_v1(ss).pairs),
        ("v2", lambda ss: retrieval.build_pairs_v2(ss, seed)),
    ):
        values = {}
        for intent_name, subset in (("single", single), ("multi", multi)):
            pairs = builder(subset)
            for k in ks:
                values[f"{intent_name}_top{k}"] = retrieval.eval_recall(index, pairs, k)
        rows[version] = values
    rep = report.build_recall_report(rows)
    click.echo(rep.to_text())
    if out:
        with open(out, "w") as fh:
            fh.write(report.reports_to_json([rep]))
        click.echo(f"wrote {out}")


@main.command("eval")
@click.argument(
    "suite", type=click.Choice(["rewrite", "recall", "planner", "solver", "all"])
)
@click.option("--count", default=200, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--noise", default=0.0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def eval_cmd(ctx, suite, count, seed, noise, out):
    """Generate a desk-scale dataset, replay the reference pipeline, report."""
    samples = datagen.run_flow("mixed", count, seed, noise)
    result = replay.replay_samples(samples)
    scores = result.scores()
    version = f"seed{seed}-n{noise}"
    reports = []
    if suite in ("rewrite", "all"):
        reports.append(report.build_rewrite_report(scores, version=version))
    if suite in ("recall", "all"):
        ctx.invoke(recall_eval, ks=(3, 5), count=count, seed=seed, index_path=None, out=None)
    if suite in ("planner", "all"):
        reports.append(report.build_planner_report(scores, version=version))
    if suite in ("solver", "all"):
        reports.append(report.build_solver_report(scores, version=version))
    if reports:
        click.echo(report.render_reports(reports))
    if out:
        with open(out, "w") as fh:
            json.dump({"scores": scores, "reports": [r.to_dict() for r in reports]}, fh, indent=2)
        click.echo(f"wrote {out}")


@main.command("scenario")
@click.argument("name", default="all")
@click.option("--fault", default=None, help="api_name:mode fault to inject first")
def scenario_cmd(name, fault):
    """Replay the business scenario scripts end-to-end and diff simulator state."""
    fault_tuple = None
    if fault:
        api_name, _, mode = fault.partition(":")
        fault_tuple = (api_name, mode or "fail_once")
    try:
        results = (
            scenarios.run_all(fault=fault_tuple)
            if name == "all"
            else [scenarios.run_scenario(name, fault=fault_tuple)]
        )
    except KeyError as exc:
        raise click.ClickException(str(exc))
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        click.echo(f"[{status}] {res.name}")
        for failure in res.failures:
            click.echo(f"    {failure}")
        failed += 0 if res.passed else 1
    if failed:
        raise SystemExit(1)


if __name__ == "__main__":
    sys.exit(main())
