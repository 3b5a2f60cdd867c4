"""The `pm` command line: ingest, serve, recommend, evaluate, oracle, demo.

Configuration file (--config) is plain KEY=VALUE text with keys mirroring
the env vars (PM_EMBEDDER_URL, PM_GENERATOR_URL, PM_SEED); real environment
variables take precedence over file entries.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import backends as backends_mod
from . import testkit
from .corpus import ingest_manifest, load_corpus, write_corpus
from .errors import PromptmapError
from .evaluation import build_criterion
from .session import (
    SessionConfig,
    SessionInput,
    create_session,
    evaluate_session,
    load_session,
    save_session,
)


def load_config_env(config_path: str | None) -> dict:
    merged: dict[str, str] = {}
    if config_path:
        for raw in Path(config_path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = line.split("=", 1)
            merged[key.strip()] = value.strip()
    merged.update(os.environ)
    return merged


def default_seed(env: dict) -> int:
    return int(env.get(backends_mod.ENV_SEED, "0"))


@click.group()
def main():
    """Prompt-engineering workbench for text-to-image generation."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def ingest(manifest, embeddings, out_dir):
    """Validate a manifest + embeddings and write a canonical index."""
    try:
        handle = ingest_manifest(manifest, embeddings)
        write_corpus(handle, out_dir)
    except PromptmapError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"ingested {handle.size} records into {out_dir}")


@main.command()
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static", "static_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def serve(index_dir, port, host, static_dir, config_path):
    """Serve the HTTP API (and optionally the web UI bundle)."""
    import uvicorn

    from .api import create_app

    env = load_config_env(config_path)
    corpus = load_corpus(index_dir)
    backends = backends_mod.from_env(env)
    app = create_app(
        corpus,
        backends,
        index_dir=Path(index_dir),
        static_dir=Path(static_dir) if static_dir else None,
        default_seed=default_seed(env),
    )
    click.echo(f"serving {corpus.size} records on {host}:{port} (backends: "
               f"{backends.embedder.kind}/{backends.generator.kind})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--prompt", required=True)
@click.option("--k", default=500, show_default=True, help="records to retrieve")
@click.option("--top", default=5, show_default=True, help="keywords per cluster")
@click.option("--seed", default=None, type=int)
@click.option("--json", "as_json", is_flag=True)
@click.option("--save", "save_dir", type=click.Path(file_okay=False),
              help="also persist the session directory")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def recommend(index_dir, prompt, k, top, seed, as_json, save_dir, config_path):
    """One-shot headless pipeline: retrieve, cluster, mine, print keywords."""
    env = load_config_env(config_path)
    corpus = load_corpus(index_dir)
    backends = backends_mod.from_env(env)
    session_input = SessionInput(
        prompt=prompt,
        n_generate=0,
        k_retrieve=k,
        rng_seed=default_seed(env) if seed is None else seed,
    )
    config = SessionConfig(keywords_per_cluster=top)
    try:
        state = create_session(session_input, corpus, backends, config)
        if save_dir:
            save_session(state, save_dir)
    except PromptmapError as exc:
        raise click.ClickException(str(exc))
    rows = [
        {
            "term": s.term.text,
            "cluster": s.best_cluster,
            "tfidf": round(s.tfidf, 6),
            "normalized": round(s.normalized, 6),
        }
        for s in state.keywords
    ]
    if as_json:
        click.echo(json.dumps(rows, indent=2))
    elif not rows:
        click.echo("no keywords (no eligible clusters)")
    else:
        width = max(len(r["term"]) for r in rows)
        for r in rows:
            click.echo(f"{r['term']:<{width}}  cluster={r['cluster']:<4}  "
                       f"tfidf={r['tfidf']:.5f}  normalized={r['normalized']:.4f}")


@main.command()
@click.option("--session", "session_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--a", "keyword_a", required=True)
@click.option("--b", "keyword_b", default=None)
@click.option("--bins", default=20, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def evaluate(session_dir, keyword_a, keyword_b, bins, as_json, config_path):
    """Rate a saved session's images against an opposing-keyword pair."""
    env = load_config_env(config_path)
    backends = backends_mod.from_env(env)
    try:
        state = load_session(session_dir)
        criterion = build_criterion(keyword_a, keyword_b)
        ratings, hist = evaluate_session(state, criterion, backends.embedder, bins)
    except PromptmapError as exc:
        raise click.ClickException(str(exc))
    if as_json:
        click.echo(json.dumps({
            "criterion": {"a": criterion.keyword_a, "b": criterion.keyword_b},
            "ratings": [{"id": r.record_id, "s_bar": r.s_bar} for r in ratings],
            "histogram": {"lo": hist.lo, "hi": hist.hi, "counts": list(hist.counts)},
        }, indent=2))
        return
    click.echo(f"criterion: {criterion.text_a!r} vs {criterion.text_b!r}")
    for r in ratings:
        click.echo(f"  {r.record_id}  {r.s_bar:.4f}")
    click.echo("histogram: " + " ".join(str(c) for c in hist.counts))


@main.group()
def oracle():
    """Run the independent reference implementations on JSON input."""


@oracle.command("tfidf")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON {cluster: [prompts], corpus: [prompts], max_n?}; stdin if omitted")
def oracle_tfidf_cmd(input_path):
    payload = json.loads(Path(input_path).read_text() if input_path else sys.stdin.read())
    scores = testkit.oracle_tfidf(
        payload["cluster"], payload["corpus"], payload.get("max_n", 3)
    )
    click.echo(json.dumps(dict(sorted(scores.items())), indent=2))


@oracle.command("hac")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON {points: [[x, y], ...]}; stdin if omitted")
def oracle_hac_cmd(input_path):
    payload = json.loads(Path(input_path).read_text() if input_path else sys.stdin.read())
    merges = testkit.oracle_hac([tuple(p) for p in payload["points"]])
    click.echo(json.dumps([[i, j, d] for i, j, d in merges], indent=2))


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--n", default=60, show_default=True)
@click.option("--blobs", default=3, show_default=True)
@click.option("--seed", default=7, show_default=True)
def demo(out_dir, n, blobs, seed):
    """Write a synthetic demo corpus index (with placeholder images)."""
    from .demo import make_demo_corpus

    handle = make_demo_corpus(out_dir, n_records=n, n_blobs=blobs, seed=seed)
    click.echo(f"wrote demo corpus with {handle.size} records to {out_dir}")


if __name__ == "__main__":
    main()
