"""One prompt-engineering iteration: generate, retrieve, embed, project,
cluster, mine, place; then answer evaluation and selection queries.

A session is immutable once created except for its per-criterion rating
cache.  Refining the prompt means creating a new session.  With mock
backends and a fixed seed the whole pipeline is deterministic, and saved
sessions are byte-identical across runs (the creation timestamp is an
injectable input for exactly that reason).

Keyword mining runs over the retrieved prompts only: every generated image
shares the user's prompt, which would distort document frequencies.
Generated records still take part in layout, evaluation and selection.

On disk (save_session):

    session.json    scalar state, layout, tree, keywords, placements, ratings
    features.pmeb   N x 1024 concatenated text+image features, session row order
    images/         one PNG per generated record
"""

from __future__ import annotations

import json
import re
import struct
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from . import backends as backends_mod
from . import keywords as kw
from ._hashing import fnv1a64
from .backends import Backends, concat_features
from .clustering import ClusterNode, ClusterTree, build_dendrogram, mark_eligibility
from .corpus import CorpusHandle, PromptImageRecord, read_pmeb, write_pmeb
from .errors import (
    CorpusNotLoaded,
    EmptySelection,
    IoError,
    PipelineFailure,
    PromptmapError,
    UnknownRecord,
    VersionMismatch,
)
from .evaluation import (
    Criterion,
    Histogram,
    Rating,
    build_criterion,
    histogram,
    rate_with_templates,
    rating_histogram,
)
from .keywords import ClusterDocs, KeywordScore, Term
from .layout import (
    DEFAULT_LEVELS,
    KeywordPlacement,
    LodAssignment,
    assign_lod,
    bounding_box_diagonal,
    jitter_collisions,
    keyword_position,
    point_levels,
)
from .projection import TsneParams, project
from .retrieval import retrieve_top_k

SESSION_VERSION = 1
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class SessionInput:
    prompt: str
    gs_min: float = 7.5
    gs_max: float = 7.5
    n_generate: int = 4
    k_retrieve: int = 500
    rng_seed: int = 0

    def validate(self) -> None:
        if not self.prompt or not self.prompt.strip():
            raise ValueError("prompt must be nonempty")
        if not (0 < self.gs_min <= self.gs_max):
            raise ValueError(f"need 0 < gs_min <= gs_max, got [{self.gs_min}, {self.gs_max}]")
        if self.n_generate < 0 or self.k_retrieve < 0:
            raise ValueError("n_generate and k_retrieve must be >= 0")
        if self.n_generate + self.k_retrieve < 1:
            raise ValueError("need at least one generated or retrieved record")


@dataclass(frozen=True)
class SessionConfig:
    keywords_per_cluster: int = 5
    max_gram: int = 3
    min_leaves: int = 3
    max_leaves: int = 20
    dist_factor: float = 2.0
    lod_levels: int = DEFAULT_LEVELS
    tsne_iterations: int = 1000
    tsne_perplexity: float = 30.0
    image_size: int = 512


@dataclass(frozen=True)
class PromptDetail:
    record_id: str
    prompt: str
    spans: tuple[tuple[str, int, int], ...]   # (term text, char start, char end)


@dataclass(frozen=True)
class SelectionReport:
    keywords: tuple[KeywordScore, ...]
    incidence: tuple[tuple[str, str], ...]    # (term text, record id)
    guidance_histogram: Histogram
    prompts: tuple[PromptDetail, ...]


@dataclass
class SessionState:
    input: SessionInput
    config: SessionConfig
    records: list[PromptImageRecord]          # session row order
    features: np.ndarray                      # (N, 1024) float32
    layout: dict[str, tuple[float, float]]
    tree: Optional[ClusterTree]
    eligible_ids: list[int]
    keywords: list[KeywordScore]              # final mined+matched+deduped set
    placements: list[KeywordPlacement]
    lod: LodAssignment
    record_levels: dict[str, int]
    image_bytes: dict[str, bytes]             # generated record id -> PNG
    created_at: float
    ratings: dict[str, dict] = field(default_factory=dict)   # criterion key -> payload

    def record(self, record_id: str) -> PromptImageRecord:
        for rec in self.records:
            if rec.id == record_id:
                return rec
        raise UnknownRecord(record_id)

    @property
    def retrieved(self) -> list[PromptImageRecord]:
        return [r for r in self.records if r.source == "db"]

    @property
    def generated(self) -> list[PromptImageRecord]:
        return [r for r in self.records if r.source == "generated"]

    def image_feature(self, record: PromptImageRecord) -> np.ndarray:
        return self.features[record.row, 512:]


def _generated_id(index: int, prompt: str, guidance: float, seed: int) -> str:
    key = prompt.encode("utf-8") + struct.pack("<dQ", guidance, seed)
    return f"g{index:03d}-{fnv1a64(key) & 0xFFFFFFFF:08x}"


def _stage(name: str):
    """Wrap non-promptmap exceptions of a pipeline stage."""

    class _ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is None or isinstance(exc, PromptmapError):
                return False
            raise PipelineFailure(name, exc) from exc

    return _ctx()


def create_session(
    session_input: SessionInput,
    corpus: Optional[CorpusHandle],
    backends: Backends,
    config: SessionConfig = SessionConfig(),
    created_at: Optional[float] = None,
) -> SessionState:
    """Run the full pipeline for one iteration."""
    session_input.validate()
    created_at = time.time() if created_at is None else created_at

    with _stage("embed_prompt"):
        prompt_vec = backends.embedder.embed_text(session_input.prompt)

    retrieved_records: list[PromptImageRecord] = []
    retrieved_text: list[np.ndarray] = []
    retrieved_image: list[np.ndarray] = []
    if session_input.k_retrieve > 0:
        if corpus is None:
            raise CorpusNotLoaded("retrieval requested but no corpus is loaded")
        with _stage("retrieve"):
            scored = retrieve_top_k(corpus, prompt_vec, session_input.k_retrieve)
            for s in scored:
                rec = corpus.get_record(s.id)
                retrieved_records.append(rec)
                retrieved_text.append(corpus.text_features[rec.row])
                retrieved_image.append(corpus.image_features[rec.row])

    generation_results: list = []
    if session_input.n_generate > 0:
        with _stage("generate"):
            generation_results = backends_mod.generate_images(
                backends,
                session_input.prompt,
                session_input.gs_min,
                session_input.gs_max,
                session_input.n_generate,
                session_input.rng_seed,
                width=config.image_size,
                height=config.image_size,
            )

    with _stage("embed_images"):
        generated_image_vecs = [
            backends.embedder.embed_image(res.image_bytes) for res in generation_results
        ]

    with _stage("assemble"):
        records: list[PromptImageRecord] = []
        feature_rows: list[np.ndarray] = []
        image_bytes: dict[str, bytes] = {}
        for i, rec in enumerate(retrieved_records):
            records.append(
                PromptImageRecord(
                    id=rec.id,
                    prompt=rec.prompt,
                    image_ref=rec.image_ref,
                    guidance_scale=rec.guidance_scale,
                    seed=rec.seed,
                    source="db",
                    row=i,
                )
            )
            feature_rows.append(concat_features(retrieved_text[i], retrieved_image[i]))
        base = len(retrieved_records)
        for i, res in enumerate(generation_results):
            rid = _generated_id(
                i, session_input.prompt, res.request.guidance_scale, res.request.seed
            )
            records.append(
                PromptImageRecord(
                    id=rid,
                    prompt=session_input.prompt,
                    image_ref=f"images/{rid}.png",
                    guidance_scale=res.request.guidance_scale,
                    seed=res.request.seed,
                    source="generated",
                    row=base + i,
                )
            )
            feature_rows.append(concat_features(prompt_vec, generated_image_vecs[i]))
            image_bytes[rid] = res.image_bytes
        features = (
            np.stack(feature_rows).astype(np.float32)
            if feature_rows
            else np.zeros((0, 1024), dtype=np.float32)
        )

    with _stage("project"):
        params = TsneParams(
            perplexity=config.tsne_perplexity,
            iterations=config.tsne_iterations,
            rng_seed=session_input.rng_seed,
        )
        points = project(features, params).points
        layout = {
            rec.id: (float(points[rec.row, 0]), float(points[rec.row, 1])) for rec in records
        }

    tree: Optional[ClusterTree] = None
    eligible: list[ClusterNode] = []
    if retrieved_records:
        with _stage("cluster"):
            session_retrieved = [r for r in records if r.source == "db"]
            tree = build_dendrogram([(r.id, layout[r.id]) for r in session_retrieved])
            eligible = mark_eligibility(
                tree,
                min_leaves=config.min_leaves,
                max_leaves=config.max_leaves,
                dist_factor=config.dist_factor,
            )

    with _stage("mine_keywords"):
        final_keywords, placements = _mine_and_place(
            records, layout, tree, eligible, session_input, config
        )

    with _stage("lod"):
        if tree is not None:
            lod = assign_lod(tree, config.lod_levels, eligible, layout)
        else:
            lod = LodAssignment(levels=config.lod_levels, node_levels={}, representatives={})
        record_levels = point_levels(lod, [r.id for r in records])
        leveled_placements = [
            KeywordPlacement(
                term=p.term,
                position=p.position,
                level=lod.node_levels.get(p.anchor_cluster, lod.levels - 1),
                anchor_cluster=p.anchor_cluster,
                image_ids=p.image_ids,
            )
            for p in placements
        ]

    return SessionState(
        input=session_input,
        config=config,
        records=records,
        features=features,
        layout=layout,
        tree=tree,
        eligible_ids=[n.node_id for n in eligible],
        keywords=final_keywords,
        placements=leveled_placements,
        lod=lod,
        record_levels=record_levels,
        image_bytes=image_bytes,
        created_at=created_at,
    )


def _term_count(term: Term, tokens: list[str]) -> int:
    t = term.tokens
    n = len(t)
    return sum(1 for i in range(len(tokens) - n + 1) if tuple(tokens[i : i + n]) == t)


def _mine_and_place(
    records: list[PromptImageRecord],
    layout: dict[str, tuple[float, float]],
    tree: Optional[ClusterTree],
    eligible: list[ClusterNode],
    session_input: SessionInput,
    config: SessionConfig,
) -> tuple[list[KeywordScore], list[KeywordPlacement]]:
    retrieved = [r for r in records if r.source == "db"]
    if tree is None or not eligible or not retrieved:
        return [], []

    by_id = {r.id: r for r in retrieved}
    corpus_prompts = [r.prompt for r in retrieved]
    clusters = [
        ClusterDocs(
            cluster_id=node.node_id,
            leaf_count=node.leaf_count,
            prompts=tuple(by_id[rid].prompt for rid in node.leaf_ids),
        )
        for node in eligible
    ]
    table = kw.compute_tfidf(clusters, corpus_prompts, max_n=config.max_gram)

    candidate_terms: dict[Term, None] = {}
    for node in eligible:
        for score in kw.top_keywords(table, node.node_id, config.keywords_per_cluster):
            candidate_terms.setdefault(score.term, None)

    grouped: dict[int, list[KeywordScore]] = {}
    for term in candidate_terms:
        best = kw.match_keyword(term, table)
        grouped.setdefault(best, []).append(table.cluster_scores(best)[term])

    final: list[KeywordScore] = []
    for cluster_id in sorted(grouped):
        ranked = sorted(grouped[cluster_id], key=lambda s: (-s.tfidf, -s.term.n, s.term.text))
        final.extend(kw.dedup_subgrams(ranked))

    token_cache = {r.id: kw.tokenize(r.prompt) for r in retrieved}
    placements: list[KeywordPlacement] = []
    for score in final:
        contributions = []
        image_ids = []
        for rec in retrieved:
            count = _term_count(score.term, token_cache[rec.id])
            if count >= 1:
                contributions.append((layout[rec.id], count))
                image_ids.append(rec.id)
        if not contributions:
            continue
        placements.append(
            KeywordPlacement(
                term=score.term,
                position=keyword_position(score.term, contributions),
                level=0,  # assigned after LOD
                anchor_cluster=score.best_cluster,
                image_ids=tuple(image_ids),
            )
        )

    diag = bounding_box_diagonal(list(layout.values()))
    if placements and diag > 0:
        placements = jitter_collisions(placements, 0.01 * diag, session_input.rng_seed)
    return final, placements


def _criterion_key(criterion: Criterion) -> str:
    return json.dumps([criterion.keyword_a, criterion.keyword_b])


def evaluate_session(
    state: SessionState,
    criterion: Criterion,
    embedder,
    bins: int = 20,
) -> tuple[list[Rating], Histogram]:
    """Rate every session record against the criterion; cached per criterion."""
    key = _criterion_key(criterion)
    cached = state.ratings.get(key)
    if cached is None:
        a_vec = embedder.embed_text(criterion.text_a)
        b_vec = embedder.embed_text(criterion.text_b)
        entries = {}
        for rec in state.records:
            rating = rate_with_templates(state.image_feature(rec), a_vec, b_vec, rec.id)
            entries[rec.id] = {"s1": rating.s1, "s2": rating.s2, "s_bar": rating.s_bar}
        cached = {"a": criterion.keyword_a, "b": criterion.keyword_b, "entries": entries}
        state.ratings[key] = cached
    ratings = [
        Rating(rec.id, *(cached["entries"][rec.id][k] for k in ("s1", "s2", "s_bar")))
        for rec in state.records
    ]
    return ratings, rating_histogram(ratings, bins)


def find_term_spans(prompt: str, term: Term) -> list[tuple[int, int]]:
    """Character spans where the term occurs as a token sequence.

    Token-sequence matching (not substring) so "cat" never highlights the
    inside of "category"; matching is case-insensitive.
    """
    matches = list(_TOKEN_RE.finditer(prompt))
    lowered = [m.group().lower() for m in matches]
    target = list(term.tokens)
    n = len(target)
    spans = []
    for i in range(len(lowered) - n + 1):
        if lowered[i : i + n] == target:
            spans.append((matches[i].start(), matches[i + n - 1].end()))
    return spans


def select_images(
    state: SessionState, record_ids: list[str], top_k: int = 10
) -> SelectionReport:
    """Keywords, keyword-image incidence, guidance histogram and prompt
    details for a brushed selection."""
    if not record_ids:
        raise EmptySelection("no records selected")
    selected = [state.record(rid) for rid in record_ids]

    corpus_prompts = [r.prompt for r in state.retrieved]
    keywords = (
        kw.selection_keywords(
            [r.prompt for r in selected], corpus_prompts, k=top_k, max_n=state.config.max_gram
        )
        if corpus_prompts
        else []
    )

    incidence: list[tuple[str, str]] = []
    token_cache = {r.id: kw.tokenize(r.prompt) for r in selected}
    for score in keywords:
        for rid in sorted(r.id for r in selected):
            if _term_count(score.term, token_cache[rid]) >= 1:
                incidence.append((score.term.text, rid))

    scales = [r.guidance_scale for r in selected if r.guidance_scale is not None]
    if scales:
        guidance_hist = histogram(scales, bins=10, lo=min(scales), hi=max(scales))
    else:
        guidance_hist = Histogram(lo=0.0, hi=0.0, counts=tuple([0] * 10))

    prompts = []
    for rec in selected:
        spans: list[tuple[str, int, int]] = []
        for score in keywords:
            for start, end in find_term_spans(rec.prompt, score.term):
                spans.append((score.term.text, start, end))
        spans.sort(key=lambda s: (s[1], s[2], s[0]))
        prompts.append(PromptDetail(rec.id, rec.prompt, tuple(spans)))

    return SelectionReport(
        keywords=tuple(keywords),
        incidence=tuple(incidence),
        guidance_histogram=guidance_hist,
        prompts=tuple(prompts),
    )


# persistence -----------------------------------------------------------


def _tree_to_obj(tree: Optional[ClusterTree]) -> Optional[dict]:
    if tree is None:
        return None
    return {
        "nodes": [
            {
                "node_id": n.node_id,
                "children": list(n.children) if n.children else None,
                "leaf_record_id": n.leaf_record_id,
                "merge_distance": n.merge_distance,
                "leaf_count": n.leaf_count,
                "centroid": [n.centroid[0], n.centroid[1]],
                "eligible": n.eligible,
            }
            for n in tree.nodes
        ],
        "root": tree.root,
        "merge_order": list(tree.merge_order),
    }


def _tree_from_obj(obj: Optional[dict]) -> Optional[ClusterTree]:
    if obj is None:
        return None
    raw = obj["nodes"]
    nodes: list[Optional[ClusterNode]] = [None] * len(raw)

    def build(i: int) -> ClusterNode:
        if nodes[i] is not None:
            return nodes[i]
        spec = raw[i]
        children = spec["children"]
        if children is None:
            leaf_ids: tuple[str, ...] = (spec["leaf_record_id"],)
        else:
            leaf_ids = build(children[0]).leaf_ids + build(children[1]).leaf_ids
        nodes[i] = ClusterNode(
            node_id=spec["node_id"],
            children=tuple(children) if children else None,
            leaf_record_id=spec["leaf_record_id"],
            merge_distance=spec["merge_distance"],
            leaf_count=spec["leaf_count"],
            centroid=(spec["centroid"][0], spec["centroid"][1]),
            leaf_ids=leaf_ids,
            eligible=spec["eligible"],
        )
        return nodes[i]

    for i in range(len(raw)):
        build(i)
    return ClusterTree(nodes=list(nodes), root=obj["root"], merge_order=list(obj["merge_order"]))


def session_to_obj(state: SessionState) -> dict:
    return {
        "version": SESSION_VERSION,
        "created_at": state.created_at,
        "input": asdict(state.input),
        "config": asdict(state.config),
        "records": [r.to_manifest_obj() for r in state.records],
        "layout": {rid: [x, y] for rid, (x, y) in state.layout.items()},
        "tree": _tree_to_obj(state.tree),
        "eligible": list(state.eligible_ids),
        "keywords": [
            {
                "term": s.term.text,
                "n": s.term.n,
                "cluster_id": s.cluster_id,
                "tf": s.tf,
                "idf": s.idf,
                "tfidf": s.tfidf,
                "normalized": s.normalized,
                "best_cluster": s.best_cluster,
            }
            for s in state.keywords
        ],
        "placements": [
            {
                "term": p.term.text,
                "n": p.term.n,
                "position": [p.position[0], p.position[1]],
                "level": p.level,
                "anchor_cluster": p.anchor_cluster,
                "image_ids": list(p.image_ids),
            }
            for p in state.placements
        ],
        "lod": {
            "levels": state.lod.levels,
            "node_levels": {str(k): v for k, v in state.lod.node_levels.items()},
            "representatives": {str(k): v for k, v in state.lod.representatives.items()},
        },
        "record_levels": dict(state.record_levels),
        "ratings": state.ratings,
    }


def save_session(state: SessionState, directory) -> None:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(session_to_obj(state), sort_keys=True, indent=2, ensure_ascii=False)
        (directory / "session.json").write_text(payload + "\n", encoding="utf-8")
        write_pmeb(directory / "features.pmeb", state.features)
        images = directory / "images"
        images.mkdir(exist_ok=True)
        for rid, data in state.image_bytes.items():
            (images / f"{rid}.png").write_bytes(data)
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_session(directory) -> SessionState:
    directory = Path(directory)
    path = directory / "session.json"
    if not path.exists():
        raise IoError(f"{path}: no such file")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"{path}: {exc}") from exc
    if obj.get("version") != SESSION_VERSION:
        raise VersionMismatch(f"session version {obj.get('version')!r}, expected {SESSION_VERSION}")

    features = read_pmeb(directory / "features.pmeb", expect_dim=1024)
    records = [PromptImageRecord.from_manifest_obj(r) for r in obj["records"]]
    image_bytes = {}
    for rec in records:
        if rec.source == "generated":
            img_path = directory / "images" / f"{rec.id}.png"
            if img_path.exists():
                image_bytes[rec.id] = img_path.read_bytes()

    keywords = [
        KeywordScore(
            term=Term(k["term"], k["n"]),
            cluster_id=k["cluster_id"],
            tf=k["tf"],
            idf=k["idf"],
            tfidf=k["tfidf"],
            normalized=k["normalized"],
            best_cluster=k["best_cluster"],
        )
        for k in obj["keywords"]
    ]
    placements = [
        KeywordPlacement(
            term=Term(p["term"], p["n"]),
            position=(p["position"][0], p["position"][1]),
            level=p["level"],
            anchor_cluster=p["anchor_cluster"],
            image_ids=tuple(p["image_ids"]),
        )
        for p in obj["placements"]
    ]
    lod = LodAssignment(
        levels=obj["lod"]["levels"],
        node_levels={int(k): v for k, v in obj["lod"]["node_levels"].items()},
        representatives={int(k): v for k, v in obj["lod"]["representatives"].items()},
    )
    return SessionState(
        input=SessionInput(**obj["input"]),
        config=SessionConfig(**obj["config"]),
        records=records,
        features=features,
        layout={rid: (xy[0], xy[1]) for rid, xy in obj["layout"].items()},
        tree=_tree_from_obj(obj["tree"]),
        eligible_ids=list(obj["eligible"]),
        keywords=keywords,
        placements=placements,
        lod=lod,
        record_levels=dict(obj["record_levels"]),
        image_bytes=image_bytes,
        created_at=obj["created_at"],
        ratings=obj["ratings"],
    )
