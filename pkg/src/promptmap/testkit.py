"""Independent brute-force oracles and synthetic data generators.

Everything here is a literal, self-contained transcription of the scoring
rules and algorithms, sharing no code with the production modules (only
the committed stopword list, which is data).  Property tests compare
production output against these; `pm oracle` exposes them for manual
cross-checks.  Performance is irrelevant by design.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

_WORD = re.compile(r"[^\W_]+", re.UNICODE)


def _stopwords() -> frozenset[str]:
    text = resources.files("promptmap.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


# --- keyword scoring (Eqs. for cluster-level tf-idf) -------------------


def _candidate_terms(prompt: str, max_n: int, stop: frozenset[str]) -> list[str]:
    tokens = _WORD.findall(prompt.lower())
    grams = []
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            gram = tokens[i : i + n]
            if gram[0] in stop or gram[-1] in stop:
                continue
            grams.append(" ".join(gram))
    return grams


def oracle_tfidf(
    cluster_prompts: list[str],
    corpus_prompts: list[str],
    max_n: int = 3,
    log_base: float = 10.0,
) -> dict[str, float]:
    """term -> tf*idf for one cluster, recomputed from first principles.

    log_base defaults to 10; passing e checks that rankings and matches are
    invariant to the base (a positive constant factor).
    """
    stop = _stopwords()
    if not corpus_prompts:
        return {}
    cluster_occurrences: list[str] = []
    for prompt in cluster_prompts:
        cluster_occurrences.extend(_candidate_terms(prompt, max_n, stop))
    total = len(cluster_occurrences)
    if total == 0:
        return {}
    doc_sets = [set(_candidate_terms(p, max_n, stop)) for p in corpus_prompts]
    out: dict[str, float] = {}
    for term in set(cluster_occurrences):
        n_ix = cluster_occurrences.count(term)
        df = sum(1 for s in doc_sets if term in s)
        if df == 0:
            continue
        tf = n_ix / total
        if log_base == 10.0:
            idf = math.log10(len(corpus_prompts) / df)
        else:
            idf = math.log(len(corpus_prompts) / df, log_base)
        out[term] = tf * idf
    return out


def oracle_normalized(scores: dict[str, float]) -> dict[str, float]:
    """Per-cluster max normalization of raw tf-idf scores."""
    peak = max(scores.values(), default=0.0)
    if peak <= 0:
        return {t: 0.0 for t in scores}
    return {t: v / peak for t, v in scores.items()}


# --- agglomerative clustering ------------------------------------------


def oracle_hac(points: list[tuple[float, float]]) -> list[tuple[int, int, float]]:
    """Naive average-linkage merge sequence: (node_i, node_j, distance).

    Every step recomputes the mean pairwise leaf distance between all
    active cluster pairs from the base distance matrix (no incremental
    update).  Ties pick the lexicographically smallest (min id, max id).
    Leaves are 0..N-1; merged nodes continue from N.
    """
    n = len(points)
    P = np.asarray(points, dtype=np.float64)
    base = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
    clusters: dict[int, list[int]] = {i: [i] for i in range(n)}
    merges: list[tuple[int, int, float]] = []
    next_id = n
    while len(clusters) > 1:
        ids = sorted(clusters)
        members = [clusters[c] for c in ids]
        sizes = np.array([len(m) for m in members], dtype=np.float64)
        ind = np.zeros((len(ids), n))
        for row, m in enumerate(members):
            ind[row, m] = 1.0
        sums = ind @ base @ ind.T
        avg = sums / (sizes[:, None] * sizes[None, :])
        best = None
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                key = (float(avg[i, j]), ids[i], ids[j])
                if best is None or key < best:
                    best = key
        d, a, b = best
        merges.append((a, b, d))
        clusters[next_id] = clusters.pop(a) + clusters.pop(b)
        next_id += 1
    return merges


# --- exhaustive retrieval ----------------------------------------------


def oracle_topk(
    ids: list[str], vectors: np.ndarray, query: np.ndarray, k: int
) -> list[tuple[str, float]]:
    """Full (distance, id)-sorted scan by cosine distance."""
    q = np.asarray(query, dtype=np.float64)
    q = q / np.linalg.norm(q)
    scored = []
    for i, rid in enumerate(ids):
        v = np.asarray(vectors[i], dtype=np.float64)
        d = 1.0 - float(np.dot(v, q)) / float(np.linalg.norm(v))
        scored.append((d, rid))
    scored.sort()
    return [(rid, d) for d, rid in scored[:k]]


# --- direct equation evaluators ----------------------------------------


def oracle_weighted_position(
    images: list[tuple[tuple[float, float], int]]
) -> tuple[float, float]:
    """Count-weighted average of image positions."""
    total = sum(n for _, n in images)
    x = sum(n * p[0] for p, n in images) / total
    y = sum(n * p[1] for p, n in images) / total
    return (x, y)


def oracle_pair_rating(s1: float, s2: float) -> float:
    """Softmax of two similarities."""
    return math.exp(s1) / (math.exp(s1) + math.exp(s2))


def oracle_hash_embedding(data: bytes, dim: int = 512) -> np.ndarray:
    """Transcription of the documented mock hash expansion."""
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    state = h
    vals = []
    for _ in range(dim):
        state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        z ^= z >> 31
        vals.append((z >> 11) * 2.0**-53 * 2.0 - 1.0)
    v = np.array(vals, dtype=np.float64)
    return (v / np.linalg.norm(v)).astype(np.float32)


# --- synthetic data ------------------------------------------------------


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    n_records: int = 100
    n_blobs: int = 2
    dim: int = 512
    spread: float = 0.25
    vocabularies: tuple[tuple[str, ...], ...] = field(default_factory=tuple)
    words_per_prompt: int = 5


def default_vocabularies(n_blobs: int) -> tuple[tuple[str, ...], ...]:
    themes = [
        ("castle", "fantasy", "epic", "matte", "painting", "dragon"),
        ("cyberpunk", "neon", "city", "robot", "futuristic", "rain"),
        ("forest", "watercolor", "soft", "pastel", "meadow", "mist"),
        ("portrait", "studio", "dramatic", "lighting", "closeup", "film"),
        ("ocean", "sunset", "waves", "golden", "horizon", "cliff"),
    ]
    return tuple(themes[b % len(themes)] for b in range(n_blobs))


def make_blobs(
    spec: SyntheticCorpusSpec, seed: int
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Unit-norm features concentrated around per-blob directions, with
    per-blob prompt vocabulary so keyword mining has ground truth.

    Returns (features (n, dim) float32, labels (n,), prompts).
    """
    rng = np.random.default_rng(seed)
    vocabularies = spec.vocabularies or default_vocabularies(spec.n_blobs)
    directions = rng.normal(size=(spec.n_blobs, spec.dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)

    features = np.zeros((spec.n_records, spec.dim), dtype=np.float64)
    labels = np.zeros(spec.n_records, dtype=np.int64)
    prompts: list[str] = []
    for i in range(spec.n_records):
        blob = i % spec.n_blobs
        labels[i] = blob
        noise = rng.normal(size=spec.dim)
        noise /= np.linalg.norm(noise)     # spread is relative to the unit direction
        v = directions[blob] + spec.spread * noise
        features[i] = v / np.linalg.norm(v)
        vocab = vocabularies[blob % len(vocabularies)]
        k = min(spec.words_per_prompt, len(vocab))
        words = list(rng.choice(vocab, size=k, replace=False))
        prompts.append(" ".join(words))
    return features.astype(np.float32), labels, prompts
