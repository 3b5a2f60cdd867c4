"""Cluster-level keyword mining over prompt text.

Pipeline: tokenize prompts, extract candidate n-gram terms (n = 1..3),
score every term per cluster with cluster-level TF-IDF, pick the top terms
per cluster, match each term to the cluster where its normalized score
peaks, and drop terms that are sub-grams of longer retained terms.

Scoring, for term t_i in cluster c_x over corpus D of prompt documents:

    n_(i,x)  = total occurrences of t_i across the cluster's prompts
    tf_(i,x) = n_(i,x) / sum_k n_(k,x)      (k ranges over ALL candidate
                                             terms of the cluster, every
                                             gram order pooled)
    idf_i    = log10(|D| / |{j : t_i in d_j}|)
    tfidf    = tf * idf

Rankings are invariant to the log base (a positive constant factor), so
base 10 is a presentation choice.  Scores are max-normalized per cluster
before cross-cluster matching.

Stopwords never start or end a term, but may appear inside one ("trending
on artstation").  The list ships with the package; no NLP toolkit involved.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

from .errors import EmptyCorpus, EmptySelection, UnknownCluster, UnknownTerm

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

DEFAULT_MAX_N = 3
DEFAULT_TOP_K = 5


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = resources.files("promptmap.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class Term:
    text: str   # lowercase tokens joined by single spaces
    n: int      # gram order

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self.text.split(" "))


@dataclass(frozen=True)
class KeywordScore:
    term: Term
    cluster_id: int
    tf: float
    idf: float
    tfidf: float
    normalized: float
    best_cluster: int


@dataclass(frozen=True)
class ClusterDocs:
    """A mining unit: cluster id, its size in images, its prompt documents."""

    cluster_id: int
    leaf_count: int
    prompts: tuple[str, ...]


def tokenize(prompt: str) -> list[str]:
    """Lowercase tokens; any non-alphanumeric character splits."""
    return _TOKEN_RE.findall(prompt.lower())


def extract_terms(
    tokens: list[str],
    max_n: int = DEFAULT_MAX_N,
    stop: frozenset[str] | None = None,
) -> list[Term]:
    """All contiguous n-grams (n=1..max_n) not starting/ending on a stopword.

    Duplicates are preserved: each occurrence counts once.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    stop = stopwords() if stop is None else stop
    out: list[Term] = []
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            gram = tokens[i : i + n]
            if gram[0] in stop or gram[-1] in stop:
                continue
            out.append(Term(" ".join(gram), n))
    return out


class KeywordTable:
    """TF-IDF scores for every (cluster, term) pair plus corpus statistics."""

    def __init__(
        self,
        scores: dict[int, dict[Term, KeywordScore]],
        doc_freq: dict[Term, int],
        n_docs: int,
        cluster_sizes: dict[int, int],
    ):
        self.scores = scores
        self.doc_freq = doc_freq
        self.n_docs = n_docs
        self.cluster_sizes = cluster_sizes

    def clusters(self) -> list[int]:
        return list(self.scores)

    def cluster_scores(self, cluster_id: int) -> dict[Term, KeywordScore]:
        try:
            return self.scores[cluster_id]
        except KeyError:
            raise UnknownCluster(f"cluster {cluster_id} not in table") from None


def _doc_term_counts(prompt: str, max_n: int, stop: frozenset[str]) -> Counter:
    return Counter(extract_terms(tokenize(prompt), max_n, stop))


def compute_tfidf(
    clusters: list[ClusterDocs],
    corpus_prompts: list[str],
    max_n: int = DEFAULT_MAX_N,
) -> KeywordTable:
    """Cluster-level TF-IDF for every candidate term of every cluster."""
    if not corpus_prompts:
        raise EmptyCorpus("TF-IDF needs at least one corpus prompt")
    stop = stopwords()
    n_docs = len(corpus_prompts)
    doc_terms = [set(_doc_term_counts(p, max_n, stop)) for p in corpus_prompts]
    doc_freq: Counter = Counter()
    for terms in doc_terms:
        doc_freq.update(terms)

    scores: dict[int, dict[Term, KeywordScore]] = {}
    cluster_sizes: dict[int, int] = {}
    for cluster in clusters:
        counts: Counter = Counter()
        for prompt in cluster.prompts:
            counts.update(_doc_term_counts(prompt, max_n, stop))
        total = sum(counts.values())
        table: dict[Term, KeywordScore] = {}
        if total > 0:
            raw: dict[Term, tuple[float, float, float]] = {}
            for term, n_ix in counts.items():
                df = doc_freq.get(term, 0)
                if df == 0:
                    continue  # term absent from the reference corpus
                tf = n_ix / total
                idf = math.log10(n_docs / df)
                raw[term] = (tf, idf, tf * idf)
            max_tfidf = max((v[2] for v in raw.values()), default=0.0)
            for term, (tf, idf, tfidf) in raw.items():
                normalized = tfidf / max_tfidf if max_tfidf > 0 else 0.0
                table[term] = KeywordScore(
                    term=term,
                    cluster_id=cluster.cluster_id,
                    tf=tf,
                    idf=idf,
                    tfidf=tfidf,
                    normalized=normalized,
                    best_cluster=cluster.cluster_id,  # provisional, fixed below
                )
        scores[cluster.cluster_id] = table
        cluster_sizes[cluster.cluster_id] = cluster.leaf_count

    out = KeywordTable(scores, dict(doc_freq), n_docs, cluster_sizes)
    _assign_best_clusters(out)
    return out


def _assign_best_clusters(table: KeywordTable) -> None:
    all_terms: set[Term] = set()
    for per_cluster in table.scores.values():
        all_terms.update(per_cluster)
    best: dict[Term, int] = {}
    for term in all_terms:
        best[term] = match_keyword(term, table)
    for cid, per_cluster in table.scores.items():
        for term in list(per_cluster):
            per_cluster[term] = replace(per_cluster[term], best_cluster=best[term])


def match_keyword(term: Term, table: KeywordTable) -> int:
    """Best cluster for a term: argmax of normalized TF-IDF.

    Ties break by higher raw tfidf, then smaller cluster leaf count,
    then lower node id.
    """
    candidates = []
    for cid, per_cluster in table.scores.items():
        if term in per_cluster:
            s = per_cluster[term]
            candidates.append(
                (-s.normalized, -s.tfidf, table.cluster_sizes.get(cid, 0), cid)
            )
    if not candidates:
        raise UnknownTerm(f"term {term.text!r} occurs in no cluster")
    return min(candidates)[3]


def top_keywords(table: KeywordTable, cluster_id: int, k: int = DEFAULT_TOP_K) -> list[KeywordScore]:
    """k highest-tfidf terms of a cluster; ties prefer longer grams, then
    lexicographic order."""
    per_cluster = table.cluster_scores(cluster_id)
    ranked = sorted(per_cluster.values(), key=lambda s: (-s.tfidf, -s.term.n, s.term.text))
    return ranked[:k]


def _is_subgram(inner: tuple[str, ...], outer: tuple[str, ...]) -> bool:
    if len(inner) >= len(outer):
        return False
    return any(outer[i : i + len(inner)] == inner for i in range(len(outer) - len(inner) + 1))


def dedup_subgrams(keyword_scores: list[KeywordScore]) -> list[KeywordScore]:
    """Drop terms that are contiguous sub-sequences of a longer retained term.

    Longer terms win: candidates are considered in decreasing gram order, and
    a term survives only if no already-retained term contains it.  Output
    preserves the input ordering of the survivors.
    """
    by_length = sorted(keyword_scores, key=lambda s: -s.term.n)
    retained: list[tuple[str, ...]] = []
    kept: set[Term] = set()
    for score in by_length:
        tokens = score.term.tokens
        if score.term in kept:
            continue
        if any(_is_subgram(tokens, other) for other in retained):
            continue
        retained.append(tokens)
        kept.add(score.term)
    seen: set[Term] = set()
    out = []
    for score in keyword_scores:
        if score.term in kept and score.term not in seen:
            out.append(score)
            seen.add(score.term)
    return out


def selection_keywords(
    selected_prompts: list[str],
    corpus_prompts: list[str],
    k: int = 10,
    max_n: int = DEFAULT_MAX_N,
) -> list[KeywordScore]:
    """Keywords of an ad-hoc selection, scored against the session corpus.

    The selection acts as a single cluster; terms missing from the corpus
    have no defined idf and are skipped.
    """
    if not selected_prompts:
        raise EmptySelection("no prompts selected")
    if not corpus_prompts:
        return []
    table = compute_tfidf(
        [ClusterDocs(cluster_id=-1, leaf_count=len(selected_prompts), prompts=tuple(selected_prompts))],
        corpus_prompts,
        max_n=max_n,
    )
    return dedup_subgrams(top_keywords(table, -1, k))
