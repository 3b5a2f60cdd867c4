import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from promptmap.errors import EmptySelection, UnknownCluster, UnknownTerm
from promptmap.keywords import (
    ClusterDocs,
    KeywordScore,
    Term,
    compute_tfidf,
    dedup_subgrams,
    extract_terms,
    match_keyword,
    selection_keywords,
    stopwords,
    tokenize,
    top_keywords,
)
from promptmap.testkit import oracle_normalized, oracle_tfidf

CORPUS = ["cat ghibli style", "cat ghibli art", "dog photo real", "dog photo hdr"]
CLUSTER_X = ClusterDocs(cluster_id=0, leaf_count=2, prompts=tuple(CORPUS[:2]))


def score(term_text, n, cluster, tfidf, normalized=1.0, leaf_count=3):
    return KeywordScore(Term(term_text, n), cluster, 0.1, 0.1, tfidf, normalized, cluster)


def test_tokenize_punctuation_and_case():
    assert tokenize("Hayao Miyazaki, Studio-Ghibli!") == ["hayao", "miyazaki", "studio", "ghibli"]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_alphanumeric():
    assert tokenize("8k, highly detailed") == ["8k", "highly", "detailed"]


def test_extract_interior_stopword_allowed():
    terms = extract_terms(["trending", "on", "artstation"])
    texts = {t.text for t in terms}
    assert texts == {"trending", "artstation", "trending on artstation"}


def test_extract_stopword_only():
    assert extract_terms(["the"]) == []


def test_extract_unreal_engine():
    texts = {t.text for t in extract_terms(["unreal", "engine"])}
    assert texts == {"unreal", "engine", "unreal engine"}


def test_extract_preserves_duplicate_occurrences():
    terms = extract_terms(["cat", "cat"], max_n=1)
    assert [t.text for t in terms] == ["cat", "cat"]


def test_tfidf_worked_example():
    table = compute_tfidf([CLUSTER_X], CORPUS, max_n=1)
    s = table.cluster_scores(0)[Term("ghibli", 1)]
    assert s.tf == pytest.approx(2 / 6)
    assert s.idf == pytest.approx(math.log10(2), abs=1e-12)
    assert s.tfidf == pytest.approx(0.10034, abs=1e-5)


def test_tfidf_matches_oracle():
    table = compute_tfidf([CLUSTER_X], CORPUS, max_n=3)
    expected = oracle_tfidf(list(CLUSTER_X.prompts), CORPUS, max_n=3)
    got = {t.text: s.tfidf for t, s in table.cluster_scores(0).items()}
    assert got.keys() == expected.keys()
    for term, value in expected.items():
        assert got[term] == pytest.approx(value, abs=1e-12)


def test_term_in_every_prompt_scores_zero():
    corpus = ["wolf night", "wolf day", "wolf dawn"]
    cluster = ClusterDocs(0, 3, tuple(corpus))
    table = compute_tfidf([cluster], corpus, max_n=1)
    assert table.cluster_scores(0)[Term("wolf", 1)].tfidf == 0.0
    assert table.cluster_scores(0)[Term("wolf", 1)].idf == 0.0


def test_single_prompt_single_term():
    table = compute_tfidf([ClusterDocs(0, 1, ("ghibli",))], ["ghibli", "other"], max_n=1)
    assert table.cluster_scores(0)[Term("ghibli", 1)].tf == 1.0


def test_tf_sums_to_one_within_cluster():
    table = compute_tfidf([CLUSTER_X], CORPUS, max_n=3)
    assert sum(s.tf for s in table.cluster_scores(0).values()) == pytest.approx(1.0)


def test_idf_nonnegative_zero_iff_everywhere():
    table = compute_tfidf([CLUSTER_X], CORPUS, max_n=3)
    for term, s in table.cluster_scores(0).items():
        assert s.idf >= 0.0
        assert (s.idf == 0.0) == (table.doc_freq[term] == len(CORPUS))


def test_top_keywords_fewer_than_k():
    table = compute_tfidf([ClusterDocs(0, 1, ("alpha beta",))], ["alpha beta", "x", "y"], max_n=1)
    got = top_keywords(table, 0, k=5)
    assert len(got) == 2
    assert got[0].tfidf >= got[1].tfidf


def test_top_keywords_tie_prefers_longer_gram():
    ranked = sorted(
        [score("cat", 1, 0, 0.5), score("cat dog", 2, 0, 0.5)],
        key=lambda s: (-s.tfidf, -s.term.n, s.term.text),
    )
    assert ranked[0].term.text == "cat dog"


def test_top_keywords_worked_tie():
    # all four unigrams of cluster x tie exactly: (2/6)*log10(2) equals
    # (1/6)*log10(4) bit-for-bit, so lexicographic order decides
    table = compute_tfidf([CLUSTER_X], CORPUS, max_n=1)
    scores = {t.text: s.tfidf for t, s in table.cluster_scores(0).items()}
    assert len(set(scores.values())) == 1
    got = top_keywords(table, 0, k=4)
    assert [s.term.text for s in got] == ["art", "cat", "ghibli", "style"]


def test_top_keywords_unknown_cluster():
    table = compute_tfidf([CLUSTER_X], CORPUS, max_n=1)
    with pytest.raises(UnknownCluster):
        top_keywords(table, 99)


def test_match_single_cluster_forced():
    table = compute_tfidf([CLUSTER_X], CORPUS, max_n=1)
    assert match_keyword(Term("ghibli", 1), table) == 0


def test_match_prefers_higher_normalized():
    c0 = ClusterDocs(0, 3, ("ghibli castle", "ghibli sky"))
    c1 = ClusterDocs(1, 3, ("ghibli robot", "neon robot", "neon city"))
    corpus = list(c0.prompts) + list(c1.prompts) + ["filler words here"]
    table = compute_tfidf([c0, c1], corpus, max_n=1)
    n0 = table.cluster_scores(0)[Term("ghibli", 1)].normalized
    n1 = table.cluster_scores(1)[Term("ghibli", 1)].normalized
    expected = 0 if n0 > n1 else 1
    assert match_keyword(Term("ghibli", 1), table) == expected


def test_match_tie_prefers_smaller_cluster():
    # identical prompt sets, different leaf counts -> equal scores everywhere
    docs = ("ghibli castle", "ghibli sky", "cloud sky")
    a = ClusterDocs(0, 12, docs)
    b = ClusterDocs(1, 5, docs)
    corpus = list(docs) + ["other things entirely"]
    table = compute_tfidf([a, b], corpus, max_n=1)
    assert match_keyword(Term("ghibli", 1), table) == 1


def test_match_unknown_term():
    table = compute_tfidf([CLUSTER_X], CORPUS, max_n=1)
    with pytest.raises(UnknownTerm):
        match_keyword(Term("zzz", 1), table)


def test_best_cluster_field_agrees_with_match():
    c0 = ClusterDocs(0, 3, ("ghibli castle", "ghibli sky"))
    c1 = ClusterDocs(1, 4, ("ghibli robot", "neon robot"))
    corpus = list(c0.prompts) + list(c1.prompts)
    table = compute_tfidf([c0, c1], corpus, max_n=2)
    for cid in (0, 1):
        for term, s in table.cluster_scores(cid).items():
            assert s.best_cluster == match_keyword(term, table)


def test_dedup_worked_example():
    kws = [score("unreal", 1, 7, 0.4), score("engine", 1, 7, 0.4), score("unreal engine", 2, 7, 0.39)]
    kept = dedup_subgrams(kws)
    assert [k.term.text for k in kept] == ["unreal engine"]


def test_dedup_no_subgrams_unchanged():
    kws = [score("cat", 1, 7, 0.4), score("dog", 1, 7, 0.3)]
    assert dedup_subgrams(kws) == kws


def test_dedup_trigram_absorbs_unigram():
    kws = [score("trending on artstation", 3, 7, 0.5), score("artstation", 1, 7, 0.4)]
    kept = dedup_subgrams(kws)
    assert [k.term.text for k in kept] == ["trending on artstation"]


def test_dedup_idempotent_and_subgram_free():
    kws = [
        score("a b c", 3, 7, 0.5),
        score("b c", 2, 7, 0.4),
        score("a b", 2, 7, 0.4),
        score("d", 1, 7, 0.3),
        score("c d", 2, 7, 0.2),
    ]
    once = dedup_subgrams(kws)
    assert dedup_subgrams(once) == once
    texts = [tuple(k.term.tokens) for k in once]
    for t in texts:
        for other in texts:
            if t is other or t == other:
                continue
            joined = " ".join(other)
            assert " ".join(t) not in joined or len(t) >= len(other)


def test_selection_keywords_cluster_example():
    got = selection_keywords(CORPUS[:2], CORPUS, k=10, max_n=1)
    top = max(got, key=lambda s: s.tfidf)
    assert top.tfidf == pytest.approx(0.10034, abs=1e-5)


def test_selection_whole_corpus_zeroes_common_terms():
    got = selection_keywords(["wolf night", "wolf day"], ["wolf night", "wolf day"], k=10, max_n=1)
    scores = {s.term.text: s.tfidf for s in got}
    assert scores["wolf"] == 0.0


def test_selection_single_prompt_ranked_by_idf():
    got = selection_keywords(["cat ghibli style"], CORPUS, k=10, max_n=1)
    texts = [s.term.text for s in got]
    assert set(texts) == {"cat", "ghibli", "style"}
    # style is unique to one document -> highest idf, equal tf
    assert texts[0] == "style"


def test_selection_empty_raises():
    with pytest.raises(EmptySelection):
        selection_keywords([], CORPUS)


def test_log_base_invariance():
    c0 = ClusterDocs(0, 3, ("ghibli castle epic", "ghibli sky"))
    c1 = ClusterDocs(1, 4, ("ghibli robot", "neon robot city"))
    corpus = list(c0.prompts) + list(c1.prompts) + ["totally different words"]
    table = compute_tfidf([c0, c1], corpus, max_n=2)
    for cid in (0, 1):
        base10 = oracle_tfidf([p for p in (c0 if cid == 0 else c1).prompts], corpus, 2, 10.0)
        basee = oracle_tfidf([p for p in (c0 if cid == 0 else c1).prompts], corpus, 2, math.e)
        rank10 = sorted(base10, key=lambda t: (-base10[t], t))
        ranke = sorted(basee, key=lambda t: (-basee[t], t))
        assert rank10 == ranke
        norm10 = oracle_normalized(base10)
        norme = oracle_normalized(basee)
        for term in norm10:
            assert norm10[term] == pytest.approx(norme[term], abs=1e-9)


token_st = st.sampled_from(["cat", "dog", "the", "on", "unreal", "engine", "8k", "neon", "a"])


@settings(max_examples=150, deadline=None)
@given(st.lists(token_st, max_size=8))
def test_extracted_terms_never_start_or_end_on_stopword(tokens):
    stop = stopwords()
    for term in extract_terms(tokens):
        parts = term.tokens
        assert parts[0] not in stop
        assert parts[-1] not in stop
        assert 1 <= term.n <= 3


@settings(max_examples=80, deadline=None)
@given(st.lists(st.sampled_from(["a b", "a", "b", "a b c", "c", "b c"]), max_size=6))
def test_dedup_properties(texts):
    kws = [score(t, len(t.split()), 0, 1.0 / (1 + i)) for i, t in enumerate(texts)]
    kept = dedup_subgrams(kws)
    assert dedup_subgrams(kept) == kept
    token_lists = [k.term.tokens for k in kept]
    for i, inner in enumerate(token_lists):
        for j, outer in enumerate(token_lists):
            if i == j or len(inner) >= len(outer):
                continue
            contiguous = any(
                outer[s : s + len(inner)] == inner for s in range(len(outer) - len(inner) + 1)
            )
            assert not contiguous
