import math
import random
import string

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kbrank.porter import stem
from kbrank.textcorpus import (STOPWORDS, Corpus, CorpusError, build_vocabulary, preprocess,
                               tfidf_fit, to_matrix, vectorize)

nltk_porter = pytest.importorskip("nltk.stem.porter")
ORACLE = nltk_porter.PorterStemmer(mode=nltk_porter.PorterStemmer.ORIGINAL_ALGORITHM)

WORDS = """caresses ponies ties caress cats feed agreed plastered bled motoring sing conflated
troubled sized hopping tanned falling hissing fizzed failing filing happy sky relational
conditional rational valenci hesitanci digitizer conformabli radicalli differentli vileli
analogousli vietnamization predication operator feudalism decisiveness hopefulness callousness
formaliti sensitiviti sensibiliti triplicate formative formalize electriciti electrical hopeful
goodness revival allowance inference airliner gyroscopic adjustable defensible irritant
replacement adjustment dependent adoption homologou communism activate angulariti homologous
effective bowdlerize probate rate cease controll roll generalizations oscillators priests praying
football footballer jesuit military conflict drafted languages orientation religious order
goals scored played""".split()


@pytest.mark.parametrize("word", WORDS)
def test_stem_matches_reference(word):
    assert stem(word) == ORACLE.stem(word)


def test_stem_random_words_match_reference():
    rng = random.Random(3)
    for _ in range(3000):
        w = "".join(rng.choice("aeiouybcdlmnprstgz") for _ in range(rng.randint(3, 12)))
        assert stem(w) == ORACLE.stem(w), w


def test_preprocess_examples():
    assert preprocess("") == []
    assert preprocess("The priests, praying.") == [ORACLE.stem("priests"), ORACLE.stem("praying")]
    a, b = preprocess("FOOTBALL football")
    assert a == b


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=string.ascii_letters + string.digits + " .,;!?-'\n", max_size=200))
def test_preprocess_reapplied_is_a_stem_map(text):
    # Porter is not idempotent, so a second pass equals stemming each token once more.
    once = preprocess(text)
    assert all(t == t.lower() and t not in STOPWORDS for t in once)
    twice = preprocess(" ".join(once))
    expected = [stem(t) for t in once if stem(t) not in STOPWORDS]
    assert twice == expected


def test_vocabulary_document_frequency():
    v = build_vocabulary([["a", "b"], ["a"]])
    assert v.df("a") == 2 and v.df("b") == 1 and v.total_docs == 2
    v = build_vocabulary([["a", "a", "b"]])
    assert v.df("a") == 1
    docs = [["x", "y"], ["z"], ["u", "v", "u"]]
    assert len(build_vocabulary(docs)) == sum(len(set(d)) for d in docs)
    assert list(v.term_to_id.values()) == list(range(len(v)))


def ranked_vocab():
    # t0 appears in 10 docs, t1 in 9, ... t9 in 1
    docs = [[f"t{i}" for i in range(10) if i < 10 - d] for d in range(10)]
    return build_vocabulary(docs)


def test_tfidf_prunes_both_ends():
    v = ranked_vocab()
    model = tfidf_fit(v, 0.2, 0.2)
    kept = sorted(v.terms[i] for i in model.idf)
    assert kept == ["t2", "t3", "t4", "t5", "t6", "t7"]
    for i, w in model.idf.items():
        assert w == pytest.approx(math.log(10 / v.doc_frequency[i]))
        assert math.isfinite(w) and w >= 0


def test_tfidf_no_pruning_and_degenerate():
    v = ranked_vocab()
    model = tfidf_fit(v, 0, 0)
    assert len(model.idf) == 10 and model.idf[v.term_to_id["t0"]] == 0.0
    with pytest.raises(CorpusError, match="empty vocabulary after pruning"):
        tfidf_fit(build_vocabulary([["only"]]), 0.2, 0.2)


def test_tfidf_boundary_ties_break_by_term():
    docs = [["b", "a", "c", "d", "e"], ["b", "a"]]
    v = build_vocabulary(docs)
    # a,b tie at df 2: "a" ranks first and is pruned as the most frequent
    kept = {v.terms[i] for i in tfidf_fit(v, 0.2, 0.2).idf}
    assert kept == {"b", "c", "d"}


@pytest.mark.parametrize("n_terms", range(1, 60))
def test_tfidf_retained_count(n_terms):
    v = build_vocabulary([[f"w{j}" for j in range(i + 1)] for i in range(n_terms)])
    for lo, hi in [(0.2, 0.2), (0.1, 0.3), (0.05, 0.0)]:
        try:
            kept = len(tfidf_fit(v, lo, hi).idf)
        except CorpusError:
            continue
        assert abs(kept - math.ceil(n_terms * (1 - lo - hi))) <= 1


def test_vectorize():
    v = build_vocabulary([["a"], ["b"], ["c"]])
    assert vectorize(None, {0: 2, 1: 1}) == {0: 2.0, 1: 1.0}
    model = tfidf_fit(v, 0, 0)
    model.idf[0] = 1.0
    assert vectorize(model, {0: 2}) == {0: 2.0}
    pruned = tfidf_fit(ranked_vocab(), 0.2, 0.2)
    assert vectorize(pruned, {0: 3, 9: 1}) == {}


def test_vectorize_hand_table():
    # 3 docs x 5 terms, weights computed by hand: count * ln(3 / df)
    docs = [["a", "a", "b", "c"], ["a", "d"], ["b", "e", "e", "e"]]
    v = build_vocabulary(docs)
    model = tfidf_fit(v, 0, 0)
    ln3, ln32 = math.log(3), math.log(1.5)
    expected = [
        {"a": 2 * ln32, "b": ln32, "c": ln3},
        {"a": ln32, "d": ln3},
        {"b": ln32, "e": 3 * ln3},
    ]
    for doc, exp in zip(docs, expected):
        got = vectorize(model, v.bag(doc))
        assert {v.terms[t]: w for t, w in got.items()} == pytest.approx(exp, abs=1e-15)
        assert sum(vectorize(None, v.bag(doc)).values()) == len(doc)
    m = to_matrix([vectorize(model, v.bag(d)) for d in docs], len(v))
    assert m.shape == (3, 5)
    assert m[2, v.term_to_id["e"]] == pytest.approx(3 * ln3)


def test_corpus_fingerprint_and_errors(tmp_path):
    lines = ['{"doc_id": "d2", "text": "Goals were scored."}', '{"doc_id": "d1", "text": "A priest."}']
    c1 = Corpus.from_jsonl(lines)
    c2 = Corpus.from_jsonl(list(reversed(lines)))
    assert c1.fingerprint == c2.fingerprint
    assert c1.doc_ids == ["d1", "d2"]
    assert Corpus.from_jsonl(lines[:1]).fingerprint != c1.fingerprint
    with pytest.raises(CorpusError, match="line 2"):
        Corpus.from_jsonl([lines[0], '{"doc_id": "x"}'])
    with pytest.raises(CorpusError, match="duplicate"):
        Corpus.from_jsonl([lines[0], lines[0]])
    assert np.all(c1.vocabulary.doc_frequency <= c1.vocabulary.total_docs)
