import math
from collections import Counter

import numpy as np
import pytest

from arsent.errors import ContractError, FormatError
from arsent.features import (
    AUTOLEX,
    LEX,
    POS,
    TF,
    TFIDF,
    FeatureConfig,
    TaggedToken,
    Vectorizer,
    count_matrix,
    fit_vocabulary,
    lexicon_aggregates,
    lexicon_features,
    parse_tagged_line,
    pos_filter,
    read_tagged,
    smooth_idf,
    tf_matrix,
    tfidf_matrix,
)
from arsent.lexicon import Lexicon, WEIGHTED


def random_docs(n, seed, vocab=30, max_len=12):
    rng = np.random.default_rng(seed)
    return [[f"t{i}" for i in rng.integers(0, vocab, rng.integers(0, max_len))] for _ in range(n)]


class TestVocabulary:
    def test_three_terms(self):
        assert len(fit_vocabulary([["ا", "ب"], ["ب", "ج"]])) == 3

    def test_duplicates(self):
        assert len(fit_vocabulary([["ا", "ا"]])) == 1

    def test_set_union_oracle(self):
        docs = random_docs(50, 1)
        assert set(fit_vocabulary(docs)) == set().union(*map(set, docs))

    def test_empty(self):
        with pytest.raises(ContractError):
            fit_vocabulary([[], []])


class TestCounts:
    def test_row(self):
        dtm = tf_matrix([["ا", "ا", "ب"]])
        assert dict(dtm.row(0)) == {dtm.term_index["ا"]: 2, dtm.term_index["ب"]: 1}

    def test_empty_doc(self):
        dtm = tf_matrix([["ا"], []])
        assert dtm.row(1) == []

    def test_counting_oracle(self):
        docs = random_docs(20, 2)
        dtm = tf_matrix(docs)
        dense = dtm.matrix.toarray()
        for i, doc in enumerate(docs):
            for term, j in dtm.term_index.items():
                assert dense[i, j] == sum(1 for t in doc if t == term)
        assert np.all(dtm.matrix.data == np.round(dtm.matrix.data)) and np.all(dtm.matrix.data > 0)

    def test_unknown_tokens_ignored(self):
        index = fit_vocabulary([["ا"]])
        m = count_matrix([["ا", "ب", "ا"]], index)
        assert m.toarray().tolist() == [[2.0]]
        assert m.sum() == sum(1 for t in ["ا", "ب", "ا"] if t in index)


class TestTfidf:
    def test_idf_identity(self):
        idf = smooth_idf(count_matrix([["ا"], ["ا", "ب"]], {"ا": 0, "ب": 1}))
        assert idf[0] == 1.0
        assert idf[1] == pytest.approx(math.log(3 / 2) + 1, abs=1e-12)

    def test_hand_example(self):
        dtm = tfidf_matrix([["ا"], ["ا", "ب"]])
        raw = np.array([1.0, math.log(1.5) + 1])
        np.testing.assert_allclose(dtm.matrix.toarray()[1], raw / np.linalg.norm(raw), atol=1e-12)

    def test_unit_rows(self):
        dtm = tfidf_matrix(random_docs(60, 3))
        norms = np.sqrt(np.asarray(dtm.matrix.multiply(dtm.matrix).sum(axis=1)).ravel())
        nonzero = norms > 0
        assert np.all(np.abs(norms[nonzero] - 1) < 1e-9)

    def test_idf_decreases_in_df(self):
        docs = random_docs(80, 4)
        counts = count_matrix(docs, fit_vocabulary(docs))
        df = np.bincount(counts.indices, minlength=counts.shape[1])
        idf = smooth_idf(counts)
        order = np.argsort(df)
        assert np.all(np.diff(idf[order]) <= 1e-15)

    def test_triplets(self):
        text = tfidf_matrix([["ا"]]).to_triplets()
        assert text == "0\t0\t1\n"


TAGGED = ("الخدمات/DTNNS الصحية/DTJJ في/IN المستشفى/DTNN متدهور/JJ جدا/RB "
          "و/CC الوضع/DTNN الحالي/DTJJ اسوا/VBD")


class TestPos:
    def test_example_sentence(self):
        doc = parse_tagged_line(TAGGED)
        kept = pos_filter([doc])[0]
        assert "متدهور" in kept and "الحالي" in kept and "اسوا" in kept
        assert "الخدمات" not in kept and "في" not in kept

    def test_all_nouns(self):
        doc = [TaggedToken("بيت", "NN"), TaggedToken("شارع", "NNS")]
        assert pos_filter([doc]) == [[]]

    def test_output_tags_allowed(self):
        rng = np.random.default_rng(0)
        tags = ["NN", "JJ", "DTJJ", "VBD", "DTVBD", "IN", "DTNN", "RB"]
        docs = [[TaggedToken(f"w{i}", tags[rng.integers(len(tags))]) for i in range(10)] for _ in range(30)]
        kept_tags = {tt.tag for doc in docs for tt in doc
                     if tt.token in pos_filter([doc], {"JJ"})[0]}
        assert kept_tags <= {"JJ", "DTJJ"}

    def test_filter_then_count_commutes_with_masking(self):
        rng = np.random.default_rng(1)
        tags = ["NN", "JJ", "VBD", "DTJJ"]
        docs = [[TaggedToken(f"w{rng.integers(8)}", tags[rng.integers(4)]) for _ in range(9)] for _ in range(25)]
        plain = [[tt.token for tt in d] for d in docs]
        index = fit_vocabulary(plain)
        filtered = count_matrix(pos_filter(docs), index).toarray()
        masked = np.zeros_like(filtered)
        for i, d in enumerate(docs):
            for tt in d:
                if tt.tag in ("JJ", "VBD", "DTJJ"):
                    masked[i, index[tt.token]] += 1
        np.testing.assert_array_equal(filtered, masked)

    def test_last_slash(self):
        assert parse_tagged_line("a/b/NN")[0] == TaggedToken("a/b", "NN")

    @pytest.mark.parametrize("line", ["word", "/NN", "w/nn"])
    def test_malformed(self, line):
        with pytest.raises(FormatError):
            parse_tagged_line(line)

    def test_read_file(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text(TAGGED + "\nبيت/NN\n", encoding="utf-8")
        docs = read_tagged(p)
        assert len(docs) == 2 and docs[1] == [TaggedToken("بيت", "NN")]


LEXICON = Lexicon({"جيد": 1.0, "سيئ": -1.0})


class TestLexiconFeatures:
    def test_single_word(self):
        assert lexicon_aggregates([["جيد", "جيد"]], Lexicon({"جيد": 1.0})).tolist() == [[2, 0, 2, 2]]

    def test_no_hits(self):
        assert lexicon_aggregates([["بيت"]], LEXICON).tolist() == [[0, 0, 0, 0]]

    def test_mixed(self):
        assert lexicon_aggregates([["جيد", "سيئ", "سيئ"]], LEXICON).tolist() == [[1, -2, -1, 3]]

    def test_invariants_weighted(self):
        rng = np.random.default_rng(3)
        words = [f"t{i}" for i in range(30)]
        lex = Lexicon({w: float(rng.uniform(-1, 1)) for w in words[:15]}, WEIGHTED)
        agg = lexicon_aggregates(random_docs(40, 5), lex)
        np.testing.assert_allclose(agg[:, 2], agg[:, 0] + agg[:, 1])
        assert np.all(agg[:, 3] >= (agg[:, :3] != 0).sum(axis=1) - 1)
        assert np.all(agg[:, 0] >= 0) and np.all(agg[:, 1] <= 0)

    def test_layout(self):
        docs = [["جيد", "بيت"], ["سيئ"]]
        dtm = lexicon_features(docs, LEXICON)
        assert dtm.shape == (2, 3 + 4) and dtm.n_aggregates == 4
        assert dtm.matrix.toarray()[:, -4:].tolist() == [[1, 0, 1, 1], [0, -1, -1, 1]]


class TestVectorizer:
    def test_fit_on_train_only(self):
        vec = Vectorizer(FeatureConfig(TFIDF)).fit([["ا", "ب"]])
        out = vec.transform([["ا", "غ"]])
        assert "غ" not in out.term_index
        assert out.shape == (1, 2)

    def test_modes(self):
        docs = [["جيد", "بيت"], ["سيئ", "بيت"]]
        assert Vectorizer(FeatureConfig(TF)).fit_transform(docs).matrix.sum() == 4
        for mode in (LEX, AUTOLEX):
            vec = Vectorizer(FeatureConfig(mode, LEXICON))
            assert vec.fit_transform(docs).shape == (2, vec.n_features) == (2, 7)

    def test_pos_mode(self):
        docs = [parse_tagged_line(TAGGED)]
        dtm = Vectorizer(FeatureConfig(POS)).fit_transform(docs)
        assert set(dtm.term_index) == {"الصحية", "متدهور", "الحالي", "اسوا"}

    def test_pos_needs_tags(self):
        with pytest.raises(ContractError):
            Vectorizer(FeatureConfig(POS)).fit([["ا"]])

    def test_lex_needs_lexicon(self):
        with pytest.raises(ContractError):
            FeatureConfig(LEX)

    def test_unknown_mode(self):
        with pytest.raises(ContractError):
            FeatureConfig("bigrams")


def test_tf_row_sums_match_counter():
    docs = random_docs(30, 9)
    dtm = tf_matrix(docs)
    sums = np.asarray(dtm.matrix.sum(axis=1)).ravel()
    assert sums.tolist() == [sum(Counter(d).values()) for d in docs]
