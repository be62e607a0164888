from collections import Counter

import numpy as np
import pytest

from arsent import embedding
from arsent.embedding import _kernels
from arsent.embedding.model import keep_probabilities, negative_table
from arsent.embedding.vocab import Vocabulary
from arsent.errors import ContractError, EmptyVocabularyError, FormatError, OutOfVocabularyError
from arsent.normalizer import tokenize


def numeric_gradient(fn, mat, rows, eps=1e-6):
    grad = np.zeros_like(mat)
    for r in rows:
        for j in range(mat.shape[1]):
            old = mat[r, j]
            mat[r, j] = old + eps
            up = fn()
            mat[r, j] = old - eps
            down = fn()
            mat[r, j] = old
            grad[r, j] = (up - down) / (2 * eps)
    return grad


def rel_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)


def hand_model(words, vectors):
    vecs = np.asarray(vectors, dtype=np.float32)
    vocab = Vocabulary(list(words), np.ones(len(words), dtype=np.int64))
    return embedding.EmbeddingModel(vocab, vecs, np.zeros_like(vecs))


class TestVocabulary:
    def test_counts_and_order(self):
        v = embedding.build_vocabulary(["ا ب ا"], min_count=1)
        assert v.words == ["ا", "ب"]
        assert v.counts.tolist() == [2, 1]

    def test_min_count(self):
        v = embedding.build_vocabulary(["ا ب ا"], min_count=2)
        assert v.words == ["ا"]

    def test_empty(self):
        with pytest.raises(EmptyVocabularyError):
            embedding.build_vocabulary(["ا ب"], min_count=3)

    def test_zipf_matches_counter(self):
        rng = np.random.default_rng(5)
        ids = rng.zipf(1.5, 1000) % 97
        words = [f"w{i}" for i in ids]
        sents = [words[i:i + 13] for i in range(0, 1000, 13)]
        v = embedding.build_vocabulary(sents, min_count=1)
        oracle = Counter(words)
        assert dict(zip(v.words, v.counts.tolist())) == dict(oracle)
        assert sorted(v.index.values()) == list(range(len(v)))
        assert all(np.diff(v.counts) <= 0)

    def test_token_stream_input(self):
        v = embedding.build_vocabulary(tokenize("جيد سيئ\nجيد"), min_count=1)
        assert v.words[0] == "جيد"

    def test_oov_lookup(self):
        v = embedding.build_vocabulary(["ا"], min_count=1)
        with pytest.raises(OutOfVocabularyError):
            v["ب"]


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(dim=0), dict(window=0), dict(negatives=0),
                                    dict(lr_initial=1e-4, lr_final=1e-3), dict(architecture="glove")])
    def test_rejects(self, kw):
        with pytest.raises(ContractError):
            embedding.TrainingConfig(**kw)

    def test_defaults(self):
        cfg = embedding.TrainingConfig()
        assert (cfg.window, cfg.negatives, cfg.min_count, cfg.epochs) == (5, 5, 5, 5)
        assert (cfg.lr_initial, cfg.lr_final, cfg.subsample_t) == (0.025, 1e-4, 1e-3)


class TestGradient:
    @pytest.mark.parametrize("n_inputs", [1, 4])
    def test_finite_differences_100_steps(self, n_inputs):
        rng = np.random.default_rng(n_inputs)
        worst = 0.0
        for _ in range(100):
            v, d = 12, 6
            w_in = rng.normal(0, 0.5, (v, d))
            w_out = rng.normal(0, 0.5, (v, d))
            inputs = rng.choice(v, n_inputs, replace=False)
            target = int(rng.integers(v))
            negs = rng.choice(np.setdiff1d(np.arange(v), [target]), 5, replace=False)
            _, g_in, g_out = embedding.negative_sampling_loss(w_in, w_out, inputs, target, negs)
            fn = lambda: embedding.negative_sampling_loss(w_in, w_out, inputs, target, negs)[0]
            n_in = numeric_gradient(fn, w_in, set(inputs.tolist()))
            n_out = numeric_gradient(fn, w_out, {target, *negs.tolist()})
            worst = max(worst, rel_error(g_in, n_in), rel_error(g_out, n_out))
        assert worst < 1e-5

    @pytest.mark.parametrize("n_inputs", [1, 3])
    def test_kernel_step_is_gradient_step(self, n_inputs):
        rng = np.random.default_rng(9)
        w_in = rng.normal(0, 0.3, (10, 5))
        w_out = rng.normal(0, 0.3, (10, 5))
        inputs = np.arange(n_inputs, dtype=np.int64)
        target, negs, alpha = 7, np.array([4, 8, 9], dtype=np.int64), 0.05
        loss, g_in, g_out = embedding.negative_sampling_loss(w_in, w_out, inputs, target, negs)
        a, b = w_in.copy(), w_out.copy()
        k_loss = _kernels.sgns_step(a, b, inputs, target, negs, alpha)
        assert k_loss == pytest.approx(loss, rel=1e-12)
        np.testing.assert_allclose(a, w_in - alpha * g_in, atol=1e-13)
        np.testing.assert_allclose(b, w_out - alpha * g_out, atol=1e-13)


class TestSampling:
    def test_negative_frequencies(self):
        counts = np.array([40, 30, 25, 20, 15, 10])
        draws = embedding.sample_negatives(counts, 1_000_000, seed=11)
        expected = counts ** 0.75 / (counts ** 0.75).sum()
        observed = np.bincount(draws, minlength=len(counts)) / len(draws)
        assert np.all(np.abs(observed - expected) / expected < 0.01)
        chi2 = ((observed - expected) ** 2 / expected).sum() * len(draws)
        assert chi2 < 20.5  # 0.999 quantile at 5 degrees of freedom

    def test_uniform_in_unit_interval(self):
        state = np.array([3], dtype=np.uint64)
        u = np.array([_kernels.next_uniform(state) for _ in range(20000)])
        assert 0 <= u.min() and u.max() < 1
        assert abs(u.mean() - 0.5) < 0.01

    def test_keep_probabilities(self):
        keep = keep_probabilities(np.array([1000, 10, 1]), 1e-3)
        assert keep[0] < 1 and keep[2] == 1
        assert np.all(keep_probabilities(np.array([5, 5]), 0) == 1)

    def test_table_monotone(self):
        assert np.all(np.diff(negative_table(np.array([3, 2, 1]))) > 0)


class TestTraining:
    def test_deterministic_single_worker(self, planted):
        sents, _ = planted
        cfg = embedding.TrainingConfig(dim=16, min_count=1, epochs=2, seed=4)
        a = embedding.train(sents, cfg)
        b = embedding.train(sents, cfg)
        assert a.input_vectors.tobytes() == b.input_vectors.tobytes()
        assert a.output_vectors.tobytes() == b.output_vectors.tobytes()

    def test_objective_descends(self, planted):
        sents, _ = planted
        cfg = embedding.TrainingConfig(dim=50, min_count=1, epochs=20, seed=3, lr_initial=0.05)
        m = embedding.train(sents, cfg)
        first5 = m.epoch_losses[:5]
        assert all(b <= a for a, b in zip(first5, first5[1:])), first5

    @pytest.mark.parametrize("arch", ["cbow", "sg"])
    def test_planted_pairs(self, planted, arch):
        sents, pairs = planted
        cfg = embedding.TrainingConfig(architecture=arch, dim=50, min_count=1, epochs=20,
                                       seed=3, lr_initial=0.05)
        m = embedding.train(sents, cfg)
        for a, b in pairs:
            assert m.most_similar(a, 1)[0].word == b
        planted_cos = np.mean([m.similarity(a, b) for a, b in pairs])
        rng = np.random.default_rng(1)
        idx = [rng.choice(len(m.vocab), 2, replace=False) for _ in range(100)]
        random_cos = np.mean([m.similarity(m.vocab.words[i], m.vocab.words[j]) for i, j in idx])
        assert planted_cos - random_cos >= 0.3

    def test_multi_worker_runs(self, planted):
        sents, _ = planted
        cfg = embedding.TrainingConfig(dim=16, min_count=1, epochs=2, workers=3, chunk_tokens=500)
        m = embedding.train(sents, cfg)
        assert np.isfinite(m.input_vectors).all()
        assert m.input_vectors.shape == (len(m.vocab), 16)

    def test_initialisation(self):
        from arsent.embedding.model import initial_vectors
        w_in, w_out = initial_vectors(50, 10, seed=0)
        assert np.abs(w_in).max() <= 0.5 / 10
        assert not w_out.any()


class TestSimilarity:
    def test_hand_vectors(self):
        m = hand_model(["w1", "w2", "w3"], [[1, 0], [0.9, 0.1], [0, 1]])
        hits = m.most_similar("w1", 2)
        assert [h.word for h in hits] == ["w2", "w3"]
        assert hits[0].score == pytest.approx(0.9 / np.hypot(0.9, 0.1), abs=1e-6)

    def test_self_excluded_and_sorted(self):
        rng = np.random.default_rng(0)
        words = [f"w{i}" for i in range(30)]
        m = hand_model(words, rng.normal(size=(30, 8)))
        assert m.similarity("w3", "w3") == pytest.approx(1.0, abs=1e-6)
        hits = m.most_similar("w3", 29)
        assert "w3" not in [h.word for h in hits]
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)
        assert all(-1 - 1e-6 <= s <= 1 + 1e-6 for s in scores)

    def test_oov(self):
        m = hand_model(["a"], [[1.0]])
        with pytest.raises(OutOfVocabularyError):
            m.most_similar("b")


class TestSerialization:
    def make(self):
        rng = np.random.default_rng(2)
        words = ["جيد", "سيئ", "ممتاز", "w"]
        return hand_model(words, rng.normal(size=(4, 7)))

    def test_binary_bit_exact(self, tmp_path):
        m = self.make()
        embedding.save(m, tmp_path / "m.bin")
        back = embedding.load(tmp_path / "m.bin")
        assert back.vocab.words == m.vocab.words
        assert back.input_vectors.tobytes() == m.input_vectors.tobytes()

    def test_text_round_trip(self, tmp_path):
        m = self.make()
        embedding.save(m, tmp_path / "m.vec")
        back = embedding.load(tmp_path / "m.vec")
        assert back.vocab.words == m.vocab.words
        assert np.abs(back.input_vectors - m.input_vectors).max() < 1e-5

    def test_truncated_text(self, tmp_path):
        p = tmp_path / "t.vec"
        p.write_text("3 2\nا 0.1 0.2\nب 0.3 0.4\n", encoding="utf-8")
        with pytest.raises(FormatError, match="truncated"):
            embedding.load(p)

    def test_truncated_binary(self, tmp_path):
        m = self.make()
        embedding.save(m, tmp_path / "m.bin")
        raw = (tmp_path / "m.bin").read_bytes()
        (tmp_path / "cut.bin").write_bytes(raw[:-3])
        with pytest.raises(FormatError):
            embedding.load(tmp_path / "cut.bin")

    def test_bad_component_count(self, tmp_path):
        p = tmp_path / "b.vec"
        p.write_text("1 3\nا 0.1 0.2\n", encoding="utf-8")
        with pytest.raises(FormatError):
            embedding.load(p)
