import numpy as np
import pytest

from dataprice.textrep import (EmbeddingTable, doc_embedding,
                               embedding_features, sgns_loss_and_grad,
                               train_skipgram)

CORPUS = [
    "apple banana cherry apple banana",
    "cherry banana apple cherry",
    "durian cherry apple banana durian",
] * 3


def reference_loss(center, positive, negatives):
    """Independent loss evaluation used for finite differences."""

    def sigmoid(x):
        return 1.0 / (1.0 + np.exp(-x))

    loss = -np.log(sigmoid(positive @ center))
    for neg in negatives:
        loss -= np.log(sigmoid(-neg @ center))
    return float(loss)


class TestGradients:
    def test_analytic_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        h = 1e-6
        worst = 0.0
        for _ in range(50):
            d = int(rng.integers(3, 12))
            k = int(rng.integers(1, 6))
            center = rng.normal(0, 1, d)
            pos = rng.normal(0, 1, d)
            negs = rng.normal(0, 1, (k, d))
            _, g_c, g_p, g_n = sgns_loss_and_grad(center, pos, negs)

            def check(vec, grad, rebuild):
                nonlocal worst
                for i in range(len(vec)):
                    bump = np.zeros_like(vec)
                    bump[i] = h
                    hi = reference_loss(*rebuild(vec + bump))
                    lo = reference_loss(*rebuild(vec - bump))
                    fd = (hi - lo) / (2 * h)
                    denom = max(abs(fd), abs(grad[i]), 1e-8)
                    worst = max(worst, abs(fd - grad[i]) / denom)

            check(center, g_c, lambda v: (v, pos, negs))
            check(pos, g_p, lambda v: (center, v, negs))
            for j in range(k):
                check(negs[j], g_n[j],
                      lambda v, j=j: (center, pos,
                                      np.vstack([negs[:j], v[None], negs[j + 1:]])))
        assert worst < 1e-4

    def test_loss_value_matches_reference(self):
        rng = np.random.default_rng(7)
        center, pos = rng.normal(size=5), rng.normal(size=5)
        negs = rng.normal(size=(3, 5))
        loss, *_ = sgns_loss_and_grad(center, pos, negs)
        assert loss == pytest.approx(reference_loss(center, pos, negs), abs=1e-12)


class TestTraining:
    def test_loss_curve_decreases(self):
        table = train_skipgram(CORPUS, d=8, window=2, epochs=4, seed=0)
        curve = [float(x) for x in table.config["loss_curve"].split(",")]
        assert len(curve) == 4
        assert curve[-1] < curve[0]

    def test_deterministic_given_seed(self):
        t1 = train_skipgram(CORPUS, d=6, epochs=2, seed=5)
        t2 = train_skipgram(CORPUS, d=6, epochs=2, seed=5)
        assert np.array_equal(t1.input_vectors, t2.input_vectors)
        t3 = train_skipgram(CORPUS, d=6, epochs=2, seed=6)
        assert not np.array_equal(t1.input_vectors, t3.input_vectors)

    def test_related_words_closer_than_unrelated(self):
        corpus = (["red apple sweet fruit tasty apple fruit"] * 10
                  + ["fast car engine wheel motor car engine"] * 10)
        table = train_skipgram(corpus, d=12, window=3, epochs=10, seed=1)

        def sim(a, b):
            va, vb = table.vector(a), table.vector(b)
            return float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))

        assert sim("apple", "fruit") > sim("apple", "engine")

    def test_tiny_corpus_rejected(self):
        with pytest.raises(ValueError):
            train_skipgram(["solo"], d=4)


class TestDocVectors:
    def test_average_pooling(self):
        table = train_skipgram(CORPUS, d=6, epochs=1, seed=0)
        vec = doc_embedding("apple banana", table)
        expect = (table.vector("apple") + table.vector("banana")) / 2
        assert np.allclose(vec, expect)

    def test_all_oov_is_zero_vector(self):
        table = train_skipgram(CORPUS, d=6, epochs=1, seed=0)
        assert np.all(doc_embedding("zzz qqq", table) == 0.0)

    def test_feature_matrix_shape(self):
        table = train_skipgram(CORPUS, d=6, epochs=1, seed=0)
        m = embedding_features(["apple", "banana cherry"], table)
        assert m.values.shape == (2, 6)
        assert m.columns == ["embedding_%d" % i for i in range(6)]
        assert set(m.provenance) == {"word2vec"}


class TestPersistence:
    def test_save_load_roundtrip(self, tmp_path):
        table = train_skipgram(CORPUS, d=5, epochs=1, seed=3)
        path = tmp_path / "emb.txt"
        table.save(path)
        back = EmbeddingTable.load(path)
        assert back.terms == table.terms
        assert np.allclose(back.input_vectors, table.input_vectors)
        assert np.allclose(back.output_vectors, table.output_vectors)

    def test_version_check(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("other-format dim=3 terms=1\n")
        with pytest.raises(ValueError, match="version"):
            EmbeddingTable.load(path)
