"""Skip-gram word embeddings trained with negative sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..matrix import FeatureMatrix
from .tokenizer import tokenize
from .vocab import Vocabulary, build_vocabulary

FORMAT_VERSION = "embedding-v1"


@dataclass
class EmbeddingTable:
    terms: list[str]
    input_vectors: np.ndarray   # (V, d) center-word vectors
    output_vectors: np.ndarray  # (V, d) context-word vectors
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.terms)}
        if self.input_vectors.shape != self.output_vectors.shape:
            raise ValueError("input/output vector shape mismatch")
        if self.input_vectors.shape[0] != len(self.terms):
            raise ValueError("one vector pair per term required")
        if not (np.isfinite(self.input_vectors).all()
                and np.isfinite(self.output_vectors).all()):
            raise ValueError("non-finite embedding entries")

    @property
    def dimension(self) -> int:
        return self.input_vectors.shape[1]

    def vector(self, term: str) -> np.ndarray | None:
        i = self.index.get(term)
        return None if i is None else self.input_vectors[i]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("%s dim=%d terms=%d\n" % (FORMAT_VERSION, self.dimension, len(self.terms)))
            for key in sorted(self.config):
                fh.write("# %s=%s\n" % (key, self.config[key]))
            for block, vecs in (("input", self.input_vectors), ("output", self.output_vectors)):
                fh.write("[%s]\n" % block)
                for t, v in zip(self.terms, vecs):
                    fh.write(t + " " + " ".join(format(x, ".17g") for x in v) + "\n")

    @staticmethod
    def load(path) -> "EmbeddingTable":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if not header or header[0] != FORMAT_VERSION:
                raise ValueError("unsupported embedding file version")
            config = {}
            terms: list[str] = []
            blocks: dict[str, list[np.ndarray]] = {}
            current = None
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("# "):
                    k, _, v = line[2:].partition("=")
                    config[k] = v
                elif line.startswith("["):
                    current = line.strip("[]")
                    blocks[current] = []
                elif line:
                    parts = line.split()
                    if current == "input":
                        terms.append(parts[0])
                    blocks[current].append(np.array([float(x) for x in parts[1:]]))
        return EmbeddingTable(terms, np.array(blocks["input"]),
                              np.array(blocks["output"]), config)


def sgns_loss_and_grad(center: np.ndarray, positive: np.ndarray,
                       negatives: np.ndarray):
    """Negative-sampling loss for one (center, context) pair with k negative
    context vectors, plus analytic gradients.

    loss = -log sigmoid(positive . center) - sum_k log sigmoid(-neg_k . center)
    """
    pos_score = positive @ center
    neg_scores = negatives @ center
    sig_pos = 1.0 / (1.0 + np.exp(-pos_score))
    sig_neg = 1.0 / (1.0 + np.exp(neg_scores))
    loss = -np.log(sig_pos) - np.sum(np.log(sig_neg))
    # d/dx -log sigmoid(x) = sigmoid(x) - 1
    g_pos = (sig_pos - 1.0) * center
    g_negs = (1.0 - sig_neg)[:, None] * center[None, :]
    g_center = (sig_pos - 1.0) * positive + (1.0 - sig_neg) @ negatives
    return loss, g_center, g_pos, g_negs


def _negative_table(counts: np.ndarray) -> np.ndarray:
    p = counts.astype(np.float64) ** 0.75
    return p / p.sum()


def train_skipgram(corpus: list[str], d: int = 100, window: int = 5,
                   epochs: int = 5, lr: float = 0.025, negatives: int = 5,
                   seed: int = 0, max_terms: int = 500,
                   vocab: Vocabulary | None = None) -> EmbeddingTable:
    """Train center/context vectors by SGD on the negative-sampling loss.

    Deterministic given the seed; per-epoch average loss is recorded in the
    table config under loss_curve.
    """
    if vocab is None:
        vocab = build_vocabulary(corpus, max_terms=max_terms)
    if len(vocab) < 2:
        raise ValueError("need a vocabulary of at least 2 terms")
    docs = []
    counts = np.zeros(len(vocab), dtype=np.int64)
    for text in corpus:
        ids = [vocab.index[t] for t in tokenize(text) if t in vocab.index]
        if len(ids) >= 2:
            docs.append(np.array(ids, dtype=np.int64))
            np.add.at(counts, ids, 1)
    if not docs:
        raise ValueError("corpus too small: no (center, context) pairs")
    counts = np.maximum(counts, 1)
    neg_probs = _negative_table(counts)

    rng = np.random.default_rng(seed)
    V = len(vocab)
    vec_in = (rng.random((V, d)) - 0.5) / d
    vec_out = np.zeros((V, d))

    loss_curve = []
    for _ in range(epochs):
        total, n_pairs = 0.0, 0
        for ids in docs:
            L = len(ids)
            for t in range(L):
                lo, hi = max(0, t - window), min(L, t + window + 1)
                for j in range(lo, hi):
                    if j == t:
                        continue
                    c, o = ids[t], ids[j]
                    negs = rng.choice(V, size=negatives, p=neg_probs)
                    center = vec_in[c]
                    loss, g_c, g_p, g_n = sgns_loss_and_grad(
                        center, vec_out[o], vec_out[negs])
                    vec_in[c] = center - lr * g_c
                    vec_out[o] -= lr * g_p
                    np.add.at(vec_out, negs, -lr * g_n)
                    total += loss
                    n_pairs += 1
        loss_curve.append(total / n_pairs)

    config = {"dimension": d, "window": window, "epochs": epochs, "lr": lr,
              "negatives": negatives, "seed": seed,
              "loss_curve": ",".join(format(x, ".6g") for x in loss_curve)}
    return EmbeddingTable(list(vocab.terms), vec_in, vec_out, config)


def doc_embedding(text: str, table: EmbeddingTable) -> np.ndarray:
    """Average-pooled center vectors of in-vocabulary tokens; the zero
    vector when no token is in vocabulary."""
    vecs = [table.input_vectors[table.index[t]]
            for t in tokenize(text) if t in table.index]
    if not vecs:
        return np.zeros(table.dimension)
    return np.mean(vecs, axis=0)


def embedding_features(corpus: list[str], table: EmbeddingTable) -> FeatureMatrix:
    values = np.array([doc_embedding(doc, table) for doc in corpus])
    cols = ["embedding_%d" % i for i in range(table.dimension)]
    return FeatureMatrix(values, cols, ["word2vec"] * len(cols))


def save_doc_vectors(values: np.ndarray, path) -> None:
    np.savetxt(path, values, delimiter=",", fmt="%.17g")


def load_doc_vectors(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))
