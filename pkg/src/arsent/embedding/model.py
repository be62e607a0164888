from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from ..errors import ContractError, NonFiniteError, OutOfVocabularyError
from . import _kernels
from .vocab import Vocabulary, build_vocabulary, iter_sentences

log = logging.getLogger(__name__)

CBOW, SG = "cbow", "sg"


@dataclass(frozen=True)
class TrainingConfig:
    architecture: str = CBOW
    dim: int = 100
    window: int = 5
    negatives: int = 5
    min_count: int = 5
    epochs: int = 5
    lr_initial: float = 0.025
    lr_final: float = 1e-4
    subsample_t: float = 1e-3
    seed: int = 1
    workers: int = 1
    shrink_window: bool = True
    chunk_tokens: int = 100_000

    def __post_init__(self):
        if self.architecture not in (CBOW, SG):
            raise ContractError(f"architecture must be 'cbow' or 'sg', got {self.architecture!r}")
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ContractError("dim, window and negatives must all be >= 1")
        if not self.lr_initial > self.lr_final > 0:
            raise ContractError("learning rates must satisfy lr_initial > lr_final > 0")
        if self.epochs < 1 or self.workers < 1:
            raise ContractError("epochs and workers must be >= 1")


@dataclass(frozen=True)
class SimilarityHit:
    word: str
    score: float


@dataclass
class EmbeddingModel:
    vocab: Vocabulary
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    config: TrainingConfig = field(default_factory=TrainingConfig)
    epoch_losses: list[float] = field(default_factory=list)

    def __post_init__(self):
        v = len(self.vocab)
        if self.input_vectors.shape[0] != v or self.output_vectors.shape != self.input_vectors.shape:
            raise ContractError("embedding matrices must both be V x dim")
        self._unit = None

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __contains__(self, word):
        return word in self.vocab

    def __getitem__(self, word) -> np.ndarray:
        return self.input_vectors[self.vocab[word]]

    def unit_vectors(self) -> np.ndarray:
        if self._unit is None or self._unit.shape != self.input_vectors.shape:
            vecs = self.input_vectors.astype(np.float64)
            norms = np.linalg.norm(vecs, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            self._unit = vecs / norms
        return self._unit

    def similarity(self, a: str, b: str) -> float:
        unit = self.unit_vectors()
        return float(unit[self.vocab[a]] @ unit[self.vocab[b]])

    def most_similar(self, word: str, topn: int = 10) -> list[SimilarityHit]:
        return most_similar(self, word, topn)


def most_similar(model: EmbeddingModel, word: str, topn: int = 10) -> list[SimilarityHit]:
    """Cosine neighbours of ``word`` over the input vectors, excluding the word itself."""
    if topn < 1:
        raise ContractError("topn must be >= 1")
    if word not in model.vocab:
        raise OutOfVocabularyError(word)
    unit = model.unit_vectors()
    q = model.vocab.index[word]
    scores = unit @ unit[q]
    order = np.lexsort((np.arange(len(scores)), -scores))
    hits = []
    for i in order:
        if i == q:
            continue
        hits.append(SimilarityHit(model.vocab.words[i], float(scores[i])))
        if len(hits) == topn:
            break
    return hits


# ---------------------------------------------------------------------------
# sampling helpers

def negative_table(counts: np.ndarray, power: float = 0.75) -> np.ndarray:
    """Cumulative unnormalized unigram^power weights used for negative draws."""
    return np.cumsum(np.asarray(counts, dtype=np.float64) ** power)


def keep_probabilities(counts: np.ndarray, t: float) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    if t <= 0:
        return np.ones_like(counts)
    threshold = t * counts.sum()
    keep = (np.sqrt(counts / threshold) + 1.0) * threshold / counts
    return np.minimum(keep, 1.0)


def sample_negatives(counts: np.ndarray, n: int, seed: int = 0) -> np.ndarray:
    """Draw ``n`` negative-sample ids with the same sampler the trainer uses."""
    state = np.array([seed], dtype=np.uint64)
    return _kernels.draw_negatives(negative_table(counts), n, state)


def negative_sampling_loss(w_in, w_out, inputs, target, negatives):
    """Loss of one prediction and its exact gradients.

    The hidden vector is the mean of ``w_in[inputs]`` (one input for skip-gram,
    the context window for CBOW); the loss is
    ``-log s(u_t.h) - sum_k log s(-u_k.h)``. Returns
    ``(loss, grad_in, grad_out)`` with gradients shaped like the matrices.
    """
    inputs = np.asarray(inputs)
    h = w_in[inputs].mean(axis=0)
    grad_h = np.zeros_like(h)
    grad_in = np.zeros_like(w_in)
    grad_out = np.zeros_like(w_out)
    f = w_out[target] @ h
    loss = np.logaddexp(0.0, -f)
    g = -1.0 / (1.0 + np.exp(f))           # d/d f of softplus(-f)
    grad_h += g * w_out[target]
    grad_out[target] += g * h
    for k in negatives:
        f = w_out[k] @ h
        loss += np.logaddexp(0.0, f)
        g = 1.0 / (1.0 + np.exp(-f))
        grad_h += g * w_out[k]
        grad_out[k] += g * h
    for c in inputs:
        grad_in[c] += grad_h / len(inputs)
    return float(loss), grad_in, grad_out


# ---------------------------------------------------------------------------
# training

def _chunks(corpus, vocab: Vocabulary, chunk_tokens: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    ids: list[int] = []
    offsets = [0]
    index = vocab.index
    for sentence in iter_sentences(corpus):
        kept = [index[w] for w in sentence if w in index]
        if not kept:
            continue
        ids.extend(kept)
        offsets.append(len(ids))
        if len(ids) >= chunk_tokens:
            yield np.array(ids, dtype=np.int64), np.array(offsets, dtype=np.int64)
            ids, offsets = [], [0]
    if ids:
        yield np.array(ids, dtype=np.int64), np.array(offsets, dtype=np.int64)


def initial_vectors(vocab_size: int, dim: int, seed: int, dtype=np.float32):
    rng = np.random.default_rng(seed)
    w_in = ((rng.random((vocab_size, dim)) - 0.5) / dim).astype(dtype)
    w_out = np.zeros((vocab_size, dim), dtype=dtype)
    return w_in, w_out


def train(corpus: Iterable, cfg: TrainingConfig = TrainingConfig(),
          vocab: Vocabulary | None = None) -> EmbeddingModel:
    """Train word vectors with negative sampling.

    ``corpus`` must be re-iterable (it is read once for the vocabulary and
    once per epoch). With ``cfg.workers > 1`` the threads share the weight
    matrices without locking, so results are no longer reproducible.
    """
    if vocab is None:
        vocab = build_vocabulary(corpus, cfg.min_count)
    w_in, w_out = initial_vectors(len(vocab), cfg.dim, cfg.seed)
    cum = negative_table(vocab.counts)
    keep = keep_probabilities(vocab.counts, cfg.subsample_t)
    words_per_epoch = vocab.total
    total = float(max(1, words_per_epoch * cfg.epochs))
    args = (keep, cum, cfg.architecture == SG, cfg.window, cfg.negatives, cfg.shrink_window,
            cfg.lr_initial, cfg.lr_final)

    states = [np.array([cfg.seed * 1_000_003 + k + 1], dtype=np.uint64) for k in range(cfg.workers)]
    losses = []
    for epoch in range(cfg.epochs):
        jobs = []
        seen = epoch * words_per_epoch
        for tokens, offsets in _chunks(corpus, vocab, cfg.chunk_tokens):
            jobs.append((tokens, offsets, seen))
            seen += len(tokens)
        loss, pairs = _run_epoch(w_in, w_out, jobs, args, total, states)
        if not (np.isfinite(w_in).all() and np.isfinite(w_out).all()):
            raise NonFiniteError(f"non-finite parameters after epoch {epoch + 1}")
        losses.append(loss / max(pairs, 1))
        log.info("epoch %d: mean loss %.5f over %d predictions", epoch + 1, losses[-1], pairs)
    return EmbeddingModel(vocab, w_in, w_out, cfg, losses)


def _run_epoch(w_in, w_out, jobs, args, total, states):
    if len(states) == 1:
        loss, pairs = 0.0, 0
        for tokens, offsets, seen in jobs:
            l, p = _kernels.train_chunk(w_in, w_out, tokens, offsets, *args, seen, total, states[0])
            loss += l
            pairs += p
        return loss, pairs

    lock = threading.Lock()
    totals = [0.0, 0]
    queue = list(reversed(jobs))

    def worker(state):
        while True:
            with lock:
                if not queue:
                    return
                tokens, offsets, seen = queue.pop()
            l, p = _kernels.train_chunk(w_in, w_out, tokens, offsets, *args, seen, total, state)
            with lock:
                totals[0] += l
                totals[1] += p

    threads = [threading.Thread(target=worker, args=(s,)) for s in states]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return totals[0], totals[1]
