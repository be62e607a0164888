"""Lexicon-integrated CNN sentence classifier (naive concatenation variant).

Two input channels per token: its word vector and its score in each
lexicon. Each channel gets its own bank of full-height 1-D convolutions for
every filter width; ReLU, max-over-time pooling that ignores padding, then
all pooled maps are concatenated and fed to a 2-way softmax layer.
"""
from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ContractError, DimensionError, NonFiniteError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CnnConfig:
    filter_widths: tuple = (3, 4, 5)
    embed_feature_maps: int = 64
    lex_feature_maps: int = 9
    embed_dim: int = 200
    epochs: int = 100
    train_fraction: float = 0.8
    batch_size: int = 50
    learning_rate: float = 1e-3
    dropout_keep: float = 0.5
    seed: int = 0
    embeddings_trainable: bool = False
    init_scale: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "filter_widths", tuple(int(w) for w in self.filter_widths))
        if not self.filter_widths or min(self.filter_widths) < 1:
            raise ContractError("filter widths must be >= 1")
        if self.embed_feature_maps < 1 or self.lex_feature_maps < 1:
            raise ContractError("feature-map counts must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ContractError("train_fraction must lie in (0, 1)")
        if not 0 < self.dropout_keep <= 1:
            raise ContractError("dropout_keep must lie in (0, 1]")

    @property
    def pooled_size(self) -> int:
        return len(self.filter_widths) * (self.embed_feature_maps + self.lex_feature_maps)


# ---------------------------------------------------------------------------
# encoding

@dataclass
class EncodedSentence:
    embed_channel: np.ndarray   # n x embed_dim
    lex_channel: np.ndarray     # n x n_lexicons
    mask: np.ndarray            # n, True for real tokens


@dataclass
class Batch:
    embed: np.ndarray           # B x n x d
    lex: np.ndarray             # B x n x L
    mask: np.ndarray            # B x n
    ids: np.ndarray | None = None

    @classmethod
    def stack(cls, sentences: Sequence[EncodedSentence]) -> "Batch":
        return cls(np.stack([s.embed_channel for s in sentences]),
                   np.stack([s.lex_channel for s in sentences]),
                   np.stack([s.mask for s in sentences]))

    def __len__(self):
        return self.embed.shape[0]


class Encoder:
    """Maps tokens to word vectors and per-lexicon scores.

    Words missing from the embedding model get a vector drawn uniformly from
    (-0.25/dim, 0.25/dim), seeded by hashing the word together with ``seed``
    so a word always encodes the same way within a run.
    """

    def __init__(self, embeddings=None, lexicons=(), dim: int | None = None, seed: int = 0):
        if embeddings is None and dim is None:
            raise ContractError("need an embedding model or an explicit dim")
        self.embeddings = embeddings
        self.lexicons = list(lexicons)
        self.dim = embeddings.dim if embeddings is not None else int(dim)
        if dim is not None and embeddings is not None and dim != embeddings.dim:
            raise DimensionError(f"embedding model has dim {embeddings.dim}, config says {dim}")
        self.seed = seed
        self._oov: dict[str, np.ndarray] = {}

    @property
    def n_lexicons(self) -> int:
        return max(1, len(self.lexicons))

    def vector(self, word: str) -> np.ndarray:
        emb = self.embeddings
        if emb is not None and word in emb:
            return np.asarray(emb[word], dtype=np.float64)
        vec = self._oov.get(word)
        if vec is None:
            digest = hashlib.blake2b(f"{self.seed}\x00{word}".encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            bound = 0.25 / self.dim
            vec = self._oov[word] = rng.uniform(-bound, bound, self.dim)
        return vec

    def scores(self, word: str) -> np.ndarray:
        if not self.lexicons:
            return np.zeros(1)
        return np.array([lex.get(word, 0.0) for lex in self.lexicons], dtype=np.float64)

    def encode(self, tokens: Sequence[str], max_len: int) -> EncodedSentence:
        if max_len < 1:
            raise ContractError("max_len must be >= 1")
        emb = np.zeros((max_len, self.dim))
        lex = np.zeros((max_len, self.n_lexicons))
        mask = np.zeros(max_len, dtype=bool)
        for i, tok in enumerate(tokens[:max_len]):
            emb[i] = self.vector(tok)
            lex[i] = self.scores(tok)
            mask[i] = True
        return EncodedSentence(emb, lex, mask)

    def index(self, docs: Sequence[Sequence[str]], max_len: int) -> "IndexedData":
        """Encode a corpus as row ids into a shared vector table (row 0 = padding)."""
        rows = {}
        vectors = [np.zeros(self.dim)]
        ids = np.zeros((len(docs), max_len), dtype=np.int64)
        lex = np.zeros((len(docs), max_len, self.n_lexicons))
        mask = np.zeros((len(docs), max_len), dtype=bool)
        for i, doc in enumerate(docs):
            for j, tok in enumerate(doc[:max_len]):
                r = rows.get(tok)
                if r is None:
                    r = rows[tok] = len(vectors)
                    vectors.append(self.vector(tok))
                ids[i, j] = r
                lex[i, j] = self.scores(tok)
                mask[i, j] = True
        return IndexedData(ids, lex, mask, np.array(vectors), rows)


def encode(tokens, model, lexicons=(), max_len: int = 50, seed: int = 0, dim=None) -> EncodedSentence:
    return Encoder(model, lexicons, dim=dim, seed=seed).encode(tokens, max_len)


@dataclass
class IndexedData:
    ids: np.ndarray
    lex: np.ndarray
    mask: np.ndarray
    table: np.ndarray
    rows: dict

    def batch(self, idx, table=None) -> Batch:
        tab = self.table if table is None else table
        ids = self.ids[idx]
        return Batch(tab[ids], self.lex[idx], self.mask[idx], ids)

    def subset(self, idx) -> "IndexedData":
        idx = np.asarray(idx, dtype=np.int64)
        return IndexedData(self.ids[idx], self.lex[idx], self.mask[idx], self.table, self.rows)

    def __len__(self):
        return self.ids.shape[0]


# ---------------------------------------------------------------------------
# model

@dataclass
class CnnModel:
    config: CnnConfig
    params: dict[str, np.ndarray]
    n_lexicons: int = 1
    embed_dim: int = 0

    @property
    def pooled_size(self) -> int:
        return self.config.pooled_size


def _channels(cfg: CnnConfig):
    return (("emb", cfg.embed_feature_maps), ("lex", cfg.lex_feature_maps))


def init_model(cfg: CnnConfig, n_lexicons: int = 1, embed_dim: int | None = None,
               rng: np.random.Generator | None = None) -> CnnModel:
    rng = rng or np.random.default_rng(cfg.seed)
    dim = cfg.embed_dim if embed_dim is None else embed_dim
    s = cfg.init_scale
    params = {}
    for width in cfg.filter_widths:
        for name, maps in _channels(cfg):
            height = dim if name == "emb" else n_lexicons
            params[f"{name}_W{width}"] = rng.normal(0.0, s, (width * height, maps))
            params[f"{name}_b{width}"] = np.full(maps, s)
    params["dense_W"] = rng.normal(0.0, s, (cfg.pooled_size, 2))
    params["dense_b"] = np.zeros(2)
    return CnnModel(cfg, params, n_lexicons, dim)


def _valid_positions(mask: np.ndarray, n_pos: int, width: int) -> np.ndarray:
    """Window t is valid when it lies inside the sentence; window 0 always counts."""
    lengths = mask.sum(axis=1)
    t = np.arange(n_pos)
    valid = (t[None, :] + width) <= lengths[:, None]
    valid[:, 0] = True
    return valid


def _pad_to(x: np.ndarray, n: int) -> np.ndarray:
    if x.shape[1] >= n:
        return x
    pad = [(0, 0)] * x.ndim
    pad[1] = (0, n - x.shape[1])
    return np.pad(x, pad)


def forward(model: CnnModel, batch: Batch, train: bool = False, rng=None):
    """Class probabilities (B x 2; column 1 = positive) and the cache for :func:`backward`."""
    cfg, p = model.config, model.params
    if batch.embed.shape[2] != model.embed_dim or batch.lex.shape[2] != model.n_lexicons:
        raise DimensionError(
            f"batch channels ({batch.embed.shape[2]}, {batch.lex.shape[2]}) do not match model "
            f"({model.embed_dim}, {model.n_lexicons})")
    n = max(batch.embed.shape[1], max(cfg.filter_widths))
    inputs = {"emb": _pad_to(batch.embed, n), "lex": _pad_to(batch.lex, n)}
    mask = _pad_to(batch.mask, n)
    pooled, layers = [], []
    for width in cfg.filter_widths:
        for name, _ in _channels(cfg):
            x = inputs[name]
            bsz, _, c = x.shape
            t_out = n - width + 1
            win = sliding_window_view(x, width, axis=1)            # B, T, c, w
            win = win.transpose(0, 1, 3, 2).reshape(bsz, t_out, width * c)
            z = win @ p[f"{name}_W{width}"] + p[f"{name}_b{width}"]
            a = np.maximum(z, 0.0)
            valid = _valid_positions(mask, t_out, width)
            arg = np.where(valid[:, :, None], a, -np.inf).argmax(axis=1)   # B, F
            pooled.append(np.take_along_axis(a, arg[:, None, :], axis=1)[:, 0, :])
            layers.append((name, width, win, z, arg))
    h = np.concatenate(pooled, axis=1)
    drop = None
    if train and cfg.dropout_keep < 1.0:
        rng = rng or np.random.default_rng()
        drop = (rng.random(h.shape) < cfg.dropout_keep) / cfg.dropout_keep
        h_used = h * drop
    else:
        h_used = h
    logits = h_used @ p["dense_W"] + p["dense_b"]
    logits = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    cache = {"layers": layers, "h": h_used, "drop": drop, "probs": probs, "n": n,
             "n_in": batch.embed.shape[1]}
    return probs, cache


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, 1e-300)).mean())


def backward(model: CnnModel, cache, labels: np.ndarray, input_grad: bool = False):
    """Gradients of the mean cross-entropy with respect to every parameter.

    With ``input_grad`` the gradient with respect to the embedding channel of
    the batch is returned under the key ``"embed_input"``.
    """
    p = model.params
    labels = np.asarray(labels)
    bsz = len(labels)
    d_logits = cache["probs"].copy()
    d_logits[np.arange(bsz), labels] -= 1.0
    d_logits /= bsz
    grads = {"dense_W": cache["h"].T @ d_logits, "dense_b": d_logits.sum(axis=0)}
    d_h = d_logits @ p["dense_W"].T
    if cache["drop"] is not None:
        d_h = d_h * cache["drop"]
    d_embed = np.zeros((bsz, cache["n"], model.embed_dim)) if input_grad else None
    offset = 0
    for name, width, win, z, arg in cache["layers"]:
        maps = z.shape[2]
        d_pool = d_h[:, offset:offset + maps]
        offset += maps
        d_z = np.zeros_like(z)
        np.put_along_axis(d_z, arg[:, None, :], d_pool[:, None, :], axis=1)
        d_z *= z > 0
        flat = win.reshape(-1, win.shape[2])
        grads[f"{name}_W{width}"] = flat.T @ d_z.reshape(-1, maps)
        grads[f"{name}_b{width}"] = d_z.sum(axis=(0, 1))
        if input_grad and name == "emb":
            d_win = (d_z @ p[f"{name}_W{width}"].T).reshape(bsz, z.shape[1], width, model.embed_dim)
            for k in range(width):
                d_embed[:, k:k + z.shape[1], :] += d_win[:, :, k, :]
    if input_grad:
        grads["embed_input"] = d_embed[:, :cache["n_in"], :]
    return grads


def predict_proba(model: CnnModel, batch: Batch) -> np.ndarray:
    return forward(model, batch, train=False)[0]


def loss(model: CnnModel, batch: Batch, labels) -> float:
    return cross_entropy(predict_proba(model, batch), np.asarray(labels))


def gradient_check(model: CnnModel, batch: Batch, labels, step: float = 1e-5,
                   groups: Sequence[str] | None = None) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per entry is |a - n| / max(|a| + |n|, 1e-12). Dropout makes
    the loss stochastic, so models configured with dropout are rejected.
    """
    if model.config.dropout_keep < 1.0:
        raise ContractError("gradient check needs dropout disabled (dropout_keep = 1)")
    if batch.embed.dtype != np.float64 or any(v.dtype != np.float64 for v in model.params.values()):
        raise ContractError("gradient check needs double precision")
    labels = np.asarray(labels)
    _, cache = forward(model, batch)
    analytic = backward(model, cache, labels)
    worst = 0.0
    for key in groups or list(model.params):
        param = model.params[key]
        flat = param.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            up = loss(model, batch, labels)
            flat[i] = old - step
            down = loss(model, batch, labels)
            flat[i] = old
            numeric = (up - down) / (2 * step)
            a = analytic[key].reshape(-1)[i]
            worst = max(worst, abs(a - numeric) / max(abs(a) + abs(numeric), 1e-12))
    return worst


# ---------------------------------------------------------------------------
# training

@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float


class Adam:
    def __init__(self, params: dict, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for k, g in grads.items():
            if k not in params:
                continue
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            params[k] -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


@dataclass
class TrainingResult:
    model: CnnModel
    metrics: list[EpochMetrics] = field(default_factory=list)
    table: np.ndarray | None = None


def accuracy(model: CnnModel, data: IndexedData, labels, table=None, batch_size=500) -> float:
    if len(data) == 0:
        return float("nan")
    correct = 0
    for start in range(0, len(data), batch_size):
        idx = np.arange(start, min(start + batch_size, len(data)))
        probs = predict_proba(model, data.batch(idx, table))
        pred = (probs[:, 1] >= probs[:, 0]).astype(np.int64)
        correct += int((pred == labels[idx]).sum())
    return correct / len(data)


def train(model: CnnModel, train_data: IndexedData, train_labels, test_data: IndexedData | None = None,
          test_labels=None, cfg: CnnConfig | None = None) -> TrainingResult:
    """Mini-batch Adam on mean cross-entropy, recording per-epoch metrics.

    ``train_data`` and ``test_data`` must come from the same
    :meth:`Encoder.index` call (they share one vector table) or from calls
    with identical tables. The vector table only changes when
    ``embeddings_trainable`` is set, and then a copy is trained and returned.
    """
    cfg = cfg or model.config
    rng = np.random.default_rng(cfg.seed + 1)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    if len(np.unique(train_labels)) < 2:
        raise ContractError("CNN training data must contain both classes")
    table = train_data.table.copy() if cfg.embeddings_trainable else train_data.table
    params = dict(model.params)
    if cfg.embeddings_trainable:
        params["embedding"] = table
    opt = Adam(params, lr=cfg.learning_rate)
    result = TrainingResult(model, table=table)
    n = len(train_data)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total, seen = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            batch = train_data.batch(idx, table)
            probs, cache = forward(model, batch, train=True, rng=rng)
            batch_loss = cross_entropy(probs, train_labels[idx])
            if not np.isfinite(batch_loss):
                raise NonFiniteError(f"loss became non-finite in epoch {epoch}")
            grads = backward(model, cache, train_labels[idx], input_grad=cfg.embeddings_trainable)
            if cfg.embeddings_trainable:
                g_table = np.zeros_like(table)
                np.add.at(g_table, batch.ids, grads.pop("embed_input"))
                g_table[0] = 0.0
                grads["embedding"] = g_table
            opt.step(params, grads)
            total += batch_loss * len(idx)
            seen += len(idx)
        train_acc = accuracy(model, train_data, train_labels, table)
        test_acc = (accuracy(model, test_data, np.asarray(test_labels, dtype=np.int64), table)
                    if test_data is not None and len(test_data) else float("nan"))
        result.metrics.append(EpochMetrics(epoch, total / seen, train_acc, test_acc))
        log.info("epoch %d loss %.4f train %.4f test %.4f", epoch, total / seen, train_acc, test_acc)
    return result


def write_metrics(metrics: Sequence[EpochMetrics], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "train_acc", "test_acc"])
        for m in metrics:
            writer.writerow([m.epoch, f"{m.train_loss:.6f}", f"{m.train_acc:.6f}", f"{m.test_acc:.6f}"])
