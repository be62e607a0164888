"""Sparse document-term features: TF, TF-IDF, POS-filtered and lexicon-augmented."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ContractError, DimensionError, FormatError
from .lexicon import Lexicon

TF, TFIDF, POS, LEX, AUTOLEX = "tf", "tfidf", "pos", "lex", "autolex"
FEATURE_MODES = (TF, TFIDF, POS, LEX, AUTOLEX)
AGGREGATE_NAMES = ("lex_pos_sum", "lex_neg_sum", "lex_net", "lex_hits")
DEFAULT_TAGS = frozenset({"VBD", "JJ"})

_TAG_RE = re.compile(r"^[A-Z][A-Z0-9$]*$")


@dataclass(frozen=True)
class TaggedToken:
    token: str
    tag: str

    def __post_init__(self):
        if not self.tag or not _TAG_RE.match(self.tag):
            raise FormatError(f"bad POS tag {self.tag!r} on token {self.token!r}")


@dataclass
class DocumentTermMatrix:
    matrix: sp.csr_matrix
    term_index: dict[str, int]
    mode: str
    n_aggregates: int = 0

    @property
    def n_docs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_terms(self) -> int:
        return len(self.term_index)

    @property
    def shape(self):
        return self.matrix.shape

    def row(self, i: int) -> list[tuple[int, float]]:
        start, stop = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return list(zip(self.matrix.indices[start:stop].tolist(), self.matrix.data[start:stop].tolist()))

    def to_triplets(self) -> str:
        coo = self.matrix.tocoo()
        return "".join(f"{d}\t{t}\t{w:.10g}\n" for d, t, w in zip(coo.row, coo.col, coo.data))


def fit_vocabulary(docs: Iterable[Sequence[str]]) -> dict[str, int]:
    index: dict[str, int] = {}
    for doc in docs:
        for tok in doc:
            if tok not in index:
                index[tok] = len(index)
    if not index:
        raise ContractError("cannot fit a vocabulary on an empty corpus")
    return index


def count_matrix(docs: Sequence[Sequence[str]], term_index: dict[str, int]) -> sp.csr_matrix:
    """Raw counts of in-vocabulary tokens; unknown tokens are ignored."""
    indptr = [0]
    indices: list[int] = []
    data: list[int] = []
    for doc in docs:
        row: dict[int, int] = {}
        for tok in doc:
            j = term_index.get(tok)
            if j is not None:
                row[j] = row.get(j, 0) + 1
        cols = sorted(row)
        indices.extend(cols)
        data.extend(row[c] for c in cols)
        indptr.append(len(indices))
    return sp.csr_matrix((np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64),
                          np.array(indptr, dtype=np.int64)), shape=(len(docs), len(term_index)))


def smooth_idf(counts: sp.csr_matrix) -> np.ndarray:
    """ln((1 + N) / (1 + df)) + 1 per column."""
    n = counts.shape[0]
    df = np.bincount(counts.indices, minlength=counts.shape[1])
    return np.log((1.0 + n) / (1.0 + df)) + 1.0


def l2_normalize_rows(m: sp.csr_matrix) -> sp.csr_matrix:
    m = m.tocsr(copy=True)
    norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
    norms[norms == 0] = 1.0
    m.data /= np.repeat(norms, np.diff(m.indptr))
    return m


def tf_matrix(docs, term_index=None) -> DocumentTermMatrix:
    docs = list(docs)
    if term_index is None:
        term_index = fit_vocabulary(docs)
    return DocumentTermMatrix(count_matrix(docs, term_index), term_index, TF)


def tfidf_matrix(docs, term_index=None, idf=None) -> DocumentTermMatrix:
    docs = list(docs)
    if term_index is None:
        term_index = fit_vocabulary(docs)
    counts = count_matrix(docs, term_index)
    if idf is None:
        idf = smooth_idf(counts)
    weighted = counts @ sp.diags(idf)
    return DocumentTermMatrix(l2_normalize_rows(weighted.tocsr()), term_index, TFIDF)


def pos_filter(docs: Iterable[Sequence[TaggedToken]], allowed_tags=DEFAULT_TAGS) -> list[list[str]]:
    """Keep tokens whose tag is allowed, also accepting the determiner-prefixed form (DTJJ for JJ)."""
    allowed = set(allowed_tags)
    out = []
    for doc in docs:
        kept = []
        for tt in doc:
            tag = tt.tag
            if tag in allowed or (tag.startswith("DT") and tag[2:] in allowed):
                kept.append(tt.token)
        out.append(kept)
    return out


def parse_tagged_line(line: str, lineno: int | None = None) -> list[TaggedToken]:
    """Parse ``token/TAG token/TAG ...``; the tag follows the last slash."""
    out = []
    for item in line.split():
        token, sep, tag = item.rpartition("/")
        if not sep or not token:
            where = f"line {lineno}: " if lineno is not None else ""
            raise FormatError(f"{where}malformed tagged token {item!r}")
        try:
            out.append(TaggedToken(token, tag))
        except FormatError as exc:
            where = f"line {lineno}: " if lineno is not None else ""
            raise FormatError(f"{where}{exc}") from None
    return out


def read_tagged(path, normalizer=None) -> list[list[TaggedToken]]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            doc = parse_tagged_line(line, lineno)
            if normalizer is not None:
                doc = [TaggedToken(t, tt.tag) for tt in doc for t in [normalizer(tt.token)] if t]
            docs.append(doc)
    return docs


def lexicon_aggregates(docs: Sequence[Sequence[str]], lexicon: Lexicon) -> np.ndarray:
    """Per document: (sum of positive scores, sum of negative scores, net, matched tokens)."""
    out = np.zeros((len(docs), 4))
    entries = lexicon.entries
    for i, doc in enumerate(docs):
        for tok in doc:
            score = entries.get(tok)
            if score is None:
                continue
            if score > 0:
                out[i, 0] += score
            elif score < 0:
                out[i, 1] += score
            out[i, 3] += 1
        out[i, 2] = out[i, 0] + out[i, 1]
    return out


def lexicon_features(docs, lexicon: Lexicon, term_index=None, idf=None, mode=LEX) -> DocumentTermMatrix:
    """TF-IDF columns followed by four unnormalized lexicon aggregate columns."""
    if not len(lexicon):
        raise ContractError("lexicon features need a non-empty lexicon")
    docs = list(docs)
    base = tfidf_matrix(docs, term_index, idf)
    agg = sp.csr_matrix(lexicon_aggregates(docs, lexicon))
    matrix = sp.hstack([base.matrix, agg], format="csr")
    return DocumentTermMatrix(matrix, base.term_index, mode, n_aggregates=4)


@dataclass(frozen=True)
class FeatureConfig:
    mode: str = TFIDF
    lexicon: Lexicon | None = None
    allowed_tags: frozenset = DEFAULT_TAGS

    def __post_init__(self):
        if self.mode not in FEATURE_MODES:
            raise ContractError(f"unknown feature mode {self.mode!r}")
        if self.mode in (LEX, AUTOLEX) and self.lexicon is None:
            raise ContractError(f"feature mode {self.mode} requires a lexicon")


@dataclass
class Vectorizer:
    """Fit-on-train, transform-anything wrapper around the feature functions.

    POS mode expects documents as sequences of :class:`TaggedToken`; every
    other mode takes token lists.
    """

    config: FeatureConfig = field(default_factory=FeatureConfig)
    term_index: dict[str, int] | None = None
    idf: np.ndarray | None = None

    def _tokens(self, docs):
        docs = list(docs)
        if self.config.mode == POS:
            if docs and docs[0] and not isinstance(docs[0][0], TaggedToken):
                raise ContractError("POS features need tagged documents")
            return pos_filter(docs, self.config.allowed_tags)
        return docs

    def fit(self, docs) -> "Vectorizer":
        tokens = self._tokens(docs)
        self.term_index = fit_vocabulary(tokens)
        if self.config.mode != TF:
            self.idf = smooth_idf(count_matrix(tokens, self.term_index))
        return self

    def transform(self, docs) -> DocumentTermMatrix:
        if self.term_index is None:
            raise ContractError("vectorizer is not fitted")
        tokens = self._tokens(docs)
        mode = self.config.mode
        if mode == TF:
            return tf_matrix(tokens, self.term_index)
        if mode in (TFIDF, POS):
            dtm = tfidf_matrix(tokens, self.term_index, self.idf)
            dtm.mode = mode
            return dtm
        return lexicon_features(tokens, self.config.lexicon, self.term_index, self.idf, mode)

    def fit_transform(self, docs) -> DocumentTermMatrix:
        docs = list(docs)
        return self.fit(docs).transform(docs)

    @property
    def n_features(self) -> int:
        extra = 4 if self.config.mode in (LEX, AUTOLEX) else 0
        if self.term_index is None:
            raise DimensionError("vectorizer is not fitted")
        return len(self.term_index) + extra
