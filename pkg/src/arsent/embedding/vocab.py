from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from ..errors import EmptyVocabularyError, OutOfVocabularyError
from ..normalizer import TokenStream


@dataclass
class Vocabulary:
    """Words ordered by descending corpus frequency (first occurrence breaks ties)."""

    words: list[str]
    counts: np.ndarray
    min_count: int = 1
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __getitem__(self, word) -> int:
        try:
            return self.index[word]
        except KeyError:
            raise OutOfVocabularyError(word) from None

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def iter_sentences(corpus) -> Iterator[Sequence[str]]:
    """Accept a TokenStream, an iterable of token lists, or an iterable of lines."""
    if isinstance(corpus, TokenStream):
        yield from corpus.sentences()
        return
    for item in corpus:
        if isinstance(item, str):
            words = item.split()
            if words:
                yield words
        else:
            yield item


class LineCorpus:
    """Re-iterable corpus over a normalized UTF-8 file, one sentence per line."""

    def __init__(self, path):
        self.path = Path(path)

    def __iter__(self):
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                words = line.split()
                if words:
                    yield words


def build_vocabulary(corpus: Iterable, min_count: int = 5) -> Vocabulary:
    counts: dict[str, int] = {}
    for sentence in iter_sentences(corpus):
        for word in sentence:
            counts[word] = counts.get(word, 0) + 1
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(f"no word occurs at least {min_count} times")
    # sorted() is stable, so equal counts keep first-occurrence order
    kept.sort(key=lambda wc: -wc[1])
    return Vocabulary([w for w, _ in kept], np.array([c for _, c in kept]), min_count)
