"""Sentiment lexicons: loading, seed-based expansion, and embedding-model audits."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from .errors import ContractError, LexiconError, MissingAnnotationError, OutOfVocabularyError

BINARY, WEIGHTED = "binary", "weighted"


@dataclass
class Lexicon:
    entries: dict[str, float]
    kind: str = BINARY

    def __post_init__(self):
        if self.kind not in (BINARY, WEIGHTED):
            raise ValueError(f"unknown lexicon kind {self.kind!r}")
        for word, score in self.entries.items():
            _check_score(score, self.kind, word)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, word):
        return word in self.entries

    def get(self, word, default=0.0) -> float:
        return self.entries.get(word, default)

    def positive(self) -> list[str]:
        return [w for w, s in self.entries.items() if s > 0]

    def negative(self) -> list[str]:
        return [w for w, s in self.entries.items() if s < 0]


def _check_score(score, kind, word, where=""):
    if kind == BINARY and score not in (-1.0, 1.0):
        raise LexiconError(f"{where}binary lexicon score for {word!r} must be +1 or -1, got {score}")
    if not -1.0 <= score <= 1.0:
        raise LexiconError(f"{where}score for {word!r} outside [-1, 1]: {score}")


def load_lexicon(path, kind: str | None = None, normalize_words=None) -> Lexicon:
    """Read a ``word<TAB>score`` file.

    ``kind=None`` infers binary when every score is +1/-1 and weighted
    otherwise. ``normalize_words`` optionally maps each word through a text
    normalizer; entries that collapse onto an existing word keep the first score.
    """
    entries: dict[str, float] = {}
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(f"{path}:{lineno}: expected 'word<TAB>score'")
            word, raw = parts[0].strip(), parts[1].strip()
            try:
                score = float(raw)
            except ValueError:
                raise LexiconError(f"{path}:{lineno}: score {raw!r} is not a number") from None
            if not word:
                raise LexiconError(f"{path}:{lineno}: empty word")
            where = f"{path}:{lineno}: "
            _check_score(score, kind or WEIGHTED, word, where)
            if normalize_words is not None:
                word = normalize_words(word)
                if not word or word in entries:
                    continue
            elif word in entries:
                raise LexiconError(f"{where}duplicate word {word!r}")
            entries[word] = score
    if kind is None:
        kind = BINARY if all(s in (-1.0, 1.0) for s in entries.values()) else WEIGHTED
    return Lexicon(entries, kind)


def save_lexicon(lexicon: Lexicon, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for word, score in lexicon.entries.items():
            text = str(int(score)) if lexicon.kind == BINARY else repr(float(score))
            fh.write(f"{word}\t{text}\n")


class NeighbourSource(Protocol):
    def __contains__(self, word) -> bool: ...

    def most_similar(self, word: str, topn: int) -> Sequence: ...


def _neighbours(model: NeighbourSource, word: str, topn: int) -> list[str]:
    return [hit.word if hasattr(hit, "word") else hit[0] for hit in model.most_similar(word, topn)]


@dataclass(frozen=True)
class SeedSet:
    positive_seed: str = "جيد"
    negative_seed: str = "سيئ"
    first_fanout: int = 10
    second_fanout: int = 5

    def __post_init__(self):
        if self.first_fanout < 1 or self.second_fanout < 1:
            raise ContractError("fanouts must be >= 1")
        if self.positive_seed == self.negative_seed:
            raise ContractError("seeds must be distinct")

    @property
    def max_size(self) -> int:
        return 2 * (1 + self.first_fanout * (1 + self.second_fanout))


def expand_auto_lexicon(model: NeighbourSource, seeds: SeedSet = SeedSet()) -> Lexicon:
    """Grow a +1/-1 lexicon from two seed words through nearest neighbours.

    Each seed contributes itself, its ``first_fanout`` neighbours and the
    ``second_fanout`` neighbours of each of those. Words reached from both
    seeds are dropped.
    """
    for seed in (seeds.positive_seed, seeds.negative_seed):
        if seed not in model:
            raise OutOfVocabularyError(seed)
    reached = []
    for seed in (seeds.positive_seed, seeds.negative_seed):
        found = {seed: None}
        layer1 = _neighbours(model, seed, seeds.first_fanout)
        for word in layer1:
            found.setdefault(word)
        for word in layer1:
            for second in _neighbours(model, word, seeds.second_fanout):
                found.setdefault(second)
        reached.append(found)
    pos, neg = reached
    entries = {w: 1.0 for w in pos if w not in neg}
    entries.update((w, -1.0) for w in neg if w not in pos)
    return Lexicon(entries, BINARY)


# ---------------------------------------------------------------------------
# audit

class Label(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    VARIANT = "variant-of-seed"


class Flag(str, enum.Enum):
    OPPOSITE_IN_TOP = "OPPOSITE_IN_TOP"
    NEUTRAL_IN_TOP = "NEUTRAL_IN_TOP"
    VARIANTS_ONLY = "VARIANTS_ONLY"


@dataclass(frozen=True)
class Annotation:
    """Human judgement of a neighbour word.

    A spelling variant names the seed it is a variant of, so a variant of
    the negative seed showing up near the positive seed still counts as an
    opposite-polarity word.
    """

    label: Label
    seed: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "label", Label(self.label))
        if self.label is Label.VARIANT and not self.seed:
            raise ContractError("a variant-of-seed annotation must name its seed")


@dataclass
class AuditReport:
    hits: dict[str, list] = field(default_factory=dict)
    flags: set = field(default_factory=set)
    flag_details: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "reject" if self.flags else "accept"

    def as_tsv(self) -> str:
        lines = ["seed\trank\tword\tscore"]
        for seed, hits in self.hits.items():
            for rank, hit in enumerate(hits, start=1):
                lines.append(f"{seed}\t{rank}\t{hit.word}\t{hit.score:.6f}")
        for flag, seed, word in self.flag_details:
            lines.append(f"#flag\t{flag}\t{seed}\t{word}")
        lines.append(f"#verdict\t{self.verdict}")
        return "\n".join(lines) + "\n"


def _as_annotation(value) -> Annotation:
    if isinstance(value, Annotation):
        return value
    if isinstance(value, tuple):
        return Annotation(*value)
    return Annotation(Label(value))


def audit_model(model: NeighbourSource, seeds: SeedSet,
                annotations: Mapping[str, object]) -> AuditReport:
    """Screen a model's seed neighbourhoods against human annotations."""
    from .embedding.model import SimilarityHit

    ann = {w: _as_annotation(a) for w, a in annotations.items()}
    polarity = {seeds.positive_seed: Label.POSITIVE, seeds.negative_seed: Label.NEGATIVE}
    report = AuditReport()
    missing: list[str] = []
    for seed in polarity:
        if seed not in model:
            raise OutOfVocabularyError(seed)
        hits = [h if isinstance(h, SimilarityHit) else SimilarityHit(h[0], float(h[1]))
                for h in model.most_similar(seed, seeds.first_fanout)]
        report.hits[seed] = hits
        missing.extend(h.word for h in hits if h.word not in ann and h.word not in missing)
    if missing:
        raise MissingAnnotationError(missing)

    for seed, own in polarity.items():
        words = [h.word for h in report.hits[seed]]
        for word in words:
            a = ann[word]
            effective = polarity.get(a.seed, a.label) if a.label is Label.VARIANT else a.label
            if effective is Label.NEUTRAL:
                report.flags.add(Flag.NEUTRAL_IN_TOP)
                report.flag_details.append((Flag.NEUTRAL_IN_TOP.value, seed, word))
            elif effective in (Label.POSITIVE, Label.NEGATIVE) and effective is not own:
                report.flags.add(Flag.OPPOSITE_IN_TOP)
                report.flag_details.append((Flag.OPPOSITE_IN_TOP.value, seed, word))
        if words and all(ann[w].label is Label.VARIANT and ann[w].seed == seed for w in words):
            report.flags.add(Flag.VARIANTS_ONLY)
            report.flag_details.append((Flag.VARIANTS_ONLY.value, seed, ""))
    return report


def load_annotations(path) -> dict[str, Annotation]:
    """Read ``word<TAB>label[<TAB>seed]`` lines."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = [p.strip() for p in line.rstrip("\n").split("\t")]
            if not parts[0] or parts[0].startswith("#"):
                continue
            try:
                out[parts[0]] = Annotation(Label(parts[1]), parts[2] if len(parts) > 2 else None)
            except (IndexError, ValueError) as exc:
                raise LexiconError(f"{path}:{lineno}: bad annotation line ({exc})") from None
    return out


def load_seeds(path, first_fanout=10, second_fanout=5) -> SeedSet:
    """Read ``positive<TAB>word`` and ``negative<TAB>word`` lines."""
    found = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.strip().split("\t")
            if len(parts) == 2:
                found[parts[0].lower()] = parts[1]
    try:
        return SeedSet(found["positive"], found["negative"], first_fanout, second_fanout)
    except KeyError as exc:
        raise LexiconError(f"{path}: missing {exc.args[0]} seed") from None


class NeighbourTable:
    """A precomputed neighbour list per word, usable anywhere a model is expected."""

    def __init__(self, table: Mapping[str, Iterable]):
        self.table = {w: list(ns) for w, ns in table.items()}

    def __contains__(self, word):
        return word in self.table

    def most_similar(self, word, topn=10):
        from .embedding.model import SimilarityHit

        if word not in self.table:
            raise OutOfVocabularyError(word)
        hits = []
        for rank, n in enumerate(self.table[word][:topn]):
            if isinstance(n, tuple):
                hits.append(SimilarityHit(n[0], float(n[1])))
            else:
                hits.append(SimilarityHit(n, 1.0 - 0.01 * rank))
        return hits
