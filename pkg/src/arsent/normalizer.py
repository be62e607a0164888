"""Arabic corpus cleaning: markup stripping, character filtering, letter folding.

The cleaning is a per-character classification (keep, fold, delete, or turn
into a separator) followed by whitespace collapsing, so every operation here
is a pure function that can run over file shards independently.
"""
from __future__ import annotations

import html
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import ContractError, MarkupError

TATWEEL = "ـ"
# fathatan, dammatan, kasratan, fatha, damma, kasra, shadda, sukun
HARAKAT = frozenset(chr(c) for c in range(0x064B, 0x0653))
LETTER_FOLDS = {"آ": "ا", "أ": "ا", "إ": "ا", "ة": "ه"}
ALEF_MAKSURA, YEH = "ى", "ي"

# Other Arabic-block combining marks (Quranic annotation signs, madda above,
# superscript alef...). They sit inside words, so they are deleted rather than
# turned into separators.
_EXTRA_MARKS = [(0x0610, 0x061A), (0x0653, 0x065F), (0x0670, 0x0670),
                (0x06D6, 0x06DC), (0x06DF, 0x06E8), (0x06EA, 0x06ED)]


def is_arabic_letter(ch: str) -> bool:
    """True for the 36 base letters U+0621..U+063A, U+0641..U+064A (tatweel excluded)."""
    c = ord(ch)
    return 0x0621 <= c <= 0x063A or 0x0641 <= c <= 0x064A


def _is_extra_mark(ch: str) -> bool:
    c = ord(ch)
    return any(lo <= c <= hi for lo, hi in _EXTRA_MARKS)


@dataclass(frozen=True)
class NormalizationConfig:
    remove_non_arabic: bool = True
    remove_digits: bool = True
    remove_special_chars: bool = True
    normalize_letters: bool = True
    strip_diacritics: bool = True
    strip_tatweel: bool = True
    fold_alef_maksura: bool = False


@dataclass(frozen=True)
class CorpusStats:
    words_before: int
    words_after: int
    removed: int
    removed_fraction: float

    def as_tsv(self) -> str:
        pct = f"{100.0 * self.removed_fraction:.2f}%"
        return (
            "words_before\twords_after\tremoved\tremoved_fraction\n"
            f"{self.words_before}\t{self.words_after}\t{self.removed}\t{pct}\n"
        )


@dataclass
class TokenStream:
    """Flat token list plus the start offset of every sentence."""

    tokens: list[str] = field(default_factory=list)
    sentence_boundaries: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.tokens)

    def sentences(self) -> Iterator[list[str]]:
        bounds = list(self.sentence_boundaries) + [len(self.tokens)]
        for start, stop in zip(bounds, bounds[1:]):
            yield self.tokens[start:stop]

    def __iter__(self):
        return self.sentences()


class _Translation(dict):
    """Lazily filled ``str.translate`` table for one configuration."""

    def __init__(self, cfg: NormalizationConfig):
        super().__init__()
        self.cfg = cfg

    def __missing__(self, code):
        value = self._classify(chr(code))
        self[code] = value
        return value

    def _classify(self, ch: str) -> str:
        # every branch returns the replacement; ch itself means keep
        cfg = self.cfg
        if cfg.normalize_letters and ch in LETTER_FOLDS:
            return LETTER_FOLDS[ch]
        if cfg.fold_alef_maksura and ch == ALEF_MAKSURA:
            return YEH
        if is_arabic_letter(ch):
            return ch
        if ch == TATWEEL:
            return "" if cfg.strip_tatweel else ch
        if ch in HARAKAT:
            return "" if cfg.strip_diacritics else ch
        if _is_extra_mark(ch):
            return "" if cfg.strip_diacritics else ch
        if ch.isspace():
            return " "
        cat = unicodedata.category(ch)
        if cat == "Nd":
            return " " if cfg.remove_digits else ch
        if cat.startswith("L"):
            return " " if cfg.remove_non_arabic else ch
        if cat.startswith("M") or cat == "Cf":
            # combining marks of other scripts, zero-width joiners
            return "" if cfg.remove_non_arabic else ch
        return " " if cfg.remove_special_chars else ch


_TABLES: dict[NormalizationConfig, _Translation] = {}


def _table(cfg: NormalizationConfig) -> _Translation:
    table = _TABLES.get(cfg)
    if table is None:
        table = _TABLES[cfg] = _Translation(cfg)
    return table


def normalize(text: str, cfg: NormalizationConfig | None = None) -> str:
    """Clean one piece of text.

    With the default configuration the result holds only Arabic letters
    separated by single spaces: Latin words, digits of both scripts,
    punctuation and symbols become separators, diacritics and tatweel are
    deleted, and آ إ أ fold to ا and ة to ه.
    """
    if not text:
        return ""
    translated = text.translate(_table(cfg or NormalizationConfig()))
    return " ".join(translated.split())


def normalize_lines(lines: Iterable[str], cfg: NormalizationConfig | None = None) -> Iterator[str]:
    """Normalize line by line, so memory stays bounded on very large corpora."""
    for line in lines:
        yield normalize(line, cfg)


def tokenize(text: str) -> TokenStream:
    """Whitespace tokenization; every non-empty input line is one sentence."""
    stream = TokenStream()
    for line in text.split("\n"):
        words = line.split()
        if words:
            stream.sentence_boundaries.append(len(stream.tokens))
            stream.tokens.extend(words)
    return stream


def corpus_stats(before: int, after: int) -> CorpusStats:
    if after > before:
        raise ContractError(f"word count after cleaning ({after}) exceeds count before ({before})")
    if after < 0:
        raise ContractError("word counts must be non-negative")
    removed = before - after
    fraction = removed / before if before > 0 else 0.0
    return CorpusStats(before, after, removed, fraction)


# ---------------------------------------------------------------------------
# markup

KEEP_TAGS = frozenset({"headline", "body"})
DROP_TAGS = frozenset({"id", "date", "url", "link", "source", "dateline"})

_TAG = re.compile(r"<(/?)([A-Za-z_][\w.:-]*)([^<>]*?)(/?)>|<!--.*?-->|<\?.*?\?>|<!\[CDATA\[(.*?)\]\]>|<![^<>]*>", re.S)


class MarkupStripper:
    """Incremental extractor of headline/body text from corpus XML.

    Feed chunks with :meth:`feed`; completed records (one per parent element
    of the kept elements, usually a ``<doc>``) are returned as single lines.
    Call :meth:`close` at end of input to flush and check for unclosed tags.
    """

    def __init__(self, keep=KEEP_TAGS, drop=DROP_TAGS):
        self.keep = frozenset(t.lower() for t in keep)
        self.drop = frozenset(t.lower() for t in drop)
        self._buf = ""
        self._stack: list[str] = []
        self._keep_depth = 0
        self._drop_depth = 0
        self._pieces: list[str] = []
        self._current: list[str] = []
        self._record_depth: int | None = None

    def feed(self, chunk: str) -> list[str]:
        out: list[str] = []
        data = self._buf + chunk
        pos = 0
        while True:
            lt = data.find("<", pos)
            if lt < 0:
                self._text(data[pos:])
                pos = len(data)
                break
            self._text(data[pos:lt])
            m = _TAG.match(data, lt)
            if m is None:
                if data.find(">", lt) < 0 or data.startswith(("<!--", "<![CDATA["), lt):
                    pos = lt
                    break  # incomplete construct, wait for more input
                # a stray '<' in running text
                self._text("<")
                pos = lt + 1
                continue
            pos = m.end()
            if m.group(2) is None:
                if m.group(5) is not None:
                    self._text(m.group(5), raw=True)
                continue
            closing, name, selfclose = m.group(1), m.group(2).lower(), m.group(4)
            if closing:
                self._close(name, out)
            elif not selfclose:
                self._open(name)
        self._buf = data[pos:]
        return out

    def close(self) -> list[str]:
        out = self.feed("")
        if self._buf.strip():
            raise MarkupError(f"truncated markup near: {self._buf[:40]!r}")
        if self._stack:
            raise MarkupError(f"unclosed element <{self._stack[-1]}>")
        self._flush(out)
        return out

    def _open(self, name):
        self._stack.append(name)
        if name in self.keep:
            if self._keep_depth == 0 and self._record_depth is None:
                self._record_depth = len(self._stack) - 1
            self._keep_depth += 1
        if name in self.drop:
            self._drop_depth += 1

    def _close(self, name, out):
        if not self._stack:
            raise MarkupError(f"closing </{name}> without an open element")
        if self._stack[-1] != name:
            raise MarkupError(f"</{name}> closes <{self._stack[-1]}>")
        self._stack.pop()
        if name in self.drop:
            self._drop_depth -= 1
        if name in self.keep:
            self._keep_depth -= 1
            if self._keep_depth == 0:
                text = " ".join("".join(self._current).split())
                if text:
                    self._pieces.append(text)
                self._current = []
        if self._record_depth is not None and len(self._stack) < max(self._record_depth, 1):
            self._flush(out)

    def _flush(self, out):
        if self._pieces:
            out.append(" ".join(self._pieces))
        self._pieces = []
        self._record_depth = None

    def _text(self, text, raw=False):
        if text and self._keep_depth > 0 and self._drop_depth == 0:
            self._current.append(text if raw else html.unescape(text))


def strip_markup(raw: str, format: str = "plain") -> str:
    """Return the article text of ``raw``.

    ``plain`` input is returned unchanged. ``abu-el-khair-xml`` (alias
    ``xml``) keeps the text of headline and body elements only; each record
    becomes one line with its pieces joined by a space.
    """
    if format == "plain":
        return raw
    if format not in ("xml", "abu-el-khair-xml"):
        raise ValueError(f"unknown markup format: {format}")
    stripper = MarkupStripper()
    lines = stripper.feed(raw)
    lines += stripper.close()
    return "\n".join(lines)


def iter_stripped_lines(lines: Iterable[str], format: str = "plain") -> Iterator[str]:
    """Streaming counterpart of :func:`strip_markup` over an iterable of lines."""
    if format == "plain":
        for line in lines:
            yield line.rstrip("\n")
        return
    if format not in ("xml", "abu-el-khair-xml"):
        raise ValueError(f"unknown markup format: {format}")
    stripper = MarkupStripper()
    for line in lines:
        yield from stripper.feed(line)
    yield from stripper.close()
