"""Embedding persistence.

Text: ``V dim`` header, then ``word v1 ... vdim`` per line (6 significant digits).
Binary: ``SVW2`` magic, little-endian uint32 V and dim, then per word a
uint32 byte length, the UTF-8 bytes and ``dim`` float32 values.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .model import EmbeddingModel, TrainingConfig
from .vocab import Vocabulary

MAGIC = b"SVW2"


def save(model: EmbeddingModel, path, format: str | None = None) -> None:
    path = Path(path)
    if format is None:
        format = "binary" if path.suffix == ".bin" else "text"
    vecs = model.input_vectors
    if format == "text":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{len(model.vocab)} {model.dim}\n")
            for word, row in zip(model.vocab.words, vecs):
                fh.write(word + " " + " ".join(f"{x:.6g}" for x in row) + "\n")
    elif format == "binary":
        data = np.ascontiguousarray(vecs, dtype="<f4")
        with open(path, "wb") as fh:
            fh.write(MAGIC + struct.pack("<II", len(model.vocab), model.dim))
            for word, row in zip(model.vocab.words, data):
                raw = word.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)) + raw + row.tobytes())
    else:
        raise ValueError(f"unknown embedding format {format!r}")


def load(path) -> EmbeddingModel:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        words, vecs = _load_binary(path)
    else:
        words, vecs = _load_text(path)
    vocab = Vocabulary(words, np.zeros(len(words), dtype=np.int64), min_count=0)
    cfg = TrainingConfig(dim=vecs.shape[1], min_count=1)
    return EmbeddingModel(vocab, vecs, np.zeros_like(vecs), cfg)


def _check_unique(words, path):
    seen = set()
    for w in words:
        if w in seen:
            raise FormatError(f"{path}: duplicate word {w!r}")
        seen.add(w)


def _load_binary(path):
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header")
    n, dim = struct.unpack_from("<II", data, 4)
    pos = 12
    words = []
    vecs = np.empty((n, dim), dtype=np.float32)
    width = 4 * dim
    for i in range(n):
        if pos + 4 > len(data):
            raise FormatError(f"{path}: truncated file, expected {n} words, found {i}")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + length + width > len(data):
            raise FormatError(f"{path}: truncated file, expected {n} words, found {i}")
        try:
            words.append(data[pos:pos + length].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: word {i} is not valid UTF-8") from exc
        pos += length
        vecs[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=pos)
        pos += width
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    _check_unique(words, path)
    return words, vecs


def _load_text(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise FormatError(f"{path}: bad header, expected 'V dim'")
        n, dim = map(int, header)
        words = []
        vecs = np.empty((n, dim), dtype=np.float32)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            if len(words) == n:
                raise FormatError(f"{path}:{lineno}: more rows than the header's {n}")
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise FormatError(f"{path}:{lineno}: expected {dim} components, got {len(parts) - 1}")
            try:
                vecs[len(words)] = [float(x) for x in parts[1:]]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            words.append(parts[0])
    if len(words) != n:
        raise FormatError(f"{path}: truncated file, header promises {n} rows, found {len(words)}")
    _check_unique(words, path)
    return words, vecs
