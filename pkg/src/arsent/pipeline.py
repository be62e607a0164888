"""Datasets, stratified resampling and the classifier x feature evaluation grid."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import classifiers as clf
from .errors import ContractError, DatasetError
from .features import AUTOLEX, FEATURE_MODES, LEX, POS, FeatureConfig, Vectorizer
from .lexicon import Lexicon
from .normalizer import normalize

log = logging.getLogger(__name__)

EXPECTED_COUNTS = {
    "main": (2026, 628, 1398),
    "sub": (1732, 502, 1230),
}
_POS_LABELS = {"pos", "positive", "1", "+1"}
_NEG_LABELS = {"neg", "negative", "-1", "0"}


@dataclass
class Dataset:
    texts: list[str]
    labels: np.ndarray                 # 1 = positive, 0 = negative
    name: str = "custom"
    votes: list[str] | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.texts) != len(self.labels):
            raise DatasetError("texts and labels differ in length")

    def __len__(self):
        return len(self.texts)

    @property
    def tokens(self) -> list[list[str]]:
        return [t.split() for t in self.texts]

    @property
    def n_positive(self) -> int:
        return int((self.labels == 1).sum())

    @property
    def n_negative(self) -> int:
        return int((self.labels == 0).sum())

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        votes = [self.votes[i] for i in idx] if self.votes is not None else None
        return Dataset([self.texts[i] for i in idx], self.labels[idx], self.name, votes)


def _label(raw: str, where: str) -> int:
    value = raw.strip().lower()
    if value in _POS_LABELS:
        return 1
    if value in _NEG_LABELS:
        return 0
    raise DatasetError(f"{where}: unknown label {raw!r}")


def load_dataset(path, expected: str | None = None, normalizer=normalize) -> Dataset:
    """Load ``label<TAB>text[<TAB>votes]`` rows (or a headed CSV with label/text columns).

    Text is normalized on load. With ``expected`` set to ``main`` or ``sub``
    the row and class counts are verified against the published figures.
    """
    path = Path(path)
    texts, labels, votes = [], [], []
    if path.suffix.lower() == ".csv":
        rows = _read_csv(path)
    else:
        rows = _read_tsv(path)
    for where, label, text, vote in rows:
        labels.append(_label(label, where))
        texts.append(normalizer(text) if normalizer else text)
        votes.append(vote)
    name = expected or "custom"
    ds = Dataset(texts, np.array(labels, dtype=np.int64), name,
                 votes if any(v is not None for v in votes) else None)
    if expected is not None:
        if expected not in EXPECTED_COUNTS:
            raise ContractError(f"unknown dataset name {expected!r}")
        want = EXPECTED_COUNTS[expected]
        got = (len(ds), ds.n_positive, ds.n_negative)
        if got != want:
            raise DatasetError(
                f"{path}: {expected} dataset should have {want[0]} rows ({want[1]} pos / {want[2]} neg), "
                f"found {got[0]} ({got[1]} pos / {got[2]} neg)")
    return ds


def _read_tsv(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise DatasetError(f"{path}:{lineno}: expected 'label<TAB>text[<TAB>votes]'")
            yield f"{path}:{lineno}", parts[0], parts[1], parts[2] if len(parts) == 3 else None


def _read_csv(path):
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = {f.lower().strip(): f for f in reader.fieldnames or []}
        text_key = next((fields[k] for k in ("text", "tweet", "tweets") if k in fields), None)
        label_key = next((fields[k] for k in ("label", "sentiment", "class") if k in fields), None)
        if text_key is None or label_key is None:
            raise DatasetError(f"{path}: CSV needs text and label columns, found {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            yield f"{path}:{lineno}", row[label_key] or "", row[text_key] or "", None


# ---------------------------------------------------------------------------
# resampling

@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int = 0

    def folds(self):
        """Yield (train_idx, test_idx) for each fold."""
        for f in range(self.k):
            test = np.flatnonzero(self.assignments == f)
            train = np.flatnonzero(self.assignments != f)
            yield train, test


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class with ``seed`` and deal it round-robin onto the folds.

    The second class continues dealing where the first stopped, which keeps
    fold sizes within one of each other as well.
    """
    labels = np.asarray(getattr(labels, "labels", labels))
    if k < 2:
        raise ContractError("need k >= 2 folds")
    rng = np.random.default_rng(seed)
    assign = np.empty(len(labels), dtype=np.int64)
    start = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise ContractError(f"class {cls} has {len(members)} members, fewer than k={k}")
        members = members[rng.permutation(len(members))]
        assign[members] = (start + np.arange(len(members))) % k
        start = (start + len(members)) % k
    return FoldPlan(k, assign, seed)


def train_test_split(dataset: Dataset, fraction: float = 0.8, seed: int = 0):
    """Stratified split: floor(fraction * n_c) members of each class go to training."""
    if not 0 < fraction < 1:
        raise ContractError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in np.unique(dataset.labels):
        members = np.flatnonzero(dataset.labels == cls)
        members = members[rng.permutation(len(members))]
        cut = int(math.floor(fraction * len(members)))
        train.extend(members[:cut])
        test.extend(members[cut:])
    if not train or not test:
        raise ContractError("split leaves one side empty")
    return dataset.subset(np.sort(train)), dataset.subset(np.sort(test))


# ---------------------------------------------------------------------------
# evaluation grid

OK, SKIPPED, FAILED = "ok", "skipped", "failed"


@dataclass
class Cell:
    accuracies: list[float] = field(default_factory=list)
    status: str = OK
    message: str = ""

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies)) if self.accuracies else float("nan")


@dataclass
class EvalReport:
    classifiers: list[str]
    features: list[str]
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)
    dataset: str = ""

    def cell(self, classifier: str, feature: str) -> Cell:
        return self.cells[(classifier, feature)]


def fold_features(docs, train_idx, test_idx, cfg: FeatureConfig):
    """Fit a vectorizer on the training rows only and transform both sides."""
    train_docs = [docs[i] for i in train_idx]
    vec = Vectorizer(cfg).fit(train_docs)
    return vec, vec.transform(train_docs).matrix, vec.transform([docs[i] for i in test_idx]).matrix


def run_grid(dataset: Dataset, classifiers: Sequence[str] = clf.CLASSIFIERS,
             feature_modes: Sequence[str] = FEATURE_MODES, folds: FoldPlan | None = None,
             lexicons: Mapping[str, Lexicon] | None = None, tagged=None,
             baseline: bool = True) -> EvalReport:
    """Cross-validate every (classifier, feature mode) pair.

    Features are fitted on each training split only. ``lexicons`` maps
    ``"lex"``/``"autolex"`` to lexicons; ``tagged`` holds one tagged
    document per dataset row for POS features. Cells whose side input is
    missing are marked skipped; a failing cell is recorded and the grid goes on.
    """
    folds = folds or stratified_kfold(dataset.labels, 10, 0)
    lexicons = dict(lexicons or {})
    names = list(classifiers) + (["majority"] if baseline and "majority" not in classifiers else [])
    for name in names:
        if name in clf.EXCLUDED:
            raise ContractError(f"{name}: {clf.EXCLUDED[name]}")
    report = EvalReport(names, list(feature_modes), dataset=dataset.name)
    tokens = dataset.tokens
    if tagged is not None and len(tagged) != len(dataset):
        raise DatasetError(f"tagged file has {len(tagged)} documents, dataset has {len(dataset)}")

    for mode in feature_modes:
        missing = None
        if mode in (LEX, AUTOLEX) and mode not in lexicons:
            missing = f"no {mode} lexicon supplied"
        if mode == POS and tagged is None:
            missing = "no tagged dataset supplied"
        for name in names:
            report.cells[(name, mode)] = Cell(status=SKIPPED, message=missing) if missing else Cell()
        if missing:
            continue
        docs = tagged if mode == POS else tokens
        cfg = FeatureConfig(mode, lexicons.get(mode))
        for fold_no, (train_idx, test_idx) in enumerate(folds.folds()):
            try:
                _, x_train, x_test = fold_features(docs, train_idx, test_idx, cfg)
            except Exception as exc:      # feature failure fails every cell of this mode
                for name in names:
                    _fail(report.cells[(name, mode)], fold_no, exc)
                break
            y_train, y_test = dataset.labels[train_idx], dataset.labels[test_idx]
            for name in names:
                cell = report.cells[(name, mode)]
                if cell.status == FAILED:
                    continue
                try:
                    xt, xs = x_train, x_test
                    if name in ("mnb", "bnb") and mode in (LEX, AUTOLEX):
                        xt, xs = abs(xt), abs(xs)
                    model = clf.train(name, xt, y_train, seed=folds.seed)
                    cell.accuracies.append(float((model.predict(xs) == y_test).mean()))
                except Exception as exc:
                    _fail(cell, fold_no, exc)
        for name in names:
            cell = report.cells[(name, mode)]
            if cell.status == OK:
                log.info("%s x %s: %.4f (+/- %.4f)", name, mode, cell.mean, cell.std)
    return report


def _fail(cell: Cell, fold_no: int, exc: Exception):
    cell.status = FAILED
    cell.message = f"fold {fold_no}: {type(exc).__name__}: {exc}"
    cell.accuracies = []
    log.warning("cell failed: %s", cell.message)


# ---------------------------------------------------------------------------
# reports

FEATURE_TITLES = {"tf": "TF", "tfidf": "TF-IDF", "pos": "POS", "lex": "Lex", "autolex": "Auto-Lex"}
CLASSIFIER_TITLES = {"mnb": "MNB", "bnb": "BNB", "lsvc": "LSVC", "lr": "LR", "sgd": "SGDC",
                     "ridge": "RDG", "majority": "Majority"}
DASH = "—"


def format_cell(cell: Cell) -> str:
    if cell.status != OK or not cell.accuracies:
        return DASH
    return f"{cell.mean:.2f} (+/- {cell.std:.2f})"


def emit_report(report: EvalReport, format: str = "tsv") -> str:
    if not report.cells:
        raise ContractError("empty report")
    if format == "markdown":
        head = "| | " + " | ".join(FEATURE_TITLES.get(f, f) for f in report.features) + " |"
        lines = [head, "|---" * (len(report.features) + 1) + "|"]
        for name in report.classifiers:
            cells = [format_cell(report.cells[(name, f)]) for f in report.features]
            lines.append(f"| {CLASSIFIER_TITLES.get(name, name)} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    if format != "tsv":
        raise ValueError(f"unknown report format {format!r}")
    lines = ["classifier\tfeature\tmean\tstd\tstatus\tfold_accuracies\tmessage"]
    for name in report.classifiers:
        for feat in report.features:
            cell = report.cells[(name, feat)]
            folds = ",".join(repr(a) for a in cell.accuracies)
            mean = repr(cell.mean) if cell.accuracies else ""
            std = repr(cell.std) if cell.accuracies else ""
            message = cell.message.replace("\t", " ").replace("\n", " ")
            lines.append(f"{name}\t{feat}\t{mean}\t{std}\t{cell.status}\t{folds}\t{message}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> EvalReport:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or not lines[0].startswith("classifier\tfeature"):
        raise DatasetError("not a report TSV")
    classifiers: list[str] = []
    features: list[str] = []
    cells = {}
    for line in lines[1:]:
        name, feat, _mean, _std, status, folds, message = (line.split("\t") + [""] * 7)[:7]
        if name not in classifiers:
            classifiers.append(name)
        if feat not in features:
            features.append(feat)
        accs = [float(a) for a in folds.split(",") if a]
        cells[(name, feat)] = Cell(accs, status, message)
    return EvalReport(classifiers, features, cells)
