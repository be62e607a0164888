"""Binary text classifiers over sparse feature matrices.

Labels are 1 (positive) and 0 (negative) at the API; linear trainers work
internally with targets +1/-1. Every model predicts positive on a tie.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from numba import njit

from .errors import ContractError, DimensionError, FormatError

POSITIVE, NEGATIVE = 1, 0
CLASSIFIERS = ("mnb", "bnb", "lr", "lsvc", "sgd", "ridge")
EXCLUDED = {"nsvc": "nu-SVC needs a kernel nu-SVM solver and is not part of this package"}


def as_labels(y) -> np.ndarray:
    """Map pos/neg strings, booleans or 0/1 ints to an int array of 1/0."""
    y = np.asarray(y)
    if y.dtype.kind in "US" or y.dtype == object:
        table = {"pos": 1, "positive": 1, "1": 1, "neg": 0, "negative": 0, "0": 0}
        try:
            return np.array([table[str(v).lower()] for v in y], dtype=np.int64)
        except KeyError as exc:
            raise ContractError(f"unknown label {exc.args[0]!r}") from None
    y = y.astype(np.int64)
    if not np.isin(y, (0, 1)).all():
        raise ContractError("labels must be 0/1")
    return y


def as_matrix(x):
    m = getattr(x, "matrix", x)
    if sp.issparse(m):
        return m.tocsr().astype(np.float64)
    return np.atleast_2d(np.asarray(m, dtype=np.float64))


def _two_classes(y):
    if len(np.unique(y)) < 2:
        raise ContractError("training data must contain both classes")


def _signs(y):
    return np.where(y == POSITIVE, 1.0, -1.0)


class TrainedClassifier:
    def decision_function(self, x) -> np.ndarray:
        raise NotImplementedError

    def _check(self, m):
        if m.shape[1] != self.n_features:
            raise DimensionError(f"model expects {self.n_features} columns, got {m.shape[1]}")

    def predict(self, x) -> np.ndarray:
        return np.where(self.decision_function(x) >= 0, POSITIVE, NEGATIVE)


# ---------------------------------------------------------------------------
# naive Bayes

@dataclass
class NaiveBayesModel(TrainedClassifier):
    variant: str
    class_log_prior: np.ndarray       # [negative, positive]
    feature_log_prob: np.ndarray      # 2 x n_features
    alpha: float = 1.0
    binarize: float = 0.0

    @property
    def n_features(self):
        return self.feature_log_prob.shape[1]

    def joint_log_likelihood(self, x) -> np.ndarray:
        m = as_matrix(x)
        self._check(m)
        if self.variant == "multinomial":
            jll = m @ self.feature_log_prob.T
        else:
            b = (m > self.binarize)
            b = b.astype(np.float64) if sp.issparse(b) else b.astype(np.float64)
            log_p = self.feature_log_prob
            log_not = np.log1p(-np.exp(log_p))
            jll = b @ (log_p - log_not).T + log_not.sum(axis=1)
        return np.asarray(jll) + self.class_log_prior

    def predict_log_proba(self, x) -> np.ndarray:
        jll = self.joint_log_likelihood(x)
        return jll - np.logaddexp(jll[:, 0], jll[:, 1])[:, None]

    def predict_proba(self, x) -> np.ndarray:
        return np.exp(self.predict_log_proba(x))

    def decision_function(self, x) -> np.ndarray:
        jll = self.joint_log_likelihood(x)
        return jll[:, 1] - jll[:, 0]


def _class_log_prior(y):
    counts = np.bincount(y, minlength=2).astype(np.float64)
    return np.log(counts / counts.sum())


def train_mnb(x, y, alpha: float = 1.0) -> NaiveBayesModel:
    if alpha <= 0:
        raise ContractError("smoothing alpha must be > 0")
    m, y = as_matrix(x), as_labels(y)
    _two_classes(y)
    if (m.data if sp.issparse(m) else m).min(initial=0.0) < 0:
        raise ContractError("multinomial naive Bayes needs non-negative features")
    counts = np.vstack([np.asarray(m[y == c].sum(axis=0)).ravel() for c in (0, 1)]) + alpha
    log_prob = np.log(counts) - np.log(counts.sum(axis=1, keepdims=True))
    return NaiveBayesModel("multinomial", _class_log_prior(y), log_prob, alpha)


def train_bnb(x, y, alpha: float = 1.0, binarize: float = 0.0) -> NaiveBayesModel:
    if alpha <= 0:
        raise ContractError("smoothing alpha must be > 0")
    m, y = as_matrix(x), as_labels(y)
    _two_classes(y)
    b = (m > binarize)
    present = np.vstack([np.asarray(b[y == c].sum(axis=0)).ravel() for c in (0, 1)])
    docs = np.bincount(y, minlength=2)[:, None].astype(np.float64)
    log_prob = np.log(present + alpha) - np.log(docs + 2 * alpha)
    return NaiveBayesModel("bernoulli", _class_log_prior(y), log_prob, alpha, binarize)


# ---------------------------------------------------------------------------
# linear models

@dataclass
class LinearModel(TrainedClassifier):
    weights: np.ndarray
    bias: float = 0.0
    loss_kind: str = "hinge"
    l2: float = 0.0
    converged: bool = True
    n_iter: int = 0
    history: list = field(default_factory=list, repr=False)

    @property
    def n_features(self):
        return self.weights.shape[0]

    def decision_function(self, x) -> np.ndarray:
        m = as_matrix(x)
        self._check(m)
        return np.asarray(m @ self.weights).ravel() + self.bias


def logistic_objective(w, b, x, y, l2):
    """Sum of logistic losses plus (l2/2)|w|^2, with gradients (value, grad_w, grad_b)."""
    m = as_matrix(x)
    s = _signs(as_labels(y))
    z = np.asarray(m @ w).ravel() + b
    margins = s * z
    value = np.logaddexp(0.0, -margins).sum() + 0.5 * l2 * w @ w
    coef = -s * np.exp(-np.logaddexp(0.0, margins))   # d loss / d z = -s * sigmoid(-margin)
    grad_w = np.asarray(m.T @ coef).ravel() + l2 * w
    return float(value), grad_w, float(coef.sum())


def train_logreg(x, y, l2: float = 1.0, tol: float = 1e-6, max_iter: int = 5000) -> LinearModel:
    """L2 logistic regression by full-batch gradient descent with Armijo backtracking.

    Trial steps use the Barzilai-Borwein length; the bias is not regularized.
    """
    m, y = as_matrix(x), as_labels(y)
    _two_classes(y)
    w, b = np.zeros(m.shape[1]), 0.0
    f, gw, gb = logistic_objective(w, b, m, y, l2)
    step = 1.0 / (0.25 * (m.multiply(m).sum() if sp.issparse(m) else (m * m).sum()) + l2 + 1.0)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = max(np.abs(gw).max(initial=0.0), abs(gb))
        if gnorm < tol:
            converged = True
            break
        g2 = gw @ gw + gb * gb
        while True:
            w_new, b_new = w - step * gw, b - step * gb
            f_new, gw_new, gb_new = logistic_objective(w_new, b_new, m, y, l2)
            if f_new <= f - 1e-4 * step * g2 or step < 1e-20:
                break
            step *= 0.5
        sw, sb = w_new - w, b_new - b
        yw, yb = gw_new - gw, gb_new - gb
        w, b, f, gw, gb = w_new, b_new, f_new, gw_new, gb_new
        denom = sw @ yw + sb * yb
        step = (sw @ sw + sb * sb) / denom if denom > 0 else step * 2.0
    else:
        converged = max(np.abs(gw).max(initial=0.0), abs(gb)) < tol
    return LinearModel(w, b, "logistic", l2, converged, it)


@njit(cache=True)
def _pegasos_epoch(indptr, indices, data, s, order, v, scale, t, lam, bias_value):
    n_feat = v.shape[0] - 1
    for i in order:
        t += 1
        eta = 1.0 / (lam * t)
        z = v[n_feat] * bias_value
        for k in range(indptr[i], indptr[i + 1]):
            z += v[indices[k]] * data[k]
        margin = s[i] * z * scale
        shrink = 1.0 - eta * lam
        if shrink <= 0.0:
            v[:] = 0.0
            scale = 1.0
        else:
            scale *= shrink
        if margin < 1.0:
            step = eta * s[i] / scale
            for k in range(indptr[i], indptr[i + 1]):
                v[indices[k]] += step * data[k]
            v[n_feat] += step * bias_value
        if scale < 1e-9:
            v *= scale
            scale = 1.0
    return scale, t


def train_linear_svm(x, y, C: float = 1.0, epochs: int = 50, seed: int = 0,
                     intercept_scaling: float = 1.0) -> LinearModel:
    """Hinge-loss linear SVM trained with Pegasos steps eta_t = 1 / (lambda t).

    lambda = 1 / (C n). The bias is an extra feature of constant value
    ``intercept_scaling``, regularized like the others.
    """
    m, y = as_matrix(x), as_labels(y)
    _two_classes(y)
    m = sp.csr_matrix(m)
    n, d = m.shape
    lam = 1.0 / (C * n)
    rng = np.random.default_rng(seed)
    v = np.zeros(d + 1)
    scale, t = 1.0, 0
    s = _signs(y)
    for _ in range(epochs):
        order = rng.permutation(n)
        scale, t = _pegasos_epoch(m.indptr, m.indices, m.data, s, order, v, scale, t, lam,
                                  float(intercept_scaling))
    w = v * scale
    return LinearModel(w[:d].copy(), float(w[d] * intercept_scaling), "hinge", lam, True, t)


@njit(cache=True)
def _sgd_epoch(indptr, indices, data, s, order, w, b, t, alpha, eta0, hold, logistic):
    for i in order:
        t += 1
        eta = eta0 if t <= hold else eta0 * hold / t
        z = b
        for k in range(indptr[i], indptr[i + 1]):
            z += w[indices[k]] * data[k]
        margin = s[i] * z
        if logistic:
            if margin > 30.0:
                g = 0.0
            else:
                g = s[i] / (1.0 + np.exp(margin))
        else:
            g = s[i] if margin < 1.0 else 0.0
        w *= 1.0 - eta * alpha
        if g != 0.0:
            for k in range(indptr[i], indptr[i + 1]):
                w[indices[k]] += eta * g * data[k]
            b += eta * g
    return b, t


@dataclass(frozen=True)
class SgdSchedule:
    """Constant rate ``eta0`` for ``hold_epochs`` epochs, then eta0 * hold / t."""

    eta0: float = 0.1
    hold_epochs: float = 1.0


def train_sgd(x, y, loss_kind: str = "hinge", schedule: SgdSchedule = SgdSchedule(),
              epochs: int = 20, seed: int = 0, alpha: float = 1e-4) -> LinearModel:
    if loss_kind not in ("hinge", "logistic"):
        raise ContractError("SGD loss must be 'hinge' or 'logistic'")
    m, y = as_matrix(x), as_labels(y)
    _two_classes(y)
    m = sp.csr_matrix(m)
    n, d = m.shape
    rng = np.random.default_rng(seed)
    w, b, t = np.zeros(d), 0.0, 0
    hold = max(1, int(round(schedule.hold_epochs * n)))
    s = _signs(y)
    for _ in range(epochs):
        b, t = _sgd_epoch(m.indptr, m.indices, m.data, s, rng.permutation(n), w, b, t, alpha,
                          schedule.eta0, hold, loss_kind == "logistic")
    return LinearModel(w, float(b), loss_kind, alpha, True, t)


def train_ridge(x, y, alpha: float = 1.0, fit_intercept: bool = True) -> LinearModel:
    """Ridge classifier: exact solve of (Xc'Xc + alpha I) w = Xc'yc with targets +1/-1.

    Xc, yc are the column-centred data when ``fit_intercept``. When there are
    more features than rows the equivalent dual system
    (Xc Xc' + alpha I) a = yc, w = Xc' a is solved instead.
    """
    if alpha <= 0:
        raise ContractError("ridge alpha must be > 0")
    m, y = as_matrix(x), as_labels(y)
    _two_classes(y)
    t = _signs(y)
    n, d = m.shape
    mean = np.asarray(m.mean(axis=0)).ravel() if fit_intercept else np.zeros(d)
    t_mean = t.mean() if fit_intercept else 0.0
    tc = t - t_mean
    if d <= n:
        gram = np.asarray((m.T @ m).todense() if sp.issparse(m) else m.T @ m)
        gram = gram - n * np.outer(mean, mean)
        rhs = np.asarray(m.T @ tc).ravel() - mean * tc.sum()
        w = _spd_solve(gram + alpha * np.eye(d), rhs)
    else:
        xm = np.asarray(m @ mean).ravel()
        k = m @ m.T
        k = np.asarray(k.todense() if sp.issparse(k) else k)
        k = k - xm[:, None] - xm[None, :] + mean @ mean
        a = _spd_solve(k + alpha * np.eye(n), tc)
        w = np.asarray(m.T @ a).ravel() - mean * a.sum()
    bias = t_mean - mean @ w
    return LinearModel(w, float(bias), "squared", alpha, True, 1)


def _spd_solve(a, b):
    from scipy.linalg import cho_factor, cho_solve

    return cho_solve(cho_factor(a), b)


def train_majority(x, y) -> LinearModel:
    """Constant predictor for the training majority class (reference baseline)."""
    m, y = as_matrix(x), as_labels(y)
    pos = (y == POSITIVE).sum() >= (y == NEGATIVE).sum()
    return LinearModel(np.zeros(m.shape[1]), 1.0 if pos else -1.0, "constant", 0.0)


def train(name: str, x, y, seed: int = 0) -> TrainedClassifier:
    """Train a classifier by short name with its default hyperparameters."""
    name = name.lower()
    if name in EXCLUDED:
        raise ContractError(f"{name}: {EXCLUDED[name]}")
    if name == "mnb":
        return train_mnb(x, y)
    if name == "bnb":
        return train_bnb(x, y)
    if name == "lr":
        return train_logreg(x, y)
    if name == "lsvc":
        return train_linear_svm(x, y, seed=seed)
    if name == "sgd":
        return train_sgd(x, y, seed=seed)
    if name == "ridge":
        return train_ridge(x, y)
    if name == "majority":
        return train_majority(x, y)
    raise ContractError(f"unknown classifier {name!r}")


def predict(model: TrainedClassifier, x) -> np.ndarray:
    return model.predict(x)


def decision_values(model: TrainedClassifier, x) -> np.ndarray:
    return model.decision_function(x)


# ---------------------------------------------------------------------------
# persistence: "SVCL", uint16 version, uint8 kind, then a kind-specific record

MAGIC, VERSION = b"SVCL", 1
_NB, _LINEAR = 1, 2
_VARIANTS = ("multinomial", "bernoulli")
_LOSSES = ("hinge", "logistic", "squared", "constant")


def save_classifier(model: TrainedClassifier, path) -> None:
    out = bytearray(MAGIC + struct.pack("<H", VERSION))
    if isinstance(model, NaiveBayesModel):
        out += struct.pack("<BBddI", _NB, _VARIANTS.index(model.variant), model.alpha,
                           model.binarize, model.n_features)
        out += np.ascontiguousarray(model.class_log_prior, dtype="<f8").tobytes()
        out += np.ascontiguousarray(model.feature_log_prob, dtype="<f8").tobytes()
    elif isinstance(model, LinearModel):
        out += struct.pack("<BBddBII", _LINEAR, _LOSSES.index(model.loss_kind), model.l2,
                           model.bias, int(model.converged), model.n_iter, model.n_features)
        out += np.ascontiguousarray(model.weights, dtype="<f8").tobytes()
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    Path(path).write_bytes(bytes(out))


def load_classifier(path) -> TrainedClassifier:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: not a classifier file (bad magic)")
    try:
        (version,) = struct.unpack_from("<H", data, 4)
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        kind = data[6]
        if kind == _NB:
            variant, alpha, binarize, n = struct.unpack_from("<BddI", data, 7)
            pos = 7 + struct.calcsize("<BddI")
            prior = np.frombuffer(data, "<f8", 2, pos).copy()
            logp = np.frombuffer(data, "<f8", 2 * n, pos + 16).reshape(2, n).copy()
            end = pos + 16 + 16 * n
            model = NaiveBayesModel(_VARIANTS[variant], prior, logp, alpha, binarize)
        elif kind == _LINEAR:
            loss, l2, bias, conv, n_iter, n = struct.unpack_from("<BddBII", data, 7)
            pos = 7 + struct.calcsize("<BddBII")
            w = np.frombuffer(data, "<f8", n, pos).copy()
            end = pos + 8 * n
            model = LinearModel(w, bias, _LOSSES[loss], l2, bool(conv), n_iter)
        else:
            raise FormatError(f"{path}: unknown model kind {kind}")
    except (struct.error, ValueError, IndexError) as exc:
        raise FormatError(f"{path}: truncated or corrupt classifier file ({exc})") from None
    if end != len(data):
        raise FormatError(f"{path}: {len(data) - end} unexpected trailing bytes")
    return model
