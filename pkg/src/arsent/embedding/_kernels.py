"""Compiled inner loops for negative-sampling word2vec.

All kernels release the GIL so several threads can update the shared
matrices at once (Hogwild). Randomness comes from a per-worker splitmix64
state held in a one-element uint64 array.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


@njit(nogil=True, cache=True)
def next_uniform(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    z = z ^ (z >> np.uint64(31))
    return np.float64(z >> np.uint64(11)) * _INV53


@njit(nogil=True, cache=True)
def draw_negative(cum, state):
    u = next_uniform(state) * cum[-1]
    k = np.searchsorted(cum, u, side="right")
    if k >= cum.shape[0]:
        k = cum.shape[0] - 1
    return k


@njit(nogil=True, cache=True)
def draw_negatives(cum, n, state):
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = draw_negative(cum, state)
    return out


@njit(nogil=True, cache=True)
def _softplus(x):
    if x > 0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@njit(nogil=True, cache=True)
def pair_update(h, w_out, target, negs, alpha, grad_h):
    """One positive plus len(negs) negative logistic terms around hidden vector h.

    Output rows are moved along their negative gradient immediately; the
    gradient with respect to h is accumulated (already scaled by -alpha) into
    grad_h. Negative ids equal to ``target`` or < 0 are skipped. Returns the loss.
    """
    dim = h.shape[0]
    loss = 0.0
    for d in range(negs.shape[0] + 1):
        if d == 0:
            t = target
            label = 1.0
        else:
            t = negs[d - 1]
            if t < 0 or t == target:
                continue
            label = 0.0
        f = 0.0
        for j in range(dim):
            f += h[j] * w_out[t, j]
        if label > 0:
            loss += _softplus(-f)
        else:
            loss += _softplus(f)
        if f > 30.0:
            sig = 1.0
        elif f < -30.0:
            sig = 0.0
        else:
            sig = 1.0 / (1.0 + np.exp(-f))
        g = (label - sig) * alpha
        for j in range(dim):
            grad_h[j] += g * w_out[t, j]
            w_out[t, j] += g * h[j]
    return loss


@njit(nogil=True, cache=True)
def sgns_step(w_in, w_out, inputs, target, negs, alpha):
    """Single update: hidden = mean of w_in[inputs], predicting ``target``."""
    dim = w_in.shape[1]
    h = np.zeros(dim, dtype=w_in.dtype)
    for c in inputs:
        for j in range(dim):
            h[j] += w_in[c, j]
    n = inputs.shape[0]
    for j in range(dim):
        h[j] /= n
    grad_h = np.zeros(dim, dtype=w_in.dtype)
    loss = pair_update(h, w_out, target, negs, alpha, grad_h)
    for c in inputs:
        for j in range(dim):
            w_in[c, j] += grad_h[j] / n
    return loss


@njit(nogil=True, cache=True)
def train_chunk(w_in, w_out, tokens, offsets, keep_prob, cum, skip_gram, window,
                negatives, shrink_window, alpha0, alpha1, words_before, total_words, state):
    """Train over the sentences tokens[offsets[i]:offsets[i+1]].

    The learning rate decays linearly from alpha0 to alpha1 across
    ``total_words`` (all epochs); ``words_before`` is the number of corpus
    tokens that precede this chunk in the schedule. Returns (loss, pairs).
    """
    dim = w_in.shape[1]
    max_len = 0
    for s in range(offsets.shape[0] - 1):
        if offsets[s + 1] - offsets[s] > max_len:
            max_len = offsets[s + 1] - offsets[s]
    buf = np.empty(max_len, dtype=np.int64)
    h = np.zeros(dim, dtype=w_in.dtype)
    grad_h = np.zeros(dim, dtype=w_in.dtype)
    negs = np.empty(negatives, dtype=np.int64)
    loss = 0.0
    pairs = 0
    for s in range(offsets.shape[0] - 1):
        progress = (words_before + offsets[s]) / total_words
        alpha = alpha0 - (alpha0 - alpha1) * progress
        if alpha < alpha1:
            alpha = alpha1
        m = 0
        for i in range(offsets[s], offsets[s + 1]):
            w = tokens[i]
            if keep_prob[w] < 1.0 and keep_prob[w] < next_uniform(state):
                continue
            buf[m] = w
            m += 1
        for pos in range(m):
            win = window
            if shrink_window:
                win = window - int(next_uniform(state) * window)
            lo = max(0, pos - win)
            hi = min(m, pos + win + 1)
            if skip_gram:
                center = buf[pos]
                for c in range(lo, hi):
                    if c == pos:
                        continue
                    for j in range(dim):
                        h[j] = w_in[center, j]
                        grad_h[j] = 0.0
                    for k in range(negatives):
                        negs[k] = draw_negative(cum, state)
                    loss += pair_update(h, w_out, buf[c], negs, alpha, grad_h)
                    pairs += 1
                    for j in range(dim):
                        w_in[center, j] += grad_h[j]
            else:
                count = hi - lo - 1
                if count <= 0:
                    continue
                for j in range(dim):
                    h[j] = 0.0
                    grad_h[j] = 0.0
                for c in range(lo, hi):
                    if c == pos:
                        continue
                    for j in range(dim):
                        h[j] += w_in[buf[c], j]
                for j in range(dim):
                    h[j] /= count
                for k in range(negatives):
                    negs[k] = draw_negative(cum, state)
                loss += pair_update(h, w_out, buf[pos], negs, alpha, grad_h)
                pairs += 1
                for c in range(lo, hi):
                    if c == pos:
                        continue
                    for j in range(dim):
                        w_in[buf[c], j] += grad_h[j] / count
    return loss, pairs
