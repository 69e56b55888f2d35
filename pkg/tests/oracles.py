"""Slow, obviously-correct reference implementations used only by the tests."""

import itertools

import numpy as np


def naive_matmul(a, b):
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    c = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            c[i, j] = s
    return c


def naive_conv1d(x, kernels, bias):
    length, cin = x.shape
    f, k, cin2 = kernels.shape
    assert cin == cin2
    out = np.zeros((length - k + 1, f))
    for t in range(length - k + 1):
        for ff in range(f):
            s = bias[ff]
            for kk in range(k):
                for c in range(cin):
                    s += x[t + kk, c] * kernels[ff, kk, c]
            out[t, ff] = s
    return out


def pairwise_auc(scores, labels):
    """Count every (positive, negative) pair; ties score one half."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p, n in itertools.product(pos, neg):
        total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def central_difference(f, arrays, eps=1e-5):
    """Numerical gradient of scalar ``f()`` w.r.t. each array in ``arrays`` (mutated in place, restored)."""
    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        flat, gflat = a.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = f()
            flat[i] = orig - eps
            fm = f()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2 * eps)
        grads.append(g)
    return grads


def max_rel_error(a, b, floor=1.0):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
