"""Independent reference implementations used to cross-check the package.

Everything here is written the slow, obvious way on purpose: plain loops
and dictionaries, no shared code with interconv. If a fast path and its
oracle agree, both would have to be wrong in the same way to hide a bug.
"""

import itertools

import numpy as np


def pairwise_auc(y_true, scores):
    """AUC as raw concordance: P(pos score > neg score), ties count half."""
    y = np.asarray(y_true)
    s = np.asarray(scores, dtype=float)
    pos = s[y == 1]
    neg = s[y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def naive_influence(features, response, subset):
    """Raw and standardized influence score via dictionary grouping.

    Cells are the exact joint level tuples; no integer encoding involved.
    """
    x = np.asarray(features)
    y = np.asarray(response, dtype=float)
    n = len(y)
    groups = {}
    for i in range(n):
        key = tuple(int(x[i, j]) for j in subset)
        groups.setdefault(key, []).append(y[i])
    ybar = y.mean()
    raw = 0.0
    for values in groups.values():
        nj = len(values)
        raw += nj * nj * (np.mean(values) - ybar) ** 2
    var = np.mean((y - ybar) ** 2)
    standardized = raw / (n * var) if var > 0 else 0.0
    return raw, standardized


def brute_force_best_subset(features, response, initial):
    """Best non-empty subset of `initial` by standardized influence score.

    Ties break toward the lexicographically smallest index tuple. Only
    usable for small windows; cost is 2^len(initial).
    """
    best = None
    for r in range(1, len(initial) + 1):
        for combo in itertools.combinations(sorted(initial), r):
            _, score = naive_influence(features, response, combo)
            if best is None or score > best[1] or (score == best[1] and combo < best[0]):
                best = (combo, score)
    return best


def finite_difference_grads(loss_of_weights, weights, h=1e-6):
    """Central-difference gradient of a scalar loss over a weight tuple."""
    grads = []
    for wi, w in enumerate(weights):
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            bumped = [v.copy() for v in weights]
            bumped[wi][idx] = w[idx] + h
            up = loss_of_weights(tuple(bumped))
            bumped[wi][idx] = w[idx] - h
            down = loss_of_weights(tuple(bumped))
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return tuple(grads)


def average_ranks(values):
    """Ranks 1..n with ties sharing their average rank."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v))
    sv = v[order]
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(a, b):
    ra = average_ranks(a)
    rb = average_ranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    return float(np.sum(ra * rb) / np.sqrt(np.sum(ra**2) * np.sum(rb**2)))
