"""Independent brute-force reference implementations used as test oracles.

Everything here is deliberately written as plain loops / exhaustive
enumeration, kept independent from the package's vectorized code paths.
"""

import itertools
import math

import numpy as np


def brute_pair_confusion(pred, truth):
    """O(n^2) double loop with the same noise policy as the package:
    both-noise pairs are not counted, one-noise pairs predict 'different'."""
    tp = tn = fp = fn = 0
    n = len(pred)
    for i in range(n):
        for j in range(i + 1, n):
            if pred[i] < 0 and pred[j] < 0:
                continue
            same_p = pred[i] == pred[j] and pred[i] >= 0
            same_t = truth[i] == truth[j]
            if same_p and same_t:
                tp += 1
            elif same_p and not same_t:
                fp += 1
            elif not same_p and same_t:
                fn += 1
            else:
                tn += 1
    return tp, tn, fp, fn


def brute_contingency(pred, truth):
    rows = sorted(set(pred))
    cols = sorted(set(truth))
    table = [[0] * len(cols) for _ in rows]
    for p, t in zip(pred, truth):
        table[rows.index(p)][cols.index(t)] += 1
    return table


def brute_mutual_information(pred, truth):
    table = brute_contingency(pred, truth)
    n = len(pred)
    a = [sum(row) for row in table]
    b = [sum(col) for col in zip(*table)]
    mi = 0.0
    for i, row in enumerate(table):
        for j, nij in enumerate(row):
            if nij == 0:
                continue
            mi += (nij / n) * math.log((nij * n) / (a[i] * b[j]))
    return mi


def brute_entropy(labels):
    n = len(labels)
    h = 0.0
    for c in set(labels):
        p = labels.count(c) / n if isinstance(labels, list) else np.mean(np.asarray(labels) == c)
        h -= p * math.log(p)
    return h


def brute_ari_from_pairs(pred, truth):
    """ARI via the pair-counting identity, an independent route from the
    contingency-combinatorial formula (valid for noise-free labels)."""
    tp, tn, fp, fn = brute_pair_confusion(pred, truth)
    num = 2.0 * (tp * tn - fn * fp)
    den = (tp + fn) * (fn + tn) + (tp + fp) * (fp + tn)
    return num / den


def brute_expected_mi(pred, truth):
    """Exact E[MI] under the permutation model, plain lgamma loops."""
    table = brute_contingency(pred, truth)
    n = len(pred)
    a = [sum(row) for row in table]
    b = [sum(col) for col in zip(*table)]
    emi = 0.0
    for ai in a:
        for bj in b:
            for nij in range(max(1, ai + bj - n), min(ai, bj) + 1):
                log_w = (
                    math.lgamma(ai + 1) + math.lgamma(bj + 1)
                    + math.lgamma(n - ai + 1) + math.lgamma(n - bj + 1)
                    - math.lgamma(n + 1) - math.lgamma(nij + 1)
                    - math.lgamma(ai - nij + 1) - math.lgamma(bj - nij + 1)
                    - math.lgamma(n - ai - bj + nij + 1)
                )
                emi += (nij / n) * math.log(n * nij / (ai * bj)) * math.exp(log_w)
    return emi


def brute_ami(pred, truth):
    mi = brute_mutual_information(pred, truth)
    emi = brute_expected_mi(pred, truth)
    hu = brute_entropy(list(pred))
    hv = brute_entropy(list(truth))
    denom = 0.5 * (hu + hv) - emi
    if denom == 0.0:
        return 0.0
    return (mi - emi) / denom


def permutation_average_index(pred, truth):
    """Average of sum-of-C(nij,2) over every permutation of pred's positions.

    Exhaustive; only usable for n <= 8.
    """
    pred = list(pred)
    total = 0.0
    count = 0
    for perm in itertools.permutations(range(len(pred))):
        shuffled = [pred[p] for p in perm]
        table = brute_contingency(shuffled, list(truth))
        total += sum(v * (v - 1) // 2 for row in table for v in row)
        count += 1
    return total / count


def brute_silhouette(D, labels):
    """Triple-loop silhouette; noise (-1) excluded, singleton clusters 0."""
    n = len(labels)
    values = [float("nan")] * n
    clusters = sorted({c for c in labels if c >= 0})
    for i in range(n):
        if labels[i] < 0:
            continue
        own = [j for j in range(n) if j != i and labels[j] == labels[i]]
        if not own:
            values[i] = 0.0
            continue
        a = sum(D[i][j] for j in own) / len(own)
        b = math.inf
        for c in clusters:
            if c == labels[i]:
                continue
            members = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(D[i][j] for j in members) / len(members))
        denom = max(a, b)
        values[i] = 0.0 if denom == 0 else (b - a) / denom
    return values


def brute_dbscan(D, eps, min_pts):
    """Independent dbscan: cores via neighborhood counts, core clusters via
    union-find over core-core edges, borders claimed by the earliest-
    discovered adjacent cluster."""
    n = len(D)
    neighbors = [[j for j in range(n) if D[i][j] <= eps] for i in range(n)]
    core = [len(neighbors[i]) >= min_pts for i in range(n)]
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        if not core[i]:
            continue
        for j in neighbors[i]:
            if core[j]:
                parent[find(i)] = find(j)

    # cluster ids in order of the lowest-index core of each component
    roots = {}
    labels = [-1] * n
    for i in range(n):
        if core[i]:
            r = find(i)
            if r not in roots:
                roots[r] = len(roots)
            labels[i] = roots[r]
    for i in range(n):
        if core[i] or labels[i] >= 0:
            continue
        adjacent = sorted(labels[j] for j in neighbors[i] if core[j])
        if adjacent:
            labels[i] = adjacent[0]
    return labels


def brute_kmedoids_cost(D, medoids):
    return sum(min(D[i][m] for m in medoids) for i in range(len(D)))


def best_kmedoids(D, k):
    """Exhaustive search over medoid subsets."""
    n = len(D)
    best_cost, best_set = math.inf, None
    for subset in itertools.combinations(range(n), k):
        cost = brute_kmedoids_cost(D, subset)
        if cost < best_cost:
            best_cost, best_set = cost, subset
    return best_cost, best_set


def best_1d_kmeans_2(points):
    """Optimal 2-means inertia in one dimension via contiguous splits of
    the sorted points."""
    pts = sorted(points)
    best = math.inf
    for cut in range(1, len(pts)):
        left, right = pts[:cut], pts[cut:]
        inertia = sum((x - sum(left) / len(left)) ** 2 for x in left)
        inertia += sum((x - sum(right) / len(right)) ** 2 for x in right)
        best = min(best, inertia)
    return best


def normalized_cut(W, labels):
    """Sum over clusters of cut(c, rest) / vol(c) on an affinity matrix."""
    W = np.asarray(W, dtype=float)
    labels = np.asarray(labels)
    total = 0.0
    for c in np.unique(labels):
        inside = labels == c
        vol = W[inside].sum()
        if vol == 0:
            return math.inf
        cut = W[inside][:, ~inside].sum()
        total += cut / vol
    return total


def pair_counts_from_contingency(table):
    """TP/TN/FP/FN derived from a contingency table (noise-free labels)."""
    table = np.asarray(table, dtype=np.int64)
    n = int(table.sum())

    def comb2(x):
        return int(x) * (int(x) - 1) // 2

    tp = sum(comb2(v) for v in table.ravel())
    fp = sum(comb2(v) for v in table.sum(axis=1)) - tp
    fn = sum(comb2(v) for v in table.sum(axis=0)) - tp
    tn = comb2(n) - tp - fp - fn
    return tp, tn, fp, fn
