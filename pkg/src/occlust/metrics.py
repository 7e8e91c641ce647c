"""Clustering validation metrics against the SOC ground truth.

Pair-counting metrics (accuracy, Youden index, ARI) are built from the
TP/TN/FP/FN counts over all unordered point pairs; information metrics
(MI, AMI) come from the contingency table with natural logarithms.
Silhouette is the one unsupervised score and drives cluster-count
selection.

Noise policy (dbscan label -1): a pair with exactly one noise point counts
as "predicted different cluster"; a pair of two noise points is excluded
from the counting altogether.  Contingency-based metrics treat -1 as a
regular extra label.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import (
    ContractError,
    DegenerateMetricWarning,
    SelectionError,
    UndefinedMetricError,
)
from .validation import check_distance_matrix

METRIC_NAMES = ("ac", "ari", "yi", "mi", "ami", "silhouette")


@dataclass(frozen=True)
class PairConfusion:
    """Unordered-pair agreement counts between a clustering and the truth."""

    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn


def _label_arrays(pred, truth):
    pred = np.asarray(pred, dtype=np.intp).ravel()
    truth = np.asarray(truth, dtype=np.intp).ravel()
    if pred.shape[0] != truth.shape[0]:
        raise ContractError(
            f"label length mismatch: {pred.shape[0]} predictions vs {truth.shape[0]} truths"
        )
    if pred.shape[0] == 0:
        raise ContractError("empty labelings")
    return pred, truth


def pair_confusion(pred, truth):
    """TP/TN/FP/FN over all unordered pairs.

    TP: same cluster and same class; TN: different cluster and different
    class; FP: same cluster, different class; FN: different cluster, same
    class.  Noise handled per the module policy.
    """
    pred, truth = _label_arrays(pred, truth)
    noise = pred < 0
    not_noise = ~noise
    same_p = (pred[:, None] == pred[None, :]) & not_noise[:, None] & not_noise[None, :]
    same_t = truth[:, None] == truth[None, :]
    counted = ~(noise[:, None] & noise[None, :])
    iu = np.triu_indices(pred.shape[0], k=1)
    sp, st, ok = same_p[iu], same_t[iu], counted[iu]
    tp = int(np.count_nonzero(sp & st & ok))
    fp = int(np.count_nonzero(sp & ~st & ok))
    fn = int(np.count_nonzero(~sp & st & ok))
    tn = int(np.count_nonzero(~sp & ~st & ok))
    return PairConfusion(tp=tp, tn=tn, fp=fp, fn=fn)


def accuracy(pc):
    """Rand accuracy: rate of pairs classified consistently with the truth."""
    if pc.total == 0:
        raise UndefinedMetricError("accuracy undefined: no scored pairs")
    return (pc.tp + pc.tn) / pc.total


def sensitivity(pc):
    if pc.tp + pc.fn == 0:
        raise UndefinedMetricError("sensitivity undefined: no positive pairs")
    return pc.tp / (pc.tp + pc.fn)


def specificity(pc):
    if pc.tn + pc.fp == 0:
        raise UndefinedMetricError("specificity undefined: no negative pairs")
    return pc.tn / (pc.tn + pc.fp)


def youden(pc):
    """Youden index SE + SP - 1; see sensitivity/specificity for the parts."""
    return sensitivity(pc) + specificity(pc) - 1.0


def contingency_table(pred, truth):
    """Count matrix with one row per predicted cluster, one column per class.

    Noise (-1) becomes its own row.
    """
    pred, truth = _label_arrays(pred, truth)
    pred_ids, pred_idx = np.unique(pred, return_inverse=True)
    truth_ids, truth_idx = np.unique(truth, return_inverse=True)
    table = np.zeros((pred_ids.size, truth_ids.size), dtype=np.int64)
    np.add.at(table, (pred_idx, truth_idx), 1)
    return table


def entropy(labels):
    """Shannon entropy of a labeling in nats."""
    _, counts = np.unique(np.asarray(labels).ravel(), return_counts=True)
    p = counts / counts.sum()
    return float(-np.sum(p * np.log(p)))


def mutual_information(pred, truth):
    """MI over the contingency table in nats, with 0 * log 0 := 0."""
    table = contingency_table(pred, truth)
    n = table.sum()
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    nz = table > 0
    pij = table[nz] / n
    pa_pb = (np.outer(a, b) / (n * n))[nz]
    return float(np.sum(pij * np.log(pij / pa_pb)))


def _comb2(x):
    return x * (x - 1) // 2


def adjusted_rand_index(pred, truth):
    """Rand index adjusted for chance under the permutation model.

    A degenerate denominator (both partitions single-cluster or both
    all-singletons) yields 0.0 with a DegenerateMetricWarning.
    """
    table = contingency_table(pred, truth)
    n = int(table.sum())
    index = int(sum(_comb2(int(v)) for v in table.ravel()))
    sum_a = int(sum(_comb2(int(v)) for v in table.sum(axis=1)))
    sum_b = int(sum(_comb2(int(v)) for v in table.sum(axis=0)))
    total = _comb2(n)
    if total == 0:
        raise UndefinedMetricError("ARI undefined for a single point")
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        warnings.warn(
            "ARI denominator degenerate (trivial partitions); returning 0",
            DegenerateMetricWarning,
            stacklevel=2,
        )
        return 0.0
    return (index - expected) / (maximum - expected)


def expected_mutual_information(table):
    """Exact expectation of MI over the hypergeometric permutation model.

    Computed in log space (gammaln) and vectorized over the admissible
    cell counts of each margin pair.
    """
    table = np.asarray(table, dtype=np.int64)
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    n = int(table.sum())
    gln_a = gammaln(a + 1)
    gln_na = gammaln(n - a + 1)
    gln_b = gammaln(b + 1)
    gln_nb = gammaln(n - b + 1)
    gln_n = gammaln(n + 1)
    emi = 0.0
    for i, ai in enumerate(a):
        ai = int(ai)
        for j, bj in enumerate(b):
            bj = int(bj)
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            nij = np.arange(lo, hi + 1, dtype=np.float64)
            log_weight = (
                gln_a[i]
                + gln_b[j]
                + gln_na[i]
                + gln_nb[j]
                - gln_n
                - gammaln(nij + 1)
                - gammaln(ai - nij + 1)
                - gammaln(bj - nij + 1)
                - gammaln(n - ai - bj + nij + 1)
            )
            emi += float(np.sum((nij / n) * np.log(n * nij / (ai * bj)) * np.exp(log_weight)))
    return emi


def adjusted_mutual_information(pred, truth):
    """AMI = (MI - E[MI]) / (mean(H(U), H(V)) - E[MI]) in nats.

    A zero denominator (both partitions trivial) yields 0.0 with a
    DegenerateMetricWarning.
    """
    pred, truth = _label_arrays(pred, truth)
    table = contingency_table(pred, truth)
    mi = mutual_information(pred, truth)
    emi = expected_mutual_information(table)
    denom = 0.5 * (entropy(pred) + entropy(truth)) - emi
    if denom == 0.0:
        warnings.warn(
            "AMI denominator degenerate (trivial partitions); returning 0",
            DegenerateMetricWarning,
            stacklevel=2,
        )
        return 0.0
    return (mi - emi) / denom


def silhouette_values(D, labels):
    """Per-point silhouette s(i) = (b - a) / max(a, b) from a distance matrix.

    a(i): mean distance to the other members of i's cluster; b(i): smallest
    mean distance to any other cluster.  Singleton clusters score 0; noise
    points get NaN and never contribute to other points' means.
    """
    D = check_distance_matrix(D)
    labels = np.asarray(labels, dtype=np.intp).ravel()
    n = D.shape[0]
    if labels.shape[0] != n:
        raise ContractError(f"labels length {labels.shape[0]} does not match n={n}")
    keep = labels >= 0
    cluster_ids = np.unique(labels[keep])
    if cluster_ids.size < 2:
        raise UndefinedMetricError(
            f"silhouette undefined with {cluster_ids.size} non-noise cluster(s)"
        )
    onehot = (labels[:, None] == cluster_ids[None, :]).astype(np.float64)
    sizes = onehot.sum(axis=0)
    sums = D @ onehot  # (n, K) total distance from each point to each cluster
    out = np.full(n, np.nan)
    own_col = np.searchsorted(cluster_ids, labels[keep])
    rows = np.flatnonzero(keep)
    own_size = sizes[own_col]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[rows, own_col] / np.maximum(own_size - 1, 1)
        mean_to = sums[rows] / sizes[None, :]
    mean_to[np.arange(rows.size), own_col] = np.inf
    b = mean_to.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    s[own_size == 1] = 0.0
    out[rows] = s
    return out


def silhouette_mean(D, labels):
    """Mean silhouette over non-noise points."""
    return float(np.nanmean(silhouette_values(D, labels)))


@dataclass(frozen=True)
class MetricReport:
    """One evaluation of a clustering: the five supervised scores plus silhouette."""

    ac: float
    ari: float
    yi: float
    mi: float
    ami: float
    silhouette: float

    @classmethod
    def compute(cls, pred, truth, D):
        """Score predicted labels against the truth; D is the distance
        matrix of the space the clusterer consumed (used by silhouette).

        Metrics that are undefined for the given labeling come back NaN so
        that sweep cells never abort a run.
        """
        pc = pair_confusion(pred, truth)

        def guarded(fn, *args):
            try:
                return float(fn(*args))
            except UndefinedMetricError:
                return float("nan")

        return cls(
            ac=guarded(accuracy, pc),
            ari=guarded(adjusted_rand_index, pred, truth),
            yi=guarded(youden, pc),
            mi=guarded(mutual_information, pred, truth),
            ami=guarded(adjusted_mutual_information, pred, truth),
            silhouette=guarded(silhouette_mean, D, pred),
        )

    def as_dict(self):
        return {
            "ac": self.ac,
            "ari": self.ari,
            "yi": self.yi,
            "mi": self.mi,
            "ami": self.ami,
            "silhouette": self.silhouette,
        }


@dataclass(frozen=True)
class SilhouetteSelection:
    """Outcome of a cluster-count (or epsilon) sweep."""

    selected: float
    labels: np.ndarray
    mean_silhouette: float
    n_clusters: int


def select_by_silhouette(candidates, assign, D):
    """Pick the candidate whose clustering has the highest mean silhouette.

    candidates are tried in the given order; ties keep the earliest (i.e.
    smallest) candidate.  ``assign(candidate)`` returns integer labels.
    Candidates whose clustering leaves silhouette undefined are skipped;
    if every candidate is skipped a SelectionError is raised.
    """
    D = check_distance_matrix(D)
    best = None
    for cand in candidates:
        labels = assign(cand)
        try:
            score = silhouette_mean(D, labels)
        except UndefinedMetricError:
            continue
        if best is None or score > best.mean_silhouette:
            ids = np.unique(labels[labels >= 0])
            best = SilhouetteSelection(
                selected=cand,
                labels=labels,
                mean_silhouette=score,
                n_clusters=int(ids.size),
            )
    if best is None:
        raise SelectionError("no candidate produced a valid silhouette score")
    return best
