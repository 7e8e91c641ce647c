"""Experiment orchestration: the fixed-k pipeline (baseline clustering,
best-model selection, reduction-dimension sweep) and the silhouette
variant where the cluster count is selected per run.

Every cell is deterministic given the corpus bytes and base_seed: repeat
seeds are derived from base_seed with a SeedSequence, sweep cells are
keyed (not ordered) by config, and report files are written in sorted
order, so two runs with the same inputs emit byte-identical CSVs.
"""

import csv
import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cluster import CLUSTERERS, CONSUMES, dbscan_sweep, select_k_by_silhouette
from .corpus import distance_matrix, load_corpus, major_group_labels, normalize_rows
from .exceptions import ConfigError, OcclustError, ParameterError, SelectionError
from .linalg import pairwise_distances
from .metrics import METRIC_NAMES, MetricReport
from .reduction import REDUCTIONS, ReductionSpec

SELECTION_METRICS = ("ac", "ari", "yi", "mi", "ami")

# naming and row order of the emitted best-model tables
METRIC_DISPLAY = {"ac": "ac", "ami": "ami", "mi": "mi", "ari": "ari", "yi": "youden"}
TABLE_METRIC_ORDER = ("ac", "ami", "mi", "ari", "yi")

CLUSTERER_DISPLAY = {
    "kmeans": "k-means",
    "kmedoids": "k-medoids",
    "dbscan": "dbScan",
    "spectral": "spectral",
}

RESULTS_COLUMNS = (
    "model", "clusterer", "k_policy", "reduction", "m1", "m2",
    "repeat", "seed", "selected_k",
    "ac", "ari", "yi", "mi", "ami", "silhouette",
)


def default_eps_grid(start=0.01, stop=2.0, step=0.01):
    count = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(count), 10)


@dataclass
class RunSettings:
    """Sweep-wide knobs, normally read from a JSON config file."""

    corpora: dict
    clusterers: tuple = ("kmeans", "kmedoids", "dbscan", "spectral")
    reductions: tuple = ("PCA", "MDS", "LE", "LLE", "LPP", "NPE", "TSNE")
    base_seed: int = 0
    repeats: int = 5
    fixed_k: int = 23
    dims: tuple | None = None
    k_range: tuple = (2, 50)
    eps_grid: np.ndarray = field(default_factory=default_eps_grid)
    min_pts: int = 5
    k_nn: int = 10
    tsne_perplexity: float = 30.0
    tsne_iterations: int = 1000
    out_dir: str = "out"
    jobs: int | None = None

    def __post_init__(self):
        if not self.corpora:
            raise ConfigError("config must map at least one model id to a corpus path")
        for c in self.clusterers:
            if c not in CLUSTERERS:
                raise ConfigError(f"unknown clusterer {c!r}")
        for r in self.reductions:
            if r not in REDUCTIONS:
                raise ConfigError(f"unknown reduction {r!r}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        self.eps_grid = np.asarray(self.eps_grid, dtype=np.float64)

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        grid = obj.pop("eps_grid", None)
        if isinstance(grid, dict):
            obj["eps_grid"] = default_eps_grid(**grid)
        elif grid is not None:
            obj["eps_grid"] = np.asarray(grid, dtype=np.float64)
        tsne = obj.pop("tsne", None)
        if tsne:
            obj["tsne_perplexity"] = tsne.get("perplexity", 30.0)
            obj["tsne_iterations"] = tsne.get("iterations", 1000)
        for key in ("clusterers", "reductions", "dims", "k_range"):
            if key in obj and obj[key] is not None:
                obj[key] = tuple(obj[key])
        known = cls.__dataclass_fields__
        unknown = set(obj) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path, overrides=()):
        try:
            with open(path, "r", encoding="utf-8") as handle:
                obj = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        for item in overrides:
            obj = _apply_override(obj, item)
        return cls.from_dict(obj)


def _apply_override(obj, item):
    """Apply a dotted key=value override (values parsed as JSON when possible)."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    target = obj
    parts = key.split(".")
    for part in parts[:-1]:
        target = target.setdefault(part, {})
        if not isinstance(target, dict):
            raise ConfigError(f"override {key!r} descends into a non-object")
    target[parts[-1]] = value
    return obj


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of the sweep."""

    model_id: str
    clusterer: str
    k_policy: str  # fixed | silhouette | dbscan_sweep
    reduction: ReductionSpec | None = None
    repeats: int = 5
    base_seed: int = 0
    corpus_path: str | None = None

    def __post_init__(self):
        if self.clusterer not in CLUSTERERS:
            raise ConfigError(f"unknown clusterer {self.clusterer!r}")
        if self.clusterer == "dbscan":
            if self.k_policy not in ("dbscan_sweep", "silhouette"):
                raise ConfigError("dbscan pairs only with eps-based policies")
        elif self.k_policy not in ("fixed", "silhouette"):
            raise ConfigError(f"unknown k_policy {self.k_policy!r}")

    @property
    def method(self):
        return f"{self.model_id}+{CLUSTERER_DISPLAY[self.clusterer]}"


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    reports: tuple
    selected_ks: tuple
    seeds: tuple
    m1: int
    m2: int | None = None

    def metric_values(self, metric):
        return np.array([getattr(r, metric) for r in self.reports])

    def mean(self, metric):
        return float(np.mean(self.metric_values(metric)))

    def std(self, metric):
        return float(np.std(self.metric_values(metric)))

    @property
    def mean_selected_k(self):
        return float(np.mean(self.selected_ks))


@dataclass(frozen=True)
class BestModelRow:
    """One row of the best-model tables: method, metric, reduction, the
    original and reduced dimensions, and the scores before/after reduction."""

    method: str
    metric: str
    reduction: str
    m1: int
    m2: int
    sigma1: float
    sigma2: float


@dataclass(frozen=True)
class SkippedCell:
    model_id: str
    clusterer: str
    reduction: str
    m2: int
    reason: str


@dataclass
class ModelData:
    """Loaded, normalized corpus of one model with its derived matrices."""

    model_id: str
    embeddings: object
    X: np.ndarray
    D: np.ndarray
    truth: object

    @property
    def m1(self):
        return self.X.shape[1]

    @property
    def n(self):
        return self.X.shape[0]


def repeat_seeds(base_seed, repeats):
    """Deterministic, well-spread per-repeat seeds."""
    return [int(s) for s in np.random.SeedSequence(base_seed).generate_state(repeats)]


def load_model_data(settings):
    """Load every configured corpus; missing or bad files are listed and
    skipped with a warning rather than aborting the run."""
    data = {}
    for model_id in sorted(settings.corpora):
        path = settings.corpora[model_id]
        try:
            embeddings = normalize_rows(load_corpus(path))
        except OcclustError as exc:
            warnings.warn(f"skipping model {model_id}: {exc}", stacklevel=2)
            continue
        data[model_id] = ModelData(
            model_id=model_id,
            embeddings=embeddings,
            X=embeddings.matrix,
            D=distance_matrix(embeddings),
            truth=major_group_labels(embeddings),
        )
    return data


def _clamped_k_range(settings, n):
    lo, hi = settings.k_range
    hi = min(hi, n - 1)
    if lo > hi:
        raise ParameterError(f"k range [{lo}, {hi}] is empty for n={n}")
    return range(lo, hi + 1)


def _cluster_once(clusterer, X, D, k_policy, seed, settings):
    """One clustering of one space under one policy; returns the assignment."""
    if k_policy == "silhouette":
        data = D if CONSUMES[clusterer] == "distances" else X
        candidates = (
            settings.eps_grid if clusterer == "dbscan" else _clamped_k_range(settings, X.shape[0])
        )
        sel = select_k_by_silhouette(
            data, clusterer, candidates, seed,
            distances=D, min_pts=settings.min_pts, n_neighbors=settings.k_nn,
        )
        return sel.assignment
    if clusterer == "dbscan":
        _, assignment = dbscan_sweep(D, settings.min_pts, settings.eps_grid,
                                     target=settings.fixed_k)
        return assignment
    if clusterer == "kmeans":
        est = CLUSTERERS[clusterer](n_clusters=settings.fixed_k, seed=seed)
    elif clusterer == "kmedoids":
        est = CLUSTERERS[clusterer](n_clusters=settings.fixed_k, seed=seed)
    else:
        est = CLUSTERERS[clusterer](
            n_clusters=settings.fixed_k, n_neighbors=settings.k_nn, seed=seed
        )
    data = D if CONSUMES[clusterer] == "distances" else X
    return est.fit(data).assignment_


def run_cell(config, make_space, truth, settings, m1):
    """Run all repeats of one cell.  make_space(seed, repeat) supplies the
    (X, D) pair the clusterer and silhouette consume; dbscan under the
    eps-sweep policy is deterministic, so its first repeat is reused."""
    seeds = repeat_seeds(config.base_seed, config.repeats)
    reports, ks = [], []
    deterministic = config.clusterer == "dbscan" and (
        config.reduction is None or config.reduction.method != "TSNE"
    )
    for r, seed in enumerate(seeds):
        if deterministic and r > 0:
            reports.append(reports[0])
            ks.append(ks[0])
            continue
        X, D = make_space(seed, r)
        assignment = _cluster_once(config.clusterer, X, D, config.k_policy, seed, settings)
        reports.append(MetricReport.compute(assignment.labels, truth.labels, D))
        ks.append(assignment.k)
    m2 = config.reduction.target_dim if config.reduction else None
    return ExperimentResult(
        config=config, reports=tuple(reports), selected_ks=tuple(ks),
        seeds=tuple(seeds), m1=m1, m2=m2,
    )


def run_baseline(settings, k_policy="fixed", model_data=None):
    """Pipeline step 1: every (model, clusterer) cell on the raw embeddings."""
    model_data = load_model_data(settings) if model_data is None else model_data
    results = []
    for model_id in sorted(model_data):
        md = model_data[model_id]
        for clusterer in settings.clusterers:
            policy = "dbscan_sweep" if (clusterer == "dbscan" and k_policy == "fixed") else k_policy
            config = ExperimentConfig(
                model_id=model_id, clusterer=clusterer, k_policy=policy,
                repeats=settings.repeats, base_seed=settings.base_seed,
                corpus_path=settings.corpora.get(model_id),
            )
            results.append(
                run_cell(config, lambda seed, r: (md.X, md.D), md.truth, settings, md.m1)
            )
    return results


def select_best(results, metric):
    """Argmax of the metric's mean over repeats; ties go to the
    lexicographically first (model, clusterer)."""
    if not results:
        raise SelectionError("no results to select from")
    ordered = sorted(results, key=lambda r: (r.config.model_id, r.config.clusterer))
    best = None
    for res in ordered:
        value = res.mean(metric)
        if np.isnan(value):
            continue
        if best is None or value > best.mean(metric):
            best = res
    if best is None:
        raise SelectionError(f"metric {metric} undefined in every result")
    return best


def reduction_dims(m1):
    """Sweep dimensions: 5..50 by 5, plus 100/200/300, plus 400..700 for
    wide embeddings; all capped below the input dimension."""
    if m1 <= 5:
        raise ParameterError(f"input dimension {m1} leaves no sweep dimensions")
    dims = set(range(5, 51, 5)) | {100, 200, 300}
    if m1 >= 768:
        dims |= {400, 500, 600, 700}
    return [d for d in sorted(dims) if d < m1]


def _reduction_spec(settings, method, m2, seed=0):
    return ReductionSpec(
        method=method, target_dim=m2, k_nn=settings.k_nn,
        perplexity=settings.tsne_perplexity, iterations=settings.tsne_iterations,
        seed=seed,
    )


def _reduce_space(md, spec):
    est = spec.build()
    source = md.D if spec.consumes == "distances" else md.X
    Y = est.fit(source).embedding_
    return Y, pairwise_distances(Y)


def run_reduction_sweep(settings, selected, baseline_results, model_data, k_policy="fixed"):
    """Pipeline step 2: score every (selected method, reduction, dimension)
    cell; failures are recorded as skipped and never abort the sweep.

    Returns (results, best_rows, skipped).
    """
    methods = []
    for res in selected:
        key = (res.config.model_id, res.config.clusterer)
        if key not in methods:
            methods.append(key)
    baseline_by_key = {
        (r.config.model_id, r.config.clusterer): r for r in baseline_results
    }

    jobs = settings.jobs or os.cpu_count() or 1
    results, skipped = {}, []

    # distinct reduced spaces first (shared across clusterers of one model)
    space_keys = []
    for model_id, _ in methods:
        md = model_data[model_id]
        dims = settings.dims or reduction_dims(md.m1)
        for method in settings.reductions:
            for m2 in dims:
                key = (model_id, method, m2)
                if key not in space_keys:
                    space_keys.append(key)

    def build_space(key):
        model_id, method, m2 = key
        md = model_data[model_id]
        if method == "TSNE":
            seeds = repeat_seeds(settings.base_seed, settings.repeats)
            return [
                _reduce_space(md, _reduction_spec(settings, method, m2, seed=seed))
                for seed in seeds
            ]
        return [_reduce_space(md, _reduction_spec(settings, method, m2))]

    spaces = {}
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for key, outcome in zip(space_keys, pool.map(_capture(build_space), space_keys)):
            spaces[key] = outcome

    cells = []
    for model_id, clusterer in methods:
        md = model_data[model_id]
        dims = settings.dims or reduction_dims(md.m1)
        for method in settings.reductions:
            for m2 in dims:
                cells.append((model_id, clusterer, method, m2))

    def run_one(cell):
        model_id, clusterer, method, m2 = cell
        md = model_data[model_id]
        outcome = spaces[(model_id, method, m2)]
        if isinstance(outcome, Exception):
            raise outcome
        policy = "dbscan_sweep" if (clusterer == "dbscan" and k_policy == "fixed") else k_policy
        spec = _reduction_spec(settings, method, m2)
        config = ExperimentConfig(
            model_id=model_id, clusterer=clusterer, k_policy=policy,
            reduction=spec, repeats=settings.repeats, base_seed=settings.base_seed,
            corpus_path=settings.corpora.get(model_id),
        )
        per_repeat = outcome if len(outcome) > 1 else None
        make_space = (
            (lambda seed, r: per_repeat[r]) if per_repeat else (lambda seed, r: outcome[0])
        )
        return run_cell(config, make_space, md.truth, settings, md.m1)

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for cell, outcome in zip(cells, pool.map(_capture(run_one), cells)):
            model_id, clusterer, method, m2 = cell
            if isinstance(outcome, Exception):
                if not isinstance(outcome, OcclustError):
                    raise outcome
                skipped.append(
                    SkippedCell(model_id, clusterer, method, m2, f"{type(outcome).__name__}: {outcome}")
                )
            else:
                results[cell] = outcome

    best_rows = []
    for model_id, clusterer in methods:
        base = baseline_by_key[(model_id, clusterer)]
        cell_results = [r for (mid, cl, _, _), r in results.items()
                        if mid == model_id and cl == clusterer]
        for metric in SELECTION_METRICS:
            candidates = [r for r in cell_results if not np.isnan(r.mean(metric))]
            if not candidates:
                continue
            # ties: alphabetically-first reduction, then smallest dimension
            candidates.sort(key=lambda r: (r.config.reduction.method, r.m2))
            winner = max(candidates, key=lambda r: r.mean(metric))
            best_rows.append(
                BestModelRow(
                    method=winner.config.method,
                    metric=metric,
                    reduction=winner.config.reduction.method,
                    m1=winner.m1,
                    m2=winner.m2,
                    sigma1=base.mean(metric),
                    sigma2=winner.mean(metric),
                )
            )
    ordered = [results[c] for c in sorted(results)]
    return ordered, best_rows, skipped


def _capture(fn):
    def wrapped(arg):
        try:
            return fn(arg)
        except Exception as exc:  # noqa: BLE001 - reported per cell
            return exc

    return wrapped


def run_fixed_pipeline(settings, model_data=None):
    """Pipeline 1: baseline at k=23 (eps sweep for dbscan), best-model
    selection per metric, then the reduction-dimension sweep."""
    model_data = load_model_data(settings) if model_data is None else model_data
    baseline = run_baseline(settings, k_policy="fixed", model_data=model_data)
    selected = [select_best(baseline, metric) for metric in SELECTION_METRICS]
    sweep, best_rows, skipped = run_reduction_sweep(
        settings, selected, baseline, model_data, k_policy="fixed"
    )
    return baseline, sweep, best_rows, skipped


def run_silhouette_pipeline(settings, model_data=None):
    """Pipeline 2: cluster counts picked by mean silhouette per repeat,
    best models re-selected, and the reduction sweep repeated for them."""
    model_data = load_model_data(settings) if model_data is None else model_data
    baseline = run_baseline(settings, k_policy="silhouette", model_data=model_data)
    selected = [select_best(baseline, metric) for metric in SELECTION_METRICS]
    sweep, best_rows, skipped = run_reduction_sweep(
        settings, selected, baseline, model_data, k_policy="silhouette"
    )
    return baseline, sweep, best_rows, skipped


def _fmt(value):
    # floats use repr (shortest exact round-trip) so stored results rebuild
    # the in-memory tables bit-for-bit
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(results, best_rows, out_dir, skipped=()):
    """Write results.csv (one row per repeat per cell), best_models.csv,
    and one metric-vs-dimension series CSV per (method, reduction)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    rows = []
    for res in results:
        cfg = res.config
        red = cfg.reduction.method if cfg.reduction else "none"
        for r, (report, k, seed) in enumerate(zip(res.reports, res.selected_ks, res.seeds)):
            rows.append((
                cfg.model_id, cfg.clusterer, cfg.k_policy, red,
                res.m1, res.m2, r, seed, k,
                report.ac, report.ari, report.yi, report.mi, report.ami, report.silhouette,
            ))
    rows.sort(key=lambda row: (row[0], row[1], row[3], row[5] if row[5] is not None else -1, row[6]))
    results_path = os.path.join(out_dir, "results.csv")
    with open(results_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RESULTS_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    paths["results"] = results_path

    paths["best_models"] = write_best_models_csv(
        best_rows, os.path.join(out_dir, "best_models.csv")
    )

    series_groups = {}
    for res in results:
        if res.config.reduction is None:
            continue
        key = (res.config.method, res.config.reduction.method)
        series_groups.setdefault(key, []).append(res)
    for (method, reduction), group in sorted(series_groups.items()):
        name = f"series_{method}_{reduction}.csv".replace(" ", "")
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            header = ["m2"]
            for metric in METRIC_NAMES:
                header += [f"{metric}_mean", f"{metric}_std"]
            writer.writerow(header)
            for res in sorted(group, key=lambda r: r.m2):
                row = [res.m2]
                for metric in METRIC_NAMES:
                    row += [_fmt(res.mean(metric)), _fmt(res.std(metric))]
                writer.writerow(row)
        paths[f"series:{method}:{reduction}"] = path

    if skipped:
        skipped_path = os.path.join(out_dir, "skipped.csv")
        with open(skipped_path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["model", "clusterer", "reduction", "m2", "reason"])
            for cell in sorted(skipped, key=lambda c: (c.model_id, c.clusterer, c.reduction, c.m2)):
                writer.writerow([cell.model_id, cell.clusterer, cell.reduction, cell.m2, cell.reason])
        paths["skipped"] = skipped_path
    return paths


def write_best_models_csv(best_rows, path):
    """Write the best-model table with the header and metric naming of the
    reported tables (yi appears as 'youden')."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "metric", "reduction", "m1", "m2", "sigma1", "sigma2"])
        ordered = sorted(
            best_rows, key=lambda b: (b.method, TABLE_METRIC_ORDER.index(b.metric))
        )
        for row in ordered:
            writer.writerow([
                row.method, METRIC_DISPLAY[row.metric], row.reduction, row.m1, row.m2,
                _fmt(row.sigma1), _fmt(row.sigma2),
            ])
    return path


def read_results_csv(path):
    """Parse results.csv back into typed row dicts."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            parsed = dict(row)
            for key in ("m1", "repeat", "seed", "selected_k"):
                parsed[key] = int(row[key])
            parsed["m2"] = int(row["m2"]) if row["m2"] else None
            for key in ("ac", "ari", "yi", "mi", "ami", "silhouette"):
                parsed[key] = float(row[key])
            rows.append(parsed)
    return rows


def best_rows_from_results(rows):
    """Rebuild the best-model table from stored per-repeat rows."""
    def key(row):
        return (row["model"], row["clusterer"])

    baseline_means = {}
    reduced = {}
    for row in rows:
        if row["reduction"] == "none":
            baseline_means.setdefault(key(row), []).append(row)
        else:
            reduced.setdefault(key(row) + (row["reduction"], row["m2"]), []).append(row)

    def mean(group, metric):
        return float(np.mean([r[metric] for r in group]))

    best = []
    for method_key in sorted(baseline_means):
        model, clusterer = method_key
        cells = {k: v for k, v in reduced.items() if k[:2] == method_key}
        if not cells:
            continue
        for metric in SELECTION_METRICS:
            scored = [
                (mean(group, metric), k[2], k[3], group)
                for k, group in sorted(cells.items())
            ]
            scored = [s for s in scored if not np.isnan(s[0])]
            if not scored:
                continue
            value, reduction, m2, group = max(scored, key=lambda s: s[0])
            best.append(
                BestModelRow(
                    method=f"{model}+{CLUSTERER_DISPLAY[clusterer]}",
                    metric=metric,
                    reduction=reduction,
                    m1=group[0]["m1"],
                    m2=m2,
                    sigma1=mean(baseline_means[method_key], metric),
                    sigma2=value,
                )
            )
    return best
