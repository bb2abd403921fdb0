"""Evolution Factor Model: per-cluster label evolution matrices.

Training clusters the targets active in both the history and current
windows by their history-window neighbor distribution, then fits one
matrix per cluster by least squares so that the current-window
distribution is approximated from the history-window one. Prediction
applies the cluster's matrix to the distribution over history and current
combined.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .clustering import ClusterModel, kmeans
from .distribution import ndv_for, ndv_matrix, project_to_simplex
from .graph import LabelCatalog, RunWindows, TemporalStarGraph
from .linalg import SingularMatrix, matvec, normal_equations_solve, transpose
from .seeding import derive_seed

logger = logging.getLogger(__name__)

MODEL_FORMAT = "ndpredict.efm/1"
DEFAULT_RIDGE_FALLBACK = 1e-8


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class EvolutionMatrix:
    """Column-form evolution matrix ``L``: a distribution ``w`` evolves to ``L @ w``."""

    entries: np.ndarray
    source_cluster: frozenset[str]
    ridge_used: float = 0.0
    inherited: bool = False

    def __post_init__(self):
        e = self.entries
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError(f"evolution matrix must be square, got shape {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("evolution matrix has non-finite entries")


@dataclass(frozen=True, eq=False)
class EfmModel:
    cluster_model: ClusterModel
    matrices: dict[int, EvolutionMatrix]
    windows: RunWindows
    catalog: LabelCatalog
    unique: bool = False
    ridge_fallback: float = DEFAULT_RIDGE_FALLBACK
    # per-cluster (targets, X, Y); only present on freshly trained models
    samples: dict = field(default_factory=dict, repr=False)

    @property
    def k(self) -> int:
        return self.cluster_model.k

    @property
    def seed(self) -> int:
        return self.cluster_model.seed

    def cluster_for(self, g: TemporalStarGraph, target: str) -> int:
        """Trained cluster of ``target``; unseen targets go to the nearest centroid."""
        try:
            return self.cluster_model.cluster_index(target)
        except KeyError:
            return self.cluster_model.nearest(ndv_for(g, target, self.windows.observed, self.unique))

    def matrix_for(self, cluster: int) -> np.ndarray:
        return self.matrices[cluster].entries


def _fit(X: np.ndarray, Y: np.ndarray, ridge_fallback: float) -> tuple[np.ndarray, float]:
    """Solve the normal equations, retrying once with a ridge term.

    Returns ``(L, ridge)`` with ``L`` the transpose of the row-form solution.
    """
    try:
        return transpose(normal_equations_solve(X, Y)), 0.0
    except SingularMatrix:
        if ridge_fallback <= 0:
            raise
    return transpose(normal_equations_solve(X, Y, ridge=ridge_fallback)), ridge_fallback


def regression_samples(g: TemporalStarGraph, targets: Sequence[str], windows: RunWindows, unique: bool = False):
    """History-window and current-window distributions of ``targets``, row-aligned."""
    X = ndv_matrix(g, targets, windows.history, unique)
    Y = ndv_matrix(g, targets, windows.current, unique)
    return X, Y


def train(
    g: TemporalStarGraph,
    windows: RunWindows,
    k: int,
    seed: int = 0,
    ridge_fallback: float = DEFAULT_RIDGE_FALLBACK,
    targets: Iterable[str] | None = None,
    unique: bool = False,
) -> EfmModel:
    """Learn one evolution matrix per K-means cluster.

    ``targets`` optionally restricts the training pool; only those active
    in both the history and current windows are used. A cluster whose
    normal equations stay singular after the ridge retry inherits the
    matrix fitted on the whole pool.
    """
    active = g.targets_active_in_all([windows.history, windows.current])
    if targets is not None:
        active &= set(targets)
    pool = sorted(active)
    if not pool:
        raise TrainingError("no targets are active in both the history and current windows")
    if k > len(pool):
        raise TrainingError(f"k={k} exceeds the {len(pool)} trainable targets")

    X_all, Y_all = regression_samples(g, pool, windows, unique)
    clusters = kmeans(dict(zip(pool, X_all)), k, seed=seed)
    row_of = {t: i for i, t in enumerate(pool)}

    global_fit = None
    matrices, samples = {}, {}
    for c in clusters.nonempty_clusters():
        members = clusters.members(c)
        rows = [row_of[t] for t in members]
        X, Y = X_all[rows], Y_all[rows]
        samples[c] = (tuple(members), X, Y)
        try:
            L, ridge = _fit(X, Y, ridge_fallback)
            matrices[c] = EvolutionMatrix(L, frozenset(members), ridge)
        except SingularMatrix:
            if ridge_fallback <= 0:
                raise
            if global_fit is None:
                try:
                    global_fit = _fit(X_all, Y_all, ridge_fallback)
                except SingularMatrix as exc:
                    raise TrainingError(f"cluster {c} and the global pool are both singular") from exc
            logger.warning("cluster %d (%d members) is singular; using the global matrix", c, len(members))
            matrices[c] = EvolutionMatrix(global_fit[0], frozenset(members), global_fit[1], inherited=True)

    return EfmModel(clusters, matrices, windows, g.catalog, unique, ridge_fallback, samples)


def predict_raw(model: EfmModel, g: TemporalStarGraph, target: str, leave_one_out: bool = False) -> np.ndarray:
    """Matrix-vector product before projection onto the simplex."""
    w = ndv_for(g, target, model.windows.observed, model.unique)
    c = model.cluster_for(g, target)
    L = model.matrix_for(c)
    if leave_one_out:
        L = _leave_one_out_matrix(model, c, target, L)
    return matvec(L, w)


def predict(model: EfmModel, g: TemporalStarGraph, target: str, leave_one_out: bool = False) -> np.ndarray:
    return project_to_simplex(predict_raw(model, g, target, leave_one_out))


def _leave_one_out_matrix(model: EfmModel, cluster: int, target: str, fallback: np.ndarray) -> np.ndarray:
    if cluster not in model.samples:
        raise TrainingError("leave-one-out needs a freshly trained model (training samples are not serialized)")
    members, X, Y = model.samples[cluster]
    if target not in members:
        return fallback
    keep = [i for i, t in enumerate(members) if t != target]
    if not keep:
        return fallback
    try:
        return _fit(X[keep], Y[keep], model.ridge_fallback)[0]
    except SingularMatrix:
        return fallback


# --- K selection --------------------------------------------------------------


@dataclass(frozen=True)
class KSelection:
    best_k: int
    scores: dict[int, float]
    sample: tuple[str, ...]
    windows: RunWindows

    def as_dict(self) -> dict:
        return {
            "best_k": self.best_k,
            "scores": [{"k": k, "mean_eta": s} for k, s in sorted(self.scores.items())],
            "sample_size": len(self.sample),
            "windows": self.windows.as_dict(),
        }


def backshifted_windows(windows: RunWindows) -> RunWindows:
    """Shift history and current back by one current-window length.

    The real current window then plays the part of the future window, so
    candidate models can be scored without reading future data.
    """
    delta = -windows.current.length
    return RunWindows(windows.history.shift(delta), windows.current.shift(delta), windows.current)


def select_k(
    g: TemporalStarGraph,
    windows: RunWindows,
    k_candidates: Sequence[int],
    sample_size: int = 500,
    seed: int = 0,
    ridge_fallback: float = DEFAULT_RIDGE_FALLBACK,
    unique: bool = False,
) -> KSelection:
    """Pick the cluster count with the best mean absolute accuracy.

    Scores each candidate on a uniform sample of targets using
    :func:`backshifted_windows`. Ties go to the smallest ``k``.
    """
    from .metrics import absolute_accuracy

    if not k_candidates:
        raise ValueError("k_candidates is empty")
    split = backshifted_windows(windows)
    eligible = sorted(g.targets_active_in_all([split.history, split.current, split.future]))
    if not eligible:
        raise TrainingError(
            f"no targets are active in all backshifted windows "
            f"(history {split.history}, current {split.current}, scored on {split.future}); "
            f"make the history window longer than the current window"
        )
    if sample_size > len(eligible):
        raise ValueError(f"sample_size={sample_size} exceeds the {len(eligible)} eligible targets")
    rng = np.random.default_rng(derive_seed(seed, "select_k.sample"))
    sample = tuple(sorted(rng.choice(eligible, size=sample_size, replace=False).tolist()))
    truth = {t: ndv_for(g, t, split.future, unique) for t in sample}

    scores = {}
    for k in sorted(set(int(k) for k in k_candidates)):
        model = train(g, split, k, seed=seed, ridge_fallback=ridge_fallback, unique=unique)
        etas = [absolute_accuracy(predict(model, g, t), truth[t]) for t in sample]
        scores[k] = float(np.mean(etas))
        logger.info("k=%d mean eta=%.4f", k, scores[k])
    best = max(scores, key=lambda k: (scores[k], -k))
    return KSelection(best, scores, sample, split)


# --- serialization ------------------------------------------------------------


def model_to_dict(model: EfmModel) -> dict:
    cm = model.cluster_model
    return {
        "format": MODEL_FORMAT,
        "catalog": {"attribute_type": model.catalog.attribute_type, "labels": list(model.catalog.labels)},
        "windows": model.windows.as_dict(),
        "k": cm.k,
        "seed": cm.seed,
        "unique": model.unique,
        "ridge_fallback": model.ridge_fallback,
        "centroids": cm.centroids.tolist(),
        "assignments": {t: int(c) for t, c in zip(cm.targets, cm.labels)},
        "matrices": {
            str(c): {
                "entries": m.entries.tolist(),
                "ridge_used": m.ridge_used,
                "inherited": m.inherited,
                "size": len(m.source_cluster),
            }
            for c, m in sorted(model.matrices.items())
        },
    }


def model_from_dict(d: dict) -> EfmModel:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {d.get('format')!r}")
    catalog = LabelCatalog(tuple(d["catalog"]["labels"]), d["catalog"]["attribute_type"])
    windows = RunWindows.from_dict(d["windows"])
    targets = tuple(sorted(d["assignments"]))
    labels = np.array([d["assignments"][t] for t in targets], dtype=int)
    cm = ClusterModel(int(d["k"]), targets, labels, np.array(d["centroids"], dtype=float), int(d["seed"]))
    matrices = {}
    for key, m in d["matrices"].items():
        c = int(key)
        matrices[c] = EvolutionMatrix(
            np.array(m["entries"], dtype=float),
            frozenset(cm.members(c)),
            float(m["ridge_used"]),
            bool(m["inherited"]),
        )
    return EfmModel(cm, matrices, windows, catalog, bool(d["unique"]), float(d["ridge_fallback"]))


def save_model(model: EfmModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n")


def load_model(path) -> EfmModel:
    return model_from_dict(json.loads(Path(path).read_text()))
