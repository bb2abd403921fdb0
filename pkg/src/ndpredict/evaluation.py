"""Score EFM and the baselines on one shared target set."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import baselines, efm
from .distribution import ndv_for
from .graph import RunWindows, TemporalStarGraph
from .metrics import EvaluationReport, pd_group_report, score
from .seeding import derive_seed

logger = logging.getLogger(__name__)

METHODS = ("efm", "mvm", "mf", "biasedmf")
DISPLAY = {"efm": "EFM", "mvm": "MVM", "mf": "MF", "biasedmf": "BiasedMF"}


@dataclass
class EvalSettings:
    k: int = 1
    seed: int = 0
    ridge_fallback: float = efm.DEFAULT_RIDGE_FALLBACK
    lr: float = 0.001
    lam: float = 0.02
    epochs: int = 100
    factors: int | None = None  # defaults to the label count
    methods: Sequence[str] = METHODS
    leave_one_out: bool = False
    unique: bool = False
    num_targets: int | None = None

    def __post_init__(self):
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if not self.methods:
            raise ValueError("no methods selected")


@dataclass(eq=False)
class EvaluationResult:
    report: EvaluationReport
    predictions: dict[str, dict[str, np.ndarray]]
    targets: tuple[str, ...]
    efm_model: efm.EfmModel | None = None
    factor_models: dict = field(default_factory=dict, repr=False)


def evaluation_targets(g: TemporalStarGraph, windows: RunWindows, num_targets: int | None = None, seed: int = 0) -> list[str]:
    """Targets active in all three windows, optionally a seeded sample of them."""
    pool = sorted(g.targets_active_in_all([windows.history, windows.current, windows.future]))
    if num_targets is None or num_targets >= len(pool):
        return pool
    rng = np.random.default_rng(derive_seed(seed, "evaluate.sample"))
    return sorted(rng.choice(pool, size=num_targets, replace=False).tolist())


def run_evaluation(
    g: TemporalStarGraph,
    windows: RunWindows,
    settings: EvalSettings,
    eval_targets: Iterable[str] | None = None,
    train_targets: Iterable[str] | None = None,
) -> EvaluationResult:
    """Predict the future-window distribution of every evaluation target.

    ``train_targets`` restricts the pool EFM and MVM learn from; targets
    outside it are placed by nearest centroid. MF and BiasedMF factor the
    observed-window matrix of training and evaluation targets together.
    """
    if eval_targets is None:
        targets = evaluation_targets(g, windows, settings.num_targets, settings.seed)
    else:
        targets = sorted(set(eval_targets))
    if not targets:
        raise ValueError("no evaluation targets")
    truth = {t: ndv_for(g, t, windows.future, settings.unique) for t in targets}
    predictions: dict[str, dict[str, np.ndarray]] = {}
    result = EvaluationResult(None, predictions, tuple(targets))

    wanted = [m for m in METHODS if m in settings.methods]
    if "efm" in wanted or "mvm" in wanted:
        model = efm.train(
            g,
            windows,
            settings.k,
            seed=derive_seed(settings.seed, "clustering"),
            ridge_fallback=settings.ridge_fallback,
            targets=train_targets,
            unique=settings.unique,
        )
        result.efm_model = model
        if "efm" in wanted:
            predictions["efm"] = {t: efm.predict(model, g, t, settings.leave_one_out) for t in targets}
        if "mvm" in wanted:
            cm = model.cluster_model
            latest = {t: ndv_for(g, t, windows.observed, settings.unique) for t in cm.targets}
            predictions["mvm"] = {
                t: baselines.mvm_predict(cm, latest, t, cluster=model.cluster_for(g, t), leave_one_out=settings.leave_one_out)
                for t in targets
            }

    factor_methods = [m for m in wanted if m in ("mf", "biasedmf")]
    if factor_methods:
        rows = sorted(set(targets) | set(train_targets or ()))
        R = baselines.rating_matrix(g, rows, windows.observed, settings.unique)
        row_of = {t: i for i, t in enumerate(rows)}
        for m in factor_methods:
            fm = baselines.mf_train(
                R,
                settings.factors or g.n,
                lr=settings.lr,
                lam=settings.lam,
                epochs=settings.epochs,
                seed=derive_seed(settings.seed, f"{m}.init"),
                biased=(m == "biasedmf"),
            )
            result.factor_models[m] = fm
            predictions[m] = {t: baselines.mf_predict_ndv(fm, row_of[t]) for t in targets}

    scores = {DISPLAY[m]: [score(t, predictions[m][t], truth[t]) for t in targets] for m in wanted}
    result.report = pd_group_report(scores)
    return result
