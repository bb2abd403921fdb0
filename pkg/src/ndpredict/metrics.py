"""Prediction scoring: absolute accuracy, prediction difficulty, virtual accuracy.

Absolute accuracy rescales the Euclidean distance between two
distributions (at most sqrt(2)) into [0, 1]. Prediction difficulty is one
minus half the base-n entropy of the true distribution, so flat
distributions score 1/2 and peaked ones approach 1. Virtual accuracy is
their product.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

SQRT2 = math.sqrt(2.0)
N_GROUPS = 5


def absolute_accuracy(predicted, truth) -> float:
    p = np.asarray(predicted, dtype=float)
    t = np.asarray(truth, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {t.shape}")
    eta = 1.0 - float(np.linalg.norm(p - t)) / SQRT2
    return min(1.0, max(0.0, eta))


def temporal_entropy(w) -> float:
    """Shannon entropy of ``w`` in base ``n = len(w)``."""
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if n < 2:
        raise ValueError("entropy in base n needs n >= 2")
    if np.any(w <= 0):
        raise ValueError("entropy needs strictly positive components")
    h = -float(np.sum(w * np.log(w))) / math.log(n)
    # rounding can push a uniform vector just past 1
    return min(h, 1.0)


def prediction_difficulty(w) -> float:
    return 1.0 - temporal_entropy(w) / 2.0


def virtual_accuracy(eta: float, g: float) -> float:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if not 0.5 <= g < 1.0:
        raise ValueError(f"difficulty must lie in [1/2, 1), got {g}")
    return eta * g


@dataclass(frozen=True, eq=False)
class PredictionScore:
    target_id: str
    eta: float
    pd: float
    va: float
    predicted: np.ndarray
    truth: np.ndarray


def score(target_id: str, predicted, truth) -> PredictionScore:
    """Score one prediction; difficulty is taken from the truth."""
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    eta = absolute_accuracy(predicted, truth)
    g = prediction_difficulty(truth)
    return PredictionScore(target_id, eta, g, virtual_accuracy(eta, g), predicted, truth)


@dataclass(frozen=True)
class GroupStats:
    size: int
    pd_min: float
    pd_max: float
    mean_eta: dict[str, float]
    mean_va: dict[str, float]


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """Per-method scores over one shared target set.

    ``groups[0]`` holds the highest-difficulty targets.
    """

    methods: tuple[str, ...]
    scores: dict[str, list[PredictionScore]]
    mean_eta: dict[str, float]
    mean_va: dict[str, float]
    groups: list[GroupStats]
    order: tuple[str, ...]

    def to_dict(self, include_vectors: bool = False) -> dict:
        targets = []
        by_method = {m: {s.target_id: s for s in self.scores[m]} for m in self.methods}
        for t in self.order:
            first = by_method[self.methods[0]][t]
            row = {"target_id": t, "pd": first.pd, "methods": {}}
            if include_vectors:
                row["truth"] = first.truth.tolist()
            for m in self.methods:
                s = by_method[m][t]
                entry = {"eta": s.eta, "va": s.va}
                if include_vectors:
                    entry["predicted"] = s.predicted.tolist()
                row["methods"][m] = entry
            targets.append(row)
        return {
            "methods": list(self.methods),
            "num_targets": len(self.order),
            "mean_eta": dict(self.mean_eta),
            "mean_va": dict(self.mean_va),
            "pd_groups": [
                {
                    "group": i + 1,
                    "size": gs.size,
                    "pd_min": gs.pd_min,
                    "pd_max": gs.pd_max,
                    "mean_eta": dict(gs.mean_eta),
                    "mean_va": dict(gs.mean_va),
                }
                for i, gs in enumerate(self.groups)
            ],
            "targets": targets,
        }

    def to_json(self, include_vectors: bool = False) -> str:
        return json.dumps(self.to_dict(include_vectors), indent=1, sort_keys=True) + "\n"

    def to_table(self) -> str:
        lines = [format_va_table({"run": self}), "", "Mean absolute accuracy by PD group (1 = hardest)"]
        header = f"{'group':<7}{'size':>6}{'pd range':>19}" + "".join(f"{m:>11}" for m in self.methods)
        lines.append(header)
        for i, gs in enumerate(self.groups, start=1):
            rng = f"{gs.pd_min:.4f}-{gs.pd_max:.4f}"
            lines.append(
                f"{i:<7}{gs.size:>6}{rng:>19}" + "".join(f"{gs.mean_eta[m]:>11.4f}" for m in self.methods)
            )
        return "\n".join(lines) + "\n"


def format_va_table(reports: Mapping[str, EvaluationReport]) -> str:
    """Mean virtual accuracy with methods as rows and runs as columns."""
    runs = list(reports)
    methods = []
    for r in reports.values():
        methods += [m for m in r.methods if m not in methods]
    width = max(12, *(len(r) + 2 for r in runs))
    lines = [f"{'Method':<10}" + "".join(f"{r:>{width}}" for r in runs)]
    for m in methods:
        cells = []
        for r in runs:
            v = reports[r].mean_va.get(m)
            cells.append(f"{v:>{width}.4f}" if v is not None else f"{'-':>{width}}")
        lines.append(f"{m:<10}" + "".join(cells))
    return "\n".join(lines)


def group_sizes(count: int, groups: int = N_GROUPS) -> list[int]:
    """Near-equal contiguous bucket sizes; earlier buckets take the remainder."""
    base, extra = divmod(count, groups)
    return [base + (1 if i < extra else 0) for i in range(groups)]


def pd_group_report(scores: Mapping[str, Sequence[PredictionScore]], groups: int = N_GROUPS) -> EvaluationReport:
    """Rank targets by difficulty (descending, ties by id) and bucket them."""
    methods = tuple(scores)
    if not methods:
        raise ValueError("no methods to report")
    by_method = {m: {s.target_id: s for s in scores[m]} for m in methods}
    ref = set(by_method[methods[0]])
    for m in methods[1:]:
        if set(by_method[m]) != ref:
            raise ValueError(f"method {m!r} scored a different target set than {methods[0]!r}")
    for m in methods:
        if len(by_method[m]) != len(scores[m]):
            raise ValueError(f"method {m!r} scored a target more than once")

    pd_of = {t: by_method[methods[0]][t].pd for t in ref}
    order = tuple(sorted(ref, key=lambda t: (-pd_of[t], t)))

    def means(ids, attr):
        return {m: float(np.mean([getattr(by_method[m][t], attr) for t in ids])) if ids else float("nan") for m in methods}

    buckets = []
    start = 0
    for size in group_sizes(len(order), groups):
        ids = order[start:start + size]
        start += size
        pds = [pd_of[t] for t in ids]
        buckets.append(
            GroupStats(
                size,
                min(pds) if pds else float("nan"),
                max(pds) if pds else float("nan"),
                means(ids, "eta"),
                means(ids, "va"),
            )
        )
    return EvaluationReport(
        methods,
        {m: [by_method[m][t] for t in order] for m in methods},
        means(order, "eta"),
        means(order, "va"),
        buckets,
        order,
    )
