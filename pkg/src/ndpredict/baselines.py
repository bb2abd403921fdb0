"""Comparison methods: cluster mean (MVM) and (biased) matrix factorization.

The factor models see the observed window as one static target-by-label
matrix, so they ignore how a target's neighbors drift over time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .clustering import ClusterModel
from .distribution import label_mass, project_to_simplex
from .graph import TemporalStarGraph, TimeWindow

INIT_SCALE = 0.05


class MFDivergedError(FloatingPointError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"matrix factorization diverged at epoch {epoch} (non-finite loss)")


# --- MVM ----------------------------------------------------------------------


def mvm_predict(
    model: ClusterModel,
    ndvs_latest: Mapping[str, np.ndarray],
    target: str,
    cluster: int | None = None,
    leave_one_out: bool = False,
) -> np.ndarray:
    """Mean of the latest distributions of ``target``'s cluster members.

    ``cluster`` overrides the lookup for targets that were not clustered.
    With ``leave_one_out`` the target itself is dropped unless it is alone.
    """
    if cluster is None:
        cluster = model.cluster_index(target)
    members = model.members(cluster)
    if leave_one_out and len(members) > 1:
        members = [t for t in members if t != target]
    if not members:
        raise ValueError(f"cluster {cluster} is empty")
    return np.mean([ndvs_latest[t] for t in members], axis=0)


# --- matrix factorization -----------------------------------------------------


@dataclass(eq=False)
class FactorModel:
    """Factors ``P`` (targets x D), ``Q`` (labels x D) and optional biases."""

    P: np.ndarray
    Q: np.ndarray
    b_u: np.ndarray
    b_m: np.ndarray
    biased: bool
    lr: float
    lam: float
    epochs: int
    seed: int
    loss_history: list = field(default_factory=list, repr=False)

    @property
    def D(self) -> int:
        return self.P.shape[1]

    def reconstruct(self) -> np.ndarray:
        R = self.P @ self.Q.T
        if self.biased:
            R = R + self.b_u[:, None] + self.b_m[None, :]
        return R

    def predict_row(self, u: int) -> np.ndarray:
        row = self.Q @ self.P[u]
        if self.biased:
            row = row + self.b_u[u] + self.b_m
        return row


def cell_loss(p, q, b_u, b_m, r, lam, biased) -> float:
    """Regularized squared error of one observed cell."""
    pred = float(p @ q) + (b_u + b_m if biased else 0.0)
    reg = p @ p + q @ q + (b_u * b_u + b_m * b_m if biased else 0.0)
    return 0.5 * (r - pred) ** 2 + 0.5 * lam * reg


def cell_gradients(p, q, b_u, b_m, r, lam, biased):
    """Gradients of :func:`cell_loss` w.r.t. ``(p, q, b_u, b_m)``."""
    e = r - (float(p @ q) + (b_u + b_m if biased else 0.0))
    gp = -e * q + lam * p
    gq = -e * p + lam * q
    if biased:
        return gp, gq, -e + lam * b_u, -e + lam * b_m
    return gp, gq, 0.0, 0.0


def total_loss(model: FactorModel, R: np.ndarray) -> float:
    err = R - model.reconstruct()
    reg = (model.P ** 2).sum() + (model.Q ** 2).sum()
    if model.biased:
        reg += (model.b_u ** 2).sum() + (model.b_m ** 2).sum()
    return float(0.5 * (err ** 2).sum() + 0.5 * model.lam * reg)


def mf_train(
    R,
    D: int,
    lr: float = 0.001,
    lam: float = 0.02,
    epochs: int = 100,
    seed: int = 0,
    biased: bool = False,
) -> FactorModel:
    """Fit ``R ≈ P Q^T`` (plus biases) by per-cell SGD over all cells.

    Each epoch visits every cell once in a seeded random order. Factors
    start uniform in ``[-0.05, 0.05]``; biases start at zero.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or not np.all(np.isfinite(R)):
        raise ValueError("R must be a finite 2-D matrix")
    if D < 1:
        raise ValueError(f"D must be positive, got {D}")
    n_rows, n_cols = R.shape
    rng = np.random.default_rng(seed)
    P = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n_rows, D))
    Q = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n_cols, D))
    model = FactorModel(P, Q, np.zeros(n_rows), np.zeros(n_cols), biased, lr, lam, epochs, seed)
    model.loss_history.append(total_loss(model, R))

    b_u, b_m = model.b_u, model.b_m
    cells = [(u, m) for u in range(n_rows) for m in range(n_cols)]
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, epochs + 1):
            for idx in rng.permutation(len(cells)):
                u, m = cells[idx]
                gp, gq, gbu, gbm = cell_gradients(P[u], Q[m], b_u[u], b_m[m], R[u, m], lam, biased)
                P[u] -= lr * gp
                Q[m] -= lr * gq
                if biased:
                    b_u[u] -= lr * gbu
                    b_m[m] -= lr * gbm
            loss = total_loss(model, R)
            if not np.isfinite(loss):
                raise MFDivergedError(epoch)
            model.loss_history.append(loss)
    return model


def mf_predict_ndv(model: FactorModel, target_index: int) -> np.ndarray:
    """Reconstructed row, clamped and renormalized onto the simplex."""
    if not model.loss_history:
        raise ValueError("model is untrained")
    if not 0 <= target_index < model.P.shape[0]:
        raise IndexError(f"target index {target_index} out of range")
    return project_to_simplex(model.predict_row(target_index))


def rating_matrix(g: TemporalStarGraph, targets: Sequence[str], window: TimeWindow, unique: bool = False) -> np.ndarray:
    """Unsmoothed neighbor-label mass per target over ``window``."""
    R = np.empty((len(targets), g.n))
    for row, t in enumerate(targets):
        R[row] = label_mass(g.neighbors_in_window(t, window, unique=unique), g.catalog)[0]
    return R
