"""Label and neighbor distribution vectors.

Vectors are plain 1-D float64 numpy arrays of length ``n`` (the catalog
size). An attribute node's label distribution splits its unit weight
evenly over its labels; a target's neighbor distribution averages the
label distributions of its neighbor occurrences with add-one smoothing,
so every component is strictly positive.
"""
from __future__ import annotations

from collections import Counter
from typing import Iterable

import numpy as np

from .graph import AttributeNode, LabelCatalog, TemporalStarGraph, TimeWindow

SUM_TOL = 1e-9


def check_distribution(v, n: int | None = None, strict: bool = False) -> np.ndarray:
    """Validate that ``v`` lies on the probability simplex; return it as an array."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"distribution must be 1-D, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"expected {n} components, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("distribution has non-finite components")
    if strict and np.any(v <= 0):
        raise ValueError("distribution has non-positive components")
    if np.any(v < 0):
        raise ValueError("distribution has negative components")
    if abs(v.sum() - 1.0) > SUM_TOL:
        raise ValueError(f"distribution sums to {v.sum()!r}, not 1")
    return v


def compute_ldv(node: AttributeNode, catalog: LabelCatalog) -> np.ndarray:
    if not node.label_ids:
        raise ValueError(f"attribute {node.id!r} has no labels")
    ids = sorted(node.label_ids)
    if ids[-1] >= catalog.n or ids[0] < 0:
        raise ValueError(f"attribute {node.id!r} has label ids outside [0, {catalog.n})")
    v = np.zeros(catalog.n)
    v[ids] = 1.0 / len(ids)
    return v


def label_mass(occurrences: Iterable[AttributeNode], catalog: LabelCatalog) -> tuple[np.ndarray, int]:
    """Unsmoothed sum of neighbor label distributions and the occurrence count."""
    mass = np.zeros(catalog.n)
    total = 0
    # distinct label sets are few, so tally them before touching the vector
    for label_ids, count in Counter(node.label_ids for node in occurrences).items():
        ids = list(label_ids)
        mass[ids] += count / len(ids)
        total += count
    return mass, total


def compute_ndv(occurrences: Iterable[AttributeNode], catalog: LabelCatalog) -> np.ndarray:
    """Smoothed neighbor distribution: ``(mass_i + 1) / (count + n)``.

    An empty neighbor multiset gives the uniform vector.
    """
    mass, count = label_mass(occurrences, catalog)
    return (mass + 1.0) / (count + catalog.n)


def ndv_for(g: TemporalStarGraph, target: str, w: TimeWindow, unique: bool = False) -> np.ndarray:
    return compute_ndv(g.neighbors_in_window(target, w, unique=unique), g.catalog)


def ndv_matrix(g: TemporalStarGraph, targets, w: TimeWindow, unique: bool = False) -> np.ndarray:
    """Neighbor distributions of ``targets`` stacked row-wise."""
    out = np.empty((len(targets), g.n))
    for row, t in enumerate(targets):
        out[row] = ndv_for(g, t, w, unique=unique)
    return out


def project_to_simplex(raw) -> np.ndarray:
    """Clamp negatives to zero and renormalize; all-nonpositive input maps to uniform.

    This is the clamp-and-renormalize rule used to turn raw linear-model
    output into a distribution, not the Euclidean projection.
    """
    raw = np.asarray(raw, dtype=float)
    clipped = np.where(raw > 0, raw, 0.0)
    total = clipped.sum()
    if not np.isfinite(total) or total <= 0:
        return np.full(raw.shape[0], 1.0 / raw.shape[0])
    if np.all(raw >= 0) and abs(total - 1.0) <= 1e-12:
        # already a distribution; dividing by a sum one ulp off 1 would perturb it
        return clipped
    return clipped / total
