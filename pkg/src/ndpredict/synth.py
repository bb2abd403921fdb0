"""Synthetic star networks with planted clusters and evolution matrices.

Each target belongs to a planted cluster. Its history-window label
distribution is drawn from a Dirichlet around the cluster center; the
cluster's column-stochastic matrix evolves it into the current and then
the future window. Link events are sampled from those distributions, so
the bundle returned alongside the graph carries the exact quantities the
pipeline should recover.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import AttributeNode, LabelCatalog, LinkEvent, RunWindows, TemporalStarGraph, TimeWindow, write_events, write_labels

WINDOW_NAMES = ("history", "current", "future")


def cyclic_drift_matrix(n: int, stay: float, shift: int = 1) -> np.ndarray:
    """Keep ``stay`` of each label's mass and move the rest ``shift`` labels on."""
    L = stay * np.eye(n)
    L += (1.0 - stay) * np.roll(np.eye(n), shift, axis=0)
    return L


def random_stochastic_matrix(n: int, rng: np.random.Generator, stay: float = 0.5, concentration: float = 1.0) -> np.ndarray:
    """Column-stochastic matrix with ``stay`` on the diagonal and Dirichlet off-diagonal mass."""
    L = np.zeros((n, n))
    for j in range(n):
        off = rng.dirichlet(np.full(n - 1, concentration))
        col = np.insert(off * (1.0 - stay), j, 0.0)
        col[j] += stay
        L[:, j] = col
    return L


def check_stochastic(L, tol: float = 1e-9) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"planted matrix must be square, got {L.shape}")
    if np.any(L < 0):
        raise ValueError("planted matrix has negative entries")
    if np.max(np.abs(L.sum(axis=0) - 1.0)) > tol:
        raise ValueError("planted matrix columns must sum to 1")
    return L


@dataclass
class SynthSpec:
    """Generator settings.

    ``base_concentration`` controls how tightly targets sit around their
    cluster center; a ``(lo, hi)`` pair draws each target's concentration
    log-uniformly, giving targets of varied entropy. ``jitter`` is the
    Dirichlet concentration of per-target deviation from the planted
    evolution; ``None`` means none. ``events_per_window`` is one count for
    all windows or one per window. Without explicit ``matrices`` each
    cluster gets a random column-stochastic matrix keeping ``stay`` of
    every label's mass in place.

    By default each window is one evolution step. With ``step_length``
    the distribution instead evolves every ``step_length`` time units
    counted from the history start, so long windows mix several steps.
    """

    n: int
    num_targets: int
    windows: RunWindows
    num_clusters: int = 1
    matrices: Sequence[np.ndarray] | None = None
    centers: Sequence[np.ndarray] | None = None
    events_per_window: int | Sequence[int] = 100
    base_concentration: float | tuple[float, float] = 1.0
    jitter: float | None = None
    activity: float = 1.0
    attributes_per_label: int = 10
    labels_per_attribute: int = 1
    stay: float = 0.5
    step_length: int | None = None
    seed: int = 0

    def validate(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.num_targets < 1 or self.num_clusters < 1:
            raise ValueError("need at least one target and one cluster")
        if self.matrices is not None:
            if len(self.matrices) != self.num_clusters:
                raise ValueError(f"expected {self.num_clusters} planted matrices, got {len(self.matrices)}")
            for L in self.matrices:
                if np.shape(L) != (self.n, self.n):
                    raise ValueError(f"planted matrix has shape {np.shape(L)}, expected {(self.n, self.n)}")
                check_stochastic(L)
        if self.centers is not None and len(self.centers) != self.num_clusters:
            raise ValueError(f"expected {self.num_clusters} centers")
        counts = self.event_counts
        if any(c < 0 for c in counts):
            raise ValueError("event counts must be nonnegative")
        if not 0.0 <= self.activity <= 1.0:
            raise ValueError("activity must lie in [0, 1]")
        if not 1 <= self.labels_per_attribute <= self.n:
            raise ValueError("labels_per_attribute must lie in [1, n]")
        if self.step_length is not None and self.step_length < 1:
            raise ValueError("step_length must be positive")
        if not 0.0 <= self.stay <= 1.0:
            raise ValueError("stay must lie in [0, 1]")
        if self.jitter is not None and self.jitter <= 0:
            raise ValueError("jitter concentration must be positive")

    @property
    def event_counts(self) -> tuple[int, int, int]:
        e = self.events_per_window
        if isinstance(e, (int, np.integer)):
            return (int(e),) * 3
        if len(e) != 3:
            raise ValueError("events_per_window needs one count or three")
        return tuple(int(c) for c in e)


@dataclass(eq=False)
class SynthTruth:
    """Ground truth for a generated network.

    ``distributions[window][target]`` is the pre-smoothing label
    distribution events were sampled from; ``pool_ldv[:, l]`` is the mean
    label vector of attributes drawn for label ``l`` (identity when
    attributes are single-labeled).
    """

    catalog: LabelCatalog
    windows: RunWindows
    clusters: dict[str, int]
    matrices: list[np.ndarray]
    centers: list[np.ndarray]
    distributions: dict[str, dict[str, np.ndarray]]
    event_counts: dict[str, dict[str, int]]
    pool_ldv: np.ndarray
    seed: int = 0
    active: dict[str, set[str]] = field(default_factory=dict)

    def window(self, name: str) -> TimeWindow:
        return getattr(self.windows, name)

    def expected_mass(self, target: str, window: str) -> np.ndarray:
        return self.event_counts[window][target] * (self.pool_ldv @ self.distributions[window][target])

    def expected_ndv(self, target: str, window: str) -> np.ndarray:
        """Smoothed distribution implied by the expected neighbor mass."""
        m = self.event_counts[window][target]
        n = self.catalog.n
        return (self.expected_mass(target, window) + 1.0) / (m + n)

    def to_dict(self) -> dict:
        return {
            "labels": list(self.catalog.labels),
            "windows": self.windows.as_dict(),
            "seed": self.seed,
            "clusters": dict(sorted(self.clusters.items())),
            "matrices": [L.tolist() for L in self.matrices],
            "centers": [c.tolist() for c in self.centers],
            "distributions": {
                w: {t: v.tolist() for t, v in sorted(d.items())} for w, d in self.distributions.items()
            },
            "event_counts": {w: dict(sorted(d.items())) for w, d in self.event_counts.items()},
            "active": {w: sorted(s) for w, s in self.active.items()},
            "pool_ldv": self.pool_ldv.tolist(),
        }


def _label_names(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"L{i:0{width}d}" for i in range(n)]


def _default_centers(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    # distinct dominant label per cluster; the uniform floor keeps every
    # label observable so each column of the evolution matrix is identifiable
    centers = []
    for c in range(k):
        v = 0.4 * np.eye(n)[(c * max(1, n // k)) % n] + 0.3 * rng.dirichlet(np.ones(n)) + 0.3 / n
        centers.append(v / v.sum())
    return centers


def generate(spec: SynthSpec) -> tuple[TemporalStarGraph, SynthTruth]:
    spec.validate()
    n, k = spec.n, spec.num_clusters
    rng = np.random.default_rng(spec.seed)
    names = _label_names(n)
    catalog = LabelCatalog(tuple(names), "synthetic")

    matrices = [check_stochastic(L).copy() for L in spec.matrices] if spec.matrices is not None else [
        random_stochastic_matrix(n, rng, stay=spec.stay) for _ in range(k)
    ]
    centers = [np.asarray(c, dtype=float) for c in spec.centers] if spec.centers is not None else _default_centers(n, k, rng)

    # attribute pools: each label owns attributes_per_label nodes whose first label is it
    attributes: dict[str, AttributeNode] = {}
    pools: list[list[str]] = []
    pool_ldv = np.zeros((n, n))
    for label in range(n):
        pool = []
        for j in range(spec.attributes_per_label):
            extra = []
            if spec.labels_per_attribute > 1:
                others = [i for i in range(n) if i != label]
                extra = rng.choice(others, size=spec.labels_per_attribute - 1, replace=False).tolist()
            ids = frozenset([label, *extra])
            aid = f"a{label}_{j}"
            attributes[aid] = AttributeNode(aid, ids)
            pool.append(aid)
            pool_ldv[list(ids), label] += 1.0 / len(ids) / spec.attributes_per_label
        pools.append(pool)

    width = len(str(spec.num_targets - 1))
    targets = [f"t{i:0{width}d}" for i in range(spec.num_targets)]
    clusters = {t: i % k for i, t in enumerate(targets)}
    counts = spec.event_counts
    windows = [spec.windows.history, spec.windows.current, spec.windows.future]

    # step_weights[w][s]: share of window w's timestamps falling in evolution step s
    if spec.step_length is None:
        step_weights = [np.eye(3)[i] for i in range(3)]
    else:
        origin = spec.windows.history.start
        n_steps = (spec.windows.future.end - 1 - origin) // spec.step_length + 1
        step_weights = [
            np.bincount((np.arange(w.start, w.end) - origin) // spec.step_length, minlength=n_steps) / w.length
            for w in windows
        ]
    n_steps = len(step_weights[0])

    distributions = {w: {} for w in WINDOW_NAMES}
    event_counts = {w: {} for w in WINDOW_NAMES}
    active = {w: set() for w in WINDOW_NAMES}
    events: list[LinkEvent] = []
    for t in targets:
        c = clusters[t]
        conc = spec.base_concentration
        if isinstance(conc, tuple):
            lo, hi = conc
            conc = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        steps = [rng.dirichlet(conc * n * centers[c])]
        for _ in range(1, n_steps):
            p = matrices[c] @ steps[-1]
            if spec.jitter is not None:
                p = rng.dirichlet(spec.jitter * n * p + 1e-12)
            steps.append(p / p.sum())
        steps = np.array(steps)
        for wi, (wname, window) in enumerate(zip(WINDOW_NAMES, windows)):
            distributions[wname][t] = step_weights[wi] @ steps
            m = counts[wi]
            if spec.activity < 1.0 and rng.random() >= spec.activity:
                m = 0
            event_counts[wname][t] = m
            if m == 0:
                continue
            active[wname].add(t)
            stamps = np.sort(rng.integers(window.start, window.end, size=m))
            if spec.step_length is None:
                step_of = np.full(m, wi)
            else:
                step_of = (stamps - spec.windows.history.start) // spec.step_length
            labels = np.empty(m, dtype=int)
            for s_idx in np.unique(step_of):
                sel = step_of == s_idx
                labels[sel] = rng.choice(n, size=int(sel.sum()), p=steps[s_idx])
            picks = rng.integers(spec.attributes_per_label, size=m)
            events.extend(LinkEvent(t, pools[lab][j], int(ts)) for lab, j, ts in zip(labels, picks, stamps))

    graph = TemporalStarGraph(catalog, attributes, tuple(events))
    truth = SynthTruth(catalog, spec.windows, clusters, matrices, centers, distributions, event_counts, pool_ldv, spec.seed, active)
    return graph, truth


def write_dataset(out_dir, graph: TemporalStarGraph, truth: SynthTruth | None = None) -> dict[str, Path]:
    """Write ``events.csv``, ``labels.csv`` and optionally ``truth.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"events": out / "events.csv", "labels": out / "labels.csv"}
    write_events(paths["events"], graph)
    write_labels(paths["labels"], graph)
    if truth is not None:
        paths["truth"] = out / "truth.json"
        paths["truth"].write_text(json.dumps(truth.to_dict(), sort_keys=True) + "\n")
    return paths
