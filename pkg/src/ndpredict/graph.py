"""Temporal star-schema network storage.

Target nodes link to labeled attribute nodes through time-stamped events.
A :class:`TemporalStarGraph` is immutable once built; every query is
read-only.
"""
from __future__ import annotations

import bisect
import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


class IngestError(ValueError):
    """Raised when an events or labels source fails validation."""

    def __init__(self, message: str, source: str | None = None, line: int | None = None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


@dataclass(frozen=True)
class LabelCatalog:
    """Ordered label set of one attribute type.

    The label order fixes vector component indices for a whole run.
    """

    labels: tuple[str, ...]
    attribute_type: str = "attribute"

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            seen = set()
            dup = next(lab for lab in self.labels if lab in seen or seen.add(lab))
            raise IngestError(f"duplicate label name {dup!r}")
        if len(self.labels) < 2:
            raise IngestError(f"need at least 2 label types, got {len(self.labels)}")

    @classmethod
    def from_names(cls, names: Iterable[str], attribute_type: str = "attribute") -> "LabelCatalog":
        """Build a catalog with lexicographic label order."""
        return cls(tuple(sorted(set(names))), attribute_type)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._lookup[label]
        except KeyError:
            raise KeyError(f"unknown label {label!r}") from None

    @property
    def _lookup(self) -> dict[str, int]:
        # cached on first use; the dataclass is frozen so bypass __setattr__
        try:
            return self.__dict__["_lookup_cache"]
        except KeyError:
            table = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_lookup_cache", table)
            return table


@dataclass(frozen=True)
class AttributeNode:
    id: str
    label_ids: frozenset[int]

    def __post_init__(self):
        if not self.label_ids:
            raise IngestError(f"attribute {self.id!r} has an empty label set")


@dataclass(frozen=True)
class LinkEvent:
    target_id: str
    attribute_id: str
    timestamp: int


@dataclass(frozen=True, order=True)
class TimeWindow:
    """Half-open interval ``[start, end)`` of integer timestamps."""

    start: int
    end: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"window start must be < end, got [{self.start}, {self.end})")

    def __contains__(self, t: int) -> bool:
        return self.start <= t < self.end

    @property
    def length(self) -> int:
        return self.end - self.start

    def shift(self, delta: int) -> "TimeWindow":
        return TimeWindow(self.start + delta, self.end + delta)

    def __str__(self):
        return f"[{self.start}, {self.end})"


def combine_windows(first: TimeWindow, second: TimeWindow) -> TimeWindow:
    """Merge two adjacent windows into one, e.g. history plus current."""
    if first.end != second.start:
        raise ValueError(f"windows {first} and {second} are not adjacent")
    return TimeWindow(first.start, second.end)


@dataclass(frozen=True)
class RunWindows:
    """The historical, current and future windows of one run."""

    history: TimeWindow
    current: TimeWindow
    future: TimeWindow

    def __post_init__(self):
        if self.history.end != self.current.start:
            raise ValueError(
                f"history {self.history} and current {self.current} must be adjacent"
            )
        if self.future.start < self.current.end:
            raise ValueError(f"future {self.future} overlaps current {self.current}")

    @property
    def observed(self) -> TimeWindow:
        """History and current as one window."""
        return combine_windows(self.history, self.current)

    def shift(self, delta: int) -> "RunWindows":
        return RunWindows(self.history.shift(delta), self.current.shift(delta), self.future.shift(delta))

    def as_dict(self) -> dict:
        return {
            "t_h_start": self.history.start,
            "t_h_end": self.history.end,
            "t_c_start": self.current.start,
            "t_c_end": self.current.end,
            "t_f_start": self.future.start,
            "t_f_end": self.future.end,
        }

    @classmethod
    def from_dict(cls, d) -> "RunWindows":
        t_h_end = int(d["t_h_end"])
        t_c_start = int(d.get("t_c_start", t_h_end))
        t_c_end = int(d["t_c_end"])
        t_f_start = int(d.get("t_f_start", t_c_end))
        return cls(
            TimeWindow(int(d["t_h_start"]), t_h_end),
            TimeWindow(t_c_start, t_c_end),
            TimeWindow(t_f_start, int(d["t_f_end"])),
        )


@dataclass(frozen=True)
class GraphSummary:
    events: int
    targets: int
    attributes: int
    labels: int

    def __str__(self):
        return (
            f"events={self.events} targets={self.targets} "
            f"attributes={self.attributes} labels={self.labels}"
        )


@dataclass(frozen=True, eq=False)
class TemporalStarGraph:
    catalog: LabelCatalog
    attributes: dict[str, AttributeNode]
    events: tuple[LinkEvent, ...]
    _by_target: dict = field(init=False, repr=False)

    def __post_init__(self):
        by_target: dict[str, list[tuple[int, str]]] = defaultdict(list)
        for ev in self.events:
            if ev.attribute_id not in self.attributes:
                raise IngestError(f"unknown attribute {ev.attribute_id!r} in event {ev}")
            by_target[ev.target_id].append((ev.timestamp, ev.attribute_id))
        index = {}
        for target, pairs in by_target.items():
            # stable sort keeps file order among equal timestamps
            pairs.sort(key=lambda p: p[0])
            index[target] = ([p[0] for p in pairs], [p[1] for p in pairs])
        object.__setattr__(self, "_by_target", index)

    @property
    def n(self) -> int:
        return self.catalog.n

    @property
    def targets(self) -> list[str]:
        return sorted(self._by_target)

    def summary(self) -> GraphSummary:
        return GraphSummary(len(self.events), len(self._by_target), len(self.attributes), self.catalog.n)

    def _window_slice(self, target: str, window: TimeWindow) -> list[str]:
        entry = self._by_target.get(target)
        if entry is None:
            return []
        times, attrs = entry
        lo = bisect.bisect_left(times, window.start)
        hi = bisect.bisect_left(times, window.end)
        return attrs[lo:hi]

    def neighbors_in_window(self, target: str, window: TimeWindow, unique: bool = False) -> list[AttributeNode]:
        """Attribute neighbors of ``target`` linked inside ``window``.

        Each link event is one occurrence, so an attribute linked twice
        appears twice. ``unique=True`` collapses repeats (set semantics).
        """
        ids = self._window_slice(target, window)
        if unique:
            ids = list(dict.fromkeys(ids))
        return [self.attributes[a] for a in ids]

    def event_count(self, target: str, window: TimeWindow) -> int:
        return len(self._window_slice(target, window))

    def targets_active_in_all(self, windows: Sequence[TimeWindow]) -> set[str]:
        """Targets with at least one event in every window."""
        if not windows:
            raise ValueError("need at least one window")
        return {t for t in self._by_target if all(self.event_count(t, w) > 0 for w in windows)}


def neighbors_in_window(g: TemporalStarGraph, target: str, w: TimeWindow, unique: bool = False) -> list[AttributeNode]:
    return g.neighbors_in_window(target, w, unique=unique)


def targets_active_in_all(g: TemporalStarGraph, windows: Sequence[TimeWindow]) -> set[str]:
    return g.targets_active_in_all(windows)


# --- file formats -----------------------------------------------------------

EVENTS_HEADER = ("target_id", "attribute_id", "timestamp")
LABELS_HEADER = ("attribute_id", "labels")


def _lines(source) -> tuple[Iterable[str], str]:
    if isinstance(source, (str, Path)):
        path = Path(source)
        return path.read_text().splitlines(), str(path)
    if isinstance(source, io.TextIOBase):
        return source.read().splitlines(), getattr(source, "name", "<stream>")
    return list(source), "<records>"


def _records(source, header: tuple[str, ...]):
    lines, name = _lines(source)
    reader = csv.reader(lines)
    first = next(reader, None)
    if first is None:
        raise IngestError("missing header line", name, 1)
    if tuple(c.strip() for c in first) != header:
        raise IngestError(f"expected header {','.join(header)!r}, got {','.join(first)!r}", name, 1)
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise IngestError(f"expected {len(header)} fields, got {len(row)}", name, lineno)
        yield lineno, [c.strip() for c in row], name


def read_labels(source) -> list[tuple[str, list[str]]]:
    """Parse ``attribute_id,label1;label2;...`` records."""
    out = []
    seen = set()
    for lineno, (attr, labels), name in _records(source, LABELS_HEADER):
        if not attr:
            raise IngestError("empty attribute id", name, lineno)
        if attr in seen:
            raise IngestError(f"attribute {attr!r} listed twice", name, lineno)
        seen.add(attr)
        names = [lab.strip() for lab in labels.split(";") if lab.strip()]
        if not names:
            raise IngestError(f"attribute {attr!r} has an empty label set", name, lineno)
        if len(set(names)) != len(names):
            raise IngestError(f"attribute {attr!r} repeats a label", name, lineno)
        out.append((attr, names))
    return out


def read_events(source, known_attributes: set[str] | None = None) -> list[LinkEvent]:
    """Parse ``target_id,attribute_id,timestamp`` records."""
    out = []
    for lineno, (target, attr, ts), name in _records(source, EVENTS_HEADER):
        if not target or not attr:
            raise IngestError("empty target or attribute id", name, lineno)
        try:
            t = int(ts)
        except ValueError:
            raise IngestError(f"malformed timestamp {ts!r}", name, lineno) from None
        if known_attributes is not None and attr not in known_attributes:
            raise IngestError(f"unknown attribute {attr!r}", name, lineno)
        out.append(LinkEvent(target, attr, t))
    return out


def ingest(events_source, labels_source, attribute_type: str = "attribute") -> TemporalStarGraph:
    """Parse and validate an events file and a labels file into a graph.

    Sources may be paths, open text streams or iterables of lines. Label
    order is lexicographic over every label name seen in the labels source.
    """
    label_records = read_labels(labels_source)
    catalog = LabelCatalog.from_names((lab for _, names in label_records for lab in names), attribute_type)
    attributes = {
        attr: AttributeNode(attr, frozenset(catalog.index(lab) for lab in names))
        for attr, names in label_records
    }
    events = read_events(events_source, set(attributes))
    return TemporalStarGraph(catalog, attributes, tuple(events))


def write_labels(path, graph: TemporalStarGraph) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABELS_HEADER)
        for attr_id in sorted(graph.attributes):
            node = graph.attributes[attr_id]
            w.writerow([attr_id, ";".join(graph.catalog.labels[i] for i in sorted(node.label_ids))])


def write_events(path, graph: TemporalStarGraph) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for ev in graph.events:
            w.writerow([ev.target_id, ev.attribute_id, ev.timestamp])

