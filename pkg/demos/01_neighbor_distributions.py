"""
Neighbor distributions of a small star network
==============================================

A target node links to attribute nodes over time; each attribute carries
one or more labels. This walk-through builds a tiny network by hand and
reads off the smoothed label distribution of a target's neighbors.
"""

import numpy as np

from ndpredict import TimeWindow, compute_ldv, ingest, ndv_for

# two movies, one of them tagged with two genres
labels = """attribute_id,labels
m1,drama
m2,comedy;drama
"""

# a viewer watches m1 twice and m2 once, then m1 again much later
events = """target_id,attribute_id,timestamp
alice,m1,3
alice,m1,5
alice,m2,8
alice,m1,40
"""

g = ingest(events.splitlines(), labels.splitlines())
print(g.summary())
print("label order:", g.catalog.labels)

# a multi-label attribute splits its weight evenly across its labels
print("label vector of m2:", compute_ldv(g.attributes["m2"], g.catalog))

# windows are half-open, so [0, 10) sees the first three links only
early = TimeWindow(0, 10)
print("early window:", ndv_for(g, "alice", early))

# every window is smoothed with one pseudo-count per label,
# so an empty window gives the uniform distribution
print("empty window:", ndv_for(g, "alice", TimeWindow(10, 30)))

# repeat links count each time by default; set semantics counts m1 once
print("multiset:", ndv_for(g, "alice", TimeWindow(0, 50)))
print("set:     ", ndv_for(g, "alice", TimeWindow(0, 50), unique=True))
assert np.isclose(ndv_for(g, "alice", early).sum(), 1.0)
