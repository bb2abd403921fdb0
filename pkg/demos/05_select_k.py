"""
Choosing the number of clusters
===============================

The sweep never looks at the future window. It shifts history and
current back by one current-window length, trains on the shifted pair,
and scores predictions against the real current window.
"""

from ndpredict import RunWindows, TimeWindow, select_k
from ndpredict.synth import SynthSpec, cyclic_drift_matrix, generate

# yearly steps: history 2006-2009, current 2010, future 2011
windows = RunWindows(TimeWindow(2006, 2010), TimeWindow(2010, 2011), TimeWindow(2011, 2012))
mats = [cyclic_drift_matrix(6, 0.6, shift=s + 1) for s in range(4)]
g, _ = generate(SynthSpec(
    n=6, num_targets=400, windows=windows, num_clusters=4, matrices=mats,
    events_per_window=(400, 100, 100), base_concentration=8.0, step_length=1, seed=2,
))

sel = select_k(g, windows, [1, 2, 4, 8], sample_size=200, seed=0)
print("shifted windows:", sel.windows.as_dict())
for k, s in sorted(sel.scores.items()):
    print(f"k={k:<3d} mean eta {s:.6f}" + ("  <- chosen" if k == sel.best_k else ""))
