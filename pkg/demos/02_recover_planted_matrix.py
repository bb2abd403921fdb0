"""
Recovering a planted evolution matrix
=====================================

The synthetic generator evolves every target's label distribution with
a known column-stochastic matrix. Training on the history and current
windows should hand that matrix back, up to sampling noise.
"""

import numpy as np

from ndpredict import RunWindows, TimeWindow, train
from ndpredict.synth import SynthSpec, generate, random_stochastic_matrix

windows = RunWindows(TimeWindow(0, 100), TimeWindow(100, 200), TimeWindow(200, 300))

# each label keeps 40% of its mass and scatters the rest
L0 = random_stochastic_matrix(6, np.random.default_rng(100), stay=0.4)
g, truth = generate(SynthSpec(n=6, num_targets=200, windows=windows, matrices=[L0], events_per_window=500, seed=0))
print(g.summary())

model = train(g, windows, k=1, seed=0)
L = model.matrix_for(0)

np.set_printoptions(precision=3, suppress=True)
print("planted:\n", L0)
print("recovered:\n", L)
print("max abs error:", np.abs(L - L0).max())

# the stored matrix acts on column vectors, so it should sit closer to L0 than to its transpose
print("distance to L0:  ", np.linalg.norm(L - L0))
print("distance to L0^T:", np.linalg.norm(L - L0.T))
