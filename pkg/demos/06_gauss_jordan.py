"""
The least-squares kernel
========================

Evolution matrices come from the normal equations, inverted with
Gauss-Jordan elimination and partial pivoting. A pivot smaller than
1e-12 stops the elimination and reports the column where it happened.
"""

import numpy as np

from ndpredict import SingularMatrix, gauss_jordan_invert, normal_equations_solve

m = np.array([[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]])
inv = gauss_jordan_invert(m)
print("inverse:\n", inv)
print("m @ inverse:\n", np.round(m @ inv, 12))

# the third row is the sum of the first two
try:
    gauss_jordan_invert(np.array([[1.0, 2.0, 3.0], [0.0, 1.0, 1.0], [1.0, 3.0, 4.0]]))
except SingularMatrix as exc:
    print("singular at column", exc.column)

# one sample cannot pin down a 3x3 matrix; a tiny ridge makes the system solvable
x = np.array([[0.2, 0.3, 0.5]])
try:
    normal_equations_solve(x, x)
except SingularMatrix:
    B = normal_equations_solve(x, x, ridge=1e-8)
    print("ridge fit reproduces the sample:", np.allclose(x @ B, x, atol=1e-6))
