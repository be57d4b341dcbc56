"""Parameter layout of the upper-triangular factor ``T`` (``rho ~ T^dag T``).

``params[0:4]`` are the real diagonal; then (re, im) pairs for the entries
(0,1), (0,2), (0,3), (1,2), (1,3), (2,3).
"""
import numpy as np

N_PARAMS = 16
DIAG = np.arange(4)
OFF_ROW = np.array([0, 0, 0, 1, 1, 2])
OFF_COL = np.array([1, 2, 3, 2, 3, 3])
