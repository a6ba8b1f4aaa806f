"""Coefficients of the semi-implicit BDFk/EXTk family (k = 1, 2, 3).

For ``B du/dt = L u + N(u)`` one step reads::

    (bdf[0]/dt) B u^{n+1} - L u^{n+1}
        = -(1/dt) B sum_i bdf[i] u^{n+1-i} + sum_i ext[i-1] N(u^{n+1-i})
"""

import numpy as np

BDF = {
    1: np.array([1.0, -1.0]),
    2: np.array([1.5, -2.0, 0.5]),
    3: np.array([11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0]),
}

EXT = {
    1: np.array([1.0]),
    2: np.array([2.0, -1.0]),
    3: np.array([3.0, -3.0, 1.0]),
}


def ramp_order(step, order):
    """Order used at 0-based ``step`` when starting from a single state."""
    return min(order, step + 1)
