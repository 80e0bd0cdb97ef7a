"""Periodic (cyclic) tridiagonal solves."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded


def solve_periodic_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Solve ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]``.

    Indices wrap around (``x[-1]`` is ``x[n-1]``).  The corner entries are
    removed by a rank-one Sherman-Morrison correction and the remaining
    banded system is handed to LAPACK.
    """
    a = np.asarray(lower, dtype=float)
    b = np.array(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    d = np.asarray(rhs, dtype=float)
    n = b.size
    if n < 3:
        raise ValueError("periodic tridiagonal system needs n >= 3")
    gamma = -b[0]
    b[0] -= gamma
    b[-1] -= a[0] * c[-1] / gamma
    ab = np.zeros((3, n))
    ab[0, 1:] = c[:-1]
    ab[1] = b
    ab[2, :-1] = a[1:]
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = c[-1]
    rhs2 = np.stack([d, u], axis=1)
    sol = solve_banded((1, 1), ab, rhs2, check_finite=False)
    y, z = sol[:, 0], sol[:, 1]
    # v = (1, 0, ..., 0, a[0]/gamma)
    vy = y[0] + a[0] * y[-1] / gamma
    vz = z[0] + a[0] * z[-1] / gamma
    return y - z * (vy / (1.0 + vz))
