"""Hot numeric kernels with an optional jit path.

The pointwise Gauss-Seidel sweep visits nodes in a fixed lexicographic order
and each update reads values written earlier in the same sweep, so it cannot
be vectorized with numpy. The loop is compiled with numba when available;
setting the environment variable ``CURVREG_NO_NUMBA=1`` (or running without
numba installed) selects the pure-Python implementation of the same
function. Both paths are deterministic; they may differ from each other in
the last bits because of instruction-level rounding differences.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA and os.environ.get("CURVREG_NO_NUMBA", "") != "1"

__all__ = ["HAS_NUMBA", "USING_NUMBA", "gs_sweep", "gs_sweep_python", "warmup"]


def _gs_sweep_impl(u1, u2, b1, b2, s11, s12, s22, cx, cy, r, omega, guard):
    """One relaxed Gauss-Seidel sweep of the coupled 2x2 node systems.

    Solves (-r*L + sigma) u = b in place, where L is the composite Laplacian
    described by the 1D band arrays cx (5, W) and cy (5, H): band k holds the
    coefficient of the neighbor at offset k-2 along that axis. Returns the
    number of nodes whose 2x2 block determinant fell below ``guard`` (those
    nodes are left unchanged).
    """
    hgt, wid = u1.shape
    n_singular = 0
    for y in range(hgt):
        for x in range(wid):
            acc1 = 0.0
            acc2 = 0.0
            for k in range(5):
                off = k - 2
                if off == 0:
                    continue
                xx = x + off
                if 0 <= xx < wid:
                    c = cx[k, x]
                    acc1 += c * u1[y, xx]
                    acc2 += c * u2[y, xx]
                yy = y + off
                if 0 <= yy < hgt:
                    c = cy[k, y]
                    acc1 += c * u1[yy, x]
                    acc2 += c * u2[yy, x]
            diag = -r * (cx[2, x] + cy[2, y])
            a11 = diag + s11[y, x]
            a22 = diag + s22[y, x]
            a12 = s12[y, x]
            det = a11 * a22 - a12 * a12
            if abs(det) < guard:
                n_singular += 1
                continue
            rhs1 = b1[y, x] + r * acc1
            rhs2 = b2[y, x] + r * acc2
            g1 = (a22 * rhs1 - a12 * rhs2) / det
            g2 = (a11 * rhs2 - a12 * rhs1) / det
            u1[y, x] = (1.0 - omega) * u1[y, x] + omega * g1
            u2[y, x] = (1.0 - omega) * u2[y, x] + omega * g2
    return n_singular


gs_sweep_python = _gs_sweep_impl

if HAS_NUMBA:
    gs_sweep_numba = numba.njit(cache=True)(_gs_sweep_impl)


def gs_sweep(u1, u2, b1, b2, s11, s12, s22, cx, cy, r, omega, guard):
    """Dispatch to the jitted sweep unless disabled by CURVREG_NO_NUMBA=1."""
    impl = gs_sweep_numba if USING_NUMBA else gs_sweep_python
    return impl(u1, u2, b1, b2, s11, s12, s22, cx, cy, r, omega, guard)


def warmup() -> None:
    """Compile the jit kernels on a tiny problem (no-op for the pure path)."""
    if not USING_NUMBA:
        return
    z = np.zeros((3, 3))
    bands = np.zeros((5, 3))
    bands[2, :] = -1.0
    gs_sweep_numba(z.copy(), z.copy(), z, z, z, z, z, bands, bands, 1.0, 1.0, 1e-9)
