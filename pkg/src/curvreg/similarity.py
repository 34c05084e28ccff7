"""SSD distance, its force term, and the Gauss-Newton linearization.

The force is the gradient density of the SSD distance with respect to the
displacement: (T(x+u) - R) * grad T sampled at x+u. Its linearization keeps
only the outer product of the warped image gradient (a rank-1 positive
semidefinite 2x2 block per node), dropping the residual-times-second-
derivative term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from curvreg.fields import ScalarField, VectorField2, sample_warped, warped_gradient

__all__ = ["ForceLinearization", "ssd", "force", "linearize_force"]


@dataclass(frozen=True)
class ForceLinearization:
    """Per-node 2x2 blocks sigma[l, m] = (warped d_l T) * (warped d_m T)."""

    sigma11: ScalarField
    sigma12: ScalarField
    sigma21: ScalarField
    sigma22: ScalarField


def _check_dims(T: ScalarField, R: ScalarField, u: VectorField2 | None = None):
    if T.shape != R.shape:
        raise ValueError(f"image shapes differ: {T.shape} vs {R.shape}")
    if u is not None and u.shape != T.shape:
        raise ValueError(f"displacement shape {u.shape} != image shape {T.shape}")


def ssd(T: ScalarField, R: ScalarField, u: VectorField2) -> float:
    """(1/2) h^2 sum (T(x+u) - R)^2."""
    _check_dims(T, R, u)
    res = sample_warped(T, u).data - R.data
    return float(0.5 * T.spacing**2 * np.sum(res * res))


def force(T: ScalarField, R: ScalarField, u: VectorField2) -> VectorField2:
    """Force field (T(x+u) - R) * grad T(x+u); zero wherever the residual is."""
    _check_dims(T, R, u)
    res = sample_warped(T, u).data - R.data
    wg = warped_gradient(T, u)
    return VectorField2(T.like(res * wg.x_comp.data), T.like(res * wg.y_comp.data))


def linearize_force(T: ScalarField, u: VectorField2) -> ForceLinearization:
    """Rank-1 PSD per-node blocks from the warped image gradient."""
    if u.shape != T.shape:
        raise ValueError(f"displacement shape {u.shape} != image shape {T.shape}")
    wg = warped_gradient(T, u)
    gx, gy = wg.x_comp.data, wg.y_comp.data
    cross = T.like(gx * gy)
    return ForceLinearization(
        sigma11=T.like(gx * gx),
        sigma12=cross,
        sigma21=cross,
        sigma22=T.like(gy * gy),
    )
