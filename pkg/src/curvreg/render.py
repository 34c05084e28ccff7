"""Visualization of displacement fields as deformed-grid images."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import map_coordinates

from .fields import ScalarField, VectorField2

__all__ = ["render_deformed_grid"]

_BACKGROUND = 255.0
_INK = 0.0
# points plotted per unit cell along each polyline; dense enough that
# consecutive rounded points are at most one pixel apart for |∇u| ≲ 7
_SUPERSAMPLE = 8


def render_deformed_grid(u: VectorField2, stride: int) -> ScalarField:
    """Draw the map x ↦ x + u(x) applied to a regular grid.

    Every ``stride``-th grid row and column is traced as a black polyline
    on a white canvas of the same shape as ``u``.  Each line is sampled
    densely (supersampled point plotting), the displacement is bilinearly
    interpolated at the sample points, and the displaced points are rounded
    to the nearest pixel.  Points landing outside the canvas are clipped.
    """
    if stride < 2:
        raise ValueError(f"stride must be >= 2, got {stride}")
    height, width = u.x_comp.shape
    h = u.x_comp.spacing
    canvas = np.full((height, width), _BACKGROUND)
    u1 = u.x_comp.data
    u2 = u.y_comp.data

    def plot_polyline(ys: np.ndarray, xs: np.ndarray) -> None:
        # displacements are in physical units; convert to index units
        dx = map_coordinates(u1, [ys, xs], order=1, mode="nearest") / h
        dy = map_coordinates(u2, [ys, xs], order=1, mode="nearest") / h
        ix = np.rint(xs + dx).astype(np.intp)
        iy = np.rint(ys + dy).astype(np.intp)
        keep = (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)
        canvas[iy[keep], ix[keep]] = _INK

    ts_x = np.linspace(0.0, width - 1.0, (width - 1) * _SUPERSAMPLE + 1)
    for row in range(0, height, stride):
        plot_polyline(np.full_like(ts_x, float(row)), ts_x)
    ts_y = np.linspace(0.0, height - 1.0, (height - 1) * _SUPERSAMPLE + 1)
    for col in range(0, width, stride):
        plot_polyline(ts_y, np.full_like(ts_y, float(col)))

    return ScalarField(canvas, u.x_comp.spacing)
