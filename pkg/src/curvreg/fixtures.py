"""Synthetic template/reference pairs with known ground truth.

Stand-ins for clinical test images that cannot be redistributed: a shifted
Gaussian blob, a rotated soft-edged square, and a blob deformed by a smooth
analytic displacement. Intensities are in [0, 1] (the scale all tuned solver
configurations assume) and every pair is a deterministic function of its
parameters. Where the exact aligning displacement is known it is returned
alongside the images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from curvreg.fields import ScalarField, VectorField2

__all__ = ["FIXTURE_KINDS", "FixturePair", "make_fixture"]

FIXTURE_KINDS = ("gaussian_shift", "square_rotate", "smooth_warp")


@dataclass(frozen=True)
class FixturePair:
    """Template, reference, and (when analytic) the displacement u with
    T(x + u(x)) = R(x)."""

    template: ScalarField
    reference: ScalarField
    u_true: VectorField2 | None = None


def _grids(size: int) -> tuple[np.ndarray, np.ndarray]:
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    return xx, yy


def _gaussian(xx, yy, cx, cy, sigma, amplitude):
    return amplitude * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2)
                              / (2.0 * sigma**2))


def _gaussian_shift(size: int, shift=(4.0, 0.0), sigma: float = 6.0,
                    amplitude: float = 1.0) -> FixturePair:
    """Blob translated by ``shift`` pixels; u_true is the constant shift."""
    sx, sy = (float(shift), 0.0) if np.isscalar(shift) else map(float, shift)
    xx, yy = _grids(size)
    c = size / 2.0
    R = _gaussian(xx, yy, c, c, sigma, amplitude)
    T = _gaussian(xx, yy, c + sx, c + sy, sigma, amplitude)
    u = VectorField2(ScalarField(np.full((size, size), sx)),
                     ScalarField(np.full((size, size), sy)))
    return FixturePair(ScalarField(T), ScalarField(R), u)


def _soft_square(xx, yy, cx, cy, half, edge, amplitude):
    """Axis-aligned square with sigmoid edges of width ``edge``."""
    px = 1.0 / (1.0 + np.exp(-(half - np.abs(xx - cx)) / edge))
    py = 1.0 / (1.0 + np.exp(-(half - np.abs(yy - cy)) / edge))
    return amplitude * px * py


def _square_rotate(size: int, angle_deg: float = 15.0, half: float = None,
                   edge: float = 1.5, amplitude: float = 1.0) -> FixturePair:
    """Soft square versus a rotated copy; u_true is the rigid rotation about
    the image center, (Q - I)(x - c) for rotation matrix Q."""
    if half is None:
        half = size / 5.0
    xx, yy = _grids(size)
    c = size / 2.0
    R = _soft_square(xx, yy, c, c, half, edge, amplitude)
    th = np.deg2rad(angle_deg)
    cos, sin = np.cos(th), np.sin(th)
    # template's content is the reference pre-rotated, so sampling it at
    # x + u(x) = c + Q(x - c) with the inverse rotation Q recovers the
    # reference exactly
    rx = cos * (xx - c) - sin * (yy - c)
    ry = sin * (xx - c) + cos * (yy - c)
    T = _soft_square(rx + c, ry + c, c, c, half, edge, amplitude)
    u1 = (cos - 1.0) * (xx - c) + sin * (yy - c)
    u2 = -sin * (xx - c) + (cos - 1.0) * (yy - c)
    u = VectorField2(ScalarField(u1), ScalarField(u2))
    return FixturePair(ScalarField(T), ScalarField(R), u)


def _smooth_warp(size: int, amplitude: float = 2.0, sigma: float = None,
                 blob_amplitude: float = 1.0) -> FixturePair:
    """Blob deformed by a smooth sinusoidal displacement. The reference is
    the template evaluated analytically at x + u(x), so u_true aligns them
    up to interpolation error only; its Jacobian stays positive for
    amplitude < size/(2*pi)."""
    if sigma is None:
        sigma = size / 8.0
    xx, yy = _grids(size)
    c = size / 2.0
    k = 2.0 * np.pi / size
    u1 = amplitude * np.sin(k * yy) * np.sin(k * xx)
    u2 = -amplitude * np.sin(k * xx) * np.cos(k * yy)
    T = _gaussian(xx, yy, c, c, sigma, blob_amplitude)
    R = _gaussian(xx + u1, yy + u2, c, c, sigma, blob_amplitude)
    u = VectorField2(ScalarField(u1), ScalarField(u2))
    return FixturePair(ScalarField(T), ScalarField(R), u)


_BUILDERS = {
    "gaussian_shift": _gaussian_shift,
    "square_rotate": _square_rotate,
    "smooth_warp": _smooth_warp,
}


def make_fixture(kind: str, size: int, **params) -> FixturePair:
    """Build a named fixture pair of the given square size (>= 32)."""
    if kind not in _BUILDERS:
        raise ValueError(
            f"unknown fixture kind {kind!r}; choose from {FIXTURE_KINDS}")
    if size < 32:
        raise ValueError(f"fixture size must be >= 32, got {size}")
    return _BUILDERS[kind](size, **params)
