"""Discrete 2D grid fields and finite-difference operators.

A field stores samples ``f[y, x]`` on a uniform grid with step ``h``
(``spacing``); x is the column index and y the row index. First derivatives
use central differences at interior nodes and full one-sided differences at
the two border nodes, so they are exact on affine functions at every node.
The divergence is defined as the exact negative adjoint of the gradient
(``<grad f, v> = -<f, div v>`` holds to rounding for all fields, not just
compactly supported ones), and the Laplacian is the composition
``div(grad(f))``. Building the operators this way keeps the discrete
optimality systems used by the solvers exact gradients of the discrete
energies.

All operations are pure: input fields are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "ScalarField",
    "VectorField2",
    "grad",
    "div",
    "laplacian",
    "hessian",
    "sample_warped",
    "warped_gradient",
    "grad_matrix_1d",
    "div_matrix_1d",
    "second_diff_matrix_1d",
    "laplacian_matrix_1d",
    "laplacian_bands_1d",
]


@dataclass(frozen=True)
class ScalarField:
    """2D real grid function (image or displacement component).

    Attributes
    ----------
    data : ndarray, shape (height, width)
        Node values, float64, all finite.
    spacing : float
        Grid step h > 0 (pixel units by default).
    """

    data: np.ndarray
    spacing: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"field data must be 2D, got shape {arr.shape}")
        if arr.shape[0] < 3 or arr.shape[1] < 3:
            raise ValueError(f"field must be at least 3x3, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field data contains NaN or Inf")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def like(self, data: np.ndarray) -> "ScalarField":
        """New field with the same spacing and the given data."""
        return ScalarField(data, self.spacing)

    @staticmethod
    def zeros(height: int, width: int, spacing: float = 1.0) -> "ScalarField":
        return ScalarField(np.zeros((height, width)), spacing)


@dataclass(frozen=True)
class VectorField2:
    """Pair of scalar fields sharing shape and spacing (x and y components)."""

    x_comp: ScalarField
    y_comp: ScalarField

    def __post_init__(self):
        if self.x_comp.shape != self.y_comp.shape:
            raise ValueError(
                f"component shapes differ: {self.x_comp.shape} vs {self.y_comp.shape}"
            )
        if self.x_comp.spacing != self.y_comp.spacing:
            raise ValueError("component spacings differ")

    @property
    def shape(self) -> tuple[int, int]:
        return self.x_comp.shape

    @property
    def spacing(self) -> float:
        return self.x_comp.spacing

    def like(self, x_data: np.ndarray, y_data: np.ndarray) -> "VectorField2":
        return VectorField2(self.x_comp.like(x_data), self.y_comp.like(y_data))

    @staticmethod
    def zeros(height: int, width: int, spacing: float = 1.0) -> "VectorField2":
        return VectorField2(
            ScalarField.zeros(height, width, spacing),
            ScalarField.zeros(height, width, spacing),
        )

    @staticmethod
    def zeros_like(f: ScalarField) -> "VectorField2":
        return VectorField2.zeros(f.height, f.width, f.spacing)


# ---------------------------------------------------------------------------
# 1D operator matrices (single source of truth for the stencils)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def grad_matrix_1d(n: int, h: float = 1.0) -> np.ndarray:
    """Dense n x n first-derivative matrix: central interior, one-sided ends."""
    if n < 3:
        raise ValueError("need n >= 3")
    g = np.zeros((n, n))
    g[0, 0], g[0, 1] = -1.0, 1.0
    g[n - 1, n - 2], g[n - 1, n - 1] = -1.0, 1.0
    for j in range(1, n - 1):
        g[j, j - 1], g[j, j + 1] = -0.5, 0.5
    g /= h
    g.setflags(write=False)
    return g


@lru_cache(maxsize=None)
def div_matrix_1d(n: int, h: float = 1.0) -> np.ndarray:
    """Dense 1D divergence matrix, the negative transpose of ``grad_matrix_1d``."""
    d = -grad_matrix_1d(n, h).T.copy()
    d.setflags(write=False)
    return d


@lru_cache(maxsize=None)
def second_diff_matrix_1d(n: int, h: float = 1.0) -> np.ndarray:
    """Dense 1D second-derivative matrix (3-point; border rows reuse the
    nearest interior stencil, so the result is exact on quadratics at every
    node and vanishes on affine functions)."""
    if n < 3:
        raise ValueError("need n >= 3")
    m = np.zeros((n, n))
    for j in range(1, n - 1):
        m[j, j - 1], m[j, j], m[j, j + 1] = 1.0, -2.0, 1.0
    m[0, :3] = m[1, :3]
    m[n - 1, n - 3:] = m[n - 2, n - 3:]
    m /= h * h
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def laplacian_matrix_1d(n: int, h: float = 1.0) -> np.ndarray:
    """Dense 1D composite Laplacian div o grad (= -G^T G, symmetric NSD)."""
    m = div_matrix_1d(n, h) @ grad_matrix_1d(n, h)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def laplacian_bands_1d(n: int, h: float = 1.0) -> np.ndarray:
    """Bands of the 1D composite Laplacian as a (5, n) array.

    ``bands[k, j]`` is the coefficient of ``f[j + k - 2]`` in row j
    (zero where j + k - 2 falls outside the grid). Used by the pointwise
    Gauss-Seidel kernel and the dense solver oracle.
    """
    m = laplacian_matrix_1d(n, h)
    bands = np.zeros((5, n))
    for k in range(5):
        off = k - 2
        d = np.diagonal(m, off)
        if off >= 0:
            bands[k, : n - off] = d
        else:
            bands[k, -off:] = d
    bands.setflags(write=False)
    return bands


# ---------------------------------------------------------------------------
# array-level stencil kernels (fast paths; fall back to the matrices when the
# sliced index ranges would overlap, i.e. n < 5)
# ---------------------------------------------------------------------------


def _gradx_arr(a: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(a)
    out[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2.0 * h)
    out[:, 0] = (a[:, 1] - a[:, 0]) / h
    out[:, -1] = (a[:, -1] - a[:, -2]) / h
    return out


def _grady_arr(a: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(a)
    out[1:-1, :] = (a[2:, :] - a[:-2, :]) / (2.0 * h)
    out[0, :] = (a[1, :] - a[0, :]) / h
    out[-1, :] = (a[-1, :] - a[-2, :]) / h
    return out


def _divx_arr(a: np.ndarray, h: float) -> np.ndarray:
    n = a.shape[1]
    if n < 5:
        return a @ div_matrix_1d(n, h).T
    out = np.empty_like(a)
    out[:, 2:-2] = (a[:, 3:-1] - a[:, 1:-3]) / (2.0 * h)
    out[:, 0] = a[:, 0] / h + a[:, 1] / (2.0 * h)
    out[:, 1] = a[:, 2] / (2.0 * h) - a[:, 0] / h
    out[:, -2] = a[:, -1] / h - a[:, -3] / (2.0 * h)
    out[:, -1] = -a[:, -1] / h - a[:, -2] / (2.0 * h)
    return out


def _divy_arr(a: np.ndarray, h: float) -> np.ndarray:
    n = a.shape[0]
    if n < 5:
        return div_matrix_1d(n, h) @ a
    out = np.empty_like(a)
    out[2:-2, :] = (a[3:-1, :] - a[1:-3, :]) / (2.0 * h)
    out[0, :] = a[0, :] / h + a[1, :] / (2.0 * h)
    out[1, :] = a[2, :] / (2.0 * h) - a[0, :] / h
    out[-2, :] = a[-1, :] / h - a[-3, :] / (2.0 * h)
    out[-1, :] = -a[-1, :] / h - a[-2, :] / (2.0 * h)
    return out


def _d2x_arr(a: np.ndarray, h: float) -> np.ndarray:
    h2 = h * h
    out = np.empty_like(a)
    out[:, 1:-1] = (a[:, 2:] - 2.0 * a[:, 1:-1] + a[:, :-2]) / h2
    out[:, 0] = out[:, 1]
    out[:, -1] = out[:, -2]
    return out


def _d2y_arr(a: np.ndarray, h: float) -> np.ndarray:
    h2 = h * h
    out = np.empty_like(a)
    out[1:-1, :] = (a[2:, :] - 2.0 * a[1:-1, :] + a[:-2, :]) / h2
    out[0, :] = out[1, :]
    out[-1, :] = out[-2, :]
    return out


# ---------------------------------------------------------------------------
# public field operations
# ---------------------------------------------------------------------------


def grad(f: ScalarField) -> VectorField2:
    """Discrete gradient: central interior, full one-sided at the border."""
    return VectorField2(
        f.like(_gradx_arr(f.data, f.spacing)),
        f.like(_grady_arr(f.data, f.spacing)),
    )


def div(v: VectorField2) -> ScalarField:
    """Discrete divergence, the exact negative adjoint of :func:`grad`."""
    h = v.spacing
    return v.x_comp.like(_divx_arr(v.x_comp.data, h) + _divy_arr(v.y_comp.data, h))


def laplacian(f: ScalarField) -> ScalarField:
    """Composite Laplacian div(grad(f)): symmetric, nullspace = constants."""
    return div(grad(f))


def hessian(f: ScalarField) -> tuple[ScalarField, ScalarField, ScalarField]:
    """Second derivatives (fxx, fyy, fxy).

    fxx and fyy use the 3-point second difference (border rows reuse the
    nearest interior stencil); fxy iterates the first-derivative stencils,
    so fxy == fyx identically. All three vanish on affine fields at every
    node and are exact on quadratics.
    """
    h = f.spacing
    fxx = f.like(_d2x_arr(f.data, h))
    fyy = f.like(_d2y_arr(f.data, h))
    fxy = f.like(_gradx_arr(_grady_arr(f.data, h), h))
    return fxx, fyy, fxy


def _bilinear_arr(a: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of ``a`` at index coordinates (px, py), clamped
    to the domain."""
    hh, ww = a.shape
    px = np.clip(px, 0.0, ww - 1.0)
    py = np.clip(py, 0.0, hh - 1.0)
    x0 = np.minimum(np.floor(px).astype(np.intp), ww - 2)
    y0 = np.minimum(np.floor(py).astype(np.intp), hh - 2)
    wx = px - x0
    wy = py - y0
    return (
        a[y0, x0] * (1.0 - wx) * (1.0 - wy)
        + a[y0, x0 + 1] * wx * (1.0 - wy)
        + a[y0 + 1, x0] * (1.0 - wx) * wy
        + a[y0 + 1, x0 + 1] * wx * wy
    )


def _warp_coords(T: ScalarField, u: VectorField2) -> tuple[np.ndarray, np.ndarray]:
    if T.shape != u.shape:
        raise ValueError(f"image shape {T.shape} != displacement shape {u.shape}")
    h = T.spacing
    jj, ii = np.meshgrid(np.arange(T.width, dtype=np.float64),
                         np.arange(T.height, dtype=np.float64))
    return jj + u.x_comp.data / h, ii + u.y_comp.data / h


def sample_warped(T: ScalarField, u: VectorField2) -> ScalarField:
    """T sampled at x + u(x) by bilinear interpolation, clamped at the border."""
    px, py = _warp_coords(T, u)
    return T.like(_bilinear_arr(T.data, px, py))


def warped_gradient(T: ScalarField, u: VectorField2) -> VectorField2:
    """grad(T) sampled at x + u(x) (differentiate first, then warp)."""
    px, py = _warp_coords(T, u)
    g = grad(T)
    return VectorField2(
        T.like(_bilinear_arr(g.x_comp.data, px, py)),
        T.like(_bilinear_arr(g.y_comp.data, px, py)),
    )
