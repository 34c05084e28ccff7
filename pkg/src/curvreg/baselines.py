"""Three comparison registration models sharing the SSD force and metrics
with the curvature solver.

Linear curvature (lc): semi-implicit time marching of the fourth-order flow
u_t = -(gamma * Lap^2 u + f), with the biharmonic term taken implicitly and
each inner linear system solved by damped Jacobi. The Laplacian here is the
classic five-point stencil under replicate padding, a discrete stand-in for
the model's natural boundary conditions.

Mean curvature (mc): explicit gradient descent on the energy
(1/2) * integral of iota^2 per component, where iota is the mean curvature
of the displacement-component surface; the descent direction is
div(grad(iota)/W - (grad(u) . grad(iota)) grad(u)/W^3), W = sqrt(1+|grad u|^2).

Demon (demon): per-node updates -res * J / (|J|^2 + noise_ratio) with the
symmetric gradient J = (grad R + grad T(x+u))/2, Gaussian-smoothed. In
diffeomorphic mode the smoothed update accumulates into a stationary
velocity field and the displacement is its exponential, computed by
scaling and squaring.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import gaussian_filter

from curvreg.errors import ensure_finite
from curvreg.fields import (
    ScalarField,
    VectorField2,
    _divx_arr,
    _divy_arr,
    _gradx_arr,
    _grady_arr,
    grad,
    sample_warped,
    warped_gradient,
)
from curvreg.curvature import mean_curvature
from curvreg.metrics import IDENTICAL_SSD_TOL, quality
from curvreg.similarity import force, ssd
from curvreg.solver_gc import RegistrationResult

__all__ = [
    "DemonConfig",
    "TimeMarchConfig",
    "register_lc",
    "register_mc",
    "demon_step",
    "register_demon",
]


@dataclass(frozen=True)
class TimeMarchConfig:
    """Parameters for the lc and mc time-marching drivers.

    gamma     regularization weight (> 0)
    dt        time step (> 0; mc is explicit, so stability bounds it)
    max_iter  outer step cap
    tol       stop when the relative displacement update drops below this
    """

    gamma: float
    dt: float
    max_iter: int = 200
    tol: float = 1e-4

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class DemonConfig:
    """Parameters for the demon driver.

    noise_ratio     intensity-noise to spatial-uncertainty ratio added to the
                    squared gradient magnitude in the update denominator
    smooth_sigma    Gaussian smoothing of the update field, in pixels
    diffeomorphic   accumulate a velocity field and exponentiate it
    squaring_steps  doublings in the scaling-and-squaring exponential
    max_iter        iteration cap
    tol             stop when the relative SSD change drops below this
    """

    noise_ratio: float
    smooth_sigma: float = 1.5
    diffeomorphic: bool = True
    squaring_steps: int = 6
    max_iter: int = 100
    tol: float = 1e-4

    def __post_init__(self):
        if not self.noise_ratio > 0:
            raise ValueError("noise_ratio must be positive")
        if not self.smooth_sigma > 0:
            raise ValueError("smooth_sigma must be positive")
        if self.squaring_steps < 0:
            raise ValueError("squaring_steps must be >= 0")
        if self.diffeomorphic and self.squaring_steps < 4:
            raise ValueError("diffeomorphic mode needs squaring_steps >= 4")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


# ---------------------------------------------------------------------------
# linear curvature
# ---------------------------------------------------------------------------


def _lap5(a: np.ndarray, h: float) -> np.ndarray:
    """Five-point Laplacian with replicate padding (zero normal derivative)."""
    p = np.pad(a, 1, mode="edge")
    return (p[1:-1, :-2] + p[1:-1, 2:] + p[:-2, 1:-1] + p[2:, 1:-1]
            - 4.0 * a) / (h * h)


@lru_cache(maxsize=None)
def _lap5_diags_1d(n: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of the 1D replicate-padded Laplacian L and of L^2."""
    m = np.zeros((n, n))
    for i in range(n):
        m[i, i] = -2.0
        if i > 0:
            m[i, i - 1] = 1.0
        else:
            m[i, i] += 1.0
        if i < n - 1:
            m[i, i + 1] = 1.0
        else:
            m[i, i] += 1.0
    m /= h * h
    return np.diag(m).copy(), np.diag(m @ m).copy()


def _semi_implicit_solve(rhs: np.ndarray, u0: np.ndarray, dtg: float,
                         h: float, inner_iter: int = 30,
                         damping: float = 0.8) -> np.ndarray:
    """Damped Jacobi for (I + dtg * Lap^2) u = rhs, warm-started at u0.

    The Jacobi diagonal of the squared Kronecker-sum Laplacian at node
    (y, x) is d2x[x] + d2y[y] + 2*dx[x]*dy[y].
    """
    hgt, wid = rhs.shape
    dx, d2x = _lap5_diags_1d(wid, h)
    dy, d2y = _lap5_diags_1d(hgt, h)
    diag = 1.0 + dtg * (d2x[None, :] + d2y[:, None]
                        + 2.0 * dx[None, :] * dy[:, None])
    u = u0.copy()
    stop = 1e-12 * (1.0 + np.max(np.abs(rhs)))
    for _ in range(inner_iter):
        res = rhs - (u + dtg * _lap5(_lap5(u, h), h))
        u += damping * res / diag
        if np.max(np.abs(res)) < stop:
            break
    return u


def register_lc(T: ScalarField, R: ScalarField,
                cfg: TimeMarchConfig) -> RegistrationResult:
    """Semi-implicit time marching of the linear-curvature model."""
    return _time_march(T, R, cfg, _lc_step)


def _lc_step(T, R, u, cfg):
    f = force(T, R, u)
    dtg = cfg.dt * cfg.gamma
    h = T.spacing
    new = []
    for u_l, f_l in ((u.x_comp, f.x_comp), (u.y_comp, f.y_comp)):
        rhs = u_l.data - cfg.dt * f_l.data
        new.append(_semi_implicit_solve(rhs, u_l.data, dtg, h))
    return new


# ---------------------------------------------------------------------------
# mean curvature
# ---------------------------------------------------------------------------


def _mc_descent_direction(u_l: ScalarField) -> np.ndarray:
    """div(grad(iota)/W - (grad u . grad iota) grad u / W^3) for one
    component; zero whenever iota is (flat and affine surfaces)."""
    h = u_l.spacing
    g = grad(u_l)
    gx, gy = g.x_comp.data, g.y_comp.data
    w = np.sqrt(1.0 + gx * gx + gy * gy)
    iota = mean_curvature(u_l).value.data
    ix = _gradx_arr(iota, h)
    iy = _grady_arr(iota, h)
    dot = gx * ix + gy * iy
    w3 = w * w * w
    vx = ix / w - dot * gx / w3
    vy = iy / w - dot * gy / w3
    return _divx_arr(vx, h) + _divy_arr(vy, h)


def register_mc(T: ScalarField, R: ScalarField,
                cfg: TimeMarchConfig) -> RegistrationResult:
    """Explicit gradient-descent marching of the mean-curvature model."""
    return _time_march(T, R, cfg, _mc_step)


def _mc_step(T, R, u, cfg):
    f = force(T, R, u)
    new = []
    for u_l, f_l in ((u.x_comp, f.x_comp), (u.y_comp, f.y_comp)):
        desc = cfg.gamma * _mc_descent_direction(u_l) + f_l.data
        new.append(u_l.data - cfg.dt * desc)
    return new


def _time_march(T, R, cfg, step_fn) -> RegistrationResult:
    if T.shape != R.shape:
        raise ValueError(f"image shapes differ: {T.shape} vs {R.shape}")
    start = time.perf_counter()
    u = VectorField2.zeros_like(T)
    if ssd(T, R, u) < IDENTICAL_SSD_TOL:
        return _zero_result(T, start)
    residual_history: list[float] = []
    ssd_history: list[float] = []
    iterations = 0
    for k in range(1, cfg.max_iter + 1):
        new1, new2 = step_fn(T, R, u, cfg)
        ensure_finite(new1, f"u1 at step {k}")
        ensure_finite(new2, f"u2 at step {k}")
        du = np.sqrt(np.sum((new1 - u.x_comp.data) ** 2)
                     + np.sum((new2 - u.y_comp.data) ** 2))
        norm_u = np.sqrt(np.sum(u.x_comp.data**2) + np.sum(u.y_comp.data**2))
        rel = du / (1.0 + norm_u)
        u = u.like(new1, new2)
        iterations = k
        residual_history.append(rel)
        ssd_history.append(ssd(T, R, u))
        if rel < cfg.tol:
            break
    return _finish(T, R, u, iterations, residual_history, ssd_history, start)


def _zero_result(T: ScalarField, start: float) -> RegistrationResult:
    return RegistrationResult(
        u=VectorField2.zeros_like(T), epsilon=0.0, min_jac=1.0, iterations=0,
        residual_history=[], ssd_history=[],
        wall_time_s=time.perf_counter() - start,
    )


def _finish(T, R, u, iterations, residual_history, ssd_history,
            start) -> RegistrationResult:
    rep = quality(T, R, u)
    return RegistrationResult(
        u=u, epsilon=rep.epsilon, min_jac=rep.min_jac, iterations=iterations,
        residual_history=residual_history, ssd_history=ssd_history,
        wall_time_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# demon
# ---------------------------------------------------------------------------


def _demon_update(T: ScalarField, R: ScalarField, u: VectorField2,
                  cfg: DemonConfig) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed per-node update -res * J / (|J|^2 + noise_ratio)."""
    res = sample_warped(T, u).data - R.data
    wg = warped_gradient(T, u)
    gr = grad(R)
    jx = 0.5 * (gr.x_comp.data + wg.x_comp.data)
    jy = 0.5 * (gr.y_comp.data + wg.y_comp.data)
    den = jx * jx + jy * jy + cfg.noise_ratio
    ux = -res * jx / den
    uy = -res * jy / den
    return (gaussian_filter(ux, cfg.smooth_sigma, mode="nearest"),
            gaussian_filter(uy, cfg.smooth_sigma, mode="nearest"))


def demon_step(T: ScalarField, R: ScalarField, u_tilde: VectorField2,
               cfg: DemonConfig) -> VectorField2:
    """One additive demon update: u_tilde plus the smoothed update field."""
    if T.shape != R.shape or u_tilde.shape != T.shape:
        raise ValueError("image and displacement shapes must match")
    ux, uy = _demon_update(T, R, u_tilde, cfg)
    return u_tilde.like(u_tilde.x_comp.data + ux, u_tilde.y_comp.data + uy)


def _velocity_exp(v: VectorField2, squaring_steps: int) -> VectorField2:
    """exp(v) by scaling and squaring: halve squaring_steps times, then
    self-compose as many times. exp(0) is exactly the zero displacement."""
    scale = float(2**squaring_steps)
    wx = v.x_comp.data / scale
    wy = v.y_comp.data / scale
    for _ in range(squaring_steps):
        w = v.like(wx, wy)
        wx = wx + sample_warped(w.x_comp, w).data
        wy = wy + sample_warped(w.y_comp, w).data
    return v.like(wx, wy)


def register_demon(T: ScalarField, R: ScalarField,
                   cfg: DemonConfig) -> RegistrationResult:
    """Demon iteration, additive or diffeomorphic per the config."""
    if T.shape != R.shape:
        raise ValueError(f"image shapes differ: {T.shape} vs {R.shape}")
    start = time.perf_counter()
    u = VectorField2.zeros_like(T)
    prev = ssd(T, R, u)
    if prev < IDENTICAL_SSD_TOL:
        return _zero_result(T, start)
    v = VectorField2.zeros_like(T)
    residual_history: list[float] = []
    ssd_history: list[float] = []
    iterations = 0
    for k in range(1, cfg.max_iter + 1):
        ux, uy = _demon_update(T, R, u, cfg)
        ensure_finite(ux, f"update x at step {k}")
        ensure_finite(uy, f"update y at step {k}")
        if cfg.diffeomorphic:
            v = v.like(v.x_comp.data + ux, v.y_comp.data + uy)
            u = _velocity_exp(v, cfg.squaring_steps)
        else:
            u = u.like(u.x_comp.data + ux, u.y_comp.data + uy)
        cur = ssd(T, R, u)
        rel = abs(prev - cur) / max(prev, np.finfo(float).tiny)
        prev = cur
        iterations = k
        residual_history.append(rel)
        ssd_history.append(cur)
        if rel < cfg.tol:
            break
    return _finish(T, R, u, iterations, residual_history, ssd_history, start)
