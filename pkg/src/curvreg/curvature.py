"""Curvature operators on displacement-component surfaces, their energies,
and two curvature-driven diffusion flows.

A displacement component u is treated as the graph surface (x, y, u(x, y)).
Gaussian curvature is stored signed as

    (u_xx u_yy - u_xy^2) / (1 + u_x^2 + u_y^2)^2

so a bowl (either way up) has positive value and a saddle negative; energies
take absolute values and are therefore convention independent. Mean curvature
uses the expanded nodal form

    ((1+u_y^2) u_xx - 2 u_x u_y u_xy + (1+u_x^2) u_yy) / (1+u_x^2+u_y^2)^(3/2)

which is algebraically div(grad u / W) but, unlike the literal composition of
discrete operators, is exact on quadratic surfaces at nodes where the
gradient stencils are exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from curvreg.fields import (
    ScalarField,
    VectorField2,
    _d2x_arr,
    _d2y_arr,
    _divx_arr,
    _divy_arr,
    _gradx_arr,
    _grady_arr,
    grad,
    hessian,
)

__all__ = [
    "CurvatureKind",
    "CurvatureField",
    "FlowStepResult",
    "gaussian_curvature",
    "mean_curvature",
    "gc_energy",
    "lc_energy",
    "mc_energy",
    "gc_flow_step",
    "tv_flow_step",
]


class CurvatureKind(enum.Enum):
    GAUSSIAN = "gaussian"
    MEAN = "mean"


@dataclass(frozen=True)
class CurvatureField:
    """Signed per-node curvature of a displacement-component surface."""

    value: ScalarField
    kind: CurvatureKind


@dataclass(frozen=True)
class FlowStepResult:
    """Result of one explicit flow step.

    ``ok`` is False when the step produced non-finite values (time step too
    large); in that case ``field`` is the unmodified input.
    """

    field: ScalarField
    ok: bool


def _surface_terms(u: ScalarField):
    g = grad(u)
    fxx, fyy, fxy = hessian(u)
    ux, uy = g.x_comp.data, g.y_comp.data
    return ux, uy, fxx.data, fyy.data, fxy.data


def _gaussian_curvature_arr(u: ScalarField) -> np.ndarray:
    ux, uy, fxx, fyy, fxy = _surface_terms(u)
    num = fxx * fyy - fxy * fxy
    den = (1.0 + ux * ux + uy * uy) ** 2
    return num / den


def gaussian_curvature(u: ScalarField) -> CurvatureField:
    """Signed Gaussian curvature of the graph surface of u."""
    return CurvatureField(u.like(_gaussian_curvature_arr(u)), CurvatureKind.GAUSSIAN)


def mean_curvature(u: ScalarField) -> CurvatureField:
    """Mean curvature of the graph surface of u (expanded nodal form)."""
    ux, uy, fxx, fyy, fxy = _surface_terms(u)
    w2 = 1.0 + ux * ux + uy * uy
    num = (1.0 + uy * uy) * fxx - 2.0 * ux * uy * fxy + (1.0 + ux * ux) * fyy
    return CurvatureField(u.like(num / w2**1.5), CurvatureKind.MEAN)


def gc_energy(u: VectorField2) -> float:
    """Total absolute Gaussian curvature of both displacement components."""
    h2 = u.spacing**2
    gx = gaussian_curvature(u.x_comp).value.data
    gy = gaussian_curvature(u.y_comp).value.data
    return float(h2 * (np.sum(np.abs(gx)) + np.sum(np.abs(gy))))


def lc_energy(u: VectorField2) -> float:
    """Linear-curvature (squared Laplacian) energy of both components.

    Uses the Hessian-trace Laplacian u_xx + u_yy, whose border rows reuse
    the nearest interior stencil; unlike the adjoint-consistent composite
    Laplacian it vanishes identically on affine fields (the kernel the
    model is named for) and equals the exact value on quadratics at every
    node.
    """
    h = u.spacing
    out = 0.0
    for comp in (u.x_comp, u.y_comp):
        lap = _d2x_arr(comp.data, h) + _d2y_arr(comp.data, h)
        out += np.sum(lap * lap)
    return float(h * h * out)


def mc_energy(u: VectorField2) -> float:
    """Mean-curvature energy sum of (1/2) iota^2 over both components."""
    h2 = u.spacing**2
    mx = mean_curvature(u.x_comp).value.data
    my = mean_curvature(u.y_comp).value.data
    return float(0.5 * h2 * (np.sum(mx * mx) + np.sum(my * my)))


def _flux_step(u: ScalarField, dt: float, mod: np.ndarray) -> FlowStepResult:
    """u + dt * div(mod * grad u). The divergence of any field sums to zero
    exactly, so the field mean is preserved whenever the step stays finite."""
    h = u.spacing
    gx = _gradx_arr(u.data, h)
    gy = _grady_arr(u.data, h)
    dvg = _divx_arr(mod * gx, h) + _divy_arr(mod * gy, h)
    new = u.data + dt * dvg
    if not np.all(np.isfinite(new)):
        return FlowStepResult(u, False)
    return FlowStepResult(u.like(new), True)


def gc_flow_step(u: ScalarField, dt: float) -> FlowStepResult:
    """One explicit step of u_t = div(|GC(u)| grad u).

    The diffusivity is the absolute Gaussian curvature, so flat and affine
    regions do not move at all.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    mod = np.abs(_gaussian_curvature_arr(u))
    return _flux_step(u, dt, mod)


def tv_flow_step(u: ScalarField, dt: float, eps: float = 1e-3) -> FlowStepResult:
    """One explicit step of regularized total-variation flow
    u_t = div(grad u / sqrt(|grad u|^2 + eps^2)).

    Dissipates the smoothed TV energy for dt <= eps * h^2 / 4.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not eps > 0:
        raise ValueError("eps must be positive")
    h = u.spacing
    gx = _gradx_arr(u.data, h)
    gy = _grady_arr(u.data, h)
    mod = 1.0 / np.sqrt(gx * gx + gy * gy + eps * eps)
    return _flux_step(u, dt, mod)
