"""Brute-force verifiers for the closed-form solver machinery.

Every analytic gradient or stationarity operator used by the solver is
checked here against central finite differences of the corresponding discrete
energy, node by node. The absolute-value factor in the curvature penalty is
nonsmooth where its argument vanishes, so nodes near a sign change are
excluded from the comparison (and counted) rather than smoothed over; the
solver only ever evaluates the smooth branches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.ndimage import binary_dilation

from curvreg.fields import (
    ScalarField,
    VectorField2,
    _d2x_arr,
    _d2y_arr,
    _divx_arr,
    _divy_arr,
    _gradx_arr,
    _grady_arr,
    second_diff_matrix_1d,
)
from curvreg.solver_gc import _component_objective, _component_residual

__all__ = [
    "GradCheckReport",
    "numeric_gradient",
    "gc_energy_gradient",
    "verify_step1_el",
    "verify_el17",
]

_MAX_NODES = 32 * 32


@dataclass(frozen=True)
class GradCheckReport:
    """Summary of a node-wise analytic-vs-numeric gradient comparison."""

    max_rel_err: float
    mean_rel_err: float
    nodes_checked: int
    step: float
    nodes_skipped: int = 0

    def __post_init__(self):
        if not (self.max_rel_err >= self.mean_rel_err >= 0.0):
            raise ValueError("expected max_rel_err >= mean_rel_err >= 0")


def numeric_gradient(energy: Callable[[ScalarField], float], u: ScalarField,
                     step: float) -> ScalarField:
    """Central-difference gradient of ``energy`` at ``u``, one node at a time.

    Restricted to grids of at most 32x32 nodes; cost is two energy
    evaluations per node.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if u.data.size > _MAX_NODES:
        raise ValueError(
            f"numeric_gradient is limited to {_MAX_NODES} nodes, "
            f"got {u.data.size}"
        )
    base = u.data
    out = np.empty_like(base)
    work = base.copy()
    for idx in np.ndindex(base.shape):
        work[idx] = base[idx] + step
        e_plus = energy(u.like(work))
        work[idx] = base[idx] - step
        e_minus = energy(u.like(work))
        work[idx] = base[idx]
        out[idx] = (e_plus - e_minus) / (2.0 * step)
    return u.like(out)


def gc_energy_gradient(u: ScalarField, gamma: float) -> ScalarField:
    """Exact gradient of the discrete curvature penalty
    gamma * h^2 * sum |N| / W^2 of one displacement component, where
    N = u_xx*u_yy - u_xy^2 and W = 1 + u_x^2 + u_y^2.

    Assembled by transposing the same stencils the forward energy uses, so
    agreement with ``numeric_gradient`` validates both the derivation and the
    discretization.
    """
    h = u.spacing
    f = u.data
    fx = _gradx_arr(f, h)
    fy = _grady_arr(f, h)
    fxx = _d2x_arr(f, h)
    fyy = _d2y_arr(f, h)
    fxy = _gradx_arr(_grady_arr(f, h), h)
    n = fxx * fyy - fxy * fxy
    w = 1.0 + fx * fx + fy * fy
    s = np.sign(n)
    w2 = w * w
    d2x = second_diff_matrix_1d(u.width, h)
    d2y = second_diff_matrix_1d(u.height, h)
    # f @ d2x.T applies the second-difference stencil along x, so f @ d2x
    # applies its transpose; for the y axis the roles swap.
    out = (s * fyy / w2) @ d2x
    out += d2y.T @ (s * fxx / w2)
    out -= 2.0 * _divy_arr(_divx_arr(s * fxy / w2, h), h)
    out += _divx_arr(4.0 * np.abs(n) * fx / (w2 * w), h)
    out += _divy_arr(4.0 * np.abs(n) * fy / (w2 * w), h)
    return u.like(gamma * h * h * out)


def _exclusion_mask(kink: np.ndarray, threshold: float,
                    radius: int) -> np.ndarray:
    """Nodes whose numeric derivative could straddle a sign change of
    ``kink``: |kink| below ``threshold``, grown by the stencil ``radius``."""
    near = np.abs(kink) < threshold
    if not near.any():
        return near
    size = 2 * radius + 1
    return binary_dilation(near, structure=np.ones((size, size), dtype=bool))


def _compare(pairs: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
             step: float) -> GradCheckReport:
    """Build a report from (numeric, exact, keep_mask) triples."""
    numeric_all = np.concatenate([n.ravel() for n, _, _ in pairs])
    floor = 1e-3 * max(float(np.max(np.abs(numeric_all))), np.finfo(float).tiny)
    rels = []
    skipped = 0
    for numeric, exact, keep in pairs:
        skipped += int(np.count_nonzero(~keep))
        diff = np.abs(numeric[keep] - exact[keep])
        rels.append(diff / np.maximum(np.abs(numeric[keep]), floor))
    rel = np.concatenate(rels)
    if rel.size == 0:
        return GradCheckReport(0.0, 0.0, 0, step, skipped)
    return GradCheckReport(
        max_rel_err=float(rel.max()),
        mean_rel_err=float(rel.mean()),
        nodes_checked=int(rel.size),
        step=step,
        nodes_skipped=skipped,
    )


def verify_step1_el(u: ScalarField, q: VectorField2, mu: VectorField2,
                    gamma: float, r: float, step: float = 1e-6) -> GradCheckReport:
    """Check the closed-form stationarity residual of the dual subproblem for
    one displacement component against the numeric gradient of its objective
    gamma*S(q) + <mu, q> + (r/2)*||q - grad(u)||^2.

    Nodes within two cells of a sign change of D = q1_x*q2_y - q1_y*q2_x are
    excluded when gamma is nonzero (the penalty is nonsmooth there).
    """
    h = u.spacing
    a = q.x_comp.data
    b = q.y_comp.data
    if gamma != 0.0:
        d = _gradx_arr(a, h) * _grady_arr(b, h) \
            - _grady_arr(a, h) * _gradx_arr(b, h)
        keep = ~_exclusion_mask(d, 10.0 * step, radius=2)
    else:
        keep = np.ones(u.shape, dtype=bool)
    exact = _component_residual(u, q, mu, gamma, r)
    h2 = h * h
    num_a = numeric_gradient(
        lambda f: _component_objective(u, VectorField2(f, q.y_comp), mu,
                                       gamma, r),
        q.x_comp, step)
    num_b = numeric_gradient(
        lambda f: _component_objective(u, VectorField2(q.x_comp, f), mu,
                                       gamma, r),
        q.y_comp, step)
    return _compare(
        [(num_a.data, h2 * exact.x_comp.data, keep),
         (num_b.data, h2 * exact.y_comp.data, keep)],
        step,
    )


def verify_el17(u: VectorField2, gamma: float,
                step: float = 1e-5) -> GradCheckReport:
    """Check the assembled curvature-penalty gradient operator against the
    numeric gradient of the penalty energy, one displacement component at a
    time.

    Nodes within three cells of a sign change of N = u_xx*u_yy - u_xy^2 are
    excluded (the |N| factor is nonsmooth there).
    """
    h = u.spacing
    h2 = h * h

    def energy_of(f: ScalarField) -> float:
        fx = _gradx_arr(f.data, h)
        fy = _grady_arr(f.data, h)
        fxx = _d2x_arr(f.data, h)
        fyy = _d2y_arr(f.data, h)
        fxy = _gradx_arr(_grady_arr(f.data, h), h)
        n = fxx * fyy - fxy * fxy
        w = 1.0 + fx * fx + fy * fy
        return float(gamma * h2 * np.sum(np.abs(n) / (w * w)))

    pairs = []
    for comp in (u.x_comp, u.y_comp):
        f = comp.data
        n = _d2x_arr(f, h) * _d2y_arr(f, h) \
            - _gradx_arr(_grady_arr(f, h), h) ** 2
        keep = ~_exclusion_mask(n, 10.0 * step, radius=3)
        exact = gc_energy_gradient(comp, gamma)
        numeric = numeric_gradient(energy_of, comp, step)
        pairs.append((numeric.data, exact.data, keep))
    return _compare(pairs, step)
