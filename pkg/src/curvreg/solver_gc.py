"""Gaussian-curvature-regularized registration by an augmented Lagrangian
splitting.

The model couples the SSD distance with a total-absolute-Gaussian-curvature
penalty on each displacement component, split via duals q_l = grad(u_l) with
multipliers mu_l and penalty weight r. Each outer iteration runs

  Step 1: closed-form alternating update of the dual components (with the
          surface factor Gamma lagged at the current u),
  Step 2: a few weighted pointwise Gauss-Seidel sweeps on the Gauss-Newton
          linearization of the force balance -r*Lap(u_l) + f_l + G_l = 0
          with G_l = div(mu_l) + r*div(q_l),
  Step 3: multiplier ascent mu_l += r*(q_l - grad(u_l)).

Stationarity is tracked by the relative norm of the stacked residuals of the
dual optimality conditions and of the nonlinear force balance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from curvreg import _kernels
from curvreg.errors import SingularBlockError, ensure_finite
from curvreg.fields import (
    ScalarField,
    VectorField2,
    _divx_arr,
    _divy_arr,
    _gradx_arr,
    _grady_arr,
    div,
    grad,
    laplacian,
    laplacian_bands_1d,
)
from curvreg.metrics import IDENTICAL_SSD_TOL, quality
from curvreg.similarity import force, linearize_force, ssd

__all__ = [
    "ALMState",
    "RegistrationConfig",
    "RegistrationResult",
    "QUpdateResult",
    "q_update",
    "u_update",
    "multiplier_update",
    "step1_objective",
    "step1_residual",
    "el_residual",
    "alm_iterations",
    "register_gc",
]


@dataclass(frozen=True)
class RegistrationConfig:
    """Solver parameters.

    gamma   regularization weight (> 0)
    r       penalty weight on the splitting constraint; [0.02, 2] works well
    omega   Gauss-Seidel relaxation, in (0, 2)
    tol     stop when the relative stationarity residual drops below this
    max_iter  outer iteration cap
    denom_guard  magnitude floor for the Step-1 closed-form denominator and
                 the Step-2 nodal block determinant
    gs_sweeps  Gauss-Seidel sweeps per outer iteration
    """

    gamma: float = 1e-4
    r: float = 0.1
    omega: float = 0.9725
    tol: float = 1e-3
    max_iter: int = 30
    denom_guard: float = 1e-9
    gs_sweeps: int = 3

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if not 0.0 < self.omega < 2.0:
            raise ValueError("omega must lie in (0, 2)")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.denom_guard > 0:
            raise ValueError("denom_guard must be positive")
        if self.gs_sweeps < 1:
            raise ValueError("gs_sweeps must be >= 1")


@dataclass(frozen=True)
class ALMState:
    """Displacement u, duals q_l for grad(u_l), and multipliers mu_l."""

    u: VectorField2
    q1: VectorField2
    q2: VectorField2
    mu1: VectorField2
    mu2: VectorField2
    iteration: int = 0

    def __post_init__(self):
        for name in ("q1", "q2", "mu1", "mu2"):
            if getattr(self, name).shape != self.u.shape:
                raise ValueError(f"{name} shape differs from u")

    @staticmethod
    def zeros(height: int, width: int, spacing: float = 1.0) -> "ALMState":
        z = lambda: VectorField2.zeros(height, width, spacing)  # noqa: E731
        return ALMState(u=z(), q1=z(), q2=z(), mu1=z(), mu2=z())


@dataclass(frozen=True)
class RegistrationResult:
    u: VectorField2
    epsilon: float
    min_jac: float
    iterations: int
    residual_history: list[float] = field(default_factory=list)
    ssd_history: list[float] = field(default_factory=list)
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class QUpdateResult:
    """Updated duals plus the number of nodes where the closed-form
    denominator had to be clamped to the guard magnitude."""

    q1: VectorField2
    q2: VectorField2
    degenerate_count: int


def _clamped(den: np.ndarray, guard: float) -> tuple[np.ndarray, int]:
    """Clamp |den| below ``guard`` to +-guard, keeping the sign (zero maps to
    -guard, the sign of the dominant -r*Gamma^3 term)."""
    small = np.abs(den) < guard
    count = int(np.count_nonzero(small))
    if count:
        sign = np.where(den > 0.0, 1.0, -1.0)
        den = np.where(small, sign * guard, den)
    return den, count


def _q_component_update(u_l: ScalarField, q_l: VectorField2, mu_l: VectorField2,
                        gamma: float, r: float, guard: float):
    """Closed-form alternating minimization over one dual pair (a, b)."""
    h = u_l.spacing
    ux = _gradx_arr(u_l.data, h)
    uy = _grady_arr(u_l.data, h)
    gam = 1.0 + ux * ux + uy * uy  # lagged surface factor
    gam2 = gam * gam
    gam3 = gam2 * gam
    a = q_l.x_comp.data
    b = q_l.y_comp.data
    m1 = mu_l.x_comp.data
    m2 = mu_l.y_comp.data
    degenerate = 0

    bx = _gradx_arr(b, h)
    by = _grady_arr(b, h)
    d = _gradx_arr(a, h) * by - _grady_arr(a, h) * bx
    s = np.sign(d)
    den, cnt = _clamped(-r * gam3 + 4.0 * gamma * s * d, guard)
    degenerate += cnt
    ca = _divx_arr(s * by / gam2, h) - _divy_arr(s * bx / gam2, h)
    a = gam3 * (-gamma * ca + m1 - r * ux) / den

    ax = _gradx_arr(a, h)
    ay = _grady_arr(a, h)
    d = ax * by - ay * bx
    s = np.sign(d)
    den, cnt = _clamped(-r * gam3 + 4.0 * gamma * s * d, guard)
    degenerate += cnt
    cb = _divy_arr(s * ax / gam2, h) - _divx_arr(s * ay / gam2, h)
    b = gam3 * (-gamma * cb + m2 - r * uy) / den

    return q_l.like(a, b), degenerate


def q_update(state: ALMState, gamma: float, r: float,
             denom_guard: float = 1e-9) -> QUpdateResult:
    """Step 1: update both dual fields; gamma = 0 reduces exactly to the
    penalty-only minimizer q_l = grad(u_l) - mu_l / r."""
    if not r > 0:
        raise ValueError("r must be positive")
    q1, d1 = _q_component_update(state.u.x_comp, state.q1, state.mu1,
                                 gamma, r, denom_guard)
    q2, d2 = _q_component_update(state.u.y_comp, state.q2, state.mu2,
                                 gamma, r, denom_guard)
    return QUpdateResult(q1=q1, q2=q2, degenerate_count=d1 + d2)


def u_update(T: ScalarField, R: ScalarField, state: ALMState, r: float,
             omega: float, sweeps: int = 3,
             denom_guard: float = 1e-9) -> VectorField2:
    """Step 2: relaxed pointwise Gauss-Seidel sweeps on the linearized force
    balance. Raises SingularBlockError if any nodal 2x2 block is degenerate
    (possible only for r ~ 0 with flat image regions)."""
    if not r > 0:
        raise ValueError("r must be positive")
    if not 0.0 < omega < 2.0:
        raise ValueError("omega must lie in (0, 2)")
    h = T.spacing
    u = state.u
    f = force(T, R, u)
    sig = linearize_force(T, u)
    g1 = div(state.mu1).data + r * div(state.q1).data
    g2 = div(state.mu2).data + r * div(state.q2).data
    s11 = sig.sigma11.data
    s12 = sig.sigma12.data
    s22 = sig.sigma22.data
    b1 = -g1 - f.x_comp.data + s11 * u.x_comp.data + s12 * u.y_comp.data
    b2 = -g2 - f.y_comp.data + s12 * u.x_comp.data + s22 * u.y_comp.data
    cx = laplacian_bands_1d(T.width, h)
    cy = laplacian_bands_1d(T.height, h)
    u1 = u.x_comp.data.copy()
    u2 = u.y_comp.data.copy()
    singular = 0
    for _ in range(sweeps):
        singular += _kernels.gs_sweep(u1, u2, b1, b2, s11, s12, s22,
                                      cx, cy, r, omega, denom_guard)
    if singular:
        raise SingularBlockError(
            f"{singular} degenerate 2x2 node block(s) across {sweeps} sweep(s)"
        )
    return u.like(u1, u2)


def multiplier_update(state: ALMState, r: float) -> tuple[VectorField2, VectorField2]:
    """Step 3: mu_l += r * (q_l - grad(u_l))."""
    if not r > 0:
        raise ValueError("r must be positive")
    out = []
    for q_l, mu_l, u_l in ((state.q1, state.mu1, state.u.x_comp),
                           (state.q2, state.mu2, state.u.y_comp)):
        g = grad(u_l)
        out.append(mu_l.like(
            mu_l.x_comp.data + r * (q_l.x_comp.data - g.x_comp.data),
            mu_l.y_comp.data + r * (q_l.y_comp.data - g.y_comp.data),
        ))
    return out[0], out[1]


def _step1_pieces(u_l: ScalarField, q_l: VectorField2):
    h = u_l.spacing
    ux = _gradx_arr(u_l.data, h)
    uy = _grady_arr(u_l.data, h)
    a = q_l.x_comp.data
    b = q_l.y_comp.data
    ax = _gradx_arr(a, h)
    ay = _grady_arr(a, h)
    bx = _gradx_arr(b, h)
    by = _grady_arr(b, h)
    d = ax * by - ay * bx
    gam = 1.0 + a * a + b * b  # true objective factor, a function of q
    return ux, uy, a, b, ax, ay, bx, by, d, gam


def _component_objective(u_l: ScalarField, q_l: VectorField2,
                         mu_l: VectorField2, gamma: float, r: float) -> float:
    """Dual-subproblem objective for one displacement component:
    gamma*S(q) + <mu, q> + (r/2)*||q - grad(u)||^2 (h^2-weighted sums)."""
    h2 = u_l.spacing**2
    ux, uy, a, b, *_rest, d, gam = _step1_pieces(u_l, q_l)
    m1 = mu_l.x_comp.data
    m2 = mu_l.y_comp.data
    return float(h2 * (
        gamma * np.sum(np.abs(d) / gam**2)
        + np.sum(m1 * a + m2 * b)
        + 0.5 * r * np.sum((a - ux) ** 2 + (b - uy) ** 2)
    ))


def _component_residual(u_l: ScalarField, q_l: VectorField2,
                        mu_l: VectorField2, gamma: float,
                        r: float) -> VectorField2:
    """Exact per-node gradient of the dual-subproblem objective with respect
    to q (density form; multiply by h^2 for the gradient of the h^2-weighted
    sum)."""
    h = u_l.spacing
    ux, uy, a, b, ax, ay, bx, by, d, gam = _step1_pieces(u_l, q_l)
    s = np.sign(d)
    p = s / gam**2
    gam3 = gam**3
    m1 = mu_l.x_comp.data
    m2 = mu_l.y_comp.data
    ra = gamma * (-_divx_arr(p * by, h) + _divy_arr(p * bx, h)
                  - 4.0 * s * d * a / gam3) + m1 + r * (a - ux)
    rb = gamma * (_divx_arr(p * ay, h) - _divy_arr(p * ax, h)
                  - 4.0 * s * d * b / gam3) + m2 + r * (b - uy)
    return q_l.like(ra, rb)


def step1_objective(state: ALMState, gamma: float, r: float) -> float:
    """The Step-1 objective summed over both displacement components."""
    return (_component_objective(state.u.x_comp, state.q1, state.mu1, gamma, r)
            + _component_objective(state.u.y_comp, state.q2, state.mu2,
                                   gamma, r))


def step1_residual(state: ALMState, gamma: float,
                   r: float) -> tuple[VectorField2, VectorField2]:
    """Stationarity residuals of the Step-1 objective for both dual fields
    (density form)."""
    return (_component_residual(state.u.x_comp, state.q1, state.mu1, gamma, r),
            _component_residual(state.u.y_comp, state.q2, state.mu2,
                                gamma, r))


def el_residual(T: ScalarField, R: ScalarField, state: ALMState,
                gamma: float, r: float) -> float:
    """Relative l2 norm of the stacked stationarity residuals: the four dual
    optimality components and the two nonlinear force-balance components
    -r*Lap(u_l) + f_l + G_l. Normalized by 1 + the norm of the data terms
    (force, multipliers, r*grad u)."""
    h2 = T.spacing**2
    r1, r2 = step1_residual(state, gamma, r)
    f = force(T, R, state.u)
    pieces = [r1.x_comp.data, r1.y_comp.data, r2.x_comp.data, r2.y_comp.data]
    data = [f.x_comp.data, f.y_comp.data]
    for u_l, q_l, mu_l, f_l in ((state.u.x_comp, state.q1, state.mu1, f.x_comp),
                                (state.u.y_comp, state.q2, state.mu2, f.y_comp)):
        g_l = div(mu_l).data + r * div(q_l).data
        pieces.append(-r * laplacian(u_l).data + f_l.data + g_l)
        gu = grad(u_l)
        data += [mu_l.x_comp.data, mu_l.y_comp.data,
                 r * gu.x_comp.data, r * gu.y_comp.data]
    num = np.sqrt(h2 * sum(np.sum(p * p) for p in pieces))
    den = 1.0 + np.sqrt(h2 * sum(np.sum(q * q) for q in data))
    return float(num / den)


def alm_iterations(T: ScalarField, R: ScalarField,
                   config: RegistrationConfig) -> Iterator[ALMState]:
    """Yield the ALM state after each outer iteration, starting from zero."""
    if T.shape != R.shape:
        raise ValueError(f"image shapes differ: {T.shape} vs {R.shape}")
    state = ALMState.zeros(T.height, T.width, T.spacing)
    for k in range(1, config.max_iter + 1):
        qres = q_update(state, config.gamma, config.r, config.denom_guard)
        state = replace(state, q1=qres.q1, q2=qres.q2)
        u_new = u_update(T, R, state, config.r, config.omega,
                         config.gs_sweeps, config.denom_guard)
        state = replace(state, u=u_new)
        mu1, mu2 = multiplier_update(state, config.r)
        state = replace(state, mu1=mu1, mu2=mu2, iteration=k)
        yield state


def register_gc(T: ScalarField, R: ScalarField,
                config: RegistrationConfig | None = None) -> RegistrationResult:
    """Run the full solver from u = q = mu = 0.

    Stops when the stationarity residual drops below ``config.tol`` or after
    ``config.max_iter`` outer iterations. Identical inputs short-circuit to
    the zero displacement with epsilon = 0 by convention. Raises
    NonFiniteError if the iteration diverges.
    """
    if config is None:
        config = RegistrationConfig()
    start = time.perf_counter()
    if ssd(T, R, VectorField2.zeros_like(T)) < IDENTICAL_SSD_TOL:
        return RegistrationResult(
            u=VectorField2.zeros_like(T), epsilon=0.0, min_jac=1.0,
            iterations=0, residual_history=[], ssd_history=[],
            wall_time_s=time.perf_counter() - start,
        )
    residual_history: list[float] = []
    ssd_history: list[float] = []
    final = None
    for state in alm_iterations(T, R, config):
        ensure_finite(state.u.x_comp.data, f"u1 at iteration {state.iteration}")
        ensure_finite(state.u.y_comp.data, f"u2 at iteration {state.iteration}")
        residual_history.append(el_residual(T, R, state, config.gamma, config.r))
        ssd_history.append(ssd(T, R, state.u))
        final = state
        if residual_history[-1] < config.tol:
            break
    rep = quality(T, R, final.u)
    return RegistrationResult(
        u=final.u,
        epsilon=rep.epsilon,
        min_jac=rep.min_jac,
        iterations=final.iteration,
        residual_history=residual_history,
        ssd_history=ssd_history,
        wall_time_s=time.perf_counter() - start,
    )
