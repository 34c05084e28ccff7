"""Registration quality measures: relative SSD reduction and fold detection.

``epsilon`` is the ratio of the SSD after registration to the SSD before;
by convention it is 0 when the images were already identical (ratio
undefined). ``min_jac`` is the minimum over all grid nodes of the Jacobian
determinant of the transform x + u(x); a positive value certifies a
fold-free deformation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from curvreg.fields import ScalarField, VectorField2, grad
from curvreg.similarity import ssd

__all__ = ["IDENTICAL_SSD_TOL", "QualityReport", "jacobian_det_field", "quality"]

# below this SSD the images count as identical and epsilon is defined as 0
IDENTICAL_SSD_TOL = 1e-12


@dataclass(frozen=True)
class QualityReport:
    epsilon: float
    min_jac: float
    negative_jac_count: int
    ssd_before: float
    ssd_after: float


def jacobian_det_field(u: VectorField2) -> ScalarField:
    """Node-wise det [[1+u1_x, u1_y], [u2_x, 1+u2_y]] of the transform x+u."""
    g1 = grad(u.x_comp)
    g2 = grad(u.y_comp)
    det = (1.0 + g1.x_comp.data) * (1.0 + g2.y_comp.data) - (
        g1.y_comp.data * g2.x_comp.data
    )
    return u.x_comp.like(det)


def quality(T: ScalarField, R: ScalarField, u: VectorField2) -> QualityReport:
    """Full quality report for a displacement on an image pair."""
    before = ssd(T, R, VectorField2.zeros_like(T))
    after = ssd(T, R, u)
    epsilon = 0.0 if before <= IDENTICAL_SSD_TOL else after / before
    det = jacobian_det_field(u).data
    return QualityReport(
        epsilon=float(epsilon),
        min_jac=float(det.min()),
        negative_jac_count=int(np.count_nonzero(det <= 0.0)),
        ssd_before=before,
        ssd_after=after,
    )
