"""Tests for the quality metrics: SSD ratio and Jacobian fold detection."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvreg.fields import ScalarField, VectorField2
from curvreg.metrics import jacobian_det_field, quality
from curvreg.similarity import ssd


def coord_grids(n):
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    return xx, yy


class TestJacobianDet:
    def test_zero_displacement_identity(self):
        det = jacobian_det_field(VectorField2.zeros(7, 7)).data
        assert np.all(det == 1.0)

    def test_uniform_x_stretch(self):
        xx, _ = coord_grids(8)
        u = VectorField2(ScalarField(0.25 * xx), ScalarField.zeros(8, 8))
        det = jacobian_det_field(u).data
        assert np.allclose(det, 1.25, atol=1e-12)

    def test_x_reflection_detected(self):
        """u1 = -2x maps x to -x, a fold with determinant -1 everywhere."""
        xx, _ = coord_grids(8)
        u = VectorField2(ScalarField(-2.0 * xx), ScalarField.zeros(8, 8))
        det = jacobian_det_field(u).data
        assert np.allclose(det, -1.0, atol=1e-12)

    def test_shear_cross_term(self):
        xx, yy = coord_grids(8)
        u = VectorField2(ScalarField(0.5 * yy), ScalarField(0.5 * xx))
        det = jacobian_det_field(u).data
        assert np.allclose(det, 1.0 - 0.25, atol=1e-12)

    def test_spacing_invariance_of_affine_det(self):
        """The determinant of an affine map does not depend on the grid
        step used to discretize it."""
        for h in (0.5, 1.0, 2.0):
            n = 8
            yy, xx = np.mgrid[0:n, 0:n].astype(float) * h
            u = VectorField2(ScalarField(0.3 * xx - 0.1 * yy, spacing=h),
                             ScalarField(0.2 * xx + 0.4 * yy, spacing=h))
            det = jacobian_det_field(u).data
            expected = (1.3 * 1.4) - (-0.1 * 0.2)
            assert np.allclose(det, expected, atol=1e-12)


class TestQuality:
    def test_identical_images_epsilon_zero(self):
        T = ScalarField(np.ones((5, 5)) * 0.4)
        rep = quality(T, T, VectorField2.zeros_like(T))
        assert rep.epsilon == 0.0
        assert rep.min_jac == 1.0
        assert rep.negative_jac_count == 0

    def test_zero_displacement_epsilon_one(self, rng):
        T = ScalarField(rng.random((6, 6)))
        R = ScalarField(rng.random((6, 6)))
        rep = quality(T, R, VectorField2.zeros_like(T))
        assert rep.epsilon == pytest.approx(1.0)
        assert rep.ssd_after == pytest.approx(rep.ssd_before)

    def test_fold_counted(self):
        xx, _ = coord_grids(6)
        T = ScalarField(np.ones((6, 6)))
        R = ScalarField(np.zeros((6, 6)))
        u = VectorField2(ScalarField(-2.0 * xx), ScalarField.zeros(6, 6))
        rep = quality(T, R, u)
        assert rep.min_jac < 0.0
        assert rep.negative_jac_count == 36

    def test_epsilon_matches_ssd_ratio(self, rng):
        T = ScalarField(rng.random((7, 7)))
        R = ScalarField(rng.random((7, 7)))
        u = VectorField2(ScalarField(rng.normal(scale=0.2, size=(7, 7))),
                         ScalarField(rng.normal(scale=0.2, size=(7, 7))))
        rep = quality(T, R, u)
        expected = ssd(T, R, u) / ssd(T, R, VectorField2.zeros_like(T))
        assert rep.epsilon == pytest.approx(expected, rel=1e-12)

    @given(alpha=st.floats(min_value=-3.0, max_value=3.0,
                           allow_nan=False, allow_infinity=False))
    def test_uniform_stretch_det_property(self, alpha):
        """det(I + alpha * dx) = 1 + alpha for u = (alpha * x, 0)."""
        xx, _ = coord_grids(6)
        u = VectorField2(ScalarField(alpha * xx), ScalarField.zeros(6, 6))
        det = jacobian_det_field(u).data
        assert np.allclose(det, 1.0 + alpha, atol=1e-9)
