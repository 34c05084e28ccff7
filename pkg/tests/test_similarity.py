"""Tests for the SSD distance, its force field, and the Gauss-Newton blocks."""

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from curvreg.fields import ScalarField, VectorField2
from curvreg.oracle import numeric_gradient
from curvreg.similarity import force, linearize_force, ssd


def coord_grids(n):
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    return xx, yy


def decaying_blob(n=12, sigma=2.0):
    """Image with appreciable values only well inside the domain."""
    xx, yy = coord_grids(n)
    c = (n - 1) / 2.0
    return ScalarField(np.exp(-((xx - c) ** 2 + (yy - c) ** 2) / (2 * sigma**2)))


class TestSSD:
    def test_unit_images_3x3(self):
        T = ScalarField(np.ones((3, 3)))
        R = ScalarField(np.zeros((3, 3)))
        assert ssd(T, R, VectorField2.zeros_like(T)) == pytest.approx(4.5)

    def test_identical_images_zero(self):
        T = decaying_blob()
        assert ssd(T, T, VectorField2.zeros_like(T)) == 0.0

    def test_spacing_weight(self):
        T = ScalarField(np.ones((4, 4)), spacing=2.0)
        R = ScalarField(np.zeros((4, 4)), spacing=2.0)
        assert ssd(T, R, VectorField2.zeros_like(T)) == pytest.approx(0.5 * 4.0 * 16)

    def test_shape_mismatch_rejected(self):
        T = ScalarField(np.zeros((4, 4)))
        R = ScalarField(np.zeros((4, 5)))
        with pytest.raises(ValueError):
            ssd(T, R, VectorField2.zeros_like(T))

    def test_nonnegative_random(self, rng):
        T = ScalarField(rng.random((6, 6)))
        R = ScalarField(rng.random((6, 6)))
        u = VectorField2(ScalarField(rng.normal(scale=0.3, size=(6, 6))),
                         ScalarField(rng.normal(scale=0.3, size=(6, 6))))
        assert ssd(T, R, u) >= 0.0


class TestForce:
    def test_zero_residual_zero_force(self):
        T = decaying_blob()
        f = force(T, T, VectorField2.zeros_like(T))
        assert np.all(f.x_comp.data == 0.0)
        assert np.all(f.y_comp.data == 0.0)

    def test_matches_ssd_gradient_at_zero_interior(self):
        """At u = 0 the force equals the SSD gradient density exactly on
        interior nodes (the sampling derivative and the image gradient use
        the same central stencil there)."""
        T = decaying_blob()
        R = ScalarField(np.roll(T.data, 1, axis=1))
        u0 = VectorField2.zeros_like(T)
        f = force(T, R, u0)
        h2 = T.spacing**2
        for comp, analytic in ((0, f.x_comp.data), (1, f.y_comp.data)):
            def energy(field, comp=comp):
                parts = [u0.x_comp, u0.y_comp]
                parts[comp] = field
                return ssd(T, R, VectorField2(parts[0], parts[1]))

            num = numeric_gradient(energy, u0.x_comp, step=1e-6).data
            inner = (slice(1, -1), slice(1, -1))
            scale = np.max(np.abs(num)) or 1.0
            assert np.max(np.abs(num[inner] - h2 * analytic[inner])) / scale < 1e-6

    def test_matches_ssd_gradient_at_zero_everywhere(self):
        """Border nodes agree too once the image has decayed there."""
        T = decaying_blob(n=14, sigma=2.0)
        R = ScalarField(np.roll(T.data, 1, axis=0))
        u0 = VectorField2.zeros_like(T)
        f = force(T, R, u0)
        h2 = T.spacing**2
        num = numeric_gradient(
            lambda g: ssd(T, R, VectorField2(g, u0.y_comp)), u0.x_comp, 1e-6
        ).data
        scale = np.max(np.abs(num))
        assert np.max(np.abs(num - h2 * f.x_comp.data)) / scale < 1e-3

    def test_fractional_displacement_gradient_close(self):
        """Off the lattice the sampling is piecewise bilinear, so its exact
        derivative differs from the interpolated image gradient by O(h/sigma);
        on this blob the gap is ~6% and shrinks as the blob widens. The test
        guards against axis or sign errors, which produce O(1) mismatch."""
        T = decaying_blob(n=18, sigma=3.5)
        R = ScalarField(np.roll(T.data, 1, axis=1))
        xx, yy = coord_grids(18)
        taper = np.sin(np.pi * xx / 17) ** 2 * np.sin(np.pi * yy / 17) ** 2
        u = VectorField2(ScalarField(0.4 * taper), ScalarField(-0.3 * taper))
        f = force(T, R, u)
        h2 = T.spacing**2
        num = numeric_gradient(
            lambda g: ssd(T, R, VectorField2(g, u.y_comp)), u.x_comp, 1e-6
        ).data
        scale = np.max(np.abs(num))
        assert np.max(np.abs(num - h2 * f.x_comp.data)) / scale < 0.1

    def test_affine_image_force_is_sigma_times_u(self):
        """For an affine image the residual is exactly linear in u, so the
        force equals the linearized blocks applied to u (interior nodes;
        border samples leave the domain and are clamped)."""
        xx, yy = coord_grids(10)
        T = ScalarField(0.7 * xx - 0.4 * yy + 2.0)
        taper = np.sin(np.pi * xx / 9) ** 2 * np.sin(np.pi * yy / 9) ** 2
        u = VectorField2(ScalarField(0.8 * taper), ScalarField(-0.6 * taper))
        f = force(T, T, u)
        sig = linearize_force(T, u)
        pred_x = sig.sigma11.data * u.x_comp.data + sig.sigma12.data * u.y_comp.data
        pred_y = sig.sigma21.data * u.x_comp.data + sig.sigma22.data * u.y_comp.data
        inner = (slice(1, -1), slice(1, -1))
        assert np.allclose(f.x_comp.data[inner], pred_x[inner], atol=1e-12)
        assert np.allclose(f.y_comp.data[inner], pred_y[inner], atol=1e-12)


class TestLinearizeForce:
    def test_blocks_positive_semidefinite(self, rng):
        T = ScalarField(gaussian_filter(rng.normal(size=(9, 9)), 1.0))
        u = VectorField2(ScalarField(rng.normal(scale=0.2, size=(9, 9))),
                         ScalarField(rng.normal(scale=0.2, size=(9, 9))))
        sig = linearize_force(T, u)
        trace = sig.sigma11.data + sig.sigma22.data
        det = sig.sigma11.data * sig.sigma22.data - sig.sigma12.data**2
        assert np.all(trace >= 0.0)
        assert np.all(det >= -1e-12)

    def test_cross_blocks_shared(self):
        T = decaying_blob()
        sig = linearize_force(T, VectorField2.zeros_like(T))
        assert sig.sigma12 is sig.sigma21

    def test_rank_one_structure(self):
        T = decaying_blob()
        sig = linearize_force(T, VectorField2.zeros_like(T))
        det = sig.sigma11.data * sig.sigma22.data - sig.sigma12.data**2
        assert np.max(np.abs(det)) < 1e-14
