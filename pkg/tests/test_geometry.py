# tests/test_geometry.py

"""
tests/test_geometry.py

Unit tests for the geometry module.
Tests warp functions of the model surfaces, smooth steps, coefficient
profiles and their support validation.
"""

import math
import os
import sys
import unittest

import numpy as np

# Add src directory to path for imports  # noqa: E402
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
from geometry import (  # noqa: E402
    InvalidParameterError,
    InvalidSupportError,
    build_profile_set,
    build_surface,
    damping_floor,
    make_profile,
    reduce_periodic,
    sample_geometry,
    smooth_step,
    warp_eval,
)


class TestSurfaces(unittest.TestCase):
    """Test cases for the model surfaces."""

    def test_reduce_periodic(self):
        """Coordinates are folded into [-1, 1)."""
        self.assertAlmostEqual(float(reduce_periodic(1.0)), -1.0)
        self.assertAlmostEqual(float(reduce_periodic(3.5)), -0.5)
        self.assertAlmostEqual(float(reduce_periodic(-1.25)), 0.75)

    def test_torus_m1_neck(self):
        """Torus m=1 has A(0)=1, A'(0)=0 and A''(0)=1 at the neck."""
        surface = build_surface("torus", 1)
        A, A1, A2 = (float(v) for v in surface.warp(0.0))
        self.assertAlmostEqual(A, 1.0, places=14)
        self.assertAlmostEqual(A1, 0.0, places=14)
        self.assertAlmostEqual(A2, 1.0, places=12)
        self.assertAlmostEqual(surface.max_warp, math.sqrt(1.0 + 4.0 / math.pi**2), places=12)

    def test_torus_degenerate_neck(self):
        """For m >= 2 the second derivative vanishes at the neck."""
        for m in (2, 3):
            surface = build_surface("torus", m)
            _, A1, A2 = surface.warp(0.0)
            self.assertEqual(float(A1), 0.0)
            self.assertEqual(float(A2), 0.0)

    def test_torus_fourth_derivative(self):
        """For m = 2 the neck is flat to fourth order with A''''(0) = 6."""
        surface = build_surface("torus", 2)

        def curvature_difference(delta):
            A2 = surface.warp(np.array([-delta, 0.0, delta]))[2]
            return float((A2[0] - 2.0 * A2[1] + A2[2]) / delta**2)

        extrapolated = (4.0 * curvature_difference(5e-3) - curvature_difference(1e-2)) / 3.0
        self.assertAlmostEqual(extrapolated, 6.0, delta=1e-6)

    def test_torus_derivative_consistency(self):
        """A' matches a centered finite difference of A."""
        surface = build_surface("torus", 2)
        x = np.linspace(-0.9, 0.9, 19)
        eps = 1e-6
        numeric = (surface.A(x + eps) - surface.A(x - eps)) / (2 * eps)
        np.testing.assert_allclose(surface.warp(x)[1], numeric, atol=1e-8)

    def test_peanut_profile(self):
        """Peanut follows cosh near the neck and the constant cap outside."""
        surface = build_surface("peanut")
        self.assertEqual(surface.m, 1)
        self.assertAlmostEqual(float(surface.A(0.3)), math.cosh(0.3), places=14)
        self.assertAlmostEqual(float(surface.A(0.95)), math.cosh(1.0), places=14)
        self.assertAlmostEqual(float(surface.warp(0.0)[2]), 1.0, places=14)

    def test_warp_eval_periodic_and_even(self):
        """warp_eval folds x into the period cell; A is even and A' odd."""
        surface = build_surface("torus", 2)
        x = np.array([-0.7, 0.3, 0.55])
        A, A1, A2 = warp_eval(surface, x)
        shifted = warp_eval(surface, x + 2.0)
        np.testing.assert_allclose(shifted[0], A, atol=1e-12)
        mirrored = warp_eval(surface, -x)
        np.testing.assert_allclose(mirrored[0], A, atol=1e-13)
        np.testing.assert_allclose(mirrored[1], -A1, atol=1e-13)
        np.testing.assert_allclose(mirrored[2], A2, atol=1e-13)

    def test_flat_surface(self):
        """Flat surface has A = 1 everywhere."""
        surface = build_surface("flat")
        np.testing.assert_array_equal(surface.A(np.linspace(-1, 1, 5)), np.ones(5))

    def test_invalid_parameters(self):
        """Unknown kinds and non-integer or small m are rejected."""
        with self.assertRaises(InvalidParameterError):
            build_surface("sphere")
        with self.assertRaises(InvalidParameterError):
            build_surface("torus", 0)
        with self.assertRaises(InvalidParameterError):
            build_surface("torus", 1.5)


class TestProfiles(unittest.TestCase):
    """Test cases for coefficient profiles."""

    def setUp(self):
        """Set up test fixtures."""
        self.profiles = build_profile_set()

    def test_smooth_step_values(self):
        """Both step families are 0, 1/2 and 1 at t = 0, 1/2, 1."""
        for kind in ("exp", "quintic"):
            psi, _, _ = smooth_step(np.array([0.0, 0.5, 1.0]), kind)
            np.testing.assert_allclose(psi, [0.0, 0.5, 1.0], atol=1e-15)

    def test_smooth_step_unknown(self):
        """Unknown smoothness is rejected."""
        with self.assertRaises(InvalidParameterError):
            smooth_step(np.array([0.5]), "cubic")

    def test_damping_vanishes_near_neck(self):
        """Damping is zero on |x| <= inner and at the plateau beyond outer."""
        a = self.profiles.a
        np.testing.assert_array_equal(a(np.linspace(-0.3, 0.3, 31)), 0.0)
        np.testing.assert_allclose(a(np.array([0.6, -0.8, 1.0])), 1.0)
        self.assertEqual(damping_floor(a), 0.0)

    def test_cutoffs(self):
        """B1, phi and chi have the expected values."""
        p = self.profiles
        self.assertAlmostEqual(float(p.B1(0.0)), 1.0)
        self.assertAlmostEqual(float(p.B1(0.3)), 0.0)
        self.assertAlmostEqual(float(p.phi(0.0)), 0.0)
        self.assertAlmostEqual(float(p.phi(0.2)), 1.0)
        self.assertAlmostEqual(float(p.chi(0.0)), 0.0)
        self.assertAlmostEqual(float(p.chi(0.8)), 1.0)

    def test_cutoff_outside_undamped_region_rejected(self):
        """B1 must be supported where the damping vanishes."""
        with self.assertRaises(InvalidSupportError):
            build_profile_set(cutoff_outer=0.35)

    def test_forbidden_zone(self):
        """Damping entering the forbidden zone is rejected."""
        with self.assertRaises(InvalidSupportError):
            make_profile("a", 0.05, 0.5, forbidden_radius=0.1)
        with self.assertRaises(InvalidSupportError):
            make_profile("a", 0.3, 0.5, baseline=0.2, forbidden_radius=0.1)

    def test_positive_baseline(self):
        """A baseline gives a damping floor (no undamped set)."""
        profiles = build_profile_set(baseline=0.5, forbidden_radius=0.0)
        self.assertAlmostEqual(damping_floor(profiles.a), 0.5)

    def test_sample_geometry(self):
        """The geometry table has all columns and the requested length."""
        table = sample_geometry(build_surface("torus", 1), self.profiles, 101)
        self.assertEqual(len(table), 101)
        for column in ("x", "A", "dA", "d2A", "a", "W", "chi", "B1", "phi"):
            self.assertIn(column, table.columns)


if __name__ == "__main__":
    unittest.main()
