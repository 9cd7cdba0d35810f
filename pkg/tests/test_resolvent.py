# tests/test_resolvent.py

"""
tests/test_resolvent.py

Unit tests for the resolvent module.
Tests smallest singular values, mode and cutoff resolvent norms, scaling
fits, global norms and the transfer-chain checks on small grids.
"""

import math
import os
import sys
import unittest
from unittest import mock

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence

# Add src directory to path for imports  # noqa: E402
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
from discretize import build_mode_operator  # noqa: E402
from geometry import build_profile_set, build_surface  # noqa: E402
from resolvent import (  # noqa: E402
    C0_SWEEP,
    InsufficientSamplesError,
    InvalidCutoffError,
    MissingFitError,
    ResolventScanner,
    ScalingFit,
    ScanSettings,
    StripScan,
    band_edge_mode,
    cutoff_resolvent_norm,
    fit_scaling,
    global_resolvent_norm,
    log_constant_ratio,
    resolvent_norm,
    smallest_singular_value,
    strip_constant,
    tail_is_monotone,
)

SMALL = ScanSettings(points_per_h=8.0, min_points=64, max_points=256)
TRANSFER_H = [0.5, 0.29730177875068026, 0.17677669529663687, 0.10511205190671431, 0.0625]


def power_fit(exponent: float, coefficient: float = 1.0) -> ScalingFit:
    return ScalingFit(model="power", exponent=exponent, coefficient=coefficient,
                      residual=0.0, h_range=(1 / 64, 1 / 8),
                      residuals={"power": 0.0, "log": math.inf},
                      coefficients={"power": coefficient, "log": math.nan})


class TestSingularValues(unittest.TestCase):
    """Test cases for σ_min and mode resolvent norms."""

    def test_dense_matches_iterative(self):
        """Dense SVD and shift-invert Lanczos agree."""
        rng = np.random.default_rng(1)
        N = 300
        main = 2.0 + np.linspace(0.0, 3.0, N) + 0.3j * rng.standard_normal(N)
        main[0] = 1.0
        off = np.full(N - 1, 0.1)
        S = sp.diags([off, main, off], [-1, 0, 1], format="csc", dtype=complex)
        dense, used_dense = smallest_singular_value(S, "dense")
        iterative, used_iterative = smallest_singular_value(S, "iterative")
        self.assertEqual(used_dense, "dense")
        self.assertEqual(used_iterative, "iterative")
        self.assertLess(abs(dense - iterative) / dense, 1e-8)

    def test_explicit_inverse(self):
        """1/σ_min equals the spectral norm of the explicit inverse."""
        rng = np.random.default_rng(2)
        M = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        sigma, _ = smallest_singular_value(M, "dense")
        expected = np.linalg.norm(np.linalg.inv(M), 2)
        self.assertAlmostEqual(1.0 / sigma, expected, delta=1e-10 * expected)

    def test_flat_free_norm(self):
        """Self-adjoint case: norm is 1/dist(z, spectrum)."""
        op = build_mode_operator(build_surface("flat"), None, 1.0, 0, "free", N=64)
        z = 0.5 + 0.1j
        self.assertAlmostEqual(resolvent_norm(op, z), 1.0 / abs(z), places=10)


class TestScalingFit(unittest.TestCase):
    """Test cases for scaling fits."""

    def setUp(self):
        """Set up test fixtures."""
        self.h = 2.0 ** -np.arange(3.0, 9.0)

    def test_exact_power_law(self):
        """An exact power law is recovered."""
        fit = fit_scaling([(h, 3.0 * h**-1.5) for h in self.h], "power")
        self.assertAlmostEqual(fit.exponent, -1.5, places=10)
        self.assertAlmostEqual(fit.coefficient, 3.0, places=8)
        self.assertLess(fit.residual, 1e-10)

    def test_exact_log_law(self):
        """C|log h|/h is recovered by the log model with zero residual."""
        fit = fit_scaling([(h, 2.0 * abs(math.log(h)) / h) for h in self.h], "log")
        self.assertAlmostEqual(fit.coefficient, 2.0, places=8)
        self.assertLess(fit.residuals["log"], 1e-10)
        self.assertGreater(fit.residuals["power"], fit.residuals["log"])

    def test_insufficient_samples(self):
        """Fewer than 5 samples or a short span are rejected."""
        with self.assertRaises(InsufficientSamplesError):
            fit_scaling([(h, 1.0 / h) for h in self.h[:4]])
        narrow = np.linspace(0.1, 0.05, 6)
        with self.assertRaises(InsufficientSamplesError):
            fit_scaling([(h, 1.0 / h) for h in narrow])

    def test_log_constant_ratio(self):
        """C|log h|/h data has a unit constant spread; a power law does not."""
        log_law = [(h, 2.0 * abs(math.log(h)) / h) for h in self.h]
        self.assertAlmostEqual(log_constant_ratio(log_law), 1.0, places=10)
        power_law = [(h, h**-2.0) for h in self.h]
        self.assertGreater(log_constant_ratio(power_law), 10.0)
        with self.assertRaises(InsufficientSamplesError):
            log_constant_ratio([(1.0, 1.0), (0.5, 2.0)])

    def test_alpha(self):
        """α(h) = C h^{e+1}, floored at 1."""
        fit = power_fit(-4.0 / 3.0, 2.0)
        h = 1.0 / 64.0
        self.assertAlmostEqual(float(fit.alpha(h)), 2.0 * h ** (-1.0 / 3.0))
        self.assertEqual(float(power_fit(-1.0, 0.5).alpha(h)), 1.0)


class TestCutoffNorm(unittest.TestCase):
    """Test cases for cutoff resolvent norms."""

    def setUp(self):
        """Set up test fixtures."""
        self.surface = build_surface("torus", 1)
        self.profiles = build_profile_set()
        self.op = build_mode_operator(self.surface, self.profiles, 0.125, 8, "absorbing",
                                      N=64)

    def test_unit_cutoff_is_full_norm(self):
        """The constant cutoff 1 gives the full resolvent norm."""
        full = resolvent_norm(self.op, 1.0)
        right = cutoff_resolvent_norm(self.op, 1.0, "right", 1.0)
        self.assertAlmostEqual(right, full, delta=1e-9 * full)

    def test_two_sided_not_larger(self):
        """||χRχ|| <= ||Rχ|| for 0 <= χ <= 1."""
        right = cutoff_resolvent_norm(self.op, 1.0, "right", self.profiles.chi)
        both = cutoff_resolvent_norm(self.op, 1.0, "both", self.profiles.chi)
        self.assertLessEqual(both, right * (1.0 + 1e-12))

    def test_trapped_set_check(self):
        """A cutoff that does not vanish on the trapped set is rejected."""
        with self.assertRaises(InvalidCutoffError):
            cutoff_resolvent_norm(self.op, 1.0, "right", self.profiles.B1,
                                  trapped_points=np.array([0.0]))
        value = cutoff_resolvent_norm(self.op, 1.0, "right", self.profiles.chi,
                                      trapped_points=np.array([0.0]))
        self.assertGreater(value, 0.0)

    def test_iterative_matches_dense(self):
        """The Lanczos cutoff norm agrees with the dense solve."""
        op = build_mode_operator(self.surface, self.profiles, 0.125, 8, "absorbing", N=300)
        for side in ("right", "both"):
            dense = cutoff_resolvent_norm(op, 1.0, side, self.profiles.chi, method="dense")
            iterative = cutoff_resolvent_norm(op, 1.0, side, self.profiles.chi,
                                              method="iterative")
            self.assertLess(abs(iterative - dense) / dense, 1e-8, side)

    def test_iterative_falls_back_to_dense(self):
        """A non-converging Lanczos iteration falls back to the dense solve."""
        failure = ArpackNoConvergence("nekonvergovalo", np.array([]), np.array([]))
        dense = cutoff_resolvent_norm(self.op, 1.0, "both", self.profiles.chi,
                                      method="dense")
        with mock.patch("resolvent.eigsh", side_effect=failure) as patched:
            with self.assertLogs("resolvent", level="WARNING"):
                value = cutoff_resolvent_norm(self.op, 1.0, "both", self.profiles.chi,
                                              method="iterative")
        self.assertTrue(patched.called)
        self.assertEqual(value, dense)

    def test_zero_cutoff(self):
        """The zero cutoff has zero norm."""
        self.assertEqual(cutoff_resolvent_norm(self.op, 1.0, "both", 0.0), 0.0)


class TestResolventScanner(unittest.TestCase):
    """Test cases for ResolventScanner on small grids."""

    def setUp(self):
        """Set up test fixtures."""
        self.surface = build_surface("torus", 1)
        self.profiles = build_profile_set()
        self.scanner = ResolventScanner(self.surface, self.profiles, SMALL)

    def test_band_edge_and_tail(self):
        """Band edge formula and the monotone tail check."""
        edge = band_edge_mode(self.surface, 0.25, 1.0)
        self.assertEqual(edge, math.ceil(self.surface.max_warp * math.sqrt(1.25) / 0.25))
        modes = np.arange(6)
        self.assertTrue(tail_is_monotone(np.array([1, 5, 3, 2, 1, 0.5]), modes, 2))
        self.assertFalse(tail_is_monotone(np.array([1, 5, 3, 4, 1, 0.5]), modes, 2))

    def test_global_norm(self):
        """The global norm is the maximum over the scanned modes."""
        result = self.scanner.global_norm(0.25, 1.0, "damped")
        self.assertEqual(result.N, 64)
        self.assertEqual(len(result.modes), math.ceil(2.0 * self.surface.max_warp / 0.25) + 1)
        self.assertAlmostEqual(result.norm, float(result.mode_norms.max()))
        self.assertIn(result.n_star, list(result.modes))

    def test_global_resolvent_norm_wrapper(self):
        """The module-level wrapper returns the scanner norm and maximizing mode."""
        norm, n_star = global_resolvent_norm(self.surface, self.profiles, 0.25, 1.0,
                                             "damped", SMALL)
        result = self.scanner.global_norm(0.25, 1.0, "damped")
        self.assertAlmostEqual(norm, result.norm, places=10)
        self.assertEqual(n_star, result.n_star)

    def test_resolution_study(self):
        """Resolution study compares the policy grid with its doubling."""
        study = self.scanner.resolution_study(0.25, 1.0, "absorbing")
        self.assertEqual(study["N"], 64)
        self.assertGreater(study["norm_N"], 0.0)
        self.assertGreater(study["norm_2N"], 0.0)
        self.assertAlmostEqual(
            study["relative_change"],
            abs(study["norm_2N"] - study["norm_N"]) / study["norm_N"], places=12)

    def test_spectral_gap_units(self):
        """The scaled gap is the gap in units of h/α(h) and never exceeds the window height."""
        gap = self.scanner.spectral_gap(0.25, alpha=2.0)
        self.assertGreater(gap["gap"], -1e-12)
        self.assertLessEqual(gap["gap"], gap["height"])
        self.assertAlmostEqual(gap["scaled_gap"], gap["gap"] * 2.0 / 0.25, places=12)

    def test_threads_do_not_change_result(self):
        """Thread count does not change the norms."""
        threaded = ResolventScanner(self.surface, self.profiles,
                                    ScanSettings(points_per_h=8.0, min_points=64,
                                                 max_points=256, threads=3))
        a = self.scanner.global_norm(0.25, 1.0, "absorbing")
        b = threaded.global_norm(0.25, 1.0, "absorbing")
        np.testing.assert_array_equal(a.mode_norms, b.mode_norms)

    def test_lower_half_plane(self):
        """The absorbing norm obeys ||R(z)|| <= 1/|Im z| for Im z < 0."""
        z_list = [1.0 - 0.5j, 0.9 - 0.05j, 1.2 - 0.01j]
        rows = self.scanner.lower_half_plane_check(0.125, z_list)
        self.assertTrue(all(r["holds"] for r in rows))
        with self.assertRaises(ValueError):
            self.scanner.lower_half_plane_check(0.125, [1.0 + 0.1j])

    def test_transfer_requires_fit(self):
        """The transfer check needs a fitted α(h)."""
        with self.assertRaises(MissingFitError):
            self.scanner.verify_transfer([0.25, 0.125], None)

    def test_strip_scan_row(self):
        """A damped strip scan reports a positive scaled gap and emptiness against the floor."""
        scan = self.scanner.strip_scan(0.25, power_fit(-1.0), 0.1, n_points=3)
        row = scan.as_row()
        self.assertEqual(row["kind"], "damped")
        self.assertGreater(row["scaled_gap"], 0.0)
        self.assertEqual(scan.empty, scan.min_scaled_sigma >= 1e-2)

    def test_strip_scan_floor(self):
        """A floor above every attainable scaled σ marks the strip as hit."""
        scan = self.scanner.strip_scan(0.25, power_fit(-1.0), 0.1, n_points=3,
                                       sigma_floor=1e6)
        self.assertFalse(scan.empty)
        self.assertFalse(scan.as_row()["empty"])

    def test_strip_scan_modified(self):
        """The modified scan sweeps 1 ± c0/α and picks its threshold from the sweep."""
        c0 = 0.1
        scan = self.scanner.strip_scan(0.25, power_fit(-1.0), c0, n_points=3,
                                       kind="modified")
        self.assertEqual(scan.kind, "modified")
        self.assertTrue(math.isnan(scan.scaled_gap))
        self.assertIn(scan.threshold, [0.0] + [float(c) for c in C0_SWEEP])
        self.assertLessEqual(abs(scan.argmin_z.real - 1.0), c0 / scan.alpha + 1e-12)
        self.assertLessEqual(abs(scan.argmin_z.imag), c0 * 0.25 / scan.alpha + 1e-12)
        self.assertEqual(scan.empty, scan.min_scaled_sigma >= 1e-2)

    def test_strip_scan_rejects_kind(self):
        """Only damped and modified strips are scanned."""
        with self.assertRaises(ValueError):
            self.scanner.strip_scan(0.25, power_fit(-1.0), 0.1, kind="absorbing")

    def test_strip_constant(self):
        """The common strip constant is the smallest threshold."""
        scans = [StripScan(h=h, c0=0.1, kind="damped", alpha=1.0, min_scaled_sigma=1.0,
                           argmin_z=1.0 + 0j, argmin_n=0, threshold=c, empty=True)
                 for h, c in ((0.25, 0.5), (0.125, 0.2), (0.0625, 0.3))]
        self.assertEqual(strip_constant(scans), 0.2)
        with self.assertRaises(InsufficientSamplesError):
            strip_constant([])

    def test_control_chain_normalized(self):
        """The normalized control constant never exceeds 1 as h shrinks."""
        rng = np.random.default_rng(0)
        for h in (0.25, 0.125, 0.0625):
            grid = self.scanner.grid_for(h)
            samples = [rng.standard_normal(grid.N) + 1j * rng.standard_normal(grid.N)
                       for _ in range(4)]
            report = self.scanner.verify_control_chain(h, 1.0, samples, alpha=1.0)
            self.assertEqual(len(report.rows), 4)
            self.assertLessEqual(report.maxima["C_iii_normalized"], 1.0 + 1e-8, h)

    def test_unit_absorption_bound(self):
        """With W ≡ 1 the absorbing norm is at most 1 on the real axis."""
        profiles = build_profile_set(baseline=1.0, plateau=1.0, forbidden_radius=0.0)
        scanner = ResolventScanner(self.surface, profiles, SMALL)
        for z in (0.8, 1.0, 1.2):
            result = scanner.global_norm(0.125, z, "absorbing")
            self.assertLessEqual(result.norm, 1.0 + 1e-12)

    def test_verify_transfer_report(self):
        """A real transfer run fills every row consistently."""
        surface = build_surface("torus", 2)
        scanner = ResolventScanner(surface, self.profiles, SMALL)
        fit, _ = scanner.fit(TRANSFER_H, 1.0, "absorbing", "power")
        report = scanner.verify_transfer(TRANSFER_H, fit, c0=0.1, n_real=3)
        self.assertEqual([r["h"] for r in report.rows], TRANSFER_H)
        for row in report.rows:
            self.assertGreaterEqual(row["alpha"], 1.0)
            self.assertEqual(row["damped_norm"],
                             max(row["damped_norm_real"], row["damped_norm_strip"]))
            self.assertAlmostEqual(row["constant"],
                                   row["damped_norm"] * row["h"] / row["alpha"], places=12)
            self.assertAlmostEqual(row["weak_prediction"], row["alpha"] ** 2 / row["h"],
                                   places=9)
        self.assertAlmostEqual(report.exponent_gap,
                               abs(report.damped_fit.exponent - fit.exponent), places=12)
        self.assertEqual(report.bounded, report.constant_ratio <= 10.0)
        self.assertGreaterEqual(report.constant_ratio, 1.0)

    @unittest.skipUnless(os.environ.get("RESOLVENT_LAB_SLOW"), "pomalý test lokalizace módu")
    def test_maximizing_mode_on_trapped_orbit(self):
        """On the torus with m = 1 the maximizing mode sits at h n ≈ A(0)."""
        scanner = ResolventScanner(self.surface, self.profiles,
                                   ScanSettings(points_per_h=32.0, max_points=2048))
        for h in (1.0 / 16.0, 1.0 / 32.0):
            result = scanner.global_norm(h, 1.0, "absorbing")
            self.assertLessEqual(abs(h * result.n_star - self.surface.min_warp), 0.2)

    @unittest.skipUnless(os.environ.get("RESOLVENT_LAB_SLOW"), "pomalý test škálování")
    def test_gcc_exponent(self):
        """With a damping floor the damped norm scales like h^-1."""
        profiles = build_profile_set(baseline=0.5, forbidden_radius=0.0)
        scanner = ResolventScanner(self.surface, profiles,
                                   ScanSettings(points_per_h=16.0, max_points=2048))
        h_list = [2.0 ** (-k / 2.0) for k in range(8, 15)]
        fit, _ = scanner.fit(h_list, 1.0, "damped", "power")
        self.assertAlmostEqual(fit.exponent, -1.0, delta=0.1)


if __name__ == "__main__":
    unittest.main()
