# tests/test_dwe.py

"""
tests/test_dwe.py

Unit tests for the damped wave equation module.
Tests the Crank-Nicolson evolution, the discrete dissipation identity,
decay fits and the resolvent-to-decay calculus.
"""

import math
import os
import sys
import unittest

import numpy as np
import pandas as pd
import scipy.linalg as la

# Add src directory to path for imports  # noqa: E402
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
from discretize import build_mode_operator  # noqa: E402
from dwe import (  # noqa: E402
    WEAK_TRANSFER_LIMIT,
    NonMonotoneTraceError,
    RegularityError,
    SchemeError,
    WaveState,
    alpha_to_G_P,
    assemble_generator,
    compare_decay_models,
    constant_strip_profile,
    energy,
    energy_bound,
    evolve,
    evolve_modes,
    fit_decay,
    generator_spectral_gap,
    initial_data,
    log_strip_profile,
    minimal_sqrt_constant,
    poly_strip_profile,
    rate_from_resolvent,
    step_norm_ratio,
)
from geometry import build_profile_set, build_surface  # noqa: E402
from resolvent import ScalingFit  # noqa: E402


def scaling_fit(model: str, exponent: float, coefficient: float = 1.0) -> ScalingFit:
    return ScalingFit(model=model, exponent=exponent, coefficient=coefficient,
                      residual=0.0, h_range=(1 / 64, 1 / 8),
                      residuals={model: 0.0}, coefficients={model: coefficient})


class TestEvolution(unittest.TestCase):
    """Test cases for time stepping and energy."""

    def setUp(self):
        """Set up test fixtures."""
        profiles = build_profile_set(baseline=0.5, forbidden_radius=0.0)
        op = build_mode_operator(build_surface("flat"), profiles, 1.0, 1, "damped", N=64)
        self.generator = assemble_generator(op)
        self.state = initial_data(self.generator, width_points=10.0)

    def test_zero_energy(self):
        """The zero state has zero energy."""
        zero = WaveState(1, np.zeros(64, dtype=complex), np.zeros(64, dtype=complex))
        self.assertEqual(energy(zero, self.generator), 0.0)

    def test_kinetic_energy(self):
        """With u = 0 the energy is ½Σw|v|²."""
        w = self.generator.op.grid.weights
        expected = 0.5 * float(np.sum(w * np.abs(self.state.v) ** 2))
        self.assertAlmostEqual(energy(self.state, self.generator), expected, places=12)

    def test_cfl_rejected(self):
        """Steps that do not resolve ω_max are rejected."""
        with self.assertRaises(SchemeError):
            evolve(self.state, self.generator, 0.1, 10)

    def test_energy_decreases(self):
        """Energy is nonincreasing under damping."""
        run = evolve(self.state, self.generator, 0.005, 200, record_every=10)
        E = run.trace["E"].to_numpy()
        self.assertTrue(np.all(np.diff(E) <= 1e-10 * E[0]))
        self.assertLess(E[-1], E[0])
        self.assertEqual(list(run.trace.columns), ["t", "E", "dissipated_power"])

    def test_dissipation_second_order(self):
        """The trapezoid dissipation residual halves its step as dt²."""
        residuals = []
        for dt in (0.005, 0.0025, 0.00125):
            run = evolve(self.state, self.generator, dt, int(round(1.0 / dt)))
            residuals.append(run.dissipation_residual)
        for coarse, fine in zip(residuals, residuals[1:]):
            self.assertGreaterEqual(coarse / fine, 3.5)
            self.assertLessEqual(coarse / fine, 4.5)

    def test_step_contraction(self):
        """One step never increases the energy norm."""
        self.assertLessEqual(step_norm_ratio(self.generator, 0.005), 1.0 + 1e-12)

    def test_undamped_conservation(self):
        """With a ≡ 0 the scheme conserves energy."""
        op = build_mode_operator(build_surface("flat"), None, 1.0, 1, "free", N=64)
        generator = assemble_generator(op)
        state = initial_data(generator)
        run = evolve(state, generator, 0.005, 200)
        E = run.trace["E"].to_numpy()
        self.assertLess(abs(E[-1] - E[0]) / E[0], 1e-10)

    def test_free_generator_spectrum(self):
        """Without damping the generator spectrum is ±i√μ over the mode Laplacian."""
        op = build_mode_operator(build_surface("torus", 1), None, 1.0, 2, "free", N=64)
        generator = assemble_generator(op, damping=lambda x: np.zeros_like(x))
        eigenvalues = la.eigvals(generator.matrix.toarray())
        mu = np.clip(la.eigvals(op.laplacian.toarray()).real, 0.0, None)
        scale = float(np.sqrt(mu.max()))
        self.assertLess(float(np.max(np.abs(eigenvalues.real))), 1e-8 * scale)
        expected = np.sort(np.concatenate([np.sqrt(mu), -np.sqrt(mu)]))
        np.testing.assert_allclose(np.sort(eigenvalues.imag), expected, atol=1e-8 * scale)

    def test_standing_wave_energy(self):
        """A flat standing wave starts at E = 1/2 and keeps it."""
        op = build_mode_operator(build_surface("flat"), None, 1.0, 0, "free", N=64)
        generator = assemble_generator(op)
        x = op.grid.x
        state = WaveState(0, np.zeros(64, dtype=complex),
                          np.sin(3.0 * np.pi * x).astype(complex))
        self.assertAlmostEqual(energy(state, generator), 0.5, places=12)
        run = evolve(state, generator, 0.005, 400, record_every=50)
        np.testing.assert_allclose(run.trace["E"].to_numpy(), 0.5, rtol=1e-10)

    def test_zero_mode_data(self):
        """For n = 0 the initial velocity has zero weighted mean."""
        op = build_mode_operator(build_surface("torus", 1), build_profile_set(), 1.0, 0,
                                 "damped", N=64)
        generator = assemble_generator(op)
        state = initial_data(generator, center=0.5)
        w = generator.op.grid.weights
        self.assertAlmostEqual(abs(np.sum(w * state.v)), 0.0, places=12)

    def test_parallel_modes(self):
        """Thread count does not change evolved traces."""
        profiles = build_profile_set(baseline=0.5, forbidden_radius=0.0)
        generators = [assemble_generator(build_mode_operator(
            build_surface("flat"), profiles, 1.0, n, "damped", N=64)) for n in (1, 2)]
        states = [initial_data(g) for g in generators]
        serial = evolve_modes(generators, states, 0.005, 50)
        threaded = evolve_modes(generators, states, 0.005, 50, threads=2)
        for a, b in zip(serial, threaded):
            np.testing.assert_allclose(a.trace["E"], b.trace["E"], rtol=1e-14)

    def test_spectral_gap_positive(self):
        """A damping floor gives a positive spectral gap."""
        self.assertGreater(generator_spectral_gap(self.generator), 0.0)


class TestDecayFit(unittest.TestCase):
    """Test cases for decay fits."""

    def test_exponential(self):
        """An exact exponential is recovered."""
        t = np.linspace(0.0, 10.0, 50)
        trace = pd.DataFrame({"t": t, "E": 3.0 * np.exp(-0.7 * t)})
        fit = fit_decay(trace, "exp")
        self.assertAlmostEqual(fit.parameters["rate"], 0.7, places=10)
        self.assertAlmostEqual(fit.parameters["log_C"], math.log(3.0), places=10)
        self.assertFalse(fit.qualitative)

    def test_exp_sqrt(self):
        """exp(-c√t) is fitted exactly by the exp-sqrt template."""
        t = np.linspace(0.0, 100.0, 80)
        trace = pd.DataFrame({"t": t, "E": np.exp(-2.0 * np.sqrt(t))})
        fit = fit_decay(trace, "exp-sqrt")
        self.assertAlmostEqual(fit.parameters["rate"], 2.0, places=8)
        self.assertLess(fit.residual, 1e-10)

    def test_poly_log(self):
        """t^{-s} log^{qs} t is fitted exactly by the poly-log template."""
        t = np.linspace(3.0, 1000.0, 100)
        trace = pd.DataFrame({"t": t, "E": t**-2.0 * np.log(t)})
        fit = fit_decay(trace, "poly-log")
        self.assertAlmostEqual(fit.parameters["s"], 2.0, places=8)
        self.assertAlmostEqual(fit.parameters["q"], 0.5, places=8)

    def test_qualitative_flag(self):
        """Less than two decades of decay is flagged as qualitative."""
        t = np.linspace(0.0, 1.0, 20)
        fit = fit_decay(pd.DataFrame({"t": t, "E": np.exp(-t)}), "exp")
        self.assertTrue(fit.qualitative)

    def test_non_monotone(self):
        """Increasing traces are rejected."""
        trace = pd.DataFrame({"t": [0.0, 1.0, 2.0, 3.0], "E": [1.0, 0.5, 0.6, 0.1]})
        with self.assertRaises(NonMonotoneTraceError):
            fit_decay(trace)
        with self.assertRaises(NonMonotoneTraceError):
            compare_decay_models(trace)

    def test_unknown_model(self):
        """Unknown templates are rejected."""
        trace = pd.DataFrame({"t": [0.0, 1.0, 2.0], "E": [1.0, 0.5, 0.2]})
        with self.assertRaises(ValueError):
            fit_decay(trace, "gaussian")

    def test_compare_models(self):
        """Every applicable template produces one row."""
        t = np.linspace(0.0, 20.0, 60)
        table = compare_decay_models(pd.DataFrame({"t": t, "E": np.exp(-0.5 * t)}))
        self.assertEqual(list(table["model"]), ["exp", "exp-sqrt", "poly-log"])
        best = table.loc[table["residual"].idxmin(), "model"]
        self.assertEqual(best, "exp")


class TestRateCalculus(unittest.TestCase):
    """Test cases for the resolvent-to-decay conversion."""

    def setUp(self):
        """Set up test fixtures."""
        self.t = np.logspace(0.0, 6.0, 31)

    def test_closed_forms_satisfy_condition(self):
        """The canonical profiles satisfy F^{(k+1)/2} <= exp(t P(F))."""
        for profile in (log_strip_profile(), poly_strip_profile(2), poly_strip_profile(3),
                        constant_strip_profile(0.5)):
            residual = profile.residual(self.t)
            scale = np.maximum(1.0, 1.5 * profile.log_F(self.t))
            self.assertTrue(np.all(residual <= 1e-9 * scale), profile.name)

    def test_minimal_sqrt_constant(self):
        """C = √((k+1)/2) is the smallest admissible constant."""
        self.assertAlmostEqual(minimal_sqrt_constant(2), math.sqrt(1.5))
        with self.assertRaises(ValueError):
            log_strip_profile(C=1.0)
        residual = log_strip_profile(C=2.0).residual(self.t)
        self.assertTrue(np.all(residual < 0.0))

    def test_saturation_matches_closed_form(self):
        """Saturated F agrees with the closed forms of constant and log strips."""
        for profile in (constant_strip_profile(0.5), log_strip_profile()):
            model = rate_from_resolvent(profile.G, profile.P, profile.k, profile.N, self.t)
            np.testing.assert_allclose(model.log_F, profile.log_F(self.t), rtol=1e-10)
            self.assertTrue(model.monotone)

    def test_regularity_gate(self):
        """k <= N + 1 is rejected."""
        profile = poly_strip_profile(2, k=1)
        with self.assertRaises(RegularityError):
            rate_from_resolvent(profile.G, profile.P, 1, 1.0 / 3.0)
        with self.assertRaises(RegularityError):
            profile.decay_model(self.t)

    def test_energy_bound(self):
        """min(1, F^{-s}) for s in (0, k]."""
        bound = energy_bound(np.array([-1.0, 0.0, 2.0]), 1.0, 2)
        np.testing.assert_allclose(bound, [1.0, 1.0, math.exp(-2.0)])
        with self.assertRaises(ValueError):
            energy_bound(np.array([1.0]), 3.0, 2)
        with self.assertRaises(ValueError):
            energy_bound(np.array([1.0]), 0.0, 2)

    def test_alpha_transfer_power(self):
        """α(h) ~ h^{-1/3} gives N = 1/3 and k = 2."""
        bounds = alpha_to_G_P(scaling_fit("power", -4.0 / 3.0))
        self.assertAlmostEqual(bounds.N, 1.0 / 3.0)
        self.assertEqual(bounds.k, 2)
        self.assertFalse(bounds.weak)
        self.assertAlmostEqual(float(bounds.G(1000.0)), 10.0, places=8)
        self.assertAlmostEqual(float(bounds.P(math.log(1000.0))), 0.1, places=8)

    def test_alpha_transfer_log_and_weak(self):
        """Log fits give N = 0; fast growth switches to the weak transfer."""
        log_bounds = alpha_to_G_P(scaling_fit("log", -1.0))
        self.assertEqual(log_bounds.N, 0.0)
        self.assertEqual(log_bounds.k, 2)
        weak = alpha_to_G_P(scaling_fit("power", -5.0))
        self.assertTrue(weak.weak)
        self.assertAlmostEqual(weak.N, 8.0)
        self.assertGreater(weak.k, weak.N + 1)

    def test_weak_limit_configurable(self):
        """The weak-transfer switch follows the given limit."""
        self.assertEqual(WEAK_TRANSFER_LIMIT, 2.0)
        fit = scaling_fit("power", -4.0)
        default = alpha_to_G_P(fit)
        self.assertTrue(default.weak)
        self.assertAlmostEqual(default.N, 6.0)
        relaxed = alpha_to_G_P(fit, polynomial_limit=4.0)
        self.assertFalse(relaxed.weak)
        self.assertAlmostEqual(relaxed.N, 3.0)
        self.assertEqual(relaxed.k, 5)

    def test_unit_alpha_gives_constant_strip(self):
        """α ≡ 1 with strip constant p0 reproduces the constant-strip decay."""
        p0 = 0.3
        bounds = alpha_to_G_P(scaling_fit("power", -1.0), c=p0)
        self.assertEqual(bounds.N, 0.0)
        self.assertEqual(bounds.k, 2)
        self.assertFalse(bounds.weak)
        model = rate_from_resolvent(bounds.G, bounds.P, bounds.k, bounds.N, self.t)
        expected = constant_strip_profile(p0, bounds.k).log_F(self.t)
        np.testing.assert_allclose(model.log_F, expected, rtol=1e-10)
        slope = bounds.k * (model.log_F[-1] - model.log_F[0]) / (self.t[-1] - self.t[0])
        self.assertAlmostEqual(slope, 2.0 * bounds.k * p0 / (bounds.k + 1), places=8)

    def test_decay_model_table(self):
        """The decay model table carries F, residual and the energy bound."""
        model = constant_strip_profile(0.5).decay_model(self.t)
        table = model.table()
        self.assertEqual(list(table.columns), ["t", "log_F", "residual", "energy_bound"])
        self.assertEqual(len(table), len(self.t))


if __name__ == "__main__":
    unittest.main()
