#!/usr/bin/env python3
"""
Tests for spin needlet frames, frame operators, bounds and kernel localization
"""

import json
import math
import os
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.constants import DEFAULT_A, FOUR_PI, FULL_RUN_ENV
from src.errors import BandLimitExceeded, ScaleMissing
from src.filters import build_filter
from src.frame import (
    apply_Q,
    apply_S,
    build_frame,
    frame_bound_estimate,
    frame_element,
    frame_energy,
    frame_from_dict,
    frame_to_dict,
    gap_sweep,
    kernel_band_limit,
    localization_probe,
    localization_study,
    needlet_coefficients,
    needlet_kernel,
    q_multipliers,
    random_unit_fields,
    scale_operator_norm,
    wavelet_coefficients,
)
from src.geometry import Rotation, SpherePoint
from src.harmonics import SpinCoefficients, eigenvalues, em_decompose, inner_product
from src.wigner import sylm_chart_values

FULL_RUN = os.environ.get(FULL_RUN_ENV) == "1"


class TestFrameConstruction(unittest.TestCase):
    """Test scales, partitions and serialization"""

    def setUp(self):
        self.frame = build_frame(DEFAULT_A, 0.3, 2, 16)

    def test_scales_cover_every_shell(self):
        """Test every shell |s| < l <= L is reached by some scale"""
        coverage = self.frame.coverage()
        self.assertTrue(np.all(coverage[3:] >= 1))
        self.assertTrue(np.all(coverage[:3] == 0))
        self.assertEqual(set(self.frame.partitions), set(self.frame.j_range))

    def test_q_multipliers_sum_to_one(self):
        """Test the squared multipliers over all scales add up to 1"""
        total = q_multipliers(self.frame.filter, 2, 16, self.frame.j_range)
        np.testing.assert_allclose(total[3:], 1.0, atol=1e-10)
        self.assertEqual(total[2], 0.0)

    def test_apply_Q_full_range(self):
        """Test Q over every scale is the identity off the null shell"""
        rng = np.random.default_rng(1)
        f = random_unit_fields(2, 16, 1, rng)
        np.testing.assert_allclose(apply_Q(f, self.frame.filter, self.frame.j_range).data, f.data, atol=1e-10)

    def test_scale_missing(self):
        """Test asking for a scale outside the frame raises"""
        with self.assertRaises(ScaleMissing):
            self.frame.partition(99)
        with self.assertRaises(ScaleMissing):
            self.frame.multipliers(-99)

    def test_band_limit_too_small(self):
        """Test L must leave at least one shell above |s|"""
        with self.assertRaises(ValueError):
            build_frame(DEFAULT_A, 0.3, 2, 2)

    def test_dict_round_trip(self):
        """Test the JSON form rebuilds the same frame"""
        data = json.loads(json.dumps(frame_to_dict(self.frame.with_bound_constant(0.7))))
        rebuilt = frame_from_dict(data)
        self.assertEqual(rebuilt.j_range, self.frame.j_range)
        self.assertEqual(rebuilt.n_elements, self.frame.n_elements)
        self.assertEqual(rebuilt.bound_constant, 0.7)

    def test_dict_scale_mismatch(self):
        """Test a stored scale range that disagrees with the construction is refused"""
        data = frame_to_dict(self.frame)
        data["j_range"] = data["j_range"][1:]
        with self.assertRaises(ValueError):
            frame_from_dict(data)


class TestWaveletCoefficients(unittest.TestCase):
    """Test beta_jk against inner products with frame elements"""

    @classmethod
    def setUpClass(cls):
        cls.frame = build_frame(DEFAULT_A, 0.35, 2, 12)
        cls.field = SpinCoefficients.random(2, 12, np.random.default_rng(2))
        cls.wavelets = wavelet_coefficients(cls.field, cls.frame)

    def test_matches_frame_elements(self):
        """Test beta_jk = <F, phi_jk> including cells in the polar chart"""
        for j in self.frame.j_range[::2]:
            part = self.frame.partition(j)
            for k in sorted({0, part.n_cells // 2, part.n_cells - 1}):
                with self.subTest(j=j, k=k):
                    expected = complex(inner_product(self.field, frame_element(self.frame, j, k)))
                    self.assertLess(abs(self.wavelets.beta[j][k] - expected), 1e-10 * max(1.0, abs(expected)))

    def test_chart_choice_keeps_moduli(self):
        """Test chart-I and tagged coefficients agree in modulus"""
        identity = wavelet_coefficients(self.field, self.frame, charts="identity")
        for j in self.frame.j_range:
            np.testing.assert_allclose(np.abs(identity.beta[j]), np.abs(self.wavelets.beta[j]), atol=1e-11)
            self.assertFalse(np.any(identity.polar[j]))

    def test_energy_matches_coefficients(self):
        """Test frame_energy equals sum_k |beta_jk|^2 per scale"""
        energies = frame_energy(self.field, self.frame)
        for j in self.frame.j_range:
            self.assertAlmostEqual(float(energies[j]), float(self.wavelets.energy(j)), places=9)

    def test_energy_is_quadratic_form_of_S(self):
        """Test sum_jk |beta_jk|^2 = <S F, F>"""
        total = float(self.wavelets.total_energy())
        self.assertAlmostEqual(total, complex(inner_product(apply_S(self.field, self.frame), self.field)).real,
                               places=9)

    def test_electric_magnetic_commute(self):
        """Test filtering commutes with the E/M split and beta(F) = beta(F_E) + i beta(F_M)"""
        electric, magnetic = em_decompose(self.field)
        for j in self.frame.j_range:
            weights = self.frame.multipliers(j)[:, None]
            filtered_e, filtered_m = em_decompose(self.field.with_data(self.field.data * weights))
            np.testing.assert_allclose(filtered_e.data, electric.data * weights, atol=1e-12)
            np.testing.assert_allclose(filtered_m.data, magnetic.data * weights, atol=1e-12)
        beta_e = wavelet_coefficients(electric, self.frame)
        beta_m = wavelet_coefficients(magnetic, self.frame)
        for j in self.frame.j_range:
            np.testing.assert_allclose(self.wavelets.beta[j], beta_e.beta[j] + 1j * beta_m.beta[j], atol=1e-12)

    def test_unknown_chart_policy(self):
        """Test an unknown chart policy is refused"""
        with self.assertRaises(ValueError):
            wavelet_coefficients(self.field, self.frame, charts="random")

    def test_missing_energy_scale(self):
        """Test energy of a scale that was not computed raises"""
        with self.assertRaises(ScaleMissing):
            self.wavelets.energy(1000)


class TestFrameOperator(unittest.TestCase):
    """Test S, Q and the frame bounds"""

    @classmethod
    def setUpClass(cls):
        cls.frame = build_frame(DEFAULT_A, 0.3, 2, 12)

    def test_self_adjoint(self):
        """Test <S f, g> = <f, S g>"""
        rng = np.random.default_rng(3)
        f = SpinCoefficients.random(2, 12, rng)
        g = SpinCoefficients.random(2, 12, rng)
        lhs = complex(inner_product(apply_S(f, self.frame), g))
        rhs = complex(inner_product(f, apply_S(g, self.frame)))
        self.assertLess(abs(lhs - rhs), 1e-10 * abs(lhs))

    def test_thread_count_does_not_change_result(self):
        """Test apply_S gives identical bits with one or two threads"""
        f = SpinCoefficients.random(2, 12, np.random.default_rng(4))
        np.testing.assert_array_equal(apply_S(f, self.frame, threads=1).data, apply_S(f, self.frame, threads=2).data)

    def test_random_unit_fields(self):
        """Test trial fields have unit norm and an empty null shell"""
        trials = random_unit_fields(2, 12, 5, np.random.default_rng(5))
        np.testing.assert_allclose(trials.norm(), 1.0, atol=1e-12)
        self.assertTrue(np.all(trials.data[:, 2] == 0.0))

    def test_bounds_straddle_one(self):
        """Test 0 < A <= 1 <= B and C0 is finite"""
        bounds = frame_bound_estimate(self.frame, n_trials=4, seed=6)
        a_est, b_est, c0 = bounds
        self.assertGreater(a_est, 0.0)
        self.assertLessEqual(a_est, 1.0)
        self.assertGreaterEqual(b_est, 1.0)
        self.assertTrue(math.isfinite(c0))
        self.assertEqual(len(bounds.ratios), 4)
        self.assertTrue(np.all((bounds.ratios >= a_est - 1e-12) & (bounds.ratios <= b_est + 1e-12)))
        self.assertEqual(set(bounds.scale_norms), set(self.frame.j_range))

    def test_trial_bounds_without_eigensolver(self):
        """Test A and B are exactly the extreme trial ratios when only random trials are used"""
        bounds = frame_bound_estimate(self.frame, n_trials=4, seed=6, use_eigensolver=False, per_scale=False)
        self.assertEqual(bounds.a_est, float(np.min(bounds.ratios)))
        self.assertEqual(bounds.b_est, float(np.max(bounds.ratios)))

    def test_gap_shrinks_with_b(self):
        """Test B - A decreases as the partitions refine"""
        gaps = [frame_bound_estimate(build_frame(DEFAULT_A, b, 2, 12), 2, 7, per_scale=False).gap
                for b in (0.4, 0.2)]
        self.assertGreater(gaps[0], gaps[1])
        self.assertGreater(gaps[1], 0.0)

    def test_scale_operator_norm(self):
        """Test ||Q_j - S_j|| is nonnegative and at most 1"""
        for j in self.frame.j_range:
            value = scale_operator_norm(self.frame, j, seed=8)
            self.assertGreaterEqual(value, 0.0)
            self.assertLess(value, 1.0)

    def test_trials_must_be_positive(self):
        """Test zero trials is refused"""
        with self.assertRaises(ValueError):
            frame_bound_estimate(self.frame, n_trials=0, seed=0)

    @unittest.skipUnless(FULL_RUN, f"set {FULL_RUN_ENV}=1 for the full frame-gap run")
    def test_gap_at_band_limit_64(self):
        """Test the gap at s = 2, L = 64 stays below C0 b and falls about 4x per halving of b"""
        b_values = (0.4, 0.2, 0.1)
        gaps = [frame_bound_estimate(build_frame(DEFAULT_A, b, 2, 64), 8, 1234, per_scale=False).gap
                for b in b_values]
        sweep = gap_sweep(b_values, gaps)
        self.assertTrue(np.all(sweep.gaps > 0.0))
        self.assertTrue(np.all(sweep.within_linear_bound()))
        for coarse, fine in zip(sweep.gaps, sweep.gaps[1:]):
            self.assertGreaterEqual(coarse / fine, 3.0)
            self.assertLessEqual(coarse / fine, 5.0)
        self.assertGreater(sweep.fitted_order, 1.5)
        self.assertLess(sweep.fitted_order, 2.5)


class TestGapSweep(unittest.TestCase):
    """Test the gap-versus-b summary used by frame-check"""

    def test_quadratic_gaps(self):
        """Test gaps falling like b^2 have order 2 and stay below the linear bound"""
        sweep = gap_sweep([0.1, 0.4, 0.2], [3e-4, 4.8e-3, 1.2e-3])
        np.testing.assert_allclose(sweep.b_values, [0.4, 0.2, 0.1])
        self.assertAlmostEqual(sweep.c0, 1.2e-2, places=14)
        self.assertTrue(math.isnan(sweep.orders[0]))
        np.testing.assert_allclose(sweep.orders[1:], 2.0, rtol=1e-12)
        self.assertAlmostEqual(sweep.fitted_order, 2.0, places=10)
        np.testing.assert_allclose(sweep.gap_over_b, [1.2e-2, 6e-3, 3e-3], rtol=1e-12)
        self.assertTrue(np.all(sweep.within_linear_bound()))

    def test_slow_gaps_break_linear_bound(self):
        """Test gaps falling like sqrt(b) exceed C0 b past the coarsest b"""
        b_values = np.array([0.4, 0.2, 0.1])
        sweep = gap_sweep(b_values, 0.01 * np.sqrt(b_values))
        self.assertEqual(sweep.within_linear_bound().tolist(), [True, False, False])
        self.assertAlmostEqual(sweep.fitted_order, 0.5, places=10)

    def test_linear_gaps_sit_on_the_bound(self):
        """Test gaps exactly proportional to b pass with order 1"""
        sweep = gap_sweep([0.4, 0.2, 0.1], [0.004, 0.002, 0.001])
        self.assertTrue(np.all(sweep.within_linear_bound()))
        self.assertAlmostEqual(sweep.fitted_order, 1.0, places=10)

    def test_single_b(self):
        """Test one b gives a constant and no order"""
        sweep = gap_sweep([0.3], [0.006])
        self.assertAlmostEqual(sweep.c0, 0.02, places=14)
        self.assertTrue(math.isnan(sweep.fitted_order))

    def test_invalid_sweeps(self):
        """Test mismatched, empty and repeated b values are refused"""
        with self.assertRaises(ValueError):
            gap_sweep([0.4, 0.2], [0.01])
        with self.assertRaises(ValueError):
            gap_sweep([], [])
        with self.assertRaises(ValueError):
            gap_sweep([0.4, 0.4], [0.01, 0.02])


class TestKernels(unittest.TestCase):
    """Test spin needlet kernels"""

    def setUp(self):
        self.filt = build_filter(DEFAULT_A)
        self.x = SpherePoint.from_angles(1.0, 0.3)

    def test_kernel_band_limit(self):
        """Test the band limit is the last shell inside the filter support"""
        for t in (0.3, 0.1, 0.04):
            for s in (0, 2):
                L = kernel_band_limit(t, s, self.filt)
                lam = eigenvalues(s, L + 1)
                self.assertGreaterEqual(t * t * lam[L + 1], self.filt.support[1])
                self.assertLess(t * t * lam[L], self.filt.support[1])

    def test_band_limit_exceeded(self):
        """Test a kernel whose filter reaches past L is refused"""
        L = kernel_band_limit(0.1, 2, self.filt)
        with self.assertRaises(BandLimitExceeded):
            needlet_kernel(0.1, 2, self.x, self.x, Rotation.identity(), Rotation.identity(), L - 1, self.filt)

    def test_kernel_diagonal(self):
        """Test K_t(x, x) = sum_l f(t^2 lambda_ls) (2l + 1) / 4 pi"""
        t, s = 0.1, 2
        L = kernel_band_limit(t, s, self.filt)
        value = needlet_kernel(t, s, self.x, self.x, Rotation.identity(), Rotation.identity(), L, self.filt)
        ls = np.arange(L + 1)
        expected = float(np.sum(self.filt(t * t * eigenvalues(s, L)) * (2 * ls + 1)) / FOUR_PI)
        self.assertLess(abs(value - expected) / expected, 1e-9)

    def test_kernel_matches_wavelet_coefficients(self):
        """Test K_t(x, y) = sum_lm sY_lm(x) times the coefficients of w_{t,y,R}"""
        t, s = 0.2, 1
        L = kernel_band_limit(t, s, self.filt)
        y = SpherePoint.from_angles(1.3, 0.9)
        R = Rotation.random(np.random.default_rng(9))
        wavelet = needlet_coefficients(t, s, y, R, L, self.filt)
        at_x = sylm_chart_values(s, L, self.x, Rotation.identity())[:, :, 0]
        expected = complex(np.sum(at_x * wavelet.data))
        direct = needlet_kernel(t, s, self.x, y, Rotation.identity(), R, L, self.filt)
        self.assertLess(abs(direct - expected), 1e-10 * max(1.0, abs(expected)))

    def test_kernel_hermitian(self):
        """Test K_{R1,R2}(x, y) = conj K_{R2,R1}(y, x)"""
        t, s = 0.2, 2
        L = kernel_band_limit(t, s, self.filt)
        y = SpherePoint.from_angles(0.6, -1.1)
        rng = np.random.default_rng(10)
        R1, R2 = Rotation.random(rng), Rotation.random(rng)
        forward = needlet_kernel(t, s, self.x, y, R1, R2, L, self.filt)
        backward = needlet_kernel(t, s, y, self.x, R2, R1, L, self.filt)
        self.assertAlmostEqual(abs(forward - np.conj(backward)), 0.0, places=10)

    def test_localization_center_scaling(self):
        """Test the kernel center grows like t^-2"""
        profiles = localization_study([0.1, 0.05], 2, self.x, 64, self.filt)
        scaled = [p.scaled_center for p in profiles]
        self.assertLess(abs(scaled[0] / scaled[1] - 1.0), 0.15)
        self.assertTrue(all(p.amplitudes[0] == max(p.amplitudes) for p in profiles))

    def test_localization_from_pole(self):
        """Test profiles start at a pole as well"""
        profile = localization_probe(0.1, 2, SpherePoint.north(), 32, self.filt)
        self.assertTrue(np.all(np.isfinite(profile.amplitudes)))
        self.assertGreater(profile.center, 0.0)

    @unittest.skipUnless(FULL_RUN, f"set {FULL_RUN_ENV}=1 for the full localization run")
    def test_far_zone_decay(self):
        """Test center * t^2 stays within 15% and the far-zone slope is at most -4"""
        profiles = localization_study([0.05, 0.025, 0.0125, 0.00625], 2, self.x, 400, self.filt)
        scaled = np.array([p.scaled_center for p in profiles])
        self.assertLess(float(np.max(scaled) / np.min(scaled) - 1.0), 0.15)
        for p in profiles:
            with self.subTest(t=p.t):
                self.assertLessEqual(p.slope, -4.0)


if __name__ == '__main__':
    unittest.main(verbosity=2)
