import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from echomem.detection import (CountHistogram, DetectionError, DetectorModel, FringePoint,
                               PhaseNoiseModel, expected_counts, fit_exponential_decay, fit_fringe,
                               fringe_to_csv, interference_scan, matched_lo_photons,
                               simulate_counts, snr, visibility_model)
from echomem.echo import Pulse

from conftest import DELTA


def histogram(counts):
    counts = np.asarray(counts)
    return CountHistogram(np.arange(counts.size + 1) * 1e-7, counts, 1, 0)


def synthetic_fringe(v, period, n=41, c0=1e4, phi0=0.4):
    x = np.linspace(-period, period, n)
    return x, c0 * (1 + v * np.cos(2 * np.pi * x / period + phi0))


def matched_lo(result, m=1):
    e = result.echo(m)
    n = matched_lo_photons(e.efficiency, result.pulse.mean_photons, result.transmitted_fraction)
    return Pulse(m / DELTA, result.pulse.fwhm, n)


class TestTypes:
    @pytest.mark.parametrize("kw", [dict(efficiency=1.2), dict(path_transmission=-0.1), dict(dark_rate=-1)])
    def test_detector_invariants(self, kw):
        with pytest.raises(DetectionError):
            DetectorModel(**kw)

    def test_detector_defaults(self):
        d = DetectorModel()
        assert (d.efficiency, d.dark_rate, d.path_transmission, d.chopper_open) == (0.07, 10.0, 0.15, True)

    def test_negative_sigma(self):
        with pytest.raises(DetectionError):
            PhaseNoiseModel(-0.1)

    def test_histogram_length(self):
        with pytest.raises(DetectionError):
            CountHistogram(np.arange(4.0), np.zeros(4, int), 1, 0)


class TestCounts:
    def test_pure_darks(self):
        det = DetectorModel(dark_rate=10.0)
        n = 8000 * 3600
        h = simulate_counts(None, None, det, n, 100e-9, seed=1, t_range=(0, 10e-6))
        mu = 10.0 * 100e-9 * n
        assert np.allclose(h.expected, mu)
        assert abs(h.counts.mean() - mu) < 3 * math.sqrt(mu / h.counts.size)

    def test_doubling_trials(self, afc_result):
        det = DetectorModel()
        edges = np.linspace(0, 1e-6, 101)
        a = expected_counts(afc_result, 50.0, det, 1000, edges)
        b = expected_counts(afc_result, 50.0, det, 2000, edges)
        assert np.allclose(b, 2 * a, rtol=1e-12)

    def test_signal_term(self, afc_result):
        det = DetectorModel(dark_rate=0.0)
        edges = afc_result.times[[0, -1]]
        mu = expected_counts(afc_result, None, det, 1, edges)
        total = np.trapezoid(afc_result.intensity, afc_result.times)
        assert mu[0] == pytest.approx(0.15 * 0.07 * total, rel=1e-6)

    def test_chopper_closed_leaves_darks(self, afc_result):
        det = DetectorModel(chopper_open=False)
        edges = np.linspace(0, 1e-6, 11)
        assert np.allclose(expected_counts(afc_result, 100.0, det, 10, edges), 10 * 10.0 * 1e-7)

    def test_deterministic(self, afc_result):
        det = DetectorModel()
        a = simulate_counts(afc_result, 20.0, det, 10**6, 10e-9, seed=42)
        b = simulate_counts(afc_result, 20.0, det, 10**6, 10e-9, seed=42)
        c = simulate_counts(afc_result, 20.0, det, 10**6, 10e-9, seed=43)
        assert np.array_equal(a.counts, b.counts)
        assert not np.array_equal(a.counts, c.counts)

    def test_seed_required(self):
        with pytest.raises(DetectionError):
            simulate_counts(None, None, DetectorModel(), 10, 1e-7, seed=None, t_range=(0, 1e-6))

    @pytest.mark.parametrize("kw", [dict(bin_width=0.0), dict(n_trials=0)])
    def test_preconditions(self, kw):
        args = dict(bin_width=1e-7, n_trials=10)
        args.update(kw)
        with pytest.raises(DetectionError):
            simulate_counts(None, None, DetectorModel(), seed=0, t_range=(0, 1e-6), **args)

    def test_poisson_dispersion(self):
        det = DetectorModel(dark_rate=1e3)
        samples = [simulate_counts(None, None, det, 1000, 1e-5, seed=s, t_range=(0, 1e-5)).counts[0]
                   for s in range(10_000)]
        ratio = np.var(samples, ddof=1) / np.mean(samples)
        assert 0.9 <= ratio <= 1.1

    def test_zero_input_flat_in_time(self):
        det = DetectorModel()
        h = simulate_counts(None, 1e4, det, 10**7, 100e-9, seed=3, t_range=(0, 2e-6), collection=1.0)
        assert np.allclose(h.expected, h.expected[0])
        # fluorescence decaying across waits scales the flat level
        h2 = simulate_counts(None, 1e4 * math.exp(-1), det, 10**7, 100e-9, seed=3, t_range=(0, 2e-6))
        fl = h.expected - h.dark_per_bin
        fl2 = h2.expected - h2.dark_per_bin
        assert fl2 == pytest.approx(fl * math.exp(-1), rel=1e-12)

    def test_dark_subtraction_helper(self):
        det = DetectorModel(dark_rate=10.0)
        fluor = 200.0
        h = simulate_counts(None, fluor, det, 10**7, 1e-6, seed=5, t_range=(0, 50e-6))
        rest = h.subtract_darks()
        pred = 10**7 * det.efficiency * fluor * 1e-6
        se = math.sqrt(h.expected[0] / rest.size)
        assert abs(rest.mean() - pred) < 3 * se

    def test_csv(self, tmp_path):
        h = histogram([1, 2, 3])
        h.to_csv(tmp_path / "h.csv")
        lines = (tmp_path / "h.csv").read_text().splitlines()
        assert lines[0] == "bin_start_s,bin_end_s,counts"
        assert len(lines) == 4 and lines[-1].endswith(",3")


class TestSNR:
    def test_examples(self):
        h = histogram([200, 0, 100, 0])
        assert snr(h, (0, 1), (2, 3)) == pytest.approx(1.0)
        assert snr(histogram([7, 7]), (0, 1), (1, 2)) == 0.0

    def test_empty_noise_window(self):
        assert snr(histogram([5, 0]), (0, 1), (1, 2)) is None

    def test_window_rules(self):
        h = histogram([1, 2, 3, 4])
        with pytest.raises(DetectionError, match="overlap"):
            snr(h, (0, 2), (1, 3))
        with pytest.raises(DetectionError):
            snr(h, (0, 1), (2, 4))

    @given(a=st.integers(1, 10**6), b=st.integers(1, 10**6), k=st.integers(1, 1000))
    def test_scale_invariance(self, a, b, k):
        assert snr(histogram([k * a, k * b]), (0, 1), (1, 2)) == pytest.approx(
            snr(histogram([a, b]), (0, 1), (1, 2)), rel=1e-12)

    def test_window_bins(self):
        h = histogram(np.zeros(10, int))
        assert h.window_bins(2e-7, 5e-7) == (2, 5)


class TestVisibility:
    def test_zero_noise(self):
        for m in range(1, 6):
            assert visibility_model(0.0, m) == 1.0

    def test_measured_first_order(self):
        noise = PhaseNoiseModel.from_visibility(0.89)
        assert noise.sigma == pytest.approx(0.483, abs=1e-3)
        assert visibility_model(noise.sigma, 2) == pytest.approx(0.627, abs=1e-3)

    @given(sigma=st.floats(0, 3), m=st.integers(1, 5))
    def test_power_identity(self, sigma, m):
        assert visibility_model(sigma, m) == pytest.approx(visibility_model(sigma, 1) ** (m * m), abs=1e-12)

    def test_invalid(self):
        with pytest.raises(DetectionError):
            visibility_model(0.1, 0)


class TestFit:
    def test_noiseless_round_trip(self):
        x, y = synthetic_fringe(0.5, DELTA)
        fit = fit_fringe(np.column_stack([x, y]))
        assert fit.visibility == pytest.approx(0.5, abs=1e-6)
        assert fit.period == pytest.approx(DELTA, rel=0.02)

    def test_period_recovery_with_noise(self):
        x, y = synthetic_fringe(0.8, DELTA)
        y = np.random.default_rng(0).poisson(y)
        assert fit_fringe(np.column_stack([x, y])).period == pytest.approx(DELTA, rel=0.02)

    def test_monte_carlo_coverage(self):
        x, mu = synthetic_fringe(0.6, DELTA, n=31, c0=300)
        pulls = []
        for s in range(100):
            y = np.random.default_rng(s).poisson(mu)
            fit = fit_fringe(np.column_stack([x, y]), period_guess=DELTA)
            pulls.append((fit.visibility - 0.6) / fit.errors["visibility"])
        assert np.all(np.abs(pulls) < 3.5)
        assert np.mean(np.abs(pulls) < 3) >= 0.97
        assert abs(np.std(pulls) - 1) < 0.25

    def test_degenerate_scan(self):
        with pytest.raises(DetectionError, match="degenerate"):
            fit_fringe(np.column_stack([np.zeros(10), np.arange(10.0)]))

    def test_too_few_points(self):
        x, y = synthetic_fringe(0.5, DELTA, n=5)
        with pytest.raises(DetectionError):
            fit_fringe(np.column_stack([x, y]))

    def test_json(self, tmp_path):
        x, y = synthetic_fringe(0.5, DELTA)
        fit_fringe(np.column_stack([x, y])).to_json(tmp_path / "f.json")
        d = json.loads((tmp_path / "f.json").read_text())
        assert {"V", "V_err", "P", "phi0"} <= set(d)

    def test_exponential_decay(self):
        t = np.linspace(0, 50e-3, 11)
        fit = fit_exponential_decay(t, 3.0 * np.exp(-t / 11e-3) + 0.2)
        assert fit["tau"] == pytest.approx(11e-3, rel=1e-6)


class TestInterference:
    def scan(self, result, m, sigma, n_trials=10**9, points=41, seed=11):
        from echomem.spectral import CombSpec
        comb = CombSpec.from_finesse(DELTA, 2.6, 0.5, 1.5, 15)
        period = DELTA / m
        grid = np.linspace(-period, period, points)
        return interference_scan(result, matched_lo(result, m), grid, comb, PhaseNoiseModel(sigma),
                                 DetectorModel(), n_trials, seed, m=m)

    def test_noiseless_full_visibility(self, afc_result):
        fit = fit_fringe(self.scan(afc_result, 1, 0.0), period_guess=DELTA)
        assert fit.visibility == pytest.approx(1.0, abs=3 * fit.errors["visibility"] + 1e-3)

    @pytest.mark.parametrize("m", [1, 2])
    def test_period(self, afc_result, m):
        fit = fit_fringe(self.scan(afc_result, m, 0.3), period_guess=DELTA / m)
        assert fit.period == pytest.approx(DELTA / m, rel=0.02)

    def test_converges_to_model(self, afc_result):
        sigma = PhaseNoiseModel.from_visibility(0.9).sigma
        fit = fit_fringe(self.scan(afc_result, 2, sigma, n_trials=10**10), period_guess=DELTA / 2)
        assert abs(fit.visibility - 0.9 ** 4) < 3 * fit.errors["visibility"] + 0.01

    def test_order_independence(self, afc_result):
        a = self.scan(afc_result, 1, 0.4)
        b = self.scan(afc_result, 1, 0.4)
        assert [p.counts for p in a] == [p.counts for p in b]

    def test_mismatched_lo_warns(self, afc_result):
        from echomem.spectral import CombSpec
        comb = CombSpec.from_finesse(DELTA, 2.6, 0.5, 1.5, 15)
        lo = Pulse(1 / DELTA, 100e-9, 10.0)
        with pytest.warns(UserWarning, match="LO energy"):
            pts = interference_scan(afc_result, lo, np.linspace(0, DELTA, 8), comb, PhaseNoiseModel(0.0),
                                    DetectorModel(), 10**6, 0)
        assert len(pts) == 8

    def test_csv(self, tmp_path):
        fringe_to_csv([FringePoint(1.0, 4, 4.0)], tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text().splitlines() == ["delta0_hz,counts,counts_err", "1,4,2"]
