import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epl import counts as cn
from epl.polcalc import AnalyzerSetting, bell
from epl.source import SourceConfig, ideal_config, noisy_state, paper_preset

from conftest import random_density

PAPER_POWERS = [0.2, 0.4, 0.6, 0.8, 1.0, 1.6, 1.8, 3.1, 5.0, 7.0, 10.2, 14.3]


class TestRecords:
    def test_counts_non_negative(self):
        with pytest.raises(ValueError):
            cn.CountRecord("HH", 1.0, -1, 0, 0)
        with pytest.raises(ValueError):
            cn.CountRecord("XY", 1.0, 1, 1, 1)

    def test_integral_counts_become_int(self):
        r = cn.CountRecord("HV", 1.0, 3.0, 4.0, 1.0)
        assert isinstance(r.n_coinc, int)
        assert cn.CountRecord("HV", 1.0, 3.5, 4, 1).n_signal == 3.5

    def test_csv_round_trip(self):
        recs = [
            cn.CountRecord(cn.COMPUTATIONAL, 1.0, 156620, 156620, 29915),
            cn.CountRecord("DR", 2.5, 10, 11, 3),
            cn.CountRecord(AnalyzerSetting(90.0, 202.5, "s90i202.5"), 0.1, 5, 6, 0),
            cn.CountRecord("HH", 1.0, 0.25, 1e-7, 1 / 3),
        ]
        text = cn.records_to_csv(recs)
        assert text.splitlines()[0] == ",".join(cn.CSV_COLUMNS)
        assert "\r" not in text
        assert cn.records_from_csv(text) == recs
        assert cn.records_to_csv(cn.records_from_csv(text)) == text

    def test_csv_file_round_trip(self, tmp_path):
        recs = cn.simulate_counts(paper_preset(), ["HH", "DA", AnalyzerSetting(10, 20)], 0.01, seed=3)
        cn.write_records_csv(tmp_path / "r.csv", recs)
        assert cn.read_records_csv(tmp_path / "r.csv") == recs

    def test_csv_rejects_columns(self):
        with pytest.raises(ValueError):
            cn.records_from_csv("a,b\n1,2\n")


class TestExpectedRates:
    def test_preset_one_mw(self):
        r = cn.expected_rates(paper_preset())
        assert r.coinc == pytest.approx(3e4, rel=0.01)
        assert r.n_signal == pytest.approx(8.2e5 * 0.191)

    def test_lossless(self):
        r = cn.expected_rates(ideal_config(eta_signal=1, eta_idler=1, pump_power=2), accidentals=False)
        assert r.n_signal == r.n_idler == r.coinc == 2 * 8.2e5

    def test_preset_five_mw_linear(self):
        c5 = cn.expected_rates(paper_preset(pump_power=5.0), accidentals=False).coinc
        c1 = cn.expected_rates(paper_preset(), accidentals=False).coinc
        assert c5 == pytest.approx(5 * c1, rel=1e-14)
        assert cn.expected_rates(paper_preset(pump_power=5.0)).coinc == pytest.approx(1.5e5, rel=0.01)

    def test_resolved_sums(self):
        cfg = paper_preset(dark_signal=100, dark_idler=40)
        r = cn.expected_rates(cfg, accidentals=False)
        assert r.resolved["H_s"] + r.resolved["V_s"] == pytest.approx(r.n_signal)
        assert r.resolved["H_i"] + r.resolved["V_i"] == pytest.approx(r.n_idler)
        pairs = sum(r.resolved[f"{a}_s{b}_i"] for a in "HV" for b in "HV")
        assert pairs == pytest.approx(r.coinc)
        assert r.resolved["H_sV_i"] == pytest.approx(r.coinc * cfg.white_noise_w / 4)

    def test_estimator_identities(self):
        cfg = SourceConfig(pump_power=2.7, eta_signal=0.3, eta_idler=0.12)
        r = cn.expected_rates(cfg, accidentals=False)
        assert cn.pgr(r.n_signal, r.n_idler, r.coinc) == pytest.approx(cfg.pgr_per_mw * 2.7, rel=1e-15)
        assert cn.heralding(r.coinc, r.n_idler) == pytest.approx(0.3, rel=1e-15)
        assert cn.heralding(r.coinc, r.n_signal) == pytest.approx(0.12, rel=1e-15)

    def test_dark_counts_bias_pgr_up(self):
        base = cn.expected_rates(paper_preset(), accidentals=False)
        dark = cn.expected_rates(paper_preset(dark_signal=100, dark_idler=100), accidentals=False)
        assert cn.pgr(*dark[:3]) > cn.pgr(*base[:3])

    def test_setting_rates_computational_row(self):
        cfg = paper_preset()
        out = cn.setting_rates(cfg, [cn.COMPUTATIONAL, "HH"])
        np.testing.assert_allclose(out[0], cn.expected_rates(cfg)[:3])
        assert out[1, 2] < out[0, 2] / 2 + 1


class TestEstimators:
    def test_heralding_examples(self):
        assert cn.heralding(3e4, 1.57e5) == pytest.approx(0.191, abs=5e-4)
        assert cn.heralding(5.0, 5.0) == 1
        assert cn.heralding(0.0, 5.0) == 0
        with pytest.raises(ZeroDivisionError):
            cn.heralding(1, 0)

    def test_pgr_zero(self):
        with pytest.raises(ZeroDivisionError):
            cn.pgr(1, 1, 0)

    def test_symmetric_heralding(self):
        assert cn.symmetric_heralding(3e4, 8.2e5) == pytest.approx(0.1913, abs=5e-4)
        assert cn.symmetric_heralding(7.0, 7.0) == 1
        cfg = SourceConfig(eta_signal=0.1, eta_idler=0.3, coincidence_per_mw=1e4)
        r = cn.expected_rates(cfg, accidentals=False)
        assert cn.symmetric_heralding(r.coinc, cfg.pair_rate) == pytest.approx(math.sqrt(0.03), rel=1e-14)


class TestFringe:
    def test_examples(self):
        phi = bell("Phi+")
        assert cn.fringe_probability(phi, 0, 0) == pytest.approx(0.5, abs=1e-12)
        assert cn.fringe_probability(phi, 0, 180) == pytest.approx(0, abs=1e-12)

    def test_preset_visibility_at_d(self):
        rho = noisy_state(paper_preset())
        th = np.arange(0, 360, 5.0)
        p = np.array([cn.fringe_probability(rho, 90, t) for t in th])
        assert cn.visibility(p.max(), p.min()) == pytest.approx(0.98, abs=1e-12)

    @given(st.integers(0, 2**32 - 1), st.floats(-360, 360), st.floats(-360, 360))
    def test_orthogonal_pairs_sum_to_one(self, seed, ts, ti):
        rho = random_density(np.random.default_rng(seed))
        total = sum(cn.fringe_probability(rho, ts + a, ti + b) for a in (0, 180) for b in (0, 180))
        assert total == pytest.approx(1, abs=1e-12)


class TestMonteCarlo:
    def test_concentration(self):
        cfg = paper_preset()
        mean_c = cn.expected_rates(cfg).coinc
        duration = 1e6 / mean_c
        rec = cn.simulate_counts(cfg, [cn.COMPUTATIONAL], duration, seed=11)[0]
        assert abs(rec.n_coinc - 1e6) < 5e3

    def test_zero_duration(self):
        recs = cn.simulate_counts(paper_preset(), ["HH", "HV"], 0.0, seed=1)
        assert all(r.n_signal == r.n_idler == r.n_coinc == 0 for r in recs)

    def test_empty_settings(self):
        with pytest.raises(ValueError):
            cn.simulate_counts(paper_preset(), [], 1.0, seed=1)

    def test_deterministic_and_seed_dependent(self):
        cfg = paper_preset()
        settings = ["HH", "DD", "RL", cn.COMPUTATIONAL]
        a = cn.simulate_counts(cfg, settings, 1.0, seed=5)
        assert a == cn.simulate_counts(cfg, settings, 1.0, seed=5)
        b = cn.simulate_counts(cfg, settings, 1.0, seed=6)
        assert a != b
        means = cn.setting_rates(cfg, settings)
        for ra, rb, m in zip(a, b, means):
            for n in ((ra.n_coinc, rb.n_coinc)):
                assert abs(n - m[2]) < 5 * math.sqrt(m[2])

    def test_thread_independent(self):
        cfg = paper_preset()
        settings = [AnalyzerSetting(10 * k, 7 * k) for k in range(20)]
        assert cn.simulate_counts(cfg, settings, 0.5, 9, threads=1) == cn.simulate_counts(cfg, settings, 0.5, 9, threads=4)

    def test_means_converge(self):
        cfg = paper_preset()
        settings = ["HH", "HV", "DD", "DA", "RL", "RR"]
        means = cn.setting_rates(cfg, settings) * 50
        recs = cn.simulate_counts(cfg, settings, 50.0, seed=77)
        for r, m in zip(recs, means):
            for n, mu in zip((r.n_signal, r.n_idler, r.n_coinc), m):
                assert abs(n - mu) < 5 * math.sqrt(mu)

    def test_expected_records(self):
        cfg = paper_preset()
        recs = cn.expected_records(cfg, ["HH", "VV"], 2.0, accidentals=False)
        assert recs[0].n_coinc == pytest.approx(cfg.pair_rate * 0.191**2 * 0.495 * 2.0)


class TestFits:
    def test_linear_exact(self):
        x = np.array([0.2, 1.0, 3.1])
        fit = cn.linear_fit(x, 3e4 * x)
        assert fit.slope == pytest.approx(3e4, rel=1e-14)
        assert fit.intercept == pytest.approx(0, abs=1e-9)

    def test_linear_two_points(self):
        fit = cn.linear_fit([1, 3], [2, 8])
        assert (fit.slope, fit.intercept, fit.r2) == pytest.approx((3, -1, 1))

    def test_linear_errors(self):
        with pytest.raises(ValueError):
            cn.linear_fit([1], [1])
        with pytest.raises(ValueError):
            cn.linear_fit([1, 1], [1, 2])

    def test_power_sweep_slope(self):
        cfg = paper_preset()
        c = [cn.simulate_counts(cfg.replace(pump_power=p), [cn.COMPUTATIONAL], 1.0, seed=k)[0].n_coinc
             for k, p in enumerate(PAPER_POWERS)]
        assert cn.linear_fit(PAPER_POWERS, c).slope == pytest.approx(3e4, rel=0.02)

    @given(st.floats(10, 1e5), st.floats(0.01, 0.999), st.floats(0, 359),
           st.sampled_from(["bloch", "polarizer", "hwp"]))
    def test_sin_fit_recovers_plant(self, a, vis, theta0, conv):
        period = cn.FRINGE_PERIOD[conv]
        theta0 = theta0 * period / 360
        th = np.linspace(0, period, 13)
        y = a + a * vis * np.cos(2 * np.pi * (th - theta0) / period)
        fit = cn.sin_fit(th, y, conv)
        assert fit.visibility == pytest.approx(vis, rel=1e-9)
        assert fit.c_max == pytest.approx(a * (1 + vis), rel=1e-9)
        dphase = (fit.phase - theta0) % period
        assert min(dphase, period - dphase) < 1e-9 * period
        np.testing.assert_allclose(fit.predict(th), y, rtol=1e-9)

    def test_sin_fit_examples(self):
        th = np.arange(0, 361, 30.0)
        y = 100 * (1 + 0.98 * np.cos(np.deg2rad(th)))
        assert cn.sin_fit(th, y).visibility == pytest.approx(0.98, abs=1e-9)
        p = [cn.fringe_probability(bell("Phi+"), 0, t) for t in th]
        assert cn.sin_fit(th, p).visibility == pytest.approx(1, abs=1e-9)

    def test_sin_fit_errors(self):
        with pytest.raises(ValueError):
            cn.sin_fit([0, 10, 20], [1, 2, 3])
        with pytest.raises(ValueError):
            cn.sin_fit([0, 90, 180, 270, 360], [1, 2, 3, 4, 5], "hwp")  # all same phase
        with pytest.raises(ValueError):
            cn.sin_fit([0, 1, 2, 3], [1, 2, 3, 4], "radians")

    def test_preset_fringe_monte_carlo(self):
        cfg = paper_preset()
        th = np.arange(0, 181, 10.0)
        settings = [AnalyzerSetting.from_convention(45, t, "polarizer") for t in th]
        recs = cn.simulate_counts(cfg, settings, 1.0, seed=21)
        exact = cn.sin_fit(th, cn.setting_rates(cfg, settings)[:, 2], "polarizer")
        fit = cn.sin_fit(th, [r.n_coinc for r in recs], "polarizer")
        assert fit.visibility == pytest.approx(exact.visibility, abs=0.01)
        assert exact.visibility == pytest.approx(0.98, abs=0.002)
