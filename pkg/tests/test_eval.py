import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modlse.config import ExperimentConfig, SpectrumSpec
from modlse.core import SamplingGrid
from modlse.evaluate import (
    check_theorem1,
    check_theorem2,
    check_theorem3,
    check_uniformity,
    folding_threshold,
    histogram_bins,
    nmse,
    rsnr_db,
    run_sweep,
    spread_mixture,
    success,
)

PI = math.pi


class TestMetrics:
    def test_nmse_example(self):
        assert nmse([1.0, 0.0], [0.5, 0.0]) == pytest.approx(0.25)
        assert nmse([3.0 + 4.0j], [3.0 + 4.0j]) == 0.0

    def test_nmse_errors(self):
        with pytest.raises(ValueError):
            nmse([1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            nmse([0.0], [1.0])

    def test_rsnr_example(self):
        # ||y||^2 = 100, ||y-yh||^2 = 1 -> 20 log10(100) = 40 dB
        y = np.full(4, 5.0 + 0j)
        yh = y.copy()
        yh[0] += 1.0
        assert rsnr_db(y, yh) == pytest.approx(40.0)

    def test_rsnr_cap(self):
        y = np.ones(3, complex)
        assert rsnr_db(y, y) == 300.0

    @given(st.floats(min_value=0.01, max_value=2 * math.pi - 0.01))
    @settings(max_examples=30, deadline=None)
    def test_nmse_rotation_invariant(self, theta):
        a = np.array([1.0 + 2.0j, -0.5j, 0.3])
        b = np.array([1.1 + 2.0j, -0.4j, 0.0])
        rot = np.exp(1j * theta)
        assert nmse(a, b) == pytest.approx(nmse(a * rot, b * rot), rel=1e-9)

    def test_success_true_case(self):
        true = np.array([0, 2.0, 0, 1.0], complex)
        approx = np.array([0.05, 2.1, 0.0, 0.95], complex)
        assert success(true, approx)

    def test_success_support_mismatch(self):
        true = np.array([0, 2.0, 0, 1.0], complex)
        bad = np.array([0.5, 2.0, 0, 1.0], complex)
        assert not success(true, bad)

    def test_success_relative_error(self):
        true = np.array([2.0], complex)
        assert not success(true, np.array([2.5], complex))  # 25% off
        assert success(true, np.array([2.2], complex))  # 10% off


class TestTheoremCheckers:
    def test_theorem1_identity_tight(self):
        worst = check_theorem1(trials=50, seed=1)
        assert worst <= 1e-9

    def test_theorem2_trivial_rate_one(self):
        # tiny signal relative to lam: every difference is fold-free
        emp, bound = check_theorem2(
            [0.001], [PI], SamplingGrid(0.01, 50), 1.0, trials=200, seed=0
        )
        assert emp == 1.0
        assert bound <= 1.0

    def test_theorem2_empirical_dominates_bound(self):
        amps, omegas = spread_mixture(10, 1.8 * PI, 4.0)
        emp, bound = check_theorem2(
            amps, omegas, SamplingGrid(0.052, 400), 1.0, trials=500, seed=2
        )
        assert bound == pytest.approx(0.411905, abs=1e-3)
        assert emp >= bound - 0.02

    def test_theorem2_rate_decreases_with_dt(self):
        amps, omegas = spread_mixture(10, 1.8 * PI, 4.0)
        rates = [
            check_theorem2(
                amps, omegas, SamplingGrid(dt, 400), 1.0, trials=300, seed=3
            )[0]
            for dt in (0.01, 0.04, 0.08)
        ]
        assert rates[0] > rates[1] > rates[2]

    def test_theorem3_reference_example(self):
        # 7 sin(1.6 pi t): dt below 2 lam/(omega beta) keeps differences
        # of the fold counts ternary
        ok, violations = check_theorem3(
            [7.0], [1.6 * PI], SamplingGrid(0.0362, 120), 1.0, trials=300, seed=0
        )
        assert ok and violations == 0

    def test_theorem3_violation_past_threshold(self):
        # 1.5x the threshold: ternary property must break
        dt_max = 2.0 / (1.6 * PI * 7.0)
        ok, violations = check_theorem3(
            [7.0], [1.6 * PI], SamplingGrid(1.5 * dt_max, 120), 1.0,
            trials=300, seed=0,
        )
        assert not ok and violations > 0

    def test_folding_threshold_values(self):
        assert folding_threshold(4, 0.1) == 40
        assert folding_threshold(1, 0.1) == 10
        with pytest.raises(ValueError):
            folding_threshold(4, 0.0)
        with pytest.raises(ValueError):
            folding_threshold(4, 0.6)

    def test_uniformity_high_folding(self):
        cond, ks = check_uniformity(
            [30.0, 28.0, 26.0, 24.0], [0.7 * PI, 1.1 * PI, 1.5 * PI, 1.9 * PI],
            lam=0.5, varsigma=0.1, trials=300, seed=0,
        )
        assert cond
        assert ks < 0.02

    def test_uniformity_degenerate(self):
        # folding number far below the threshold: condition not met and the
        # folded samples are visibly non-uniform
        cond, ks = check_uniformity(
            [0.3], [PI], lam=1.0, varsigma=0.1, trials=200, seed=0
        )
        assert not cond
        assert ks > 0.1

    def test_spread_mixture_beta_bar(self):
        amps, omegas = spread_mixture(10, 1.8 * PI, 4.0)
        beta_bar = np.sum(amps * omegas) / (1.8 * PI)
        assert beta_bar == pytest.approx(4.0)
        assert np.max(omegas) == pytest.approx(1.8 * PI)


class TestSweep:
    def small_config(self, **kw):
        base = dict(
            spectrum=SpectrumSpec(
                kind="components",
                components=((0.4 * PI, 11.2), (PI, 2.0), (1.8 * PI, 0.4)),
                random_phase=True,
            ),
            delta_t=0.024,
            m_count=120,
            trials=3,
            methods=("rcs",),
            axis="snr_db",
            points=(20.0, 40.0),
        )
        base.update(kw)
        return ExperimentConfig(**base)

    def test_rows_schema(self):
        res = run_sweep(self.small_config())
        assert len(res.rows) == 2
        for row in res.rows:
            assert set(row) == {
                "axis_value",
                "method",
                "trials",
                "mean_nmse",
                "mean_rsnr_db",
                "success_rate",
            }
            assert row["trials"] == 3
            assert 0.0 <= row["success_rate"] <= 1.0

    def test_csv_schema_and_determinism(self):
        cfg = self.small_config()
        first = run_sweep(cfg).to_csv()
        second = run_sweep(self.small_config()).to_csv()
        assert first == second
        header = first.splitlines()[0]
        assert header == "axis_value,method,trials,mean_nmse,mean_rsnr_db,success_rate"
        assert len(first.splitlines()) == 3

    def test_seed_changes_results(self):
        a = run_sweep(self.small_config(snr_db=20.0)).to_csv()
        b = run_sweep(self.small_config(snr_db=20.0, seed=999)).to_csv()
        assert a != b

    def test_json_contains_config(self):
        res = run_sweep(self.small_config(trials=1))
        payload = res.to_json()
        assert '"rows"' in payload and '"config"' in payload


class TestHistogram:
    def test_bins_cover_and_normalize(self):
        vals = [1e-6, 1e-5, 1e-5, 1e-4]
        edges, counts = histogram_bins(vals)
        assert edges[0] <= -6.0 and edges[-1] >= -4.0
        widths = np.diff(edges)
        assert np.sum(counts * widths) == pytest.approx(1.0)
        assert np.all(np.isclose(widths, 0.05))
