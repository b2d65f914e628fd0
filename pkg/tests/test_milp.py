import math

import numpy as np
import pytest

from modlse.adc import AdcConfig, NoiseConfig, capture
from modlse.core import (
    FrequencyGrid,
    SamplingGrid,
    apply_difference,
    build_dictionary,
)
from modlse.engine import solve_mip
from modlse.milp import (
    build_full_integer_reference,
    build_milp,
    choose_epsilon_prime,
    max_sampling_interval_milp,
    realify,
    recover_milp,
    unwrap_heuristic,
)

PI = math.pi


class TestRealify:
    def test_block_structure(self):
        rng = np.random.default_rng(0)
        at = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        zt = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        lift = realify(at, zt)
        assert lift.a_check.shape == (10, 6)
        assert lift.z_check.shape == (10,)
        assert (lift.p, lift.n) == (3, 5)
        np.testing.assert_allclose(lift.a_check[:5, :3], at.real, atol=1e-15)
        np.testing.assert_allclose(lift.a_check[:5, 3:], -at.imag, atol=1e-15)
        np.testing.assert_allclose(lift.a_check[5:, :3], at.imag, atol=1e-15)
        np.testing.assert_allclose(lift.a_check[5:, 3:], at.real, atol=1e-15)

    def test_lifting_reproduces_complex_product(self):
        rng = np.random.default_rng(1)
        at = rng.standard_normal((7, 4)) + 1j * rng.standard_normal((7, 4))
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        lift = realify(at, at @ x)
        xc = np.concatenate([x.real, x.imag])
        np.testing.assert_allclose(lift.a_check @ xc, lift.z_check, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            realify(np.ones((3, 2), complex), np.ones(4, complex))


class TestThresholds:
    def test_epsilon_prime_rule(self):
        assert choose_epsilon_prime(0.0, 100) == pytest.approx(1e-6)
        assert choose_epsilon_prime(0.5, 100) == pytest.approx(2.0)
        with pytest.raises(ValueError):
            choose_epsilon_prime(-1.0, 10)

    def test_max_interval_value(self):
        # 2*lam / (omega * beta_bar) at the reference configuration
        assert max_sampling_interval_milp(1.8 * PI, 4.0, 1.0) == pytest.approx(
            0.0884194, abs=1e-6
        )
        assert max_sampling_interval_milp(1.8 * PI, 4.0, 2.0) == pytest.approx(
            2 * 0.0884194, abs=1e-5
        )


class TestBuildMilp:
    def test_dimensions(self):
        rng = np.random.default_rng(2)
        # M=3 samples -> n=2 difference rows; P=1
        at = rng.standard_normal((2, 1)) + 1j * rng.standard_normal((2, 1))
        zt = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        prob = build_milp(realify(at, zt), 1.0, 1e-3)
        nvar = 2 * 2 * 1 + 2 * 2  # xi+zeta (4) + e_check (4)
        assert prob.lp.a.shape == (8, nvar)
        assert prob.lp.relations == ("<=",) * 8
        assert prob.integer_indices == (4, 5, 6, 7)
        # costs: ones on xi/zeta, zeros on e
        np.testing.assert_array_equal(prob.lp.c, [1, 1, 1, 1, 0, 0, 0, 0])
        # e bounds are ternary, xi/zeta nonnegative
        np.testing.assert_array_equal(prob.lp.lo, [0, 0, 0, 0, -1, -1, -1, -1])
        assert np.all(np.isinf(prob.lp.hi[:4]))
        np.testing.assert_array_equal(prob.lp.hi[4:], [1, 1, 1, 1])

    def test_row_pair_encodes_absolute_residual(self):
        rng = np.random.default_rng(3)
        at = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        zt = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        lift = realify(at, zt)
        eps = 0.01
        prob = build_milp(lift, 1.0, eps)
        x = rng.standard_normal(prob.lp.a.shape[1])
        lhs = prob.lp.a @ x
        twop = 4
        resid = lift.z_check - lift.a_check @ (x[:twop] - x[twop : 2 * twop]) - (
            2.0 * x[2 * twop :]
        )
        for i in range(6):
            assert lhs[2 * i] - prob.lp.b[2 * i] == pytest.approx(resid[i] - eps)
            assert lhs[2 * i + 1] - prob.lp.b[2 * i + 1] == pytest.approx(
                -resid[i] - eps
            )

    def test_rejects_bad_epsilon(self):
        lift = realify(np.ones((2, 1), complex), np.ones(2, complex))
        with pytest.raises(ValueError):
            build_milp(lift, 1.0, 0.0)


class TestUnwrapHeuristic:
    def test_noiseless_single_tone(self):
        sg = SamplingGrid(0.024, 200)
        fg = FrequencyGrid.uniform(0.0, 0.1 * PI, 20)
        dic = build_dictionary(fg, sg)
        alpha = np.zeros(20, complex)
        alpha[10] = 5.0 * np.exp(0.3j)
        y = dic.matrix @ alpha
        cap = capture(y, AdcConfig(lam=1.0), NoiseConfig(math.inf))
        at = apply_difference(dic.matrix, 1)
        zt = apply_difference(cap.z, 1)
        a_h, e_h = unwrap_heuristic(at, zt, 1.0, 0.0)
        np.testing.assert_allclose(a_h, alpha, atol=1e-8)
        # the recovered fold pattern explains the measurements exactly
        np.testing.assert_allclose(zt - 2.0 * e_h, at @ a_h, atol=1e-8)
        re = np.concatenate([e_h.real, e_h.imag])
        assert set(np.unique(re)).issubset({-1.0, 0.0, 1.0})


class TestRecoverMilp:
    def make_capture(self, dt, m, amp_idx, amps, lam=1.0, snr=math.inf, seed=0):
        sg = SamplingGrid(dt, m)
        fg = FrequencyGrid.uniform(0.0, 0.1 * PI, 20)
        dic = build_dictionary(fg, sg)
        rng = np.random.default_rng(seed)
        alpha = np.zeros(20, complex)
        alpha[list(amp_idx)] = np.array(amps) * np.exp(
            1j * rng.uniform(0, 2 * PI, len(amps))
        )
        y = dic.matrix @ alpha
        cap = capture(y, AdcConfig(lam=lam), NoiseConfig(snr, seed))
        return cap, dic, alpha

    def test_noiseless_single_tone_exact(self):
        cap, dic, alpha = self.make_capture(0.024, 120, (10,), [5.0])
        res = recover_milp(cap, dic)
        np.testing.assert_allclose(res.alpha_hat, alpha, atol=1e-6)

    def test_noiseless_k3_exact(self):
        cap, dic, alpha = self.make_capture(0.024, 400, (4, 10, 18), [11.2, 2.0, 0.4])
        res = recover_milp(cap, dic)
        np.testing.assert_allclose(res.alpha_hat, alpha, atol=1e-6)

    def test_noisy_k3(self):
        cap, dic, alpha = self.make_capture(
            0.024, 400, (4, 10, 18), [11.2, 2.0, 0.4], snr=30.0, seed=5
        )
        res = recover_milp(cap, dic)
        nm = np.sum(np.abs(res.alpha_hat - alpha) ** 2) / np.sum(np.abs(alpha) ** 2)
        assert nm < 1e-2

    def test_solution_satisfies_instance(self):
        cap, dic, _ = self.make_capture(
            0.024, 60, (4, 18), [3.0, 1.0], snr=40.0, seed=1
        )
        res = recover_milp(cap, dic)
        # rebuild the instance and check the reported incumbent is feasible
        zt = apply_difference(cap.z, 1)
        at = apply_difference(dic.matrix, 1)
        lift = realify(at, zt)
        eps = res.diagnostics["epsilon_prime"]
        resid = lift.z_check - lift.a_check @ np.concatenate(
            [res.alpha_hat.real, res.alpha_hat.imag]
        )
        e_best = np.clip(np.round(resid / 2.0), -1, 1)
        assert np.max(np.abs(resid - 2.0 * e_best)) <= eps + 1e-9

    def test_ternary_limit_warning(self):
        cap, dic, _ = self.make_capture(0.1, 60, (18,), [4.0])
        with pytest.warns(UserWarning, match="ternary-validity"):
            recover_milp(cap, dic, beta_bar=4.0, omega_max=1.8 * PI)

    def test_complementarity_of_split_variables(self):
        # xi and zeta never both positive in a cost-minimal solution
        cap, dic, _ = self.make_capture(0.024, 60, (4,), [2.0])
        res = recover_milp(cap, dic)
        assert res.diagnostics["solver_status"] in (
            "optimal",
            "node-limit",
            "no-incumbent",
        )


class TestFullIntegerReference:
    def test_tiny_instance_matches_ternary_path(self):
        # M=6 samples, single tone small enough that both formulations
        # recover the same coefficients
        sg = SamplingGrid(0.05, 6)
        fg = FrequencyGrid.uniform(0.2 * PI, 0.4 * PI, 3)
        dic = build_dictionary(fg, sg)
        alpha = np.zeros(3, complex)
        alpha[1] = 1.4
        y = dic.matrix @ alpha
        cap = capture(y, AdcConfig(lam=1.0), NoiseConfig(math.inf))

        prob = build_full_integer_reference(
            dic.matrix, cap.z, 1.0, 1e-6, b_bound=1.4
        )
        sol = solve_mip(prob, node_limit=20000)
        assert sol.status == "optimal"
        twop = 2 * 3
        a_check = sol.x[:twop] - sol.x[twop : 2 * twop]
        a_hat = a_check[:3] + 1j * a_check[3:]
        res = recover_milp(cap, dic)
        # the eps' box is amplified by the conditioning of the 6x3 system
        np.testing.assert_allclose(a_hat, alpha, atol=1e-3)
        np.testing.assert_allclose(res.alpha_hat, alpha, atol=1e-3)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            build_full_integer_reference(
                np.ones((13, 2), complex), np.ones(13, complex), 1.0, 1e-6, 2.0
            )
