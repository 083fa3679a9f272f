"""Transforms, the fit driver, covariance and the constancy test."""

import numpy as np
import pytest
from scipy import optimize as sp_optimize

from atvgarch.errors import DegenerateSeriesError
from atvgarch.estimate import (
    FitOptions,
    ParamTransform,
    auto_start,
    fit,
    lm_constancy_test,
    sandwich_covariance,
)
from atvgarch.likelihood import LikelihoodConfig, quasi_loglik
from atvgarch.model import (
    ModelSpec,
    ParamVector,
    TransitionParams,
    eta_of_gamma,
)
from atvgarch.simulate import SeriesFrame, SimConfig, simulate
from conftest import random_feasible_theta


class TestTransform:
    def test_round_trip_random_points(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            theta = random_feasible_theta(rng)
            # the transform needs strictly positive lag weights
            if min(theta.alphas) <= 1e-8 or (theta.betas and min(theta.betas) <= 1e-8):
                continue
            transform = ParamTransform(theta.spec())
            z = transform.to_unconstrained(theta)
            back = transform.to_natural(z)
            np.testing.assert_allclose(
                back.to_array(), theta.to_array(), rtol=1e-12, atol=1e-12
            )
            z2 = transform.to_unconstrained(back)
            np.testing.assert_allclose(z2, z, rtol=1e-10, atol=1e-10)

    def test_two_transition_ordering_preserved(self):
        spec = ModelSpec(p=1, q=1, n_transitions=2, k_orders=(1, 2))
        transform = ParamTransform(spec)
        rng = np.random.default_rng(8)
        for _ in range(100):
            z = rng.normal(scale=2.0, size=transform.dim)
            theta = transform.to_natural(z)
            locs = [c for tr in theta.transitions for c in tr.locations]
            assert all(b > a for a, b in zip(locs, locs[1:]))
            assert theta.persistence < 1.0
            assert all(tr.gamma > 0 for tr in theta.transitions)

    def test_jacobian_matches_fd(self):
        spec = ModelSpec(p=2, q=1, n_transitions=2, k_orders=(1, 1))
        transform = ParamTransform(spec)
        rng = np.random.default_rng(10)
        z = rng.normal(size=transform.dim)
        jac = transform.jacobian(z)
        step = 1e-7
        for j in range(transform.dim):
            up, dn = z.copy(), z.copy()
            up[j] += step
            dn[j] -= step
            col = (transform.to_natural(up).to_array() - transform.to_natural(dn).to_array()) / (2 * step)
            np.testing.assert_allclose(jac[:, j], col, rtol=1e-5, atol=1e-8)

    def test_eta_cap(self):
        transform = ParamTransform(ModelSpec(p=1, q=1, n_transitions=1, k_orders=(1,)))
        theta = transform.to_natural(np.array([0.0, 0.0, 1.0, 0.1, 50.0, 0.0]))
        assert eta_of_gamma(theta.transitions[0].gamma) <= 0.999


def independent_garch_fit(x2):
    """Standalone GARCH(1,1) QMLE on the same objective (bounded optimizer)."""

    def neg_loglik(params):
        a0, a1, b1 = params
        if a0 <= 0 or a1 < 0 or b1 < 0 or a1 + b1 >= 1:
            return 1e9
        n = len(x2)
        h = np.empty(n)
        h[0] = a0 / (1.0 - b1)
        for t in range(1, n):
            h[t] = a0 + a1 * x2[t - 1] + b1 * h[t - 1]
        return -float(np.mean(-0.5 * (np.log(h) + x2 / h)))

    res = sp_optimize.minimize(
        neg_loglik,
        np.array([0.05, 0.1, 0.8]),
        method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000},
    )
    return res.x


class TestFit:
    def test_plain_garch_oracle_fit(self, theta_garch, spec_garch):
        frame = simulate(SimConfig(theta=theta_garch, n_obs=3000, seed=14))
        ours = fit(frame, spec_garch, FitOptions(start=theta_garch, compute_covariance=False))
        oracle = independent_garch_fit(frame.x**2)
        np.testing.assert_allclose(
            ours.theta_hat.to_array(), oracle, rtol=0, atol=2e-4
        )

    def test_recovery_within_published_spread(self, theta_dgp2, spec_atv):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=6000, seed=2024))
        res = fit(frame, spec_atv, FitOptions(start=theta_dgp2))
        assert abs(res.estimates["alpha1"] - 0.100) < 3 * 0.012
        assert abs(res.estimates["beta1"] - 0.793) < 3 * 0.026
        assert abs(res.estimates["eta1"] - 0.948) < 3 * 0.014

    def test_degenerate_series_rejected(self, spec_garch):
        with pytest.raises(DegenerateSeriesError):
            fit(np.full(500, 0.3), spec_garch)

    def test_argmax_invariance(self, theta_dgp2, spec_atv):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=1500, seed=31))
        res = fit(frame, spec_atv, FitOptions(start=theta_dgp2, compute_covariance=False))
        again = quasi_loglik(res.theta_hat, frame).loglik
        assert res.loglik == pytest.approx(again, abs=1e-14)

    def test_monotone_best_objective_trace(self, theta_dgp2, spec_atv):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=1200, seed=32))
        res = fit(frame, spec_atv, FitOptions(start=theta_dgp2, compute_covariance=False))
        trace = np.asarray(res.objective_trace)
        assert trace.size > 0
        best = np.maximum.accumulate(trace)
        assert np.all(np.diff(best) >= 0)
        assert res.loglik == pytest.approx(best[-1], abs=1e-12)

    def test_eta_bound_flag(self, theta_dgp2, spec_atv):
        # squeezing the slope cap forces the estimate against the bound
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=2000, seed=33))
        start = ParamVector(
            0.05, (0.1,), (0.8,), (TransitionParams(0.9, (0.5,), 0.15),)
        )
        res = fit(
            frame,
            spec_atv,
            FitOptions(start=start, eta_max=0.5, compute_covariance=False),
        )
        assert res.eta_at_bound
        assert res.theta_hat.transitions[0].gamma <= 1.0

    def test_convergence_metadata(self, theta_dgp2, spec_atv):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=1500, seed=34))
        res = fit(frame, spec_atv, FitOptions(start=theta_dgp2, compute_covariance=False))
        assert res.converged
        assert res.iterations > 0
        assert res.persistence < 1.0


class TestAutoStart:
    def test_unit_variance_intercept(self, spec_garch):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(5000)
        x = x / x.std()
        start = auto_start(x, spec_garch)
        assert start.alpha0 == pytest.approx(0.01, rel=1e-6)

    def test_deterministic(self, spec_atv):
        x = np.sin(np.arange(500)) + 0.1
        a = auto_start(x, spec_atv)
        b = auto_start(x, spec_atv)
        assert a == b

    def test_feasible_with_finite_loglik_sweep(self):
        rng = np.random.default_rng(6)
        specs = [
            ModelSpec(p=1, q=1),
            ModelSpec(p=2, q=1, n_transitions=1, k_orders=(1,)),
            ModelSpec(p=1, q=1, n_transitions=2, k_orders=(1, 1)),
        ]
        for i in range(300):
            scale = 10.0 ** rng.uniform(-3, 2)
            x = rng.standard_normal(300) * scale * np.linspace(0.5, 2.0, 300)
            spec = specs[i % len(specs)]
            start = auto_start(x, spec)
            start.validate()
            ev = quasi_loglik(start, SeriesFrame.from_returns(x))
            assert np.isfinite(ev.loglik)

    def test_degenerate_input(self, spec_garch):
        with pytest.raises(DegenerateSeriesError):
            auto_start(np.zeros(100), spec_garch)


class TestSandwich:
    def test_gaussian_agreement_and_psd(self, theta_dgp2, spec_atv):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=6000, seed=41))
        res = fit(frame, spec_atv, FitOptions(start=theta_dgp2))
        assert res.cov_robust is not None
        for cov in (res.cov_robust, res.cov_nonrobust):
            np.testing.assert_allclose(cov, cov.T, atol=1e-14)
            assert np.all(np.linalg.eigvalsh(cov) > -1e-12)
        # Gaussian errors: the two standard-error sets agree within 25%
        ratio = res.se_robust / res.se_nonrobust
        assert np.all(ratio > 0.75) and np.all(ratio < 1.25)

    def test_direct_call_matches_fit(self, theta_dgp2, spec_atv):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=2000, seed=42))
        res = fit(frame, spec_atv, FitOptions(start=theta_dgp2))
        cov = sandwich_covariance(res.theta_hat, frame, LikelihoodConfig())
        np.testing.assert_allclose(cov.cov_robust, res.cov_robust, rtol=1e-10)


class TestLmConstancy:
    def test_rejects_on_drifting_intercept(self, theta_dgp2, spec_garch):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=3000, seed=51))
        res = lm_constancy_test(frame, spec_garch)
        assert res.df == 3
        assert res.p_value < 0.01
        assert res.robust_p_value < 0.01

    def test_accepts_on_plain_garch(self, theta_garch, spec_garch):
        frame = simulate(SimConfig(theta=theta_garch, n_obs=3000, seed=52))
        res = lm_constancy_test(frame, spec_garch)
        assert res.p_value > 0.05

    def test_iid_noise_degenerate_case(self, spec_garch):
        rng = np.random.default_rng(53)
        x = rng.standard_normal(2000)
        res = lm_constancy_test(x, spec_garch)
        assert np.isfinite(res.statistic)
        assert np.isfinite(res.robust_statistic)
        assert 0.0 <= res.p_value <= 1.0

    def test_second_transition_not_spurious(self, theta_dgp2):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=3000, seed=54))
        atv_spec = ModelSpec(p=1, q=1, n_transitions=1, k_orders=(1,))
        res = lm_constancy_test(frame, atv_spec)
        assert res.p_value > 0.05

    def test_reuses_supplied_null_fit(self, theta_dgp2, spec_garch):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=2000, seed=55))
        null_fit = fit(frame, spec_garch, FitOptions(compute_covariance=False))
        a = lm_constancy_test(frame, spec_garch, null_fit=null_fit)
        b = lm_constancy_test(frame, spec_garch)
        assert a.statistic == pytest.approx(b.statistic, rel=1e-8)
