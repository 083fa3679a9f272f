"""Likelihood, score and Hessian against brute-force and plain-GARCH oracles."""

import numpy as np
import pytest

from atvgarch.errors import NonfiniteLikelihoodError
from atvgarch.likelihood import (
    LikelihoodConfig,
    hessian,
    loglik_and_score,
    quasi_loglik,
    score,
    score_contributions,
    truncated_variance,
    variance_and_jacobian,
)
from atvgarch.model import (
    ParamVector,
    TransitionParams,
    gamma_of_eta,
    eta_of_gamma,
    logistic_g,
    representation_coeffs,
    time_varying_intercept,
    variance_recursion,
)
from atvgarch.simulate import SeriesFrame, SimConfig, simulate
from conftest import random_feasible_theta


def brute_force_truncated_variance(theta, x2, times, lag):
    """Literal double-sum evaluation of the truncated filter (test oracle)."""
    n = len(x2)
    rep = representation_coeffs(theta, min(lag, n + 1))
    g = time_varying_intercept(theta, times) - theta.alpha0
    h = np.empty(n)
    for t in range(1, n + 1):
        acc = rep.c0
        for i in range(1, min(t, lag) + 1):
            acc += rep.d[i - 1] * g[t - i]
        for i in range(1, min(t - 1, lag) + 1):
            acc += rep.c[i - 1] * x2[t - i - 1]
        h[t - 1] = acc
    return h


class TestTruncatedVariance:
    def test_first_value_has_no_data_terms(self, theta_dgp2):
        x2 = np.abs(np.random.default_rng(0).normal(size=50)) ** 2
        times = np.arange(1, 51) / 50.0
        h = truncated_variance(theta_dgp2, x2, times)
        rep = representation_coeffs(theta_dgp2, 10)
        g1 = 0.15 * logistic_g(times[0], theta_dgp2.transitions[0])
        assert h[0] == pytest.approx(rep.c0 + rep.d[0] * g1, rel=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            theta = random_feasible_theta(rng)
            frame = simulate(SimConfig(theta=theta, n_obs=300, seed=int(rng.integers(1e6))))
            lag = int(rng.integers(10, 120))
            ours = truncated_variance(
                theta, frame.x**2, frame.times, LikelihoodConfig(truncation_lag=lag)
            )
            oracle = brute_force_truncated_variance(theta, frame.x**2, frame.times, lag)
            np.testing.assert_allclose(ours, oracle, rtol=1e-12, atol=1e-14)

    def test_truncation_insensitivity(self, theta_dgp2):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=2000, seed=2))
        l200 = quasi_loglik(theta_dgp2, frame, LikelihoodConfig(truncation_lag=200))
        l400 = quasi_loglik(theta_dgp2, frame, LikelihoodConfig(truncation_lag=400))
        assert abs(l200.loglik - l400.loglik) < 1e-10

    def test_equals_recursion_with_representation_init(self, theta_dgp2):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=1200, seed=5))
        x2 = frame.x**2
        rep = representation_coeffs(theta_dgp2, 5)
        g1 = 0.15 * logistic_g(frame.times[0], theta_dgp2.transitions[0])
        hrec = variance_recursion(
            theta_dgp2, x2, h_init=[rep.c0 + rep.d[0] * g1], times=frame.times
        )
        hbar = truncated_variance(theta_dgp2, x2, frame.times)
        assert np.max(np.abs(hbar[100:] - hrec[100:])) < 1e-10


class TestQuasiLoglik:
    def test_zero_data_constant_loglik(self, theta_garch):
        frame = SeriesFrame.from_returns(np.zeros(50))
        ev = quasi_loglik(theta_garch, frame)
        c0 = 0.05 / 0.2
        assert np.allclose(ev.per_obs, -0.5 * np.log(c0))

    def test_perfect_fit_identity(self):
        # constant squared returns make h converge to that constant when the
        # parameters put the long-run variance there: l_t -> -(log v + 1)/2
        v = 0.7
        theta = ParamVector(v * 0.15, (0.05,), (0.8,))
        frame = SeriesFrame.from_returns(np.full(800, np.sqrt(v)))
        ev = quasi_loglik(theta, frame)
        assert ev.h[-1] == pytest.approx(v, rel=1e-10)
        assert ev.per_obs[-1] == pytest.approx(-0.5 * (np.log(v) + 1.0), rel=1e-10)

    def test_true_model_beats_flattened(self, theta_dgp2):
        flat = ParamVector(0.05, (0.1,), (0.8,),
                           (TransitionParams(18.0, (0.5,), 0.0),))
        wins = 0
        for seed in range(200):
            frame = simulate(SimConfig(theta=theta_dgp2, n_obs=2000, seed=seed))
            a = quasi_loglik(theta_dgp2, frame).loglik
            b = quasi_loglik(flat, frame).loglik
            wins += a > b
        assert wins >= 190

    def test_nonfinite_error_on_bad_intercept(self, theta_dgp2):
        bad = ParamVector(
            0.05, (0.1,), (0.8,), (TransitionParams(18.0, (0.5,), -0.2),)
        )
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=500, seed=1))
        with pytest.raises(NonfiniteLikelihoodError):
            quasi_loglik(bad, frame)

    def test_eta_reparameterization_invariance(self, theta_dgp2):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=800, seed=3))
        gamma = theta_dgp2.transitions[0].gamma
        rebuilt = ParamVector(
            theta_dgp2.alpha0,
            theta_dgp2.alphas,
            theta_dgp2.betas,
            (TransitionParams(gamma_of_eta(eta_of_gamma(gamma)), (0.5,), 0.15),),
        )
        a = quasi_loglik(theta_dgp2, frame).loglik
        b = quasi_loglik(rebuilt, frame).loglik
        assert a == pytest.approx(b, abs=1e-14)


def fd_score(theta, frame, cfg):
    return score(
        theta,
        frame,
        LikelihoodConfig(
            truncation_lag=cfg.truncation_lag, use_analytic_score=False, fd_step=1e-6
        ),
    )


class TestScore:
    def test_analytic_matches_fd_random_points(self):
        rng = np.random.default_rng(44)
        cfg = LikelihoodConfig()
        for _ in range(5):
            theta = random_feasible_theta(rng)
            frame = simulate(SimConfig(theta=theta, n_obs=1200, seed=int(rng.integers(1e6))))
            analytic = score(theta, frame, cfg)
            numeric = fd_score(theta, frame, cfg)
            scale = np.maximum(np.abs(numeric), 1e-3)
            assert np.max(np.abs(analytic - numeric) / scale) < 1e-5

    def test_mean_score_zero_at_truth(self, theta_dgp2):
        comps = []
        for seed in range(500):
            frame = simulate(SimConfig(theta=theta_dgp2, n_obs=2000, seed=(91, seed)))
            comps.append(score(theta_dgp2, frame))
        comps = np.asarray(comps)
        mean = comps.mean(axis=0)
        se = comps.std(axis=0, ddof=1) / np.sqrt(comps.shape[0])
        assert np.all(np.abs(mean) <= 3.0 * se)

    def test_transition_weight_direction_inactive_early(self, theta_dgp2):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=2000, seed=7))
        h, jac = variance_and_jacobian(theta_dgp2, frame)
        w_idx = 3  # canonical order: alpha0, alpha1, beta1, weight, gamma, c
        assert np.max(np.abs(jac[w_idx, :40])) < 0.01
        assert np.max(np.abs(jac[w_idx, -200:])) > 1.0

    def test_linearity_of_contributions(self, theta_dgp2):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=900, seed=13))
        contrib = score_contributions(theta_dgp2, frame)
        total = score(theta_dgp2, frame)
        np.testing.assert_allclose(contrib.mean(axis=0), total, rtol=1e-12, atol=1e-15)


class TestHessian:
    def test_symmetry_before_symmetrization(self, theta_dgp2):
        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=1500, seed=21))
        raw = hessian(theta_dgp2, frame, symmetrize=False)
        scale = np.max(np.abs(raw))
        assert np.max(np.abs(raw - raw.T)) < 1e-6 * scale

    def test_negative_definite_at_optimum(self, theta_dgp2, spec_atv):
        from atvgarch.estimate import FitOptions, fit

        frame = simulate(SimConfig(theta=theta_dgp2, n_obs=2000, seed=22))
        res = fit(frame, spec_atv, FitOptions(start=theta_dgp2, compute_covariance=False))
        h = hessian(res.theta_hat, frame)
        eigs = np.linalg.eigvalsh(h)
        assert np.all(eigs < 0)


def independent_garch_loglik(params, x2):
    """Standalone GARCH(1,1) quasi log-likelihood (oracle, own recursion)."""
    a0, a1, b1 = params
    n = len(x2)
    h = np.empty(n)
    h[0] = a0 / (1.0 - b1)
    for t in range(1, n):
        h[t] = a0 + a1 * x2[t - 1] + b1 * h[t - 1]
    return float(np.mean(-0.5 * (np.log(h) + x2 / h))), h


class TestPlainGarchOracle:
    def test_loglik_score_hessian_agree(self):
        rng = np.random.default_rng(55)
        for _ in range(10):
            theta = random_feasible_theta(rng, p=1, q=1, n_transitions=0)
            frame = simulate(SimConfig(theta=theta, n_obs=900, seed=int(rng.integers(1e6))))
            x2 = frame.x**2
            ours = quasi_loglik(theta, frame)
            params = np.array([theta.alpha0, theta.alphas[0], theta.betas[0]])
            oracle_ll, oracle_h = independent_garch_loglik(params, x2)
            assert ours.loglik == pytest.approx(oracle_ll, rel=1e-9)
            np.testing.assert_allclose(ours.h[5:], oracle_h[5:], rtol=1e-9)

            step = 1e-6
            fd = np.empty(3)
            for i in range(3):
                up, dn = params.copy(), params.copy()
                up[i] += step
                dn[i] -= step
                fd[i] = (
                    independent_garch_loglik(up, x2)[0]
                    - independent_garch_loglik(dn, x2)[0]
                ) / (2 * step)
            ours_score = score(theta, frame)
            np.testing.assert_allclose(ours_score, fd, rtol=1e-4, atol=1e-7)

    def test_hessian_matches_oracle_fd(self):
        rng = np.random.default_rng(77)
        theta = random_feasible_theta(rng, p=1, q=1, n_transitions=0)
        frame = simulate(SimConfig(theta=theta, n_obs=1200, seed=4))
        x2 = frame.x**2
        params = np.array([theta.alpha0, theta.alphas[0], theta.betas[0]])
        step = 1e-4
        oracle = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                pp = params.copy(); pp[i] += step; pp[j] += step
                pm = params.copy(); pm[i] += step; pm[j] -= step
                mp = params.copy(); mp[i] -= step; mp[j] += step
                mm = params.copy(); mm[i] -= step; mm[j] -= step
                oracle[i, j] = (
                    independent_garch_loglik(pp, x2)[0]
                    - independent_garch_loglik(pm, x2)[0]
                    - independent_garch_loglik(mp, x2)[0]
                    + independent_garch_loglik(mm, x2)[0]
                ) / (4 * step * step)
        ours = hessian(theta, frame)
        scale = np.max(np.abs(oracle))
        assert np.max(np.abs(ours - oracle)) < 1e-4 * scale
