"""Constrained quasi maximum likelihood estimation.

The constrained parameter space is mapped to an unconstrained one:

* log for the baseline intercept;
* an additive-logistic map sending the ARCH/GARCH weights onto the open
  simplex scaled by the persistence cap (so sum < 1 always holds);
* the bounded slope eta = gamma / (1 + gamma), itself squeezed through a
  logistic into (0, eta_max];
* a cumulative logit chain for the transition locations, which keeps them
  globally strictly increasing inside (0, 1);
* identity for the transition weights.

The optimizer is BFGS on the transformed space with the analytic gradient,
with a few jittered restarts.  A slope estimate pushed against its eta_max
bound is flagged so that Monte Carlo drivers can apply a discard rule.
Standard errors come from the sandwich estimator (inverse Hessian times
outer product of scores times inverse Hessian) with a plain inverse-Hessian
variant alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sp_optimize
from scipy import stats as sp_stats

from .errors import (
    DegenerateSeriesError,
    NonfiniteLikelihoodError,
    SingularMomentMatrixError,
)
from .likelihood import (
    LikelihoodConfig,
    _coerce_series,
    hessian,
    loglik_and_score,
    quasi_loglik,
    score_contributions,
    taylor_intercept_directions,
    variance_and_jacobian,
)
from .model import (
    ModelSpec,
    ParamVector,
    TransitionParams,
    eta_of_gamma,
    gamma_of_eta,
    logistic_g,
    param_names,
    time_varying_intercept,
    transition_value_and_derivs,
)

ETA_MAX = 0.999
PERSISTENCE_CAP = 1.0 - 1e-6
# A slope is "at the bound" when eta comes within this distance of eta_max.
ETA_BOUND_TOL = 1e-4

_PENALTY_BASE = 1.0e4


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))


def _logit(p):
    return np.log(p) - np.log1p(-p)


class ParamTransform:
    """Bijection between feasible parameter vectors and unconstrained space.

    The layout of the unconstrained vector mirrors the canonical flat order.
    Strictly positive ARCH/GARCH weights are required (the additive-logistic
    map has no finite preimage for zeros).
    """

    def __init__(
        self,
        spec: ModelSpec,
        eta_max: float = ETA_MAX,
        persistence_cap: float = PERSISTENCE_CAP,
    ):
        self.spec = spec
        self.eta_max = eta_max
        self.persistence_cap = persistence_cap
        self.dim = 1 + spec.p + spec.q + sum(2 + k for k in spec.k_orders)

    def to_unconstrained(self, theta: ParamVector) -> np.ndarray:
        spec = self.spec
        cap = self.persistence_cap
        z = np.empty(self.dim)
        z[0] = math.log(theta.alpha0)
        coeffs = np.asarray(theta.alphas + theta.betas)
        if np.any(coeffs <= 0):
            raise ValueError("transform requires strictly positive ARCH/GARCH weights")
        slack = cap - coeffs.sum()
        if slack <= 0:
            raise ValueError(f"persistence must be below the cap {cap}")
        z[1 : 1 + spec.p + spec.q] = np.log(coeffs / slack)
        pos = 1 + spec.p + spec.q
        prev_t = None
        for tr in theta.transitions:
            z[pos] = tr.weight
            s = eta_of_gamma(tr.gamma) / self.eta_max
            if s >= 1.0:
                raise ValueError("slope exceeds the eta_max bound")
            z[pos + 1] = float(_logit(s))
            for k, c in enumerate(tr.locations):
                t_now = float(_logit(c))
                if prev_t is None and k == 0 and tr is theta.transitions[0]:
                    z[pos + 2 + k] = t_now
                else:
                    z[pos + 2 + k] = math.log(t_now - prev_t)
                prev_t = t_now
            pos += 2 + tr.k
        return z

    def to_natural(self, z: np.ndarray) -> ParamVector:
        spec = self.spec
        cap = self.persistence_cap
        alpha0 = math.exp(z[0])
        zc = z[1 : 1 + spec.p + spec.q]
        shift = max(0.0, float(zc.max())) if zc.size else 0.0
        expz = np.exp(zc - shift)
        denom = math.exp(-shift) + expz.sum()
        coeffs = cap * expz / denom
        alphas = tuple(coeffs[: spec.p])
        betas = tuple(coeffs[spec.p :])
        transitions = []
        pos = 1 + spec.p + spec.q
        prev_t = None
        for k_ord in spec.k_orders:
            weight = float(z[pos])
            eta = self.eta_max * float(_sigmoid(z[pos + 1]))
            gamma = gamma_of_eta(eta)
            t_vals = []
            for k in range(k_ord):
                if prev_t is None:
                    t_now = float(z[pos + 2])
                else:
                    t_now = prev_t + math.exp(z[pos + 2 + k])
                t_vals.append(t_now)
                prev_t = t_now
            locations = tuple(float(_sigmoid(t)) for t in t_vals)
            transitions.append(TransitionParams(gamma, locations, weight))
            pos += 2 + k_ord
        return ParamVector(alpha0, alphas, betas, tuple(transitions))

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """d(natural flat vector) / dz as a (dim, dim) matrix."""
        spec = self.spec
        theta = self.to_natural(z)
        jac = np.zeros((self.dim, self.dim))
        jac[0, 0] = theta.alpha0
        n_cw = spec.p + spec.q
        coeffs = np.asarray(theta.alphas + theta.betas)
        block = np.diag(coeffs) - np.outer(coeffs, coeffs) / self.persistence_cap
        jac[1 : 1 + n_cw, 1 : 1 + n_cw] = block
        pos = 1 + n_cw
        loc_cols: list[int] = []
        loc_t: list[float] = []
        for tr in theta.transitions:
            jac[pos, pos] = 1.0  # weight: identity
            eta = eta_of_gamma(tr.gamma)
            s = eta / self.eta_max
            jac[pos + 1, pos + 1] = (self.eta_max * s * (1.0 - s)) / (1.0 - eta) ** 2
            for k, c in enumerate(tr.locations):
                col = pos + 2 + k
                loc_cols.append(col)
                loc_t.append(float(_logit(c)))
                sig_prime = c * (1.0 - c)
                # c_k = sigmoid(t_k) with t_k built by cumulative increments:
                # dt_k/dz_j is 1 for the chain head, t_j - t_{j-1} afterwards
                for j, col_j in enumerate(loc_cols):
                    dt = 1.0 if j == 0 else loc_t[j] - loc_t[j - 1]
                    jac[col, col_j] = sig_prime * dt
            pos += 2 + tr.k
        return jac


@dataclass(frozen=True)
class FitOptions:
    """Optimizer and inference settings for one fit."""

    start: ParamVector | None = None
    truncation_lag: int = 200
    max_iter: int = 300
    n_restarts: int = 3
    gtol: float = 1e-7
    seed: int = 0
    compute_covariance: bool = True
    eta_max: float = ETA_MAX
    persistence_cap: float = PERSISTENCE_CAP


@dataclass
class CovarianceResult:
    cov_robust: np.ndarray
    cov_nonrobust: np.ndarray
    se_robust: np.ndarray
    se_nonrobust: np.ndarray
    unreliable: bool
    param_names: list[str]


@dataclass
class FitResult:
    """Estimates, inference and convergence metadata for one QML fit."""

    theta_hat: ParamVector
    loglik: float
    converged: bool
    eta_at_bound: bool
    iterations: int
    persistence: float
    param_names: list[str]
    estimates: dict[str, float]
    cov_robust: np.ndarray | None = None
    cov_nonrobust: np.ndarray | None = None
    se_robust: np.ndarray | None = None
    se_nonrobust: np.ndarray | None = None
    cov_unreliable: bool = False
    objective_trace: list[float] = field(default_factory=list)
    restarts_used: int = 0

    def reported_vector(self) -> np.ndarray:
        """Estimates in canonical order with eta in the slope slots."""
        return np.asarray([self.estimates[name] for name in self.param_names])

    def to_json_dict(self) -> dict:
        out = {
            "theta_hat": self.estimates,
            "param_names": self.param_names,
            "loglik": self.loglik,
            "converged": self.converged,
            "eta_at_bound": self.eta_at_bound,
            "iterations": self.iterations,
            "persistence": self.persistence,
            "cov_unreliable": self.cov_unreliable,
            "restarts_used": self.restarts_used,
        }
        for name in ("cov_robust", "cov_nonrobust", "se_robust", "se_nonrobust"):
            val = getattr(self, name)
            out[name] = None if val is None else np.asarray(val).tolist()
        return out


def _reporting_estimates(theta: ParamVector) -> tuple[list[str], dict[str, float]]:
    spec = theta.spec()
    names = param_names(spec, slope="eta")
    values = [theta.alpha0, *theta.alphas, *theta.betas]
    for tr in theta.transitions:
        values.extend([tr.weight, eta_of_gamma(tr.gamma), *tr.locations])
    estimates = {name: float(v) for name, v in zip(names, values)}
    for l, tr in enumerate(theta.transitions, start=1):
        estimates[f"gamma{l}"] = tr.gamma
    return names, estimates


def _intercept_penalty(theta: ParamVector, n_grid: int = 512):
    """Hinge on the most negative intercept value, with its natural gradient."""
    u = np.linspace(0.0, 1.0, n_grid)
    path = time_varying_intercept(theta, u)
    i_min = int(np.argmin(path))
    floor = float(path[i_min])
    if floor > 0.0:
        return 0.0, None
    u_star = u[i_min]
    grad = np.zeros(theta.to_array().shape[0])
    grad[0] = 1.0
    pos = 1 + theta.p + theta.q
    for tr in theta.transitions:
        if tr.k == 1:
            g, dgam, dloc = transition_value_and_derivs(u_star, tr.gamma, tr.locations[0])
            grad[pos] = float(g)
            grad[pos + 1] = tr.weight * float(dgam)
            grad[pos + 2] = tr.weight * float(dloc)
        else:
            grad[pos] = float(logistic_g(u_star, tr))
        pos += 2 + tr.k
    return -floor, grad  # violation >= 0, d(violation)/dtheta = -grad


def fit(series, spec: ModelSpec, options: FitOptions | None = None) -> FitResult:
    """Maximize the truncated quasi log-likelihood for the given model shape.

    Returns the best parameter point found even when the tolerance was not
    met (``converged`` reports which).  Raises
    :class:`DegenerateSeriesError` on a constant input series.
    """
    options = options or FitOptions()
    frame = _coerce_series(series)
    if frame.n_obs < 30:
        raise DegenerateSeriesError("series too short to fit")
    if float(np.var(frame.x)) <= 0.0:
        raise DegenerateSeriesError("series has zero variance")
    cfg = LikelihoodConfig(truncation_lag=options.truncation_lag)
    transform = ParamTransform(
        spec, eta_max=options.eta_max, persistence_cap=options.persistence_cap
    )
    start = options.start or auto_start(frame, spec)
    z0 = transform.to_unconstrained(start)

    trace: list[float] = []

    def objective(z):
        theta = transform.to_natural(z)
        jac = transform.jacobian(z)
        try:
            ev = loglik_and_score(theta, frame, cfg)
        except NonfiniteLikelihoodError:
            violation, vgrad = _intercept_penalty(theta)
            val = _PENALTY_BASE * (1.0 + violation)
            trace.append(-val)
            if vgrad is None:
                return val, np.zeros_like(z)
            # d(violation)/dtheta = -vgrad (vgrad is the intercept gradient)
            return val, -_PENALTY_BASE * (jac.T @ vgrad)
        trace.append(ev.loglik)
        return -ev.loglik, -(jac.T @ ev.score)

    rng = np.random.default_rng((options.seed, 16807))
    best = None
    restarts_used = 0
    total_iterations = 0
    z_init = z0
    for attempt in range(1 + options.n_restarts):
        res = sp_optimize.minimize(
            objective,
            z_init,
            jac=True,
            method="BFGS",
            options={"gtol": options.gtol, "maxiter": options.max_iter},
        )
        total_iterations += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res
        if best.fun < _PENALTY_BASE and (
            best.success or np.linalg.norm(best.jac, np.inf) < 1e-5
        ):
            break
        restarts_used += 1
        z_init = z0 + rng.normal(scale=0.1, size=z0.shape[0])

    theta_hat = transform.to_natural(best.x)
    ev = quasi_loglik(theta_hat, frame, cfg)
    converged = bool(best.success or np.linalg.norm(best.jac, np.inf) < 1e-5)
    eta_at_bound = any(
        eta_of_gamma(tr.gamma) >= options.eta_max - ETA_BOUND_TOL
        for tr in theta_hat.transitions
    )
    names, estimates = _reporting_estimates(theta_hat)
    result = FitResult(
        theta_hat=theta_hat,
        loglik=ev.loglik,
        converged=converged,
        eta_at_bound=eta_at_bound,
        iterations=total_iterations,
        persistence=theta_hat.persistence,
        param_names=names,
        estimates=estimates,
        objective_trace=trace,
        restarts_used=restarts_used,
    )
    if options.compute_covariance:
        try:
            cov = sandwich_covariance(theta_hat, frame, cfg)
            result.cov_robust = cov.cov_robust
            result.cov_nonrobust = cov.cov_nonrobust
            result.se_robust = cov.se_robust
            result.se_nonrobust = cov.se_nonrobust
            result.cov_unreliable = cov.unreliable
        except (NonfiniteLikelihoodError, ValueError, np.linalg.LinAlgError):
            result.cov_unreliable = True
    return result


def auto_start(series, spec: ModelSpec) -> ParamVector:
    """Deterministic feasible starting values scaled to the sample variance.

    The baseline intercept targets a tenth of the unconditional variance at
    the usual 0.9 persistence; transitions start with a weight matching the
    sign of the variance trend, a moderate slope (eta = 0.9) and evenly
    spread locations.
    """
    frame = _coerce_series(series)
    v = float(np.var(frame.x))
    if v <= 0.0:
        raise DegenerateSeriesError("series has zero variance")
    alpha0 = 0.1 * v * (1.0 - 0.9)
    alphas = tuple([0.1 / spec.p] * spec.p)
    betas = tuple([0.8 / spec.q] * spec.q) if spec.q else ()
    transitions = []
    if spec.n_transitions:
        half = frame.n_obs // 2
        trend = float(np.var(frame.x[half:]) - np.var(frame.x[:half]))
        sign = 1.0 if trend >= 0 else -1.0
        n_locs = sum(spec.k_orders)
        grid = iter(np.arange(1, n_locs + 1) / (n_locs + 1))
        for k_ord in spec.k_orders:
            locations = tuple(float(next(grid)) for _ in range(k_ord))
            transitions.append(
                TransitionParams(
                    gamma=gamma_of_eta(0.9),
                    locations=locations,
                    weight=sign * 0.5 * alpha0 / spec.n_transitions,
                )
            )
    return ParamVector(alpha0, alphas, betas, tuple(transitions))


def sandwich_covariance(
    theta_hat: ParamVector,
    series,
    cfg: LikelihoodConfig | None = None,
    slope: str = "eta",
) -> CovarianceResult:
    """Robust and plain covariance matrices of the estimates.

    With s_t the per-observation scores and H the mean Hessian at the
    estimate, the robust covariance is B^-1 A B^-1 / T where A is the mean
    outer product of scores and B = -H; the nonrobust one is B^-1 / T.
    A near-singular B falls back to a pseudo-inverse and sets
    ``unreliable``.
    """
    cfg = cfg or LikelihoodConfig()
    frame = _coerce_series(series)
    n = frame.n_obs
    contrib = score_contributions(theta_hat, frame, cfg, slope=slope)
    a_hat = contrib.T @ contrib / n
    b_hat = -hessian(theta_hat, frame, cfg, slope=slope)
    unreliable = False
    try:
        cond = np.linalg.cond(b_hat)
        if not np.isfinite(cond) or cond > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned Hessian")
        b_inv = np.linalg.inv(b_hat)
    except np.linalg.LinAlgError:
        b_inv = np.linalg.pinv(b_hat)
        unreliable = True
    cov_robust = b_inv @ a_hat @ b_inv / n
    cov_nonrobust = b_inv / n
    cov_robust = 0.5 * (cov_robust + cov_robust.T)
    cov_nonrobust = 0.5 * (cov_nonrobust + cov_nonrobust.T)
    names = param_names(theta_hat.spec(), slope=slope)
    se_r = np.sqrt(np.maximum(np.diag(cov_robust), 0.0))
    se_n = np.sqrt(np.maximum(np.diag(cov_nonrobust), 0.0))
    if np.any(np.diag(cov_nonrobust) < -1e-12):
        unreliable = True
    return CovarianceResult(cov_robust, cov_nonrobust, se_r, se_n, unreliable, names)


@dataclass
class LmTestResult:
    """Constancy-test statistics with their chi-squared p-values."""

    statistic: float
    robust_statistic: float
    p_value: float
    robust_p_value: float
    df: int
    null_fit: FitResult


def lm_constancy_test(
    series,
    null_spec: ModelSpec,
    taylor_order: int = 3,
    null_fit: FitResult | None = None,
    cfg: LikelihoodConfig | None = None,
    fit_options: FitOptions | None = None,
) -> LmTestResult:
    """Score test of a constant intercept against a smooth-transition drift.

    The unidentified transition under the null is replaced by a Taylor
    polynomial in rescaled time; the test augments the null score directions
    with the filtered powers (t/T)^k, k = 1..order, and forms the usual
    quadratic forms.  The plain statistic is T R^2 from regressing the
    squared standardized residuals minus one on all directions; the robust
    variant applies the outer-product correction so that only fourth-moment
    stationarity of the errors is needed.  Both are asymptotically
    chi-squared with ``taylor_order`` degrees of freedom under the null.
    """
    if taylor_order < 1:
        raise ValueError("taylor_order must be >= 1")
    cfg = cfg or LikelihoodConfig()
    frame = _coerce_series(series)
    if null_fit is None:
        null_fit = fit(frame, null_spec, fit_options or FitOptions(compute_covariance=False))
    theta0 = null_fit.theta_hat
    h, jac = variance_and_jacobian(theta0, frame, cfg)
    u_hat = frame.x * frame.x / h - 1.0
    x1 = (jac / h).T
    taylor = taylor_intercept_directions(theta0, frame.times, taylor_order, cfg)
    x2 = (taylor / h).T

    def _scaled(mat):
        rms = np.sqrt(np.mean(mat * mat, axis=0))
        rms[rms == 0] = 1.0
        return mat / rms

    x1s, x2s = _scaled(x1), _scaled(x2)
    n = frame.n_obs
    z = np.column_stack([x1s, x2s])
    if np.linalg.matrix_rank(z) < z.shape[1]:
        raise SingularMomentMatrixError("auxiliary regressors are collinear")
    coef, _, _, _ = np.linalg.lstsq(z, u_hat, rcond=None)
    resid = u_hat - z @ coef
    total = float(u_hat @ u_hat)
    if total <= 0.0:
        raise SingularMomentMatrixError("degenerate standardized residuals")
    stat = n * (1.0 - float(resid @ resid) / total)

    # Wooldridge form: residualize the extra directions, then regress a
    # constant on their score-weighted versions.
    proj, _, _, _ = np.linalg.lstsq(x1s, x2s, rcond=None)
    r = x2s - x1s @ proj
    w = u_hat[:, None] * r
    ones = np.ones(n)
    coef_w, _, rank_w, _ = np.linalg.lstsq(w, ones, rcond=None)
    if rank_w < w.shape[1]:
        raise SingularMomentMatrixError("robust moment matrix is singular")
    resid_w = ones - w @ coef_w
    robust_stat = n - float(resid_w @ resid_w)

    stat = max(stat, 0.0)
    robust_stat = max(robust_stat, 0.0)
    return LmTestResult(
        statistic=stat,
        robust_statistic=robust_stat,
        p_value=float(sp_stats.chi2.sf(stat, taylor_order)),
        robust_p_value=float(sp_stats.chi2.sf(robust_stat, taylor_order)),
        df=taylor_order,
        null_fit=null_fit,
    )
