"""Gaussian quasi log-likelihood built on the truncated variance filter.

The conditional variance is evaluated through the moving-average style
representation

    h_t = c0 + sum_{i=1}^{min(t, lag)} d_i * g_{t-i+1}
             + sum_{i=1}^{min(t-1, lag)} c_i * x_{t-i}^2

with geometrically decaying coefficients, so capping the sums at a couple of
hundred lags changes nothing at double precision for moderate persistence.
The per-observation log-likelihood is l_t = -(1/2) (log h_t + x_t^2 / h_t)
and the criterion is the per-observation average.

The analytic score differentiates exactly the filter above (kernel
derivatives for the ARCH/GARCH weights, closed-form transition derivatives
for the intercept parameters), so it matches finite differences of the
criterion to finite-difference accuracy by construction.  The Hessian is a
central finite difference of the analytic score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import InvalidParameterError, NonfiniteLikelihoodError
from .model import (
    ModelSpec,
    ParamVector,
    _phi_derivs,
    _phi_sequence,
    eta_of_gamma,
    gamma_of_eta,
    logistic_g,
    representation_coeffs,
    transition_value_and_derivs,
)
from .simulate import SeriesFrame

# Step used for numerical transition derivatives when K > 1 (no closed form).
_PATH_FD_STEP = 1e-6


@dataclass(frozen=True)
class LikelihoodConfig:
    """Evaluation settings: truncation horizon and differentiation choices."""

    truncation_lag: int = 200
    use_analytic_score: bool = True
    fd_step: float = 1e-5

    def __post_init__(self) -> None:
        if self.truncation_lag < 2:
            raise InvalidParameterError("truncation_lag must be >= 2")
        if not 0 < self.fd_step < 0.1:
            raise InvalidParameterError("fd_step must be a small positive number")

    def check_orders(self, theta: ParamVector) -> None:
        if self.truncation_lag < max(theta.p, theta.q) + 1:
            raise InvalidParameterError("truncation_lag must exceed max(p, q)")


@dataclass
class LikelihoodEval:
    """Result of one likelihood evaluation."""

    loglik: float
    per_obs: np.ndarray
    h: np.ndarray
    score: np.ndarray | None = None
    hessian: np.ndarray | None = None


def _coerce_series(series) -> SeriesFrame:
    if isinstance(series, SeriesFrame):
        return series
    return SeriesFrame.from_returns(np.asarray(series, dtype=float))


def _transition_paths(theta: ParamVector, times: np.ndarray, want_derivs: bool):
    """G_l paths and, if requested, their parameter-derivative paths.

    Closed forms cover a single location; higher orders use a central
    difference on the path (step scaled by the parameter magnitude).
    """
    g_paths = []
    deriv_paths: list[list[np.ndarray]] = []
    for tr in theta.transitions:
        if tr.k == 1:
            g, dgam, dloc = transition_value_and_derivs(
                times, tr.gamma, tr.locations[0]
            )
            g_paths.append(g)
            if want_derivs:
                deriv_paths.append([dgam, dloc])
        else:
            g_paths.append(logistic_g(times, tr))
            if want_derivs:
                derivs = []
                step = _PATH_FD_STEP * max(1.0, abs(tr.gamma))
                up = logistic_g(times, _replace_transition(tr, gamma=tr.gamma + step))
                dn = logistic_g(times, _replace_transition(tr, gamma=tr.gamma - step))
                derivs.append((up - dn) / (2.0 * step))
                for k in range(tr.k):
                    step = _PATH_FD_STEP * max(1.0, abs(tr.locations[k]))
                    up = logistic_g(times, _replace_transition(tr, loc=(k, tr.locations[k] + step)))
                    dn = logistic_g(times, _replace_transition(tr, loc=(k, tr.locations[k] - step)))
                    derivs.append((up - dn) / (2.0 * step))
                deriv_paths.append(derivs)
    return g_paths, deriv_paths


def _replace_transition(tr, gamma=None, loc=None):
    from .model import TransitionParams

    locations = list(tr.locations)
    if loc is not None:
        locations[loc[0]] = loc[1]
    return TransitionParams(
        gamma=gamma if gamma is not None else tr.gamma,
        locations=tuple(locations),
        weight=tr.weight,
    )


def _filter_and_derivs(
    theta: ParamVector,
    x2: np.ndarray,
    times: np.ndarray,
    lag: int,
    want_derivs: bool,
):
    """Evaluate the truncated filter and optionally its parameter Jacobian.

    Returns (h, derivs) where derivs is a (dim, T) array in the canonical
    flat parameter order, or None.
    """
    n = x2.shape[0]
    m = min(lag, max(n, 2))
    rep = representation_coeffs(theta, m)
    betas = np.asarray(theta.betas, dtype=float)
    alphas = np.asarray(theta.alphas, dtype=float)
    phi = _phi_sequence(betas, m)
    one_minus_beta = 1.0 - betas.sum()

    g_paths, deriv_paths = _transition_paths(theta, times, want_derivs)
    has_g = theta.n_transitions > 0
    gdyn = np.zeros(n)
    for tr, gp in zip(theta.transitions, g_paths):
        gdyn += tr.weight * gp

    signals: list[np.ndarray] = []
    kernel_list: list[np.ndarray] = []
    shifts: list[int] = []

    def add_row(signal, kernel, shift):
        signals.append(signal)
        kernel_list.append(kernel)
        shifts.append(shift)
        return len(signals) - 1

    row_c = add_row(x2, rep.c, 1)
    row_d = add_row(gdyn, rep.d, 0) if has_g else None

    deriv_rows: list[tuple[int, int, float]] = []  # (param index, row, constant)
    dim = theta.to_array().shape[0]
    if want_derivs:
        idx = 1
        for k in range(1, theta.p + 1):
            r = add_row(x2, phi[: m - k + 1], k)
            deriv_rows.append((idx, r, 0.0))
            idx += 1
        psi = _phi_derivs(betas, m) if theta.q else np.zeros((0, m))
        for j in range(1, theta.q + 1):
            const = theta.alpha0 / (one_minus_beta * one_minus_beta)
            dcdb = np.zeros(m)
            for k in range(1, theta.p + 1):
                dcdb[k - 1 :] += alphas[k - 1] * psi[j - 1, : m - k + 1]
            r = add_row(x2, dcdb, 1)
            deriv_rows.append((idx, r, const))
            if has_g:
                r2 = add_row(gdyn, psi[j - 1], 0)
                deriv_rows.append((idx, r2, 0.0))
            idx += 1
        for tr, dpaths, gp in zip(theta.transitions, deriv_paths, g_paths):
            r = add_row(gp, rep.d, 0)
            deriv_rows.append((idx, r, 0.0))  # weight
            idx += 1
            r = add_row(tr.weight * dpaths[0], rep.d, 0)
            deriv_rows.append((idx, r, 0.0))  # gamma
            idx += 1
            for k in range(tr.k):
                r = add_row(tr.weight * dpaths[1 + k], rep.d, 0)
                deriv_rows.append((idx, r, 0.0))
                idx += 1

    width = max(kern.shape[0] for kern in kernel_list)
    ker_mat = np.zeros((len(kernel_list), width))
    lengths = np.empty(len(kernel_list), dtype=np.int64)
    for i, kern in enumerate(kernel_list):
        ker_mat[i, : kern.shape[0]] = kern
        lengths[i] = kern.shape[0]
    sig_mat = np.ascontiguousarray(np.vstack(signals))
    conv = kernels.multi_conv(
        sig_mat, np.ascontiguousarray(ker_mat), lengths, np.asarray(shifts, dtype=np.int64), n
    )

    h = rep.c0 + conv[row_c]
    if row_d is not None:
        h = h + conv[row_d]

    if not want_derivs:
        return h, None
    derivs = np.zeros((dim, n))
    derivs[0, :] = 1.0 / one_minus_beta
    for idx, r, const in deriv_rows:
        derivs[idx] += conv[r]
        if const:
            derivs[idx] += const
    return h, derivs


def truncated_variance(
    theta: ParamVector,
    x2: np.ndarray,
    times: np.ndarray | None = None,
    cfg: LikelihoodConfig | None = None,
) -> np.ndarray:
    """Conditional variances from the lag-capped representation filter."""
    cfg = cfg or LikelihoodConfig()
    cfg.check_orders(theta)
    x2_arr = np.ascontiguousarray(x2, dtype=float)
    n = x2_arr.shape[0]
    if times is None:
        times_arr = np.arange(1, n + 1, dtype=float) / n
    else:
        times_arr = np.ascontiguousarray(times, dtype=float)
    h, _ = _filter_and_derivs(theta, x2_arr, times_arr, cfg.truncation_lag, False)
    return h


def _eval(theta, series, cfg, want_score):
    frame = _coerce_series(series)
    cfg.check_orders(theta)
    n = frame.n_obs
    if n < 10 * max(theta.p, theta.q):
        raise InvalidParameterError("series too short for these lag orders")
    x2 = np.ascontiguousarray(frame.x * frame.x)
    h, derivs = _filter_and_derivs(
        theta, x2, np.ascontiguousarray(frame.times), cfg.truncation_lag, want_score
    )
    if not np.all(np.isfinite(h)) or h.min() <= 0.0:
        raise NonfiniteLikelihoodError("conditional variance is not strictly positive")
    ratio = x2 / h
    per_obs = -0.5 * (np.log(h) + ratio)
    loglik = float(per_obs.mean())
    if not np.isfinite(loglik):
        raise NonfiniteLikelihoodError("log-likelihood overflowed")
    return frame, h, derivs, ratio, per_obs, loglik


def quasi_loglik(
    theta: ParamVector, series, cfg: LikelihoodConfig | None = None
) -> LikelihoodEval:
    """Average per-observation Gaussian quasi log-likelihood."""
    cfg = cfg or LikelihoodConfig()
    _, h, _, _, per_obs, loglik = _eval(theta, series, cfg, False)
    return LikelihoodEval(loglik=loglik, per_obs=per_obs, h=h)


def loglik_and_score(
    theta: ParamVector,
    series,
    cfg: LikelihoodConfig | None = None,
    slope: str = "gamma",
) -> LikelihoodEval:
    """Criterion value together with its analytic gradient.

    ``slope`` selects the parameterization of the transition-slope
    coordinates in the returned gradient: the natural slope or the bounded
    eta = gamma / (1 + gamma).
    """
    cfg = cfg or LikelihoodConfig()
    _, h, derivs, ratio, per_obs, loglik = _eval(theta, series, cfg, True)
    weights = -0.5 * (1.0 - ratio) / h
    grad = derivs @ weights / h.shape[0]
    grad = _apply_slope_chain(grad, theta, slope)
    return LikelihoodEval(loglik=loglik, per_obs=per_obs, h=h, score=grad)


def score(
    theta: ParamVector,
    series,
    cfg: LikelihoodConfig | None = None,
    slope: str = "gamma",
) -> np.ndarray:
    """Gradient of the average log-likelihood.

    Analytic by default; set ``use_analytic_score=False`` in the config to
    fall back to central finite differences of :func:`quasi_loglik`.
    """
    cfg = cfg or LikelihoodConfig()
    if cfg.use_analytic_score:
        return loglik_and_score(theta, series, cfg, slope=slope).score
    spec = theta.spec()
    vec = _reported_vector(theta, slope)
    steps = _fd_steps(vec, spec, cfg.fd_step, slope)
    grad = np.empty(vec.shape[0])
    for i in range(vec.shape[0]):
        up, dn = vec.copy(), vec.copy()
        up[i] += steps[i]
        dn[i] -= steps[i]
        f_up = quasi_loglik(_from_reported(up, spec, slope), series, cfg).loglik
        f_dn = quasi_loglik(_from_reported(dn, spec, slope), series, cfg).loglik
        grad[i] = (f_up - f_dn) / (2.0 * steps[i])
    return grad


def score_contributions(
    theta: ParamVector,
    series,
    cfg: LikelihoodConfig | None = None,
    slope: str = "gamma",
) -> np.ndarray:
    """Per-observation score vectors as a (T, dim) matrix (analytic)."""
    cfg = cfg or LikelihoodConfig()
    _, h, derivs, ratio, _, _ = _eval(theta, series, cfg, True)
    contrib = (-0.5 * (1.0 - ratio) / h) * derivs
    return _apply_slope_chain_matrix(contrib, theta, slope).T


def hessian(
    theta: ParamVector,
    series,
    cfg: LikelihoodConfig | None = None,
    slope: str = "gamma",
    symmetrize: bool = True,
) -> np.ndarray:
    """Central finite difference of the analytic score, symmetrized by default."""
    cfg = cfg or LikelihoodConfig()
    spec = theta.spec()
    vec = _reported_vector(theta, slope)
    dim = vec.shape[0]
    steps = _fd_steps(vec, spec, cfg.fd_step, slope)
    hess = np.empty((dim, dim))
    for i in range(dim):
        up, dn = vec.copy(), vec.copy()
        up[i] += steps[i]
        dn[i] -= steps[i]
        s_up = loglik_and_score(
            _from_reported(up, spec, slope), series, cfg, slope=slope
        ).score
        s_dn = loglik_and_score(
            _from_reported(dn, spec, slope), series, cfg, slope=slope
        ).score
        hess[i] = (s_up - s_dn) / (2.0 * steps[i])
    if symmetrize:
        return 0.5 * (hess + hess.T)
    return hess


def variance_and_jacobian(
    theta: ParamVector, series, cfg: LikelihoodConfig | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Fitted variances and their (dim, T) parameter Jacobian (natural slope)."""
    cfg = cfg or LikelihoodConfig()
    cfg.check_orders(theta)
    frame = _coerce_series(series)
    x2 = np.ascontiguousarray(frame.x * frame.x)
    return _filter_and_derivs(
        theta, x2, np.ascontiguousarray(frame.times), cfg.truncation_lag, True
    )


def taylor_intercept_directions(
    theta: ParamVector,
    times: np.ndarray,
    order: int,
    cfg: LikelihoodConfig | None = None,
) -> np.ndarray:
    """Sensitivities of the variance filter to polynomial intercept terms.

    Adding delta_k * (t/T)^k to the intercept moves h_t by the d-kernel
    filtered power path; these are the auxiliary regressors of the
    constancy test.  Returns an (order, T) array.
    """
    cfg = cfg or LikelihoodConfig()
    cfg.check_orders(theta)
    times_arr = np.ascontiguousarray(times, dtype=float)
    n = times_arr.shape[0]
    m = min(cfg.truncation_lag, max(n, 2))
    rep = representation_coeffs(theta, m)
    signals = np.ascontiguousarray(
        np.vstack([times_arr**k for k in range(1, order + 1)])
    )
    ker = np.ascontiguousarray(np.tile(rep.d, (order, 1)))
    lengths = np.full(order, m, dtype=np.int64)
    shifts = np.zeros(order, dtype=np.int64)
    return kernels.multi_conv(signals, ker, lengths, shifts, n)


def _slope_indices(theta: ParamVector) -> list[int]:
    idx = 1 + theta.p + theta.q
    out = []
    for tr in theta.transitions:
        out.append(idx + 1)
        idx += 2 + tr.k
    return out


def _apply_slope_chain(grad: np.ndarray, theta: ParamVector, slope: str) -> np.ndarray:
    if slope == "gamma":
        return grad
    if slope != "eta":
        raise ValueError("slope must be 'gamma' or 'eta'")
    out = grad.copy()
    for pos, tr in zip(_slope_indices(theta), theta.transitions):
        out[pos] *= (1.0 + tr.gamma) ** 2  # d gamma / d eta
    return out


def _apply_slope_chain_matrix(mat: np.ndarray, theta: ParamVector, slope: str) -> np.ndarray:
    if slope == "gamma":
        return mat
    out = mat.copy()
    for pos, tr in zip(_slope_indices(theta), theta.transitions):
        out[pos] *= (1.0 + tr.gamma) ** 2
    return out


def _reported_vector(theta: ParamVector, slope: str) -> np.ndarray:
    vec = theta.to_array()
    if slope == "eta":
        for pos, tr in zip(_slope_indices(theta), theta.transitions):
            vec[pos] = eta_of_gamma(tr.gamma)
    return vec


def _from_reported(vec: np.ndarray, spec: ModelSpec, slope: str) -> ParamVector:
    work = vec.copy()
    if slope == "eta":
        idx = 1 + spec.p + spec.q
        for k in spec.k_orders:
            work[idx + 1] = gamma_of_eta(work[idx + 1])
            idx += 2 + k
    return ParamVector.from_array(work, spec)


def _fd_steps(vec: np.ndarray, spec: ModelSpec, rel: float, slope: str) -> np.ndarray:
    """Central-difference steps that keep both perturbations feasible."""
    steps = rel * np.maximum(1.0, np.abs(vec))
    # positivity-constrained head: alpha0 strictly, alphas/betas nonneg;
    # ARCH/GARCH steps must also respect the persistence < 1 boundary
    n_head = 1 + spec.p + spec.q
    slack = 1.0 - float(vec[1:n_head].sum())
    for i in range(n_head):
        if vec[i] > 0:
            steps[i] = max(min(steps[i], 0.49 * vec[i]), 1e-12)
        if i >= 1 and slack > 0:
            steps[i] = max(min(steps[i], 0.33 * slack), 1e-12)
    idx = n_head
    for k in spec.k_orders:
        slope_val = vec[idx + 1]
        if slope == "eta":
            steps[idx + 1] = min(steps[idx + 1], 0.49 * min(slope_val, 1.0 - slope_val))
        else:
            steps[idx + 1] = min(steps[idx + 1], 0.49 * slope_val)
        for kk in range(k):
            c = vec[idx + 2 + kk]
            steps[idx + 2 + kk] = min(steps[idx + 2 + kk], max(1e-10, 0.49 * min(c, 1.0 - c)))
        idx += 2 + k
    return steps
