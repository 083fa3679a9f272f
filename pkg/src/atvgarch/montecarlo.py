"""Replication harness: simulate, fit, discard-and-redraw, aggregate.

The three registered data-generating processes share the GARCH weights
(alpha0 = 0.05, alpha1 = 0.1, beta1 = 0.8) and transition weight 0.15 at
location 0.5, and differ in the transition speed: slow (gamma = 12),
medium (gamma = 18) and rapid (gamma = 46).  Replications whose slope
estimate runs into the eta bound are discarded and replaced by fresh
draws; the discard share is reported.

Each replication owns an RNG stream derived from (master seed, replication
index, attempt), so results are reproducible bit for bit and independent of
any parallel scheduling.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ExcessiveDiscardsError, InvalidParameterError
from .estimate import FitOptions, fit
from .model import ErrorDist, ModelSpec, ParamVector, TransitionParams, eta_of_gamma, param_names
from .simulate import DEFAULT_BURN_IN, SimConfig, simulate

# Attempts allowed per replication slot before giving up on the DGP.
_MAX_ATTEMPTS = 50


@dataclass(frozen=True)
class DgpSpec:
    """A named data-generating process and the size of its study."""

    name: str
    theta_true: ParamVector
    n_obs: int
    reps: int
    seed: int = 0
    burn_in: int = DEFAULT_BURN_IN
    error_dist: ErrorDist = field(default_factory=ErrorDist.gaussian)

    @property
    def model_spec(self) -> ModelSpec:
        return self.theta_true.spec(self.error_dist)


_DGP_GAMMAS = {"DGP1": 12.0, "DGP2": 18.0, "DGP3": 46.0}


def dgp_theta(gamma: float) -> ParamVector:
    """Standard study parameters with the given transition speed."""
    return ParamVector(
        alpha0=0.05,
        alphas=(0.1,),
        betas=(0.8,),
        transitions=(TransitionParams(gamma=gamma, locations=(0.5,), weight=0.15),),
    )


def make_dgp(name: str, n_obs: int, reps: int, seed: int = 0) -> DgpSpec:
    """Look up a registered DGP (DGP1, DGP2 or DGP3)."""
    key = name.upper()
    if key not in _DGP_GAMMAS:
        raise InvalidParameterError(f"unknown DGP {name!r}; use DGP1, DGP2 or DGP3")
    return DgpSpec(name=key, theta_true=dgp_theta(_DGP_GAMMAS[key]), n_obs=n_obs, reps=reps, seed=seed)


@dataclass
class McSummary:
    """Aggregated Monte Carlo results."""

    means: dict[str, float]
    sds: dict[str, float]
    discard_rate: float
    reps_used: int
    runtime_seconds: float


@dataclass
class McResult:
    summary: McSummary
    columns: list[str]
    raw: np.ndarray  # (reps, dim) estimates, eta in the slope slots
    logliks: np.ndarray
    converged: np.ndarray
    gamma_stuck: np.ndarray
    attempts: np.ndarray
    se_robust: np.ndarray | None = None

    def true_vector(self, dgp: DgpSpec) -> np.ndarray:
        theta = dgp.theta_true
        vals = [theta.alpha0, *theta.alphas, *theta.betas]
        for tr in theta.transitions:
            vals.extend([tr.weight, eta_of_gamma(tr.gamma), *tr.locations])
        return np.asarray(vals)


def _rep_worker(args):
    dgp, fit_options, with_covariance, rep = args
    attempt = 0
    n_discards = 0
    while True:
        cfg = SimConfig(
            theta=dgp.theta_true,
            n_obs=dgp.n_obs,
            burn_in=dgp.burn_in,
            seed=(dgp.seed, rep, attempt),
            error_dist=dgp.error_dist,
        )
        frame = simulate(cfg)
        res = fit(frame, dgp.model_spec, fit_options)
        if not res.eta_at_bound:
            break
        n_discards += 1
        attempt += 1
        if attempt >= _MAX_ATTEMPTS:
            raise ExcessiveDiscardsError(
                f"replication {rep} exceeded {_MAX_ATTEMPTS} redraw attempts"
            )
    row = res.reported_vector()
    gamma_start = fit_options.start.transitions[0].gamma if fit_options.start and fit_options.start.transitions else None
    stuck = False
    if gamma_start is not None:
        stuck = abs(res.theta_hat.transitions[0].gamma - gamma_start) < 1e-8
    se_row = res.se_robust if with_covariance else None
    return rep, row, res.loglik, res.converged, stuck, n_discards, attempt, se_row


def run_mc(
    dgp: DgpSpec,
    fit_options: FitOptions | None = None,
    with_covariance: bool = False,
    n_jobs: int = 1,
) -> McResult:
    """Run the replication study for one DGP.

    Starting values default to the true parameters.  Raises
    :class:`ExcessiveDiscardsError` when more than half of all draws hit the
    slope bound.
    """
    t0 = time.time()
    if fit_options is None:
        fit_options = FitOptions(start=dgp.theta_true, compute_covariance=with_covariance)
    elif fit_options.start is None:
        fit_options = replace(fit_options, start=dgp.theta_true)
    if with_covariance and not fit_options.compute_covariance:
        fit_options = replace(fit_options, compute_covariance=True)

    names = param_names(dgp.model_spec, slope="eta")
    dim = len(names)
    raw = np.empty((dgp.reps, dim))
    logliks = np.empty(dgp.reps)
    converged = np.empty(dgp.reps, dtype=bool)
    stuck = np.empty(dgp.reps, dtype=bool)
    attempts = np.empty(dgp.reps, dtype=np.int64)
    se_rows = np.full((dgp.reps, dim), np.nan) if with_covariance else None

    jobs = [(dgp, fit_options, with_covariance, rep) for rep in range(dgp.reps)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_rep_worker, jobs, chunksize=8))
    else:
        results = [_rep_worker(job) for job in jobs]

    total_discards = 0
    for rep, row, ll, conv, is_stuck, n_disc, n_att, se_row in sorted(results):
        raw[rep] = row
        logliks[rep] = ll
        converged[rep] = conv
        stuck[rep] = is_stuck
        attempts[rep] = n_att
        total_discards += n_disc
        if se_rows is not None and se_row is not None:
            se_rows[rep] = se_row

    discard_rate = total_discards / (total_discards + dgp.reps)
    if discard_rate > 0.5:
        raise ExcessiveDiscardsError(
            f"{discard_rate:.1%} of draws hit the slope bound; check the DGP"
        )
    summary = McSummary(
        means={n: float(raw[:, i].mean()) for i, n in enumerate(names)},
        sds={n: float(raw[:, i].std(ddof=1)) for i, n in enumerate(names)},
        discard_rate=float(discard_rate),
        reps_used=dgp.reps,
        runtime_seconds=time.time() - t0,
    )
    return McResult(
        summary=summary,
        columns=names,
        raw=raw,
        logliks=logliks,
        converged=converged,
        gamma_stuck=stuck,
        attempts=attempts,
        se_robust=se_rows,
    )


@dataclass
class StandardizedEstimates:
    columns: list[str]
    values: np.ndarray  # (reps, dim), mean 0 / sd 1 per column
    skewness: dict[str, float]
    excess_kurtosis: dict[str, float]


def standardized_estimates(result: McResult) -> StandardizedEstimates:
    """Center and scale each estimate column; report normality screens.

    Standardization uses the Monte Carlo sample mean and standard deviation.
    A zero-variance column is an error.
    """
    raw = result.raw
    if raw.shape[0] < 2:
        raise InvalidParameterError("need at least two replications")
    mean = raw.mean(axis=0)
    sd = raw.std(axis=0, ddof=1)
    if np.any(sd == 0.0):
        bad = [c for c, s in zip(result.columns, sd) if s == 0.0]
        raise InvalidParameterError(f"zero-variance columns: {bad}")
    z = (raw - mean) / sd
    n = z.shape[0]
    m3 = (z**3).mean(axis=0)
    m4 = (z**4).mean(axis=0)
    skew = {c: float(v) for c, v in zip(result.columns, m3)}
    exk = {c: float(v - 3.0) for c, v in zip(result.columns, m4)}
    return StandardizedEstimates(
        columns=list(result.columns), values=z, skewness=skew, excess_kurtosis=exk
    )
