"""Sample-path generation for the time-varying-intercept GARCH process.

Paths are triangular arrays in rescaled time: a draw of length T carries the
time axis t/T, and the intercept evolves along it.  During burn-in the
intercept is held at its left-endpoint value (u = 0), which matches the
stationary approximation there.  The stationary approximation at any fixed u
is the standard GARCH process with the intercept frozen at alpha0 + g(u); it
is generated from the same innovation stream as the evolving path under the
same seed, so the two are coupled draw by draw.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ExplosiveConfigError, InvalidParameterError
from .model import (
    ErrorDist,
    ModelSpec,
    ParamVector,
    time_varying_intercept,
)

DEFAULT_BURN_IN = 500


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one simulated path."""

    theta: ParamVector
    n_obs: int
    burn_in: int = DEFAULT_BURN_IN
    seed: int | tuple[int, ...] = 0
    error_dist: ErrorDist = field(default_factory=ErrorDist.gaussian)
    spec: ModelSpec | None = None

    def __post_init__(self) -> None:
        if self.n_obs < 1:
            raise InvalidParameterError("n_obs must be >= 1")
        if self.burn_in < 0:
            raise InvalidParameterError("burn_in must be >= 0")
        if self.spec is not None:
            if (
                self.spec.p != self.theta.p
                or self.spec.q != self.theta.q
                or self.spec.n_transitions != self.theta.n_transitions
            ):
                raise InvalidParameterError("spec shape does not match theta")


@dataclass(frozen=True)
class SeriesFrame:
    """A simulated or observed return series on its rescaled-time axis."""

    x: np.ndarray
    times: np.ndarray
    h_true: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.x.shape != self.times.shape:
            raise InvalidParameterError("x and times must have equal length")
        if self.h_true is not None:
            if self.h_true.shape != self.x.shape:
                raise InvalidParameterError("h_true must align with x")
            if np.any(self.h_true <= 0):
                raise InvalidParameterError("h_true must be strictly positive")

    @property
    def n_obs(self) -> int:
        return int(self.x.shape[0])

    @classmethod
    def from_returns(cls, x: np.ndarray) -> "SeriesFrame":
        x_arr = np.ascontiguousarray(x, dtype=float)
        n = x_arr.shape[0]
        times = np.arange(1, n + 1, dtype=float) / n
        return cls(x=x_arr, times=times)

    def to_csv(self, path) -> None:
        """Write columns t, time, x (and h_true when present) losslessly."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t", "time", "x"]
            if self.h_true is not None:
                header.append("h_true")
            writer.writerow(header)
            for t in range(self.n_obs):
                row = [str(t + 1), repr(float(self.times[t])), repr(float(self.x[t]))]
                if self.h_true is not None:
                    row.append(repr(float(self.h_true[t])))
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "SeriesFrame":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            cols = {name: idx for idx, name in enumerate(header)}
            for required in ("time", "x"):
                if required not in cols:
                    raise InvalidParameterError(f"missing column {required!r}")
            times, xs, hs = [], [], []
            has_h = "h_true" in cols
            for row in reader:
                times.append(float(row[cols["time"]]))
                xs.append(float(row[cols["x"]]))
                if has_h:
                    hs.append(float(row[cols["h_true"]]))
        return cls(
            x=np.asarray(xs),
            times=np.asarray(times),
            h_true=np.asarray(hs) if has_h else None,
        )


def _draw_innovations(cfg: SimConfig, n: int) -> np.ndarray:
    rng = np.random.default_rng(cfg.seed)
    dist = cfg.error_dist
    if dist.kind == "gaussian":
        return rng.standard_normal(n)
    scale = np.sqrt((dist.dof - 2.0) / dist.dof)
    return rng.standard_t(dist.dof, size=n) * scale


def _check_stable(theta: ParamVector) -> None:
    if theta.persistence >= 1.0:
        raise ExplosiveConfigError("sum of ARCH and GARCH weights must be < 1")
    theta.validate()


def _run_path(cfg: SimConfig, icpt_sample: np.ndarray, icpt_frozen: float):
    """Shared driver: seed block + burn-in at the frozen intercept, then sample."""
    from ._backend import kernels

    theta = cfg.theta
    m = max(theta.p, theta.q, 1)
    total = m + cfg.burn_in + cfg.n_obs
    eps = _draw_innovations(cfg, total)
    icpt = np.empty(total)
    icpt[: m + cfg.burn_in] = icpt_frozen
    icpt[m + cfg.burn_in :] = icpt_sample
    v0 = icpt_frozen / (1.0 - theta.persistence)
    alphas = np.asarray(theta.alphas, dtype=float)
    betas = np.asarray(theta.betas, dtype=float)
    x, h = kernels.sim_recursion(np.ascontiguousarray(eps), icpt, alphas, betas, v0)
    return x[m + cfg.burn_in :].copy(), h[m + cfg.burn_in :].copy()


def simulate(cfg: SimConfig) -> SeriesFrame:
    """Draw one path of length n_obs after burn-in.

    Identical seeds give bit-identical output.  Raises
    :class:`ExplosiveConfigError` when the short-run dynamics are
    nonstationary.
    """
    _check_stable(cfg.theta)
    times = np.arange(1, cfg.n_obs + 1, dtype=float) / cfg.n_obs
    icpt_sample = time_varying_intercept(cfg.theta, times)
    icpt_frozen = float(time_varying_intercept(cfg.theta, 0.0)[0])
    x, h = _run_path(cfg, icpt_sample, icpt_frozen)
    return SeriesFrame(x=x, times=times, h_true=h)


def simulate_stationary_at(cfg: SimConfig, u: float) -> SeriesFrame:
    """Standard GARCH path with the intercept frozen at alpha0 + g(u).

    Uses the same innovation stream as :func:`simulate` under the same seed,
    so the paths are coupled.
    """
    if not 0.0 <= u <= 1.0:
        raise InvalidParameterError("u must lie in [0, 1]")
    _check_stable(cfg.theta)
    times = np.arange(1, cfg.n_obs + 1, dtype=float) / cfg.n_obs
    icpt_frozen = float(time_varying_intercept(cfg.theta, u)[0])
    icpt_sample = np.full(cfg.n_obs, icpt_frozen)
    x, h = _run_path(cfg, icpt_sample, icpt_frozen)
    return SeriesFrame(x=x, times=times, h_true=h)


def local_stationarity_probe(
    theta: ParamVector,
    T_list,
    u: float,
    reps: int,
    seed: int = 0,
    delta: float = 0.01,
    burn_in: int = DEFAULT_BURN_IN,
) -> dict[int, float]:
    """Measure how well the frozen-intercept process approximates the path near u.

    For each sample length T, averages over replications the maximum of
    |x_{t,T}^2 - x_tilde_t(u)^2| over the window |t/T - u| < delta, with the
    two paths coupled through a shared innovation stream.  The statistic
    shrinks as T grows (the approximation error is of order |t/T - u| + 1/T).
    """
    if reps < 1:
        raise InvalidParameterError("reps must be >= 1")
    out: dict[int, float] = {}
    for T in T_list:
        devs = np.empty(reps)
        for r in range(reps):
            cfg = SimConfig(theta=theta, n_obs=int(T), burn_in=burn_in, seed=(seed, int(T), r))
            frame = simulate(cfg)
            frozen = simulate_stationary_at(cfg, u)
            window = np.abs(frame.times - u) < delta
            if not np.any(window):
                raise InvalidParameterError("window too narrow for this T")
            diff = np.abs(frame.x[window] ** 2 - frozen.x[window] ** 2)
            devs[r] = diff.max()
        out[int(T)] = float(devs.mean())
    return out
