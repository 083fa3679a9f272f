"""Core types and pure functions for the additive time-varying GARCH model.

The model multiplies a standardized innovation by a conditional standard
deviation whose square follows a GARCH recursion with an intercept that
drifts deterministically in rescaled time u = t/T:

    h_t = alpha0 + g(t/T) + sum_i alpha_i * x_{t-i}^2 + sum_j beta_j * h_{t-j}

where g(u) is a linear combination of logistic transition functions.  This
module holds the parameter containers, the logistic transition and its
closed-form derivatives, the exact variance recursion, the moving-average
style representation of the recursion with geometrically decaying
coefficients, and the fourth-moment existence check.

Everything here is a pure function of its inputs; the containers are frozen
and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidParameterError,
    NonpositiveInterceptError,
    UnsupportedTransitionOrderError,
)

# Saturate the logistic exponent before exp(); the function is flat to double
# precision far inside this range anyway.
EXP_CLAMP = 700.0

# Grid resolution used for the positivity check of the intercept path.
POSITIVITY_GRID = 1001


@dataclass(frozen=True)
class ErrorDist:
    """Innovation distribution, standardized to mean 0 and variance 1."""

    kind: str = "gaussian"
    dof: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "student_t"):
            raise InvalidParameterError(f"unknown error distribution {self.kind!r}")
        if self.kind == "student_t":
            if self.dof is None or self.dof <= 2:
                raise InvalidParameterError(
                    "student_t errors need dof > 2 for unit variance"
                )

    @classmethod
    def gaussian(cls) -> "ErrorDist":
        return cls("gaussian")

    @classmethod
    def student_t(cls, dof: float) -> "ErrorDist":
        return cls("student_t", dof)

    @property
    def m2(self) -> float:
        """Second moment of the standardized innovation (always 1)."""
        return 1.0

    @property
    def m4(self) -> float:
        """Fourth moment of the standardized innovation."""
        if self.kind == "gaussian":
            return 3.0
        dof = float(self.dof)  # type: ignore[arg-type]
        if dof <= 4:
            return math.inf
        return 3.0 * (dof - 2.0) / (dof - 4.0)


@dataclass(frozen=True)
class ModelSpec:
    """Shape of a model: lag orders, number of transitions and their orders.

    ``n_transitions == 0`` degenerates to a standard GARCH(p, q) spec.
    """

    p: int = 1
    q: int = 1
    n_transitions: int = 0
    k_orders: tuple[int, ...] = ()
    error_dist: ErrorDist = field(default_factory=ErrorDist.gaussian)

    def __post_init__(self) -> None:
        if self.p < 1:
            raise InvalidParameterError("ARCH order p must be >= 1")
        if self.q < 0:
            raise InvalidParameterError("GARCH order q must be >= 0")
        if self.n_transitions < 0:
            raise InvalidParameterError("number of transitions must be >= 0")
        if len(self.k_orders) != self.n_transitions:
            raise InvalidParameterError(
                "k_orders must list one location count per transition"
            )
        if any(k < 1 for k in self.k_orders):
            raise InvalidParameterError("each transition needs at least one location")

    @property
    def is_plain_garch(self) -> bool:
        return self.n_transitions == 0


@dataclass(frozen=True)
class TransitionParams:
    """One logistic transition: slope, ordered locations and a linear weight."""

    gamma: float
    locations: tuple[float, ...]
    weight: float

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise InvalidParameterError("transition slope gamma must be positive")
        locs = self.locations
        if len(locs) == 0:
            raise InvalidParameterError("transition needs at least one location")
        if any(not (0.0 <= c <= 1.0) for c in locs):
            raise InvalidParameterError("locations must lie in [0, 1]")
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise InvalidParameterError("locations must be strictly increasing")

    @property
    def k(self) -> int:
        return len(self.locations)


@dataclass(frozen=True)
class ParamVector:
    """Full parameter vector: baseline intercept, ARCH/GARCH weights, transitions.

    Construction enforces the cheap invariants (positivity of alpha0,
    nonnegative lag weights, persistence < 1, globally increasing transition
    locations).  Positivity of the whole intercept path is a grid-evaluated
    property; use :meth:`validate` or :func:`intercept_path` to check it.
    """

    alpha0: float
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    transitions: tuple[TransitionParams, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if not self.alpha0 > 0:
            raise InvalidParameterError("alpha0 must be strictly positive")
        if len(self.alphas) < 1:
            raise InvalidParameterError("need at least one ARCH coefficient")
        if any(a < 0 for a in self.alphas) or any(b < 0 for b in self.betas):
            raise InvalidParameterError("ARCH/GARCH coefficients must be >= 0")
        if self.persistence >= 1.0:
            raise InvalidParameterError(
                f"persistence {self.persistence:.6f} must be < 1"
            )
        all_locs = [c for tr in self.transitions for c in tr.locations]
        if any(b <= a for a, b in zip(all_locs, all_locs[1:])):
            raise InvalidParameterError(
                "transition locations must be globally strictly increasing"
            )

    @property
    def p(self) -> int:
        return len(self.alphas)

    @property
    def q(self) -> int:
        return len(self.betas)

    @property
    def n_transitions(self) -> int:
        return len(self.transitions)

    @property
    def persistence(self) -> float:
        return float(sum(self.alphas) + sum(self.betas))

    def spec(self, error_dist: ErrorDist | None = None) -> ModelSpec:
        """Model shape implied by this parameter vector."""
        return ModelSpec(
            p=self.p,
            q=self.q,
            n_transitions=self.n_transitions,
            k_orders=tuple(tr.k for tr in self.transitions),
            error_dist=error_dist or ErrorDist.gaussian(),
        )

    def validate(self) -> None:
        """Full invariant check, including grid positivity of the intercept."""
        u = np.linspace(0.0, 1.0, POSITIVITY_GRID)
        path = time_varying_intercept(self, u)
        if not np.all(path > 0.0):
            raise NonpositiveInterceptError(
                "intercept path alpha0 + g(u) is not strictly positive on [0, 1]"
            )

    def to_array(self) -> np.ndarray:
        """Flatten in canonical order.

        Order: alpha0, alphas, betas, then per transition weight, gamma,
        locations.  :func:`param_names` yields matching labels.
        """
        parts: list[float] = [self.alpha0, *self.alphas, *self.betas]
        for tr in self.transitions:
            parts.extend([tr.weight, tr.gamma, *tr.locations])
        return np.asarray(parts, dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray, spec: ModelSpec) -> "ParamVector":
        """Rebuild from the canonical flat order for the given shape."""
        v = np.asarray(values, dtype=float)
        expected = 1 + spec.p + spec.q + sum(2 + k for k in spec.k_orders)
        if v.size != expected:
            raise InvalidParameterError(
                f"expected {expected} parameters for this spec, got {v.size}"
            )
        pos = 1 + spec.p + spec.q
        alpha0 = float(v[0])
        alphas = tuple(v[1 : 1 + spec.p])
        betas = tuple(v[1 + spec.p : pos])
        transitions = []
        for k in spec.k_orders:
            weight, gamma = float(v[pos]), float(v[pos + 1])
            locations = tuple(v[pos + 2 : pos + 2 + k])
            transitions.append(TransitionParams(gamma, locations, weight))
            pos += 2 + k
        return cls(alpha0, alphas, betas, tuple(transitions))


def param_names(spec: ModelSpec, slope: str = "gamma") -> list[str]:
    """Labels for the canonical flat order.

    ``slope`` chooses how the transition slope coordinate is labelled:
    ``"gamma"`` for the natural parameter, ``"eta"`` for the bounded
    reparameterization eta = gamma / (1 + gamma).
    """
    if slope not in ("gamma", "eta"):
        raise ValueError("slope must be 'gamma' or 'eta'")
    names = ["alpha0"]
    names += [f"alpha{i}" for i in range(1, spec.p + 1)]
    names += [f"beta{j}" for j in range(1, spec.q + 1)]
    for l, k in enumerate(spec.k_orders, start=1):
        names.append(f"alpha0{l}")
        names.append(f"{slope}{l}")
        if k == 1:
            names.append(f"c{l}")
        else:
            names += [f"c{l}_{m}" for m in range(1, k + 1)]
    return names


def eta_of_gamma(gamma: float) -> float:
    """Bounded reparameterization of the transition slope: eta = gamma / (1 + gamma)."""
    return gamma / (1.0 + gamma)


def gamma_of_eta(eta: float) -> float:
    """Inverse of :func:`eta_of_gamma`: gamma = eta / (1 - eta)."""
    if not 0.0 < eta < 1.0:
        raise InvalidParameterError("eta must lie in (0, 1)")
    return eta / (1.0 - eta)


def logistic_g(u, transition: TransitionParams):
    """General logistic transition value at rescaled time u.

    G(u) = 1 / (1 + exp(-gamma * prod_k (u - c_k))); the exponent is clamped
    to avoid overflow, matching the saturation of G to 0 or 1.  Accepts a
    scalar or an array and returns the same shape.
    """
    u_arr = np.asarray(u, dtype=float)
    prod = np.ones_like(u_arr)
    for c in transition.locations:
        prod = prod * (u_arr - c)
    expo = np.clip(-transition.gamma * prod, -EXP_CLAMP, EXP_CLAMP)
    out = 1.0 / (1.0 + np.exp(expo))
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(out)
    return out


def transition_value_and_derivs(u, gamma: float, c: float):
    """G and its first partials (dG/dgamma, dG/dc) for a single-location transition.

    Vectorized over u; used by the analytic score.
    """
    u_arr = np.asarray(u, dtype=float)
    expo = np.clip(-gamma * (u_arr - c), -EXP_CLAMP, EXP_CLAMP)
    g = 1.0 / (1.0 + np.exp(expo))
    d = g * (1.0 - g)
    return g, (u_arr - c) * d, -gamma * d


def transition_derivatives(u: float, transition: TransitionParams, order: int = 1):
    """Closed-form partial derivatives of G with respect to (gamma, c).

    Only the single-location case has closed forms; callers must fall back to
    numerical differentiation otherwise.  Returns an array indexed by
    parameter axes (0 = gamma, 1 = c): shape (2,) for order 1, (2, 2) for
    order 2 and (2, 2, 2) for order 3.
    """
    if transition.k != 1:
        raise UnsupportedTransitionOrderError(
            "closed-form derivatives require a single location parameter"
        )
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    gamma = transition.gamma
    c = transition.locations[0]
    g = logistic_g(u, transition)
    d = g * (1.0 - g)
    m = 1.0 - 2.0 * g
    s = 1.0 - 6.0 * g + 6.0 * g * g
    x = u - c
    if order == 1:
        return np.array([x * d, -gamma * d])
    if order == 2:
        dgg = x * x * d * m
        dgc = -gamma * x * d * m - d
        dcc = gamma * gamma * d * m
        return np.array([[dgg, dgc], [dgc, dcc]])
    dggg = x**3 * d * s
    dggc = -gamma * x * x * d * s - 2.0 * x * d * m
    dgcc = gamma * gamma * x * d * s + 2.0 * gamma * d * m
    dccc = -(gamma**3) * d * s
    out = np.empty((2, 2, 2))
    out[0, 0, 0] = dggg
    out[0, 0, 1] = out[0, 1, 0] = out[1, 0, 0] = dggc
    out[0, 1, 1] = out[1, 0, 1] = out[1, 1, 0] = dgcc
    out[1, 1, 1] = dccc
    return out


def time_varying_intercept(theta: ParamVector, u) -> np.ndarray:
    """alpha0 + g(u) evaluated at arbitrary rescaled times (no positivity check)."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.full(u_arr.shape, theta.alpha0)
    for tr in theta.transitions:
        out = out + tr.weight * logistic_g(u_arr, tr)
    return out


def intercept_path(theta: ParamVector, n_obs: int) -> np.ndarray:
    """Intercept values alpha0 + g(t/T) on the sample time axis t = 1..T.

    Raises :class:`NonpositiveInterceptError` if the path is not strictly
    positive.
    """
    if n_obs < 1:
        raise InvalidParameterError("n_obs must be >= 1")
    times = np.arange(1, n_obs + 1, dtype=float) / n_obs
    path = time_varying_intercept(theta, times)
    if not np.all(path > 0.0):
        raise NonpositiveInterceptError("intercept path has nonpositive values")
    return path


def default_variance_init(theta: ParamVector, first_time: float) -> float:
    """Unconditional-variance analogue used to seed the exact recursion."""
    icpt = float(time_varying_intercept(theta, first_time)[0])
    return icpt / (1.0 - theta.persistence)


def variance_recursion(
    theta: ParamVector,
    x2: np.ndarray,
    h_init: np.ndarray | None = None,
    times: np.ndarray | None = None,
) -> np.ndarray:
    """Exact conditional-variance recursion aligned with the data.

    ``h[t]`` is the variance of observation t and uses squared returns
    strictly before t.  The first max(p, q, 1) values are pinned to
    ``h_init`` (a length-q vector, recycled; defaults to the
    unconditional-variance analogue at the first time point).  Squared
    returns before the sample start are treated as zero; with p <= q that
    convention is never exercised.
    """
    from ._backend import kernels

    x2_arr = np.ascontiguousarray(x2, dtype=float)
    n = x2_arr.shape[0]
    if np.any(x2_arr < 0):
        raise InvalidParameterError("squared returns must be nonnegative")
    if times is None:
        times_arr = np.arange(1, n + 1, dtype=float) / n
    else:
        times_arr = np.ascontiguousarray(times, dtype=float)
        if times_arr.shape[0] != n:
            raise InvalidParameterError("times must align with x2")
    icpt = np.ascontiguousarray(time_varying_intercept(theta, times_arr))
    m = max(theta.p, theta.q, 1)
    if h_init is None:
        head = np.full(m, default_variance_init(theta, times_arr[0] if n else 1.0))
    else:
        h_init_arr = np.atleast_1d(np.asarray(h_init, dtype=float))
        if np.any(h_init_arr <= 0):
            raise InvalidParameterError("h_init must be strictly positive")
        head = np.resize(h_init_arr, m)
    alphas = np.asarray(theta.alphas, dtype=float)
    betas = np.asarray(theta.betas, dtype=float)
    return kernels.garch_recursion(x2_arr, icpt, alphas, betas, head)


@dataclass(frozen=True)
class RepresentationCoeffs:
    """Coefficients of the infinite-order form of the variance recursion.

    h_t = c0 + sum_i d[i-1] * icpt_dynamic(t-i+1) + sum_i c[i-1] * x2_{t-i},
    where c0 absorbs the constant alpha0 / (1 - sum(betas)) and the dynamic
    part of the intercept feeds through d.  Both coefficient families decay
    geometrically at rate sum(betas) per q lags.
    """

    c0: float
    c: np.ndarray
    d: np.ndarray

    @property
    def horizon(self) -> int:
        return int(self.c.shape[0])


def representation_coeffs(theta: ParamVector, horizon: int) -> RepresentationCoeffs:
    """Compute c0, c_i and d_i up to the requested horizon.

    Uses the linear recursion of the inverse GARCH lag polynomial
    (phi_0 = 1, phi_i = sum_j beta_j phi_{i-j}), from which
    d_i = phi_{i-1} and c_i = sum_k alpha_k phi_{i-k}.
    """
    if horizon < 1:
        raise InvalidParameterError("horizon must be >= 1")
    beta_sum = float(sum(theta.betas))
    if beta_sum >= 1.0:
        raise InvalidParameterError("sum of GARCH coefficients must be < 1")
    c0 = theta.alpha0 / (1.0 - beta_sum)
    phi = _phi_sequence(np.asarray(theta.betas), horizon)
    d = phi[:horizon].copy()
    c = np.zeros(horizon)
    alphas = np.asarray(theta.alphas, dtype=float)
    for k in range(1, theta.p + 1):
        c[k - 1 :] += alphas[k - 1] * phi[: horizon - k + 1]
    return RepresentationCoeffs(c0=c0, c=c, d=d)


def _phi_sequence(betas: np.ndarray, horizon: int) -> np.ndarray:
    """phi_0..phi_{horizon-1} with phi_i = sum_j beta_j phi_{i-j}, phi_0 = 1."""
    q = betas.shape[0]
    phi = np.zeros(horizon)
    phi[0] = 1.0
    for i in range(1, horizon):
        upto = min(i, q)
        acc = 0.0
        for j in range(1, upto + 1):
            acc += betas[j - 1] * phi[i - j]
        phi[i] = acc
    return phi


def _phi_derivs(betas: np.ndarray, horizon: int) -> np.ndarray:
    """d(phi_i)/d(beta_j) as a (q, horizon) array.

    Differentiating the phi recursion gives
    psi^j_i = phi_{i-j} + sum_k beta_k psi^j_{i-k}.
    """
    q = betas.shape[0]
    phi = _phi_sequence(betas, horizon)
    psi = np.zeros((q, horizon))
    for j in range(1, q + 1):
        for i in range(j, horizon):
            acc = phi[i - j]
            upto = min(i, q)
            for k in range(1, upto + 1):
                acc += betas[k - 1] * psi[j - 1, i - k]
            psi[j - 1, i] = acc
    return psi


@dataclass(frozen=True)
class MomentCheck:
    exists: bool
    margin: float


def fourth_moment_check(
    alpha1: float, beta1: float, m2: float = 1.0, m4: float = 3.0
) -> MomentCheck:
    """Existence check for the fourth moment of a first-order model.

    The requirement is beta1^2 + 2*alpha1*beta1*m2 + alpha1^2*m4 < 1 where
    m2, m4 are the innovation moments (1 and 3 for Gaussian errors).
    Returns the margin 1 - lhs; the moment exists iff the margin is positive.
    """
    if m2 <= 0:
        raise InvalidParameterError("m2 must be positive")
    if m4 < m2 * m2:
        raise InvalidParameterError("need m4 >= m2^2 (Cauchy-Schwarz)")
    lhs = beta1 * beta1 + 2.0 * alpha1 * beta1 * m2 + alpha1 * alpha1 * m4
    margin = 1.0 - lhs
    return MomentCheck(exists=margin > 0.0, margin=margin)


@dataclass(frozen=True)
class MomentRegion:
    """Grid and boundary of the fourth-moment existence region in (alpha1, beta1)."""

    alpha_grid: np.ndarray
    beta_grid: np.ndarray
    inside: np.ndarray
    boundary: np.ndarray  # (n, 2) polyline alpha, beta with margin == 0


def moment_region_grid(
    m2: float = 1.0, m4: float = 3.0, resolution: int = 201
) -> MomentRegion:
    """Sample the fourth-moment region on [0, amax] x [0, 1].

    The boundary polyline solves beta^2 + 2*alpha*beta*m2 + alpha^2*m4 = 1
    for beta >= 0 at each alpha in [0, 1/sqrt(m4)].
    """
    if resolution < 2:
        raise InvalidParameterError("resolution must be >= 2")
    amax = 1.0 / math.sqrt(m4)
    alpha_grid = np.linspace(0.0, amax, resolution)
    beta_grid = np.linspace(0.0, 1.0, resolution)
    aa, bb = np.meshgrid(alpha_grid, beta_grid, indexing="ij")
    margin = 1.0 - (bb * bb + 2.0 * aa * bb * m2 + aa * aa * m4)
    inside = margin > 0.0
    disc = np.maximum(alpha_grid**2 * (m2 * m2 - m4) + 1.0, 0.0)
    beta_bound = -alpha_grid * m2 + np.sqrt(disc)
    boundary = np.column_stack([alpha_grid, np.maximum(beta_bound, 0.0)])
    return MomentRegion(alpha_grid, beta_grid, inside, boundary)
