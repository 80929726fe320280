"""Reference estimators that need no closed form.

Two routes to the same integrals:

* ``mc_fdiv``: the symmetrized two-sample Monte Carlo estimator

      (1/2n) * sum_i [ f(x2(s_i)/x1(s_i))
                       + (x1(t_i)/x2(t_i)) * f(x2(t_i)/x1(t_i)) ]

  with s_i drawn from X1 and t_i from X2, deterministic under a fixed
  seed, reporting the standard error of the 2n summands.

* ``oracle_fdiv`` / ``oracle_chi_k``: exhaustive support summation for
  Poisson and adaptive quadrature over a generous box for the Gaussian
  family (d <= 3).  These serve as ground truth in the test suite, so
  they deliberately share nothing with the closed-form code paths except
  the log-density formulas below.

All densities are evaluated in log space (log x! via the log-gamma
function) and only ratios are exponentiated: the Poisson tails the oracle
must visit underflow long before they stop mattering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy import integrate
from scipy.special import gammaln
from scipy.stats import poisson as _sp_poisson

from .errors import DomainError, NonConvergenceError
from .families import ISO_GAUSSIAN, POISSON, FamilySpec, _as_coords, sample
from .generators import GeneratorSpec
from .numerics import CompensatedSum

# exp(x) underflows to 0 below roughly -745; used to detect pmf underflow.
_LOG_TINY = -745.0

# Default combined upper-tail mass at which the Poisson support scan may
# stop, provided the integrand terms themselves have also died out.
_TAIL_MASS_DEFAULT = 1e-16

_QUAD_TOL_DEFAULT = 1e-12
_GAUSS_BOX_MARGIN = 12.0
_SUPPORT_CAP = 10_000_000


@dataclass
class EstimateResult:
    """An estimated divergence value with its provenance.

    ``n`` is the sample count (Monte Carlo) or the number of summation
    terms / quadrature evaluations (oracle).  ``std_error`` is set for
    Monte Carlo only; ``tail_mass_dropped`` for the Poisson oracle only.
    """

    value: float
    n: int
    std_error: float | None = None
    tail_mass_dropped: float | None = None


# ---------------------------------------------------------------------------
# Log densities (canonical form: <t(x), theta> - F(theta) + k(x))
# ---------------------------------------------------------------------------


def log_density(family: FamilySpec, theta, x: np.ndarray) -> np.ndarray:
    """Elementwise log pmf / log pdf of the family member at theta.

    Poisson: x * theta - exp(theta) - log(x!).
    Gaussian: <x, theta> - 0.5 <theta, theta> - (d/2) log(2 pi) - 0.5 <x, x>.
    """
    c = _as_coords(theta)
    if family.kind == POISSON:
        xv = np.asarray(x, dtype=float)
        return xv * c[0] - math.exp(c[0]) - gammaln(xv + 1.0)
    if family.kind == ISO_GAUSSIAN:
        xv = np.atleast_2d(np.asarray(x, dtype=float))
        d = c.shape[0]
        out = (
            xv @ c
            - 0.5 * float(np.dot(c, c))
            - 0.5 * d * math.log(2.0 * math.pi)
            - 0.5 * np.einsum("ij,ij->i", xv, xv)
        )
        return out
    raise ValueError(f"unknown family kind {family.kind!r}")


def _check_domain(family: FamilySpec, theta1, theta2) -> None:
    for theta in (theta1, theta2):
        if not family.in_domain(theta):
            raise DomainError("parameter outside the natural parameter space")


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def mc_fdiv(
    gen: GeneratorSpec,
    family: FamilySpec,
    theta1,
    theta2,
    n: int,
    seed: Any,
    workers: int = 1,
) -> EstimateResult:
    """Symmetrized two-sample Monte Carlo estimate of I_f(X1 : X2).

    The two sample sets use independent substreams derived from the one
    seed, so the estimate is a deterministic function of
    (seed, n, workers).  Summands where both densities underflow to zero
    are skipped and counted (a pure numerics artifact for these
    families); a skipped fraction above 1e-6 raises instead.
    """
    if n < 1:
        raise ValueError("sample count must be positive")
    _check_domain(family, theta1, theta2)
    s_obs = sample(family, theta1, n, (seed, 1), workers)
    t_obs = sample(family, theta2, n, (seed, 2), workers)

    lp1_s = log_density(family, theta1, s_obs)
    lp2_s = log_density(family, theta2, s_obs)
    lp1_t = log_density(family, theta1, t_obs)
    lp2_t = log_density(family, theta2, t_obs)

    keep_s = ~((lp1_s < _LOG_TINY) & (lp2_s < _LOG_TINY))
    keep_t = ~((lp1_t < _LOG_TINY) & (lp2_t < _LOG_TINY))
    skipped = int((~keep_s).sum() + (~keep_t).sum())
    if skipped > 1e-6 * 2 * n:
        raise RuntimeError(
            f"{skipped} of {2 * n} Monte Carlo summands had both densities "
            f"underflow to zero; parameters are too extreme for double "
            f"precision sampling"
        )

    ratio_s = np.exp(lp2_s[keep_s] - lp1_s[keep_s])
    lr_t = lp2_t[keep_t] - lp1_t[keep_t]
    side1 = gen.eval(ratio_s)
    side2 = np.exp(-lr_t) * gen.eval(np.exp(lr_t))
    summands = np.concatenate([np.atleast_1d(side1), np.atleast_1d(side2)])
    if not np.all(np.isfinite(summands)):
        raise RuntimeError(
            "non-finite Monte Carlo summand: the generator overflowed on an "
            "observed density ratio"
        )
    value = float(summands.mean())
    std_error = (
        float(summands.std(ddof=1) / math.sqrt(summands.size))
        if summands.size > 1
        else None
    )
    return EstimateResult(value=value, n=n, std_error=std_error)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def _poisson_tail_floor(rate1: float, rate2: float, tail_mass: float) -> int:
    """Smallest X with combined upper tail mass of both pmfs below tail_mass."""
    hi = int(max(rate1, rate2) + 20.0 * math.sqrt(max(rate1, rate2)) + 50.0)
    while _sp_poisson.sf(hi, rate1) + _sp_poisson.sf(hi, rate2) >= tail_mass:
        hi *= 2
    lo = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if _sp_poisson.sf(mid, rate1) + _sp_poisson.sf(mid, rate2) < tail_mass:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _poisson_oracle_sum(
    family: FamilySpec,
    theta1,
    theta2,
    summand: Callable[[float, float], float],
    tail_mass: float,
    x_max: int | None,
) -> EstimateResult:
    """Sum ``summand(lp1, lr)`` over the Poisson support x = 0, 1, 2, ...

    ``summand`` receives the log pmf under theta1 and the log density
    ratio at x.  The scan runs at least to the point where the combined
    pmf tail mass drops below ``tail_mass``, then continues until the
    actual terms have provably died out (three consecutive decreasing
    terms below 1e-19 of the running total): integrands such as
    (x2 - x1)^2 / x1 concentrate around an exponentially tilted rate that
    can sit far beyond both pmfs' bulk, so the pmf rule alone is only a
    floor, not a stopping criterion.
    """
    th1 = float(_as_coords(theta1)[0])
    th2 = float(_as_coords(theta2)[0])
    rate1, rate2 = math.exp(th1), math.exp(th2)
    floor = x_max if x_max is not None else _poisson_tail_floor(rate1, rate2, tail_mass)

    acc = CompensatedSum()
    quiet_streak = 0
    prev_abs = math.inf
    x = 0
    while True:
        lp1 = x * th1 - rate1 - math.lgamma(x + 1.0)
        lr = x * (th2 - th1) - (rate2 - rate1)
        term = summand(lp1, lr)
        if math.isnan(term) or math.isinf(term):
            raise RuntimeError(
                f"non-finite oracle summand at x={x}; parameters exceed the "
                f"dynamic range of the brute-force path"
            )
        acc.add(term)
        if x >= floor:
            scale = max(abs(acc.value), 1e-300)
            if abs(term) < 1e-19 * scale and abs(term) <= prev_abs:
                quiet_streak += 1
            else:
                quiet_streak = 0
            if quiet_streak >= 3:
                break
        prev_abs = abs(term)
        x += 1
        if x > _SUPPORT_CAP:
            raise NonConvergenceError(
                f"Poisson oracle summation still contributing at x={x}; "
                f"aborting (support cap)"
            )
    dropped = float(_sp_poisson.sf(x, rate1) + _sp_poisson.sf(x, rate2))
    return EstimateResult(value=acc.value, n=x + 1, tail_mass_dropped=dropped)


def _gaussian_box(theta1, theta2) -> list[tuple[float, float]]:
    c1, c2 = _as_coords(theta1), _as_coords(theta2)
    lo = np.minimum(c1, c2) - _GAUSS_BOX_MARGIN
    hi = np.maximum(c1, c2) + _GAUSS_BOX_MARGIN
    return list(zip(lo.tolist(), hi.tolist()))


def _gaussian_oracle_quad(
    family: FamilySpec,
    theta1,
    theta2,
    summand: Callable[[float, float], float],
    quad_tol: float,
) -> EstimateResult:
    """Adaptive quadrature of ``summand(lp1, lr)`` over a box extending 12
    units beyond the means in every coordinate (about 12 sigma, so the
    truncated mass is negligible at the requested tolerances).  Tensor
    quadrature cost grows exponentially with d; d <= 3 only.
    """
    c1, c2 = _as_coords(theta1), _as_coords(theta2)
    d = c1.shape[0]
    if d > 3:
        raise ValueError(
            "Gaussian oracle quadrature supports d <= 3 (cost is exponential "
            "in d); use the Monte Carlo estimator for higher dimensions"
        )
    half_norm1 = 0.5 * float(np.dot(c1, c1))
    half_norm2 = 0.5 * float(np.dot(c2, c2))
    log_norm_const = 0.5 * d * math.log(2.0 * math.pi)
    delta = c2 - c1
    evals = 0

    def integrand(*coords: float) -> float:
        nonlocal evals
        evals += 1
        x = np.asarray(coords)
        lp1 = float(np.dot(x, c1)) - half_norm1 - log_norm_const - 0.5 * float(np.dot(x, x))
        lr = float(np.dot(x, delta)) - (half_norm2 - half_norm1)
        return summand(lp1, lr)

    box = _gaussian_box(theta1, theta2)
    opts = dict(epsabs=quad_tol, epsrel=quad_tol)
    if d == 1:
        value, _ = integrate.quad(integrand, *box[0], limit=300, **opts)
    elif d == 2:
        value, _ = integrate.dblquad(
            lambda y, x: integrand(x, y), *box[0], *box[1], **opts
        )
    else:
        value, _ = integrate.tplquad(
            lambda z, y, x: integrand(x, y, z), *box[0], *box[1], *box[2], **opts
        )
    if not math.isfinite(value):
        raise RuntimeError("non-finite Gaussian oracle integral")
    return EstimateResult(value=float(value), n=evals)


def _fdiv_summand(gen: GeneratorSpec) -> Callable[[float, float], float]:
    def summand(lp1: float, lr: float) -> float:
        p1 = math.exp(lp1)
        if p1 == 0.0:
            # The pmf/pdf has underflowed; at that point the term is below
            # float resolution for every supported parameter range, and
            # evaluating f at exp(lr) could manufacture inf * 0.
            return 0.0
        ratio = math.exp(lr) if lr < 709.0 else math.inf
        return p1 * float(gen.eval(ratio))

    return summand


def _chi_summand(k: int, lam: float, absolute: bool) -> Callable[[float, float], float]:
    """Integrand x1 * (x2/x1 - lam)^k, evaluated in log space when the
    ratio is large so that x1^(1-k) x2^k tilts cannot overflow."""

    def summand(lp1: float, lr: float) -> float:
        w = math.exp(lr) - lam if lr < 700.0 else math.inf
        if w > 1.0:
            # log(w) = lr + log1p(-lam * exp(-lr)), exact as w grows.
            log_w = lr + math.log1p(-lam * math.exp(-lr)) if lam != 0.0 else lr
            out = math.exp(lp1 + k * log_w)
            return out
        if w == 0.0:
            return 0.0 if k > 0 else math.exp(lp1)
        mag = math.exp(lp1 + k * math.log(abs(w)))
        if absolute or w > 0.0 or k % 2 == 0:
            return mag
        return -mag

    return summand


def oracle_fdiv(
    gen: GeneratorSpec,
    family: FamilySpec,
    theta1,
    theta2,
    *,
    tail_mass: float = _TAIL_MASS_DEFAULT,
    quad_tol: float = _QUAD_TOL_DEFAULT,
    x_max: int | None = None,
) -> EstimateResult:
    """Direct numerical evaluation of I_f(X1 : X2).

    Poisson: exhaustive summation over the support (see
    ``_poisson_oracle_sum`` for the stopping rule; ``x_max`` overrides
    the pmf-tail floor).  Gaussian: adaptive quadrature, d <= 3.
    """
    _check_domain(family, theta1, theta2)
    summand = _fdiv_summand(gen)
    if family.kind == POISSON:
        return _poisson_oracle_sum(family, theta1, theta2, summand, tail_mass, x_max)
    return _gaussian_oracle_quad(family, theta1, theta2, summand, quad_tol)


def oracle_chi_k(
    family: FamilySpec,
    theta1,
    theta2,
    k: int,
    lam: float = 1.0,
    *,
    absolute: bool = False,
    tail_mass: float = _TAIL_MASS_DEFAULT,
    quad_tol: float = _QUAD_TOL_DEFAULT,
    x_max: int | None = None,
) -> EstimateResult:
    """Direct numerical evaluation of the generalized chi distance
    integral of (x2 - lam*x1)^k / x1^(k-1), signed by default.

    ``absolute=True`` evaluates |x2 - lam*x1|^k / x1^(k-1) instead, which
    has no closed form for odd k and is only available here.
    """
    if k < 0:
        raise ValueError("chi order k must be a non-negative integer")
    _check_domain(family, theta1, theta2)
    summand = _chi_summand(k, lam, absolute)
    if family.kind == POISSON:
        return _poisson_oracle_sum(family, theta1, theta2, summand, tail_mass, x_max)
    return _gaussian_oracle_quad(family, theta1, theta2, summand, quad_tol)
