"""f-divergences as power series in generalized chi-type distances.

For an analytic generator f and members X1, X2 of one affine family,

    I_f(X1 : X2) = sum_{i>=0} f^(i)(lam) / i!  *  chi^i_lam(X1 : X2),

where chi^i_lam is the generalized chi distance of ``closed_form``.  The
series is evaluated term by term with compensated summation; every term
and every partial sum is recorded on a trace, since the partial sums are
the quantity of diagnostic interest.

The expansion center defaults to lam = 1 (where chi^i_1 is the signed
Vajda distance and the order-0 and order-1 terms vanish).  Centering at
lam = 0 gives each term a single exponential instead of a binomial sum,
but is rejected for generators whose derivatives blow up at 0 (KL,
reverse KL, Neyman chi-square, and friends).

Convergence is not guaranteed for all parameter pairs: this is the Taylor
series of f composed with chi terms that can grow without bound when the
density ratio leaves the radius of convergence.  ``taylor_fdiv_auto``
therefore flags truncation-limit exits and aborts with a diagnostic when
the terms grow for three consecutive orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .closed_form import (
    K_MAX_DEFAULT,
    METHOD_TAYLOR,
    DivergenceResult,
    chi2_pearson,
    chi_k_lambda,
    chi_k_vajda,
)
from .errors import DomainError, NonConvergenceError
from .families import FamilySpec
from .generators import GeneratorSpec
from .numerics import CompensatedSum


@dataclass
class SeriesTrace:
    """Record of a truncated series evaluation.

    ``terms[i]`` is f^(i)(center)/i! * chi^i_center; ``partial_sums[i]``
    is the compensated sum of terms 0..i.  Both have length
    ``truncation_order + 1``.  ``converged`` is None when no convergence
    assessment was requested (fixed-order evaluation), otherwise the
    outcome of the auto-truncation rule.
    """

    center: float
    terms: list[float]
    partial_sums: list[float]
    truncation_order: int
    remainder_bound: float | None = None
    converged: bool | None = None


def _check_center(gen: GeneratorSpec, lam: float) -> None:
    if not gen.deriv_domain(lam):
        raise DomainError(
            f"expansion center {lam!r} is outside the derivative domain of "
            f"the {gen.name} generator"
        )


def _series_term(
    gen: GeneratorSpec, family: FamilySpec, theta1, theta2, i: int, lam: float
) -> float:
    coeff = gen.deriv(i, lam) / math.factorial(i)
    if coeff == 0.0:
        return 0.0
    return coeff * chi_k_lambda(family, theta1, theta2, i, lam)


def taylor_fdiv(
    gen: GeneratorSpec,
    family: FamilySpec,
    theta1,
    theta2,
    lam: float = 1.0,
    s: int = 10,
    ratio_bounds: tuple[float, float] | None = None,
) -> tuple[DivergenceResult, SeriesTrace]:
    """Truncate the generator's power series at order s (inclusive).

    When ``ratio_bounds`` = (m, M) is supplied, the Lagrange remainder
    bound for the truncation is computed and attached to the result and
    trace; m and M must bracket the density ratio over the effective
    support.  No attempt is made to infer such bounds automatically (for
    Poisson pairs the ratio is unbounded on the full support).
    """
    if s < 0:
        raise ValueError("truncation order s must be non-negative")
    if s > K_MAX_DEFAULT:
        raise ValueError(f"truncation order s={s} exceeds k_max={K_MAX_DEFAULT}")
    _check_center(gen, lam)
    acc = CompensatedSum()
    terms: list[float] = []
    partial_sums: list[float] = []
    for i in range(s + 1):
        t = _series_term(gen, family, theta1, theta2, i, lam)
        acc.add(t)
        terms.append(t)
        partial_sums.append(acc.value)
    bound = None
    if ratio_bounds is not None:
        bound = remainder_bound(gen, s, ratio_bounds[0], ratio_bounds[1])
    trace = SeriesTrace(
        center=lam,
        terms=terms,
        partial_sums=partial_sums,
        truncation_order=s,
        remainder_bound=bound,
    )
    return DivergenceResult(value=acc.value, method=METHOD_TAYLOR, bound=bound), trace


def taylor_fdiv_auto(
    gen: GeneratorSpec,
    family: FamilySpec,
    theta1,
    theta2,
    lam: float = 1.0,
    tol: float = 1e-10,
    s_max: int = K_MAX_DEFAULT,
) -> tuple[DivergenceResult, SeriesTrace]:
    """Sum the series until it converges, up to order s_max.

    Convergence rule: stop once two consecutive terms both have magnitude
    below tol * max(1, |partial sum|); the reported truncation order
    excludes those two confirmation terms (for a polynomial generator the
    order is therefore the polynomial degree).  Hitting s_max without
    convergence returns the partial result flagged ``converged=False``.
    Terms growing for three consecutive orders indicate the series is
    diverging; that raises NonConvergenceError with the partial trace.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    if s_max < 0 or s_max > K_MAX_DEFAULT:
        raise ValueError(f"s_max must lie in 0..{K_MAX_DEFAULT}")
    _check_center(gen, lam)
    acc = CompensatedSum()
    terms: list[float] = []
    partial_sums: list[float] = []
    growth_streak = 0
    for i in range(s_max + 1):
        t = _series_term(gen, family, theta1, theta2, i, lam)
        acc.add(t)
        terms.append(t)
        partial_sums.append(acc.value)
        if i >= 3 and abs(t) > abs(terms[i - 1]) > 0.0:
            growth_streak += 1
        else:
            growth_streak = 0
        if growth_streak >= 3:
            trace = SeriesTrace(lam, terms, partial_sums, i, converged=False)
            raise NonConvergenceError(
                f"series terms grew for three consecutive orders (through "
                f"order {i}); parameters are outside the radius of convergence",
                trace=trace,
            )
        threshold = tol * max(1.0, abs(acc.value))
        if i >= 2 and abs(t) < threshold and abs(terms[i - 1]) < threshold:
            s = i - 2
            trace = SeriesTrace(
                center=lam,
                terms=terms[: s + 1],
                partial_sums=partial_sums[: s + 1],
                truncation_order=s,
                converged=True,
            )
            return (
                DivergenceResult(value=partial_sums[s], method=METHOD_TAYLOR),
                trace,
            )
    trace = SeriesTrace(
        center=lam,
        terms=terms,
        partial_sums=partial_sums,
        truncation_order=s_max,
        converged=False,
    )
    return DivergenceResult(value=acc.value, method=METHOD_TAYLOR), trace


def remainder_bound(gen: GeneratorSpec, s: int, m: float, M: float) -> float:
    """Lagrange bound on the order-s truncation error:

        sup_{t in [m, M]} |f^(s+1)(t)| * (M - m)^s / (s+1)!

    valid when the density ratio stays in [m, M].  For every built-in
    generator the derivative magnitude is monotone on (0, inf), or is a
    power of (t - 1) whose magnitude peaks at an interval endpoint, so
    the supremum is attained at m or M and is evaluated there exactly.
    """
    if not (0.0 < m <= M):
        raise ValueError("ratio bounds must satisfy 0 < m <= M")
    if not (gen.deriv_domain(m) and gen.deriv_domain(M)):
        raise DomainError(
            f"generator {gen.name} derivatives are undefined somewhere on [{m}, {M}]"
        )
    sup = max(abs(gen.deriv(s + 1, m)), abs(gen.deriv(s + 1, M)))
    return sup * (M - m) ** s / math.factorial(s + 1)


def second_order_approx(
    gen: GeneratorSpec, family: FamilySpec, theta1, theta2
) -> DivergenceResult:
    """Second-order approximation I_f ~ f''(1)/2 * chi2_P(X1 : X2).

    This is the order-2 truncation of the series centered at lam = 1,
    where the order-0 and order-1 terms vanish (f(1) = 0 and chi^1 = 0)
    and chi^2_1 is the Pearson chi-square.  With the KL generator it
    reduces to the classical chi2_P ~ 2 KL approximation.
    """
    half_curvature = gen.deriv(2, 1.0) / 2.0
    chi2 = chi2_pearson(family, theta1, theta2)
    return DivergenceResult(value=half_curvature * chi2.value, method=METHOD_TAYLOR)


def kl_series(
    family: FamilySpec, theta1, theta2, s: int
) -> tuple[DivergenceResult, SeriesTrace]:
    """KL(X1 : X2) as the alternating series sum_{i=2..s} (-1)^i / i * chi^i.

    This is the KL generator's series at center 1 written out directly:
    f^(i)(1)/i! = (-1)^i / i for f(u) = -log(u).  It agrees with
    ``taylor_fdiv`` using the KL generator to within accumulated roundoff
    (the two routes share the chi evaluations but not the coefficients).
    Convergence is not guaranteed for widely separated parameters.
    """
    if s < 2:
        raise ValueError("the KL series starts at order 2; s must be >= 2")
    if s > K_MAX_DEFAULT:
        raise ValueError(f"truncation order s={s} exceeds k_max={K_MAX_DEFAULT}")
    acc = CompensatedSum()
    terms: list[float] = [0.0, 0.0]
    partial_sums: list[float] = [0.0, 0.0]
    for i in range(2, s + 1):
        chi = chi_k_vajda(family, theta1, theta2, i).value
        t = (-1.0) ** i / i * chi
        acc.add(t)
        terms.append(t)
        partial_sums.append(acc.value)
    trace = SeriesTrace(
        center=1.0,
        terms=terms,
        partial_sums=partial_sums,
        truncation_order=s,
    )
    return DivergenceResult(value=acc.value, method=METHOD_TAYLOR), trace
