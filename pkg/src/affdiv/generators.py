"""Registry of f-divergence generators with closed-form derivatives.

An f-divergence is the integral of x1 * f(x2/x1) for a convex generator f
with f(1) = 0.  The Taylor machinery in ``taylor`` needs f and its i-th
derivative at an arbitrary expansion center, to high order, so every
generator here carries an exact derivative rule; finite differences are
useless at order 10 and beyond.

Derivative rules (i >= the order where the pattern starts):

* KL, f(u) = -log(u):            f^(i)(u) = (-1)^i (i-1)! u^-i        (i>=1)
* reverse KL, f(u) = u log(u):   f^(i)(u) = (-1)^i (i-2)! u^(1-i)     (i>=2)
* Pearson chi2, f(u) = (u-1)^2:  polynomial, derivatives vanish for i>2
* Neyman chi2, f(u) = (1-u)^2/u: f^(i)(u) = (-1)^i i! u^-(i+1)        (i>=2)
* squared Hellinger, (sqrt(u)-1)^2:
                                 f^(i)(u) = -2 ff(1/2, i) u^(1/2-i)   (i>=2)
* Jensen-Shannon, -(u+1) log((1+u)/2) + u log(u):
                                 f^(i)(u) = (-1)^i (i-2)! (u^(1-i) - (1+u)^(1-i))  (i>=2)
* alpha-divergence, (4/(1-a^2)) (1 - u^((1+a)/2)):
                                 power rule with falling factorials
* Pearson-Vajda chi^k, (u-1)^k:  polynomial

where ff(a, i) denotes the falling factorial a (a-1) ... (a-i+1).

The total-variation generator |u-1|/2 and the absolute Vajda generator
|u-1|^k are included for the Monte Carlo / brute-force estimators only:
they are not analytic at u = 1, so their ``deriv_domain`` is empty and
any Taylor use is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numerics import falling_factorial

KL = "kl"
REVERSE_KL = "reverse-kl"
PEARSON_CHI2 = "pearson-chi2"
NEYMAN_CHI2 = "neyman-chi2"
SQUARED_HELLINGER = "squared-hellinger"
JENSEN_SHANNON = "jensen-shannon"
ALPHA_DIVERGENCE = "alpha-divergence"
PEARSON_VAJDA = "pearson-vajda"
ABS_PEARSON_VAJDA = "abs-pearson-vajda"
TOTAL_VARIATION = "total-variation"

GENERATOR_NAMES = (
    KL,
    REVERSE_KL,
    PEARSON_CHI2,
    NEYMAN_CHI2,
    SQUARED_HELLINGER,
    JENSEN_SHANNON,
    ALPHA_DIVERGENCE,
    PEARSON_VAJDA,
    ABS_PEARSON_VAJDA,
    TOTAL_VARIATION,
)

# Generators whose derivatives of every order exist at u = 1 and that the
# Taylor evaluator accepts.
ANALYTIC_NAMES = (
    KL,
    REVERSE_KL,
    PEARSON_CHI2,
    NEYMAN_CHI2,
    SQUARED_HELLINGER,
    JENSEN_SHANNON,
    ALPHA_DIVERGENCE,
    PEARSON_VAJDA,
)


@dataclass(frozen=True)
class GeneratorSpec:
    """A generator f with its exact derivative rule.

    ``eval`` maps u to f(u) and is numpy-vectorized (works elementwise on
    arrays).  ``deriv(i, lam)`` returns the i-th derivative at lam, with
    deriv(0, lam) == eval(lam).  ``deriv_domain(lam)`` says whether all
    derivatives exist at lam.
    """

    name: str
    eval: Callable
    deriv: Callable[[int, float], float]
    deriv_domain: Callable[[float], bool]


def _positive(lam: float) -> bool:
    return lam > 0.0


def _any_finite(lam: float) -> bool:
    return math.isfinite(lam)


def _nowhere(lam: float) -> bool:
    return False


def _kl() -> GeneratorSpec:
    def deriv(i: int, lam: float) -> float:
        if i == 0:
            return -math.log(lam)
        return (-1.0) ** i * math.factorial(i - 1) * lam ** (-i)

    return GeneratorSpec(KL, lambda u: -np.log(u), deriv, _positive)


def _reverse_kl() -> GeneratorSpec:
    def deriv(i: int, lam: float) -> float:
        if i == 0:
            return lam * math.log(lam)
        if i == 1:
            return math.log(lam) + 1.0
        return (-1.0) ** i * math.factorial(i - 2) * lam ** (1 - i)

    return GeneratorSpec(REVERSE_KL, lambda u: u * np.log(u), deriv, _positive)


def _pearson_chi2() -> GeneratorSpec:
    def deriv(i: int, lam: float) -> float:
        if i == 0:
            return (lam - 1.0) ** 2
        if i == 1:
            return 2.0 * (lam - 1.0)
        if i == 2:
            return 2.0
        return 0.0

    return GeneratorSpec(PEARSON_CHI2, lambda u: (u - 1.0) ** 2, deriv, _any_finite)


def _neyman_chi2() -> GeneratorSpec:
    def deriv(i: int, lam: float) -> float:
        if i == 0:
            return (1.0 - lam) ** 2 / lam
        if i == 1:
            return 1.0 - lam**-2
        return (-1.0) ** i * math.factorial(i) * lam ** (-(i + 1))

    return GeneratorSpec(
        NEYMAN_CHI2, lambda u: (1.0 - u) ** 2 / u, deriv, _positive
    )


def _squared_hellinger() -> GeneratorSpec:
    def deriv(i: int, lam: float) -> float:
        if i == 0:
            return (math.sqrt(lam) - 1.0) ** 2
        if i == 1:
            return 1.0 - lam**-0.5
        return -2.0 * falling_factorial(0.5, i) * lam ** (0.5 - i)

    return GeneratorSpec(
        SQUARED_HELLINGER, lambda u: (np.sqrt(u) - 1.0) ** 2, deriv, _positive
    )


def _jensen_shannon() -> GeneratorSpec:
    def f(u):
        return -(u + 1.0) * np.log((1.0 + u) / 2.0) + u * np.log(u)

    def deriv(i: int, lam: float) -> float:
        if i == 0:
            return float(f(lam))
        if i == 1:
            return math.log(2.0 * lam / (1.0 + lam))
        return (
            (-1.0) ** i
            * math.factorial(i - 2)
            * (lam ** (1 - i) - (1.0 + lam) ** (1 - i))
        )

    return GeneratorSpec(JENSEN_SHANNON, f, deriv, _positive)


def _alpha_divergence(alpha: float) -> GeneratorSpec:
    if alpha in (-1.0, 1.0):
        raise ValueError(
            "alpha-divergence is singular at alpha = +/-1 (these are the "
            "KL limits); use the kl / reverse-kl generators instead"
        )
    scale = 4.0 / (1.0 - alpha**2)
    a = (1.0 + alpha) / 2.0

    def deriv(i: int, lam: float) -> float:
        if i == 0:
            return scale * (1.0 - lam**a)
        return -scale * falling_factorial(a, i) * lam ** (a - i)

    return GeneratorSpec(
        f"{ALPHA_DIVERGENCE}({alpha:g})",
        lambda u: scale * (1.0 - u**a),
        deriv,
        _positive,
    )


def _pearson_vajda(k: int) -> GeneratorSpec:
    if k < 0:
        raise ValueError("Pearson-Vajda order k must be non-negative")

    def deriv(i: int, lam: float) -> float:
        if i > k:
            return 0.0
        return falling_factorial(float(k), i) * (lam - 1.0) ** (k - i)

    return GeneratorSpec(
        f"{PEARSON_VAJDA}({k})", lambda u: (u - 1.0) ** k, deriv, _any_finite
    )


def _not_analytic(name: str) -> Callable[[int, float], float]:
    def deriv(i: int, lam: float) -> float:
        if i == 0:
            raise ValueError(f"{name} generator has no derivative rule; evaluate via eval()")
        raise ValueError(f"{name} generator is not analytic at u = 1; no Taylor expansion")

    return deriv


def _abs_pearson_vajda(k: int) -> GeneratorSpec:
    if k < 0:
        raise ValueError("absolute Pearson-Vajda order k must be non-negative")
    name = f"{ABS_PEARSON_VAJDA}({k})"
    return GeneratorSpec(
        name, lambda u: np.abs(u - 1.0) ** k, _not_analytic(name), _nowhere
    )


def _total_variation() -> GeneratorSpec:
    return GeneratorSpec(
        TOTAL_VARIATION,
        lambda u: 0.5 * np.abs(u - 1.0),
        _not_analytic(TOTAL_VARIATION),
        _nowhere,
    )


def make_generator(
    name: str, *, alpha: float | None = None, k: int | None = None
) -> GeneratorSpec:
    """Build a generator by name.

    ``alpha`` is required for the alpha-divergence (and must not be +/-1);
    ``k`` is required for the (absolute) Pearson-Vajda generators.
    """
    if name == KL:
        return _kl()
    if name == REVERSE_KL:
        return _reverse_kl()
    if name == PEARSON_CHI2:
        return _pearson_chi2()
    if name == NEYMAN_CHI2:
        return _neyman_chi2()
    if name == SQUARED_HELLINGER:
        return _squared_hellinger()
    if name == JENSEN_SHANNON:
        return _jensen_shannon()
    if name == ALPHA_DIVERGENCE:
        if alpha is None:
            raise ValueError("alpha-divergence requires the alpha parameter")
        return _alpha_divergence(float(alpha))
    if name == PEARSON_VAJDA:
        if k is None:
            raise ValueError("pearson-vajda requires the order parameter k")
        return _pearson_vajda(int(k))
    if name == ABS_PEARSON_VAJDA:
        if k is None:
            raise ValueError("abs-pearson-vajda requires the order parameter k")
        return _abs_pearson_vajda(int(k))
    if name == TOTAL_VARIATION:
        return _total_variation()
    raise ValueError(f"unknown generator {name!r}; known: {', '.join(GENERATOR_NAMES)}")
