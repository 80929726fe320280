"""Exponential families with affine natural parameter space.

A family is described by its log-normalizer F over natural coordinates
theta, together with the gradient of F, a domain predicate, and an exact
sampler.  Two families are built in:

* Poisson: theta = log(rate), F(theta) = exp(theta), order 1,
  observations are non-negative integers.
* Isotropic Gaussian with unit covariance: theta = mean vector,
  F(theta) = 0.5 * <theta, theta>, order d, observations are vectors.

Both have natural space equal to all of R^D, so every affine combination
of valid parameters is again valid.  That property is what makes the
closed-form divergences in ``closed_form`` exist.

Sampling is fully deterministic: a fixed (seed, theta, n, workers) tuple
always reproduces the same observation sequence, bit for bit.  Draws are
produced from explicit uniform variates (CDF inversion for Poisson,
Box-Muller for Gaussian) rather than from opaque library samplers, so the
uniform-to-observation transform is pinned down by this module alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from .errors import DomainError

POISSON = "poisson"
ISO_GAUSSIAN = "iso_gaussian"

# Above this rate, Poisson draws are composed from independent chunks so
# that the per-chunk CDF table stays short; see _poisson_batch.
_POISSON_MAX_TABLE_RATE = 30.0


def _as_coords(theta: "NaturalParam | np.ndarray | float") -> np.ndarray:
    if isinstance(theta, NaturalParam):
        return theta.coords
    return np.atleast_1d(np.asarray(theta, dtype=float))


@dataclass(frozen=True, eq=False)
class NaturalParam:
    """A point theta in the natural parameter space (D real coordinates)."""

    coords: np.ndarray

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.coords, dtype=float))
        if c.ndim != 1:
            raise ValueError("natural parameter must be a flat vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("natural parameter coordinates must be finite")
        object.__setattr__(self, "coords", c)

    @property
    def order(self) -> int:
        return self.coords.shape[0]


def natural(*coords: float) -> NaturalParam:
    """Convenience constructor: natural(0.5, -1.0) -> NaturalParam."""
    if len(coords) == 1 and np.ndim(coords[0]) > 0:
        return NaturalParam(np.asarray(coords[0], dtype=float))
    return NaturalParam(np.asarray(coords, dtype=float))


@dataclass(frozen=True, eq=False)
class SourceParam:
    """Ordinary (source) parameterization of a family member.

    Poisson carries the rate (one positive real); the isotropic Gaussian
    carries the mean vector.  Kept distinct from NaturalParam even where
    the map between them is the identity, so call sites read identically
    across families.
    """

    kind: str
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(v)):
            raise ValueError("source parameter values must be finite")
        if self.kind == POISSON:
            if v.shape != (1,):
                raise ValueError("Poisson source parameter is a single rate")
            if v[0] <= 0.0:
                raise ValueError("Poisson rate must be strictly positive")
        object.__setattr__(self, "values", v)


def poisson_rate(rate: float) -> SourceParam:
    return SourceParam(POISSON, np.asarray([rate], dtype=float))


def gaussian_mean(mean: Any) -> SourceParam:
    return SourceParam(ISO_GAUSSIAN, np.atleast_1d(np.asarray(mean, dtype=float)))


@dataclass(frozen=True, eq=False)
class FamilySpec:
    """An exponential family with affine natural space.

    The callables accept either a NaturalParam or a bare coordinate
    array.  ``sampler`` draws one observation from an explicit
    numpy Generator; ``batch_sampler`` is the vectorized equivalent and
    consumes the uniform stream in exactly the same order, so scalar and
    batch paths agree bit for bit.
    """

    kind: str
    order: int
    log_normalizer: Callable[[Any], float]
    grad_log_normalizer: Callable[[Any], np.ndarray]
    in_domain: Callable[[Any], bool]
    sampler: Callable[[Any, np.random.Generator], Any]
    batch_sampler: Callable[[Any, np.random.Generator, int], np.ndarray] = field(
        repr=False, default=None
    )


# ---------------------------------------------------------------------------
# Poisson
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _poisson_cdf_table(rate: float) -> tuple[np.ndarray, float]:
    """Cumulative pmf table for inversion sampling, plus the last pmf value.

    Extends until the residual tail is below 2^-70, far beyond the 2^-53
    resolution of the uniform variates, so table misses are essentially
    impossible (a deterministic scalar continuation handles them anyway).
    Cost and length are O(rate); callers keep rate <= 30.
    """
    pmf = math.exp(-rate)
    cdf = [pmf]
    x = 0
    while 1.0 - cdf[-1] > 2.0**-70 and x < 4000:
        x += 1
        pmf *= rate / x
        cdf.append(cdf[-1] + pmf)
    return np.asarray(cdf), pmf


def _poisson_tail_scan(u: float, rate: float, cdf_end: float, pmf_end: float, k: int) -> int:
    # Deterministic continuation of the CDF walk past the precomputed table.
    c, p = cdf_end, pmf_end
    for _ in range(100_000):
        k += 1
        p *= rate / k
        c += p
        if u < c:
            return k
    raise RuntimeError("Poisson inversion ran off the support; rate too large?")


def _poisson_batch(theta: Any, rng: np.random.Generator, n: int) -> np.ndarray:
    """n Poisson draws by CDF-inversion on explicit uniforms.

    Rates above 30 are split into m independent chunks of rate/m each
    (Poisson is infinitely divisible), keeping each inversion table short
    while preserving exact reproducibility.  Uniforms are consumed
    draw-major: observation i uses variates i*m .. i*m + m - 1.
    """
    rate = math.exp(float(_as_coords(theta)[0]))
    m = max(1, math.ceil(rate / _POISSON_MAX_TABLE_RATE))
    chunk_rate = rate / m
    cdf, pmf_end = _poisson_cdf_table(chunk_rate)
    u = rng.random((n, m))
    draws = np.searchsorted(cdf, u.ravel(), side="right").reshape(n, m)
    # Rare escape past the table end (probability < 2^-70 per variate).
    overflow = draws == len(cdf)
    if overflow.any():
        flat_u = u.reshape(n, m)
        for i, j in zip(*np.nonzero(overflow)):
            draws[i, j] = _poisson_tail_scan(
                flat_u[i, j], chunk_rate, float(cdf[-1]), pmf_end, len(cdf) - 1
            )
    return draws.sum(axis=1).astype(np.int64)


# ---------------------------------------------------------------------------
# Isotropic Gaussian
# ---------------------------------------------------------------------------


def _gaussian_batch(theta: Any, rng: np.random.Generator, n: int) -> np.ndarray:
    """n draws from N(mu, I) via Box-Muller on explicit uniforms.

    Each observation consumes 2*ceil(d/2) uniforms (Box-Muller produces
    normals in pairs; odd d discards the last of the final pair), again
    draw-major so scalar and batch sampling stay aligned.
    """
    mu = _as_coords(theta)
    d = mu.shape[0]
    pairs = (d + 1) // 2
    u = rng.random((n, 2 * pairs))
    # 1 - u lies in (0, 1], so the log is always finite.
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0::2]))
    angle = 2.0 * np.pi * u[:, 1::2]
    z = np.empty((n, 2 * pairs))
    z[:, 0::2] = radius * np.cos(angle)
    z[:, 1::2] = radius * np.sin(angle)
    return mu + z[:, :d]


# ---------------------------------------------------------------------------
# Family constructors
# ---------------------------------------------------------------------------


def _finite_domain(theta: Any) -> bool:
    c = _as_coords(theta)
    return bool(np.all(np.isfinite(c)))


def make_poisson() -> FamilySpec:
    """The Poisson family: F(theta) = exp(theta), order 1."""

    def log_normalizer(theta: Any) -> float:
        return float(np.exp(_as_coords(theta)[0]))

    def grad(theta: Any) -> np.ndarray:
        return np.exp(_as_coords(theta)[:1])

    return FamilySpec(
        kind=POISSON,
        order=1,
        log_normalizer=log_normalizer,
        grad_log_normalizer=grad,
        in_domain=_finite_domain,
        sampler=lambda theta, rng: int(_poisson_batch(theta, rng, 1)[0]),
        batch_sampler=_poisson_batch,
    )


def make_iso_gaussian(d: int) -> FamilySpec:
    """The isotropic unit-variance Gaussian family on R^d:
    F(theta) = 0.5 * <theta, theta>, order d."""
    if d < 1:
        raise ValueError("Gaussian dimension must be a positive integer")

    def log_normalizer(theta: Any) -> float:
        c = _as_coords(theta)
        return float(0.5 * np.dot(c, c))

    def grad(theta: Any) -> np.ndarray:
        return _as_coords(theta).copy()

    return FamilySpec(
        kind=ISO_GAUSSIAN,
        order=d,
        log_normalizer=log_normalizer,
        grad_log_normalizer=grad,
        in_domain=_finite_domain,
        sampler=lambda theta, rng: _gaussian_batch(theta, rng, 1)[0],
        batch_sampler=_gaussian_batch,
    )


# ---------------------------------------------------------------------------
# Parameter maps
# ---------------------------------------------------------------------------


def to_natural(family: FamilySpec, src: SourceParam) -> NaturalParam:
    """Source parameters to natural coordinates.

    Poisson: theta = log(rate).  Gaussian: theta = mean (identity map).
    """
    if src.kind != family.kind:
        raise ValueError(f"source parameter kind {src.kind!r} does not match family {family.kind!r}")
    if family.kind == POISSON:
        rate = float(src.values[0])
        if rate <= 0.0:
            raise ValueError("Poisson rate must be strictly positive")
        return NaturalParam(np.asarray([math.log(rate)]))
    if src.values.shape != (family.order,):
        raise ValueError(f"mean vector must have dimension {family.order}")
    return NaturalParam(src.values.copy())


def to_source(family: FamilySpec, theta: NaturalParam) -> SourceParam:
    """Inverse of to_natural."""
    c = _as_coords(theta)
    if family.kind == POISSON:
        return poisson_rate(math.exp(float(c[0])))
    return gaussian_mean(c.copy())


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _seed_sequence(seed: Any, worker: int) -> np.random.SeedSequence:
    """Per-worker seed material derived from (seed, worker index).

    ``seed`` may be a single 64-bit integer or a tuple of integers (used
    internally to derive independent roles from one user seed).
    """
    if isinstance(seed, (tuple, list)):
        material = [int(s) & 0xFFFFFFFFFFFFFFFF for s in seed]
    else:
        material = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    return np.random.SeedSequence(material + [worker])


def _worker_rng(seed: Any, worker: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_seed_sequence(seed, worker)))


def sample(
    family: FamilySpec,
    theta: NaturalParam,
    n: int,
    seed: Any,
    workers: int = 1,
) -> np.ndarray:
    """Draw n independent observations.

    The n draws are split as evenly as possible across ``workers``
    independent streams, each derived deterministically from
    (seed, worker index), and concatenated in worker order.  The result
    is a deterministic function of (seed, theta, n, workers).

    Returns an int64 array of shape (n,) for Poisson and a float array
    of shape (n, d) for the Gaussian family.
    """
    if n < 1:
        raise ValueError("sample count must be positive")
    if workers < 1:
        raise ValueError("worker count must be positive")
    if not family.in_domain(theta):
        raise DomainError("parameter outside the natural parameter space")
    base, extra = divmod(n, workers)
    parts = []
    for w in range(workers):
        count = base + (1 if w < extra else 0)
        if count == 0:
            continue
        parts.append(family.batch_sampler(theta, _worker_rng(seed, w), count))
    return np.concatenate(parts, axis=0)
