"""Small numerical helpers: compensated summation and falling factorials.

Alternating binomial sums (the chi^k closed forms) cancel heavily: the
individual terms can be four or more orders of magnitude larger than the
result.  Every such sum in this package goes through ``CompensatedSum``,
a Neumaier-style accumulator whose error is O(eps) in the condition of
the sum rather than O(n*eps) in the number of terms.
"""

from __future__ import annotations

from collections.abc import Iterable


class CompensatedSum:
    """Incremental Neumaier (improved Kahan) summation.

    Unlike plain Kahan summation this variant stays accurate when the
    next addend is larger in magnitude than the running sum, which is
    exactly what happens midway through an alternating binomial sum.
    """

    __slots__ = ("_sum", "_carry")

    def __init__(self) -> None:
        self._sum = 0.0
        self._carry = 0.0

    def add(self, value: float) -> None:
        t = self._sum + value
        if abs(self._sum) >= abs(value):
            self._carry += (self._sum - t) + value
        else:
            self._carry += (value - t) + self._sum
        self._sum = t

    @property
    def value(self) -> float:
        return self._sum + self._carry


def compensated_sum(values: Iterable[float]) -> float:
    """Sum an iterable with compensation, in iteration order."""
    acc = CompensatedSum()
    for v in values:
        acc.add(v)
    return acc.value


def falling_factorial(a: float, i: int) -> float:
    """a * (a-1) * ... * (a-i+1); equals 1 for i = 0."""
    out = 1.0
    for r in range(i):
        out *= a - r
    return out
