"""Signed numbers stored as (sign, log|x|).

Products of N hyperbolic factors overflow a double once N*|J| exceeds ~700;
keeping magnitudes in log form pushes that limit out of reach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LOG_ZERO = float("-inf")


@dataclass(frozen=True)
class LogSigned:
    sign: int
    log_mag: float = LOG_ZERO

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if self.sign != 0 and math.isnan(self.log_mag):
            raise ValueError("log_mag is NaN")

    @classmethod
    def zero(cls) -> LogSigned:
        return cls(0, LOG_ZERO)

    @classmethod
    def one(cls) -> LogSigned:
        return cls(1, 0.0)

    @classmethod
    def from_float(cls, x: float) -> LogSigned:
        if x == 0.0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_parts(cls, sign: int, log_mag: float) -> LogSigned:
        """Build from parts, collapsing a -inf magnitude to zero."""
        if sign == 0 or log_mag == LOG_ZERO:
            return cls.zero()
        return cls(sign, log_mag)

    def is_zero(self) -> bool:
        return self.sign == 0

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_mag > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_mag)

    def __neg__(self) -> LogSigned:
        return LogSigned(-self.sign, self.log_mag)

    def __mul__(self, other: LogSigned) -> LogSigned:
        if self.sign == 0 or other.sign == 0:
            return LogSigned.zero()
        return LogSigned(self.sign * other.sign, self.log_mag + other.log_mag)

    def __truediv__(self, other: LogSigned) -> LogSigned:
        if other.sign == 0:
            raise ZeroDivisionError("division by a LogSigned zero")
        if self.sign == 0:
            return LogSigned.zero()
        return LogSigned(self.sign * other.sign, self.log_mag - other.log_mag)

    def __add__(self, other: LogSigned) -> LogSigned:
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        big, small = (self, other) if self.log_mag >= other.log_mag else (other, self)
        d = small.log_mag - big.log_mag  # <= 0
        if big.sign == small.sign:
            return LogSigned(big.sign, big.log_mag + math.log1p(math.exp(d)))
        if d == 0.0:
            return LogSigned.zero()
        # |big| - |small| = |big| * (-expm1(d)), no cancellation in expm1
        return LogSigned(big.sign, big.log_mag + math.log(-math.expm1(d)))

    def __sub__(self, other: LogSigned) -> LogSigned:
        return self + (-other)

    def pow(self, n: int) -> LogSigned:
        if n == 0:
            return LogSigned.one()
        if self.sign == 0:
            return LogSigned.zero()
        return LogSigned(self.sign ** n, self.log_mag * n)


def log_product(factors) -> LogSigned:
    """Product of LogSigned factors, summing log-magnitudes with fsum."""
    sign = 1
    logs = []
    for f in factors:
        if f.sign == 0:
            return LogSigned.zero()
        sign *= f.sign
        logs.append(f.log_mag)
    return LogSigned(sign, math.fsum(logs))


def ratio(num: LogSigned, den: LogSigned) -> float:
    """Exponentiate num/den; only the log difference is ever formed."""
    return float(num / den)


def log_abs_tanh(x: float) -> float:
    """log|tanh x| without losing digits when |tanh x| is close to 1."""
    a = abs(x)
    if a == 0.0:
        return LOG_ZERO
    if a < 0.5:
        return math.log(math.tanh(a))
    e = math.exp(-2.0 * a)
    return math.log1p(-2.0 * e / (1.0 + e))


def log_cosh(x: float) -> float:
    a = abs(x)
    return a + math.log1p(math.exp(-2.0 * a)) - math.log(2.0)


def log_abs_sinh(x: float) -> float:
    a = abs(x)
    if a == 0.0:
        return LOG_ZERO
    if a < 1.0:
        return math.log(math.sinh(a))
    return a + math.log1p(-math.exp(-2.0 * a)) - math.log(2.0)


def sign_of(x: float) -> int:
    return (x > 0) - (x < 0)
