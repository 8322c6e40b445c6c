"""Exponential order-statistic spacings and hypoexponential sums.

For ``n`` i.i.d. ``Exp(lam)`` variables the spacings ``X_(i) - X_(i-1)`` are
independent ``Exp((n - i + 1) * lam)``, so partial sums of spacings are
hypoexponential with pairwise distinct rates. The CDF/PDF below use the
distinct-rate partial-fraction expansion; its coefficients alternate in sign,
so terms are accumulated with ``math.fsum`` and the result is range-checked
before clamping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NumericalInstabilityError, ValidationError
from .model import MAX_REPLICAS, check_rate, check_time

TOLERANCE = 1e-9


def spacing_rate(n, i, lam):
    """Rate of the ``i``-th spacing among ``n`` i.i.d. exponentials of rate ``lam``."""
    lam = check_rate(lam, "lambda")
    if not 1 <= i <= n:
        raise ValidationError(f"spacing index must satisfy 1 <= i <= n, got i={i}, n={n}")
    return (n - i + 1) * lam


@dataclass(frozen=True)
class HypoexponentialSpec:
    rates: tuple

    def __post_init__(self):
        rates = tuple(check_rate(r) for r in self.rates)
        if not rates:
            raise ValidationError("at least one rate is required")
        if len(rates) > MAX_REPLICAS:
            raise ValidationError(
                f"at most {MAX_REPLICAS} rates are supported, got {len(rates)}"
            )
        if len(set(rates)) != len(rates):
            raise ValidationError(f"rates must be pairwise distinct, got {rates}")
        object.__setattr__(self, "rates", rates)

    @classmethod
    def of_spacings(cls, n, first, last, lam):
        """Sum of spacings ``first..last`` (inclusive) of ``n`` exponentials."""
        return cls(tuple(spacing_rate(n, i, lam) for i in range(first, last + 1)))

    def weights(self):
        """Partial-fraction weights ``prod_{j != i} rate_j / (rate_j - rate_i)``."""
        out = []
        for i, ri in enumerate(self.rates):
            w = 1.0
            for j, rj in enumerate(self.rates):
                if j != i:
                    w *= rj / (rj - ri)
            out.append(w)
        return out


def _coerce(spec):
    if isinstance(spec, HypoexponentialSpec):
        return spec
    return HypoexponentialSpec(tuple(spec))


def checked_probability(value, what="probability"):
    """Clamp ``value`` into [0, 1], refusing drift beyond ``TOLERANCE``."""
    if not (-TOLERANCE <= value <= 1.0 + TOLERANCE):
        raise NumericalInstabilityError(
            f"{what} evaluated to {value!r}, outside [0, 1] beyond tolerance {TOLERANCE}"
        )
    return min(1.0, max(0.0, value))


def hypoexp_cdf(spec, t):
    """``Pr[Y_1 + ... + Y_k <= t]`` for independent exponentials with the given rates."""
    spec = _coerce(spec)
    t = check_time(t)
    if t == 0.0:
        return 0.0
    terms = [-math.expm1(-r * t) * w for r, w in zip(spec.rates, spec.weights())]
    return checked_probability(math.fsum(terms), "hypoexponential CDF")


def hypoexp_pdf(spec, t):
    spec = _coerce(spec)
    t = check_time(t)
    terms = [r * math.exp(-r * t) * w for r, w in zip(spec.rates, spec.weights())]
    value = math.fsum(terms)
    if value < -TOLERANCE:
        raise NumericalInstabilityError(f"hypoexponential density evaluated to {value!r}")
    return max(0.0, value)
