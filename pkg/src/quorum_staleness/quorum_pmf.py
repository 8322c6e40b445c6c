"""Distribution of the write-quorum size after a write completes.

``S(t)`` counts the replicas holding the newest value ``t`` time units after
the write was acknowledged by ``W`` replicas. ``quorum_size_pmf`` evaluates
the alternating binomial sum for ``Pr[S(t) = s]``; ``quorum_size_at_read_pmf``
mixes it over the response time of the ``j``-th fastest reader.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

from .dist_core import TOLERANCE, checked_probability
from .errors import NumericalInstabilityError, ValidationError
from .model import MAX_REPLICAS, DelayModel, QuorumSpec, check_rate, check_time


@dataclass(frozen=True)
class QuorumSizePmf:
    """Masses of ``S`` over the dense support ``w, w + 1, ..., n``."""

    w: int
    masses: tuple

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        if not masses:
            raise ValidationError("a PMF needs at least one support point")
        for m in masses:
            if not 0.0 <= m <= 1.0:
                raise ValidationError(f"mass {m!r} outside [0, 1]")
        total = math.fsum(masses)
        if abs(total - 1.0) > TOLERANCE:
            raise ValidationError(f"masses sum to {total!r}, expected 1")
        object.__setattr__(self, "masses", masses)

    @property
    def n(self):
        return self.w + len(self.masses) - 1

    @property
    def support(self):
        return range(self.w, self.n + 1)

    def __getitem__(self, s):
        if not self.w <= s <= self.n:
            return 0.0
        return self.masses[s - self.w]

    def items(self):
        return zip(self.support, self.masses)

    def as_dict(self):
        return dict(self.items())

    def cdf(self, s):
        return math.fsum(m for k, m in self.items() if k <= s)


def _check_spec(spec):
    if spec.n > MAX_REPLICAS:
        raise ValidationError(f"N <= {MAX_REPLICAS} is supported analytically, got N={spec.n}")


def _alternating_pmf(spec, survival):
    """Assemble the PMF from ``survival(i)``, the probability that spacing
    ``i`` (rate ``(N - i + 1) * lam``) has not yet elapsed.

    For a fixed offset ``t`` this is ``exp(-lam_i * t)``; mixing over a random
    offset replaces it by the expectation of that exponential. ``i = N + 1``
    has rate zero, so its survival is 1 and the summand vanishes.
    """
    n, w = spec.n, spec.w
    masses = [checked_probability(survival(w + 1), "Pr[S = W]")]
    for s in range(w + 1, n + 1):
        terms = []
        for i in range(w + 1, min(s + 1, n) + 1):
            coef = comb(n - w, n - i + 1) * comb(n - i + 1, s - i + 1)
            sign = -1.0 if (s - i) % 2 else 1.0
            terms.append(sign * coef * (1.0 - survival(i)))
        masses.append(checked_probability(math.fsum(terms), f"Pr[S = {s}]"))
    total = math.fsum(masses)
    if abs(total - 1.0) > TOLERANCE:
        raise NumericalInstabilityError(f"quorum-size masses sum to {total!r}")
    return QuorumSizePmf(w, tuple(masses))


def quorum_size_pmf(spec, lam, t):
    """PMF of ``S(t)``; only ``spec.n`` and ``spec.w`` are used."""
    lam = check_rate(lam, "lambda")
    t = check_time(t)
    _check_spec(spec)
    if spec.w == spec.n:
        return QuorumSizePmf(spec.n, (1.0,))
    n = spec.n
    return _alternating_pmf(spec, lambda i: math.exp(-(n - i + 1) * lam * t))


def read_order_laplace(n, j, xi, a):
    """``E[exp(-a * Z_(j))]`` for the ``j``-th smallest of ``n`` Exp(``xi``) read delays.

    Evaluated from the order-statistic density as an alternating sum over
    ``l = 1..j``.
    """
    total = []
    for l in range(1, j + 1):
        sign = -1.0 if (j - l) % 2 else 1.0
        coef = comb(n, j) * comb(j, l)
        total.append(sign * coef * l * xi / ((n - l + 1) * xi + a))
    return math.fsum(total)


def quorum_size_at_read_pmf(spec, delays, t, j):
    """PMF of ``S(t + Z_(j))``, the quorum size when the ``j``-th reply arrives.

    ``j`` is the rank of the responder among all ``N`` read replies (1 is the
    fastest), not a server id. Requires ``1 <= j <= spec.r``.
    """
    if not isinstance(delays, DelayModel):
        raise ValidationError("delays must be a DelayModel")
    if delays.is_shifted:
        raise ValidationError("analytic PMFs require unshifted exponential delays")
    t = check_time(t)
    _check_spec(spec)
    if not 1 <= j <= spec.r:
        raise ValidationError(f"read rank j must satisfy 1 <= j <= R, got j={j}, R={spec.r}")
    if spec.w == spec.n:
        return QuorumSizePmf(spec.n, (1.0,))
    n, lam, xi = spec.n, delays.write_rate, delays.read_rate

    def survival(i):
        rate = (n - i + 1) * lam
        return math.exp(-rate * t) * read_order_laplace(n, j, xi, rate)

    return _alternating_pmf(spec, survival)


def mean_quorum_size(pmf):
    return math.fsum(s * m for s, m in pmf.items())
