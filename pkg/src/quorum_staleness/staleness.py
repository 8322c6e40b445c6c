"""Stale-read probabilities for partial quorums.

A read issued ``t`` after a write completes is stale when each of its ``R``
fastest responders replies before the write reaches it. Evaluators:

``worst_case_bound``
    non-expanding write quorum, instantaneous reads.
``closed_form_pt``
    the three-replica closed expressions for (W, R) in {(1,1), (2,1), (1,2)}.
``analytic_general_pt``
    R in {1, 2}, any N, assembled from ``quorum_size_at_read_pmf``.
``exact_pt``
    exact product form for every (N, W, R); see its docstring.
``instantaneous_read_limit``
    the read rate -> infinity limit at offset ``t``.

The simulator in :mod:`quorum_staleness.sim` is the independent check for all
of them. ``closed_form_pt`` for (W, R) = (1, 2) and ``analytic_general_pt``
for R = 2 disagree with it; ``exact_pt`` does not. See README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Optional

from .dist_core import checked_probability
from .errors import UnsupportedMethodError, ValidationError
from .model import DelayModel, QuorumSpec, check_rate, check_time
from .quorum_pmf import quorum_size_at_read_pmf, quorum_size_pmf

METHODS = ("closed_form", "analytic_general", "worst_case_bound", "monte_carlo", "exact")

CLOSED_FORM_CASES = ((1, 1), (2, 1), (1, 2))


@dataclass(frozen=True)
class StalenessEstimate:
    probability: float
    method: str
    ci_halfwidth: Optional[float] = None
    trials: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValidationError(f"probability {self.probability!r} outside [0, 1]")
        if (self.ci_halfwidth is not None) != (self.method == "monte_carlo"):
            raise ValidationError("ci_halfwidth is required for, and only for, monte_carlo")
        if self.ci_halfwidth is not None and self.ci_halfwidth < 0:
            raise ValidationError("ci_halfwidth must be non-negative")


def _require_analytic(delays):
    if not isinstance(delays, DelayModel):
        raise ValidationError("delays must be a DelayModel")
    if delays.is_shifted:
        raise UnsupportedMethodError(
            "shifted delays have no analytic evaluator; use the simulator"
        )


def worst_case_bound(spec):
    """``C(N - W, R) / C(N, R)``: all R readers miss a W-replica quorum that never grows."""
    p = comb(spec.n - spec.w, spec.r) / comb(spec.n, spec.r)
    return StalenessEstimate(p, "worst_case_bound")


def closed_form_pt(spec, delays, t):
    """Three-replica closed expressions.

    The (W=1, R=2) expression is kept as the contracted formula. Under the
    exponential model it does not match simulation (at ``lam = xi = 1``,
    ``t = 0`` it gives 1/12; the model value is 2/15); use ``exact_pt`` when
    the model value is wanted.
    """
    _require_analytic(delays)
    t = check_time(t)
    if spec.n != 3 or (spec.w, spec.r) not in CLOSED_FORM_CASES:
        raise UnsupportedMethodError(
            f"no closed form for (N, W, R) = ({spec.n}, {spec.w}, {spec.r}); "
            "use analytic_general_pt or the simulator"
        )
    lam, xi = delays.write_rate, delays.read_rate
    decay = math.exp(-lam * t)
    if (spec.w, spec.r) == (1, 1):
        p = 2 * xi * decay / (lam + 3 * xi)
    elif (spec.w, spec.r) == (2, 1):
        p = xi * decay / (lam + 3 * xi)
    else:
        lead = 6 * xi**3 * decay**2 / ((lam + 2 * xi) * (lam + 3 * xi))
        p = lead * (
            2 * lam / ((lam + 2 * xi) * (lam + 3 * xi))
            - (lam - xi) * decay / ((lam + xi) * (2 * lam + 3 * xi))
        )
    return StalenessEstimate(checked_probability(p), "closed_form")


def analytic_general_pt(spec, delays, t):
    """Stale-read probability for R in {1, 2} from the quorum-size PMFs at read times.

    R = 1 conditions on ``S(t + Z_(1)) = s``; the first responder is a uniform
    replica, so it is stale with probability ``1 - s/N``. This is exact.

    R = 2 splits on whether the first responder has joined the quorum by the
    time the second replies::

        p = P[r2 out | r1 out of S_2] * P[r1 out of S_2]
          + P[r2 out | r1 in S_2] * (P[r1 in S_2] - P[r1 in S_1])

    with the conditionals taken as ``sum_s (1 - s/(N-1)) P[S_2 = s]`` and
    ``sum_s (1 - (s-1)/(N-1)) P[S_2 = s]``. Treating these as independent of
    the conditioning events is an approximation: it fails the Monte Carlo
    check for t > 0 at N = 3 and at every t for N = 5.
    """
    _require_analytic(delays)
    t = check_time(t)
    if spec.r > 2:
        raise UnsupportedMethodError(
            f"R={spec.r}: only R in {{1, 2}} is evaluated this way; use exact_pt or the simulator"
        )
    if spec.is_strict:
        return StalenessEstimate(0.0, "analytic_general")
    n = spec.n
    first = quorum_size_at_read_pmf(spec, delays, t, 1)
    if spec.r == 1:
        p = math.fsum((1 - s / n) * m for s, m in first.items())
        return StalenessEstimate(checked_probability(p), "analytic_general")

    second = quorum_size_at_read_pmf(spec, delays, t, 2)
    r2_out_given_r1_out = math.fsum(
        (1 - s / (n - 1)) * m for s, m in second.items() if s <= n - 1
    )
    r2_out_given_r1_in = math.fsum((1 - (s - 1) / (n - 1)) * m for s, m in second.items())
    r1_in_first = math.fsum(s / n * m for s, m in first.items())
    r1_in_second = math.fsum(s / n * m for s, m in second.items())
    p = math.fsum([
        r2_out_given_r1_out * (1 - r1_in_second),
        r2_out_given_r1_in * (r1_in_second - r1_in_first),
    ])
    return StalenessEstimate(checked_probability(p), "analytic_general")


def exact_pt(spec, delays, t):
    """Exact stale-read probability under i.i.d. exponential delays, any (N, W, R).

    Given the write completes at ``X_(W)``, the ``N - W`` replicas outside the
    quorum are still ``D_k ~ Exp(lam)`` away (memorylessness), independently of
    which replicas form the quorum and of the read delays. The ``R`` fastest
    readers are a uniformly random R-subset whose delays are the order
    statistics ``Z_(1..R)``, independent of that subset. All of them are stale
    iff the subset avoids the quorum (probability ``C(N-W, R)/C(N, R)``) and
    ``D_k > t + Z_(j)`` for each, so::

        p_t = C(N-W, R)/C(N, R) * exp(-R lam t) * E[exp(-lam * sum_j Z_(j))]

    and with ``sum_j Z_(j) = sum_i (R - i + 1) * spacing_i``::

        E[...] = prod_{i=1..R} (N-i+1) xi / ((N-i+1) xi + (R-i+1) lam)
    """
    _require_analytic(delays)
    t = check_time(t)
    if spec.is_strict:
        return StalenessEstimate(0.0, "exact")
    n, r = spec.n, spec.r
    lam, xi = delays.write_rate, delays.read_rate
    p = comb(n - spec.w, r) / comb(n, r) * math.exp(-r * lam * t)
    for i in range(1, r + 1):
        read_rate = (n - i + 1) * xi
        p *= read_rate / (read_rate + (r - i + 1) * lam)
    return StalenessEstimate(checked_probability(p), "exact")


def instantaneous_read_limit(spec, lam, t):
    """Stale-read probability when reads are instantaneous (read rate -> infinity).

    Reads then observe ``S(t)`` directly; given ``S(t) = s`` the R readers are a
    uniform R-subset, stale with probability ``C(N - s, R) / C(N, R)``.
    At ``t = 0`` this is ``worst_case_bound``.
    """
    lam = check_rate(lam, "lambda")
    t = check_time(t)
    if spec.is_strict:
        return StalenessEstimate(0.0, "exact")
    pmf = quorum_size_pmf(spec, lam, t)
    total = comb(spec.n, spec.r)
    p = math.fsum(comb(spec.n - s, spec.r) / total * m for s, m in pmf.items())
    return StalenessEstimate(checked_probability(p), "exact")


def staleness(spec, delays, t, method="auto", **sim_options):
    """Dispatch to one evaluator.

    ``method`` is one of ``auto``, ``exact``, ``closed``, ``general``,
    ``bound``, ``sim``. ``auto`` picks ``exact`` for unshifted delays and the
    simulator otherwise. ``sim_options`` (``trials``, ``seed``, ``chunks``)
    go to the simulator.
    """
    if method == "auto":
        method = "sim" if delays.is_shifted else "exact"
    if method == "exact":
        return exact_pt(spec, delays, t)
    if method == "closed":
        return closed_form_pt(spec, delays, t)
    if method == "general":
        return analytic_general_pt(spec, delays, t)
    if method == "bound":
        return worst_case_bound(spec)
    if method == "sim":
        from .sim import SimConfig, estimate_pt

        result = estimate_pt(SimConfig(spec, delays, t, **sim_options))
        return result.as_estimate()
    raise ValidationError(f"unknown method {method!r}")
