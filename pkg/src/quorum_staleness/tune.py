"""Pick (W, R, t) configurations that meet a staleness target at low latency."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError
from .model import DelayModel, QuorumSpec, check_rate
from .staleness import (
    CLOSED_FORM_CASES,
    analytic_general_pt,
    closed_form_pt,
    exact_pt,
)

OBJECTIVES = ("min_read_latency", "min_write_latency", "min_sum")
EVALUATORS = ("exact", "general")

BISECTION_TOL = 1e-6
T_CAP_FACTOR = 1e3


def expected_latency(n, quorum_size, rate, shift=0.0):
    """Mean of the ``quorum_size``-th smallest of ``n`` shifted exponentials."""
    rate = check_rate(rate)
    if not 1 <= quorum_size <= n:
        raise ValidationError(f"quorum size must lie in 1..{n}, got {quorum_size}")
    return shift + math.fsum(1.0 / i for i in range(n - quorum_size + 1, n + 1)) / rate


class StalenessOracle:
    """Callable ``t -> StalenessEstimate`` for one (spec, delays) pair.

    ``evaluator="exact"`` uses :func:`exact_pt` for every configuration.
    ``evaluator="general"`` uses the N=3 closed forms where they exist, the
    R <= 2 decomposition otherwise, and for R >= 3 (or shifted delays) the
    simulator with common random numbers, reporting the Wilson upper bound so
    the comparison against epsilon is conservative. Common random numbers make
    the simulated curve non-increasing in ``t``, which bisection relies on.
    """

    def __init__(self, spec, delays, evaluator="exact", sim_trials=200_000, seed=0):
        if evaluator not in EVALUATORS:
            raise ValidationError(f"evaluator must be one of {EVALUATORS}, got {evaluator!r}")
        self.spec, self.delays = spec, delays
        self.sim_trials, self.seed = sim_trials, seed
        if spec.is_strict:
            self.kind = "strict"
        elif delays.is_shifted:
            self.kind = "sim"
        elif evaluator == "exact":
            self.kind = "exact"
        elif spec.n == 3 and (spec.w, spec.r) in CLOSED_FORM_CASES:
            self.kind = "closed"
        elif spec.r <= 2:
            self.kind = "general"
        else:
            self.kind = "sim"

    @property
    def method(self):
        return {
            "strict": "exact",
            "exact": "exact",
            "closed": "closed_form",
            "general": "analytic_general",
            "sim": "monte_carlo",
        }[self.kind]

    def probability(self, t):
        """Value compared against epsilon (the Wilson upper bound for simulations)."""
        if self.kind == "sim":
            from .sim import SimConfig, estimate_pt

            res = estimate_pt(SimConfig(self.spec, self.delays, t, self.sim_trials, self.seed))
            return res.ci95_high
        return self(t).probability

    def __call__(self, t):
        if self.kind in ("strict", "exact"):
            return exact_pt(self.spec, self.delays, t)
        if self.kind == "closed":
            return closed_form_pt(self.spec, self.delays, t)
        if self.kind == "general":
            return analytic_general_pt(self.spec, self.delays, t)
        from .sim import SimConfig, estimate_pt

        return estimate_pt(SimConfig(self.spec, self.delays, t, self.sim_trials, self.seed)).as_estimate()


def min_visibility_delay(spec, delays, epsilon, evaluator="exact", **oracle_options):
    """Smallest ``t >= 0`` with stale-read probability ``<= epsilon``.

    Bisection on ``[0, t_hi]``, where ``t_hi`` doubles from ``1/lam`` until it
    is feasible. Returns ``None`` if even ``1e3/lam`` is not enough.
    """
    epsilon = float(epsilon)
    if not 0.0 < epsilon <= 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    oracle = (
        evaluator
        if isinstance(evaluator, StalenessOracle)
        else StalenessOracle(spec, delays, evaluator, **oracle_options)
    )
    feasible = lambda t: oracle.probability(t) <= epsilon
    if feasible(0.0):
        return 0.0
    lam = delays.write_rate
    cap = T_CAP_FACTOR / lam
    hi = 1.0 / lam
    while not feasible(hi):
        if hi >= cap:
            return None
        hi = min(2 * hi, cap)
    lo = 0.0
    # Stop well inside the tolerance; ``hi`` is always feasible.
    while hi - lo > BISECTION_TOL / 16:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class TuningRequest:
    n: int
    delays: DelayModel
    epsilon: float
    t_max: float = math.inf
    objective: str = "min_read_latency"
    evaluator: str = "exact"

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValidationError(f"epsilon must lie in (0, 1], got {self.epsilon!r}")
        if math.isnan(self.t_max) or self.t_max < 0:
            raise ValidationError(f"t_max must be >= 0, got {self.t_max!r}")
        if self.objective not in OBJECTIVES:
            raise ValidationError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.evaluator not in EVALUATORS:
            raise ValidationError(f"evaluator must be one of {EVALUATORS}")
        QuorumSpec(self.n, 1, 1)


@dataclass(frozen=True)
class TuningEntry:
    w: int
    r: int
    t_min: float
    p_at_t: float
    expected_write_latency: float
    expected_read_latency: float
    method: str

    def dominates(self, other):
        mine = (self.expected_write_latency, self.expected_read_latency, self.t_min)
        theirs = (other.expected_write_latency, other.expected_read_latency, other.t_min)
        return all(a <= b for a, b in zip(mine, theirs)) and mine != theirs


@dataclass(frozen=True)
class TuningResult:
    request: TuningRequest
    pareto: list = field(default_factory=list)


def _objective_key(objective):
    def key(e):
        if objective == "min_read_latency":
            primary = e.expected_read_latency
        elif objective == "min_write_latency":
            primary = e.expected_write_latency
        else:
            primary = e.expected_write_latency + e.expected_read_latency
        return (primary, e.t_min, e.w + e.r, e.w)

    return key


def candidates(request, **oracle_options):
    """Every feasible (w, r) with its minimal t, before Pareto filtering."""
    n, delays = request.n, request.delays
    out = []
    for w in range(1, n + 1):
        for r in range(1, n + 1):
            spec = QuorumSpec(n, w, r)
            oracle = StalenessOracle(spec, delays, request.evaluator, **oracle_options)
            t = min_visibility_delay(spec, delays, request.epsilon, oracle)
            if t is None or t > request.t_max:
                continue
            out.append(
                TuningEntry(
                    w=w,
                    r=r,
                    t_min=t,
                    p_at_t=oracle.probability(t),
                    expected_write_latency=expected_latency(n, w, delays.write_rate, delays.write_shift),
                    expected_read_latency=expected_latency(n, r, delays.read_rate, delays.read_shift),
                    method=oracle.method,
                )
            )
    return out


def pareto_front(entries):
    return [e for e in entries if not any(o.dominates(e) for o in entries)]


def tune(request, **oracle_options):
    """Pareto-optimal (w, r, t_min) entries, sorted by the request's objective."""
    front = pareto_front(candidates(request, **oracle_options))
    return TuningResult(request, sorted(front, key=_objective_key(request.objective)))
