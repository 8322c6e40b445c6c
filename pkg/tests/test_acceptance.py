"""Exit criteria. Each test is tagged with its criterion number; the terminal
summary prints one PASS/FAIL line per criterion."""

import io
import json
import math
import time
from functools import lru_cache

import numpy as np
import pytest

from quorum_staleness import DelayModel, QuorumSpec
from quorum_staleness.cli import run
from quorum_staleness.quorum_pmf import quorum_size_pmf
from quorum_staleness.sim import SimConfig, estimate_pt_batch, estimate_quorum_pmf
from quorum_staleness.staleness import (
    CLOSED_FORM_CASES,
    analytic_general_pt,
    closed_form_pt,
    exact_pt,
    worst_case_bound,
)
from quorum_staleness.tune import TuningRequest, min_visibility_delay, tune

RATES = (0.25, 1.0, 4.0)
TIMES = (0.0, 0.5, 1.0, 2.0)
BIG = 10_000_000
SEED = 20240917

pytestmark = pytest.mark.slow


def criterion(number, title):
    return pytest.mark.criterion(number, title)


def within_sigmas(estimate, p, trials, k=4.0):
    return abs(estimate - p) <= k * math.sqrt(p * (1 - p) / trials)


# -- 1 ----------------------------------------------------------------------

C1 = criterion(1, "quorum-size PMF matches Monte Carlo (1e6) within 4 SE; normalised to 1e-9; < 60 s")


@C1
def test_c01_pmf_vs_monte_carlo():
    started = time.perf_counter()
    failures = []
    for n in (3, 5, 8):
        for w in range(1, n):
            for t in TIMES:
                pmf = quorum_size_pmf(QuorumSpec(n, w), 1.0, t)
                assert abs(math.fsum(pmf.masses) - 1) <= 1e-9
                emp = estimate_quorum_pmf(QuorumSpec(n, w), 1.0, t, 1_000_000, seed=SEED + n)
                for s, m in pmf.items():
                    if not within_sigmas(emp[s], m, 1_000_000):
                        failures.append((n, w, t, s, m, emp[s]))
    elapsed = time.perf_counter() - started
    assert not failures, failures
    assert elapsed < 60, elapsed


# -- 2, 3: shared 1e7-trial batch for N = 3 --------------------------------


def _n3_configs():
    return [
        (w, r, lam, xi, t)
        for (w, r) in CLOSED_FORM_CASES
        for lam in RATES
        for xi in RATES
        for t in TIMES
    ]


@lru_cache(maxsize=None)
def n3_batch():
    keys = _n3_configs()
    started = time.perf_counter()
    results = estimate_pt_batch(
        SimConfig(QuorumSpec(3, w, r), DelayModel(lam, xi), t, BIG, SEED) for w, r, lam, xi, t in keys
    )
    return dict(zip(keys, results)), time.perf_counter() - started


C2 = criterion(2, "N=3 closed forms vs Monte Carlo (1e7) within 4 binomial sigma; < 5 min")


@C2
def test_c02_runtime():
    _, elapsed = n3_batch()
    assert elapsed < 300, elapsed


@C2
@pytest.mark.parametrize("w, r", CLOSED_FORM_CASES)
def test_c02_closed_form_vs_simulation(w, r):
    results, _ = n3_batch()
    misses = []
    for lam in RATES:
        for xi in RATES:
            for t in TIMES:
                p = closed_form_pt(QuorumSpec(3, w, r), DelayModel(lam, xi), t).probability
                res = results[(w, r, lam, xi, t)]
                if not within_sigmas(res.estimate, p, BIG):
                    misses.append((lam, xi, t, round(p, 6), round(res.estimate, 6)))
    assert not misses, f"{len(misses)}/36 grid points outside 4 sigma: {misses}"


C3 = criterion(3, "p_0 at lam=xi=1: 1/2, 1/4, 1/12 analytically (1e-12) and by simulation")


@C3
@pytest.mark.parametrize("w, r, value", [(1, 1, 0.5), (2, 1, 0.25), (1, 2, 1 / 12)])
def test_c03_fixed_values(w, r, value):
    spec = QuorumSpec(3, w, r)
    assert abs(closed_form_pt(spec, DelayModel(1, 1), 0).probability - value) <= 1e-12
    res = n3_batch()[0][(w, r, 1.0, 1.0, 0.0)]
    # simulator tolerance: 4 standard errors recovered from the 95% half-width
    assert abs(res.estimate - value) <= 4 * res.ci95_halfwidth / 1.96, (res.estimate, value)


# -- 4, 5 -------------------------------------------------------------------


@criterion(4, "worst-case bound (3,2,1) = (3,1,2) = 1/3")
def test_c04_bound_values():
    assert worst_case_bound(QuorumSpec(3, 2, 1)).probability == pytest.approx(1 / 3, abs=1e-15)
    assert worst_case_bound(QuorumSpec(3, 1, 2)).probability == pytest.approx(1 / 3, abs=1e-15)


@criterion(5, "|p_0(xi=1e6, lam=1) - bound| <= 1e-5 for the N=3 cases")
@pytest.mark.parametrize("w, r", CLOSED_FORM_CASES)
def test_c05_limit(w, r):
    spec = QuorumSpec(3, w, r)
    p0 = closed_form_pt(spec, DelayModel(1.0, 1e6), 0.0).probability
    assert abs(p0 - worst_case_bound(spec).probability) <= 1e-5


# -- 6 ----------------------------------------------------------------------


def _analytic_configs():
    for n in range(1, 7):
        for w in range(1, n + 1):
            for r in range(1, n + 1):
                spec = QuorumSpec(n, w, r)
                yield spec, exact_pt
                if r <= 2:
                    yield spec, analytic_general_pt
                if n == 3 and (w, r) in CLOSED_FORM_CASES:
                    yield spec, closed_form_pt


@criterion(6, "p_t <= bound and non-increasing on a 50-point grid, all analytic configs N <= 6")
def test_c06_dominance_and_monotonicity():
    violations = []
    checked = 0
    for spec, fn in _analytic_configs():
        bound = worst_case_bound(spec).probability
        for lam in RATES:
            for xi in RATES:
                d = DelayModel(lam, xi)
                values = [fn(spec, d, 5 * k / 49 / lam).probability for k in range(50)]
                checked += 1
                if any(v > bound for v in values):
                    violations.append(("bound", fn.__name__, spec, lam, xi))
                if any(b > a for a, b in zip(values, values[1:])):
                    violations.append(("monotone", fn.__name__, spec, lam, xi))
    assert checked > 500
    assert not violations, violations


# -- 7 ----------------------------------------------------------------------


@criterion(7, "strict quorums: p_t = 0 analytically and 0 stale in 1e5 simulated trials")
def test_c07_strict_quorums():
    d = DelayModel(0.5, 3.0)
    for n in range(1, 7):
        strict = [QuorumSpec(n, w, r) for w in range(1, n + 1) for r in range(1, n + 1)
                  if w + r > n]
        for spec in strict:
            assert exact_pt(spec, d, 0.0).probability == 0.0
            assert worst_case_bound(spec).probability == 0.0
            if spec.r <= 2:
                assert analytic_general_pt(spec, d, 0.0).probability == 0.0
        sims = estimate_pt_batch(SimConfig(s, d, 0.0, 100_000, SEED) for s in strict)
        assert all(res.stale_count == 0 for res in sims)


# -- 8 ----------------------------------------------------------------------

C8 = criterion(8, "general evaluator = closed form (1e-9) at N=3, and within 4 sigma of MC (1e7) at N=5")


@C8
@pytest.mark.parametrize("w, r", CLOSED_FORM_CASES)
def test_c08_general_matches_closed_form(w, r):
    spec = QuorumSpec(3, w, r)
    worst = 0.0
    for lam in RATES:
        for xi in RATES:
            for t in TIMES:
                d = DelayModel(lam, xi)
                diff = abs(analytic_general_pt(spec, d, t).probability - closed_form_pt(spec, d, t).probability)
                worst = max(worst, diff)
    assert worst <= 1e-9, worst


@lru_cache(maxsize=None)
def n5_batch():
    keys = [(w, r) for w in (1, 2, 3) for r in (1, 2)]
    res = estimate_pt_batch(SimConfig(QuorumSpec(5, w, r), DelayModel(1, 1), 0.5, BIG, SEED) for w, r in keys)
    return dict(zip(keys, res))


@C8
@pytest.mark.parametrize("w, r", [(w, r) for w in (1, 2, 3) for r in (1, 2)])
def test_c08_general_matches_simulation_n5(w, r):
    p = analytic_general_pt(QuorumSpec(5, w, r), DelayModel(1, 1), 0.5).probability
    res = n5_batch()[(w, r)]
    assert within_sigmas(res.estimate, p, BIG), (p, res.estimate)


# -- 9 ----------------------------------------------------------------------


def _sweep(w, r, method):
    out = io.StringIO()
    code = run(["staleness", "--n", "3", "--w", str(w), "--r", str(r), "--lambda", "1", "--xi", "1",
                "--t-sweep", "0:3:0.1", "--method", method], out=out)
    assert code == 0
    return [row["p_t"] for row in json.loads(out.getvalue())["results"]["rows"]]


@criterion(9, "t-sweep on [0, 3]: p(W=1,R=2) < p(W=2,R=1) < p(W=1,R=1) at every point")
@pytest.mark.parametrize("method", ["closed", "auto"])
def test_c09_figure_ordering(method):
    a, b, c = _sweep(1, 2, method), _sweep(2, 1, method), _sweep(1, 1, method)
    assert len(a) == 31
    assert all(x < y < z for x, y, z in zip(a, b, c))


# -- 10 ---------------------------------------------------------------------


@criterion(10, "identical seeds give byte-identical simulate output for chunks 1, 4, 8")
@pytest.mark.parametrize("n, w, r", [(3, 1, 1), (5, 2, 2), (7, 1, 3)])
def test_c10_determinism(n, w, r):
    outputs = set()
    for chunks in ("1", "4", "8"):
        for _ in range(2):
            out = io.StringIO()
            code = run(["simulate", "--n", str(n), "--w", str(w), "--r", str(r), "--t", "0.2",
                        "--trials", "1000000", "--seed", "42", "--chunks", chunks], out=out)
            assert code == 0
            outputs.add(out.getvalue().encode())
    assert len(outputs) == 1


# -- 11 ---------------------------------------------------------------------


@criterion(11, "min visibility delay (3,2,1), eps=0.1 equals ln 2.5 within 1e-6; tuner outputs re-validate")
def test_c11_tuner():
    t = min_visibility_delay(QuorumSpec(3, 2, 1), DelayModel(1, 1), 0.1)
    assert abs(t - math.log(2.5)) <= 1e-6
    for evaluator in ("exact", "general"):
        for n, eps, t_max in [(3, 0.1, math.inf), (3, 0.1, 0.0), (3, 1e-9, 0.0), (5, 0.01, 3.0), (6, 0.05, 1.0)]:
            req = TuningRequest(n, DelayModel(1.0, 2.0), eps, t_max, evaluator=evaluator)
            res = tune(req)
            assert res.pareto
            for e in res.pareto:
                spec = QuorumSpec(n, e.w, e.r)
                if e.method == "exact":
                    p = exact_pt(spec, req.delays, e.t_min).probability
                elif e.method == "closed_form":
                    p = closed_form_pt(spec, req.delays, e.t_min).probability
                elif e.method == "analytic_general":
                    p = analytic_general_pt(spec, req.delays, e.t_min).probability
                else:
                    p = e.p_at_t
                assert p <= eps + 1e-9
