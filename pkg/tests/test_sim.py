import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quorum_staleness import DelayModel, QuorumSpec
from quorum_staleness.errors import ValidationError
from quorum_staleness.quorum_pmf import quorum_size_pmf
from quorum_staleness.sim import (
    BLOCK_SIZE,
    SimConfig,
    estimate_pt,
    estimate_pt_batch,
    estimate_quorum_pmf,
    is_stale,
    run_trial,
    wilson_interval,
)
from quorum_staleness.staleness import exact_pt

UNIT = DelayModel(1.0, 1.0)


def test_hand_evaluated_trial():
    x = [0.2, 1.5, 3.0]
    z = [0.1, 0.05, 2.0]
    assert is_stale(x, z, w=1, r=1, t=0.0)
    # second reader (server 0) is in the quorum
    assert not is_stale(x, z, w=1, r=2, t=0.0)
    # enough delay for the write to reach server 1 first
    assert not is_stale(x, z, w=1, r=1, t=1.3)


def test_reader_ties_go_to_lower_index():
    x = [0.0, 5.0, 5.0]
    assert is_stale(x, [1.0, 1.0, 1.0], w=1, r=1, t=0) is False
    assert is_stale([5.0, 0.0, 5.0], [1.0, 1.0, 1.0], w=1, r=1, t=0) is True


@given(st.integers(1, 7).flatmap(lambda n: st.tuples(
    st.just(n), st.integers(1, n), st.integers(1, n))), st.integers(0, 2**32))
def test_trial_never_stale_for_strict_or_full_write(nwr, seed):
    n, w, r = nwr
    spec = QuorumSpec(n, w, r)
    rng = np.random.default_rng(seed)
    if spec.is_strict or w == n:
        assert not any(run_trial(spec, UNIT, 0.0, rng) for _ in range(50))


def test_vectorised_agrees_with_scalar_trials():
    # Replay the exact block-0 draws through the scalar rule.
    from quorum_staleness.sim import _base_draws

    spec, t = QuorumSpec(5, 2, 2), 0.1
    d = DelayModel(2.0, 0.5)
    ew, er = _base_draws(11, 0, 3000, 5)
    manual = sum(is_stale(list(a / 2.0), list(b / 0.5), 2, 2, t) for a, b in zip(ew, er))
    res = estimate_pt(SimConfig(spec, d, t, trials=3000, seed=11))
    assert res.stale_count == manual


def test_chunk_invariance_and_repeatability():
    base = dict(spec=QuorumSpec(4, 1, 2), delays=UNIT, t=0.2, trials=5 * BLOCK_SIZE + 123, seed=99)
    counts = {estimate_pt(SimConfig(**base, chunks=c)).stale_count for c in (1, 2, 3, 8)}
    assert len(counts) == 1
    assert estimate_pt(SimConfig(**base)) == estimate_pt(SimConfig(**base))


def test_batch_equals_individual():
    configs = [
        SimConfig(QuorumSpec(3, w, r), DelayModel(lam, xi), t, trials=100_000, seed=5)
        for (w, r) in [(1, 1), (1, 2), (2, 1)]
        for lam, xi in [(1, 1), (0.25, 4)]
        for t in (0, 0.7)
    ]
    assert estimate_pt_batch(configs) == [estimate_pt(c) for c in configs]
    with pytest.raises(ValidationError):
        estimate_pt_batch([configs[0], SimConfig(QuorumSpec(4, 1), UNIT, 0, 100_000, 5)])


def test_strict_quorum_exactly_zero():
    res = estimate_pt(SimConfig(QuorumSpec(3, 2, 2), DelayModel(0.3, 7.0), 0.0, trials=100_000, seed=1))
    assert res.stale_count == 0 and res.estimate == 0.0
    assert res.ci95_low == 0.0 and res.ci95_high > 0


def test_unit_case_matches_closed_value():
    res = estimate_pt(SimConfig(QuorumSpec(3, 1, 1), UNIT, 0.0, trials=2_000_000, seed=42))
    assert abs(res.estimate - 0.5) <= 4 * math.sqrt(0.25 / res.trials)


def test_shift_moves_offset():
    # A write shift cancels out of X_i - X_(W); a read shift adds to t.
    spec = QuorumSpec(5, 1, 2)
    res = estimate_pt(SimConfig(spec, DelayModel(1.0, 2.0, 0.8, 0.3), 0.2, 1_000_000, seed=4))
    p = exact_pt(spec, DelayModel(1.0, 2.0), 0.5).probability
    assert abs(res.estimate - p) <= 4 * math.sqrt(p * (1 - p) / res.trials)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi == pytest.approx(1.96**2 / (100 + 1.96**2), rel=1e-3)
    lo, hi = wilson_interval(50, 100)
    assert (lo + hi) / 2 == pytest.approx(0.5)
    assert hi - lo == pytest.approx(2 * 1.96 * 0.05, rel=0.02)


def test_empirical_pmf():
    assert estimate_quorum_pmf(QuorumSpec(3, 3), 1.0, 0.5, 10_000).as_dict() == {3: 1.0}
    assert estimate_quorum_pmf(QuorumSpec(3, 1), 1.0, 0.0, 100_000)[1] == 1.0
    emp = estimate_quorum_pmf(QuorumSpec(3, 1), 1.0, 1.0, 1_000_000, seed=8, chunks=4)
    ref = quorum_size_pmf(QuorumSpec(3, 1), 1.0, 1.0)
    for s, m in ref.items():
        assert abs(emp[s] - m) <= 4 * math.sqrt(m * (1 - m) / 1_000_000)


def test_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(QuorumSpec(3, 1), UNIT, 0, trials=0)
    with pytest.raises(ValidationError):
        SimConfig(QuorumSpec(3, 1), UNIT, 0, trials=5, chunks=6)
    with pytest.raises(ValidationError):
        SimConfig(QuorumSpec(3, 1), UNIT, 0, seed=-1)
    with pytest.raises(ValidationError):
        SimConfig(QuorumSpec(3, 1), UNIT, -1.0)
