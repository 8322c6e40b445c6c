"""Seedable Monte Carlo simulator of write propagation and quorum reads.

Reproducibility contract
------------------------
Trials are cut into fixed blocks of ``BLOCK_SIZE``. Block ``b`` draws from
``numpy.random.PCG64(SeedSequence([seed, b]))``: first an ``(m, N)`` array of
uniforms for write delays, then an ``(m, N)`` array for read delays, where
``m`` is the block length (the last block may be short). Uniforms ``U`` in
[0, 1) map to delays ``shift - log(1 - U) / rate``; ``1 - U`` is never 0.

``chunks`` only decides how blocks are shared among worker threads, so
``stale_count`` is identical for every chunk count. Runs with the same
``(n, trials, seed)`` but different rates, offsets or quorum sizes reuse the
same base draws, which is what ``estimate_pt_batch`` exploits.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError
from .model import DelayModel, QuorumSpec, check_rate, check_time
from .quorum_pmf import QuorumSizePmf
from .staleness import StalenessEstimate

BLOCK_SIZE = 1 << 16
Z95 = 1.959963984540054
SEED_ENV_VAR = "QUORUM_STALENESS_SEED"


def default_seed():
    return int(os.environ.get(SEED_ENV_VAR, "0"))


@dataclass(frozen=True)
class SimConfig:
    spec: QuorumSpec
    delays: DelayModel
    t: float
    trials: int = 1_000_000
    seed: int = 0
    chunks: int = 1

    def __post_init__(self):
        object.__setattr__(self, "t", check_time(self.t))
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValidationError(f"trials must be a positive integer, got {self.trials!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if int(self.chunks) != self.chunks or not 1 <= self.chunks <= self.trials:
            raise ValidationError(f"chunks must satisfy 1 <= chunks <= trials, got {self.chunks!r}")
        for name in ("trials", "seed", "chunks"):
            object.__setattr__(self, name, int(getattr(self, name)))


@dataclass(frozen=True)
class SimResult:
    estimate: float
    stale_count: int
    trials: int
    ci95_halfwidth: float
    ci95_low: float
    ci95_high: float
    seed: int

    def as_estimate(self):
        return StalenessEstimate(
            self.estimate, "monte_carlo", ci_halfwidth=self.ci95_halfwidth, trials=self.trials
        )

    def to_dict(self):
        return asdict(self)


def wilson_interval(successes, trials, z=Z95):
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValidationError("trials must be positive")
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def _result(stale, trials, seed):
    lo, hi = wilson_interval(stale, trials)
    return SimResult(stale / trials, stale, trials, (hi - lo) / 2, lo, hi, seed)


# -- single trial -----------------------------------------------------------


def is_stale(x, z, w, r, t):
    """True iff all ``r`` fastest readers answer before the write reaches them.

    ``x``/``z`` are per-server write/read delays. Reader ties go to the lower
    server index.
    """
    completion = sorted(x)[w - 1]
    readers = sorted(range(len(z)), key=lambda i: (z[i], i))[:r]
    return all(completion + t + z[i] < x[i] for i in readers)


def _exponential(rng, shape, rate, shift=0.0):
    return shift - np.log1p(-rng.random(shape)) / rate


def run_trial(spec, delays, t, rng):
    """One trial with ``rng`` (a ``numpy.random.Generator``)."""
    x = _exponential(rng, spec.n, delays.write_rate, delays.write_shift)
    z = _exponential(rng, spec.n, delays.read_rate, delays.read_shift)
    return is_stale(x.tolist(), z.tolist(), spec.w, spec.r, t)


# -- blocked, vectorised trials --------------------------------------------


def _block_rng(seed, block):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, block])))


def _block_ranges(trials):
    return [(b, min(BLOCK_SIZE, trials - b * BLOCK_SIZE)) for b in range(-(-trials // BLOCK_SIZE))]


def _base_draws(seed, block, size, n):
    """Standard exponential (write, read) delay arrays for one block."""
    rng = _block_rng(seed, block)
    ew = -np.log1p(-rng.random((size, n)))
    er = -np.log1p(-rng.random((size, n)))
    return ew, er


class _Block:
    def __init__(self, seed, block, size, n):
        self.ew, self.er = _base_draws(seed, block, size, n)
        self._ew_sorted = None
        self._er_sorted = None

    @property
    def ew_sorted(self):
        if self._ew_sorted is None:
            self._ew_sorted = np.sort(self.ew, axis=1)
        return self._ew_sorted

    @property
    def er_sorted(self):
        if self._er_sorted is None:
            self._er_sorted = np.sort(self.er, axis=1)
        return self._er_sorted

    def stale_count(self, spec, delays, t):
        lam, xi = delays.write_rate, delays.read_rate
        x = delays.write_shift + self.ew / lam
        z = delays.read_shift + self.er / xi
        completion = delays.write_shift + self.ew_sorted[:, spec.w - 1] / lam
        stale = x > (completion + t)[:, None] + z
        # All R fastest readers are stale iff every fresh server replies
        # strictly after the R-th fastest reply.
        rth_reply = delays.read_shift + self.er_sorted[:, spec.r - 1] / xi
        first_fresh = np.where(stale, np.inf, z).min(axis=1)
        return int(np.count_nonzero(first_fresh > rth_reply))

    def quorum_counts(self, n, w, lam, t):
        x = self.ew / lam
        completion = self.ew_sorted[:, w - 1] / lam
        size = np.count_nonzero(x <= (completion + t)[:, None], axis=1)
        return np.bincount(size, minlength=n + 1)


def _map_blocks(fn, trials, chunks):
    """Apply ``fn(block, size)`` to every block; chunks are processed by threads."""
    ranges = _block_ranges(trials)
    chunks = min(chunks, len(ranges))
    if chunks <= 1:
        return [fn(b, m) for b, m in ranges]
    groups = [ranges[c::chunks] for c in range(chunks)]
    with ThreadPoolExecutor(max_workers=chunks) as pool:
        parts = list(pool.map(lambda g: [fn(b, m) for b, m in g], groups))
    return [item for part in parts for item in part]


def estimate_pt(config):
    """Monte Carlo estimate of the stale-read probability."""
    return estimate_pt_batch([config])[0]


def estimate_pt_batch(configs):
    """Evaluate many configs on shared draws.

    All configs must agree on ``n``, ``trials`` and ``seed``; each result is
    identical to ``estimate_pt`` on that config alone.
    """
    configs = list(configs)
    if not configs:
        return []
    head = configs[0]
    n, trials, seed = head.spec.n, head.trials, head.seed
    for c in configs:
        if (c.spec.n, c.trials, c.seed) != (n, trials, seed):
            raise ValidationError("batched configs must share n, trials and seed")
    chunks = max(c.chunks for c in configs)

    def one_block(b, m):
        block = _Block(seed, b, m, n)
        return [block.stale_count(c.spec, c.delays, c.t) for c in configs]

    per_block = _map_blocks(one_block, trials, chunks)
    totals = [sum(col) for col in zip(*per_block)]
    return [_result(k, trials, seed) for k in totals]


def estimate_quorum_pmf(spec, lam, t, trials, seed=0, chunks=1):
    """Empirical PMF of ``S(t)``: per trial, count replicas with ``X_i <= X_(W) + t``."""
    lam = check_rate(lam, "lambda")
    t = check_time(t)
    n, w = spec.n, spec.w

    def one_block(b, m):
        return _Block(seed, b, m, n).quorum_counts(n, w, lam, t)

    counts = np.sum(_map_blocks(one_block, trials, chunks), axis=0)
    if counts[:w].any():
        raise AssertionError("quorum smaller than W observed")
    return QuorumSizePmf(w, tuple(int(c) / trials for c in counts[w:]))
