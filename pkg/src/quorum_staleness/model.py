"""Shared configuration types: quorum sizes and delay distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

# Exact integer binomials are only trusted (and the alternating sums only
# stable) up to this many replicas.
MAX_REPLICAS = 20


def check_rate(value, name="rate"):
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValidationError(f"{name} must be a finite positive number, got {value!r}")
    return value


def check_time(value, name="t"):
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValidationError(f"{name} must be a finite non-negative time, got {value!r}")
    return value


@dataclass(frozen=True)
class QuorumSpec:
    """Replica count ``n`` with write quorum ``w`` and read quorum ``r``.

    Strict quorums (``w + r > n``) are accepted; every evaluator reports zero
    staleness for them.
    """

    n: int
    w: int
    r: int = 1

    def __post_init__(self):
        for name in ("n", "w", "r"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValidationError(f"{name.upper()} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n < 1:
            raise ValidationError(f"N must satisfy N >= 1, got N={self.n}")
        if not 1 <= self.w <= self.n:
            raise ValidationError(f"W must satisfy 1 <= W <= N, got W={self.w}, N={self.n}")
        if not 1 <= self.r <= self.n:
            raise ValidationError(f"R must satisfy 1 <= R <= N, got R={self.r}, N={self.n}")

    @property
    def is_strict(self):
        return self.w + self.r > self.n

    @property
    def is_partial(self):
        return not self.is_strict


@dataclass(frozen=True)
class DelayModel:
    """Write delays ``write_shift + Exp(write_rate)``, read delays ``read_shift + Exp(read_rate)``.

    Shifts are only understood by the simulator; analytic evaluators reject them.
    """

    write_rate: float
    read_rate: float
    write_shift: float = 0.0
    read_shift: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "write_rate", check_rate(self.write_rate, "write rate (lambda)"))
        object.__setattr__(self, "read_rate", check_rate(self.read_rate, "read rate (xi)"))
        object.__setattr__(self, "write_shift", check_time(self.write_shift, "write_shift"))
        object.__setattr__(self, "read_shift", check_time(self.read_shift, "read_shift"))

    @property
    def is_shifted(self):
        return self.write_shift > 0.0 or self.read_shift > 0.0
