"""The Input Compression Bound.

    GE < sqrt( (2^I_bits + ln(1/delta)) / (2 N) )

Since 2^I_bits = e^I_nats the bound is evaluated directly from nats. The
confidence term uses the natural logarithm; that is the reading under which
published (I, bound) pairs are reproduced to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

VACUOUS_LEVEL = 0.5


@dataclass(frozen=True)
class BoundConfig:
    delta: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


def nats_to_bits(x: float) -> float:
    return x / math.log(2.0)


def bits_to_nats(x: float) -> float:
    return x * math.log(2.0)


def icb(i_nats: float, n_trn: int, cfg: BoundConfig = BoundConfig()) -> float:
    """Bound on the generalization gap as a fraction (may exceed 1)."""
    if n_trn < 1:
        raise ValueError("n_trn must be >= 1")
    try:
        compress = math.exp(i_nats)
    except OverflowError:
        return math.inf
    return math.sqrt((compress + math.log(1.0 / cfg.delta)) / (2.0 * n_trn))


def icb_bits(i_bits: float, n_trn: int, cfg: BoundConfig = BoundConfig()) -> float:
    if n_trn < 1:
        raise ValueError("n_trn must be >= 1")
    try:
        compress = 2.0 ** i_bits
    except OverflowError:
        return math.inf
    return math.sqrt((compress + math.log(1.0 / cfg.delta)) / (2.0 * n_trn))


def is_vacuous(bound: float, level: float = VACUOUS_LEVEL) -> bool:
    """Binary tasks: a bound at or above 50% says nothing a coin flip doesn't."""
    return bound >= level
