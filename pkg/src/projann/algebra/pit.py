"""Randomized polynomial identity testing over a prime field."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Optional, Tuple

from .poly import SparsePoly
from .scalars import MERSENNE_61


class Verdict(str, enum.Enum):
    ZERO = "zero"
    NONZERO = "nonzero"


@dataclass(frozen=True)
class PitResult:
    verdict: Verdict
    trials: int
    prime: int
    degree_bound: int
    witness: Optional[Tuple[int, ...]] = None   # a point where the value is nonzero

    @property
    def is_zero(self) -> bool:
        return self.verdict is Verdict.ZERO

    @property
    def error_bound(self) -> float:
        """Chance that a ZERO verdict is wrong."""
        if self.verdict is Verdict.NONZERO:
            return 0.0
        return (self.degree_bound / self.prime) ** self.trials


def zero_test_random(target, p: int = MERSENNE_61, trials: int = 20,
                     rng: random.Random | None = None, degree_bound: int | None = None,
                     output: int = 0) -> PitResult:
    """Schwartz-Zippel test of a SparsePoly or a Circuit output.

    A NONZERO verdict always comes with a witness point and is certain.
    """
    rng = rng or random.Random(0)
    if isinstance(target, SparsePoly):
        nvars = target.nvars
        deg = max(target.degree(), 0) if degree_bound is None else degree_bound

        def value(pt):
            return target.evaluate_mod(pt, p)
    else:
        from ..circuit.evaluate import evaluate_mod
        from ..circuit.ir import degree_bounds
        nvars = target.nvars
        deg = degree_bounds(target)[target.outputs[output]] if degree_bound is None else degree_bound

        def value(pt):
            return evaluate_mod(target, dict(enumerate(pt, start=1)), p)[output]
    if p <= 2 * max(deg, 0):
        raise ValueError(f"modulus {p} too small for degree bound {deg}")
    for _ in range(trials):
        pt = tuple(rng.randrange(p) for _ in range(nvars))
        if value(pt) % p:
            return PitResult(Verdict.NONZERO, trials, p, deg, pt)
    return PitResult(Verdict.ZERO, trials, p, deg)
