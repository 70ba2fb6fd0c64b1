"""Seeded random instances: circuits with projection gates, matrices, QBFs."""

from __future__ import annotations

import random
from typing import List

from .circuit.builder import Builder
from .circuit.ir import Circuit, prune


def random_circuit(rng: random.Random, nvars: int = 3, size: int = 15,
                   binders: bool = True, max_degree: int | None = None) -> Circuit:
    """A random circuit with at most `size` gates whose output uses the last gate.

    With `binders`, projection and summation gates appear; `max_degree` caps the
    syntactic degree of every gate.
    """
    from .circuit.ir import degree_bounds
    while True:
        b = Builder(nvars)
        pool: List[int] = [b.input(v) for v in range(1, nvars + 1)]
        pool.append(b.one() if rng.random() < 0.7 else b.minus_one())
        deg = {}
        for g in pool:
            deg[g] = 1 if b.gates[g].op == "input" else 0
        while len(b.gates) < size:
            r = rng.random()
            x, y = rng.choice(pool), rng.choice(pool)
            if r < 0.4:
                g, dg = b.add(x, y), max(deg[x], deg[y])
            elif r < 0.75 or not binders:
                dg = deg[x] + deg[y]
                if max_degree is not None and dg > max_degree:
                    continue
                g = b.mul(x, y)
            elif r < 0.9:
                g, dg = b.proj(rng.randint(1, nvars), rng.randint(0, 1), x), deg[x]
            else:
                g, dg = b.sum(rng.randint(1, nvars), x), deg[x]
            if g not in deg:
                deg[g] = dg
                pool.append(g)
        c = prune(b.build([len(b.gates) - 1]))
        if c.size <= size and max(degree_bounds(c)) >= 1 or rng.random() < 0.1:
            return c


def random_matrix(rng: random.Random, N: int, lo: int = -5, hi: int = 5) -> List[List[int]]:
    return [[rng.randint(lo, hi) for _ in range(N)] for _ in range(N)]
