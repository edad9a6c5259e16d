"""Seeded random formulas for property checks."""

from __future__ import annotations

import random
from typing import Sequence

from .syntax import (
    And, Atom, Bottom, C, E, Formula, Implies, K, M, Not, O, Or, Top, modal_depth,
)


def random_formula(rng: random.Random, atoms: Sequence[str], agents: Sequence[str],
                   max_md: int = 1, size: int = 4, allow_c: bool = False,
                   allow_o: bool = True) -> Formula:
    """A formula with at most ``size`` connectives and modal depth <= max_md.

    With ``allow_c`` the result may contain C, and then max_md bounds only
    the finite nesting around it.
    """
    def leaf() -> Formula:
        r = rng.random()
        if r < 0.08:
            return Top()
        if r < 0.16:
            return Bottom()
        return Atom(rng.choice(atoms))

    def group() -> tuple[str, ...]:
        n = rng.randint(1, len(agents))
        return tuple(rng.sample(list(agents), n))

    def go(budget: int, md: int) -> Formula:
        if budget <= 0:
            return leaf()
        r = rng.random()
        if md > 0 and r < 0.45:
            op = rng.choice("KMOE" if allow_o else "KME")
            sub = go(budget - 1, md - 1)
            if op == "E":
                return E(group(), sub)
            return {"K": K, "M": M, "O": O}[op](rng.choice(agents), sub)
        if allow_c and r < 0.52:
            return C(group(), go(budget - 1, md))
        if r < 0.62:
            return Not(go(budget - 1, md))
        left = rng.randint(0, budget - 1)
        cls = rng.choice((And, And, Or, Implies))
        return cls(go(left, md), go(budget - 1 - left, md))

    return go(rng.randint(0, size), max_md)


def formula_pool(seed: int, n: int, atoms: Sequence[str], agents: Sequence[str],
                 max_md: int, size: int = 4, exact_md: bool = False,
                 allow_c: bool = False) -> list[Formula]:
    """``n`` distinct random formulas; with ``exact_md`` each has depth max_md."""
    rng = random.Random(seed)
    seen: dict[Formula, None] = {}
    tries = 0
    while len(seen) < n and tries < 50 * n:
        tries += 1
        phi = random_formula(rng, atoms, agents, max_md, size, allow_c)
        if exact_md and modal_depth(phi).finite != max_md:
            continue
        seen.setdefault(phi)
    return list(seen)
