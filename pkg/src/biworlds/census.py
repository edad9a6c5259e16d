"""Full enumeration of the level one above a universe's registry.

The level is enumerated fiber by fiber without interning: for each
registered biworld and each agent, the admissible (poss, imp) pairs are
generated class by class and combined with numpy outer products.  Every
pair is checked against the biworld conditions and for uniqueness.
Agents choose independently, so a fiber holds the product of the
per-agent pair counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Universe
from .errors import CapExceeded


@dataclass(frozen=True)
class Census:
    level: int
    total: int
    completed: int
    invalid: int
    duplicates: int

    @property
    def incompleted(self) -> int:
        return self.total - self.completed


def _agent_pairs(universe: Universe, w, a: int) -> tuple[np.ndarray, np.ndarray]:
    k = w.level
    acc_p = np.zeros(1, dtype=np.uint64)
    acc_q = np.zeros(1, dtype=np.uint64)
    for cls in universe._classes(w, a):
        pairs = np.array(list(universe._class_assignments(k, *cls)), dtype=np.uint64)
        acc_p = (acc_p[:, None] | pairs[None, :, 0]).ravel()
        acc_q = (acc_q[:, None] | pairs[None, :, 1]).ravel()
    return acc_p, acc_q


def census(universe: Universe, limit: int = 10**8) -> Census:
    """Enumerate level built+1 and tally it."""
    k = universe.built
    n_k = universe.size(k)
    if 2 * n_k > 64:
        raise ValueError("pair encoding needs 2 * |level| <= 64")
    full = np.uint64(universe.all_mask(k))
    completed_ids = np.uint64(universe.completed_mask(k))
    total = completed = invalid = dups = 0
    for w in universe.level(k):
        per_total, per_completed = 1, 1
        for a in range(universe.n_agents):
            p, q = _agent_pairs(universe, w, a)
            if len(p) > limit:
                raise CapExceeded(k + 1, len(p), limit)
            bad = ((p | q) != full) | ((p & q & completed_ids) != 0)
            bad |= _restriction_mismatch(universe, w, a, p, q)
            invalid += int(bad.sum())
            keys = (p << np.uint64(n_k)) | q
            dups += len(keys) - len(np.unique(keys))
            per_total *= len(p)
            per_completed *= int(((p & q) == 0).sum())
        total += per_total
        completed += per_completed
    return Census(k + 1, total, completed, invalid, dups)


def _restriction_mismatch(universe: Universe, w, a, p, q) -> np.ndarray:
    """Pairs whose elementwise restriction differs from w's own sets."""
    k = w.level
    out = np.zeros(len(p), dtype=bool)
    if k == 0:
        return out
    for t in range(universe.size(k - 1)):
        fm = np.uint64(universe.fiber_mask(k, t))
        out |= ((p & fm) != 0) != bool(w.poss[a] >> t & 1)
        out |= ((q & fm) != 0) != bool(w.imp[a] >> t & 1)
    return out
