"""Finite-level biworlds and the per-level universes that intern them.

A level-k biworld (k >= 1) carries an objective interpretation and, for
every agent, a set of possible and a set of impossible level-(k-1)
biworlds.  Sets are stored as integer bitmasks over the identifiers of the
level-(k-1) registry, so a universe must have that level registered before
any level-k biworld can be written down.

Registry order: level 0 is ordered by interpretation bitmask (the id *is*
the bitmask).  Level k+1 is the concatenation, over level-k biworlds in id
order, of their extension streams.  Every fiber (the set of level-(k+1)
biworlds restricting to one level-k biworld) is therefore a contiguous id
range, and the first id of a fiber is its canonically least element.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import (
    CapExceeded,
    InvalidBiworld,
    NotCompleted,
    UnbuiltLevel,
)

DEFAULT_CAP = 10**6

# per-element assignment digits inside an extension
POSS, IMP, BOTH = 0, 1, 2


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class Biworld:
    level: int
    obj: int
    poss: tuple[int, ...] = ()
    imp: tuple[int, ...] = ()

    def __post_init__(self):
        if self.level == 0 and (self.poss or self.imp):
            raise ValueError("a level-0 biworld has no accessibility sets")
        if self.level > 0 and len(self.poss) != len(self.imp):
            raise ValueError("poss and imp must cover the same agents")


@dataclass(frozen=True)
class LevelCount:
    total: int
    completed: int
    incompleted: int


# Exponents above this many bits are refused rather than computed.
MAX_EXPONENT = 10**8


def count_levels(n_atoms: int, n_agents: int, max_level: int) -> list[LevelCount]:
    """Exact sizes of the first levels, split by completedness.

    n_{k+1} = n_0 * (2**c_k * 3**i_k) ** |agents| and
    c_{k+1} = n_0 * 2 ** (n_k * |agents|).
    """
    if n_agents < 1:
        raise ValueError("at least one agent is required")
    n0 = 2**n_atoms
    out = [LevelCount(n0, 0, n0)]
    for k in range(max_level):
        prev = out[-1]
        if prev.total * n_agents > MAX_EXPONENT:
            raise OverflowError(f"level {k + 1} count is too large to write down")
        total = n0 * (2**prev.completed * 3**prev.incompleted) ** n_agents
        completed = n0 * 2 ** (prev.total * n_agents)
        out.append(LevelCount(total, completed, total - completed))
    return out


class _Level:
    """One registered level: the biworlds in id order plus fiber bookkeeping."""

    def __init__(self, worlds: list[Biworld], parents: list[int] | None, n_parents: int):
        self.worlds = worlds
        self.index = {w: i for i, w in enumerate(worlds)}
        self.size = len(worlds)
        self.all_mask = (1 << self.size) - 1
        self.parents = parents
        self.fiber_start: list[int] = []
        self.fiber_len: list[int] = []
        self.fiber_masks: list[int] = []
        if parents is not None:
            start = 0
            for t in range(n_parents):
                n = 0
                while start + n < self.size and parents[start + n] == t:
                    n += 1
                self.fiber_start.append(start)
                self.fiber_len.append(n)
                self.fiber_masks.append(((1 << n) - 1) << start)
                start += n
            if start != self.size:
                raise AssertionError("registry is not grouped by restriction")
        self.completed_mask = 0


class Universe:
    """All biworlds of levels 0..max_level over a vocabulary and agent set.

    Level max_level + 1 is not registered, but its biworlds can still be
    constructed (extensions, sampling), restricted, classified and evaluated.
    """

    def __init__(self, atoms: Iterable[str], agents: Iterable[str], max_level: int = 1,
                 cap: int = DEFAULT_CAP):
        self.atoms = tuple(sorted(set(atoms)))
        self.agents = tuple(sorted(set(agents)))
        if not self.agents:
            raise ValueError("a universe needs at least one agent")
        if max_level < 0:
            raise ValueError("max_level must be non-negative")
        self.cap = cap
        self.counts = count_levels(len(self.atoms), len(self.agents), max_level)
        for k, c in enumerate(self.counts):
            if c.total > cap:
                raise CapExceeded(k, c.total, cap)
        self._levels: list[_Level] = []
        n0 = 2 ** len(self.atoms)
        self._levels.append(_Level([Biworld(0, i) for i in range(n0)], None, 0))
        for k in range(max_level):
            self._register_next()

    # -- registry access ---------------------------------------------------

    @property
    def built(self) -> int:
        return len(self._levels) - 1

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def agent_index(self, agent: str) -> int:
        return self.agents.index(agent)

    def level(self, k: int) -> list[Biworld]:
        return self._lvl(k).worlds

    def size(self, k: int) -> int:
        return self._lvl(k).size

    def _lvl(self, k: int) -> _Level:
        if not 0 <= k <= self.built:
            raise UnbuiltLevel(k, self.built)
        return self._levels[k]

    def id_of(self, w: Biworld) -> int:
        try:
            return self._lvl(w.level).index[w]
        except KeyError:
            raise InvalidBiworld(f"{w} is not a registered biworld", "membership") from None

    def get(self, k: int, i: int) -> Biworld:
        return self._lvl(k).worlds[i]

    def is_registered(self, w: Biworld) -> bool:
        return w.level <= self.built and w in self._levels[w.level].index

    def all_mask(self, k: int) -> int:
        return self._lvl(k).all_mask

    def completed_mask(self, k: int) -> int:
        return self._lvl(k).completed_mask

    def fiber(self, k: int, t: int) -> range:
        """Ids of level-k biworlds whose restriction is level-(k-1) id t."""
        lvl = self._lvl(k)
        return range(lvl.fiber_start[t], lvl.fiber_start[t] + lvl.fiber_len[t])

    def fiber_mask(self, k: int, t: int) -> int:
        return self._lvl(k).fiber_masks[t]

    def parent(self, k: int, i: int) -> int:
        lvl = self._lvl(k)
        if lvl.parents is None:
            raise ValueError("level 0 has no parents")
        return lvl.parents[i]

    def interpretation(self, obj: int) -> frozenset[str]:
        return frozenset(a for i, a in enumerate(self.atoms) if obj >> i & 1)

    def obj_mask(self, true_atoms: Iterable[str]) -> int:
        m = 0
        for a in true_atoms:
            if a not in self.atoms:
                raise ValueError(f"undeclared atom {a!r}")
            m |= 1 << self.atoms.index(a)
        return m

    def objective(self, true_atoms: Iterable[str] = ()) -> Biworld:
        return Biworld(0, self.obj_mask(true_atoms))

    # -- structural checks ---------------------------------------------------

    def check(self, w: Biworld) -> None:
        """Raise InvalidBiworld unless ``w`` satisfies the biworld conditions."""
        if w.level == 0:
            if not 0 <= w.obj < 2 ** len(self.atoms):
                raise InvalidBiworld("objective outside the vocabulary", "objective")
            return
        if len(w.poss) != self.n_agents:
            raise InvalidBiworld("wrong number of agents", "agents")
        below = self._lvl(w.level - 1)
        for a, (p, q) in enumerate(zip(w.poss, w.imp)):
            if (p | q) != below.all_mask:
                raise InvalidBiworld(
                    f"agent {self.agents[a]}: poss and imp do not cover level {w.level - 1}",
                    "union")
            if p & q & below.completed_mask:
                raise InvalidBiworld(
                    f"agent {self.agents[a]}: a completed biworld is both possible and impossible",
                    "intersection")
        if not 0 <= w.obj < 2 ** len(self.atoms):
            raise InvalidBiworld("objective outside the vocabulary", "objective")

    def contains(self, w: Biworld) -> bool:
        if w.level <= self.built:
            return self.is_registered(w)
        if w.level == self.built + 1:
            try:
                self.check(w)
            except InvalidBiworld:
                return False
            return True
        return False

    def is_completed(self, w: Biworld) -> bool:
        """Completedness via disjointness of every agent's two sets.

        Level-0 biworlds are never completed: with at least one agent each
        interpretation has the two distinct extensions (w, all, {}) and
        (w, {}, all).
        """
        if w.level == 0:
            return False
        return all(p & q == 0 for p, q in zip(w.poss, w.imp))

    # -- restriction and precision ------------------------------------------

    def _image(self, mask: int, k: int) -> int:
        """Restrict a set of level-k ids to the set of their level-(k-1) ids."""
        lvl = self._lvl(k)
        out = 0
        for t, fm in enumerate(lvl.fiber_masks):
            if mask & fm:
                out |= 1 << t
        return out

    def restrict(self, w: Biworld, alpha: int) -> Biworld:
        if not 0 <= alpha <= w.level:
            raise ValueError(f"cannot restrict a level-{w.level} biworld to {alpha}")
        if alpha == w.level:
            return w
        if alpha == 0:
            return Biworld(0, w.obj)
        cur = w
        while cur.level > alpha:
            k = cur.level - 1  # sets of cur live on level k
            cur = Biworld(
                k, cur.obj,
                tuple(self._image(p, k) for p in cur.poss),
                tuple(self._image(q, k) for q in cur.imp),
            )
        return cur

    def leq_p(self, w: Biworld, w2: Biworld) -> bool:
        return w.level <= w2.level and self.restrict(w2, w.level) == w

    # -- extensions ---------------------------------------------------------

    def _may_be_both(self, k: int, x: int) -> bool:
        if k == 0:
            return True
        return not (self._lvl(k).completed_mask >> x & 1)

    def _classes(self, w: Biworld, a: int) -> list[tuple[str, list[int], int]]:
        """Per-agent extension classes over level-k ids, k = level(w).

        Each class is (kind, elements, fixed_mask) with kind one of
        'poss', 'imp' (forced) or 'split' (free, both sides must be hit),
        or 'free' for the unconstrained level-0 case.
        """
        k = w.level
        lvl = self._lvl(k)
        if k == 0:
            return [("free", list(range(lvl.size)), 0)]
        out = []
        p, q = w.poss[a], w.imp[a]
        for t, fm in enumerate(lvl.fiber_masks):
            in_p, in_q = p >> t & 1, q >> t & 1
            if in_p and in_q:
                out.append(("split", list(self.fiber(k, t)), fm))
            elif in_p:
                out.append(("poss", [], fm))
            elif in_q:
                out.append(("imp", [], fm))
            else:
                raise InvalidBiworld(f"level-{k - 1} id {t} is in neither set", "union")
        return out

    def _class_assignments(self, k: int, kind: str, elements: list[int], fm: int
                           ) -> Iterator[tuple[int, int]]:
        """(poss, imp) mask pairs a class can contribute, in canonical order.

        Assignments using only poss/imp come first; those using 'both' after.
        """
        if kind == "poss":
            yield fm, 0
            return
        if kind == "imp":
            yield 0, fm
            return
        need_cover = kind == "split"
        m = len(elements)
        for digits in itertools.product((POSS, IMP), repeat=m):
            if need_cover and (POSS not in digits or IMP not in digits):
                continue
            yield _masks(elements, digits)
        options = [(POSS, IMP, BOTH) if self._may_be_both(k, x) else (POSS, IMP) for x in elements]
        for digits in itertools.product(*options):
            if BOTH not in digits:
                continue
            yield _masks(elements, digits)

    def _agent_choices(self, w: Biworld, a: int) -> Iterator[tuple[int, int]]:
        classes = self._classes(w, a)
        k = w.level
        factories = [
            (lambda c=c: self._class_assignments(k, *c)) for c in classes
        ]
        for combo in _lazy_product(factories):
            p = q = 0
            for cp, cq in combo:
                p |= cp
                q |= cq
            yield p, q

    def extensions(self, w: Biworld, limit: int | None = None) -> Iterator[Biworld]:
        """Stream the level-(k+1) biworlds extending ``w`` in canonical order."""
        if w.level > self.built:
            raise UnbuiltLevel(w.level, self.built)
        factories = [(lambda a=a: self._agent_choices(w, a)) for a in range(self.n_agents)]
        stream = (
            Biworld(w.level + 1, w.obj, tuple(c[0] for c in combo), tuple(c[1] for c in combo))
            for combo in _lazy_product(factories)
        )
        if limit is not None:
            stream = itertools.islice(stream, limit)
        return stream

    def _fiber_prefix(self, v: Biworld, n: int) -> list[Biworld]:
        """Up to ``n`` extensions of v, from the registry when available."""
        if v.level + 1 <= self.built:
            k = v.level + 1
            return [self.get(k, i) for i in itertools.islice(self.fiber(k, self.id_of(v)), n)]
        return list(self.extensions(v, n))

    def count_extensions_upto(self, w: Biworld, bound: int = 2) -> int:
        """Number of extensions of ``w``, truncated at ``bound`` (>= 2).

        Counts assignment choices class by class from concrete fiber
        elements.  Works one level above the registry as well, because the
        fibers there are produced by extending registered biworlds.
        """
        if w.level > self.built + 1:
            raise UnbuiltLevel(w.level - 1, self.built)
        total = 1
        for a in range(self.n_agents):
            if w.level == 0:
                total *= 3 ** (2 ** len(self.atoms))
                continue
            below = w.level - 1
            p, q = w.poss[a], w.imp[a]
            for t in range(self.size(below)):
                in_p, in_q = p >> t & 1, q >> t & 1
                if not (in_p or in_q):
                    return 0
                fiber = self._fiber_prefix(self.get(below, t), 2)
                if not fiber:
                    return 0
                if in_p and in_q:
                    if len(fiber) >= 2:
                        options = bound  # 2**m - 2 >= 2 valid two-sided splits
                    else:
                        options = 0 if self.is_completed(fiber[0]) else 1
                    total *= options
                    if total == 0:
                        return 0
            total = min(total, bound)
        return min(total, bound)

    def incompleted_oracle(self, w: Biworld) -> bool:
        """Definitional check: does ``w`` have two distinct extensions?"""
        if w.level <= self.built:
            return sum(1 for _ in self.extensions(w, 2)) == 2
        return self.count_extensions_upto(w, 2) == 2

    def extension_count(self, w: Biworld) -> int:
        """Exact number of extensions of ``w``."""
        k = w.level
        if k == 0:
            return 3 ** (self.size(0) * self.n_agents)
        total = 1
        for a in range(self.n_agents):
            for kind, elements, _ in self._classes(w, a):
                if kind == "split":
                    choices = 1
                    for x in elements:
                        choices *= 3 if self._may_be_both(k, x) else 2
                    total *= choices - 2
        return total

    def random_extension(self, w: Biworld, rng: random.Random) -> Biworld:
        """Uniformly random extension of a biworld of level <= built."""
        k = w.level
        poss, imp = [], []
        for a in range(self.n_agents):
            p = q = 0
            for kind, elements, fm in self._classes(w, a):
                if kind == "poss":
                    p |= fm
                elif kind == "imp":
                    q |= fm
                else:
                    options = [(POSS, IMP, BOTH) if self._may_be_both(k, x) else (POSS, IMP)
                               for x in elements]
                    while True:
                        digits = [rng.choice(o) for o in options]
                        if kind == "free" or (
                                any(d != IMP for d in digits) and any(d != POSS for d in digits)):
                            break
                    cp, cq = _masks(elements, digits)
                    p |= cp
                    q |= cq
            poss.append(p)
            imp.append(q)
        return Biworld(k + 1, w.obj, tuple(poss), tuple(imp))

    def sample(self, k: int, rng: random.Random) -> Biworld:
        """Uniform sample from level k, for k <= built + 1."""
        if k <= self.built:
            return rng.choice(self.level(k))
        if k != self.built + 1:
            raise UnbuiltLevel(k - 1, self.built)
        weights = self._parent_weights()
        r = rng.randrange(weights[-1])
        t = _bisect_right(weights, r)
        return self.random_extension(self.get(self.built, t), rng)

    def _parent_weights(self) -> list[int]:
        cached = getattr(self, "_weights", None)
        if cached is None:
            cached = list(itertools.accumulate(
                self.extension_count(w) for w in self.level(self.built)))
            self._weights = cached
        return cached

    def random_completed_extension(self, w: Biworld, rng: random.Random) -> Biworld:
        """Uniformly random completed extension (no 'both' assignments)."""
        k = w.level
        poss, imp = [], []
        for a in range(self.n_agents):
            p = q = 0
            for kind, elements, fm in self._classes(w, a):
                if kind == "poss":
                    p |= fm
                elif kind == "imp":
                    q |= fm
                else:
                    while True:
                        digits = [rng.choice((POSS, IMP)) for _ in elements]
                        if kind == "free" or (POSS in digits and IMP in digits):
                            break
                    cp, cq = _masks(elements, digits)
                    p |= cp
                    q |= cq
            poss.append(p)
            imp.append(q)
        return Biworld(k + 1, w.obj, tuple(poss), tuple(imp))

    # -- completions ---------------------------------------------------------

    def _ext(self, mask: int, k: int) -> int:
        """All level-k ids whose restriction lies in ``mask`` (level k-1)."""
        lvl = self._lvl(k)
        out = 0
        for t in bits(mask):
            out |= lvl.fiber_masks[t]
        return out

    def completed_extension(self, w: Biworld) -> Biworld:
        """A completed extension of ``w`` built by the completability recipe.

        Each possible-and-impossible v is split by sending its least
        extension to the impossible side and the rest to the possible side.
        """
        k = w.level
        lvl = self._lvl(k)
        if k == 0:
            return Biworld(1, w.obj, (lvl.all_mask,) * self.n_agents, (0,) * self.n_agents)
        poss, imp = [], []
        for p, q in zip(w.poss, w.imp):
            ext_p = self._ext(p, k)
            chosen = 0
            for t in bits(p & q):
                chosen |= 1 << lvl.fiber_start[t]
            poss.append(ext_p & ~chosen)
            imp.append((lvl.all_mask & ~ext_p) | chosen)
        return Biworld(k + 1, w.obj, tuple(poss), tuple(imp))

    def unique_extension(self, w: Biworld) -> Biworld:
        if not self.is_completed(w):
            raise NotCompleted("only completed biworlds have a unique extension")
        k = w.level
        self._lvl(k)
        return Biworld(
            k + 1, w.obj,
            tuple(self._ext(p, k) for p in w.poss),
            tuple(self._ext(q, k) for q in w.imp),
        )

    # -- convenience ---------------------------------------------------------

    def make(self, true_atoms: Iterable[str], sets: dict[str, tuple[Sequence[Biworld], Sequence[Biworld]]],
             check: bool = True) -> Biworld:
        """Build a biworld from explicit lower-level members per agent."""
        levels = {v.level for pair in sets.values() for side in pair for v in side}
        if len(levels) != 1:
            raise ValueError("members must all come from one level")
        (below,) = levels
        if set(sets) != set(self.agents):
            raise ValueError("every agent needs a (poss, imp) pair")
        poss = tuple(mask_of(self.id_of(v) for v in sets[a][0]) for a in self.agents)
        imp = tuple(mask_of(self.id_of(v) for v in sets[a][1]) for a in self.agents)
        w = Biworld(below + 1, self.obj_mask(true_atoms), poss, imp)
        if check:
            self.check(w)
        return w

    def members(self, w: Biworld, agent: str, side: str = "poss") -> list[Biworld]:
        a = self.agent_index(agent)
        mask = (w.poss if side == "poss" else w.imp)[a]
        return [self.get(w.level - 1, i) for i in bits(mask)]

    def describe(self, w: Biworld) -> str:
        """Compact human-readable form, e.g. ({p}, {{p}}, {{p},{}})."""
        obj = "{" + ",".join(sorted(self.interpretation(w.obj))) + "}"
        if w.level == 0:
            return obj
        parts = [obj]
        for a in self.agents:
            for side in ("poss", "imp"):
                inner = ", ".join(self.describe(v) for v in self.members(w, a, side))
                parts.append("{" + inner + "}")
        return "(" + ", ".join(parts) + ")"

    def _register_next(self) -> None:
        k = self.built
        worlds: list[Biworld] = []
        parents: list[int] = []
        for t, w in enumerate(self._levels[k].worlds):
            for e in self.extensions(w):
                worlds.append(e)
                parents.append(t)
        lvl = _Level(worlds, parents, self._levels[k].size)
        self._levels.append(lvl)
        lvl.completed_mask = mask_of(i for i, e in enumerate(worlds) if self.is_completed(e))


def _masks(elements: Sequence[int], digits: Sequence[int]) -> tuple[int, int]:
    if not elements:
        return 0, 0
    start = elements[0]
    if elements[-1] - start + 1 == len(elements):
        # contiguous ids: build each mask from a bit string in one pass
        rev = digits[::-1]
        p = int("".join("0" if d == IMP else "1" for d in rev), 2)
        q = int("".join("0" if d == POSS else "1" for d in rev), 2)
        return p << start, q << start
    p = q = 0
    for x, d in zip(elements, digits):
        if d != IMP:
            p |= 1 << x
        if d != POSS:
            q |= 1 << x
    return p, q


def _lazy_product(factories):
    """Cartesian product of re-creatable iterators, without materializing them."""
    if not factories:
        yield ()
        return
    head, rest = factories[0], factories[1:]
    for item in head():
        for tail in _lazy_product(rest):
            yield (item,) + tail


def _bisect_right(cumulative: list[int], r: int) -> int:
    lo, hi = 0, len(cumulative)
    while lo < hi:
        mid = (lo + hi) // 2
        if r < cumulative[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo
