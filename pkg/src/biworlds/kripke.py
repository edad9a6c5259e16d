"""Finite canonical Kripke structures over completed biworlds.

The k-structure has the completed level-(k+1) biworlds as worlds; w' is
A-accessible from w when the level-k restriction of w' lies in A's possible
set of w.  A completed level-(k+1) biworld is determined by its objective
and, per agent, an arbitrary set of level-k biworlds (the impossible set is
the complement), so exhaustive structures are indexed arithmetically.

Truth sets are computed globally, one boolean array per subformula.
Accessibility is never materialized: K_A phi holds at w iff A's possible
set of w avoids the restriction ids of the worlds falsifying phi.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .core import Biworld, Universe, bits, mask_of
from .errors import (
    CapExceeded, DepthExceeded, InfiniteDepth, SampledStructure, UndeclaredSymbol, UnbuiltLevel,
)
from .syntax import (
    And, Atom, Bottom, C, E, Formula, Implies, K, M, Not, O, Or, Top, modal_depth,
)
from .truth import TV
from .valuation import EvalContext, eval3


@dataclass
class CanonicalStructure:
    universe: Universe
    k: int
    obj: np.ndarray
    poss: list[np.ndarray]
    rid: np.ndarray
    exhaustive: bool
    # closed under accessibility within the full structure (allows C)
    closed: bool
    kind: str = "exhaustive"
    _truth: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.obj)

    @property
    def size(self) -> int:
        return len(self.obj)

    def world(self, i: int) -> Biworld:
        full = self.universe.all_mask(self.k)
        poss = tuple(int(p[i]) for p in self.poss)
        return Biworld(self.k + 1, int(self.obj[i]), poss, tuple(full & ~p for p in poss))

    def worlds(self):
        return (self.world(i) for i in range(self.size))

    def index_of(self, w: Biworld) -> int:
        if w.level != self.k + 1 or not self.universe.is_completed(w):
            raise ValueError("not a world of this structure")
        lookup = getattr(self, "_lookup", None)
        if lookup is None:
            lookup = {self.world(i): i for i in range(self.size)}
            self._lookup = lookup
        try:
            return lookup[w]
        except KeyError:
            raise ValueError("biworld is not among the structure's worlds") from None

    def present_rids(self) -> int:
        """Mask of level-k ids that occur as a restriction of some world."""
        return mask_of(int(t) for t in np.unique(self.rid))

    def subset(self, keep: np.ndarray, kind: str, closed: bool) -> CanonicalStructure:
        return CanonicalStructure(
            self.universe, self.k, self.obj[keep], [p[keep] for p in self.poss],
            self.rid[keep], exhaustive=False, closed=closed, kind=kind,
        )


def _dtype_for(bits_needed: int):
    return np.uint64 if bits_needed <= 63 else object


def canonical_worlds(universe: Universe, k: int, cap: int | None = None,
                     sample: int | None = None, seed: int = 0) -> CanonicalStructure:
    """Build the k-structure, exhaustively or (with ``sample``) by sampling."""
    if k > universe.built:
        raise UnbuiltLevel(k, universe.built)
    cap = universe.cap if cap is None else cap
    n_k = universe.size(k)
    na = universe.n_agents
    if sample is None:
        n0 = universe.size(0)
        count = n0 * 2 ** (n_k * na)
        if count > cap:
            raise CapExceeded(k + 1, count, cap)
        width = n_k * na
        idx = np.arange(count, dtype=np.uint64)
        obj = idx >> np.uint64(width)
        low = np.uint64((1 << n_k) - 1)
        poss = [(idx >> np.uint64(a * n_k)) & low for a in range(na)]
        rid = _restriction_ids(universe, k, obj, poss)
        return CanonicalStructure(universe, k, obj, poss, rid, exhaustive=True, closed=True)
    return _sampled(universe, k, sample, seed)


def _restriction_ids(universe: Universe, k: int, obj: np.ndarray, poss: list[np.ndarray]) -> np.ndarray:
    if k == 0:
        return obj.astype(np.int64)
    full = np.uint64(universe.all_mask(k))
    n_below = universe.size(k - 1)
    cols = [obj]
    for p in poss:
        q = full & ~p
        for side in (p, q):
            img = np.zeros(len(obj), dtype=np.uint64)
            for t in range(n_below):
                hit = (side & np.uint64(universe.fiber_mask(k, t))) != 0
                img |= hit.astype(np.uint64) << np.uint64(t)
            cols.append(img)
    table = np.stack(cols, axis=1)
    uniq, inverse = np.unique(table, axis=0, return_inverse=True)
    ids = []
    for row in uniq:
        row = [int(x) for x in row]
        poss_img = tuple(row[1 + 2 * a] for a in range(universe.n_agents))
        imp_img = tuple(row[2 + 2 * a] for a in range(universe.n_agents))
        ids.append(universe.id_of(Biworld(k, row[0], poss_img, imp_img)))
    return np.asarray(ids, dtype=np.int64)[inverse.reshape(-1)]


def _sampled(universe: Universe, k: int, n: int, seed: int) -> CanonicalStructure:
    rng = random.Random(seed)
    level_k = universe.level(k)
    chosen: dict[Biworld, None] = {}
    for v in level_k[: n]:
        chosen.setdefault(universe.completed_extension(v))
    attempts = 0
    while len(chosen) < n and attempts < 20 * n:
        attempts += 1
        chosen.setdefault(universe.random_completed_extension(rng.choice(level_k), rng))
    worlds = list(chosen)
    dt = _dtype_for(universe.size(k))
    obj = np.asarray([w.obj for w in worlds], dtype=np.uint64)
    poss = [np.asarray([w.poss[a] for w in worlds], dtype=dt) for a in range(universe.n_agents)]
    rid = np.asarray([universe.id_of(universe.restrict(w, k)) for w in worlds], dtype=np.int64)
    return CanonicalStructure(universe, k, obj, poss, rid, exhaustive=False, closed=False,
                              kind="sampled")


def accessible(w: Biworld, w2: Biworld, agent: str, structure: CanonicalStructure) -> bool:
    u = structure.universe
    t = u.id_of(u.restrict(w2, structure.k))
    return bool(w.poss[u.agent_index(agent)] >> t & 1)


# -- two-valued evaluation ----------------------------------------------------


def _mask_array(structure: CanonicalStructure, truth: np.ndarray) -> int:
    """Level-k ids carried by the worlds where ``truth`` holds."""
    return mask_of(int(t) for t in np.unique(structure.rid[truth]))


def _disjoint(poss: np.ndarray, mask: int) -> np.ndarray:
    if poss.dtype == object:
        return np.fromiter((int(p) & mask == 0 for p in poss), dtype=bool, count=len(poss))
    return (poss & np.uint64(mask)) == 0


def _contains(poss: np.ndarray, mask: int) -> np.ndarray:
    if poss.dtype == object:
        return np.fromiter((int(p) & mask == mask for p in poss), dtype=bool, count=len(poss))
    m = np.uint64(mask)
    return (poss & m) == m


def _check_admissible(phi: Formula, structure: CanonicalStructure, check_depth: bool) -> None:
    md = modal_depth(phi)
    if not md.is_finite:
        if not structure.closed:
            raise SampledStructure("common knowledge needs an exhaustive structure")
        return
    if check_depth and md.finite > structure.k + 1:
        raise DepthExceeded(
            f"modal depth {md} exceeds what level-{structure.k + 1} worlds resolve")


def truth_set(phi: Formula, structure: CanonicalStructure, check_depth: bool = True) -> np.ndarray:
    """Boolean array: which worlds of the structure satisfy ``phi``."""
    _check_admissible(phi, structure, check_depth)
    return _truth(phi, structure)


def _truth(phi: Formula, s: CanonicalStructure) -> np.ndarray:
    hit = s._truth.get(phi)
    if hit is not None:
        return hit
    value = _compute(phi, s)
    value.setflags(write=False)
    s._truth[phi] = value
    return value


def _compute(phi: Formula, s: CanonicalStructure) -> np.ndarray:
    u = s.universe
    n = s.size
    if isinstance(phi, Atom):
        if phi.name not in u.atoms:
            raise UndeclaredSymbol(f"undeclared atom {phi.name!r}")
        bit = np.uint64(1 << u.atoms.index(phi.name))
        return (s.obj & bit) != 0
    if isinstance(phi, Top):
        return np.ones(n, dtype=bool)
    if isinstance(phi, Bottom):
        return np.zeros(n, dtype=bool)
    if isinstance(phi, Not):
        return ~_truth(phi.sub, s)
    if isinstance(phi, And):
        return _truth(phi.left, s) & _truth(phi.right, s)
    if isinstance(phi, Or):
        return _truth(phi.left, s) | _truth(phi.right, s)
    if isinstance(phi, Implies):
        return ~_truth(phi.left, s) | _truth(phi.right, s)
    if isinstance(phi, K):
        bad = _mask_array(s, ~_truth(phi.sub, s))
        return _disjoint(s.poss[_agent(u, phi.agent)], bad)
    if isinstance(phi, M):
        good = _mask_array(s, _truth(phi.sub, s))
        return _contains(s.poss[_agent(u, phi.agent)], good)
    if isinstance(phi, O):
        return _truth(K(phi.agent, phi.sub), s) & _truth(M(phi.agent, phi.sub), s)
    if isinstance(phi, E):
        return _everybody(s, phi.group, _truth(phi.sub, s))
    if isinstance(phi, C):
        base = _truth(phi.sub, s)
        x = np.ones(n, dtype=bool)
        while True:
            nxt = _everybody(s, phi.group, base & x)
            if np.array_equal(nxt, x):
                return x
            x = nxt
    raise TypeError(f"not a formula: {phi!r}")


def _everybody(s: CanonicalStructure, group, truth: np.ndarray) -> np.ndarray:
    bad = _mask_array(s, ~truth)
    out = np.ones(s.size, dtype=bool)
    for b in group:
        out &= _disjoint(s.poss[_agent(s.universe, b)], bad)
    return out


def _agent(u: Universe, name: str) -> int:
    try:
        return u.agent_index(name)
    except ValueError:
        raise UndeclaredSymbol(f"undeclared agent {name!r}") from None


def kripke_eval(phi: Formula, w: Biworld, structure: CanonicalStructure,
                check_depth: bool = True) -> bool:
    return bool(truth_set(phi, structure, check_depth)[structure.index_of(w)])


@dataclass(frozen=True)
class Entailment:
    holds: bool
    countermodel: Biworld | None
    exhaustive: bool


def entails(gamma, phi: Formula, structure: CanonicalStructure,
            check_depth: bool = True) -> Entailment:
    """Does every world satisfying all of ``gamma`` satisfy ``phi``?

    On a sampled structure a positive answer is only advisory.
    """
    ok = np.ones(structure.size, dtype=bool)
    for g in gamma:
        ok &= truth_set(g, structure, check_depth)
    bad = ok & ~truth_set(phi, structure, check_depth)
    hits = np.flatnonzero(bad)
    witness = structure.world(int(hits[0])) if len(hits) else None
    return Entailment(witness is None, witness, structure.exhaustive)


# -- only knowing --------------------------------------------------------------


def _truth_masks(phi: Formula, level: int, ctx: EvalContext) -> tuple[int, int, int]:
    t = f = u = 0
    for i, v in enumerate(ctx.universe.level(level)):
        value = eval3(phi, v, ctx)
        if value is TV.T:
            t |= 1 << i
        elif value is TV.F:
            f |= 1 << i
        else:
            u |= 1 << i
    return t, f, u


def _finite_md(phi: Formula) -> int:
    md = modal_depth(phi)
    if not md.is_finite:
        raise InfiniteDepth("only-knowing constructions need a formula without C")
    return md.finite


def _with_others(universe: Universe, agent: str, obj: int, level: int, poss: int, imp: int) -> Biworld:
    # agents other than the one doing the only-knowing consider everything possible
    full = universe.all_mask(level - 1)
    a = _agent(universe, agent)
    p = tuple(poss if b == a else full for b in range(universe.n_agents))
    q = tuple(imp if b == a else 0 for b in range(universe.n_agents))
    return Biworld(level, obj, p, q)


def only_knows_world(phi: Formula, agent: str, objective, universe: Universe,
                     ctx: EvalContext | None = None) -> Biworld:
    """(objective, worlds where phi is t, worlds where phi is f) at level MD(phi)+1."""
    k = _finite_md(phi)
    if k > universe.built:
        raise UnbuiltLevel(k, universe.built)
    ctx = ctx or EvalContext(universe)
    t, f, u = _truth_masks(phi, k, ctx)
    if u:
        raise AssertionError("a formula is unresolved at its own modal depth")
    return _with_others(universe, agent, universe.obj_mask(objective), k + 1, t, f)


def pi_only_knows_world(phi: Formula, agent: str, objective, universe: Universe,
                        ctx: EvalContext | None = None) -> Biworld:
    """Only knowing of phi & K[agent] phi, one level higher."""
    k = _finite_md(phi) + 1
    if k > universe.built:
        raise UnbuiltLevel(k, universe.built)
    ctx = ctx or EvalContext(universe)
    t, _, _ = _truth_masks(And(phi, K(agent, phi)), k, ctx)
    full = universe.all_mask(k)
    return _with_others(universe, agent, universe.obj_mask(objective), k + 1, t, full & ~t)


# -- positive introspection ----------------------------------------------------


def pi_worlds(structure: CanonicalStructure) -> np.ndarray:
    """Worlds where two A-steps always shrink to one A-step, for every A."""
    s = structure
    present = s.present_rids()
    ok = np.ones(s.size, dtype=bool)
    n_k = s.universe.size(s.k)
    for p in s.poss:
        # reach[t]: level-k ids reachable in one step from some world restricting to t
        reach = [0] * n_k
        for t, mask in _group_or(s.rid, p):
            reach[t] = mask & present
        for t in range(n_k):
            if not reach[t]:
                continue
            # worlds having t possible must also have all of reach[t] possible
            has_t = ~_disjoint(p, 1 << t)
            ok &= ~has_t | _contains(p, reach[t])
    return ok


def _group_or(rid: np.ndarray, poss: np.ndarray):
    if len(rid) == 0:
        return
    order = np.argsort(rid, kind="stable")
    rs = rid[order]
    ps = poss[order]
    starts = np.flatnonzero(np.r_[True, rs[1:] != rs[:-1]])
    ends = np.r_[starts[1:], len(rs)]
    for a, b in zip(starts, ends):
        if ps.dtype == object:
            m = 0
            for x in ps[a:b]:
                m |= int(x)
        else:
            m = int(np.bitwise_or.reduce(ps[a:b]))
        yield int(rs[a]), m


def pi_filter(structure: CanonicalStructure) -> CanonicalStructure:
    """Keep the worlds that are PI and from which only PI worlds are reachable."""
    s = structure
    bad = ~pi_worlds(s)
    while True:
        bad_mask = _mask_array(s, bad)
        grown = bad.copy()
        for p in s.poss:
            grown |= ~_disjoint(p, bad_mask)
        if np.array_equal(grown, bad):
            break
        bad = grown
    return s.subset(~bad, kind="pi", closed=True)


def graded_pi(w: Biworld, universe: Universe) -> bool:
    """PI read along levels, over everything reachable from ``w``.

    For each agent and each v possible at w, everything v holds possible
    must be possible at the restriction of w to v's level.
    """
    seen: set[Biworld] = set()
    stack = [w]
    while stack:
        x = stack.pop()
        if x in seen or x.level < 2:
            continue
        seen.add(x)
        below = universe.restrict(x, x.level - 1)
        for a in range(universe.n_agents):
            for i in bits(x.poss[a]):
                v = universe.get(x.level - 1, i)
                if v.poss[a] & ~below.poss[a]:
                    return False
                stack.append(v)
    return True
