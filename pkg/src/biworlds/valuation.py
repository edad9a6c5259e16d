"""Three-valued valuation of formulas on finite-level biworlds."""

from __future__ import annotations

from .core import Biworld, Universe, bits
from .errors import ForeignBiworld, UndeclaredSymbol
from .syntax import (
    And, Atom, Bottom, C, E, Formula, Implies, K, M, Not, O, Or, Top,
)
from .truth import TV, glb_t


class EvalContext:
    """A universe plus a write-once memo of computed values."""

    def __init__(self, universe: Universe):
        self.universe = universe
        self.memo: dict[tuple[Formula, Biworld], TV] = {}

    def eval(self, phi: Formula, w: Biworld) -> TV:
        return eval3(phi, w, self)


def iterate_e(group: tuple[str, ...], phi: Formula, k: int) -> Formula:
    """E_G applied k times."""
    for _ in range(k):
        phi = E(group, phi)
    return phi


def c_probe_range(w: Biworld) -> range:
    # E^k cannot be f beyond a path of length level(w), and is constant
    # for every k > level(w); probing one step further covers both.
    return range(1, w.level + 2)


def eval3(phi: Formula, w: Biworld, ctx: EvalContext) -> TV:
    if not ctx.universe.contains(w):
        raise ForeignBiworld(f"biworld {w} does not belong to this universe")
    return _eval(phi, w, ctx)


def resolves(phi: Formula, w: Biworld, ctx: EvalContext) -> bool:
    return eval3(phi, w, ctx) is not TV.U


def _agent(ctx: EvalContext, name: str) -> int:
    try:
        return ctx.universe.agent_index(name)
    except ValueError:
        raise UndeclaredSymbol(f"undeclared agent {name!r}") from None


def _members(ctx: EvalContext, w: Biworld, mask: int):
    below = w.level - 1
    return (ctx.universe.get(below, i) for i in bits(mask))


def _eval(phi: Formula, w: Biworld, ctx: EvalContext) -> TV:
    key = (phi, w)
    hit = ctx.memo.get(key)
    if hit is not None:
        return hit
    value = _compute(phi, w, ctx)
    ctx.memo.setdefault(key, value)
    return value


def _compute(phi: Formula, w: Biworld, ctx: EvalContext) -> TV:
    u = ctx.universe
    if isinstance(phi, Atom):
        if phi.name not in u.atoms:
            raise UndeclaredSymbol(f"undeclared atom {phi.name!r}")
        return TV.from_bool(w.obj >> u.atoms.index(phi.name) & 1)
    if isinstance(phi, Top):
        return TV.T
    if isinstance(phi, Bottom):
        return TV.F
    if isinstance(phi, Not):
        return _eval(phi.sub, w, ctx).inverse()
    if isinstance(phi, And):
        return glb_t((_eval(phi.left, w, ctx), _eval(phi.right, w, ctx)))
    if isinstance(phi, Or):
        return glb_t((_eval(phi.left, w, ctx).inverse(),
                      _eval(phi.right, w, ctx).inverse())).inverse()
    if isinstance(phi, Implies):
        return glb_t((_eval(phi.left, w, ctx),
                      _eval(phi.right, w, ctx).inverse())).inverse()
    if isinstance(phi, K):
        a = _agent(ctx, phi.agent)
        if w.level == 0:
            return TV.U
        return glb_t(_eval(phi.sub, v, ctx) for v in _members(ctx, w, w.poss[a]))
    if isinstance(phi, M):
        a = _agent(ctx, phi.agent)
        if w.level == 0:
            return TV.U
        return glb_t(_eval(phi.sub, v, ctx).inverse() for v in _members(ctx, w, w.imp[a]))
    if isinstance(phi, O):
        return glb_t((_eval(K(phi.agent, phi.sub), w, ctx), _eval(M(phi.agent, phi.sub), w, ctx)))
    if isinstance(phi, E):
        if len(phi.group) == 1:
            return _eval(K(phi.group[0], phi.sub), w, ctx)
        return glb_t(_eval(K(b, phi.sub), w, ctx) for b in phi.group)
    if isinstance(phi, C):
        return glb_t(_eval(iterate_e(phi.group, phi.sub, k), w, ctx) for k in c_probe_range(w))
    raise TypeError(f"not a formula: {phi!r}")
