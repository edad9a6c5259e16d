"""Rule-defined omega-biworld families.

A family names an objective and, per agent, two set expressions.  At level
k+1 the family denotes (objective, [[poss]]_k, [[imp]]_k) where
``PrevOf(g)`` is the singleton holding g's level-k member and ``All`` is
every level-k biworld.  The finite prefixes form a precision chain whose
limit is the omega-biworld.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Union

from .core import Biworld, Universe, count_levels
from .errors import CapExceeded, UnbuiltLevel, UnknownFamily, UnsupportedRule
from .syntax import Atom, C, Formula
from .truth import TV, lub_p
from .valuation import EvalContext, eval3


@dataclass(frozen=True)
class PrevOf:
    family: str


@dataclass(frozen=True)
class All:
    pass


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Union_:
    left: SetExpr
    right: SetExpr


@dataclass(frozen=True)
class Diff:
    left: SetExpr
    right: SetExpr


SetExpr = Union[PrevOf, All, Empty, Union_, Diff]


@dataclass(frozen=True)
class SymbolicFamily:
    name: str
    obj: frozenset[str]
    rules: dict[str, tuple[SetExpr, SetExpr]]

    def __hash__(self):
        return hash((self.name, self.obj))


def referenced(expr: SetExpr) -> set[str]:
    if isinstance(expr, PrevOf):
        return {expr.family}
    if isinstance(expr, (Union_, Diff)):
        return referenced(expr.left) | referenced(expr.right)
    return set()


def render_set(expr: SetExpr) -> str:
    if isinstance(expr, PrevOf):
        return "{" + expr.family + "}"
    if isinstance(expr, All):
        return "All"
    if isinstance(expr, Empty):
        return "{}"
    if isinstance(expr, Union_):
        return f"({render_set(expr.left)} ∪ {render_set(expr.right)})"
    return f"({render_set(expr.left)} \\ {render_set(expr.right)})"


class SymbolicSystem:
    """Mutually referencing families over one universe."""

    def __init__(self, families: Iterable[SymbolicFamily], universe: Universe):
        self.families = {f.name: f for f in families}
        self.universe = universe
        self.ctx = EvalContext(universe)
        self._cache: dict[tuple[str, int], Biworld] = {}
        for f in self.families.values():
            if set(f.rules) != set(universe.agents):
                raise ValueError(f"family {f.name} must give rules for every agent")
            for poss, imp in f.rules.values():
                for name in referenced(poss) | referenced(imp):
                    if name not in self.families:
                        raise UnknownFamily(f"family {f.name} refers to unknown family {name}")

    def family(self, name: str) -> SymbolicFamily:
        try:
            return self.families[name]
        except KeyError:
            raise UnknownFamily(f"no family named {name!r}") from None

    def without(self, *names: str) -> SymbolicSystem:
        """A copy with some families removed; dangling references are dropped."""
        keep = [f for n, f in self.families.items() if n not in names]
        pruned = []
        for f in keep:
            rules = {a: (_prune(p, names), _prune(q, names)) for a, (p, q) in f.rules.items()}
            pruned.append(SymbolicFamily(f.name, f.obj, rules))
        return SymbolicSystem(pruned, self.universe)

    # -- materialization ------------------------------------------------------

    def _denote(self, expr: SetExpr, level: int) -> int:
        u = self.universe
        if isinstance(expr, PrevOf):
            return 1 << u.id_of(self.materialize(expr.family, level))
        if isinstance(expr, All):
            return u.all_mask(level)
        if isinstance(expr, Empty):
            return 0
        if isinstance(expr, Union_):
            return self._denote(expr.left, level) | self._denote(expr.right, level)
        return self._denote(expr.left, level) & ~self._denote(expr.right, level)

    def materialize(self, name: str, k: int) -> Biworld:
        key = (name, k)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        fam = self.family(name)
        u = self.universe
        obj = u.obj_mask(fam.obj)
        if k == 0:
            w = Biworld(0, obj)
        else:
            if k - 1 > u.built:
                counts = count_levels(len(u.atoms), u.n_agents, k - 1)
                size = counts[k - 1].total
                if size > u.cap:
                    raise CapExceeded(k - 1, size, u.cap)
                raise UnbuiltLevel(k - 1, u.built)
            poss = tuple(self._denote(fam.rules[a][0], k - 1) for a in u.agents)
            imp = tuple(self._denote(fam.rules[a][1], k - 1) for a in u.agents)
            w = Biworld(k, obj, poss, imp)
            u.check(w)
            if u.restrict(w, k - 1) != self.materialize(name, k - 1):
                raise ValueError(f"family {name} does not form a precision chain at level {k}")
        self._cache[key] = w
        return w

    def prefixes(self, name: str, k_max: int) -> list[Biworld]:
        """Materializations 0..k_max, stopping early at the first unbuildable level."""
        out = []
        for k in range(k_max + 1):
            try:
                out.append(self.materialize(name, k))
            except (CapExceeded, UnbuiltLevel):
                break
        return out

    # -- evaluation -----------------------------------------------------------

    def eval_omega(self, phi: Formula, name: str, k_max: int = 3) -> TV:
        """Join of the values along the materializable prefix (u if none resolves)."""
        return lub_p(eval3(phi, w, self.ctx) for w in self.prefixes(name, k_max))

    def closure(self, name: str, group: Iterable[str]) -> list[str]:
        """Families reachable in one or more PrevOf steps through the group."""
        group = list(group)
        seen: list[str] = []
        frontier = [name]
        visited = set()
        while frontier:
            cur = frontier.pop()
            if cur in visited:
                continue
            visited.add(cur)
            fam = self.family(cur)
            for a in group:
                if a not in fam.rules:
                    raise UnknownFamily(f"family {cur} has no rule for agent {a}")
                poss = fam.rules[a][0]
                if not _finite_rule(poss):
                    raise UnsupportedRule(
                        f"family {cur}: possible set for {a} is not built from single families")
                for nxt in sorted(referenced(poss)):
                    if nxt not in seen:
                        seen.append(nxt)
                    frontier.append(nxt)
        return seen

    def eval_cg_closure(self, phi: Formula, group: Iterable[str], name: str, k_max: int = 3) -> TV:
        """C_G phi at a family whose G-reachable families form a finite set.

        Common knowledge then reduces to phi holding at each reachable family.
        """
        values = [self.eval_omega(phi, g, k_max) for g in self.closure(name, group)]
        if any(v is TV.F for v in values):
            return TV.F
        if any(v is TV.U for v in values):
            return TV.U
        return TV.T

    # -- serialization --------------------------------------------------------

    def to_json(self) -> list[dict[str, Any]]:
        return [family_to_json(f) for f in self.families.values()]


def _finite_rule(expr: SetExpr) -> bool:
    if isinstance(expr, (PrevOf, Empty)):
        return True
    if isinstance(expr, Union_):
        return _finite_rule(expr.left) and _finite_rule(expr.right)
    return False


def _prune(expr: SetExpr, names) -> SetExpr:
    if isinstance(expr, PrevOf):
        return Empty() if expr.family in names else expr
    if isinstance(expr, Union_):
        return Union_(_prune(expr.left, names), _prune(expr.right, names))
    if isinstance(expr, Diff):
        return Diff(_prune(expr.left, names), _prune(expr.right, names))
    return expr


def cg_survivors(phi: Formula, group: Iterable[str], k: int, universe: Universe,
                 ctx: EvalContext | None = None) -> list[Biworld]:
    """Level-k biworlds where C_G phi is not f.

    One level above the registry the search runs over extensions of the
    survivors one level down, which contain every survivor because values
    only gain precision along extensions.
    """
    ctx = ctx or EvalContext(universe)
    cg = C(tuple(group), phi)
    if k <= universe.built:
        pool: Iterable[Biworld] = universe.level(k)
    elif k == universe.built + 1:
        below = cg_survivors(phi, group, k - 1, universe, ctx)
        pool = (e for v in below for e in universe.extensions(v))
    else:
        raise UnbuiltLevel(k - 1, universe.built)
    return [w for w in pool if eval3(cg, w, ctx) is not TV.F]


# -- standard families ---------------------------------------------------------


def example_system(universe: Universe, agent: str | None = None,
                   with_vacuous: bool = False) -> SymbolicSystem:
    """The families v (objective {p}) and u (objective {}) that point at v.

    ``with_vacuous`` adds z_p and z_0: families that hold nothing possible.
    """
    agent = agent or universe.agents[0]
    first = universe.atoms[0]

    def rules(poss):
        return {a: (poss if a == agent else All(), All() if a == agent else Empty())
                for a in universe.agents}

    fams = [
        SymbolicFamily("v", frozenset({first}), rules(PrevOf("v"))),
        SymbolicFamily("u", frozenset(), rules(PrevOf("v"))),
    ]
    if with_vacuous:
        fams += [
            SymbolicFamily("z_p", frozenset({first}), rules(Empty())),
            SymbolicFamily("z_0", frozenset(), rules(Empty())),
        ]
    return SymbolicSystem(fams, universe)


def example3_world(system: SymbolicSystem, objective: Iterable[str] | None = None,
                   agent: str | None = None) -> dict[str, Any]:
    """Describe the top world that only knows ~C_G p, with its verdict and evidence.

    The top world holds every omega-biworld possible except v and u, which
    it holds impossible.  M_A ~C_G p is checked here through v and u.  K_A ~C_G p
    needs v and u to be the only omega-biworlds satisfying C_G p; that claim
    cannot be settled finitely, so the verdict is conditional on it.  The
    finite evidence lists the survivors of C_G p at levels 1 and 2.
    """
    u = system.universe
    agent = agent or u.agents[0]
    atom = u.atoms[0]
    phi = Atom(atom)
    group = (agent,)
    if objective is None:
        objective = {atom}
    objective = sorted(objective)
    top = {
        "obj": objective,
        "agent": agent,
        "poss": "All \\ {v, u}",
        "imp": "{v, u}",
        "formula": f"O[{agent}] ~C[{{{agent}}}] {atom}",
    }
    if "v" not in system.families or "u" not in system.families:
        return {"world": top, "verdict": "unsupported",
                "reason": "the system lacks the v or u family"}
    try:
        v_cg = system.eval_cg_closure(phi, group, "v")
        u_cg = system.eval_cg_closure(phi, group, "u")
    except UnsupportedRule as exc:
        return {"world": top, "verdict": "unsupported", "reason": str(exc)}
    # M_A ~C_G p: inverse of ~C_G p at every impossible family
    m_part = TV.from_bool(v_cg is TV.T and u_cg is TV.T) if TV.U not in (v_cg, u_cg) else TV.U

    evidence = []
    ctx = system.ctx
    for k in (1, 2):
        try:
            survivors = cg_survivors(phi, group, k, u, ctx)
        except (UnbuiltLevel, CapExceeded):
            continue
        marks = {}
        for name in ("v", "u"):
            try:
                marks[name] = system.materialize(name, k)
            except (UnbuiltLevel, CapExceeded):
                pass
        prefix_of = {w: n for n, w in marks.items()}
        evidence.append({
            "level": k,
            "survivors": len(survivors),
            "prefixes_present": sorted(n for n, w in marks.items() if w in set(survivors)),
            "others": sum(1 for w in survivors if w not in prefix_of),
        })

    # any family with nothing possible satisfies C_G p vacuously
    probe = example_system(u, agent, with_vacuous=True)
    counter = [n for n in ("z_p", "z_0")
               if probe.eval_cg_closure(phi, group, n) is TV.T]

    return {
        "world": top,
        "verdict": "t (conditional)" if m_part is TV.T else str(m_part),
        "M_part": str(m_part),
        "K_part": "t if v and u are the only omega-biworlds satisfying "
                  f"C[{{{agent}}}] {atom}",
        "C_at_v": str(v_cg),
        "C_at_u": str(u_cg),
        "evidence": evidence,
        "condition_counterexamples": counter,
    }


# -- JSON ----------------------------------------------------------------------


def set_from_json(data: Any) -> SetExpr:
    if data == "all":
        return All()
    if data == "empty":
        return Empty()
    if isinstance(data, dict) and len(data) == 1:
        (key, val), = data.items()
        if key == "prev" and isinstance(val, str):
            return PrevOf(val)
        if key in ("union", "diff") and isinstance(val, list) and val:
            parts = [set_from_json(x) for x in val]
            if key == "diff":
                if len(parts) != 2:
                    raise ValueError("diff takes exactly two operands")
                return Diff(parts[0], parts[1])
            out = parts[0]
            for p in parts[1:]:
                out = Union_(out, p)
            return out
    raise ValueError(f"not a set expression: {data!r}")


def set_to_json(expr: SetExpr) -> Any:
    if isinstance(expr, All):
        return "all"
    if isinstance(expr, Empty):
        return "empty"
    if isinstance(expr, PrevOf):
        return {"prev": expr.family}
    if isinstance(expr, Union_):
        return {"union": [set_to_json(expr.left), set_to_json(expr.right)]}
    return {"diff": [set_to_json(expr.left), set_to_json(expr.right)]}


def family_from_json(data: dict[str, Any]) -> SymbolicFamily:
    rules = {a: (set_from_json(r["poss"]), set_from_json(r["imp"]))
             for a, r in data["rules"].items()}
    return SymbolicFamily(data["name"], frozenset(data["obj"]), rules)


def family_to_json(fam: SymbolicFamily) -> dict[str, Any]:
    return {
        "name": fam.name,
        "obj": sorted(fam.obj),
        "rules": {a: {"poss": set_to_json(p), "imp": set_to_json(q)}
                  for a, (p, q) in sorted(fam.rules.items())},
    }


def load_system(text: str, universe: Universe) -> SymbolicSystem:
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return SymbolicSystem([family_from_json(d) for d in data], universe)
