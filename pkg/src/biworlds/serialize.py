"""Canonical JSON form of biworlds.

Level 0 is ``{"obj": ["p"]}``; higher levels add
``"agents": {"a": {"poss": [...], "imp": [...]}}`` whose lists hold the
lower-level biworlds in registry order.  The level is read off the nesting.
"""

from __future__ import annotations

import json
from typing import Any

from .core import Biworld, Universe, bits
from .errors import InvalidBiworld


def to_json(w: Biworld, universe: Universe) -> dict[str, Any]:
    out: dict[str, Any] = {"obj": sorted(universe.interpretation(w.obj))}
    if w.level == 0:
        return out
    below = w.level - 1
    agents = {}
    for a, name in enumerate(universe.agents):
        agents[name] = {
            "poss": [to_json(universe.get(below, i), universe) for i in bits(w.poss[a])],
            "imp": [to_json(universe.get(below, i), universe) for i in bits(w.imp[a])],
        }
    out["agents"] = agents
    return out


def dumps(w: Biworld, universe: Universe, indent: int | None = None) -> str:
    return json.dumps(to_json(w, universe), indent=indent, ensure_ascii=False)


def _level_of(data: Any) -> int:
    if not isinstance(data, dict) or "obj" not in data:
        raise InvalidBiworld("a biworld is an object with an 'obj' field", "format")
    if "agents" not in data:
        return 0
    for sides in data["agents"].values():
        for side in ("poss", "imp"):
            for member in sides.get(side, []):
                return _level_of(member) + 1
    raise InvalidBiworld("every agent has empty poss and imp lists", "union")


def from_json(data: Any, universe: Universe) -> Biworld:
    """Decode and validate; the lists may come in any order."""
    level = _level_of(data)
    obj_atoms = data["obj"]
    if not isinstance(obj_atoms, list):
        raise InvalidBiworld("'obj' must be a list of atoms", "format")
    try:
        obj = universe.obj_mask(obj_atoms)
    except ValueError as exc:
        raise InvalidBiworld(str(exc), "objective") from None
    if level == 0:
        return Biworld(0, obj)
    agents = data["agents"]
    if not isinstance(agents, dict) or set(agents) != set(universe.agents):
        raise InvalidBiworld(
            f"'agents' must list exactly {', '.join(universe.agents)}", "agents")
    poss, imp = [], []
    for name in universe.agents:
        masks = []
        for side in ("poss", "imp"):
            m = 0
            for member in agents[name].get(side, []):
                v = from_json(member, universe)
                if v.level != level - 1:
                    raise InvalidBiworld("members of one biworld must share a level", "format")
                m |= 1 << universe.id_of(v)
            masks.append(m)
        poss.append(masks[0])
        imp.append(masks[1])
    w = Biworld(level, obj, tuple(poss), tuple(imp))
    universe.check(w)
    return w


def loads(text: str, universe: Universe) -> Biworld:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidBiworld(f"malformed JSON: {exc}", "format") from None
    return from_json(data, universe)
