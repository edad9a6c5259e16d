import json

import pytest

from biworlds.core import Universe
from biworlds.errors import CapExceeded, UnknownFamily, UnsupportedRule
from biworlds.symbolic import (
    All, Diff, Empty, PrevOf, SymbolicFamily, SymbolicSystem, Union_, cg_survivors,
    example3_world, example_system, family_from_json, family_to_json, load_system, render_set,
)
from biworlds.syntax import Atom, E, parse
from biworlds.truth import TV
from biworlds.valuation import EvalContext, eval3


@pytest.fixture(scope="module")
def system(u1):
    return example_system(u1)


def test_materialize_examples(u1, system):
    assert system.materialize("v", 0) == u1.objective(["p"])
    assert u1.describe(system.materialize("v", 1)) == "({p}, {{p}}, {{}, {p}})"
    assert u1.describe(system.materialize("u", 1)) == "({}, {{p}}, {{}, {p}})"
    v2 = system.materialize("v", 2)
    assert u1.members(v2, "a", "poss") == [system.materialize("v", 1)]
    assert v2.imp[0] == u1.all_mask(1)


def test_materialize_beyond_cap(system):
    with pytest.raises(CapExceeded) as info:
        system.materialize("v", 3)
    assert info.value.count == 30_233_088


def test_chain_and_incompletedness(u1, system):
    for name in ("v", "u"):
        chain = system.prefixes(name, 5)
        assert len(chain) == 3
        for lo, hi in zip(chain, chain[1:]):
            assert u1.leq_p(lo, hi)
    for k, w in enumerate(system.prefixes("v", 3)):
        assert u1.incompleted_oracle(w)
        assert not u1.is_completed(w)


def test_eval_omega_examples(system):
    assert system.eval_omega(parse("K[a] p"), "v", 2) is TV.T
    assert system.eval_omega(parse("p"), "u", 1) is TV.F
    assert system.eval_omega(parse("C[{a}] p"), "v", 3) is TV.U


def test_eval_omega_monotone_in_k(system):
    for text in ("K[a] p", "M[a] p", "K[a] K[a] p", "C[{a}] p", "~M[a] ~p"):
        phi = parse(text)
        values = [system.eval_omega(phi, name, k) for name in ("v",) for k in range(4)]
        for a, b in zip(values, values[1:]):
            assert a.leq_p(b)


def test_cg_closure_examples(system):
    assert system.eval_cg_closure(Atom("p"), ["a"], "v") is TV.T
    assert system.eval_cg_closure(Atom("p"), ["a"], "u") is TV.T
    assert system.closure("u", ["a"]) == ["v"]


def test_cg_closure_false_on_other_atom():
    u = Universe(["p", "q"], ["a"], 1)
    system = example_system(u)
    assert system.eval_cg_closure(Atom("q"), ["a"], "v") is TV.F


def test_cg_closure_consistent_with_everybody_knows(u1, system):
    ctx = EvalContext(u1)
    for name in ("v", "u"):
        assert system.eval_cg_closure(Atom("p"), ["a"], name) is TV.T
        for w in system.prefixes(name, 3):
            assert eval3(E(("a",), Atom("p")), w, ctx) is not TV.F


def test_cg_closure_rejects_open_rules(u1):
    fam = SymbolicFamily("w", frozenset({"p"}), {"a": (Diff(All(), PrevOf("w")), PrevOf("w"))})
    with pytest.raises(UnsupportedRule):
        SymbolicSystem([fam], u1).eval_cg_closure(Atom("p"), ["a"], "w")


def test_unknown_family(u1, system):
    with pytest.raises(UnknownFamily):
        system.materialize("nope", 1)
    with pytest.raises(UnknownFamily):
        SymbolicSystem([SymbolicFamily("x", frozenset(), {"a": (PrevOf("y"), All())})], u1)


def test_survivor_examples(u1):
    ctx = EvalContext(u1)
    s1 = cg_survivors(Atom("p"), ["a"], 1, u1, ctx)
    assert len(s1) == 6
    assert set(s1) == {w for w in u1.level(1) if w.poss[0] & 0b01 == 0}
    assert set(cg_survivors(Atom("p"), ["a"], 0, u1, ctx)) == set(u1.level(0))
    contradiction = cg_survivors(parse("p & ~p"), ["a"], 1, u1, ctx)
    assert set(contradiction) == {w for w in u1.level(1) if w.poss[0] == 0}


def test_survivor_shrinkage(u1, system):
    ctx = EvalContext(u1)
    s1 = set(cg_survivors(Atom("p"), ["a"], 1, u1, ctx))
    s2 = cg_survivors(Atom("p"), ["a"], 2, u1, ctx)
    assert len(s2) == 24
    assert {u1.restrict(w, 1) for w in s2} <= s1
    for name in ("v", "u"):
        assert system.materialize(name, 1) in s1
        assert system.materialize(name, 2) in set(s2)


def test_example3_default(system):
    out = example3_world(system)
    assert out["verdict"] == "t (conditional)"
    assert out["world"]["poss"] == "All \\ {v, u}"
    levels = {e["level"]: e for e in out["evidence"]}
    assert levels[1]["survivors"] == 6 and levels[2]["survivors"] == 24
    assert levels[1]["prefixes_present"] == ["u", "v"]
    # vacuous families satisfy C_G p too, so the condition does not hold
    assert out["condition_counterexamples"] == ["z_p", "z_0"]


def test_example3_without_u(system):
    assert example3_world(system.without("u"))["verdict"] == "unsupported"


def test_example3_other_objective(system):
    out = example3_world(system, objective=[])
    assert out["verdict"] == "t (conditional)"
    assert out["world"]["obj"] == []


def test_family_json_round_trip(u1, system):
    for fam in system.families.values():
        assert family_from_json(family_to_json(fam)) == fam
    text = json.dumps([family_to_json(f) for f in system.families.values()])
    again = load_system(text, u1)
    assert again.materialize("u", 2) == system.materialize("u", 2)


def test_set_expression_json():
    from biworlds.symbolic import set_from_json, set_to_json
    expr = set_from_json({"diff": ["all", {"union": [{"prev": "v"}, {"prev": "u"}, "empty"]}]})
    assert expr == Diff(All(), Union_(Union_(PrevOf("v"), PrevOf("u")), Empty()))
    assert set_from_json(set_to_json(expr)) == expr
    assert render_set(expr) == "(All \\ (({v} ∪ {u}) ∪ {}))"
    with pytest.raises(ValueError):
        set_from_json({"diff": ["all"]})
