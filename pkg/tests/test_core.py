import itertools
import random

import pytest

from biworlds.core import Biworld, Universe, bits, count_levels, mask_of
from biworlds.errors import CapExceeded, InvalidBiworld, NotCompleted, UnbuiltLevel
from biworlds.serialize import dumps, from_json, loads, to_json


def v1(u):
    p, e = u.objective(["p"]), u.objective()
    return u.make(["p"], {"a": ([p], [p, e])})


def known_p(u):
    p, e = u.objective(["p"]), u.objective()
    return u.make(["p"], {"a": ([p], [e])})


def brute_next_level(u, k):
    """Every (obj, poss, imp) over level k meeting both conditions, one agent."""
    ids = range(u.size(k))
    completed = {i for i in ids if k > 0 and u.is_completed(u.get(k, i))}
    subsets = [frozenset(c) for r in range(len(ids) + 1) for c in itertools.combinations(ids, r)]
    out = set()
    for obj in range(u.size(0)):
        for poss in subsets:
            for imp in subsets:
                if poss | imp == set(ids) and not (poss & imp & completed):
                    out.add(Biworld(k + 1, obj, (mask_of(poss),), (mask_of(imp),)))
    return out


# -- counting ------------------------------------------------------------------


def test_counts_one_atom():
    c = count_levels(1, 1, 2)
    assert [(x.total, x.completed, x.incompleted) for x in c] == \
        [(2, 0, 2), (18, 8, 10), (30_233_088, 524_288, 29_708_800)]


def test_counts_empty_vocabulary():
    c = count_levels(0, 1, 3)
    assert [x.total for x in c] == [1, 3, 12, 20736]
    assert [x.completed for x in c] == [0, 2, 8, 4096]


def test_single_agent_level_one_is_n_times_3_to_n():
    for n_atoms in range(4):
        n = 2 ** n_atoms
        assert count_levels(n_atoms, 1, 1)[1].total == n * 3 ** n


def test_counts_two_agents_match_enumeration():
    u = Universe(["p"], ["a", "b"], 1)
    assert u.size(1) == count_levels(1, 2, 1)[1].total == 2 * 3 ** 4
    assert sum(u.is_completed(w) for w in u.level(1)) == count_levels(1, 2, 1)[1].completed


def test_counts_need_an_agent():
    with pytest.raises(ValueError):
        count_levels(1, 0, 1)
    with pytest.raises(ValueError):
        Universe(["p"], [], 1)


# -- registries ----------------------------------------------------------------


def test_level_one_registry_matches_brute_force(u1):
    assert set(u1.level(1)) == brute_next_level(u1, 0)
    assert len(u1.level(1)) == 18 == len(set(u1.level(1)))


def test_empty_vocabulary_registry_matches_brute_force():
    u = Universe([], ["a"], 1)
    assert u.size(0) == 1 and u.size(1) == 3
    assert set(u.level(1)) == brute_next_level(u, 0)
    u2 = Universe([], ["a"], 2)
    assert set(u2.level(2)) == brute_next_level(u2, 1)


def test_registry_is_deterministic():
    a, b = Universe(["p"], ["a"], 1), Universe(["p"], ["a"], 1)
    assert a.level(1) == b.level(1)


def test_fibers_are_contiguous(u1):
    for t in range(u1.size(0)):
        members = [u1.get(1, i) for i in u1.fiber(1, t)]
        assert all(m.obj == t for m in members)
    assert sum(len(u1.fiber(1, t)) for t in range(2)) == 18


def test_cap_exceeded_reports_count():
    with pytest.raises(CapExceeded) as info:
        Universe(["p"], ["a"], 2, cap=10**6)
    assert info.value.level == 2
    assert info.value.count == 30_233_088


# -- restriction and precision ----------------------------------------------------


def test_restrict_examples(u1):
    w = v1(u1)
    assert u1.restrict(w, 0) == u1.objective(["p"])
    assert u1.restrict(w, 1) == w
    ext = u1.unique_extension(known_p(u1))
    assert u1.restrict(ext, 1) == known_p(u1)
    with pytest.raises(ValueError):
        u1.restrict(w, 2)


def test_restrict_composes(u1):
    rng = random.Random(3)
    for _ in range(200):
        w = u1.sample(2, rng)
        assert u1.restrict(u1.restrict(w, 1), 0) == u1.restrict(w, 0)


def test_leq_p_examples(u1):
    w = v1(u1)
    u_1 = u1.make([], {"a": ([u1.objective(["p"])], u1.level(0))})
    assert u1.leq_p(u1.objective(["p"]), w)
    assert u1.leq_p(w, w)
    assert not u1.leq_p(w, u_1)
    assert not u1.leq_p(w, u1.objective(["p"]))


def test_leq_p_partial_order(u1):
    rng = random.Random(4)
    for _ in range(200):
        top = u1.sample(2, rng)
        chain = [u1.restrict(top, k) for k in range(3)]
        for i, j, k in itertools.combinations_with_replacement(range(3), 3):
            if u1.leq_p(chain[i], chain[j]) and u1.leq_p(chain[j], chain[k]):
                assert u1.leq_p(chain[i], chain[k])
    for a in u1.level(1):
        for b in u1.level(1):
            if u1.leq_p(a, b) and u1.leq_p(b, a):
                assert a == b


# -- completedness -----------------------------------------------------------------


def test_is_completed_examples(u1):
    assert not u1.is_completed(v1(u1))
    assert u1.is_completed(known_p(u1))
    assert not u1.is_completed(u1.objective(["p"]))
    assert not u1.is_completed(u1.objective())


def test_level_one_split(u1):
    flags = [u1.is_completed(w) for w in u1.level(1)]
    assert sum(flags) == 8 and len(flags) - sum(flags) == 10


def test_oracle_examples(u1):
    assert u1.incompleted_oracle(v1(u1))
    assert not u1.incompleted_oracle(known_p(u1))
    assert u1.incompleted_oracle(u1.objective())
    assert u1.incompleted_oracle(u1.objective(["p"]))


def test_oracle_agrees_with_disjointness(u1):
    for w in u1.level(0) + u1.level(1):
        assert u1.incompleted_oracle(w) == (not u1.is_completed(w))
    rng = random.Random(5)
    for _ in range(300):
        w = u1.sample(2, rng) if rng.random() < 0.5 else \
            u1.random_completed_extension(rng.choice(u1.level(1)), rng)
        assert u1.incompleted_oracle(w) == (not u1.is_completed(w))


def test_oracle_definitional_on_empty_vocabulary(empty3):
    for k in range(4):
        for w in empty3.level(k)[:500]:
            n = sum(1 for _ in empty3.extensions(w, 2))
            assert (n == 2) == (not empty3.is_completed(w))


# -- extensions ---------------------------------------------------------------------


def test_extension_examples(u1):
    assert len(list(u1.extensions(known_p(u1), 10))) == 1
    assert len(list(u1.extensions(u1.objective(["p"]), 2))) == 2
    assert len(list(u1.extensions(v1(u1), 2))) == 2


def test_extensions_are_distinct_and_restrict_back(u1):
    for w in u1.level(0):
        exts = list(u1.extensions(w))
        assert len(exts) == len(set(exts)) == 9
        assert all(u1.restrict(e, 0) == w for e in exts)
    w = v1(u1)
    exts = list(u1.extensions(w, 500))
    assert len(set(exts)) == 500
    for e in exts:
        u1.check(e)
        assert u1.restrict(e, 1) == w


def test_extension_count_matches_enumeration(empty3):
    for k in range(3):
        for w in empty3.level(k):
            assert empty3.extension_count(w) == sum(1 for _ in empty3.extensions(w))


def test_extension_counts_sum_to_next_level(u1):
    assert sum(u1.extension_count(w) for w in u1.level(1)) == 30_233_088


def test_extensions_need_the_lower_level(u1):
    w = u1.sample(2, random.Random(0))
    with pytest.raises(UnbuiltLevel):
        next(u1.extensions(w))


def test_completed_extension_level0(u1):
    w = u1.completed_extension(u1.objective(["p"]))
    assert w == Biworld(1, 1, (0b11,), (0,))
    assert u1.is_completed(w)


def test_completed_extension_of_v1(u1):
    c = u1.completed_extension(v1(u1))
    u1.check(c)
    assert u1.is_completed(c) and u1.restrict(c, 1) == v1(u1)


def test_completed_extension_everywhere(u1, empty3):
    for uni in (u1, empty3):
        for k in range(uni.built + 1):
            for w in uni.level(k):
                c = uni.completed_extension(w)
                uni.check(c)
                assert uni.is_completed(c) and uni.leq_p(w, c)
                if uni.is_completed(w):
                    assert c == uni.unique_extension(w)


def test_unique_extension_examples(u1):
    ext = u1.unique_extension(known_p(u1))
    assert set(u1.members(ext, "a", "poss")) == {w for w in u1.level(1) if w.obj == 1}
    assert set(u1.members(ext, "a", "imp")) == {w for w in u1.level(1) if w.obj == 0}
    full = u1.make(["p"], {"a": (u1.level(0), [])})
    assert u1.unique_extension(full) == Biworld(2, 1, (u1.all_mask(1),), (0,))
    with pytest.raises(NotCompleted):
        u1.unique_extension(v1(u1))


def test_unique_extension_is_the_only_one(u1):
    for w in u1.level(1):
        if u1.is_completed(w):
            exts = list(u1.extensions(w, 2))
            assert exts == [u1.unique_extension(w)]
            assert u1.is_completed(exts[0])


# -- restriction properties on samples ----------------------------------------------------


def test_restrictability_and_monotonicity(u1, empty3):
    rng = random.Random(6)
    for uni, top in ((u1, 2), (empty3, 3)):
        for _ in range(300):
            w = uni.sample(top, rng)
            uni.check(w)
            for alpha in range(top):
                r = uni.restrict(w, alpha)
                assert uni.is_registered(r)
                if uni.is_completed(r):
                    assert uni.is_completed(w)


def test_sampling_is_reproducible(u1):
    a = [u1.sample(2, random.Random(9)) for _ in range(3)]
    b = [u1.sample(2, random.Random(9)) for _ in range(3)]
    assert a == b


# -- validation and JSON ---------------------------------------------------------------


def test_check_reports_condition(u1):
    with pytest.raises(InvalidBiworld) as info:
        u1.check(Biworld(1, 1, (0b01,), (0b00,)))
    assert info.value.condition == "union"
    completed_id = next(i for i, w in enumerate(u1.level(1)) if u1.is_completed(w))
    full = u1.all_mask(1)
    with pytest.raises(InvalidBiworld) as info:
        u1.check(Biworld(2, 1, (full,), (1 << completed_id,)))
    assert info.value.condition == "intersection"


def test_json_shape(u1):
    assert to_json(u1.objective(["p"]), u1) == {"obj": ["p"]}
    assert to_json(v1(u1), u1) == {
        "obj": ["p"],
        "agents": {"a": {"poss": [{"obj": ["p"]}], "imp": [{"obj": []}, {"obj": ["p"]}]}},
    }


def test_json_round_trip(u1):
    rng = random.Random(7)
    for w in u1.level(0) + u1.level(1) + [u1.sample(2, rng) for _ in range(20)]:
        assert loads(dumps(w, u1), u1) == w


def test_json_accepts_any_member_order(u1):
    data = {"obj": ["p"], "agents": {"a": {"poss": [{"obj": ["p"]}], "imp": [{"obj": ["p"]}, {"obj": []}]}}}
    assert from_json(data, u1) == v1(u1)


@pytest.mark.parametrize("data, condition", [
    ({"obj": ["p"], "agents": {"a": {"poss": [{"obj": ["p"]}], "imp": []}}}, "union"),
    ({"obj": ["r"]}, "objective"),
    ({"obj": ["p"], "agents": {"b": {"poss": [{"obj": ["p"]}], "imp": [{"obj": []}]}}}, "agents"),
    ({"nope": 1}, "format"),
])
def test_json_rejects(u1, data, condition):
    with pytest.raises(InvalidBiworld) as info:
        from_json(data, u1)
    assert info.value.condition == condition


def test_json_intersection_violation(u1):
    member = to_json(known_p(u1), u1)
    everything = [to_json(w, u1) for w in u1.level(1)]
    data = {"obj": ["p"], "agents": {"a": {"poss": everything, "imp": [member]}}}
    with pytest.raises(InvalidBiworld) as info:
        from_json(data, u1)
    assert info.value.condition == "intersection"


def test_bits_helpers():
    assert list(bits(0b101001)) == [0, 3, 5]
    assert mask_of([0, 3, 5]) == 0b101001


def test_describe(u1):
    assert u1.describe(v1(u1)) == "({p}, {{p}}, {{}, {p}})"
