"""Property checks shared by the ``suite`` command and the acceptance tests.

Each check returns a CheckResult; none of them raise on a failed property.
Sampling is driven by a single seed so every report can be replayed.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .census import census
from .core import Biworld, Universe, count_levels
from .generators import formula_pool
from .kripke import (
    canonical_worlds, entails, graded_pi, kripke_eval, only_knows_world, pi_filter,
    pi_only_knows_world, truth_set,
)
from .symbolic import cg_survivors, example_system
from .syntax import And, Atom, Implies, K, M, Not, O, Or, Top, finite_depth, parse
from .truth import TV
from .valuation import EvalContext, eval3


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0
    failures: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} ({self.seconds:.2f}s)"


class _Recorder:
    def __init__(self, name: str):
        self.result = CheckResult(name, True)
        self._start = time.perf_counter()

    def expect(self, ok: bool, what: str, *args) -> bool:
        """Record a failure; ``what`` is formatted with ``args`` only then."""
        if not ok:
            self.result.passed = False
            if len(self.result.failures) < 20:
                self.result.failures.append(what.format(*args) if args else what)
        return ok

    def done(self, **detail) -> CheckResult:
        self.result.detail.update(detail)
        self.result.seconds = time.perf_counter() - self._start
        return self.result


def p_universe(level: int = 1) -> Universe:
    return Universe(["p"], ["a"], level)


def v1_of(u: Universe) -> Biworld:
    p, e = u.objective(["p"]), u.objective()
    return u.make(["p"], {"a": ([p], [p, e])})


def known_p_of(u: Universe) -> Biworld:
    p, e = u.objective(["p"]), u.objective()
    return u.make(["p"], {"a": ([p], [e])})


# -- 1. counts --------------------------------------------------------------------


def check_counts() -> CheckResult:
    rec = _Recorder("universe counts at level 1")
    u = p_universe(1)
    counts = count_levels(1, 1, 1)
    enumerated = u.size(1)
    completed = sum(u.is_completed(w) for w in u.level(1))
    by_oracle = sum(not u.incompleted_oracle(w) for w in u.level(1))
    rec.expect(enumerated == counts[1].total == 18, f"total {enumerated} vs {counts[1].total}")
    rec.expect(completed == counts[1].completed == 8, f"completed {completed}")
    rec.expect(enumerated - completed == counts[1].incompleted == 10, "incompleted")
    rec.expect(by_oracle == completed, f"oracle finds {by_oracle} completed")
    rec.expect(counts[1].total == 2 * 3 ** 2, "n * 3**n with n = 2")
    return rec.done(total=enumerated, completed=completed, incompleted=enumerated - completed)


# -- 2. level-2 count ---------------------------------------------------------------


def check_level2(full: bool = False) -> CheckResult:
    rec = _Recorder("level-2 count" + (" with enumeration" if full else ""))
    counts = count_levels(1, 1, 2)
    rec.expect(counts[2].total == 30_233_088, f"recurrence gives {counts[2].total}")
    rec.expect(counts[2].completed == 524_288, f"completed {counts[2].completed}")
    u = p_universe(1)
    by_fibers = sum(u.extension_count(w) for w in u.level(1))
    rec.expect(by_fibers == counts[2].total, f"fiber sizes sum to {by_fibers}")
    detail = {"recurrence": counts[2].total, "fiber_sum": by_fibers}
    if full:
        c = census(u)
        rec.expect(c.total == counts[2].total, f"enumerated {c.total}")
        rec.expect(c.completed == counts[2].completed, f"enumerated completed {c.completed}")
        rec.expect(c.invalid == 0 and c.duplicates == 0, "invalid or duplicate pairs")
        detail.update(enumerated=c.total, enumerated_completed=c.completed)
    return rec.done(**detail)


# -- 3. v family -------------------------------------------------------------------------


def check_v_family() -> CheckResult:
    rec = _Recorder("worked v-family example")
    u = p_universe(1)
    ctx = EvalContext(u)
    v1 = v1_of(u)
    rec.expect(eval3(parse("K[a] p"), v1, ctx) is TV.T, "K[a] p at v1")
    rec.expect(eval3(parse("M[a] p"), v1, ctx) is TV.F, "M[a] p at v1")
    for w in u.level(0):
        rec.expect(u.incompleted_oracle(w) and not u.is_completed(w), f"level-0 {w}")
    system = example_system(u)
    for k, w in enumerate(system.prefixes("v", 3)):
        rec.expect(u.incompleted_oracle(w), f"v prefix {k} oracle")
        rec.expect(not u.is_completed(w), f"v prefix {k} shortcut")
    w = known_p_of(u)
    exts = list(u.extensions(w, 10))
    rec.expect(len(exts) == 1, f"{len(exts)} extensions of the completed 1-biworld")
    rec.expect(exts == [u.unique_extension(w)], "unique extension mismatch")
    return rec.done(extensions=len(exts), prefixes=len(system.prefixes("v", 3)))


# -- 4. restriction ---------------------------------------------------------------------


def _restriction_props(u: Universe, ws, rec: _Recorder, completable: bool) -> None:
    for w in ws:
        for alpha in range(w.level + 1):
            r = u.restrict(w, alpha)
            rec.expect(u.contains(r), "restriction of {} to {} is not a biworld", w, alpha)
            if u.is_completed(r):
                rec.expect(u.is_completed(w), "completedness not monotone at {}", w)
        rec.expect(u.incompleted_oracle(w) == (not u.is_completed(w)), "oracle disagrees at {}", w)
        if completable:
            c = u.completed_extension(w)
            u.check(c)
            rec.expect(u.is_completed(c) and u.leq_p(w, c), "completion of {}", w)


def check_restriction(seed: int = 0, samples: int = 1000) -> CheckResult:
    rec = _Recorder("restriction and completedness properties")
    rng = random.Random(seed)
    u = p_universe(1)
    low = u.level(0) + u.level(1)
    _restriction_props(u, low, rec, completable=True)
    # level 2 over one atom: fibers come from extending the registry
    sampled = [u.sample(2, rng) for _ in range(samples // 2)]
    sampled += [u.random_completed_extension(rng.choice(u.level(1)), rng)
                for _ in range(samples - samples // 2)]
    for w in sampled:
        u.check(w)
    _restriction_props(u, sampled, rec, completable=False)
    # completability above level 1 on the empty vocabulary
    e = Universe([], ["a"], 3)
    every = [w for k in range(4) for w in e.level(k)]
    for w in every:
        c = e.completed_extension(w)
        rec.expect(e.is_completed(c) and e.leq_p(w, c), "completion of {}", w)
    deep = [e.sample(3, rng) for _ in range(samples)]
    _restriction_props(e, deep, rec, completable=True)
    return rec.done(level_le1=len(low), sampled_level2=len(sampled),
                    completed_checked=len(every), sampled_level3=len(deep))


# -- 5. precision monotonicity --------------------------------------------------------


def precision_pairs(u: Universe, rng: random.Random, n: int) -> list[tuple[Biworld, Biworld]]:
    pairs = []
    while len(pairs) < n:
        top = u.sample(2, rng) if rng.random() < 0.7 else \
            u.random_completed_extension(rng.choice(u.level(1)), rng)
        lo = rng.randint(0, 2)
        hi = rng.randint(lo, 2)
        pairs.append((u.restrict(top, lo), u.restrict(top, hi)))
    return pairs


def check_precision(seed: int = 0, cases: int = 10_000) -> CheckResult:
    rec = _Recorder("precision monotonicity")
    rng = random.Random(seed)
    u = p_universe(1)
    ctx = EvalContext(u)
    pool = formula_pool(seed, 400, ["p"], ["a"], max_md=2, size=5)
    pairs = precision_pairs(u, rng, cases)
    violations = 0
    for w, w2 in pairs:
        phi = rng.choice(pool)
        a, b = eval3(phi, w, ctx), eval3(phi, w2, ctx)
        if not rec.expect(u.leq_p(w, w2) and a.leq_p(b), "{} {} -> {}", phi, a, b):
            violations += 1
    return rec.done(cases=len(pairs), violations=violations)


# -- 6. resolution ------------------------------------------------------------------------


def check_resolution(seed: int = 0, samples: int = 300) -> CheckResult:
    rec = _Recorder("resolution")
    rng = random.Random(seed)
    u = p_universe(1)
    ctx = EvalContext(u)
    pool1 = formula_pool(seed, 300, ["p"], ["a"], max_md=1, size=5)
    violations = 0
    for phi in pool1:
        for w in u.level(1):
            if not rec.expect(eval3(phi, w, ctx) is not TV.U, "{} at {}", phi, w):
                violations += 1
    pool2 = formula_pool(seed + 1, 100, ["p"], ["a"], max_md=2, size=5)
    level2 = [u.sample(2, rng) for _ in range(samples)]
    for phi in pool2:
        for w in level2:
            if not rec.expect(eval3(phi, w, ctx) is not TV.U, "{} at level 2", phi):
                violations += 1
    return rec.done(formulas_md1=len(pool1), worlds=18, formulas_md2=len(pool2),
                    sampled_level2=len(level2), violations=violations)


# -- 7. coincidence ------------------------------------------------------------------------


def _coincide(u, structure, pool, indices, ctx, rec) -> int:
    bad = 0
    for phi in pool:
        truth = truth_set(phi, structure)
        for i in indices:
            w = structure.world(int(i))
            value = eval3(phi, w, ctx)
            if not rec.expect(value is TV.from_bool(bool(truth[i])),
                              "{} at world {}: {} vs {}", phi, i, value, bool(truth[i])):
                bad += 1
    return bad


def check_coincidence(seed: int = 0, worlds: int = 5000, formulas: int = 45) -> CheckResult:
    rec = _Recorder("coincidence of the two valuations")
    rng = random.Random(seed)
    u = p_universe(1)
    ctx = EvalContext(u)
    s0 = canonical_worlds(u, 0)
    pool0 = formula_pool(seed, 60, ["p"], ["a"], max_md=0, size=5)
    pool0 += formula_pool(seed + 1, 120, ["p"], ["a"], max_md=1, size=5)
    bad = _coincide(u, s0, pool0, range(len(s0)), ctx, rec)
    s1 = canonical_worlds(u, 1)
    idx = rng.sample(range(len(s1)), worlds)
    pool1 = formula_pool(seed + 2, formulas, ["p"], ["a"], max_md=1, size=5)
    pool1 += formula_pool(seed + 3, formulas // 3, ["p"], ["a"], max_md=2, size=4, exact_md=True)
    bad += _coincide(u, s1, pool1, idx, ctx, rec)
    return rec.done(k0_worlds=len(s0), k0_formulas=len(pool0), k1_worlds_total=len(s1),
                    k1_sampled=len(idx), k1_formulas=len(pool1), disagreements=bad)


# -- 8. axioms and only knowing -------------------------------------------------------


def _valid(phi, structure, check_depth=True) -> bool:
    return bool(truth_set(phi, structure, check_depth).all())


def check_axioms(seed: int = 0) -> CheckResult:
    rec = _Recorder("modal axioms and only-knowing uniqueness")
    u = p_universe(1)
    pq = Universe(["p", "q"], ["a"], 0)
    structures = [(canonical_worlds(u, 0), 0), (canonical_worlds(u, 1), 1),
                  (canonical_worlds(pq, 0), 0)]
    for s, k in structures:
        atoms = list(s.universe.atoms)
        pool = formula_pool(seed + k, 40, atoms, ["a"], max_md=k + 1 if k == 0 else k, size=3)
        rng = random.Random(seed + 10 + k)
        for _ in range(150):
            phi, psi = rng.choice(pool), rng.choice(pool)
            kax = Implies(And(K("a", Implies(phi, psi)), K("a", phi)), K("a", psi))
            mp = Implies(And(phi, Implies(phi, psi)), psi)
            if s.k + 1 >= 1 + max(finite_depth(phi), finite_depth(psi)):
                rec.expect(_valid(kax, s), "(K) fails for {}, {}", phi, psi)
            rec.expect(_valid(mp, s), "(MP) fails for {}, {}", phi, psi)
        for phi in pool + [Or(Atom(atoms[0]), Not(Atom(atoms[0]))), Top()]:
            if finite_depth(phi) + 1 <= s.k + 1 and _valid(phi, s):
                rec.expect(_valid(K("a", phi), s), "(Nec) fails for {}", phi)

    # (M): M[a] p entails ~K[a] q when p does not entail q
    s_pq = structures[2][0]
    res = entails([parse("M[a] p")], parse("~K[a] q"), s_pq)
    rec.expect(res.holds and res.countermodel is None, "M[a] p does not entail ~K[a] q")
    rec.expect(not entails([parse("p")], parse("q"), s_pq).holds, "p should not entail q")
    rng = random.Random(seed + 99)
    pool = formula_pool(seed + 5, 60, ["p", "q"], ["a"], max_md=0, size=3)
    m_instances = 0
    for _ in range(200):
        phi, psi = rng.choice(pool), rng.choice(pool)
        if entails([phi], psi, s_pq).holds:
            continue
        m_instances += 1
        rec.expect(entails([M("a", phi)], Not(K("a", psi)), s_pq).holds, "(M) {} / {}", phi, psi)

    # (O) and uniqueness
    cases = [(u, "p"), (u, "~p"), (u, "true"), (u, "false"), (pq, "p & q"), (u, "K[a] p")]
    for uni, text in cases:
        phi = parse(text)
        k = finite_depth(phi)
        ctx = EvalContext(uni)
        for obj in ([], [uni.atoms[0]]):
            w = only_knows_world(phi, "a", obj, uni, ctx)
            rec.expect(eval3(O("a", phi), w, ctx) is TV.T, f"O[a] {text} not t at its world")
        s = canonical_worlds(uni, k)
        sat = truth_set(O("a", phi), s)
        models = [s.world(int(i)) for i in sat.nonzero()[0]]
        rec.expect(len({(m.poss, m.imp) for m in models}) == 1, f"O[a] {text}: models disagree")
        rec.expect(len(models) == uni.size(0), f"O[a] {text}: {len(models)} models")
        built = {only_knows_world(phi, "a", uni.interpretation(o), uni, ctx)
                 for o in range(uni.size(0))}
        rec.expect(built == set(models), f"O[a] {text}: constructed worlds differ")
    return rec.done(m_instances=m_instances, o_formulas=len(cases))


# -- 9. common knowledge ----------------------------------------------------------------------


def check_common_knowledge(seed: int = 0, samples: int = 2000) -> CheckResult:
    rec = _Recorder("common knowledge")
    rng = random.Random(seed)
    u = p_universe(1)
    ctx = EvalContext(u)
    cp = parse("C[{a}] p")
    vac = u.make(["p"], {"a": ([], u.level(0))})
    rec.expect(eval3(cp, vac, ctx) is TV.T, "C at the vacuous world")
    s0 = canonical_worlds(u, 0)
    rec.expect(kripke_eval(cp, vac, s0), "C at the vacuous world, two-valued")
    system = example_system(u)
    for name in ("v", "u"):
        rec.expect(system.eval_cg_closure(Atom("p"), ["a"], name) is TV.T, f"closure at {name}")
    surv1 = cg_survivors(Atom("p"), ["a"], 1, u, ctx)
    pid = u.id_of(u.objective(["p"]))
    brute = [w for w in u.level(1) if w.poss[0] & ~(1 << pid) == 0]
    rec.expect(set(surv1) == set(brute), "survivors at level 1 differ from poss <= {{p}}")
    for name in ("v", "u"):
        rec.expect(system.materialize(name, 1) in surv1, f"{name}1 missing")
    surv2 = cg_survivors(Atom("p"), ["a"], 2, u, ctx)
    s1set = set(surv1)
    for w in surv2:
        rec.expect(u.restrict(w, 1) in s1set, "level-2 survivor restricts outside")
    for name in ("v", "u"):
        rec.expect(system.materialize(name, 2) in set(surv2), f"{name}2 missing")
    # sampled extensions of non-survivors stay non-survivors
    dead = [w for w in u.level(1) if w not in s1set]
    for _ in range(samples):
        e = u.random_extension(rng.choice(dead), rng)
        rec.expect(eval3(cp, e, ctx) is TV.F, "extension of a non-survivor revived")
    return rec.done(survivors_1=len(surv1), survivors_2=len(surv2), sampled=samples)


# -- 10. positive introspection ----------------------------------------------------------------


def check_pi(seed: int = 0) -> CheckResult:
    rec = _Recorder("positive introspection")
    u = p_universe(1)
    s0 = canonical_worlds(u, 0)
    kept = pi_filter(s0)
    pool = formula_pool(seed, 40, ["p"], ["a"], max_md=1, size=3) + [Atom("p")]
    for phi in pool:
        axiom = Implies(K("a", phi), K("a", K("a", phi)))
        rec.expect(_valid(axiom, kept, check_depth=False), f"PI axiom fails for {phi}")
    constructed = []
    for text in ("p", "~p", "true", "false"):
        for obj in ([], ["p"]):
            w = pi_only_knows_world(parse(text), "a", obj, u)
            constructed.append(w)
            rec.expect(graded_pi(w, u), f"constructed world for {text} is not PI")
    return rec.done(retained=len(kept), of=len(s0), constructed=len(constructed))


CHECKS: list[tuple[str, Callable[..., CheckResult]]] = [
    ("counts", lambda seed, full: check_counts()),
    ("level2", lambda seed, full: check_level2(full)),
    ("v_family", lambda seed, full: check_v_family()),
    ("restriction", lambda seed, full: check_restriction(seed)),
    ("precision", lambda seed, full: check_precision(seed)),
    ("resolution", lambda seed, full: check_resolution(seed)),
    ("coincidence", lambda seed, full: check_coincidence(seed)),
    ("axioms", lambda seed, full: check_axioms(seed)),
    ("common_knowledge", lambda seed, full: check_common_knowledge(seed)),
    ("pi", lambda seed, full: check_pi(seed)),
]


def run_suite(seed: int = 0, full: bool = False, only=None) -> list[CheckResult]:
    return [fn(seed, full) for name, fn in CHECKS if only is None or name in only]
