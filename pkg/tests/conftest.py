import pytest
from hypothesis import strategies as st

from biworlds.core import Universe
from biworlds.syntax import And, Atom, Bottom, C, E, Implies, K, M, Not, O, Or, Top
from biworlds.valuation import EvalContext

ATOMS = ["p", "q"]
AGENTS = ["a", "b"]


def formulas(atoms=ATOMS, agents=AGENTS, allow_c=True, max_leaves=12):
    leaves = st.one_of(st.sampled_from([Atom(x) for x in atoms]), st.just(Top()), st.just(Bottom()))
    groups = st.lists(st.sampled_from(agents), min_size=1, max_size=len(agents)).map(tuple)

    def extend(sub):
        options = [
            sub.map(Not),
            st.tuples(sub, sub).map(lambda t: And(*t)),
            st.tuples(sub, sub).map(lambda t: Or(*t)),
            st.tuples(sub, sub).map(lambda t: Implies(*t)),
            st.tuples(st.sampled_from(agents), sub).map(lambda t: K(*t)),
            st.tuples(st.sampled_from(agents), sub).map(lambda t: M(*t)),
            st.tuples(st.sampled_from(agents), sub).map(lambda t: O(*t)),
            st.tuples(groups, sub).map(lambda t: E(*t)),
        ]
        if allow_c:
            options.append(st.tuples(groups, sub).map(lambda t: C(*t)))
        return st.one_of(*options)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@pytest.fixture(scope="session")
def u1():
    return Universe(["p"], ["a"], 1)


@pytest.fixture(scope="session")
def ctx1(u1):
    return EvalContext(u1)


@pytest.fixture(scope="session")
def empty3():
    return Universe([], ["a"], 3)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
