from fractions import Fraction

from hypothesis import settings, strategies as st

from kplaws.diffpoly import DiffMonomial, DiffPoly

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

coefs = st.fractions(min_value=-5, max_value=5, max_denominator=6).filter(bool)

monomials = st.builds(
    lambda q, a, ds: DiffMonomial(q, a, tuple(sorted(ds.items()))),
    st.integers(-3, 3),
    st.integers(-1, 1),
    st.dictionaries(st.integers(1, 4), st.integers(1, 3), max_size=3),
)


@st.composite
def diffpolys(draw, max_terms=4):
    terms = draw(st.dictionaries(monomials, coefs, max_size=max_terms))
    return DiffPoly(terms)


def frac(n, d=1):
    return Fraction(n, d)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
