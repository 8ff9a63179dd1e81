from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import coefs, diffpolys
from kplaws import lawgen, momentcheck as mc
from kplaws.diffpoly import DiffPoly, a_var, q_var, qd
from kplaws.lawgen import InvariantDescriptor, Term
from kplaws.momentcheck import MomentMonomial, MomentPoly, lower, lower_invariant, mm_derive, verify_invariant

A = lambda j, p=1: MomentPoly.var("A", j, p)  # noqa: E731
B = lambda j, p=1: MomentPoly.var("B", j, p)  # noqa: E731
X = lambda j, p=1: MomentPoly.var("X", j, p)  # noqa: E731
qa = MomentPoly.qa

moment_vars = st.sampled_from([("A", 2), ("A", 3), ("B", 1), ("B", 2), ("X", 1), ("X", 2), ("X", 3)])
moment_monomials = st.builds(
    lambda q, a, vs: MomentMonomial(q, a, tuple(sorted(vs.items()))),
    st.integers(-3, 3),
    st.integers(-1, 2),
    st.dictionaries(moment_vars, st.integers(1, 3), max_size=3),
)
momentpolys = st.dictionaries(moment_monomials, coefs, max_size=4).map(MomentPoly)


# -- derivation rules ------------------------------------------------------------


def test_rules():
    assert mm_derive(qa(1)) == qa(0, 1, 2) * X(1)
    assert mm_derive(X(1)) == B(1) - qa(-2) * A(2)
    assert mm_derive(A(2)) == X(2) * 2
    assert mm_derive(B(3)) == qa(-2) * X(4) * -2
    assert mm_derive(qa(0, 5)).is_zero()


@given(momentpolys, momentpolys)
def test_leibniz(p, r):
    assert mm_derive(p * r) == mm_derive(p) * r + p * mm_derive(r)


def test_A1_rejected():
    with pytest.raises(ValueError):
        MomentPoly.var("A", 1)
    with pytest.raises(ValueError):
        MomentPoly.var("Y", 1)


def test_str():
    assert str(qa(0, 1, 2) * X(1)) == "2·a·X1"
    assert str(MomentPoly()) == "0"


# -- q-derivative table ----------------------------------------------------------


def test_table():
    t = mc.q_derivative_table(3)
    assert t[0] == qa(1)
    assert t[1] == qa(0, 1, 2) * X(1)
    assert t[2] == qa(0, 1, 2) * B(1) - qa(-2, 1, 2) * A(2)
    # hand application of the rules to entry 2
    assert t[3] == qa(-2, 1, -8) * X(2) + qa(-3, 2, 8) * A(2) * X(1)


# -- lowering --------------------------------------------------------------------


def test_lower_examples():
    assert lower(qd(1)) == qa(0, 1, 2) * X(1)
    assert lower(qd(1, 2)) == qa(0, 2, 4) * X(1, 2)
    gamma0 = (q_var(2) * qd(2)).scale(Fr(-1, 2))
    assert lower(gamma0) == qa(2, 1, -1) * B(1) + qa(0, 1) * A(2)
    assert lower(q_var(-3) * a_var(2)) == qa(-3, 2)


@given(diffpolys())
def test_algebras_consistent(p):
    assert mm_derive(lower(p)) == lower(p.derive())


def test_lower_invariant_examples():
    assert lower_invariant(lawgen.I2) == qa(1) * B(1) + qa(-1) * A(2) - qa(0, 1) * X(1, 2)
    principal = lawgen.gen_invariant(3).principal()
    assert lower_invariant(principal) == qa(1) * B(2) + qa(-1) * A(3) - qa(0, 1, 2) * X(1) * X(2)
    assert lower_invariant(InvariantDescriptor(2, (), DiffPoly.const(1))) == MomentPoly.const(1)


# -- conservation ------------------------------------------------------------------


@pytest.mark.parametrize("k", range(2, 7))
def test_generated_laws_conserved(k):
    assert verify_invariant(lawgen.gen_invariant(k))


def test_certificate_record():
    cert = mc.certify(lawgen.gen_invariant(3))
    assert cert == {"k": 3, "verified": True, "term_count_before_cancellation": 24}
    assert mc.certify(lawgen.I2)["term_count_before_cancellation"] == 6


def test_negative_control():
    bare = InvariantDescriptor(2, (Term(DiffPoly.const(1), "B", 1),))
    assert not verify_invariant(bare)
    assert mm_derive(lower_invariant(bare)) == qa(-2) * X(2) * -2


@pytest.mark.parametrize("k", range(3, 6))
def test_tampered_coefficient_fails(k):
    inv = lawgen.gen_invariant(k)
    t = inv.terms[3]
    bad = InvariantDescriptor(k, inv.terms[:3] + (Term(t.coef.scale(Fr(1, 2)), t.kind, t.index),) + inv.terms[4:], inv.tail)
    assert not verify_invariant(bad)


@pytest.mark.parametrize("k", range(3, 7))
def test_index_closure(k):
    # derivation raises B_j, X_j to index j+1 only, so these bounds keep d/dt inside index k
    lowered = lower_invariant(lawgen.gen_invariant(k))
    for kind, j in lowered.variables():
        assert j <= (k if kind == "A" else k - 1)


@pytest.mark.parametrize("k", range(3, 7))
def test_derivative_of_untailed_law(k):
    # E_k carries beta_{k-2} on X_1 = q'/(2a); the generated law moves that piece into Q_k
    inv = lawgen.gen_invariant(k)
    beta = lawgen.gen_coeffs(k).beta[k - 2]
    e_k = InvariantDescriptor(k, inv.terms + (Term(beta, "X", 1),))
    assert mm_derive(lower_invariant(e_k)) == lower(beta.derive()) * X(1)
    # and the tail then closes it: Q_k' = beta' q' - (beta q')'
    assert mm_derive(lower_invariant(InvariantDescriptor(k, inv.terms))) == lower(lawgen.gen_Q(k).derive()) * qa(0, -1, Fr(1, 2))


def test_explicit_I3():
    ref = lawgen.explicit_I3()
    assert verify_invariant(ref)
    assert lower_invariant(ref) == lower_invariant(lawgen.gen_invariant(3))


# -- numeric evaluation ------------------------------------------------------------


@given(momentpolys)
def test_compiled_matches_direct(p):
    vals = {"q": 1.3, "a": 0.7, ("A", 2): 0.4, ("A", 3): 1.1, ("B", 1): 0.2, ("B", 2): 0.9, ("X", 1): -0.3, ("X", 2): 0.5, ("X", 3): 0.8}
    direct = 0.0
    for m, c in p.items():
        term = float(c) * vals["q"] ** m.q_exp * vals["a"] ** m.a_exp
        for v, e in m.vars:
            term *= vals[v] ** e
        direct += term
    assert p.evaluate(vals) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_compiled_vectorised():
    p = qa(1) * B(1) + qa(-1) * A(2)
    f = mc.compile_poly(p)
    got = f({"q": np.array([1.0, 2.0]), "a": np.array([1.0, 1.0]), ("A", 2): np.array([3.0, 4.0]), ("B", 1): np.array([5.0, 6.0])})
    assert np.allclose(got, [8.0, 14.0])
    assert mc.compile_poly(MomentPoly())({"q": 1.0, "a": 1.0}) == 0
