"""Constructive recursion for the conserved functionals I_k.

The building blocks G_0, G_1, ... are differential polynomials in q.  With
the normalisation G_0 = q and every later integration constant set to zero:

    G_1 = q q'^2/8 - q^2 q''/4
    G_i = -(q/4) [q G''_{i-1} - q' G'_{i-1} + q'' G_{i-1}
                  + 4 G_1 G_{i-1}/q^2 + F_{i-2}]            (i >= 2)

where F_j is a closed-form primitive of G_1 G_j''' obtained by the
telescoping integration by parts in :meth:`LawBuilder.integral`.  The
coefficients of the quadratic form follow as

    alpha_i = G_i - gamma_{i-1},  beta_i = -G_i',  gamma_i = -q^2 G_i''/2

and the correction Q_k = G_{k-2} q'' + 4 G_1 G_{k-2}/q^2 + F_{k-3}.

No generic integration happens anywhere; every primitive can be checked by
differentiating it (:func:`kplaws.diffpoly.is_antiderivative`).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

from .diffpoly import (
    ZERO,
    DiffPoly,
    a_var,
    from_json,
    is_antiderivative,
    monomial_parts,
    qd,
    q_var,
    render_terms,
    sup,
    to_json,
)

Kind = Literal["A", "B", "X"]

Q = q_var()
QP = qd(1)
QPP = qd(2)


class MissingLawError(LookupError):
    """A recursion step needs a G_i that has not been computed yet."""


@dataclass(frozen=True)
class LawSet:
    k: int
    G: tuple[DiffPoly, ...]
    alpha: tuple[DiffPoly, ...]
    beta: tuple[DiffPoly, ...]
    gamma: tuple[DiffPoly, ...]
    Q: DiffPoly

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "G": [to_json(p) for p in self.G],
            "alpha": [to_json(p) for p in self.alpha],
            "beta": [to_json(p) for p in self.beta],
            "gamma": [to_json(p) for p in self.gamma],
            "Q": to_json(self.Q),
        }

    @classmethod
    def from_dict(cls, d: dict) -> LawSet:
        conv = lambda xs: tuple(from_json(x) for x in xs)  # noqa: E731
        return cls(d["k"], conv(d["G"]), conv(d["alpha"]), conv(d["beta"]), conv(d["gamma"]), from_json(d["Q"]))


@dataclass(frozen=True)
class Term:
    """``coef * V^power`` with V one of A_j = |grad^j u|^2, B_j = |grad^j u_t|^2,
    X_j = int grad^j u . grad^j u_t dx."""

    coef: DiffPoly
    kind: Kind
    index: int
    power: int = 1

    def __post_init__(self):
        if self.kind not in ("A", "B", "X"):
            raise ValueError(f"unknown moment kind {self.kind!r}")
        if self.index < 1 or (self.kind == "A" and self.index < 2):
            raise ValueError(f"bad index {self.kind}_{self.index}")
        if self.power < 1:
            raise ValueError("power must be >= 1")


@dataclass(frozen=True)
class InvariantDescriptor:
    k: int
    terms: tuple[Term, ...]
    tail: DiffPoly = field(default=ZERO)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "terms": [
                {"coef": to_json(t.coef), "kind": t.kind, "index": t.index, "power": t.power} for t in self.terms
            ],
            "tail": to_json(self.tail),
        }

    @classmethod
    def from_dict(cls, d: dict) -> InvariantDescriptor:
        terms = tuple(Term(from_json(t["coef"]), t["kind"], int(t["index"]), int(t.get("power", 1))) for t in d["terms"])
        return cls(int(d["k"]), terms, from_json(d.get("tail", [])))

    def principal(self) -> InvariantDescriptor:
        """The three leading terms only (for k = 2 the whole law)."""
        return InvariantDescriptor(self.k, self.terms[:3])


class LawBuilder:
    """Memoised generator of G_i, the primitives F_j and the coefficients.

    The expression of G_i does not depend on k, so one builder serves every
    order.  Extension is guarded by a lock; reads of finished entries are
    lock-free.
    """

    def __init__(self):
        self._G: list[DiffPoly] = [Q]
        self._F: dict[int, DiffPoly] = {}
        self._coeffs: list[tuple[DiffPoly, DiffPoly, DiffPoly]] = []
        self._lock = threading.RLock()

    def G(self, i: int) -> DiffPoly:
        if i < 0:
            raise ValueError("G_i needs i >= 0")
        if i < len(self._G):
            return self._G[i]
        with self._lock:
            while len(self._G) <= i:
                self._G.append(self._next_G(len(self._G)))
            return self._G[i]

    def _cached(self, i: int) -> DiffPoly:
        try:
            return self._G[i]
        except IndexError:
            raise MissingLawError(f"G_{i} has not been computed") from None

    def _next_G(self, i: int) -> DiffPoly:
        if i == 1:
            return Q * QP**2 / 8 - Q**2 * QPP / 4
        g1, prev = self._cached(1), self._cached(i - 1)
        bracket = (
            Q * prev.derive(2)
            - QP * prev.derive()
            + QPP * prev
            + (g1 * prev).shift(q_exp=-2).scale(4)
            + self.integral(i - 2)
        )
        return (Q * bracket).scale(Fraction(-1, 4))

    def integral(self, j: int) -> DiffPoly:
        """Closed-form primitive of G_1 G_j''' (integration constant 0).

        Uses only cached G entries; raises :class:`MissingLawError` otherwise.
        """
        if j in self._F:
            return self._F[j]
        with self._lock:
            if j not in self._F:
                self._F[j] = self._telescope(j)
            return self._F[j]

    def _telescope(self, j: int) -> DiffPoly:
        G = self._cached
        if j < 0:
            raise ValueError("j must be >= 0")
        if j == 0:
            return (G(1).shift(q_exp=-1) ** 2).scale(-2)
        # int G_i G_j''' = G_i G_j'' - G_i' G_j' + G_i'' G_j + 4 G_{i+1} G_j / q^2 + int G_{i+1} G_{j-1}'''
        steps = (j - 1) // 2 if j % 2 else j // 2 - 1
        acc = ZERO
        i, jj = 1, j
        for _ in range(steps):
            gi, gj = G(i), G(jj)
            acc = acc + _boundary(gi, gj) + (G(i + 1) * gj).shift(q_exp=-2).scale(4)
            i, jj = i + 1, jj - 1
        if j % 2:
            # i == jj: int G_m G_m''' = G_m G_m'' - G_m'^2/2
            gm = G(i)
            return acc + gm * gm.derive(2) - gm.derive() ** 2 / 2
        # jj == i + 1: boundary terms plus 4 int (G_jj/q)'(G_jj/q) = 2 (G_jj/q)^2
        gi, gj = G(i), G(jj)
        return acc + _boundary(gi, gj) + (gj.shift(q_exp=-1) ** 2).scale(2)

    def coeffs(self, i: int) -> tuple[DiffPoly, DiffPoly, DiffPoly]:
        """(alpha_i, beta_i, gamma_i)."""
        if i < len(self._coeffs):
            return self._coeffs[i]
        with self._lock:
            while len(self._coeffs) <= i:
                n = len(self._coeffs)
                g = self.G(n)
                gamma_prev = self._coeffs[n - 1][2] if n else ZERO
                d1 = g.derive()
                self._coeffs.append((g - gamma_prev, -d1, (Q**2 * d1.derive()).scale(Fraction(-1, 2))))
            return self._coeffs[i]

    def correction(self, k: int) -> DiffPoly:
        """Q_k, with d/dt Q_k = beta'_{k-2} q' - (beta_{k-2} q')'."""
        if k < 3:
            raise ValueError("Q_k is defined for k >= 3")
        g = self.G(k - 2)
        g1 = self.G(1)
        return g * QPP + (g1 * g).shift(q_exp=-2).scale(4) + self.integral(k - 3)

    def lawset(self, k: int) -> LawSet:
        if k < 3:
            raise ValueError("law sets are defined for k >= 3")
        cs = [self.coeffs(i) for i in range(k - 1)]
        return LawSet(
            k,
            tuple(self.G(i) for i in range(k - 1)),
            tuple(c[0] for c in cs),
            tuple(c[1] for c in cs),
            tuple(c[2] for c in cs),
            self.correction(k),
        )

    def invariant(self, k: int) -> InvariantDescriptor:
        if k < 2:
            raise ValueError("invariants start at k = 2")
        if k == 2:
            return I2
        terms = [Term(Q, "B", k - 1), Term(q_var(-1), "A", k), Term(-QP, "X", k - 1)]
        cs = [self.coeffs(i) for i in range(k - 1)]
        for i in range(1, k - 1):
            alpha = cs[i][0]
            terms += [Term(alpha, "B", k - i - 1), Term(alpha.shift(q_exp=-2), "A", k - i)]
        terms += [Term(cs[i][1], "X", k - i - 1) for i in range(1, k - 2)]
        terms += [Term(cs[i][2], "B", k - i - 2) for i in range(0, k - 2)]
        tail = self.correction(k).shift(a_exp=-1).scale(Fraction(-1, 2))
        return InvariantDescriptor(k, tuple(terms), tail)


def _boundary(gi: DiffPoly, gj: DiffPoly) -> DiffPoly:
    return gi * gj.derive(2) - gi.derive() * gj.derive() + gi.derive(2) * gj


# q |grad u_t|^2 + |Lap u|^2/q - a (int grad u . grad u_t dx)^2
I2 = InvariantDescriptor(2, (Term(Q, "B", 1), Term(q_var(-1), "A", 2), Term(-a_var(), "X", 1, power=2)))


def explicit_I3() -> InvariantDescriptor:
    """The classical hand-derived third-order law, written with q'' kept explicit.

    q‖Δu_t‖² + ‖∇Δu‖²/q − q′∫Δu·Δu_t + (q′²/8)(q‖∇u_t‖² + ‖Δu‖²/q)
    − (q′⁴/4 + q²q″²)/(16a).  It coincides with ``gen_invariant(3)`` once q″
    is lowered to moments, although the two descriptors differ term by term.
    """
    qp2 = QP * QP
    terms = (
        Term(Q, "B", 2),
        Term(q_var(-1), "A", 3),
        Term(-QP, "X", 2),
        Term((Q * qp2).scale(Fraction(1, 8)), "B", 1),
        Term(qp2.shift(q_exp=-1).scale(Fraction(1, 8)), "A", 2),
    )
    tail = (qp2 * qp2).scale(Fraction(1, 4)) + (q_var(2) * QPP * QPP)
    return InvariantDescriptor(3, terms, tail.shift(a_exp=-1).scale(Fraction(-1, 16)))


_default = LawBuilder()


def gen_G(i: int, builder: LawBuilder | None = None) -> DiffPoly:
    return (builder or _default).G(i)


def int_G1_G3(j: int, builder: LawBuilder | None = None) -> DiffPoly:
    return (builder or _default).integral(j)


def gen_coeffs(k: int, builder: LawBuilder | None = None) -> LawSet:
    return (builder or _default).lawset(k)


def gen_Q(k: int, builder: LawBuilder | None = None) -> DiffPoly:
    return (builder or _default).correction(k)


def gen_invariant(k: int, builder: LawBuilder | None = None) -> InvariantDescriptor:
    return (builder or _default).invariant(k)


# -- rendering ---------------------------------------------------------------


def grad_power(j: int, f: str = "u") -> str:
    """grad^{2i} = Lap^i, grad^{2i+1} = grad Lap^i."""
    lap = "Δ" + sup(j // 2) if j >= 2 else ""
    if j % 2:
        return f"∇{lap}{f}"
    return f"{lap}{f}"


def moment_text(kind: str, index: int, power: int = 1) -> str:
    if kind == "A":
        body = f"‖{grad_power(index)}‖²"
    elif kind == "B":
        body = f"‖{grad_power(index, 'u_t')}‖²"
    else:
        body = f"∫{grad_power(index)}·{grad_power(index, 'u_t')} dx"
    if power == 1:
        return body
    if kind == "X":
        body = f"({body})"
    return body + sup(power)


def _term_text(t: Term) -> tuple[str, str]:
    var = moment_text(t.kind, t.index, t.power)
    if len(t.coef) == 1:
        ((m, c),) = t.coef.items()
        sign, num, den = monomial_parts(m, c)
        return sign, num + var + (f"/({den})" if "·" in den else f"/{den}" if den else "")
    return "+", f"({t.coef}){var}"


def render_law(inv: InvariantDescriptor) -> str:
    """Human-readable law, e.g. ``q‖∇u_t‖² + ‖Δu‖²/q − a(∫∇u·∇u_t dx)²``."""
    chunks = [_term_text(t) for t in inv.terms if not t.coef.is_zero()]
    out = []
    for i, (sign, body) in enumerate(chunks):
        if i == 0:
            out.append(("−" if sign == "-" else "") + body)
        else:
            out.append((" − " if sign == "-" else " + ") + body)
    text = "".join(out)
    if not inv.tail.is_zero():
        tail = render_terms(inv.tail.items())
        if not text:
            return tail
        text += " − " + tail[1:] if tail.startswith("−") else " + " + tail
    return text or "0"


def dump(obj: LawSet | InvariantDescriptor, **kw) -> str:
    return json.dumps(obj.to_dict(), **kw)


def load_descriptor(text: str) -> InvariantDescriptor:
    return InvariantDescriptor.from_dict(json.loads(text))


def load_lawset(text: str) -> LawSet:
    return LawSet.from_dict(json.loads(text))


def self_checks(k_max: int, builder: LawBuilder | None = None) -> list[tuple[str, bool]]:
    """Exact structural checks of the recursion for all orders up to k_max.

    Returns ``(name, passed)`` pairs: the three residuals of the coefficient
    system, the G_i/q recursion, divisibility by q and order bounds, the
    certificate of each closed-form primitive, and the Q_k certificate.
    """
    b = builder or _default
    out: list[tuple[str, bool]] = []
    if k_max < 3:
        return out
    top = k_max - 2
    for i in range(top + 1):
        alpha, beta, gamma = b.coeffs(i)
        gamma_prev = b.coeffs(i - 1)[2] if i else ZERO
        out.append((f"residual (alpha_{i}/q^2)' - beta_{i}/q^2", (alpha.shift(q_exp=-2).derive() - beta.shift(q_exp=-2)).is_zero()))
        out.append((f"residual alpha_{i}' + beta_{i} + gamma_{i - 1}'", (alpha.derive() + beta + gamma_prev.derive()).is_zero()))
        out.append((f"residual beta_{i}' - 2 gamma_{i}/q^2", (beta.derive() - gamma.shift(q_exp=-2).scale(2)).is_zero()))
        g = b.G(i)
        if i >= 1:
            out.append((f"(G_{i}/q)' = -q G_{i - 1}'''/4", (g.divide_by_q().derive() + (Q * b.G(i - 1).derive(3)).scale(Fraction(1, 4))).is_zero()))
        out.append((f"G_{i} divisible by q", g.divide_by_q().min_q_exp() >= 0 and min(m.a_exp for m in g.terms) >= 0))
        out.append((f"order G_{i} <= {2 * i}", g.max_order() <= 2 * i))
        out.append((f"order alpha_{i} <= {2 * i}", alpha.max_order() <= 2 * i))
        out.append((f"order beta_{i} <= {2 * i + 1}", beta.max_order() <= 2 * i + 1))
        out.append((f"order gamma_{i} <= {2 * i + 2}", gamma.max_order() <= 2 * i + 2))
    for j in range(k_max - 2):
        F = b.integral(j)
        out.append((f"primitive of G_1 G_{j}'''", is_antiderivative(F, b.G(1) * b.G(j).derive(3))))
    for k in range(3, k_max + 1):
        beta = b.coeffs(k - 2)[1]
        Qk = b.correction(k)
        cert = beta.derive() * QP - (beta * QP).derive() - Qk.derive()
        out.append((f"Q_{k} certificate", cert.is_zero()))
        out.append((f"order Q_{k} <= {2 * k - 4}", Qk.max_order() <= 2 * k - 4))
    return out
