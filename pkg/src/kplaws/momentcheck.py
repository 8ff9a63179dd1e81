"""Moment algebra: an independent check that the generated laws are conserved.

Variables are the Sobolev moments of a mode solution

    A_j = sum mu xi2^j |w|^2      (j >= 2; A_1 is eliminated through q = a A_1 + b)
    B_j = sum mu xi2^j |w_t|^2    (j >= 1)
    X_j = sum mu xi2^j Re(conj(w) w_t)

together with Laurent powers of q and a.  The mode equation
w_tt = -xi2 w / q^2 closes the algebra under d/dt:

    A_j' = 2 X_j,   X_j' = B_j - A_{j+1}/q^2,   B_j' = -2 X_{j+1}/q^2,   q' = 2 a X_1.

A law is conserved iff the derivative of its lowered form is the zero
polynomial, which is decided exactly over the rationals.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping, NamedTuple

import numpy as np

from .diffpoly import DiffPoly, sup
from .lawgen import InvariantDescriptor

Var = tuple[str, int]  # ("A", 2), ("B", 1), ("X", 3), ...


class MomentMonomial(NamedTuple):
    q_exp: int = 0
    a_exp: int = 0
    vars: tuple[tuple[Var, int], ...] = ()


def _mul_vars(v1, v2):
    if not v1:
        return v2
    if not v2:
        return v1
    acc = dict(v1)
    for v, e in v2:
        acc[v] = acc.get(v, 0) + e
    return tuple(sorted(acc.items()))


def _replace(vars_, v, new):
    """Lower the exponent of v by one and multiply by the variable ``new`` (or nothing)."""
    acc = dict(vars_)
    e = acc[v] - 1
    if e:
        acc[v] = e
    else:
        del acc[v]
    if new is not None:
        acc[new] = acc.get(new, 0) + 1
    return tuple(sorted(acc.items()))


class MomentPoly:
    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[MomentMonomial, int | Fraction] | None = None):
        clean: dict[MomentMonomial, Fraction] = {}
        for m, c in (terms or {}).items():
            m = MomentMonomial(m[0], m[1], tuple(sorted((tuple(v), e) for v, e in m[2] if e)))
            for (kind, j), e in m.vars:
                if kind not in "ABX" or len(kind) != 1 or j < 1 or e < 0:
                    raise ValueError(f"invalid moment variable {kind}_{j}^{e}")
                if kind == "A" and j == 1:
                    raise ValueError("A_1 is not a variable; use q")
            c = Fraction(c) + clean.get(m, 0)
            if c:
                clean[m] = c
            else:
                clean.pop(m, None)
        self._terms = clean

    @classmethod
    def _wrap(cls, terms) -> MomentPoly:
        out = object.__new__(cls)
        out._terms = terms
        return out

    @classmethod
    def var(cls, kind: str, j: int, power: int = 1) -> MomentPoly:
        return cls({MomentMonomial(0, 0, (((kind, j), power),)): 1})

    @classmethod
    def const(cls, c) -> MomentPoly:
        return cls({MomentMonomial(): c})

    @classmethod
    def qa(cls, q_exp: int = 0, a_exp: int = 0, c=1) -> MomentPoly:
        return cls({MomentMonomial(q_exp, a_exp, ()): c})

    @property
    def terms(self) -> Mapping[MomentMonomial, Fraction]:
        return MappingProxyType(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def variables(self) -> set[Var]:
        return {v for m in self._terms for v, _ in m.vars}

    def max_index(self) -> int:
        return max((j for _, j in self.variables()), default=0)

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MomentPoly.const(other)
        if not isinstance(other, MomentPoly):
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                del out[m]
        return MomentPoly._wrap(out)

    __radd__ = __add__

    def __neg__(self):
        return MomentPoly._wrap({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MomentPoly.const(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            return MomentPoly._wrap({m: v * c for m, v in self._terms.items()} if c else {})
        if not isinstance(other, MomentPoly):
            return NotImplemented
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        out: dict[MomentMonomial, Fraction] = {}
        for mb, cb in b.items():
            for ma, ca in a.items():
                m = MomentMonomial(ma.q_exp + mb.q_exp, ma.a_exp + mb.a_exp, _mul_vars(ma.vars, mb.vars))
                out[m] = out.get(m, 0) + ca * cb
        return MomentPoly._wrap({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> MomentPoly:
        result = MomentPoly.const(1)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MomentPoly.const(other)
        if not isinstance(other, MomentPoly):
            return NotImplemented
        return self._terms == other._terms

    __hash__ = None  # type: ignore[assignment]

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for i, (m, c) in enumerate(self.items()):
            factors = []
            if abs(c) != 1 or not (m.q_exp or m.a_exp or m.vars):
                factors.append(str(abs(c)))
            if m.a_exp:
                factors.append("a" + (sup(m.a_exp) if m.a_exp != 1 else ""))
            if m.q_exp:
                factors.append("q" + (sup(m.q_exp) if m.q_exp != 1 else ""))
            factors += [f"{k}{j}" + (sup(e) if e != 1 else "") for (k, j), e in m.vars]
            body = "·".join(factors)
            sign = "−" if c < 0 else "+"
            parts.append((("−" if sign == "−" else "") if i == 0 else f" {sign} ") + body)
        return "".join(parts)

    __repr__ = __str__

    def derive(self) -> MomentPoly:
        return derive_counting(self)[0]

    def evaluate(self, values: Mapping) -> float:
        """Float value; ``values`` maps "q", "a" and ("A", j)-style keys to numbers."""
        return float(compile_poly(self)(values))


def derive_counting(p: MomentPoly) -> tuple[MomentPoly, int]:
    """Derivative plus the number of raw terms produced before merging."""
    out: dict[MomentMonomial, Fraction] = {}
    raw = 0

    def put(q_exp, a_exp, vars_, c):
        nonlocal raw
        raw += 1
        m = MomentMonomial(q_exp, a_exp, vars_)
        out[m] = out.get(m, 0) + c

    for m, c in p._terms.items():
        if m.q_exp:
            # q^e -> e q^(e-1) * 2 a X_1
            put(m.q_exp - 1, m.a_exp + 1, _mul_vars(m.vars, ((("X", 1), 1),)), 2 * m.q_exp * c)
        for v, e in m.vars:
            kind, j = v
            ce = c * e
            if kind == "A":
                put(m.q_exp, m.a_exp, _replace(m.vars, v, ("X", j)), 2 * ce)
            elif kind == "X":
                put(m.q_exp, m.a_exp, _replace(m.vars, v, ("B", j)), ce)
                put(m.q_exp - 2, m.a_exp, _replace(m.vars, v, ("A", j + 1)), -ce)
            else:
                put(m.q_exp - 2, m.a_exp, _replace(m.vars, v, ("X", j + 1)), -2 * ce)
    return MomentPoly._wrap({m: c for m, c in out.items() if c}), raw


def mm_derive(p: MomentPoly) -> MomentPoly:
    return p.derive()


@lru_cache(maxsize=None)
def _table_entry(h: int) -> MomentPoly:
    if h == 0:
        return MomentPoly.qa(1)
    if h == 1:
        return MomentPoly({MomentMonomial(0, 1, ((("X", 1), 1),)): 2})
    return _table_entry(h - 1).derive()


def q_derivative_table(h_max: int) -> list[MomentPoly]:
    """Entry h is q^(h) written in moments (entry 0 is q itself)."""
    return [_table_entry(h) for h in range(h_max + 1)]


@lru_cache(maxsize=None)
def _table_power(h: int, n: int) -> MomentPoly:
    if n == 1:
        return _table_entry(h)
    return _table_power(h, n - 1) * _table_entry(h)


def lower(p: DiffPoly) -> MomentPoly:
    """Substitute every q^(h), h >= 1, by its moment expression."""
    acc: dict[MomentMonomial, Fraction] = {}
    for m, c in p.terms.items():
        part = MomentPoly.qa(m.q_exp, m.a_exp, c)
        for h, e in m.derivs:
            part = part * _table_power(h, e)
        for mm, cc in part._terms.items():
            acc[mm] = acc.get(mm, 0) + cc
    return MomentPoly._wrap({m: c for m, c in acc.items() if c})


def lower_invariant(inv: InvariantDescriptor) -> MomentPoly:
    total = lower(inv.tail)
    for t in inv.terms:
        total = total + lower(t.coef) * MomentPoly.var(t.kind, t.index, t.power)
    return total


def verify_invariant(inv: InvariantDescriptor) -> bool:
    return lower_invariant(inv).derive().is_zero()


def certify(inv: InvariantDescriptor) -> dict:
    """Certificate record ``{k, verified, term_count_before_cancellation}``."""
    d, raw = derive_counting(lower_invariant(inv))
    return {"k": inv.k, "verified": d.is_zero(), "term_count_before_cancellation": raw}


# -- numeric evaluation ------------------------------------------------------


class CompiledPoly:
    """Vectorised float evaluator: exponent matrix times coefficient vector."""

    def __init__(self, p: MomentPoly, dtype=np.float64):
        items = p.items()
        self.dtype = np.dtype(dtype)
        self.keys: list = ["q", "a"] + sorted(p.variables())
        col = {k: n for n, k in enumerate(self.keys)}
        self.exps = np.zeros((len(items), len(self.keys)), dtype=np.int64)
        self.coefs = np.array(
            [self.dtype.type(c.numerator) / self.dtype.type(c.denominator) for _, c in items], dtype=self.dtype
        )
        for r, (m, _) in enumerate(items):
            self.exps[r, 0] = m.q_exp
            self.exps[r, 1] = m.a_exp
            for v, e in m.vars:
                self.exps[r, col[v]] = e

    def __call__(self, values: Mapping):
        """Evaluate; values may be scalars or equal-length 1-D arrays."""
        cols = [np.asarray(values[k], dtype=self.dtype) for k in self.keys]
        shape = np.broadcast(*cols).shape if cols else ()
        if not len(self.coefs):
            return np.zeros(shape, dtype=self.dtype) if shape else self.dtype.type(0)
        prod = np.ones((len(self.coefs),) + shape, dtype=self.dtype)
        for n, x in enumerate(cols):
            e = self.exps[:, n]
            if not e.any():
                continue
            ex = e.astype(self.dtype)
            xe = np.power.outer(x, ex) if shape else np.power(x, ex)
            prod *= xe.T if shape else xe
        return self.coefs @ prod


def compile_poly(p: MomentPoly, dtype=np.float64) -> CompiledPoly:
    return CompiledPoly(p, dtype)
