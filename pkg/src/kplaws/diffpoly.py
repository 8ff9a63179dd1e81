"""Exact differential polynomials in q and its time derivatives.

An element of the ring is a finite sum of rational multiples of monomials

    q^e * a^f * (q')^n1 * (q'')^n2 * ...

where ``e`` and ``f`` are arbitrary integers (Laurent) and the ``n_h`` are
nonnegative.  Coefficients are :class:`fractions.Fraction`, so identity tests
are exact.  ``a`` is a constant parameter: it does not depend on time.

Values are immutable; every operation returns a new polynomial in normal
form (no zero coefficients stored).
"""

from __future__ import annotations

from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Union

Scalar = Union[int, Fraction]


class DiffMonomial(NamedTuple):
    """``q^q_exp * a^a_exp * prod (q^(h))^e`` for ``(h, e)`` in ``derivs``.

    ``derivs`` is sorted by ``h`` and holds no zero exponents, so tuple
    equality is monomial equality and tuple ordering is the canonical order.
    """

    q_exp: int = 0
    a_exp: int = 0
    derivs: tuple[tuple[int, int], ...] = ()

    @property
    def deriv_exps(self) -> dict[int, int]:
        return dict(self.derivs)

    def max_order(self) -> int:
        return self.derivs[-1][0] if self.derivs else 0


ONE = DiffMonomial()


def _merge(d1, d2):
    if not d1:
        return d2
    if not d2:
        return d1
    acc = dict(d1)
    for h, e in d2:
        acc[h] = acc.get(h, 0) + e
    return tuple(sorted(acc.items()))


def _bump(derivs, h, delta):
    """Change the exponent of q^(h) by ``delta``, dropping it if it hits zero."""
    acc = dict(derivs)
    e = acc.get(h, 0) + delta
    if e < 0:
        raise ValueError("negative exponent on a derivative of q")
    if e:
        acc[h] = e
    else:
        acc.pop(h, None)
    return tuple(sorted(acc.items()))


class DiffPoly:
    """Sparse polynomial ``{DiffMonomial: Fraction}`` kept in normal form."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[DiffMonomial, Scalar] | None = None):
        clean: dict[DiffMonomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                mono = DiffMonomial(mono[0], mono[1], tuple(sorted((h, e) for h, e in mono[2] if e)))
                if any(h < 1 or e < 0 for h, e in mono.derivs):
                    raise ValueError(f"invalid monomial {mono!r}")
                c = Fraction(c) + clean.get(mono, 0)
                if c:
                    clean[mono] = c
                else:
                    clean.pop(mono, None)
        self._terms = clean
        self._hash = None

    @classmethod
    def _wrap(cls, terms: dict[DiffMonomial, Fraction]) -> DiffPoly:
        # trusted constructor: caller guarantees normal form
        out = object.__new__(cls)
        out._terms = terms
        out._hash = None
        return out

    # -- constructors -----------------------------------------------------

    @classmethod
    def const(cls, c: Scalar) -> DiffPoly:
        return cls({ONE: c})

    @classmethod
    def monomial(cls, c: Scalar = 1, q_exp: int = 0, a_exp: int = 0, **derivs: int) -> DiffPoly:
        """``monomial(3, q_exp=1, d2=1)`` is ``3 q q''``."""
        d = tuple(sorted((int(k[1:]), e) for k, e in derivs.items() if e))
        return cls({DiffMonomial(q_exp, a_exp, d): c})

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> Mapping[DiffMonomial, Fraction]:
        return MappingProxyType(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def max_order(self) -> int:
        """Highest h such that q^(h) occurs; 0 if only powers of q and a occur."""
        if not self._terms:
            raise ValueError("order of the zero polynomial is undefined")
        return max(m.max_order() for m in self._terms)

    def min_q_exp(self) -> int:
        if not self._terms:
            raise ValueError("zero polynomial")
        return min(m.q_exp for m in self._terms)

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(other) -> DiffPoly:
        if isinstance(other, DiffPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return DiffPoly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                del out[m]
        return DiffPoly._wrap(out)

    __radd__ = __add__

    def __neg__(self) -> DiffPoly:
        return DiffPoly._wrap({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, c: Scalar) -> DiffPoly:
        c = Fraction(c)
        if not c:
            return ZERO
        return DiffPoly._wrap({m: v * c for m, v in self._terms.items()})

    def shift(self, q_exp: int = 0, a_exp: int = 0) -> DiffPoly:
        """Multiply by ``q^q_exp a^a_exp``."""
        return DiffPoly._wrap(
            {DiffMonomial(m.q_exp + q_exp, m.a_exp + a_exp, m.derivs): c for m, c in self._terms.items()}
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        out: dict[DiffMonomial, Fraction] = {}
        for mb, cb in b.items():
            for ma, ca in a.items():
                m = DiffMonomial(ma.q_exp + mb.q_exp, ma.a_exp + mb.a_exp, _merge(ma.derivs, mb.derivs))
                out[m] = out.get(m, 0) + ca * cb
        return DiffPoly._wrap({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, n: int) -> DiffPoly:
        if n < 0:
            raise ValueError("negative powers are only available through shift()")
        result, base = DiffPoly.const(1), self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = DiffPoly.const(other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- calculus ---------------------------------------------------------

    def derive(self, times: int = 1) -> DiffPoly:
        """Time derivative: d/dt q^e = e q^(e-1) q', d/dt q^(h) = q^(h+1), a' = 0."""
        p = self
        for _ in range(times):
            p = p._derive_once()
        return p

    def _derive_once(self) -> DiffPoly:
        out: dict[DiffMonomial, Fraction] = {}
        for m, c in self._terms.items():
            if m.q_exp:
                nm = DiffMonomial(m.q_exp - 1, m.a_exp, _bump(m.derivs, 1, 1))
                out[nm] = out.get(nm, 0) + c * m.q_exp
            for h, e in m.derivs:
                nd = _bump(_bump(m.derivs, h, -1), h + 1, 1)
                nm = DiffMonomial(m.q_exp, m.a_exp, nd)
                out[nm] = out.get(nm, 0) + c * e
        return DiffPoly._wrap({m: c for m, c in out.items() if c})

    def divide_by_q(self) -> DiffPoly:
        return self.shift(q_exp=-1)

    # -- text -------------------------------------------------------------

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"DiffPoly({render(self)!r})"


ZERO = DiffPoly()


def q_var(power: int = 1) -> DiffPoly:
    return DiffPoly({DiffMonomial(power, 0, ()): 1})


def a_var(power: int = 1) -> DiffPoly:
    return DiffPoly({DiffMonomial(0, power, ()): 1})


def qd(h: int, power: int = 1) -> DiffPoly:
    """The h-th time derivative of q raised to ``power`` (h = 0 gives q itself)."""
    if h == 0:
        return q_var(power)
    if h < 0 or power < 0:
        raise ValueError("need h >= 0 and power >= 0")
    return DiffPoly({DiffMonomial(0, 0, ((h, power),)): 1})


def is_antiderivative(F: DiffPoly, f: DiffPoly) -> bool:
    """True iff dF/dt == f exactly."""
    return (F.derive() - f).is_zero()


def dp_sum(polys: Iterable[DiffPoly]) -> DiffPoly:
    out: dict[DiffMonomial, Fraction] = {}
    for p in polys:
        for m, c in p._terms.items():
            out[m] = out.get(m, 0) + c
    return DiffPoly._wrap({m: c for m, c in out.items() if c})


# -- rendering ---------------------------------------------------------------

_SUP = str.maketrans("0123456789-", "⁰¹²³⁴⁵⁶⁷⁸⁹⁻")
_PRIMES = {1: "′", 2: "″", 3: "‴"}


def sup(n: int) -> str:
    return "" if n == 1 else str(n).translate(_SUP)


def _symbol(h: int) -> str:
    if h == 0:
        return "q"
    if h in _PRIMES:
        return "q" + _PRIMES[h]
    return "q" + "⁽" + str(h).translate(_SUP) + "⁾"


def monomial_parts(m: DiffMonomial, c: Fraction) -> tuple[str, str, str]:
    """Split ``c*m`` into (sign, numerator, denominator) text.

    Numerator/denominator are ``·``-joined factors; an integer coefficient of
    magnitude 1 is omitted, so ``-1 * q'`` gives ``("-", "q′", "")``.
    """
    sign = "-" if c < 0 else "+"
    num: list[str] = []
    den: list[str] = []
    if abs(c.numerator) != 1:
        num.append(str(abs(c.numerator)))
    if c.denominator != 1:
        den.append(str(c.denominator))
    factors = [("a", m.a_exp), ("q", m.q_exp)] + [(_symbol(h), e) for h, e in m.derivs]
    for name, e in factors:
        if e > 0:
            num.append(name + sup(e))
        elif e < 0:
            den.append(name + sup(-e))
    # a leading integer glues to the next factor: "3q" rather than "3·q"
    if len(num) > 1 and num[0].isdigit():
        num = [num[0] + num[1]] + num[2:]
    return sign, "·".join(num), "·".join(den)


def _join_fraction(num: str, den: str) -> str:
    num = num or "1"
    if not den:
        return num
    if "·" in den:
        den = f"({den})"
    return f"{num}/{den}"


def render_terms(items) -> str:
    """Render (monomial, coefficient) pairs as ``t1 + t2 − t3``."""
    chunks = []
    for i, (m, c) in enumerate(items):
        sign, num, den = monomial_parts(m, c)
        body = _join_fraction(num, den)
        if i == 0:
            chunks.append(("−" if sign == "-" else "") + body)
        else:
            chunks.append((" − " if sign == "-" else " + ") + body)
    return "".join(chunks)


def render(p: DiffPoly) -> str:
    if p.is_zero():
        return "0"
    return render_terms(p.items())


# -- serialization -----------------------------------------------------------


def to_json(p: DiffPoly) -> list:
    """``[[coef, q_exp, a_exp, [[h, e], ...]], ...]`` in canonical order."""
    return [[str(c), m.q_exp, m.a_exp, [list(d) for d in m.derivs]] for m, c in p.items()]


def from_json(data: list) -> DiffPoly:
    return DiffPoly(
        {DiffMonomial(int(qe), int(ae), tuple((int(h), int(e)) for h, e in d)): Fraction(c) for c, qe, ae, d in data}
    )
