"""Exact scalars: multivariate rational functions over Q.

Every quantity the engine manipulates (structure constants, highest-weight
labels, central charges, OPE coefficients) lives in the field Q(params) for a
fixed tuple of named parameters.  Polynomials are dicts from exponent vectors
to `Fraction`; rational functions keep a gcd-reduced numerator/denominator
pair with a monic denominator (graded-lex leading coefficient 1), so equality
is literal dict equality and "residual == 0" is meaningful without any
numeric tolerance.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Mapping, Union

QQ = Fraction

RationalLike = Union[int, Fraction]

__all__ = [
    "QQ",
    "ParameterContext",
    "ParamPolynomial",
    "ParamScalar",
    "PoleError",
    "random_specialize",
]


class PoleError(ZeroDivisionError):
    """A substitution or specialization hit a vanishing denominator."""


class ParameterContext:
    """An ordered registry of parameter names defining Q(names)."""

    __slots__ = ("names", "_index", "_zero_exp", "_poly_zero", "_poly_one", "_one", "_zero")

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter names: %r" % (names,))
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}
        self._zero_exp = (0,) * len(names)
        self._poly_zero = ParamPolynomial(self, {})
        self._poly_one = ParamPolynomial(self, {self._zero_exp: QQ(1)})
        self._zero = ParamScalar(self._poly_zero, self._poly_one, _reduced=True)
        self._one = ParamScalar(self._poly_one, self._poly_one, _reduced=True)

    def __repr__(self):
        return "ParameterContext(%s)" % ", ".join(self.names)

    def __eq__(self, other):
        return isinstance(other, ParameterContext) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    # -- constructors ----------------------------------------------------

    def poly_const(self, c: RationalLike) -> "ParamPolynomial":
        c = QQ(c)
        if c == 0:
            return self._poly_zero
        return ParamPolynomial(self, {self._zero_exp: c})

    def poly_param(self, name: str) -> "ParamPolynomial":
        exp = [0] * len(self.names)
        exp[self._index[name]] = 1
        return ParamPolynomial(self, {tuple(exp): QQ(1)})

    def const(self, c: RationalLike) -> "ParamScalar":
        if c == 0:
            return self._zero
        if c == 1:
            return self._one
        return ParamScalar(self.poly_const(c), self._poly_one, _reduced=True)

    def param(self, name: str) -> "ParamScalar":
        return ParamScalar(self.poly_param(name), self._poly_one, _reduced=True)

    def zero(self) -> "ParamScalar":
        return self._zero

    def one(self) -> "ParamScalar":
        return self._one

    def scalar(self, value) -> "ParamScalar":
        """Coerce an int, Fraction, name, polynomial or scalar into Q(params)."""
        if isinstance(value, ParamScalar):
            if value.context is not self and value.context != self:
                raise ValueError("scalar from foreign context")
            return value
        if isinstance(value, ParamPolynomial):
            return ParamScalar(value, self._poly_one, _reduced=True)
        if isinstance(value, str):
            return self.param(value)
        return self.const(value)


def _grlex_key(item):
    exp, _ = item
    return (sum(exp), exp)


class ParamPolynomial:
    """Multivariate polynomial over Q: {exponent tuple -> Fraction}."""

    __slots__ = ("context", "terms", "_hash")

    def __init__(self, context: ParameterContext, terms: Mapping[tuple, Fraction]):
        self.context = context
        self.terms = {e: c for e, c in terms.items() if c != 0}
        self._hash = None

    # -- basics -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.context._zero_exp in self.terms)

    def constant_value(self) -> Fraction:
        if not self.terms:
            return QQ(0)
        if not self.is_constant():
            raise ValueError("not a constant polynomial: %s" % self)
        return self.terms[self.context._zero_exp]

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def degree_in(self, var: int) -> int:
        if not self.terms:
            return -1
        return max(e[var] for e in self.terms)

    def leading(self) -> tuple:
        """(exponent, coefficient) of the graded-lex leading term."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        exp = max(self.terms.items(), key=_grlex_key)[0]
        return exp, self.terms[exp]

    def __eq__(self, other):
        return (
            isinstance(other, ParamPolynomial)
            and self.context.names == other.context.names
            and self.terms == other.terms
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.context.names, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self):
        return ParamPolynomial(self.context, {e: -c for e, c in self.terms.items()})

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, QQ(0)) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return ParamPolynomial(self.context, out)

    def __sub__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, QQ(0)) - c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return ParamPolynomial(self.context, out)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = QQ(other)
            if q == 0:
                return self.context._poly_zero
            return ParamPolynomial(self.context, {e: c * q for e, c in self.terms.items()})
        if not self.terms or not other.terms:
            return self.context._poly_zero
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, QQ(0)) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return ParamPolynomial(self.context, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = self.context._poly_one
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def scale(self, q: Fraction) -> "ParamPolynomial":
        return self * q

    # -- division and gcd ---------------------------------------------------

    def exact_div(self, divisor: "ParamPolynomial") -> "ParamPolynomial":
        """Exact polynomial division; raises ValueError if not divisible."""
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if self.is_zero():
            return self
        if divisor.is_constant():
            inv = 1 / divisor.constant_value()
            return self * inv
        rem = dict(self.terms)
        out: dict = {}
        dexp, dcoef = divisor.leading()
        # graded-lex single-divisor division; exact iff remainder empties
        while rem:
            exp = max(rem.items(), key=_grlex_key)[0]
            coef = rem[exp]
            qexp = tuple(a - b for a, b in zip(exp, dexp))
            if any(x < 0 for x in qexp):
                raise ValueError("polynomial not divisible")
            qcoef = coef / dcoef
            out[qexp] = out.get(qexp, QQ(0)) + qcoef
            for e2, c2 in divisor.terms.items():
                e = tuple(a + b for a, b in zip(qexp, e2))
                s = rem.get(e, QQ(0)) - qcoef * c2
                if s:
                    rem[e] = s
                else:
                    rem.pop(e, None)
        return ParamPolynomial(self.context, out)

    def _main_var(self, other: "ParamPolynomial") -> int:
        for v in range(len(self.context.names) - 1, -1, -1):
            if self.degree_in(v) > 0 or other.degree_in(v) > 0:
                return v
        return -1

    def _univariate_in(self, var: int) -> dict:
        """View as univariate in `var`: {deg -> ParamPolynomial without var}."""
        out: dict = {}
        for e, c in self.terms.items():
            d = e[var]
            e0 = e[:var] + (0,) + e[var + 1 :]
            out.setdefault(d, {})[e0] = c
        return {d: ParamPolynomial(self.context, t) for d, t in out.items()}

    @staticmethod
    def _from_univariate(context: ParameterContext, var: int, coeffs: dict) -> "ParamPolynomial":
        terms: dict = {}
        for d, poly in coeffs.items():
            for e, c in poly.terms.items():
                e2 = e[:var] + (d,) + e[var + 1 :]
                terms[e2] = terms.get(e2, QQ(0)) + c
        return ParamPolynomial(context, terms)

    def monic(self) -> "ParamPolynomial":
        if self.is_zero():
            return self
        _, c = self.leading()
        return self * (1 / c)

    def gcd(self, other: "ParamPolynomial") -> "ParamPolynomial":
        """Monic gcd via primitive PRS, recursing over variables."""
        a, b = self, other
        if a.is_zero():
            return b.monic()
        if b.is_zero():
            return a.monic()
        if a.is_constant() or b.is_constant():
            return self.context._poly_one
        var = a._main_var(b)
        if a.degree_in(var) == 0 and b.degree_in(var) == 0:
            # both free of every variable above; only possible if constants
            return self.context._poly_one
        ua, ub = a._univariate_in(var), b._univariate_in(var)
        cont_a = _list_gcd(list(ua.values()), self.context)
        cont_b = _list_gcd(list(ub.values()), self.context)
        cont = cont_a.gcd(cont_b)
        pa = a.exact_div(cont_a)
        pb = b.exact_div(cont_b)
        if pa.degree_in(var) < pb.degree_in(var):
            pa, pb = pb, pa
        while True:
            rem = _pseudo_rem(pa, pb, var)
            if rem.is_zero():
                g = _primitive_part(pb, var)
                break
            if rem.degree_in(var) == 0:
                g = self.context._poly_one
                break
            pa, pb = pb, _primitive_part(rem, var)
        return (cont * g).monic()

    def derivative(self, name: str) -> "ParamPolynomial":
        var = self.context._index[name]
        out: dict = {}
        for e, c in self.terms.items():
            if e[var]:
                e2 = e[:var] + (e[var] - 1,) + e[var + 1 :]
                out[e2] = out.get(e2, QQ(0)) + c * e[var]
        return ParamPolynomial(self.context, out)

    # -- evaluation -----------------------------------------------------------

    def evaluate(self, values: Mapping[str, RationalLike]) -> Fraction:
        idx = self.context._index
        vals = [QQ(0)] * len(self.context.names)
        for name, v in values.items():
            vals[idx[name]] = QQ(v)
        total = QQ(0)
        for e, c in self.terms.items():
            term = c
            for i, p in enumerate(e):
                if p:
                    term *= vals[i] ** p
            total += term
        return total

    def substitute(self, mapping: Mapping[str, "ParamScalar"], target: ParameterContext) -> "ParamScalar":
        """Map each parameter to a scalar over `target` (identity if absent)."""
        cache: dict = {}

        def image(i: int) -> "ParamScalar":
            if i not in cache:
                name = self.context.names[i]
                if name in mapping:
                    cache[i] = target.scalar(mapping[name])
                else:
                    if name not in target._index:
                        raise ValueError("parameter %r absent from target context" % name)
                    cache[i] = target.param(name)
            return cache[i]

        total = target.zero()
        for e, c in self.terms.items():
            term = target.const(c)
            for i, p in enumerate(e):
                if p:
                    term = term * (image(i) ** p)
            total = total + term
        return total

    # -- printing ---------------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        names = self.context.names
        parts = []
        for e, c in sorted(self.terms.items(), key=_grlex_key, reverse=True):
            factors = []
            for i, p in enumerate(e):
                if p == 1:
                    factors.append(names[i])
                elif p > 1:
                    factors.append("%s^%d" % (names[i], p))
            body = "*".join(factors)
            if not body:
                parts.append(str(c))
            elif c == 1:
                parts.append(body)
            elif c == -1:
                parts.append("-" + body)
            else:
                parts.append("%s*%s" % (c, body))
        out = parts[0]
        for p in parts[1:]:
            out += ("+" + p) if not p.startswith("-") else p
        return out

    __repr__ = __str__


def _list_gcd(polys, context) -> ParamPolynomial:
    g = context._poly_zero
    for p in polys:
        g = g.gcd(p)
        if g.is_constant() and not g.is_zero():
            return context._poly_one
    return g


def _primitive_part(p: ParamPolynomial, var: int) -> ParamPolynomial:
    u = p._univariate_in(var)
    cont = _list_gcd(list(u.values()), p.context)
    if cont.is_zero():
        return p
    return p.exact_div(cont)


def _pseudo_rem(a: ParamPolynomial, b: ParamPolynomial, var: int) -> ParamPolynomial:
    """Classical pseudo-remainder of a by b w.r.t. the main variable."""
    da, db = a.degree_in(var), b.degree_in(var)
    if da < db:
        return a
    ub = b._univariate_in(var)
    lb = ub[db]
    rem = a
    ctx = a.context
    while not rem.is_zero() and rem.degree_in(var) >= db:
        dr = rem.degree_in(var)
        ur = rem._univariate_in(var)
        lr = ur[dr]
        # rem <- lb*rem - lr * x^(dr-db) * b
        shift_exp = [0] * len(ctx.names)
        shift_exp[var] = dr - db
        shift = ParamPolynomial(ctx, {tuple(shift_exp): QQ(1)})
        rem = lb * rem - lr * shift * b
    return rem


class ParamScalar:
    """Element of Q(params): reduced fraction of ParamPolynomials.

    Canonical form: gcd(num, den) == 1 and den monic in graded-lex order, so
    == is structural equality.  All arithmetic stays exact.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: ParamPolynomial, den: ParamPolynomial, _reduced: bool = False):
        if den.is_zero():
            raise ZeroDivisionError("zero denominator in ParamScalar")
        if not _reduced:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den
        self._hash = None

    @property
    def context(self) -> ParameterContext:
        return self.num.context

    # -- predicates ---------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_rational(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def as_fraction(self) -> Fraction:
        return self.num.constant_value() / self.den.constant_value()

    def is_integer(self) -> bool:
        return self.is_rational() and self.as_fraction().denominator == 1

    def __bool__(self):
        return not self.num.is_zero()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.as_fraction() == other
        return (
            isinstance(other, ParamScalar)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self):
        if self._hash is None:
            if self.is_rational():
                self._hash = hash(self.as_fraction())
            else:
                self._hash = hash((self.num, self.den))
        return self._hash

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "ParamScalar":
        if isinstance(other, ParamScalar):
            return other
        if isinstance(other, (int, Fraction)):
            return self.context.const(other)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.is_zero():
            return o
        if o.is_zero():
            return self
        if self.is_rational() and o.is_rational():
            return self.context.const(self.as_fraction() + o.as_fraction())
        if self.den == o.den:
            return ParamScalar(self.num + o.num, self.den)
        return ParamScalar(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return ParamScalar(-self.num, self.den, _reduced=True)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return self.context.zero()
        if self.is_rational() and o.is_rational():
            return self.context.const(self.as_fraction() * o.as_fraction())
        return ParamScalar(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def inverse(self) -> "ParamScalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero scalar")
        return ParamScalar(self.den, self.num)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n == 0:
            return self.context.one()
        if n < 0:
            return self.inverse() ** (-n)
        result = self.context.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def derivative(self, name: str) -> "ParamScalar":
        """Partial derivative by the quotient rule; exact."""
        dn = self.num.derivative(name)
        dd = self.den.derivative(name)
        if dd.is_zero():
            return ParamScalar(dn, self.den)
        return ParamScalar(dn * self.den - self.num * dd, self.den * self.den)

    # -- substitution / evaluation -------------------------------------------

    def substitute(self, mapping: Mapping[str, "ParamScalar"], target: ParameterContext | None = None) -> "ParamScalar":
        target = target or self.context
        num = self.num.substitute(mapping, target)
        den = self.den.substitute(mapping, target)
        if den.is_zero():
            raise PoleError("substitution hit a pole: denominator %s vanished" % self.den)
        return num / den

    def evaluate(self, values: Mapping[str, RationalLike]) -> Fraction:
        d = self.den.evaluate(values)
        if d == 0:
            raise PoleError("evaluation hit a pole: denominator %s vanished" % self.den)
        return self.num.evaluate(values) / d

    # -- printing ----------------------------------------------------------------

    def __str__(self):
        if self.den == self.context._poly_one:
            return str(self.num)
        num = str(self.num)
        if len(self.num.terms) > 1 or "/" in num or "*" in num:
            num = "(%s)" % num
        den = str(self.den)
        if len(self.den.terms) > 1 or "/" in den or "*" in den:
            den = "(%s)" % den
        return "%s/%s" % (num, den)

    __repr__ = __str__


def _reduce(num: ParamPolynomial, den: ParamPolynomial):
    if num.is_zero():
        return num, num.context._poly_one
    if den.is_constant():
        c = den.constant_value()
        return num * (1 / c), num.context._poly_one
    if num.is_constant():
        _, lc = den.leading()
        return num * (1 / lc), den * (1 / lc)
    g = num.gcd(den)
    if not g.is_constant():
        num = num.exact_div(g)
        den = den.exact_div(g)
    if den.is_constant():
        c = den.constant_value()
        return num * (1 / c), num.context._poly_one
    _, lc = den.leading()
    return num * (1 / lc), den * (1 / lc)


def scalars_equal_lazy(a: ParamScalar, b: ParamScalar) -> bool:
    """Cross-multiplication equality; no canonicalization assumed."""
    return (a.num * b.den - b.num * a.den).is_zero()


def random_specialize(
    scalars: Iterable[ParamScalar],
    context: ParameterContext,
    seed: int = 0,
    bound: int = 10**6,
    max_redraws: int = 64,
) -> tuple[dict, list]:
    """Draw integer parameter values avoiding every denominator's zero set.

    Returns (assignment, evaluated Fractions) for the given scalars.  The
    Schwartz-Zippel bound makes a false zero at random integer points in
    [-bound, bound] overwhelmingly unlikely; pole hits redraw up to
    `max_redraws` times before raising PoleError.
    """
    scalars = list(scalars)
    rng = random.Random(seed)
    for _ in range(max_redraws):
        assignment = {name: rng.randint(-bound, bound) for name in context.names}
        try:
            values = [s.evaluate(assignment) for s in scalars]
        except PoleError:
            continue
        return assignment, values
    raise PoleError("could not avoid poles after %d redraws" % max_redraws)
