"""Symbolic chiral fields: Wick-contraction products and exact mode action.

A field expression is a finite sum of normal-ordered terms

    coeff * :D^{k_1}(f_1) ... D^{k_r}(f_r) V[mu]:

where each ``f_i`` is one of the basic fields

* ``p``     -- derivative of the boson potential, modes ``-b_n`` at z^{-n-1};
* ``beta``  -- weight-one half of the charged pair, modes ``a_n`` at z^{-n-1};
* ``gamma`` -- weight-zero half, modes ``a*_n`` at z^{-n};

and ``V[mu]`` is an (optional, at most one per point) exponential vertex
factor: the normally ordered exponential of ``-mu`` times the boson
potential, together with the vacuum-label shift by ``mu``.  Derivatives of
vertex factors reduce inside the grammar: D(V[mu]) = -mu :p V[mu]:, which is
exact here because the mode expansion of ``p`` retains the boson zero mode.

Two independent evaluation routes are provided and cross-checked in tests:

* ``wick_ope`` -- the symbolic pairing expansion of a product
  ``L(z) R(w)``: sum over sets of contractions between the two points, with
  the uncontracted z-side factors re-expanded at w to the order of the pole.
  Contraction seeds: {p p} = 2/(z-w)^2, {gamma beta} = +1/(z-w),
  {beta gamma} = -1/(z-w), {p V[mu]} = -2 mu/(z-w) * V[mu].

* ``apply_field_coeff`` -- the exact action of the coefficient of ``z^e`` in
  a field expression on a Fock vector.  Annihilation is bounded by the
  source vector and creation by the (determined) target block, so every mode
  sum is finite and no truncation error is introduced.

``ope_bracket_action`` converts an OPE table into mode brackets through
residues of ``z^n/(z-w)^k``; agreement with direct double application is the
engine's central cross-check.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .fock import (
    FockSpace,
    FockVector,
    ModeOperator,
    _partitions,
    is_annihilator,
    osc_apply,
)
from .scalars import ParamScalar, ParameterContext

QQ = Fraction

Factor = tuple[str, int]  # (symbol, derivative order)

_FIELD_SYMBOLS = ("p", "beta", "gamma")
_WEIGHT = {"p": 1, "beta": 1, "gamma": 0}
_CHARGE = {"p": 0, "beta": -1, "gamma": 1}


class UnsupportedPairingError(ValueError):
    """A Wick pairing outside the supported grammar was requested."""


def _check_factor(factor: Factor) -> Factor:
    sym, k = factor
    if sym not in _FIELD_SYMBOLS:
        raise ValueError("unknown field symbol %r" % (sym,))
    if k < 0:
        raise ValueError("negative derivative order")
    return factor


class FieldExpr:
    """Sum of normal-ordered field monomials with exact coefficients.

    Terms are keyed by (vertex exponent | None, sorted factor tuple); the
    vertex exponent is an exact scalar.  Expressions form a commutative
    algebra under the pointwise normal product.
    """

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: ParameterContext, terms: dict | None = None):
        self.ctx = ctx
        self.terms = {} if terms is None else terms

    # -- constructors -----------------------------------------------------------

    @classmethod
    def zero(cls, ctx: ParameterContext) -> "FieldExpr":
        return cls(ctx, {})

    @classmethod
    def scalar(cls, ctx: ParameterContext, value) -> "FieldExpr":
        c = ctx.scalar(value)
        if c.is_zero():
            return cls(ctx, {})
        return cls(ctx, {(None, ()): c})

    @classmethod
    def field(cls, ctx: ParameterContext, sym: str, k: int = 0) -> "FieldExpr":
        _check_factor((sym, k))
        return cls(ctx, {(None, ((sym, k),)): ctx.one()})

    @classmethod
    def vertex(cls, ctx: ParameterContext, mu) -> "FieldExpr":
        mu = ctx.scalar(mu)
        if mu.is_zero():
            return cls.scalar(ctx, 1)
        return cls(ctx, {(mu, ()): ctx.one()})

    @classmethod
    def from_terms(cls, ctx: ParameterContext, items) -> "FieldExpr":
        out = cls(ctx, {})
        for key, c in items:
            out._bump(key, ctx.scalar(c))
        return out

    # -- linear structure ----------------------------------------------------------

    def _bump(self, key, c: ParamScalar):
        if c.is_zero():
            return
        cur = self.terms.get(key)
        s = c if cur is None else cur + c
        if s.is_zero():
            self.terms.pop(key, None)
        else:
            self.terms[key] = s

    def __add__(self, other: "FieldExpr") -> "FieldExpr":
        out = FieldExpr(self.ctx, dict(self.terms))
        for key, c in other.terms.items():
            out._bump(key, c)
        return out

    def __sub__(self, other: "FieldExpr") -> "FieldExpr":
        return self + (-other)

    def __neg__(self) -> "FieldExpr":
        return FieldExpr(self.ctx, {k: -c for k, c in self.terms.items()})

    def __rmul__(self, scalar) -> "FieldExpr":
        c = self.ctx.scalar(scalar)
        if c.is_zero():
            return FieldExpr(self.ctx, {})
        return FieldExpr(self.ctx, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        """Normal product at one point; vertex exponents add."""
        if not isinstance(other, FieldExpr):
            return NotImplemented
        out = FieldExpr(self.ctx, {})
        for (mu1, f1), c1 in self.terms.items():
            for (mu2, f2), c2 in other.terms.items():
                mu = _merge_vertex(self.ctx, mu1, mu2)
                out._bump((mu, tuple(sorted(f1 + f2))), c1 * c2)
        return out

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.terms.values())

    def __eq__(self, other):
        return (
            isinstance(other, FieldExpr)
            and self.ctx == other.ctx
            and (self - other).is_zero()
        )

    __hash__ = None

    # -- calculus -----------------------------------------------------------------

    def derivative(self) -> "FieldExpr":
        out = FieldExpr(self.ctx, {})
        for (mu, factors), c in self.terms.items():
            for i, (sym, k) in enumerate(factors):
                bumped = tuple(sorted(factors[:i] + ((sym, k + 1),) + factors[i + 1 :]))
                out._bump((mu, bumped), c)
            if mu is not None:
                grown = tuple(sorted(factors + (("p", 0),)))
                out._bump((mu, grown), -mu * c)
        return out

    # -- homogeneity data -----------------------------------------------------------

    def conformal_weight(self) -> int:
        """Declared weight: sum of factor weights + derivative orders.

        Defined only for weight-homogeneous expressions.
        """
        weights = {_term_weight(f) for (_, f) in self.terms}
        if not weights:
            return 0
        if len(weights) > 1:
            raise ValueError("expression is not weight-homogeneous: %s" % sorted(weights))
        return weights.pop()

    def charge(self) -> int:
        charges = {sum(_CHARGE[s] for s, _ in f) for (_, f) in self.terms}
        if not charges:
            return 0
        if len(charges) > 1:
            raise ValueError("expression is not charge-homogeneous")
        return charges.pop()

    def vertex_exponent(self) -> ParamScalar:
        """Common vertex exponent (zero when no term carries a vertex)."""
        mus = {mu for (mu, _) in self.terms}
        if not mus:
            return self.ctx.zero()
        if len(mus) > 1:
            raise ValueError("terms carry different vertex exponents")
        mu = mus.pop()
        return self.ctx.zero() if mu is None else mu

    # -- display -----------------------------------------------------------------

    def render(self, point: str = "w") -> str:
        if not self.terms:
            return "0"
        bits = []
        for key in sorted(self.terms, key=_term_sort_key):
            mu, factors = key
            c = self.terms[key]
            body = _render_body(mu, factors, point)
            coeff = str(c)
            if body is None:
                bits.append(coeff)
            elif coeff == "1":
                bits.append(body)
            elif coeff == "-1":
                bits.append("-" + body)
            else:
                coeff = "(%s)" % coeff if ("+" in coeff or " - " in coeff) else coeff
                bits.append("%s*%s" % (coeff, body))
        out = " + ".join(bits)
        return out.replace("+ -", "- ")

    def __repr__(self):
        return self.render()


def _merge_vertex(ctx, mu1, mu2):
    if mu1 is None:
        return mu2
    if mu2 is None:
        return mu1
    s = mu1 + mu2
    return None if s.is_zero() else s


def _term_weight(factors: tuple[Factor, ...]) -> int:
    return sum(_WEIGHT[s] + k for s, k in factors)


def _term_sort_key(key):
    mu, factors = key
    return (mu is not None, factors)


def _render_body(mu, factors, point):
    names = []
    for sym, k in factors:
        prime = "'" * k if k <= 3 else None
        names.append("%s%s(%s)" % (sym, prime, point) if prime is not None
                     else "D^%d(%s)(%s)" % (k, sym, point))
    if mu is not None:
        names.append("V[%s](%s)" % (mu, point))
    if not names:
        return None
    if len(names) == 1:
        return names[0]
    return ":%s:" % " ".join(names)


# -- presets -------------------------------------------------------------------------


def p_field(ctx: ParameterContext) -> FieldExpr:
    return FieldExpr.field(ctx, "p")


def beta_field(ctx: ParameterContext) -> FieldExpr:
    return FieldExpr.field(ctx, "beta")


def gamma_field(ctx: ParameterContext) -> FieldExpr:
    return FieldExpr.field(ctx, "gamma")


def vertex_field(ctx: ParameterContext, mu) -> FieldExpr:
    return FieldExpr.vertex(ctx, mu)


def stress_tensor(ctx: ParameterContext, alpha0) -> FieldExpr:
    """Quarter of the squared boson derivative, minus alpha0 times its slope."""
    p = p_field(ctx)
    return QQ(1, 4) * (p * p) - ctx.scalar(alpha0) * FieldExpr.field(ctx, "p", 1)


# -- contraction seeds -----------------------------------------------------------------

_BASE_CONTRACTIONS = {
    ("p", "p"): (QQ(2), 2),
    ("gamma", "beta"): (QQ(1), 1),
    ("beta", "gamma"): (QQ(-1), 1),
}


def _rising(r: int, s: int) -> int:
    out = 1
    for i in range(s):
        out *= r + i
    return out


def _pair_contraction(ctx, left: Factor, right: Factor):
    """{D^a f(z) D^b g(w)} as (coefficient, pole order), or None."""
    base = _BASE_CONTRACTIONS.get((left[0], right[0]))
    if base is None:
        return None
    c, r = base
    a, b = left[1], right[1]
    coeff = c * ((-1) ** a) * _rising(r, a + b)
    return ctx.scalar(coeff), r + a + b


def _vertex_contraction(ctx, left: Factor, mu: ParamScalar):
    """{D^a p(z) V[mu](w)} = -2 mu (-1)^a a! / (z-w)^{a+1} * V[mu](w)."""
    if left[0] != "p":
        return None
    a = left[1]
    coeff = (-2 * ((-1) ** a) * math.factorial(a)) * mu
    return coeff, a + 1


# -- OPE engine ---------------------------------------------------------------------------


class OpeResult:
    """Singular part of a product: pole order -> coefficient expression.

    For a multi-point insertion list the keys are (insertion index, pole
    order) and each coefficient is reported per insertion point, the other
    (untouched) insertions multiplying on unchanged.
    """

    __slots__ = ("ctx", "table", "npoints")

    def __init__(self, ctx: ParameterContext, table: dict, npoints: int = 1):
        self.ctx = ctx
        self.table = {k: v for k, v in table.items() if not v.is_zero()}
        self.npoints = npoints

    def pole(self, order, point: int | None = None) -> FieldExpr:
        key = order if self.npoints == 1 else (0 if point is None else point, order)
        return self.table.get(key, FieldExpr.zero(self.ctx))

    def orders(self):
        return sorted(self.table)

    def max_order(self) -> int:
        if not self.table:
            return 0
        if self.npoints == 1:
            return max(self.table)
        return max(k for (_, k) in self.table)

    def is_regular(self) -> bool:
        return not self.table

    def __eq__(self, other):
        if not isinstance(other, OpeResult):
            return NotImplemented
        keys = set(self.table) | set(other.table)
        return self.npoints == other.npoints and all(
            (self.table.get(k, FieldExpr.zero(self.ctx))
             == other.table.get(k, FieldExpr.zero(self.ctx)))
            for k in keys
        )

    __hash__ = None

    def render(self) -> str:
        if not self.table:
            return "regular"
        bits = []
        for key in sorted(self.table, reverse=True):
            order = key if self.npoints == 1 else key[1]
            wname = "w" if self.npoints == 1 else "w%d" % (key[0] + 1)
            expr = self.table[key]
            body = expr.render(point=wname)
            pole = "(z-%s)" % wname if order == 1 else "(z-%s)^%d" % (wname, order)
            if body == "1":
                bits.append("1/%s" % pole)
            elif all(ch not in body for ch in "+-") or body.lstrip("-").isdigit():
                bits.append("%s/%s" % (body, pole))
            else:
                bits.append("(%s)/%s" % (body, pole))
        return " + ".join(bits)

    def __repr__(self):
        return self.render()


def wick_ope(left: FieldExpr, right) -> OpeResult:
    """Exact singular part of left(z) * right(w) by pairing expansion.

    ``right`` may be a single expression or a list of insertion expressions;
    in the list form at most one insertion may carry a vertex factor (the
    mutual singularity of two vertex insertions is not a Wick pairing; use
    the explicit multi-point normal-ordered product ``normal_multi_vertex``
    for that) and each pairing pattern touches one insertion at a time.
    """
    if isinstance(right, FieldExpr):
        return OpeResult(left.ctx, _single_point_ope(left, right))
    insertions = list(right)
    with_vertex = [
        i for i, r in enumerate(insertions)
        if any(mu is not None for (mu, _) in r.terms)
    ]
    if len(with_vertex) >= 2:
        raise UnsupportedPairingError(
            "insertions %r both carry vertex factors; their mutual singularity "
            "is not a Wick pairing -- use normal_multi_vertex" % (with_vertex,)
        )
    table: dict = {}
    for i, r in enumerate(insertions):
        for k, expr in _single_point_ope(left, r).items():
            table[(i, k)] = expr
    return OpeResult(left.ctx, table, npoints=len(insertions))


def _single_point_ope(left: FieldExpr, right: FieldExpr) -> dict:
    ctx = left.ctx
    table: dict[int, FieldExpr] = {}
    for (lmu, lfac), lc in left.terms.items():
        if lmu is not None:
            raise UnsupportedPairingError(
                "vertex factor on the z-side is outside the supported grammar"
            )
        for (rmu, rfac), rc in right.terms.items():
            base = lc * rc
            for pairs, used in _patterns(lfac, rfac, rmu is not None):
                if not pairs:
                    continue
                coeff = base
                order = 0
                ok = True
                for li, target in pairs:
                    if target == "v":
                        got = _vertex_contraction(ctx, lfac[li], rmu)
                    else:
                        got = _pair_contraction(ctx, lfac[li], rfac[target])
                    if got is None:
                        ok = False
                        break
                    c, r = got
                    coeff = coeff * c
                    order += r
                if not ok or coeff.is_zero():
                    continue
                rest_left = tuple(lfac[i] for i in range(len(lfac))
                                  if i not in {li for li, _ in pairs})
                rest_right = tuple(rfac[j] for j in range(len(rfac)) if j not in used)
                _taylor_accumulate(ctx, table, coeff, order, rest_left, rest_right, rmu)
    return {k: v for k, v in table.items() if not v.is_zero()}


def _patterns(lfac, rfac, has_vertex):
    """All pairing patterns: each z-side factor contracts with at most one
    w-side factor (each used at most once) or with the vertex (reusable)."""

    def rec(i, pairs, used):
        if i == len(lfac):
            yield list(pairs), set(used)
            return
        yield from rec(i + 1, pairs, used)  # leave factor i uncontracted
        for j in range(len(rfac)):
            if j not in used:
                yield from rec(i + 1, pairs + [(i, j)], used | {j})
        if has_vertex:
            yield from rec(i + 1, pairs + [(i, "v")], used)

    yield from rec(0, [], set())


def _taylor_accumulate(ctx, table, coeff, order, rest_left, rest_right, rmu):
    """Re-expand the untouched z-side factors at w up to the pole order."""

    def rec(i, shift, c, acquired):
        if i == len(rest_left):
            pole = order - shift
            if pole >= 1:
                factors = tuple(sorted(acquired + rest_right))
                expr = table.get(pole)
                if expr is None:
                    expr = FieldExpr.zero(ctx)
                    table[pole] = expr
                expr._bump((rmu, factors), c)
            return
        sym, k = rest_left[i]
        for t in range(order - shift):
            rec(i + 1, shift + t, c * QQ(1, math.factorial(t)), acquired + ((sym, k + t),))

    rec(0, 0, coeff, ())


# -- exact mode action ------------------------------------------------------------------


def apply_vertex(mu: ParamScalar, eps: int, vec: FockVector) -> FockVector:
    """Coefficient of z^eps in the exponential vertex with exponent mu.

    The annihilation half is bounded by the source vector's energy and the
    creation half is then pinned by eps, so the expansion is exact.
    """
    space = vec.space
    ctx = space.ctx
    mu = ctx.scalar(mu)
    target = space.shifted(mu)
    out = target.zero()
    if vec.is_zero():
        return out
    top = vec.energy_bound()
    for down in range(top + 1):
        up = down + eps
        if up < 0:
            continue
        for apart in _partitions(down):
            lowered = vec
            for n in apart:
                lowered = osc_apply(("b", n), lowered)
                if lowered.is_zero():
                    break
            if lowered.is_zero():
                continue
            c_a = _exp_multiset_coeff(ctx, mu, apart, annihilate=True)
            shifted = FockVector(target, lowered.terms)
            for cpart in _partitions(up):
                raised = shifted
                for m in cpart:
                    raised = osc_apply(("b", -m), raised)
                c = c_a * _exp_multiset_coeff(ctx, mu, cpart, annihilate=False)
                out = out + c * raised
    return out


def _exp_multiset_coeff(ctx, mu, part: tuple[int, ...], annihilate: bool) -> ParamScalar:
    """Coefficient of a creation/annihilation multiset in exp expansion:
    prod over occurrences of (-+ mu / n), divided by multiplicities!."""
    coeff = ctx.one()
    mult: dict[int, int] = {}
    for n in part:
        mult[n] = mult.get(n, 0) + 1
        coeff = coeff * (QQ(-1 if annihilate else 1, n) * mu)
    for m in mult.values():
        coeff = QQ(1, math.factorial(m)) * coeff
    return coeff


def apply_field_coeff(expr: FieldExpr, e: int, vec: FockVector) -> FockVector:
    """Exact action of the z^e coefficient of ``expr`` on ``vec``.

    The target space is the source shifted by the (homogeneous) vertex
    exponent.  Works termwise; all mode sums are finite because annihilation
    is bounded by the source and creation by the resulting block.
    """
    space = vec.space
    ctx = space.ctx
    mu = expr.vertex_exponent()
    target = space.shifted(mu) if not mu.is_zero() else space
    out = target.zero()
    if vec.is_zero():
        return out
    energy = vec.energy_bound()
    for (tmu, factors), coeff in expr.terms.items():
        delta = _term_weight(factors)
        tgt_max = energy + e + delta
        if tgt_max < 0:
            continue
        for assignment, c in _factor_assignments(ctx, factors, e, energy, tgt_max,
                                                 tmu is not None):
            result = _apply_assignment(assignment, tmu, vec, target)
            if result is not None and not result.is_zero():
                out = out + (coeff * c) * result
    return out


def _factor_assignments(ctx, factors, e, energy, tgt_max, has_vertex):
    """Enumerate exponent assignments (factor modes + vertex remainder).

    Yields (assignment, coefficient) where assignment is a list of oscillator
    modes for the factors followed by an optional ("vertex", eps) entry.
    """

    def rec(i, remaining, modes, c):
        if i == len(factors):
            if has_vertex:
                # net vertex shift: annihilation bounded by the source,
                # creation bounded by the largest reachable target block
                if -energy <= remaining <= tgt_max + energy:
                    yield modes + [("vertex", remaining)], c
            else:
                if remaining == 0:
                    yield modes, c
            return
        sym, k = factors[i]
        off = 1 + k if sym in ("p", "beta") else k
        lo = -energy - off
        hi = tgt_max + energy - off
        for eps in range(lo, hi + 1):
            d = _rising(eps + 1, k)  # product (eps+1)...(eps+k)
            if d == 0:
                continue
            if sym == "p":
                mode, sign = ("b", -eps - 1 - k), -1
            elif sym == "beta":
                mode, sign = ("a", -eps - 1 - k), 1
            else:
                mode, sign = ("as", -eps - k), 1
            yield from rec(i + 1, remaining - eps, modes + [mode],
                           (sign * d) * c)

    yield from rec(0, e, [], ctx.one())


def _apply_assignment(assignment, tmu, vec, target):
    """Apply one complete mode assignment in normal order."""
    modes = [m for m in assignment if m[0] != "vertex"]
    vertex = [m for m in assignment if m[0] == "vertex"]
    current = vec
    for mode in modes:
        if is_annihilator(mode):
            current = osc_apply(mode, current)
            if current.is_zero():
                return None
    if vertex:
        current = apply_vertex(tmu, vertex[0][1], current)
    elif target != vec.space:
        current = FockVector(target, current.terms)
    else:
        current = FockVector(current.space, current.terms)
    if current.is_zero():
        return None
    for mode in modes:
        if not is_annihilator(mode):
            current = osc_apply(mode, current)
    return current


def mode_of_field(expr: FieldExpr, n: int, space: FockSpace,
                  weight: int | None = None) -> ModeOperator:
    """Mode X_n of the field X(z) = sum X_n z^{-n-weight} as a ModeOperator.

    The weight defaults to the expression's homogeneous conformal weight
    (T: 2, currents/p/beta: 1, gamma: 0, vertex: 0).
    """
    delta = expr.conformal_weight() if weight is None else weight
    mu = expr.vertex_exponent()
    target = space.shifted(mu) if not mu.is_zero() else space
    e = -n - delta
    return ModeOperator(
        lambda v: apply_field_coeff(expr, e, v),
        space,
        target,
        energy_shift=-n,
        charge_shift=expr.charge(),
    )


# -- OPE -> mode bracket ----------------------------------------------------------------


def _binom(n: int, j: int) -> Fraction:
    out = Fraction(1)
    for i in range(j):
        out *= Fraction(n - i, i + 1)
    return out


def ope_bracket_action(ope: OpeResult, s: int, t: int, vec: FockVector) -> FockVector:
    """[X<s>, Y<t>] vec from the OPE table of X(z)Y(w).

    X<s> denotes the coefficient of z^s in X(z) (raw exponent indexing).
    Residues of z^{-s-1}/(z-w)^k give binomial factors; the w^t coefficient
    is then read off each pole coefficient exactly.
    """
    if ope.npoints != 1:
        raise ValueError("bracket extraction needs a single-point OPE")
    n_raw = -s - 1
    out = None
    for k, expr in ope.table.items():
        piece = apply_field_coeff(expr, t + s + k, vec)
        piece = _binom(n_raw, k - 1) * piece
        out = piece if out is None else out + piece
    return out if out is not None else FockVector(vec.space, {})


def mode_exponent(n: int, weight: int) -> int:
    """Raw z-exponent carried by the conventional mode X_n of weight-`weight` X."""
    return -n - weight


# -- textual grammar --------------------------------------------------------------------


class FieldParseError(ValueError):
    """Parse failure with position information."""

    def __init__(self, message: str, pos: int):
        super().__init__("%s (at position %d)" % (message, pos))
        self.pos = pos


_TOKEN_RE = __import__("re").compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_']*)|(?P<op>[-+*/^():\[\]]))"
)

_PHI = object()  # sentinel: the undifferentiated potential, legal only under D


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip():
                raise FieldParseError("unexpected character %r" % text[pos], pos)
            break
        if m.group("num"):
            tokens.append(("num", int(m.group("num")), m.start("num")))
        elif m.group("name"):
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


def parse_field_expr(text: str, ctx: ParameterContext,
                     named: Mapping[str, FieldExpr] | None = None) -> FieldExpr:
    """Parse the small field grammar.

    Grammar: sums/differences of products; factors are numbers, parameter
    names, the basic fields ``p``/``beta``/``gamma`` (with prime suffixes for
    derivatives), ``D^k(f)``, normal products ``:f g:``, vertex factors
    ``V[mu]`` with a scalar exponent expression, parenthesised expressions,
    and integer powers.  ``named`` supplies extra named expressions
    (e.g. a stress tensor or current presets).
    """
    parser = _FieldParser(text, ctx, named or {})
    value = parser.parse_expr()
    parser.expect_end()
    return parser.as_field(value)


def parse_scalar_expr(text: str, ctx: ParameterContext) -> ParamScalar:
    """Parse a scalar expression over the context's parameters."""
    parser = _FieldParser(text, ctx, {})
    value = parser.parse_expr()
    parser.expect_end()
    return parser.as_scalar(value)


class _FieldParser:
    def __init__(self, text: str, ctx: ParameterContext, named):
        self.ctx = ctx
        self.named = named
        self.tokens = _tokenize(text)
        self.i = 0

    # -- token plumbing --------------------------------------------------------

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise FieldParseError("expected %r" % op, pos)
        return self.advance()

    def expect_end(self):
        kind, _, pos = self.peek()
        if kind != "end":
            raise FieldParseError("trailing input", pos)

    # -- value plumbing (scalar | field union) -------------------------------------

    def as_field(self, value) -> FieldExpr:
        kind, payload, pos = value
        if kind == "phi":
            raise FieldParseError(
                "phi itself is not a field factor; use D(phi) or a vertex factor V[mu]",
                pos,
            )
        if kind == "s":
            return FieldExpr.scalar(self.ctx, payload)
        return payload

    def as_scalar(self, value) -> ParamScalar:
        kind, payload, pos = value
        if kind != "s":
            raise FieldParseError("expected a scalar expression", pos)
        return payload

    def _mul(self, a, b, pos):
        if a[0] == "phi" or b[0] == "phi":
            raise FieldParseError("phi can appear only under D(...)", pos)
        if a[0] == "s" and b[0] == "s":
            return ("s", a[1] * b[1], pos)
        if a[0] == "s":
            return ("f", a[1] * b[1], pos)
        if b[0] == "s":
            return ("f", b[1] * a[1], pos)
        return ("f", a[1] * b[1], pos)

    def _div(self, a, b, pos):
        if a[0] != "s" or b[0] != "s":
            raise FieldParseError("division is defined for scalars only", pos)
        if b[1].is_zero():
            raise FieldParseError("division by zero", pos)
        return ("s", a[1] / b[1], pos)

    def _addsub(self, a, b, pos, sign):
        if a[0] == "phi" or b[0] == "phi":
            raise FieldParseError("phi can appear only under D(...)", pos)
        if a[0] == "s" and b[0] == "s":
            return ("s", a[1] + sign * b[1], pos)
        fa = self.as_field(a)
        fb = self.as_field(b)
        return ("f", fa + self.ctx.scalar(sign) * fb, pos)

    def _pow(self, a, n: int, pos):
        if a[0] == "s":
            base = a[1]
            if n < 0:
                if base.is_zero():
                    raise FieldParseError("zero to a negative power", pos)
                base, n = 1 / base, -n
            out = self.ctx.one()
            for _ in range(n):
                out = out * base
            return ("s", out, pos)
        if a[0] != "f" or n < 0:
            raise FieldParseError("this power is not supported", pos)
        out = FieldExpr.scalar(self.ctx, 1)
        for _ in range(n):
            out = out * a[1]
        return ("f", out, pos)

    # -- grammar ---------------------------------------------------------------

    def parse_expr(self):
        value = self.parse_term()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                rhs = self.parse_term()
                value = self._addsub(value, rhs, pos, 1 if val == "+" else -1)
            else:
                return value

    def parse_term(self):
        value = self.parse_atom()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val == "*":
                self.advance()
                value = self._mul(value, self.parse_atom(), pos)
            elif kind == "op" and val == "/":
                self.advance()
                value = self._div(value, self.parse_atom(), pos)
            elif kind in ("num", "name") or (kind == "op" and val in "(:"):
                # implicit product by juxtaposition
                value = self._mul(value, self.parse_atom(), pos)
            else:
                return value

    def parse_atom(self):
        value = self.parse_primary()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            sign = 1
            kind2, val2, pos2 = self.peek()
            if kind2 == "op" and val2 == "-":
                self.advance()
                sign = -1
                kind2, val2, pos2 = self.peek()
            if kind2 != "num":
                raise FieldParseError("expected an integer exponent", pos2)
            self.advance()
            value = self._pow(value, sign * val2, pos)
        return value

    def parse_primary(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return ("s", self.ctx.scalar(val), pos)
        if kind == "op" and val == "-":
            inner = self.parse_atom()
            return self._mul(("s", self.ctx.scalar(-1), pos), inner, pos)
        if kind == "op" and val == "(":
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        if kind == "op" and val == ":":
            product = ("s", self.ctx.one(), pos)
            while True:
                k2, v2, p2 = self.peek()
                if k2 == "op" and v2 == ":":
                    self.advance()
                    return product
                if k2 == "end":
                    raise FieldParseError("unterminated normal product", p2)
                product = self._mul(product, self.parse_atom(), p2)
        if kind == "name":
            return self.parse_name(val, pos)
        raise FieldParseError("unexpected token %r" % (val,), pos)

    def parse_name(self, name: str, pos: int):
        primes = 0
        while name.endswith("'"):
            primes += 1
            name = name[:-1]
        if name == "D":
            order = 1
            kind, val, p2 = self.peek()
            if kind == "op" and val == "^":
                self.advance()
                kind, val, p3 = self.advance()
                if kind != "num":
                    raise FieldParseError("expected an integer derivative order", p3)
                order = val
            self.expect_op("(")
            inner = self.parse_expr()
            self.expect_op(")")
            if inner[0] == "phi":
                if order < 1:
                    raise FieldParseError("phi needs at least one derivative", pos)
                return ("f", FieldExpr.field(self.ctx, "p", order - 1 + primes), pos)
            expr = self.as_field(inner)
            for _ in range(order + primes):
                expr = expr.derivative()
            return ("f", expr, pos)
        if name == "V":
            self.expect_op("[")
            mu = self.parse_expr()
            self.expect_op("]")
            expr = FieldExpr.vertex(self.ctx, self.as_scalar(mu))
            for _ in range(primes):
                expr = expr.derivative()
            return ("f", expr, pos)
        if name == "phi":
            if primes:
                return ("f", FieldExpr.field(self.ctx, "p", primes - 1), pos)
            return ("phi", None, pos)
        if name in _FIELD_SYMBOLS:
            return ("f", FieldExpr.field(self.ctx, name, primes), pos)
        if name in self.named:
            expr = self.named[name]
            for _ in range(primes):
                expr = expr.derivative()
            return ("f", expr, pos)
        if name in self.ctx.names:
            if primes:
                raise FieldParseError("parameters cannot be differentiated", pos)
            return ("s", self.ctx.param(name), pos)
        raise FieldParseError("unknown identifier %r" % name, pos)
