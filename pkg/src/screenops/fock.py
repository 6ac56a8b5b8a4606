"""Exact Fock modules over a rank-one oscillator algebra.

Three layers:

* an oscillator alphabet: even boson modes ``b_n`` with
  ``[b_n, b_m] = pairing * n * delta_{n+m,0}``, optionally extended by a
  charged first-order pair ``a_n`` / ``a*_n`` (weight-one and weight-zero
  partners) with ``[a_n, a*_m] = -delta_{n+m,0}``, plus a formal zero-mode
  partner ``q`` with ``[q, b_n] = pairing * delta_{n,0}`` that exists only
  inside normal-ordering bookkeeping and never inside module vectors;

* Fock modules: a vacuum vector killed by every annihilation operator
  (``b_n`` for n > 0, ``a_n`` for n >= 0, ``a*_n`` for n > 0) on which the
  boson zero mode acts by ``pairing * alpha`` for a vacuum label ``alpha``;
  vectors are finite combinations of creation monomials and are bigraded by
  energy (total mode depth) and charge (number of ``a*`` minus number of
  ``a`` factors), with finite-dimensional bigraded blocks;

* mode operators: linear maps with a fixed (energy, charge, label) degree
  shift, applied exactly -- annihilation bounded by the source vector and
  creation bounded by the target block make every mode sum finite -- with
  lazily memoized exact block matrices.

All coefficients live in the exact scalar field of
:mod:`screenops.scalars`, so every identity test below is a literal
zero-test, never a tolerance comparison.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

from .scalars import ParamScalar, ParameterContext

Mode = tuple[str, int]

_FAMILIES = ("b", "a", "as", "q")


def _check_mode(mode: Mode) -> Mode:
    fam, n = mode
    if fam not in _FAMILIES:
        raise ValueError("unknown oscillator family %r" % (fam,))
    if fam == "q" and n != 0:
        raise ValueError("the zero-mode partner carries no mode index")
    return mode


def is_annihilator(mode: Mode) -> bool:
    """Right-movers under normal ordering: b_n (n>0), a_n (n>=0), a*_n (n>0).

    The boson zero mode b_0 also sorts to the right (it acts as a scalar on
    every Fock vector and the only nontrivial reordering is past ``q``).
    """
    fam, n = _check_mode(mode)
    if fam == "b":
        return n >= 0
    if fam == "a":
        return n >= 0
    if fam == "as":
        return n > 0
    return False  # q


def mode_energy(mode: Mode) -> int:
    return -mode[1]


def mode_charge(mode: Mode) -> int:
    if mode[0] == "a":
        return -1
    if mode[0] == "as":
        return 1
    return 0


def monomial_energy(mon: Sequence[Mode]) -> int:
    return sum(mode_energy(m) for m in mon)


def monomial_charge(mon: Sequence[Mode]) -> int:
    return sum(mode_charge(m) for m in mon)


def _sorted_monomial(modes: Iterable[Mode]) -> tuple[Mode, ...]:
    # Creation operators all commute pairwise, so any fixed order is a
    # canonical form; sort by family then depth.
    return tuple(sorted(modes))


class OscSpec:
    """Oscillator alphabet: bracket table and annihilation split.

    ``pairing`` is the symmetric-form value entering ``[b_n, b_m]``; the
    rank-one normalization used throughout is ``pairing = 2``.
    ``has_pair`` switches the charged a/a* pair on (current algebras) or
    off (pure boson).
    """

    __slots__ = ("ctx", "pairing", "has_pair")

    def __init__(self, ctx: ParameterContext, pairing=2, has_pair: bool = False):
        self.ctx = ctx
        self.pairing = ctx.scalar(pairing)
        self.has_pair = has_pair

    def __eq__(self, other):
        return (
            isinstance(other, OscSpec)
            and self.ctx == other.ctx
            and self.pairing == other.pairing
            and self.has_pair == other.has_pair
        )

    def __hash__(self):
        return hash((self.ctx, self.pairing, self.has_pair))

    def __repr__(self):
        return "OscSpec(pairing=%s, has_pair=%r)" % (self.pairing, self.has_pair)

    # -- bracket table ------------------------------------------------------

    def bracket(self, x: Mode, y: Mode) -> ParamScalar:
        """[x, y] when the bracket is central (a scalar); zero otherwise.

        Table: [b_n, b_m] = pairing*n*d_{n+m,0}; [a_n, a*_m] = -d_{n+m,0};
        [q, b_0] = pairing.  All brackets of this alphabet are central.
        """
        (fx, nx), (fy, ny) = _check_mode(x), _check_mode(y)
        zero = self.ctx.zero()
        if fx == "b" and fy == "b":
            return self.pairing * nx if nx + ny == 0 else zero
        if fx == "a" and fy == "as":
            return self.ctx.scalar(-1) if nx + ny == 0 else zero
        if fx == "as" and fy == "a":
            return self.ctx.scalar(1) if nx + ny == 0 else zero
        if fx == "q" and fy == "b" and ny == 0:
            return self.pairing
        if fx == "b" and nx == 0 and fy == "q":
            return -self.pairing
        return zero

    def contraction(self, x: Mode, y: Mode) -> ParamScalar:
        """{x y} = xy - :xy: for a two-letter product; nonzero only when x
        sorts right and y sorts left."""
        if is_annihilator(x) and not is_annihilator(y):
            return self.bracket(x, y)
        return self.ctx.zero()


class FockSpace:
    """Fock module with vacuum label ``alpha`` (boson zero mode pairing*alpha)."""

    __slots__ = ("spec", "alpha", "_block_cache")

    def __init__(self, spec: OscSpec, alpha):
        self.spec = spec
        self.alpha = spec.ctx.scalar(alpha)
        self._block_cache: dict = {}

    @property
    def ctx(self) -> ParameterContext:
        return self.spec.ctx

    def __eq__(self, other):
        return (
            isinstance(other, FockSpace)
            and self.spec == other.spec
            and self.alpha == other.alpha
        )

    def __hash__(self):
        return hash((self.spec, self.alpha))

    def __repr__(self):
        return "FockSpace(alpha=%s)" % (self.alpha,)

    # -- vectors --------------------------------------------------------------

    def zero(self) -> "FockVector":
        return FockVector(self, {})

    def vacuum(self) -> "FockVector":
        return FockVector(self, {(): self.ctx.one()})

    def vector(self, terms: Mapping[Sequence[Mode], object]) -> "FockVector":
        out: dict = {}
        for mon, c in terms.items():
            mon = _sorted_monomial(_check_mode(m) for m in mon)
            for m in mon:
                if is_annihilator(m) or m[0] == "q":
                    raise ValueError("%r is not a creation mode" % (m,))
            c = self.ctx.scalar(c)
            if not c.is_zero():
                out[mon] = out.get(mon, self.ctx.zero()) + c
        return FockVector(self, {m: c for m, c in out.items() if not c.is_zero()})

    def shifted(self, beta) -> "FockSpace":
        """Same oscillator alphabet, vacuum label translated by beta."""
        return FockSpace(self.spec, self.alpha + self.ctx.scalar(beta))

    # -- bigraded blocks --------------------------------------------------------

    def block_basis(self, energy: int, charge: int = 0) -> tuple[tuple[Mode, ...], ...]:
        key = (energy, charge)
        cached = self._block_cache.get(key)
        if cached is None:
            cached = tuple(sorted(self._enumerate_block(energy, charge)))
            self._block_cache[key] = cached
        return cached

    def block_dim(self, energy: int, charge: int = 0) -> int:
        return len(self.block_basis(energy, charge))

    def _enumerate_block(self, energy: int, charge: int):
        if energy < 0:
            return
        if not self.spec.has_pair:
            if charge != 0:
                return
            for part in _partitions(energy):
                yield _sorted_monomial(("b", -n) for n in part)
            return
        for e_b in range(energy + 1):
            for e_a in range(energy - e_b + 1):
                e_as = energy - e_b - e_a
                for bpart in _partitions(e_b):
                    for apart in _partitions(e_a):
                        for aspart in _partitions(e_as):
                            n_as0 = charge - len(aspart) + len(apart)
                            if n_as0 < 0:
                                continue
                            modes = [("b", -n) for n in bpart]
                            modes += [("a", -n) for n in apart]
                            modes += [("as", -n) for n in aspart]
                            modes += [("as", 0)] * n_as0
                            yield _sorted_monomial(modes)


def _partitions(total: int, largest: int | None = None):
    """Partitions of ``total`` into parts >= 1, as weakly decreasing tuples."""
    if total == 0:
        yield ()
        return
    if largest is None or largest > total:
        largest = total
    for first in range(largest, 0, -1):
        for rest in _partitions(total - first, first):
            yield (first,) + rest


class FockVector:
    """Finite combination of creation monomials with exact coefficients."""

    __slots__ = ("space", "terms")

    def __init__(self, space: FockSpace, terms: dict):
        self.space = space
        self.terms = terms

    # -- linear structure -----------------------------------------------------

    def __add__(self, other: "FockVector") -> "FockVector":
        if self.space != other.space:
            raise ValueError("cannot add vectors over different Fock spaces")
        out = dict(self.terms)
        zero = self.space.ctx.zero()
        for mon, c in other.terms.items():
            s = out.get(mon, zero) + c
            if s.is_zero():
                out.pop(mon, None)
            else:
                out[mon] = s
        return FockVector(self.space, out)

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + (-other)

    def __neg__(self) -> "FockVector":
        return FockVector(self.space, {m: -c for m, c in self.terms.items()})

    def __rmul__(self, scalar) -> "FockVector":
        c = self.space.ctx.scalar(scalar)
        if c.is_zero():
            return self.space.zero()
        return FockVector(self.space, {m: c * v for m, v in self.terms.items()})

    def __eq__(self, other):
        return (
            isinstance(other, FockVector)
            and self.space == other.space
            and (self - other).is_zero()
        )

    __hash__ = None

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.terms.values())

    # -- grading ---------------------------------------------------------------

    def energy_bound(self) -> int:
        """Largest monomial energy present (0 for the zero vector)."""
        return max((monomial_energy(m) for m in self.terms), default=0)

    def blocks(self) -> dict[tuple[int, int], "FockVector"]:
        out: dict[tuple[int, int], dict] = {}
        for mon, c in self.terms.items():
            key = (monomial_energy(mon), monomial_charge(mon))
            out.setdefault(key, {})[mon] = c
        return {k: FockVector(self.space, t) for k, t in out.items()}

    def coefficient(self, mon: Sequence[Mode]) -> ParamScalar:
        return self.terms.get(_sorted_monomial(mon), self.space.ctx.zero())

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for mon in sorted(self.terms):
            c = self.terms[mon]
            if mon:
                body = " ".join(_mode_name(m) for m in mon)
                bits.append("(%s)*%s v" % (c, body))
            else:
                bits.append("(%s) v" % (c,))
        return " + ".join(bits)


def _mode_name(mode: Mode) -> str:
    fam, n = mode
    label = {"b": "b", "a": "a", "as": "a*", "q": "q"}[fam]
    return "%s(%d)" % (label, n)


# -- oscillator action ----------------------------------------------------------


def osc_apply(mode: Mode, vec: FockVector) -> FockVector:
    """Apply one oscillator mode exactly.

    Creation modes multiply each monomial; annihilation modes commute through
    to the vacuum, which reduces to pairing each occurrence of the conjugate
    creation mode with the bracket value; b_0 acts by pairing*alpha.
    """
    fam, n = _check_mode(mode)
    space = vec.space
    spec = space.spec
    if fam == "q":
        raise ValueError("q acts only inside normal-ordering bookkeeping")
    if fam in ("a", "as") and not spec.has_pair:
        raise ValueError("this oscillator alphabet has no charged pair")
    if fam == "b" and n == 0:
        return (spec.pairing * space.alpha) * vec
    if not is_annihilator(mode):
        out: dict = {}
        zero = space.ctx.zero()
        for mon, c in vec.terms.items():
            key = _sorted_monomial(mon + (mode,))
            s = out.get(key, zero) + c
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
        return FockVector(space, out)
    partner = {"b": "b", "a": "as", "as": "a"}[fam], -n
    value = spec.bracket(mode, partner)
    out = {}
    zero = space.ctx.zero()
    for mon, c in vec.terms.items():
        count = mon.count(partner)
        if not count:
            continue
        reduced = list(mon)
        reduced.remove(partner)
        key = tuple(reduced)
        s = out.get(key, zero) + (count * value) * c
        if s.is_zero():
            out.pop(key, None)
        else:
            out[key] = s
    return FockVector(space, out)


def apply_monomial(modes: Sequence[Mode], vec: FockVector) -> FockVector:
    """Apply an operator word right-to-left (the rightmost mode acts first)."""
    for mode in reversed(modes):
        vec = osc_apply(mode, vec)
    return vec


# -- normal ordering --------------------------------------------------------------


def normal_order(spec: OscSpec, mon: Sequence[Mode]):
    """Normal-order an oscillator word.

    Returns ``(ordered, expansion, ledger)`` where ``ordered`` is the word
    with every annihilation operator moved to the right (the normal-ordered
    monomial itself), ``expansion`` maps ordered words to scalars so that the
    original operator product equals ``sum(expansion[w] * w)``, and
    ``ledger`` records every extracted pairing ``{x y}`` with its value.
    """
    mon = tuple(_check_mode(m) for m in mon)
    ledger: dict = {}
    expansion: dict = {}

    def reorder(word: tuple[Mode, ...], coeff: ParamScalar):
        for i in range(len(word) - 1):
            x, y = word[i], word[i + 1]
            if is_annihilator(x) and not is_annihilator(y):
                c = spec.contraction(x, y)
                swapped = word[:i] + (y, x) + word[i + 2 :]
                reorder(swapped, coeff)
                if not c.is_zero():
                    key = (x, y)
                    ledger[key] = ledger.get(key, spec.ctx.zero()) + c
                    reorder(word[:i] + word[i + 2 :], coeff * c)
                return
        key = _canonical_word(word)
        expansion[key] = expansion.get(key, spec.ctx.zero()) + coeff

    reorder(mon, spec.ctx.one())
    ordered = _canonical_word(
        tuple(m for m in mon if not is_annihilator(m))
        + tuple(m for m in mon if is_annihilator(m))
    )
    expansion = {w: c for w, c in expansion.items() if not c.is_zero()}
    return ordered, expansion, ledger


def _canonical_word(word: tuple[Mode, ...]) -> tuple[Mode, ...]:
    # Elements on the same side of the annihilation split commute, so sort
    # each side; q sorts before creation modes.
    left = sorted((m for m in word if not is_annihilator(m)), key=lambda m: (m[0] != "q", m))
    right = sorted(m for m in word if is_annihilator(m))
    return tuple(left) + tuple(right)


def apply_ordered_word(word: Sequence[Mode], vec: FockVector) -> FockVector:
    """Apply a normal-ordered word: annihilation part first, then creation."""
    for mode in (m for m in reversed(word) if is_annihilator(m)):
        vec = osc_apply(mode, vec)
        if vec.is_zero():
            return vec
    for mode in (m for m in reversed(word) if not is_annihilator(m)):
        vec = osc_apply(mode, vec)
    return vec


# -- mode operators -----------------------------------------------------------------


class ModeOperator:
    """Linear map between Fock spaces with a fixed bigraded degree shift.

    Wraps a function on vectors; exact block matrices (source block ->
    shifted target block) are computed lazily and memoized.
    """

    __slots__ = ("fn", "source", "target", "energy_shift", "charge_shift", "_blocks")

    def __init__(
        self,
        fn: Callable[[FockVector], FockVector],
        source: FockSpace,
        target: FockSpace,
        energy_shift: int,
        charge_shift: int = 0,
    ):
        self.fn = fn
        self.source = source
        self.target = target
        self.energy_shift = energy_shift
        self.charge_shift = charge_shift
        self._blocks: dict = {}

    def apply(self, vec: FockVector) -> FockVector:
        if vec.space != self.source:
            raise ValueError("vector lives over %r, operator expects %r" % (vec.space, self.source))
        return self.fn(vec)

    def __call__(self, vec: FockVector) -> FockVector:
        return self.apply(vec)

    # -- algebra -------------------------------------------------------------

    def _require_same_shape(self, other: "ModeOperator"):
        if (
            self.source != other.source
            or self.target != other.target
            or self.energy_shift != other.energy_shift
            or self.charge_shift != other.charge_shift
        ):
            raise ValueError("mode operators have different shapes")

    def __add__(self, other: "ModeOperator") -> "ModeOperator":
        self._require_same_shape(other)
        return ModeOperator(
            lambda v: self.fn(v) + other.fn(v),
            self.source,
            self.target,
            self.energy_shift,
            self.charge_shift,
        )

    def __sub__(self, other: "ModeOperator") -> "ModeOperator":
        self._require_same_shape(other)
        return ModeOperator(
            lambda v: self.fn(v) - other.fn(v),
            self.source,
            self.target,
            self.energy_shift,
            self.charge_shift,
        )

    def __rmul__(self, scalar) -> "ModeOperator":
        return ModeOperator(
            lambda v: scalar * self.fn(v),
            self.source,
            self.target,
            self.energy_shift,
            self.charge_shift,
        )

    def then(self, other: "ModeOperator") -> "ModeOperator":
        """Composition ``other after self``; degree shifts add."""
        if self.target != other.source:
            raise ValueError("composition spaces do not match")
        return ModeOperator(
            lambda v: other.fn(self.fn(v)),
            self.source,
            other.target,
            self.energy_shift + other.energy_shift,
            self.charge_shift + other.charge_shift,
        )

    # -- exact block matrices ----------------------------------------------------

    def matrix(self, energy: int, charge: int = 0):
        """Exact matrix on the (energy, charge) source block.

        Returns ``(source_basis, target_basis, rows)`` where ``rows[i][j]``
        is the coefficient of target monomial i in the image of source
        monomial j.
        """
        key = (energy, charge)
        cached = self._blocks.get(key)
        if cached is not None:
            return cached
        src = self.source.block_basis(energy, charge)
        tgt = self.target.block_basis(energy + self.energy_shift, charge + self.charge_shift)
        index = {mon: i for i, mon in enumerate(tgt)}
        zero = self.source.ctx.zero()
        rows = [[zero] * len(src) for _ in tgt]
        for j, mon in enumerate(src):
            image = self.fn(FockVector(self.source, {mon: self.source.ctx.one()}))
            for m, c in image.terms.items():
                i = index.get(m)
                if i is None:
                    raise ValueError(
                        "image of %r leaves the shifted block: %r" % (mon, m)
                    )
                rows[i][j] = c
        cached = (src, tgt, rows)
        self._blocks[key] = cached
        return cached


def oscillator_mode(mode: Mode, space: FockSpace) -> ModeOperator:
    """The single oscillator ``mode`` as a ModeOperator on ``space``."""
    return ModeOperator(
        lambda v: osc_apply(mode, v),
        space,
        space,
        mode_energy(mode),
        mode_charge(mode),
    )


def commutator_blocks(a: ModeOperator, b: ModeOperator, energy: int, charge: int = 0):
    """Exact matrix of [a, b] on the (energy, charge) block of the common source.

    Returns ``(source_basis, target_basis, rows)``.
    """
    if a.source != b.source or a.target != b.target or a.source != a.target:
        raise ValueError("commutator needs endomorphisms of one space")
    if a.energy_shift + b.energy_shift != b.energy_shift + a.energy_shift:
        raise ValueError("incompatible degree shifts")
    src = a.source.block_basis(energy, charge)
    tgt_energy = energy + a.energy_shift + b.energy_shift
    tgt_charge = charge + a.charge_shift + b.charge_shift
    tgt = a.source.block_basis(tgt_energy, tgt_charge)
    index = {mon: i for i, mon in enumerate(tgt)}
    zero = a.source.ctx.zero()
    rows = [[zero] * len(src) for _ in tgt]
    for j, mon in enumerate(src):
        v = FockVector(a.source, {mon: a.source.ctx.one()})
        image = a.fn(b.fn(v)) - b.fn(a.fn(v))
        for m, c in image.terms.items():
            i = index.get(m)
            if i is None:
                raise ValueError("commutator leaves the expected block: %r" % (m,))
            rows[i][j] = c
    return src, tgt, rows
