"""Symmetrizable Cartan data, Serre quotients and Verma modules.

The negative nilpotent algebra is presented on generators theta_1..theta_r
modulo the Serre relations ad(theta_j)^(1-a_jk)(theta_k) = 0.  Its universal
envelope is handled weight space by weight space: words of a fixed
multidegree span the free weight space, the Serre ideal's span is row-reduced
over Q to a reduced echelon basis, and the surviving (non-pivot) words form a
canonical basis of the quotient.  Verma vectors are finitely supported maps
from depth vectors to quotient coordinates; E/H/F act exactly.

Weight convention: the module labelled by hw = (<H_1,lam>, ..., <H_r,lam>)
satisfies H_i v = (<H_i,lam> - 1) v on the highest-weight vector, i.e. the
label is shifted by the Weyl vector (<H_i,rho> = 1).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .scalars import QQ, ParameterContext, ParamScalar

Word = tuple  # tuple of 0-based generator indices
Depth = tuple  # multidegree: how many times each generator occurs

__all__ = [
    "CartanData",
    "WeightSpace",
    "VermaModule",
    "VermaVector",
    "words_of_degree",
    "serre_element",
    "partial_derivation",
    "gen",
    "br",
    "tree_in_sl2",
]


class CartanData:
    """A symmetrizable generalized Cartan matrix with symmetrizers."""

    __slots__ = ("matrix", "sym", "name", "_ws_cache", "_roots_cache")

    def __init__(self, matrix: Sequence[Sequence[int]], sym: Sequence[Fraction] | None = None, name: str = ""):
        matrix = tuple(tuple(int(x) for x in row) for row in matrix)
        r = len(matrix)
        if any(len(row) != r for row in matrix):
            raise ValueError("Cartan matrix must be square")
        for i in range(r):
            if matrix[i][i] != 2:
                raise ValueError("diagonal entries must equal 2")
            for j in range(r):
                if i != j:
                    if matrix[i][j] > 0:
                        raise ValueError("off-diagonal entries must be <= 0")
                    if (matrix[i][j] == 0) != (matrix[j][i] == 0):
                        raise ValueError("zero pattern must be symmetric")
        self.matrix = matrix
        self.sym = tuple(sym) if sym is not None else self._symmetrize()
        if len(self.sym) != r or any(d <= 0 for d in self.sym):
            raise ValueError("symmetrizers must be positive")
        for i in range(r):
            for j in range(r):
                if self.sym[i] * matrix[i][j] != self.sym[j] * matrix[j][i]:
                    raise ValueError("d_i a_ij != d_j a_ji: matrix not symmetrized by sym")
        self.name = name or "rank%d" % r
        self._ws_cache: dict = {}
        self._roots_cache: dict = {}

    def _symmetrize(self) -> tuple:
        r = len(self.matrix)
        d = [None] * r
        for start in range(r):
            if d[start] is not None:
                continue
            d[start] = QQ(1)
            queue = [start]
            while queue:
                i = queue.pop()
                for j in range(r):
                    if i != j and self.matrix[i][j] != 0:
                        dj = d[i] * QQ(self.matrix[i][j], self.matrix[j][i])
                        if d[j] is None:
                            d[j] = dj
                            queue.append(j)
                        elif d[j] != dj:
                            raise ValueError("Cartan matrix is not symmetrizable")
        return tuple(d)

    @property
    def rank(self) -> int:
        return len(self.matrix)

    def a(self, i: int, j: int) -> int:
        """<H_i, alpha_j>."""
        return self.matrix[i][j]

    def key(self):
        return (self.matrix, self.sym)

    def __repr__(self):
        return "CartanData(%s)" % self.name

    # -- standard instances -------------------------------------------------

    @classmethod
    def sl2(cls):
        return cls([[2]], name="A1")

    @classmethod
    def sl3(cls):
        return cls([[2, -1], [-1, 2]], name="A2")

    @classmethod
    def b2(cls):
        return cls([[2, -1], [-2, 2]], name="B2")

    @classmethod
    def g2(cls):
        return cls([[2, -1], [-3, 2]], name="G2")

    # -- root combinatorics (independent dimension oracle) -------------------

    def positive_roots(self, height_max: int = 12) -> list:
        """Real positive roots up to the height cap, via the reflection orbit.

        For finite type this is the full positive system once height_max is
        at least the highest root's height.
        """
        if height_max in self._roots_cache:
            return self._roots_cache[height_max]
        r = self.rank
        simple = [tuple(1 if k == i else 0 for k in range(r)) for i in range(r)]
        seen = set(simple)
        queue = list(simple)
        while queue:
            beta = queue.pop()
            for i in range(r):
                pairing = sum(self.matrix[i][j] * beta[j] for j in range(r))
                new = list(beta)
                new[i] -= pairing
                new = tuple(new)
                ht = sum(abs(x) for x in new)
                if ht == 0 or ht > height_max:
                    continue
                if new not in seen:
                    seen.add(new)
                    queue.append(new)
        out = sorted(b for b in seen if all(x >= 0 for x in b))
        self._roots_cache[height_max] = out
        return out

    def pbw_dim(self, depth: Depth) -> int:
        """Multisets of positive roots with given multidegree sum."""
        roots = self.positive_roots(height_max=max(2 * sum(depth), 2))
        roots = [b for b in roots if all(x <= y for x, y in zip(b, depth))]

        def count(idx: int, rem: Depth) -> int:
            if all(x == 0 for x in rem):
                return 1
            if idx == len(roots):
                return 0
            beta = roots[idx]
            total = 0
            mult = 0
            cur = rem
            while True:
                total += count(idx + 1, cur)
                if all(x >= y for x, y in zip(cur, beta)) and any(beta):
                    cur = tuple(x - y for x, y in zip(cur, beta))
                    mult += 1
                else:
                    break
            return total

        return count(0, depth)

    # -- weights --------------------------------------------------------------

    def reflect(self, hw: tuple, i: int) -> tuple:
        """Simple reflection on the pairing vector: <H_j, r_i lam>."""
        return tuple(hw[j] - hw[i] * self.matrix[j][i] for j in range(self.rank))

    def weight_sequence(self, hw: tuple, reflections: Sequence[int]) -> list:
        """lam_1 = hw, lam_{p+1} = r_{i_p} lam_p for the given index word."""
        out = [tuple(hw)]
        for i in reflections:
            out.append(self.reflect(out[-1], i))
        return out


def words_of_degree(depth: Depth) -> list:
    """All words with the given letter multiplicities, lexicographically."""
    letters = []
    for i, n in enumerate(depth):
        letters.extend([i] * n)
    if not letters:
        return [()]
    out = sorted(set(itertools.permutations(letters)))
    return out


def serre_element(cd: CartanData, j: int, k: int) -> dict:
    """ad(theta_j)^(1-a_jk)(theta_k) expanded in the free algebra."""
    if j == k:
        raise ValueError("Serre element needs distinct indices")
    a = 1 - cd.a(j, k)
    out = {}
    for p in range(a + 1):
        word = (j,) * (a - p) + (k,) + (j,) * p
        out[word] = QQ((-1) ** p * comb(a, p))
    return out


def _word_depth(word: Word, rank: int) -> Depth:
    d = [0] * rank
    for i in word:
        d[i] += 1
    return tuple(d)


class WeightSpace:
    """One multidegree slice of U(n_-) with its Serre-ideal echelon basis."""

    __slots__ = ("cd", "depth", "words", "index", "rows", "basis_words", "basis_index")

    def __init__(self, cd: CartanData, depth: Depth):
        self.cd = cd
        self.depth = tuple(depth)
        self.words = words_of_degree(self.depth)
        self.index = {w: n for n, w in enumerate(self.words)}
        self.rows = {}
        self._build_ideal()
        pivots = set(self.rows)
        self.basis_words = [w for n, w in enumerate(self.words) if n not in pivots]
        self.basis_index = {w: n for n, w in enumerate(self.basis_words)}

    def _build_ideal(self):
        cd, depth = self.cd, self.depth
        r = cd.rank
        for j in range(r):
            for k in range(r):
                if j == k:
                    continue
                rel = serre_element(cd, j, k)
                rel_depth = _word_depth(next(iter(rel)), r)
                free = tuple(d - s for d, s in zip(depth, rel_depth))
                if any(x < 0 for x in free):
                    continue
                for left in _split_degrees(free):
                    right = tuple(f - l for f, l in zip(free, left))
                    for u in words_of_degree(left):
                        for v in words_of_degree(right):
                            vec = {}
                            for mid, c in rel.items():
                                idx = self.index[u + mid + v]
                                vec[idx] = vec.get(idx, QQ(0)) + c
                            self._insert({i: c for i, c in vec.items() if c})

    def _insert(self, vec: dict):
        rows = self.rows
        # rows never contain other pivots, so one pass clears every pivot column
        for p in sorted(set(vec) & set(rows)):
            c = vec.get(p)
            if not c:
                continue
            for i, rc in rows[p].items():
                s = vec.get(i, QQ(0)) - c * rc
                if s:
                    vec[i] = s
                else:
                    vec.pop(i, None)
        if not vec:
            return
        p = min(vec)
        inv = 1 / vec[p]
        row = {i: c * inv for i, c in vec.items()}
        # eliminate the new pivot from existing rows: reduced echelon invariant
        for other in rows.values():
            c = other.get(p)
            if c:
                for i, rc in row.items():
                    s = other.get(i, QQ(0)) - c * rc
                    if s:
                        other[i] = s
                    else:
                        other.pop(i, None)
        rows[p] = row

    @property
    def dim(self) -> int:
        return len(self.basis_words)

    def reduce(self, combo: dict) -> dict:
        """Normal form of {word: scalar} as coordinates on basis words."""
        acc: dict = {}
        for w, c in combo.items():
            if not c:
                continue
            n = self.index[w]
            if n in self.rows:
                for i, rc in self.rows[n].items():
                    if i == n:
                        continue
                    # pivot word rewrites as minus the rest of its row
                    acc[i] = acc.get(i, 0) - c * rc
            else:
                acc[n] = acc.get(n, 0) + c
        out = {}
        for n, c in acc.items():
            if n in self.rows:
                raise AssertionError("reduced echelon rows must eliminate pivots")
            if c:
                out[self.words[n]] = c
        return out


def _split_degrees(bound: Depth) -> Iterable[Depth]:
    ranges = [range(b + 1) for b in bound]
    return itertools.product(*ranges)


def weight_space(cd: CartanData, depth: Depth) -> WeightSpace:
    depth = tuple(depth)
    ws = cd._ws_cache.get(depth)
    if ws is None:
        ws = WeightSpace(cd, depth)
        cd._ws_cache[depth] = ws
    return ws


def _reduce_full(cd: CartanData, combo: dict) -> dict:
    """Normal form of a mixed-degree {word: scalar} map."""
    by_depth: dict = {}
    for w, c in combo.items():
        by_depth.setdefault(_word_depth(w, cd.rank), {}).setdefault(w, 0)
        by_depth[_word_depth(w, cd.rank)][w] += c
    out = {}
    for depth, part in by_depth.items():
        out.update(weight_space(cd, depth).reduce(part))
    return out


def partial_derivation(cd: CartanData, i: int, combo: dict) -> dict:
    """The derivation with partial_i(theta_j) = delta_ij, by letter deletion."""
    acc: dict = {}
    for w, c in combo.items():
        for p, letter in enumerate(w):
            if letter == i:
                dw = w[:p] + w[p + 1 :]
                acc[dw] = acc.get(dw, 0) + c
    return _reduce_full(cd, acc)


# ---------------------------------------------------------------------------
# bracket trees in the free Lie algebra on E_i, H_i, F_i


def gen(kind: str, i: int = 0):
    if kind not in ("e", "h", "f"):
        raise ValueError("generator kind must be e, h or f")
    return (kind, i)


def br(x, y):
    return ("br", x, y)


def tree_in_sl2(tree) -> dict:
    """Image of a bracket tree in sl2 as {e|h|f|1: Fraction} coordinates."""
    if tree[0] != "br":
        return {tree[0]: QQ(1)}
    x = tree_in_sl2(tree[1])
    y = tree_in_sl2(tree[2])
    table = {
        ("e", "f"): {"h": 1},
        ("f", "e"): {"h": -1},
        ("h", "e"): {"e": 2},
        ("e", "h"): {"e": -2},
        ("h", "f"): {"f": -2},
        ("f", "h"): {"f": 2},
    }
    out: dict = {}
    for kx, cx in x.items():
        for ky, cy in y.items():
            for kz, cz in table.get((kx, ky), {}).items():
                out[kz] = out.get(kz, QQ(0)) + cx * cy * cz
    return {k: c for k, c in out.items() if c}


# ---------------------------------------------------------------------------
# Verma modules


class VermaVector:
    """Finitely supported map depth -> {basis word -> scalar}."""

    __slots__ = ("module", "comps")

    def __init__(self, module: "VermaModule", comps: dict):
        self.module = module
        clean = {}
        for depth, part in comps.items():
            entries = {w: c for w, c in part.items() if c}
            if entries:
                clean[tuple(depth)] = entries
        self.comps = clean

    def is_zero(self) -> bool:
        return not self.comps

    def __eq__(self, other):
        return (
            isinstance(other, VermaVector)
            and self.module is other.module
            and self.comps == other.comps
        )

    def __add__(self, other):
        out = {d: dict(p) for d, p in self.comps.items()}
        for d, part in other.comps.items():
            tgt = out.setdefault(d, {})
            for w, c in part.items():
                tgt[w] = tgt.get(w, 0) + c
        return VermaVector(self.module, out)

    def __sub__(self, other):
        return self + (-1) * other

    def __rmul__(self, scalar):
        return VermaVector(
            self.module,
            {d: {w: c * scalar for w, c in part.items()} for d, part in self.comps.items()},
        )

    def __str__(self):
        if not self.comps:
            return "0"
        bits = []
        for depth in sorted(self.comps):
            for w, c in sorted(self.comps[depth].items()):
                mono = "".join("F%d" % (i + 1) for i in w) or "1"
                bits.append("(%s)*%s v" % (c, mono))
        return " + ".join(bits)

    __repr__ = __str__


class VermaModule:
    """Verma module over the Kac-Moody data with pairing labels hw."""

    def __init__(self, cd: CartanData, hw: Sequence, ctx: ParameterContext):
        self.cd = cd
        self.ctx = ctx
        self.hw = tuple(ctx.scalar(x) for x in hw)
        if len(self.hw) != cd.rank:
            raise ValueError("need one weight label per simple root")

    def zero(self) -> VermaVector:
        return VermaVector(self, {})

    def vacuum(self) -> VermaVector:
        return VermaVector(self, {(0,) * self.cd.rank: {(): self.ctx.one()}})

    def basis_vectors(self, depth: Depth) -> list:
        ws = weight_space(self.cd, depth)
        one = self.ctx.one()
        return [VermaVector(self, {tuple(depth): {w: one}}) for w in ws.basis_words]

    def dim(self, depth: Depth) -> int:
        return weight_space(self.cd, depth).dim

    def h_eigenvalue(self, i: int, depth: Depth) -> ParamScalar:
        """H_i on the depth slice: <H_i, lam - rho> minus the root shifts."""
        shift = sum(self.cd.a(i, j) * depth[j] for j in range(self.cd.rank))
        return self.hw[i] - (1 + shift)

    # -- Chevalley actions -----------------------------------------------------

    def f(self, i: int, vec: VermaVector) -> VermaVector:
        out: dict = {}
        for depth, part in vec.comps.items():
            new_depth = tuple(d + (1 if j == i else 0) for j, d in enumerate(depth))
            ws = weight_space(self.cd, new_depth)
            reduced = ws.reduce({(i,) + w: c for w, c in part.items()})
            if reduced:
                tgt = out.setdefault(new_depth, {})
                for w, c in reduced.items():
                    tgt[w] = tgt.get(w, 0) + c
        return VermaVector(self, out)

    def h(self, i: int, vec: VermaVector) -> VermaVector:
        out = {}
        for depth, part in vec.comps.items():
            ev = self.h_eigenvalue(i, depth)
            out[depth] = {w: c * ev for w, c in part.items()}
        return VermaVector(self, out)

    def e(self, i: int, vec: VermaVector) -> VermaVector:
        """E_i by deleting occurrences of theta_i.

        [E_i, theta_{j1}..theta_{jm}] inserts H_i at each matching slot; H_i
        commuted to the right past the suffix picks up -sum a_{i,j_l}, and on
        the vacuum contributes <H_i, lam - rho>.
        """
        base = self.hw[i] - 1
        out: dict = {}
        cd = self.cd
        for depth, part in vec.comps.items():
            if depth[i] == 0:
                continue
            new_depth = tuple(d - (1 if j == i else 0) for j, d in enumerate(depth))
            ws = weight_space(cd, new_depth)
            acc: dict = {}
            for w, c in part.items():
                suffix_shift = 0
                # iterate from the right so the suffix pairing accumulates
                for p in range(len(w) - 1, -1, -1):
                    if w[p] == i:
                        coeff = c * (base - suffix_shift)
                        dw = w[:p] + w[p + 1 :]
                        if coeff:
                            acc[dw] = acc.get(dw, 0) + coeff
                    suffix_shift += cd.a(i, w[p])
            reduced = ws.reduce(acc)
            if reduced:
                tgt = out.setdefault(new_depth, {})
                for w, c in reduced.items():
                    tgt[w] = tgt.get(w, 0) + c
        return VermaVector(self, out)

    def e_recursive(self, i: int, vec: VermaVector) -> VermaVector:
        """Cross-check route: E_i(theta_j u v) = theta_j E_i(u v) + delta_ij H_i(u v)."""
        out = self.zero()
        for depth, part in vec.comps.items():
            for w, c in part.items():
                out = out + c * self._e_word(i, w)
        return out

    def _e_word(self, i: int, w: Word) -> VermaVector:
        if not w:
            return self.zero()
        j, rest = w[0], w[1:]
        tail = VermaVector(self, {_word_depth(rest, self.cd.rank): {rest: self.ctx.one()}})
        out = self.f(j, self._e_word(i, rest))
        if j == i:
            out = out + self.h(i, tail)
        return out

    def act(self, tree, vec: VermaVector) -> VermaVector:
        """Action of a bracket tree via nested commutators."""
        kind = tree[0]
        if kind == "br":
            _, x, y = tree
            return self.act(x, self.act(y, vec)) - self.act(y, self.act(x, vec))
        _, i = tree
        if kind == "e":
            return self.e(i, vec)
        if kind == "h":
            return self.h(i, vec)
        return self.f(i, vec)

    def multiply_right(self, vec: VermaVector, word: Word) -> VermaVector:
        """x v -> (x * theta_word) v, the right regular shift used by screenings."""
        out: dict = {}
        extra = _word_depth(word, self.cd.rank)
        for depth, part in vec.comps.items():
            new_depth = tuple(d + e for d, e in zip(depth, extra))
            ws = weight_space(self.cd, new_depth)
            reduced = ws.reduce({w + word: c for w, c in part.items()})
            if reduced:
                tgt = out.setdefault(new_depth, {})
                for w, c in reduced.items():
                    tgt[w] = tgt.get(w, 0) + c
        return VermaVector(self, out)

    def from_words(self, combo: dict) -> VermaVector:
        """Vector from a {word: scalar} map (normal-formed per degree)."""
        reduced = _reduce_full(self.cd, {w: self.ctx.scalar(c) for w, c in combo.items()})
        out: dict = {}
        for w, c in reduced.items():
            out.setdefault(_word_depth(w, self.cd.rank), {})[w] = c
        return VermaVector(self, out)

    def apply_derivation(self, i: int, vec: VermaVector) -> VermaVector:
        out = self.zero()
        for depth, part in vec.comps.items():
            reduced = partial_derivation(self.cd, i, dict(part))
            out = out + self.from_words(reduced)
        return out
