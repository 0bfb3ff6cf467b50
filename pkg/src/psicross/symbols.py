"""Polyhomogeneous symbols on flat tori with exact coefficients.

A symbol entry is stored as a flat map ``(xmode, alpha, w) -> coefficient``
standing for ``c * exp(i xmode.x) * xi**alpha * |xi|**(-w)``.  The xi-part lives
in ``Q[xi, r, 1/r] / (xi_1**2 + ... + xi_n**2 - r**2)`` and is kept in the normal
form ``0 <= alpha[0] <= 1``, so equality of symbols is equality of dicts.

Negative exponents are allowed on xi_2, ..., xi_n (the ring localized at those
coordinates), which is where transversal inverses such as ``xi_2**-2`` live.

The homogeneous degree of a monomial is ``|alpha| - w``.  Every symbol carries a
degree window ``order, order-1, ..., order-depth+1``; ``complete=True`` records
that all terms below the window are exactly zero (differential operators,
constant-coefficient inverses, ...).
"""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .exact import ONE, ZERO, ExactScalar, TrigPolynomial, format_rational

Key = tuple  # (xmode, alpha, w)


class SymbolError(Exception):
    """Structural problem with a symbol (shape, dimension, rank)."""


class TruncationError(SymbolError):
    """Requested depth exceeds the term data available in an input."""


class SingularEvaluationError(SymbolError):
    """Evaluation of a negative-degree monomial at xi = 0, or at an irrational |xi|."""


# --------------------------------------------------------------------------
# xi-monomial ring


@lru_cache(maxsize=None)
def normalize_monomial(alpha: tuple, w: int) -> tuple:
    """Normal form of ``xi**alpha * |xi|**(-w)`` as a tuple of ((alpha, w), int)."""
    if len(alpha) == 0 or 0 <= alpha[0] <= 1:
        return (((alpha, w), 1),)
    if alpha[0] < 0:
        if len(alpha) > 1:
            raise SymbolError("negative powers of xi_1 are outside the ring for n >= 2")
        # one dimension: xi^-1 = xi * |xi|^-2
        m = (1 - alpha[0]) // 2
        return normalize_monomial((alpha[0] + 2 * m,), w + 2 * m)
    out: dict = {}
    base = (alpha[0] - 2,) + alpha[1:]
    # xi_1^2 = |xi|^2 - sum_{i>1} xi_i^2
    for (a, v), c in normalize_monomial(base, w - 2):
        out[(a, v)] = out.get((a, v), 0) + c
    for i in range(1, len(alpha)):
        b = list(base)
        b[i] += 2
        for (a, v), c in normalize_monomial(tuple(b), w):
            out[(a, v)] = out.get((a, v), 0) - c
    return tuple((k, c) for k, c in sorted(out.items()) if c)


@lru_cache(maxsize=None)
def multiply_monomials(m1: tuple, m2: tuple) -> tuple:
    (a1, w1), (a2, w2) = m1, m2
    return normalize_monomial(tuple(x + y for x, y in zip(a1, a2)), w1 + w2)


@lru_cache(maxsize=None)
def differentiate_monomial(m: tuple, i: int) -> tuple:
    """d/dxi_i of a normal-form monomial, in normal form."""
    alpha, w = m
    out: dict = {}
    if alpha[i]:
        a = list(alpha)
        a[i] -= 1
        for k, c in normalize_monomial(tuple(a), w):
            out[k] = out.get(k, 0) + alpha[i] * c
    if w:
        a = list(alpha)
        a[i] += 1
        for k, c in normalize_monomial(tuple(a), w + 2):
            out[k] = out.get(k, 0) - w * c
    return tuple((k, c) for k, c in sorted(out.items()) if c)


def monomial_degree(alpha: tuple, w: int) -> int:
    return sum(alpha) - w


def evaluate_monomial(alpha: tuple, w: int, xi: Sequence) -> Fraction:
    """Exact value of ``xi**alpha * |xi|**(-w)`` at a rational point."""
    xi = [Fraction(v) for v in xi]
    val = Fraction(1)
    for x, a in zip(xi, alpha):
        if a < 0 and x == 0:
            raise SingularEvaluationError("negative power of a vanishing coordinate")
        val *= x**a
    if w == 0:
        return val
    sq = sum(x * x for x in xi)
    if sq == 0:
        if w > 0:
            raise SingularEvaluationError("negative-degree term evaluated at xi = 0")
        return Fraction(0)
    if w % 2 == 0:
        return val * sq ** (-w // 2)
    num, den = math.isqrt(sq.numerator), math.isqrt(sq.denominator)
    if num * num != sq.numerator or den * den != sq.denominator:
        raise SingularEvaluationError(f"|xi| is irrational at {tuple(xi)}")
    return val * Fraction(num, den) ** (-w)


def multi_indices(n: int, total: int):
    """All alpha in N^n with |alpha| == total."""
    if n == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in multi_indices(n - 1, total - first):
            yield (first,) + rest


def _factorial(alpha) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


# --------------------------------------------------------------------------
# entry-level helpers on flat dicts


def _add_into(acc: dict, key, c):
    v = acc.get(key)
    v = c if v is None else v + c
    if v:
        acc[key] = v
    elif key in acc:
        del acc[key]


def _entry_degrees(entry: dict) -> set:
    return {monomial_degree(a, w) for (_, a, w) in entry}


def _xi_derivative(entry: dict, alpha: tuple) -> dict:
    cur = entry
    for i, a in enumerate(alpha):
        for _ in range(a):
            nxt: dict = {}
            for (k, al, w), c in cur.items():
                for (al2, w2), m in differentiate_monomial((al, w), i):
                    _add_into(nxt, (k, al2, w2), c * m)
            cur = nxt
    return cur


def _x_derivative(entry: dict, beta: tuple) -> dict:
    """D_x^beta = (-i d/dx)^beta: multiplies mode k by k^beta."""
    out = {}
    for (k, al, w), c in entry.items():
        f = 1
        for kk, b in zip(k, beta):
            f *= kk**b
        if f:
            out[(k, al, w)] = c * f
    return out


def _partial_x(entry: dict, beta: tuple) -> dict:
    """Plain d/dx^beta: multiplies mode k by (i k)^beta."""
    out = {}
    nb = sum(beta)
    phase = ExactScalar(0, 1) ** nb
    for (k, al, w), c in entry.items():
        f = 1
        for kk, b in zip(k, beta):
            f *= kk**b
        if f:
            out[(k, al, w)] = c * phase * f
    return out


def _multiply(e1: dict, e2: dict, min_degree=None) -> dict:
    out: dict = {}
    for (k1, a1, w1), c1 in e1.items():
        d1 = sum(a1) - w1
        for (k2, a2, w2), c2 in e2.items():
            if min_degree is not None and d1 + sum(a2) - w2 < min_degree:
                continue
            k = tuple(x + y for x, y in zip(k1, k2))
            c = c1 * c2
            for (a, w), m in multiply_monomials((a1, w1), (a2, w2)):
                _add_into(out, (k, a, w), c * m)
    return out


def _is_differential(entry: dict) -> bool:
    return all(w <= 0 and w % 2 == 0 and min(a, default=0) >= 0 for (_, a, w) in entry)


def _is_x_independent(entry: dict) -> bool:
    return all(not any(k) for (k, _, _) in entry)


# --------------------------------------------------------------------------
# MatrixSymbol


class MatrixSymbol:
    """r x r matrix of polyhomogeneous symbols on the n-torus.

    Immutable; all operations return new objects.
    """

    __slots__ = ("dim", "rank", "order", "depth", "entries", "complete", "support_tag")

    def __init__(self, dim: int, rank: int, order: int, depth: int, entries, complete: bool = False,
                 support_tag=None):
        if depth < 1:
            raise SymbolError("depth must be positive")
        self.dim, self.rank, self.order, self.depth = dim, rank, order, depth
        self.complete = complete
        self.support_tag = support_tag
        if len(entries) != rank or any(len(row) != rank for row in entries):
            raise SymbolError(f"entries are not {rank}x{rank}")
        low = order - depth + 1
        clean = []
        for row in entries:
            crow = []
            for e in row:
                ce = {}
                for (k, a, w), c in e.items():
                    k, a = tuple(k), tuple(a)
                    if len(k) != dim or len(a) != dim:
                        raise SymbolError("mode or multi-index of wrong dimension")
                    for (a2, w2), m in normalize_monomial(a, w):
                        _add_into(ce, (k, a2, w2), ExactScalar.coerce(c) * m)
                for (k, a, w) in ce:
                    d = sum(a) - w
                    if d > order:
                        raise SymbolError(f"term of degree {d} exceeds order {order}")
                    if d < low:
                        raise TruncationError(
                            f"term of degree {d} lies below the window [{low}, {order}]; truncate explicitly")
                crow.append(ce)
            clean.append(tuple(crow))
        self.entries = tuple(clean)

    # construction helpers ------------------------------------------------
    @classmethod
    def from_terms(cls, dim: int, terms: Iterable, order: int | None = None, depth: int | None = None,
                   complete: bool = True, rank: int = 1, support_tag=None) -> "MatrixSymbol":
        """Build from ``(coef, xmode, alpha, w)`` (rank 1) or ``(i, j, coef, xmode, alpha, w)``."""
        entries = [[{} for _ in range(rank)] for _ in range(rank)]
        degs = []
        for t in terms:
            if len(t) == 4:
                i, j, (c, k, a, w) = 0, 0, t
            else:
                i, j, c, k, a, w = t
            key = (tuple(k), tuple(a), w)
            _add_into(entries[i][j], key, ExactScalar.coerce(c))
            degs.append(sum(a) - w)
        if order is None:
            order = max(degs) if degs else 0
        if depth is None:
            depth = order - min(degs) + 1 if degs else 1
        return cls(dim, rank, order, depth, entries, complete, support_tag)

    @classmethod
    def zero(cls, dim, rank=1, order=0, depth=1, complete=True):
        return cls(dim, rank, order, depth, [[{} for _ in range(rank)] for _ in range(rank)], complete)

    @classmethod
    def identity(cls, dim, rank=1, depth=1):
        z = (0,) * dim
        return cls(dim, rank, 0, depth,
                   [[({(z, z, 0): ONE} if i == j else {}) for j in range(rank)] for i in range(rank)], True)

    @classmethod
    def from_entries(cls, blocks: Sequence[Sequence["MatrixSymbol"]]) -> "MatrixSymbol":
        """Assemble a block matrix from symbols of equal rank."""
        b0 = blocks[0][0]
        r = b0.rank
        nb = len(blocks)
        order = max(b.order for row in blocks for b in row)
        low = max(b.low_degree for row in blocks for b in row)
        complete = all(b.complete for row in blocks for b in row)
        if complete:
            low = min(b.lowest_nonzero_degree(default=order) for row in blocks for b in row)
        entries = [[{} for _ in range(nb * r)] for _ in range(nb * r)]
        for I_, row in enumerate(blocks):
            for J, b in enumerate(row):
                if b.rank != r or b.dim != b0.dim:
                    raise SymbolError("block shape mismatch")
                t = b.truncate_to(low)
                for i in range(r):
                    for j in range(r):
                        entries[I_ * r + i][J * r + j] = dict(t.entries[i][j])
        return cls(b0.dim, nb * r, order, order - low + 1, entries, complete)

    def block(self, bi: int, bj: int, size: int) -> "MatrixSymbol":
        rows = self.entries[bi * size:(bi + 1) * size]
        sub = [list(r[bj * size:(bj + 1) * size]) for r in rows]
        return MatrixSymbol(self.dim, size, self.order, self.depth, sub, self.complete, self.support_tag)

    # window ---------------------------------------------------------------
    @property
    def low_degree(self) -> int:
        """Lowest degree for which term data is known (``-inf`` if complete)."""
        return -math.inf if self.complete else self.order - self.depth + 1

    @property
    def window_low(self) -> int:
        return self.order - self.depth + 1

    def lowest_nonzero_degree(self, default=None):
        degs = [d for row in self.entries for e in row for d in _entry_degrees(e)]
        return min(degs) if degs else default

    def highest_nonzero_degree(self, default=None):
        degs = [d for row in self.entries for e in row for d in _entry_degrees(e)]
        return max(degs) if degs else default

    def with_window(self, order: int, depth: int) -> "MatrixSymbol":
        """Re-window without dropping known information (errors otherwise)."""
        low = order - depth + 1
        if not self.complete and low < self.window_low:
            raise TruncationError(f"depth {depth} at order {order} needs degrees below {self.window_low}")
        return self.truncate_to(low, order=order)

    def truncate_to(self, low: int, order: int | None = None) -> "MatrixSymbol":
        """Drop terms of degree < ``low``; the result is complete only if nothing was dropped."""
        order = self.order if order is None else order
        dropped = False
        ents = []
        for row in self.entries:
            r = []
            for e in row:
                ne = {}
                for key, c in e.items():
                    if sum(key[1]) - key[2] >= low:
                        ne[key] = c
                    else:
                        dropped = True
                r.append(ne)
            ents.append(r)
        complete = self.complete and not dropped
        return MatrixSymbol(self.dim, self.rank, order, order - low + 1, ents, complete, self.support_tag)

    def truncate(self, depth: int) -> "MatrixSymbol":
        return self.truncate_to(self.order - depth + 1)

    def with_tag(self, tag) -> "MatrixSymbol":
        return MatrixSymbol(self.dim, self.rank, self.order, self.depth, self.entries, self.complete, tag)

    # structure -------------------------------------------------------------
    def homogeneous_part(self, degree: int) -> "MatrixSymbol":
        ents = [[{k: c for k, c in e.items() if sum(k[1]) - k[2] == degree} for e in row] for row in self.entries]
        return MatrixSymbol(self.dim, self.rank, degree, 1, ents, True, self.support_tag)

    def principal(self) -> "MatrixSymbol":
        return self.homogeneous_part(self.order)

    def terms(self, i: int = 0, j: int = 0) -> list:
        """HomogeneousTerm view of entry (i, j): list of (degree, [(TrigPolynomial, alpha, w)])."""
        e = self.entries[i][j]
        out = []
        for d in range(self.order, self.window_low - 1, -1):
            groups: dict = {}
            for (k, a, w), c in e.items():
                if sum(a) - w == d:
                    groups.setdefault((a, w), {})[k] = c
            out.append((d, [(TrigPolynomial(self.dim, g), a, w) for (a, w), g in sorted(groups.items())]))
        return out

    def is_zero(self) -> bool:
        return not any(e for row in self.entries for e in row)

    def is_differential(self) -> bool:
        return self.complete and all(_is_differential(e) for row in self.entries for e in row)

    def is_x_independent(self) -> bool:
        return all(_is_x_independent(e) for row in self.entries for e in row)

    def same_terms(self, other: "MatrixSymbol", low: int | None = None) -> bool:
        """Termwise equality on degrees >= ``low`` (defaults to the common window)."""
        if (self.dim, self.rank) != (other.dim, other.rank):
            return False
        if low is None:
            low = max(self.low_degree, other.low_degree)
        for r1, r2 in zip(self.entries, other.entries):
            for e1, e2 in zip(r1, r2):
                f1 = {k: c for k, c in e1.items() if sum(k[1]) - k[2] >= low}
                f2 = {k: c for k, c in e2.items() if sum(k[1]) - k[2] >= low}
                if f1 != f2:
                    return False
        return True

    def __eq__(self, other):
        if not isinstance(other, MatrixSymbol):
            return NotImplemented
        return (self.dim, self.rank, self.order, self.depth, self.complete) == (
            other.dim, other.rank, other.order, other.depth, other.complete) and self.entries == other.entries

    def __hash__(self):
        return hash((self.dim, self.rank, self.order, self.depth))

    def __repr__(self):
        return f"MatrixSymbol(dim={self.dim}, rank={self.rank}, order={self.order}, depth={self.depth}, " \
               f"complete={self.complete}, entries={self.entries!r})"

    # arithmetic sugar ------------------------------------------------------
    def __add__(self, other):
        return linear_combine([ONE, ONE], [self, other])

    def __sub__(self, other):
        return linear_combine([ONE, -ONE], [self, other])

    def __neg__(self):
        return linear_combine([-ONE], [self])

    def __mul__(self, c):
        return linear_combine([ExactScalar.coerce(c)], [self])

    __rmul__ = __mul__

    def multiply_x(self, f: TrigPolynomial) -> "MatrixSymbol":
        """Pointwise product with an x-dependent function (no composition terms)."""
        fe = {(k, (0,) * self.dim, 0): c for k, c in f.terms.items()}
        ents = [[_multiply(fe, e) for e in row] for row in self.entries]
        return MatrixSymbol(self.dim, self.rank, self.order, self.depth, ents, self.complete, self.support_tag)

    def map_entries(self, fn) -> "MatrixSymbol":
        ents = [[fn(e) for e in row] for row in self.entries]
        return MatrixSymbol(self.dim, self.rank, self.order, self.depth, ents, self.complete, self.support_tag)


class PolyhomogeneousSymbol(MatrixSymbol):
    """Scalar (rank-1) symbol."""

    __slots__ = ()

    def __init__(self, dim, order, depth, data: dict, complete=False, support_tag=None):
        super().__init__(dim, 1, order, depth, [[data]], complete, support_tag)

    @property
    def data(self) -> dict:
        return self.entries[0][0]


def scalar_entry(a: MatrixSymbol, i: int = 0, j: int = 0) -> PolyhomogeneousSymbol:
    return PolyhomogeneousSymbol(a.dim, a.order, a.depth, a.entries[i][j], a.complete, a.support_tag)


# convenience constructors ----------------------------------------------------


def xi_power(dim: int, alpha: Sequence[int], w: int = 0, coef=1, mode: Sequence[int] | None = None,
             rank: int = 1) -> MatrixSymbol:
    mode = tuple(mode) if mode is not None else (0,) * dim
    return MatrixSymbol.from_terms(dim, [(coef, mode, tuple(alpha), w)])


def multiplication(f: TrigPolynomial, rank: int = 1) -> MatrixSymbol:
    """Order-0 symbol of multiplication by ``f`` (times the identity matrix)."""
    z = (0,) * f.dim
    terms = [(i, i, c, k, z, 0) for i in range(rank) for k, c in f.terms.items()]
    return MatrixSymbol.from_terms(f.dim, terms, order=0, depth=1, rank=rank)


def constant(dim: int, c=1) -> MatrixSymbol:
    return multiplication(TrigPolynomial.constant(dim, c))


# --------------------------------------------------------------------------
# operations


def _tag_union(tags):
    if any(t is None for t in tags):
        return None
    out = tags[0]
    for t in tags[1:]:
        out = out.union(t)
    return out


def _tag_intersection(tags):
    real = [t for t in tags if t is not None]
    if not real:
        return None
    out = real[0]
    for t in real[1:]:
        out = out.intersect(t)
    return out


def linear_combine(coeffs: Sequence, symbols: Sequence[MatrixSymbol]) -> MatrixSymbol:
    if len(coeffs) != len(symbols) or not symbols:
        raise SymbolError("need one coefficient per symbol")
    s0 = symbols[0]
    for s in symbols:
        if (s.dim, s.rank) != (s0.dim, s0.rank):
            raise SymbolError("dimension/rank mismatch in linear_combine")
    order = max(s.order for s in symbols)
    complete = all(s.complete for s in symbols)
    low = max(s.low_degree for s in symbols)
    ents = [[{} for _ in range(s0.rank)] for _ in range(s0.rank)]
    for c, s in zip(coeffs, symbols):
        c = ExactScalar.coerce(c)
        if not c:
            continue
        for i in range(s0.rank):
            for j in range(s0.rank):
                for key, v in s.entries[i][j].items():
                    if sum(key[1]) - key[2] >= low:
                        _add_into(ents[i][j], key, c * v)
    if complete:
        degs = [sum(k[1]) - k[2] for row in ents for e in row for k in e]
        low = min(degs + [min(s.window_low for s in symbols)])
    return MatrixSymbol(s0.dim, s0.rank, order, order - low + 1, ents, complete,
                        _tag_union([s.support_tag for s in symbols]))


def derivative(a: MatrixSymbol, alpha: Sequence[int], beta: Sequence[int] | None = None) -> MatrixSymbol:
    """``d_xi^alpha d_x^beta a``; order drops by |alpha|, depth unchanged."""
    alpha = tuple(alpha)
    beta = tuple(beta) if beta is not None else (0,) * a.dim
    if len(alpha) != a.dim or len(beta) != a.dim:
        raise SymbolError("multi-index of wrong dimension")
    ents = [[_partial_x(_xi_derivative(e, alpha), beta) for e in row] for row in a.entries]
    return MatrixSymbol(a.dim, a.rank, a.order - sum(alpha), a.depth, ents, a.complete, a.support_tag)


def _check_pair(a: MatrixSymbol, b: MatrixSymbol):
    if a.dim != b.dim:
        raise SymbolError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.rank != b.rank:
        raise SymbolError(f"rank mismatch: {a.rank} vs {b.rank}")


def _require_depth(s: MatrixSymbol, depth: int, name: str):
    if not s.complete and s.depth < depth:
        raise TruncationError(f"{name} has depth {s.depth} < requested depth {depth}")


def compose(a: MatrixSymbol, b: MatrixSymbol, depth: int) -> MatrixSymbol:
    """Symbol of Op(a) Op(b): sum over alpha of (1/alpha!) d_xi^alpha a * D_x^alpha b.

    Exact (finite) when ``a`` is a complete differential symbol or ``b`` is a
    complete x-independent symbol; the result is then complete and its window
    is widened to hold every term.
    """
    _check_pair(a, b)
    _require_depth(a, depth, "left factor")
    _require_depth(b, depth, "right factor")
    top = a.order + b.order
    exact = a.complete and b.complete and (a.is_differential() or b.is_x_independent())
    if exact:
        if b.is_x_independent():
            max_alpha = 0
        else:
            hi = a.highest_nonzero_degree(default=-1)
            max_alpha = max(hi, 0)
        min_degree = None
    else:
        max_alpha = depth - 1
        min_degree = top - depth + 1
    r = a.rank
    ents = [[{} for _ in range(r)] for _ in range(r)]
    for total in range(max_alpha + 1):
        for alpha in multi_indices(a.dim, total):
            inv = Fraction(1, _factorial(alpha))
            da = [[_xi_derivative(e, alpha) for e in row] for row in a.entries]
            db = [[_x_derivative(e, alpha) for e in row] for row in b.entries]
            for i in range(r):
                for j in range(r):
                    for l in range(r):
                        if not da[i][l] or not db[l][j]:
                            continue
                        prod = _multiply(da[i][l], db[l][j], min_degree)
                        for key, c in prod.items():
                            _add_into(ents[i][j], key, c * inv)
    if exact:
        degs = [sum(k[1]) - k[2] for row in ents for e in row for k in e]
        low = min(degs + [top - depth + 1])
        out_depth = top - low + 1
    else:
        out_depth = depth
    return MatrixSymbol(a.dim, r, top, out_depth, ents, exact,
                        _tag_intersection([a.support_tag, b.support_tag]))


def conjugate_transpose(a: MatrixSymbol) -> MatrixSymbol:
    r = a.rank
    ents = [[{} for _ in range(r)] for _ in range(r)]
    for i in range(r):
        for j in range(r):
            ents[j][i] = {(tuple(-x for x in k), al, w): c.conjugate() for (k, al, w), c in a.entries[i][j].items()}
    return MatrixSymbol(a.dim, r, a.order, a.depth, ents, a.complete, a.support_tag)


def adjoint(a: MatrixSymbol, depth: int) -> MatrixSymbol:
    """Formal adjoint: sum over alpha of (1/alpha!) d_xi^alpha D_x^alpha a*."""
    _require_depth(a, depth, "symbol")
    star = conjugate_transpose(a)
    exact = a.complete and (a.is_differential() or a.is_x_independent())
    if exact:
        max_alpha = 0 if a.is_x_independent() else max(a.highest_nonzero_degree(default=-1), 0)
        low_keep = None
    else:
        max_alpha = depth - 1
        low_keep = a.order - depth + 1
    r = a.rank
    ents = [[{} for _ in range(r)] for _ in range(r)]
    for total in range(max_alpha + 1):
        for alpha in multi_indices(a.dim, total):
            inv = Fraction(1, _factorial(alpha))
            for i in range(r):
                for j in range(r):
                    t = _xi_derivative(_x_derivative(star.entries[i][j], alpha), alpha)
                    for key, c in t.items():
                        if low_keep is not None and sum(key[1]) - key[2] < low_keep:
                            continue
                        _add_into(ents[i][j], key, c * inv)
    if exact:
        degs = [sum(k[1]) - k[2] for row in ents for e in row for k in e]
        out_depth = a.order - min(degs + [a.order - depth + 1]) + 1
    else:
        out_depth = depth
    return MatrixSymbol(a.dim, r, a.order, out_depth, ents, exact, a.support_tag)


def apply_to_mode(a: MatrixSymbol, k: Sequence[int], component: int = 0) -> dict:
    """Image of ``e_k`` in the given bundle component: ``{(mode, row): value}``.

    Op(a) e_k = sum_l a_l(k) e_{k+l}, with a_l the x-Fourier coefficient of a.
    """
    k = tuple(k)
    out: dict = {}
    for i in range(a.rank):
        for (l, al, w), c in a.entries[i][component].items():
            v = evaluate_monomial(al, w, k)
            if v:
                _add_into(out, (tuple(x + y for x, y in zip(k, l)), i), c * v)
    return out


def mode_window(dim: int, radius: int) -> list:
    """All modes with sup-norm <= radius, in lexicographic order."""
    return list(itertools.product(range(-radius, radius + 1), repeat=dim))


def mode_matrix(a: MatrixSymbol, modes: Sequence) -> dict:
    """Sparse matrix ``{((mode_out, row), (mode_in, col)): value}`` for inputs in ``modes``."""
    out = {}
    for k in modes:
        for c in range(a.rank):
            for key, v in apply_to_mode(a, k, c).items():
                out[(key, (tuple(k), c))] = v
    return out


# --------------------------------------------------------------------------
# JSON


def _qs(q: Fraction) -> str:
    return format_rational(q)


def symbol_to_json(a: MatrixSymbol) -> dict:
    entries = []
    for row in a.entries:
        jrow = []
        for e in row:
            terms = []
            for d in range(a.order, a.window_low - 1, -1):
                groups: dict = {}
                for (k, al, w), c in e.items():
                    if sum(al) - w == d:
                        groups.setdefault((al, w), []).append(list(k) + [_qs(c.re), _qs(c.im)])
                summ = [{"alpha": list(al), "w": w, "xmodes": sorted(v)} for (al, w), v in sorted(groups.items())]
                terms.append({"degree": d, "summands": summ})
            jrow.append({"terms": terms})
        entries.append(jrow)
    out = {"dim": a.dim, "rank": a.rank, "order": a.order, "depth": a.depth, "complete": a.complete,
           "entries": entries}
    if a.support_tag is not None:
        out["support_tag"] = a.support_tag.to_json()
    return out


def symbol_from_json(d: dict) -> MatrixSymbol:
    try:
        dim, rank = int(d["dim"]), int(d["rank"])
        entries = [[{} for _ in range(rank)] for _ in range(rank)]
        for i, row in enumerate(d["entries"]):
            for j, ent in enumerate(row):
                for term in ent["terms"]:
                    for s in term["summands"]:
                        al, w = tuple(s["alpha"]), int(s["w"])
                        if sum(al) - w != term["degree"]:
                            raise SymbolError("summand degree disagrees with its term degree")
                        for xm in s["xmodes"]:
                            k = tuple(int(v) for v in xm[:dim])
                            c = ExactScalar(Fraction(xm[dim]), Fraction(xm[dim + 1]))
                            _add_into(entries[i][j], (k, al, w), c)
        tag = None
        if "support_tag" in d:
            from .cones import ConicRegion

            tag = ConicRegion.from_json(dim, d["support_tag"])
        return MatrixSymbol(dim, rank, int(d["order"]), int(d["depth"]), entries, bool(d.get("complete", False)),
                            tag)
    except (KeyError, TypeError, IndexError) as exc:
        raise SymbolError(f"malformed symbol JSON: {exc}") from exc


def dumps(a: MatrixSymbol) -> str:
    return json.dumps(symbol_to_json(a), sort_keys=True)
