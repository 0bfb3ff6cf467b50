"""Neumann-series parametrices, transversal parametrices with conic cutoff markers,
and Atiyah's elliptic completion."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .cones import ConicRegion
from .exact import ONE, ExactScalar
from .microlocal import (
    GroupDescriptor,
    RefinementNeeded,
    characteristic_set,
    classify_symbol,
    transversal_cotangent,
)
from .symbols import (
    MatrixSymbol,
    SymbolError,
    _add_into,
    _is_x_independent,
    apply_to_mode,
    compose,
    linear_combine,
    multiply_monomials,
)


class ParametrixError(ValueError):
    pass


class PreconditionError(ParametrixError):
    pass


@dataclass(frozen=True)
class CutoffMarker:
    """Formal conic idempotent: 1 on ``region``, 0 on ``complement_region``; derivatives vanish."""

    region: ConicRegion
    complement_region: ConicRegion

    def __post_init__(self):
        if not self.region.intersect(self.complement_region).is_empty():
            raise ValueError("cutoff regions must be disjoint")

    @classmethod
    def indicator(cls, region: ConicRegion) -> "CutoffMarker":
        return cls(region, region.complement())

    @classmethod
    def one(cls, dim: int) -> "CutoffMarker":
        return cls(ConicRegion.full(dim), ConicRegion.empty(dim))

    def __mul__(self, other: "CutoffMarker") -> "CutoffMarker":
        return CutoffMarker(self.region.intersect(other.region),
                            self.complement_region.union(other.complement_region))

    def transition(self) -> ConicRegion:
        """Where the marker is neither 0 nor 1."""
        return self.region.union(self.complement_region).complement()


@dataclass
class ParametrixResult:
    q: MatrixSymbol
    remainder_order: int
    remainder_tag: ConicRegion
    certificate: str
    left_remainder: MatrixSymbol
    right_remainder: MatrixSymbol
    marker: CutoffMarker | None = None

    def to_json(self) -> dict:
        from .symbols import symbol_to_json

        out = {"q": symbol_to_json(self.q), "remainder_order": self.remainder_order,
               "remainder_tag": self.remainder_tag.to_json(), "certificate": self.certificate,
               "left_remainder": symbol_to_json(self.left_remainder),
               "right_remainder": symbol_to_json(self.right_remainder)}
        if self.marker is not None:
            out["marker"] = {"region": self.marker.region.to_json(),
                             "complement_region": self.marker.complement_region.to_json()}
        return out


# --------------------------------------------------------------------------


def _unit_inverse(entry: dict):
    """Inverse of a single-monomial ring element ``c e^{ikx} xi^alpha |xi|^{-w}``."""
    if len(entry) != 1:
        return None
    ((k, a, w), c), = entry.items()
    inv_alpha = tuple(-x for x in a)
    try:
        norm = multiply_monomials(((0,) * len(a), 0), (inv_alpha, -w))
    except SymbolError:
        return None
    out = {}
    for (a2, w2), m in norm:
        out[(tuple(-x for x in k), a2, w2)] = c.inverse() * m
    return out


def _ring_mul(e1: dict, e2: dict) -> dict:
    from .symbols import _multiply

    return _multiply(e1, e2)


def principal_inverse(p: MatrixSymbol) -> MatrixSymbol:
    """Exact inverse of the principal symbol inside the symbol ring."""
    pr = p.principal()
    r = p.rank
    ents = pr.entries
    if r == 1:
        inv = _unit_inverse(ents[0][0])
        if inv is None:
            raise ParametrixError("principal symbol is not invertible in the symbol ring")
        return MatrixSymbol(p.dim, 1, -p.order, 1, [[inv]], True)
    # adjugate / determinant
    det: dict = {}
    for perm in itertools.permutations(range(r)):
        sign = _sign(perm)
        term = {((0,) * p.dim, (0,) * p.dim, 0): ExactScalar(sign)}
        for i, j in enumerate(perm):
            term = _ring_mul(term, ents[i][j])
        for key, c in term.items():
            _add_into(det, key, c)
    dinv = _unit_inverse(det)
    if dinv is None:
        raise ParametrixError("principal determinant is not a unit of the symbol ring")
    adj = [[{} for _ in range(r)] for _ in range(r)]
    for i in range(r):
        for j in range(r):
            minor_rows = [x for x in range(r) if x != j]
            minor_cols = [y for y in range(r) if y != i]
            cof: dict = {}
            for perm in itertools.permutations(range(r - 1)):
                term = {((0,) * p.dim, (0,) * p.dim, 0): ExactScalar(_sign(perm) * (-1) ** (i + j))}
                for a, b in enumerate(perm):
                    term = _ring_mul(term, ents[minor_rows[a]][minor_cols[b]])
                for key, c in term.items():
                    _add_into(cof, key, c)
            adj[i][j] = _ring_mul(cof, dinv)
    return MatrixSymbol(p.dim, r, -p.order, 1, adj, True)


def _sign(perm):
    s = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                s = -s
    return s


def _neumann(p: MatrixSymbol, depth: int) -> MatrixSymbol:
    if not p.complete and p.depth < depth:
        from .symbols import TruncationError

        raise TruncationError(f"symbol depth {p.depth} < requested parametrix depth {depth}")
    q0 = principal_inverse(p)
    one = MatrixSymbol.identity(p.dim, p.rank)
    rem = linear_combine([ONE, -ONE], [one, compose(q0, p, depth)]).truncate(depth)
    # q = (1 + r + r^2 + ...) q0, r of order <= -1
    series = one.with_window(0, depth)
    power = one.with_window(0, depth)
    for _ in range(1, depth):
        power = compose(power, rem, depth).truncate(depth)
        series = linear_combine([ONE, ONE], [series, power]).with_window(0, depth)
    return compose(series, q0.with_window(-p.order, depth), depth).truncate(depth)


def _remainders(p: MatrixSymbol, q: MatrixSymbol, depth: int):
    one = MatrixSymbol.identity(p.dim, p.rank)
    left = linear_combine([ONE, -ONE], [one, compose(q, p, depth)]).truncate(depth)
    right = linear_combine([ONE, -ONE], [one, compose(p, q, depth)]).truncate(depth)
    return left, right


def neumann_parametrix(p: MatrixSymbol, depth: int = 4) -> ParametrixResult:
    """Elliptic parametrix: 1 - q p and 1 - p q vanish in degrees 0 .. -depth+1."""
    if p.principal().is_zero():
        raise ParametrixError("principal term is zero")
    try:
        char = characteristic_set(p)
    except RefinementNeeded as exc:
        raise ParametrixError(str(exc)) from exc
    if not char.is_empty():
        raise PreconditionError("symbol is not elliptic")
    q = _neumann(p, depth)
    left, right = _remainders(p, q, depth)
    if not (left.is_zero() and right.is_zero()):
        raise ParametrixError("Neumann series failed to cancel the remainder window")
    return ParametrixResult(q, -depth, ConicRegion.full(p.dim), "elliptic", left, right)


def transversal_parametrix(p: MatrixSymbol, G: GroupDescriptor, cutoff: CutoffMarker,
                           depth: int = 4) -> ParametrixResult:
    """Parametrix on the marker region; the remainder lives where the marker is not 1."""
    tcone = transversal_cotangent(G, p.dim)
    if not cutoff.region.contains(tcone):
        raise PreconditionError("cutoff region does not contain the transversal cotangent cone")
    cls = classify_symbol(p, G)
    if not cls.transversally_elliptic:
        raise PreconditionError("symbol is not transversally elliptic")
    if not cls.char.intersect(cutoff.region).is_empty():
        raise PreconditionError("principal symbol is not invertible on the cutoff region")
    if cutoff.region.is_full():
        res = neumann_parametrix(p, depth)
        return res
    q = _neumann(p, depth)
    left, right = _remainders(p, q, depth)
    if not (left.is_zero() and right.is_zero()):
        raise ParametrixError("Neumann series failed to cancel the remainder window")
    remainder_tag = cutoff.region.complement()
    if not remainder_tag.intersect(tcone).is_empty():
        raise PreconditionError("remainder support meets the transversal cotangent cone")
    return ParametrixResult(q.with_tag(cutoff.region), -depth, remainder_tag, "transversal",
                            left.with_tag(remainder_tag), right.with_tag(remainder_tag), cutoff)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseSymbol:
    """Symbol defined piece by piece on a conic partition (formal markers).

    ``origin_piece`` is the index used at xi = 0, where markers equal 1 near the origin.
    """

    pieces: tuple  # of (ConicRegion, MatrixSymbol)
    origin_piece: int = 0

    @property
    def dim(self):
        return self.pieces[0][1].dim

    def piece_at(self, k) -> MatrixSymbol:
        if not any(k):
            return self.pieces[self.origin_piece][1]
        for region, sym in self.pieces:
            if region.contains_point(k):
                return sym
        raise ValueError(f"point {k} is not covered by the partition")

    def eigenvalue(self, k):
        """Diagonal value at mode k for x-independent scalar pieces."""
        sym = self.piece_at(k)
        return apply_to_mode(sym, k, 0).get((tuple(k), 0), 0)

    def characteristic_set(self) -> ConicRegion:
        out = ConicRegion.empty(self.dim)
        for region, sym in self.pieces:
            out = out.union(characteristic_set(sym).intersect(region))
        return out

    def is_elliptic(self) -> bool:
        return self.characteristic_set().is_empty()


def atiyah_completion(q: MatrixSymbol, G: GroupDescriptor, cutoffs, weight=1) -> PiecewiseSymbol:
    """Q + W with W = chi (1 + sum_j xi_{a_j}^2) chi, chi vanishing near the transversal cone.

    ``cutoffs`` is a CutoffMarker or a pair of them (chi on each side of W_A);
    ``weight`` scales W_A, giving distinct valid completions.
    """
    if isinstance(cutoffs, CutoffMarker):
        marker = cutoffs
    else:
        a, b = cutoffs
        marker = a * b
    if not _is_invariant(q, G):
        raise PreconditionError("q is not invariant under the group action")
    n = q.dim
    if G.is_finite or marker.region.is_empty():
        out = PiecewiseSymbol(((ConicRegion.full(n), q),))
    else:
        if not marker.region.intersect(transversal_cotangent(G, n)).is_empty():
            raise PreconditionError("completion marker must vanish on the transversal cotangent cone")
        z = (0,) * n
        terms = [(weight, z, z, 0)]
        for ax in G.axes:
            al = [0] * n
            al[ax - 1] = 2
            terms.append((weight, z, tuple(al), 0))
        wa = MatrixSymbol.from_terms(n, [(i, i, c, k, a, w) for i in range(q.rank) for (c, k, a, w) in terms],
                                     rank=q.rank)
        with_w = linear_combine([ONE, ONE], [q, wa]).with_tag(marker.region)
        rest = marker.region.complement()
        out = PiecewiseSymbol(((marker.region, with_w), (rest, q)), origin_piece=0)
    if not out.is_elliptic():
        raise PreconditionError("completion is not elliptic; widen the marker region")
    return out


def _is_invariant(q: MatrixSymbol, G: GroupDescriptor) -> bool:
    if G.is_finite:
        from .crossed import conjugate_symbol

        return all(conjugate_symbol(G, g, q).same_terms(q) for g in range(G.order))
    for row in q.entries:
        for e in row:
            for (k, _, _) in e:
                if any(k[ax - 1] for ax in G.axes):
                    return False
    return True
