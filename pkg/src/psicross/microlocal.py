"""Group actions on flat tori and the conic calculus of wavefront relations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import sympy

from .cones import ConicRegion
from .symbols import MatrixSymbol, SymbolError, _add_into, multiply_monomials


class RefinementNeeded(Exception):
    """The principal symbol's non-invertibility locus is not a union of rational subspaces."""


class MissingSupportError(ValueError):
    pass


def _identity(n):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _matmul(a, b):
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0])))
                 for i in range(len(a)))


def _transpose(a):
    return tuple(zip(*a)) if a else ()


@dataclass(frozen=True)
class GroupDescriptor:
    """Isometric action of a finite cyclic group or a torus of translations on T^n.

    ``kind`` is ``"finite"`` or ``"translation"``.  Finite groups act by
    ``x -> P x + 2*pi*v`` for the generator (``permutation`` P, ``translation`` v);
    translation groups rotate the listed ``axes`` (1-based).  Haar measure has mass 1.
    """

    kind: str
    dim: int
    order: int = 1
    translation: tuple = ()
    permutation: tuple | None = None
    axes: tuple = ()

    def __post_init__(self):
        if self.kind == "finite":
            if self.order < 1:
                raise ValueError("finite group order must be positive")
            if self.translation and len(self.translation) != self.dim:
                raise ValueError("translation vector has wrong length")
            if self.permutation is not None:
                p = self.permutation
                if sorted(tuple(sorted(r)) for r in p) != [tuple([0] * (self.dim - 1) + [1])] * self.dim:
                    raise ValueError("permutation must be a 0/1 permutation matrix")
                if self.generator_power(self.order) != (_identity(self.dim), (Fraction(0),) * self.dim):
                    raise ValueError("generator does not have the declared order")
        elif self.kind == "translation":
            if not self.axes or any(not 1 <= a <= self.dim for a in self.axes):
                raise ValueError("translation axes out of range")
        else:
            raise ValueError(f"unknown group kind {self.kind!r}")

    @classmethod
    def finite_cyclic(cls, dim, order, translation=None, permutation=None):
        t = tuple(Fraction(v) for v in translation) if translation is not None else (Fraction(0),) * dim
        p = tuple(tuple(r) for r in permutation) if permutation is not None else None
        return cls("finite", dim, order, t, p)

    @classmethod
    def circle(cls, dim, axis):
        return cls("translation", dim, axes=(axis,))

    @classmethod
    def torus(cls, dim, axes=None):
        return cls("translation", dim, axes=tuple(axes or range(1, dim + 1)))

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def group_dim(self) -> int:
        return 0 if self.is_finite else len(self.axes)

    @property
    def orbit_space_dim(self) -> int:
        """dim(M_0/G) for the principal orbit type."""
        return self.dim - self.group_dim

    def generator_power(self, j: int):
        """(matrix, shift) of the affine map x -> P^j x + 2 pi s for the j-th power."""
        m = _identity(self.dim)
        s = (Fraction(0),) * self.dim
        p = self.permutation or _identity(self.dim)
        v = self.translation or (Fraction(0),) * self.dim
        for _ in range(j % self.order):
            # (P, v) o (m, s) = (P m, P s + v)
            s = tuple(sum(p[i][k] * s[k] for k in range(self.dim)) + v[i] for i in range(self.dim))
            m = _matmul(p, m)
            s = tuple(x % 1 for x in s)
        return m, s

    def elements(self):
        if not self.is_finite:
            raise ValueError("continuous group has no finite element list")
        return list(range(self.order))

    def covector_push(self, g) -> tuple:
        """Matrix of g_* on covectors: (dg^{-1})^T, equal to dg for permutations."""
        if not self.is_finite:
            return _identity(self.dim)
        m, _ = self.generator_power(g)
        return m

    def to_json(self) -> dict:
        if self.is_finite:
            d = {"kind": "finite", "dim": self.dim, "order": self.order,
                 "translation": [str(v) for v in self.translation]}
            if self.permutation is not None:
                d["permutation"] = [list(r) for r in self.permutation]
            return d
        return {"kind": "translation", "dim": self.dim, "axes": list(self.axes)}

    @classmethod
    def from_json(cls, d: dict) -> "GroupDescriptor":
        if d["kind"] in ("finite", "FiniteCyclic"):
            return cls.finite_cyclic(d["dim"], d["order"], d.get("translation"), d.get("permutation"))
        if d["kind"] in ("translation", "CircleTranslation"):
            axes = d.get("axes") or [d["axis"]]
            return cls("translation", d["dim"], axes=tuple(axes))
        raise ValueError(f"unknown group kind {d['kind']!r}")


TRIVIAL = None  # placeholder for "no group": use GroupDescriptor.finite_cyclic(n, 1)


def trivial_group(dim: int) -> GroupDescriptor:
    return GroupDescriptor.finite_cyclic(dim, 1)


# --------------------------------------------------------------------------


def transversal_cotangent(G: GroupDescriptor, n: int | None = None) -> ConicRegion:
    """Covectors annihilating every fundamental vector field of the action."""
    n = G.dim if n is None else n
    if n != G.dim:
        raise ValueError("group descriptor does not match the dimension")
    if G.is_finite:
        return ConicRegion.full(n)
    ann = []
    for a in G.axes:
        v = [0] * n
        v[a - 1] = 1
        ann.append(v)
    return ConicRegion.subspace(n, ann)


@dataclass(frozen=True)
class TorusMap:
    """Smooth map between tori with constant differential ``jacobian`` (target x source)."""

    jacobian: tuple
    source_dim: int

    @classmethod
    def group_element(cls, G: GroupDescriptor, g) -> "TorusMap":
        return cls(G.covector_push(g), G.dim)

    @classmethod
    def point_inclusion(cls, n: int) -> "TorusMap":
        return cls(tuple(() for _ in range(n)), 0)

    @classmethod
    def projection(cls, n: int, keep: Sequence[int]) -> "TorusMap":
        return cls(tuple(tuple(int(j == k) for j in range(n)) for k in keep), n)

    @property
    def target_dim(self) -> int:
        return len(self.jacobian)

    def compose(self, other: "TorusMap") -> "TorusMap":
        """self o other."""
        if other.target_dim != self.source_dim:
            raise ValueError("maps do not compose")
        if other.source_dim == 0:
            return TorusMap(tuple(() for _ in range(self.target_dim)), 0)
        return TorusMap(_matmul(self.jacobian, other.jacobian), other.source_dim)


def zero_pullback_branch(f: TorusMap) -> ConicRegion:
    """``{eta != 0 : f^* eta = 0}``, the branch contributed by the zero section."""
    if f.source_dim == 0:
        return ConicRegion.full(f.target_dim)
    return ConicRegion.subspace(f.target_dim, [list(r) for r in _transpose(f.jacobian)])


def pushforward_region(f: TorusMap, S: ConicRegion) -> ConicRegion:
    """``{eta : f^* eta in S or f^* eta = 0}``, with f^* eta = J^T eta."""
    if S.dim != f.source_dim:
        raise ValueError("region lives on the wrong torus")
    branch = zero_pullback_branch(f)
    if f.source_dim == 0:
        return branch
    main = S.preimage(_transpose(f.jacobian))
    return main.union(branch)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphPiece:
    """``{(push xi, xi) : xi in cone}``; ``label`` names the group element(s)."""

    push: tuple
    cone: ConicRegion
    label: object = "e"


@dataclass(frozen=True)
class WavefrontRelation:
    dim: int
    pieces: tuple = ()
    left_zero: ConicRegion | None = None
    right_zero: ConicRegion | None = None

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(p for p in self.pieces if not p.cone.is_empty()))
        for name in ("left_zero", "right_zero"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, ConicRegion.empty(self.dim))

    @classmethod
    def diagonal(cls, cone: ConicRegion) -> "WavefrontRelation":
        return cls(cone.dim, (GraphPiece(_identity(cone.dim), cone),))

    @classmethod
    def empty(cls, dim: int) -> "WavefrontRelation":
        return cls(dim)

    def is_empty(self) -> bool:
        return not self.pieces and self.left_zero.is_empty() and self.right_zero.is_empty()

    def domain(self) -> ConicRegion:
        out = ConicRegion.empty(self.dim)
        for p in self.pieces:
            out = out.union(p.cone)
        return out

    def contains(self, other: "WavefrontRelation") -> bool:
        """Containment, grouping pieces by their covector map."""
        if not self.left_zero.contains(other.left_zero) or not self.right_zero.contains(other.right_zero):
            return False
        for p in other.pieces:
            cover = ConicRegion.empty(self.dim)
            for q in self.pieces:
                if q.push == p.push:
                    cover = cover.union(q.cone)
            if not cover.contains(p.cone):
                return False
        return True

    def to_json(self) -> dict:
        return {"dim": self.dim,
                "pieces": [{"push": [list(r) for r in p.push], "cone": p.cone.to_json(), "label": str(p.label)}
                           for p in self.pieces],
                "left_zero": self.left_zero.to_json(), "right_zero": self.right_zero.to_json()}


def compose_relations(R1: WavefrontRelation, R2: WavefrontRelation):
    """Set composition ``R1 o R2`` plus the zero-section clash flag of the composition theorem."""
    n = R1.dim
    pieces = []
    left = R1.left_zero
    right = R2.right_zero
    for p1 in R1.pieces:
        for p2 in R2.pieces:
            cone = p2.cone.intersect(p1.cone.preimage(p2.push))
            pieces.append(GraphPiece(_matmul(p1.push, p2.push), cone, (p1.label, p2.label)))
        # (push1 zeta, 0) from zeta in R2's left-zero component
        left = left.union(p1.cone.intersect(R2.left_zero).preimage(_inverse_perm(p1.push)))
    for p2 in R2.pieces:
        right = right.union(p2.cone.intersect(R1.right_zero.preimage(p2.push)))
    clash = not R1.right_zero.intersect(R2.left_zero).is_empty()
    return WavefrontRelation(n, tuple(pieces), left, right), clash


def _inverse_perm(m):
    # covector maps used here are permutation matrices (orthogonal)
    return _transpose(m)


# --------------------------------------------------------------------------
# characteristic sets


def _scalar_principal_entry(p: MatrixSymbol) -> dict:
    """x-independent principal term as ``{(alpha, w): Fraction}`` (real part required)."""
    pr = p.principal()
    if p.rank == 1:
        e = pr.entries[0][0]
        return _entry_xi_part(e)
    # determinant via Leibniz over the xi-ring
    ents = [[_entry_xi_part(e) for e in row] for row in pr.entries]
    det: dict = {}
    for perm in itertools.permutations(range(p.rank)):
        sign = _perm_sign(perm)
        term = {((0,) * p.dim, 0): sign}
        for i, j in enumerate(perm):
            term = _ring_mul(term, ents[i][j])
            if not term:
                break
        for k, c in term.items():
            _add_into(det, k, c)
    return det


def _perm_sign(perm):
    s = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                s = -s
    return s


def _entry_xi_part(e: dict) -> dict:
    out: dict = {}
    for (k, a, w), c in e.items():
        if any(k):
            raise RefinementNeeded("x-dependent principal symbol: characteristic set varies with x")
        _add_into(out, (a, w), c)
    return out


def _ring_mul(f: dict, g: dict) -> dict:
    out: dict = {}
    for m1, c1 in f.items():
        for m2, c2 in g.items():
            for m, k in multiply_monomials(m1, m2):
                _add_into(out, m, c1 * c2 * k)
    return out


def _zero_set_polynomial(poly: sympy.Poly, n: int) -> ConicRegion:
    """Real zero set (minus the origin) of a homogeneous polynomial, as rational subspaces."""
    if poly.is_zero:
        return ConicRegion.full(n)
    gens = poly.gens
    _, factors = sympy.factor_list(poly.as_expr(), *gens)
    region = ConicRegion.empty(n)
    for f, _mult in factors:
        fp = sympy.Poly(f, *gens)
        region = region.union(_zero_set_irreducible(fp, n))
    return region


def _zero_set_irreducible(f: sympy.Poly, n: int) -> ConicRegion:
    deg = f.total_degree()
    if deg == 0:
        return ConicRegion.empty(n)
    if deg == 1:
        normal = [Fraction(str(f.coeff_monomial(g))) for g in f.gens]
        return ConicRegion.subspace(n, [normal])
    terms = f.terms()
    # all monomials even powers with one common sign: zero iff every monomial vanishes
    if all(all(e % 2 == 0 for e in mono) for mono, _ in terms) and (
            all(c > 0 for _, c in terms) or all(c < 0 for _, c in terms)):
        return _monomials_vanish([mono for mono, _ in terms], n)
    if deg == 2:
        Q = sympy.Matrix(n, n, lambda i, j: 0)
        for mono, c in terms:
            idx = [i for i, e in enumerate(mono) for _ in range(e)]
            i, j = idx
            if i == j:
                Q[i, i] += c
            else:
                Q[i, j] += sympy.Rational(c, 2)
                Q[j, i] += sympy.Rational(c, 2)
        if Q.is_positive_semidefinite or (-Q).is_positive_semidefinite:
            ker = Q.nullspace()
            if not ker:
                return ConicRegion.empty(n)
            rowspace = Q.rowspace()
            ann = [[Fraction(str(v)) for v in r] for r in rowspace]
            return ConicRegion.subspace(n, ann) if ann else ConicRegion.full(n)
    raise RefinementNeeded(f"zero set of {f.as_expr()} is not a finite union of rational subspaces")


def _monomials_vanish(monos, n) -> ConicRegion:
    """Union of coordinate subspaces on which every monomial vanishes."""
    supports = [frozenset(i for i, e in enumerate(m) if e) for m in monos]
    if any(not s for s in supports):
        return ConicRegion.empty(n)
    minimal = []
    for r in range(1, n + 1):
        for S in itertools.combinations(range(n), r):
            S = frozenset(S)
            if all(S & s for s in supports) and not any(m <= S for m in minimal):
                minimal.append(S)
    region = ConicRegion.empty(n)
    for S in minimal:
        region = region.union(ConicRegion.subspace(n, [[int(i == j) for j in range(n)] for i in S]))
    return region


def characteristic_set(p: MatrixSymbol) -> ConicRegion:
    """Cone where the principal symbol fails to be invertible."""
    f = _scalar_principal_entry(p)
    n = p.dim
    if not f:
        return ConicRegion.full(n)
    even = {m: c for m, c in f.items() if m[1] % 2 == 0}
    odd = {m: c for m, c in f.items() if m[1] % 2 != 0}
    if even and odd:
        raise RefinementNeeded("principal symbol mixes even and odd powers of |xi|")
    part = even or odd
    # multiply through by |xi|^(2J) (or |xi|^(2J+1)) to obtain a polynomial with the same zeros
    shift = max(w for (_, w) in part)
    if shift % 2:
        shift += 1 if shift > 0 else -1
    xs = sympy.symbols(f"xi1:{n + 1}", real=True)
    r2 = sum(x**2 for x in xs)
    expr = 0
    for (a, w), c in part.items():
        if c.im != 0 and c.re != 0:
            raise RefinementNeeded("complex principal coefficients with mixed phase")
        cv = sympy.Rational(c.re.numerator, c.re.denominator) if c.im == 0 else \
            sympy.Rational(c.im.numerator, c.im.denominator)
        mono = 1
        for x, e in zip(xs, a):
            mono *= x**e
        expr += cv * mono * r2 ** ((shift - w) // 2)
    if any(c.im != 0 for c in part.values()) and any(c.re != 0 for c in part.values()):
        raise RefinementNeeded("principal symbol has independent real and imaginary parts")
    poly = sympy.Poly(sympy.expand(expr), *xs)
    return _zero_set_polynomial(poly, n)


@dataclass
class Classification:
    elliptic: bool
    transversally_elliptic: bool
    transversally_smoothing: bool
    char: ConicRegion

    def to_json(self) -> dict:
        return {"elliptic": self.elliptic, "transversally_elliptic": self.transversally_elliptic,
                "transversally_smoothing": self.transversally_smoothing, "char": self.char.to_json()}


def classify_symbol(p, G: GroupDescriptor) -> Classification:
    """Ellipticity, transversal ellipticity and transversal smoothing of a symbol or family."""
    members = list(p.members.values()) if hasattr(p, "members") else [p]
    if not members:
        raise SymbolError("empty family")
    tcone = transversal_cotangent(G, members[0].dim)
    char = ConicRegion.empty(members[0].dim)
    smoothing = True
    for m in members:
        char = char.union(characteristic_set(m))
        tag = m.support_tag if m.support_tag is not None else ConicRegion.full(m.dim)
        smoothing = smoothing and tag.intersect(tcone).is_empty()
    return Classification(char.is_empty(), char.intersect(tcone).is_empty(), smoothing, char)


# --------------------------------------------------------------------------


def family_wavefront(P) -> WavefrontRelation:
    """Bound on WF' of a crossed family: pieces (g_* xi, xi) over supported g, xi in Ess(P(g)) and T*_G.

    ``P`` is a crossed-product family (see ``psicross.crossed.SymbolFamily``).
    Both placements of the transversal intersection are computed and intersected.
    """
    G = P.group
    n = G.dim
    tcone = transversal_cotangent(G, n)
    pieces = []
    support = P.group_support()
    if support is None:
        raise MissingSupportError("family carries no group-support metadata")
    for g in support:
        sym = P.member_at(g)
        if sym.support_tag is None:
            raise MissingSupportError(f"member at {g!r} has no support tag")
        push = G.covector_push(g) if G.is_finite else _identity(n)
        before = sym.support_tag.intersect(tcone)
        after = before.intersect(tcone.preimage(push))
        pieces.append(GraphPiece(push, before.intersect(after), g))
    return WavefrontRelation(n, tuple(pieces))
