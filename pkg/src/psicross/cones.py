"""Finite unions of rational polyhedral cones in R^n minus the origin.

Each cone is a conjunction of homogeneous linear constraints ``a.xi >= 0``,
``a.xi > 0`` or ``a.xi == 0``.  Strict constraints make the family closed under
complement, so union, intersection, difference, emptiness and containment are
all decided exactly by Fourier-Motzkin elimination over the rationals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

GE, GT, EQ = "ge", "gt", "eq"


def _primitive(vec: Sequence[Fraction]) -> tuple:
    vec = [Fraction(v) for v in vec]
    den = 1
    for v in vec:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g == 0:
        return tuple(ints)
    return tuple(v // g for v in ints)


@dataclass(frozen=True)
class Constraint:
    normal: tuple
    kind: str

    @classmethod
    def make(cls, normal, kind=GE):
        n = _primitive(normal)
        if kind == EQ:
            # canonical sign: first nonzero coefficient positive
            for v in n:
                if v:
                    if v < 0:
                        n = tuple(-x for x in n)
                    break
        return cls(n, kind)

    def holds(self, xi) -> bool:
        s = sum(Fraction(a) * Fraction(x) for a, x in zip(self.normal, xi))
        return s >= 0 if self.kind == GE else s > 0 if self.kind == GT else s == 0


def _eliminate(cons: list, var: int, keep_eq=True) -> list | None:
    """Project out variable ``var``; returns None when an obvious contradiction appears."""
    eqs = [c for c in cons if c.kind == EQ and c.normal[var]]
    if eqs:
        e = eqs[0]
        piv = Fraction(e.normal[var])
        out = []
        for c in cons:
            if c is e:
                continue
            if c.normal[var]:
                f = Fraction(c.normal[var]) / piv
                c = Constraint.make([a - f * b for a, b in zip(c.normal, e.normal)], c.kind)
            out.append(c)
        return out
    pos, neg, rest = [], [], []
    for c in cons:
        v = c.normal[var]
        (pos if v > 0 else neg if v < 0 else rest).append(c)
    out = list(rest)
    for p in pos:
        for q in neg:
            fp, fq = Fraction(-q.normal[var]), Fraction(p.normal[var])
            vec = [fp * a + fq * b for a, b in zip(p.normal, q.normal)]
            kind = GT if GT in (p.kind, q.kind) else GE
            out.append(Constraint.make(vec, kind))
    return out


def _simplify(cons: Iterable[Constraint]) -> list | None:
    """Drop trivial constraints and duplicates; None if a trivially false one is present."""
    seen = {}
    for c in cons:
        if not any(c.normal):
            if c.kind == GT:
                return None
            continue
        key = c.normal
        prev = seen.get((key, c.kind))
        if prev is None:
            seen[(key, c.kind)] = c
    # a >= 0 together with a > 0 keeps only the strict one
    out = []
    for (n, k), c in seen.items():
        if k == GE and (n, GT) in seen:
            continue
        if k == GE and (n, EQ) in seen:
            continue
        out.append(c)
    # a.x > 0 and -a.x >= 0 or a.x == 0 with a.x > 0 contradict
    normals = {(c.normal, c.kind) for c in out}
    for c in out:
        neg = tuple(-v for v in c.normal)
        if c.kind == GT and ((neg, GE) in normals or (neg, GT) in normals):
            return None
        if c.kind == GT and (Constraint.make(c.normal, EQ).normal, EQ) in normals:
            return None
    return out


def feasible_strict(dim: int, cons: list) -> bool:
    """Decide whether a homogeneous system has a solution (strict constraints honored)."""
    cur = _simplify(cons)
    if cur is None:
        return False
    for var in range(dim):
        cur = _eliminate(cur, var)
        if cur is None:
            return False
        cur = _simplify(cur)
        if cur is None:
            return False
    return True


def project(dim: int, cons: list, keep: Sequence[int]) -> list | None:
    """Constraints on the ``keep`` coordinates of the projected cone (None if empty)."""
    cur = _simplify(cons)
    if cur is None:
        return None
    for var in range(dim):
        if var in keep:
            continue
        cur = _eliminate(cur, var)
        if cur is None:
            return None
        cur = _simplify(cur)
        if cur is None:
            return None
    return [Constraint.make([c.normal[i] for i in keep], c.kind) for c in cur]


class ConicRegion:
    """Union of polyhedral cones in R^n \\ {0}; invariant under positive scaling."""

    __slots__ = ("dim", "cones")

    def __init__(self, dim: int, cones: Iterable[Iterable[Constraint]] = ()):
        self.dim = dim
        clean = []
        for cone in cones:
            cone = _simplify(cone)
            if cone is None:
                continue
            if not _cone_nonempty(dim, cone):
                continue
            fs = frozenset(cone)
            if fs not in clean:
                clean.append(fs)
        self.cones = tuple(clean)

    # constructors ---------------------------------------------------------
    @classmethod
    def full(cls, dim: int) -> "ConicRegion":
        return cls(dim, [[]])

    @classmethod
    def empty(cls, dim: int) -> "ConicRegion":
        return cls(dim, [])

    @classmethod
    def from_constraints(cls, dim: int, ge=(), gt=(), eq=()) -> "ConicRegion":
        cons = [Constraint.make(a, GE) for a in ge] + [Constraint.make(a, GT) for a in gt] + [
            Constraint.make(a, EQ) for a in eq]
        return cls(dim, [cons])

    @classmethod
    def subspace(cls, dim: int, annihilators: Sequence[Sequence[int]]) -> "ConicRegion":
        """``{xi != 0 : a.xi = 0 for every a}``."""
        return cls.from_constraints(dim, eq=annihilators)

    @classmethod
    def from_rays(cls, dim: int, rays: Sequence[Sequence[int]]) -> "ConicRegion":
        """Conic hull of the given generators, minus the origin."""
        m = len(rays)
        if m == 0:
            return cls.empty(dim)
        # variables (xi_0..xi_{n-1}, lambda_0..lambda_{m-1})
        cons = []
        for i in range(dim):
            vec = [0] * (dim + m)
            vec[i] = 1
            for j, r in enumerate(rays):
                vec[dim + j] = -r[i]
            cons.append(Constraint.make(vec, EQ))
        for j in range(m):
            vec = [0] * (dim + m)
            vec[dim + j] = 1
            cons.append(Constraint.make(vec, GE))
        proj = project(dim + m, cons, list(range(dim)))
        return cls(dim, [proj] if proj is not None else [])

    # predicates -------------------------------------------------------------
    def is_empty(self) -> bool:
        return not self.cones

    def contains_point(self, xi) -> bool:
        if not any(xi):
            return False
        return any(all(c.holds(xi) for c in cone) for cone in self.cones)

    def contains(self, other: "ConicRegion") -> bool:
        return other.difference(self).is_empty()

    def same_set(self, other: "ConicRegion") -> bool:
        return self.contains(other) and other.contains(self)

    def is_full(self) -> bool:
        return ConicRegion.full(self.dim).difference(self).is_empty()

    # algebra ------------------------------------------------------------------
    def union(self, other: "ConicRegion") -> "ConicRegion":
        self._check(other)
        return ConicRegion(self.dim, list(self.cones) + list(other.cones))

    def intersect(self, other: "ConicRegion") -> "ConicRegion":
        self._check(other)
        return ConicRegion(self.dim, [list(a) + list(b) for a in self.cones for b in other.cones])

    def complement(self) -> "ConicRegion":
        out = ConicRegion.full(self.dim)
        for cone in self.cones:
            pieces = []
            for c in cone:
                neg = tuple(-v for v in c.normal)
                if c.kind == GE:
                    pieces.append([Constraint.make(neg, GT)])
                elif c.kind == GT:
                    pieces.append([Constraint.make(neg, GE)])
                else:
                    pieces.append([Constraint.make(c.normal, GT)])
                    pieces.append([Constraint.make(neg, GT)])
            out = out.intersect(ConicRegion(self.dim, pieces))
        return out

    def difference(self, other: "ConicRegion") -> "ConicRegion":
        return self.intersect(other.complement())

    def preimage(self, matrix: Sequence[Sequence]) -> "ConicRegion":
        """``{eta : M eta in self}`` for a (dim x k) matrix M acting on eta in R^k."""
        k = len(matrix[0]) if matrix else 0
        cones = []
        for cone in self.cones:
            cones.append([Constraint.make([sum(Fraction(c.normal[i]) * matrix[i][j] for i in range(self.dim))
                                           for j in range(k)], c.kind) for c in cone])
        return ConicRegion(k, cones)

    def image(self, matrix: Sequence[Sequence]) -> "ConicRegion":
        """``{L xi : xi in self}`` for a (k x dim) matrix L, by exact projection."""
        k = len(matrix)
        cones = []
        for cone in self.cones:
            # variables (eta_0..eta_{k-1}, xi_0..xi_{dim-1})
            cons = []
            for i in range(k):
                vec = [0] * (k + self.dim)
                vec[i] = 1
                for j in range(self.dim):
                    vec[k + j] = -Fraction(matrix[i][j])
                cons.append(Constraint.make(vec, EQ))
            for c in cone:
                cons.append(Constraint.make([0] * k + list(c.normal), c.kind))
            # xi != 0 must survive: split on a nonzero coordinate of xi
            for j, sgn in itertools.product(range(self.dim), (1, -1)):
                vec = [0] * (k + self.dim)
                vec[k + j] = sgn
                proj = project(k + self.dim, cons + [Constraint.make(vec, GT)], list(range(k)))
                if proj is not None:
                    cones.append(proj)
        return ConicRegion(k, cones)

    def _check(self, other):
        if other.dim != self.dim:
            raise ValueError(f"cone dimension mismatch: {self.dim} vs {other.dim}")

    # serialization ------------------------------------------------------------
    def to_json(self) -> list:
        out = []
        for cone in self.cones:
            d = {"normals": sorted(list(c.normal) for c in cone if c.kind == GE),
                 "rays": []}
            strict = sorted(list(c.normal) for c in cone if c.kind == GT)
            eq = sorted(list(c.normal) for c in cone if c.kind == EQ)
            if strict:
                d["strict"] = strict
            if eq:
                d["equalities"] = eq
            out.append(d)
        return sorted(out, key=lambda d: repr(sorted(d.items())))

    @classmethod
    def from_json(cls, dim: int, data: list) -> "ConicRegion":
        region = cls.empty(dim)
        for d in data:
            cone = cls.from_constraints(dim, ge=d.get("normals", []), gt=d.get("strict", []),
                                        eq=d.get("equalities", []))
            if d.get("rays"):
                cone = cone.intersect(cls.from_rays(dim, d["rays"]))
            region = region.union(cone)
        return region

    def __repr__(self):
        return f"ConicRegion(dim={self.dim}, cones={self.to_json()})"


def _cone_nonempty(dim: int, cone: list) -> bool:
    if any(c.kind == GT for c in cone):
        return feasible_strict(dim, cone)
    for j, sgn in itertools.product(range(dim), (1, -1)):
        vec = [0] * dim
        vec[j] = sgn
        if feasible_strict(dim, list(cone) + [Constraint.make(vec, GT)]):
            return True
    return False


def abs_ratio_cone(dim: int, big: int, small: int, factor: int = 1, strict: bool = False) -> ConicRegion:
    """``{ |xi_big| >= factor * |xi_small| }`` (``>`` when ``strict``), 0-based axes."""
    kind = GT if strict else GE
    cones = []
    for sb, ss in itertools.product((1, -1), (1, -1)):
        v = [0] * dim
        v[big] = sb
        v[small] = -factor * ss
        sign_b = [0] * dim
        sign_b[big] = sb
        sign_s = [0] * dim
        sign_s[small] = ss
        cones.append([Constraint.make(v, kind), Constraint.make(sign_b, GE), Constraint.make(sign_s, GE)])
    return ConicRegion(dim, cones)
