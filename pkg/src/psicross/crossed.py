"""Crossed-product algebras over torus actions and their action on Fourier modes.

Conventions: torus volume and Haar measure are probability measures, so the
unit of the algebra of a cyclic group of order q is ``q * delta_e``.  A group
element g acts on functions by ``(g.s)(x) = s(g^{-1} x)``; a family ``P`` acts by
``Ps = int P(g) (g.s) dmu(g)``.  Circle (torus-translation) data are stored by
their Fourier modes in the group variable: ``g -> sum_m P_m exp(i m.g)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .cones import ConicRegion
from .exact import ONE, ZERO, ExactScalar, TrigPolynomial, root_of_unity_phase
from .microlocal import GroupDescriptor
from .symbols import (
    MatrixSymbol,
    SingularEvaluationError,
    SymbolError,
    _add_into,
    apply_to_mode,
    compose,
    mode_window,
    multiplication,
)


class GroupMismatch(SymbolError):
    pass


class TraceCutoffError(ValueError):
    """Mode cutoff too small for the requested trace tolerance."""


def _matvec(m, k):
    return tuple(sum(m[i][j] * k[j] for j in range(len(k))) for i in range(len(m)))


# --------------------------------------------------------------------------
# group acting on functions and symbols


def act_on_trig(G: GroupDescriptor, g, f: TrigPolynomial) -> TrigPolynomial:
    """``f(g^{-1} x)`` for g in a finite cyclic group (element index g)."""
    m, s = G.generator_power(g)
    terms = {}
    for k, c in f.terms.items():
        nk = _matvec(m, k)  # permutation matrices are orthogonal
        phase = root_of_unity_phase(-sum(Fraction(a) * b for a, b in zip(nk, s)))
        terms[nk] = terms.get(nk, ZERO) + c * phase
    return TrigPolynomial(f.dim, terms)


def conjugate_symbol(G: GroupDescriptor, g, a: MatrixSymbol) -> MatrixSymbol:
    """Symbol of ``T_g Op(a) T_g^{-1}``: x-modes transported, xi permuted as g acts."""
    m, s = G.generator_power(g)
    perm = [row.index(1) for row in m]  # (m k)_i = k_{perm[i]}

    def move(entry):
        out = {}
        for (k, al, w), c in entry.items():
            nk = _matvec(m, k)
            phase = root_of_unity_phase(-sum(Fraction(x) * y for x, y in zip(nk, s)))
            # xi -> m^{-1} xi: the monomial xi^alpha becomes (m^T xi)^alpha
            nal = [0] * len(al)
            for i, p in enumerate(perm):
                nal[i] = al[p]
            _add_into(out, (nk, tuple(nal), w), c * phase)
        return out

    return a.map_entries(move)


def translate_symbol_modes(a: MatrixSymbol, axes: Sequence[int], shift: Sequence[int]) -> MatrixSymbol:
    """Keep only x-modes l with ``l[axes] == shift`` (the Fourier slice used by circle products)."""
    def pick(entry):
        return {key: c for key, c in entry.items() if tuple(key[0][ax - 1] for ax in axes) == tuple(shift)}

    return a.map_entries(pick)


# --------------------------------------------------------------------------
# mode-space operators


class ModeOperator:
    """Linear operator on finitely supported vectors ``{(mode, component): value}``.

    Built from a column rule ``column(k, comp)``; compositions are evaluated
    lazily, so traces of words in operators are exact whenever every column is.
    """

    def __init__(self, dim: int, rank: int, column: Callable, label: str = ""):
        self.dim, self.rank, self.label = dim, rank, label
        self._column = column
        self._cache: dict = {}

    def column(self, k, comp=0) -> dict:
        key = (tuple(k), comp)
        out = self._cache.get(key)
        if out is None:
            out = self._column(tuple(k), comp)
            self._cache[key] = out
        return out

    def apply(self, vec: Mapping) -> dict:
        out: dict = {}
        for (k, comp), v in vec.items():
            for key, c in self.column(k, comp).items():
                _add_into(out, key, c * v)
        return out

    def __matmul__(self, other: "ModeOperator") -> "ModeOperator":
        return ModeOperator(self.dim, self.rank, lambda k, c: self.apply(other.column(k, c)),
                            f"({self.label})({other.label})")

    def __add__(self, other):
        def col(k, c):
            out = dict(self.column(k, c))
            for key, v in other.column(k, c).items():
                _add_into(out, key, v)
            return out

        return ModeOperator(self.dim, self.rank, col, f"{self.label}+{other.label}")

    def __mul__(self, s):
        s = ExactScalar.coerce(s) if not hasattr(s, "_mpf_") else s
        return ModeOperator(self.dim, self.rank, lambda k, c: {key: v * s for key, v in self.column(k, c).items()},
                            f"{s}*{self.label}")

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-ONE)

    def __sub__(self, other):
        return self + (-other)

    def power(self, n: int) -> "ModeOperator":
        out = ModeOperator.identity(self.dim, self.rank)
        for _ in range(n):
            out = self @ out
        return out

    def diagonal(self, k, comp=0):
        return self.column(k, comp).get((tuple(k), comp), ZERO)

    def trace_window(self, radius: int):
        total = ZERO
        for k in mode_window(self.dim, radius):
            for c in range(self.rank):
                total = total + self.diagonal(k, c)
        return total

    def matrix(self, modes: Sequence) -> dict:
        out = {}
        for k in modes:
            for c in range(self.rank):
                for key, v in self.column(k, c).items():
                    out[(key, (tuple(k), c))] = v
        return out

    # constructors ---------------------------------------------------------
    @classmethod
    def identity(cls, dim, rank=1):
        return cls(dim, rank, lambda k, c: {(k, c): ONE}, "1")

    @classmethod
    def zero(cls, dim, rank=1):
        return cls(dim, rank, lambda k, c: {}, "0")

    @classmethod
    def from_symbol(cls, a: MatrixSymbol, overrides: Mapping | None = None) -> "ModeOperator":
        """Op(a); ``overrides`` supplies columns at singular modes, keyed by (mode, component)."""
        overrides = dict(overrides or {})

        def col(k, c):
            if (k, c) in overrides:
                return dict(overrides[(k, c)])
            return apply_to_mode(a, k, c)

        return cls(a.dim, a.rank, col, "Op")

    @classmethod
    def finite_rank(cls, dim: int, entries: Mapping, rank: int = 1) -> "ModeOperator":
        """Finite matrix ``{((mode_out, row), (mode_in, col)): value}``, zero elsewhere."""
        cols: dict = {}
        for (out, inp), v in entries.items():
            out = (tuple(out[0]), out[1])
            inp = (tuple(inp[0]), inp[1])
            cols.setdefault(inp, {})
            _add_into(cols[inp], out, ExactScalar.coerce(v))
        return cls(dim, rank, lambda k, c: dict(cols.get((k, c), {})), "K")

    @classmethod
    def diagonal_rule(cls, dim: int, rule: Callable, rank: int = 1) -> "ModeOperator":
        def col(k, c):
            v = rule(k, c)
            return {(k, c): v} if v else {}

        return cls(dim, rank, col, "diag")


def block_operator(blocks: Sequence[Sequence[ModeOperator | None]]) -> ModeOperator:
    """Operator on a direct sum: component index ``b * r + c`` for block b."""
    nb = len(blocks)
    ref = next(op for row in blocks for op in row if op is not None)
    r = ref.rank

    def col(k, comp):
        bj, c = divmod(comp, r)
        out: dict = {}
        for bi in range(nb):
            op = blocks[bi][bj]
            if op is None:
                continue
            for (mode, cc), v in op.column(k, c).items():
                _add_into(out, (mode, bi * r + cc), v)
        return out

    return ModeOperator(ref.dim, nb * r, col, "block")


# --------------------------------------------------------------------------
# crossed-product function algebra


@dataclass(frozen=True)
class AlgebraElement:
    """Band-limited element of C(M x| G): finite table g -> TrigPolynomial.

    For finite groups the keys are element indices; for translation groups the
    keys are group Fourier modes (tuples, one entry per acted axis).
    """

    group: GroupDescriptor
    data: Mapping

    def __post_init__(self):
        clean = {}
        for g, f in self.data.items():
            if not isinstance(f, TrigPolynomial):
                raise TypeError("algebra element values must be TrigPolynomials")
            if f.dim != self.group.dim:
                raise GroupMismatch("function dimension disagrees with group")
            if self.group.is_finite:
                g = int(g) % self.group.order
            else:
                g = tuple(g) if isinstance(g, (tuple, list)) else (int(g),)
                if len(g) != len(self.group.axes):
                    raise GroupMismatch("group mode has wrong length")
            if f:
                clean[g] = clean.get(g, TrigPolynomial(f.dim)) + f
        object.__setattr__(self, "data", {g: f for g, f in clean.items() if f})

    def __eq__(self, other):
        return isinstance(other, AlgebraElement) and self.group == other.group and self.data == other.data

    def __hash__(self):
        return hash(self.group)

    def __add__(self, other):
        _same_group(self.group, other.group)
        d = dict(self.data)
        for g, f in other.data.items():
            d[g] = d[g] + f if g in d else f
        return AlgebraElement(self.group, d)

    def __mul__(self, s):
        return AlgebraElement(self.group, {g: f * s for g, f in self.data.items()})

    __rmul__ = __mul__

    @classmethod
    def unit(cls, G: GroupDescriptor) -> "AlgebraElement":
        if not G.is_finite:
            raise ValueError("translation groups have no band-limited unit")
        return cls(G, {0: TrigPolynomial.constant(G.dim, G.order)})

    @classmethod
    def from_group_function(cls, G: GroupDescriptor, fhat: Mapping) -> "AlgebraElement":
        """pi^* f for a band-limited f on G given by its Fourier coefficients (translation groups)
        or its values (finite groups)."""
        return cls(G, {g: TrigPolynomial.constant(G.dim, c) for g, c in fhat.items()})


def _same_group(a: GroupDescriptor, b: GroupDescriptor):
    if a != b:
        raise GroupMismatch("elements live over different groups")


def convolve(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """``(a*b)(x,g) = int a(x,h) b(h^{-1}x, h^{-1}g) dmu(h)``."""
    _same_group(a.group, b.group)
    G = a.group
    out: dict = {}
    if G.is_finite:
        q = G.order
        for h, fa in a.data.items():
            for g2, fb in b.data.items():
                g = (h + g2) % q
                term = fa * act_on_trig(G, h, fb) * ExactScalar(Fraction(1, q))
                out[g] = out[g] + term if g in out else term
        return AlgebraElement(G, out)
    axes = G.axes
    for m, fa in a.data.items():
        for m2, fb in b.data.items():
            # x-modes k of b_{m2} with k[axes] == m - m2 survive the h-integral
            want = tuple(x - y for x, y in zip(m, m2))
            sl = TrigPolynomial(G.dim, {k: c for k, c in fb.terms.items()
                                        if tuple(k[ax - 1] for ax in axes) == want})
            if sl:
                term = fa * sl
                out[m2] = out[m2] + term if m2 in out else term
    return AlgebraElement(G, out)


def involution(a: AlgebraElement) -> AlgebraElement:
    """``phi*(x,g) = conj phi(g^{-1}x, g^{-1})``."""
    G = a.group
    out: dict = {}
    if G.is_finite:
        q = G.order
        for g, f in a.data.items():
            ginv = (-g) % q
            # phi*(., ginv) = conj (g^{-1} . phi(., g)) evaluated: phi*(x, ginv) = conj phi(g x, g)
            moved = act_on_trig(G, ginv, f).conjugate()
            out[ginv] = out[ginv] + moved if ginv in out else moved
        return AlgebraElement(G, out)
    for m, f in a.data.items():
        for k, c in f.terms.items():
            nm = tuple(mm + k[ax - 1] for mm, ax in zip(m, G.axes))
            t = TrigPolynomial(G.dim, {tuple(-x for x in k): c.conjugate()})
            out[nm] = out[nm] + t if nm in out else t
    return AlgebraElement(G, out)


def representation(a: AlgebraElement, rank: int = 1) -> ModeOperator:
    """rho(phi) on sections of the trivial rank-``rank`` bundle."""
    G = a.group

    if G.is_finite:
        q = G.order

        def col(k, c):
            out: dict = {}
            for g, f in a.data.items():
                moved = act_on_trig(G, g, TrigPolynomial.mode(k))
                for km, cm in moved.terms.items():
                    for l, cf in f.terms.items():
                        _add_into(out, (tuple(x + y for x, y in zip(km, l)), c), cf * cm * Fraction(1, q))
            return out
    else:
        def col(k, c):
            m = tuple(k[ax - 1] for ax in G.axes)
            f = a.data.get(m)
            if f is None:
                return {}
            return {(tuple(x + y for x, y in zip(k, l)), c): cf for l, cf in f.terms.items()}

    return ModeOperator(G.dim, rank, col, "rho")


# --------------------------------------------------------------------------
# families of symbols


@dataclass(frozen=True)
class SymbolFamily:
    """Element of Psi x| G: table of member symbols plus finite-rank (smoothing) parts.

    ``members`` and ``smoothing`` are keyed like AlgebraElement data.
    ``smoothing`` values are finite matrices in ModeOperator.finite_rank format.
    """

    group: GroupDescriptor
    members: Mapping
    smoothing: Mapping = field(default_factory=dict)

    def __post_init__(self):
        ms = list(self.members.values())
        if ms:
            d0 = (ms[0].dim, ms[0].rank)
            for m in ms:
                if (m.dim, m.rank) != d0:
                    raise SymbolError("family members must share dim and rank")
            if ms[0].dim != self.group.dim:
                raise GroupMismatch("member dimension disagrees with group")
        norm = {}
        for g, s in self.members.items():
            g = int(g) % self.group.order if self.group.is_finite else (tuple(g) if isinstance(g, (tuple, list)) else (g,))
            norm[g] = s
        object.__setattr__(self, "members", norm)

    @property
    def dim(self):
        return self.group.dim

    @property
    def rank(self):
        ms = list(self.members.values())
        return ms[0].rank if ms else 1

    @property
    def order(self):
        return max((m.order for m in self.members.values()), default=-10**9)

    def group_support(self):
        if self.group.is_finite:
            return sorted(g for g, s in self.members.items() if not s.is_zero())
        # band-limited functions of g are supported on all of G: one piece with identity push
        return ["G"] if any(not s.is_zero() for s in self.members.values()) else []

    def member_at(self, g) -> MatrixSymbol:
        if g == "G":
            tags = [m.support_tag for m in self.members.values()]
            if any(t is None for t in tags):
                return next(iter(self.members.values())).with_tag(None)
            tag = tags[0]
            for t in tags[1:]:
                tag = tag.union(t)
            return next(iter(self.members.values())).with_tag(tag)
        return self.members[g]


def lift_to_family(a: AlgebraElement, rank: int = 1) -> SymbolFamily:
    """Each phi(., g) becomes an order-0 multiplication symbol with full essential support."""
    n = a.group.dim
    return SymbolFamily(a.group, {g: multiplication(f, rank).with_tag(ConicRegion.full(n)) for g, f in a.data.items()})


def family_convolve(P: SymbolFamily, Q: SymbolFamily, depth: int) -> SymbolFamily:
    """Product of families, defined so that the mode action is multiplicative."""
    _same_group(P.group, Q.group)
    G = P.group
    out: dict = {}
    smooth: dict = {}
    if G.is_finite:
        q = G.order
        w = ExactScalar(Fraction(1, q))
        for h, ph in P.members.items():
            for g2, qg in Q.members.items():
                g = (h + g2) % q
                term = compose(ph, conjugate_symbol(G, h, qg), depth) * w
                out[g] = out[g] + term if g in out else term
    else:
        for m, pm in P.members.items():
            for m2, qm in Q.members.items():
                want = tuple(x - y for x, y in zip(m, m2))
                sl = translate_symbol_modes(qm, G.axes, want)
                if sl.is_zero():
                    continue
                term = compose(pm, sl, depth)
                out[m2] = out[m2] + term if m2 in out else term
    if P.smoothing or Q.smoothing:
        raise NotImplementedError("family_convolve with smoothing parts: compose their ModeOperators instead")
    return SymbolFamily(G, out, smooth)


def family_adjoint(P: SymbolFamily, depth: int) -> SymbolFamily:
    """Adjoint family characterised by act(P*) = act(P)^*: P*(g) = T_g P(g^{-1})^* T_g^{-1}."""
    from .symbols import adjoint

    G = P.group
    out: dict = {}
    if G.is_finite:
        q = G.order
        for g, s in P.members.items():
            ginv = (-g) % q
            term = conjugate_symbol(G, ginv, adjoint(s, depth))
            out[ginv] = out[ginv] + term if ginv in out else term
        return SymbolFamily(G, out)
    for m, s in P.members.items():
        adj = adjoint(s, depth)
        modes = {tuple(key[0][ax - 1] for ax in G.axes) for row in adj.entries for e in row for key in e}
        for la in modes:
            sl = translate_symbol_modes(adj, G.axes, la)
            nm = tuple(x - y for x, y in zip(m, la))
            out[nm] = out[nm] + sl if nm in out else sl
    return SymbolFamily(G, out)


def family_operator(P: SymbolFamily) -> ModeOperator:
    """Mode action of a crossed family: ``P e_k = int P(g) (g.e_k) dmu(g)``."""
    G = P.group
    smooth = {g: ModeOperator.finite_rank(G.dim, e, P.rank) for g, e in P.smoothing.items()}

    if G.is_finite:
        q = G.order

        def col(k, c):
            out: dict = {}
            for g in set(P.members) | set(smooth):
                moved = act_on_trig(G, g, TrigPolynomial.mode(k))
                for km, cm in moved.terms.items():
                    vec = apply_to_mode(P.members[g], km, c) if g in P.members else {}
                    if g in smooth:
                        for key, v in smooth[g].column(km, c).items():
                            _add_into(vec, key, v)
                    for key, v in vec.items():
                        _add_into(out, key, v * cm * Fraction(1, q))
            return out
    else:
        def col(k, c):
            m = tuple(k[ax - 1] for ax in G.axes)
            out = apply_to_mode(P.members[m], k, c) if m in P.members else {}
            if m in smooth:
                for key, v in smooth[m].column(k, c).items():
                    _add_into(out, key, v)
            return out

    return ModeOperator(G.dim, P.rank, col, "P")


def act_on_mode(P: SymbolFamily, k: Sequence[int], component: int = 0) -> dict:
    return family_operator(P).column(tuple(k), component)


@dataclass
class TraceReport:
    value: object
    kernel_value: object
    mode_value: object
    discrepancy: object
    shell: object
    radius: int


def _kernel_diagonal_trace(P: SymbolFamily, radius: int):
    """int_G int_M tr K_{P(g)}(x, g x) dx dmu(g), from symbol data on the mode window."""
    G = P.group
    n = G.dim
    total = ZERO
    r = P.rank
    window = mode_window(n, radius)
    if G.is_finite:
        q = G.order
        for g in set(P.members) | set(P.smoothing):
            m, s = G.generator_power(g)
            smooth = ModeOperator.finite_rank(n, P.smoothing[g], r) if g in P.smoothing else None
            for k in window:
                # e_k(g x) = exp(2 pi i k.s) e_{m^T k}(x)
                target = tuple(sum(m[i][j] * k[i] for i in range(n)) for j in range(n))
                phase = root_of_unity_phase(-sum(Fraction(a) * b for a, b in zip(k, s)))
                for c in range(r):
                    vec = apply_to_mode(P.members[g], k, c) if g in P.members else {}
                    if smooth is not None:
                        vec = dict(vec)
                        for key, v in smooth.column(k, c).items():
                            _add_into(vec, key, v)
                    total = total + vec.get((target, c), ZERO) * phase * Fraction(1, q)
        return total
    for m_, s in P.members.items():
        for k in window:
            if tuple(k[ax - 1] for ax in G.axes) != m_:
                continue
            for c in range(r):
                total = total + apply_to_mode(s, k, c).get((tuple(k), c), ZERO)
    for m_, e in P.smoothing.items():
        op = ModeOperator.finite_rank(n, e, r)
        for k in window:
            if tuple(k[ax - 1] for ax in G.axes) == m_:
                for c in range(r):
                    total = total + op.diagonal(k, c)
    return total


def family_trace(P: SymbolFamily, radius: int, tolerance=0) -> TraceReport:
    """Trace two ways: kernel diagonal and mode sum. The outer shell must be within tolerance."""
    kern = _kernel_diagonal_trace(P, radius)
    op = family_operator(P)
    modes = op.trace_window(radius)
    inner = op.trace_window(radius - 1) if radius > 0 else ZERO
    shell = modes - inner
    disc = kern - modes
    if abs(complex(shell)) > tolerance:
        raise TraceCutoffError(f"outer shell at radius {radius} contributes {complex(shell)}")
    return TraceReport(modes, kern, modes, disc, shell, radius)


# --------------------------------------------------------------------------
# Dirac operators


@dataclass(frozen=True)
class DiracOperator:
    symbol: MatrixSymbol
    absD_symbol: MatrixSymbol
    grading: tuple

    def __post_init__(self):
        r = self.symbol.rank
        if len(self.grading) != r:
            raise SymbolError("grading length must equal the rank")
        for i in range(r):
            for j in range(r):
                if self.grading[i] == self.grading[j] and self.symbol.entries[i][j]:
                    raise SymbolError("Dirac symbol must be odd for the grading")
        sq = compose(self.symbol.principal(), self.symbol.principal(), 1).principal()
        scalar = sq.entries[0][0]
        for i in range(r):
            for j in range(r):
                if sq.entries[i][j] != (scalar if i == j else {}):
                    raise SymbolError("square of the principal symbol is not scalar")

    @classmethod
    def flat_torus(cls, dim: int = 2) -> "DiracOperator":
        """D = [[0, D1 - i D2], [D1 + i D2, 0]] on T^2 (or [[0, D],[D, 0]] on T^1)."""
        z = (0,) * dim
        if dim == 1:
            terms = [(0, 1, 1, z, (1,), 0), (1, 0, 1, z, (1,), 0)]
        elif dim == 2:
            terms = [(0, 1, 1, z, (1, 0), 0), (0, 1, ExactScalar(0, -1), z, (0, 1), 0),
                     (1, 0, 1, z, (1, 0), 0), (1, 0, ExactScalar(0, 1), z, (0, 1), 0)]
        else:
            raise ValueError("flat Dirac operator provided for dimensions 1 and 2")
        D = MatrixSymbol.from_terms(dim, terms, order=1, depth=2, rank=2)
        absD = MatrixSymbol.from_terms(dim, [(0, 0, 1, z, z, -1), (1, 1, 1, z, z, -1)], order=1, depth=2,
                                       rank=2)
        return cls(D, absD, (1, -1))


# --------------------------------------------------------------------------
# JSON


def trig_to_json(f: TrigPolynomial) -> list:
    from .exact import format_rational

    return [list(k) + [format_rational(c.re), format_rational(c.im)] for k, c in sorted(f.terms.items())]


def trig_from_json(dim: int, data) -> TrigPolynomial:
    terms = {}
    for row in data:
        k = tuple(int(v) for v in row[:dim])
        c = ExactScalar(Fraction(row[dim]), Fraction(row[dim + 1]) if len(row) > dim + 1 else 0)
        terms[k] = terms[k] + c if k in terms else c
    return TrigPolynomial(dim, terms)


def _g_to_json(g):
    return list(g) if isinstance(g, tuple) else g


def _g_from_json(G: GroupDescriptor, g):
    return int(g) if G.is_finite else tuple(int(v) for v in (g if isinstance(g, list) else [g]))


def algebra_to_json(a: AlgebraElement) -> dict:
    return {"group": a.group.to_json(),
            "table": [{"g": _g_to_json(g), "function": trig_to_json(f)} for g, f in sorted(a.data.items())]}


def algebra_from_json(d: dict) -> AlgebraElement:
    G = GroupDescriptor.from_json(d["group"])
    return AlgebraElement(G, {_g_from_json(G, row["g"]): trig_from_json(G.dim, row["function"])
                              for row in d["table"]})


def family_to_json(P: SymbolFamily) -> dict:
    from .symbols import symbol_to_json

    return {"group": P.group.to_json(),
            "table": [{"g": _g_to_json(g), "symbol": symbol_to_json(s)} for g, s in sorted(P.members.items())]}


def family_from_json(d: dict) -> SymbolFamily:
    from .symbols import symbol_from_json

    G = GroupDescriptor.from_json(d["group"])
    return SymbolFamily(G, {_g_from_json(G, row["g"]): symbol_from_json(row["symbol"]) for row in d["table"]})


def dirac_from_json(d: dict) -> DiracOperator:
    """Either {"flat_torus": n} or {"symbol": ..., "abs": ..., "grading": [...]}."""
    from .symbols import symbol_from_json

    if "flat_torus" in d:
        return DiracOperator.flat_torus(int(d["flat_torus"]))
    return DiracOperator(symbol_from_json(d["symbol"]), symbol_from_json(d["abs"]), tuple(d["grading"]))
