"""Cocycle constants, commutator calculus, Fredholm completion, Connes character
and equivariant index demos."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import mpmath
from mpmath import mp

from .crossed import (
    AlgebraElement,
    DiracOperator,
    ModeOperator,
    SymbolFamily,
    conjugate_symbol,
    family_operator,
    representation,
)
from .exact import ONE, ZERO, ExactConstant, ExactScalar, TrigPolynomial
from .symbols import (
    MatrixSymbol,
    SymbolError,
    compose,
    linear_combine,
    multi_indices,
    multiplication,
)

DPS = 50


class CocycleError(ValueError):
    pass


class MissingCertificate(CocycleError):
    pass


# --------------------------------------------------------------------------
# universal constants


def elementary_symmetric(q: int, N: int) -> int:
    """sigma_q of {1, ..., N-1}: coefficient of t^q in prod_{j<N} (1 + j t)."""
    if q < 0:
        return 0
    poly = [1]
    for j in range(1, N):
        nxt = poly + [0]
        for i, c in enumerate(poly):
            nxt[i + 1] += j * c
        poly = nxt
    return poly[q] if q < len(poly) else 0


def tilde_factorial(k: Sequence[int]) -> int:
    """(k1 + 1)(k1 + k2 + 2)...(k1 + ... + kj + j)."""
    out, run = 1, 0
    for j, kj in enumerate(k, start=1):
        run += kj
        out *= run + j
    return out


def _kfact(k) -> int:
    out = 1
    for kj in k:
        out *= math.factorial(kj)
    return out


def even_constant(m: int, k: Sequence[int], q: int) -> Fraction:
    """c_{2m,k,q} = (-1)^|k| sigma_q(|k| + m) / (k! k~!)."""
    if len(k) != 2 * m:
        raise ValueError("even constants take a multi-index of length 2m")
    s = sum(k)
    return Fraction((-1) ** s * elementary_symmetric(q, s + m), _kfact(k) * tilde_factorial(k))


def gamma_derivative(x, q: int):
    """Gamma^{(q)}(x) in extended precision."""
    with mp.workdps(DPS + 20):
        x = mpmath.mpf(Fraction(x).numerator) / Fraction(x).denominator
        v = mpmath.diff(mpmath.gamma, x, q) if q else mpmath.gamma(x)
    with mp.workdps(DPS):
        return +v


def odd_constant(m: int, k: Sequence[int], q: int):
    """(-1)^|k| Gamma^{(q)}(|k| + m + 1/2) / (k! k~! q!); the overall sqrt(2i) is kept apart."""
    if len(k) != 2 * m + 1:
        raise ValueError("odd constants take a multi-index of length 2m+1")
    s = sum(k)
    with mp.workdps(DPS):
        g = gamma_derivative(Fraction(2 * (s + m) + 1, 2), q)
        return (-1) ** s * g / (_kfact(k) * tilde_factorial(k) * math.factorial(q))


@dataclass
class CocycleConstants:
    parity: str
    table: dict
    prefactor: object = 1

    def __getitem__(self, key):
        return self.table[key]

    def nonzero(self):
        return {key: v for key, v in self.table.items() if v != 0}


def cocycle_constants(parity: str, max_m: int, max_k: int, max_q: int | None = None) -> CocycleConstants:
    """Tables keyed by (m, k, q); degree 2m (even) or 2m+1 (odd), |k| <= max_k.

    Even: q runs over 0..|k|+m, which includes the first vanishing index.
    Odd: q runs over 0..max_q (default |k| + m).
    """
    table = {}
    if parity == "even":
        for m in range(1, max_m + 1):
            for total in range(max_k + 1):
                for k in multi_indices(2 * m, total):
                    for q in range(total + m + 1):
                        table[(m, k, q)] = even_constant(m, k, q)
        return CocycleConstants("even", table, 1)
    if parity == "odd":
        for m in range(0, max_m + 1):
            for total in range(max_k + 1):
                for k in multi_indices(2 * m + 1, total):
                    top = total + m if max_q is None else max_q
                    for q in range(top + 1):
                        table[(m, k, q)] = odd_constant(m, k, q)
        with mp.workdps(DPS):
            pref = mpmath.sqrt(2j)
        return CocycleConstants("odd", table, pref)
    raise ValueError(f"parity must be 'even' or 'odd', not {parity!r}")


# --------------------------------------------------------------------------
# commutators with D and D^2


def _to_rank(a: MatrixSymbol, r: int) -> MatrixSymbol:
    if a.rank == r:
        return a
    if a.rank != 1:
        raise SymbolError(f"cannot lift rank {a.rank} to rank {r}")
    ents = [[dict(a.entries[0][0]) if i == j else {} for j in range(r)] for i in range(r)]
    return MatrixSymbol(a.dim, r, a.order, a.depth, ents, a.complete, a.support_tag)


def _commutator(X: MatrixSymbol, A: MatrixSymbol, depth: int) -> MatrixSymbol:
    return linear_combine([ONE, -ONE], [compose(X, A, depth), compose(A, X, depth)])


def _check_invariant(D: DiracOperator, G):
    if G is None:
        return
    if G.is_finite:
        for g in range(G.order):
            if not conjugate_symbol(G, g, D.symbol).same_terms(D.symbol):
                raise CocycleError("Dirac operator is not invariant under the group")
    elif not D.symbol.is_x_independent():
        raise CocycleError("Dirac operator must be translation invariant")


def _parse_ops(steps) -> list:
    ops = []
    for item in steps:
        if isinstance(item, str):
            name, count = item, 1
        else:
            name, count = item
        if name not in ("d", "nabla"):
            raise ValueError(f"unknown commutator {name!r}; use 'd' or 'nabla'")
        ops.extend([name] * count)
    return ops


def commutator_ops(a, D: DiracOperator, steps, depth: int = 4):
    """Apply dA = [D, A] and nabla(A) = [D^2, A] in the listed order.

    ``a`` is a SymbolFamily, a MatrixSymbol or an AlgebraElement/TrigPolynomial
    (lifted to multiplication symbols of D's rank).
    """
    ops = _parse_ops(steps)
    r = D.symbol.rank
    D2 = compose(D.symbol, D.symbol, depth)
    family = None
    if isinstance(a, AlgebraElement):
        family = SymbolFamily(a.group, {g: multiplication(f, r) for g, f in a.data.items()})
    elif isinstance(a, SymbolFamily):
        family = a
    elif isinstance(a, TrigPolynomial):
        a = multiplication(a, r)
    if family is not None:
        _check_invariant(D, family.group)
        members = {}
        for g, s in family.members.items():
            members[g] = _apply_ops(_to_rank(s, r), ops, D.symbol, D2, depth)
        return SymbolFamily(family.group, members)
    return _apply_ops(_to_rank(a, r), ops, D.symbol, D2, depth)


def _apply_ops(A, ops, D, D2, depth):
    for name in ops:
        A = _commutator(D if name == "d" else D2, A, depth)
    return A


# --------------------------------------------------------------------------
# Fredholm completion


class _SymbolRing:
    def __init__(self, depth, dim, rank):
        self.depth, self.dim, self.rank = depth, dim, rank

    def mul(self, a, b):
        return compose(a, b, self.depth).truncate(self.depth)

    def lin(self, coeffs, xs):
        return linear_combine(coeffs, xs).truncate(self.depth)

    def one(self):
        return MatrixSymbol.identity(self.dim, self.rank, self.depth)

    def zero(self):
        return MatrixSymbol.zero(self.dim, self.rank, 0, self.depth)

    def equal(self, a, b):
        return linear_combine([ONE, -ONE], [a, b]).truncate(self.depth).is_zero()


class _OperatorRing:
    def __init__(self, dim, rank, window):
        self.dim, self.rank, self.window = dim, rank, window

    def mul(self, a, b):
        return a @ b

    def lin(self, coeffs, xs):
        out = xs[0] * coeffs[0]
        for c, x in zip(coeffs[1:], xs[1:]):
            out = out + x * c
        return out

    def one(self):
        return ModeOperator.identity(self.dim, self.rank)

    def zero(self):
        return ModeOperator.zero(self.dim, self.rank)

    def equal(self, a, b):
        from .symbols import mode_window

        modes = mode_window(self.dim, self.window)
        ma, mb = a.matrix(modes), b.matrix(modes)
        keys = set(ma) | set(mb)
        return all(ma.get(k, ZERO) == mb.get(k, ZERO) for k in keys)


@dataclass
class FredholmPair:
    P: object
    Q: object
    P_tilde: list
    Q_tilde: list
    ring: object = field(repr=False, default=None)

    def products(self):
        R = self.ring
        out = []
        for X, Y in ((self.P_tilde, self.Q_tilde), (self.Q_tilde, self.P_tilde)):
            prod = [[R.lin([ONE, ONE], [R.mul(X[i][0], Y[0][j]), R.mul(X[i][1], Y[1][j])]) for j in range(2)]
                    for i in range(2)]
            out.append(prod)
        return out

    def verify(self) -> bool:
        """P~ Q~ = Q~ P~ = 1 exactly in the working ring."""
        R = self.ring
        for prod in self.products():
            for i in range(2):
                for j in range(2):
                    if not R.equal(prod[i][j], R.one() if i == j else R.zero()):
                        return False
        return True

    def as_symbol(self, which: str = "P") -> MatrixSymbol:
        blocks = self.P_tilde if which == "P" else self.Q_tilde
        return MatrixSymbol.from_entries(blocks)

    def as_operator(self, which: str = "P") -> ModeOperator:
        from .crossed import block_operator

        blocks = self.P_tilde if which == "P" else self.Q_tilde
        if isinstance(blocks[0][0], MatrixSymbol):
            blocks = [[ModeOperator.from_symbol(b) for b in row] for row in blocks]
        return block_operator(blocks)


def fredholm_completion(P, Q, depth: int = 4, window: int = 3) -> FredholmPair:
    """P~ = [[P, 1-PQ], [1-QP, (QP-2)Q]], Q~ = [[(2-QP)Q, 1-QP], [1-PQ, -P]].

    P, Q are order-0 MatrixSymbols (identities checked modulo degree -depth) or
    ModeOperators (identities checked on the mode window).
    """
    if isinstance(P, MatrixSymbol) and isinstance(Q, MatrixSymbol):
        if (P.dim, P.rank) != (Q.dim, Q.rank):
            raise SymbolError("P and Q must have matching shapes")
        if P.order > 0 or Q.order > 0:
            raise SymbolError("Fredholm completion expects order-0 symbols")
        R = _SymbolRing(depth, P.dim, P.rank)
        P = P.with_window(0, max(P.depth, depth)) if P.complete else P
        Q = Q.with_window(0, max(Q.depth, depth)) if Q.complete else Q
    elif isinstance(P, ModeOperator) and isinstance(Q, ModeOperator):
        if (P.dim, P.rank) != (Q.dim, Q.rank):
            raise SymbolError("P and Q must have matching shapes")
        R = _OperatorRing(P.dim, P.rank, window)
    else:
        raise TypeError("P and Q must both be MatrixSymbols or both ModeOperators")
    one = R.one()
    PQ, QP = R.mul(P, Q), R.mul(Q, P)
    one_PQ = R.lin([ONE, -ONE], [one, PQ])
    one_QP = R.lin([ONE, -ONE], [one, QP])
    two = ExactScalar(2)
    QP_2 = R.lin([ONE, -two], [QP, one])
    two_QP = R.lin([two, -ONE], [one, QP])
    Pt = [[P, one_PQ], [one_QP, R.mul(QP_2, Q)]]
    Qt = [[R.mul(two_QP, Q), one_QP], [one_PQ, R.lin([-ONE], [P])]]
    return FredholmPair(P, Q, Pt, Qt, R)


# --------------------------------------------------------------------------
# Connes character


def _as_operator(X) -> ModeOperator:
    if isinstance(X, ModeOperator):
        return X
    if isinstance(X, SymbolFamily):
        return family_operator(X)
    if isinstance(X, MatrixSymbol):
        return ModeOperator.from_symbol(X)
    raise TypeError(f"cannot act with {type(X).__name__}")


def _window_trace(op: ModeOperator, radius: int, tolerance):
    total = op.trace_window(radius)
    inner = op.trace_window(radius - 1) if radius > 0 else ZERO
    shell = total - inner
    if abs(complex(shell)) > tolerance:
        raise CocycleError(f"trace window radius {radius} too small: outer shell contributes {complex(shell)}")
    return total


@dataclass
class CharacterReport:
    value: object
    left: object
    right: object
    n_power: int
    radius: int


def connes_character(phi: AlgebraElement, P, Q, n_power: int, R: int, certificate=None,
                     tolerance=0) -> CharacterReport:
    """tau'(phi) = Tr(rho(phi)(1 - QP)^n) - Tr(rho(phi)(1 - PQ)^n) on the window |k| <= R.

    ``certificate`` must state that 1 - QP and 1 - PQ are transversally smoothing:
    a ParametrixResult with that certificate, a Classification, or True for
    operators known to differ from inverses by finite rank.
    """
    if certificate is None:
        raise MissingCertificate("connes_character needs a transversal smoothing certificate")
    if hasattr(certificate, "certificate") and certificate.certificate not in ("elliptic", "transversal"):
        raise MissingCertificate("parametrix certificate is not a smoothing certificate")
    if certificate is False:
        raise MissingCertificate("smoothing certificate is false")
    Pop, Qop = _as_operator(P), _as_operator(Q)
    rho = representation(phi, Pop.rank)
    one = ModeOperator.identity(Pop.dim, Pop.rank)
    S0 = one - Qop @ Pop
    S1 = one - Pop @ Qop
    left = _window_trace(rho @ S0.power(n_power), R, tolerance)
    right = _window_trace(rho @ S1.power(n_power), R, tolerance)
    return CharacterReport(left - right, left, right, n_power, R)


def character_via_commutator(phi: AlgebraElement, P, Q, R: int, tolerance=0):
    """(1/2) Tr(eps F [F, e]) for F = [[0, Q~], [P~, 0]] built from the Fredholm completion.

    ``e`` acts by rho(phi) on the first summand of each side and by 0 on the second.
    """
    Pop, Qop = _as_operator(P), _as_operator(Q)
    pair = fredholm_completion(Pop, Qop)
    Pt, Qt = pair.as_operator("P"), pair.as_operator("Q")
    rho = representation(phi, Pop.rank)
    from .crossed import block_operator

    zero = ModeOperator.zero(Pop.dim, Pop.rank)
    e = block_operator([[rho, zero], [zero, zero]])
    # eps F [F, e] = eps (F^2 e - F e F); F^2 = 1, so the even part splits into
    # (e - Q~ e P~) on H+ and -(e - P~ e Q~) on H-.
    plus = e - Qt @ e @ Pt
    minus = e - Pt @ e @ Qt
    tp = _window_trace(plus, R, tolerance)
    tm = _window_trace(minus, R, tolerance)
    return (tp - tm) * Fraction(1, 2)


# --------------------------------------------------------------------------
# equivariant index distribution


def parse_test_function(f) -> dict:
    """Fourier coefficients {n: ExactScalar} of a band-limited function on the circle.

    Accepts a mapping, or strings like "2cos", "1", "3sin", "cos2", "1+2cos".
    """
    if isinstance(f, Mapping):
        return {int(n): ExactScalar.coerce(c) for n, c in f.items() if c}
    out: dict = {}
    s = str(f).replace(" ", "").replace("-", "+-")
    for part in filter(None, s.split("+")):
        num = ""
        i = 0
        while i < len(part) and (part[i].isdigit() or part[i] in "-/"):
            num += part[i]
            i += 1
        rest = part[i:].lstrip("*")
        c = Fraction(num) if num not in ("", "-") else Fraction(-1 if num == "-" else 1)
        if rest == "":
            _add_coef(out, 0, ExactScalar(c))
            continue
        kind, freq = rest[:3], rest[3:] or "1"
        n = int(freq)
        if kind == "cos":
            _add_coef(out, n, ExactScalar(c / 2))
            _add_coef(out, -n, ExactScalar(c / 2))
        elif kind == "sin":
            _add_coef(out, n, ExactScalar(0, -c / 2))
            _add_coef(out, -n, ExactScalar(0, c / 2))
        else:
            raise ValueError(f"cannot parse test function term {part!r}")
    return {n: c for n, c in out.items() if c}


def _add_coef(d, n, c):
    d[n] = d[n] + c if n in d else c


def index_distribution(case: str, f, symbol: MatrixSymbol | None = None) -> ExactScalar:
    """Trace(rho(f) pi_P) - Trace(rho(f) pi_{P*}) for invariant operators diagonal in modes.

    rho(f) e_k = fhat(k) e_k for the rotation action (translation by g sends e_k to
    e^{-ikg} e_k), so only modes in the band of f contribute.  Cases:
    ``circle-rotation`` (zero operator on the circle), ``dx-rotation`` (P = D_x),
    ``trivial-elliptic`` (x-independent elliptic ``symbol``, trivial group: f is a constant).
    """
    fhat = parse_test_function(f)
    if case in ("circle-rotation", "zero"):
        # kernel is everything, the target space is zero
        return sum((c for c in fhat.values()), ZERO)
    if case in ("dx-rotation", "dx"):
        ker_p = {0}
        ker_pstar = {0}
        return sum((fhat.get(k, ZERO) for k in ker_p), ZERO) - sum((fhat.get(k, ZERO) for k in ker_pstar), ZERO)
    if case in ("trivial-elliptic",):
        if symbol is None:
            raise CocycleError("trivial-elliptic case needs a symbol")
        if not symbol.is_x_independent():
            raise CocycleError("trivial-elliptic case handles x-independent symbols")
        from .microlocal import characteristic_set
        from .symbols import adjoint, apply_to_mode, mode_window

        if not characteristic_set(symbol).is_empty():
            raise CocycleError("symbol is not elliptic")
        c = fhat.get(0, ZERO)
        # zero modes of an elliptic constant-coefficient symbol lie in a bounded window
        radius = 8
        pstar = adjoint(symbol, max(symbol.depth, 1))
        kp = sum(1 for k in mode_window(symbol.dim, radius) if not _mode_value(symbol, k))
        ks = sum(1 for k in mode_window(symbol.dim, radius) if not _mode_value(pstar, k))
        return c * (kp - ks)
    raise CocycleError(f"unsupported index case {case!r}")


def _mode_value(a: MatrixSymbol, k):
    from .symbols import apply_to_mode

    try:
        return apply_to_mode(a, k, 0).get((tuple(k), 0), ZERO)
    except SymbolError:
        return ONE


# --------------------------------------------------------------------------
# cocycle assembly


@dataclass
class CocycleTerm:
    k: tuple
    q: int
    constant: object
    tau: object
    contribution: object
    order: int


@dataclass
class CocycleReport:
    value: object
    terms: list
    discarded: list


def _graded(a: MatrixSymbol, grading) -> MatrixSymbol:
    ents = [[{key: c * grading[i] for key, c in a.entries[i][j].items()} for j in range(a.rank)]
            for i in range(a.rank)]
    return MatrixSymbol(a.dim, a.rank, a.order, a.depth, ents, a.complete, a.support_tag)


def _abs_power(dim: int, rank: int, s: int) -> MatrixSymbol:
    z = (0,) * dim
    return MatrixSymbol.from_terms(dim, [(i, i, 1, z, z, s) for i in range(rank)], rank=rank)


def residue_tau_provider(A: MatrixSymbol, q: int):
    """tau_q on a flat torus with trivial group and P = |D|: tau_0 is the Wodzicki residue
    divided by ord|D| = 1, tau_q = 0 for q >= 1 (classical symbols give simple poles)."""
    from .spectral import wodzicki_residue_parts

    if q >= 1:
        return ExactConstant(0)
    if q == 0:
        if A.order < -A.dim:
            return ExactConstant(0)
        re, im = wodzicki_residue_parts(A)
        if im.rational == 0:
            return re
        return re.to_mpf() + 1j * im.to_mpf()
    raise CocycleError("tau_{-1} needs the spectral provider")


def spectral_regular_value(A: MatrixSymbol, D: DiracOperator, radius: int = 60):
    """tau_{-1}(A) = value at z = 0 of Tr(A |D|'^{-z}) for x-independent A, where |D|' is |D|
    with its kernel replaced by 1; computed from a fitted heat expansion."""
    from .spectral import (
        eigendata,
        expansion_transform,
        fit_expansion,
        heat_samples,
        tau_functionals,
    )
    from .symbols import apply_to_mode

    if not A.is_x_independent():
        raise CocycleError("spectral tau_{-1} provider handles x-independent arguments")
    n = A.dim
    r = A.rank

    def weight(k):
        tot = ZERO
        for c in range(r):
            try:
                tot = tot + apply_to_mode(A, k, c).get((tuple(k), c), ZERO)
            except SymbolError:
                tot = tot + ZERO
        return mpmath.mpf(tot.re.numerator) / tot.re.denominator

    class _AbsD:
        dim = n

        def __call__(self, k):
            norm = mpmath.sqrt(sum(x * x for x in k))
            return [norm if norm else mpmath.mpf(1)] * r

    E = eigendata(_AbsD(), radius, weight=lambda k: weight(k), growth_order=1, weight_order=A.order)
    if all(w == 0 for w in E.weights):
        return mpmath.mpf(0)
    ts = [mpmath.mpf(j) / 40 for j in range(2, 14)]
    template = [(Fraction(-n - A.order - j), 0) for j in range(n + A.order + 1)] + [(0, 1), (0, 0), (1, 0), (1, 1), (2, 0)]
    fit = fit_expansion(heat_samples(E, ts), template)
    tau = tau_functionals(expansion_transform(fit, "zeta"), 0, pole_tolerance=mpmath.mpf(10) ** -8,
                          want_regular=True)
    return tau[-1]


def assemble_cocycle(parity: str, m: int, a: Sequence, D: DiracOperator, depth: int = 4,
                     tau_provider: Callable | None = None, regular_provider: Callable | None = None
                     ) -> CocycleReport:
    """phi_{2m} (or phi_{2m+1}) evaluated on a^0, ..., a^{deg} for a flat torus, trivial group.

    Terms whose operator argument has order below -dim - 2 are discarded as exact
    zeros (trace class: no pole at z = 0).
    """
    tau_provider = tau_provider or residue_tau_provider
    r = D.symbol.rank
    n = D.symbol.dim
    deg = 2 * m if parity == "even" else 2 * m + 1
    if len(a) != deg + 1:
        raise CocycleError(f"need {deg + 1} algebra elements, got {len(a)}")
    syms = []
    for x in a:
        if isinstance(x, AlgebraElement):
            if not (x.group.is_finite and x.group.order == 1):
                raise CocycleError("cocycle assembly is implemented for the trivial group")
            f = x.data.get(0, TrigPolynomial(n))
            syms.append(multiplication(f, r))
        elif isinstance(x, TrigPolynomial):
            syms.append(multiplication(x, r))
        else:
            syms.append(_to_rank(x, r))
    if all(s.is_zero() for s in syms):
        return CocycleReport(ExactConstant(0) if parity == "even" else 0, [], [])
    if parity == "even" and m == 0:
        if regular_provider is None:
            regular_provider = lambda A: spectral_regular_value(A, D)
        A = _graded(syms[0], D.grading)
        v = regular_provider(A)
        return CocycleReport(v, [CocycleTerm((), -1, 1, v, v, A.order)], [])
    consts = cocycle_constants(parity, m, max(0, n + 3 - deg))
    terms, discarded = [], []
    total = None
    D2 = compose(D.symbol, D.symbol, depth)
    for key, c in sorted(consts.table.items(), key=lambda kv: (sum(kv[0][1]), kv[0][1], kv[0][2])):
        mm, k, q = key
        if mm != m or c == 0:
            continue
        s = 2 * sum(k) + deg
        order = sum(k) - s
        if order < -n - 2:
            discarded.append((k, q))
            continue
        need = order + n + 1 + s
        prod = syms[0]
        for i in range(1, deg + 1):
            da = _commutator(D.symbol, syms[i], need)
            for _ in range(k[i - 1]):
                da = _commutator(D2, da, need)
            prod = compose(prod, da, need)
        A = compose(prod, _abs_power(n, r, s), need)
        if parity == "even":
            A = _graded(A, D.grading)
        tau = tau_provider(A, q)
        contrib = tau * c if isinstance(tau, ExactConstant) and isinstance(c, Fraction) else (
            _num(tau) * c)
        terms.append(CocycleTerm(k, q, c, tau, contrib, order))
        total = contrib if total is None else _sum(total, contrib)
    if parity == "odd" and total is not None:
        total = _num(total) * consts.prefactor
    return CocycleReport(total if total is not None else ExactConstant(0), terms, discarded)


def _num(v):
    if isinstance(v, ExactConstant):
        return v.to_mpf()
    return v


def _sum(a, b):
    if isinstance(a, ExactConstant) and isinstance(b, ExactConstant):
        if a.rational == 0:
            return b
        if b.rational == 0 or a.pi_half_power == b.pi_half_power:
            return a + b
    return _num(a) + _num(b)
