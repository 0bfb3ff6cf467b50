"""Spectral engine for constant-coefficient operators on tori.

Eigenvalues come from exact Fourier diagonalization; traces are lattice sums in
extended precision.  Heat, zeta and resolvent expansions are related through
the Mellin transform, and the Wodzicki residue is computed exactly from the
degree ``-n`` symbol term.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
from mpmath import mp

from .exact import ExactConstant
from .symbols import MatrixSymbol, SymbolError

DPS = 50


class SpectralError(ValueError):
    pass


class DivergentRequest(SpectralError):
    pass


class FitError(SpectralError):
    pass


class WindowTooSmall(SpectralError):
    pass


# --------------------------------------------------------------------------
# eigenvalue lattices


def _eval_symbol_matrix(a: MatrixSymbol, k: Sequence[int]):
    """Numeric value of an x-independent symbol at xi = k, as an mpmath matrix."""
    r = a.rank
    norm = mpmath.sqrt(sum(mpmath.mpf(x) ** 2 for x in k))
    m = mpmath.matrix(r, r)
    for i in range(r):
        for j in range(r):
            acc = mpmath.mpc(0)
            for (mode, alpha, w), c in a.entries[i][j].items():
                if any(mode):
                    raise SpectralError("symbol depends on x; it is not diagonal in the mode basis")
                if norm == 0 and (w > 0 or any(e < 0 for e in alpha)):
                    raise SpectralError("symbol is singular at the zero mode; use exclude_zero")
                v = mpmath.mpf(1)
                for x, e in zip(k, alpha):
                    v *= mpmath.mpf(x) ** e
                if w:
                    v *= norm ** (-w)
                acc += mpmath.mpc(_mp(c.re), _mp(c.im)) * v
            m[i, j] = acc
    return m


def _scalar_value(a: MatrixSymbol, k):
    norm2 = sum(x * x for x in k)
    acc = mpmath.mpf(0)
    for (mode, alpha, w), c in a.entries[0][0].items():
        if any(mode):
            raise SpectralError("symbol depends on x; it is not diagonal in the mode basis")
        if c.im:
            return None
        mono = 1
        for x, e in zip(k, alpha):
            if e < 0:
                return None
            mono *= x ** e
        if w:
            if w % 2 or norm2 == 0:
                return None
            acc += _mp(c.re * mono) / mpmath.mpf(norm2) ** (w // 2)
        else:
            acc += _mp(c.re * mono)
    return acc


def _symbol_eigenvalues(a: MatrixSymbol, k) -> list:
    if a.rank == 1:
        v = _scalar_value(a, k)
        if v is not None:
            return [v]
    m = _eval_symbol_matrix(a, k)
    if a.rank == 1:
        return [m[0, 0]]
    ev, _ = mpmath.eighe(m)
    return [ev[i] for i in range(a.rank)]


@dataclass
class EigenLattice:
    """Eigenvalues (with multiplicity) of a torus operator on a sup-norm window of modes."""

    dim: int
    radius: int
    modes: list
    values: list
    weights: list
    growth_order: int
    weight_order: int = 0
    free_axes: tuple = ()
    shells: list = field(default_factory=list)

    @property
    def free_dim(self) -> int:
        return len(self.free_axes)

    def abscissa(self) -> Fraction:
        """Re z beyond which sum w(k) lambda(k)^{-z} converges absolutely."""
        return Fraction(self.free_dim + self.weight_order, self.growth_order)

    def __len__(self):
        return len(self.values)


def eigendata(p, radius: int, weight=None, character=None, exclude_zero: bool = False,
              growth_order: int | None = None, weight_order: int = 0,
              perturbation: dict | None = None) -> EigenLattice:
    """Tabulate eigenvalues of ``p`` on modes with sup-norm <= ``radius``.

    ``p`` is an x-independent MatrixSymbol, a piecewise symbol (anything with
    ``piece_at``) or a callable ``k -> list of eigenvalues``.  ``weight`` is a callable
    ``k -> value`` or a scalar x-independent symbol.  ``character=(axis, n)`` keeps the
    isotypic modes ``k_axis = n`` of a circle action, which is what rho(chi_n) projects
    onto.  ``perturbation`` adds finite-rank weights ``{mode: value}``.
    """
    with mp.workdps(DPS):
        if isinstance(p, MatrixSymbol):
            sym = p
            dim = p.dim
            rule = lambda k: _symbol_eigenvalues(sym, k)
            order = p.order if growth_order is None else growth_order
        elif hasattr(p, "piece_at"):
            pw = p
            dim = pw.dim
            rule = lambda k: _symbol_eigenvalues(pw.piece_at(k), k)
            order = max(s.order for _, s in pw.pieces) if growth_order is None else growth_order
        else:
            if growth_order is None:
                raise SpectralError("growth_order is required for a callable eigenvalue rule")
            rule = p
            dim = _infer_dim(p)
            order = growth_order
        if order <= 0:
            raise SpectralError("eigenvalue rule must grow (positive order)")
        if isinstance(weight, MatrixSymbol):
            wsym = weight
            weight_order = wsym.order if weight_order == 0 else weight_order
            wrule = lambda k: _eval_symbol_matrix(wsym, k)[0, 0]
        else:
            wrule = weight
        free = tuple(i for i in range(dim) if character is None or i != character[0] - 1)
        ranges = []
        for i in range(dim):
            if character is not None and i == character[0] - 1:
                ranges.append([character[1]])
            else:
                ranges.append(range(-radius, radius + 1))
        modes, values, weights, shells = [], [], [], []
        perturbation = {tuple(k): v for k, v in (perturbation or {}).items()}
        for k in itertools.product(*ranges):
            if exclude_zero and not any(k):
                continue
            w = mpmath.mpf(1) if wrule is None else mpmath.mpmathify(wrule(k))
            if k in perturbation:
                w += mpmath.mpmathify(perturbation[k])
            shell = max((abs(k[i]) for i in free), default=0)
            for lam in rule(k):
                lam = mpmath.mpmathify(lam)
                if isinstance(lam, mpmath.mpc):
                    if abs(lam.imag) > mpmath.mpf(10) ** (-DPS // 2):
                        raise SpectralError(f"eigenvalue at mode {k} is not real")
                    lam = lam.real
                if lam <= 0:
                    raise SpectralError(f"nonpositive eigenvalue {lam} at mode {k}")
                modes.append(k)
                values.append(lam)
                weights.append(w)
                shells.append(shell)
        return EigenLattice(dim, radius, modes, values, weights, order, weight_order, free, shells)


def _infer_dim(p):
    dim = getattr(p, "dim", None)
    if dim is None:
        raise SpectralError("cannot infer the torus dimension of a bare callable; pass a symbol")
    return dim


def callable_rule(dim: int, fn: Callable) -> Callable:
    """Wrap ``fn(k) -> eigenvalue`` as a rule with a ``dim`` attribute for eigendata."""

    class _Rule:
        def __init__(self):
            self.dim = dim

        def __call__(self, k):
            v = fn(k)
            return list(v) if isinstance(v, (list, tuple)) else [v]

    return _Rule()


# --------------------------------------------------------------------------
# traces


@dataclass
class TraceValue:
    value: object
    error: object
    kind: str
    terms: int

    def __float__(self):
        return float(mpmath.re(self.value))


def _shell_sums(E: EigenLattice, contrib: list):
    sums: dict = {}
    for s, c in zip(E.shells, contrib):
        sums[s] = sums.get(s, 0) + abs(c)
    return sums


def spectral_trace(E: EigenLattice, kind: str, t=None, z=None, K: int | None = None,
                   lam=None) -> TraceValue:
    """Weighted trace of e^{-tP}, P^{-z} or (P - lam)^{-K} over the lattice window."""
    with mp.workdps(DPS):
        if kind == "heat":
            t = mpmath.mpmathify(t)
            if t <= 0:
                raise SpectralError("heat parameter must be positive")
            contrib = [w * mpmath.exp(-t * v) for v, w in zip(E.values, E.weights)]
            tail = _geometric_tail(E, contrib)
        elif kind == "zeta":
            z = mpmath.mpmathify(z)
            if mpmath.re(z) <= _mp(E.abscissa()):
                raise DivergentRequest(
                    f"Re z = {mpmath.nstr(mpmath.re(z), 8)} is left of the abscissa {E.abscissa()}; "
                    "use expansion_transform for the continuation")
            contrib = [w * mpmath.power(v, -z) for v, w in zip(E.values, E.weights)]
            decay = E.growth_order * mpmath.re(z) - E.weight_order
            tail = _power_tail(E, contrib, decay)
        elif kind == "resolvent":
            if K is None or lam is None:
                raise SpectralError("resolvent trace needs K and lam")
            lam = mpmath.mpmathify(lam)
            if K <= E.abscissa():
                raise DivergentRequest(f"K = {K} does not exceed the abscissa {E.abscissa()}")
            if any(abs(v - lam) == 0 for v in E.values):
                raise SpectralError("lam lies on the spectrum")
            contrib = [w * mpmath.power(v - lam, -K) for v, w in zip(E.values, E.weights)]
            tail = _power_tail(E, contrib, E.growth_order * K - E.weight_order)
        else:
            raise SpectralError(f"unknown trace kind {kind!r}")
        return TraceValue(mpmath.fsum(contrib), tail, kind, len(contrib))


def _geometric_tail(E: EigenLattice, contrib):
    sums = _shell_sums(E, contrib)
    R = max(sums) if sums else 0
    last, prev = sums.get(R, 0), sums.get(R - 1, 0)
    if last == 0:
        return mpmath.mpf(0)
    if prev == 0 or last >= prev:
        return mpmath.inf
    ratio = last / prev
    return last * ratio / (1 - ratio)


def _power_tail(E: EigenLattice, contrib, decay):
    """Shell sums behave like R^{free_dim - 1 - decay}; sum the remaining shells as an integral."""
    sums = _shell_sums(E, contrib)
    R = max(sums) if sums else 0
    last = sums.get(R, 0)
    p = decay - E.free_dim + 1
    if p <= 1:
        return mpmath.inf
    return last * R / (p - 1)


def heat_samples(E: EigenLattice, ts: Sequence) -> list:
    """[(t, Tr(A e^{-tP}))] for each t, checking that the window tail is negligible."""
    out = []
    with mp.workdps(DPS):
        for t in ts:
            tv = spectral_trace(E, "heat", t=t)
            if tv.error == mpmath.inf or tv.error > abs(tv.value) * mpmath.mpf(10) ** (-30):
                raise WindowTooSmall(f"lattice window too small for t = {t}; tail {tv.error}")
            out.append((mpmath.mpmathify(t), tv.value))
    return out


# --------------------------------------------------------------------------
# asymptotic expansions


@dataclass
class ExpansionTerm:
    s: Fraction
    q: int
    coeff: object

    def to_json(self):
        return {"s": _fmt_frac(self.s), "q": self.q, "coeff": _fmt_num(self.coeff)}


def _fmt_frac(s: Fraction) -> str:
    s = Fraction(s)
    return str(s.numerator) if s.denominator == 1 else f"{s.numerator}/{s.denominator}"


def _fmt_num(c) -> str:
    if isinstance(c, ExactConstant):
        from .exact import format_constant

        return format_constant(c)
    c = mpmath.mpmathify(c)
    if isinstance(c, mpmath.mpc):
        if c.imag == 0:
            c = c.real
        else:
            return f"{mpmath.nstr(c.real, 30)}{'+' if c.imag >= 0 else '-'}{mpmath.nstr(abs(c.imag), 30)}*i"
    return mpmath.nstr(c, 30)


@dataclass
class AsymptoticExpansion:
    """Structured expansion.

    heat:       sum coeff * t^s * (ln t)^q            as t -> 0+
    zeta:       sum coeff * (z - s)^(-q-1)             principal parts of Tr(A P^{-z});
                q = -1 records the value at a pole of Gamma, where it is determined locally
    resolvent:  sum coeff * mu^s * (ln mu)^q           Tr(A (P + mu)^{-K}) as mu -> +oo
    """

    kind: str
    terms: list
    K: int | None = None
    condition: float | None = None
    residual: object = None
    guard_ok: bool | None = None

    @property
    def max_log_power(self) -> int:
        return max((t.q for t in self.terms), default=0)

    def coefficient(self, s, q=0, default=0):
        s = Fraction(s)
        for t in self.terms:
            if t.s == s and t.q == q:
                return t.coeff
        return default

    def locations(self) -> list:
        out = []
        for t in self.terms:
            if t.s not in out:
                out.append(t.s)
        return out

    def block(self, s) -> dict:
        s = Fraction(s)
        return {t.q: t.coeff for t in self.terms if t.s == s}

    def gamma_zeta_laurent(self, s) -> dict:
        """Principal part of Gamma(z) Tr(A P^{-z}) at z = s: {order: coefficient of (z-s)^-order}."""
        if self.kind != "zeta":
            raise SpectralError("Gamma-zeta Laurent data needs a zeta expansion")
        with mp.workdps(DPS):
            z0 = Fraction(s)
            return _zeta_to_gamma_block(z0, self.block(z0))

    def evaluate(self, x):
        with mp.workdps(DPS):
            x = mpmath.mpmathify(x)
            if self.kind == "zeta":
                return mpmath.fsum(t.coeff * (x - _mp(t.s)) ** (-t.q - 1) for t in self.terms)
            return mpmath.fsum(t.coeff * x ** _mp(t.s) * mpmath.log(x) ** t.q for t in self.terms)

    def to_json(self) -> dict:
        d = {"kind": self.kind, "terms": [t.to_json() for t in self.terms]}
        if self.K is not None:
            d["K"] = self.K
        if self.condition is not None:
            d["condition"] = self.condition
        return d

    @classmethod
    def from_json(cls, d: dict) -> "AsymptoticExpansion":
        with mp.workdps(DPS):
            terms = [ExpansionTerm(Fraction(t["s"]), int(t["q"]), _parse_num(t["coeff"])) for t in d["terms"]]
        return cls(d["kind"], terms, d.get("K"))


def _parse_num(s):
    if isinstance(s, (int, float)):
        return _mp(s)
    s = s.strip()
    if s.endswith("*i"):
        body = s[:-2]
        for pos in range(len(body) - 1, 0, -1):
            if body[pos] in "+-" and body[pos - 1] not in "eE":
                return mpmath.mpc(mpmath.mpf(body[:pos]), mpmath.mpf(body[pos:]))
        return mpmath.mpc(0, mpmath.mpf(body))
    if "pi" in s:
        from .exact import parse_constant

        return parse_constant(s).to_mpf()
    return _mp(s)


def fit_expansion(samples: Sequence, template: Sequence, kind: str = "heat", guard=None,
                  max_condition: float = 1e30, K: int | None = None) -> AsymptoticExpansion:
    """Least-squares fit of ``value ~ sum c * x^s (ln x)^q`` over the template ``[(s, q)]``.

    Columns are normalized before solving so that the reported condition number
    reflects the template geometry, not the scale of the samples.
    """
    template = [(Fraction(s), int(q)) for s, q in template]
    if len(samples) < len(template) + 2:
        raise FitError(f"{len(samples)} samples for {len(template)} unknowns; need at least two guard samples")
    if kind not in ("heat", "resolvent"):
        raise FitError("fits are defined for heat or resolvent expansions")
    with mp.workdps(DPS):
        xs = [mpmath.mpmathify(x) for x, _ in samples]
        ys = [mpmath.mpmathify(y) for _, y in samples]
        if any(x <= 0 for x in xs):
            raise FitError("sample parameters must be positive")
        cols = []
        for s, q in template:
            cols.append([x ** _mp(s) * mpmath.log(x) ** q for x in xs])
        scales = [mpmath.sqrt(mpmath.fsum(v ** 2 for v in c)) for c in cols]
        A = mpmath.matrix(len(xs), len(template))
        for j, c in enumerate(cols):
            for i, v in enumerate(c):
                A[i, j] = v / scales[j]
        sv = mpmath.svd_r(A, compute_uv=False)
        cond = sv[0] / sv[len(template) - 1] if sv[len(template) - 1] != 0 else mpmath.inf
        if cond > max_condition:
            raise FitError(f"ill-conditioned template (condition number {mpmath.nstr(cond, 5)})")
        complex_data = any(isinstance(y, mpmath.mpc) and y.imag != 0 for y in ys)
        if complex_data:
            re = mpmath.qr_solve(A, mpmath.matrix([mpmath.re(y) for y in ys]))[0]
            im = mpmath.qr_solve(A, mpmath.matrix([mpmath.im(y) for y in ys]))[0]
            sol = [re[j] + 1j * im[j] for j in range(len(template))]
        else:
            x = mpmath.qr_solve(A, mpmath.matrix([mpmath.re(y) for y in ys]))[0]
            sol = [x[j] for j in range(len(template))]
        coeffs = [c / scales[j] for j, c in enumerate(sol)]
        resid = [y - mpmath.fsum(c * col[i] for c, col in zip(coeffs, cols)) for i, y in enumerate(ys)]
        rms = mpmath.sqrt(mpmath.fsum(abs(r) ** 2 for r in resid) / len(resid))
        guard_ok = None
        if guard is not None:
            gs, gq = Fraction(guard[0]), int(guard[1])
            bound = max(abs(x ** _mp(gs) * mpmath.log(x) ** gq) for x in xs)
            guard_ok = bool(rms <= bound)
        terms = [ExpansionTerm(s, q, c) for (s, q), c in zip(template, coeffs)]
        return AsymptoticExpansion(kind, terms, K, float(cond), rms, guard_ok)


# --------------------------------------------------------------------------
# Mellin-type transforms


def reciprocal_gamma_derivatives(s, maxorder: int) -> list:
    """[(1/Gamma)^{(j)}(s) for j = 0..maxorder]; 1/Gamma is entire."""
    if maxorder > 8:
        raise SpectralError("maxorder is limited to 8")
    with mp.workdps(DPS + 20):
        s = mpmath.mpf(Fraction(s).numerator) / Fraction(s).denominator if isinstance(s, (Fraction, int)) \
            else mpmath.mpmathify(s)
        coeffs = mpmath.taylor(mpmath.rgamma, s, maxorder)
        out = [coeffs[j] * mpmath.factorial(j) for j in range(maxorder + 1)]
    with mp.workdps(DPS):
        return [+v for v in out]


def _gamma_derivatives(s, maxorder: int) -> list:
    with mp.workdps(DPS + 20):
        coeffs = mpmath.taylor(mpmath.gamma, s, maxorder)
        out = [coeffs[j] * mpmath.factorial(j) for j in range(maxorder + 1)]
    with mp.workdps(DPS):
        return [+v for v in out]


def _is_gamma_pole(z0: Fraction) -> bool:
    return z0.denominator == 1 and z0 <= 0


def _mp(q) -> mpmath.mpf:
    q = Fraction(q)
    return mpmath.mpf(q.numerator) / q.denominator


def _zeta_from_gamma_block(z0: Fraction, B: dict) -> dict:
    """Gamma*zeta principal part {k: B_k (z-z0)^-k} -> zeta Laurent data {q: coeff of (z-z0)^(-q-1)}."""
    top = max(B) if B else 0
    g = reciprocal_gamma_derivatives(z0, top + 1)
    g = [g[j] / mpmath.factorial(j) for j in range(len(g))]
    pole = _is_gamma_pole(z0)
    out = {}
    mrange = range(0, top) if pole else range(1, top + 1)
    for m in mrange:
        out[m - 1] = mpmath.fsum(B.get(k, 0) * g[k - m] for k in range(max(m, 1), top + 1))
    if pole and top == 0:
        out = {}
    return out


def _zeta_to_gamma_block(z0: Fraction, Z: dict) -> dict:
    """Inverse of ``_zeta_from_gamma_block`` (triangular solve)."""
    if not Z:
        return {}
    pole = _is_gamma_pole(z0)
    mmax = max(q + 1 for q in Z)
    top = mmax + 1 if pole else mmax
    g = reciprocal_gamma_derivatives(z0, top + 1)
    g = [g[j] / mpmath.factorial(j) for j in range(len(g))]
    shift = 1 if pole else 0
    if g[shift] == 0:
        raise SpectralError("degenerate reciprocal-gamma factor")
    B: dict = {}
    for m in range(mmax, -1 if pole else 0, -1):
        if not pole and m == 0:
            break
        k = m + shift
        acc = Z.get(m - 1, 0) - mpmath.fsum(B.get(kk, 0) * g[kk - m] for kk in range(k + 1, top + 1))
        B[k] = acc / g[shift]
    return {k: v for k, v in B.items()}


def _heat_to_gamma_blocks(e: AsymptoticExpansion) -> dict:
    """Heat term c t^s (ln t)^i contributes c (-1)^i i! (z + s)^(-i-1) to Gamma(z) zeta(z)."""
    blocks: dict = {}
    for t in e.terms:
        z0 = -Fraction(t.s)
        b = blocks.setdefault(z0, {})
        b[t.q + 1] = b.get(t.q + 1, 0) + t.coeff * (-1) ** t.q * mpmath.factorial(t.q)
    return blocks


def _gamma_blocks_to_heat(blocks: dict) -> list:
    terms = []
    for z0, B in blocks.items():
        for k in sorted(B):
            i = k - 1
            terms.append(ExpansionTerm(-z0, i, B[k] * (-1) ** i / mpmath.factorial(i)))
    return _sorted_heat(terms)


def _sorted_heat(terms):
    return sorted(terms, key=lambda t: (t.s, -t.q))


def _heat_to_resolvent(e: AsymptoticExpansion, K: int) -> AsymptoticExpansion:
    by_s: dict = {}
    for t in e.terms:
        by_s.setdefault(Fraction(t.s), {})[t.q] = t.coeff
    terms = []
    gK = mpmath.gamma(K)
    for s, block in by_s.items():
        a = Fraction(K) + s
        if _is_gamma_pole(a):
            raise SpectralError(f"K = {K} is too small for the heat term t^{s}: Gamma(K+s) has a pole")
        top = max(block)
        gd = _gamma_derivatives(_mp(a), top)
        for l in range(top + 1):
            r = mpmath.fsum(block.get(i, 0) * mpmath.binomial(i, l) * gd[i - l] for i in range(l, top + 1))
            terms.append(ExpansionTerm(-a, l, (-1) ** l * r / gK))
    return AsymptoticExpansion("resolvent", sorted(terms, key=lambda t: (-t.s, -t.q)), K)


def _resolvent_to_heat(e: AsymptoticExpansion) -> AsymptoticExpansion:
    K = e.K
    if K is None:
        raise SpectralError("resolvent expansion without K")
    by_s: dict = {}
    for t in e.terms:
        by_s.setdefault(Fraction(t.s), {})[t.q] = t.coeff
    terms = []
    gK = mpmath.gamma(K)
    for sig, block in by_s.items():
        a = -sig
        s = a - K
        top = max(block)
        gd = _gamma_derivatives(_mp(a), top)
        c: dict = {}
        for l in range(top, -1, -1):
            # r_l * Gamma(K) (-1)^l = sum_{i >= l} c_i binom(i, l) Gamma^{(i-l)}(a)
            rhs = block.get(l, 0) * gK * (-1) ** l
            rhs -= mpmath.fsum(c[i] * mpmath.binomial(i, l) * gd[i - l] for i in range(l + 1, top + 1))
            c[l] = rhs / gd[0]
        for i, v in c.items():
            terms.append(ExpansionTerm(s, i, v))
    return AsymptoticExpansion("heat", _sorted_heat(terms))


def expansion_transform(e: AsymptoticExpansion, to: str, K: int | None = None) -> AsymptoticExpansion:
    """Convert between heat, zeta and resolvent expansions (heat is the hub)."""
    with mp.workdps(DPS):
        if to == e.kind and (to != "resolvent" or K is None or K == e.K):
            return AsymptoticExpansion(e.kind, list(e.terms), e.K)
        if e.kind == "heat":
            heat = e
        elif e.kind == "zeta":
            blocks = {}
            for z0 in e.locations():
                blocks[z0] = _zeta_to_gamma_block(z0, e.block(z0))
            heat = AsymptoticExpansion("heat", _gamma_blocks_to_heat(blocks))
        elif e.kind == "resolvent":
            heat = _resolvent_to_heat(e)
        else:
            raise SpectralError(f"unsupported expansion kind {e.kind!r}")
        if to == "heat":
            return heat
        if to == "zeta":
            terms = []
            for z0, B in _heat_to_gamma_blocks(heat).items():
                for q, c in sorted(_zeta_from_gamma_block(z0, B).items(), reverse=True):
                    terms.append(ExpansionTerm(z0, q, c))
            terms.sort(key=lambda t: (-t.s, -t.q))
            return AsymptoticExpansion("zeta", terms)
        if to == "resolvent":
            if K is None:
                raise SpectralError("resolvent transform needs K")
            return _heat_to_resolvent(heat, K)
        raise SpectralError(f"unsupported target kind {to!r}")


# --------------------------------------------------------------------------
# residues and tau functionals


def _gamma_half(h: int) -> tuple:
    """Gamma(h/2) as (rational, pi_half_power) for a positive integer h."""
    if h % 2 == 0:
        return Fraction(math.factorial(h // 2 - 1)), 0
    m = (h - 1) // 2
    return Fraction(math.factorial(2 * m), 4 ** m * math.factorial(m)), 1


def sphere_monomial_integral(alpha: Sequence[int], n: int) -> ExactConstant:
    """Exact integral of xi^alpha over the unit sphere S^{n-1}."""
    alpha = tuple(alpha) if alpha else (0,) * n
    if len(alpha) != n:
        raise ValueError("multi-index length differs from the dimension")
    if any(a < 0 for a in alpha):
        raise ValueError("negative exponents are not integrable monomials")
    if any(a % 2 for a in alpha):
        return ExactConstant(0)
    num, pnum = Fraction(2), 0
    for a in alpha:
        r, p = _gamma_half(a + 1)
        num *= r
        pnum += p
    den, pden = _gamma_half(sum(alpha) + n)
    return ExactConstant(num / den, pnum - pden)


def wodzicki_residue(a: MatrixSymbol) -> ExactConstant:
    """(2 pi)^{-n} int_{T^n} int_{S^{n-1}} tr a_{-n}; Lebesgue measure on T^n."""
    re, im = wodzicki_residue_parts(a)
    if im.rational != 0:
        raise SymbolError("residue has a nonzero imaginary part; use wodzicki_residue_parts")
    return re


def wodzicki_residue_parts(a: MatrixSymbol) -> tuple:
    """Real and imaginary parts of the residue as exact constants."""
    n = a.dim
    if a.window_low > -n and not a.complete:
        raise SymbolError(f"symbol window stops above degree {-n}; the residue is not determined")
    total_re = ExactConstant(0)
    total_im = ExactConstant(0)
    zero = (0,) * n
    for i in range(a.rank):
        for (k, alpha, w), c in a.entries[i][i].items():
            if k != zero or sum(alpha) - w != -n:
                continue
            if any(e < 0 for e in alpha):
                raise SymbolError("degree -n term with a negative coordinate power is not integrable")
            integral = sphere_monomial_integral(alpha, n)
            total_re = total_re + integral * c.re
            total_im = total_im + integral * c.im
    return total_re, total_im


@dataclass
class TauTable:
    values: dict
    provenance: str
    pole_at_zero: bool

    def __getitem__(self, q):
        if q not in self.values:
            if q == -1 and self.pole_at_zero:
                raise SpectralError("tau_{-1} is undefined: z = 0 is a pole")
            raise KeyError(q)
        return self.values[q]

    def to_json(self) -> dict:
        return {"values": {str(k): _fmt_num(v) for k, v in sorted(self.values.items())},
                "provenance": self.provenance, "pole_at_zero": self.pole_at_zero}


def tau_functionals(zeta_expansion: AsymptoticExpansion, Q: int, pole_tolerance=0,
                    want_regular: bool = False) -> TauTable:
    """tau_q = coefficient of z^(-q-1) in Tr(A P^{-z}) at z = 0, for q = 0..Q."""
    if zeta_expansion.kind != "zeta":
        raise SpectralError("tau functionals need a zeta expansion")
    block = zeta_expansion.block(0)
    tol = mpmath.mpmathify(pole_tolerance)
    pole = any(q >= 0 and abs(c) > tol for q, c in block.items())
    values = {q: block.get(q, mpmath.mpf(0)) for q in range(Q + 1)}
    if not pole:
        values[-1] = block.get(-1, mpmath.mpf(0))
    elif want_regular:
        raise SpectralError("tau_{-1} is undefined: z = 0 is a pole")
    return TauTable(values, "zeta expansion at z = 0", pole)


# --------------------------------------------------------------------------
# Weyl counting and Dixmier traces


@dataclass
class WeylResult:
    count: int
    coefficient: float
    exponent: Fraction
    relative_spread: float


def weyl_count(E: EigenLattice, t, group=None, m: int | None = None, samples: int = 16) -> WeylResult:
    """Exact count of eigenvalues <= t and a fit N(s) ~ c s^{m/order} on [t/4, t]."""
    with mp.workdps(DPS):
        t = mpmath.mpmathify(t)
        if not E.values:
            raise SpectralError("empty lattice")
        if t < min(E.values):
            raise SpectralError("threshold lies below the first eigenvalue")
        outer = max(E.shells)
        boundary = [v for v, s in zip(E.values, E.shells) if s == outer]
        if E.free_dim and boundary and min(boundary) <= t:
            raise WindowTooSmall("eigenvalues below the threshold reach the window boundary")
        if m is None:
            m = group.orbit_space_dim if group is not None else E.free_dim
        exponent = Fraction(m, E.growth_order)
        vals = sorted(E.values)
        count = _count_le(vals, t)
        ss = [t * (mpmath.mpf(1) / 4 + mpmath.mpf(3) / 4 * j / (samples - 1)) for j in range(samples)]
        xs = [s ** _mp(exponent) for s in ss]
        ns = [_count_le(vals, s) for s in ss]
        c = mpmath.fsum(x * n for x, n in zip(xs, ns)) / mpmath.fsum(x * x for x in xs)
        ratios = [n / x for n, x in zip(ns, xs)]
        spread = (max(ratios) - min(ratios)) / c
        return WeylResult(count, float(c), exponent, float(spread))


def _count_le(sorted_vals, t) -> int:
    import bisect

    return bisect.bisect_right(sorted_vals, t)


@dataclass
class DixmierResult:
    value: float
    decay_exponent: float
    points: list


def dixmier_estimate(E: EigenLattice, A_weights=None) -> DixmierResult:
    """Log-averaged partial sums of singular values, extrapolated in N.

    Singular values are |A_weights(k)| (default: the lattice weights) sorted
    decreasingly.  S(N) = a ln N + b + c/N is fitted over a geometric grid of N and
    ``a`` is returned.
    """
    raw = E.weights if A_weights is None else [A_weights(k) for k in E.modes]
    mus = [float(abs(w)) for w in raw]
    outer = max(E.shells)
    boundary_max = max((mu for mu, s in zip(mus, E.shells) if s == outer), default=0.0)
    mus.sort(reverse=True)
    # entries larger than everything on the boundary are complete in the window
    reliable = sum(1 for mu in mus if mu > boundary_max)
    if reliable < 200:
        raise WindowTooSmall("too few reliable singular values for a Dixmier estimate")
    prefix = [0.0]
    for mu in mus[:reliable + 1]:
        prefix.append(prefix[-1] + mu)
    # decay exponent from the tail of the reliable range
    n1, n2 = reliable // 10, reliable - 1
    if mus[n1] <= 0 or mus[n2] <= 0:
        decay = math.inf
    else:
        decay = -math.log(mus[n2] / mus[n1]) / math.log((n2 + 1) / (n1 + 1))
    if decay < 0.95:
        raise SpectralError(f"singular values decay like n^-{decay:.3f}; not in the (1, infinity) class")
    grid = sorted({int(round(reliable * 10 ** (-2 + 2 * j / 24))) for j in range(25)})
    grid = [N for N in grid if 20 <= N < reliable]
    rows, rhs = [], []
    for N in grid:
        s = 0.5 * (prefix[N] + prefix[N + 1])
        rows.append([math.log(N + 0.5), 1.0, 1.0 / (N + 0.5)])
        rhs.append(s)
    import numpy as np

    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return DixmierResult(float(sol[0]), decay, list(zip(grid, rhs)))
