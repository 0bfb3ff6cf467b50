"""Exact scalars: Gaussian rationals, trigonometric polynomials on the torus,
and rational multiples of half-integer powers of pi."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

Mode = tuple  # tuple[int, ...]


class ExactScalar:
    """Complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    @classmethod
    def coerce(cls, v) -> "ExactScalar":
        if isinstance(v, ExactScalar):
            return v
        if isinstance(v, complex):
            return cls(Fraction(v.real), Fraction(v.imag))
        if isinstance(v, str):
            return parse_scalar(v)
        return cls(v)

    def __add__(self, o):
        o = ExactScalar.coerce(o)
        return ExactScalar(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = ExactScalar.coerce(o)
        return ExactScalar(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return ExactScalar.coerce(o) - self

    def __neg__(self):
        return ExactScalar(-self.re, -self.im)

    def __mul__(self, o):
        if isinstance(o, (int, Fraction)):
            return ExactScalar(self.re * o, self.im * o)
        o = ExactScalar.coerce(o)
        return ExactScalar(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self):
        return ExactScalar(self.re, -self.im)

    def inverse(self):
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("inverse of exact zero")
        return ExactScalar(self.re / n, -self.im / n)

    def __truediv__(self, o):
        return self * ExactScalar.coerce(o).inverse()

    def __rtruediv__(self, o):
        return ExactScalar.coerce(o) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        for _ in range(k):
            out = out * self
        return out

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, o):
        if isinstance(o, (int, Fraction, ExactScalar, complex)):
            o = ExactScalar.coerce(o)
            return self.re == o.re and self.im == o.im
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ExactScalar({format_scalar(self)!r})"


ZERO = ExactScalar(0)
ONE = ExactScalar(1)
I = ExactScalar(0, 1)


_QUARTER_PHASES = {Fraction(0): ExactScalar(1), Fraction(1, 4): ExactScalar(0, 1),
                   Fraction(1, 2): ExactScalar(-1), Fraction(3, 4): ExactScalar(0, -1)}


def root_of_unity_phase(turns) -> ExactScalar:
    """``exp(2*pi*i*turns)`` for rational ``turns`` with denominator dividing 4."""
    t = Fraction(turns) % 1
    try:
        return _QUARTER_PHASES[t]
    except KeyError:
        raise ValueError(f"phase exp(2 pi i * {t}) is not a Gaussian rational") from None


def _frac(s: str) -> Fraction:
    return Fraction(s.strip())


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_scalar(v: ExactScalar) -> str:
    """Canonical text: ``"p/q"`` for reals, ``"a+bi"`` style otherwise."""
    if v.im == 0:
        return format_rational(v.re)
    im = format_rational(v.im)
    if v.re == 0:
        return f"{im}*i"
    sign = "+" if v.im > 0 else ""
    return f"{format_rational(v.re)}{sign}{im}*i"


_SCALAR_RE = re.compile(r"^\s*(?P<re>[+-]?\d+(?:/\d+)?)?(?P<im>[+-]?\d+(?:/\d+)?\*i)?\s*$")


def parse_scalar(s: str) -> ExactScalar:
    s = s.strip()
    if s in ("i", "+i"):
        return I
    if s == "-i":
        return -I
    m = _SCALAR_RE.match(s)
    if not m or not (m.group("re") or m.group("im")):
        raise ValueError(f"not an exact scalar: {s!r}")
    re_ = _frac(m.group("re")) if m.group("re") else Fraction(0)
    im_ = _frac(m.group("im")[:-2]) if m.group("im") else Fraction(0)
    return ExactScalar(re_, im_)


class TrigPolynomial:
    """Finite Fourier sum ``x -> sum_k c_k exp(i k.x)`` on the n-torus."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping[Mode, object] | None = None):
        self.dim = dim
        clean = {}
        for k, c in (terms or {}).items():
            k = tuple(int(v) for v in k)
            if len(k) != dim:
                raise ValueError(f"mode {k} does not match dimension {dim}")
            c = ExactScalar.coerce(c)
            if c:
                clean[k] = clean.get(k, ZERO) + c
                if not clean[k]:
                    del clean[k]
        self.terms = clean

    @classmethod
    def constant(cls, dim: int, c=1) -> "TrigPolynomial":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def mode(cls, k: Mode, c=1) -> "TrigPolynomial":
        return cls(len(k), {tuple(k): c})

    def __add__(self, o: "TrigPolynomial"):
        t = dict(self.terms)
        for k, c in o.terms.items():
            t[k] = t.get(k, ZERO) + c
        return TrigPolynomial(self.dim, t)

    def __neg__(self):
        return TrigPolynomial(self.dim, {k: -c for k, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if not isinstance(o, TrigPolynomial):
            o = ExactScalar.coerce(o)
            return TrigPolynomial(self.dim, {k: c * o for k, c in self.terms.items()})
        t: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in o.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                t[k] = t.get(k, ZERO) + c1 * c2
        return TrigPolynomial(self.dim, t)

    __rmul__ = __mul__

    def conjugate(self):
        return TrigPolynomial(self.dim, {tuple(-a for a in k): c.conjugate() for k, c in self.terms.items()})

    def translate(self, shift: Iterable) -> "TrigPolynomial":
        """``f(x - 2*pi*shift)`` for a rational shift vector.

        Only shifts whose phases are fourth roots of unity stay exact.
        """
        t = {}
        for k, c in self.terms.items():
            t[k] = c * root_of_unity_phase(-sum(Fraction(a) * Fraction(s) for a, s in zip(k, shift)))
        return TrigPolynomial(self.dim, t)

    def permute(self, matrix) -> "TrigPolynomial":
        """``f(M^{-1} x)`` for an integer permutation matrix M."""
        # f(M^{-1}x) = sum c_k exp(i k.M^T x) since M^{-1} = M^T
        t = {}
        for k, c in self.terms.items():
            nk = tuple(sum(matrix[i][j] * k[j] for j in range(self.dim)) for i in range(self.dim))
            t[nk] = c
        return TrigPolynomial(self.dim, t)

    def coefficient(self, k: Mode) -> ExactScalar:
        return self.terms.get(tuple(k), ZERO)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, o):
        return isinstance(o, TrigPolynomial) and self.dim == o.dim and self.terms == o.terms

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __repr__(self):
        body = " + ".join(f"({format_scalar(c)})e{list(k)}" for k, c in sorted(self.terms.items()))
        return f"TrigPolynomial({body or '0'})"


@dataclass(frozen=True)
class ExactConstant:
    """``rational * pi**(pi_half_power/2)``."""

    rational: Fraction
    pi_half_power: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rational", Fraction(self.rational))
        if self.rational == 0:
            object.__setattr__(self, "pi_half_power", 0)

    def __add__(self, o: "ExactConstant"):
        if self.rational == 0:
            return o
        if o.rational == 0:
            return self
        if o.pi_half_power != self.pi_half_power:
            raise ValueError("cannot add exact constants of different pi grades")
        return ExactConstant(self.rational + o.rational, self.pi_half_power)

    def __mul__(self, o):
        if isinstance(o, ExactConstant):
            return ExactConstant(self.rational * o.rational, self.pi_half_power + o.pi_half_power)
        return ExactConstant(self.rational * Fraction(o), self.pi_half_power)

    __rmul__ = __mul__

    def __float__(self):
        import math

        return float(self.rational) * math.pi ** (self.pi_half_power / 2)

    def to_mpf(self):
        import mpmath

        return mpmath.mpf(self.rational.numerator) / self.rational.denominator * mpmath.pi ** (
            mpmath.mpf(self.pi_half_power) / 2
        )


def format_constant(v: ExactConstant) -> str:
    q = format_rational(v.rational)
    j = v.pi_half_power
    if j == 0 or v.rational == 0:
        return q
    if j % 2 == 0:
        p = "pi" if j == 2 else f"pi^{j // 2}"
    else:
        p = f"pi^({j}/2)"
    return f"{q}*{p}"


_CONST_RE = re.compile(r"^\s*([+-]?\d+(?:/\d+)?)(?:\*pi(?:\^(?:\((-?\d+)/2\)|(-?\d+)))?)?\s*$")


def parse_constant(s: str) -> ExactConstant:
    m = _CONST_RE.match(s)
    if not m:
        raise ValueError(f"not an exact constant: {s!r}")
    q = Fraction(m.group(1))
    if "pi" not in s:
        return ExactConstant(q, 0)
    if m.group(2) is not None:
        return ExactConstant(q, int(m.group(2)))
    if m.group(3) is not None:
        return ExactConstant(q, 2 * int(m.group(3)))
    return ExactConstant(q, 2)


def format_exact(v) -> str:
    if isinstance(v, ExactConstant):
        return format_constant(v)
    if isinstance(v, (int, Fraction)):
        return format_rational(Fraction(v))
    return format_scalar(ExactScalar.coerce(v))
