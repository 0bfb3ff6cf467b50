import itertools
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from psicross.cocycle import (
    CocycleError,
    MissingCertificate,
    assemble_cocycle,
    character_via_commutator,
    cocycle_constants,
    commutator_ops,
    connes_character,
    elementary_symmetric,
    even_constant,
    fredholm_completion,
    index_distribution,
    odd_constant,
    parse_test_function,
    tilde_factorial,
)
from psicross.crossed import AlgebraElement, DiracOperator, ModeOperator
from psicross.exact import ExactConstant, ExactScalar, TrigPolynomial
from psicross.microlocal import GroupDescriptor
from psicross.parametrix import neumann_parametrix
from psicross.symbols import MatrixSymbol, multi_indices

from . import oracles
from .strategies import scalars

Z1, Z2 = (0,), (0, 0)
TRIVIAL = GroupDescriptor.finite_cyclic(1, 1)
D2 = DiracOperator.flat_torus(2)
mode = TrigPolynomial.mode


# --------------------------------------------------------------------------
# constants


def test_elementary_symmetric_examples():
    assert all(elementary_symmetric(0, N) == 1 for N in range(1, 8))
    assert elementary_symmetric(1, 3) == 3
    assert elementary_symmetric(2, 4) == 11
    assert elementary_symmetric(4, 4) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6), st.integers(1, 9))
def test_elementary_symmetric_generating_function(q, N):
    assert elementary_symmetric(q, N) == oracles.elementary_symmetric_generating(q, N - 1)


def test_tilde_factorial():
    assert tilde_factorial((0, 0)) == 2
    assert tilde_factorial((1, 2)) == 2 * 5


def test_even_constant_examples():
    assert even_constant(1, (0, 0), 0) == Fraction(1, 2)
    assert even_constant(1, (0, 0), 1) == 0
    # k = (1, 0): -(1/(1! * 2 * 3)) * sigma_0(2)
    assert even_constant(1, (1, 0), 0) == Fraction(-1, 6)
    assert even_constant(1, (1, 0), 1) == Fraction(-1, 6)


def test_even_table_against_reference():
    table = cocycle_constants("even", 2, 3)
    assert table.prefactor == 1
    for (m, k, q), c in table.table.items():
        assert isinstance(c, Fraction)
        assert c == oracles.cm_even_reference(m, k, q)
        assert (c == 0) == (q >= sum(k) + m)
        if c:
            assert (c > 0) == (sum(k) % 2 == 0)


def test_odd_constant_examples():
    with mpmath.workdps(50):
        assert abs(odd_constant(0, (0,), 0) - mpmath.sqrt(mpmath.pi)) < 1e-40
        assert abs(odd_constant(0, (0,), 0) - mpmath.mpf("1.772453851")) < 1e-9
        table = cocycle_constants("odd", 1, 2)
        assert abs(table.prefactor - mpmath.sqrt(2j)) < 1e-40


def test_odd_table_against_polygamma():
    table = cocycle_constants("odd", 1, 2, max_q=3)
    for (m, k, q), c in table.table.items():
        s = sum(k)
        g = oracles.gamma_derivatives_polygamma(mpmath.mpf(s + m) + mpmath.mpf(1) / 2, 3)[q]
        kf = math.prod(math.factorial(x) for x in k)
        want = (-1) ** s * g / (kf * tilde_factorial(k) * math.factorial(q))
        assert abs(c - want) < 1e-12 * max(1, abs(want))
        if q == 0:
            assert (c > 0) == (s % 2 == 0)


def test_constants_reject_bad_input():
    with pytest.raises(ValueError):
        even_constant(1, (0,), 0)
    with pytest.raises(ValueError):
        cocycle_constants("mixed", 1, 1)


# --------------------------------------------------------------------------
# commutators


def test_commutator_with_constant_vanishes():
    assert commutator_ops(TrigPolynomial.constant(2, 3), D2, ["d"]).is_zero()
    assert commutator_ops(TrigPolynomial.constant(2, 3), D2, [("nabla", 2)]).is_zero()


def test_commutator_with_plane_wave():
    """sigma_D(xi + e_1) - sigma_D(xi) is the off-diagonal unit matrix."""
    da = commutator_ops(mode((1, 0)), D2, ["d"])
    want = MatrixSymbol.from_terms(2, [(0, 1, 1, (1, 0), Z2, 0), (1, 0, 1, (1, 0), Z2, 0)], rank=2)
    assert da.same_terms(want)
    # no terms above degree 0: the window can be lowered to order 0
    assert da.with_window(0, 3).same_terms(want)


def test_nabla_of_plane_wave():
    """|xi + e_1|^2 - |xi|^2 = 2 xi_1 + 1 on both chiralities."""
    na = commutator_ops(mode((1, 0)), D2, ["nabla"])
    terms = [(i, i, c, (1, 0), a, 0) for i in (0, 1) for c, a in ((2, (1, 0)), (1, Z2))]
    assert na.same_terms(MatrixSymbol.from_terms(2, terms, rank=2))


def test_commutators_on_families():
    phi = AlgebraElement(TRIVIAL, {0: mode((2,), 3)})
    D1 = DiracOperator.flat_torus(1)
    fam = commutator_ops(phi, D1, ["d", "nabla"])
    direct = commutator_ops(mode((2,), 3), D1, ["d", "nabla"])
    assert fam.members[0].same_terms(direct)
    with pytest.raises(ValueError):
        commutator_ops(mode((1,)), D1, ["curl"])


# --------------------------------------------------------------------------
# Fredholm completion


def test_completion_of_exact_inverse():
    P = MatrixSymbol.from_terms(1, [(2, Z1, Z1, 0)])
    Q = MatrixSymbol.from_terms(1, [(Fraction(1, 2), Z1, Z1, 0)])
    pair = fredholm_completion(P, Q)
    assert pair.verify()
    assert pair.P_tilde[0][1].is_zero() and pair.P_tilde[1][0].is_zero()
    assert pair.P_tilde[1][1].same_terms(MatrixSymbol.from_terms(1, [(Fraction(-1, 2), Z1, Z1, 0)]))


def test_completion_of_zero_pair():
    z = MatrixSymbol.zero(1, 1, 0, 4)
    pair = fredholm_completion(z, z)
    one = MatrixSymbol.identity(1)
    assert pair.verify()
    assert pair.P_tilde[0][0].is_zero() and pair.P_tilde[1][1].is_zero()
    assert pair.P_tilde[0][1].same_terms(one) and pair.P_tilde[1][0].same_terms(one)


def test_completion_of_parametrix_pair():
    """P = 1 + e^{ix}|xi|^{-1}-type order-0 symbol with its Neumann parametrix."""
    P = MatrixSymbol.from_terms(1, [(1, Z1, Z1, 0), (1, (1,), Z1, 1)])
    Q = neumann_parametrix(P, depth=4).q
    assert fredholm_completion(P, Q, depth=4).verify()


@st.composite
def order_zero(draw):
    terms = [(draw(scalars), (draw(st.integers(-1, 1)),), Z1, draw(st.integers(0, 2)))
             for _ in range(draw(st.integers(1, 3)))]
    return MatrixSymbol.from_terms(1, terms, order=0, depth=3)


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(order_zero(), order_zero())
def test_completion_identity_for_random_pairs(P, Q):
    assert fredholm_completion(P, Q, depth=3).verify()


def test_completion_rejects_mismatch():
    with pytest.raises(TypeError):
        fredholm_completion(MatrixSymbol.identity(1), ModeOperator.identity(1))


# --------------------------------------------------------------------------
# Connes character


def _shift_col(k, c):
    return {((k[0] + 1,), 0): ExactScalar(1)} if k[0] >= 0 else {(k, 0): ExactScalar(1)}


def _unshift_col(k, c):
    if k[0] >= 1:
        return {((k[0] - 1,), 0): ExactScalar(1)}
    if k[0] == 0:
        return {((0,), 0): ExactScalar(3)}
    return {(k, 0): ExactScalar(1)}


SHIFT = ModeOperator(1, 1, _shift_col)
UNSHIFT = ModeOperator(1, 1, _unshift_col)


def test_character_of_invertible_pair():
    P = ModeOperator.from_symbol(MatrixSymbol.from_terms(1, [(1, (1,), Z1, 0)]))
    Q = ModeOperator.from_symbol(MatrixSymbol.from_terms(1, [(1, (-1,), Z1, 0)]))
    phi = AlgebraElement(TRIVIAL, {0: TrigPolynomial(1, {Z1: 2, (1,): 1})})
    assert connes_character(phi, P, Q, 2, 5, certificate=True).value == 0


def test_character_of_phase_of_dx():
    """sign(D_x) with kernel and cokernel both the constants."""
    sign = ModeOperator.diagonal_rule(1, lambda k, c: ExactScalar((k[0] > 0) - (k[0] < 0)))
    one = AlgebraElement.unit(TRIVIAL)
    for n in (1, 2, 3):
        assert connes_character(one, sign, sign, n, 4, certificate=True).value == 0


def test_character_of_shift():
    """Kernel 0, cokernel spanned by e_0: the character on 1 is -1."""
    one = AlgebraElement.unit(TRIVIAL)
    f = AlgebraElement(TRIVIAL, {0: TrigPolynomial(1, {Z1: 2, (1,): 5})})
    for phi, want in ((one, -1), (f, -2)):
        values = {connes_character(phi, SHIFT, UNSHIFT, n, 6, certificate=True).value for n in (1, 2, 3, 4)}
        assert values == {ExactScalar(want)}
        assert character_via_commutator(phi, SHIFT, UNSHIFT, 6) == ExactScalar(want)


@st.composite
def finite_rank(draw):
    keys = draw(st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=1, max_size=3, unique=True))
    return ModeOperator.finite_rank(1, {(((i,), 0), ((j,), 0)): draw(scalars) for i, j in keys})


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(finite_rank(), finite_rank(), scalars)
def test_character_is_independent_of_n(K, L, c):
    """Finite-rank perturbations keep the index -1; phi = c commutes with P and Q."""
    P, Q = SHIFT + K, UNSHIFT + L
    phi = AlgebraElement(TRIVIAL, {0: TrigPolynomial.constant(1, c)})
    values = [connes_character(phi, P, Q, n, 8, certificate=True).value for n in (1, 2, 3, 4)]
    assert all(v == -c for v in values)
    assert character_via_commutator(phi, P, Q, 8) == -c


def test_character_needs_certificate():
    one = AlgebraElement.unit(TRIVIAL)
    with pytest.raises(MissingCertificate):
        connes_character(one, SHIFT, UNSHIFT, 2, 4)
    with pytest.raises(MissingCertificate):
        connes_character(one, SHIFT, UNSHIFT, 2, 4, certificate=False)


# --------------------------------------------------------------------------
# index distribution


def test_parse_test_function():
    assert parse_test_function("2cos") == {1: ExactScalar(1), -1: ExactScalar(1)}
    assert parse_test_function("1+2sin3") == {0: ExactScalar(1), 3: ExactScalar(0, -1), -3: ExactScalar(0, 1)}
    with pytest.raises(ValueError):
        parse_test_function("2tan")


def test_index_distribution_examples():
    assert index_distribution("circle-rotation", "2cos") == ExactScalar(2)
    assert index_distribution("circle-rotation", "1") == ExactScalar(1)
    assert index_distribution("dx-rotation", "1+2cos+3sin2") == ExactScalar(0)
    lap = MatrixSymbol.from_terms(2, [(1, Z2, (2, 0), 0), (1, Z2, (0, 2), 0)])
    assert index_distribution("trivial-elliptic", "1", symbol=lap) == ExactScalar(0)
    with pytest.raises(CocycleError):
        index_distribution("sphere", "1")


def test_zero_operator_index_exhaustive():
    """Pairing with the Dirac comb: index(f) = sum_n fhat(n) for every bandwidth up to 16."""
    values = [0, 1, -1, Fraction(1, 2)]
    for width in range(17):
        for coeffs in itertools.product(values, repeat=3):
            f = {}
            for n, c in zip((-width, 0, width), coeffs):
                f[n] = f.get(n, 0) + c
            want = ExactScalar(sum(f.values()))
            assert index_distribution("circle-rotation", f) == want
    # linear in f
    f, g = {3: 2, -1: Fraction(1, 3)}, {3: -1, 16: 5}
    fg = {n: f.get(n, 0) + g.get(n, 0) for n in set(f) | set(g)}
    lhs = index_distribution("circle-rotation", fg)
    assert lhs == index_distribution("circle-rotation", f) + index_distribution("circle-rotation", g)


# --------------------------------------------------------------------------
# cocycle assembly


def test_all_zero_inputs():
    z = TrigPolynomial(2, {})
    assert assemble_cocycle("even", 1, [z, z, z], D2).value == ExactConstant(0)


def test_constant_inputs_give_zero():
    c = TrigPolynomial.constant(2, 1)
    rep = assemble_cocycle("even", 1, [c, c, c], D2)
    assert rep.value == ExactConstant(0)
    assert all(t.contribution == ExactConstant(0) for t in rep.terms)
    assert rep.discarded and all(sum(k) == 3 for k, _ in rep.discarded)


def test_phi0_graded_cancellation():
    D1 = DiracOperator.flat_torus(1)
    assert assemble_cocycle("even", 0, [TrigPolynomial.constant(1, 1)], D1).value == 0


def test_phi2_plane_waves():
    """Only k = 0 survives: (1/2) res(gamma a0 da1 da2 |D|^-2); a0 da1 da2 = diag(i, -i) after
    the two unit commutators, gamma turns it into i * 1, and res |xi|^-2 = 2 pi on T^2."""
    a = [mode((-1, -1)), mode((1, 0)), mode((0, 1))]
    rep = assemble_cocycle("even", 1, a, D2)
    assert abs(complex(rep.value) - 2j * math.pi) < 1e-12
    swapped = assemble_cocycle("even", 1, [a[0], a[2], a[1]], D2)
    assert abs(complex(swapped.value) + 2j * math.pi) < 1e-12
    assert len(rep.terms) == len({(t.k, t.q) for t in rep.terms})


def test_cocycle_input_errors():
    c = TrigPolynomial.constant(2, 1)
    with pytest.raises(CocycleError):
        assemble_cocycle("even", 1, [c, c], D2)
    with pytest.raises(CocycleError):
        G = GroupDescriptor.finite_cyclic(2, 2, translation=(0, Fraction(1, 2)))
        assemble_cocycle("even", 1, [AlgebraElement.unit(G)] * 3, D2)


def test_multi_indices_cover_table():
    table = cocycle_constants("even", 1, 2)
    ks = {k for (_, k, _) in table.table}
    assert ks == {k for t in range(3) for k in multi_indices(2, t)}
