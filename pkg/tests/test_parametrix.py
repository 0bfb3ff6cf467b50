from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from psicross.cones import ConicRegion, abs_ratio_cone
from psicross.exact import ExactScalar
from psicross.microlocal import GroupDescriptor, classify_symbol, transversal_cotangent
from psicross.parametrix import (
    CutoffMarker,
    ParametrixError,
    PreconditionError,
    atiyah_completion,
    neumann_parametrix,
    transversal_parametrix,
)
from psicross.symbols import MatrixSymbol, compose, linear_combine

Z1, Z2 = (0,), (0, 0)
CIRCLE1 = GroupDescriptor.circle(2, 1)


def sym1(*terms, **kw):
    return MatrixSymbol.from_terms(1, terms, **kw)


def t2(*terms, **kw):
    return MatrixSymbol.from_terms(2, terms, **kw)


def assert_two_sided(p, res, depth):
    one = MatrixSymbol.identity(p.dim, p.rank)
    for prod in (compose(res.q, p, depth), compose(p, res.q, depth)):
        rem = linear_combine([1, -1], [one, prod]).truncate(depth)
        assert rem.is_zero()


def test_monomial_inverse():
    res = neumann_parametrix(sym1((1, Z1, (2,), 0)), depth=3)
    assert res.q.same_terms(sym1((1, Z1, (0,), 2)))
    assert res.left_remainder.is_zero() and res.right_remainder.is_zero()
    assert res.remainder_order == -3 and res.certificate == "elliptic"


def test_xi_squared_plus_one():
    """Hand expansion: 1/(xi^2 + 1) = xi^-2 - xi^-4 + ... ; the window of depth 3 ends at degree -4."""
    res = neumann_parametrix(sym1((1, Z1, (2,), 0), (1, Z1, (0,), 0)), depth=3)
    assert res.q.order == -2
    assert res.q.same_terms(sym1((1, Z1, (0,), 2), (-1, Z1, (0,), 4), order=-2, depth=3))


def test_xi_squared_plus_eix():
    p = sym1((1, Z1, (2,), 0), (1, (1,), (0,), 0))
    res = neumann_parametrix(p, depth=3)
    want = sym1((1, Z1, (0,), 2), (-1, (1,), (0,), 4), order=-2, depth=3)
    assert res.q.same_terms(want)
    res4 = neumann_parametrix(p, depth=4)
    extra = sym1((1, Z1, (0,), 2), (-1, (1,), (0,), 4), (2, (1,), (1,), 6), order=-2, depth=4)
    assert res4.q.same_terms(extra)


@pytest.mark.parametrize("p", [
    sym1((1, Z1, (2,), 0), (1, Z1, (0,), 0)),
    sym1((1, Z1, (2,), 0), (1, (1,), (0,), 0)),
    t2((1, Z2, (2, 0), 0), (1, Z2, (0, 2), 0), (1, Z2, Z2, 0)),
])
@pytest.mark.parametrize("depth", [1, 2, 4, 6])
def test_remainder_vanishes_two_sided(p, depth):
    res = neumann_parametrix(p, depth=depth)
    assert_two_sided(p, res, depth)


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(-2, 2), st.integers(-2, 2), st.integers(1, 3), st.integers(1, 5))
def test_random_elliptic_remainder(a, b, c, depth):
    p = sym1((c, Z1, (2,), 0), (a, (1,), (1,), 0), (b, (-1,), (0,), 0), (1, Z1, (0,), 0))
    assert_two_sided(p, neumann_parametrix(p, depth=depth), depth)


def test_rank_two_dirac_type():
    """2x2 symbol [[1, xi], [xi, -1]]-type with invertible principal part."""
    terms = [(0, 1, 1, Z1, (1,), 0), (1, 0, 1, Z1, (1,), 0), (0, 0, 1, Z1, (0,), 0), (1, 1, -1, Z1, (0,), 0)]
    p = MatrixSymbol.from_terms(1, terms, rank=2)
    res = neumann_parametrix(p, depth=3)
    assert_two_sided(p, res, 3)


def test_non_elliptic_rejected():
    with pytest.raises(ParametrixError):
        neumann_parametrix(t2((1, Z2, Z2, 0), (1, Z2, (0, 2), 0)), depth=2)


def test_transversal_example():
    p = t2((1, Z2, Z2, 0), (1, Z2, (0, 2), 0))
    region = abs_ratio_cone(2, 1, 0, 2)
    res = transversal_parametrix(p, CIRCLE1, CutoffMarker.indicator(region), depth=3)
    assert res.certificate == "transversal"
    assert res.q.principal().same_terms(t2((1, Z2, (0, -2), 0)))
    assert res.remainder_tag.intersect(transversal_cotangent(CIRCLE1)).is_empty()
    assert res.remainder_tag.intersect(region).is_empty()
    assert classify_symbol(res.left_remainder, CIRCLE1).transversally_smoothing
    assert res.left_remainder.is_zero()


def test_transversal_full_cutoff_is_neumann():
    p = t2((1, Z2, (2, 0), 0), (1, Z2, (0, 2), 0), (1, Z2, Z2, 0))
    a = transversal_parametrix(p, CIRCLE1, CutoffMarker.one(2), depth=3)
    b = neumann_parametrix(p, depth=3)
    assert a.q == b.q and a.certificate == "elliptic"


def test_transversal_cutoff_too_small():
    p = t2((1, Z2, Z2, 0), (1, Z2, (0, 2), 0))
    with pytest.raises(PreconditionError):
        transversal_parametrix(p, CIRCLE1, CutoffMarker.indicator(abs_ratio_cone(2, 0, 1, 2)), depth=2)


def test_marker_algebra():
    a = CutoffMarker.indicator(abs_ratio_cone(2, 1, 0, 2))
    b = CutoffMarker.indicator(abs_ratio_cone(2, 1, 0, 3))
    ab = a * b
    assert ab.region.same_set(a.region.intersect(b.region))
    assert (a * a).region.same_set(a.region)
    assert (a * CutoffMarker.one(2)).region.same_set(a.region)
    assert not ab.transition().contains_point((1, 1))
    with pytest.raises(ValueError):
        CutoffMarker(ConicRegion.full(2), ConicRegion.full(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1), st.integers(1, 3), st.integers(0, 1), st.integers(1, 3))
def test_marker_soundness(b1, f1, b2, f2):
    """Tags of composed symbols cover the intersection of the factors' marker regions."""
    A = abs_ratio_cone(2, b1, 1 - b1, f1)
    B = abs_ratio_cone(2, b2, 1 - b2, f2)
    a = t2((1, (1, 0), (1, 0), 0), (2, Z2, Z2, 0)).with_tag(A)
    b = t2((1, Z2, (0, 1), 0), (1, (0, 1), Z2, 0)).with_tag(B)
    ab = compose(a, b, 2)
    assert ab.support_tag.contains(A.intersect(B))
    for pt in [(1, 0), (0, 1), (3, 1), (1, 3), (2, -1), (-5, 2)]:
        if A.contains_point(pt) and B.contains_point(pt):
            assert ab.support_tag.contains_point(pt)
    summed = linear_combine([1, 1], [a, compose(b, b, 2)])
    assert summed.support_tag.contains(A.union(B))


def test_atiyah_examples():
    q = t2((1, Z2, Z2, 0), (1, Z2, (0, 2), 0))
    region = abs_ratio_cone(2, 0, 1, 1)
    comp = atiyah_completion(q, CIRCLE1, CutoffMarker.indicator(region))
    assert comp.is_elliptic()
    marked = comp.piece_at((5, 1))
    assert marked.principal().same_terms(t2((1, Z2, (2, 0), 0), (1, Z2, (0, 2), 0)))
    assert comp.piece_at((1, 5)) == q
    ell = t2((1, Z2, (2, 0), 0), (1, Z2, (0, 2), 0))
    empty = CutoffMarker(ConicRegion.empty(2), ConicRegion.full(2))
    assert atiyah_completion(ell, CIRCLE1, empty).pieces[0][1] == ell
    fin = GroupDescriptor.finite_cyclic(2, 2, translation=(0, Fraction(1, 2)))
    assert atiyah_completion(ell, fin, CutoffMarker.indicator(region)).pieces[0][1] == ell


def test_atiyah_pair_and_weight():
    q = t2((1, Z2, Z2, 0), (1, Z2, (0, 2), 0))
    m1 = CutoffMarker.indicator(abs_ratio_cone(2, 0, 1, 1))
    m2 = CutoffMarker.indicator(abs_ratio_cone(2, 0, 1, 3))
    comp = atiyah_completion(q, CIRCLE1, (m1, m2), weight=2)
    assert comp.eigenvalue((6, 1)) == ExactScalar(2 + 2 * (1 + 36))
    assert comp.eigenvalue((2, 1)) == ExactScalar(2)


def test_atiyah_rejects_bad_marker():
    q = t2((1, Z2, Z2, 0), (1, Z2, (0, 2), 0))
    with pytest.raises(PreconditionError):
        atiyah_completion(q, CIRCLE1, CutoffMarker.indicator(abs_ratio_cone(2, 1, 0, 1)))
    with pytest.raises(PreconditionError):
        atiyah_completion(t2((1, (1, 0), (0, 2), 0)), CIRCLE1, CutoffMarker.indicator(abs_ratio_cone(2, 0, 1, 1)))
