"""Acceptance criteria 1-12, one PASS/FAIL line each (also echoed in the terminal summary)."""

import itertools
import random
import time
from fractions import Fraction

import mpmath

from psicross.cocycle import (
    character_via_commutator,
    cocycle_constants,
    connes_character,
    fredholm_completion,
    index_distribution,
    odd_constant,
)
from psicross.cones import abs_ratio_cone
from psicross.crossed import AlgebraElement, ModeOperator, SymbolFamily, lift_to_family
from psicross.exact import ExactScalar, TrigPolynomial
from psicross.microlocal import (
    GroupDescriptor,
    classify_symbol,
    compose_relations,
    family_wavefront,
    transversal_cotangent,
)
from psicross.parametrix import CutoffMarker, atiyah_completion, neumann_parametrix, transversal_parametrix
from psicross.spectral import (
    AsymptoticExpansion,
    ExpansionTerm,
    callable_rule,
    dixmier_estimate,
    eigendata,
    expansion_transform,
    fit_expansion,
    heat_samples,
    spectral_trace,
    tau_functionals,
    weyl_count,
    wodzicki_residue,
)
from psicross.symbols import MatrixSymbol, adjoint, compose, linear_combine, mode_window

from . import oracles

Z1, Z2 = (0,), (0, 0)
CIRCLE1 = GroupDescriptor.circle(2, 1)
TRIVIAL = GroupDescriptor.finite_cyclic(1, 1)
RESULTS = []


def report(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def rel(a, b):
    return abs(a - b) / abs(b)


# --------------------------------------------------------------------------
# seeded generators


def rand_scalar(rng):
    return ExactScalar(Fraction(rng.randint(-5, 5), rng.randint(1, 4)), Fraction(rng.randint(-5, 5), rng.randint(1, 4)))


def rand_symbol(rng, dim, depth, weights=True):
    terms = []
    for _ in range(rng.randint(1, 3)):
        mode = tuple(rng.randint(-2, 2) for _ in range(dim))
        alpha = tuple(rng.randint(0, 2) for _ in range(dim))
        w = 2 * rng.randint(0, 2) if weights else 0
        terms.append((rand_scalar(rng), mode, alpha, w))
    if weights:
        sym = MatrixSymbol.from_terms(dim, terms)
        return sym.with_window(sym.order, max(depth, sym.depth))
    order = max(sum(a) for _, _, a, _ in terms)
    return MatrixSymbol.from_terms(dim, terms, order=order, depth=order + 1)


# --------------------------------------------------------------------------


def test_criterion_01_symbol_algebra_exactness():
    rng = random.Random(1)
    start = time.perf_counter()
    failures = 0
    for _ in range(200):
        dim, depth = rng.randint(1, 2), rng.randint(1, 4)
        a, b, c = (rand_symbol(rng, dim, depth) for _ in range(3))
        left = compose(compose(a, b, depth), c, depth)
        right = compose(a, compose(b, c, depth), depth)
        if not left.same_terms(right, low=a.order + b.order + c.order - depth + 1):
            failures += 1
        if not adjoint(adjoint(a, depth), depth).same_terms(a, low=a.order - depth + 1):
            failures += 1
    elapsed = time.perf_counter() - start
    report(1, failures == 0 and elapsed < 30, f"200 triples, {failures} failures, {elapsed:.1f} s (< 30 s)")


def test_criterion_02_faithfulness():
    rng = random.Random(2)
    failures = 0
    for i in range(100):
        dim = 1 if i % 2 else 2
        a, b = rand_symbol(rng, dim, 0, weights=False), rand_symbol(rng, dim, 0, weights=False)
        ab = compose(a, b, a.order + b.order + 1)
        window = mode_window(dim, 10)
        got = ModeOperator.from_symbol(ab).matrix(window)
        want = (ModeOperator.from_symbol(a) @ ModeOperator.from_symbol(b)).matrix(window)
        if {k: v for k, v in got.items() if v} != {k: v for k, v in want.items() if v}:
            failures += 1
    report(2, failures == 0, f"100 differential pairs on |k| <= 10, {failures} mismatches")


def test_criterion_03_parametrix():
    cases = {
        "xi^2+1 on T1": MatrixSymbol.from_terms(1, [(1, Z1, (2,), 0), (1, Z1, Z1, 0)]),
        "xi^2+e^{ix} on T1": MatrixSymbol.from_terms(1, [(1, Z1, (2,), 0), (1, (1,), Z1, 0)]),
        "xi1^2+xi2^2+1 on T2": MatrixSymbol.from_terms(2, [(1, Z2, (2, 0), 0), (1, Z2, (0, 2), 0), (1, Z2, Z2, 0)]),
    }
    bad = []
    for name, p in cases.items():
        q = neumann_parametrix(p, depth=4).q
        one = MatrixSymbol.identity(p.dim)
        for prod in (compose(q, p, 4), compose(p, q, 4)):
            rem = linear_combine([1, -1], [one, prod]).truncate(4)
            if not rem.is_zero():
                bad.append(name)
    report(3, not bad, f"two-sided remainders vanish in degrees 0..-3; failing: {bad or 'none'}")


def test_criterion_04_transversal_certificate():
    p = MatrixSymbol.from_terms(2, [(1, Z2, Z2, 0), (1, Z2, (0, 2), 0)])
    cls = classify_symbol(p, CIRCLE1)
    region = abs_ratio_cone(2, 1, 0, 2)
    res = transversal_parametrix(p, CIRCLE1, CutoffMarker.indicator(region), depth=3)
    disjoint = res.remainder_tag.intersect(transversal_cotangent(CIRCLE1)).is_empty()
    K = SymbolFamily(CIRCLE1, {(0,): MatrixSymbol.identity(2).with_tag(res.remainder_tag)})
    empty = True
    for g, f in [((0,), TrigPolynomial.mode((0, 1))), ((2,), TrigPolynomial.mode((1, 0), 3)),
                 ((-1,), TrigPolynomial(2, {(1, 1): 1, (0, -2): ExactScalar(0, 1)}))]:
        rho = family_wavefront(lift_to_family(AlgebraElement(CIRCLE1, {g: f})))
        empty &= compose_relations(family_wavefront(K), rho)[0].is_empty()
        empty &= compose_relations(rho, family_wavefront(K))[0].is_empty()
    ok = (cls.transversally_elliptic and not cls.elliptic and res.certificate == "transversal" and disjoint
          and empty)
    report(4, ok, f"transversally elliptic={cls.transversally_elliptic}, elliptic={cls.elliptic}, "
                  f"tag disjoint from xi1=0: {disjoint}, compositions with rho(phi) empty: {empty}")


def test_criterion_05_heat_trace():
    start = time.perf_counter()
    lap1 = MatrixSymbol.from_terms(1, [(1, Z1, (2,), 0), (1, Z1, Z1, 0)])
    lap2 = MatrixSymbol.from_terms(2, [(1, Z2, (2, 0), 0), (1, Z2, (0, 2), 0), (1, Z2, Z2, 0)])
    E1, E2 = eigendata(lap1, 200), eigendata(lap2, 45)
    worst1 = worst2 = mpmath.mpf(0)
    for j in range(10):
        t = mpmath.mpf("0.05") + mpmath.mpf("0.05") * j
        v1 = spectral_trace(E1, "heat", t=t).value
        v2 = spectral_trace(E2, "heat", t=t).value
        worst1 = max(worst1, rel(v1, mpmath.exp(-t) * mpmath.sqrt(mpmath.pi / t)))
        worst2 = max(worst2, rel(v2, mpmath.exp(-t) * mpmath.pi / t))
    elapsed = time.perf_counter() - start
    ok = worst1 < 1e-6 and worst2 < 1e-5 and elapsed < 10
    report(5, ok, f"T1 rel err {mpmath.nstr(worst1, 3)} (< 1e-6), T2 rel err {mpmath.nstr(worst2, 3)} (< 1e-5), "
                  f"{elapsed:.1f} s (< 10 s)")


def _coefficient_error(a, b):
    keys = {(t.s, t.q) for t in a.terms} | {(t.s, t.q) for t in b.terms}
    return max(abs(a.coefficient(s, q) - b.coefficient(s, q)) for s, q in keys)


def test_criterion_06_mellin_equivalence():
    rng = random.Random(6)
    exps = [Fraction(-1), Fraction(-1, 2), Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2)]
    worst = mpmath.mpf(0)
    for _ in range(25):
        chosen = sorted(rng.sample(exps, rng.randint(1, 4)), reverse=True)
        terms = [ExpansionTerm(s, rng.randint(0, 2), mpmath.mpf(rng.randint(-9, 9) or 1) / rng.randint(1, 5))
                 for s in chosen]
        e = AsymptoticExpansion("heat", terms)
        K = rng.randint(2, 4)
        z = expansion_transform(e, "zeta")
        r = expansion_transform(e, "resolvent", K=K)
        worst = max(worst, _coefficient_error(expansion_transform(z, "heat"), e),
                    _coefficient_error(expansion_transform(r, "heat"), e),
                    _coefficient_error(expansion_transform(expansion_transform(z, "resolvent", K=K), "zeta"), z))
    lap1 = MatrixSymbol.from_terms(1, [(1, Z1, (2,), 0), (1, Z1, Z1, 0)])
    ts = [mpmath.mpf(10) ** (-3 + 2 * mpmath.mpf(j) / 15) for j in range(16)]
    tmpl = [(Fraction(-1, 2), 0), (Fraction(1, 2), 0), (Fraction(3, 2), 0), (Fraction(5, 2), 0)]
    fit = fit_expansion(heat_samples(eigendata(lap1, 400), ts), tmpl)
    zeta = expansion_transform(fit, "zeta")
    simple = set(zeta.block(Fraction(1, 2))) == {0}
    residue = zeta.gamma_zeta_laurent(Fraction(1, 2))[1]
    err = abs(residue - mpmath.sqrt(mpmath.pi))
    ok = worst < 1e-9 and simple and err < 1e-5
    report(6, ok, f"round-trip coefficient error {mpmath.nstr(worst, 3)} (< 1e-9); simple pole at 1/2: {simple}, "
                  f"Gamma*zeta residue error {mpmath.nstr(err, 3)} (< 1e-5)")


def _tau0(E, ts, template):
    fit = fit_expansion(heat_samples(E, ts), template)
    return tau_functionals(expansion_transform(fit, "zeta"), 1)[0]


def test_criterion_07_residue_consistency():
    logs = [(s, q) for s in range(4) for q in (1, 0)]
    # T1: A = (1 + D^2)^{-1/2}, P = 1 + D^2
    E1 = eigendata(callable_rule(1, lambda k: 1 + k[0] ** 2), 900, growth_order=2,
                   weight=lambda k: (1 + mpmath.mpf(k[0]) ** 2) ** mpmath.mpf(-0.5), weight_order=-1)
    ts1 = [mpmath.mpf(10) ** (-4 + 2 * mpmath.mpf(j) / 19) for j in range(20)]
    tau1 = _tau0(E1, ts1, logs)
    res1 = wodzicki_residue(MatrixSymbol.from_terms(1, [(1, Z1, Z1, 1)])).to_mpf()
    kappa = tau1 / res1
    # T2: A = (1 + Laplacian)^{-1}, same P-type operator
    E2 = eigendata(callable_rule(2, lambda k: 1 + k[0] ** 2 + k[1] ** 2), 125, growth_order=2,
                   weight=lambda k: mpmath.mpf(1) / (1 + k[0] ** 2 + k[1] ** 2), weight_order=-2)
    ts2 = [mpmath.mpf(10) ** (-mpmath.mpf(23) / 10 + mpmath.mpf(18) * j / 110) for j in range(12)]
    tau2 = _tau0(E2, ts2, logs)
    res2 = wodzicki_residue(MatrixSymbol.from_terms(2, [(1, Z2, Z2, 2)])).to_mpf()
    cross = abs(tau2 - kappa * res2)
    # Dixmier trace of the order -1 weight, read through the same constant
    lap = eigendata(MatrixSymbol.from_terms(1, [(1, Z1, (2,), 0), (1, Z1, Z1, 0)]), 20000,
                    weight=lambda k: (1 + mpmath.mpf(k[0]) ** 2) ** mpmath.mpf(-0.5))
    dix = dixmier_estimate(lap).value
    dix_err = abs(dix - tau1 / kappa)
    ok = cross < 1e-5 and dix_err < 1e-3 and abs(kappa - mpmath.mpf(1) / 2) < 1e-5
    report(7, ok, f"kappa(T1) = {mpmath.nstr(kappa, 8)}, |tau0(T2) - kappa res(T2)| = {mpmath.nstr(cross, 3)} (< 1e-5), "
                  f"|Dixmier - tau0/kappa| = {mpmath.nstr(dix_err, 3)} (< 1e-3)")


def test_criterion_08_tau_independence():
    q = MatrixSymbol.from_terms(2, [(1, Z2, Z2, 0), (1, Z2, (0, 2), 0)])
    completions = [
        atiyah_completion(q, CIRCLE1, CutoffMarker.indicator(abs_ratio_cone(2, 0, 1, 1)), weight=1),
        atiyah_completion(q, CIRCLE1, CutoffMarker.indicator(abs_ratio_cone(2, 0, 1, 3)), weight=2),
    ]
    ts = [mpmath.mpf(10) ** (-4 + 2 * mpmath.mpf(i) / 23) for i in range(24)]
    template = [(s, q_) for s in range(6) for q_ in (1, 0)]
    taus, logs = [], []
    for comp in completions:
        E = eigendata(comp, 830, weight=lambda k: (1 + mpmath.mpf(k[1]) ** 2) ** mpmath.mpf(-0.5),
                      character=(1, 3), weight_order=-1)
        fit = fit_expansion(heat_samples(E, ts), template, guard=(6, 1))
        zeta = expansion_transform(fit, "zeta")
        taus.append(tau_functionals(zeta, 2).values[0])
        logs.append(fit.max_log_power)
    diff = abs(taus[0] - taus[1])
    ok = diff < 1e-6 and max(logs) <= 2
    report(8, ok, f"tau0 = {mpmath.nstr(taus[0], 10)} vs {mpmath.nstr(taus[1], 10)}, difference {mpmath.nstr(diff, 3)} "
                  f"(< 1e-6); max log power {max(logs)} (<= 2)")


def test_criterion_09_equivariant_weyl():
    p = MatrixSymbol.from_terms(2, [(1, Z2, Z2, 0), (1, Z2, (0, 2), 0)])
    res = weyl_count(eigendata(p, 120, character=(1, 5)), 10 ** 4, m=1)
    ok = res.count == 199 and abs(res.coefficient - 2) / 2 < 0.05 and res.exponent == Fraction(1, 2)
    report(9, ok, f"count {res.count} (== 199), coefficient {res.coefficient:.4f} against t^{res.exponent} "
                  f"(within 5% of 2)")


def test_criterion_10_cm_constants():
    table = cocycle_constants("even", 2, 2)
    mismatches = [key for key, c in table.table.items() if c != oracles.cm_even_reference(*key)]
    half = table[(1, (0, 0), 0)]
    with mpmath.workdps(50):
        odd_err = abs(odd_constant(0, (0,), 0) - mpmath.sqrt(mpmath.pi))
    ok = not mismatches and half == Fraction(1, 2) and odd_err < 1e-10
    report(10, ok, f"{len(table.table)} even entries, {len(mismatches)} mismatches; c_2,(0,0),0 = {half}; "
                   f"odd c_1,(0),0 - sqrt(pi) = {mpmath.nstr(odd_err, 3)} (< 1e-10)")


def _shift(k, c):
    return {((k[0] + 1,), 0): ExactScalar(1)} if k[0] >= 0 else {(k, 0): ExactScalar(1)}


def _unshift(k, c):
    if k[0] >= 1:
        return {((k[0] - 1,), 0): ExactScalar(1)}
    return {} if k[0] == 0 else {(k, 0): ExactScalar(1)}


def test_criterion_11_fredholm_completion():
    rng = random.Random(11)
    failures = 0
    for _ in range(100):
        pair = []
        for _ in range(2):
            terms = [(rand_scalar(rng), (rng.randint(-1, 1),), Z1, rng.randint(0, 2)) for _ in range(rng.randint(1, 3))]
            pair.append(MatrixSymbol.from_terms(1, terms, order=0, depth=3))
        if not fredholm_completion(*pair, depth=3).verify():
            failures += 1
    spread = 0
    for trial in range(10):
        K = ModeOperator.finite_rank(1, {(((rng.randint(-2, 2),), 0), ((rng.randint(-2, 2),), 0)): rand_scalar(rng)
                                         for _ in range(3)})
        P, Q = ModeOperator(1, 1, _shift) + K, ModeOperator(1, 1, _unshift)
        phi = AlgebraElement(TRIVIAL, {0: TrigPolynomial.constant(1, rand_scalar(rng))})
        vals = [complex(connes_character(phi, P, Q, n, 8, certificate=True).value) for n in (2, 3, 4)]
        vals.append(complex(character_via_commutator(phi, P, Q, 8)))
        spread = max(spread, max(abs(v - vals[0]) for v in vals))
    ok = failures == 0 and spread < 1e-8
    report(11, ok, f"100 random order-0 pairs, {failures} identity failures; character spread over n = 2,3,4 "
                   f"{spread:.1e} (< 1e-8)")


def test_criterion_12_index_distribution():
    bad = 0
    checked = 0
    # every basis function of bandwidth <= 16, then all sign patterns on a sparse support
    for n in range(-16, 17):
        checked += 1
        bad += index_distribution("circle-rotation", {n: 1}) != ExactScalar(1)
        bad += index_distribution("dx-rotation", {n: 1}) != ExactScalar(0)
    for width in range(17):
        for coeffs in itertools.product([0, 1, -1, Fraction(1, 2), ExactScalar(0, 1)], repeat=3):
            f = {}
            for n, c in zip((-width, 0, width), coeffs):
                f[n] = ExactScalar.coerce(f.get(n, 0)) + ExactScalar.coerce(c)
            want = sum(f.values(), ExactScalar(0))
            checked += 1
            bad += index_distribution("circle-rotation", f) != want
            bad += index_distribution("dx-rotation", f) != ExactScalar(0)
    report(12, bad == 0, f"{checked} band-limited test functions (bandwidth <= 16), {bad} mismatches")

