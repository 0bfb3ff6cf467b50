"""Command-line entry point: ``psicross <subcommand> ...``.

Every command writes one JSON document (sorted keys) with a ``metadata`` block.
Exit codes: 0 success, 2 schema/input error, 3 precondition failure,
4 numeric-tolerance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

import mpmath

from . import __version__
from . import spectral
from .cones import ConicRegion
from .exact import format_constant, format_rational, format_scalar

EXIT_OK, EXIT_SCHEMA, EXIT_PRECONDITION, EXIT_NUMERIC = 0, 2, 3, 4


class CommandError(Exception):
    def __init__(self, module: str, code: int, message: str):
        super().__init__(message)
        self.module, self.code = module, code


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CommandError("cli", EXIT_SCHEMA, f"cannot read {path}: {exc}") from exc


def _symbol(path):
    from .symbols import symbol_from_json

    return symbol_from_json(_load(path))


def _group(path, dim=None):
    from .microlocal import GroupDescriptor, trivial_group

    if path is None:
        return trivial_group(dim)
    return GroupDescriptor.from_json(_load(path))


def _num(v) -> str:
    return spectral._fmt_num(v)


def _exact(v) -> str:
    from .exact import ExactConstant, ExactScalar

    if isinstance(v, ExactConstant):
        return format_constant(v)
    if isinstance(v, ExactScalar):
        return format_scalar(v)
    if isinstance(v, Fraction):
        return format_rational(v)
    return _num(v)


# --------------------------------------------------------------------------
# subcommands


def cmd_compose(args):
    from .symbols import compose, symbol_to_json

    return {"symbol": symbol_to_json(compose(_symbol(args.lhs), _symbol(args.rhs), args.depth))}


def cmd_adjoint(args):
    from .symbols import adjoint, symbol_to_json

    return {"symbol": symbol_to_json(adjoint(_symbol(args.symbol), args.depth))}


def cmd_parametrix(args):
    from .parametrix import CutoffMarker, neumann_parametrix, transversal_parametrix

    p = _symbol(args.symbol)
    if args.group is None:
        return neumann_parametrix(p, args.depth).to_json()
    G = _group(args.group)
    if args.cutoff is None:
        raise CommandError("parametrix", EXIT_SCHEMA, "--cutoff is required with --group")
    region = ConicRegion.from_json(p.dim, _load(args.cutoff))
    return transversal_parametrix(p, G, CutoffMarker.indicator(region), args.depth).to_json()


def cmd_convolve(args):
    from .crossed import (
        algebra_from_json,
        algebra_to_json,
        convolve,
        family_convolve,
        family_from_json,
        family_to_json,
    )

    a, b = _load(args.lhs), _load(args.rhs)
    if "table" in a and a["table"] and "function" in a["table"][0]:
        return {"element": algebra_to_json(convolve(algebra_from_json(a), algebra_from_json(b)))}
    return {"family": family_to_json(family_convolve(family_from_json(a), family_from_json(b), args.depth))}


def cmd_trace(args):
    from .crossed import family_from_json, family_trace

    rep = family_trace(family_from_json(_load(args.family)), args.radius, Fraction(args.tolerance))
    return {"value": _exact(rep.value), "kernel_value": _exact(rep.kernel_value),
            "discrepancy": _exact(rep.discrepancy), "shell": _exact(rep.shell), "radius": rep.radius}


def cmd_wf(args):
    from .crossed import family_from_json
    from .microlocal import family_wavefront

    if args.family:
        return {"relation": family_wavefront(family_from_json(_load(args.family))).to_json()}
    if args.a is None or args.dim is None:
        raise CommandError("microlocal", EXIT_SCHEMA, "wf needs --family, or --a with --dim")
    A = ConicRegion.from_json(args.dim, _load(args.a))
    if args.op == "complement":
        return {"cone": A.complement().to_json()}
    if args.op == "empty":
        return {"empty": A.is_empty()}
    if args.b is None:
        raise CommandError("microlocal", EXIT_SCHEMA, f"wf --op {args.op} needs --b")
    B = ConicRegion.from_json(args.dim, _load(args.b))
    if args.op == "union":
        return {"cone": A.union(B).to_json()}
    if args.op == "intersect":
        return {"cone": A.intersect(B).to_json()}
    if args.op == "contains":
        return {"contains": A.contains(B)}
    raise CommandError("microlocal", EXIT_SCHEMA, f"unknown cone operation {args.op!r}")


def cmd_classify(args):
    from .microlocal import classify_symbol

    p = _symbol(args.symbol)
    return classify_symbol(p, _group(args.group, p.dim)).to_json()


def _character(s):
    if s is None:
        return None
    axis, n = s.split(":")
    return int(axis), int(n)


def _lattice(args):
    p = _symbol(args.symbol)
    weight = _symbol(args.weight) if getattr(args, "weight", None) else None
    return spectral.eigendata(p, args.radius, weight=weight, character=_character(args.character),
                              exclude_zero=args.exclude_zero)


def _floats(s):
    return [Fraction(x) for x in s.split(",") if x]


def cmd_heat(args):
    E = _lattice(args)
    ts = _floats(args.t)
    rows = []
    for t in ts:
        tv = spectral.spectral_trace(E, "heat", t=spectral._mp(t))
        rows.append({"t": format_rational(t), "value": _num(tv.value), "error": _num(tv.error)})
    out = {"samples": rows}
    if args.fit:
        template = [(Fraction(s), int(q)) for s, q in (item.split(":") for item in args.fit.split(","))]
        e = spectral.fit_expansion([(spectral._mp(t), spectral.spectral_trace(E, "heat", t=spectral._mp(t)).value)
                                    for t in ts], template)
        out["expansion"] = e.to_json()
        out["zeta"] = spectral.expansion_transform(e, "zeta").to_json()
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value", "error"])
        for r in rows:
            w.writerow([r["t"], r["value"], r["error"]])
        with open(args.csv, "w") as fh:
            fh.write(buf.getvalue())
    return out


def cmd_zeta(args):
    E = _lattice(args)
    tv = spectral.spectral_trace(E, "zeta", z=spectral._mp(Fraction(args.z)))
    return {"value": _num(tv.value), "error": _num(tv.error), "abscissa": format_rational(E.abscissa())}


def cmd_resolvent(args):
    E = _lattice(args)
    tv = spectral.spectral_trace(E, "resolvent", K=args.K, lam=spectral._mp(Fraction(args.lam)))
    return {"value": _num(tv.value), "error": _num(tv.error)}


def cmd_residue(args):
    v = spectral.wodzicki_residue(_symbol(args.symbol))
    return {"value": format_rational(v.rational), "pi_half_power": v.pi_half_power, "exact": format_constant(v)}


def cmd_weyl(args):
    E = _lattice(args)
    G = _group(args.group, E.dim) if args.group else None
    res = spectral.weyl_count(E, spectral._mp(Fraction(args.t)), group=G)
    return {"count": res.count, "coefficient": repr(res.coefficient), "exponent": format_rational(res.exponent)}


def cmd_dixmier(args):
    E = _lattice(args)
    res = spectral.dixmier_estimate(E)
    return {"value": repr(res.value), "decay_exponent": repr(res.decay_exponent)}


def cmd_constants(args):
    from .cocycle import cocycle_constants

    c = cocycle_constants(args.parity, args.max_m, args.max_k)
    rows = [{"m": m, "k": list(k), "q": q, "value": _exact(v)} for (m, k, q), v in sorted(c.table.items())]
    out = {"parity": c.parity, "table": rows}
    if c.parity == "odd":
        out["prefactor"] = _num(c.prefactor)
    return out


def cmd_index_demo(args):
    from .cocycle import index_distribution

    sym = _symbol(args.symbol) if args.symbol else None
    return {"index": format_scalar(index_distribution(args.case, args.f, sym))}


def cmd_cocycle(args):
    from .cocycle import assemble_cocycle
    from .crossed import dirac_from_json, trig_from_json

    D = dirac_from_json(_load(args.dirac))
    data = _load(args.inputs)
    a = [trig_from_json(D.symbol.dim, f) for f in data]
    rep = assemble_cocycle(args.parity, args.m, a, D, args.depth)
    return {"value": _exact(rep.value),
            "terms": [{"k": list(t.k), "q": t.q, "constant": _exact(t.constant), "tau": _exact(t.tau)}
                      for t in rep.terms],
            "discarded": [{"k": list(k), "q": q} for k, q in rep.discarded]}


def cmd_property_check(args):
    """Randomized associativity / adjoint-involution checks driven by --seed."""
    import random

    from .symbols import MatrixSymbol, adjoint, compose

    rng = random.Random(args.seed)
    failures = 0
    for _ in range(args.count):
        syms = []
        for _ in range(3):
            terms = [(Fraction(rng.randint(-3, 3), rng.randint(1, 3)), (rng.randint(-1, 1),), (rng.randint(0, 2),), 0)
                     for _ in range(2)]
            syms.append(MatrixSymbol.from_terms(1, terms, order=2, depth=5))
        a, b, c = syms
        d = args.depth
        if not compose(compose(a, b, d), c, d).same_terms(compose(a, compose(b, c, d), d)):
            failures += 1
        if not adjoint(adjoint(a, d), d).same_terms(a):
            failures += 1
    return {"checked": args.count, "failures": failures}


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psicross", description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="write JSON here instead of stdout")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized drivers")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        return p

    p = add("compose", cmd_compose, "compose two symbols")
    p.add_argument("--lhs", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--depth", type=int, default=4)
    p = add("adjoint", cmd_adjoint, "formal adjoint of a symbol")
    p.add_argument("--symbol", required=True)
    p.add_argument("--depth", type=int, default=4)
    p = add("parametrix", cmd_parametrix, "elliptic or transversal parametrix")
    p.add_argument("--symbol", required=True)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--group")
    p.add_argument("--cutoff")
    p = add("convolve", cmd_convolve, "convolve algebra elements or symbol families")
    p.add_argument("--lhs", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--depth", type=int, default=4)
    p = add("trace", cmd_trace, "trace of a smoothing crossed family")
    p.add_argument("--family", required=True)
    p.add_argument("--radius", type=int, default=8)
    p.add_argument("--tolerance", default="0")
    p = add("wf", cmd_wf, "wavefront relations and cone operations")
    p.add_argument("--family")
    p.add_argument("--op", default="complement", choices=["complement", "union", "intersect", "contains", "empty"])
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--dim", type=int)
    p = add("classify", cmd_classify, "ellipticity classification")
    p.add_argument("--symbol", required=True)
    p.add_argument("--group")

    for name, fn, help_ in (("heat", cmd_heat, "heat trace samples"), ("zeta", cmd_zeta, "zeta lattice sum"),
                            ("resolvent", cmd_resolvent, "resolvent trace"), ("weyl", cmd_weyl, "Weyl counting"),
                            ("dixmier", cmd_dixmier, "Dixmier trace estimate")):
        p = add(name, fn, help_)
        p.add_argument("--symbol", required=True)
        p.add_argument("--radius", type=int, default=100)
        p.add_argument("--weight")
        p.add_argument("--character", help="axis:n isotypic restriction")
        p.add_argument("--exclude-zero", action="store_true")
        if name == "heat":
            p.add_argument("--t", required=True, help="comma-separated rationals")
            p.add_argument("--fit", help="template s:q,s:q,...")
            p.add_argument("--csv")
        elif name == "zeta":
            p.add_argument("--z", required=True)
        elif name == "resolvent":
            p.add_argument("--K", type=int, required=True)
            p.add_argument("--lam", required=True)
        elif name == "weyl":
            p.add_argument("--t", required=True)
            p.add_argument("--group")
    p = add("residue", cmd_residue, "Wodzicki residue")
    p.add_argument("--symbol", required=True)
    p = add("constants", cmd_constants, "cocycle constant tables")
    p.add_argument("--parity", choices=["even", "odd"], default="even")
    p.add_argument("--max-m", type=int, default=1)
    p.add_argument("--max-k", type=int, default=2)
    p = add("cocycle", cmd_cocycle, "assemble a cocycle value")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--parity", choices=["even", "odd"], default="even")
    p.add_argument("--inputs", required=True)
    p.add_argument("--dirac", required=True)
    p.add_argument("--depth", type=int, default=4)
    p = add("index-demo", cmd_index_demo, "equivariant index distribution demos")
    p.add_argument("--case", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--symbol")
    p = add("property-check", cmd_property_check, "randomized algebra checks")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--depth", type=int, default=4)
    return ap


def _classify_error(exc) -> tuple:
    from .cocycle import CocycleError, MissingCertificate
    from .crossed import GroupMismatch, TraceCutoffError
    from .microlocal import MissingSupportError, RefinementNeeded
    from .parametrix import ParametrixError, PreconditionError
    from .symbols import SymbolError, TruncationError

    mod = type(exc).__module__.rsplit(".", 1)[-1]
    if isinstance(exc, (TraceCutoffError, spectral.WindowTooSmall, spectral.FitError)):
        return mod, EXIT_NUMERIC
    if isinstance(exc, (PreconditionError, ParametrixError, spectral.DivergentRequest, MissingCertificate,
                        RefinementNeeded, MissingSupportError, TruncationError, GroupMismatch, CocycleError,
                        spectral.SpectralError)):
        return mod, EXIT_PRECONDITION
    if isinstance(exc, (SymbolError, KeyError, TypeError, ValueError)):
        return mod, EXIT_SCHEMA
    return mod, None


def main(argv=None) -> int:
    dps = os.environ.get("PSICROSS_DPS")
    if dps:
        spectral.DPS = int(dps)
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        with mpmath.workdps(spectral.DPS):
            result = args.fn(args)
    except CommandError as exc:
        print(json.dumps({"error": {"module": exc.module, "message": str(exc)}}, sort_keys=True), file=sys.stderr)
        return exc.code
    except Exception as exc:  # surfaced with a module-qualified code
        mod, code = _classify_error(exc)
        if code is None:
            raise
        print(json.dumps({"error": {"module": mod, "type": type(exc).__name__, "message": str(exc)}},
                         sort_keys=True), file=sys.stderr)
        return code
    doc = {"result": result,
           "metadata": {"command": args.command, "version": __version__, "precision_digits": spectral.DPS,
                        "seed": args.seed,
                        "options": {k: v for k, v in sorted(vars(args).items()) if k not in ("fn", "out")},
                        "normalization": {"torus_measure": "Lebesgue (2 pi)^n in the residue; Haar mass 1",
                                          "residue_to_zeta": "1/ord(P)"}}}
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
