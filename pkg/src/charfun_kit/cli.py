"""Command line interface: ``charfun-kit <command> [args]``.

Exit codes: 0 pass, 1 mathematical failure, 2 input error, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .charfun import (defect_data, extended_charfun, gamma_isometry, membership_residual, poisson_hat,
                      popescu_charfun, ring_defects, theorem52_check)
from .dilation import (coupling_start, coupling_step, cuntz_state_check, dilation_property_residual,
                       intertwining_check, isometry_residual, minimality_rank, popescu_dilation,
                       product_intertwiner_coefficients)
from .equivalence import OMEGA_TOL, corollary63_check, theorem61_crosscheck
from .errors import (BudgetExceeded, CharfunError, DimensionMismatch, NotComparable, ParseError,
                     UnknownName)
from .fock import check_budget, isometry_defect
from .io import dumps, encode_complex, load_tuple, symbol_to_doc, tuple_to_doc
from .tuples import (ensure_ergodic, is_ergodic, omega_p_power_decay, profile_of,
                     star_stability_norms, validate)

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple, np.ndarray)):
        arr = np.asarray(v)
        if np.iscomplexobj(arr):
            if np.allclose(arr.imag, 0, atol=1e-14):
                arr = arr.real
            return np.array2string(arr, precision=6, suppress_small=True)
        return np.array2string(arr, precision=6)
    return str(v)


def _emit(args, report: dict, passed: bool) -> int:
    report = dict(report, status="PASS" if passed else "FAIL")
    if args.json:
        text = json.dumps(report, indent=1, default=_json_default) + "\n"
    else:
        text = "".join(f"{k}: {_fmt(v)}\n" for k, v in report.items())
    _write(args, text)
    return EXIT_PASS if passed else EXIT_FAIL


def _json_default(o):
    if isinstance(o, np.ndarray):
        return encode_complex(o) if np.iscomplexobj(o) else o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o))


def _write(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _profile(A, hints, tol):
    return profile_of(A, tol, Omega_hint=hints.get("Omega_hint"))


def cmd_validate(args) -> int:
    A, _ = load_tuple(args.file)
    rep = validate(A, args.tol)
    return _emit(args, {
        "d": A.d, "n": A.n,
        "contraction_norm": rep.contraction_norm,
        "coisometry_defect": rep.coisometry_defect,
        "contraction": rep.is_contraction,
        "coisometric": rep.is_coisometric,
    }, rep.passed)


def cmd_analyze(args) -> int:
    A, hints = load_tuple(args.file)
    rep = validate(A, args.tol)
    out = {"d": A.d, "n": A.n, "coisometry_defect": rep.coisometry_defect,
           "contraction_norm": rep.contraction_norm}
    if not rep.passed:
        return _emit(args, out, False)
    p = _profile(A, hints, args.tol)
    erg = is_ergodic(A, profile=p, tol=args.tol)
    out.update({
        "Omega": p.Omega, "omega": p.omega, "ell": p.ell, "Aring": p.Aring,
        "fixed_point_dim": erg.fixed_point_dim, "ergodicity": erg.verdict,
        "decay_rate": erg.decay_rate,
        "s_n": star_stability_norms(p, args.steps),
        "r_n": omega_p_power_decay(A, p, args.steps),
    })
    return _emit(args, out, erg.ergodic)


def cmd_charfun(args) -> int:
    A, hints = load_tuple(args.file)
    check_budget(A.d, args.depth)
    p = _profile(A, hints, args.tol)
    ensure_ergodic(A, profile=p)
    dd = defect_data(A, p.omega, args.tol)
    C = poisson_hat(p, args.depth)
    theta = extended_charfun(p, dd, args.depth, tol=args.tol, check_ergodic=False, C=C)
    diag = {
        "isometry_defect": isometry_defect(theta),
        "s_tail": float(star_stability_norms(p, args.depth + 1)[-1]),
        "membership_residual": membership_residual(p, C),
    }
    extra = {}
    if args.popescu:
        ring = ring_defects(p)
        pop = popescu_charfun(p, ring, args.depth)
        gamma = gamma_isometry(p, ring, dd)
        t52 = theorem52_check(p, args.depth, dd, ring)
        extra["popescu"] = {
            "ring_basis": encode_complex(p.ring_basis),
            "source_basis": encode_complex(ring.basis),
            "target_basis": encode_complex(ring.basis_star),
            "coefficients": [{"word": list(w), "matrix": encode_complex(pop.coeffs[w])}
                             for w in pop.words()],
            "gamma": encode_complex(gamma),
        }
        diag["theorem52_poisson_residual"] = t52.poisson_residual
        diag["theorem52_charfun_residual"] = t52.charfun_residual
    _write(args, dumps(symbol_to_doc(theta, p.omega, dd.basis_DA, diag, extra)))
    return EXIT_PASS


def cmd_compare(args) -> int:
    A, _ = load_tuple(args.file_a)
    B, _ = load_tuple(args.file_b)
    if A.d != B.d:
        raise NotComparable(f"d differs: {A.d} vs {B.d}")
    pA, pB = profile_of(A, args.tol), profile_of(B, args.tol)
    if np.linalg.norm(pA.omega - pB.omega) <= OMEGA_TOL:
        rep = theorem61_crosscheck(A, B, depth=args.depth, profile_A=pA, profile_B=pB)
        out = {
            "mode": "unitary equivalence (same omega)",
            "symbol_verdict": "EQUIVALENT" if rep.symbol.equivalent else "NOT EQUIVALENT",
            "symbol_residual": rep.symbol.residual,
            "unitarity_defect": rep.symbol.unitarity_defect,
            "intertwiner_verdict": "FOUND" if rep.intertwiner.found else "NONE",
            "consistent": rep.agree,
        }
        return _emit(args, out, rep.agree)
    rep = corollary63_check(A, B, depth=args.depth)
    out = {
        "mode": "conjugacy of CP maps (omega differs)",
        "verdict": "CONJUGATE" if rep.conjugate else "NOT CONJUGATE",
        "sigma_min": rep.sigma_min,
        "consistent": rep.consistent,
    }
    if rep.crosscheck is not None:
        out["symbol_residual"] = rep.crosscheck.symbol.residual
    return _emit(args, out, rep.consistent)


def cmd_dilation_check(args) -> int:
    A, hints = load_tuple(args.file)
    N = args.depth
    check_budget(A.d, N + 1)
    p = _profile(A, hints, args.tol)
    dd = defect_data(A, p.omega, args.tol)
    dil = popescu_dilation(A, dd)
    out = {
        "dilation_deviation": dilation_property_residual(dil, N),
        "isometry_deviation": isometry_residual(dil, min(N, 2)),
        "cuntz_deviation": cuntz_state_check(dil, p.Omega, p.omega, N // 2),
    }
    rank, expected = minimality_rank(dil, min(N, 3))
    out["minimality"] = f"{rank}/{expected}"
    ok = max(out["dilation_deviation"], out["isometry_deviation"], out["cuntz_deviation"]) <= args.tol \
        and rank == expected
    if N >= 1:
        ensure_ergodic(A, profile=p)
        theta = extended_charfun(p, dd, N, tol=args.tol, check_ergodic=False)
        bound = max(args.tol, 10 * np.sqrt(star_stability_norms(p, N + 1)[-1]))
        res = intertwining_check(p, dd, theta, N).residual
        out["intertwining_residual"] = res
        out["intertwining_bound"] = bound
        ok = ok and res <= bound
    return _emit(args, out, ok)


def cmd_coupling_check(args) -> int:
    A, hints = load_tuple(args.file)
    steps = args.steps
    check_budget(A.d, steps)
    p = _profile(A, hints, args.tol)
    ensure_ergodic(A, profile=p)
    C = poisson_hat(p, max(steps - 1, 0))
    vectors = [p.Omega] + [p.ring_basis[:, k] for k in range(p.ring_basis.shape[1])]
    worst = 0.0
    for h in vectors:
        o = product_intertwiner_coefficients(A, p, h, steps)
        hr = p.Q @ h
        worst = max(worst, abs(o.vacuum - np.vdot(p.Omega, h)))
        for w, v in o.coeffs.items():
            worst = max(worst, float(np.linalg.norm(v - C[w] @ hr)))
    # unresolved mass after m steps, worst case over the ring basis
    mass = []
    states = [coupling_start(h) for h in vectors[1:]]
    for _ in range(steps):
        states = [coupling_step(s, A) for s in states]
        mass.append(max((sum(np.linalg.norm(p.Q @ v) ** 2 for v in s.coeffs.values()) for s in states),
                        default=0.0))
    out = {"steps": steps, "max_coefficient_deviation": worst, "residual_mass": np.array(mass)}
    return _emit(args, out, worst <= max(args.tol, 1e-10))


def cmd_builtin(args) -> int:
    from .io import builtin
    A = builtin(args.name)
    _write(args, dumps(tuple_to_doc(A)))
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=int, default=6, help="word depth N (default 6)")
    common.add_argument("--tol", type=float, default=1e-10, help="tolerance (default 1e-10)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", help="write output to this path")

    parser = argparse.ArgumentParser(prog="charfun-kit",
                                     description="Extended characteristic functions of ergodic row contractions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=func)
        return sp

    add("validate", cmd_validate, "contraction and coisometry checks").add_argument("file")
    sp = add("analyze", cmd_analyze, "vector state, block form, ergodicity and decay tables")
    sp.add_argument("file")
    sp.add_argument("--steps", type=int, default=12)
    sp = add("charfun", cmd_charfun, "write the extended characteristic function")
    sp.add_argument("file")
    sp.add_argument("--popescu", action="store_true", help="also the Popescu function and gamma")
    sp = add("compare", cmd_compare, "unitary equivalence or CP-map conjugacy of two tuples")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    add("dilation-check", cmd_dilation_check, "identities of the truncated dilation").add_argument("file")
    sp = add("coupling-check", cmd_coupling_check, "coupling oracle against the closed form")
    sp.add_argument("file")
    sp.add_argument("--steps", type=int, default=8)
    add("builtin", cmd_builtin, "emit section7, scalar(d,w...) or random(d,n,seed)").add_argument("name")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "depth", 0) < 0:
        parser.error("--depth must be non-negative")
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}; lower --depth or --steps", file=sys.stderr)
        return EXIT_BUDGET
    except (ParseError, UnknownName, NotComparable, DimensionMismatch) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CharfunError as exc:
        print(f"FAIL: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
