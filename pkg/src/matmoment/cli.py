"""Command line front end.

Subcommands cover every pipeline stage: ``moments`` integrates a measure,
``solve`` runs the moment-problem solver, ``verify-measure`` audits a
solution, ``certify``/``verify-cert``/``transform`` drive the certificate
side, and ``random`` emits seeded instances.  All documents are JSON (see
``jsonio``); ``-`` reads stdin.

Exit codes are a stable contract:
  0  success
  2  infeasible moment data / invalid certificate / refuted polynomial
  3  invalid input (malformed JSON, schema violation, bad parameters)
  4  numerical or search failure

Set MATMOMENT_LOG=error|info|debug to control diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import jsonio
from .certificates import (
    refute,
    search_certificate,
    transform_certificate,
    verify_certificate,
)
from .errors import (
    InvalidInputError,
    MatMomentError,
    NumericalFailureError,
    SearchFailureError,
)
from .generate import random_certificate, random_measure
from .linalg import Tolerances
from .moments import moments_of_measure
from .polynomials import mobius_inverse, mobius_transform
from .tmmp import solve, verify_measure
from .certificates import reconstruct

log = logging.getLogger("matmoment")

EXIT_OK = 0
EXIT_REJECTED = 2
EXIT_INVALID = 3
EXIT_NUMERICAL = 4


def _setup_logging() -> None:
    level = os.environ.get("MATMOMENT_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        stream=sys.stderr,
        level=levels.get(level, logging.ERROR),
        format="matmoment: %(levelname)s: %(message)s",
    )


def _read_document(path: str):
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return jsonio.load_json(text)


def _emit(doc, out: str | None) -> None:
    text = jsonio.dump_json(doc)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _tolerances(args) -> Tolerances:
    return Tolerances(rank_tol=args.tol_rank, psd_tol=args.tol_psd)


def cmd_moments(args) -> int:
    mu = jsonio.load_measure(_read_document(args.measure))
    if args.n < 0:
        raise InvalidInputError("moment order must be nonnegative")
    gamma = moments_of_measure(mu, args.n)
    _emit(jsonio.dump_moment_sequence(gamma), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    gamma = jsonio.load_moment_sequence(_read_document(args.moments))
    kset = jsonio.load_set(_read_document(args.set))
    outcome = solve(
        gamma,
        kset,
        tol=_tolerances(args),
        snap_tol=args.snap_tol,
        moment_tol=args.moment_tol,
    )
    label = "even" if gamma.top_index % 2 == 0 else "odd"
    report = {
        "status": outcome.status,
        "failed_conditions": [f"{label}:{name}" for name in outcome.failed_conditions],
    }
    if outcome.message:
        report["message"] = outcome.message
    if outcome.status == "feasible":
        assert outcome.measure is not None
        report["moment_residual"] = outcome.moment_residual
        report["atoms"] = outcome.measure.natoms
        report["measure"] = jsonio.dump_measure(outcome.measure)
        if args.out:
            _emit(jsonio.dump_measure(outcome.measure), args.out)
            del report["measure"]
    _emit(report, None)
    if outcome.status == "feasible":
        return EXIT_OK
    if outcome.status == "infeasible":
        log.info("infeasible: %s", ", ".join(report["failed_conditions"]))
        return EXIT_REJECTED
    log.info("numerical failure: %s", outcome.message)
    return EXIT_NUMERICAL


def cmd_verify_measure(args) -> int:
    mu = jsonio.load_measure(_read_document(args.measure))
    gamma = jsonio.load_moment_sequence(_read_document(args.moments))
    kset = jsonio.load_set(_read_document(args.set))
    ok, residual = verify_measure(
        mu, gamma, kset, tol=args.moment_tol, snap_tol=args.snap_tol
    )
    _emit({"valid": bool(ok), "residual": residual}, args.out)
    return EXIT_OK if ok else EXIT_REJECTED


def cmd_certify(args) -> int:
    f = jsonio.load_matrix_polynomial(_read_document(args.polynomial))
    kset = jsonio.load_set(_read_document(args.set))
    counterexample = refute(f, kset)
    if counterexample is not None:
        _emit(
            {
                "status": "refuted",
                "point": counterexample.point,
                "min_eig": counterexample.min_eig,
                "witness": counterexample.witness.tolist(),
            },
            None,
        )
        return EXIT_REJECTED
    try:
        cert = search_certificate(f, kset, max_iter=args.max_iter)
    except SearchFailureError as exc:
        log.info("search failed: %s", exc)
        _emit({"status": "search-failure", "detail": str(exc)}, None)
        return EXIT_NUMERICAL
    _emit(jsonio.dump_certificate(cert), args.out)
    return EXIT_OK


def cmd_verify_cert(args) -> int:
    poly_doc = _read_document(args.polynomial)
    if args.certificate is None:
        if not (isinstance(poly_doc, dict) and "polynomial" in poly_doc and "certificate" in poly_doc):
            raise InvalidInputError(
                "verify-cert needs either two files or one combined instance file"
            )
        f = jsonio.load_matrix_polynomial(poly_doc["polynomial"])
        cert = jsonio.load_certificate(poly_doc["certificate"])
    else:
        f = jsonio.load_matrix_polynomial(poly_doc)
        cert = jsonio.load_certificate(_read_document(args.certificate))
    ok, residual = verify_certificate(f, cert)
    _emit({"valid": bool(ok), "residual": residual}, args.out)
    return EXIT_OK if ok else EXIT_REJECTED


def cmd_transform(args) -> int:
    doc = _read_document(args.input)
    kind = jsonio.sniff_kind(doc)
    if kind == "certificate":
        cert = jsonio.load_certificate(doc)
        out = transform_certificate(cert, args.direction, args.a)
        _emit(jsonio.dump_certificate(out), args.out)
        return EXIT_OK
    if kind == "matrix_polynomial":
        f = jsonio.load_matrix_polynomial(doc)
        if args.direction == "from_unbounded":
            out_poly = mobius_transform(f, args.a)
        else:
            deg = args.target_degree if args.target_degree is not None else f.degree
            out_poly = mobius_inverse(f, args.a, deg)
        _emit(jsonio.dump_matrix_polynomial(out_poly), args.out)
        return EXIT_OK
    raise InvalidInputError(f"cannot transform a document of kind {kind!r}")


def cmd_random(args) -> int:
    kset = jsonio.load_set(_read_document(args.set))
    rng = np.random.default_rng(args.seed)
    if args.kind == "measure":
        mu = random_measure(rng, kset, p=args.p, n_atoms=args.atoms)
        _emit(jsonio.dump_measure(mu), args.out)
        return EXIT_OK
    cert = random_certificate(rng, kset, p=args.p, degree=args.degree)
    f = reconstruct(cert)
    _emit(
        {
            "polynomial": jsonio.dump_matrix_polynomial(f),
            "certificate": jsonio.dump_certificate(cert),
        },
        args.out,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matmoment",
        description="Matrix moment problems on {a} u [b, c] and matrix "
        "sum-of-squares certificates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_tol_flags(sp):
        sp.add_argument("--tol-rank", type=float, default=1e-8, help="relative rank cutoff")
        sp.add_argument("--tol-psd", type=float, default=1e-8, help="relative PSD slack")

    sp = sub.add_parser("moments", help="moments of an atomic measure")
    sp.add_argument("measure", help="measure JSON file or -")
    sp.add_argument("-n", type=int, required=True, help="top moment order")
    sp.add_argument("--out", help="output file (default stdout)")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("solve", help="solve the moment problem on {a} u [b, c]")
    sp.add_argument("moments", help="moment sequence JSON file or -")
    sp.add_argument("set", help="set description JSON file")
    add_tol_flags(sp)
    sp.add_argument("--snap-tol", type=float, default=1e-6, help="atom snap tolerance (relative to c - a)")
    sp.add_argument("--moment-tol", type=float, default=1e-6, help="relative moment residual gate")
    sp.add_argument("--out", help="write the measure here (report still on stdout)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify-measure", help="check a measure against moments and a set")
    sp.add_argument("measure")
    sp.add_argument("moments")
    sp.add_argument("set")
    sp.add_argument("--snap-tol", type=float, default=1e-6)
    sp.add_argument("--moment-tol", type=float, default=1e-6)
    sp.add_argument("--out", help="output file (default stdout)")
    sp.set_defaults(func=cmd_verify_measure)

    sp = sub.add_parser("certify", help="search a positivity certificate")
    sp.add_argument("polynomial")
    sp.add_argument("set")
    sp.add_argument("--max-iter", type=int, default=10000)
    sp.add_argument("--out", help="output file (default stdout)")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("verify-cert", help="verify a certificate against a polynomial")
    sp.add_argument("polynomial", help="polynomial file, or a combined instance file")
    sp.add_argument("certificate", nargs="?", help="certificate file")
    sp.add_argument("--out", help="output file (default stdout)")
    sp.set_defaults(func=cmd_verify_cert)

    sp = sub.add_parser("transform", help="move a certificate or polynomial between "
                                          "{a} u [b, c] and {a} u [b, +inf)")
    sp.add_argument("input", help="certificate or polynomial JSON file")
    sp.add_argument("--direction", choices=("to_unbounded", "from_unbounded"), required=True)
    sp.add_argument("--a", type=float, required=True, help="isolated point of the unbounded set")
    sp.add_argument("--target-degree", type=int, help="degree for the polynomial pullback")
    sp.add_argument("--out", help="output file (default stdout)")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("random", help="seeded random instances")
    sp.add_argument("kind", choices=("measure", "certificate-instance"))
    sp.add_argument("set", help="set description JSON file")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--p", type=int, default=1, help="matrix size")
    sp.add_argument("--atoms", type=int, default=2, help="atom count for measures")
    sp.add_argument("--degree", type=int, default=4, help="degree for certificate instances")
    sp.add_argument("--out", help="output file (default stdout)")
    sp.set_defaults(func=cmd_random)

    return parser


def run(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (jsonio.DocumentError, InvalidInputError) as exc:
        log.error("%s", exc)
        sys.stderr.write(f"matmoment: invalid input: {exc}\n")
        return EXIT_INVALID
    except (NumericalFailureError, SearchFailureError) as exc:
        log.error("%s", exc)
        sys.stderr.write(f"matmoment: {exc}\n")
        return EXIT_NUMERICAL
    except OSError as exc:
        sys.stderr.write(f"matmoment: {exc}\n")
        return EXIT_INVALID
    except MatMomentError as exc:
        sys.stderr.write(f"matmoment: {exc}\n")
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
