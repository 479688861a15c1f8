"""Command-line interface.

Exit codes: 0 every check passed, 1 a mathematical check failed (the report
carries witnesses), 2 bad input or usage (the error names the offending
field). Reports are JSON on stdout (or ``--output``) and are byte-identical
for identical inputs and seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import constructions, frames, free_space, perturbation
from .errors import (ContractionError, HypothesisError, InfeasibleExtensionError,
                     MetricFramesError, SolverError)
from .metric_core import validate_metric
from .seq_norms import SequenceNormSpec, truncation_for_tail
from .serialization import (SCHEMA_VERSION, SchemaError, _labels_and_base, decoder_from_json,
                            dumps, frame_from_json, frame_to_json, space_from_json,
                            validate_document)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_MATH_ERRORS = (HypothesisError, ContractionError, InfeasibleExtensionError, SolverError)


class UsageError(Exception):
    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _parse_list(text: str, flag: str):
    try:
        v = json.loads(text)
    except json.JSONDecodeError:
        raise UsageError(f"{flag} must be a JSON list", flag) from None
    if not isinstance(v, list):
        raise UsageError(f"{flag} must be a JSON list", flag)
    return v


def _p(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _report(command: str, passed: bool, /, **body) -> dict:
    body.pop("passed", None)
    return {"schema_version": SCHEMA_VERSION, "command": command, "passed": bool(passed), **body}


# -- subcommands ------------------------------------------------------------------

def cmd_validate(args):
    doc = _read_json(args.input)
    validate_document(doc, "space")
    if "coords" in doc:
        M = space_from_json(doc, _checked=True)
        D = M.dist
    else:
        # validate the raw matrix: building a space would reject it before reporting
        rows = doc["distances"]
        for i, row in enumerate(rows):
            if len(row) != len(rows):
                raise SchemaError(f"distance row {i} has {len(row)} entries, "
                                  f"expected {len(rows)}", f"/distances/{i}")
        _labels_and_base(doc, len(rows), "")
        D = np.asarray(rows, dtype=float)
    rep = validate_metric(D, args.tolerance)
    return _report("validate", rep.valid, n=int(D.shape[0]), tolerance=args.tolerance,
                   **rep.to_dict())


def cmd_construct(args):
    fam = args.family
    if fam in ("log", "geometric"):
        if args.interval is None:
            raise UsageError("--interval is required for closed-form families", "--interval")
        N = args.truncation
        if N is None:
            N = max(1, truncation_for_tail(fam, args.interval, args.tail_target))
        builder = constructions.log_frame if fam == "log" else constructions.geometric_frame
        C = builder(tuple(args.interval), args.grid, N, _p(args.p))
        decoder = {"strategy": "log-sum"} if fam == "log" else None
    else:
        if args.space is None:
            raise UsageError("--space is required for the kuratowski family", "--space")
        M = space_from_json(_read_json(args.space))
        C = constructions.kuratowski_frame(M)
        decoder = {"strategy": "nearest"}
    return frame_to_json(C.system, decoder), EXIT_OK


def _load_frame(path):
    doc = _read_json(path)
    F = frame_from_json(doc)
    return F, doc


def cmd_bounds(args):
    F, _ = _load_frame(args.frame)
    fb = frames.frame_bounds(F)
    if args.csv:
        I, J, r = frames.pair_ratios(F)
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "distance", "ratio"])
            for i, j, v in zip(I, J, r):
                w.writerow([int(i), int(j), repr(float(F.space.dist[i, j])), repr(float(v))])
    return _report("bounds", True, p=F.norm.to_json()["p"], n_points=F.space.n,
                   n_maps=len(F.family), bounds=fb.to_dict())


def cmd_certify(args):
    F, doc = _load_frame(args.frame)
    S = None if args.no_decoder else decoder_from_json(F, doc)
    rep = frames.certify(F, args.claimed[0], args.claimed[1], args.tolerance, S)
    return _report("certify", rep.passed, **rep.to_dict())


def cmd_bessel(args):
    F, _ = _load_frame(args.frame)
    chk = frames.is_bessel(F, args.claimed, args.tolerance)
    return _report("bessel", chk.ok, claimed_b=args.claimed, computed_b=chk.b,
                   tolerance=args.tolerance,
                   witness=None if chk.witness is None else list(chk.witness))


def cmd_transform(args):
    F, doc = _load_frame(args.frame)
    if args.op == "scale":
        if args.lam is None:
            raise UsageError("--lam is required for scale", "--lam")
        res = frames.scale(F, args.lam)
    elif args.op == "precompose":
        if args.perm is None:
            raise UsageError("--perm is required for precompose", "--perm")
        res = frames.precompose(F, _parse_list(args.perm, "--perm"))
    else:
        if args.other is None or args.lam is None:
            raise UsageError("--other and --lam are required for combine", "--other")
        G, _ = _load_frame(args.other)
        res = frames.combine(F, G, args.lam)
    if args.emit_frame:
        with open(args.emit_frame, "w", encoding="utf-8") as fh:
            fh.write(dumps(frame_to_json(res.system)))
    return _report("transform", res.within, op=args.op,
                   predicted={"a": res.predicted[0], "b": res.predicted[1]},
                   computed=res.computed.to_dict())


def cmd_perturb(args):
    F, _ = _load_frame(args.frame)
    G, _ = _load_frame(args.perturbed)
    p = None if args.p is None else _p(args.p)
    body = {}
    if args.closeness:
        qc = perturbation.quadratic_closeness(F, G, p)
        body["closeness"] = qc.to_dict()
        if not qc.available:
            return _report("perturb", False, reason="r >= a: prediction unavailable", **body)
        params = perturbation.PerturbationParams(0.0, 0.0, qc.r, p)
    else:
        params = perturbation.PerturbationParams(args.alpha, args.beta, args.gamma, p)
    body["params"] = {"alpha": params.alpha, "beta": params.beta, "gamma": params.gamma,
                      "p": F.p if p is None else p}
    rep = perturbation.perturb_and_certify(F, G, params, args.tolerance)
    return _report("perturb", rep.passed, **body, **rep.to_dict())


def cmd_stability(args):
    A = np.asarray(_parse_list(args.matrix, "--matrix"), dtype=float)
    if A.ndim != 2:
        raise UsageError("--matrix must be a list of equal-length rows", "--matrix")
    dim = A.shape[1]
    axis = np.linspace(-args.extent, args.extent, args.grid)
    X = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), -1).reshape(-1, dim)
    X = np.vstack([np.zeros(dim), X[np.any(X != 0, axis=1)]])
    h = perturbation.smooth_perturbation(A.shape[0], dim, args.epsilon, args.seed)
    A_pinv = np.linalg.pinv(A)
    rep = perturbation.stability_reconstruct(
        X, lambda x: A @ x, lambda c: A_pinv @ c, lambda x: A @ x + h(x),
        alpha=args.alpha, gamma=args.gamma, tol=args.tolerance, max_iter=args.max_iter)
    body = rep.to_dict()
    if args.trace:
        Tg = [A @ x + h(x) for x in X]
        body["traces"] = [list(rep.T(c).steps) for c in Tg[1: 1 + args.trace]]
    ok = rep.passed(args.tolerance)
    return _report("stability", ok, n_samples=int(X.shape[0]), epsilon=args.epsilon,
                   seed=args.seed, **body)


def cmd_free_norm(args):
    M = space_from_json(_read_json(args.space))
    m = _parse_list(args.molecule, "--molecule")
    if len(m) != M.n or not all(isinstance(v, (int, float)) for v in m):
        raise UsageError(f"--molecule needs {M.n} numbers", "--molecule")
    cert = free_space.free_norm(M, m, args.tolerance)
    body = cert.to_dict()
    ok = cert.check(M, m, args.tolerance)
    if args.oracle:
        o = free_space.free_norm_oracle(M, m)
        body["oracle"] = o
        ok = ok and abs(o - cert.value) <= args.tolerance * max(1.0, o)
    return _report("free-norm", ok, **body)


def cmd_correspond(args):
    F, _ = _load_frame(args.frame)
    rep = free_space.correspondence_check(F, args.tolerance, args.embedding_metric)
    return _report("correspond", rep.agree, **rep.to_dict())


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="metric-frames",
                                 description="Metric frames on finite metric spaces.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-o", "--output", help="write the report here instead of stdout")
        sp.set_defaults(func=func)
        return sp

    sp = add("validate", cmd_validate, "check the metric axioms of a space document")
    sp.add_argument("--input", required=True, help="space JSON ('-' for stdin)")
    sp.add_argument("--tolerance", type=float, default=0.0)

    sp = add("construct", cmd_construct, "build a frame and emit its JSON")
    sp.add_argument("--family", required=True, choices=["log", "geometric", "kuratowski"])
    sp.add_argument("--interval", type=float, nargs=2, metavar=("C", "D"))
    sp.add_argument("--grid", type=int, default=64)
    sp.add_argument("--truncation", type=int)
    sp.add_argument("--tail-target", type=float, default=1e-9,
                    help="pick the truncation from this tail bound when --truncation is absent")
    sp.add_argument("--p", default="1")
    sp.add_argument("--space", help="space JSON for the kuratowski family")

    sp = add("bounds", cmd_bounds, "exact frame bounds by pair scan")
    sp.add_argument("--frame", default="-")
    sp.add_argument("--csv", help="write the pairwise ratio table here")

    sp = add("certify", cmd_certify, "check claimed frame bounds (and the decoder if present)")
    sp.add_argument("--frame", default="-")
    sp.add_argument("--claimed", type=float, nargs=2, required=True, metavar=("A", "B"))
    sp.add_argument("--tolerance", type=float, default=0.0)
    sp.add_argument("--no-decoder", action="store_true")

    sp = add("bessel", cmd_bessel, "check a claimed Bessel bound")
    sp.add_argument("--frame", default="-")
    sp.add_argument("--claimed", type=float, required=True)
    sp.add_argument("--tolerance", type=float, default=0.0)

    sp = add("transform", cmd_transform, "scale, precompose or combine frames")
    sp.add_argument("--frame", default="-")
    sp.add_argument("--op", required=True, choices=["scale", "precompose", "combine"])
    sp.add_argument("--lam", type=float)
    sp.add_argument("--perm", help="JSON list: new point k takes old point perm[k]")
    sp.add_argument("--other", help="second frame JSON for combine")
    sp.add_argument("--emit-frame", help="write the transformed frame JSON here")

    sp = add("perturb", cmd_perturb, "predict and verify bounds of a perturbed family")
    sp.add_argument("--frame", required=True)
    sp.add_argument("--perturbed", required=True)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--p")
    sp.add_argument("--closeness", action="store_true",
                    help="derive (0, 0, r) from the Lipschitz numbers of f_n - g_n")
    sp.add_argument("--tolerance", type=float, default=1e-9)

    sp = add("stability", cmd_stability,
             "rebuild a decoder for a perturbed linear frame on a sampled grid")
    sp.add_argument("--matrix", default="[[1, 0], [0, 1], [1, 1]]",
                    help="JSON rows of the linear functionals")
    sp.add_argument("--grid", type=int, default=9)
    sp.add_argument("--extent", type=float, default=1.0)
    sp.add_argument("--epsilon", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--gamma", type=float, help="default: smallest value valid on the sample")
    sp.add_argument("--tolerance", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=10_000)
    sp.add_argument("--trace", type=int, default=0, metavar="K",
                    help="include step traces for the first K non-origin samples")

    sp = add("free-norm", cmd_free_norm, "norm of a molecule in the Lipschitz-free space")
    sp.add_argument("--space", required=True)
    sp.add_argument("--molecule", required=True, help='JSON list, e.g. "[0, 1, -1]"')
    sp.add_argument("--oracle", action="store_true",
                    help="cross-check by vertex enumeration (support <= 4)")
    sp.add_argument("--tolerance", type=float, default=1e-9)

    sp = add("correspond", cmd_correspond,
             "compare frame bounds with those of the linearized family on e(M)")
    sp.add_argument("--frame", default="-")
    sp.add_argument("--embedding-metric", choices=["free", "raw-l2"], default="free")
    sp.add_argument("--tolerance", type=float, default=1e-8)
    return ap


def _emit(doc, path):
    text = dumps(doc)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error_doc(command, exc, pointer=None):
    err = {"type": type(exc).__name__, "message": str(exc)}
    if pointer is not None:
        err["pointer"] = pointer
    w = getattr(exc, "witness", None)
    body = {"error": err}
    if w is not None and not isinstance(exc, SchemaError):
        body["witness"] = list(w) if isinstance(w, tuple) else w
    return _report(command, False, **body)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with status 2 on usage errors
    try:
        out = args.func(args)
    except (UsageError, SchemaError) as exc:
        doc = _error_doc(args.command, exc, exc.pointer)
        sys.stderr.write(dumps(doc))
        return EXIT_USAGE
    except _MATH_ERRORS as exc:
        _emit(_error_doc(args.command, exc), args.output)
        return EXIT_FAIL
    except MetricFramesError as exc:
        # malformed or out-of-domain input (including a space that fails the axioms)
        doc = _error_doc(args.command, exc, "")
        sys.stderr.write(dumps(doc))
        return EXIT_USAGE
    if isinstance(out, tuple):
        doc, code = out
    else:
        doc, code = out, EXIT_OK if out["passed"] else EXIT_FAIL
    _emit(doc, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
