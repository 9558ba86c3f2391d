"""Command-line driver: ``predualpoisson {verify,conditions,flow,roundtrip}``.

Exit codes: 0 pass, 1 fail or inconclusive, 2 input/validation error,
3 I/O error, 4 numerical blow-up.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import funcalg
from .algebroid import model_from_json
from .dynamics import drift_summary, flow, rigid_body_hamiltonian, write_csv
from .errors import BlowupError, PredualPoissonError
from .funcalg import BundlePoint, add, const, phi
from .models import resolve_family, resolve_preset
from .reconstruct import roundtrip_check
from .spaces import doubling_dims
from .suites import run_condition_suite, run_identity_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_IO, EXIT_BLOWUP = 0, 1, 2, 3, 4


class _IOFailure(Exception):
    pass


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise PredualPoissonError(f"{path}: invalid JSON ({exc})") from exc


def load_model(source: str):
    """A preset name (``so3``, ``seqtriple:64``, ...) or a path to a model JSON file."""
    if source.endswith(".json") or os.path.sep in source:
        return model_from_json(_read_json(source))
    return resolve_preset(source)


def parse_dims(text: str) -> list[int]:
    """``"8..4096"`` (doubling) or ``"8,16,32"``."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return doubling_dims(int(lo), int(hi))
    return [int(t) for t in text.split(",") if t.strip()]


def parse_tol_overrides(text: str | None) -> dict:
    """``name=value,name=value`` or a JSON object."""
    if not text:
        return {}
    text = text.strip()
    if text.startswith("{"):
        return {k: float(v) for k, v in json.loads(text).items()}
    out = {}
    for item in text.split(","):
        name, _, val = item.partition("=")
        out[name.strip()] = float(val)
    return out


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text + "\n")
        return
    try:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc


def _finish(rep, out) -> int:
    _emit(rep.dumps(), out)
    for line in rep.lines():
        print(line, file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    A = load_model(args.model)
    tols = parse_tol_overrides(args.tol_overrides)
    try:
        rep = run_identity_suite(A, seed=args.seed, draws=args.draws, tol_overrides=tols)
    except KeyError as exc:
        raise PredualPoissonError(str(exc)) from exc
    return _finish(rep, args.out)


def cmd_conditions(args) -> int:
    family = resolve_family(args.family)
    rep, cr = run_condition_suite(family, args.family, parse_dims(args.dims), args.draws, args.seed)
    _emit(rep.dumps(), args.out)
    print(f"is_poisson_manifold: {cr.is_poisson_manifold}", file=sys.stderr)
    return EXIT_OK if cr.conclusive else EXIT_FAIL


def _hamiltonian(source: str):
    if source == "rigid-body":
        return rigid_body_hamiltonian()
    if source == "zero":
        return const(0.0)
    return funcalg.from_json(_read_json(source))


def _conserved(names: str | None, nf: int) -> dict:
    """``casimir`` means sum_k phi_k^2 (the so(3) Casimir); anything else is a JSON file."""
    out = {}
    for name in (names or "").split(","):
        name = name.strip()
        if not name or name == "H":
            continue
        if name == "casimir":
            out["casimir"] = add(*[phi(k) ** 2 for k in range(nf)])
        else:
            out[os.path.splitext(os.path.basename(name))[0]] = funcalg.from_json(_read_json(name))
    return out


def _vector(text: str | None, n: int, default) -> np.ndarray:
    if text is None:
        return np.resize(np.asarray(default, dtype=np.float64), n)
    v = np.array([float(t) for t in text.split(",")])
    if v.shape[0] != n:
        raise PredualPoissonError(f"expected {n} coordinates, got {v.shape[0]}")
    return v


def cmd_flow(args) -> int:
    A = load_model(args.model)
    H = _hamiltonian(args.hamiltonian)
    conserved = _conserved(args.conserved, A.fiber_dim)
    pt0 = BundlePoint(
        _vector(args.m0, A.base_dim, [0.0]),
        _vector(args.phi0, A.fiber_dim, [1.0, 0.5, -0.3]),
    )
    try:
        traj = flow(A, H, pt0, args.step, args.steps, args.method)
        summary = {"model": A.name, "model_hash": A.digest(), **drift_summary(traj, conserved)}
        if args.halving:
            half = flow(A, H, pt0, args.step / 2, 2 * args.steps, args.method)
            d_half = drift_summary(half, conserved)["drift"]
            summary["halving"] = {
                "step": args.step / 2,
                "drift": d_half,
                "ratio": {k: (v / d_half[k] if d_half[k] > 0 else None)
                          for k, v in summary["drift"].items()},
            }
    except BlowupError as exc:
        print(f"blow-up at step {exc.step}", file=sys.stderr)
        return EXIT_BLOWUP
    if args.out:
        try:
            write_csv(traj, args.out, conserved)
        except OSError as exc:
            raise _IOFailure(str(exc)) from exc
    _emit(json.dumps(summary, indent=2), args.summary)
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    A = load_model(args.model)
    return _finish(roundtrip_check(A, seed=args.seed), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="predualpoisson", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity suite on a model")
    v.add_argument("model")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--draws", type=int, default=200)
    v.add_argument("--tol-overrides", default=None)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("conditions", help="asymptotic predual-condition sweep")
    c.add_argument("family")
    c.add_argument("--dims", default="8..4096")
    c.add_argument("--draws", type=int, default=16)
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_conditions)

    f = sub.add_parser("flow", help="integrate a Hamiltonian flow")
    f.add_argument("model")
    f.add_argument("--hamiltonian", default="rigid-body", help="rigid-body, zero, or a JSON file")
    f.add_argument("--step", type=float, default=1e-3)
    f.add_argument("--steps", type=int, default=10_000)
    f.add_argument("--conserved", default="casimir", help="comma list: casimir or JSON files")
    f.add_argument("--method", choices=("rk4", "midpoint"), default="rk4")
    f.add_argument("--m0", default=None)
    f.add_argument("--phi0", default=None)
    f.add_argument("--halving", action="store_true", help="also run at step/2 and report the drift ratio")
    f.add_argument("--out", default=None, help="trajectory CSV")
    f.add_argument("--summary", default=None, help="drift summary JSON (stdout if omitted)")
    f.set_defaults(func=cmd_flow)

    r = sub.add_parser("roundtrip", help="forward then inverse construction")
    r.add_argument("model")
    r.add_argument("--seed", type=int, default=42)
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_roundtrip)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PredualPoissonError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
