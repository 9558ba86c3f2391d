"""Acceptance criteria 1-10, each printed as a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from predualpoisson import funcalg as F
from predualpoisson.algebroid import bracket_sections, perturbation_response, quadratic_bump, linear_bump
from predualpoisson.dynamics import casimir_so3, conserved_drift, flow, rigid_body_hamiltonian
from predualpoisson.funcalg import BundlePoint
from predualpoisson.models import BUILTIN_NAMES, make_precotangent, make_sequence_triple, resolve_preset
from predualpoisson.poisson import (
    TangentAtom,
    jacobi_check_functions,
    poisson_bracket,
    predual_condition_diagnostic,
    sharp_consistency_residual,
    structural_relations_check,
)
from predualpoisson.reconstruct import roundtrip_check
from predualpoisson.sampling import (
    flat_function,
    random_base_fn,
    random_base_poly,
    random_bundle_fn,
    random_constant_section,
    random_point,
    random_section,
    random_tree,
)
from predualpoisson.spaces import doubling_dims
from predualpoisson.symplectic import coincidence_check, flat, sharp_omega

SEED = 20240601


def test_c01_structural_relations(emit):
    rng = np.random.default_rng(SEED)
    worst = {}
    for name in ("so3", "sl2", "precotangent:16", "seqtriple:32"):
        A = resolve_preset(name)
        nb, nf = A.base_dim, A.fiber_dim
        w = np.zeros(3)
        for _ in range(200):
            p = random_point(rng, nb, nf)
            X, Y = random_section(rng, nb, nf), random_section(rng, nb, nf, kind="smooth")
            r = structural_relations_check(A, X, Y, random_base_fn(rng, nb), random_base_poly(rng, nb), p)
            w = np.maximum(w, r)
        worst[name] = float(w.max())
    emit("C1 structural relations", max(worst.values()) <= 1e-9,
         ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (tol 1e-9)")


def test_c02_jacobi(emit):
    rng = np.random.default_rng(SEED + 1)
    mixed, lam = 0.0, 0.0
    for name in BUILTIN_NAMES:
        A = resolve_preset(name)
        nb, nf = A.base_dim, A.fiber_dim
        for _ in range(100):
            p = random_point(rng, nb, nf)
            f, g, h = (random_bundle_fn(rng, nb, nf) for _ in range(3))
            mixed = max(mixed, jacobi_check_functions(A, f, g, h, p))
        if A.meta.get("point_base"):
            for _ in range(100):
                p = random_point(rng, nb, nf)
                f, g, h = (F.lambda_of_section(random_constant_section(rng, nf)) for _ in range(3))
                lam = max(lam, jacobi_check_functions(A, f, g, h, p))
    emit("C2 Jacobi", mixed <= 1e-7 and lam <= 1e-12,
         f"mixed {mixed:.1e} (tol 1e-7), lambda-only on point base {lam:.1e} (tol 1e-12)")


def test_c03_sharp_consistency(emit):
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    for name in BUILTIN_NAMES:
        A = resolve_preset(name)
        nb, nf = A.base_dim, A.fiber_dim
        for _ in range(500):
            p = random_point(rng, nb, nf)
            worst = max(worst, sharp_consistency_residual(A, random_bundle_fn(rng, nb, nf),
                                                          random_bundle_fn(rng, nb, nf), p))
    emit("C3 sharp consistency", worst <= 1e-12, f"{worst:.1e} over 500 draws per model (tol 1e-12)")


def test_c04_predual_conditions(emit):
    dims = doubling_dims(8, 4096)
    good = predual_condition_diagnostic(make_sequence_triple("harmonic"), dims, draws=16, seed=SEED)
    pre = predual_condition_diagnostic(make_precotangent, dims, draws=16, seed=SEED)
    unit = predual_condition_diagnostic(make_sequence_triple("unit"), dims, draws=16, seed=SEED)
    cs = max(
        r["anchor_dual"]["bound_estimate"] / (r["mu_norm"] * np.sqrt(np.pi**2 / 6)) for r in good.draws
    )
    ok = (
        good.is_poisson_manifold
        and good.anchor_dual_verdict.verdict == "bounded"
        and good.ad_star_verdict.verdict == "bounded"
        and not pre.is_poisson_manifold
        and pre.anchor_dual_verdict.verdict == "growing"
        and not unit.is_poisson_manifold
        and cs <= 1 + 1e-6
    )
    emit("C4 predual conditions", ok,
         f"harmonic {good.is_poisson_manifold}, precotangent {pre.is_poisson_manifold} "
         f"({pre.anchor_dual_verdict.verdict}), unit {unit.is_poisson_manifold}, "
         f"max bound/(|mu|_2 sqrt(pi^2/6)) = {cs:.4f}")


def test_c05_coincidence(emit):
    rng = np.random.default_rng(SEED + 4)
    worst = 0.0
    for _ in range(200):
        p = random_point(rng, 16, 16)
        f = flat_function(rng.uniform(-1, 1, 16), rng.uniform(-1, 1, 16))
        g = flat_function(rng.uniform(-1, 1, 16), rng.uniform(-1, 1, 16), decay=float(rng.uniform(1.5, 3)))
        worst = max(worst, coincidence_check(f, g, p))
    exact = True
    for _ in range(1000):
        n = int(rng.integers(1, 17))
        p = random_point(rng, n, n)
        t = TangentAtom(p, rng.standard_normal(n), rng.standard_normal(n))
        back = sharp_omega(p, flat(p, t))
        exact &= np.array_equal(back.v, t.v) and np.array_equal(back.psi, t.psi)
    emit("C5 symplectic coincidence", worst <= 1e-10 and exact,
         f"{worst:.1e} over 200 draws (tol 1e-10), flat/sharp identity exact on 1000 atoms: {exact}")


def test_c06_roundtrip(emit):
    entries, inv, fails = 0.0, 0.0, []
    for name in BUILTIN_NAMES:
        rep = roundtrip_check(resolve_preset(name), seed=SEED)
        r = {c["name"]: c["residual"] for c in rep.checks}
        entries = max(entries, r["anchor_entries"], r["structure_entries"], r["bracket_values"])
        inv = max(inv, r["anchor_jet_invariance"])
        if not rep.passed:
            fails.append(name)
    emit("C6 round trip", entries <= 1e-9 and inv <= 1e-10 and not fails,
         f"entries {entries:.1e} (tol 1e-9), anchor invariance {inv:.1e} (tol 1e-10)")


def test_c07_no_queer(emit):
    rng = np.random.default_rng(SEED + 6)
    worst = 0.0
    for name in BUILTIN_NAMES:
        A = resolve_preset(name)
        nb, nf = A.base_dim, A.fiber_dim
        for _ in range(20):
            m = rng.uniform(-1, 1, nb)
            X, Y = random_section(rng, nb, nf), random_section(rng, nb, nf, kind="smooth")
            X2 = X + quadratic_bump(m, rng.uniform(-1, 1, nf))
            d = bracket_sections(A, X, Y, m) - bracket_sections(A, X2, Y, m)
            worst = max(worst, float(np.max(np.abs(d))))
    # negative control: first-order perturbations move the bracket linearly in eps
    A = resolve_preset("seqtriple:32")
    m = rng.uniform(-1, 1, 32)
    X, Y = random_section(rng, 32, 32), random_section(rng, 32, 32)
    P = linear_bump(m, rng.uniform(-1, 1, 32), rng.uniform(-1, 1, 32))
    r1 = perturbation_response(A, X, P, Y, m, 1e-3)
    r2 = perturbation_response(A, X, P, Y, m, 2e-3)
    ratio = r2 / r1 if r1 > 0 else float("nan")
    emit("C7 no-queer invariant", worst <= 1e-10 and r1 > 1e-8 and abs(ratio - 2) < 1e-6,
         f"second-order bump {worst:.1e} (tol 1e-10), first-order response {r1:.2e}, ratio {ratio:.6f}")


def test_c08_dynamics(emit):
    A = resolve_preset("so3")
    H = rigid_body_hamiltonian()
    C = casimir_so3()
    pt0 = BundlePoint(np.zeros(1), np.array([1.0, 0.5, -0.3]))
    tr = flow(A, H, pt0, 1e-3, 10_000)
    dh, dc = conserved_drift(tr, H), conserved_drift(tr, C)
    d1 = conserved_drift(flow(A, H, pt0, 0.05, 200), H)
    d2 = conserved_drift(flow(A, H, pt0, 0.025, 400), H)
    ratio = d1 / d2
    rng = np.random.default_rng(SEED + 7)
    cb = 0.0
    for _ in range(200):
        p = random_point(rng, 1, 3)
        cb = max(cb, abs(poisson_bracket(A, C, random_bundle_fn(rng, 1, 3), p)))
    emit("C8 dynamics", dh <= 1e-8 and dc <= 1e-8 and 10 <= ratio <= 22 and cb <= 1e-12,
         f"energy drift {dh:.1e}, Casimir drift {dc:.1e} (tol 1e-8), halving ratio {ratio:.2f} "
         f"(steps 0.05/0.025), |{{C, f}}| {cb:.1e}")


def test_c09_jets(emit):
    rng = np.random.default_rng(SEED + 8)
    worst = 0.0
    for _ in range(500):
        nb, nf = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        f = random_tree(rng, nb, nf)
        p = random_point(rng, nb, nf)
        g = F.jet(f, p).grad
        gfd = F.fd_jet(f, p).grad
        worst = max(worst, float(np.max(np.abs(g - gfd)) / max(1.0, float(np.max(np.abs(g))))))
    pull_zero, lam_exact = True, True
    for _ in range(100):
        p = random_point(rng, 4, 5)
        pull_zero &= not np.any(F.jet(F.pullback(random_base_fn(rng, 4)), p).d_phi)
        X = random_section(rng, 4, 5, kind="smooth")
        lam_exact &= np.array_equal(F.jet(F.lambda_of_section(X), p).d_phi, X.value(p.m))
    emit("C9 jet engine", worst <= 1e-5 and pull_zero and lam_exact,
         f"max rel jet/FD error {worst:.1e} over 500 trees (tol 1e-5), "
         f"pullback d_phi == 0: {pull_zero}, lambda d_phi == X(m): {lam_exact}")


def _cli(args, out):
    res = subprocess.run([sys.executable, "-m", "predualpoisson", *args, "--out", str(out)],
                         capture_output=True, text=True)
    d = json.loads(out.read_text())
    d.pop("timestamp", None)
    return res.returncode, json.dumps(d, sort_keys=True)


def test_c10_determinism(tmp_path, emit):
    same = True
    for args in (["verify", "so3", "--seed", "7", "--draws", "40"],
                 ["verify", "seqtriple:32", "--seed", "7", "--draws", "10"],
                 ["conditions", "seqtriple", "--seed", "7", "--draws", "4"],
                 ["roundtrip", "so3action", "--seed", "7"]):
        c1, a = _cli(args, tmp_path / "a.json")
        c2, b = _cli(args, tmp_path / "b.json")
        same &= c1 == c2 == 0 and a == b
    emit("C10 CLI determinism", same, "repeated runs give identical reports apart from the timestamp")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
