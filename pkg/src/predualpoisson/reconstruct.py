"""Recover an algebroid (bracket and anchor) from a linear Poisson bracket.

The bracket oracle is a black box ``PB(f, g, pt) -> float``. Because
``{lambda_X, lambda_Y}`` is fiber-wise linear, evaluating it at the predual
basis vectors reads off the coordinates of ``[X, Y](m)``; the anchor is the
base component of ``sharp(d lambda_X)`` with the sign fixed by
``v = -a(x)``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .algebroid import AlgebroidModel, bracket_sections, linear_bump
from .errors import NotLinearError, OracleInconsistencyError
from .funcalg import BundlePoint, SectionFn, SmoothFn, base_jet, evaluate, jet, lambda_of_section
from .poisson import CotangentAtom, fiber_linearity_residual, poisson_bracket, sharp
from .report import Report
from .sampling import random_base_poly, random_section

BracketOracle = Callable[[SmoothFn, SmoothFn, BundlePoint], float]


def oracles_for(A: AlgebroidModel):
    """``(PB, sharp_oracle)`` built from a model's forward construction."""
    return (lambda f, g, pt: poisson_bracket(A, f, g, pt)), (lambda c: sharp(A, c))


def recover_section_value(fn: Callable[[np.ndarray], float], nf: int) -> np.ndarray:
    """Coordinates of the section behind a fiber-linear function: ``fn(e_i)``."""
    e = np.eye(nf)
    return np.array([fn(e[i]) for i in range(nf)])


def recover_bracket(
    PB: BracketOracle, X: SectionFn, Y: SectionFn, m, rng=None, tol: float = 1e-8
) -> np.ndarray:
    """``[X, Y](m) = lambda^-1 {lambda_X, lambda_Y}`` at ``m``."""
    m = np.asarray(m, dtype=np.float64)
    nf = X.dim
    lx, ly = lambda_of_section(X), lambda_of_section(Y)

    def h(ph):
        return PB(lx, ly, BundlePoint(m, ph))

    rng = np.random.default_rng(0) if rng is None else rng
    defect = fiber_linearity_residual(h, nf, rng, trials=2)
    if defect > tol:
        raise NotLinearError(f"bracket of lambda functions is not fiber-linear (defect {defect:.3g})")
    return recover_section_value(h, nf)


def recover_anchor(
    PB: BracketOracle, sharp_oracle, X: SectionFn, m, rng=None, draws: int = 8, tol: float = 1e-10
) -> np.ndarray:
    """``a(X(m))`` as minus the base component of ``sharp(d lambda_X)`` at ``(m, phi)``.

    Checked to be independent of ``phi`` over ``draws`` random fiber points.
    """
    m = np.asarray(m, dtype=np.float64)
    rng = np.random.default_rng(0) if rng is None else rng
    lx = lambda_of_section(X)
    vals = []
    for _ in range(draws):
        pt = BundlePoint(m, rng.uniform(-1, 1, X.dim))
        t = sharp_oracle(CotangentAtom.from_jet(jet(lx, pt), pt))
        vals.append(-np.asarray(t.v, dtype=np.float64))
    vals = np.array(vals)
    spread = float(np.max(np.abs(vals - vals[0])))
    if spread > tol * (1.0 + float(np.max(np.abs(vals[0])))):
        raise OracleInconsistencyError(f"recovered anchor depends on phi (spread {spread:.3g})")
    return vals[0]


def recover_anchor_matrix(PB, sharp_oracle, nf: int, m) -> np.ndarray:
    cols = [recover_anchor(PB, sharp_oracle, SectionFn.basis(j, nf), m) for j in range(nf)]
    return np.column_stack(cols)


def recover_structure(PB, nf: int, m) -> np.ndarray:
    """``C[i, j, k]`` from brackets of constant basis sections."""
    m = np.asarray(m, dtype=np.float64)
    basis = [SectionFn.basis(i, nf) for i in range(nf)]
    lam = [lambda_of_section(b) for b in basis]
    e = np.eye(nf)
    C = np.zeros((nf, nf, nf))
    for i in range(nf):
        for j in range(i + 1, nf):
            row = np.array([PB(lam[i], lam[j], BundlePoint(m, e[k])) for k in range(nf)])
            C[i, j] = row
            C[j, i] = -row
    return C


def roundtrip_check(
    A: AlgebroidModel,
    seed: int = 0,
    points: int = 3,
    sections: int = 10,
    tol: float = 1e-9,
    tol_invariance: float = 1e-10,
    PB: BracketOracle | None = None,
    sharp_oracle=None,
) -> Report:
    """Forward construction then inverse construction, compared to the original model."""
    rng = np.random.default_rng(seed)
    fwd_pb, fwd_sharp = oracles_for(A)
    PB = PB or fwd_pb
    sharp_oracle = sharp_oracle or fwd_sharp
    nb, nf = A.base_dim, A.fiber_dim
    rep = Report(A, seed, kind="roundtrip")

    anchor_err = c_err = 0.0
    for _ in range(points):
        m = rng.uniform(-1, 1, nb)
        a_rec = recover_anchor_matrix(PB, sharp_oracle, nf, m)
        anchor_err = max(anchor_err, float(np.max(np.abs(a_rec - A.anchor.matrix(m)))))
        C_rec = recover_structure(PB, nf, m)
        c_err = max(c_err, float(np.max(np.abs(C_rec - A.structure.tensor(m)))))
    rep.add("anchor_entries", anchor_err, tol)
    rep.add("structure_entries", c_err, tol)

    br_err = inv_err = leib_err = lam_err = 0.0
    for _ in range(sections):
        m = rng.uniform(-1, 1, nb)
        X = random_section(rng, nb, nf)
        Y = random_section(rng, nb, nf)
        rec = recover_bracket(PB, X, Y, m, rng)
        br_err = max(br_err, float(np.max(np.abs(rec - bracket_sections(A, X, Y, m)))))

        # same value at m, different derivative: the recovered anchor must not move
        X2 = X + linear_bump(m, rng.uniform(-1, 1, nf), rng.uniform(-1, 1, nb))
        a1 = recover_anchor(PB, sharp_oracle, X, m, rng)
        a2 = recover_anchor(PB, sharp_oracle, X2, m, rng)
        inv_err = max(inv_err, float(np.max(np.abs(a1 - a2))))

        # Leibniz of the recovered bracket: [X, fY] = f[X, Y] + (a(X) f) Y
        f = random_base_poly(rng, nb)
        lhs = recover_bracket(PB, X, Y.scaled(f), m, rng)
        fv = evaluate(f, BundlePoint(m, np.zeros(nf)))
        _, df, _ = base_jet(f, m, 1)
        rhs = fv * rec + float(df @ a1) * Y.value(m)
        leib_err = max(leib_err, float(np.max(np.abs(lhs - rhs))))

        # lambda is a bijection at truncation: X(m) is read back from lambda_X
        lx = lambda_of_section(X)
        back = recover_section_value(lambda ph: evaluate(lx, BundlePoint(m, ph)), nf)
        lam_err = max(lam_err, float(np.max(np.abs(back - X.value(m)))))

    rep.add("bracket_values", br_err, tol)
    rep.add("anchor_jet_invariance", inv_err, tol_invariance)
    rep.add("recovered_leibniz", leib_err, tol)
    rep.add("lambda_bijection", lam_err, tol)
    return rep


__all__ = [
    "oracles_for",
    "recover_anchor",
    "recover_anchor_matrix",
    "recover_bracket",
    "recover_section_value",
    "recover_structure",
    "roundtrip_check",
]
