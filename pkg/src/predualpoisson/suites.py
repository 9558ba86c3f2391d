"""Seeded identity sweeps and condition sweeps producing :class:`Report` objects."""

from __future__ import annotations

import numpy as np

from .algebroid import (
    AlgebroidModel,
    anchor_morphism_residual,
    bracket_sections,
    first_jet_dependence_check,
    jacobi_check_sections,
    leibniz_check,
    quadratic_bump,
)
from .funcalg import evaluate, lambda_of_section
from .poisson import (
    fiber_linearity_residual,
    jacobi_check_functions,
    leibniz_check_functions,
    poisson_bracket,
    predual_condition_diagnostic,
    sharp_consistency_residual,
    structural_relations_check,
)
from .report import Report
from .sampling import (
    random_base_fn,
    random_base_poly,
    random_bundle_fn,
    random_constant_section,
    random_point,
    random_section,
)

DEFAULT_TOLS = {
    "bracket_antisymmetry": 1e-12,
    "sharp_consistency": 1e-12,
    "leibniz_functions": 1e-10,
    "structural_pullbacks": 1e-9,
    "structural_anchor": 1e-9,
    "structural_lambda": 1e-9,
    "jacobi_functions": 1e-7,
    "jacobi_lambda_point_base": 1e-12,
    "section_antisymmetry": 0.0,
    "leibniz_sections": 1e-9,
    "jacobi_sections": 1e-8,
    "anchor_morphism": 1e-8,
    "fiber_linearity": 1e-10,
    "first_jet_dependence": 1e-10,
}


def run_identity_suite(
    A: AlgebroidModel,
    seed: int = 42,
    draws: int = 200,
    tol_overrides: dict | None = None,
    jacobi_draws: int | None = None,
) -> Report:
    """Every bracket identity on ``draws`` seeded random inputs; residual = max over draws."""
    tols = dict(DEFAULT_TOLS)
    unknown = set(tol_overrides or {}) - set(tols)
    if unknown:
        raise KeyError(f"unknown tolerance names: {sorted(unknown)}")
    tols.update(tol_overrides or {})
    jacobi_draws = max(1, draws // 2) if jacobi_draws is None else jacobi_draws
    rng = np.random.default_rng(seed)
    nb, nf = A.base_dim, A.fiber_dim
    worst = dict.fromkeys(tols, 0.0)

    def bump(name, r):
        if r > worst[name] or np.isnan(r):
            worst[name] = float(r)

    for _ in range(draws):
        pt = random_point(rng, nb, nf)
        F, G, H = (random_bundle_fn(rng, nb, nf) for _ in range(3))
        bump("bracket_antisymmetry", abs(poisson_bracket(A, F, G, pt) + poisson_bracket(A, G, F, pt)))
        bump("sharp_consistency", sharp_consistency_residual(A, F, G, pt))
        bump("leibniz_functions", leibniz_check_functions(A, F, G, H, pt))

        X, Y = random_section(rng, nb, nf), random_section(rng, nb, nf, kind="smooth")
        f, g = random_base_fn(rng, nb), random_base_poly(rng, nb)
        r1, r2, r3 = structural_relations_check(A, X, Y, f, g, pt)
        bump("structural_pullbacks", r1)
        bump("structural_anchor", r2)
        bump("structural_lambda", r3)

        xy = bracket_sections(A, X, Y, pt.m)
        yx = bracket_sections(A, Y, X, pt.m)
        bump("section_antisymmetry", float(np.max(np.abs(xy + yx))))
        bump("leibniz_sections", leibniz_check(A, X, Y, f, pt.m))

        lx, ly = lambda_of_section(X), lambda_of_section(Y)
        bump(
            "fiber_linearity",
            fiber_linearity_residual(
                lambda ph: poisson_bracket(A, lx, ly, pt.with_phi(ph)), nf, rng, trials=1
            ),
        )
        X2 = X + quadratic_bump(pt.m, rng.uniform(-1, 1, nf))
        bump("first_jet_dependence", first_jet_dependence_check(A, X, X2, Y, pt.m))

    for _ in range(jacobi_draws):
        pt = random_point(rng, nb, nf)
        F, G, H = (random_bundle_fn(rng, nb, nf) for _ in range(3))
        bump("jacobi_functions", jacobi_check_functions(A, F, G, H, pt))
        X, Y, Z = (random_section(rng, nb, nf) for _ in range(3))
        bump("jacobi_sections", jacobi_check_sections(A, X, Y, Z, pt.m))
        bump("anchor_morphism", anchor_morphism_residual(A, X, Y, pt.m))

    point_base = A.meta.get("point_base", False)
    if point_base:
        for _ in range(jacobi_draws):
            pt = random_point(rng, nb, nf)
            F, G, H = (lambda_of_section(random_constant_section(rng, nf)) for _ in range(3))
            bump("jacobi_lambda_point_base", jacobi_check_functions(A, F, G, H, pt))

    rep = Report(A, seed, kind="verify")
    for name, tol in tols.items():
        if name == "jacobi_lambda_point_base" and not point_base:
            continue
        n = jacobi_draws if name.startswith(("jacobi", "anchor_morphism")) else draws
        rep.add(name, worst[name], tol, draws=n)

    # Negative control: a product of two lambda functions is quadratic in the fiber.
    pt = random_point(rng, nb, nf)
    X, Y = random_constant_section(rng, nf), random_constant_section(rng, nf)
    q = lambda_of_section(X) * lambda_of_section(Y)
    defect = fiber_linearity_residual(lambda ph: evaluate(q, pt.with_phi(ph)), nf, rng)
    rep.add_flag("nonlinear_control_detected", defect > tols["fiber_linearity"], defect=defect)
    rep.extra["draws"] = draws
    rep.extra["tolerances"] = tols
    return rep


def run_condition_suite(family, family_name: str, dims, draws: int = 16, seed: int = 42) -> tuple[Report, object]:
    cr = predual_condition_diagnostic(family, dims, draws=draws, seed=seed)
    rep = Report(family_name, seed, kind="conditions")
    rep.conditions = cr.to_dict()
    rep.add_flag("anchor_dual_conclusive", cr.anchor_dual_verdict.verdict != "inconclusive",
                 verdict=cr.anchor_dual_verdict.verdict)
    rep.add_flag("ad_star_conclusive", cr.ad_star_verdict.verdict != "inconclusive",
                 verdict=cr.ad_star_verdict.verdict)
    rep.extra["is_poisson_manifold"] = cr.is_poisson_manifold
    return rep, cr
