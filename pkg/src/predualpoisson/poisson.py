"""The linear Poisson structure on the predual bundle of a Lie algebroid.

In the trivialization, with ``mu_f = df/dm`` and ``x_f = df/dphi``,

    {f, g}(m, phi) = <a_m x_f, mu_g> - <a_m x_g, mu_f> + <C_m(x_f, x_g), phi>

and the sharp map sends a covector ``(mu, x)`` to the tangent vector

    (v, psi) = (-a_m x, a_m^T mu - (ad_x)^* phi),

so that ``{f, g} = <df, sharp(dg)>``. With these signs
``{lambda_X, f o pi} = (a(X) f) o pi`` and ``{lambda_X, lambda_Y} = lambda_[X,Y]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .algebroid import (
    AlgebroidModel,
    DiagonalAnchor,
    anchor_derivative,
    bracket_sections,
)
from .errors import DimensionError, FamilyError
from .funcalg import (
    BundlePoint,
    Jet1,
    SmoothFn,
    evaluate,
    jet,
    jet2,
    lambda_of_section,
    pullback,
)
from .spaces import DUAL_TAG, MembershipVerdict, membership_diagnostic, norm, sample_generic


@dataclass(frozen=True)
class CotangentAtom:
    base_pt: BundlePoint
    mu: np.ndarray  # in M^*
    x: np.ndarray  # in E

    @classmethod
    def from_jet(cls, j: Jet1, pt: BundlePoint) -> "CotangentAtom":
        return cls(pt, np.asarray(j.d_m), np.asarray(j.d_phi))


@dataclass(frozen=True)
class TangentAtom:
    base_pt: BundlePoint
    v: np.ndarray  # in M
    psi: np.ndarray  # dual-fiber slot; predual membership is diagnosed, not enforced

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.v, self.psi])


def _check_pt(A: AlgebroidModel, pt: BundlePoint) -> None:
    if pt.base_dim != A.base_dim or pt.fiber_dim != A.fiber_dim:
        raise DimensionError(
            f"point dims ({pt.base_dim}, {pt.fiber_dim}) vs model ({A.base_dim}, {A.fiber_dim})"
        )


def _anchor_matrix(A: AlgebroidModel, m) -> np.ndarray:
    return A.anchor.matrix(m)


def bracket_of_covectors(A: AlgebroidModel, pt: BundlePoint, mu_f, x_f, mu_g, x_g) -> float:
    """The bracket formula evaluated on two covectors at ``pt``."""
    m = pt.m
    t = float(mu_g @ A.anchor.apply(m, x_f)) - float(mu_f @ A.anchor.apply(m, x_g))
    if A.structure.is_zero:
        return t
    M = A.structure.phi_matrix(m, pt.phi)
    return t + _kernels.skew_pairing(M, x_f, x_g)


def poisson_bracket(A: AlgebroidModel, f: SmoothFn, g: SmoothFn, pt: BundlePoint) -> float:
    _check_pt(A, pt)
    jf, jg = jet(f, pt), jet(g, pt)
    return bracket_of_covectors(A, pt, jf.d_m, jf.d_phi, jg.d_m, jg.d_phi)


def sharp(A: AlgebroidModel, atom: CotangentAtom) -> TangentAtom:
    pt = atom.base_pt
    _check_pt(A, pt)
    mu = np.asarray(atom.mu, dtype=np.float64)
    x = np.asarray(atom.x, dtype=np.float64)
    if mu.shape != (A.base_dim,) or x.shape != (A.fiber_dim,):
        raise DimensionError("cotangent atom does not match the model")
    v = -A.anchor.apply(pt.m, x)
    psi = A.anchor.apply_transpose(pt.m, mu)
    if not A.structure.is_zero:
        psi = psi - A.structure.ad_star(pt.m, x, pt.phi)
    return TangentAtom(pt, v, psi)


def pair_cotangent(c, t: TangentAtom) -> float:
    """``<(mu, x), (v, psi)> = <mu, v> + <psi, x>``; ``c`` may be a Jet1 or CotangentAtom."""
    mu = c.d_m if isinstance(c, Jet1) else c.mu
    x = c.d_phi if isinstance(c, Jet1) else c.x
    return float(mu @ t.v + t.psi @ x)


def hamiltonian_vector(A: AlgebroidModel, H: SmoothFn, pt: BundlePoint) -> TangentAtom:
    return sharp(A, CotangentAtom.from_jet(jet(H, pt), pt))


# ---------------------------------------------------------------------------
# first jet of a bracket, for nested brackets
# ---------------------------------------------------------------------------


def bracket_value_and_grad(A: AlgebroidModel, f: SmoothFn, g: SmoothFn, pt: BundlePoint):
    """``{f, g}(pt)`` and its exact gradient over ``z = (m, phi)``.

    Uses second jets of ``f`` and ``g`` together with the first derivatives
    of the anchor and structure fields.
    """
    _check_pt(A, pt)
    jf, jg = jet2(f, pt), jet2(g, pt)
    return _bracket_grad_from_jet2(A, pt, jf, jg)


def _bracket_grad_from_jet2(A, pt, jf, jg):
    nb = A.base_dim
    m, ph = pt.m, pt.phi
    mu_f, x_f = jf.grad[:nb], jf.grad[nb:]
    mu_g, x_g = jg.grad[:nb], jg.grad[nb:]
    Hf_m, Hf_x = jf.hess[:nb], jf.hess[nb:]
    Hg_m, Hg_x = jg.hess[:nb], jg.hess[nb:]

    ax_f = A.anchor.apply(m, x_f)
    ax_g = A.anchor.apply(m, x_g)
    if isinstance(A.anchor, DiagonalAnchor):
        aT_mu_g = A.anchor.weights * mu_g
        aT_mu_f = A.anchor.weights * mu_f
    else:
        a = _anchor_matrix(A, m)
        aT_mu_g = a.T @ mu_g
        aT_mu_f = a.T @ mu_f

    value = bracket_of_covectors(A, pt, mu_f, x_f, mu_g, x_g)
    grad = ax_f @ Hg_m + aT_mu_g @ Hf_x - ax_g @ Hf_m - aT_mu_f @ Hg_x
    if not A.anchor.is_constant:
        grad[:nb] += mu_g @ A.anchor.deriv_apply(m, x_f) - mu_f @ A.anchor.deriv_apply(m, x_g)
    st = A.structure
    if not st.is_zero:
        M = st.phi_matrix(m, ph)
        grad += Hf_x.T @ (M @ x_g) + Hg_x.T @ (M.T @ x_f)
        grad[nb:] += st.apply(m, x_f, x_g)
        if not st.is_constant:
            grad[:nb] += ph @ st.deriv_apply(m, x_f, x_g)
    return value, grad


def _fd_bracket_grad(A, f, g, pt, h=1e-5):
    z = pt.z
    nb = pt.base_dim
    out = np.empty_like(z)

    def at(zz):
        return poisson_bracket(A, f, g, BundlePoint(zz[:nb], zz[nb:]))

    for i in range(z.shape[0]):
        def central(s):
            zp, zm = z.copy(), z.copy()
            zp[i] += s
            zm[i] -= s
            return (at(zp) - at(zm)) / (2 * s)

        out[i] = (4 * central(h / 2) - central(h)) / 3
    return out


def jacobi_check_functions(
    A: AlgebroidModel, f: SmoothFn, g: SmoothFn, h: SmoothFn, pt: BundlePoint, method: str = "exact"
) -> float:
    """``|{{f,g},h} + {{g,h},f} + {{h,f},g}|`` at ``pt``.

    ``method="exact"`` differentiates the inner brackets in closed form;
    ``method="fd"`` uses finite differences of the inner bracket instead.
    """
    _check_pt(A, pt)
    nb = A.base_dim
    if method == "exact":
        js = {k: jet2(fn, pt) for k, fn in (("f", f), ("g", g), ("h", h))}
        grads = {k: j.grad for k, j in js.items()}

        def inner(a, b):
            return _bracket_grad_from_jet2(A, pt, js[a], js[b])[1]
    elif method == "fd":
        fns = {"f": f, "g": g, "h": h}
        grads = {k: jet(fn, pt).grad for k, fn in fns.items()}

        def inner(a, b):
            return _fd_bracket_grad(A, fns[a], fns[b], pt)
    else:
        raise ValueError(f"unknown method {method!r}")

    total = 0.0
    for a, b, c in (("f", "g", "h"), ("g", "h", "f"), ("h", "f", "g")):
        gi = inner(a, b)
        gc = grads[c]
        total += bracket_of_covectors(A, pt, gi[:nb], gi[nb:], gc[:nb], gc[nb:])
    return abs(total)


def leibniz_check_functions(A, f, g, h, pt) -> float:
    """``|{f, g h} - g {f, h} - h {f, g}|`` at ``pt``."""
    lhs = poisson_bracket(A, f, g * h, pt)
    rhs = evaluate(g, pt) * poisson_bracket(A, f, h, pt) + evaluate(h, pt) * poisson_bracket(A, f, g, pt)
    return abs(lhs - rhs)


def sharp_consistency_residual(A, f, g, pt) -> float:
    jf, jg = jet(f, pt), jet(g, pt)
    via_sharp = pair_cotangent(jf, sharp(A, CotangentAtom.from_jet(jg, pt)))
    return abs(poisson_bracket(A, f, g, pt) - via_sharp)


def structural_relations_check(A: AlgebroidModel, X, Y, f_base, g_base, pt: BundlePoint):
    """Residuals of ``{f o pi, g o pi} = 0``, ``{lambda_X, f o pi} = (a(X)f) o pi``,
    ``{lambda_X, lambda_Y} = lambda_[X,Y]`` at ``pt``."""
    _check_pt(A, pt)
    pf, pg = pullback(f_base), pullback(g_base)
    lx, ly = lambda_of_section(X), lambda_of_section(Y)
    r1 = abs(poisson_bracket(A, pf, pg, pt))
    r2 = abs(poisson_bracket(A, lx, pf, pt) - anchor_derivative(A, f_base, X, pt.m))
    r3 = abs(poisson_bracket(A, lx, ly, pt) - float(pt.phi @ bracket_sections(A, X, Y, pt.m)))
    return r1, r2, r3


def fiber_linearity_residual(
    func: Callable[[np.ndarray], float], nf: int, rng: np.random.Generator, trials: int = 4
) -> float:
    """Largest relative defect of ``func(a phi + b psi) = a func(phi) + b func(psi)``."""
    worst = 0.0
    for _ in range(trials):
        a, b = rng.uniform(-2.0, 2.0, 2)
        p1 = rng.standard_normal(nf)
        p2 = rng.standard_normal(nf)
        lhs = func(a * p1 + b * p2)
        r1, r2 = func(p1), func(p2)
        rhs = a * r1 + b * r2
        scale = 1.0 + abs(a * r1) + abs(b * r2)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def linearity_check(A: AlgebroidModel, X, Y, pt: BundlePoint, rng=None, tol: float = 1e-10) -> bool:
    """Whether ``{lambda_X, lambda_Y}`` is fiber-wise linear at the base point of ``pt``."""
    rng = np.random.default_rng(0) if rng is None else rng
    lx, ly = lambda_of_section(X), lambda_of_section(Y)

    def h(ph):
        return poisson_bracket(A, lx, ly, pt.with_phi(ph))

    return fiber_linearity_residual(h, A.fiber_dim, rng) <= tol


def function_is_fiber_linear(f: SmoothFn, pt: BundlePoint, rng=None, tol: float = 1e-10) -> bool:
    rng = np.random.default_rng(0) if rng is None else rng
    return fiber_linearity_residual(lambda ph: evaluate(f, pt.with_phi(ph)), pt.fiber_dim, rng) <= tol


# ---------------------------------------------------------------------------
# predual conditions
# ---------------------------------------------------------------------------


@dataclass
class ConditionReport:
    anchor_dual_verdict: MembershipVerdict
    ad_star_verdict: MembershipVerdict
    draws: list = field(default_factory=list)
    dims: list = field(default_factory=list)

    @property
    def is_poisson_manifold(self) -> bool:
        return self.anchor_dual_verdict.bounded and self.ad_star_verdict.bounded

    @property
    def conclusive(self) -> bool:
        return "inconclusive" not in (self.anchor_dual_verdict.verdict, self.ad_star_verdict.verdict)

    def to_dict(self) -> dict:
        return {
            "dims": [int(d) for d in self.dims],
            "anchor_dual": self.anchor_dual_verdict.to_dict(),
            "ad_star": self.ad_star_verdict.to_dict(),
            "is_poisson_manifold": self.is_poisson_manifold,
            "draws": self.draws,
        }


def combine_verdicts(verdicts: Sequence[MembershipVerdict]) -> MembershipVerdict:
    """Worst case over draws: any growing wins, then any inconclusive, else bounded."""
    for kind in ("growing", "inconclusive"):
        hits = [v for v in verdicts if v.verdict == kind]
        if hits:
            return hits[0]
    return max(verdicts, key=lambda v: v.bound_estimate)


def _coherent(family, dims, rng) -> None:
    lo, hi = family(dims[0]), family(dims[-1])
    for A, n in ((lo, dims[0]), (hi, dims[-1])):
        if A.fiber_dim != n or A.base_dim != n:
            raise FamilyError(f"family({n}) has dims ({A.base_dim}, {A.fiber_dim})")
    n = dims[0]
    m_lo = np.zeros(n)
    m_hi = np.zeros(dims[-1])
    for _ in range(3):
        x = rng.standard_normal(n)
        xp = np.zeros(dims[-1])
        xp[:n] = x
        if not np.allclose(hi.anchor.apply(m_hi, xp)[:n], lo.anchor.apply(m_lo, x), rtol=1e-12, atol=1e-14):
            raise FamilyError("anchor of the larger truncation does not extend the smaller one")
        y = rng.standard_normal(n)
        yp = np.zeros(dims[-1])
        yp[:n] = y
        if not np.allclose(
            hi.structure.apply(m_hi, xp, yp)[:n], lo.structure.apply(m_lo, x, y), rtol=1e-12, atol=1e-14
        ):
            raise FamilyError("structure field of the larger truncation does not extend the smaller one")


def predual_condition_diagnostic(
    family: Callable[[int], AlgebroidModel],
    dims: Sequence[int],
    draws: int = 16,
    seed: int = 0,
) -> ConditionReport:
    """Asymptotic test of ``a^*(M^*) in E_*`` and ``(ad_x)^*(E_*) in E_*``.

    For each draw, generic ``mu`` (base dual), ``x`` (fiber), ``phi``
    (predual) and base point ``m`` are drawn once at the largest dimension
    and truncated, so each draw is coherent across ``dims``. The images
    ``N -> a_N^* mu`` and ``N -> (ad_x)_N^* phi`` are then fed to
    :func:`membership_diagnostic` in the predual norm.
    """
    dims = [int(d) for d in dims]
    rng = np.random.default_rng(seed)
    _coherent(family, dims, rng)
    models = {n: family(n) for n in dims}
    top = models[dims[-1]]
    nmax = dims[-1]
    mu_tag = DUAL_TAG[top.base.norm]
    target = top.predual.norm

    anchor_vs, ad_vs, rows = [], [], []
    for d in range(draws):
        mu = sample_generic(mu_tag, nmax, rng)
        x = sample_generic(top.fiber.norm, nmax, rng)
        ph = sample_generic(target, nmax, rng)
        m0 = sample_generic(top.base.norm, nmax, rng)

        def a_img(n):
            return models[n].anchor.apply_transpose(m0[:n], mu[:n])

        def ad_img(n):
            return models[n].structure.ad_star(m0[:n], x[:n], ph[:n])

        va = membership_diagnostic(a_img, target, dims)
        vc = membership_diagnostic(ad_img, target, dims)
        anchor_vs.append(va)
        ad_vs.append(vc)
        rows.append(
            {
                "draw": d,
                "mu_norm": norm(mu, mu_tag),
                "mu_norm_tag": mu_tag,
                "anchor_dual": va.to_dict(),
                "ad_star": vc.to_dict(),
            }
        )
    return ConditionReport(combine_verdicts(anchor_vs), combine_verdicts(ad_vs), rows, dims)
