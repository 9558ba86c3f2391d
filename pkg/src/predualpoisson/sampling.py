"""Seeded random draws of points, base functions, sections and bundle functions.

All magnitudes are kept O(1) so absolute tolerances stay meaningful.
"""

from __future__ import annotations

import numpy as np

from .funcalg import (
    BundlePoint,
    SectionFn,
    SmoothFn,
    add,
    const,
    cos,
    exp,
    lambda_of_section,
    m,
    mul,
    phi,
    poly,
    pullback,
    sin,
)


def random_point(rng: np.random.Generator, nb: int, nf: int, scale: float = 1.0) -> BundlePoint:
    return BundlePoint(rng.uniform(-scale, scale, nb), rng.uniform(-scale, scale, nf))


def _coords(rng, n, k):
    return rng.choice(n, size=min(k, n), replace=False)


def random_base_poly(rng: np.random.Generator, nb: int, n_terms: int = 3, degree: int = 2) -> SmoothFn:
    """Sparse polynomial in the base coordinates."""
    terms = [const(rng.uniform(-1, 1))]
    for _ in range(n_terms):
        deg = int(rng.integers(1, degree + 1))
        idx = rng.integers(0, nb, size=deg)
        terms.append(mul(const(rng.uniform(-1, 1)), *[m(int(i)) for i in idx]))
    return add(*terms)


def random_base_fn(rng: np.random.Generator, nb: int) -> SmoothFn:
    """Base function mixing a polynomial with one transcendental term."""
    p = random_base_poly(rng, nb)
    k = int(rng.integers(0, nb))
    prim = (sin, cos, lambda u: exp(0.5 * u))[int(rng.integers(0, 3))]
    return p + rng.uniform(-1, 1) * prim(m(k))


def random_section(
    rng: np.random.Generator, nb: int, nf: int, active: int = 4, degree: int = 2, kind: str = "poly"
) -> SectionFn:
    """Section whose components are constants, with ``active`` of them polynomial (or smooth)."""
    comps = [const(v) for v in rng.uniform(-1, 1, nf)]
    for j in _coords(rng, nf, active):
        f = random_base_poly(rng, nb, n_terms=2, degree=degree)
        if kind == "smooth":
            f = f + 0.5 * sin(m(int(rng.integers(0, nb))))
        comps[j] = f
    return SectionFn(comps)


def random_constant_section(rng: np.random.Generator, nf: int) -> SectionFn:
    return SectionFn.constant(rng.uniform(-1, 1, nf))


def random_tree(rng: np.random.Generator, nb: int, nf: int, depth: int = 6, width: int = 6) -> SmoothFn:
    """Random expression tree of depth at most ``depth`` over a few coordinates.

    ``width`` limits how many distinct base/fiber coordinates appear, so
    trees stay cheap to differentiate in high dimension.
    """
    mk = _coords(rng, nb, width)
    pk = _coords(rng, nf, width)

    def leaf():
        r = rng.random()
        if r < 0.4:
            return m(int(rng.choice(mk)))
        if r < 0.8:
            return phi(int(rng.choice(pk)))
        return const(rng.uniform(-1, 1))

    def node(d):
        if d <= 1 or rng.random() < 0.2:
            return leaf()
        r = rng.random()
        if r < 0.3:
            return add(node(d - 1), node(d - 1))
        if r < 0.55:
            return mul(node(d - 1), node(d - 1))
        if r < 0.65:
            return sin(node(d - 1))
        if r < 0.75:
            return cos(node(d - 1))
        if r < 0.82:
            return exp(mul(const(0.3), node(d - 1)))
        if r < 0.9:
            return poly(node(d - 1), rng.uniform(-1, 1, 3))
        if r < 0.95:
            return pullback(random_base_fn(rng, nb))
        sec = random_section(rng, nb, nf, active=2)
        return lambda_of_section(sec)

    return node(depth)


def random_bundle_fn(rng: np.random.Generator, nb: int, nf: int, kind: str | None = None) -> SmoothFn:
    """One of: random tree, lambda of a section, pullback, or lambda + pullback."""
    kinds = ("tree", "lambda", "pullback", "affine")
    kind = kind or kinds[int(rng.integers(0, len(kinds)))]
    if kind == "tree":
        return random_tree(rng, nb, nf, depth=4)
    if kind == "lambda":
        return lambda_of_section(random_section(rng, nb, nf, kind="smooth"))
    if kind == "pullback":
        return pullback(random_base_fn(rng, nb))
    if kind == "affine":
        return lambda_of_section(random_section(rng, nb, nf)) + pullback(random_base_poly(rng, nb))
    raise ValueError(f"unknown kind {kind!r}")


def flat_function(coeffs_m, coeffs_phi, decay: float = 2.0) -> SmoothFn:
    """``(sum_k c_k m_k / k^decay) * (1 + sum_j d_j phi_j) + 0.5 sin(sum_k c_k m_k / k^decay)``.

    Its base derivative decays like ``k^-decay``, so for ``decay > 1`` it lies in
    ``l^1`` uniformly in the truncation.
    """
    cm = np.asarray(coeffs_m, dtype=np.float64)
    cp = np.asarray(coeffs_phi, dtype=np.float64)
    k = np.arange(1, cm.shape[0] + 1, dtype=np.float64)
    w = cm / k**decay
    lin_m = add(*[float(w[i]) * m(i) for i in range(cm.shape[0])])
    lin_p = add(const(1.0), *[float(cp[j]) * phi(j) for j in range(cp.shape[0])])
    return lin_m * lin_p + 0.5 * sin(lin_m)
