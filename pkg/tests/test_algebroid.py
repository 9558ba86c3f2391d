import itertools
import json

import numpy as np
import pytest

from predualpoisson import funcalg as F
from predualpoisson.algebroid import (
    DenseStructure,
    ad_matrix,
    ad_star,
    anchor_apply,
    anchor_morphism_residual,
    bracket_sections,
    first_jet_dependence_check,
    jacobi_check_sections,
    leibniz_check,
    linear_bump,
    model_from_json,
    perturbation_response,
    quadratic_bump,
    validate_skew,
)
from predualpoisson.errors import DimensionError, PreconditionError, ValidationError
from predualpoisson.funcalg import SectionFn
from predualpoisson.models import SO3_CONSTANTS, make_lie_poisson, make_precotangent, seqtriple, so3, so3_action
from predualpoisson.sampling import random_base_poly, random_section


def test_constant_sections_bracket_is_structure_field(builtin, rng):
    nf = builtin.fiber_dim
    x, y = rng.uniform(-1, 1, nf), rng.uniform(-1, 1, nf)
    m = rng.uniform(-1, 1, builtin.base_dim)
    got = bracket_sections(builtin, SectionFn.constant(x), SectionFn.constant(y), m)
    want = np.einsum("i,j,ijk->k", x, y, builtin.structure.tensor(m))
    np.testing.assert_allclose(got, want, atol=1e-15)


def test_anchor_examples():
    A = seqtriple(8)
    for k in range(8):
        e = np.zeros(8)
        e[k] = 1.0
        np.testing.assert_array_equal(anchor_apply(A, np.zeros(8), e), e / (k + 1))
    assert not np.any(anchor_apply(A, np.zeros(8), np.zeros(8)))
    P = make_precotangent(5)
    x = np.arange(5.0)
    np.testing.assert_array_equal(anchor_apply(P, np.ones(5), x), x)


def test_so3action_anchor_is_cross_product(rng):
    A = so3_action()
    m, x = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
    np.testing.assert_allclose(anchor_apply(A, m, x), np.cross(m, x), atol=1e-15)


def test_ad_star_vanishes_for_zero_structure(rng):
    for A in (make_precotangent(6), seqtriple(6)):
        m, x, ph = (rng.uniform(-1, 1, 6) for _ in range(3))
        assert not np.any(ad_star(A, m, x, ph))


def test_ad_and_ad_star_are_transposes(rng):
    A = so3()
    x, ph = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
    M = ad_matrix(A, [0.0], x)
    np.testing.assert_allclose(ad_star(A, [0.0], x, ph), M.T @ ph, atol=1e-15)
    # so(3): ad_x y = x cross y
    y = rng.uniform(-1, 1, 3)
    np.testing.assert_allclose(M @ y, np.cross(x, y), atol=1e-15)


def test_section_antisymmetry_is_exact(builtin, rng):
    for _ in range(10):
        X = random_section(rng, builtin.base_dim, builtin.fiber_dim)
        Y = random_section(rng, builtin.base_dim, builtin.fiber_dim, kind="smooth")
        m = rng.uniform(-1, 1, builtin.base_dim)
        s = bracket_sections(builtin, X, Y, m) + bracket_sections(builtin, Y, X, m)
        assert not np.any(s)


def test_leibniz(builtin, rng):
    nb, nf = builtin.base_dim, builtin.fiber_dim
    X, Y = random_section(rng, nb, nf), random_section(rng, nb, nf)
    m = rng.uniform(-1, 1, nb)
    # constant f: only rounding separates [X, cY] from c[X, Y]
    assert leibniz_check(builtin, X, Y, F.const(2.5), m) <= 1e-14
    for _ in range(10):
        f = random_base_poly(rng, nb)
        assert leibniz_check(builtin, X, Y, f, m) <= 1e-9


def test_so3_jacobi_brute_force_over_basis():
    A = so3()
    basis = [SectionFn.basis(i, 3) for i in range(3)]
    for X, Y, Z in itertools.product(basis, repeat=3):
        assert jacobi_check_sections(A, X, Y, Z, [0.0]) <= 1e-15


def test_jacobi_detects_corrupted_structure():
    C = np.zeros((3, 3, 3))
    C[0, 1, 0], C[1, 0, 0] = 1.0, -1.0  # [e1, e2] = e1
    C[1, 2, 1], C[2, 1, 1] = 1.0, -1.0  # [e2, e3] = e2
    A = make_lie_poisson(C, "broken")
    e = [SectionFn.basis(i, 3) for i in range(3)]
    assert jacobi_check_sections(A, e[0], e[1], e[2], [0.0]) > 0.1


def test_jacobi_and_morphism_on_builtins(builtin, rng):
    nb, nf = builtin.base_dim, builtin.fiber_dim
    for _ in range(5):
        X, Y, Z = (random_section(rng, nb, nf) for _ in range(3))
        m = rng.uniform(-1, 1, nb)
        assert jacobi_check_sections(builtin, X, Y, Z, m) <= 1e-8
        assert anchor_morphism_residual(builtin, X, Y, m) <= 1e-8


def test_first_jet_dependence(rng):
    A = so3_action()
    X, Y = random_section(rng, 3, 3), random_section(rng, 3, 3)
    m = rng.uniform(-1, 1, 3)
    assert first_jet_dependence_check(A, X, X, Y, m) == 0.0
    X2 = X + quadratic_bump(m, rng.uniform(-1, 1, 3))
    assert first_jet_dependence_check(A, X, X2, Y, m) <= 1e-12
    with pytest.raises(PreconditionError):
        first_jet_dependence_check(A, X, X + linear_bump(m, [1, 0, 0], [0, 1, 0]), Y, m)


def test_linear_response_is_first_order():
    A = seqtriple(8)
    m = np.linspace(-0.5, 0.5, 8)
    X = SectionFn.constant(np.ones(8))
    Y = SectionFn([F.m(0)] + [F.const(0.0)] * 7)
    P = linear_bump(m, np.eye(8)[0], np.eye(8)[0])
    r1 = perturbation_response(A, X, P, Y, m, 1e-3)
    r2 = perturbation_response(A, X, P, Y, m, 2e-3)
    assert r1 > 0 and r2 / r1 == pytest.approx(2.0, rel=1e-6)


def test_validate_skew_rejects_non_skew():
    C = SO3_CONSTANTS.copy()
    C[0, 1, 2] = 3.0
    with pytest.raises(ValidationError):
        validate_skew(C)
    with pytest.raises(ValidationError):
        DenseStructure(C)
    with pytest.raises(ValidationError):
        make_lie_poisson(np.zeros((2, 3, 3)))


def test_dimension_checks():
    A = so3()
    with pytest.raises(DimensionError):
        bracket_sections(A, SectionFn.basis(0, 2), SectionFn.basis(1, 3), [0.0])
    with pytest.raises(DimensionError):
        anchor_apply(A, [0.0, 1.0], np.ones(3))


def test_model_json_roundtrip(builtin, rng):
    B = model_from_json(json.loads(json.dumps(builtin.to_json())))
    assert B.digest() == builtin.digest()
    assert B.meta == builtin.meta
    m = rng.uniform(-1, 1, builtin.base_dim)
    np.testing.assert_array_equal(B.anchor.matrix(m), builtin.anchor.matrix(m))
    np.testing.assert_array_equal(B.structure.tensor(m), builtin.structure.tensor(m))


def test_model_json_missing_field():
    d = so3().to_json()
    del d["anchor"]
    with pytest.raises(ValidationError):
        model_from_json(d)
