import itertools

import numpy as np
import pytest

from predualpoisson.errors import ValidationError
from predualpoisson.models import (
    BUILTIN_NAMES,
    SL2_CONSTANTS,
    SO3_CONSTANTS,
    make_precotangent,
    make_sequence_triple,
    resolve_family,
    resolve_preset,
    seqtriple,
)


def lie_jacobi_defect(C):
    n = C.shape[0]
    worst = 0.0
    for i, j, k in itertools.product(range(n), repeat=3):
        # [[e_i, e_j], e_k] + cyclic
        t = C[i, j] @ C[:, k] + C[j, k] @ C[:, i] + C[k, i] @ C[:, j]
        worst = max(worst, np.max(np.abs(t)))
    return worst


def test_constants_are_lie_algebras():
    for C in (SO3_CONSTANTS, SL2_CONSTANTS):
        assert np.array_equal(C, -C.transpose(1, 0, 2))
        assert lie_jacobi_defect(C) == 0.0


def test_so3_is_cross_product(rng):
    x, y = rng.standard_normal(3), rng.standard_normal(3)
    np.testing.assert_allclose(np.einsum("i,j,ijk->k", x, y, SO3_CONSTANTS), np.cross(x, y), atol=1e-15)


def test_sl2_relations():
    h, e, f = np.eye(3)
    br = lambda a, b: np.einsum("i,j,ijk->k", a, b, SL2_CONSTANTS)
    np.testing.assert_array_equal(br(h, e), 2 * e)
    np.testing.assert_array_equal(br(h, f), -2 * f)
    np.testing.assert_array_equal(br(e, f), h)


def test_presets_resolve():
    for name in BUILTIN_NAMES:
        A = resolve_preset(name)
        assert A.name == name
    assert resolve_preset("seqtriple:8:weights=unit").anchor.apply(np.zeros(8), np.ones(8)).tolist() == [1.0] * 8
    assert resolve_preset("precotangent").fiber_dim == 16
    for bad in ("nope", "seqtriple:x", "seqtriple:4:weights=odd"):
        with pytest.raises(ValidationError):
            resolve_preset(bad)
    with pytest.raises(ValidationError):
        resolve_family("so3")


def test_families_truncate_consistently():
    fam = make_sequence_triple()
    a8, a16 = fam(8), fam(16)
    np.testing.assert_array_equal(a16.anchor.matrix(np.zeros(16))[:8, :8], a8.anchor.matrix(np.zeros(8)))
    assert resolve_family("precotangent:99")(4).fiber_dim == 4


def test_norm_tags():
    P = make_precotangent(4)
    assert (P.base.norm, P.fiber.norm, P.predual.norm) == ("pinf", "pinf", "p1")
    S = seqtriple(4)
    assert (S.base.norm, S.fiber.norm, S.predual.norm) == ("p2", "pinf", "p1")


def test_bad_weights():
    with pytest.raises(ValidationError):
        seqtriple(4, lambda k: -k)
    with pytest.raises(ValidationError):
        make_precotangent(0)
