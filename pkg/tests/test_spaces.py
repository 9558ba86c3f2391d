import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predualpoisson.errors import DimensionError, RoleError
from predualpoisson.spaces import (
    SpaceModel,
    Vec,
    classify_norms,
    doubling_dims,
    membership_diagnostic,
    norm,
    pair,
    sample_generic,
    truncate,
)

E3 = SpaceModel(3, "pinf", "fiber")
P3 = SpaceModel(3, "p1", "predual")


def test_pair_values():
    assert pair(Vec([1, 0, 0], E3), Vec([0, 1, 0], P3)) == 0.0
    assert pair(Vec([1, 0, 0], E3), Vec([1, 0, 0], P3)) == 1.0
    assert pair(Vec([1, 2, 3], E3), Vec([1, 1, 1], P3)) == 6.0


def test_pair_rejects_bad_roles_and_dims():
    base = SpaceModel(3, "p2", "base")
    with pytest.raises(RoleError):
        pair(Vec([1, 2, 3], E3), Vec([1, 1, 1], base))
    with pytest.raises(DimensionError):
        pair(Vec([1, 2, 3], E3), Vec([1, 1], SpaceModel(2, "p1", "predual")))


def test_norms():
    assert norm([3, 4], "p2") == 5.0
    assert norm([1, -1, 1], "p1") == 3.0
    assert norm([1, -2, 0.5], "pinf") == 2.0


def test_truncate():
    np.testing.assert_array_equal(truncate(np.array([1.0, 2, 3]), 2), [1, 2])
    np.testing.assert_array_equal(truncate(np.array([1.0, 2]), 4), [1, 2, 0, 0])
    np.testing.assert_array_equal(truncate(np.array([1, 0.5, 0.25, 0.125]), 3), [1, 0.5, 0.25])
    v = truncate(Vec([1, 2, 3], E3), 5)
    assert v.space.dim == 5 and v.space.role == "fiber"
    with pytest.raises(DimensionError):
        truncate(np.ones(3), 0)


def test_vec_is_immutable_and_checks_length():
    v = Vec([1, 2, 3], E3)
    with pytest.raises(ValueError):
        v.coords[0] = 5.0
    with pytest.raises(DimensionError):
        Vec([1, 2], E3)


DIMS = doubling_dims(8, 1024)


def test_harmonic_grows_in_l1():
    v = membership_diagnostic(lambda n: 1.0 / np.arange(1, n + 1), "p1", DIMS)
    assert v.verdict == "growing"
    # the tabulated norms are the harmonic partial sums
    for n, s in v.norms_by_dim:
        assert s == pytest.approx(sum(1.0 / k for k in range(1, n + 1)), rel=1e-12)


def test_inverse_squares_bounded():
    v = membership_diagnostic(lambda n: 1.0 / np.arange(1, n + 1) ** 2, "p1", DIMS)
    assert v.verdict == "bounded"
    assert abs(v.bound_estimate - math.pi**2 / 6) < 1e-2


def test_zero_family_bounded_at_zero():
    v = membership_diagnostic(lambda n: np.zeros(n), "p1", DIMS)
    assert v.bounded and v.bound_estimate == 0.0


def test_wrong_dimension_family():
    with pytest.raises(DimensionError):
        membership_diagnostic(lambda n: np.ones(3), "p1", DIMS)


def test_dims_need_three_increasing():
    with pytest.raises(ValueError):
        membership_diagnostic(lambda n: np.ones(n), "p1", [8, 16])
    with pytest.raises(ValueError):
        membership_diagnostic(lambda n: np.ones(n), "p1", [8, 32, 16])


def test_slow_decay_is_not_called_bounded():
    # sum 1/(k log^2 k) converges so slowly that a desk-scale sweep must not claim "bounded"
    def fam(n):
        k = np.arange(2, n + 2, dtype=float)
        return 1.0 / (k * np.log(k) ** 0.5)

    assert classify_norms(*zip(*membership_diagnostic(fam, "p1", DIMS).norms_by_dim), "p1").verdict != "bounded"


def test_generic_samples_have_expected_norm_class(rng):
    big = doubling_dims(8, 4096)
    for tag, expect in (("p1", "bounded"), ("p2", "bounded")):
        x = sample_generic(tag, big[-1], rng)
        assert membership_diagnostic(lambda n: x[:n], tag, big).verdict == expect
    u = sample_generic("pinf", big[-1], rng)
    assert membership_diagnostic(lambda n: u[:n], "p1", big).verdict == "growing"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20))
def test_norm_inequalities(xs):
    x = np.array(xs)
    assert norm(x, "pinf") <= norm(x, "p2") * (1 + 1e-12) + 1e-300
    assert norm(x, "p2") <= norm(x, "p1") * (1 + 1e-12) + 1e-300


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=10), st.integers(1, 15))
def test_truncate_roundtrip(xs, n):
    x = np.array(xs)
    t = truncate(x, n)
    assert t.shape == (n,)
    k = min(n, len(xs))
    np.testing.assert_array_equal(t[:k], x[:k])
    assert not np.any(t[k:])
