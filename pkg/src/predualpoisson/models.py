"""Built-in algebroid models and preset name resolution.

Preset names: ``so3``, ``sl2``, ``so3action``, ``precotangent:N``,
``seqtriple:N[:weights=harmonic|unit]``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .algebroid import (
    AlgebroidModel,
    ConstantAnchor,
    DenseStructure,
    DiagonalAnchor,
    ExpressionAnchor,
    ZeroStructure,
    validate_skew,
)
from .errors import ValidationError
from .funcalg import const, m
from .spaces import SpaceModel


def _levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


# [e_i, e_j] = eps_ijk e_k
SO3_CONSTANTS = _levi_civita()

# basis (h, e, f): [h, e] = 2e, [h, f] = -2f, [e, f] = h
SL2_CONSTANTS = np.zeros((3, 3, 3))
SL2_CONSTANTS[0, 1, 1], SL2_CONSTANTS[1, 0, 1] = 2.0, -2.0
SL2_CONSTANTS[0, 2, 2], SL2_CONSTANTS[2, 0, 2] = -2.0, 2.0
SL2_CONSTANTS[1, 2, 0], SL2_CONSTANTS[2, 1, 0] = 1.0, -1.0


def make_lie_poisson(structure_constants, name: str = "lie_poisson") -> AlgebroidModel:
    """A Lie algebra viewed as an algebroid over a point.

    The point base is encoded as a 1-dimensional base with a zero anchor.
    """
    C = validate_skew(structure_constants)
    n = C.shape[0]
    return AlgebroidModel(
        base=SpaceModel(1, "p2", "base"),
        fiber=SpaceModel(n, "p2", "fiber"),
        predual=SpaceModel(n, "p2", "predual"),
        anchor=ConstantAnchor(np.zeros((1, n))),
        structure=DenseStructure(C),
        name=name,
        meta={"point_base": True},
    )


def so3() -> AlgebroidModel:
    return make_lie_poisson(SO3_CONSTANTS, "so3")


def sl2() -> AlgebroidModel:
    return make_lie_poisson(SL2_CONSTANTS, "sl2")


def so3_action() -> AlgebroidModel:
    """Action algebroid of so(3) on R^3 with anchor ``a_m x = m x x``.

    Not one of the preset families of the construction, but the only
    built-in whose anchor varies with the base point; it exercises the
    derivative-of-anchor terms in every identity.
    """
    m0, m1, m2 = m(0), m(1), m(2)
    zero = const(0.0)
    entries = [[zero, -m2, m1], [m2, zero, -m0], [-m1, m0, zero]]
    return AlgebroidModel(
        base=SpaceModel(3, "p2", "base"),
        fiber=SpaceModel(3, "p2", "fiber"),
        predual=SpaceModel(3, "p2", "predual"),
        anchor=ExpressionAnchor(entries),
        structure=DenseStructure(SO3_CONSTANTS),
        name="so3action",
    )


def make_precotangent(n: int) -> AlgebroidModel:
    """Tangent algebroid of ``M = l^inf`` (identity anchor, zero structure field).

    The predual bundle is the precotangent bundle with fiber ``l^1``.
    """
    if n < 1:
        raise ValidationError("precotangent dimension must be >= 1")
    return AlgebroidModel(
        base=SpaceModel(n, "pinf", "base"),
        fiber=SpaceModel(n, "pinf", "fiber"),
        predual=SpaceModel(n, "p1", "predual"),
        anchor=DiagonalAnchor(np.ones(n)),
        structure=ZeroStructure(n),
        name=f"precotangent:{n}",
    )


def harmonic_weights(k: np.ndarray) -> np.ndarray:
    return 1.0 / k


def unit_weights(k: np.ndarray) -> np.ndarray:
    return np.ones_like(k)


WEIGHTS = {"harmonic": harmonic_weights, "unit": unit_weights}


def _weights_fn(weights) -> tuple[Callable, str]:
    if isinstance(weights, str):
        if weights not in WEIGHTS:
            raise ValidationError(f"unknown weights {weights!r}")
        return WEIGHTS[weights], weights
    return weights, getattr(weights, "__name__", "custom")


def seqtriple(n: int, weights="harmonic") -> AlgebroidModel:
    """``M = l^2``, ``E = M x l^inf`` with predual ``l^1``, anchor ``(AX)^k = w_k X^k``, C = 0."""
    fn, label = _weights_fn(weights)
    k = np.arange(1, n + 1, dtype=np.float64)
    w = np.asarray(fn(k), dtype=np.float64)
    if w.shape != (n,) or np.any(w <= 0):
        raise ValidationError("weights must be positive")
    suffix = "" if label == "harmonic" else f":weights={label}"
    return AlgebroidModel(
        base=SpaceModel(n, "p2", "base"),
        fiber=SpaceModel(n, "pinf", "fiber"),
        predual=SpaceModel(n, "p1", "predual"),
        anchor=DiagonalAnchor(w),
        structure=ZeroStructure(n),
        name=f"seqtriple:{n}{suffix}",
        meta={"weights": label},
    )


def make_sequence_triple(weights="harmonic") -> Callable[[int], AlgebroidModel]:
    """Family ``N -> seqtriple(N, weights)``, coherent by diagonal extension."""
    return lambda n: seqtriple(n, weights)


def precotangent_family() -> Callable[[int], AlgebroidModel]:
    return make_precotangent


def _parse(name: str):
    parts = name.strip().split(":")
    head = parts[0].lower()
    n = None
    opts = {}
    for p in parts[1:]:
        if "=" in p:
            k, v = p.split("=", 1)
            opts[k.strip()] = v.strip()
        elif p:
            try:
                n = int(p)
            except ValueError:
                raise ValidationError(f"bad preset component {p!r} in {name!r}") from None
    return head, n, opts


def resolve_preset(name: str) -> AlgebroidModel:
    head, n, opts = _parse(name)
    if head == "so3":
        return so3()
    if head == "sl2":
        return sl2()
    if head == "so3action":
        return so3_action()
    if head == "precotangent":
        return make_precotangent(n or 16)
    if head == "seqtriple":
        return seqtriple(n or 32, opts.get("weights", "harmonic"))
    raise ValidationError(f"unknown model {name!r}")


def resolve_family(name: str) -> Callable[[int], AlgebroidModel]:
    """Truncation family for a preset name; any explicit ``N`` is ignored."""
    head, _, opts = _parse(name)
    if head == "precotangent":
        return precotangent_family()
    if head == "seqtriple":
        return make_sequence_triple(opts.get("weights", "harmonic"))
    raise ValidationError(f"{name!r} is not a truncation family")


BUILTIN_NAMES = ("so3", "sl2", "so3action", "precotangent:16", "seqtriple:32")
