"""Local data of a Lie algebroid on a trivial bundle ``U x E``.

The bracket of sections in a single global trivialization is

    [X, Y](m) = DY(m) a_m X(m) - DX(m) a_m Y(m) + C_m(X(m), Y(m)),

with anchor ``a_m : E -> M`` and a skew structure field ``C_m``. Both
fields expose their first derivative in ``m`` so that the first jet of a
bracket (needed for nested brackets) is exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionError, PreconditionError, ValidationError
from .funcalg import SectionFn, SectionJet, base_jet, const, from_json, m as m_coord, to_json
from .spaces import SpaceModel

# ---------------------------------------------------------------------------
# anchor fields
# ---------------------------------------------------------------------------


class AnchorField:
    """Field of linear maps ``a_m : R^nf -> R^nb``."""

    base_dim: int
    fiber_dim: int
    is_constant: bool = False

    def matrix(self, m) -> np.ndarray:
        raise NotImplementedError

    def apply(self, m, x) -> np.ndarray:
        return self.matrix(m) @ np.asarray(x, dtype=np.float64)

    def apply_transpose(self, m, mu) -> np.ndarray:
        return self.matrix(m).T @ np.asarray(mu, dtype=np.float64)

    def deriv(self, m) -> np.ndarray:
        """``(nb, nf, nb)`` array with ``[i, j, k] = d a_ij / d m_k``."""
        raise NotImplementedError

    def deriv_apply(self, m, x) -> np.ndarray:
        """``(nb, nb)`` matrix ``[i, k] = d/dm_k (a_m x)_i`` with ``x`` held fixed."""
        if self.is_constant:
            return np.zeros((self.base_dim, self.base_dim))
        return np.einsum("ijk,j->ik", self.deriv(m), np.asarray(x, dtype=np.float64))

    def to_json(self):
        raise NotImplementedError


class ConstantAnchor(AnchorField):
    is_constant = True

    def __init__(self, mat):
        mat = np.array(mat, dtype=np.float64)
        if mat.ndim != 2:
            raise ValidationError("anchor matrix must be 2-dimensional")
        mat.setflags(write=False)
        self.mat = mat
        self.base_dim, self.fiber_dim = mat.shape

    def matrix(self, m):
        return self.mat

    def apply(self, m, x):
        return self.mat @ np.asarray(x, dtype=np.float64)

    def apply_transpose(self, m, mu):
        return self.mat.T @ np.asarray(mu, dtype=np.float64)

    def deriv(self, m):
        return np.zeros((self.base_dim, self.fiber_dim, self.base_dim))

    def to_json(self):
        return {"kind": "constant", "matrix": self.mat.tolist()}


class DiagonalAnchor(AnchorField):
    """Constant diagonal anchor ``x -> w * x``; never materializes the matrix for apply."""

    is_constant = True

    def __init__(self, weights):
        w = np.array(weights, dtype=np.float64).reshape(-1)
        w.setflags(write=False)
        self.weights = w
        self.base_dim = self.fiber_dim = w.shape[0]

    def matrix(self, m):
        return np.diag(self.weights)

    def apply(self, m, x):
        return self.weights * np.asarray(x, dtype=np.float64)

    apply_transpose = apply

    def deriv(self, m):
        return np.zeros((self.base_dim, self.fiber_dim, self.base_dim))

    def to_json(self):
        return {"kind": "diagonal", "weights": self.weights.tolist()}


class ExpressionAnchor(AnchorField):
    """Anchor whose entries are base expressions ``a_ij(m)``."""

    def __init__(self, entries):
        rows = [[e if hasattr(e, "op") else const(float(e)) for e in row] for row in entries]
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise ValidationError("anchor entries must form a rectangular array")
        for r in rows:
            for e in r:
                if not e.is_base_only:
                    raise ValidationError("anchor entries must be base functions")
        self.entries = rows
        self.base_dim = len(rows)
        self.fiber_dim = len(rows[0])

    def _eval(self, m, order):
        m = np.asarray(m, dtype=np.float64)
        nb, nf = self.base_dim, self.fiber_dim
        mat = np.empty((nb, nf))
        der = np.empty((nb, nf, m.shape[0])) if order else None
        for i in range(nb):
            for j in range(nf):
                v, g, _ = base_jet(self.entries[i][j], m, order)
                mat[i, j] = v
                if order:
                    der[i, j] = g
        return mat, der

    def matrix(self, m):
        return self._eval(m, 0)[0]

    def deriv(self, m):
        return self._eval(m, 1)[1]

    def to_json(self):
        return {"kind": "expression", "entries": [[to_json(e) for e in r] for r in self.entries]}


def anchor_from_json(d) -> AnchorField:
    if isinstance(d, list):
        return ConstantAnchor(d)
    kind = d.get("kind", "constant")
    if kind == "constant":
        return ConstantAnchor(d["matrix"])
    if kind == "diagonal":
        return DiagonalAnchor(d["weights"])
    if kind == "expression":
        return ExpressionAnchor([[from_json(e) for e in r] for r in d["entries"]])
    raise ValidationError(f"unknown anchor kind {kind!r}")


# ---------------------------------------------------------------------------
# structure fields
# ---------------------------------------------------------------------------


class StructureField:
    """Field of skew bilinear maps ``C_m : E x E -> E``."""

    dim: int
    is_constant: bool = False
    is_zero: bool = False

    def apply(self, m, x, y) -> np.ndarray:
        raise NotImplementedError

    def ad_star(self, m, x, phi) -> np.ndarray:
        """``(ad_x)^* phi`` with ``ad_x y = C_m(x, y)``."""
        raise NotImplementedError

    def phi_matrix(self, m, phi) -> np.ndarray:
        """``M[i, j] = <C_m(e_i, e_j), phi>``."""
        raise NotImplementedError

    def deriv_apply(self, m, x, y) -> np.ndarray:
        """``(nf, nb)`` matrix of ``d/dm_k C_m(x, y)`` with ``x, y`` held fixed."""
        raise NotImplementedError

    def tensor(self, m) -> np.ndarray:
        e = np.eye(self.dim)
        return np.array([[self.apply(m, e[i], e[j]) for j in range(self.dim)] for i in range(self.dim)])


class ZeroStructure(StructureField):
    is_constant = True
    is_zero = True

    def __init__(self, dim: int, base_dim: int | None = None):
        self.dim = int(dim)
        self.base_dim = base_dim

    def apply(self, m, x, y):
        return np.zeros(self.dim)

    def ad_star(self, m, x, phi):
        return np.zeros(self.dim)

    def phi_matrix(self, m, phi):
        return np.zeros((self.dim, self.dim))

    def deriv_apply(self, m, x, y):
        return np.zeros((self.dim, np.asarray(m).shape[0]))

    def tensor(self, m):
        return np.zeros((self.dim,) * 3)

    def to_json(self):
        return {"kind": "zero", "dim": self.dim}


def validate_skew(C, atol: float = 0.0) -> np.ndarray:
    C = np.array(C, dtype=np.float64)
    if C.ndim != 3 or C.shape[0] != C.shape[1] or C.shape[1] != C.shape[2]:
        raise ValidationError(f"structure constants must be n x n x n, got {C.shape}")
    err = float(np.max(np.abs(C + C.transpose(1, 0, 2)))) if C.size else 0.0
    if err > atol:
        raise ValidationError(f"structure constants not skew in the first two indices (max |C_ij+C_ji| = {err:g})")
    return C


class DenseStructure(StructureField):
    """Constant structure constants ``C[i, j, k] = (C(e_i, e_j))_k``."""

    is_constant = True

    def __init__(self, C):
        C = validate_skew(C)
        C = np.ascontiguousarray(C)
        C.setflags(write=False)
        self.C = C
        self.dim = C.shape[0]
        self.is_zero = not np.any(C)

    def apply(self, m, x, y):
        return _kernels.skew_bilinear(self.C, x, y)

    def ad_star(self, m, x, phi):
        return _kernels.ad_star(self.C, x, phi)

    def phi_matrix(self, m, phi):
        return _kernels.phi_matrix(self.C, phi)

    def deriv_apply(self, m, x, y):
        return np.zeros((self.dim, np.asarray(m).shape[0]))

    def tensor(self, m):
        return np.array(self.C)

    def to_json(self):
        return {"kind": "dense", "constants": self.C.tolist()}


class CallableStructure(StructureField):
    """m-dependent structure field from callables.

    ``tensor_fn(m)`` returns the ``(nf, nf, nf)`` constants at ``m`` and
    ``deriv_fn(m)`` their derivative, shape ``(nf, nf, nf, nb)``.
    """

    def __init__(self, dim: int, tensor_fn, deriv_fn):
        self.dim = int(dim)
        self._tensor = tensor_fn
        self._deriv = deriv_fn

    def tensor(self, m):
        return validate_skew(self._tensor(np.asarray(m, dtype=np.float64)), atol=1e-12)

    def apply(self, m, x, y):
        return _kernels.skew_bilinear(np.ascontiguousarray(self.tensor(m)), x, y)

    def ad_star(self, m, x, phi):
        return _kernels.ad_star(np.ascontiguousarray(self.tensor(m)), x, phi)

    def phi_matrix(self, m, phi):
        return _kernels.phi_matrix(np.ascontiguousarray(self.tensor(m)), phi)

    def deriv_apply(self, m, x, y):
        dC = np.asarray(self._deriv(np.asarray(m, dtype=np.float64)))
        return np.einsum("i,j,ijkl->kl", x, y, dC)

    def to_json(self):
        raise ValidationError("callable structure fields are not serializable")


def structure_from_json(d, dim: int) -> StructureField:
    if isinstance(d, list):
        return DenseStructure(d)
    kind = d.get("kind", "dense")
    if kind == "zero":
        return ZeroStructure(int(d.get("dim", dim)))
    if kind == "dense":
        return DenseStructure(d["constants"])
    raise ValidationError(f"unknown structure kind {kind!r}")


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlgebroidModel:
    base: SpaceModel
    fiber: SpaceModel
    predual: SpaceModel
    anchor: AnchorField
    structure: StructureField
    name: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.fiber.dim != self.predual.dim:
            raise DimensionError("fiber and predual must share a dimension")
        if (self.anchor.base_dim, self.anchor.fiber_dim) != (self.base.dim, self.fiber.dim):
            raise DimensionError(
                f"anchor shape {(self.anchor.base_dim, self.anchor.fiber_dim)} "
                f"does not match ({self.base.dim}, {self.fiber.dim})"
            )
        if self.structure.dim != self.fiber.dim:
            raise DimensionError("structure field dim does not match the fiber")

    @property
    def base_dim(self) -> int:
        return self.base.dim

    @property
    def fiber_dim(self) -> int:
        return self.fiber.dim

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "base": self.base.to_dict(),
            "fiber": self.fiber.to_dict(),
            "predual": self.predual.to_dict(),
            "anchor": self.anchor.to_json(),
            "structure": self.structure.to_json(),
            "meta": dict(self.meta),
        }

    def digest(self) -> str:
        try:
            blob = json.dumps(self.to_json(), sort_keys=True)
        except ValidationError:
            blob = f"{self.name}:{self.base}:{self.fiber}:{id(self.structure)}"
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def model_from_json(d: dict) -> AlgebroidModel:
    try:
        base = SpaceModel.from_dict(d["base"])
        fiber = SpaceModel.from_dict(d["fiber"])
        predual = SpaceModel.from_dict(d.get("predual", {**d["fiber"], "role": "predual"}))
        anchor = anchor_from_json(d["anchor"])
        structure = structure_from_json(d["structure"], fiber.dim)
    except KeyError as exc:
        raise ValidationError(f"model file missing field {exc}") from exc
    return AlgebroidModel(
        base, fiber, predual, anchor, structure, d.get("name", "custom"), dict(d.get("meta", {}))
    )


# ---------------------------------------------------------------------------
# bracket of sections
# ---------------------------------------------------------------------------


def _check_section(A: AlgebroidModel, X) -> None:
    if X.dim != A.fiber_dim:
        raise DimensionError(f"section dim {X.dim} vs fiber dim {A.fiber_dim}")


def _check_m(A: AlgebroidModel, m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (A.base_dim,):
        raise DimensionError(f"base point shape {m.shape} vs base dim {A.base_dim}")
    return m


def bracket_from_jets(A: AlgebroidModel, m, jx: SectionJet, jy: SectionJet) -> np.ndarray:
    """Local bracket formula from first jets; exactly antisymmetric."""
    t1 = jy.D @ A.anchor.apply(m, jx.value)
    t2 = jx.D @ A.anchor.apply(m, jy.value)
    return (t1 - t2) + A.structure.apply(m, jx.value, jy.value)


def bracket_jet_from_jets(A: AlgebroidModel, m, jx: SectionJet, jy: SectionJet) -> SectionJet:
    """First jet of ``[X, Y]`` from second jets of ``X`` and ``Y``."""
    if jx.D2 is None or jy.D2 is None:
        raise PreconditionError("second jets are required")
    a = A.anchor.matrix(m) if not isinstance(A.anchor, DiagonalAnchor) else None
    ax = A.anchor.apply(m, jx.value)
    ay = A.anchor.apply(m, jy.value)
    if a is None:
        w = A.anchor.weights
        a_xD = w[:, None] * jx.D
        a_yD = w[:, None] * jy.D
    else:
        a_xD = a @ jx.D
        a_yD = a @ jy.D
    d_ax = A.anchor.deriv_apply(m, jx.value) + a_xD
    d_ay = A.anchor.deriv_apply(m, jy.value) + a_yD

    value = bracket_from_jets(A, m, jx, jy)
    D = np.einsum("jlk,l->jk", jy.D2, ax) + jy.D @ d_ax
    D -= np.einsum("jlk,l->jk", jx.D2, ay) + jx.D @ d_ay
    st = A.structure
    if not st.is_zero:
        dC = st.deriv_apply(m, jx.value, jy.value)
        nb = A.base_dim
        for k in range(nb):
            dC[:, k] += st.apply(m, jx.D[:, k], jy.value) + st.apply(m, jx.value, jy.D[:, k])
        D += dC
    return SectionJet(value, D, None)


class BracketSection:
    """The section ``[X, Y]`` with exact value and first derivative."""

    def __init__(self, A: AlgebroidModel, X, Y):
        _check_section(A, X)
        _check_section(A, Y)
        self.A, self.X, self.Y = A, X, Y
        self.dim = A.fiber_dim

    def jet(self, m, order: int = 1) -> SectionJet:
        if order > 1:
            raise PreconditionError("BracketSection provides jets up to first order")
        m = np.asarray(m, dtype=np.float64)
        if order == 0:
            return SectionJet(bracket_sections(self.A, self.X, self.Y, m), None, None)
        return bracket_jet_from_jets(self.A, m, self.X.jet(m, 2), self.Y.jet(m, 2))

    def value(self, m) -> np.ndarray:
        return self.jet(m, 0).value


def bracket_sections(A: AlgebroidModel, X, Y, m) -> np.ndarray:
    _check_section(A, X)
    _check_section(A, Y)
    m = _check_m(A, m)
    return bracket_from_jets(A, m, X.jet(m, 1), Y.jet(m, 1))


def anchor_apply(A: AlgebroidModel, m, x) -> np.ndarray:
    m = _check_m(A, m)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.fiber_dim,):
        raise DimensionError(f"fiber vector shape {x.shape} vs {A.fiber_dim}")
    return A.anchor.apply(m, x)


def ad(A: AlgebroidModel, m, x):
    """The linear map ``y -> C_m(x, y)``."""
    m = _check_m(A, m)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.fiber_dim,):
        raise DimensionError(f"fiber vector shape {x.shape} vs {A.fiber_dim}")
    return lambda y: A.structure.apply(m, x, np.asarray(y, dtype=np.float64))


def ad_matrix(A: AlgebroidModel, m, x) -> np.ndarray:
    f = ad(A, m, x)
    return np.column_stack([f(e) for e in np.eye(A.fiber_dim)])


def ad_star(A: AlgebroidModel, m, x, phi) -> np.ndarray:
    m = _check_m(A, m)
    x = np.asarray(x, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if x.shape != (A.fiber_dim,) or phi.shape != (A.fiber_dim,):
        raise DimensionError("ad_star arguments must live in the fiber dimension")
    return A.structure.ad_star(m, x, phi)


def anchor_derivative(A: AlgebroidModel, f_base, X, m) -> float:
    """``(a(X) f)(m) = <df(m), a_m X(m)>``."""
    m = _check_m(A, m)
    _, g, _ = base_jet(f_base, m, 1)
    return float(g @ A.anchor.apply(m, X.value(m)))


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def leibniz_check(A: AlgebroidModel, X, Y, f_base, m) -> float:
    """Norm of ``[X, fY] - (a(X)f) Y - f [X, Y]`` at ``m``."""
    m = _check_m(A, m)
    fY = Y.scaled(f_base)
    lhs = bracket_sections(A, X, fY, m)
    fv, _, _ = base_jet(f_base, m, 0)
    rhs = anchor_derivative(A, f_base, X, m) * Y.value(m) + fv * bracket_sections(A, X, Y, m)
    return float(np.linalg.norm(lhs - rhs))


def jacobi_check_sections(A: AlgebroidModel, X, Y, Z, m) -> float:
    """Norm of the cyclic sum ``[[X,Y],Z] + [[Y,Z],X] + [[Z,X],Y]`` at ``m``."""
    m = _check_m(A, m)
    total = (
        bracket_sections(A, BracketSection(A, X, Y), Z, m)
        + bracket_sections(A, BracketSection(A, Y, Z), X, m)
        + bracket_sections(A, BracketSection(A, Z, X), Y, m)
    )
    return float(np.linalg.norm(total))


def anchor_morphism_residual(A: AlgebroidModel, X, Y, m) -> float:
    """``|a([X,Y]) - [a(X), a(Y)]|`` at ``m``, vector-field bracket on the right."""
    m = _check_m(A, m)
    jx, jy = X.jet(m, 1), Y.jet(m, 1)
    a = A.anchor.matrix(m)
    V = a @ jx.value
    W = a @ jy.value
    DV = A.anchor.deriv_apply(m, jx.value) + a @ jx.D
    DW = A.anchor.deriv_apply(m, jy.value) + a @ jy.D
    vf = DW @ V - DV @ W
    return float(np.linalg.norm(a @ bracket_from_jets(A, m, jx, jy) - vf))


def jets_agree(jx: SectionJet, jy: SectionJet, rtol: float = 1e-12) -> bool:
    scale = 1.0 + max(np.max(np.abs(jx.value)), np.max(np.abs(jx.D)) if jx.D.size else 0.0)
    return bool(
        np.max(np.abs(jx.value - jy.value)) <= rtol * scale
        and (jx.D.size == 0 or np.max(np.abs(jx.D - jy.D)) <= rtol * scale)
    )


def first_jet_dependence_check(A: AlgebroidModel, X, X2, Y, m) -> float:
    """``|[X, Y](m) - [X2, Y](m)|`` for sections sharing their first jet at ``m``."""
    m = _check_m(A, m)
    if not jets_agree(X.jet(m, 1), X2.jet(m, 1)):
        raise PreconditionError("sections do not share their first jet at m")
    return float(np.linalg.norm(bracket_sections(A, X, Y, m) - bracket_sections(A, X2, Y, m)))


def quadratic_bump(m0, coeffs) -> SectionFn:
    """Section ``c_j * |m - m0|^2``: vanishes to second order at ``m0``."""
    m0 = np.asarray(m0, dtype=np.float64)
    sq = sum(((m_coord(k) - float(m0[k])) ** 2 for k in range(m0.shape[0])), const(0.0))
    return SectionFn([sq * float(c) for c in coeffs])


def linear_bump(m0, coeffs, direction) -> SectionFn:
    """Section ``c_j * <w, m - m0>``: zero at ``m0`` but with nonzero derivative."""
    m0 = np.asarray(m0, dtype=np.float64)
    lin = sum(
        (float(direction[k]) * (m_coord(k) - float(m0[k])) for k in range(m0.shape[0])),
        const(0.0),
    )
    return SectionFn([lin * float(c) for c in coeffs])


def perturbation_response(A: AlgebroidModel, X, P, Y, m, eps: float) -> float:
    """``|[X + eps P, Y](m) - [X, Y](m)|`` with no jet precondition."""
    m = _check_m(A, m)
    return float(
        np.linalg.norm(bracket_sections(A, X + P.scaled(eps), Y, m) - bracket_sections(A, X, Y, m))
    )
