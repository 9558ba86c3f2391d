"""Smooth functions on the trivialized bundle ``U x E_*`` and their exact jets.

A :class:`SmoothFn` is an immutable expression tree over base coordinates
``m_k``, fiber coordinates ``phi_k``, constants, pullbacks of base
functions, the fiber-linear functions ``lambda_X`` of sections, sums,
products and a small registry of scalar primitives. Jets are computed by
forward propagation of (value, gradient[, hessian]) triples through the
tree, so first and second derivatives are exact up to roundoff.

Coordinates are 0-based: ``m(0)`` is the first base coordinate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, ValidationError

# name -> (f, f', f'')
PRIMITIVES: dict[str, tuple[Callable, Callable, Callable]] = {
    "sin": (np.sin, np.cos, lambda u: -np.sin(u)),
    "cos": (np.cos, lambda u: -np.sin(u), lambda u: -np.cos(u)),
    "exp": (np.exp, np.exp, np.exp),
}


def register_primitive(name: str, f: Callable, df: Callable, d2f: Callable) -> None:
    if name in ("m", "phi", "const", "add", "mul", "poly", "pullback", "lambda"):
        raise ValueError(f"{name!r} is reserved")
    PRIMITIVES[name] = (f, df, d2f)


@dataclass(frozen=True)
class BundlePoint:
    m: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in ("m", "phi"):
            a = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.m, self.phi])

    @property
    def base_dim(self) -> int:
        return self.m.shape[0]

    @property
    def fiber_dim(self) -> int:
        return self.phi.shape[0]

    def with_phi(self, phi) -> "BundlePoint":
        return BundlePoint(self.m, phi)


@dataclass(frozen=True)
class Jet1:
    value: float
    d_m: np.ndarray
    d_phi: np.ndarray

    @property
    def grad(self) -> np.ndarray:
        return np.concatenate([self.d_m, self.d_phi])


@dataclass(frozen=True)
class Jet2:
    """Value, full gradient and full hessian over ``z = (m, phi)``."""

    value: float
    grad: np.ndarray
    hess: np.ndarray
    base_dim: int

    @property
    def d_m(self) -> np.ndarray:
        return self.grad[: self.base_dim]

    @property
    def d_phi(self) -> np.ndarray:
        return self.grad[self.base_dim :]

    def jet1(self) -> Jet1:
        return Jet1(self.value, self.d_m, self.d_phi)


# ---------------------------------------------------------------------------
# expression nodes
# ---------------------------------------------------------------------------


def _as_fn(x) -> "SmoothFn":
    if isinstance(x, SmoothFn):
        return x
    if isinstance(x, (int, float, np.floating, np.integer)):
        return const(float(x))
    raise TypeError(f"cannot use {type(x).__name__} as a smooth function")


class SmoothFn:
    """Immutable expression node. Build with the module-level constructors."""

    __slots__ = ("op", "args", "data", "fiber_degree", "max_m", "max_phi")

    def __init__(self, op: str, args: tuple = (), data=None, fiber_degree=None):
        self.op = op
        self.args = tuple(args)
        self.data = data
        self.fiber_degree = fiber_degree
        mm = [a.max_m for a in self.args]
        mp = [a.max_phi for a in self.args]
        if op == "m":
            mm.append(data)
        elif op == "phi":
            mp.append(data)
        elif op == "lambda":
            mm.extend(c.max_m for c in data.components)
            mp.append(data.dim - 1)
        self.max_m = max(mm, default=-1)
        self.max_phi = max(mp, default=-1)

    def __setattr__(self, key, value):
        if hasattr(self, "max_phi"):
            raise AttributeError("SmoothFn is immutable")
        object.__setattr__(self, key, value)

    @property
    def is_fiber_linear(self) -> bool:
        return self.fiber_degree == 1

    @property
    def is_base_only(self) -> bool:
        return self.max_phi < 0

    def __add__(self, other):
        return add(self, _as_fn(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, _as_fn(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(const(-1.0), self)

    def __sub__(self, other):
        return add(self, -_as_fn(other))

    def __rsub__(self, other):
        return add(_as_fn(other), -self)

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        coeffs = [0.0] * int(k) + [1.0]
        return poly(self, coeffs)

    def __repr__(self) -> str:
        return f"SmoothFn({json.dumps(self.to_json())[:120]})"

    def to_json(self) -> dict:
        return to_json(self)


def m(k: int) -> SmoothFn:
    if k < 0:
        raise DimensionError(f"negative coordinate index {k}")
    return SmoothFn("m", (), int(k), fiber_degree=0)


def phi(k: int) -> SmoothFn:
    if k < 0:
        raise DimensionError(f"negative coordinate index {k}")
    return SmoothFn("phi", (), int(k), fiber_degree=1)


def const(c: float) -> SmoothFn:
    return SmoothFn("const", (), float(c), fiber_degree=0)


def add(*fs: SmoothFn) -> SmoothFn:
    fs = tuple(_as_fn(f) for f in fs)
    degs = {f.fiber_degree for f in fs}
    deg = degs.pop() if len(degs) == 1 else None
    return SmoothFn("add", fs, fiber_degree=deg)


def mul(*fs: SmoothFn) -> SmoothFn:
    fs = tuple(_as_fn(f) for f in fs)
    degs = [f.fiber_degree for f in fs]
    deg = None if any(d is None for d in degs) else sum(degs)
    return SmoothFn("mul", fs, fiber_degree=deg)


def _unary(name: str, f: SmoothFn, data=None) -> SmoothFn:
    f = _as_fn(f)
    return SmoothFn(name, (f,), data, fiber_degree=0 if f.fiber_degree == 0 else None)


def sin(f) -> SmoothFn:
    return _unary("sin", f)


def cos(f) -> SmoothFn:
    return _unary("cos", f)


def exp(f) -> SmoothFn:
    return _unary("exp", f)


def apply(name: str, f) -> SmoothFn:
    """Compose with a registered primitive."""
    if name not in PRIMITIVES:
        raise KeyError(f"unknown primitive {name!r}")
    return _unary(name, f)


def poly(f, coeffs: Sequence[float]) -> SmoothFn:
    """``sum_i coeffs[i] * f**i``."""
    c = tuple(float(v) for v in coeffs)
    if not c:
        raise ValueError("empty coefficient list")
    f = _as_fn(f)
    deg = f.fiber_degree
    if deg is not None and deg != 0:
        nz = [i for i, v in enumerate(c) if v != 0.0]
        deg = deg * nz[0] if len(nz) == 1 else None
    return SmoothFn("poly", (f,), c, fiber_degree=deg)


def pullback(f_base: SmoothFn) -> SmoothFn:
    """``f o pi_*``: a base function viewed as fiber-wise constant."""
    f_base = _as_fn(f_base)
    if not f_base.is_base_only:
        raise ValidationError("pullback argument must not depend on fiber coordinates")
    return SmoothFn("pullback", (f_base,), fiber_degree=0)


def lambda_of_section(X: "SectionFn") -> SmoothFn:
    """The fiber-wise linear function ``(m, phi) -> <phi, X(m)>``."""
    return SmoothFn("lambda", (), X, fiber_degree=1)


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SectionJet:
    value: np.ndarray  # (nf,)
    D: np.ndarray  # (nf, nb): D[j, k] = d X^j / d m_k
    D2: np.ndarray | None = None  # (nf, nb, nb)


class SectionFn:
    """A section ``m -> X(m)`` of the trivial bundle, one base expression per fiber coordinate."""

    def __init__(self, components: Sequence):
        comps = tuple(_as_fn(c) for c in components)
        if not comps:
            raise DimensionError("a section needs at least one component")
        for c in comps:
            if not c.is_base_only:
                raise ValidationError("section components must be base functions")
        self.components = comps
        self._const = None
        if all(c.op == "const" for c in comps):
            self._const = np.array([c.data for c in comps])

    @classmethod
    def constant(cls, v) -> "SectionFn":
        return cls([const(float(x)) for x in np.asarray(v, dtype=np.float64)])

    @classmethod
    def basis(cls, k: int, dim: int) -> "SectionFn":
        v = np.zeros(dim)
        v[k] = 1.0
        return cls.constant(v)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def max_m(self) -> int:
        return max(c.max_m for c in self.components)

    @property
    def is_constant(self) -> bool:
        return self._const is not None

    def jet(self, m, order: int = 1) -> SectionJet:
        m = np.asarray(m, dtype=np.float64)
        nb = m.shape[0]
        if self.max_m >= nb:
            raise DimensionError(f"section uses m_{self.max_m} but base dim is {nb}")
        nf = self.dim
        if self._const is not None:
            D2 = np.zeros((nf, nb, nb)) if order >= 2 else None
            return SectionJet(self._const.copy(), np.zeros((nf, nb)), D2)
        val = np.empty(nf)
        D = np.empty((nf, nb)) if order >= 1 else None
        D2 = np.empty((nf, nb, nb)) if order >= 2 else None
        memo: dict[int, tuple] = {}  # components often share subtrees
        for j, c in enumerate(self.components):
            v, g, h = _evaluate(c, m, nb, order, memo)
            val[j] = v
            if D is not None:
                D[j] = g
            if D2 is not None:
                D2[j] = h
        return SectionJet(val, D, D2)

    def value(self, m) -> np.ndarray:
        return self.jet(m, order=0).value

    def derivative(self, m) -> np.ndarray:
        return self.jet(m).D

    def __add__(self, other: "SectionFn") -> "SectionFn":
        if other.dim != self.dim:
            raise DimensionError(f"section dims {self.dim} and {other.dim}")
        return SectionFn([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "SectionFn") -> "SectionFn":
        if other.dim != self.dim:
            raise DimensionError(f"section dims {self.dim} and {other.dim}")
        return SectionFn([a - b for a, b in zip(self.components, other.components)])

    def scaled(self, f_base) -> "SectionFn":
        """``f * X`` for a base function (or scalar) ``f``."""
        f_base = _as_fn(f_base)
        return SectionFn([f_base * c for c in self.components])

    def to_json(self) -> list:
        return [to_json(c) for c in self.components]

    @classmethod
    def from_json(cls, data: list) -> "SectionFn":
        return cls([from_json(c) for c in data])


# ---------------------------------------------------------------------------
# forward jet evaluation
# ---------------------------------------------------------------------------


def _horner(c, u: float):
    """Value, first and second derivative of ``sum c_i u^i``."""
    v = d1 = d2 = 0.0
    for ci in reversed(c):
        d2 = d2 * u + 2.0 * d1
        d1 = d1 * u + v
        v = v * u + ci
    return v, d1, d2


def _evaluate(f: SmoothFn, z: np.ndarray, nb: int, order: int, memo: dict | None = None):
    """Return (value, grad, hess) of ``f`` at ``z``; grad/hess are None below their order."""
    n = z.shape[0]
    if f.max_m >= nb or nb + f.max_phi >= n:
        raise DimensionError(
            f"expression uses m_{f.max_m}/phi_{f.max_phi} at base dim {nb}, "
            f"fiber dim {n - nb}"
        )
    return _eval_node(f, z, nb, order, {} if memo is None else memo)


def _eval_node(f: SmoothFn, z, nb, order, memo):
    key = id(f)
    hit = memo.get(key)
    if hit is not None:
        return hit
    n = z.shape[0]
    op = f.op
    g = h = None

    if op == "m" or op == "phi":
        idx = f.data if op == "m" else nb + f.data
        v = float(z[idx])
        if order >= 1:
            g = np.zeros(n)
            g[idx] = 1.0
        if order >= 2:
            h = np.zeros((n, n))
    elif op == "const":
        v = f.data
        if order >= 1:
            g = np.zeros(n)
        if order >= 2:
            h = np.zeros((n, n))
    elif op == "add":
        parts = [_eval_node(a, z, nb, order, memo) for a in f.args]
        v = sum(p[0] for p in parts)
        if order >= 1:
            g = parts[0][1].copy()
            for p in parts[1:]:
                g += p[1]
        if order >= 2:
            h = parts[0][2].copy()
            for p in parts[1:]:
                h += p[2]
    elif op == "mul":
        v, g, h = _eval_node(f.args[0], z, nb, order, memo)
        for a in f.args[1:]:
            v2, g2, h2 = _eval_node(a, z, nb, order, memo)
            if order >= 2:
                h = v * h2 + v2 * h + np.outer(g, g2) + np.outer(g2, g)
            if order >= 1:
                g = v * g2 + v2 * g
            v = v * v2
    elif op == "poly":
        u, gu, hu = _eval_node(f.args[0], z, nb, order, memo)
        v, d1, d2 = _horner(f.data, u)
        if order >= 1:
            g = d1 * gu
        if order >= 2:
            h = d2 * np.outer(gu, gu) + d1 * hu
    elif op in PRIMITIVES:
        fn, dfn, d2fn = PRIMITIVES[op]
        u, gu, hu = _eval_node(f.args[0], z, nb, order, memo)
        v = float(fn(u))
        if order >= 1:
            d1 = float(dfn(u))
            g = d1 * gu
        if order >= 2:
            h = float(d2fn(u)) * np.outer(gu, gu) + d1 * hu
    elif op == "pullback":
        mb = z[:nb]
        vb, gb, hb = _eval_node(f.args[0], mb, nb, order, {})
        v = vb
        if order >= 1:
            g = np.zeros(n)
            g[:nb] = gb
        if order >= 2:
            h = np.zeros((n, n))
            h[:nb, :nb] = hb
    elif op == "lambda":
        X: SectionFn = f.data
        ph = z[nb:]
        if X.dim != ph.shape[0]:
            raise DimensionError(f"section dim {X.dim} vs fiber dim {ph.shape[0]}")
        sj = X.jet(z[:nb], order=order)
        v = float(ph @ sj.value)
        if order >= 1:
            g = np.empty(n)
            g[:nb] = ph @ sj.D
            g[nb:] = sj.value
        if order >= 2:
            h = np.zeros((n, n))
            h[:nb, :nb] = np.tensordot(ph, sj.D2, axes=1)
            h[:nb, nb:] = sj.D.T
            h[nb:, :nb] = sj.D
    else:
        raise ValidationError(f"unknown node op {op!r}")

    out = (v, g, h)
    memo[key] = out
    return out


def _check_point(f: SmoothFn, pt: BundlePoint) -> None:
    if f.max_m >= pt.base_dim:
        raise DimensionError(f"m_{f.max_m} out of range for base dim {pt.base_dim}")
    if f.max_phi >= pt.fiber_dim:
        raise DimensionError(f"phi_{f.max_phi} out of range for fiber dim {pt.fiber_dim}")


def evaluate(f: SmoothFn, pt: BundlePoint) -> float:
    _check_point(f, pt)
    return float(_evaluate(f, pt.z, pt.base_dim, 0)[0])


def jet(f: SmoothFn, pt: BundlePoint) -> Jet1:
    _check_point(f, pt)
    nb = pt.base_dim
    v, g, _ = _evaluate(f, pt.z, nb, 1)
    return Jet1(float(v), g[:nb], g[nb:])


def jet2(f: SmoothFn, pt: BundlePoint) -> Jet2:
    _check_point(f, pt)
    v, g, h = _evaluate(f, pt.z, pt.base_dim, 2)
    return Jet2(float(v), g, h, pt.base_dim)


def base_jet(f_base: SmoothFn, m, order: int = 1):
    """(value, grad[, hess]) of a base-only expression at ``m``."""
    m = np.asarray(m, dtype=np.float64)
    if not f_base.is_base_only:
        raise ValidationError("expected a base function")
    if f_base.max_m >= m.shape[0]:
        raise DimensionError(f"m_{f_base.max_m} out of range for base dim {m.shape[0]}")
    return _evaluate(f_base, m, m.shape[0], order)


def fd_jet(f: SmoothFn, pt: BundlePoint, h: float = 1e-4) -> Jet1:
    """Central differences with one Richardson step; an independent oracle for :func:`jet`."""
    if h <= 0:
        raise ValueError("step must be positive")
    _check_point(f, pt)
    z = pt.z
    nb = pt.base_dim
    n = z.shape[0]

    def val(zz):
        return _evaluate(f, zz, nb, 0)[0]

    g = np.empty(n)
    for i in range(n):
        def central(step):
            zp = z.copy()
            zm = z.copy()
            zp[i] += step
            zm[i] -= step
            return (val(zp) - val(zm)) / (2.0 * step)

        d_h = central(h)
        d_h2 = central(h / 2.0)
        g[i] = (4.0 * d_h2 - d_h) / 3.0
    return Jet1(val(z), g[:nb], g[nb:])


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def to_json(f: SmoothFn) -> dict:
    op = f.op
    if op in ("m", "phi"):
        return {"op": op, "index": f.data}
    if op == "const":
        return {"op": "const", "value": f.data}
    if op == "poly":
        return {"op": "poly", "coeffs": list(f.data), "args": [to_json(f.args[0])]}
    if op == "lambda":
        return {"op": "lambda", "section": f.data.to_json()}
    return {"op": op, "args": [to_json(a) for a in f.args]}


def from_json(d) -> SmoothFn:
    if isinstance(d, (int, float)):
        return const(float(d))
    if not isinstance(d, dict) or "op" not in d:
        raise ValidationError(f"malformed expression node: {d!r}")
    op = d["op"]
    try:
        if op == "m":
            return m(int(d["index"]))
        if op == "phi":
            return phi(int(d["index"]))
        if op == "const":
            return const(float(d["value"]))
        if op == "lambda":
            return lambda_of_section(SectionFn.from_json(d["section"]))
        args = [from_json(a) for a in d.get("args", [])]
        if op == "add":
            return add(*args)
        if op == "mul":
            return mul(*args)
        if op == "poly":
            return poly(args[0], d["coeffs"])
        if op == "pullback":
            return pullback(args[0])
        if op in PRIMITIVES:
            (a,) = args
            return _unary(op, a)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed {op!r} node: {exc}") from exc
    raise ValidationError(f"unknown op {op!r}")


def dumps(f: SmoothFn) -> str:
    return json.dumps(to_json(f))


def loads(s: str) -> SmoothFn:
    return from_json(json.loads(s))
