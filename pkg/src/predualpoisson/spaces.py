"""Finite truncations of sequence spaces.

Every model space is realized as R^N; what distinguishes the base space,
the fiber, its predual and its dual is the norm family attached to it and a
role tag. Infinite-dimensional membership questions (is this image really in
l^1?) are answered only asymptotically, by watching how a norm grows as the
truncation dimension increases (:func:`membership_diagnostic`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import DimensionError, RoleError

NORM_TAGS = ("p1", "p2", "pinf")
ROLES = ("base", "base_dual", "fiber", "predual", "dual")

# Unordered role pairs on which the coordinate pairing is meaningful.
_PAIRABLE = {
    frozenset(("base", "base_dual")),
    frozenset(("fiber", "dual")),
    frozenset(("fiber", "predual")),
}

# Norm family of the dual of a space carrying the given norm. The dual of
# l^inf is modelled by bounded sequences (its l^1 part is what a predual sees).
DUAL_TAG = {"p1": "pinf", "p2": "p2", "pinf": "pinf"}
PREDUAL_TAG = {"pinf": "p1", "p2": "p2"}


@dataclass(frozen=True)
class SpaceModel:
    dim: int
    norm: str
    role: str

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DimensionError(f"dimension must be >= 1, got {self.dim}")
        if self.norm not in NORM_TAGS:
            raise ValueError(f"unknown norm tag {self.norm!r}")
        if self.role not in ROLES:
            raise RoleError(f"unknown role {self.role!r}")

    def with_dim(self, dim: int) -> "SpaceModel":
        return SpaceModel(dim, self.norm, self.role)

    def to_dict(self) -> dict:
        return {"dim": int(self.dim), "norm": self.norm, "role": self.role}

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceModel":
        return cls(int(d["dim"]), d["norm"], d["role"])


@dataclass(frozen=True)
class Vec:
    coords: np.ndarray
    space: SpaceModel

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 1 or c.shape[0] != self.space.dim:
            raise DimensionError(
                f"coords of length {c.shape} do not match dim {self.space.dim}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.space.dim

    def __add__(self, other: "Vec") -> "Vec":
        _same_space(self, other)
        return Vec(self.coords + other.coords, self.space)

    def __sub__(self, other: "Vec") -> "Vec":
        _same_space(self, other)
        return Vec(self.coords - other.coords, self.space)

    def __mul__(self, a: float) -> "Vec":
        return Vec(a * self.coords, self.space)

    __rmul__ = __mul__

    def to_json(self) -> list:
        return [float(v) for v in self.coords]


def _same_space(x: Vec, y: Vec) -> None:
    if x.space.dim != y.space.dim:
        raise DimensionError(f"dim {x.space.dim} != {y.space.dim}")


def _coords(x) -> np.ndarray:
    return x.coords if isinstance(x, Vec) else np.asarray(x, dtype=np.float64)


def pair(x, mu) -> float:
    """Coordinate pairing ``sum_k x_k mu_k``.

    When both arguments are :class:`Vec` their roles must form a duality pair
    (space with its dual, or fiber with its predual). Bare arrays skip the
    role check.
    """
    if isinstance(x, Vec) and isinstance(mu, Vec):
        if x.space.dim != mu.space.dim:
            raise DimensionError(f"pairing dim {x.space.dim} with {mu.space.dim}")
        if frozenset((x.space.role, mu.space.role)) not in _PAIRABLE:
            raise RoleError(f"cannot pair {x.space.role} with {mu.space.role}")
    a, b = _coords(x), _coords(mu)
    if a.shape != b.shape:
        raise DimensionError(f"pairing shapes {a.shape} and {b.shape}")
    return float(a @ b)


def pair_transposed(mu, x) -> float:
    return pair(x, mu)


def norm(x, tag: str) -> float:
    c = _coords(x)
    if tag == "p1":
        return float(np.sum(np.abs(c)))
    if tag == "p2":
        s = float(np.max(np.abs(c))) if c.size else 0.0
        return s * float(np.sqrt((c / s) @ (c / s))) if s > 0 else 0.0
    if tag == "pinf":
        return float(np.max(np.abs(c))) if c.size else 0.0
    raise ValueError(f"unknown norm tag {tag!r}")


def truncate(x, n: int):
    """Keep the first ``n`` coordinates, padding with exact zeros if needed."""
    if n < 1:
        raise DimensionError(f"truncation dimension must be >= 1, got {n}")
    c = _coords(x)
    out = np.zeros(n)
    k = min(n, c.shape[0])
    out[:k] = c[:k]
    if isinstance(x, Vec):
        return Vec(out, x.space.with_dim(n))
    return out


def sample_generic(tag: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """A "generic" element of a space with norm family ``tag``, truncated to n.

    p1: g_k / k^2, p2: g_k / k, pinf: u_k uniform on [-1, 1], with g_k
    standard normal. Drawing a long vector once and truncating keeps samples
    coherent across dimensions.
    """
    k = np.arange(1, n + 1, dtype=np.float64)
    if tag == "p1":
        return rng.standard_normal(n) / k**2
    if tag == "p2":
        return rng.standard_normal(n) / k
    if tag == "pinf":
        return rng.uniform(-1.0, 1.0, n)
    raise ValueError(f"unknown norm tag {tag!r}")


@dataclass
class MembershipVerdict:
    norms_by_dim: list
    verdict: str
    bound_estimate: float | None = None
    decay_exponent: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def bounded(self) -> bool:
        return self.verdict == "bounded"

    def to_dict(self) -> dict:
        return {
            "norms_by_dim": [[int(n), float(v)] for n, v in self.norms_by_dim],
            "verdict": self.verdict,
            "bound_estimate": None
            if self.bound_estimate is None
            else float(self.bound_estimate),
            "decay_exponent": None
            if self.decay_exponent is None or not math.isfinite(self.decay_exponent)
            else float(self.decay_exponent),
        }


def _check_dims(dims: Sequence[int]) -> list[int]:
    dims = [int(d) for d in dims]
    if len(dims) < 3:
        raise ValueError("membership_diagnostic needs at least 3 dimensions")
    if any(b <= a for a, b in zip(dims, dims[1:])) or dims[0] < 1:
        raise ValueError(f"dims must be strictly increasing positive: {dims}")
    return dims


def classify_norms(
    dims: Sequence[int],
    norms: Sequence[float],
    tag: str,
    ratio_threshold: float = 0.1,
    margin: float = 0.05,
) -> MembershipVerdict:
    """Decide bounded/growing/inconclusive from a table of partial norms.

    The partial "sums" are ``norm`` for p1 and pinf and ``norm**2`` for p2.
    Their increments over successive dims, divided by the number of new
    coordinates, estimate the size of a single term near that dimension; a
    power law ``N^-p`` is fitted through the later half of those estimates.

    bounded: last increment < ``ratio_threshold`` x first increment and
    ``p > 1 + margin`` (the tail integral is finite). The bound is the last
    partial sum plus the fitted tail.
    growing: ``p <= 1 + margin``, i.e. terms decay no faster than 1/N.
    Anything else is inconclusive.
    """
    dims = _check_dims(dims)
    norms = [float(v) for v in norms]
    sums = np.array([v * v for v in norms]) if tag == "p2" else np.array(norms)
    table = list(zip(dims, norms))
    inc = np.diff(sums)
    scale = max(1.0, float(np.max(np.abs(sums))))
    finish = (lambda s: math.sqrt(max(s, 0.0))) if tag == "p2" else (lambda s: s)

    if np.all(np.abs(inc) <= 1e-14 * scale):
        return MembershipVerdict(table, "bounded", norms[-1], math.inf)

    widths = np.diff(np.asarray(dims, dtype=np.float64))
    mids = np.sqrt(np.asarray(dims[:-1], dtype=np.float64) * np.asarray(dims[1:]))
    per_term = inc / widths

    n_fit = max(2, len(per_term) // 2)
    tail_terms = per_term[-n_fit:]
    tail_mids = mids[-n_fit:]
    if per_term[-1] <= 0.0:
        p = math.inf
    elif np.all(tail_terms > 0.0):
        slope = np.polyfit(np.log(tail_mids), np.log(tail_terms), 1)[0]
        p = float(-slope)
    else:
        # Sparse increments with zeros inside the fit window: use last two nonzero.
        nz = np.nonzero(per_term > 0.0)[0]
        if nz.size >= 2:
            a, b = nz[-2], nz[-1]
            p = float(-np.log(per_term[b] / per_term[a]) / np.log(mids[b] / mids[a]))
        else:
            p = math.inf

    first = inc[0]
    last = inc[-1]
    ratio_ok = last <= 0.0 or (first > 0.0 and last / first < ratio_threshold)
    details = {"first_increment": float(first), "last_increment": float(last)}

    if ratio_ok and p > 1.0 + margin:
        if math.isinf(p) or last <= 0.0:
            tail = 0.0
        else:
            n_end = float(dims[-1])
            c = per_term[-1] * mids[-1] ** p
            tail = c * n_end ** (1.0 - p) / (p - 1.0)
        return MembershipVerdict(table, "bounded", finish(sums[-1] + tail), p, details)
    if p <= 1.0 + margin and last > 0.0:
        return MembershipVerdict(table, "growing", None, p, details)
    return MembershipVerdict(table, "inconclusive", None, p, details)


def membership_diagnostic(
    family: Callable[[int], object],
    target_tag: str,
    dims: Sequence[int],
    ratio_threshold: float = 0.1,
    margin: float = 0.05,
) -> MembershipVerdict:
    """Asymptotic test of whether ``family(N)`` stays bounded in ``target_tag``.

    ``family`` maps a dimension N to a vector (array or :class:`Vec`) of
    length N.
    """
    dims = _check_dims(dims)
    norms = []
    for n in dims:
        v = _coords(family(n))
        if v.ndim != 1 or v.shape[0] != n:
            raise DimensionError(f"family returned shape {v.shape} for N={n}")
        norms.append(norm(v, target_tag))
    return classify_norms(dims, norms, target_tag, ratio_threshold, margin)


def prefix_membership(
    x, target_tag: str, dims: Sequence[int], **kwargs
) -> MembershipVerdict:
    """:func:`membership_diagnostic` for the family of prefixes of one long vector."""
    dims = _check_dims(dims)
    c = _coords(x)
    if dims[-1] > c.shape[0]:
        raise DimensionError(f"vector of length {c.shape[0]} shorter than {dims[-1]}")
    norms = _kernels.prefix_norms(c, dims, target_tag)
    return classify_norms(dims, norms, target_tag, **kwargs)


def doubling_dims(lo: int, hi: int) -> list[int]:
    dims = []
    n = lo
    while n <= hi:
        dims.append(n)
        n *= 2
    return dims
