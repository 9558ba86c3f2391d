"""Canonical weak symplectic structure on the precotangent bundle ``T_*M``.

In the trivialization ``U x M_*`` a tangent vector is ``(v, Phi)`` with
``v`` in M and ``Phi`` in ``M_*``; a covector is ``(mu, x)`` with ``mu`` in
``M^*`` and ``x`` in M. Then

    omega((v, Phi), (w, Psi)) = <Phi, w> - <Psi, v>
    flat(v, Phi) = (Phi, -v)
    sharp_omega(mu, x) = (-x, mu)

``sharp_omega`` is only the inverse of ``flat`` on covectors whose base part
lies in the predual; functions with that property form ``C^inf_flat``.
"""

from __future__ import annotations

import warnings
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError
from .funcalg import BundlePoint, SmoothFn, jet
from .models import make_precotangent
from .poisson import CotangentAtom, TangentAtom, poisson_bracket
from .spaces import MembershipVerdict, membership_diagnostic


class FlatMembershipWarning(UserWarning):
    pass


def _check(pt: BundlePoint) -> None:
    if pt.base_dim != pt.fiber_dim:
        raise DimensionError("the precotangent bundle needs base dim == fiber dim")


def omega_eval(pt: BundlePoint, t1: TangentAtom, t2: TangentAtom) -> float:
    _check(pt)
    return float(t1.psi @ t2.v - t2.psi @ t1.v)


def flat(pt: BundlePoint, t: TangentAtom) -> CotangentAtom:
    _check(pt)
    return CotangentAtom(pt, np.array(t.psi), -np.asarray(t.v))


def sharp_omega(pt: BundlePoint, c: CotangentAtom) -> TangentAtom:
    _check(pt)
    return TangentAtom(pt, -np.asarray(c.x), np.array(c.mu))


def omega_bracket(f: SmoothFn, g: SmoothFn, pt: BundlePoint) -> float:
    """``omega(sharp df, sharp dg)``, computed for any f, g (the extended bracket)."""
    _check(pt)
    tf = sharp_omega(pt, CotangentAtom.from_jet(jet(f, pt), pt))
    tg = sharp_omega(pt, CotangentAtom.from_jet(jet(g, pt), pt))
    return omega_eval(pt, tf, tg)


def omega_bracket_formula(f: SmoothFn, g: SmoothFn, pt: BundlePoint) -> float:
    """``-<df/dm, dg/dphi> + <dg/dm, df/dphi>``."""
    jf, jg = jet(f, pt), jet(g, pt)
    return float(-(jf.d_m @ jg.d_phi) + jg.d_m @ jf.d_phi)


def flat_membership(
    f_family: Callable[[int], SmoothFn],
    pt_family: Callable[[int], BundlePoint],
    dims: Sequence[int],
    target_tag: str = "p1",
) -> MembershipVerdict:
    """Asymptotic test of ``df/dm in M_*`` along a truncation family."""
    return membership_diagnostic(lambda n: jet(f_family(n), pt_family(n)).d_m, target_tag, dims)


def omega_bracket_checked(
    f_family: Callable[[int], SmoothFn],
    g_family: Callable[[int], SmoothFn],
    pt_family: Callable[[int], BundlePoint],
    n: int,
    dims: Sequence[int],
) -> dict:
    """Omega bracket at truncation ``n`` together with ``C^inf_flat`` membership flags.

    Non-members still get the extended value; a :class:`FlatMembershipWarning`
    is emitted and the ``warning`` field is set.
    """
    vf = flat_membership(f_family, pt_family, dims)
    vg = flat_membership(g_family, pt_family, dims)
    value = omega_bracket(f_family(n), g_family(n), pt_family(n))
    warn = not (vf.bounded and vg.bounded)
    if warn:
        warnings.warn(
            "omega bracket evaluated outside C^inf_flat (extended value)", FlatMembershipWarning
        )
    return {
        "value": value,
        "f_in_flat": vf.bounded,
        "g_in_flat": vg.bounded,
        "warning": warn,
        "f_membership": vf.to_dict(),
        "g_membership": vg.to_dict(),
    }


def coincidence_check(f: SmoothFn, g: SmoothFn, pt: BundlePoint) -> float:
    """``|{f,g}_omega - {f,g}|`` with the algebroid bracket of the precotangent model."""
    _check(pt)
    A = make_precotangent(pt.base_dim)
    return abs(omega_bracket(f, g, pt) - poisson_bracket(A, f, g, pt))
