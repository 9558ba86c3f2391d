"""Hamiltonian vector fields and explicit flow integration with drift monitoring."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .algebroid import AlgebroidModel
from .errors import BlowupError
from .funcalg import BundlePoint, SmoothFn, _evaluate, add, phi
from .poisson import TangentAtom, hamiltonian_vector


def hamiltonian_field(A: AlgebroidModel, H: SmoothFn, pt: BundlePoint) -> TangentAtom:
    """``X_H = sharp(dH)``, so that ``df(X_H) = {f, H}``."""
    return hamiltonian_vector(A, H, pt)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_steps + 1, nb + nf)
    hamiltonian: SmoothFn
    integrator: str
    step: float
    base_dim: int

    @property
    def points(self) -> list[BundlePoint]:
        nb = self.base_dim
        return [BundlePoint(s[:nb], s[nb:]) for s in self.states]

    def values(self, F: SmoothFn) -> np.ndarray:
        nb = self.base_dim
        return np.array([_evaluate(F, s, nb, 0)[0] for s in self.states])


def _rhs(A, H, nb):
    def f(z):
        t = hamiltonian_field(A, H, BundlePoint(z[:nb], z[nb:]))
        return np.concatenate([t.v, t.psi])

    return f


def flow(
    A: AlgebroidModel,
    H: SmoothFn,
    pt0: BundlePoint,
    step: float = 1e-3,
    n_steps: int = 10_000,
    method: str = "rk4",
) -> Trajectory:
    if step <= 0:
        raise ValueError("step must be positive")
    if method not in ("rk4", "midpoint"):
        raise ValueError(f"unknown method {method!r}")
    nb = A.base_dim
    f = _rhs(A, H, nb)
    states = np.empty((n_steps + 1, nb + A.fiber_dim))
    z = pt0.z.copy()
    states[0] = z
    h = float(step)
    # overflow is reported as BlowupError below, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n_steps + 1):
            if method == "rk4":
                k1 = f(z)
                k2 = f(z + 0.5 * h * k1)
                k3 = f(z + 0.5 * h * k2)
                k4 = f(z + h * k3)
                z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                z = z + h * f(z + 0.5 * h * f(z))
            if not np.all(np.isfinite(z)):
                raise BlowupError(i)
            states[i] = z
    times = h * np.arange(n_steps + 1)
    return Trajectory(times, states, H, method, h, nb)


def conserved_drift(traj: Trajectory, F: SmoothFn) -> float:
    """``max_t |F(pt_t) - F(pt_0)|``."""
    vals = traj.values(F)
    return float(np.max(np.abs(vals - vals[0])))


def write_csv(traj: Trajectory, path, conserved: Mapping[str, SmoothFn] | None = None) -> None:
    nb = traj.base_dim
    nf = traj.states.shape[1] - nb
    conserved = dict(conserved or {})
    cols = {"H": traj.values(traj.hamiltonian)}
    for name, F in conserved.items():
        cols[name] = traj.values(F)
    header = ["t"] + [f"m{k}" for k in range(nb)] + [f"phi{k}" for k in range(nf)] + list(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, t in enumerate(traj.times):
            row = [repr(float(t))] + [repr(float(v)) for v in traj.states[i]]
            row += [repr(float(c[i])) for c in cols.values()]
            w.writerow(row)


def drift_summary(traj: Trajectory, conserved: Mapping[str, SmoothFn] | None = None) -> dict:
    out = {
        "integrator": traj.integrator,
        "step": traj.step,
        "n_steps": int(traj.states.shape[0] - 1),
        "horizon": float(traj.times[-1]),
        "drift": {"H": conserved_drift(traj, traj.hamiltonian)},
    }
    for name, F in (conserved or {}).items():
        out["drift"][name] = conserved_drift(traj, F)
    return out


def rigid_body_hamiltonian(inertia=(1.0, 2.0, 3.0)) -> SmoothFn:
    """``H = 1/2 sum_k phi_k^2 / I_k`` on the so(3) model."""
    return add(*[(0.5 / float(I)) * phi(k) ** 2 for k, I in enumerate(inertia)])


def casimir_so3() -> SmoothFn:
    return add(*[phi(k) ** 2 for k in range(3)])
