"""JSON verification reports shared by every suite and CLI command."""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone

from . import __version__
from ._kernels import BACKEND


def _clean(x):
    if isinstance(x, float):
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


class Report:
    """Ordered list of named checks, each a residual against a tolerance."""

    def __init__(self, model=None, seed=None, kind: str = "verify"):
        self.model = model
        self.seed = seed
        self.kind = kind
        self.checks: list[dict] = []
        self.conditions: dict | None = None
        self.extra: dict = {}

    def add(self, name: str, residual: float, tol: float, **info) -> bool:
        residual = float(residual)
        ok = bool(residual <= tol)
        entry = {"name": name, "residual": residual, "tol": float(tol), "pass": ok}
        entry.update(info)
        self.checks.append(entry)
        return ok

    def add_flag(self, name: str, ok: bool, **info) -> bool:
        """A pass/fail check with no numeric residual (e.g. a verdict)."""
        entry = {"name": name, "residual": None, "tol": None, "pass": bool(ok)}
        entry.update(info)
        self.checks.append(entry)
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def failures(self) -> list[dict]:
        return [c for c in self.checks if not c["pass"]]

    def to_dict(self, timestamp: bool = True) -> dict:
        model = self.model
        d = {
            "kind": self.kind,
            "version": __version__,
            "backend": BACKEND,
            "model": getattr(model, "name", model),
            "model_hash": model.digest() if hasattr(model, "digest") else None,
            "seed": self.seed,
            "checks": self.checks,
            "conditions": self.conditions or {},
            "pass": self.passed,
        }
        d.update(self.extra)
        if timestamp:
            d["timestamp"] = datetime.now(timezone.utc).isoformat()
        return _clean(d)

    def dumps(self, timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(timestamp), indent=2)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "PASS" if c["pass"] else "FAIL"
            if c["residual"] is None:
                out.append(f"{tag}  {c['name']}")
            else:
                out.append(f"{tag}  {c['name']}: {c['residual']:.3e} (tol {c['tol']:.1e})")
        return out
