"""Strict JSON run configuration with defaults and canonical serialisation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ValidationError
from .vorticity import VorticitySpec

DEFAULTS = {
    "grid": {"Np": 64, "Nq": 256},
    "tolerances": {"newton": 1e-10, "quadrature": 1e-12, "root": 1e-12},
    "budgets": {"maxNewtonIters": 50, "maxContinuationSteps": 200, "lambdaCap": 500.0},
    "slopeBoundM": 1.0,
}
_INT_KEYS = {"Np", "Nq", "maxNewtonIters", "maxContinuationSteps"}


@dataclass(frozen=True)
class RunConfig:
    vorticity: VorticitySpec
    Np: int = 64
    Nq: int = 256
    newton_tol: float = 1e-10
    quadrature_tol: float = 1e-12
    root_tol: float = 1e-12
    max_newton_iters: int = 50
    max_continuation_steps: int = 200
    lambda_cap: float = 500.0
    slope_bound: float = 1.0

    def to_dict(self):
        return {
            "vorticity": self.vorticity.to_dict(),
            "grid": {"Np": self.Np, "Nq": self.Nq},
            "tolerances": {
                "newton": self.newton_tol,
                "quadrature": self.quadrature_tol,
                "root": self.root_tol,
            },
            "budgets": {
                "maxNewtonIters": self.max_newton_iters,
                "maxContinuationSteps": self.max_continuation_steps,
                "lambdaCap": self.lambda_cap,
            },
            "slopeBoundM": self.slope_bound,
        }


def _reject_duplicates(pairs):
    out = {}
    for key, val in pairs:
        if key in out:
            raise ValidationError(f"duplicate key {key!r}", "/" + key)
        out[key] = val
    return out


def _number(val, pointer, integer=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError("expected a number", pointer)
    if integer:
        if isinstance(val, float) and not val.is_integer():
            raise ValidationError("expected an integer", pointer)
        return int(val)
    if not math.isfinite(val):
        raise ValidationError("must be finite", pointer)
    return float(val)


def _section(obj, name):
    defaults = DEFAULTS[name]
    raw = obj.get(name, {})
    if not isinstance(raw, dict):
        raise ValidationError("expected an object", f"/{name}")
    for key in raw:
        if key not in defaults:
            raise ValidationError(f"unknown key {key!r}", f"/{name}/{key}")
    out = {}
    for key, default in defaults.items():
        ptr = f"/{name}/{key}"
        out[key] = _number(raw.get(key, default), ptr, integer=key in _INT_KEYS)
    return out


def config_from_dict(obj):
    if not isinstance(obj, dict):
        raise ValidationError("top level must be an object", "")
    allowed = {"vorticity", *DEFAULTS}
    for key in obj:
        if key not in allowed:
            raise ValidationError(f"unknown key {key!r}", "/" + key)
    if "vorticity" not in obj:
        raise ValidationError("missing required key", "/vorticity")
    vort = VorticitySpec.from_dict(obj["vorticity"], "/vorticity")
    grid = _section(obj, "grid")
    tol = _section(obj, "tolerances")
    bud = _section(obj, "budgets")
    m = _number(obj.get("slopeBoundM", DEFAULTS["slopeBoundM"]), "/slopeBoundM")
    for key in ("Np", "Nq"):
        if grid[key] < 8:
            raise ValidationError("must be at least 8", f"/grid/{key}")
    for key, val in tol.items():
        if not val > 0:
            raise ValidationError("must be positive", f"/tolerances/{key}")
    for key, val in bud.items():
        if not val > 0:
            raise ValidationError("must be positive", f"/budgets/{key}")
    if not m > 0:
        raise ValidationError("must be positive", "/slopeBoundM")
    return RunConfig(
        vorticity=vort,
        Np=grid["Np"],
        Nq=grid["Nq"],
        newton_tol=tol["newton"],
        quadrature_tol=tol["quadrature"],
        root_tol=tol["root"],
        max_newton_iters=bud["maxNewtonIters"],
        max_continuation_steps=bud["maxContinuationSteps"],
        lambda_cap=bud["lambdaCap"],
        slope_bound=m,
    )


def parse_config_text(text):
    try:
        obj = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}", "") from exc
    return config_from_dict(obj)


def parse_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}", "") from exc
    return parse_config_text(text)


def serialize(config):
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n"
