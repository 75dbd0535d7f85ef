"""Vorticity distributions omega(p) on the stream-function interval [0, 1]."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from .errors import DomainError, ValidationError

KINDS = ("zero", "constant", "affine", "samples")

_SCAN_POINTS = 1025
# Absolute tolerance used when comparing values of Omega against its maximum.
_TIE_TOL = 1e-12


class OmegaClass(str, enum.Enum):
    """Trichotomy of vorticity distributions (finite or infinite d_0)."""

    I = "I"
    II = "II"
    III = "III"


@dataclass(frozen=True)
class VorticitySpec:
    """User-facing description of a vorticity distribution.

    ``affine`` means ``omega(p) = a + b p``; ``samples`` is interpolated by a
    monotone (PCHIP) cubic through ``(p, values)``.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    p: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}", "/vorticity/kind")
        if self.kind == "samples":
            p = np.asarray(self.p, dtype=float)
            vals = np.asarray(self.values, dtype=float)
            if p.ndim != 1 or p.size < 2:
                raise ValidationError("need at least two sample points", "/vorticity/p")
            if vals.shape != p.shape:
                raise ValidationError(
                    f"length {vals.size} differs from len(p)={p.size}", "/vorticity/omega"
                )
            if not np.all(np.isfinite(p)):
                raise ValidationError("non-finite sample point", "/vorticity/p")
            if not np.all(np.isfinite(vals)):
                raise ValidationError("non-finite sample value", "/vorticity/omega")
            if p[0] != 0.0 or p[-1] != 1.0:
                raise ValidationError("samples must start at 0 and end at 1", "/vorticity/p")
            if np.any(np.diff(p) <= 0):
                raise ValidationError("sample points must be strictly increasing", "/vorticity/p")
            object.__setattr__(self, "p", tuple(float(x) for x in p))
            object.__setattr__(self, "values", tuple(float(x) for x in vals))
        else:
            for name in ("a", "b"):
                if not np.isfinite(getattr(self, name)):
                    raise ValidationError("must be finite", f"/vorticity/{name}")
            object.__setattr__(self, "a", float(self.a))
            object.__setattr__(self, "b", float(self.b))

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, b):
        return cls("constant", b=b)

    @classmethod
    def affine(cls, a, b):
        return cls("affine", a=a, b=b)

    @classmethod
    def samples(cls, p, values):
        return cls("samples", p=tuple(p), values=tuple(values))

    @classmethod
    def from_dict(cls, obj, pointer="/vorticity"):
        """Parse the JSON form used under the ``"vorticity"`` config key."""
        if not isinstance(obj, dict):
            raise ValidationError("expected an object", pointer)
        kind = obj.get("kind")
        if kind not in KINDS:
            raise ValidationError(f"unknown or missing kind {kind!r}", pointer + "/kind")
        allowed = {
            "zero": {"kind"},
            "constant": {"kind", "b"},
            "affine": {"kind", "a", "b"},
            "samples": {"kind", "p", "omega"},
        }[kind]
        for key in obj:
            if key not in allowed:
                raise ValidationError(f"unknown key {key!r}", f"{pointer}/{key}")
        for key in allowed - {"kind"}:
            if key not in obj:
                raise ValidationError("missing required key", f"{pointer}/{key}")
        if kind == "zero":
            return cls.zero()
        if kind in ("constant", "affine"):
            for key in allowed - {"kind"}:
                val = obj[key]
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise ValidationError("expected a number", f"{pointer}/{key}")
            return cls.constant(obj["b"]) if kind == "constant" else cls.affine(obj["a"], obj["b"])
        for key in ("p", "omega"):
            val = obj[key]
            if not isinstance(val, list) or any(
                isinstance(x, bool) or not isinstance(x, (int, float)) for x in val
            ):
                raise ValidationError("expected an array of numbers", f"{pointer}/{key}")
        return cls.samples(obj["p"], obj["omega"])

    def to_dict(self):
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "constant":
            return {"kind": "constant", "b": self.b}
        if self.kind == "affine":
            return {"kind": "affine", "a": self.a, "b": self.b}
        return {"kind": "samples", "p": list(self.p), "omega": list(self.values)}


def _golden_max(fun, lo, hi):
    res = minimize_scalar(
        lambda x: -fun(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-14}
    )
    return float(res.x), float(-res.fun)


@dataclass(frozen=True, eq=False)
class VorticityFn:
    """Immutable vorticity distribution with its derived constants.

    Attributes
    ----------
    omega0 : sup-norm of omega on [0, 1].
    omega1 : omega0 plus the essential sup of |omega'|.
    lambda0 : sqrt(2 max Omega), the lower bound of the stream parameter.
    omega_class : class I, II or III.
    argmax : a maximiser of Omega on [0, 1].
    tie : True when the maximum of Omega is attained at an endpoint *and*
        in the interior; such distributions are reported as class I.
    """

    spec: VorticitySpec
    omega0: float = field(init=False)
    omega1: float = field(init=False)
    lambda0: float = field(init=False)
    Omega_max: float = field(init=False)
    Omega_min: float = field(init=False)
    argmax: float = field(init=False)
    omega_class: OmegaClass = field(init=False)
    tie: bool = field(init=False)

    def __post_init__(self):
        s = self.spec
        if s.kind == "samples":
            knots = np.asarray(s.p)
            vals = np.asarray(s.values)
            interp = PchipInterpolator(knots, vals)
            object.__setattr__(self, "_interp", interp)
            object.__setattr__(self, "_dinterp", interp.derivative())
            object.__setattr__(self, "_antider", interp.antiderivative())
            # PCHIP never overshoots the data, so the sample range bounds omega.
            omega0 = float(np.max(np.abs(vals)))
            fine = np.linspace(0.0, 1.0, 4097)
            dq = np.abs(np.diff(interp(fine))) / np.diff(fine)
            omega1 = omega0 + float(np.max(dq))
        elif s.kind == "zero":
            omega0 = omega1 = 0.0
        elif s.kind == "constant":
            omega0 = omega1 = abs(s.b)
        else:
            omega0 = max(abs(s.a), abs(s.a + s.b))
            omega1 = omega0 + abs(s.b)
        object.__setattr__(self, "omega0", omega0)
        object.__setattr__(self, "omega1", omega1)

        argmax, omax, tie, cls = self._locate_max_and_classify()
        object.__setattr__(self, "argmax", argmax)
        object.__setattr__(self, "Omega_max", omax)
        object.__setattr__(self, "lambda0", float(np.sqrt(2.0 * max(omax, 0.0))))
        object.__setattr__(self, "omega_class", cls)
        object.__setattr__(self, "tie", tie)
        grid = np.linspace(0.0, 1.0, _SCAN_POINTS)
        k = int(np.argmin(self.Omega(grid)))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        _, neg = _golden_max(lambda x: -float(self.Omega(x)), lo, hi)
        object.__setattr__(self, "Omega_min", min(-neg, float(self.Omega(grid[k]))))

    # -- pointwise evaluation -------------------------------------------------
    def omega(self, p):
        """omega(p), vectorised."""
        p = np.asarray(p, dtype=float)
        s = self.spec
        if s.kind == "zero":
            return np.zeros_like(p)
        if s.kind == "constant":
            return np.full_like(p, s.b)
        if s.kind == "affine":
            return s.a + s.b * p
        return self._interp(p)

    def Omega(self, tau):
        """Antiderivative Omega(tau) = int_0^tau omega, vectorised, no domain check."""
        tau = np.asarray(tau, dtype=float)
        s = self.spec
        if s.kind == "zero":
            return np.zeros_like(tau)
        if s.kind == "constant":
            return s.b * tau
        if s.kind == "affine":
            return tau * (s.a + 0.5 * s.b * tau)
        return self._antider(tau)

    def domega(self, p):
        """omega'(p); only used for reporting."""
        p = np.asarray(p, dtype=float)
        s = self.spec
        if s.kind in ("zero", "constant"):
            return np.zeros_like(p)
        if s.kind == "affine":
            return np.full_like(p, s.b)
        return self._dinterp(p)

    def Omega_top_drop(self, s):
        """Omega(1) - Omega(1 - s) without cancellation for small s (scalar)."""
        s = float(s)
        sp = self.spec
        if sp.kind == "zero":
            return 0.0
        if sp.kind == "constant":
            return sp.b * s
        if sp.kind == "affine":
            return s * (sp.a + sp.b * (1.0 - 0.5 * s))
        if s <= 1.0 - sp.p[-2]:
            # omega is one cubic piece on [1 - s, 1]: Gauss-Legendre is exact
            x, w = np.polynomial.legendre.leggauss(3)
            return 0.5 * s * float(np.dot(w, self._interp(1.0 - 0.5 * s * (1.0 + x))))
        return self.Omega1 - float(self._antider(1.0 - s))

    @cached_property
    def Omega1(self):
        return float(self.Omega(1.0))

    # -- classification -------------------------------------------------------
    def _locate_max_and_classify(self):
        grid = np.linspace(0.0, 1.0, _SCAN_POINTS)
        vals = self.Omega(grid)
        om = lambda x: float(self.Omega(x))  # noqa: E731
        # refine every interior discrete local maximum
        # Lipschitz bound: a grid local max can hide at most omega0*dp of height
        slack = self.omega0 * (grid[1] - grid[0])
        top = float(np.max(vals))
        interior = []
        for k in range(1, grid.size - 1):
            if vals[k] >= vals[k - 1] and vals[k] >= vals[k + 1] and vals[k] + slack >= top:
                if slack == 0.0:
                    interior.append((float(grid[k]), float(vals[k])))
                else:
                    interior.append(_golden_max(om, grid[k - 1], grid[k + 1]))
        end0, end1 = 0.0, om(1.0)
        candidates = [(0.0, end0), (1.0, end1)] + interior
        argmax, omax = max(candidates, key=lambda c: c[1])
        tol = _TIE_TOL * (1.0 + abs(omax))
        # an interior local max sitting next to an endpoint is the endpoint itself
        inner = [c for c in interior if 1e-9 < c[0] < 1.0 - 1e-9 and c[1] >= omax - tol]
        at0 = end0 >= omax - tol
        at1 = end1 >= omax - tol
        tie = bool(inner) and (at0 or at1)
        if inner:
            return argmax, omax, tie, OmegaClass.I
        w0 = float(self.omega(0.0))
        w1 = float(self.omega(1.0))
        wtol = 1e-12 * (1.0 + self.omega0)
        if at0 and at1:
            if w0 < -wtol and w1 > wtol:
                return argmax, omax, False, OmegaClass.III
            return argmax, omax, False, OmegaClass.I
        if at1:
            cls = OmegaClass.III if w1 > wtol else OmegaClass.I
            return 1.0, end1, False, cls
        cls = OmegaClass.II if w0 < -wtol else OmegaClass.I
        return 0.0, end0, False, cls


def make_vorticity(spec):
    """Build a :class:`VorticityFn` from a spec (or its JSON dict form)."""
    if isinstance(spec, dict):
        spec = VorticitySpec.from_dict(spec)
    if not isinstance(spec, VorticitySpec):
        raise ValidationError("expected a VorticitySpec", "/vorticity")
    return VorticityFn(spec)


def capital_omega(v, tau):
    """Omega(tau) with a domain check on tau."""
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0) or not np.all(np.isfinite(t)):
        raise DomainError(f"tau must lie in [0, 1], got {tau!r}")
    out = v.Omega(t)
    return float(out) if out.ndim == 0 else out


def classify(v):
    return v.omega_class
