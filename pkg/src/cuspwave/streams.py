"""Unidirectional shear flows (stream solutions) and their critical data.

A stream with parameter ``lam = u'(0)`` has, in hodograph variables, the
height function ``H(p) = int_0^p (lam^2 - 2 Omega)^(-1/2)``; its depth is
``H(1)`` and its Bernoulli constant ``R(lam) = (lam^2 - 2 Omega(1) + 2 d) / 3``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import BeyondR0Error, DomainError, NumericalError, SubcriticalParameterError
from .vorticity import OmegaClass

ROOT_XTOL = 1e-14
ROOT_RTOL = 4 * np.finfo(float).eps
ROOT_MAXITER = 200
QUAD_EPSREL = 1e-13
QUAD_EPSABS = 1e-13
DEGENERACY_SEPARATION = 1e-7


def brent(fun, a, b, what="root"):
    """Bracketed Brent solve with the package-wide tolerances."""
    fa, fb = fun(a), fun(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise NumericalError(f"{what}: no sign change on [{a!r}, {b!r}] ({fa!r}, {fb!r})")
    try:
        return optimize.brentq(fun, a, b, xtol=ROOT_XTOL, rtol=ROOT_RTOL, maxiter=ROOT_MAXITER)
    except RuntimeError as exc:  # pragma: no cover - brentq convergence failure
        raise NumericalError(f"{what}: {exc}") from exc


def _gap(v, lam):
    """lam^2 - lam0^2 computed without cancellation."""
    return (lam - v.lambda0) * (lam + v.lambda0)


def _check_lambda(v, lam, allow_lambda0=True):
    lam = float(lam)
    if not math.isfinite(lam) or lam < v.lambda0:
        raise DomainError(f"lambda={lam!r} is below lambda0={v.lambda0!r}")
    if lam == v.lambda0:
        if v.omega_class is OmegaClass.I:
            raise DomainError("integral diverges at lambda = lambda0 for class I vorticity")
        if not allow_lambda0:
            raise DomainError("lambda must exceed lambda0")
    return lam


def stream_integral(v, lam, kernel):
    """int_0^1 kernel(X(tau), tau) dtau with X = lam^2 - 2 Omega(tau) >= 0.

    Class II/III distributions are integrated after the substitution
    tau = u^2 (resp. tau = 1 - u^2), which removes the square-root endpoint
    singularity that appears as lam -> lam0.
    """
    gap = _gap(v, lam)
    omax = v.Omega_max

    def X(tau):
        return gap + 2.0 * max(omax - float(v.Omega(tau)), 0.0)

    opts = dict(epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400)
    if v.omega_class in (OmegaClass.II, OmegaClass.III):
        # the integrand peaks where 2|omega(end)| u^2 ~ gap
        end = 1.0 if v.omega_class is OmegaClass.III else 0.0
        width = math.sqrt(gap / (2.0 * abs(float(v.omega(end)))))
        pts = [w for w in (0.1 * width, width, 10.0 * width) if 0.0 < w < 1.0] or None
    if v.omega_class is OmegaClass.III:
        # here Omega_max = Omega(1), so X(1 - u^2) = gap + 2 (Omega(1) - Omega(1 - u^2))
        def top(u):
            return 2.0 * u * kernel(gap + 2.0 * max(v.Omega_top_drop(u * u), 0.0), 1.0 - u * u)

        val, _ = integrate.quad(top, 0.0, 1.0, points=pts, **opts)
    elif v.omega_class is OmegaClass.II:
        val, _ = integrate.quad(lambda u: 2.0 * u * kernel(X(u * u), u * u), 0.0, 1.0,
                                points=pts, **opts)
    else:
        pts = [v.argmax] if 0.0 < v.argmax < 1.0 else None
        val, _ = integrate.quad(lambda t: kernel(X(t), t), 0.0, 1.0, points=pts, **opts)
    return val


def depth(v, lam):
    """d(lam) = int_0^1 (lam^2 - 2 Omega)^(-1/2)."""
    lam = _check_lambda(v, lam)
    return stream_integral(v, lam, lambda x, _t: x ** -0.5)


def critical_integral(v, lam):
    """int_0^1 (lam^2 - 2 Omega)^(-3/2); equals 1 exactly at lambda_c."""
    lam = _check_lambda(v, lam, allow_lambda0=False)
    return stream_integral(v, lam, lambda x, _t: x ** -1.5)


def bernoulli_of_lambda(v, lam):
    """R(lam) = (lam^2 - 2 Omega(1) + 2 d(lam)) / 3."""
    lam = _check_lambda(v, lam)
    return (lam * lam - 2.0 * v.Omega1 + 2.0 * depth(v, lam)) / 3.0


def bernoulli_derivative(v, lam):
    """R'(lam) = (2 lam / 3) (1 - int (lam^2 - 2 Omega)^(-3/2))."""
    return 2.0 * lam / 3.0 * (1.0 - critical_integral(v, lam))


def hp_of(v, lam, p):
    """H_p(p, lam) = (lam^2 - 2 Omega(p))^(-1/2), vectorised in p."""
    p = np.asarray(p, dtype=float)
    x = _gap(v, lam) + 2.0 * np.maximum(v.Omega_max - v.Omega(p), 0.0)
    return x ** -0.5


@dataclass(frozen=True, eq=False)
class StreamProfile:
    lam: float
    depth: float
    bernoulli: float
    p: np.ndarray
    H: np.ndarray
    Hp: np.ndarray


def stream_heights(v, lam, p):
    """H(p, lam) on an increasing grid starting at 0 (cumulative quadrature)."""
    lam = _check_lambda(v, lam)
    p = np.asarray(p, dtype=float)
    if p[0] != 0.0 or np.any(np.diff(p) <= 0):
        raise DomainError("p grid must start at 0 and increase strictly")
    gap = _gap(v, lam)
    omax = v.Omega_max

    def integrand(t):
        return (gap + 2.0 * max(omax - float(v.Omega(t)), 0.0)) ** -0.5

    pieces = np.empty(p.size - 1)
    for k in range(p.size - 1):
        a, b = p[k], p[k + 1]
        cls = v.omega_class
        if cls is OmegaClass.III and b == 1.0:
            # tau = 1 - u^2 on the last cell
            ua = math.sqrt(1.0 - a)
            pieces[k] = integrate.quad(
                lambda u: 2 * u * (gap + 2.0 * max(v.Omega_top_drop(u * u), 0.0)) ** -0.5,
                0.0, ua, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)[0]
        elif cls is OmegaClass.II and a == 0.0:
            ub = math.sqrt(b)
            pieces[k] = integrate.quad(lambda u: 2 * u * integrand(u * u), 0.0, ub,
                                       epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)[0]
        else:
            pts = [v.argmax] if a < v.argmax < b else None
            pieces[k] = integrate.quad(integrand, a, b, points=pts,
                                       epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)[0]
    return np.concatenate([[0.0], np.cumsum(pieces)])


def stream_profile(v, lam, n=64):
    """Sample the stream H(., lam) on the uniform grid p_j = j / n.

    lam = lambda0 is accepted when d0 is finite, but that limiting stream is
    experimental: for class II, Hp(0) is infinite, so it is not a solver seed.
    """
    lam = _check_lambda(v, lam)
    p = np.linspace(0.0, 1.0, n + 1)
    H = stream_heights(v, lam, p)
    d = depth(v, lam)
    if abs(H[-1] - d) > 1e-10 * max(1.0, d):
        raise NumericalError(f"cumulative quadrature H(1)={H[-1]!r} disagrees with d={d!r}")
    H[-1] = d
    with np.errstate(divide="ignore"):
        Hp = hp_of(v, lam, p)
    R = (lam * lam - 2.0 * v.Omega1 + 2.0 * d) / 3.0
    return StreamProfile(lam=lam, depth=d, bernoulli=R, p=p, H=H, Hp=Hp)


@dataclass(frozen=True)
class CriticalData:
    lambda0: float
    lambdaC: float
    rC: float
    dC: float
    d0: float
    r0: float
    omega_class: OmegaClass

    def to_dict(self):
        return {
            "lambda0": self.lambda0,
            "lambdaC": self.lambdaC,
            "rC": self.rC,
            "dC": self.dC,
            "d0": self.d0,
            "r0": self.r0,
            "class": self.omega_class.value,
        }


@functools.lru_cache(maxsize=128)
def critical_data(v):
    """lambda_c, r_c, d_c and the limits d_0, r_0 (infinite for class I)."""
    lam0 = v.lambda0
    hi = math.sqrt(lam0 * lam0 + 1.0) + 1e-3
    while critical_integral(v, hi) >= 1.0:
        hi = lam0 + 2.0 * (hi - lam0)
    # the integral blows up as lam -> lam0; lambda_c^2 - lam0^2 <= 1 bounds it above
    lo = 0.5 * (lam0 + hi)
    while critical_integral(v, lo) <= 1.0:
        lo = lam0 + 0.5 * (lo - lam0)
        if lo - lam0 < 1e-8 * (1.0 + lam0):
            raise NumericalError("cannot bracket lambda_c")
    lamc = brent(lambda x: critical_integral(v, x) - 1.0, lo, hi, "lambda_c")
    dc = depth(v, lamc)
    rc = (lamc * lamc - 2.0 * v.Omega1 + 2.0 * dc) / 3.0
    if v.omega_class is OmegaClass.I:
        d0 = r0 = math.inf
    else:
        d0 = depth(v, lam0)
        r0 = (lam0 * lam0 - 2.0 * v.Omega1 + 2.0 * d0) / 3.0
    return CriticalData(lam0, lamc, rc, dc, d0, r0, v.omega_class)


@dataclass(frozen=True)
class ConjugatePair:
    r: float
    lambdaPlus: float
    lambdaMinus: float
    dPlus: float
    dMinus: float
    degenerate: bool = False


def conjugate_streams(v, r):
    """Sub- (+) and supercritical (-) streams sharing the Bernoulli constant r."""
    cd = critical_data(v)
    r = float(r)
    if not r > cd.rC:
        raise SubcriticalParameterError(f"r={r!r} <= r_c={cd.rC!r}: no stream solutions exist")
    if not r < cd.r0:
        raise BeyondR0Error(f"r={r!r} >= r_0={cd.r0!r}")

    def f(lam):
        return bernoulli_of_lambda(v, lam) - r

    if v.omega_class is OmegaClass.I:
        delta = 1e-2 * (cd.lambdaC - cd.lambda0)
        lo = cd.lambda0 + delta
        while f(lo) <= 0.0:
            delta *= 0.1
            if delta < 1e-300:
                raise NumericalError("cannot bracket lambda_plus")
            lo = cd.lambda0 + delta
    else:
        lo = cd.lambda0
    lam_plus = brent(f, lo, cd.lambdaC, "lambda_plus")
    hi = 2.0 * cd.lambdaC
    while f(hi) <= 0.0:
        hi *= 2.0
    lam_minus = brent(f, cd.lambdaC, hi, "lambda_minus")
    return ConjugatePair(
        r=r,
        lambdaPlus=lam_plus,
        lambdaMinus=lam_minus,
        dPlus=depth(v, lam_plus),
        dMinus=depth(v, lam_minus),
        degenerate=(lam_minus - lam_plus) < DEGENERACY_SEPARATION,
    )
