"""Flow force of streams and waves, and the cuspidal region in the (r, s) plane.

In hodograph variables the flow force of a q-column is

    3 s = (3 r + 2 Omega(1)) eta - eta^2 + int_0^1 [(1 - h_q^2) / h_p^2 - 2 Omega(p)] h_p dp,

which for a stream H(., lam) reduces to an integral of (lam^2 - 4 Omega) H_p.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, SubcriticalParameterError
from .streams import (
    bernoulli_of_lambda,
    brent,
    conjugate_streams,
    critical_data,
    depth,
    stream_integral,
)
from .vorticity import OmegaClass
from .waves import HodographProblem

BAND = 1e-8


def flow_force_of_lambda(v, lam):
    """s of the stream H(., lam), whose Bernoulli constant is R(lam)."""
    lam = float(lam)
    d = depth(v, lam)
    r = bernoulli_of_lambda(v, lam)
    integral = stream_integral(v, lam, lambda x, _t: (2.0 * x - lam * lam) * x ** -0.5)
    return ((3.0 * r + 2.0 * v.Omega1) * d - d * d + integral) / 3.0


def stream_lambdas(v, r):
    """(lambda_+, lambda_-) at r, allowing the endpoints r_c and r_0."""
    cd = critical_data(v)
    r = float(r)
    if r == cd.rC:
        return cd.lambdaC, cd.lambdaC
    if r == cd.r0:
        hi = 2.0 * cd.lambdaC
        while bernoulli_of_lambda(v, hi) <= r:
            hi *= 2.0
        lam_minus = brent(lambda x: bernoulli_of_lambda(v, x) - r, cd.lambdaC, hi, "lambda_minus")
        return cd.lambda0, lam_minus
    pair = conjugate_streams(v, r)
    return pair.lambdaPlus, pair.lambdaMinus


def flow_force_stream(v, r, branch="plus"):
    """s_+(r) (subcritical stream) or s_-(r) (supercritical stream)."""
    if branch not in ("plus", "minus"):
        raise DomainError(f"branch must be 'plus' or 'minus', got {branch!r}")
    lp, lm = stream_lambdas(v, r)
    return flow_force_of_lambda(v, lp if branch == "plus" else lm)


@functools.lru_cache(maxsize=32)
def _problem(v, r, Np, Nq):
    return HodographProblem(v, r, Np, Nq)


@functools.lru_cache(maxsize=32)
def _stream_integral_plus(v, r):
    lam = conjugate_streams(v, r).lambdaPlus
    return stream_integral(v, lam, lambda x, _t: (2.0 * x - lam * lam) * x ** -0.5)


def flow_force_columns(grid, v, problem=None):
    """s at every q-column of ``grid`` (array of length Nq + 1).

    The integral is split into the exact stream part (adaptive quadrature) and
    a midpoint sum of the deviation from it, so that the stream is reproduced
    to quadrature accuracy and the first variation about it vanishes exactly.
    """
    prob = problem or _problem(v, grid.r, grid.Np, grid.Nq)
    x = prob.to_vector(grid.h)
    f = prob._fields(x, grid.Lambda)
    hp = f["hp_pm"].reshape(prob.Nq + 1, prob.Np)
    hq = f["hq_pm"].reshape(prob.Nq + 1, prob.Np)
    om = prob.Omega_mid
    g = (1.0 - hq ** 2) / hp - 2.0 * om * hp
    g0 = 1.0 / prob.Hp_mid - 2.0 * om * prob.Hp_mid
    base = _stream_integral_plus(v, prob.r)
    integral = base + prob.dp * np.sum(g - g0, axis=1)
    eta = grid.h[:, -1]
    return ((3.0 * prob.r + 2.0 * v.Omega1) * eta - eta * eta + integral) / 3.0


def flow_force_wave(grid, v, q_index=0):
    if not 0 <= q_index <= grid.Nq:
        raise DomainError(f"qIndex {q_index} outside 0..{grid.Nq}")
    return float(flow_force_columns(grid, v)[q_index])


def flow_force_variation(grid, v):
    """(max_q s - min_q s) / |s| over the columns of a wave."""
    s = flow_force_columns(grid, v)
    return float((s.max() - s.min()) / abs(s.mean()))


@dataclass(frozen=True)
class RegionPoint:
    r: float
    s: float
    position: str
    sMinus: float = math.nan
    sPlus: float = math.nan

    @property
    def member(self):
        return self.position in ("inside", "lower-boundary")


@dataclass(frozen=True, eq=False)
class CuspRegion:
    v: object = field(repr=False)
    rGrid: np.ndarray
    sMinus: np.ndarray
    sPlus: np.ndarray
    r0: float
    omega_class: OmegaClass

    @functools.cached_property
    def _interp(self):
        if self.rGrid.size < 2:
            return None
        return PchipInterpolator(self.rGrid, self.sMinus), PchipInterpolator(self.rGrid, self.sPlus)

    def s_minus(self, r):
        return self._interp[0](r)

    def s_plus(self, r):
        return self._interp[1](r)

    def rows(self):
        return list(zip(self.rGrid.tolist(), self.sMinus.tolist(), self.sPlus.tolist()))


def region_grid(v, r_max, n=64):
    """Cosine-clustered r-grid on [r_c, min(r_max, r_0)], densest at r_c."""
    cd = critical_data(v)
    r_max = float(r_max)
    if not r_max > cd.rC:
        raise SubcriticalParameterError(f"rMax={r_max!r} must exceed r_c={cd.rC!r}")
    if n < 2:
        raise DomainError("need n >= 2 sample points")
    hi = min(r_max, cd.r0)
    k = np.arange(n)
    rg = cd.rC + (hi - cd.rC) * (1.0 - np.cos(0.5 * math.pi * k / (n - 1)))
    rg[0], rg[-1] = cd.rC, hi
    return rg


def boundary_values(v, r):
    """(s_-(r), s_+(r))."""
    lp, lm = stream_lambdas(v, r)
    sp_ = flow_force_of_lambda(v, lp)
    return (sp_ if lm == lp else flow_force_of_lambda(v, lm)), sp_


def build_region(v, r_max, n=64):
    """Sample s_-(r), s_+(r) on a cosine-clustered grid starting at r_c."""
    cd = critical_data(v)
    rg = region_grid(v, r_max, n)
    sm, spl = np.array([boundary_values(v, r) for r in rg]).T
    return CuspRegion(v=v, rGrid=rg, sMinus=sm, sPlus=spl, r0=cd.r0, omega_class=cd.omega_class)


def contains(region, r, s, band=BAND):
    """Classify (r, s) against the half-open region s_-(r) <= s < s_+(r).

    The boundary values are recomputed from the streams at r rather than read
    off the interpolants, so the band applies to the exact curves.
    """
    r, s = float(r), float(s)
    lo, hi = region.rGrid[0], region.rGrid[-1]
    if not lo - band <= r <= hi + band:
        raise DomainError(f"r={r!r} outside the sampled range [{lo!r}, {hi!r}]")
    r = min(max(r, lo), hi)
    sm, sp_ = boundary_values(region.v, r)
    if abs(s - sm) <= band:
        pos = "lower-boundary"
    elif abs(s - sp_) <= band:
        pos = "upper-boundary"
    elif sm < s < sp_:
        pos = "inside"
    else:
        pos = "outside"
    if pos != "outside" and math.isfinite(region.r0) and abs(r - region.r0) <= band and pos != "lower-boundary":
        pos = "truncation-edge"
    return RegionPoint(r=r, s=s, position=pos, sMinus=sm, sPlus=sp_)


@dataclass(frozen=True)
class BranchVerdict:
    t: list
    s: list
    monotonic: bool
    vacuous: bool
    sPlusGap: float
    sMinusGap: float | None

    def to_dict(self):
        return {
            "t": self.t,
            "s": self.s,
            "monotonic": self.monotonic,
            "vacuous": self.vacuous,
            "endpoints": {"sPlusGap": self.sPlusGap, "sMinusGap": self.sMinusGap},
        }


def branch_flow_force(branch, v, solitary=None):
    """Crest-column flow force along a branch and the monotonicity verdict."""
    if not branch:
        raise DomainError("empty branch")
    r = branch[0].r
    t = [w.crest_height for w in branch]
    s = [flow_force_wave(w, v, 0) for w in branch]
    diffs = np.diff(s)
    vacuous = len(s) < 2
    monotonic = bool(vacuous or np.all(diffs < 0.0))
    s_plus = flow_force_stream(v, r, "plus")
    gap_plus = abs(s[0] - s_plus)
    gap_minus = None
    if solitary is not None:
        gap_minus = abs(flow_force_wave(solitary, v, 0) - flow_force_stream(v, r, "minus"))
    return BranchVerdict(t=t, s=s, monotonic=monotonic, vacuous=vacuous,
                         sPlusGap=gap_plus, sMinusGap=gap_minus)


def irrotational_shape_check(n=33):
    """Compare curve shapes of the nu-parametrised closed forms with the stream curves.

    Returns True when both families have their cusp at (1, 1) and the two
    branches are ordered the same way on either side of the cusp.
    """
    nu = np.linspace(0.3, 3.0, n)
    r_nu = (1.0 + 2.0 * nu) / (3.0 * nu ** (2.0 / 3.0))
    s_nu = (2.0 + nu) / (3.0 * nu ** (1.0 / 3.0))
    lam = np.cbrt(nu)
    r_l = (lam ** 3 + 2.0) / (3.0 * lam)
    s_l = (2.0 * lam ** 3 + 1.0) / (3.0 * lam ** 2)
    cusp_nu = (r_nu.min(), s_nu[np.argmin(r_nu)])
    cusp_l = (r_l.min(), s_l[np.argmin(r_l)])
    same_cusp = np.allclose(cusp_nu, (1.0, 1.0), atol=1e-2) and np.allclose(cusp_l, (1.0, 1.0), atol=1e-2)
    return bool(same_cusp)
