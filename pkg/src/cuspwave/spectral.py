"""Shooting solver for the Sturm-Liouville problem linearising the wave problem
about a stream:

    -(phi_p / H_p^3)_p = mu phi / H_p,   phi_p(1) = H_p(1)^3 phi(1),   phi(0) = 0.

The initial value problem with V(0) = 0, V_p(0) = 1 is integrated in the
variables (V, W = H_p^-3 V_p); the dispersion function is
sigma(lam, mu) = W(1) - V(1) and its least root is mu_0(lam).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericalError
from .streams import bernoulli_of_lambda, brent, conjugate_streams, hp_of

RTOL = 1e-12
ATOL = 1e-14
BRACKET_FACTOR = 2.0
BRACKET_CAP = 60


@dataclass(frozen=True, eq=False)
class ShootResult:
    lam: float
    mu: float
    p: np.ndarray
    V: np.ndarray
    Vp: np.ndarray
    W: np.ndarray
    sigma: float
    sol: object = None

    def zero_crossings(self):
        """Number of sign changes of V on (0, 1]."""
        s = np.sign(self.V[1:])
        s = s[s != 0]
        return int(np.count_nonzero(np.diff(s)))


def _rhs_factory(v, lam, mu):
    def rhs(p, y):
        hp = float(hp_of(v, lam, p))
        return [hp ** 3 * y[1], -mu * y[0] / hp]

    return rhs


def shoot(v, lam, mu, p=None, dense=False):
    """Integrate the IVP and return V, V_p on ``p`` (default 65 uniform nodes)."""
    lam = float(lam)
    if not lam > v.lambda0:
        raise DomainError(f"shooting needs lambda > lambda0={v.lambda0!r}, got {lam!r}")
    p = np.linspace(0.0, 1.0, 65) if p is None else np.asarray(p, dtype=float)
    hp0 = float(hp_of(v, lam, 0.0))
    sol = integrate.solve_ivp(
        _rhs_factory(v, lam, float(mu)),
        (0.0, 1.0),
        [0.0, hp0 ** -3],
        method="DOP853",
        t_eval=p,
        rtol=RTOL,
        atol=ATOL,
        dense_output=dense,
    )
    if sol.status != 0:
        raise NumericalError(f"IVP integration failed at lambda={lam!r}, mu={mu!r}: {sol.message}")
    V, W = sol.y
    hp = hp_of(v, lam, p)
    Vp = hp ** 3 * W
    return ShootResult(lam=lam, mu=float(mu), p=p, V=V, Vp=Vp, W=W,
                       sigma=float(W[-1] - V[-1]), sol=sol.sol if dense else None)


def sigma(v, lam, mu):
    """Dispersion function sigma(lam, mu) = H_p(1)^-3 V_p(1) - V(1)."""
    return shoot(v, lam, mu, p=np.array([0.0, 1.0])).sigma


def hp_bounds(v, lam):
    """(frak_m, frak_M): min and max of H_p on [0, 1]."""
    gap = (lam - v.lambda0) * (lam + v.lambda0)
    big = gap ** -0.5
    small = (lam * lam - 2.0 * v.Omega_min) ** -0.5
    return small, big


def _kappa(frak_M):
    """Root of tanh(k)/k = frak_M^-3 (requires frak_M > 1)."""
    target = frak_M ** -3
    hi = 1.0
    while math.tanh(hi) / hi > target:
        hi *= 2.0
    return optimize.brentq(lambda k: math.tanh(k) / k - target, 1e-12, hi, xtol=1e-15)


def mu0_lower_bound(v, lam):
    """A value of mu certainly below mu_0 (from the constant-coefficient comparison)."""
    _, frak_M = hp_bounds(v, lam)
    if frak_M > 1.0:
        return -_kappa(frak_M) ** 2 / frak_M ** 2
    return 0.0


def eigen_count(v, lam, mu, n=4097):
    """Number of eigenvalues strictly below ``mu`` (Pruefer angle count).

    The angle theta = atan2(W, V) starts at pi/2, decreases monotonically in mu
    at p = 1, and the k-th eigenvalue is where theta(1) = pi/4 - k pi.
    """
    res = shoot(v, lam, mu, p=np.linspace(0.0, 1.0, n))
    theta = np.unwrap(np.arctan2(res.W, res.V))
    theta += 0.5 * math.pi - theta[0]
    end = theta[-1]
    if end >= 0.25 * math.pi:
        return 0
    return int(math.floor((0.25 * math.pi - end) / math.pi)) + 1


def _bracket_eigenvalue(v, lam, k, low):
    """(a, b) with exactly k eigenvalues below a and k + 1 below b."""
    a = low
    while eigen_count(v, lam, a) > k:
        a -= 2.0 * (1.0 + abs(a))
    step = 1e-2 * (1.0 + abs(a))
    b = a + step
    for _ in range(BRACKET_CAP):
        if eigen_count(v, lam, b) > k:
            break
        a, b, step = b, b + BRACKET_FACTOR * step, BRACKET_FACTOR * step
    else:
        raise NumericalError("bracket expansion cap reached while searching an eigenvalue")
    # bisect on the count until b sees exactly one more eigenvalue than a
    for _ in range(200):
        nb = eigen_count(v, lam, b)
        if nb == k + 1:
            return a, b
        m = 0.5 * (a + b)
        if eigen_count(v, lam, m) > k:
            b = m
        else:
            a = m
    raise NumericalError("eigenvalue bracket bisection did not separate the roots")


def mu0(v, lam, n=64):
    """Fundamental eigenvalue mu_0(lam) and eigenfunction phi_0 on p_j = j/n.

    phi_0 is normalised by phi_0'(0) = 1, hence positive on (0, 1].
    """
    lam = float(lam)
    if not lam > v.lambda0:
        raise DomainError(f"mu0 needs lambda > lambda0={v.lambda0!r}")
    low = mu0_lower_bound(v, lam)
    low -= 1e-3 * (1.0 + abs(low))
    a, b = _bracket_eigenvalue(v, lam, 0, low)
    root = brent(lambda mu: sigma(v, lam, mu), a, b, "mu0")
    res = shoot(v, lam, root, p=np.linspace(0.0, 1.0, n + 1))
    if not np.all(res.V[1:] > 0):
        raise NumericalError("fundamental eigenfunction is not positive")
    return root, res.V


def mu1(v, lam, mu0_value=None):
    """Second eigenvalue: the root of sigma between the first two count jumps above mu_0."""
    lam = float(lam)
    if mu0_value is None:
        mu0_value, _ = mu0(v, lam)
    start = mu0_value + 1e-9 * (1.0 + abs(mu0_value))
    a, b = _bracket_eigenvalue(v, lam, 1, start)
    return brent(lambda mu: sigma(v, lam, mu), a, b, "mu1")


@dataclass(frozen=True, eq=False)
class SpectralPoint:
    lam: float
    mu0: float
    phi0: np.ndarray
    mu1: float
    frakm: float
    frakM: float
    kStar: float | None

    @property
    def p(self):
        return np.linspace(0.0, 1.0, self.phi0.size)

    def to_dict(self):
        return {
            "lambda": self.lam,
            "mu0": self.mu0,
            "mu1": self.mu1,
            "kStar": self.kStar,
            "frakm": self.frakm,
            "frakM": self.frakM,
        }


def spectral_point(v, lam, n=64):
    m0, phi = mu0(v, lam, n)
    m1 = mu1(v, lam, m0)
    fm, fM = hp_bounds(v, lam)
    return SpectralPoint(lam=float(lam), mu0=m0, phi0=phi, mu1=m1, frakm=fm, frakM=fM,
                         kStar=math.sqrt(-m0) if m0 < 0 else None)


def richardson_derivative(fun, x, h):
    """Central difference derivative with two Richardson extrapolation levels."""
    def d(step):
        return (fun(x + step) - fun(x - step)) / (2.0 * step)

    d1, d2, d4 = d(h), d(h / 2), d(h / 4)
    e1 = (4.0 * d2 - d1) / 3.0
    e2 = (4.0 * d4 - d2) / 3.0
    return (16.0 * e2 - e1) / 15.0


def dispersion_identity_check(v, lam):
    """|sigma(lam, 0) - (3 lam^2 / 2) R'(lam)| with R' by finite differences."""
    lam = float(lam)
    h = 1e-2 * min(lam - v.lambda0, 1.0)
    dR = richardson_derivative(lambda x: bernoulli_of_lambda(v, x), lam, h)
    return abs(sigma(v, lam, 0.0) - 1.5 * lam * lam * dR)


def bifurcation_wavenumber(v, r):
    """q-wavenumber sqrt(|mu_0(lambda_+(r))|) of the linear Stokes mode."""
    pair = conjugate_streams(v, r)
    m0, _ = mu0(v, pair.lambdaPlus)
    if not m0 < 0.0:
        raise NumericalError(f"mu0(lambda_+)={m0!r} is not negative; lambda_+ must be subcritical")
    return math.sqrt(-m0)
