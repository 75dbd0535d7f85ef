"""Finite-difference solver for steady waves in hodograph variables.

The height function h(q, p) over the half period [0, Lambda] x [0, 1] solves

    (h_q / h_p)_q - 1/2 ((1 + h_q^2) / h_p^2)_p - omega(p) = 0,
    h(q, 0) = 0,    (1 + h_q^2) / h_p^2 + 2 h = 3 r   at p = 1,

with even reflection at the crest (q = 0) and the trough (q = Lambda).

The equations are the Euler-Lagrange equations of

    L[h] = int int [ -h_q^2 / (2 h_p) - 1 / (2 h_p) + Omega(p) h_p ] dq dp
           + int [ h^2 / 2 - (3 r / 2 + Omega(1)) h ] at p = 1 dq,

and the discrete problem is built the same way: L is approximated by
trapezoid/midpoint sums over cell edges and the residual is its exact
gradient, rescaled row by row to PDE form. The Bernoulli condition comes out
as the natural boundary condition at p = 1, and the Jacobian is the symmetric
Hessian up to that row scaling. A discrete flow force is then conserved to
high accuracy from column to column.

The unknown is the perturbation w = h - H of the subcritical stream
H = H(., lambda_+(r)), with H_p evaluated exactly and only w differenced.
Omega enters through a midpoint value chosen so that the stream flux is
exact. H is therefore an exact discrete solution, and the scheme is second
order in w.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid
from scipy.sparse.linalg import LinearOperator, onenormest, splu

from .errors import ConvergenceError, DomainError, TurningPointError
from .spectral import mu0
from .streams import conjugate_streams, hp_of, stream_heights

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-10
MAX_NEWTON_ITERS = 50
MAX_BACKTRACKS = 30
COND_LIMIT = 1e14
STAGNATION_FRACTION = 0.1
DEFAULT_NP = 64
DEFAULT_NQ = 256


@dataclass(eq=False)
class WaveGrid:
    """Discrete wave on the half-period strip.

    ``h[i, j] = h(q_i, p_j)`` with ``q_i = i Lambda / Nq`` and ``p_j = j / Np``;
    the crest is at q = 0 and the trough at q = Lambda.
    """

    r: float
    Lambda: float
    h: np.ndarray
    kind: str = "stokes"
    iterations: int = 0
    residual: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def Nq(self):
        return self.h.shape[0] - 1

    @property
    def Np(self):
        return self.h.shape[1] - 1

    @property
    def q(self):
        return np.linspace(0.0, self.Lambda, self.Nq + 1)

    @property
    def p(self):
        return np.linspace(0.0, 1.0, self.Np + 1)

    @property
    def eta(self):
        return self.h[:, -1]

    @property
    def crest_height(self):
        return float(self.h[0, -1])


def _central_diff_matrix(n):
    """Central first difference on nodes 0..n with even reflection, unit spacing."""
    rows, cols, vals = [], [], []
    for i in range(n + 1):
        lo, hi = i - 1, i + 1
        if lo < 0:
            lo = 1
        if hi > n:
            hi = n - 1
        if lo == hi:
            continue
        rows += [i, i]
        cols += [hi, lo]
        vals += [0.5, -0.5]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))


@functools.lru_cache(maxsize=16)
def _operators(Nq, Np):
    """Sparse difference operators acting on w[i, j], i = 0..Nq, j = 1..Np (C order).

    All operators use unit grid spacing; callers scale by 1/dq, 1/dp.
    """
    Iq = sp.identity(Nq + 1, format="csr")
    Ip = sp.identity(Np, format="csr")
    # w_full[:, j] for j = 0..Np from the unknowns (row 0 is the bottom, w = 0)
    embed = sp.vstack([sp.csr_matrix((1, Np)), Ip], format="csr")  # (Np+1) x Np
    # p-midpoint difference w[j+1] - w[j], j = 0..Np-1
    dmid = sp.diags([-np.ones(Np), np.ones(Np)], [0, 1], shape=(Np, Np + 1), format="csr")
    # central p-difference at nodes j = 1..Np (one-sided second order at the top)
    dc = sp.lil_matrix((Np, Np + 1))
    for j in range(1, Np):
        dc[j - 1, j + 1] = 0.5
        dc[j - 1, j - 1] = -0.5
    dc[Np - 1, Np] = 1.5
    dc[Np - 1, Np - 1] = -2.0
    dc[Np - 1, Np - 2] = 0.5
    dc = dc.tocsr()
    # node averaging p-midpoints: (a[j] + a[j+1]) / 2 for rows j = 0..Np
    avg_p = sp.diags([0.5 * np.ones(Np), 0.5 * np.ones(Np)], [0, 1], shape=(Np, Np + 1), format="csr")

    Dq_node = _central_diff_matrix(Nq)  # (Nq+1) x (Nq+1)
    # q-midpoint difference and average, i = 0..Nq-1
    dq_mid = sp.diags([-np.ones(Nq), np.ones(Nq)], [0, 1], shape=(Nq, Nq + 1), format="csr")
    avg_q = sp.diags([0.5 * np.ones(Nq), 0.5 * np.ones(Nq)], [0, 1], shape=(Nq, Nq + 1), format="csr")

    ops = {}
    # at p-midpoints (i, j+1/2): shape (Nq+1)*Np
    ops["pm_dp"] = sp.kron(Iq, dmid @ embed, format="csr")
    ops["pm_dq"] = sp.kron(Dq_node, avg_p @ embed, format="csr")
    # at q-midpoints (i+1/2, j), j = 1..Np: shape Nq*Np
    ops["qm_dq"] = sp.kron(dq_mid, Ip, format="csr")
    ops["qm_dp"] = sp.kron(avg_q, dc @ embed, format="csr")
    # at nodes (i, j), j = 1..Np
    ops["n_dq"] = sp.kron(Dq_node, Ip, format="csr")
    ops["n_dp"] = sp.kron(Iq, dc @ embed, format="csr")
    top = np.zeros(Np)
    top[-1] = 1.0
    mask_top = np.tile(top, Nq + 1).astype(bool)
    ops["top_idx"] = np.flatnonzero(mask_top)
    return ops


class HodographProblem:
    """Discretisation of the wave problem at fixed (vorticity, r, Nq, Np)."""

    def __init__(self, v, r, Np=DEFAULT_NP, Nq=DEFAULT_NQ):
        if Np < 8 or Nq < 8:
            raise DomainError("Np and Nq must be at least 8")
        self.v = v
        self.r = float(r)
        self.Np = int(Np)
        self.Nq = int(Nq)
        self.pair = conjugate_streams(v, self.r)
        lam = self.pair.lambdaPlus
        self.lam = lam
        self.dp = 1.0 / self.Np
        self.dqh = 1.0 / self.Nq  # spacing in qhat = q / Lambda
        p = np.linspace(0.0, 1.0, self.Np + 1)
        pm = 0.5 * (p[:-1] + p[1:])
        self.p = p
        self.p_mid = pm
        self.H = stream_heights(v, lam, p)
        self.H[-1] = self.pair.dPlus
        self.Hp = hp_of(v, lam, p)
        self.Hp_mid = hp_of(v, lam, pm)
        self.Omega_mid = v.Omega(pm)
        self.ops = _operators(self.Nq, self.Np)
        n1 = self.Nq + 1
        self._Hp_pm = np.tile(self.Hp_mid, n1)
        self._Hp_qm = np.tile(self.Hp[1:], self.Nq)
        # trapezoid weights: top q-edges and the crest/trough p-edges are half cells
        wq = np.ones(self.Np)
        wq[-1] = 0.5
        self._wq = np.tile(wq, self.Nq)
        wp = np.ones(n1)
        wp[0] = wp[-1] = 0.5
        self._wp = np.repeat(wp, self.Np)
        self._rowscale = 1.0 / self._wp
        # Omega at the p-midpoints, written so that the stream flux is exactly lam^2/2
        self._Omt = np.tile(0.5 * lam * lam - 0.5 / self.Hp_mid ** 2, n1)
        self._beta = 1.5 * self.r + v.Omega1

    # -- conversion ------------------------------------------------------------
    @property
    def n(self):
        return (self.Nq + 1) * self.Np

    def to_vector(self, h):
        h = np.asarray(h, dtype=float)
        if h.shape != (self.Nq + 1, self.Np + 1):
            raise DomainError(f"grid shape {h.shape} does not match ({self.Nq + 1}, {self.Np + 1})")
        return (h[:, 1:] - self.H[1:]).ravel()

    def to_grid(self, x):
        w = x.reshape(self.Nq + 1, self.Np)
        h = np.empty((self.Nq + 1, self.Np + 1))
        h[:, 0] = 0.0
        h[:, 1:] = self.H[1:] + w
        return h

    def stream_vector(self):
        return np.zeros(self.n)

    # -- discrete derivatives --------------------------------------------------
    def _fields(self, x, Lam):
        o = self.ops
        iq = 1.0 / (self.dqh * Lam)
        ip = 1.0 / self.dp
        return {
            "hp_pm": self._Hp_pm + ip * (o["pm_dp"] @ x),
            "hq_pm": iq * (o["pm_dq"] @ x),
            "hq_qm": iq * (o["qm_dq"] @ x),
            "hp_qm": self._Hp_qm + ip * (o["qm_dp"] @ x),
            "hq_n": iq * (o["n_dq"] @ x),
            "hp_n": np.tile(self.Hp[1:], self.Nq + 1) + ip * (o["n_dp"] @ x),
        }

    def min_hp(self, x, Lam=1.0):
        f = self._fields(x, Lam)
        return float(min(f["hp_pm"].min(), f["hp_n"].min()))

    def _edges(self, x, Lam):
        """(a, bq) on q-edges (i+1/2, j) and b on p-edges (i, j+1/2)."""
        o = self.ops
        a = (o["qm_dq"] @ x) / (self.dqh * Lam)
        bq = self._Hp_qm + (o["qm_dp"] @ x) / self.dp
        b = self._Hp_pm + (o["pm_dp"] @ x) / self.dp
        return a, bq, b

    def residual(self, x, Lam):
        """Gradient of the discrete Lagrangian, scaled to PDE form.

        Interior rows approximate (h_q/h_p)_q - ((1 + h_q^2) / (2 h_p^2))_p - omega;
        top rows are the discrete Bernoulli condition (1 + h_q^2) / h_p^2 + 2 h - 3 r.
        """
        o = self.ops
        a, bq, b = self._edges(x, Lam)
        wq = self._wq
        grad = ((o["qm_dq"].T @ (wq * (-a / bq))) / (self.dqh * Lam)
                + (o["qm_dp"].T @ (wq * a * a / (2.0 * bq * bq))) / self.dp
                + (o["pm_dp"].T @ (self._wp * (0.5 / b ** 2 + self._Omt))) / self.dp)
        res = grad * self._rowscale
        t = o["top_idx"]
        res[t] = 2.0 * (res[t] * self.dp + (self.pair.dPlus + x[t]) - self._beta)
        return res

    def check_unidirectional(self, x, Lam):
        f = self._fields(x, Lam)
        for key in ("hp_pm", "hp_qm", "hp_n"):
            bad = np.flatnonzero(f[key] <= 0.0)
            if bad.size:
                i, j = divmod(int(bad[0]), self.Np)
                raise DomainError(f"stagnation/fold: discrete h_p <= 0 near node "
                                  f"(q index {i}, p index {j + (key != 'hp_pm')})")

    def jacobian(self, x, Lam, with_lambda=False):
        """Analytic sparse Jacobian: the row-scaled Hessian of the Lagrangian."""
        o = self.ops
        a, bq, b = self._edges(x, Lam)
        A = o["qm_dq"] / (self.dqh * Lam)
        Bq = o["qm_dp"] / self.dp
        Bp = o["pm_dp"] / self.dp
        wq = self._wq
        cross = sp.diags(wq * a / bq ** 2)
        hess = (A.T @ sp.diags(-wq / bq) @ A
                + A.T @ cross @ Bq + Bq.T @ cross @ A
                + Bq.T @ sp.diags(-wq * a * a / bq ** 3) @ Bq
                + Bp.T @ sp.diags(-self._wp / b ** 3) @ Bp)
        scale = self._rowscale.copy()
        t = o["top_idx"]
        scale[t] *= 2.0 * self.dp
        top = np.zeros(self.n)
        top[t] = 2.0
        J = (sp.diags(scale) @ hess + sp.diags(top)).tocsc()
        if not with_lambda:
            return J
        # only the q-edge terms depend on Lambda, each scaling like Lambda^-2
        kin = ((o["qm_dq"].T @ (wq * (-a / bq))) / (self.dqh * Lam)
               + (o["qm_dp"].T @ (wq * a * a / (2.0 * bq * bq))) / self.dp)
        return J, -2.0 / Lam * kin * scale

    def fd_jacobian(self, x, Lam, eps=1e-6):
        """Dense central-difference Jacobian (debug/verification only)."""
        J = np.empty((self.n, self.n))
        for k in range(self.n):
            step = eps * max(1.0, abs(x[k]))
            xp, xm = x.copy(), x.copy()
            xp[k] += step
            xm[k] -= step
            J[:, k] = (self.residual(xp, Lam) - self.residual(xm, Lam)) / (2.0 * step)
        return J


def assemble_residual(v, grid):
    """Residual of ``grid`` as an (Nq+1) x Np array (top row = Bernoulli)."""
    prob = HodographProblem(v, grid.r, grid.Np, grid.Nq)
    x = prob.to_vector(grid.h)
    prob.check_unidirectional(x, grid.Lambda)
    return prob.residual(x, grid.Lambda).reshape(prob.Nq + 1, prob.Np)


def _cond_estimate(J, lu):
    n = J.shape[0]
    inv = LinearOperator((n, n), matvec=lu.solve, rmatvec=lambda b: lu.solve(b, trans="T"),
                         dtype=float)
    try:
        return float(onenormest(J) * onenormest(inv))
    except Exception:  # pragma: no cover - estimator breakdown
        return math.inf


def newton_solve(v, grid0, t=None, tol=NEWTON_TOL, max_iter=MAX_NEWTON_ITERS, problem=None,
                 check_conditioning=True):
    """Damped Newton iteration from ``grid0``.

    With ``t=None`` the half period is fixed; otherwise Lambda is an extra
    unknown and the crest height h(0, 1) = t is appended as a scalar equation.
    """
    prob = problem or HodographProblem(v, grid0.r, grid0.Np, grid0.Nq)
    x = prob.to_vector(grid0.h)
    Lam = float(grid0.Lambda)
    prob.check_unidirectional(x, Lam)
    free = t is not None
    crest = 0 * prob.Np + prob.Np - 1
    target = (float(t) - prob.pair.dPlus) if free else None

    def full_res(x, Lam):
        r = prob.residual(x, Lam)
        if free:
            r = np.append(r, x[crest] - target)
        return r

    def norm(r):
        return float(np.max(np.abs(r)))

    res = full_res(x, Lam)
    rn = norm(res)
    it = 0
    damped = False
    while rn > tol:
        if it >= max_iter:
            raise ConvergenceError(f"Newton did not converge in {max_iter} iterations "
                                   f"(residual {rn:.3e})", residual=rn)
        it += 1
        if free:
            J, dlam = prob.jacobian(x, Lam, with_lambda=True)
            e = sp.csc_matrix(([1.0], ([0], [crest])), shape=(1, prob.n))
            J = sp.bmat([[J, sp.csc_matrix(dlam[:, None])], [e, None]], format="csc")
        else:
            J = prob.jacobian(x, Lam)
        try:
            lu = splu(J)
        except RuntimeError as exc:
            raise TurningPointError(f"singular Jacobian: {exc}", residual=rn) from exc
        if check_conditioning and (it == 1 or damped):
            cond = _cond_estimate(J, lu)
            if cond > COND_LIMIT:
                raise TurningPointError(f"Jacobian condition estimate {cond:.2e} > {COND_LIMIT:.0e}",
                                        residual=rn)
        step = -lu.solve(res)
        if not np.all(np.isfinite(step)):
            raise TurningPointError("non-finite Newton step", residual=rn)
        dx = step[: prob.n]
        dL = step[prob.n] if free else 0.0
        hp_now = prob.min_hp(x, Lam)
        alpha = 1.0
        for _ in range(MAX_BACKTRACKS + 1):
            xn = x + alpha * dx
            Ln = Lam + alpha * dL
            if Ln > 0 and prob.min_hp(xn, Ln) > STAGNATION_FRACTION * hp_now:
                rnew = full_res(xn, Ln)
                nn = norm(rnew)
                if np.isfinite(nn) and (nn < rn or alpha == 1.0 and nn < 2.0 * rn and it == 1):
                    break
            alpha *= 0.5
        else:
            raise ConvergenceError(f"line search failed after {MAX_BACKTRACKS} halvings "
                                   f"(residual {rn:.3e})", residual=rn)
        damped = alpha < 1.0
        x, Lam, res, rn = xn, Ln, rnew, nn
        log.debug("newton it=%d alpha=%.3g |F|=%.3e Lambda=%.6g", it, alpha, rn, Lam)
    return WaveGrid(r=prob.r, Lambda=Lam, h=prob.to_grid(x), kind=grid0.kind,
                    iterations=it, residual=rn, meta=dict(grid0.meta))


def stream_grid(v, r, Lambda, Np=DEFAULT_NP, Nq=DEFAULT_NQ, branch="plus"):
    """The stream H(., lambda_+(r)) replicated over the q-grid."""
    pair = conjugate_streams(v, r)
    lam = pair.lambdaPlus if branch == "plus" else pair.lambdaMinus
    p = np.linspace(0.0, 1.0, Np + 1)
    H = stream_heights(v, lam, p)
    H[-1] = pair.dPlus if branch == "plus" else pair.dMinus
    return WaveGrid(r=float(r), Lambda=float(Lambda), h=np.tile(H, (Nq + 1, 1)), kind="stream")


@dataclass(frozen=True, eq=False)
class LinearMode:
    r: float
    lam: float
    mu0: float
    kStar: float
    Lambda: float
    phi0: np.ndarray


@functools.lru_cache(maxsize=64)
def linear_mode(v, r, Np=DEFAULT_NP):
    pair = conjugate_streams(v, r)
    m0, phi = mu0(v, pair.lambdaPlus, Np)
    if not m0 < 0.0:
        raise DomainError(f"mu0(lambda_+) = {m0!r} is not negative")
    k = math.sqrt(-m0)
    return LinearMode(r=float(r), lam=pair.lambdaPlus, mu0=m0, kStar=k, Lambda=math.pi / k, phi0=phi)


LAMBDA_FLOOR_FACTOR = 1e3


def seed_stokes(v, r, epsilon=None, Np=DEFAULT_NP, Nq=DEFAULT_NQ):
    """Stream plus ``epsilon * phi0(p) cos(pi q / Lambda*)`` at the linear half period."""
    pair = conjugate_streams(v, r)
    if epsilon is None:
        epsilon = 1e-3 * pair.dPlus
    mode = linear_mode(v, float(r), Np)
    if mode.Lambda > LAMBDA_FLOOR_FACTOR * pair.dPlus:
        raise DomainError(f"linear half period {mode.Lambda:.3g} too long: r is too close to r_c")
    base = stream_grid(v, r, mode.Lambda, Np, Nq)
    qh = np.linspace(0.0, 1.0, Nq + 1)
    h = base.h + epsilon * np.outer(np.cos(np.pi * qh), mode.phi0)
    return WaveGrid(r=float(r), Lambda=mode.Lambda, h=h, kind="stokes")


def crest_seed(v, r, t, Np=DEFAULT_NP, Nq=DEFAULT_NQ):
    """Seed whose crest height is exactly t (amplitude scaled by phi0(1))."""
    pair = conjugate_streams(v, r)
    mode = linear_mode(v, float(r), Np)
    return seed_stokes(v, r, (t - pair.dPlus) / mode.phi0[-1], Np, Nq)


# -- continuation ----------------------------------------------------------------

MAX_CONTINUATION_STEPS = 200
LAMBDA_CAP = 500.0


def _secant(prev, prev2, t):
    """Linear extrapolation in crest height of the last two branch members."""
    if prev2 is None or prev.h.shape != prev2.h.shape:
        return prev
    dt = prev.crest_height - prev2.crest_height
    if dt == 0.0:
        return prev
    a = (t - prev.crest_height) / dt
    return replace(prev, h=prev.h + a * (prev.h - prev2.h),
                   Lambda=prev.Lambda + a * (prev.Lambda - prev2.Lambda))


def _solve_t(v, t, prev, prev2, problem, tol, max_iter):
    guess = (_secant(prev, prev2, t) if prev is not None
             else crest_seed(v, problem.r, t, problem.Np, problem.Nq))
    try:
        return newton_solve(v, guess, t=t, tol=tol, max_iter=max_iter, problem=problem)
    except TurningPointError:
        raise
    except (ConvergenceError, DomainError):
        if guess is prev or prev is None:
            raise
        # fall back to the plain warm start
        return newton_solve(v, prev, t=t, tol=tol, max_iter=max_iter, problem=problem)


def continue_branch(v, r, t_targets, Np=DEFAULT_NP, Nq=DEFAULT_NQ, tol=NEWTON_TOL,
                    max_iter=MAX_NEWTON_ITERS, max_steps=MAX_CONTINUATION_STEPS,
                    check=True, slope_bound=None, start=None):
    """Stokes waves with crest heights ``t_targets``, Lambda free.

    Intermediate targets are inserted by halving the t-step when Newton fails.
    ``start`` (a converged wave on the same grid, e.g. reloaded from a CSV)
    replaces the linear seed as the first warm start.
    If the branch cannot be continued, :class:`ConvergenceError` is raised with
    the converged members in ``partial``.
    """
    problem = HodographProblem(v, r, Np, Nq)
    dplus = problem.pair.dPlus
    targets = [float(t) for t in t_targets]
    if not targets:
        return []
    if any(not t > dplus for t in targets):
        raise DomainError(f"crest heights must exceed d+={dplus!r}")
    if any(b <= a for a, b in zip(targets, targets[1:])):
        raise DomainError("crest heights must be strictly increasing")
    waves = []
    prev = prev2 = None
    t_last = dplus
    if start is not None:
        if start.h.shape != (Nq + 1, Np + 1):
            raise DomainError("restart wave does not match the configured grid")
        prev, t_last = start, min(start.crest_height, targets[0])
    steps = 0
    for target in targets:
        t_try = target
        while True:
            steps += 1
            if steps > max_steps:
                raise ConvergenceError(f"continuation budget exhausted; last good t={t_last!r}",
                                       partial=waves)
            try:
                wave = _solve_t(v, t_try, prev, prev2, problem, tol, max_iter)
            except TurningPointError as exc:
                raise TurningPointError(f"{exc}; branch truncated, last good t={t_last!r}",
                                        residual=exc.residual, partial=waves) from exc
            except (ConvergenceError, DomainError) as exc:
                if t_try - t_last < 1e-9 * max(1.0, dplus):
                    raise ConvergenceError(f"step halving stalled ({exc}); last good t={t_last!r}",
                                           partial=waves) from exc
                t_try = 0.5 * (t_last + t_try)
                continue
            prev2, prev, t_last = prev, wave, t_try
            if t_try == target:
                break
            t_try = target
        wave.kind = "stokes"
        if check:
            report = check_invariants(v, wave, slope_bound=slope_bound, problem=problem)
            wave.meta["invariants"] = report
            if not report.ok:
                raise ConvergenceError(f"wave at t={target!r} violates {report.failed()}",
                                       partial=waves)
        waves.append(wave)
    return waves


def _regrid(grid, Lambda, Nq):
    """Resample ``grid`` onto a longer half period; the trough value fills the extension."""
    q_old = grid.q
    q_new = np.linspace(0.0, Lambda, Nq + 1)
    h = np.empty((Nq + 1, grid.Np + 1))
    for j in range(grid.Np + 1):
        h[:, j] = np.interp(q_new, q_old, grid.h[:, j])
    return replace(grid, Lambda=float(Lambda), h=h)


def tail_errors(v, grid, pair=None):
    """(|eta(Lambda) - d_-|, max |eta'| over the last tenth of the half period)."""
    pair = pair or conjugate_streams(v, grid.r)
    eta = grid.eta
    dq = grid.Lambda / grid.Nq
    k = max(2, int(math.ceil(0.1 * grid.Nq)))
    slope = np.abs(np.diff(eta[-k:])) / dq
    return abs(eta[-1] - pair.dMinus), float(slope.max())


def solitary_approx(v, r, tail_tol=1e-3, Np=DEFAULT_NP, Nq=DEFAULT_NQ, tol=NEWTON_TOL,
                    max_iter=MAX_NEWTON_ITERS, max_steps=MAX_CONTINUATION_STEPS,
                    lambda_cap=LAMBDA_CAP, growth=1.15):
    """Long-wave approximation of the solitary wave at r.

    The Stokes branch is followed in crest height until its half period has
    grown by half; from there Lambda itself is increased (Nq grows with it so
    that the q-spacing stays fixed) until the trough matches the supercritical
    stream depth d_- to within ``tail_tol``, with a flat tail.
    """
    problem = HodographProblem(v, r, Np, Nq)
    pair = problem.pair
    mode = linear_mode(v, float(r), Np)
    dq0 = mode.Lambda / Nq
    gap = pair.dPlus - pair.dMinus
    steps = 0

    def done(w):
        e, s = tail_errors(v, w, pair)
        w.meta["tailError"], w.meta["tailSlope"] = e, s
        return e <= tail_tol and s <= tail_tol

    def finish(w, converged):
        w.kind = "solitary-approx"
        w.meta["tailConverged"] = converged
        return w

    # phase 1: crest-height continuation
    prev = prev2 = None
    delta = 1e-2 * gap
    t_last = pair.dPlus
    while True:
        steps += 1
        if steps > max_steps:
            if prev is None:
                raise ConvergenceError("budget exhausted before any wave converged")
            return finish(prev, False)
        t = t_last + delta
        try:
            w = _solve_t(v, t, prev, prev2, problem, tol, max_iter)
        except (ConvergenceError, DomainError) as exc:
            log.debug("solitary t-step %.3e failed: %s", delta, exc)
            delta *= 0.5
            if delta < 1e-8 * gap:
                break
            continue
        fast = prev is not None and w.Lambda > 1.1 * prev.Lambda
        prev2, prev, t_last = prev, w, t
        log.debug("solitary t=%.8f Lambda=%.5g its=%d", t, w.Lambda, w.iterations)
        if done(w):
            return finish(w, True)
        if fast or w.Lambda >= 1.5 * mode.Lambda:
            break
        delta *= 1.5
    if prev is None:
        raise ConvergenceError("crest-height continuation failed at the first step")

    # phase 2: natural continuation in Lambda
    cur = prev
    factor = growth
    while True:
        steps += 1
        if steps > max_steps or cur.Lambda * factor > lambda_cap:
            log.info("solitary budget exhausted at Lambda=%.4g", cur.Lambda)
            return finish(cur, False)
        Lam = cur.Lambda * factor
        nq = max(Nq, int(math.ceil(Lam / dq0)))
        guess = _regrid(cur, Lam, nq)
        try:
            w = newton_solve(v, guess, tol=tol, max_iter=max_iter,
                             problem=HodographProblem(v, r, Np, nq))
        except (ConvergenceError, DomainError) as exc:
            log.debug("solitary Lambda-step x%.4f failed: %s", factor, exc)
            factor = 1.0 + 0.5 * (factor - 1.0)
            if factor < 1.001:
                return finish(cur, False)
            continue
        log.debug("solitary Lambda=%.5g Nq=%d t=%.8f its=%d", Lam, nq, w.crest_height, w.iterations)
        if w.crest_height - pair.dPlus < 0.5 * (cur.crest_height - pair.dPlus):
            # collapsed onto the stream: retry with a shorter step
            factor = 1.0 + 0.5 * (factor - 1.0)
            if factor < 1.001:
                return finish(cur, False)
            continue
        cur = w
        if done(w):
            return finish(w, True)
        factor = min(growth, 1.0 + 1.5 * (factor - 1.0))


# -- diagnostics -------------------------------------------------------------------


def _node_derivatives(grid, prob):
    """(h_q, h_p) at every node, shape (Nq+1, Np+1); second order, even reflection in q.

    As in the residual, H_p is exact and only w = h - H is differenced.
    """
    h = grid.h
    dq = grid.Lambda / grid.Nq
    hq = np.empty_like(h)
    hq[1:-1] = (h[2:] - h[:-2]) / (2.0 * dq)
    hq[0] = hq[-1] = 0.0
    dp = 1.0 / grid.Np
    w = h - prob.H
    Hp = prob.Hp
    wp = np.empty_like(w)
    wp[:, 1:-1] = (w[:, 2:] - w[:, :-2]) / (2.0 * dp)
    wp[:, 0] = (-3.0 * w[:, 0] + 4.0 * w[:, 1] - w[:, 2]) / (2.0 * dp)
    wp[:, -1] = (3.0 * w[:, -1] - 4.0 * w[:, -2] + w[:, -3]) / (2.0 * dp)
    return hq, Hp + wp


@dataclass(frozen=True, eq=False)
class PhysicalWave:
    x: np.ndarray
    eta: np.ndarray
    psi_x: np.ndarray
    psi_y: np.ndarray
    maxSlope: float
    minPsiY: float


def reconstruct_physical(v, grid, problem=None):
    """Surface profile and velocity field psi_x = -h_q/h_p, psi_y = 1/h_p on the nodes."""
    prob = problem or HodographProblem(v, grid.r, grid.Np, grid.Nq)
    hq, hp = _node_derivatives(grid, prob)
    if np.any(hp <= 0.0):
        i, j = np.argwhere(hp <= 0.0)[0]
        raise DomainError(f"stagnation/fold: discrete h_p <= 0 at node (q={int(i)}, p={int(j)})")
    eta = grid.eta.copy()
    return PhysicalWave(x=grid.q, eta=eta, psi_x=-hq / hp, psi_y=1.0 / hp,
                        maxSlope=float(np.max(np.abs(hq[:, -1]))), minPsiY=float(np.min(1.0 / hp)))


def surface_bernoulli_residual(v, grid, problem=None):
    prob = problem or HodographProblem(v, grid.r, grid.Np, grid.Nq)
    res = prob.residual(prob.to_vector(grid.h), grid.Lambda)
    return float(np.max(np.abs(res[prob.ops["top_idx"]])))


@dataclass
class InvariantReport:
    checks: dict
    values: dict

    @property
    def ok(self):
        return all(self.checks.values())

    def failed(self):
        return [k for k, good in self.checks.items() if not good]


def check_invariants(v, grid, slope_bound=None, problem=None):
    """Structural properties every converged non-stream wave must satisfy.

    The slope bound M is reported in ``values`` but never enforced.
    """
    prob = problem or HodographProblem(v, grid.r, grid.Np, grid.Nq)
    pair = prob.pair
    eta = grid.eta
    phys = reconstruct_physical(v, grid, prob)
    dq = grid.Lambda / grid.Nq
    hqq0 = 2.0 * (grid.h[1, 1:] - grid.h[0, 1:]) / dq ** 2
    floor = min((6.0 * grid.r) ** -0.5, (2.0 * v.omega0) ** -0.5 if v.omega0 > 0 else math.inf)
    bern = surface_bernoulli_residual(v, grid, prob)
    values = {
        "minEta": float(eta.min()),
        "maxEta": float(eta.max()),
        "dMinus": pair.dMinus,
        "dPlus": pair.dPlus,
        "maxCrestHqq": float(hqq0.max()),
        "minPsiY": phys.minPsiY,
        "maxSlope": phys.maxSlope,
        "bernoulliResidual": bern,
        "etaFloor": floor,
    }
    checks = {
        "bottom": bool(np.all(grid.h[:, 0] == 0.0)),
        "unidirectional": phys.minPsiY > 0.0,
        "troughAboveDMinus": values["minEta"] > pair.dMinus,
        "troughBelowDPlus": values["minEta"] < pair.dPlus,
        "crestAboveDPlus": values["maxEta"] >= pair.dPlus,
        "crestBelow3r2": values["maxEta"] < 1.5 * grid.r,
        "crestConcave": bool(np.all(hqq0 < 0.0)),
        "etaFloor": values["minEta"] >= floor,
        "surfaceBernoulli": bern <= 1e-8,
    }
    if slope_bound is not None:
        values["slopeWithinM"] = phys.maxSlope <= slope_bound
    return InvariantReport(checks=checks, values=values)


def full_period_check(v, grid, kick=1e-4, tol=NEWTON_TOL):
    """Re-solve ``grid`` on a full period without the trough symmetry.

    The half period is mirrored about the trough onto [0, 2 Lambda] (crest at
    both ends), an odd perturbation is added, and Newton is run at fixed
    period. Returns (asymmetry, deviation): the largest |h(q) - h(2 Lambda - q)|
    of the solution and its largest difference from the mirrored input.
    """
    nq = grid.Nq
    full = np.vstack([grid.h, grid.h[-2::-1]])
    qh = np.linspace(0.0, 1.0, 2 * nq + 1)
    odd = kick * np.outer(np.sin(2.0 * np.pi * qh), grid.h[0] - grid.h[-1])
    seed = WaveGrid(r=grid.r, Lambda=2.0 * grid.Lambda, h=full + odd, kind=grid.kind)
    prob = HodographProblem(v, grid.r, grid.Np, 2 * nq)
    sol = newton_solve(v, seed, tol=tol, problem=prob)
    asym = float(np.max(np.abs(sol.h - sol.h[::-1])))
    dev = float(np.max(np.abs(sol.h - full)))
    return asym, dev


@dataclass(frozen=True, eq=False)
class SplitDiagnostics:
    q: np.ndarray
    w0: np.ndarray
    f0: np.ndarray
    remainderNorm: float
    smallness: float


def spectral_split(v, grid, phi0, problem=None):
    """Project (w, f) = (h - H, h_q / h_p) onto the fundamental mode phi0 (on the p-grid).

    w0 = int w phi0 / H_p and f0 = int f phi0 (trapezoid rule); the projection
    uses the modes phi0 for w and phi0 / H_p for f, each normalised by
    N = int phi0^2 / H_p.
    """
    prob = problem or HodographProblem(v, grid.r, grid.Np, grid.Nq)
    phi0 = np.asarray(phi0, dtype=float)
    if phi0.size != grid.Np + 1:
        raise DomainError(f"phi0 has {phi0.size} samples, the p-grid has {grid.Np + 1}")
    p = prob.p
    Hp = prob.Hp
    w = grid.h - prob.H
    hq, hp = _node_derivatives(grid, prob)
    f = hq / hp
    norm = trapezoid(phi0 ** 2 / Hp, p)
    w0 = trapezoid(w * (phi0 / Hp), p, axis=1)
    f0 = trapezoid(f * phi0, p, axis=1)
    wr = w - np.outer(w0 / norm, phi0)
    fr = f - np.outer(f0 / norm, phi0 / Hp)
    rem = np.sqrt(trapezoid(wr ** 2, p, axis=1) + trapezoid(fr ** 2, p, axis=1))
    dq = grid.Lambda / grid.Nq
    dp = 1.0 / grid.Np
    pieces = [
        np.abs(w).max(),
        np.abs(np.diff(w, axis=0)).max() / dq,
        np.abs(np.diff(w, axis=1)).max() / dp,
        np.abs(np.diff(w, 2, axis=0)).max() / dq ** 2,
        np.abs(np.diff(w, 2, axis=1)).max() / dp ** 2,
        np.abs(f).max(),
        np.abs(np.diff(f, axis=0)).max() / dq,
        np.abs(np.diff(f, axis=1)).max() / dp,
    ]
    return SplitDiagnostics(q=grid.q, w0=w0, f0=f0, remainderNorm=float(rem.max()),
                            smallness=float(sum(pieces)))


# -- CSV round trip ------------------------------------------------------------------


def wave_rows(grid):
    """Long-format rows (q, p, h), q outer and p inner."""
    q, p = grid.q, grid.p
    for i in range(grid.Nq + 1):
        for j in range(grid.Np + 1):
            yield q[i], p[j], grid.h[i, j]


def wave_from_rows(rows, r, kind="stokes"):
    """Inverse of :func:`wave_rows`; rows must form a full tensor grid."""
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DomainError("wave table needs the columns q, p, h")
    q = np.unique(arr[:, 0])
    p = np.unique(arr[:, 1])
    if q.size * p.size != arr.shape[0] or q.size < 9 or p.size < 9:
        raise DomainError("wave table is not a full (q, p) grid with at least 9 x 9 nodes")
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    h = arr[order, 2].reshape(q.size, p.size)
    if p[0] != 0.0 or p[-1] != 1.0 or q[0] != 0.0:
        raise DomainError("wave table must span q from 0 and p over [0, 1]")
    return WaveGrid(r=float(r), Lambda=float(q[-1]), h=h, kind=kind)
