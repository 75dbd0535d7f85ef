import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from cuspwave import (
    ConvergenceError,
    DomainError,
    HodographProblem,
    VorticitySpec,
    assemble_residual,
    check_invariants,
    conjugate_streams,
    continue_branch,
    critical_data,
    full_period_check,
    make_vorticity,
    newton_solve,
    reconstruct_physical,
    seed_stokes,
    solitary_approx,
    spectral_split,
)
from cuspwave.waves import crest_seed, linear_mode, stream_grid, wave_from_rows, wave_rows
from conftest import R_LINEAR


@pytest.fixture(scope="module")
def pair(v_zero):
    return conjugate_streams(v_zero, R_LINEAR)


@pytest.fixture(scope="module")
def branch(v_zero, pair):
    return continue_branch(v_zero, R_LINEAR, pair.dPlus + np.array([1e-3, 2e-3, 4e-3]))


@pytest.fixture(scope="module")
def half_wave(v_half):
    r = critical_data(v_half).rC + 0.01
    pr = conjugate_streams(v_half, r)
    return continue_branch(v_half, r, [pr.dPlus + 0.1 * (pr.dPlus - pr.dMinus)])[0]


@pytest.mark.parametrize("which", ["zero", "half", "neg"])
def test_stream_is_exact_discrete_solution(which, v_zero, v_half, v_neg):
    v = {"zero": v_zero, "half": v_half, "neg": v_neg}[which]
    r = critical_data(v).rC + 0.01
    g = stream_grid(v, r, 3.0, Np=32, Nq=64)
    assert np.max(np.abs(assemble_residual(v, g))) <= 1e-12
    out = newton_solve(v, g)
    assert out.iterations == 0
    assert np.array_equal(out.h, g.h)


def test_residual_reflection_symmetry(v_half):
    r = critical_data(v_half).rC + 0.01
    g = stream_grid(v_half, r, 4.0, Np=16, Nq=40)
    qh = np.linspace(0.0, 1.0, 41)
    g.h = g.h + 1e-2 * np.outer(np.cos(2 * np.pi * qh), np.sin(np.pi * g.p / 2))
    res = assemble_residual(v_half, g)
    assert np.max(np.abs(res - res[::-1])) <= 1e-13


def test_linearisation_vanishes_at_linear_period(v_zero):
    eps = 1e-6
    g = seed_stokes(v_zero, R_LINEAR, eps)
    at = np.max(np.abs(assemble_residual(v_zero, g))) / eps
    g.Lambda *= 1.1
    off = np.max(np.abs(assemble_residual(v_zero, g))) / eps
    assert at < 1e-3 < 0.1 < off


def test_jacobian_matches_finite_differences(v_half):
    r = critical_data(v_half).rC + 0.005
    prob = HodographProblem(v_half, r, Np=8, Nq=8)
    rng = np.random.default_rng(7)
    x = 1e-2 * rng.standard_normal(prob.n)
    lam = 5.0
    J, dlam = prob.jacobian(x, lam, with_lambda=True)
    assert np.max(np.abs(J.toarray() - prob.fd_jacobian(x, lam))) <= 1e-6
    h = 1e-6
    fd = (prob.residual(x, lam + h) - prob.residual(x, lam - h)) / (2 * h)
    assert np.max(np.abs(dlam - fd)) <= 1e-6


def test_seed_examples(v_zero, pair):
    g = seed_stokes(v_zero, R_LINEAR, 1e-3)
    mode = linear_mode(v_zero, R_LINEAR)
    assert g.Lambda == pytest.approx(2.2885, abs=1e-3)
    assert g.crest_height == pytest.approx(pair.dPlus + 1e-3 * mode.phi0[-1], abs=1e-15)
    flat = seed_stokes(v_zero, R_LINEAR, 0.0)
    assert np.max(np.abs(assemble_residual(v_zero, flat))) <= 1e-12
    with pytest.raises(DomainError):
        seed_stokes(v_zero, 1.0 + 1e-12)


def test_fixed_period_newton_from_seed(v_zero, pair):
    # at exactly Lambda* the discrete bifurcation point has not yet been
    # reached, so the iteration settles on the (near-)stream solution
    w = newton_solve(v_zero, seed_stokes(v_zero, R_LINEAR, 1e-3))
    assert w.iterations <= 8
    assert 0.0 <= w.eta.max() - pair.dPlus < 5e-3


def test_fixed_period_recovers_branch_wave(v_zero, pair):
    t = pair.dPlus + 0.01
    wave = continue_branch(v_zero, R_LINEAR, [t])[0]
    g = crest_seed(v_zero, R_LINEAR, t)
    g.Lambda = wave.Lambda
    w = newton_solve(v_zero, g)
    assert w.iterations <= 8
    assert abs(w.crest_height - t) <= 1e-9
    assert 0.0 < w.eta.max() - pair.dPlus < 5e-2


def test_branch_lambda_increasing(branch, pair):
    lams = [w.Lambda for w in branch]
    assert np.all(np.diff(lams) > 0)
    for w in branch:
        assert w.eta.min() > pair.dMinus
        assert w.residual <= 1e-10


def test_crest_constraint_period_near_linear(v_zero, branch):
    k = linear_mode(v_zero, R_LINEAR).kStar
    assert abs(branch[0].Lambda - math.pi / k) <= 0.02 * math.pi / k


def test_branch_rejects_bad_targets(v_zero, pair):
    with pytest.raises(DomainError):
        continue_branch(v_zero, R_LINEAR, [pair.dPlus])
    with pytest.raises(DomainError):
        continue_branch(v_zero, R_LINEAR, [pair.dPlus + 2e-3, pair.dPlus + 1e-3])


def test_impossible_crest_reports_partial(v_zero, pair):
    with pytest.raises(ConvergenceError) as exc:
        continue_branch(v_zero, R_LINEAR, [pair.dPlus + 1e-3, 1.5 * R_LINEAR], max_steps=30)
    assert len(exc.value.partial) >= 1


def test_invariants_on_branch(v_zero, branch, half_wave, v_half):
    for v, w in [(v_zero, b) for b in branch] + [(v_half, half_wave)]:
        rep = check_invariants(v, w)
        assert rep.ok, rep.failed()


def test_full_period_symmetry(v_half, half_wave):
    asym, dev = full_period_check(v_half, half_wave)
    assert asym <= 1e-8 and dev <= 1e-8


def test_physical_fields_of_stream(v_half):
    r = critical_data(v_half).rC + 0.01
    pr = conjugate_streams(v_half, r)
    g = stream_grid(v_half, r, 3.0, Np=16, Nq=16)
    phys = reconstruct_physical(v_half, g)
    assert np.all(phys.eta == pr.dPlus)
    assert np.max(np.abs(phys.psi_x)) == 0.0
    exact = np.sqrt(pr.lambdaPlus ** 2 - 2 * v_half.Omega(g.p))
    assert np.max(np.abs(phys.psi_y - exact)) <= 1e-12
    assert phys.minPsiY > 0


def test_physical_fields_of_wave(v_half, half_wave):
    phys = reconstruct_physical(v_half, half_wave)
    assert phys.minPsiY > 0
    assert phys.maxSlope > 0
    assert check_invariants(v_half, half_wave).values["bernoulliResidual"] <= 1e-8


def test_stagnation_is_reported(v_zero):
    g = stream_grid(v_zero, R_LINEAR, 3.0, Np=16, Nq=16)
    g.h[5, 9] = g.h[5, 8] - 0.01
    with pytest.raises(DomainError, match="stagnation/fold"):
        assemble_residual(v_zero, g)


def test_newton_iteration_budget(v_zero, pair):
    g = crest_seed(v_zero, R_LINEAR, pair.dPlus + 0.05)
    with pytest.raises(ConvergenceError):
        newton_solve(v_zero, g, t=pair.dPlus + 0.05, max_iter=1)


def test_split_of_stream_is_zero(v_zero):
    g = stream_grid(v_zero, R_LINEAR, 2.0)
    sd = spectral_split(v_zero, g, linear_mode(v_zero, R_LINEAR).phi0)
    assert sd.remainderNorm == 0.0 and sd.smallness == 0.0
    assert np.all(sd.w0 == 0.0) and np.all(sd.f0 == 0.0)


def test_split_of_seed(v_zero):
    eps = 1e-3
    g = seed_stokes(v_zero, R_LINEAR, eps)
    mode = linear_mode(v_zero, R_LINEAR)
    prob = HodographProblem(v_zero, R_LINEAR)
    sd = spectral_split(v_zero, g, mode.phi0)
    norm = trapezoid(mode.phi0 ** 2 / prob.Hp, prob.p)
    expect = eps * np.cos(np.pi * np.linspace(0, 1, g.Nq + 1)) * norm
    assert np.max(np.abs(sd.w0 - expect)) <= 1e-12
    assert sd.remainderNorm <= 1e-6


def test_split_remainder_orthogonal(v_half, half_wave):
    mode = linear_mode(v_half, half_wave.r)
    prob = HodographProblem(v_half, half_wave.r)
    sd = spectral_split(v_half, half_wave, mode.phi0)
    norm = trapezoid(mode.phi0 ** 2 / prob.Hp, prob.p)
    w = half_wave.h - prob.H
    rem = w - np.outer(sd.w0 / norm, mode.phi0)
    assert np.max(np.abs(trapezoid(rem * mode.phi0 / prob.Hp, prob.p, axis=1))) <= 1e-10


def test_smallness_shrinks_towards_cusp(v_zero):
    vals = []
    for d in (0.02, 0.01, 0.005):
        r = 1.0 + d
        pr = conjugate_streams(v_zero, r)
        t = pr.dPlus + 0.2 * (pr.dPlus - pr.dMinus)
        w = continue_branch(v_zero, r, [pr.dPlus + 0.01 * (t - pr.dPlus), t])[-1]
        vals.append(spectral_split(v_zero, w, linear_mode(v_zero, r).phi0).smallness)
    assert vals[0] > vals[1] > vals[2]


def test_second_order_convergence(v_half):
    r = critical_data(v_half).rC + 0.01
    pr = conjugate_streams(v_half, r)
    t = pr.dPlus + 0.3 * (pr.dPlus - pr.dMinus)
    waves = [continue_branch(v_half, r, [pr.dPlus + 0.1 * (t - pr.dPlus), t], Np=np_, Nq=nq)[-1]
             for nq, np_ in ((32, 8), (64, 16), (128, 32))]
    e1 = np.max(np.abs(waves[0].eta - waves[1].eta[::2]))
    e2 = np.max(np.abs(waves[1].eta[::2] - waves[2].eta[::4]))
    assert 3.0 <= e1 / e2 <= 5.0


def test_solitary_vacuous_tail(v_zero):
    w = solitary_approx(v_zero, 1.005, tail_tol=math.inf)
    assert w.kind == "solitary-approx"
    assert w.meta["tailConverged"]


def test_wave_csv_round_trip(branch):
    w = branch[0]
    back = wave_from_rows(list(wave_rows(w)), w.r)
    assert np.array_equal(back.h, w.h)
    assert back.Lambda == pytest.approx(w.Lambda, rel=1e-15)
    with pytest.raises(DomainError):
        wave_from_rows([(0.0, 0.0, 0.0)], w.r)


def test_sampled_vorticity_wave():
    p = np.linspace(0.0, 1.0, 6)
    v = make_vorticity(VorticitySpec.samples(p, 0.3 * np.cos(3 * p)))
    r = critical_data(v).rC + 0.01
    pr = conjugate_streams(v, r)
    w = continue_branch(v, r, [pr.dPlus + 0.05 * (pr.dPlus - pr.dMinus)], Np=32, Nq=128)[0]
    assert check_invariants(v, w).ok
