import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy import integrate, optimize

from cuspwave import (
    BeyondR0Error,
    DomainError,
    SubcriticalParameterError,
    bernoulli_of_lambda,
    conjugate_streams,
    critical_data,
    depth,
    make_vorticity,
    stream_profile,
)
from cuspwave.streams import hp_of
from conftest import R_LINEAR
from strategies import sampled_specs


def const_depth(b, lam):
    return (lam - math.sqrt(lam * lam - 2.0 * b)) / b


def cubic_roots(r):
    """Positive roots of lam^3 - 3 r lam + 2 = 0 (zero vorticity, R(lam) = r)."""
    roots = np.roots([1.0, 0.0, -3.0 * r, 2.0])
    return sorted(x.real for x in roots if abs(x.imag) < 1e-12 and x.real > 0)


def test_depth_examples(v_zero, v_half):
    assert depth(v_zero, 2.0) == pytest.approx(0.5, abs=1e-15)
    assert depth(v_half, 2.0) == pytest.approx((2.0 - math.sqrt(3.0)) / 0.5, rel=1e-12)
    ds = [depth(v_zero, lam) for lam in np.geomspace(1.0, 1e4, 30)]
    assert np.all(np.diff(ds) < 0) and ds[-1] < 1e-3


def test_depth_domain(v_zero, v_half):
    with pytest.raises(DomainError):
        depth(v_zero, 0.0)
    with pytest.raises(DomainError):
        depth(v_half, 0.999)
    # class III: the improper integral at lambda0 converges
    assert depth(v_half, 1.0) == pytest.approx(2.0, rel=1e-10)


@pytest.mark.parametrize("lam", [0.6, 1.3, 2.0, 5.0])
def test_constant_depth_closed_form(v_half, lam):
    lam = max(lam, 1.0 + 1e-6)
    assert depth(v_half, lam) == pytest.approx(const_depth(0.5, lam), rel=1e-12)


def test_stream_profile(v_zero, v_half):
    prof = stream_profile(v_zero, 2.0, 16)
    assert np.max(np.abs(prof.H - prof.p / 2.0)) <= 1e-15
    prof = stream_profile(v_half, 2.0, 16)
    assert prof.H[0] == 0.0
    assert prof.H[-1] == pytest.approx(0.535898384862245, abs=1e-12)
    assert np.all(np.diff(prof.H) > 0) and np.all(prof.Hp > 0)
    exact = (2.0 - np.sqrt(4.0 - prof.p)) / 0.5
    assert np.max(np.abs(prof.H - exact)) <= 1e-12


def test_bernoulli_examples(v_zero):
    assert bernoulli_of_lambda(v_zero, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert bernoulli_of_lambda(v_zero, 1.2) == pytest.approx((1.2 ** 3 + 2) / 3.6, abs=1e-14)
    assert bernoulli_of_lambda(v_zero, 0.823610) == pytest.approx(1.035556, abs=1e-6)


def test_critical_zero(v_zero):
    cd = critical_data(v_zero)
    assert cd.lambdaC == pytest.approx(1.0, abs=1e-10)
    assert cd.rC == pytest.approx(1.0, abs=1e-10)
    assert cd.dC == pytest.approx(1.0, abs=1e-10)
    assert math.isinf(cd.d0) and math.isinf(cd.r0)


def test_critical_constant(v_half):
    cd = critical_data(v_half)
    oracle = optimize.brentq(lambda x: 1 / math.sqrt(x * x - 1) - 1 / x - 0.5, 1.0 + 1e-9, 3.0,
                             xtol=1e-15)
    assert cd.lambdaC == pytest.approx(oracle, abs=1e-10)
    assert cd.d0 == pytest.approx(2.0, rel=1e-10)
    assert cd.r0 == pytest.approx(4.0 / 3.0, rel=1e-10)
    assert cd.lambdaC ** 2 - cd.lambda0 ** 2 <= 1.0


def test_critical_class_two(v_neg):
    cd = critical_data(v_neg)
    # omega = -1: H_p = (lam^2 + 2 tau)^(-1/2), d = sqrt(lam^2 + 2) - lam
    assert cd.d0 == pytest.approx(math.sqrt(2.0), rel=1e-10)
    assert cd.r0 == pytest.approx((2.0 + 2.0 * math.sqrt(2.0)) / 3.0, rel=1e-10)


def test_conjugate_zero(v_zero):
    pair = conjugate_streams(v_zero, R_LINEAR)
    lp, lm = cubic_roots(R_LINEAR)
    assert pair.lambdaPlus == pytest.approx(lp, abs=1e-10)
    assert pair.lambdaMinus == pytest.approx(lm, abs=1e-10)
    # 1.035556 is R(1.2) rounded to six digits, which moves lambda_- by ~1.3e-6
    assert pair.lambdaMinus == pytest.approx(1.2, abs=2e-6)
    assert pair.dPlus == pytest.approx(1.0 / lp, abs=1e-10)
    assert pair.dMinus == pytest.approx(1.0 / 1.2, abs=1e-6)


def test_conjugate_near_cusp(v_zero, v_half):
    pair = conjugate_streams(v_zero, 1.0 + 1e-12)
    assert abs(pair.lambdaPlus - 1.0) < 1e-5 and abs(pair.lambdaMinus - 1.0) < 1e-5
    assert conjugate_streams(v_zero, 1.0 + 1e-16 * 4).degenerate
    cd = critical_data(v_half)
    pair = conjugate_streams(v_half, cd.rC + 1e-4)
    assert pair.lambdaPlus < cd.lambdaC < pair.lambdaMinus
    for lam in (pair.lambdaPlus, pair.lambdaMinus):
        assert abs(bernoulli_of_lambda(v_half, lam) - pair.r) <= 1e-10
    assert pair.dMinus < cd.dC < pair.dPlus


def test_conjugate_errors(v_zero, v_half):
    with pytest.raises(SubcriticalParameterError):
        conjugate_streams(v_zero, 0.99)
    with pytest.raises(SubcriticalParameterError):
        conjugate_streams(v_zero, 1.0)
    with pytest.raises(BeyondR0Error):
        conjugate_streams(v_half, 4.0 / 3.0)


def test_depth_vs_trapezoid(v_half, v_zero):
    p = np.linspace(0.0, 1.0, 40001)
    for v, lam in ((v_half, 1.5), (v_zero, 0.8)):
        assert abs(integrate.trapezoid(hp_of(v, lam, p), p) - depth(v, lam)) <= 1e-8


def test_R_shape(v_half):
    cd = critical_data(v_half)
    lam = np.linspace(cd.lambda0 + 1e-3, 6.0, 300)
    R = np.array([bernoulli_of_lambda(v_half, x) for x in lam])
    slope = np.sign(np.diff(R))
    changes = np.flatnonzero(np.diff(slope))
    assert changes.size == 1
    assert abs(lam[changes[0] + 1] - cd.lambdaC) <= 2 * (lam[1] - lam[0])
    assert bernoulli_of_lambda(v_half, 1e3) > 1e5


@settings(max_examples=30, deadline=None)
@given(sampled_specs())
def test_critical_gap_property(spec):
    v = make_vorticity(spec)
    cd = critical_data(v)
    assert cd.lambdaC ** 2 - cd.lambda0 ** 2 <= 1.0 + 1e-12
    assert cd.lambda0 < cd.lambdaC
    assert math.isfinite(cd.d0) == (v.omega_class.value != "I")
    r = cd.rC + 1e-3
    if r < cd.r0:
        pair = conjugate_streams(v, r)
        assert pair.dMinus < cd.dC < pair.dPlus
