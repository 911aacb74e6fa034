"""Convolution machinery: closed-form pairs, the one-sided beta identity,
slope asymptotics, parity algebra, and the fast/direct cross-check."""

import numpy as np
import pytest
from scipy.special import gamma

from renormlab.convolve import (
    ConvolutionPlan,
    convolve_direct,
    convolve_fast,
    nonlinear_density,
    reflect_conjugate,
)
from renormlab.errors import CrossCheckFailure, DivergentNormError
from renormlab.profiles import GridSpec, Profile


@pytest.fixture(scope="module")
def grid():
    return GridSpec()


@pytest.fixture(scope="module")
def plan():
    return ConvolutionPlan()


@pytest.fixture(scope="module")
def exp_pair_direct(grid):
    # chi = 1, z = 0 represents e^{-|x|}; one full-grid direct run, reused below
    ones = Profile(grid, np.ones(2 * grid.n, complex), 0.0, 0.0)
    return convolve_direct(ones, ones)


def test_plan_guards():
    with pytest.raises(ValueError):
        ConvolutionPlan(m=32)
    with pytest.raises(ValueError):
        ConvolutionPlan(m=65536, pad=1000)
    with pytest.raises(ValueError):
        ConvolutionPlan(probe_count=0)
    with pytest.raises(ValueError):
        ConvolutionPlan(tol_far=1e-2, tol_near=1e-4)


def test_reflect_conjugate_examples(grid):
    eta = grid.nodes()
    # purely imaginary even profile: i e^{-|eta|} -> -i e^{-|eta|}
    psi = Profile(grid, 1j * np.ones(2 * grid.n), 0.0, 0.0)
    out = reflect_conjugate(psi)
    assert np.array_equal(out.chi, -1j * np.ones(2 * grid.n))
    assert out.z1 == psi.z1 and out.z2 == psi.z2
    # real even profile is a fixed point
    even = Profile(grid, np.exp(-0.3 * np.abs(eta)).astype(complex), -0.5, -0.5)
    assert np.array_equal(reflect_conjugate(even).chi, even.chi)
    # odd real profile flips sign
    odd = Profile(grid, (eta * np.exp(-np.abs(eta))).astype(complex), 0.0, 0.0)
    assert np.allclose(reflect_conjugate(odd).chi, -odd.chi, rtol=0, atol=0)


def test_exp_pair_direct_closed_form(grid, exp_pair_direct):
    # supports live on [-30, 30], so the antiderivative oracle is the
    # truncated form (1 + |u| - e^{2(|u|-30)}) e^{-|u|}
    eta = grid.nodes()
    ref = 1 + np.abs(eta) - np.exp(2.0 * (np.abs(eta) - grid.eta_max))
    rel = np.abs(exp_pair_direct.chi - ref) / ref
    assert rel.max() < 1e-12
    assert exp_pair_direct.z1 == 0.0 and exp_pair_direct.z2 == 0.0


def test_exp_pair_direct_even(exp_pair_direct):
    chi = exp_pair_direct.chi
    assert np.max(np.abs(chi - chi[::-1])) < 1e-12 * np.max(np.abs(chi))


def test_exp_pair_fast(grid, plan):
    ones = Profile(grid, np.ones(2 * grid.n, complex), 0.0, 0.0)
    h = convolve_fast(ones, ones, plan)
    eta = grid.nodes()
    ref = 1 + np.abs(eta) - np.exp(2.0 * (np.abs(eta) - grid.eta_max))
    assert np.max(np.abs(h.chi - ref) / ref) < 2e-7


def test_gaussian_pair_fast(grid, plan):
    # e^{-x^2/2} * e^{-x^2/2} = sqrt(pi) e^{-u^2/4}; z = 0 override with the
    # envelope folded into the amplitude
    eta = grid.nodes()
    f = Profile(grid, np.exp(-(eta**2) / 2 + np.abs(eta)), 0.0, 0.0)
    h = convolve_fast(f, f, plan)
    ref = np.sqrt(np.pi) * np.exp(-(eta**2) / 4 + np.abs(eta))
    rel = np.abs(h.chi - ref) / ref
    inner = np.abs(eta) <= 1.0
    band = np.abs(eta) <= 8.0
    assert rel[inner].max() < 1e-5
    # further out the graded-grid representation of the amplitude dominates
    assert rel[band].max() < 5e-4


def test_one_sided_beta_identity(grid, plan):
    # f = g supported on eta > 0 with chi = 1: the e^{-u} weight is exact on
    # [0, u], so chi_h = B(z+1, z+1) exactly below 1 and B u^{(2z+1) - z}
    # above; exercises both singular endpoints of the quadrature
    z = -0.7
    eta = grid.nodes()
    f = Profile(grid, np.where(eta > 0, 1.0, 0.0).astype(complex), z, z)
    h = convolve_fast(f, f, plan)
    bconst = gamma(z + 1.0) ** 2 / gamma(2 * z + 2.0)
    up = eta[eta > 0]
    chi = h.chi[eta > 0]
    ref = np.where(up <= 1.0, bconst, bconst * up ** ((2 * z + 1.0) - z))
    rel = np.abs(chi - ref) / np.abs(ref)
    delta = grid.eta_max / plan.m
    assert h.z1 == pytest.approx(2 * z + 1.0)
    assert rel[up <= 16 * delta].max() < 1e-10  # patched nodes are direct
    assert rel[(up > 16 * delta) & (up <= 64 * delta)].max() < 5e-3
    assert rel[(up > 64 * delta) & (up <= 1.0)].max() < 1e-4
    assert rel[up > 1.0].max() < 2e-5
    # nothing leaks onto the unsupported side
    assert np.abs(h.chi[eta < 0]).max() == 0.0


def test_pair_slope_near_origin(grid, plan):
    # output of two z1 = -0.7 factors scales like u^{z1 + z1 + 1} = u^{-0.4};
    # the window sits deep because wing terms only decay like u^{0.4}
    z = -0.7
    eta = grid.nodes()
    f = Profile(grid, np.exp(-0.1 * np.abs(eta)).astype(complex), z, z)
    h = convolve_fast(f, f, plan)
    up = eta[eta > 0]
    msk = (up > 3e-8) & (up < 1e-5)
    hv = np.abs(h.chi[eta > 0][msk]) * up[msk] ** h.z1 * np.exp(-up[msk])
    slope = np.polyfit(np.log(up[msk]), np.log(hv), 1)[0]
    assert slope == pytest.approx(-0.4, abs=0.05)


def test_density_slope_near_origin(grid, plan):
    z = -0.7
    eta = grid.nodes()
    f = Profile(grid, np.exp(-0.1 * np.abs(eta)).astype(complex), z, z)
    d = nonlinear_density(f, 1, plan)
    assert d.z1 == pytest.approx(3 * z + 2.0)
    up = eta[eta > 0]
    msk = (up > 3e-9) & (up < 1e-6)
    dv = np.abs(d.chi[eta > 0][msk]) * up[msk] ** d.z1 * np.exp(-up[msk])
    slope = np.polyfit(np.log(up[msk]), np.log(dv), 1)[0]
    assert slope == pytest.approx(-0.1, abs=0.05)


def test_gaussian_triple(grid, plan):
    # triple self-convolution of e^{-eta^2/2}: 2 pi / sqrt(3) e^{-u^2/6}
    eta = grid.nodes()
    f = Profile(grid, np.exp(-(eta**2) / 2 + np.abs(eta)), 0.0, 0.0)
    d = nonlinear_density(f, 1, plan)
    ref = 2 * np.pi / np.sqrt(3.0) * np.exp(-(eta**2) / 6 + np.abs(eta))
    band = np.abs(eta) <= 6.0
    assert np.max(np.abs(d.chi[band] - ref[band]) / ref[band]) < 1e-4
    assert d.z1 == 0.0 and d.z2 == 0.0


def test_commutativity(grid, plan):
    eta = grid.nodes()
    f = Profile(
        grid,
        np.exp(-0.3 * np.abs(eta)) * np.exp(1j * 0.8 * eta),
        -17 / 24,
        -2.25,
    )
    g = Profile(
        grid,
        0.7 * np.exp(-0.2 * np.abs(eta)) * (1 + 0.3 * np.sin(0.9 * eta)),
        -17 / 24,
        -2.25,
    )
    hfg = convolve_fast(f, g, plan)
    hgf = convolve_fast(g, f, plan)
    peak = np.max(np.abs(hfg.chi))
    assert np.max(np.abs(hfg.chi - hgf.chi)) < 1e-9 * peak


def test_parity_even(grid, plan):
    eta = grid.nodes()
    chi = np.exp(-0.25 * np.abs(eta)) * (1 + 0.4 * np.cos(1.3 * eta))
    psi = Profile(grid, chi.astype(complex), -17 / 24, -2.25)
    d = nonlinear_density(psi, 1, plan)
    peak = np.max(np.abs(d.chi))
    assert np.max(np.abs(d.chi - d.chi[::-1])) < 1e-12 * peak


def test_parity_odd(grid, plan):
    eta = grid.nodes()
    chi = np.tanh(eta) * np.exp(-0.2 * np.abs(eta))
    psi = Profile(grid, chi.astype(complex), 0.0, 0.0)
    d = nonlinear_density(psi, 1, plan)
    peak = np.max(np.abs(d.chi))
    assert np.max(np.abs(d.chi + d.chi[::-1])) < 1e-10 * peak


def test_real_even_stays_real(grid, plan):
    eta = grid.nodes()
    chi = np.exp(-0.3 * eta**2 + 0.5 * np.abs(eta))
    psi = Profile(grid, chi.astype(complex), 0.0, 0.0)
    d = nonlinear_density(psi, 1, plan)
    peak = np.max(np.abs(d.chi))
    assert np.max(np.abs(d.chi.imag)) < 1e-12 * peak


def test_zero_inputs(grid, plan):
    zero = Profile(grid, np.zeros(2 * grid.n, complex), -0.7, -1.5)
    one = Profile(grid, np.ones(2 * grid.n, complex), 0.0, 0.0)
    assert np.abs(convolve_fast(zero, one, plan).chi).max() == 0.0
    assert np.abs(nonlinear_density(zero, 1, plan).chi).max() == 0.0


def test_exponent_propagation(grid, plan):
    eta = grid.nodes()
    f = Profile(grid, np.exp(-0.1 * np.abs(eta)).astype(complex), -0.7, -1.5)
    g = Profile(grid, np.exp(-0.2 * np.abs(eta)).astype(complex), -0.3, -2.0)
    h = convolve_fast(f, g, plan)
    assert h.z1 == pytest.approx(-0.7 - 0.3 + 1.0)
    assert h.z2 == -1.5
    # the near-origin exponent caps at zero once the sum turns regular
    h2 = convolve_fast(g, g, plan)
    assert h2.z1 == 0.0


def test_divergence_guards(grid, plan):
    bad = Profile(grid, np.ones(2 * grid.n, complex), -1.05, -1.5)
    ok = Profile(grid, np.ones(2 * grid.n, complex), -0.7, -1.5)
    with pytest.raises(DivergentNormError):
        convolve_fast(bad, ok, plan)
    with pytest.raises(DivergentNormError):
        convolve_direct(ok, bad)
    with pytest.raises(DivergentNormError):
        nonlinear_density(bad, 1, plan)
    # singular profile whose density exponent (2r+1) z1 + 2r turns regular
    mild = Profile(grid, np.ones(2 * grid.n, complex), -0.6, -1.5)
    with pytest.raises(DivergentNormError):
        nonlinear_density(mild, 1, plan)


def test_density_order_guard(grid, plan):
    psi = Profile(grid, np.ones(2 * grid.n, complex), -0.7, -1.5)
    for r in (0, -1, 1.5, True):
        with pytest.raises(ValueError):
            nonlinear_density(psi, r, plan)


def test_mismatched_grids_raise(plan):
    g1, g2 = GridSpec(), GridSpec(n=1024)
    f = Profile(g1, np.ones(2 * g1.n, complex), 0.0, 0.0)
    g = Profile(g2, np.ones(2 * g2.n, complex), 0.0, 0.0)
    with pytest.raises(ValueError):
        convolve_fast(f, g, plan)


def test_cross_check_failure_raised(grid):
    # an unattainable tolerance must surface as CrossCheckFailure
    eta = grid.nodes()
    f = Profile(grid, np.exp(-0.1 * np.abs(eta)).astype(complex), -0.7, -1.5)
    strict = ConvolutionPlan(tol_far=1e-16, tol_near=1e-16)
    with pytest.raises(CrossCheckFailure):
        convolve_fast(f, f, strict)


def test_fast_path_deterministic(grid, plan):
    eta = grid.nodes()
    f = Profile(grid, np.exp(-0.2 * np.abs(eta) + 0.6j * eta), -0.7, -1.5)
    h1 = convolve_fast(f, f, plan)
    h2 = convolve_fast(f, f, plan)
    assert np.array_equal(h1.chi, h2.chi)


def test_far_field_envelope(grid, plan):
    # |density(u)| <= C |u|^{z2} e^{-|u|} on 3 <= |u| <= 10, and the same
    # constant keeps working further out
    eta = grid.nodes()
    chi = np.exp(-0.3 * np.abs(eta)) * (1 + 0.2 * np.cos(0.7 * eta))
    psi = Profile(grid, chi.astype(complex), -17 / 24, -2.25)
    d = nonlinear_density(psi, 1, plan)
    band = (np.abs(eta) >= 3.0) & (np.abs(eta) <= 10.0)
    c_band = np.max(np.abs(d.chi[band]))
    outer = np.abs(eta) > 10.0
    assert c_band > 0.0 and np.isfinite(c_band)
    assert np.max(np.abs(d.chi[outer])) <= 1.2 * c_band


def test_random_profiles_cross_check(grid, plan):
    # twenty pseudo-random amplitudes inside an envelope ball; every fast
    # run must survive its own probe comparison
    rng = np.random.default_rng(2024)
    eta = grid.nodes()
    for _ in range(20):
        coef = rng.uniform(0.3, 1.0)
        w1, w2 = rng.uniform(0.5, 2.5, 2)
        phase = rng.uniform(0, 2 * np.pi)
        damp = rng.uniform(0.05, 0.4)
        smooth = coef * np.exp(-damp * np.abs(eta)) * (1 + 0.5 * np.cos(w1 * eta + phase))
        chi = smooth * np.exp(1j * (w2 * eta + rng.uniform(0, 1) * np.sin(1.3 * eta)))
        psi = Profile(grid, chi, -17 / 24, -2.25)
        convolve_fast(psi, psi, plan)
