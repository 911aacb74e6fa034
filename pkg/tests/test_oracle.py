"""Evolution oracle: state and controller contracts, rescaled initial data,
free and nonlinear stepping with rejection and blowup guards, order-2
self-convergence, self-similarity deviation, physical-space reconstruction,
and the energy curve with its spectral cross-check."""

import math

import numpy as np
import pytest

from renormlab.errors import BlowupError, DivergentNormError, StepRejectedError
from renormlab.oracle import (
    EnergyCurve,
    EvolutionState,
    StepControl,
    _derivative_profile,
    _node_envelope,
    energy_curve,
    evolve,
    initial_data,
    reconstruct_u,
    selfsimilar_deviation,
    spectral_kinetic,
)
from renormlab.params import default_params
from renormlab.profiles import (
    GridSpec,
    Profile,
    inverse_fourier,
    lebesgue_norm,
    make_ansatz,
    weighted_norm,
)


@pytest.fixture(scope="module")
def model():
    return default_params(1)


@pytest.fixture(scope="module")
def grid():
    return GridSpec()


@pytest.fixture(scope="module")
def const(model, grid):
    _, sp = model
    return Profile(grid, np.full(2 * grid.n, 0.1, dtype=complex), sp.z1, sp.z2)


@pytest.fixture(scope="module")
def phi(model, grid):
    _, sp = model
    return make_ansatz(sp.D, sp, grid)


def push_forward(psi, tau, c):
    """State whose chi samples tau^{-c} psi(y tau) on psi's own grid."""
    y = psi.grid.nodes()
    vals = tau ** (-c) * psi.eval(y * tau)
    v = psi.with_chi(vals / _node_envelope(psi))
    return EvolutionState(1.0 - tau * tau, v, 1.0)


# ---------------------------------------------------------------- state


def test_state_clock_values(const):
    st = EvolutionState(0.19, const, 1.0)
    assert st.tau == pytest.approx(0.9, abs=1e-15)
    assert st.beta == pytest.approx(0.9, abs=1e-15)


def test_state_beta_tracks_horizon(const):
    st = EvolutionState(1.0, const, 4.0)
    assert st.tau == pytest.approx(math.sqrt(3.0), abs=1e-15)
    assert st.beta == pytest.approx(math.sqrt(0.75), abs=1e-15)


@pytest.mark.parametrize("t,T", [(0.0, 0.0), (0.0, -1.0), (-0.1, 1.0), (1.0, 1.0), (1.5, 1.0)])
def test_state_rejections(const, t, T):
    with pytest.raises(ValueError):
        EvolutionState(t, const, T)


def test_control_defaults():
    ctrl = StepControl()
    assert ctrl.T == 1.0
    assert ctrl.beta_step == 0.005
    assert ctrl.discrepancy_tol == 1e-6
    assert ctrl.max_halvings == 8
    assert ctrl.norm_cap == 1e3
    assert ctrl.nonlinear is True


@pytest.mark.parametrize(
    "kwargs",
    [
        {"T": 0.0},
        {"beta_step": 0.0},
        {"beta_step": 1.0},
        {"discrepancy_tol": 0.0},
        {"max_halvings": -1},
        {"norm_cap": 1.0},
    ],
)
def test_control_rejections(kwargs):
    with pytest.raises(ValueError):
        StepControl(**kwargs)


# ---------------------------------------------------------- initial data


def test_initial_data_identity_at_unit_horizon(const, model):
    mp, _ = model
    assert initial_data(const, 1.0, mp) is const


def test_initial_data_horizon_guard(const, model):
    mp, _ = model
    with pytest.raises(ValueError):
        initial_data(const, 0.0, mp)


def test_initial_data_norm_law(const, model):
    # rescaling y -> y sqrt(T) with amplitude T^{-c/2} moves the Lebesgue
    # norm by the change-of-variables power T^{-c/2 - 1/(2p)}
    mp, _ = model
    T, p = 4.0, 4.0 / 3.0
    v0 = initial_data(const, T, mp)
    lhs = lebesgue_norm(v0, p)
    rhs = T ** (-mp.c / 2.0 - 1.0 / (2.0 * p)) * lebesgue_norm(const, p)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_initial_data_norm_law_with_amplitude_factor(grid):
    # r=2 has c = -1/2, so the amplitude prefactor is exercised too
    mp2, sp2 = default_params(2)
    psi = Profile(grid, np.full(2 * grid.n, 0.1, dtype=complex), sp2.z1, sp2.z2)
    T, p = 4.0, 6.0 / 5.0
    v0 = initial_data(psi, T, mp2)
    lhs = lebesgue_norm(v0, p)
    rhs = T ** (-mp2.c / 2.0 - 1.0 / (2.0 * p)) * lebesgue_norm(psi, p)
    assert mp2.c == pytest.approx(-0.5, abs=1e-15)
    assert lhs == pytest.approx(rhs, rel=1e-6)


# --------------------------------------------------------------- stepping


def test_free_evolution_exact_per_node(const, model, grid):
    mp, _ = model
    states = evolve(const, mp, 0.36, control=StepControl(nonlinear=False))
    assert len(states) == 41
    y2 = grid.nodes() ** 2
    for st in states:
        exact = np.exp(-1j * y2 * st.t) * const.chi
        assert float(np.max(np.abs(st.v.chi - exact))) < 1e-12


def test_free_single_step_is_phase_multiplication(const, model, grid):
    mp, _ = model
    t_end = 1.0 - 0.995 ** 2
    states = evolve(const, mp, t_end, control=StepControl(nonlinear=False))
    assert len(states) == 2
    assert states[1].beta == pytest.approx(0.995, abs=1e-12)
    exact = np.exp(-1j * grid.nodes() ** 2 * t_end) * const.chi
    assert float(np.max(np.abs(states[1].v.chi - exact))) < 1e-14


def test_one_accepted_nonlinear_step(const, model):
    # the measured first-step predictor-corrector discrepancy is 3.6e-5,
    # so 5e-5 admits the full default beta decrement in one try
    mp, _ = model
    t_end = 1.0 - 0.995 ** 2
    states = evolve(const, mp, t_end, control=StepControl(discrepancy_tol=5e-5))
    assert len(states) == 2
    assert states[1].t == pytest.approx(t_end, abs=1e-15)
    assert states[1].beta == pytest.approx(0.995, abs=1e-12)


def test_step_rejection_carries_accepted_states(const, model):
    mp, _ = model
    ctrl = StepControl(discrepancy_tol=1e-18, max_halvings=0)
    with pytest.raises(StepRejectedError) as exc:
        evolve(const, mp, 0.01, control=ctrl)
    assert len(exc.value.states) == 1
    assert exc.value.states[0].t == 0.0


def test_norm_cap_blowup(model, grid):
    mp, sp = model
    big = Profile(grid, np.full(2 * grid.n, 5.0, dtype=complex), sp.z1, sp.z2)
    ctrl = StepControl(discrepancy_tol=1e6, norm_cap=1.000001)
    with pytest.raises(BlowupError):
        evolve(big, mp, 0.01, control=ctrl)


@pytest.mark.parametrize("t_end", [-0.1, 1.0, 1.5])
def test_evolve_horizon_guard(const, model, t_end):
    mp, _ = model
    with pytest.raises(ValueError):
        evolve(const, mp, t_end, control=StepControl(nonlinear=False))


def test_step_halving_is_order_two(model):
    # self-convergence on a grid whose far nodes still satisfy y^2 dt < 1,
    # so the midpoint rule is in its asymptotic regime over this dt range
    mp, sp = model
    g = GridSpec(eta_max=8.0, n=256)
    psi = Profile(g, np.full(2 * g.n, 0.1, dtype=complex), sp.z1, sp.z2)
    t_end = 1.0 - 0.99 ** 2
    ends = {}
    for db in (0.01, 0.005, 0.0025):
        ctrl = StepControl(beta_step=db, discrepancy_tol=1.0)
        ends[db] = evolve(psi, mp, t_end, control=ctrl)[-1].v.chi
    p = 4.0 / 3.0
    e1 = weighted_norm(psi.with_chi(ends[0.01] - ends[0.005]), p, 0.0)
    e2 = weighted_norm(psi.with_chi(ends[0.005] - ends[0.0025]), p, 0.0)
    assert e2 < e1
    assert 3.0 < e1 / e2 < 5.5


# -------------------------------------------------------------- deviation


def test_deviation_zero_at_start(const, model):
    mp, _ = model
    st = EvolutionState(0.0, const, 1.0)
    assert selfsimilar_deviation(st, const, mp) < 1e-15


def test_deviation_zero_when_built_exactly(const, phi, model):
    mp, _ = model
    for psi in (const, phi):
        st = push_forward(psi, 0.95, mp.c)
        assert selfsimilar_deviation(st, psi, mp) < 1e-6


def test_deviation_negative_control(const, phi, model):
    # a state following one profile measured against a different profile
    # sits at order one, far above any fixed-point residual scale
    mp, _ = model
    st = push_forward(phi, 0.95, mp.c)
    dev = selfsimilar_deviation(st, const, mp)
    assert 0.2 < dev < 0.5


# ---------------------------------------------------------- reconstruction


def test_reconstruct_identity_at_start(const, model):
    mp, _ = model
    xs = np.linspace(0.0, 10.0, 101)
    assert np.array_equal(reconstruct_u(const, 0.0, 1.0, xs, mp), inverse_fourier(const, xs))


@pytest.mark.parametrize("t,T", [(0.0, 0.0), (0.0, -2.0), (1.0, 1.0), (2.0, 1.0)])
def test_reconstruct_guards(const, model, t, T):
    mp, _ = model
    with pytest.raises(ValueError):
        reconstruct_u(const, t, T, np.array([1.0]), mp)


def test_reconstruct_sup_scaling(const, model):
    mp, _ = model
    xs = np.linspace(0.0, 10.0, 101)
    t1, t2 = 0.19, 0.75
    s1, s2 = 1.0 - t1, 1.0 - t2
    u1 = reconstruct_u(const, t1, 1.0, xs * math.sqrt(s1), mp)
    u2 = reconstruct_u(const, t2, 1.0, xs * math.sqrt(s2), mp)
    ratio = float(np.max(np.abs(u2)) / np.max(np.abs(u1)))
    assert ratio == pytest.approx((s2 / s1) ** (-0.5), rel=1e-12)


def test_reconstruct_real_even_profile_gives_real_even_u(const, model):
    mp, _ = model
    xs = np.linspace(0.0, 10.0, 101)
    u_pos = reconstruct_u(const, 0.25, 1.0, xs, mp)
    u_neg = reconstruct_u(const, 0.25, 1.0, -xs, mp)
    assert float(np.max(np.abs(u_pos.imag))) < 1e-10
    assert float(np.max(np.abs(u_neg - u_pos))) < 1e-10


def test_derivative_profile_matches_difference_quotient(const):
    xs = np.array([0.7, 2.3, 6.1])
    h = 1e-5
    exact = inverse_fourier(_derivative_profile(const), xs)
    num = (inverse_fourier(const, xs + h) - inverse_fourier(const, xs - h)) / (2.0 * h)
    assert float(np.max(np.abs(exact - num) / np.abs(num))) < 1e-6


# ----------------------------------------------------------------- energy


def test_energy_curve_scaling(const, model):
    mp, _ = model
    curve = energy_curve(const, mp, [0.0, 0.293, 0.5, 0.75])
    assert curve.r == 1
    assert curve.fitted_slope == pytest.approx(-1.5, abs=1e-9)
    t0, e0, kin0, pot0 = curve.samples[0]
    assert e0 == pytest.approx(2.335659e-04, rel=1e-5)
    assert kin0 == pytest.approx(3.9196730301e-04, rel=1e-6)
    assert pot0 == pytest.approx(6.336057e-04, rel=1e-5)
    # halving (T - t) multiplies E by 2^{3/2} exactly
    assert curve.samples[2][1] / e0 == pytest.approx(2.0 ** 1.5, rel=1e-12)
    # physical-window kinetic against the full-line spectral value
    assert kin0 == pytest.approx(spectral_kinetic(const), rel=1e-4)


def test_energy_curve_scaling_second_exponent(grid):
    mp2, sp2 = default_params(2)
    psi = Profile(grid, np.full(2 * grid.n, 0.1, dtype=complex), sp2.z1, sp2.z2)
    curve = energy_curve(psi, mp2, [0.0, 0.5, 0.75])
    assert curve.fitted_slope == pytest.approx(-1.0, abs=1e-9)
    t0, e0, kin0, pot0 = curve.samples[0]
    assert e0 == pytest.approx(4.534768e-04, rel=1e-5)
    assert kin0 == pytest.approx(4.785470e-04, rel=1e-5)
    assert pot0 == pytest.approx(1.504214e-04, rel=1e-5)
    assert curve.samples[1][1] / e0 == pytest.approx(2.0, rel=1e-12)


def test_energy_requires_integrable_origin_exponent(const, grid, model):
    # z1 = -0.8 pushes the critical Lebesgue norm past integrability
    mp, sp = model
    shallow = Profile(grid, const.chi, -0.8, sp.z2)
    with pytest.raises(DivergentNormError):
        energy_curve(shallow, mp, [0.0, 0.5])


def test_energy_requires_decaying_tail_exponent(const, grid, model):
    # z2 = -1.2 leaves the weighted square norm divergent at infinity
    mp, sp = model
    fat = Profile(grid, const.chi, sp.z1, -1.2)
    with pytest.raises(DivergentNormError):
        energy_curve(fat, mp, [0.0, 0.5])


@pytest.mark.parametrize("times", [[0.5], [0.0, 1.0], [-0.1, 0.5]])
def test_energy_times_validation(const, model, times):
    mp, _ = model
    with pytest.raises(ValueError):
        energy_curve(const, mp, times)


def test_energy_curve_field_validation():
    with pytest.raises(ValueError):
        EnergyCurve(samples=((0.0, 1.0, -1.0, 2.0),), fitted_slope=-1.5, r=1)
    with pytest.raises(ValueError):
        EnergyCurve(samples=((0.0, 5.0, 1.0, 2.0),), fitted_slope=-1.5, r=1)


def test_energy_curve_accepts_consistent_samples():
    kin, pot = 2.0, 1.0
    e = kin - pot / 4.0
    curve = EnergyCurve(samples=((0.0, e, kin, pot),), fitted_slope=-1.5, r=1)
    assert curve.samples[0][1] == e
