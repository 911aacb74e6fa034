"""Fixed-point driver: configuration and report contracts, residual behavior
near beta = 1, the damped iteration's bookkeeping (best iterate, stall and
increase flags, blowup guard), continuation plumbing and the power-of-beta
crosscheck."""

import dataclasses

import numpy as np
import pytest

from renormlab.convolve import ConvolutionPlan
from renormlab.errors import BlowupError, InvalidInitError
from renormlab.params import default_params
from renormlab.profiles import GridSpec, make_ansatz, weighted_norm
from renormlab.renorm import parity_project
from renormlab.solver import (
    ResidualReport,
    SolveConfig,
    _detect_stall,
    _flag_increases,
    beta_continuation,
    default_norm_p,
    fixed_point_solve,
    lemma51_crosscheck,
    residual,
)


@pytest.fixture(scope="module")
def model():
    return default_params(1)


@pytest.fixture(scope="module")
def grid():
    return GridSpec()


@pytest.fixture(scope="module")
def plan():
    return ConvolutionPlan()


@pytest.fixture(scope="module")
def phi(model, grid):
    _, sp = model
    return make_ansatz(sp.D, sp, grid)


def test_config_defaults():
    cfg = SolveConfig(beta=0.9)
    assert cfg.damping == 0.5
    assert cfg.tol == 1e-6
    assert cfg.max_iter == 40
    assert cfg.parity == "even"
    assert cfg.norm_p is None
    assert cfg.anderson_depth == 0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"beta": 0.0},
        {"beta": 1.0},
        {"beta": 0.9, "damping": -0.1},
        {"beta": 0.9, "damping": 1.5},
        {"beta": 0.9, "tol": 0.0},
        {"beta": 0.9, "max_iter": 0},
        {"beta": 0.9, "max_iter": True},
        {"beta": 0.9, "max_iter": 2.0},
        {"beta": 0.9, "parity": "both"},
        {"beta": 0.9, "norm_p": 0.5},
        {"beta": 0.9, "anderson_depth": -1},
        {"beta": 0.9, "anderson_depth": 1.5},
    ],
)
def test_config_rejections(kwargs):
    with pytest.raises(ValueError):
        SolveConfig(**kwargs)


def test_config_edge_values_admitted():
    # damping 0 is the legal no-progress probe; parity none skips projection
    SolveConfig(beta=0.9, damping=0.0)
    SolveConfig(beta=0.9, damping=1.0, parity="none")


def test_report_rejects_negative_residual():
    with pytest.raises(ValueError):
        ResidualReport(
            history=((0, -1.0),), converged=False, final_profile_ref="x", beta=0.9
        )


def test_report_as_dict_round_trip():
    rep = ResidualReport(
        history=((0, 0.5), (1, 0.25)),
        converged=True,
        final_profile_ref="abc",
        beta=0.9,
        increase_flags=(1,),
        cross_residuals=(0.25, 0.3),
    )
    d = rep.as_dict()
    assert d["history"] == [[0, 0.5], [1, 0.25]]
    assert d["converged"] is True
    assert d["increase_flags"] == [1]
    assert d["cross_residuals"] == [0.25, 0.3]


def test_default_norm_p_values():
    assert default_norm_p(1) == pytest.approx(4.0 / 3.0, rel=1e-15)
    assert default_norm_p(2) == pytest.approx(6.0 / 5.0, rel=1e-15)
    assert default_norm_p(3) == pytest.approx(8.0 / 7.0, rel=1e-15)


def test_flag_increases_marks_five_percent_jumps():
    assert _flag_increases([1.0, 1.04, 1.2, 0.9, 1.0]) == (2, 4)
    assert _flag_increases([1.0, 0.9, 0.8]) == ()
    assert _flag_increases([]) == ()


def test_detect_stall():
    assert _detect_stall([0.5, 0.5])
    assert _detect_stall([0.5, 0.5 * (1 + 1e-14), 0.3])
    assert not _detect_stall([0.5, 0.49])
    assert not _detect_stall([0.5])


def test_residual_of_zero_profile_is_zero(model, grid, plan):
    mp, sp = model
    zero = make_ansatz(sp.D, sp, grid).with_chi(
        np.zeros(2 * grid.n, dtype=complex)
    )
    assert residual(zero, 0.9, mp, plan) == 0.0


def test_residual_decreases_toward_beta_one(model, phi, plan):
    # measured at defaults; the map approaches the identity as beta -> 1
    mp, _ = model
    r1 = residual(phi, 0.9, mp, plan)
    r2 = residual(phi, 0.99, mp, plan)
    r3 = residual(phi, 0.999, mp, plan)
    assert r1 == pytest.approx(0.10033, rel=5e-3)
    assert r2 == pytest.approx(0.010315, rel=5e-3)
    assert r3 == pytest.approx(0.0013673, rel=5e-3)
    assert r1 > r2 > r3 > 0.0


def test_synthetic_fixed_point_converges_immediately(model, phi, plan):
    # at beta = 1 - 1e-6 the ansatz is already inside a loose tolerance
    mp, sp = model
    cfg = SolveConfig(beta=1.0 - 1e-6, tol=1e-3, max_iter=5)
    prof, rep = fixed_point_solve(phi, cfg, mp, sp, plan)
    assert len(rep.history) == 1
    assert rep.history[0][0] == 0
    assert rep.history[0][1] < 1e-3
    assert rep.converged
    assert rep.final_profile_ref == phi.content_hash()
    assert prof.content_hash() == phi.content_hash()


def test_short_canonical_run_decreases(model, phi, plan):
    mp, sp = model
    cfg = SolveConfig(beta=0.9, damping=0.5, tol=1e-6, max_iter=3)
    prof, rep = fixed_point_solve(phi, cfg, mp, sp, plan)
    res = [r for _, r in rep.history]
    assert len(res) == 3
    assert all(b < a for a, b in zip(res, res[1:]))
    assert not rep.converged
    assert rep.increase_flags == ()
    assert not rep.non_progress
    # best iterate is the last measured one and stays parity clean
    assert rep.final_profile_ref == prof.content_hash()
    odd = parity_project(prof, "odd")
    p = default_norm_p(mp.r)
    assert weighted_norm(odd, p, 0.0) < 1e-10 * weighted_norm(prof, p, 0.0)


def test_zero_damping_stalls_and_returns_init(model, phi, plan):
    mp, sp = model
    cfg = SolveConfig(beta=0.9, damping=0.0, tol=1e-12, max_iter=3)
    prof, rep = fixed_point_solve(phi, cfg, mp, sp, plan)
    res = [r for _, r in rep.history]
    assert len(res) == 3
    assert res[0] == res[1] == res[2]
    assert rep.non_progress
    assert not rep.converged
    assert rep.final_profile_ref == phi.content_hash()


def test_determinism_bit_identical_histories(model, phi, plan):
    mp, sp = model
    cfg = SolveConfig(beta=0.9, damping=0.5, tol=1e-9, max_iter=2)
    _, rep_a = fixed_point_solve(phi, cfg, mp, sp, plan)
    _, rep_b = fixed_point_solve(phi, cfg, mp, sp, plan)
    assert rep_a.history == rep_b.history
    assert rep_a.final_profile_ref == rep_b.final_profile_ref


def test_init_outside_envelope_rejected(model, phi, plan):
    mp, sp = model
    with pytest.raises(InvalidInitError):
        fixed_point_solve(
            phi.with_chi(3.0 * phi.chi), SolveConfig(beta=0.9), mp, sp, plan
        )


def test_norm_blowup_aborts(model, grid, plan):
    # a huge-amplitude start in a wide class explodes under the undamped map
    mp, sp = model
    sp_wide = dataclasses.replace(sp, D=1e4)
    big = make_ansatz(50.0, sp_wide, grid)
    cfg = SolveConfig(beta=0.9, damping=1.0, tol=1e-12, max_iter=4)
    with pytest.raises(BlowupError):
        fixed_point_solve(big, cfg, mp, sp_wide, plan)


def test_anderson_window_runs(model, phi, plan):
    mp, sp = model
    cfg = SolveConfig(beta=0.9, damping=0.5, tol=1e-9, max_iter=2, anderson_depth=3)
    _, rep = fixed_point_solve(phi, cfg, mp, sp, plan)
    assert len(rep.history) == 2
    assert all(np.isfinite(r) and r > 0 for _, r in rep.history)


def test_continuation_plumbing(model, phi, plan):
    # a huge tolerance makes every stage converge on its first measurement,
    # which exercises warm starts and the cross-residual matrix cheaply
    mp, sp = model
    cfg = SolveConfig(beta=0.9, tol=10.0, max_iter=3)
    stages = beta_continuation((0.7, 0.9), phi, cfg, mp, sp, plan)
    assert [b for b, _, _ in stages] == [0.7, 0.9]
    for i, (b, prof, rep) in enumerate(stages):
        assert rep.beta == b
        assert rep.converged
        assert len(rep.cross_residuals) == 2
        assert rep.cross_residuals[i] <= cfg.tol
        assert rep.final_profile_ref == prof.content_hash()


@pytest.mark.parametrize(
    "betas",
    [(), (0.9, 0.7), (0.9, 0.9), (0.3, 0.9), (0.7, 1.0)],
)
def test_continuation_schedule_rejections(model, phi, plan, betas):
    mp, sp = model
    with pytest.raises(ValueError):
        beta_continuation(betas, phi, SolveConfig(beta=0.9), mp, sp, plan)


def test_lemma51_crosscheck_guards(model, phi, plan):
    mp, _ = model
    with pytest.raises(ValueError):
        lemma51_crosscheck(phi, 0.5, 5, mp, plan)  # 0.5^5 sits below the floor
    with pytest.raises(ValueError):
        lemma51_crosscheck(phi, 0.9, 0, mp, plan)
    with pytest.raises(ValueError):
        lemma51_crosscheck(phi, 1.5, 2, mp, plan)


def test_lemma51_crosscheck_values(model, phi, plan):
    mp, _ = model
    rows = lemma51_crosscheck(phi, 0.9, 2, mp, plan)
    assert [n for n, _ in rows] == [1, 2]
    r1, r2 = rows[0][1], rows[1][1]
    assert r1 == pytest.approx(0.10033, rel=5e-3)
    # moving beta away from 1 raises the defect, but bounded by the
    # consistency factor
    assert r2 > r1
    assert r2 <= 10.0 * r1
