"""Renormalization map acting on envelope-factored profiles.

The map splits into a rescaled copy of the input and an oscillatory
correction driven by the cubic-type density F (see convolve):

    R[psi](eta) = e^{i(1 - 1/beta^2) eta^2} beta^c psi(eta/beta)
                  + 2i e^{i eta^2} I(eta),
    I(eta) = integral over s in [1, 1/beta] of e^{-i eta^2 s^2} F(eta s) s^{-1/r} ds,

with c = (1 - r)/r.  Writing the correction in the scaled variable s (rather
than zeta = eta*s) makes the |eta| power prefactors cancel identically, so a
single panel sweep with a quadratic-phase budget serves both the correction
term and the kernel integral used by the composition cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convolve import ConvolutionPlan, _normalize, nonlinear_density
from .errors import OscBudgetError
from .params import ModelParams
from .profiles import Profile
from .quadrature import panel_points, quadratic_phase_points

__all__ = [
    "OscIntegralSpec",
    "linear_term",
    "nonlinear_term",
    "kernel_integral",
    "apply_renorm",
    "parity_project",
]

# Hard ceiling on panels for a single evaluation point; the phase budget is
# quadratic in eta and in 1/beta, so hitting this means the requested
# (beta, eta) pair is outside anything the grid can represent anyway.
_MAX_PANELS = 200_000


@dataclass(frozen=True)
class OscIntegralSpec:
    """Panel budget for integrals with quadratic phase e^{-i eta^2 s^2}.

    panels_per_period panels per 2*pi of phase advance; the default of 8
    keeps the advance per panel at most pi/4, where Gauss-Legendre of the
    default order is converged far beyond the cross-check tolerances.
    """

    panels_per_period: int = 8
    gauss_order: int = 8

    def __post_init__(self):
        for name in ("panels_per_period", "gauss_order"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{name} must be a positive integer")

    @property
    def budget(self) -> float:
        return 2.0 * np.pi / self.panels_per_period


def _check_beta(beta: float, strict: bool = False) -> None:
    # the rescaled copy and the kernel integral degenerate gracefully at
    # beta = 1 (identity, empty interval); the full map's s-interval does
    # not, so its callers require strictness
    if strict and not 0.0 < beta < 1.0:
        raise ValueError("scaling parameter beta must lie in (0, 1)")
    if not 0.0 < beta <= 1.0:
        raise ValueError("scaling parameter beta must lie in (0, 1]")


def _osc_sweep(
    integrand: Profile,
    r: int,
    eta: np.ndarray,
    s_lo: np.ndarray,
    s_hi: np.ndarray,
    spec: OscIntegralSpec,
) -> np.ndarray:
    """integral of e^{-i eta^2 s^2} integrand(eta*s) s^{-1/r} ds per point.

    eta, s_lo, s_hi are matched 1-d arrays; entries with s_hi <= s_lo
    contribute zero.  All panels are built first, then the integrand is
    evaluated in one vectorized pass and reduced per point.
    """
    out = np.zeros(eta.size, dtype=complex)
    pts_parts, wts_parts, eta_parts, id_parts = [], [], [], []
    budget = spec.budget
    half = integrand.grid.half_nodes()
    for j in range(eta.size):
        a, b = s_lo[j], s_hi[j]
        if not b > a:
            continue
        omega = eta[j] * eta[j]
        needed = omega * (b * b - a * a) / budget
        if needed > _MAX_PANELS:
            raise OscBudgetError(
                f"oscillatory integral at eta={eta[j]:.3g} needs about "
                f"{needed:.0f} panels (cap {_MAX_PANELS})"
            )
        interior = quadratic_phase_points(a, b, omega, budget)
        # the integrand is piecewise linear between grid knots; panels must
        # break there too or the Gauss rule stalls at the kink error
        aa = abs(eta[j])
        lo_k, hi_k = np.searchsorted(half, [aa * a, aa * b])
        knots = half[lo_k:hi_k] / aa
        knots = knots[(knots > a) & (knots < b)]
        breaks = np.unique(np.concatenate([[a], interior, knots, [b]]))
        p, w = panel_points(breaks, order=spec.gauss_order)
        pts_parts.append(p)
        wts_parts.append(w)
        eta_parts.append(np.full(p.size, eta[j]))
        id_parts.append(np.full(p.size, j, dtype=np.intp))
    if not pts_parts:
        return out
    pts = np.concatenate(pts_parts)
    wts = np.concatenate(wts_parts)
    etas = np.concatenate(eta_parts)
    ids = np.concatenate(id_parts)
    vals = integrand.eval(etas * pts)
    vals *= np.exp(-1j * (etas * etas) * (pts * pts)) * pts ** (-1.0 / r)
    contrib = vals * wts
    out = np.bincount(ids, contrib.real, minlength=eta.size).astype(complex)
    out += 1j * np.bincount(ids, contrib.imag, minlength=eta.size)
    return out


def linear_term(psi: Profile, mp: ModelParams, beta: float, eta):
    """Rescaled copy e^{i(1 - 1/beta^2) eta^2} beta^c psi(eta/beta)."""
    _check_beta(beta)
    arr = np.asarray(eta, dtype=float)
    phase = np.exp(1j * (1.0 - 1.0 / beta**2) * arr * arr)
    return phase * beta**mp.c * psi.eval(arr / beta)


def nonlinear_term(
    dens: Profile,
    mp: ModelParams,
    beta: float,
    eta,
    spec: OscIntegralSpec | None = None,
):
    """Oscillatory correction 2i e^{i eta^2} integral_1^{1/beta} of the density.

    dens is the cubic-type density of the profile being mapped (computed
    once by the caller; see nonlinear_density).  The s interval is capped
    where eta*s leaves the grid support, since the density vanishes there.
    """
    _check_beta(beta, strict=True)
    spec = spec if spec is not None else OscIntegralSpec()
    arr = np.asarray(eta, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    a = np.abs(arr)
    if np.any(a == 0.0):
        raise ValueError("the map is evaluated away from eta = 0")
    s_lo = np.ones(arr.size)
    s_hi = np.minimum(1.0 / beta, dens.grid.eta_max / a)
    vals = _osc_sweep(dens, mp.r, arr, s_lo, s_hi, spec)
    out = 2j * np.exp(1j * arr * arr) * vals
    return out[0] if scalar else out


def kernel_integral(
    integrand: Profile,
    mp: ModelParams,
    beta: float,
    eta,
    spec: OscIntegralSpec | None = None,
):
    """2i sign(eta)|eta|^c * integral from beta*eta to eta of
    e^{-i zeta^2} integrand(zeta) |zeta|^{-1/r} dzeta.

    The given profile is integrated as-is (callers pass the density when
    they mean the full map's correction term).  In the scaled variable the
    prefactor cancels: the value equals 2i * integral_beta^1 of
    e^{-i eta^2 s^2} integrand(eta s) s^{-1/r} ds, which is what is
    computed.  Orientation is from beta*eta to eta for either sign of eta,
    giving the exact interval-splitting identity
    K_beta(x) + beta^{-c} K_beta(beta x) = K_{beta^2}(x).
    """
    _check_beta(beta)
    spec = spec if spec is not None else OscIntegralSpec()
    arr = np.asarray(eta, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr == 0.0):
        raise ValueError("the map is evaluated away from eta = 0")
    s_lo = np.full(arr.size, beta)
    s_hi = np.ones(arr.size)
    vals = 2j * _osc_sweep(integrand, mp.r, arr, s_lo, s_hi, spec)
    return vals[0] if scalar else vals


def apply_renorm(
    psi: Profile,
    mp: ModelParams,
    beta: float,
    plan: ConvolutionPlan,
    spec: OscIntegralSpec | None = None,
) -> Profile:
    """Full map at every grid node, repacked with the input's exponents.

    The density is computed once and shared across all nodes.  Near the
    origin the correction term scales as |eta|^{(2r+1) z1 + 2r}, which is
    milder than the |eta|^{z1} of the rescaled copy whenever z1 > -1, so
    the output genuinely lives on the same (z1, z2) envelope.
    """
    _check_beta(beta, strict=True)
    dens = nonlinear_density(psi, mp.r, plan)
    nodes = psi.grid.nodes()
    total = linear_term(psi, mp, beta, nodes)
    total += nonlinear_term(dens, mp, beta, nodes, spec)
    chi = _normalize(nodes, total, psi.z1, psi.z2)
    return Profile(psi.grid, chi, psi.z1, psi.z2)


def parity_project(psi: Profile, parity: str) -> Profile:
    """Even or odd part, (psi(eta) +- psi(-eta)) / 2."""
    if parity == "even":
        return psi.with_chi(0.5 * (psi.chi + psi.chi[::-1]))
    if parity == "odd":
        return psi.with_chi(0.5 * (psi.chi - psi.chi[::-1]))
    raise ValueError("parity must be 'even' or 'odd'")
