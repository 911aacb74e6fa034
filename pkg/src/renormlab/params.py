"""Model and function-space parameters, and the admissibility checks tying them.

The exponent chain is rigid: the similarity exponent c follows from the
nonlinearity order alone, the Lebesgue index sits at its critical value, and
the envelope exponents must land in an open window whose width shrinks like
1/r^2.  Everything here is a pure function of immutable inputs.

Every cross-field inequality is evaluated by validate_space_params with its
numeric margin, so a failing configuration names exactly the constraint it
violates instead of surfacing later as a divergent integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .special import gamma_upper

__all__ = [
    "ModelParams",
    "SpaceParams",
    "CheckResult",
    "ValidationReport",
    "derive_exponent_c",
    "critical_indices",
    "exponent_window",
    "validate_space_params",
    "default_params",
]


def derive_exponent_c(r: int) -> float:
    """Similarity exponent for the |u|^{2r} u nonlinearity."""
    if not isinstance(r, int) or isinstance(r, bool) or r < 1:
        raise ValueError("nonlinearity order r must be an integer >= 1")
    return (1 - r) / r


def critical_indices(r: int) -> tuple[float, float]:
    """Critical Lebesgue index and its Hoelder conjugate: ((2r+2)/(2r+1), 2r+2)."""
    if not isinstance(r, int) or isinstance(r, bool) or r < 1:
        raise ValueError("nonlinearity order r must be an integer >= 1")
    return (2 * r + 2) / (2 * r + 1), float(2 * r + 2)


def exponent_window(r: int) -> tuple[float, float]:
    """Open interval of admissible small-eta exponents at the critical index.

    Lower end: membership of the profile in the weighted space near the
    origin.  Upper end: the strict envelope gain of the nonlinear term.  The
    width is 1/((2r+1)(2r+2)), positive for every r.
    """
    lo = -(2 * r + 1) / (2 * r + 2)
    hi = -2 * r / (2 * r + 1)
    return lo, hi


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity order and blow-up time; the exponent c is derived."""

    r: int
    T: float = 1.0
    c: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.r, int) or isinstance(self.r, bool) or self.r < 1:
            raise ValueError("nonlinearity order r must be an integer >= 1")
        if not self.T > 0:
            raise ValueError("blow-up time T must be positive")
        object.__setattr__(self, "c", derive_exponent_c(self.r))


@dataclass(frozen=True)
class SpaceParams:
    """Weighted-space and envelope-class parameters.

    gamma1 and gamma2 are derived (z1 - theta and z2 + 1); type-level
    positivity and range constraints are enforced here, while the coupled
    inequality chain lives in validate_space_params.
    """

    p: float
    nu: float
    z1: float
    z2: float
    D: float
    A: float
    theta: float
    sigma: float
    mu: float
    beta0: float = 0.5
    delta0: float = 0.1
    gamma1: float = field(init=False)
    gamma2: float = field(init=False)

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("Lebesgue index p must exceed 1")
        if not 0 < self.theta <= 1:
            raise ValueError("Hoelder exponent theta must lie in (0, 1]")
        for name in ("D", "A", "mu", "delta0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.beta0 < 1:
            raise ValueError("beta0 must lie in (0, 1)")
        for f in fields(self):
            if f.init and not math.isfinite(getattr(self, f.name)):
                raise ValueError(f"{f.name} must be finite")
        object.__setattr__(self, "gamma1", self.z1 - self.theta)
        object.__setattr__(self, "gamma2", self.z2 + 1.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "margin": self.margin}


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    checks: tuple[CheckResult, ...]
    values: dict

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [c.as_dict() for c in self.checks],
            "values": dict(self.values),
        }


def validate_space_params(mp: ModelParams, sp: SpaceParams) -> ValidationReport:
    """Evaluate every admissibility inequality with its strict margin.

    A positive margin means the strict inequality holds with room to spare;
    zero or negative flags the violation.  The report never raises: callers
    that need a hard gate refuse reports with ok = False.
    """
    r = mp.r
    space_floor = max(-sp.nu - 1.0 / sp.p, -1.0)  # admissible exponents exceed this
    space_ceil = min(-sp.nu - 1.0 / sp.p, -1.0)
    checks = [
        CheckResult("z1_upper", *_strict_lt(sp.z1, -2 * r / (2 * r + 1))),
        CheckResult("z1_lower", *_strict_lt(space_floor, sp.z1)),
        CheckResult("z2_upper", *_strict_lt(sp.z2, space_ceil)),
        CheckResult("sigma_upper", *_strict_lt(sp.sigma, -1.0 / r)),
        CheckResult("gamma1_lower", *_strict_lt(space_floor, sp.gamma1)),
        CheckResult("gamma2_upper", *_strict_lt(sp.gamma2, space_ceil)),
        # preconditions of the convolution-gain machinery
        CheckResult("z1_selfconv", *_strict_lt(sp.z1, -(2 * r - 1) / (2 * r))),
        CheckResult(
            "density_exponent_z1",
            *_strict_lt(2 * r * sp.z1 + sp.z1 + 2 * r, 0.0),
        ),
        CheckResult(
            "density_exponent_gamma1",
            *_strict_lt(2 * r * sp.z1 + sp.gamma1 + 2 * r, 0.0),
        ),
    ]
    values = {
        "r": r,
        "c": mp.c,
        "space_floor": space_floor,
        "space_ceil": space_ceil,
        "gamma1": sp.gamma1,
        "gamma2": sp.gamma2,
        "window_lo": exponent_window(r)[0],
        "window_hi": exponent_window(r)[1],
    }
    return ValidationReport(
        ok=all(c.passed for c in checks), checks=tuple(checks), values=values
    )


def _strict_lt(lhs: float, rhs: float) -> tuple[bool, float]:
    margin = rhs - lhs
    return margin > 0.0, margin


# Envelope constant D and modulus constant A per nonlinearity order, frozen
# from the invariant search at beta = 0.9 on the default grid: D is the
# bisection result rounded down (it shrinks with the order, 0.148, 0.078,
# 0.055, 0.043 measured), A is four times the worst fitted modulus constant
# over the searched family and its renormalized images.  Orders past the
# table reuse its last row; they are exercised only through the exponent
# chain, which carries no D or A.
_ENVELOPE_TABLE: dict[int, tuple[float, float]] = {
    1: (0.125, 0.54),
    2: (0.0625, 0.31),
    3: (0.045, 0.24),
    4: (0.0375, 0.21),
}


def default_params(r: int) -> tuple[ModelParams, SpaceParams]:
    """Consistent parameter set at the critical index, midpoint exponents.

    z1 sits at the midpoint of its admissible window and theta takes a
    quarter of the window width, which keeps gamma1 = z1 - theta strictly
    inside the window.  z2 = -2.25 leaves the large-eta checks a margin of
    1/4.  mu is half the oscillation functional of the widest admissible
    quadratic-phase ansatz, so the canonical half-amplitude ansatz attains
    the floor exactly.
    """
    mp = ModelParams(r=r, T=1.0)
    p, _ = critical_indices(r)
    lo, hi = exponent_window(r)
    z1 = 0.5 * (lo + hi)
    gap = hi - lo
    theta = gap / 4.0
    z2 = -2.25
    sigma = -1.0 / r - 0.25
    D, A = _ENVELOPE_TABLE.get(r, _ENVELOPE_TABLE[max(_ENVELOPE_TABLE)])
    mu = D * gamma_upper(z2 + sigma + 1.0, 1.0)
    sp = SpaceParams(
        p=p,
        nu=0.0,
        z1=z1,
        z2=z2,
        D=D,
        A=A,
        theta=theta,
        sigma=sigma,
        mu=mu,
        beta0=0.5,
        delta0=0.1,
    )
    report = validate_space_params(mp, sp)
    if not report.ok:
        raise ValueError(f"default parameter chain failed: {report.failures}")
    return mp, sp
