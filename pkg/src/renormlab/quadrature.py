"""Panel quadrature primitives: Gauss rules, singular endpoint panels,
and oscillation-resolving breakpoint builders.

Everything here is deterministic and allocation-light.  Integration is
always composite: callers assemble a sorted breakpoint array, optionally
refined by the phase-budget helpers, and reduce with a fixed panel order
so results do not depend on evaluation batching.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "gauss_legendre",
    "panel_points",
    "integrate_panels",
    "left_singular_panel",
    "right_singular_panel",
    "singular_panel_points",
    "quadratic_phase_points",
    "pair_phase_points",
    "merge_breakpoints",
    "refine_geometric",
]


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]; cached and read-only."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=256)
def _jacobi_rule(order: int, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    # weight (1 + t)^gamma on [-1, 1]
    x, w = roots_jacobi(order, 0.0, gamma)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_points(breaks: np.ndarray, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Flatten composite Gauss-Legendre points for the given breakpoints.

    Returns (points, weights), both of shape (order * (len(breaks) - 1),),
    ordered panel by panel.
    """
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2:
        raise ValueError("need at least two breakpoints")
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(breaks)
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def integrate_panels(f, breaks: np.ndarray, order: int = 8):
    """Composite Gauss-Legendre integral of a vectorized callable."""
    pts, wts = panel_points(breaks, order)
    return np.sum(f(pts) * wts)


def left_singular_panel(f_smooth, a: float, b: float, gamma: float, order: int = 8):
    """Integrate f_smooth(x) * (x - a)^gamma over [a, b] with gamma > -1.

    The power factor is handled by a Gauss-Jacobi rule; ``f_smooth`` must be
    the regular part only.
    """
    if not b > a:
        raise ValueError("empty panel")
    if gamma <= -1.0:
        raise ValueError("non-integrable endpoint power")
    t, w = _jacobi_rule(order, gamma)
    h = 0.5 * (b - a)
    x = a + h * (1.0 + t)
    return h ** (gamma + 1.0) * np.sum(f_smooth(x) * w)


def right_singular_panel(f_smooth, a: float, b: float, gamma: float, order: int = 8):
    """Integrate f_smooth(x) * (b - x)^gamma over [a, b] with gamma > -1."""
    if not b > a:
        raise ValueError("empty panel")
    if gamma <= -1.0:
        raise ValueError("non-integrable endpoint power")
    t, w = _jacobi_rule(order, gamma)
    h = 0.5 * (b - a)
    # mirror t -> -t so the weight sits at x = b
    x = b - h * (1.0 + t)
    return h ** (gamma + 1.0) * np.sum(f_smooth(x) * w)


def singular_panel_points(
    a: float, b: float, gamma: float, order: int, side: str
) -> tuple[np.ndarray, np.ndarray]:
    """Points and weights with the endpoint power folded in.

    sum(w * F(x)) equals the integral of |x - e|^gamma F(x) over [a, b],
    where e is the panel edge named by ``side`` ("left" for a, "right"
    for b).  Lets callers batch singular panels together with plain ones.
    """
    if not b > a:
        raise ValueError("empty panel")
    if gamma <= -1.0:
        raise ValueError("non-integrable endpoint power")
    t, w = _jacobi_rule(order, gamma)
    h = 0.5 * (b - a)
    x = a + h * (1.0 + t) if side == "left" else b - h * (1.0 + t)
    return x, h ** (gamma + 1.0) * w


def quadratic_phase_points(lo: float, hi: float, omega: float, budget: float) -> np.ndarray:
    """Interior breakpoints keeping |omega| * (t^2 advance) <= budget per panel.

    Valid for 0 <= lo < hi.  Returns possibly-empty interior points only.
    """
    if not (hi > lo >= 0.0):
        raise ValueError("need 0 <= lo < hi")
    rate = abs(omega)
    if rate == 0.0:
        return np.empty(0)
    total = rate * (hi * hi - lo * lo)
    k = int(np.ceil(total / budget))
    if k <= 1:
        return np.empty(0)
    steps = budget / rate * np.arange(1, k)
    pts = np.sqrt(lo * lo + steps)
    return pts[pts < hi]


def _pair_phase_value(y, u: float):
    """Monotone phase-variation primitive V with V' = 2|y| + 2|y - u|."""
    return np.sign(y) * y * y + np.sign(y - u) * (y - u) ** 2


def pair_phase_points(lo: float, hi: float, u: float, budget: float) -> np.ndarray:
    """Interior breakpoints resolving worst-case phases exp(+-i y^2) exp(+-i (y-u)^2).

    Bounds the total phase variation 2|y| + 2|y - u| per panel by ``budget``.
    Returns interior points of (lo, hi), excluding the kink locations 0 and u
    (callers are expected to supply those as knots already).
    """
    if not hi > lo:
        raise ValueError("empty interval")
    knots = np.unique(np.clip([lo, 0.0, u, hi], lo, hi))
    v_knots = _pair_phase_value(knots, u)
    total = v_knots[-1] - v_knots[0]
    count = int(np.floor(total / budget))
    if count < 1:
        return np.empty(0)
    targets = v_knots[0] + budget * np.arange(1, count + 1)
    targets = targets[targets < v_knots[-1] - 1e-12 * max(1.0, abs(total))]
    out = np.empty(0)
    for a, b, va, vb in zip(knots[:-1], knots[1:], v_knots[:-1], v_knots[1:]):
        sel = targets[(targets > va) & (targets < vb)]
        if sel.size == 0 or b <= a:
            continue
        m = 0.5 * (a + b)
        s1 = 1.0 if m >= 0 else -1.0
        s2 = 1.0 if m >= u else -1.0
        big_a = s1 + s2
        big_b = -2.0 * s2 * u
        rhs = sel - va + big_a * a * a + big_b * a
        if big_a == 0.0:
            ys = rhs / big_b
        else:
            disc = np.sqrt(np.maximum(big_b * big_b + 4.0 * big_a * rhs, 0.0))
            y_plus = (-big_b + disc) / (2.0 * big_a)
            y_minus = (-big_b - disc) / (2.0 * big_a)
            in_plus = (y_plus >= a - 1e-12) & (y_plus <= b + 1e-12)
            ys = np.where(in_plus, y_plus, y_minus)
        out = np.concatenate([out, np.clip(ys, a, b)])
    return out


def refine_geometric(breaks: np.ndarray, ratio: float = 1.4, rounds: int = 3) -> np.ndarray:
    """Insert geometric midpoints into panels with endpoint ratio above ``ratio``.

    Fixed-order Gauss rules lose accuracy on power-law integrands when a
    panel spans too many octaves; capping the ratio restores near-machine
    results without touching the already-narrow panels.
    """
    out = np.asarray(breaks, dtype=float)
    for _ in range(rounds):
        a, b = out[:-1], out[1:]
        wide = (a > 0) & (b > a * ratio)
        if not np.any(wide):
            break
        out = np.unique(np.concatenate([out, np.sqrt(a[wide] * b[wide])]))
    return out


def merge_breakpoints(lo: float, hi: float, *point_sets) -> np.ndarray:
    """Sorted, de-duplicated breakpoints spanning [lo, hi]."""
    if not hi > lo:
        raise ValueError("empty interval")
    parts = [np.asarray([lo, hi], dtype=float)]
    for pts in point_sets:
        arr = np.asarray(pts, dtype=float).ravel()
        if arr.size:
            arr = arr[(arr > lo) & (arr < hi)]
            parts.append(arr)
    merged = np.unique(np.concatenate(parts))
    # drop panels thinner than float spacing of the interval
    keep = np.diff(merged) > 1e-15 * max(1.0, abs(lo), abs(hi))
    return np.concatenate([merged[:1], merged[1:][keep]])
