"""Monitored functionals, identity residuals, and asymptotic-rate fits.

Everything here is a pure function of sampled data.  The discrete gradient is
the central difference at interior faces; the identity right-hand sides reuse
exactly those faces, so a residual isolates time-discretization and
trace-closure error rather than mixing in a second spatial discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid1D, GridCyl, integrate
from .problem import ProblemSpec

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class FunctionalRecord:
    """One time sample of every monitored functional."""

    t: float
    dt: float
    mass: float
    entropy: float
    lp: dict[float, float]
    linf: float
    phi: float  # first axial moment, integral of x1 c
    a: float
    u: float  # reported cell velocity component, -chi a / |Omega|
    c_left: float
    c_right: float


@dataclass
class RunReport:
    """Outcome classification plus every bound/identity audit of one run."""

    outcome: str  # CONVERGED | BOUNDED | BLOWUP | NUMERICAL_FAILURE
    reason: str = ""
    t_final: float = 0.0
    steps: int = 0
    T_detect: float | None = None
    Tstar_fit: float | None = None
    beta_fit: float | None = None
    lambda_fit: float | None = None
    moment_residual: float | None = None
    entropy_residual: float | None = None
    lp_residual: float | None = None
    entropy_step_increase_max: float | None = None
    mass_drift_max: float = 0.0
    min_c: float = 0.0
    monotone_violation_max: float | None = None
    xc_max_ratio: float | None = None
    x1c_max_ratio: float | None = None
    marginal_increase_max: float | None = None
    xpow_sup_early: float | None = None
    xpow_sup_late: float | None = None
    a_sq_integral: float = 0.0
    half_moment_ok: bool | None = None
    tstar_bound_ratio: float | None = None
    trace_guard_steps: int = 0
    thresholds: dict = field(default_factory=dict)


def entropy_of(grid, c) -> float:
    """Integral of c log c with the integrand extended by 0 at c = 0."""
    c = np.asarray(c)
    s = np.where(c > 1e-300, c * np.log(np.maximum(c, 1e-300)), 0.0)
    return integrate(grid, s)


def lp_norm(grid, c, p: float) -> float:
    return integrate(grid, np.abs(np.asarray(c)) ** p) ** (1.0 / p)


def first_moment(grid, c) -> float:
    """Integral of x1 c by cell-midpoint quadrature."""
    c = np.asarray(c)
    if isinstance(grid, GridCyl):
        return integrate(grid, grid.axial.centers[:, None] * c)
    return integrate(grid, grid.centers * c)


def record(
    state,
    problem: ProblemSpec,
    dt: float,
    p_list=(2.0,),
    traces: tuple[float, float] | None = None,
) -> FunctionalRecord:
    """Sample all monitored functionals of a 1D or cylinder state.

    traces are the (c_left, c_right) boundary values used for the coupling;
    for the cylinder the caller passes cross-section averages.
    """
    grid, c = state.grid, state.c
    if traces is None:
        if isinstance(grid, GridCyl):
            B = grid.ball_volume
            traces = (float(c[0] @ grid.vol) / B, float(c[-1] @ grid.vol) / B)
        else:
            traces = (float(c[0]), float(c[-1]))
    return FunctionalRecord(
        t=state.t,
        dt=dt,
        mass=integrate(grid, c),
        entropy=entropy_of(grid, c),
        lp={p: lp_norm(grid, c, p) for p in p_list},
        linf=float(np.max(np.abs(c))),
        phi=first_moment(grid, c),
        a=state.a,
        u=-problem.chi * state.a / problem.domain.volume,
        c_left=traces[0],
        c_right=traces[1],
    )


def moment_residual(records, M: float, m: float, eps: float = 1e-10) -> float:
    """Max relative defect of the m = 1 moment identity phi' = (M - 1) a
    over consecutive record pairs, with midpoint-averaged a."""
    if m != 1.0:
        raise ValueError("the closed moment identity holds only for m = 1")
    if len(records) < 2:
        raise ValueError("need at least two consecutive records")
    worst = 0.0
    for r0, r1 in zip(records[:-1], records[1:]):
        dt = r1.t - r0.t
        if dt <= 0:
            continue
        abar = 0.5 * (r0.a + r1.a)
        rhs = (M - 1.0) * abar
        res = abs((r1.phi - r0.phi) / dt - rhs) / max(abs(rhs), eps)
        worst = max(worst, res)
    return worst


def _face_means(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c[:-1] + c[1:])


def dissipation_residuals(grid: Grid1D, fields, a_values, p: float, m: float):
    """Relative defects of the entropy and L^p dissipation identities on a
    window of consecutive 1D snapshots.

    fields is a list of (t, c) pairs and a_values the coupling at those times.
    For each interval the discrete d/dt of the functional is compared with the
    identity right-hand side evaluated on the midpoint state:

        d/dt int c log c = -int |grad c|^2 / c + a * int dc/dx
        d/dt int c^p     = p(p-1) [ -int c^(p-2) |grad c|^2 + a int c^(p-1) dc/dx ]

    Returns (entropy_res, lp_res, entropy_increase_max); the last entry is the
    largest per-interval entropy increase, the sign check of the m = 1
    dissipation inequality for M <= 1.
    """
    if len(fields) < 2:
        raise ValueError("need at least two snapshots")
    d = grid.dist
    ent_res = lp_res = 0.0
    ent_inc = -math.inf
    for (t0, c0), (t1, c1), a0, a1 in zip(fields[:-1], fields[1:], a_values[:-1], a_values[1:]):
        dt = t1 - t0
        if dt <= 0:
            continue
        cm = 0.5 * (np.asarray(c0) + np.asarray(c1))
        am = 0.5 * (a0 + a1)
        dc = np.diff(cm)
        grad = dc / d
        fm = _face_means(cm)
        fm = np.maximum(fm, 1e-300)
        flow = float(np.sum(dc))  # same faces as grad: int dc/dx

        dS = (entropy_of(grid, c1) - entropy_of(grid, c0)) / dt
        rhs_S = -float(np.sum(d * grad**2 / fm)) + am * flow
        ent_res = max(ent_res, abs(dS - rhs_S) / max(abs(rhs_S), 1e-10))
        ent_inc = max(ent_inc, entropy_of(grid, c1) - entropy_of(grid, c0))

        dP = (integrate(grid, np.asarray(c1) ** p) - integrate(grid, np.asarray(c0) ** p)) / dt
        rhs_P = p * (p - 1.0) * (
            -float(np.sum(d * grad**2 * fm ** (p - 2.0)))
            + am * float(np.sum(fm ** (p - 1.0) * dc))
        )
        lp_res = max(lp_res, abs(dP - rhs_P) / max(abs(rhs_P), 1e-10))
    return ent_res, lp_res, ent_inc


def fit_blowup(records, min_samples: int = 20, decades: float = 2.0):
    """Fit linf ~ (Tstar - t)^(-beta) on the trailing records.

    Least squares of log linf against log(Tstar - t), with Tstar itself
    optimized by golden-section search on the fit residual.  Returns
    (Tstar_fit, beta_fit), or None when the tail spans fewer than `decades`
    decades of linf or fewer than min_samples samples.
    """
    ts = np.array([r.t for r in records])
    linf = np.array([r.linf for r in records])
    if len(ts) < min_samples:
        return None
    top = linf.max()
    if linf.min() > top / 10.0**decades:
        return None  # the run never spanned the required dynamic range
    idx = np.nonzero(linf >= top / 10.0**decades)[0]
    ts, linf = ts[idx], linf[idx]
    if len(ts) < min_samples:
        return None
    ys = np.log(linf)

    def sse(tstar: float):
        x = np.log(tstar - ts)
        xm, ym = x.mean(), ys.mean()
        vx = float(np.sum((x - xm) ** 2))
        slope = float(np.sum((x - xm) * (ys - ym))) / vx
        r = ys - ym - slope * (x - xm)
        return float(r @ r), -slope

    t_last = float(ts[-1])
    span = t_last - float(ts[0])
    lo = t_last + 1e-14 * max(1.0, abs(t_last))
    hi = t_last + 2.0 * span
    c1 = hi - _GOLDEN * (hi - lo)
    c2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = sse(c1)[0], sse(c2)[0]
    for _ in range(300):
        if f1 < f2:
            hi, c2, f2 = c2, c1, f1
            c1 = hi - _GOLDEN * (hi - lo)
            f1 = sse(c1)[0]
        else:
            lo, c1, f1 = c1, c2, f2
            c2 = lo + _GOLDEN * (hi - lo)
            f2 = sse(c2)[0]
        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
            break
    tstar = 0.5 * (lo + hi)
    return tstar, sse(tstar)[1]


def fit_decay(records, mean: float):
    """Exponential decay rate of the sup-side deviation linf - mean.

    Least-squares slope of log(linf - mean) against t over the given records;
    returns lambda > 0 for decay, or None if fewer than two usable samples.
    """
    ts, ys = [], []
    for r in records:
        dev = r.linf - mean
        if dev > 0.0:
            ts.append(r.t)
            ys.append(math.log(dev))
    if len(ts) < 2:
        return None
    ts = np.array(ts)
    ys = np.array(ys)
    tm = ts.mean()
    vx = float(np.sum((ts - tm) ** 2))
    if vx == 0.0:
        return None
    slope = float(np.sum((ts - tm) * (ys - ys.mean()))) / vx
    return -slope


def decay_tail(records, mean: float, skip_fraction: float = 0.5):
    """Trailing slice of records on which linf - mean is positive and
    nonincreasing, skipping the leading transient."""
    start = int(len(records) * skip_fraction)
    tail = records[start:]
    out = []
    prev = 0.0  # deviations grow while walking backward along a decaying tail
    for r in reversed(tail):
        dev = r.linf - mean
        if dev <= 0.0 or dev < prev:
            break
        out.append(r)
        prev = dev
    out.reverse()
    return out
