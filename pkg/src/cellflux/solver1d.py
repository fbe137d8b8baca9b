"""Conservative IMEX finite-volume solver for c_t = (c_x - a(t) c)_x on (0, L).

Layout of one step:

  * the nonlocal coupling a = f(c_right) - f(c_left) is resolved first by a
    damped Picard iteration on the boundary traces,
  * the advective part of the interface flux, J = -a c_upwind, is explicit
    first-order upwind (upwind side picked by the sign of a),
  * the diffusive part (c_{i+1} - c_i)/dist is backward Euler through one
    tridiagonal solve,
  * both boundary interface fluxes are identically zero.  That, and not the
    Robin traces, is what conserves mass: the committed update is assembled
    in flux form, so the telescoping sum is exact to roundoff.

Robin boundary traces solve the one-sided closure c_x = a c and feed only the
computation of a; they never enter the flux.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded

from .grid import Grid1D
from .problem import NonlinearitySpec, ProblemSpec, eval_f


class StepRejected(RuntimeError):
    """The attempted step cannot be committed; the caller should halve dt."""


@dataclass
class StepOptions:
    coupling_mode: str = "picard"  # picard | lagged
    trace_mode: str = "robin"  # robin | cell
    picard_tol: float = 1e-12
    picard_max_iters: int = 100
    cfl: float = 0.4
    dt_max: float = 1e-2
    dt_min: float = 1e-13
    blowup_linf_threshold: float = 1e8
    c_bu: float = 0.1  # coefficient of the blow-up clamp c_bu/(1 + linf^2m)

    def __post_init__(self):
        if self.coupling_mode not in ("picard", "lagged"):
            raise ValueError(f"unknown coupling_mode {self.coupling_mode!r}")
        if self.trace_mode not in ("robin", "cell"):
            raise ValueError(f"unknown trace_mode {self.trace_mode!r}")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if not self.dt_min < self.dt_max:
            raise ValueError("dt_min must be smaller than dt_max")


@dataclass
class State:
    """Cell-averaged concentration with the committed coupling value."""

    grid: Grid1D
    c: np.ndarray
    t: float = 0.0
    a: float = 0.0
    step_count: int = 0
    trace_guarded: bool = False  # Robin closure fell back to cell mode this step


def make_state(grid: Grid1D, c0) -> State:
    c = np.array(c0, dtype=float)
    if c.shape != (grid.N,):
        raise ValueError(f"initial data shape {c.shape} does not match grid ({grid.N},)")
    return State(grid=grid, c=c)


def _trace_left(c0: float, h0: float, a: float, robin: bool) -> float:
    # one-sided closure (c_1 - c_left)/(h_1/2) = a c_left
    return c0 / (1.0 + 0.5 * a * h0) if robin else c0


def _trace_right(cN: float, hN: float, a: float, robin: bool) -> float:
    return cN / (1.0 - 0.5 * a * hN) if robin else cN


def reconstruct_traces(state: State, a_guess: float, opts: StepOptions):
    """Boundary values (c_left, c_right, guarded) for the coupling integral.

    In robin mode each end solves c_x = a c one-sidedly; if |a| h/2 >= 0.5 at
    an end the closure is unresolvable there and that end falls back to the
    cell value (guarded = True).
    """
    c = state.c
    h = state.grid.widths
    robin = opts.trace_mode == "robin"
    ok_l = robin and abs(a_guess) * h[0] < 1.0
    ok_r = robin and abs(a_guess) * h[-1] < 1.0
    cl = _trace_left(float(c[0]), float(h[0]), a_guess, ok_l)
    cr = _trace_right(float(c[-1]), float(h[-1]), a_guess, ok_r)
    guarded = robin and not (ok_l and ok_r)
    return cl, cr, guarded


def _f_at_trace(nl: NonlinearitySpec, s: float) -> float:
    # cells may carry roundoff-negative values; f kinds restricted to s >= 0
    # are evaluated at the nonnegative part of the trace
    if nl.kind != "signed_power" and s < 0.0:
        s = 0.0
    return eval_f(nl, s)


def compute_a(problem: ProblemSpec, state: State, opts: StepOptions) -> float:
    """Self-consistent coupling a = f(c_right(a)) - f(c_left(a)).

    picard mode runs the damped fixed-point iteration a <- a/2 + g(a)/2 from
    the committed value; once an iterate trips the Robin guard at an end, that
    end stays in cell mode for the rest of the iteration (the closure has no
    solution beyond the guard and the iteration would otherwise cycle).
    lagged mode is a single evaluation at a_guess = state.a.

    Raises StepRejected if the iteration does not reach picard_tol.
    """
    nl = problem.nonlinearity
    c0 = float(state.c[0])
    cN = float(state.c[-1])
    h0 = float(state.grid.widths[0])
    hN = float(state.grid.widths[-1])
    robin = opts.trace_mode == "robin"

    if opts.coupling_mode == "lagged":
        cl, cr, guarded = reconstruct_traces(state, state.a, opts)
        state.trace_guarded = guarded
        return _f_at_trace(nl, cr) - _f_at_trace(nl, cl)

    a = state.a
    robin_l = robin_r = robin
    for _ in range(opts.picard_max_iters):
        if robin_l and abs(a) * h0 >= 1.0:
            robin_l = False
        if robin_r and abs(a) * hN >= 1.0:
            robin_r = False
        g = _f_at_trace(nl, _trace_right(cN, hN, a, robin_r)) - _f_at_trace(
            nl, _trace_left(c0, h0, a, robin_l)
        )
        a_new = 0.5 * (a + g)
        if abs(a_new - a) <= opts.picard_tol * max(1.0, abs(a_new)):
            state.trace_guarded = robin and not (robin_l and robin_r)
            return a_new
        a = a_new
    raise StepRejected(f"picard iteration on a did not converge (last a = {a:.6g})")


def step(problem: ProblemSpec, state: State, dt: float, opts: StepOptions) -> State:
    """One IMEX update.  Rejects (StepRejected) on Picard failure, on an
    advective CFL violation dt |a| > h_min, or on a degenerate solve."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = state.grid
    h = grid.widths
    d = grid.dist
    a = compute_a(problem, state, opts)
    if dt * abs(a) > grid.h_min:
        raise StepRejected(f"advective CFL violated: dt*|a| = {dt * abs(a):.3g} > h_min")

    c = state.c
    # explicit upwind advection, interior faces only; J = -a c_up
    J = -a * (c[:-1] if a >= 0.0 else c[1:])
    cstar = c.copy()
    cstar[:-1] += (dt / h[:-1]) * J
    cstar[1:] -= (dt / h[1:]) * J

    # backward Euler diffusion in increment form, (I - dt D) delta = dt D c*,
    # so steady profiles (zero flux differences) stay bitwise fixed points
    w = dt / d
    diag = np.ones(grid.N)
    upper = np.zeros(grid.N)
    lower = np.zeros(grid.N)
    upper[1:] = -w / h[:-1]
    lower[:-1] = -w / h[1:]
    diag[:-1] += w / h[:-1]
    diag[1:] += w / h[1:]
    G0 = (cstar[1:] - cstar[:-1]) / d
    rhs = np.zeros(grid.N)
    rhs[:-1] += (dt / h[:-1]) * G0
    rhs[1:] -= (dt / h[1:]) * G0
    delta = solve_banded((1, 1), np.vstack([upper, diag, lower]), rhs,
                         overwrite_ab=True, check_finite=False)
    if not np.all(np.isfinite(delta)):
        raise StepRejected("tridiagonal solve produced non-finite values")

    # commit in flux form so mass telescopes exactly
    G = (cstar[1:] + delta[1:] - cstar[:-1] - delta[:-1]) / d
    cstar[:-1] += (dt / h[:-1]) * G
    cstar[1:] -= (dt / h[1:]) * G

    return replace(
        state,
        c=cstar,
        t=state.t + dt,
        a=a,
        step_count=state.step_count + 1,
        trace_guarded=state.trace_guarded,
    )


def adapt_dt(problem: ProblemSpec, state: State, opts: StepOptions) -> float:
    """dt = min(dt_max, cfl h_min/|a|, c_bu/(1 + linf^2m)).

    The last clamp tracks the blow-up timescale (T*-t) ~ linf^(-2m), so steps
    stay proportional to the remaining life of the solution.
    """
    linf = float(np.max(np.abs(state.c)))
    try:
        pen = linf ** (2.0 * problem.m)
    except OverflowError:
        pen = math.inf
    return min(
        opts.dt_max,
        opts.cfl * state.grid.h_min / max(abs(state.a), 1e-12),
        opts.c_bu / (1.0 + pen),
    )
