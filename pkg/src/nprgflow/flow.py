"""Local-potential flow with Ohmic dissipation, integrated by the method of lines.

In dimensionless units the flow of the Wilsonian potential reads

    dV/dt = (s / 2 pi) * log(1 + etabar / s + V''(q) / s**2),    s = cutbar * exp(-t)

with t = log(cutbar / s) the flow time. The q-derivative is discretized with
4th-order central differences on the even half grid and the resulting ODE
system is advanced with the classical 4-stage Runge-Kutta scheme.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import integrate
from scipy.linalg import solve_banded

from .errors import InvalidParameterError, SpinodalReached
from .model import DimensionlessParams, PotentialGrid, bare_potential

TWO_PI = 2.0 * math.pi

# |eigenvalue| bound of the 4th-order second-difference operator, times h^2.
STENCIL_RADIUS = 16.0 / 3.0
# Fraction of the RK4 real-axis stability limit (~2.785) actually used.
RK4_STABLE = 2.0

_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
# One-sided 4th-order weights for the two outermost points, ordered from the edge inward.
_EDGE_LAST = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0
_EDGE_NEXT = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0

STOP_CONVERGED = "converged"
STOP_T_MAX = "reached_t_max"
STOP_SPINODAL = "spinodal"


@dataclass(frozen=True)
class FlowSettings:
    """Discretization and stopping controls for :func:`run_flow`.

    ``dt`` is the nominal flow-time step. Where the flow is locally stiff the
    integrator splits a step into stability-limited sub-steps; the result is
    still a deterministic function of the inputs.
    """

    t_max: float = 60.0
    dt: float = 1.0e-3
    stencil_order: int = 4
    spinodal_eps: float = 1.0e-8
    convergence_tol: float = 1.0e-10
    convergence_window: float = 1.0
    max_substeps: int = 16
    trace_every: float = 0.05

    def __post_init__(self):
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise InvalidParameterError("t_max", f"must be > 0, got {self.t_max!r}")
        if not (0 < self.dt < 0.1):
            raise InvalidParameterError("dt", f"must lie in (0, 0.1), got {self.dt!r}")
        if self.stencil_order != 4:
            raise InvalidParameterError("stencil_order", "only the 4th-order stencil is implemented")
        if not self.spinodal_eps > 0:
            raise InvalidParameterError("spinodal_eps", f"must be > 0, got {self.spinodal_eps!r}")
        if not self.convergence_tol > 0:
            raise InvalidParameterError("convergence_tol", f"must be > 0, got {self.convergence_tol!r}")
        if not self.convergence_window > 0:
            raise InvalidParameterError("convergence_window", "must be > 0")
        if not self.max_substeps >= 1:
            raise InvalidParameterError("max_substeps", "must be >= 1")
        if not self.trace_every > 0:
            raise InvalidParameterError("trace_every", "must be > 0")


@dataclass(frozen=True, eq=False)
class FlowOutcome:
    final: PotentialGrid
    final_scale: float
    stop_reason: str
    min_log_argument: float
    trace_scale: np.ndarray = field(repr=False)
    trace_curvature: np.ndarray = field(repr=False)
    t_final: float = 0.0
    n_steps: int = 0
    n_implicit: int = 0
    vacuum_energy: float = 0.0
    spinodal_q: float | None = None

    @property
    def converged(self):
        return self.stop_reason == STOP_CONVERGED

    @property
    def curvature_at_origin(self):
        return origin_curvature(self.final.values, self.final.spacing)


def curvature_field(grid):
    """Second q-derivative of an even potential with 4th-order accuracy.

    Accepts a :class:`PotentialGrid` or a ``(values, spacing)`` pair.
    """
    if isinstance(grid, PotentialGrid):
        return _second_derivative(grid.values, grid.spacing)
    values, spacing = grid
    return _second_derivative(np.asarray(values, dtype=float), float(spacing))


def _second_derivative(v, h):
    n = v.size
    out = np.empty(n)
    # ghost points from the even extension V(-q) = V(q)
    ext = np.concatenate((v[2:0:-1], v))
    out[: n - 2] = np.convolve(ext, _INTERIOR, "valid")
    tail = v[: n - 7 : -1]
    out[n - 1] = _EDGE_LAST @ tail
    out[n - 2] = _EDGE_NEXT @ tail
    out *= 1.0 / (h * h)
    return out


def origin_curvature(values, spacing):
    v = values
    return (-2.0 * v[2] + 32.0 * v[1] - 30.0 * v[0]) / (12.0 * spacing * spacing)


def log_argument(scale, etabar, curvature):
    return 1.0 + etabar / scale + np.asarray(curvature) / (scale * scale)


def rhs(scale, etabar, curvature, spinodal_eps=1.0e-8):
    """Flow rate dV/dt at each point, given the local curvature V''."""
    if not scale > 0:
        raise InvalidParameterError("scale", f"must be > 0, got {scale!r}")
    arg = log_argument(scale, etabar, curvature)
    lowest = np.min(arg)
    if not lowest > spinodal_eps:
        raise SpinodalReached(lowest, scale=scale)
    rate = scale / TWO_PI * np.log(arg)
    return rate if np.ndim(rate) else float(rate)


@njit(cache=True)
def _d2(v, i, n):
    """12 h^2 V''(q_i): even ghosts at the origin, one-sided at the far edge."""
    if i < n - 2:
        return -v[abs(i - 2)] + 16.0 * v[abs(i - 1)] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]
    if i == n - 2:
        return (10.0 * v[n - 1] - 15.0 * v[n - 2] - 4.0 * v[n - 3]
                + 14.0 * v[n - 4] - 6.0 * v[n - 5] + v[n - 6])
    return (45.0 * v[n - 1] - 154.0 * v[n - 2] + 214.0 * v[n - 3]
            - 156.0 * v[n - 4] + 61.0 * v[n - 5] - 10.0 * v[n - 6])


@njit(cache=True)
def _rate(v, s, etabar, hbar, h, eps, normalized, out):
    """Fill ``out`` with dV/dt and return (lowest monitored argument, its index).

    The monitored argument is A = 1 + etabar/s + V''/s^2, divided by 1 + etabar/s
    when ``normalized``. Returns early, with ``out`` partially written, once it
    falls to ``eps``.
    """
    n = v.size
    inv = 1.0 / (12.0 * h * h * s * s)
    base = 1.0 + etabar / s
    norm = base if normalized else 1.0
    pref = hbar * s / TWO_PI
    lowest = np.inf
    imin = 0
    for i in range(n):
        arg = base + _d2(v, i, n) * inv
        r = arg / norm
        if r < lowest:
            lowest = r
            imin = i
        if not r > eps:
            return r, i
        out[i] = pref * np.log(arg)
    return lowest, imin


@njit(cache=True)
def _rate_extended(v, s, etabar, hbar, h, eps, out, diffusion):
    """Like :func:`_rate` (normalized) but never stops.

    Below the floor A_f = eps (1 + etabar/s) the logarithm is continued linearly,
    which keeps implicit trial states well defined. ``diffusion`` receives
    d(rate)/d(V'') at every point.
    """
    n = v.size
    inv = 1.0 / (12.0 * h * h * s * s)
    base = 1.0 + etabar / s
    floor = eps * base
    pref = hbar * s / TWO_PI
    lowest = np.inf
    imin = 0
    for i in range(n):
        arg = base + _d2(v, i, n) * inv
        if arg / base < lowest:
            lowest = arg / base
            imin = i
        if arg > floor:
            out[i] = pref * np.log(arg)
            diffusion[i] = hbar / (TWO_PI * s * arg)
        else:
            out[i] = pref * (np.log(floor) + (arg - floor) / floor)
            diffusion[i] = hbar / (TWO_PI * s * floor)
    return lowest, imin


@njit(cache=True)
def _advance(v, t, t_end, h, cutbar, etabar, hbar, eps, normalized, limit, min_sub):
    """Classical RK4 from t to t_end, updating ``v`` in place.

    With ``limit`` set, steps are cut to the explicit stability bound. Returns
    (status, t_reached, n_sub, min_arg, index, scale):

    * 0 -- reached t_end;
    * 1 -- the current state sits at the spinodal floor;
    * 3 -- explicit stepping would need a sub-step below ``min_sub`` (or a stage
      left the admissible region); ``v`` holds the last accepted state.
    """
    n = v.size
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    w = np.empty(n)
    min_arg = np.inf
    n_sub = 0
    span = t_end - t
    while t < t_end:
        s = cutbar * np.exp(-t)
        low, i = _rate(v, s, etabar, hbar, h, eps, normalized, k1)
        min_arg = min(min_arg, low)
        if not low > eps:
            return 1, t, n_sub, min_arg, i, s
        dt = t_end - t
        if limit and hbar > 0.0:
            # d(rate)/d(V'') = hbar / (2 pi s A); spectral radius of the stencil 16/(3 h^2)
            arg = low * (1.0 + etabar / s) if normalized else low
            diffusion = hbar / (TWO_PI * s * arg)
            stable = RK4_STABLE * h * h / (STENCIL_RADIUS * diffusion)
            if stable < dt and dt - stable > 1e-12 * span:
                if stable < min_sub:
                    return 3, t, n_sub, min_arg, i, s
                dt = stable
        half = 0.5 * dt
        sm = cutbar * np.exp(-(t + half))
        se = cutbar * np.exp(-(t + dt))
        for j in range(n):
            w[j] = v[j] + half * k1[j]
        low, i = _rate(w, sm, etabar, hbar, h, eps, normalized, k2)
        if not low > eps:
            return (3 if limit else 1), t, n_sub, min(min_arg, low), i, sm
        for j in range(n):
            w[j] = v[j] + half * k2[j]
        low, i = _rate(w, sm, etabar, hbar, h, eps, normalized, k3)
        if not low > eps:
            return (3 if limit else 1), t, n_sub, min(min_arg, low), i, sm
        for j in range(n):
            w[j] = v[j] + dt * k3[j]
        low, i = _rate(w, se, etabar, hbar, h, eps, normalized, k4)
        if not low > eps:
            return (3 if limit else 1), t, n_sub, min(min_arg, low), i, se
        c = dt / 6.0
        for j in range(n):
            v[j] += c * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        t = t_end if dt == t_end - t else t + dt
        n_sub += 1
    return 0, t, n_sub, min_arg, -1, cutbar * np.exp(-t)


def stencil_matrix_banded(n, spacing):
    """The curvature stencil as a (5 lower, 2 upper) banded matrix for ``solve_banded``."""
    dense = np.column_stack([_second_derivative(e, spacing) for e in np.eye(n)])
    ab = np.zeros((_LOWER + _UPPER + 1, n))
    for k in range(-_LOWER, _UPPER + 1):
        diag = np.diagonal(dense, offset=k)
        if k >= 0:
            ab[_UPPER - k, k:] = diag
        else:
            ab[_UPPER - k, : n + k] = diag
    return ab


_LOWER, _UPPER = 5, 2
# 2nd-order L-stable Rosenbrock (ROS2) parameter
_ROS2_GAMMA = 1.0 + 1.0 / math.sqrt(2.0)


class _Rosenbrock:
    """Linearly implicit fallback for steps where explicit RK4 is stability-bound."""

    def __init__(self, n, spacing, cutbar, etabar, eps):
        self.h = spacing
        self.cutbar = cutbar
        self.etabar = etabar
        self.eps = eps
        self.stencil = stencil_matrix_banded(n, spacing)
        # row index of each banded entry, used to scale rows by the diffusion
        cols = np.arange(n)
        self.rows = np.clip((np.arange(_LOWER + _UPPER + 1) - _UPPER)[:, None] + cols, 0, n - 1)
        self.f1 = np.empty(n)
        self.f2 = np.empty(n)
        self.d = np.empty(n)
        self.d2 = np.empty(n)

    def step(self, v, t, tau):
        """One ROS2 step; returns (new values, lowest normalized argument there, index)."""
        s = self.cutbar * math.exp(-t)
        _rate_extended(v, s, self.etabar, 1.0, self.h, self.eps, self.f1, self.d)
        w = -(_ROS2_GAMMA * tau) * self.d[self.rows] * self.stencil
        w[_UPPER] += 1.0
        k1 = solve_banded((_LOWER, _UPPER), w, self.f1, check_finite=False)
        s2 = self.cutbar * math.exp(-(t + tau))
        _rate_extended(v + tau * k1, s2, self.etabar, 1.0, self.h, self.eps, self.f2, self.d2)
        k2 = solve_banded((_LOWER, _UPPER), w, self.f2 - 2.0 * k1, check_finite=False)
        new = v + tau * (1.5 * k1 + 0.5 * k2)
        low, i = _rate_extended(new, s2, self.etabar, 1.0, self.h, self.eps, self.f2, self.d2)
        return new, low, i


def step(state: PotentialGrid, scale, dt, etabar, *, spinodal_eps=1.0e-8, hbar=1.0):
    """Advance the potential by one RK4 step of flow time ``dt`` starting at ``scale``.

    ``hbar`` multiplies the loop term; ``hbar=0`` switches the flow off.
    Raises :class:`SpinodalReached` with the offending q and scale attached.
    """
    if not scale > 0:
        raise InvalidParameterError("scale", f"must be > 0, got {scale!r}")
    v = state.values.copy()
    status, _, _, low, i, s = _advance(v, 0.0, float(dt), state.spacing, float(scale), float(etabar),
                                       float(hbar), spinodal_eps, False, False, 0.0)
    if status:
        raise SpinodalReached(low, q=i * state.spacing, scale=s)
    return state.with_values(v)


def shell_step(state: PotentialGrid, scale, dscale, etabar, *, spinodal_eps=1.0e-8):
    """Integrate out the frequency shell [scale - dscale, scale] at frozen curvature.

    Reference path used to cross-check :func:`step`; the shell integral is done by
    adaptive quadrature, pointwise in q.
    """
    if not 0 < dscale < scale:
        raise InvalidParameterError("dscale", f"need 0 < dscale < scale, got {dscale!r}")
    low = scale - dscale
    curv = curvature_field(state)
    # log argument is smallest either at an end of the shell or at w = -2 V''/etabar
    candidates = [log_argument(low, etabar, curv), log_argument(scale, etabar, curv)]
    if etabar > 0:
        w_star = -2.0 * curv / etabar
        inside = (w_star > low) & (w_star < scale)
        if np.any(inside):
            w = np.where(inside, w_star, scale)
            candidates.append(1.0 + etabar / w + curv / (w * w))
    lowest_per_point = np.min(np.vstack(candidates), axis=0)
    i = int(np.argmin(lowest_per_point))
    if not lowest_per_point[i] > spinodal_eps:
        raise SpinodalReached(lowest_per_point[i], q=i * state.spacing, scale=scale)

    def integrand(w):
        return np.log1p(etabar / w + curv / (w * w))

    shell, _ = integrate.quad_vec(integrand, low, scale, epsabs=1e-15, epsrel=1e-13)
    return state.with_values(state.values + shell / TWO_PI)


def run_flow(params: DimensionlessParams, settings: FlowSettings | None = None,
             initial: PotentialGrid | None = None) -> FlowOutcome:
    """Integrate from the UV cutoff towards the infrared.

    Each flow-time step of size ``dt`` is taken with classical RK4, split into
    stability-limited sub-steps where needed. When more than
    ``settings.max_substeps`` sub-steps would be required the step is taken
    with a linearly implicit ROS2 step instead; this only happens close to the
    singular line V'' = -(s^2 + etabar s).

    The flow stops when the relative change of V''(0) over the last
    ``convergence_window`` of flow time drops below ``convergence_tol``, at
    ``t_max``, or at the spinodal: the normalized argument
    A / (1 + etabar/s) falling to ``spinodal_eps``. A spinodal stop is a
    regular outcome that marks the broken (localized) regime.
    """
    settings = settings or FlowSettings()
    if initial is None:
        initial = bare_potential(params.lam)
    h = initial.spacing
    cutbar, etabar, eps = float(params.cutbar), float(params.etabar), settings.spinodal_eps
    v = initial.values.copy()
    vacuum = float(v[0])
    v -= vacuum

    dt = settings.dt
    min_sub = dt / settings.max_substeps
    n_outer = int(math.ceil(settings.t_max / dt - 1e-9))
    trace_stride = max(1, int(round(settings.trace_every / dt)))
    window_steps = max(1, int(round(settings.convergence_window / dt)))
    history = deque([origin_curvature(v, h)], maxlen=window_steps + 1)
    trace_t = [0.0]
    trace_c = [history[0]]
    implicit = None

    t = 0.0
    n_steps = n_implicit = 0
    min_arg = math.inf
    stop = STOP_T_MAX
    spinodal_q = None
    for k in range(1, n_outer + 1):
        target = min(k * dt, settings.t_max)
        status, t_reached, n_sub, low, i, _ = _advance(
            v, t, target, h, cutbar, etabar, 1.0, eps, True, True, min_sub)
        n_steps += n_sub
        min_arg = min(min_arg, low)
        t = t_reached
        if status == 3:
            if implicit is None:
                implicit = _Rosenbrock(v.size, h, cutbar, etabar, eps)
            new, low, i = implicit.step(v, t, target - t)
            n_implicit += 1
            min_arg = min(min_arg, low)
            if not low > eps:
                status = 1
            else:
                v[:] = new
                t = target
        # keep V(0) = 0; the q-independent part never feeds back into the flow
        vacuum += float(v[0])
        v -= v[0]
        if status == 1:
            stop = STOP_SPINODAL
            spinodal_q = i * h
            break

        c0 = origin_curvature(v, h)
        history.append(c0)
        if k % trace_stride == 0:
            trace_t.append(t)
            trace_c.append(c0)
        if len(history) == history.maxlen and c0 != 0.0:
            rate = abs(c0 - history[0]) / (abs(c0) * settings.convergence_window)
            if rate < settings.convergence_tol:
                stop = STOP_CONVERGED
                break

    if trace_t[-1] != t:
        trace_t.append(t)
        trace_c.append(origin_curvature(v, h))
    return FlowOutcome(
        final=initial.with_values(v),
        final_scale=cutbar * math.exp(-t),
        stop_reason=stop,
        min_log_argument=min_arg,
        trace_scale=cutbar * np.exp(-np.asarray(trace_t)),
        trace_curvature=np.asarray(trace_c),
        t_final=t,
        n_steps=n_steps,
        n_implicit=n_implicit,
        vacuum_energy=vacuum,
        spinodal_q=spinodal_q,
    )
