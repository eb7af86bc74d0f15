"""Scalar auxiliary equations driving the exact propagator.

Two equations are solved here, both for a positive scalar chi(t):

  classical:      d/dt(m chi') + m w^2 chi = 0
  Ermakov-type:   [d/dt(m chi') + m w^2 chi] m chi^3 = k^2,  k^2 in {-1, 0, 1}

The Ermakov form is integrated explicitly as
  chi'' = -(m'/m) chi' - w^2 chi + k^2 / (m^2 chi^3),
which avoids differentiating the numerical product m chi'.  The conservative
form is kept for the residual diagnostic only.

The method needs chi > 0 (log chi and 1/chi^2 appear downstream), so the
solver halts at a positivity floor instead of integrating through a sign
change.  The running phase integral integral_0^t dt'/(m chi^2) is carried as
an extra state component so the propagator can evaluate it between steps at
integrator accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import DomainError, PositivityHorizonError, StiffnessError, UsageError
from .serialize import dumps_json, format_csv, write_text

CHI_FLOOR = 1e-12

# Defaults chosen so that dense-output residuals stay below 1e-9 and the
# reduction stiffness test below 1e-9 at desk scale (order 4/5 pairs at
# looser tolerances miss both; see decision notes).
DEFAULT_METHOD = "DOP853"
DEFAULT_RTOL = 1e-13
DEFAULT_ATOL = 1e-14

_FD_STEP = 1e-5  # second-derivative finite-difference step on the interpolant


class _IvpInterp:
    """Dense (chi, chi', alpha) evaluation backed by an OdeSolution."""

    def __init__(self, ode_solution):
        self.sol = ode_solution

    def chi(self, t):
        return float(self.sol(t)[0])

    def chi_dot(self, t):
        return float(self.sol(t)[1])

    def alpha(self, t):
        return float(self.sol(t)[2])

    def chi_ddot(self, t, t_lo, t_hi):
        h = _FD_STEP
        if t - h >= t_lo and t + h <= t_hi:
            return (self.chi_dot(t + h) - self.chi_dot(t - h)) / (2.0 * h)
        if t + 2 * h <= t_hi:
            return (-3.0 * self.chi_dot(t) + 4.0 * self.chi_dot(t + h)
                    - self.chi_dot(t + 2 * h)) / (2.0 * h)
        return (3.0 * self.chi_dot(t) - 4.0 * self.chi_dot(t - h)
                + self.chi_dot(t - 2 * h)) / (2.0 * h)


class _CallableInterp:
    """Analytic (chi, chi', chi'') closures, for hand-built solutions."""

    def __init__(self, chi_fn, chi_dot_fn, chi_ddot_fn):
        self._chi = chi_fn
        self._chi_dot = chi_dot_fn
        self._chi_ddot = chi_ddot_fn

    def chi(self, t):
        return float(self._chi(t))

    def chi_dot(self, t):
        return float(self._chi_dot(t))

    def alpha(self, t):
        return None

    def chi_ddot(self, t, t_lo, t_hi):
        return float(self._chi_ddot(t))


class _SplineInterp:
    """Spline through (t, chi[, chi']) samples."""

    def __init__(self, times, chi, chi_dot=None):
        times = np.asarray(times, dtype=float)
        chi = np.asarray(chi, dtype=float)
        if chi_dot is not None:
            self.s0 = CubicHermiteSpline(times, chi, np.asarray(chi_dot, float))
        else:
            self.s0 = CubicSpline(times, chi)
        self.s1 = self.s0.derivative(1)
        self.s2 = self.s0.derivative(2)

    def chi(self, t):
        return float(self.s0(t))

    def chi_dot(self, t):
        return float(self.s1(t))

    def alpha(self, t):
        return None

    def chi_ddot(self, t, t_lo, t_hi):
        return float(self.s2(t))


class _ScaledInterp:
    """chi -> chi / sqrt(k) view of another interpolant; alpha scales by k."""

    def __init__(self, base, k):
        self.base = base
        self.root = math.sqrt(k)
        self.k = k

    def chi(self, t):
        return self.base.chi(t) / self.root

    def chi_dot(self, t):
        return self.base.chi_dot(t) / self.root

    def alpha(self, t):
        a = self.base.alpha(t)
        return None if a is None else self.k * a

    def chi_ddot(self, t, t_lo, t_hi):
        return self.base.chi_ddot(t, t_lo, t_hi) / self.root


@dataclass(frozen=True)
class AuxiliarySolution:
    """Dense positive solution of the classical or Ermakov-type equation.

    ``k_squared`` tags which right-hand side the solution satisfies (solver
    paths produce -1, 0, or +1; rescaling can produce other values).  The
    interpolant covers [0, t_max]; chi(0) and chi'(0) equal the seeds exactly.
    """

    k_squared: float
    chi0: float
    chidot0: float
    t_max: float
    t_grid: np.ndarray = field(repr=False)
    chi_samples: np.ndarray = field(repr=False)
    chi_dot_samples: np.ndarray = field(repr=False)
    profile: object = field(repr=False, default=None)
    _interp: object = field(repr=False, default=None)

    def _check_range(self, t):
        slack = 1e-9 * max(1.0, self.t_max)
        if not (-slack <= t <= self.t_max + slack):
            raise DomainError(f"t = {t} outside solution range [0, {self.t_max}]")

    def chi(self, t):
        self._check_range(t)
        return self._interp.chi(t)

    def chi_dot(self, t):
        self._check_range(t)
        return self._interp.chi_dot(t)

    def chi_ddot(self, t):
        """Second derivative of the dense interpolant (not the ODE rhs)."""
        self._check_range(t)
        return self._interp.chi_ddot(t, 0.0, self.t_max)

    def alpha(self, t):
        """Running integral of 1/(m chi^2), when carried by the solver."""
        self._check_range(t)
        return self._interp.alpha(t)

    def evaluate(self, t):
        return self.chi(t), self.chi_dot(t)

    def sample(self, ts):
        ts = np.asarray(ts, dtype=float)
        chi = np.array([self.chi(t) for t in ts])
        chid = np.array([self.chi_dot(t) for t in ts])
        return chi, chid

    @classmethod
    def from_callable(cls, k_squared, chi_fn, chi_dot_fn, chi_ddot_fn, t_max,
                      profile=None, n_grid=201):
        ts = np.linspace(0.0, t_max, n_grid)
        chi = np.array([chi_fn(t) for t in ts], dtype=float)
        chid = np.array([chi_dot_fn(t) for t in ts], dtype=float)
        return cls(
            k_squared=float(k_squared), chi0=float(chi[0]), chidot0=float(chid[0]),
            t_max=float(t_max), t_grid=ts, chi_samples=chi, chi_dot_samples=chid,
            profile=profile,
            _interp=_CallableInterp(chi_fn, chi_dot_fn, chi_ddot_fn),
        )

    @classmethod
    def from_samples(cls, k_squared, times, chi, chi_dot=None, profile=None):
        times = np.asarray(times, dtype=float)
        chi = np.asarray(chi, dtype=float)
        interp = _SplineInterp(times, chi, chi_dot)
        chid = (np.asarray(chi_dot, float) if chi_dot is not None
                else np.array([interp.chi_dot(t) for t in times]))
        return cls(
            k_squared=float(k_squared), chi0=float(chi[0]), chidot0=float(chid[0]),
            t_max=float(times[-1]), t_grid=times, chi_samples=chi,
            chi_dot_samples=chid, profile=profile, _interp=interp,
        )


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------

def _make_rhs(profile, k_squared):
    mass = profile.mass_law
    freq = profile.freq_sq_law
    k2 = float(k_squared)

    def rhs(t, y):
        chi, chid, _ = y
        if chi <= 0.0:
            # overshoot into the forbidden region: return a huge finite slope
            # so the error control rejects the step
            return (chid, 1e300, 1e300)
        m = mass.value(t)
        acc = -(mass.d1(t) / m) * chid - freq.value(t) * chi
        if k2 != 0.0:
            acc += k2 / (m * m * chi ** 3)
        return (chid, acc, 1.0 / (m * chi * chi))

    return rhs


def _build_solution(profile, k_squared, ivp, t_end):
    return AuxiliarySolution(
        k_squared=float(k_squared),
        chi0=float(ivp.y[0, 0]),
        chidot0=float(ivp.y[1, 0]),
        t_max=float(t_end),
        t_grid=ivp.t.copy(),
        chi_samples=ivp.y[0].copy(),
        chi_dot_samples=ivp.y[1].copy(),
        profile=profile,
        _interp=_IvpInterp(ivp.sol),
    )


def solve_ermakov(profile, k_squared, chi0, chidot0, t_max,
                  rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, method=DEFAULT_METHOD,
                  max_step=None):
    """Solve chi'' + (m'/m) chi' + w^2 chi = k^2/(m^2 chi^3) with dense output.

    k_squared must be -1, 0, or +1; the k^2 = 0 case is the classical
    equation of motion.  Raises PositivityHorizonError (carrying the horizon
    time and the partial solution) if chi reaches the positivity floor before
    t_max, and StiffnessError if the integrator fails away from the floor.
    """
    if k_squared not in (-1, 0, 1):
        raise UsageError(f"k_squared must be -1, 0 or +1, got {k_squared}")
    if chi0 <= 0.0:
        raise UsageError(f"chi0 must be positive, got {chi0}")
    if t_max <= 0.0:
        raise UsageError(f"t_max must be positive, got {t_max}")
    profile._check_domain(t_max)
    profile._check_domain(0.0)

    def floor_event(t, y):
        return y[0] - CHI_FLOOR

    floor_event.terminal = True
    floor_event.direction = -1.0

    kwargs = dict(rtol=rtol, atol=atol, method=method, dense_output=True,
                  events=floor_event)
    if max_step is not None:
        kwargs["max_step"] = max_step
    ivp = solve_ivp(_make_rhs(profile, k_squared), (0.0, float(t_max)),
                    [float(chi0), float(chidot0), 0.0], **kwargs)

    if ivp.status == 1:  # positivity floor crossed
        t_star = float(ivp.t_events[0][0])
        partial = _build_solution(profile, k_squared, ivp, ivp.t[-1])
        raise PositivityHorizonError(
            f"chi reached the positivity floor at t = {t_star} (< t_max = {t_max})",
            t_star=t_star, partial=partial,
        )
    if ivp.status == -1:
        chi_end = float(ivp.y[0, -1])
        chid_end = float(ivp.y[1, -1])
        if chi_end < 1e-4 * max(1.0, chi0):
            # collapse toward chi = 0 faster than the integrator can follow
            # (k^2 = -1 attracts); estimate the horizon from chi ~ sqrt(t*-t)
            t_star = float(ivp.t[-1])
            if chid_end < 0.0:
                t_star += 0.5 * chi_end / abs(chid_end)
            partial = _build_solution(profile, k_squared, ivp, ivp.t[-1])
            raise PositivityHorizonError(
                f"chi collapsed to {chi_end} near t = {t_star} (< t_max = {t_max})",
                t_star=t_star, partial=partial,
            )
        raise StiffnessError(f"integrator failed: {ivp.message}")
    return _build_solution(profile, k_squared, ivp, t_max)


def solve_classical(profile, chi0, chidot0, t_max, **kwargs):
    """Solve the classical equation of motion d/dt(m chi') + m w^2 chi = 0."""
    return solve_ermakov(profile, 0, chi0, chidot0, t_max, **kwargs)


# ---------------------------------------------------------------------------
# Diagnostics and transforms
# ---------------------------------------------------------------------------

def residual(profile, sol, t):
    """Defect [d/dt(m chi') + m w^2 chi] m chi^3 - k^2 at time t.

    chi'' comes from the dense interpolant's second derivative, never from
    the ODE right-hand side, so this is an independent accuracy diagnostic.
    """
    ev = profile.eval(t)
    chi = sol.chi(t)
    chid = sol.chi_dot(t)
    chidd = sol.chi_ddot(t)
    bracket = ev.mass * chidd + ev.mass_rate * chid + ev.mass * ev.freq_sq * chi
    return bracket * ev.mass * chi ** 3 - sol.k_squared


def wronskian(profile, sol1, sol2, t):
    """m(t) [chi1 chi2' - chi2 chi1']; constant for classical solutions."""
    if sol1.k_squared != 0 or sol2.k_squared != 0:
        raise UsageError("wronskian requires two k^2 = 0 solutions")
    m = profile.mass(t)
    return m * (sol1.chi(t) * sol2.chi_dot(t) - sol2.chi(t) * sol1.chi_dot(t))


def rescale(sol, k):
    """Divide chi by sqrt(k); the equation parameter k^2 divides by k^2."""
    if k <= 0.0:
        raise UsageError(f"rescale factor must be positive, got {k}")
    root = math.sqrt(k)
    return AuxiliarySolution(
        k_squared=sol.k_squared / (k * k),
        chi0=sol.chi0 / root,
        chidot0=sol.chidot0 / root,
        t_max=sol.t_max,
        t_grid=sol.t_grid.copy(),
        chi_samples=sol.chi_samples / root,
        chi_dot_samples=sol.chi_dot_samples / root,
        profile=sol.profile,
        _interp=_ScaledInterp(sol._interp, k),
    )


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def export_csv(sol, path, meta=None):
    """Write the solution's (t, chi, chi_dot) grid as CSV."""
    rows = [(float(t), float(c), float(d))
            for t, c, d in zip(sol.t_grid, sol.chi_samples, sol.chi_dot_samples)]
    write_text(path, format_csv(("t", "chi", "chi_dot"), rows, meta=meta))


def export_json(sol, path, meta=None):
    obj = {
        "k_squared": float(sol.k_squared),
        "chi0": sol.chi0,
        "chidot0": sol.chidot0,
        "t_max": sol.t_max,
        "t": [float(v) for v in sol.t_grid],
        "chi": [float(v) for v in sol.chi_samples],
        "chi_dot": [float(v) for v in sol.chi_dot_samples],
    }
    if meta:
        obj["meta"] = meta
    write_text(path, dumps_json(obj))
