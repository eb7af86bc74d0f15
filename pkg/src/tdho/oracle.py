"""Independent brute-force verifiers for the closed-form propagator.

Nothing here reuses the auxiliary-equation machinery: the fundamental matrix
integrates Hamilton's equations directly, the grid propagator advances the
wavefunction by Strang-split spectral steps, and the generator checks work on
discretized operators.  Oracles target desk-scale accuracy (1e-6), not
spectral precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BoxOverflowError, GridMismatchError, StiffnessError, UsageError
from .propagator import SymplecticMap

_EDGE_DECAY = 1e-12


# ---------------------------------------------------------------------------
# Fundamental matrix of Hamilton's equations
# ---------------------------------------------------------------------------

def _fundamental_rhs(profile):
    mass = profile.mass_law
    freq = profile.freq_sq_law

    def rhs(t, y):
        a, b, c, d = y
        m = mass.value(t)
        mw2 = m * freq.value(t)
        return (c / m, d / m, -mw2 * a, -mw2 * b)

    return rhs


class FundamentalSolution:
    """Dense fundamental matrix S(t) on [0, t_max]."""

    def __init__(self, ode_solution, t_max):
        self._sol = ode_solution
        self.t_max = t_max

    def __call__(self, t):
        a, b, c, d = (float(v) for v in self._sol(t))
        return SymplecticMap(a, b, c, d, at_time=float(t))


def fundamental_matrix_dense(profile, t_max, rtol=1e-12, atol=1e-14):
    """Integrate the 2x2 fundamental matrix from the identity, densely."""
    profile._check_domain(t_max)
    ivp = solve_ivp(_fundamental_rhs(profile), (0.0, float(t_max)),
                    [1.0, 0.0, 0.0, 1.0], method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True)
    if ivp.status != 0:
        raise StiffnessError(f"fundamental matrix integration failed: {ivp.message}")
    return FundamentalSolution(ivp.sol, float(t_max))


def fundamental_matrix(profile, t, rtol=1e-12, atol=1e-14):
    """Classical fundamental matrix at time t (identity at t = 0).

    For quadratic Hamiltonians the Heisenberg evolution of (x, p) is exactly
    this classical matrix, which makes it an oracle for the closed-form map.
    """
    if t == 0.0:
        return SymplecticMap.identity()
    return fundamental_matrix_dense(profile, t, rtol=rtol, atol=atol)(t)


# ---------------------------------------------------------------------------
# Grid states and the split-step propagator
# ---------------------------------------------------------------------------

def _is_power_of_two(n):
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridState:
    """Complex wavefunction samples on a uniform grid over [x_min, x_max).

    The sample count is a power of two for the spectral steps; amplitudes
    are normalized to unit probability and the probability density at both
    box edges must sit below 1e-12 of its peak (containment; a +-10 sigma
    box leaves e^-50 there).
    """

    x_min: float
    x_max: float
    n: int
    psi: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not _is_power_of_two(self.n):
            raise UsageError(f"sample count must be a power of two, got {self.n}")
        if self.psi.shape != (self.n,):
            raise UsageError("amplitude array does not match the sample count")
        norm = grid_norm(self)
        if abs(norm - 1.0) > 1e-10:
            raise UsageError(f"grid state norm {norm} is not 1 within 1e-10")
        check_containment(self)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(self.n)

    def same_geometry(self, other):
        return (self.n == other.n and self.x_min == other.x_min
                and self.x_max == other.x_max)


def grid_norm(gs):
    return float(np.sum(np.abs(gs.psi) ** 2) * gs.dx)


def check_containment(gs):
    peak_sq = float(np.max(np.abs(gs.psi) ** 2))
    edge_sq = max(abs(gs.psi[0]) ** 2, abs(gs.psi[-1]) ** 2)
    if edge_sq > _EDGE_DECAY * peak_sq:
        raise BoxOverflowError(
            f"edge density {edge_sq:.3e} exceeds {_EDGE_DECAY:.0e} of peak "
            f"{peak_sq:.3e}; enlarge the box"
        )


def from_gaussian(state, x_min=None, x_max=None, n=None):
    """Sample an analytic Gaussian onto a grid, auto-sizing the box.

    Default box is +-(|mean_x| + 10 sigma) with the power-of-two n giving
    dx <= sigma/16.
    """
    sigma = math.sqrt(state.cov_xx)
    if x_min is None or x_max is None:
        half = abs(state.mean_x) + 10.0 * sigma
        x_min, x_max = -half, half
    if n is None:
        n = 1 << max(5, math.ceil(math.log2((x_max - x_min) * 16.0 / sigma)))
    dx = (x_max - x_min) / n
    x = x_min + dx * np.arange(n)
    psi = state.wavefunction(x)
    psi = psi / math.sqrt(float(np.sum(np.abs(psi) ** 2) * dx))
    return GridState(float(x_min), float(x_max), int(n), psi)


def fidelity(gs1, gs2):
    """Global-phase-insensitive overlap magnitude |<psi1|psi2>|."""
    if not gs1.same_geometry(gs2):
        raise GridMismatchError("fidelity needs identical grids")
    return float(abs(np.vdot(gs1.psi, gs2.psi)) * gs1.dx)


def moments(gs):
    """(mean_x, mean_p, cov_xx, cov_xp, cov_pp) of a grid state.

    Momentum moments are spectral; the cross moment is the symmetrized
    Re <(x - <x>)(p - <p>)>.
    """
    x = gs.x
    dx = gs.dx
    rho = np.abs(gs.psi) ** 2
    nrm = float(np.sum(rho) * dx)
    xb = float(np.sum(x * rho) * dx / nrm)
    cxx = float(np.sum((x - xb) ** 2 * rho) * dx / nrm)
    k = 2.0 * np.pi * np.fft.fftfreq(gs.n, d=dx)
    ft = np.fft.fft(gs.psi)
    spec = np.abs(ft) ** 2
    spec_sum = float(np.sum(spec))
    pb = float(np.sum(k * spec) / spec_sum)
    cpp = float(np.sum(k * k * spec) / spec_sum) - pb * pb
    dpsi = np.fft.ifft(1j * k * ft)
    cxp = float(np.real(np.sum(np.conj(gs.psi) * (x - xb)
                               * (-1j * dpsi - pb * gs.psi))) * dx / nrm)
    return xb, pb, cxx, cxp, cpp


def grid_propagate(profile, psi0, t, steps):
    """Advance a grid state to time t by Strang-split spectral steps.

    Each step applies half a potential factor, a full kinetic factor and the
    other potential half, with m and w^2 frozen at the step midpoint (second
    order for time-dependent coefficients).  Norm is preserved to roundoff;
    containment is monitored every step.
    """
    if steps < 1:
        raise UsageError("steps must be >= 1")
    if t == 0.0:
        return psi0
    profile._check_domain(t)
    x = psi0.x
    dx = psi0.dx
    k = 2.0 * np.pi * np.fft.fftfreq(psi0.n, d=dx)
    k2 = k * k
    x2 = x * x
    psi = psi0.psi.copy()
    dt = float(t) / steps
    peak = float(np.max(np.abs(psi)))
    for j in range(steps):
        tm = (j + 0.5) * dt
        ev = profile.eval(tm)
        half_v = np.exp(-0.25j * ev.mass * ev.freq_sq * x2 * dt)
        kin = np.exp(-0.5j * k2 * dt / ev.mass)
        psi = half_v * np.fft.ifft(kin * np.fft.fft(half_v * psi))
        if j % 64 == 0:
            peak = float(np.max(np.abs(psi)))
        edge = max(abs(psi[0]), abs(psi[-1]))
        if edge * edge > _EDGE_DECAY * peak * peak:
            raise BoxOverflowError(
                f"support reached the box edge at step {j + 1}/{steps} "
                f"(t = {tm:.4g}); enlarge the box"
            )
    return GridState(psi0.x_min, psi0.x_max, psi0.n, psi)


# ---------------------------------------------------------------------------
# Discretized generator algebra
# ---------------------------------------------------------------------------

def _central_diff(values, dx):
    out = np.zeros_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dx)
    return out


def _generator_apply(f_samples, phi, dx):
    """(1/2){f(x), p} phi with p = -i d/dx, central differences, zero edges."""
    return -0.5j * (f_samples * _central_diff(phi, dx)
                    + _central_diff(f_samples * phi, dx))


def _default_test_vectors(x, dx):
    # centers and width chosen so the Gaussians decay below 1e-12 of peak
    # well inside the box (0.45 span / (span/20) = 9 sigma to the edge)
    span = x[-1] - x[0]
    sigma = span / 20.0
    centers = (x[0] + 0.45 * span, x[0] + 0.5 * span, x[0] + 0.55 * span)
    vectors = []
    for c in centers:
        phi = np.exp(-((x - c) ** 2) / (2.0 * sigma ** 2)).astype(complex)
        phi /= math.sqrt(float(np.sum(np.abs(phi) ** 2) * dx))
        vectors.append(phi)
    return vectors


def generator_commutator_check(f1, f2, grid, f1_prime=None, f2_prime=None,
                               test_vectors=None):
    """Residuals of the two commutation identities on a discretized line.

    residual1 tests [i/2 {f1, p}, f2(x)] = f1 f2' as applied operators;
    residual2 tests the closure [i/2 {f1,p}, i/2 {f2,p}] = i/2 {f3, p} with
    f3 = f1 f2' - f2 f1'.  Both use the symmetric product
    -(i/2)(f d/dx + d/dx f) with central differences, so the residuals decay
    at second order in the grid step.  Returns (residual1, residual2) taken
    as the worst L2 defect over the test vectors.
    """
    x = grid.x
    dx = grid.dx
    F1 = np.asarray([f1(v) for v in x], dtype=float)
    F2 = np.asarray([f2(v) for v in x], dtype=float)
    F1p = (np.asarray([f1_prime(v) for v in x], dtype=float)
           if f1_prime is not None else _central_diff(F1, dx))
    F2p = (np.asarray([f2_prime(v) for v in x], dtype=float)
           if f2_prime is not None else _central_diff(F2, dx))
    F3 = F1 * F2p - F2 * F1p

    if test_vectors is None:
        test_vectors = _default_test_vectors(x, dx)
    for phi in test_vectors:
        edge_sq = max(abs(phi[0]) ** 2, abs(phi[-1]) ** 2)
        if edge_sq > _EDGE_DECAY * float(np.max(np.abs(phi)) ** 2):
            raise BoxOverflowError("test vector does not vanish near the boundary")

    res1 = 0.0
    res2 = 0.0
    for phi in test_vectors:
        g1_phi = _generator_apply(F1, phi, dx)
        # identity 1: i G1 (f2 phi) - f2 (i G1 phi) = f1 f2' phi
        lhs1 = 1j * _generator_apply(F1, F2 * phi, dx) - F2 * (1j * g1_phi)
        defect1 = lhs1 - F1 * F2p * phi
        res1 = max(res1, math.sqrt(float(np.sum(np.abs(defect1) ** 2) * dx)))
        # identity 2: [i G1, i G2] phi = i G3 phi
        g2_phi = _generator_apply(F2, phi, dx)
        comm = (1j * _generator_apply(F1, 1j * g2_phi, dx)
                - 1j * _generator_apply(F2, 1j * g1_phi, dx))
        defect2 = comm - 1j * _generator_apply(F3, phi, dx)
        res2 = max(res2, math.sqrt(float(np.sum(np.abs(defect2) ** 2) * dx)))
    return res1, res2
