"""Canonical-transformation algebra at the quadratic-coefficient level.

Every Hamiltonian in scope is quadratic, H = A p^2/2 + B x^2/2 + C {x,p}/2,
so transformations are bookkept on the three coefficients; operator algebra
is never materialized.  The module covers:

  * the dilatation transform x -> e^eps x, p -> e^-eps p of an oscillator,
  * removal of the {x,p} cross term by a quadratic phase (standard form),
  * the effective constant-mass frequency and the exact-solvability residual,
  * the three closed-form configuration-space flows (linear, quadratic,
    exponential) and the line metric they induce on the free particle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError

_KINDS = ("linear", "quadratic", "exponential")


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Coefficients of H = inv_mass p^2/2 + stiffness x^2/2 + cross {x,p}/2."""

    inv_mass: float
    stiffness: float
    cross: float = 0.0
    at_time: float = 0.0

    def __post_init__(self):
        if self.inv_mass < 0.0:
            raise UsageError(f"inverse-mass coefficient must be >= 0, got {self.inv_mass}")

    def is_standard_form(self, tol=0.0):
        return abs(self.cross) <= tol

    @classmethod
    def oscillator(cls, profile, t):
        """H = p^2/2m + m w^2 x^2/2 read off a profile at time t."""
        ev = profile.eval(t)
        return cls(inv_mass=1.0 / ev.mass, stiffness=ev.mass * ev.freq_sq,
                   cross=0.0, at_time=float(t))


@dataclass(frozen=True)
class DilatationParameter:
    """eps(t) with its first two derivatives at a fixed time; chi = e^eps."""

    epsilon: float
    epsilon_dot: float
    epsilon_ddot: float
    at_time: float = 0.0

    @property
    def chi(self):
        return math.exp(self.epsilon)

    @classmethod
    def from_solution(cls, sol, t):
        """eps = ln chi built from an auxiliary solution at time t.

        The second derivative comes from the solution interpolant, keeping
        downstream identity checks independent of the ODE right-hand side.
        """
        chi = sol.chi(t)
        chid = sol.chi_dot(t)
        chidd = sol.chi_ddot(t)
        eps_dot = chid / chi
        return cls(epsilon=math.log(chi), epsilon_dot=eps_dot,
                   epsilon_ddot=chidd / chi - eps_dot ** 2, at_time=float(t))

    @classmethod
    def mass_matching(cls, profile, m0, t):
        """eps = ln(m0/m)/2, the choice that freezes the transformed mass at m0."""
        if m0 <= 0.0:
            raise UsageError(f"m0 must be positive, got {m0}")
        ev = profile.eval(t)
        m, md, mdd = ev.mass, ev.mass_rate, ev.mass_accel
        return cls(
            epsilon=0.5 * math.log(m0 / m),
            epsilon_dot=-md / (2.0 * m),
            epsilon_ddot=-mdd / (2.0 * m) + md ** 2 / (2.0 * m ** 2),
            at_time=float(t),
        )


# ---------------------------------------------------------------------------
# Hamiltonian transforms
# ---------------------------------------------------------------------------

def dilatation_transform(h, d):
    """Transform an oscillator Hamiltonian by the dilatation x -> e^eps x.

    Input must be in standard form (no cross term).  The result carries the
    -eps_dot {x,p}/2 term generated by the time dependence of eps.
    """
    if h.cross != 0.0:
        raise UsageError("dilatation_transform expects a standard-form input")
    e2 = math.exp(2.0 * d.epsilon)
    return QuadraticHamiltonian(
        inv_mass=h.inv_mass / e2,
        stiffness=h.stiffness * e2,
        cross=-d.epsilon_dot,
        at_time=h.at_time,
    )


def standardize(h_prime, d, profile):
    """Remove the cross term of a dilatation-transformed oscillator.

    The quadratic phase shifting p -> p + (m e^{2 eps} eps_dot) x turns the
    Hamiltonian back into standard form with stiffness
      B = d/dt(m e^{2 eps} eps_dot) + m e^{2 eps} (w^2 - eps_dot^2),
    expanded here analytically via m' and eps''.
    """
    ev = profile.eval(d.at_time)
    e2 = math.exp(2.0 * d.epsilon)
    inv_mass = 1.0 / (ev.mass * e2)
    scale = max(abs(h_prime.cross), abs(d.epsilon_dot), 1.0)
    if abs(h_prime.cross + d.epsilon_dot) > 1e-9 * scale:
        raise UsageError(
            "h_prime cross term does not match the dilatation rate; "
            "standardize expects the output of dilatation_transform"
        )
    stiffness = e2 * (ev.mass_rate * d.epsilon_dot
                      + ev.mass * (d.epsilon_ddot + d.epsilon_dot ** 2 + ev.freq_sq))
    return QuadraticHamiltonian(inv_mass=inv_mass, stiffness=stiffness,
                                cross=0.0, at_time=h_prime.at_time)


def effective_frequency_sq(profile, d):
    """Omega^2 = eps'' - eps'^2 + w^2.

    Meaningful as the constant-mass frequency when eps = ln(m0/m)/2 so the
    transformed mass is constant; the caller asserts that choice.
    """
    ev = profile.eval(d.at_time)
    return d.epsilon_ddot - d.epsilon_dot ** 2 + ev.freq_sq


def solvability_residual(profile, omega0, t):
    """w^2(t) - [omega0^2 + m''/2m - (m'/2m)^2].

    Zero on the whole domain exactly when the profile is canonically
    equivalent to a constant oscillator of frequency omega0.  Compares
    squared frequencies to avoid square roots of negative intermediates.
    """
    ev = profile.eval(t)
    target = (omega0 ** 2 + ev.mass_accel / (2.0 * ev.mass)
              - (ev.mass_rate / (2.0 * ev.mass)) ** 2)
    return ev.freq_sq - target


def classify(profile, n_samples=401, tol=1e-9):
    """Scan the domain for membership in the exactly-solvable class.

    With q(t) the residual evaluated at omega0 = 0, the residual at any
    omega0 is q(t) - omega0^2, so the minimax omega0^2 is the midrange of q
    (clipped at zero to keep omega0 real); no omega0 grid is needed.
    """
    ts = np.linspace(profile.domain[0], profile.domain[1], n_samples)
    q = np.array([solvability_residual(profile, 0.0, t) for t in ts])
    omega0_sq = max(0.0, 0.5 * (q.max() + q.min()))
    max_residual = float(np.abs(q - omega0_sq).max())
    return {
        "in_class": bool(max_residual <= tol),
        "omega0_best": math.sqrt(omega0_sq),
        "omega0_sq_best": float(omega0_sq),
        "max_residual": max_residual,
    }


# ---------------------------------------------------------------------------
# Configuration-space flows and induced metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffeoKind:
    """One of the three closed-form flow generators; lam > 0 for exponential."""

    kind: str
    lam: float = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise UsageError(f"unknown diffeo kind {self.kind!r}; expected {_KINDS}")
        if self.kind == "exponential":
            if self.lam is None or self.lam <= 0.0:
                raise UsageError("exponential kind needs lam > 0")
        elif self.lam is not None:
            raise UsageError(f"{self.kind} kind takes no lam parameter")


LINEAR = DiffeoKind("linear")
QUADRATIC = DiffeoKind("quadratic")


def exponential(lam):
    return DiffeoKind("exponential", float(lam))


def diffeo_map(kind, eps, x):
    """Flow x -> x' with parameter eps, plus the momentum factor F2.

    F2 is defined operationally by p' = sqrt(F2) p sqrt(F2); the canonical
    pairing forces F2 * dx'/dx = 1 pointwise, which pins the closed forms:

      linear       x' = e^eps x,                     F2 = e^-eps
      quadratic    x' = x / (1 - eps x),             F2 = (1 - eps x)^2
      exponential  x' = ln(e^{lam x} + eps lam)/lam, F2 = 1 + eps lam e^{-lam x}
    """
    if kind.kind == "linear":
        return math.exp(eps) * x, math.exp(-eps)
    if kind.kind == "quadratic":
        den = 1.0 - eps * x
        if abs(eps * x) >= 1.0:
            where = f"x = {1.0 / eps}" if eps != 0.0 else "eps x = 1"
            raise DomainError(
                f"quadratic flow undefined for |eps x| >= 1 (singular at {where})"
            )
        return x / den, den * den
    lam = kind.lam
    u = math.exp(lam * x) + eps * lam
    if u <= 0.0:
        raise DomainError(
            f"exponential flow undefined: e^(lam x) + eps lam = {u} <= 0 at x = {x}"
        )
    if abs(eps * lam) >= 1.0:
        # pointwise condition above is what the logarithm needs; the uniform
        # |eps lam| < 1 bound (sufficient for x >= 0) is only advisory
        warnings.warn(
            f"|eps*lam| = {abs(eps * lam)} >= 1: uniform validity bound exceeded",
            stacklevel=2,
        )
    return math.log(u) / lam, u * math.exp(-lam * x)


def diffeo_jacobian(kind, eps, x):
    """Analytic dx'/dx of the flow (equals 1/F2)."""
    if kind.kind == "linear":
        return math.exp(eps)
    if kind.kind == "quadratic":
        den = 1.0 - eps * x
        if abs(eps * x) >= 1.0:
            raise DomainError("quadratic flow undefined for |eps x| >= 1")
        return 1.0 / (den * den)
    lam = kind.lam
    u = math.exp(lam * x) + eps * lam
    if u <= 0.0:
        raise DomainError("exponential flow undefined at this point")
    return math.exp(lam * x) / u


def flow_compose(kind, eps1, eps2, x):
    """Apply the eps1 flow, then the eps2 flow; equals the eps1+eps2 flow."""
    x1, _ = diffeo_map(kind, eps1, x)
    x2, _ = diffeo_map(kind, eps2, x1)
    return x2


def induced_metric(kind, eps, x):
    """Line metric g = F2^-2 seen by the free particle after the flow.

    Closed forms: (1 - eps x)^-4 for the quadratic kind and
    (1 + eps lam e^{-lam x})^-2 for the exponential kind.
    """
    _, f2 = diffeo_map(kind, eps, x)
    return f2 ** -2
