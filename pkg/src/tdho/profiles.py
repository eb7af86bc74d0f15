"""Mass/frequency time-profiles for the oscillator engine.

A profile bundles an evaluable mass law m(t) > 0 and a frequency-squared law
w2(t) = omega(t)^2 on an explicit finite domain [0, T].  Only omega^2 is
stored, so inverted oscillators (omega^2 < 0) are representable.  hbar = 1
throughout; all quantities are in these natural units.

Each law exposes analytic derivatives: the classification formulas downstream
need m, dm/dt, d2m/dt2 (and d3m/dt3 for the derived solvable frequency).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError, ImaginaryFrequencyError, PositivityError, UsageError

_DOMAIN_SLACK = 1e-9

# Profile kind tags
KINDS = (
    "constant",
    "caldirola-kanai",
    "solvable-mass-family",
    "polynomial",
    "sinusoidal-modulated",
    "tabulated",
)


class ProfileEval(NamedTuple):
    mass: float
    mass_rate: float
    mass_accel: float
    freq_sq: float
    freq_sq_rate: float


# ---------------------------------------------------------------------------
# Time laws: scalar functions of t with analytic derivatives.
# Mass laws provide value/d1/d2/d3; frequency laws need value/d1 only.
# ---------------------------------------------------------------------------

class _Constant:
    def __init__(self, c):
        self.c = float(c)

    def value(self, t):
        return self.c

    def d1(self, t):
        return 0.0

    def d2(self, t):
        return 0.0

    def d3(self, t):
        return 0.0


class _Exponential:
    """c0 * exp(rate * t)"""

    def __init__(self, c0, rate):
        self.c0 = float(c0)
        self.rate = float(rate)

    def value(self, t):
        return self.c0 * math.exp(self.rate * t)

    def d1(self, t):
        return self.rate * self.value(t)

    def d2(self, t):
        return self.rate ** 2 * self.value(t)

    def d3(self, t):
        return self.rate ** 3 * self.value(t)


class _SquaredExpSum:
    """m0 * (mu e^{a t} + nu e^{-a t})^2"""

    def __init__(self, m0, mu, nu, alpha):
        self.m0 = float(m0)
        self.mu = float(mu)
        self.nu = float(nu)
        self.alpha = float(alpha)

    def _s(self, t):
        a = self.alpha
        s = self.mu * math.exp(a * t) + self.nu * math.exp(-a * t)
        sd = a * (self.mu * math.exp(a * t) - self.nu * math.exp(-a * t))
        return s, sd

    def value(self, t):
        s, _ = self._s(t)
        return self.m0 * s * s

    def d1(self, t):
        s, sd = self._s(t)
        return 2.0 * self.m0 * s * sd

    def d2(self, t):
        s, sd = self._s(t)
        sdd = self.alpha ** 2 * s
        return 2.0 * self.m0 * (sd * sd + s * sdd)

    def d3(self, t):
        s, sd = self._s(t)
        sdd = self.alpha ** 2 * s
        sddd = self.alpha ** 2 * sd
        return 2.0 * self.m0 * (3.0 * sd * sdd + s * sddd)


class _Polynomial:
    def __init__(self, coeffs):
        self.p0 = np.polynomial.Polynomial(coeffs)
        self.p1 = self.p0.deriv()
        self.p2 = self.p1.deriv()
        self.p3 = self.p2.deriv()

    def value(self, t):
        return float(self.p0(t))

    def d1(self, t):
        return float(self.p1(t))

    def d2(self, t):
        return float(self.p2(t))

    def d3(self, t):
        return float(self.p3(t))


class _Sinusoidal:
    """base + amp * sin(rate * t + phase)"""

    def __init__(self, base, amp, rate, phase):
        self.base = float(base)
        self.amp = float(amp)
        self.rate = float(rate)
        self.phase = float(phase)

    def value(self, t):
        return self.base + self.amp * math.sin(self.rate * t + self.phase)

    def d1(self, t):
        return self.amp * self.rate * math.cos(self.rate * t + self.phase)

    def d2(self, t):
        return -self.amp * self.rate ** 2 * math.sin(self.rate * t + self.phase)

    def d3(self, t):
        return -self.amp * self.rate ** 3 * math.cos(self.rate * t + self.phase)


class _Spline:
    """Cubic spline through samples; derivatives are the spline's own.

    Cubic interpolation is the minimum that gives a usable second
    derivative, which the exact-solvability formulas require.
    """

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.size < 4:
            raise UsageError("tabulated law needs at least 4 samples")
        if np.any(np.diff(times) <= 0):
            raise UsageError("tabulated sample times must be strictly increasing")
        self.s0 = CubicSpline(times, values)
        self.s1 = self.s0.derivative(1)
        self.s2 = self.s0.derivative(2)
        self.s3 = self.s0.derivative(3)
        self.t_lo = float(times[0])
        self.t_hi = float(times[-1])

    def value(self, t):
        return float(self.s0(t))

    def d1(self, t):
        return float(self.s1(t))

    def d2(self, t):
        return float(self.s2(t))

    def d3(self, t):
        return float(self.s3(t))


class _SolvableFreq:
    """omega^2 derived from a mass law and a target constant frequency.

    value(t) = omega0^2 + m''/<2m> - (m'/2m)^2, the unique omega^2 making the
    oscillator canonically equivalent to a fixed-frequency one.
    """

    def __init__(self, mass_law, omega0):
        self.mass = mass_law
        self.omega0 = float(omega0)

    def value(self, t):
        m = self.mass.value(t)
        md = self.mass.d1(t)
        mdd = self.mass.d2(t)
        return self.omega0 ** 2 + mdd / (2.0 * m) - (md / (2.0 * m)) ** 2

    def d1(self, t):
        m = self.mass.value(t)
        md = self.mass.d1(t)
        mdd = self.mass.d2(t)
        mddd = self.mass.d3(t)
        return mddd / (2.0 * m) - md * mdd / m ** 2 + md ** 3 / (2.0 * m ** 3)


# ---------------------------------------------------------------------------
# Profile object
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillatorProfile:
    """Immutable mass/frequency profile on a finite time domain.

    Profiles are safe to share across threads; evaluation has no state.
    A profile built by :func:`caldirola_kanai` or :func:`solvable_mass_family`
    may carry no frequency until one is attached.
    """

    kind: str
    domain: tuple
    params: dict = field(repr=False)
    mass_law: object = field(repr=False)
    freq_sq_law: object = field(repr=False, default=None)

    def _check_domain(self, t):
        t0, t1 = self.domain
        slack = _DOMAIN_SLACK * max(1.0, abs(t1 - t0))
        if not (t0 - slack <= t <= t1 + slack):
            raise DomainError(
                f"t = {t} outside profile domain [{t0}, {t1}]"
            )

    def has_frequency(self):
        return self.freq_sq_law is not None

    def mass(self, t):
        self._check_domain(t)
        m = self.mass_law.value(t)
        if m <= 0.0:
            raise PositivityError(f"mass {m} <= 0 at t = {t}", t_first_zero=t)
        return m

    def eval(self, t) -> ProfileEval:
        """Return (m, dm, d2m, omega^2, d(omega^2)) at time t."""
        self._check_domain(t)
        if self.freq_sq_law is None:
            raise UsageError("profile has no frequency attached")
        m = self.mass_law.value(t)
        if m <= 0.0:
            raise PositivityError(f"mass {m} <= 0 at t = {t}", t_first_zero=t)
        return ProfileEval(
            m,
            self.mass_law.d1(t),
            self.mass_law.d2(t),
            self.freq_sq_law.value(t),
            self.freq_sq_law.d1(t),
        )


def _freq_law_from_args(omega=None, omega_sq=None):
    if omega is not None and omega_sq is not None:
        raise UsageError("give omega or omega_sq, not both")
    if omega is not None:
        return _Constant(float(omega) ** 2)
    if omega_sq is not None:
        return _Constant(float(omega_sq))
    return None


def _check_mass_positive_sampled(law, domain, n=2001):
    ts = np.linspace(domain[0], domain[1], n)
    vals = np.array([law.value(t) for t in ts])
    bad = np.nonzero(vals <= 0.0)[0]
    if bad.size:
        t_bad = float(ts[bad[0]])
        raise PositivityError(
            f"mass is non-positive at t = {t_bad}", t_first_zero=t_bad
        )


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def constant_profile(mass, omega=None, omega_sq=None, domain=(0.0, 10.0)):
    if mass <= 0:
        raise PositivityError(f"mass must be positive, got {mass}")
    return OscillatorProfile(
        kind="constant",
        domain=(float(domain[0]), float(domain[1])),
        params={"mass": float(mass), "omega": omega, "omega_sq": omega_sq},
        mass_law=_Constant(mass),
        freq_sq_law=_freq_law_from_args(omega, omega_sq),
    )


def caldirola_kanai(m0, gamma, omega=None, omega_sq=None, domain=(0.0, 10.0)):
    """Exponential-mass oscillator m(t) = m0 exp(gamma t).

    The frequency may be attached here or later (e.g. via
    :func:`solvable_frequency`).
    """
    if m0 <= 0:
        raise PositivityError(f"m0 must be positive, got {m0}")
    return OscillatorProfile(
        kind="caldirola-kanai",
        domain=(float(domain[0]), float(domain[1])),
        params={"m0": float(m0), "gamma": float(gamma), "omega": omega,
                "omega_sq": omega_sq},
        mass_law=_Exponential(m0, gamma),
        freq_sq_law=_freq_law_from_args(omega, omega_sq),
    )


def solvable_mass_family(m0, mu, nu, alpha, omega=None, omega_sq=None,
                         domain=(0.0, 10.0)):
    """Mass family m(t) = m0 (mu e^{alpha t} + nu e^{-alpha t})^2.

    With a constant attached frequency this is the exactly-solvable family:
    the solvability residual vanishes identically for
    omega0^2 = omega^2 - alpha^2.
    """
    if m0 <= 0:
        raise PositivityError(f"m0 must be positive, got {m0}")
    t0, t1 = float(domain[0]), float(domain[1])
    # s(t) = mu e^{at} + nu e^{-at} vanishes at exp(2 a t) = -nu/mu
    t_zero = None
    if alpha == 0.0:
        if mu + nu == 0.0:
            t_zero = t0
    elif mu == 0.0:
        if nu == 0.0:
            t_zero = t0
    else:
        ratio = -nu / mu
        if ratio > 0.0:
            t_zero = math.log(ratio) / (2.0 * alpha)
    if t_zero is not None and t0 - _DOMAIN_SLACK <= t_zero <= t1 + _DOMAIN_SLACK:
        raise PositivityError(
            f"mass vanishes at t = {t_zero} inside domain [{t0}, {t1}]",
            t_first_zero=float(np.clip(t_zero, t0, t1)),
        )
    return OscillatorProfile(
        kind="solvable-mass-family",
        domain=(t0, t1),
        params={"m0": float(m0), "mu": float(mu), "nu": float(nu),
                "alpha": float(alpha), "omega": omega, "omega_sq": omega_sq},
        mass_law=_SquaredExpSum(m0, mu, nu, alpha),
        freq_sq_law=_freq_law_from_args(omega, omega_sq),
    )


def polynomial_profile(mass_coeffs, freq_sq_coeffs, domain=(0.0, 10.0)):
    """Polynomial m(t) and omega^2(t); coefficients in increasing order."""
    law = _Polynomial(mass_coeffs)
    _check_mass_positive_sampled(law, domain)
    return OscillatorProfile(
        kind="polynomial",
        domain=(float(domain[0]), float(domain[1])),
        params={"mass_coeffs": [float(c) for c in mass_coeffs],
                "freq_sq_coeffs": [float(c) for c in freq_sq_coeffs]},
        mass_law=law,
        freq_sq_law=_Polynomial(freq_sq_coeffs),
    )


def sinusoidal_profile(mass_base, mass_amp, mass_rate, mass_phase,
                       freq_sq_base, freq_sq_amp, freq_sq_rate, freq_sq_phase,
                       domain=(0.0, 10.0)):
    """Sinusoidally modulated mass and frequency-squared.

    m(t) = mass_base + mass_amp sin(mass_rate t + mass_phase), similarly for
    omega^2.  The mass modulation must keep m(t) > 0; omega^2 may go negative.
    """
    if mass_base - abs(mass_amp) <= 0:
        raise PositivityError(
            f"mass modulation reaches zero: base {mass_base}, amp {mass_amp}"
        )
    return OscillatorProfile(
        kind="sinusoidal-modulated",
        domain=(float(domain[0]), float(domain[1])),
        params={"mass_base": float(mass_base), "mass_amp": float(mass_amp),
                "mass_rate": float(mass_rate), "mass_phase": float(mass_phase),
                "freq_sq_base": float(freq_sq_base),
                "freq_sq_amp": float(freq_sq_amp),
                "freq_sq_rate": float(freq_sq_rate),
                "freq_sq_phase": float(freq_sq_phase)},
        mass_law=_Sinusoidal(mass_base, mass_amp, mass_rate, mass_phase),
        freq_sq_law=_Sinusoidal(freq_sq_base, freq_sq_amp, freq_sq_rate,
                                freq_sq_phase),
    )


def tabulated_profile(mass_times, mass_values, freq_times, freq_sq_values,
                      domain=None):
    """Profile interpolated from (t, m) and (t, omega^2) samples."""
    mass_law = _Spline(mass_times, mass_values)
    freq_law = _Spline(freq_times, freq_sq_values)
    if domain is None:
        domain = (max(mass_law.t_lo, freq_law.t_lo),
                  min(mass_law.t_hi, freq_law.t_hi))
    if not (mass_law.t_lo <= domain[0] and domain[1] <= mass_law.t_hi
            and freq_law.t_lo <= domain[0] and domain[1] <= freq_law.t_hi):
        raise DomainError("requested domain extends beyond the tabulated samples")
    profile = OscillatorProfile(
        kind="tabulated",
        domain=(float(domain[0]), float(domain[1])),
        params={"n_mass": len(mass_values), "n_freq": len(freq_sq_values)},
        mass_law=mass_law,
        freq_sq_law=freq_law,
    )
    _check_mass_positive_sampled(mass_law, profile.domain)
    return profile


def with_frequency(profile, omega=None, omega_sq=None):
    """Attach a constant frequency to a profile (replacing any present)."""
    law = _freq_law_from_args(omega, omega_sq)
    if law is None:
        raise UsageError("with_frequency needs omega or omega_sq")
    params = dict(profile.params)
    params.update({"omega": omega, "omega_sq": omega_sq})
    return OscillatorProfile(
        kind=profile.kind, domain=profile.domain, params=params,
        mass_law=profile.mass_law, freq_sq_law=law,
    )


def solvable_frequency(profile, omega0, n_check=2001):
    """Attach omega(t) = sqrt(omega0^2 + m''/2m - (m'/2m)^2) to a mass profile.

    The resulting oscillator satisfies the exact-solvability condition with
    zero residual.  Raises ImaginaryFrequencyError when the radicand is
    negative somewhere on the domain (checked on a dense sample).
    """
    law = _SolvableFreq(profile.mass_law, omega0)
    ts = np.linspace(profile.domain[0], profile.domain[1], n_check)
    vals = np.array([law.value(t) for t in ts])
    bad = np.nonzero(vals < 0.0)[0]
    if bad.size:
        interval = (float(ts[bad[0]]), float(ts[bad[-1]]))
        raise ImaginaryFrequencyError(
            f"radicand negative on [{interval[0]}, {interval[1]}] "
            f"(min {vals.min()})",
            interval=interval,
        )
    params = dict(profile.params)
    params["omega0"] = float(omega0)
    return OscillatorProfile(
        kind=profile.kind, domain=profile.domain, params=params,
        mass_law=profile.mass_law, freq_sq_law=law,
    )


# ---------------------------------------------------------------------------
# Config / CSV interfaces
# ---------------------------------------------------------------------------

def load_samples_csv(path):
    """Read a two-column (time, value) CSV with a header row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and not row[0].startswith("#")]
    if len(rows) < 2:
        raise ConfigError(f"{path}: expected a header row and data rows")
    header = rows[0]
    if len(header) < 2:
        raise ConfigError(f"{path}: expected two columns (time, value)")
    try:
        float(header[0])
        raise ConfigError(f"{path}: missing header row")
    except ValueError:
        pass
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed data row ({exc})") from exc
    return data[:, 0], data[:, 1]


def profile_from_config(cfg):
    """Build a profile from a structured key-value description.

    The dict carries a ``kind`` tag plus numeric parameters, or for
    ``tabulated`` the paths of two (t, value) CSV files.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("profile config must be a mapping")
    try:
        kind = cfg["kind"]
    except KeyError:
        raise ConfigError("profile config needs a 'kind' entry") from None
    if kind not in KINDS:
        raise ConfigError(f"unknown profile kind {kind!r}; expected one of {KINDS}")
    domain = tuple(cfg.get("domain", (0.0, 10.0)))
    common = {"omega": cfg.get("omega"), "omega_sq": cfg.get("omega_sq"),
              "domain": domain}
    try:
        if kind == "constant":
            profile = constant_profile(cfg["mass"], **common)
        elif kind == "caldirola-kanai":
            profile = caldirola_kanai(cfg["m0"], cfg["gamma"], **common)
        elif kind == "solvable-mass-family":
            profile = solvable_mass_family(cfg["m0"], cfg["mu"], cfg["nu"],
                                           cfg["alpha"], **common)
        elif kind == "polynomial":
            profile = polynomial_profile(cfg["mass_coeffs"],
                                         cfg["freq_sq_coeffs"], domain=domain)
        elif kind == "sinusoidal-modulated":
            profile = sinusoidal_profile(
                cfg["mass_base"], cfg.get("mass_amp", 0.0),
                cfg.get("mass_rate", 1.0), cfg.get("mass_phase", 0.0),
                cfg["freq_sq_base"], cfg.get("freq_sq_amp", 0.0),
                cfg.get("freq_sq_rate", 1.0), cfg.get("freq_sq_phase", 0.0),
                domain=domain)
        else:
            tm, vm = load_samples_csv(cfg["mass_csv"])
            tw, vw = load_samples_csv(cfg["freq_sq_csv"])
            profile = tabulated_profile(tm, vm, tw, vw,
                                        domain=cfg.get("domain"))
    except KeyError as exc:
        raise ConfigError(f"profile kind {kind!r} is missing parameter {exc}") from exc
    if "solvable_omega0" in cfg:
        profile = solvable_frequency(profile, cfg["solvable_omega0"])
    return profile
