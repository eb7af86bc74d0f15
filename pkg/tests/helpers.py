"""Shared test utilities: random smooth profiles and horizon-safe solves."""

import numpy as np

from tdho import PositivityHorizonError, sinusoidal_profile, solve_ermakov
from tdho.profiles import caldirola_kanai, constant_profile


def random_smooth_profile(rng, t_span=6.0, mass_mod=0.35, freq_mod=0.5):
    """Sinusoidally modulated mass and frequency with bounded modulation."""
    mass_base = rng.uniform(0.7, 1.4)
    return sinusoidal_profile(
        mass_base=mass_base,
        mass_amp=rng.uniform(0.0, mass_mod) * mass_base,
        mass_rate=rng.uniform(0.3, 2.0),
        mass_phase=rng.uniform(0.0, 2.0 * np.pi),
        freq_sq_base=rng.uniform(0.5, 1.8),
        freq_sq_amp=rng.uniform(0.0, freq_mod),
        freq_sq_rate=rng.uniform(0.3, 2.0),
        freq_sq_phase=rng.uniform(0.0, 2.0 * np.pi),
        domain=(0.0, t_span),
    )


def solve_windowed(profile, k2, chi0, chidot0, t_req, **kw):
    """Solve; on a positivity horizon return the partial solution and a
    window ending at 90% of the horizon."""
    try:
        return solve_ermakov(profile, k2, chi0, chidot0, t_req, **kw), t_req
    except PositivityHorizonError as exc:
        return exc.partial, 0.9 * min(exc.t_star, exc.partial.t_max)


def shift_profile(profile, t1):
    """Profile seen from t1 onward, for shift-closed kinds only."""
    p = profile.params
    span = profile.domain[1] - t1
    if profile.kind == "constant":
        return constant_profile(p["mass"], omega=p.get("omega"),
                                omega_sq=p.get("omega_sq"), domain=(0.0, span))
    if profile.kind == "caldirola-kanai":
        m0 = p["m0"] * np.exp(p["gamma"] * t1)
        return caldirola_kanai(m0, p["gamma"], omega=p.get("omega"),
                               omega_sq=p.get("omega_sq"), domain=(0.0, span))
    if profile.kind == "sinusoidal-modulated":
        return sinusoidal_profile(
            p["mass_base"], p["mass_amp"], p["mass_rate"],
            p["mass_phase"] + p["mass_rate"] * t1,
            p["freq_sq_base"], p["freq_sq_amp"], p["freq_sq_rate"],
            p["freq_sq_phase"] + p["freq_sq_rate"] * t1,
            domain=(0.0, span),
        )
    raise ValueError(f"no shift rule for kind {profile.kind!r}")
