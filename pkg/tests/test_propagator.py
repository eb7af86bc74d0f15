"""Closed-form propagator: maps, factorization, Gaussian evolution."""

import math

import numpy as np
import pytest

from tdho import (
    AuxiliarySolution,
    GaussianState,
    SymplecticMap,
    UsageError,
    caldirola_kanai,
    constant_profile,
    evolve_gaussian,
    factorize,
    fidelity,
    from_gaussian,
    fundamental_matrix_dense,
    grid_propagate,
    heisenberg_map,
    phase_integral,
    solve_classical,
    solve_ermakov,
    symplectic_coefficients,
)
from helpers import random_smooth_profile, shift_profile, solve_windowed

UNIT = constant_profile(1.0, omega=1.0)


# ---------------------------------------------------------------------------
# Phase integral
# ---------------------------------------------------------------------------

def test_phase_integral_zero_at_origin():
    sol = solve_ermakov(UNIT, 1, 1.0, 0.0, 2.0)
    assert phase_integral(UNIT, sol, 0.0) == 0.0


def test_phase_integral_constant_integrand():
    """m = 1, chi = 1: alpha(t) = t."""
    sol = solve_ermakov(UNIT, 1, 1.0, 0.0, 4.0)
    for t in (0.3, 1.9, 4.0):
        assert abs(phase_integral(UNIT, sol, t) - t) < 1e-12


def test_phase_integral_linear_chi():
    """chi = 1 + t: alpha(t) = t/(1+t), so alpha(1) = 1/2."""
    free = constant_profile(1.0, omega=0.0)
    sol = solve_classical(free, 1.0, 1.0, 2.0)
    assert abs(phase_integral(free, sol, 1.0) - 0.5) < 1e-10
    assert abs(phase_integral(free, sol, 2.0) - 2.0 / 3.0) < 1e-10


def test_phase_integral_quadrature_fallback():
    """Hand-built solutions carry no alpha state; quadrature takes over."""
    free = constant_profile(1.0, omega=0.0)
    sol = AuxiliarySolution.from_callable(
        0, lambda t: 1.0 + t, lambda t: 1.0, lambda t: 0.0, t_max=2.0,
        profile=free)
    assert sol.alpha(1.0) is None
    assert abs(phase_integral(free, sol, 1.0) - 0.5) < 1e-10


def test_phase_integral_monotone():
    p = random_smooth_profile(np.random.default_rng(0))
    sol = solve_ermakov(p, 1, 1.0, 0.3, 5.0)
    vals = [phase_integral(p, sol, float(t)) for t in np.linspace(0.0, 5.0, 40)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[0] == 0.0


# ---------------------------------------------------------------------------
# Heisenberg map
# ---------------------------------------------------------------------------

def test_heisenberg_identity_at_zero():
    sol = solve_ermakov(UNIT, 1, 2.0, -0.3, 1.0)
    smap = heisenberg_map(UNIT, sol, 0.0)
    assert (smap.a, smap.b, smap.c, smap.d) == (1.0, 0.0, 0.0, 1.0)


def test_heisenberg_rotation():
    """m = omega = 1, chi = 1: the map is a rotation by t."""
    sol = solve_ermakov(UNIT, 1, 1.0, 0.0, 3.0)
    for t in (0.5, 1.2, 2.9):
        smap = heisenberg_map(UNIT, sol, t)
        assert abs(smap.a - math.cos(t)) < 1e-12
        assert abs(smap.b - math.sin(t)) < 1e-12
        assert abs(smap.c + math.sin(t)) < 1e-12
        assert abs(smap.d - math.cos(t)) < 1e-12


def test_heisenberg_free_particle():
    """m = 1, omega = 0, chi = 1: a = 1, b = t, c = 0, d = 1."""
    free = constant_profile(1.0, omega=0.0)
    sol = solve_classical(free, 1.0, 0.0, 3.0)
    smap = heisenberg_map(free, sol, 3.0)
    assert abs(smap.a - 1.0) < 1e-12
    assert abs(smap.b - 3.0) < 1e-12
    assert abs(smap.c) < 1e-12
    assert abs(smap.d - 1.0) < 1e-12


def test_cross_branch_gauge_equivalence():
    """k^2 = 0 via chi = cos t and k^2 = 1 via chi = 1: same map."""
    sol0 = solve_classical(UNIT, 1.0, 0.0, 1.0)
    sol1 = solve_ermakov(UNIT, 1, 1.0, 0.0, 1.0)
    for t in np.linspace(0.0, 1.0, 11):
        m0 = heisenberg_map(UNIT, sol0, float(t)).as_matrix()
        m1 = heisenberg_map(UNIT, sol1, float(t)).as_matrix()
        assert np.abs(m0 - m1).max() < 1e-8


def test_determinant_structural():
    """det = 1 on 1000 random draws, solver accuracy notwithstanding.

    The determinant identity holds for any endpoint data, so deliberately
    loose solves keep this cheap without weakening the check.
    """
    rng = np.random.default_rng(21)
    for _ in range(1000):
        p = random_smooth_profile(rng)
        k2 = int(rng.choice([-1, 0, 1]))
        sol, t_hi = solve_windowed(p, k2, rng.uniform(0.5, 2.0),
                                   rng.uniform(-0.5, 0.5), rng.uniform(0.3, 4.0),
                                   rtol=1e-8, atol=1e-10)
        smap = heisenberg_map(p, sol, 0.97 * t_hi)
        assert abs(smap.det() - 1.0) < 1e-9


# ---------------------------------------------------------------------------
# Factorization
# ---------------------------------------------------------------------------

def test_factorize_identity_at_zero():
    sol = solve_ermakov(UNIT, 1, 1.7, 0.4, 1.0)
    fact = factorize(UNIT, sol, 0.0)
    assert fact.phase_integral == 0.0
    assert fact.log_dilatation_t == fact.log_dilatation_0
    assert fact.shear_t == fact.shear_0
    m = fact.induced_map().as_matrix()
    assert np.abs(m - np.eye(2)).max() < 1e-15


def test_factorize_rotation_bundle():
    """chi = 1 equilibrium: all dilatations and shears vanish, alpha = t."""
    sol = solve_ermakov(UNIT, 1, 1.0, 0.0, 2.0)
    fact = factorize(UNIT, sol, 1.3)
    assert abs(fact.log_dilatation_t) < 1e-13
    assert abs(fact.shear_t) < 1e-13
    assert fact.log_dilatation_0 == 0.0
    assert fact.shear_0 == 0.0
    assert abs(fact.phase_integral - 1.3) < 1e-12
    m = fact.induced_map()
    assert abs(m.a - math.cos(1.3)) < 1e-12
    assert abs(m.b - math.sin(1.3)) < 1e-12


def test_factorize_caldirola_kanai_vs_oracle():
    """Classical-gauge factorization against the fundamental matrix.

    The (1, 0) classical seed on this profile crosses zero near t = 1.8, so
    the comparison runs on the positive window, not beyond.
    """
    p = caldirola_kanai(1.0, 0.4, omega=1.0)
    sol, t_hi = solve_windowed(p, 0, 1.0, 0.0, 5.0)
    assert t_hi < 5.0  # the horizon is real
    fund = fundamental_matrix_dense(p, t_hi)
    worst = 0.0
    for t in np.linspace(0.0, t_hi, 40):
        diff = (factorize(p, sol, float(t)).induced_map().as_matrix()
                - fund(float(t)).as_matrix())
        worst = max(worst, float(np.abs(diff).max()))
    assert worst < 1e-6, f"factorization vs oracle {worst:.2e}"


def test_factorization_matches_heisenberg_everywhere():
    """Matrix-product route equals the closed-form coefficients."""
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(25):
        p = random_smooth_profile(rng)
        k2 = int(rng.choice([-1, 0, 1]))
        sol, t_hi = solve_windowed(p, k2, rng.uniform(0.6, 1.8),
                                   rng.uniform(-0.4, 0.4), 3.0)
        for t in np.linspace(0.0, 0.97 * t_hi, 7):
            diff = (factorize(p, sol, float(t)).induced_map().as_matrix()
                    - heisenberg_map(p, sol, float(t)).as_matrix())
            worst = max(worst, float(np.abs(diff).max()))
    assert worst < 1e-9, f"factorize vs heisenberg {worst:.2e}"


def test_cocycle_property():
    """S(t2 <- 0) equals S(t2 <- t1) S(t1 <- 0) with a re-seeded middle leg."""
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(5):
        p = random_smooth_profile(rng, t_span=4.0)
        sol = solve_ermakov(p, 1, 1.0, 0.2, 3.0)
        t1, t2 = 1.1, 2.7
        s_full = heisenberg_map(p, sol, t2)
        s_first = heisenberg_map(p, sol, t1)
        shifted = shift_profile(p, t1)
        sol_mid = solve_ermakov(shifted, 1, sol.chi(t1), sol.chi_dot(t1), t2 - t1)
        s_mid = heisenberg_map(shifted, sol_mid, t2 - t1)
        diff = np.abs(s_mid.compose(s_first).as_matrix() - s_full.as_matrix()).max()
        worst = max(worst, float(diff))
    assert worst < 1e-8, f"cocycle defect {worst:.2e}"


def test_k_to_zero_continuity_order():
    """Coefficient formulas approach the k = 0 branch at O(k^2)."""
    rng = np.random.default_rng(13)
    for _ in range(10):
        args = dict(
            alpha=rng.uniform(0.2, 1.5),
            chi=rng.uniform(0.5, 2.0), chi_dot=rng.uniform(-0.5, 0.5),
            chi0=rng.uniform(0.5, 2.0), chidot0=rng.uniform(-0.5, 0.5),
            m=rng.uniform(0.5, 2.0), m0=rng.uniform(0.5, 2.0),
        )
        base = np.array(symplectic_coefficients(0.0, **args))
        k_hi, k_lo = 0.2, 0.1
        e_hi = np.abs(np.array(symplectic_coefficients(k_hi ** 2, **args)) - base).max()
        e_lo = np.abs(np.array(symplectic_coefficients(k_lo ** 2, **args)) - base).max()
        order = math.log2(e_hi / e_lo)
        assert order >= 1.9, f"observed k->0 order {order:.3f}"


# ---------------------------------------------------------------------------
# Gaussian evolution
# ---------------------------------------------------------------------------

def test_evolve_identity_factorization():
    sol = solve_ermakov(UNIT, 1, 1.4, 0.2, 1.0)
    fact = factorize(UNIT, sol, 0.0)
    state = GaussianState.pure(x0=0.7, p0=-0.4, cov_xx=0.6, cov_xp=0.1)
    out = evolve_gaussian(fact, state)
    assert abs(out.mean_x - state.mean_x) < 1e-12
    assert abs(out.mean_p - state.mean_p) < 1e-12
    assert abs(out.cov_xx - state.cov_xx) < 1e-12
    assert abs(out.cov_xp - state.cov_xp) < 1e-12
    assert abs(out.phase - state.phase) < 1e-12


def test_evolve_ground_state_rotation_invariance():
    sol = solve_ermakov(UNIT, 1, 1.0, 0.0, 3.0)
    state = GaussianState.ground()
    for t in (0.9, 2.4):
        out = evolve_gaussian(factorize(UNIT, sol, t), state)
        assert abs(out.mean_x) < 1e-13 and abs(out.mean_p) < 1e-13
        assert abs(out.cov_xx - 0.5) < 1e-12
        assert abs(out.cov_pp - 0.5) < 1e-12
        assert abs(out.cov_xp) < 1e-12


def test_evolve_coherent_state_means():
    sol = solve_ermakov(UNIT, 1, 1.0, 0.0, 3.0)
    state = GaussianState.coherent(1.0, 0.0)
    for t in (0.6, 1.7, 3.0):
        out = evolve_gaussian(factorize(UNIT, sol, t), state)
        assert abs(out.mean_x - math.cos(t)) < 1e-12
        assert abs(out.mean_p + math.sin(t)) < 1e-12


def test_evolve_phase_is_classical_action_minus_zero_point():
    """Coherent state at m = omega = 1: phase = -sin(2t)/4 - t/2.

    The action integral of (p xdot - H) along x = cos, p = -sin is
    -sin(2t)/4; the remaining -t/2 is the ground-level contribution.
    """
    sol = solve_ermakov(UNIT, 1, 1.0, 0.0, 3.0)
    state = GaussianState.coherent(1.0, 0.0)
    for t in (0.7, 2.0):
        out = evolve_gaussian(factorize(UNIT, sol, t), state)
        expected = -math.sin(2.0 * t) / 4.0 - t / 2.0
        assert abs(out.phase - expected) < 1e-10, (
            f"phase {out.phase} vs action {expected}")


def test_evolve_preserves_purity_and_norm():
    rng = np.random.default_rng(17)
    for _ in range(20):
        p = random_smooth_profile(rng)
        sol, t_hi = solve_windowed(p, 1, rng.uniform(0.6, 1.6),
                                   rng.uniform(-0.3, 0.3), 4.0)
        state = GaussianState.pure(x0=rng.uniform(-1, 1), p0=rng.uniform(-1, 1),
                                   cov_xx=rng.uniform(0.3, 0.8),
                                   cov_xp=rng.uniform(-0.2, 0.2))
        out = evolve_gaussian(factorize(p, sol, 0.95 * t_hi), state)
        assert abs(out.purity_det() - 0.25) < 1e-10
        assert abs(out.log_norm) < 1e-10


def test_evolve_mixed_state_covariance():
    """Mixed states ride the same symplectic map; purity gap is preserved."""
    sol = solve_ermakov(UNIT, 1, 1.0, 0.0, 2.0)
    mixed = GaussianState(0.5, 0.0, 1.0, 0.0, 1.0)  # det = 1 > 1/4
    out = evolve_gaussian(factorize(UNIT, sol, 1.1), mixed)
    assert abs(out.purity_det() - 1.0) < 1e-10
    assert abs(out.mean_x - 0.5 * math.cos(1.1)) < 1e-12


def test_evolve_matches_grid_oracle_single_case():
    p = random_smooth_profile(np.random.default_rng(2), t_span=4.0)
    sol = solve_ermakov(p, 1, 1.0, 0.0, 2.0)
    state = GaussianState.pure(x0=0.5, p0=0.3, cov_xx=0.45)
    ev = evolve_gaussian(factorize(p, sol, 1.5), state)
    g0 = from_gaussian(state, -14, 14, 1024)
    gt = grid_propagate(p, g0, 1.5, 3000)
    ref = from_gaussian(ev, -14, 14, 1024)
    assert fidelity(gt, ref) > 1.0 - 1e-6


def test_kernel_caustic_crossing():
    """Rotation through alpha > pi (a caustic) keeps the Gaussian exact."""
    long_sol = solve_ermakov(UNIT, 1, 1.0, 0.0, 8.0)
    state = GaussianState.pure(x0=1.0, p0=0.0, cov_xx=0.2)  # squeezed
    for t in (3.3, 6.8):
        out = evolve_gaussian(factorize(UNIT, long_sol, t), state)
        # covariance must match the rotated covariance exactly
        c, s = math.cos(t), math.sin(t)
        rot = np.array([[c, s], [-s, c]])
        ref = rot @ state.covariance() @ rot.T
        assert np.abs(out.covariance() - ref).max() < 1e-12
        assert abs(out.purity_det() - 0.25) < 1e-12
        assert abs(out.log_norm) < 1e-10


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

def test_symplectic_map_helpers():
    m = SymplecticMap(1.0, 2.0, 0.0, 1.0)
    assert m.det() == 1.0
    assert m.apply(1.0, 1.0) == (3.0, 1.0)
    eye = SymplecticMap.identity()
    comp = m.compose(eye)
    assert np.abs(comp.as_matrix() - m.as_matrix()).max() == 0.0


def test_gaussian_state_validation():
    with pytest.raises(UsageError):
        GaussianState(0.0, 0.0, 0.5, 0.0, 0.4)  # det < 1/4
    with pytest.raises(UsageError):
        GaussianState(0.0, 0.0, -0.5, 0.0, 0.5)
    s = GaussianState.pure(cov_xx=0.7, cov_xp=0.3)
    assert s.is_pure()
    mixed = GaussianState(0.0, 0.0, 1.0, 0.0, 1.0)
    assert not mixed.is_pure()
    with pytest.raises(UsageError):
        mixed.wavefunction(np.linspace(-1, 1, 8))


def test_gaussian_wavefunction_normalized_and_centered():
    s = GaussianState.pure(x0=0.4, p0=1.1, cov_xx=0.35, cov_xp=-0.1)
    x = np.linspace(-12, 12, 4096)
    psi = s.wavefunction(x)
    dx = x[1] - x[0]
    assert abs(np.sum(np.abs(psi) ** 2) * dx - 1.0) < 1e-9
    xbar = float(np.sum(x * np.abs(psi) ** 2) * dx)
    assert abs(xbar - 0.4) < 1e-9


def test_kernel_factor_internal_consistency():
    """The kernel's linear coefficient must equal a' xb' + i pb'.

    Checks the Gaussian-integral algebra directly: beta/denom is the linear
    term produced by the integral, and the recentered form must reproduce it.
    """
    from tdho.propagator import _apply_kernel_segment

    rng = np.random.default_rng(23)
    for _ in range(50):
        k2 = float(rng.choice([-1.0, 0.0, 1.0]))
        seg = float(rng.uniform(0.05, 0.6))
        a = complex(rng.uniform(0.3, 3.0), rng.uniform(-1.0, 1.0))
        xb, pb = float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))
        c = complex(rng.uniform(-0.2, 0.2), rng.uniform(-2, 2))
        xb2, pb2, a2, c2 = _apply_kernel_segment(k2, seg, xb, pb, a, c)
        from tdho.propagator import _cos_like, _sinc_like
        denom = _cos_like(k2, seg) + 1j * _sinc_like(k2, seg) * a
        lin = (a * xb + 1j * pb) / denom
        assert abs((a2 * xb2 + 1j * pb2) - lin) < 1e-12
        assert a2.real > 0.0


def test_heisenberg_rejects_nonpositive_chi():
    from tdho import PositivityError, AuxiliarySolution

    bad = AuxiliarySolution.from_callable(
        0, lambda t: 1.0 - t, lambda t: -1.0, lambda t: 0.0, t_max=2.0)
    with pytest.raises(PositivityError):
        heisenberg_map(constant_profile(1.0, omega=0.0), bad, 1.5)
