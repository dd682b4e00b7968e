import math
from dataclasses import replace

import pytest
from scipy.constants import c

from heraldkit.dispersion import CrystalSpec, load_sellmeier, omega_from_nm, internal_angle, refractive_index
from heraldkit.errors import DegeneratePhaseMatchingError, DomainError, NoSolutionError
from heraldkit.phasematching import (
    CollectionMode,
    PumpSpec,
    angular_fwhm,
    bandwidth_scan,
    delta_k,
    extract_bandwidth,
    phase_match_point,
    phi,
    solve_central,
)

# Frozen from the solver on the shipped default set; the shipped MgO-doped set
# is used where the ~810 nm operating point matters.
DEFAULT_LAMBDA_S = 786.589


@pytest.fixture(scope="module")
def crystal():
    return CrystalSpec(5e-3, 7.36e-6, 131.0, load_sellmeier("jundt1997_congruent_e"))


@pytest.fixture(scope="module")
def pump():
    return PumpSpec(532.0, 144e-6)


@pytest.fixture(scope="module")
def sol(crystal, pump):
    return solve_central(crystal, pump, math.radians(1.0))


def test_solution_residual_and_energy(crystal, pump, sol):
    assert abs(sol.residual_dkz) * crystal.effective_length < 1e-6
    assert 1 / pump.wavelength == pytest.approx(1 / sol.lambda_s + 1 / sol.lambda_i, rel=1e-9)
    dk = delta_k(crystal, pump, sol.Omega_s, sol.theta_s_int, sol.theta_i_int)
    assert abs(dk[2]) * crystal.effective_length < 1e-6
    assert abs(dk[0]) < 1e-6


def test_phi_is_one_at_solution(crystal, pump, sol):
    p = phase_match_point(crystal, pump, sol.Omega_s, sol.theta_s_int, sol.theta_i_int)
    assert p.phi == pytest.approx(1.0, abs=1e-12)
    assert p.phi <= 1.0


def test_default_set_solution_frozen(sol):
    assert sol.lambda_s == pytest.approx(DEFAULT_LAMBDA_S, abs=1e-3)
    assert math.degrees(sol.theta_i_ext) == pytest.approx(2.0, abs=0.5)


def test_mgo_set_near_810(pump):
    cr = CrystalSpec(5e-3, 7.36e-6, 131.0, load_sellmeier("gayer2008_mgo_e"))
    s = solve_central(cr, pump, math.radians(1.0))
    assert s.lambda_s == pytest.approx(810.0, abs=15.0)
    assert math.degrees(s.theta_i_ext) == pytest.approx(2.0, abs=0.5)


def test_toy_degenerate_collinear():
    toy = load_sellmeier("toy_cauchy")
    pump = PumpSpec(532.0, 144e-6)
    kp = refractive_index(532.0, 25.0, toy) * omega_from_nm(532.0) / c
    kd = refractive_index(1064.0, 25.0, toy) * omega_from_nm(1064.0) / c
    cr = CrystalSpec(5e-3, 2 * math.pi / (kp - 2 * kd), 25.0, toy)
    s = solve_central(cr, pump, 0.0)
    assert s.lambda_s == pytest.approx(1064.0, rel=1e-4)
    assert s.lambda_i == pytest.approx(1064.0, rel=1e-4)
    assert abs(s.residual_dkz) * cr.effective_length < 1e-6


def test_constant_index_has_no_qpm_root(pump):
    # collinear dk_z is omega independent when n is constant, so it cannot vanish
    cr = CrystalSpec(5e-3, 7.36e-6, 25.0, load_sellmeier("constant_n2"))
    with pytest.raises(NoSolutionError, match="dk_z ranges"):
        solve_central(cr, pump, 0.0)


def test_no_solution_diagnostics(pump):
    cr = CrystalSpec(5e-3, 30e-6, 131.0, load_sellmeier("jundt1997_congruent_e"))
    with pytest.raises(NoSolutionError, match="dk_z ranges"):
        solve_central(cr, pump, math.radians(1.0))


def test_delta_k_matches_direct_formula(crystal, pump):
    sell = crystal.sellmeier
    lam_s = 810.0
    om_s = omega_from_nm(lam_s)
    om_i = pump.omega - om_s
    lam_i = 2e9 * math.pi * c / om_i
    ns, ni = refractive_index(lam_s, 131.0, sell), refractive_index(lam_i, 131.0, sell)
    npump = refractive_index(532.0, 131.0, sell)
    ts = internal_angle(math.radians(1.0), ns)
    ti = internal_angle(math.radians(2.0), ni)
    expected = (npump * pump.omega / c - ns * om_s / c * math.cos(ts) - ni * om_i / c * math.cos(ti)
                - 2 * math.pi / 7.36e-6)
    dkx, dky, dkz = delta_k(crystal, pump, om_s, ts, ti)
    assert dkz == pytest.approx(expected, rel=1e-12)
    assert dkx == pytest.approx(ni * om_i / c * math.sin(ti) - ns * om_s / c * math.sin(ts), rel=1e-12)
    assert dky == 0.0


def test_delta_k_collinear_transverse_zero(crystal, pump):
    dkx, dky, _ = delta_k(crystal, pump, omega_from_nm(800.0), 0.0, 0.0)
    assert dkx == 0.0 and dky == 0.0


def test_delta_k_rejects_signal_above_pump(crystal, pump):
    with pytest.raises(DomainError):
        delta_k(crystal, pump, pump.omega * 1.01, 0.0, 0.0)


def test_phi_bounded_off_solution(crystal, pump, sol):
    v = phi(crystal, pump, sol.Omega_s * 1.001, sol.theta_s_int, sol.theta_i_int)
    assert 0.0 <= v < 1.0


def test_angular_fwhm_closed_form():
    m = CollectionMode(3.9e-6, 82e-6)
    a = 2 * math.sqrt(math.log(2))
    # hand evaluation: 1.66511 * 810e-9 / (pi * 82e-6)
    assert angular_fwhm(m, 810.0) == pytest.approx(5.2356e-3, rel=1e-4)
    assert angular_fwhm(m, 810.0) == pytest.approx(a * 810e-9 / (math.pi * 82e-6), rel=1e-15)
    assert angular_fwhm(m.with_waist(164e-6), 810.0) == pytest.approx(0.5 * angular_fwhm(m, 810.0), rel=1e-15)
    m2 = CollectionMode(5.6e-6, 158e-6, central_wavelength=1550.0)
    assert angular_fwhm(m2) == pytest.approx(a * 1550e-9 / (math.pi * 158e-6), rel=1e-15)


def test_bandwidth_monotone_in_waist(crystal, pump, sol):
    widths = [extract_bandwidth(crystal, pump, sol, CollectionMode(3.9e-6, w * 1e-6))
              for w in (60, 82, 105, 132, 170, 220)]
    assert all(a > b for a, b in zip(widths, widths[1:]))


def test_bandwidth_grid_convergence(crystal, pump, sol):
    m = CollectionMode(3.9e-6, 82e-6)
    coarse = bandwidth_scan(crystal, pump, sol, m, grid_points=401)
    fine = bandwidth_scan(crystal, pump, sol, m, grid_points=1601)
    assert coarse.delta_nm / 50 > 0.01 * sol.lambda_s / 400  # coarse step already below delta/50
    assert fine.delta_nm == pytest.approx(coarse.delta_nm, abs=5e-4)


def test_heralded_arm_bandwidth(crystal, pump, sol):
    r = bandwidth_scan(crystal, pump, sol, CollectionMode(5.6e-6, 158e-6), arm="heralded")
    assert r.delta_nm > 0
    lo = min(e[0] for e in r.edges_nm)
    hi = max(e[1] for e in r.edges_nm)
    assert lo < sol.lambda_i < hi


def test_bandwidth_rejects_unknown_arm(crystal, pump, sol):
    with pytest.raises(ValueError):
        bandwidth_scan(crystal, pump, sol, CollectionMode(3.9e-6, 82e-6), arm="both")


def test_degenerate_phase_matching_error(crystal, pump, sol):
    # the conjugate search is centred far from the emission cone
    off = replace(sol, theta_i_int=sol.theta_i_int + 0.3)
    with pytest.raises(DegeneratePhaseMatchingError):
        bandwidth_scan(crystal, pump, off, CollectionMode(3.9e-6, 82e-6))
