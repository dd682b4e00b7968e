"""Quasi-phase-matching geometry and geometrically selected bandwidths.

Geometry convention: the pump propagates along z; the signal leaves at
internal angle ``theta_s`` on the +x side and the idler at ``theta_i`` on the
-x side. Both angles are stored as non-negative magnitudes, so transverse
momentum balances when ``k_s sin(theta_s) = k_i sin(theta_i)``. Everything
lies in the x-z plane, hence ``dk_y = 0``.

The grating spans ``[-half_length, +half_length]`` along z, which makes the
longitudinal factor ``sinc^2(dk_z * half_length)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq, minimize_scalar

from . import kernels
from .dispersion import (
    CrystalSpec,
    external_angle,
    internal_angle,
    nm_from_omega,
    omega_from_nm,
)
from .errors import (
    ConfigError,
    DegeneratePhaseMatchingError,
    DomainError,
    NoSolutionError,
)

FWHM_CONSTANT = 2.0 * math.sqrt(math.log(2.0))
HALF_POWER = 0.5


@dataclass(frozen=True)
class PumpSpec:
    wavelength: float  # nm
    waist: float  # m

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ConfigError(f"pump wavelength must be > 0, got {self.wavelength}")
        if not self.waist > 0:
            raise ConfigError(f"pump waist must be > 0, got {self.waist}")

    @property
    def omega(self):
        return float(omega_from_nm(self.wavelength))


@dataclass(frozen=True)
class PhaseMatchPoint:
    omega_s: float
    theta_s: float
    theta_i: float
    dk_x: float
    dk_y: float
    dk_z: float
    phi: float


@dataclass(frozen=True)
class PhaseMatchSolution:
    lambda_s: float
    lambda_i: float
    Omega_s: float
    Omega_i: float
    theta_s_int: float
    theta_i_int: float
    theta_s_ext: float
    theta_i_ext: float
    residual_dkz: float


@dataclass(frozen=True)
class CollectionMode:
    """Fibre collection mode imaged into the crystal. Lengths in metres."""

    mfd: float
    waist_at_crystal_wo: float
    central_wavelength: float | None = None  # nm
    external_angle: float | None = None  # rad
    bandwidth_fwhm: float | None = None  # nm

    def __post_init__(self):
        if not self.waist_at_crystal_wo > 0:
            raise ConfigError(f"mode waist must be > 0, got {self.waist_at_crystal_wo}")
        if not self.mfd > 0:
            raise ConfigError(f"mode-field diameter must be > 0, got {self.mfd}")

    def with_waist(self, waist):
        return replace(self, waist_at_crystal_wo=waist, bandwidth_fwhm=None)


def _idler_omega(pump, omega_s):
    omega_i = pump.omega - omega_s
    if not omega_i > 0:
        raise DomainError(
            f"signal frequency {omega_s:.6g} rad/s is not below the pump frequency {pump.omega:.6g} rad/s"
        )
    return omega_i


def delta_k(crystal: CrystalSpec, pump: PumpSpec, omega_s, theta_s, theta_i):
    """Wavevector mismatch ``k_p - k_s - k_i - K_G`` as ``(dk_x, dk_y, dk_z)`` in 1/m."""
    omega_i = _idler_omega(pump, omega_s)
    kp = float(crystal.wavenumber(pump.omega))
    ks = float(crystal.wavenumber(omega_s))
    ki = float(crystal.wavenumber(omega_i))
    dk_z = kp - ks * math.cos(theta_s) - ki * math.cos(theta_i) - crystal.grating_vector
    dk_x = ki * math.sin(theta_i) - ks * math.sin(theta_s)
    return dk_x, 0.0, dk_z


def phi(crystal: CrystalSpec, pump: PumpSpec, omega_s, theta_s, theta_i):
    """Pump-broadened phase-matching function, in [0, 1]."""
    dk_x, dk_y, dk_z = delta_k(crystal, pump, omega_s, theta_s, theta_i)
    return kernels.phi_from_mismatch(dk_x * dk_x + dk_y * dk_y, dk_z,
                                     crystal.half_length, pump.waist)


def phase_match_point(crystal, pump, omega_s, theta_s, theta_i) -> PhaseMatchPoint:
    dk_x, dk_y, dk_z = delta_k(crystal, pump, omega_s, theta_s, theta_i)
    value = kernels.phi_from_mismatch(dk_x * dk_x + dk_y * dk_y, dk_z,
                                      crystal.half_length, pump.waist)
    return PhaseMatchPoint(omega_s, theta_s, theta_i, dk_x, dk_y, dk_z, value)


def _balanced_geometry(crystal, pump, lambda_s, theta_s_ext):
    """Internal angles with transverse balance for a signal at ``lambda_s``."""
    omega_s = float(omega_from_nm(lambda_s))
    omega_i = pump.omega - omega_s
    n_s = float(crystal.index(lambda_s))
    theta_s = internal_angle(theta_s_ext, n_s)
    ks = n_s * omega_s / c
    ki = float(crystal.wavenumber(omega_i))
    s = ks * math.sin(theta_s) / ki
    if abs(s) > 1.0:
        return omega_s, theta_s, float("nan")
    return omega_s, theta_s, math.asin(s)


def _default_signal_window(crystal, pump):
    lo, hi = crystal.sellmeier.valid_wavelength_nm
    lam_p = pump.wavelength
    if lam_p < lo:
        raise NoSolutionError(f"pump wavelength {lam_p} nm lies below the Sellmeier window [{lo}, {hi}] nm")
    # idler must stay inside the window too
    s_min = 1.0 / (1.0 / lam_p - 1.0 / hi)
    return max(lo, s_min) * (1 + 1e-9), min(hi, 2.0 * lam_p)


def solve_central(crystal: CrystalSpec, pump: PumpSpec, theta_s_ext, window_nm=None,
                  n_scan=801) -> PhaseMatchSolution:
    """Central quasi-phase-matched emission for a signal at external angle ``theta_s_ext``.

    Solves energy conservation, transverse balance and ``dk_z = 0`` for the
    signal wavelength inside ``window_nm`` (default: from the shortest
    admissible signal wavelength up to degeneracy). When several roots exist
    the shortest-wavelength one is returned; tangential (degenerate) roots are
    found by minimising ``|dk_z|``.
    """
    lo, hi = window_nm if window_nm is not None else _default_signal_window(crystal, pump)
    if not lo < hi:
        raise NoSolutionError(f"empty signal window [{lo}, {hi}] nm")
    L = crystal.effective_length

    def mismatch(lam_s):
        omega_s, th_s, th_i = _balanced_geometry(crystal, pump, lam_s, theta_s_ext)
        if math.isnan(th_i):
            return float("nan")
        return delta_k(crystal, pump, omega_s, th_s, th_i)[2]

    grid = np.linspace(lo, hi, n_scan)
    values = np.array([mismatch(x) for x in grid])
    finite = np.isfinite(values)
    root = None
    for j in range(n_scan - 1):
        if not (finite[j] and finite[j + 1]):
            continue
        if values[j] == 0.0:
            root = grid[j]
            break
        if values[j] * values[j + 1] < 0:
            root = brentq(mismatch, grid[j], grid[j + 1], xtol=1e-12, rtol=1e-15, maxiter=200)
            break
    if root is None and finite.any():
        # tangential root: refine the best local minimum of |dk_z|
        absval = np.where(finite, np.abs(values), np.inf)
        j = int(np.argmin(absval))
        a, b = grid[max(j - 1, 0)], grid[min(j + 1, n_scan - 1)]
        res = minimize_scalar(lambda x: abs(mismatch(x)), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        candidates = [(absval[j], grid[j]), (abs(mismatch(res.x)), res.x)]
        best_val, best_x = min(candidates)
        if best_val * L < 1e-6:
            root = best_x
    if root is None:
        fv = values[finite]
        detail = (
            f"dk_z ranges over [{fv.min():.6g}, {fv.max():.6g}] 1/m" if fv.size else "no finite mismatch"
        )
        raise NoSolutionError(
            f"no phase-matching root for signal in [{lo:.6g}, {hi:.6g}] nm at "
            f"external angle {math.degrees(theta_s_ext):.6g} deg; {detail}"
        )

    omega_s, th_s, th_i = _balanced_geometry(crystal, pump, root, theta_s_ext)
    omega_i = pump.omega - omega_s
    lam_i = float(nm_from_omega(omega_i))
    residual = delta_k(crystal, pump, omega_s, th_s, th_i)[2]
    return PhaseMatchSolution(
        lambda_s=float(root),
        lambda_i=lam_i,
        Omega_s=omega_s,
        Omega_i=omega_i,
        theta_s_int=th_s,
        theta_i_int=th_i,
        theta_s_ext=theta_s_ext,
        theta_i_ext=external_angle(th_i, float(crystal.index(lam_i))),
        residual_dkz=residual,
    )


def angular_fwhm(mode: CollectionMode, wavelength_nm=None):
    """Full-width half-maximum angular acceptance ``a lambda / (pi w_o)`` in rad."""
    lam = mode.central_wavelength if wavelength_nm is None else wavelength_nm
    if lam is None:
        raise ConfigError("collection mode has no central wavelength")
    return FWHM_CONSTANT * lam * 1e-9 / (math.pi * mode.waist_at_crystal_wo)


@dataclass(frozen=True)
class BandwidthResult:
    delta_nm: float
    edges_nm: tuple  # ((lo, hi) at -dtheta/2, (lo, hi) at +dtheta/2)
    angular_fwhm: float
    conjugate_theta_max: float
    conjugate_phi_max: float
    extra: dict = field(default_factory=dict)


class _ArmScan:
    """Phase-matching maximised over the conjugate angle, along one arm's wavelength."""

    def __init__(self, crystal, pump, sol, arm, halfwidth, n_angle_grid, angle_tol):
        self.crystal = crystal
        self.pump = pump
        self.kp_eff = float(crystal.wavenumber(pump.omega)) - crystal.grating_vector
        if arm == "heralding":
            self.conj_center = sol.theta_i_int
        elif arm == "heralded":
            self.conj_center = sol.theta_s_int
        else:
            raise ValueError(f"arm must be 'heralding' or 'heralded', got {arm!r}")
        self.halfwidth = halfwidth
        self.n_angle_grid = n_angle_grid
        self.angle_tol = angle_tol

    def evaluate(self, lam_nm, theta_ext):
        lam = np.atleast_1d(np.asarray(lam_nm, dtype=float))
        omega_f = omega_from_nm(lam)
        omega_c = self.pump.omega - omega_f
        if np.any(omega_c <= 0):
            raise DomainError("fixed-arm wavelength at or below the pump wavelength")
        n_f = self.crystal.index(lam)
        k_f = n_f * omega_f / c
        k_c = self.crystal.wavenumber(omega_c)
        theta_f = np.arcsin(math.sin(theta_ext) / n_f)
        return kernels.max_phi_conjugate_many(
            self.kp_eff, k_f, theta_f, k_c, self.crystal.half_length, self.pump.waist,
            self.conj_center, self.halfwidth, self.n_angle_grid, self.angle_tol,
        )


def _lobe_edges(scan, theta_ext, lam0, window, grid_points, wl_tol, max_expand=4):
    for _ in range(max_expand + 1):
        lams = np.linspace(lam0 - window, lam0 + window, grid_points)
        vals, _ = scan.evaluate(lams, theta_ext)
        j = int(np.argmax(vals))
        if vals[j] <= HALF_POWER:
            raise DegeneratePhaseMatchingError(
                f"phase matching never exceeds {HALF_POWER} within +/-{window:.6g} nm of "
                f"{lam0:.6g} nm at external angle {math.degrees(theta_ext):.6g} deg "
                f"(max {vals[j]:.6g})"
            )
        left = j
        while left > 0 and vals[left - 1] > HALF_POWER:
            left -= 1
        right = j
        while right < grid_points - 1 and vals[right + 1] > HALF_POWER:
            right += 1
        if left > 0 and right < grid_points - 1:
            break
        window *= 2.0
    else:
        raise DegeneratePhaseMatchingError(
            f"half-power lobe wider than the +/-{window:.6g} nm search window"
        )

    def excess(x):
        return float(scan.evaluate(x, theta_ext)[0][0]) - HALF_POWER

    lower = _bisect(excess, lams[left - 1], lams[left], wl_tol)
    upper = _bisect(excess, lams[right], lams[right + 1], wl_tol)
    return lower, upper


def _bisect(fn, a, b, tol):
    fa = fn(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = fn(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def bandwidth_scan(crystal: CrystalSpec, pump: PumpSpec, sol: PhaseMatchSolution,
                   mode: CollectionMode, arm="heralding", grid_points=401, window_nm=None,
                   n_angle_grid=200, angle_tol=1e-7, wl_tol=1e-4) -> BandwidthResult:
    """Geometrically selected FWHM bandwidth of one arm, with diagnostics.

    1. The conjugate photon's angle is free: at every wavelength of the
       collected photon the phase-matching function is maximised over it.
    2. A wavelength counts as collected where that maximum exceeds 1/2.
    3. The collection angle is shifted by half the mode's angular FWHM to
       either side; the union of the two half-power intervals, located by
       bisection, gives the bandwidth in nm of the collected photon.
    """
    if arm == "heralding":
        lam0, theta0 = sol.lambda_s, sol.theta_s_ext
    elif arm == "heralded":
        lam0, theta0 = sol.lambda_i, sol.theta_i_ext
    else:
        raise ValueError(f"arm must be 'heralding' or 'heralded', got {arm!r}")
    dtheta = angular_fwhm(mode, lam0)
    scan = _ArmScan(crystal, pump, sol, arm, 5.0 * dtheta, n_angle_grid, angle_tol)
    centre_phi, centre_theta = scan.evaluate(lam0, theta0)
    window = window_nm if window_nm is not None else 0.01 * lam0
    edges = tuple(
        _lobe_edges(scan, theta0 + sign * 0.5 * dtheta, lam0, window, grid_points, wl_tol)
        for sign in (-1.0, 1.0)
    )
    delta = max(e[1] for e in edges) - min(e[0] for e in edges)
    return BandwidthResult(
        delta_nm=float(delta),
        edges_nm=edges,
        angular_fwhm=dtheta,
        conjugate_theta_max=float(centre_theta[0]),
        conjugate_phi_max=float(centre_phi[0]),
    )


def extract_bandwidth(crystal, pump, sol, mode, arm="heralding", **kwargs):
    """FWHM bandwidth in nm selected by ``mode`` on the given arm."""
    return bandwidth_scan(crystal, pump, sol, mode, arm, **kwargs).delta_nm
