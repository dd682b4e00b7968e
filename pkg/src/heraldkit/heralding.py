"""Single-mode heralding efficiency and the detection-efficiency budget.

The heralding efficiency is the product of a spatial mode-matching factor,
a spectral factor and a crystal-length correction ratio::

    chi_P = S(w_p, w_o1, w_o2) * D2 / sqrt(D1^2 + D2^2) * f(c1, c2) / f(s1, s2)

with ``D1, D2`` the FWHM angular-frequency bandwidths selected by the two
fibres and ``f`` the length-correction integral. Bandwidths cross the API in
nm and are converted to rad/s around the arm's central wavelength.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.special import erf, erfcx

from .dispersion import CrystalSpec, DispersionTerms, bandwidth_nm_to_omega, dispersion_terms
from .errors import ConfigError, ConsistencyError, DomainError, ModelViolationError, NumericError
from .phasematching import (
    FWHM_CONSTANT,
    CollectionMode,
    PhaseMatchSolution,
    PumpSpec,
    bandwidth_scan,
)

TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_GL_X, _GL_W = leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class BeamGeometry:
    pump: PumpSpec
    heralding_mode: CollectionMode
    heralded_mode: CollectionMode
    gaussian_constant_a: float = FWHM_CONSTANT

    def __post_init__(self):
        if abs(self.gaussian_constant_a - FWHM_CONSTANT) > 1e-15:
            raise ConfigError("gaussian_constant_a is fixed to 2 sqrt(ln 2)")

    def with_waists(self, w_o1=None, w_o2=None):
        h1 = self.heralding_mode if w_o1 is None else self.heralding_mode.with_waist(w_o1)
        h2 = self.heralded_mode if w_o2 is None else self.heralded_mode.with_waist(w_o2)
        return replace(self, heralding_mode=h1, heralded_mode=h2)


@dataclass(frozen=True)
class OverlapCoefficients:
    c1: float
    c2: float
    s1: float
    s2: float


# --------------------------------------------------------------------------
# length-correction integral


def _scaled_erf_gap(u, v):
    """``exp(u^2) (erf(u) - erf(u - v))`` for ``v > 0`` without overflow or cancellation.

    Returns ``(log_scale, value)`` so that the true result is
    ``exp(log_scale) * value``.
    """
    w = u - v
    if v <= 1.0:
        t = w + v * _GL_X
        return 0.0, TWO_OVER_SQRT_PI * v * float(np.sum(_GL_W * np.exp((u - t) * (u + t))))
    if w >= 0.0:
        # erfc(w) dominates erfc(u) by at least e^{v^2}
        lead = 2.0 * u * v - v * v
        return lead, erfcx(w) - math.exp(-lead) * erfcx(u)
    if u <= 0.0:
        a = -u
        return 0.0, erfcx(a) - math.exp(-2.0 * a * v - v * v) * erfcx(a + v)
    return u * u, erf(u) - erf(w)


def _f_integrand(x, p, q):
    v = math.sqrt(p)
    u = q * x / (2.0 * v)
    log_scale, val = _scaled_erf_gap(u, v)
    expo = log_scale - p * x * x
    if expo > 700.0:
        raise NumericError(f"correction integrand overflows at x={x:.6g} (p={p:.6g}, q={q:.6g})")
    return math.exp(expo) * val / v


def correction_f(p, q, rtol=1e-9):
    """Crystal-length correction function.

    ``f(p, q) = p^{-1/2} int_0^1 exp(-p x^2 + q^2 x^2 / 4p)
    [erf(q x / 2 sqrt p) - erf((q x - 2p) / 2 sqrt p)] dx``,
    equivalently ``2/sqrt(pi) * int int_[0,1]^2 exp(-p (x^2 + y^2) + q x y)``.
    Evaluated by adaptive Gauss-Kronrod quadrature; ``p = 0`` uses the
    limiting form.
    """
    if p < 0 or not math.isfinite(p) or not math.isfinite(q):
        raise DomainError(f"correction_f needs finite p >= 0, got p={p}, q={q}")
    if p == 0.0:
        if q == 0.0:
            return TWO_OVER_SQRT_PI

        def integrand(x):
            return 1.0 if x == 0.0 else math.expm1(q * x) / (q * x)
    else:
        def integrand(x):
            return _f_integrand(x, p, q)
    val, err = quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=rtol * 1e-2, limit=200)
    if p == 0.0:
        val *= TWO_OVER_SQRT_PI
        err *= TWO_OVER_SQRT_PI
    if not math.isfinite(val) or err > max(rtol * abs(val), 1e-14):
        raise NumericError(
            f"correction_f({p:.6g}, {q:.6g}) did not converge: estimate {val:.6g} +/- {err:.3g}"
        )
    return val


def correction_f_closed_q0(p):
    """``f(p, 0) = sqrt(pi) erf(sqrt p)^2 / (2 p)``."""
    if p == 0:
        return TWO_OVER_SQRT_PI
    return math.sqrt(math.pi) * erf(math.sqrt(p)) ** 2 / (2.0 * p)


# --------------------------------------------------------------------------
# factors


def spatial_prefactor(w_p, w_o1, w_o2):
    """Spatial mode-matching factor, in (0, 1]."""
    p2, a2, b2 = w_p * w_p, w_o1 * w_o1, w_o2 * w_o2
    den = b2 * p2 + a2 * (b2 + p2)
    return 4.0 * p2 * a2 * b2 * (a2 + p2) / (den * den)


def spatial_prefactor_argmax(w_p, w_o1):
    """Heralded waist maximising the spatial factor (where it equals 1)."""
    if not (w_p > 0 and w_o1 > 0):
        raise DomainError("waists must be positive")
    return w_o1 * w_p / math.hypot(w_o1, w_p)


def spectral_factor(delta1, delta2):
    """``D2 / sqrt(D1^2 + D2^2)``; both widths in the same units."""
    return delta2 / math.hypot(delta1, delta2)


def fwhm_to_gaussian(delta_omega, a=FWHM_CONSTANT):
    """FWHM to the 1/e width parameter ``delta / a`` used in the coefficients."""
    return delta_omega / a


def _length_coefficients(L, w_p, w_o1, w_o2, D_is, alpha, tan_i, g1, g2):
    """Coefficients of the correction integrals.

    ``L`` is the grating half-length; ``g1, g2`` are the Gaussian spectral
    widths (FWHM / a) in rad/s. Three literal terms are read as follows:

    * denominators typeset as ``(w_p^2 + w_o1)`` are ``(w_p^2 + w_o1^2)``;
    * the heralding-singles cross term, typeset
      ``2 L^2 D_is^2 / a^2 + L^2 (w_p^2, alpha + w_o1^2 (alpha + tan)^2) / (w_o1^2 w_p^2 (w_p^2 + w_o1))``,
      is ``2 L^2 D_is^2 D1^2 / a^2 + L^2 (w_p^4 alpha^2 + w_o1^4 (alpha + tan)^2) / (w_o1^2 w_p^2 (w_p^2 + w_o1^2))``,
      the only dimensionless reading; it makes (s1, s2) split into a
      relative-position part and the pump/heralding-mode walk-off part.
    """
    L2 = L * L
    p2, a2, b2 = w_p * w_p, w_o1 * w_o1, w_o2 * w_o2
    at = alpha + tan_i
    c2 = L2 * D_is**2 * g1**2 * g2**2 / (g1**2 + g2**2)
    c1 = c2 + L2 * (p2 * alpha**2 + b2 * tan_i**2 + a2 * at**2) / (b2 * p2 + a2 * (p2 + b2))
    s_spec = L2 * D_is**2 * g1**2
    s_rel = L2 * (p2 * p2 * alpha**2 + a2 * a2 * at**2) / (2.0 * a2 * p2 * (p2 + a2))
    s_walk = L2 * (alpha**2 + alpha * tan_i + tan_i**2) / (p2 + a2)
    s1 = s_spec + s_rel + s_walk
    s2 = 2.0 * s_spec + 2.0 * s_rel
    return c1, c2, s1, s2


def overlap_coefficients(geom: BeamGeometry, crystal: CrystalSpec, disp: DispersionTerms,
                         delta1_nm, delta2_nm, theta_i) -> OverlapCoefficients:
    lam1 = geom.heralding_mode.central_wavelength
    lam2 = geom.heralded_mode.central_wavelength
    if lam1 is None or lam2 is None:
        raise ConfigError("collection modes need central wavelengths")
    if not (delta1_nm > 0 and delta2_nm > 0):
        raise DomainError("bandwidths must be positive")
    a = geom.gaussian_constant_a
    g1 = fwhm_to_gaussian(bandwidth_nm_to_omega(delta1_nm, lam1), a)
    g2 = fwhm_to_gaussian(bandwidth_nm_to_omega(delta2_nm, lam2), a)
    c1, c2, s1, s2 = _length_coefficients(
        crystal.half_length, geom.pump.waist, geom.heralding_mode.waist_at_crystal_wo,
        geom.heralded_mode.waist_at_crystal_wo, disp.D_is, disp.alpha_s, math.tan(theta_i),
        g1, g2,
    )
    return OverlapCoefficients(c1=c1, c2=c2, s1=s1, s2=s2)


@dataclass(frozen=True)
class HeraldingBreakdown:
    chi_p: float
    spatial: float
    spectral: float
    f_c: float
    f_s: float
    coefficients: OverlapCoefficients
    delta1_nm: float
    delta2_nm: float

    @property
    def length_ratio(self):
        return self.f_c / self.f_s


def chi_p_breakdown(geom, crystal, disp, delta1_nm, delta2_nm, theta_i) -> HeraldingBreakdown:
    coeffs = overlap_coefficients(geom, crystal, disp, delta1_nm, delta2_nm, theta_i)
    S = spatial_prefactor(geom.pump.waist, geom.heralding_mode.waist_at_crystal_wo,
                          geom.heralded_mode.waist_at_crystal_wo)
    d1 = bandwidth_nm_to_omega(delta1_nm, geom.heralding_mode.central_wavelength)
    d2 = bandwidth_nm_to_omega(delta2_nm, geom.heralded_mode.central_wavelength)
    spec = spectral_factor(d1, d2)
    f_c = correction_f(coeffs.c1, coeffs.c2)
    f_s = correction_f(coeffs.s1, coeffs.s2)
    value = S * spec * f_c / f_s
    if not value > 0 or value > 1.0 + 1e-9:
        raise ModelViolationError(
            f"chi_P = {value:.9g} outside (0, 1] (spatial {S:.6g}, spectral {spec:.6g}, "
            f"f-ratio {f_c / f_s:.6g}); inputs are inconsistent"
        )
    return HeraldingBreakdown(value, S, spec, f_c, f_s, coeffs, delta1_nm, delta2_nm)


def chi_p(geom, crystal, disp, delta1_nm, delta2_nm, theta_i):
    """Single-mode heralding efficiency."""
    return chi_p_breakdown(geom, crystal, disp, delta1_nm, delta2_nm, theta_i).chi_p


# --------------------------------------------------------------------------
# pipeline from a phase-matching solution


def geometry_for_solution(geom: BeamGeometry, sol: PhaseMatchSolution) -> BeamGeometry:
    """Attach the solution's central wavelengths and angles to both modes."""
    h1 = replace(geom.heralding_mode, central_wavelength=sol.lambda_s, external_angle=sol.theta_s_ext)
    h2 = replace(geom.heralded_mode, central_wavelength=sol.lambda_i, external_angle=sol.theta_i_ext)
    return replace(geom, heralding_mode=h1, heralded_mode=h2)


def solution_dispersion(crystal, pump, sol) -> DispersionTerms:
    return dispersion_terms(crystal, pump.omega, sol.Omega_s, sol.Omega_i,
                            sol.theta_s_int, sol.theta_i_int)


def evaluate_chi_p(crystal, geom, sol, delta1_nm=None, delta2_nm=None, **bw_kwargs):
    """Full pipeline: bandwidths (unless given) -> dispersion -> chi_P breakdown."""
    geom = geometry_for_solution(geom, sol)
    if delta1_nm is None:
        delta1_nm = geom.heralding_mode.bandwidth_fwhm
    if delta1_nm is None:
        delta1_nm = bandwidth_scan(crystal, geom.pump, sol, geom.heralding_mode, "heralding",
                                   **bw_kwargs).delta_nm
    if delta2_nm is None:
        delta2_nm = geom.heralded_mode.bandwidth_fwhm
    if delta2_nm is None:
        delta2_nm = bandwidth_scan(crystal, geom.pump, sol, geom.heralded_mode, "heralded",
                                   **bw_kwargs).delta_nm
    disp = solution_dispersion(crystal, geom.pump, sol)
    return chi_p_breakdown(geom, crystal, disp, delta1_nm, delta2_nm, sol.theta_i_int)


@dataclass(frozen=True)
class SweepPoint:
    w_o1: float
    w_o2: float
    delta1_nm: float
    delta2_nm: float
    chi_p: float
    error: str | None = None


def sweep_chi_p(geom: BeamGeometry, crystal: CrystalSpec, sol: PhaseMatchSolution,
                w_o1_grid, w_o2_grid, delta1_override_nm=None, **bw_kwargs):
    """chi_P over a waist grid, row-major in (w_o1, w_o2).

    Heralding bandwidths are recomputed per heralding waist unless
    ``delta1_override_nm`` is given (an explicit narrowband filter); heralded
    bandwidths are always recomputed per heralded waist. A point that fails
    is kept with ``chi_p = nan`` and the error text.
    """
    w1s = [float(w) for w in w_o1_grid]
    w2s = [float(w) for w in w_o2_grid]
    if not w1s or not w2s or min(w1s) <= 0 or min(w2s) <= 0:
        raise DomainError("waist grids must be non-empty and positive")
    base = geometry_for_solution(geom, sol)
    disp = solution_dispersion(crystal, geom.pump, sol)

    def bw(arm, mode):
        try:
            return bandwidth_scan(crystal, geom.pump, sol, mode, arm, **bw_kwargs).delta_nm, None
        except Exception as exc:  # recorded per point
            return float("nan"), f"{type(exc).__name__}: {exc}"

    d1_cache = {}
    for w1 in w1s:
        if delta1_override_nm is not None:
            d1_cache[w1] = (float(delta1_override_nm), None)
        else:
            d1_cache[w1] = bw("heralding", base.heralding_mode.with_waist(w1))
    d2_cache = {w2: bw("heralded", base.heralded_mode.with_waist(w2)) for w2 in w2s}

    points = []
    for w1 in w1s:
        for w2 in w2s:
            d1, e1 = d1_cache[w1]
            d2, e2 = d2_cache[w2]
            err = e1 or e2
            value = float("nan")
            if err is None:
                try:
                    value = chi_p(base.with_waists(w1, w2), crystal, disp, d1, d2, sol.theta_i_int)
                except Exception as exc:
                    err = f"{type(exc).__name__}: {exc}"
            points.append(SweepPoint(w1, w2, d1, d2, value, err))
    return points


SWEEP_HEADER = ["w_o1_um", "w_o2_um", "delta1_nm", "delta2_nm", "chi_p"]


def format_sig(x, digits=6):
    return f"{x:.{digits}g}"


def sweep_to_csv(points) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for p in points:
        writer.writerow([format_sig(p.w_o1 * 1e6), format_sig(p.w_o2 * 1e6),
                         format_sig(p.delta1_nm), format_sig(p.delta2_nm), format_sig(p.chi_p)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# efficiency budget


@dataclass(frozen=True)
class EfficiencyBudget:
    tau_opt: float
    tau_smf_lens: float
    chi_P: float | None = None
    chi_D: float | None = None
    eta_det: float | None = None

    def __post_init__(self):
        for name in ("tau_opt", "tau_smf_lens", "chi_P", "chi_D", "eta_det"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}={v} must lie in [0, 1]")


def budget_solve(budget: EfficiencyBudget) -> EfficiencyBudget:
    """Fill the single unknown of ``eta_det = chi_D / (chi_P tau_opt tau_smf_lens)``."""
    unknown = [n for n in ("eta_det", "chi_P", "chi_D") if getattr(budget, n) is None]
    if len(unknown) != 1:
        raise ConsistencyError(f"exactly one of eta_det, chi_P, chi_D must be unset; unset: {unknown}")
    tau = budget.tau_opt * budget.tau_smf_lens
    if unknown == ["eta_det"]:
        den = budget.chi_P * tau
        if den == 0:
            raise ConsistencyError("zero denominator: chi_P * tau_opt * tau_smf_lens = 0")
        return replace(budget, eta_det=budget.chi_D / den)
    if unknown == ["chi_P"]:
        den = budget.eta_det * tau
        if den == 0:
            raise ConsistencyError("zero denominator: eta_det * tau_opt * tau_smf_lens = 0")
        return replace(budget, chi_P=budget.chi_D / den)
    return replace(budget, chi_D=budget.eta_det * budget.chi_P * tau)


# --------------------------------------------------------------------------
# optional waist helper


def waist_from_imaging(mfd, focal_length, distance, wavelength_nm):
    """Waist at the crystal of a fibre mode re-imaged by a single thin lens.

    The fibre end (waist ``mfd / 2``) is placed just outside the focal plane so
    that the image waist forms ``distance`` behind the lens. Uses the
    Gaussian-beam imaging relations; returns the image waist in metres.
    """
    w0 = 0.5 * mfd
    zr = math.pi * w0 * w0 / (wavelength_nm * 1e-9)
    f = focal_length
    target = distance - f
    if target <= 0:
        raise DomainError("image distance must exceed the focal length")
    # image offset (s' - f) = x f^2 / (x^2 + zr^2) with x = s - f
    disc = f**4 - 4.0 * target**2 * zr**2
    if disc < 0:
        raise DomainError("distance unreachable for this fibre mode and focal length")
    x = (f * f - math.sqrt(disc)) / (2.0 * target)
    return w0 * f / math.sqrt(x * x + zr * zr)
