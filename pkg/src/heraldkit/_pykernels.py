"""Pure-Python reference implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` line for line; ``heraldkit.kernels`` picks the
compiled version when it is importable.
"""
import math

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
SINC_SERIES_CUTOFF = 1e-6


def sinc2(x):
    if abs(x) < SINC_SERIES_CUTOFF:
        return 1.0 - x * x / 3.0
    s = math.sin(x) / x
    return s * s


def phi_from_mismatch(dk_perp2, dk_z, half_length, pump_waist):
    return math.exp(-pump_waist * pump_waist * dk_perp2 / 4.0) * sinc2(dk_z * half_length)


def _phi_at(theta, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist):
    dkx = k_free * math.sin(theta) - k_fixed * sin_f
    dkz = kp_eff - k_fixed * cos_f - k_free * math.cos(theta)
    return phi_from_mismatch(dkx * dkx, dkz, half_length, pump_waist)


def max_phi_conjugate(kp_eff, k_fixed, theta_fixed, k_free, half_length, pump_waist,
                      center, halfwidth, n_grid=200, tol=1e-7):
    """Maximise the phase-matching function over the free photon's angle.

    ``kp_eff`` is the pump wavenumber minus the grating vector. The fixed
    photon sits at internal angle ``theta_fixed`` on one side of the pump
    axis; the free photon angle is searched on the other side, first on an
    ``n_grid`` grid over ``center +/- halfwidth`` and then by golden section
    inside the bracketing grid cell.

    Returns ``(phi_max, theta_free)``.
    """
    sin_f = math.sin(theta_fixed)
    cos_f = math.cos(theta_fixed)
    lo = center - halfwidth
    step = 2.0 * halfwidth / (n_grid - 1)
    best = -1.0
    jbest = 0
    for j in range(n_grid):
        v = _phi_at(lo + j * step, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
        if v > best:
            best = v
            jbest = j
    a = lo + max(jbest - 1, 0) * step
    b = lo + min(jbest + 1, n_grid - 1) * step
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = _phi_at(x1, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
    f2 = _phi_at(x2, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
    while b - a > tol:
        if f1 < f2:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + _INVPHI * (b - a)
            f2 = _phi_at(x2, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
        else:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - _INVPHI * (b - a)
            f1 = _phi_at(x1, kp_eff, k_fixed, sin_f, cos_f, k_free, half_length, pump_waist)
    if f1 >= f2:
        theta, val = x1, f1
    else:
        theta, val = x2, f2
    if best > val:
        return best, lo + jbest * step
    return val, theta


def max_phi_conjugate_many(kp_eff, k_fixed, theta_fixed, k_free, half_length, pump_waist,
                           center, halfwidth, n_grid=200, tol=1e-7):
    """Vector form of :func:`max_phi_conjugate` over matching 1-D arrays."""
    k_fixed = np.asarray(k_fixed, dtype=float)
    theta_fixed = np.asarray(theta_fixed, dtype=float)
    k_free = np.asarray(k_free, dtype=float)
    n = k_fixed.shape[0]
    phi = np.empty(n)
    theta = np.empty(n)
    for m in range(n):
        phi[m], theta[m] = max_phi_conjugate(
            kp_eff, float(k_fixed[m]), float(theta_fixed[m]), float(k_free[m]),
            half_length, pump_waist, center, halfwidth, n_grid, tol,
        )
    return phi, theta


def gate_outcomes(u_origin, t_first, u_detect, p_bg, chi_d, gate):
    """Classify heralds of one gated run.

    A herald is background when ``u_origin < p_bg``. The heralded detector
    fires at the earlier of the first background event ``t_first`` and, for
    PDC heralds whose partner is detected (``u_detect < chi_d``), the
    correlated arrival at ``gate / 2``. A coincidence is a firing inside the
    gate; it is uncorrelated unless the correlated photon caused it.
    Returns ``(n_coinc, n_background_heralds, n_uncorrelated_coinc)``.
    """
    u_origin = np.asarray(u_origin)
    t_first = np.asarray(t_first)
    u_detect = np.asarray(u_detect)
    is_bg = u_origin < p_bg
    correlated = (~is_bg) & (u_detect < chi_d) & (t_first > 0.5 * gate)
    t_fire = np.where(correlated, 0.5 * gate, t_first)
    fired = t_fire <= gate
    return (int(np.count_nonzero(fired)), int(np.count_nonzero(is_bg)),
            int(np.count_nonzero(fired & ~correlated)))
