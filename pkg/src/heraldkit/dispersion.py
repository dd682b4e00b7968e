"""Extraordinary-ray refractive index and group terms for poled crystals.

Coefficient sets are read from JSON files (see ``data/sellmeier``). Two
functional forms are understood:

``ln-thermal``
    The temperature-dependent lithium niobate form, with ``L`` the wavelength
    in microns and ``f = (T - t0)(T + t1)``::

        n^2 = a1 + b1 f + (a2 + b2 f) / (L^2 - (a3 + b3 f)^2)
              + (a4 + b4 f) / (L^2 - a5^2) - a6 L^2

    ``coefficients = [a1..a6]`` and ``temperature_model = [b1..b4, t0, t1]``.

``cauchy``
    ``n = A + B / L^2 + C / L^4 + dndT (T - T_ref)`` with
    ``coefficients = [A, B, C]`` and ``temperature_model = [T_ref, dndT]``.

Internally everything is SI (metres, rad/s, seconds); the public index
functions take wavelengths in nm and temperatures in degrees Celsius.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.constants import c

from .errors import ConfigError, ConsistencyError, DomainError, RangeError

TWO_PI_C = 2.0 * math.pi * c


def omega_from_nm(wavelength_nm):
    """Vacuum wavelength in nm to angular frequency in rad/s."""
    return TWO_PI_C / (np.asarray(wavelength_nm, dtype=float) * 1e-9)


def nm_from_omega(omega):
    return TWO_PI_C / np.asarray(omega, dtype=float) * 1e9


def bandwidth_nm_to_omega(delta_nm, center_nm):
    """Convert a (small) wavelength width to an angular-frequency width."""
    return TWO_PI_C * delta_nm * 1e-9 / (center_nm * 1e-9) ** 2


def bandwidth_omega_to_nm(delta_omega, center_nm):
    return delta_omega * (center_nm * 1e-9) ** 2 / TWO_PI_C * 1e9


# --------------------------------------------------------------------------
# Sellmeier forms. Each returns (n, dn/dL) with L in microns.


def _ln_thermal(lam_um, T, coeffs, tmodel):
    a1, a2, a3, a4, a5, a6 = coeffs
    b1, b2, b3, b4, t0, t1 = tmodel
    f = (T - t0) * (T + t1)
    l2 = lam_um * lam_um
    pole1 = a3 + b3 * f
    d1 = l2 - pole1 * pole1
    d2 = l2 - a5 * a5
    num1 = a2 + b2 * f
    num2 = a4 + b4 * f
    n2 = a1 + b1 * f + num1 / d1 + num2 / d2 - a6 * l2
    dn2 = -2.0 * lam_um * num1 / (d1 * d1) - 2.0 * lam_um * num2 / (d2 * d2) - 2.0 * a6 * lam_um
    n = np.sqrt(n2)
    return n, dn2 / (2.0 * n)


def _cauchy(lam_um, T, coeffs, tmodel):
    A, B, C = coeffs
    t_ref, dndT = tmodel
    n = A + B / lam_um**2 + C / lam_um**4 + dndT * (T - t_ref)
    dn = -2.0 * B / lam_um**3 - 4.0 * C / lam_um**5
    return n, dn


_FORMS = {
    "ln-thermal": (_ln_thermal, 6, 6),
    "cauchy": (_cauchy, 3, 2),
}


@dataclass(frozen=True)
class SellmeierSet:
    name: str
    form: str
    coefficients: tuple
    temperature_model: tuple
    valid_wavelength_nm: tuple
    valid_temperature_C: tuple

    def __post_init__(self):
        if self.form not in _FORMS:
            raise ConfigError(f"unknown Sellmeier form {self.form!r}; known: {sorted(_FORMS)}")
        _, nc, nt = _FORMS[self.form]
        if len(self.coefficients) != nc or len(self.temperature_model) != nt:
            raise ConfigError(
                f"form {self.form!r} needs {nc} coefficients and {nt} temperature terms, "
                f"got {len(self.coefficients)} and {len(self.temperature_model)}"
            )

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                name=str(d["name"]),
                form=str(d["form"]),
                coefficients=tuple(float(x) for x in d["coefficients"]),
                temperature_model=tuple(float(x) for x in d["temperature_model"]),
                valid_wavelength_nm=tuple(float(x) for x in d["valid_wavelength_nm"]),
                valid_temperature_C=tuple(float(x) for x in d["valid_temperature_C"]),
            )
        except KeyError as exc:
            raise ConfigError(f"Sellmeier file missing field {exc.args[0]!r}") from None

    def to_dict(self):
        return {
            "name": self.name,
            "form": self.form,
            "coefficients": list(self.coefficients),
            "temperature_model": list(self.temperature_model),
            "valid_wavelength_nm": list(self.valid_wavelength_nm),
            "valid_temperature_C": list(self.valid_temperature_C),
        }

    def check_temperature(self, T):
        lo, hi = self.valid_temperature_C
        if T < lo:
            raise RangeError("temperature", T, "lower", lo, "C")
        if T > hi:
            raise RangeError("temperature", T, "upper", hi, "C")

    def check_wavelength(self, wavelength_nm, strict=False):
        lo, hi = self.valid_wavelength_nm
        lam = np.asarray(wavelength_nm, dtype=float)
        below = lam <= lo if strict else lam < lo
        above = lam >= hi if strict else lam > hi
        if np.any(below):
            raise RangeError("wavelength", float(np.min(lam)), "lower", lo, "nm")
        if np.any(above):
            raise RangeError("wavelength", float(np.max(lam)), "upper", hi, "nm")

    def evaluate(self, wavelength_nm, T):
        """Unchecked (n, dn/dlambda[1/um]) at wavelength(s) in nm."""
        fn = _FORMS[self.form][0]
        return fn(np.asarray(wavelength_nm, dtype=float) * 1e-3, T,
                  self.coefficients, self.temperature_model)


def _data_dir():
    return resources.files("heraldkit") / "data"


def available_sellmeier_sets():
    return sorted(p.name[:-5] for p in (_data_dir() / "sellmeier").iterdir()
                  if p.name.endswith(".json"))


def load_sellmeier(name_or_path) -> SellmeierSet:
    """Load a coefficient set by shipped name (e.g. ``jundt1997_congruent_e``) or path."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        text = path.read_text()
    else:
        shipped = _data_dir() / "sellmeier" / f"{name_or_path}.json"
        if not shipped.is_file():
            raise ConfigError(
                f"no Sellmeier file {name_or_path!r}; shipped sets: {available_sellmeier_sets()}"
            )
        text = shipped.read_text()
    try:
        return SellmeierSet.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse Sellmeier file {name_or_path!r}: {exc}") from None


DEFAULT_SELLMEIER = "jundt1997_congruent_e"


@dataclass(frozen=True)
class CrystalSpec:
    """Poled crystal. Lengths in metres, temperature in degrees Celsius.

    ``poling_length`` defaults to the full crystal ``length``. The
    phase-matching and overlap formulas are written for a grating centred on
    the origin and spanning ``[-half_length, +half_length]``.
    """

    length: float
    poling_period: float
    temperature: float
    sellmeier: SellmeierSet
    poling_length: float | None = None

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigError(f"crystal length must be > 0, got {self.length}")
        if not self.poling_period > 0:
            raise ConfigError(f"poling period must be > 0, got {self.poling_period}")
        if self.poling_length is not None and not self.poling_length > 0:
            raise ConfigError(f"poling length must be > 0, got {self.poling_length}")
        self.sellmeier.check_temperature(self.temperature)

    @property
    def effective_length(self):
        return self.length if self.poling_length is None else self.poling_length

    @property
    def half_length(self):
        return 0.5 * self.effective_length

    @property
    def grating_vector(self):
        return 2.0 * math.pi / self.poling_period

    def index(self, wavelength_nm):
        self.sellmeier.check_wavelength(wavelength_nm)
        return self.sellmeier.evaluate(wavelength_nm, self.temperature)[0]

    def wavenumber(self, omega):
        """|k| = n(omega) omega / c inside the crystal, in 1/m."""
        lam = nm_from_omega(omega)
        return self.index(lam) * np.asarray(omega, dtype=float) / c


def refractive_index(wavelength_nm, temperature_C, sellmeier: SellmeierSet):
    """Extraordinary index n_e(lambda, T)."""
    sellmeier.check_temperature(temperature_C)
    sellmeier.check_wavelength(wavelength_nm)
    return sellmeier.evaluate(wavelength_nm, temperature_C)[0]


def group_term(wavelength_nm, temperature_C, sellmeier: SellmeierSet):
    """d(n omega / c)/d omega in s/m, by analytic differentiation.

    Uses ``(n - lambda dn/dlambda) / c``; the wavelength must lie strictly
    inside the validity window.
    """
    sellmeier.check_temperature(temperature_C)
    sellmeier.check_wavelength(wavelength_nm, strict=True)
    n, dn = sellmeier.evaluate(wavelength_nm, temperature_C)
    lam_um = np.asarray(wavelength_nm, dtype=float) * 1e-3
    return (n - lam_um * dn) / c


@dataclass(frozen=True)
class DispersionTerms:
    D_i: float
    D_s: float
    D_p: float
    D_is: float
    D_pi: float
    alpha_s: float


def dispersion_terms(crystal: CrystalSpec, omega_p, omega_s, omega_i, theta_s, theta_i):
    """Composite group terms entering the overlap coefficients.

    Angles are internal, in radians, measured as magnitudes on opposite sides
    of the pump axis.
    """
    if abs(omega_p - omega_s - omega_i) > 1e-9 * abs(omega_p):
        raise ConsistencyError(
            f"energy conservation violated: omega_p - omega_s - omega_i = "
            f"{omega_p - omega_s - omega_i:.6g} rad/s"
        )
    for name, th in (("theta_s", theta_s), ("theta_i", theta_i)):
        if not abs(th) < math.pi / 2:
            raise DomainError(f"{name}={th} rad must satisfy |theta| < pi/2")
    T = crystal.temperature
    sm = crystal.sellmeier
    D_s = float(group_term(nm_from_omega(omega_s), T, sm))
    D_i = float(group_term(nm_from_omega(omega_i), T, sm))
    D_p = float(group_term(nm_from_omega(omega_p), T, sm))
    ci, si, ti = math.cos(theta_i), math.sin(theta_i), math.tan(theta_i)
    cs, ss, ts = math.cos(theta_s), math.sin(theta_s), math.tan(theta_s)
    D_is = D_i * (ci - si * ti) - D_s * (cs + ss * ts)
    D_pi = -D_i * (ci + si * ti) + D_p
    alpha_s = -cs * ti + ss
    return DispersionTerms(D_i=D_i, D_s=D_s, D_p=D_p, D_is=D_is, D_pi=D_pi, alpha_s=alpha_s)


def internal_angle(theta_ext, n):
    """Snell refraction from air into a medium of index ``n``."""
    return math.asin(math.sin(theta_ext) / n)


def external_angle(theta_int, n):
    s = n * math.sin(theta_int)
    if abs(s) > 1.0:
        raise DomainError(f"internal angle {theta_int} rad is totally internally reflected (n={n})")
    return math.asin(s)
