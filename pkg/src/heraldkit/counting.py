"""Gated coincidence counting: Poisson forward model, raw-efficiency
estimator with first-order uncertainty, and a Monte Carlo calibration run.

Each herald opens a gate of duration ``T`` on the heralded detector. The
heralded detector sees uniform background events at ``background_event_rate``
and, for heralds of PDC origin, the correlated photon at ``T / 2`` with
probability ``chi_D``. It fires at most once, on the earliest event.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateCountsError, DomainError

BACKGROUND_WARN_RATIO = 0.05
COUNT_FIELDS = ("M_coinc", "M_heralding", "M_uncorr", "M_heralding_delayed", "M_backgnd")


class BackgroundRatioWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GateModel:
    gate_duration_T: float
    background_event_rate: float
    P_heralding_backgnd: float
    chi_D_true: float

    def __post_init__(self):
        if not (self.gate_duration_T > 0 and math.isfinite(self.gate_duration_T)):
            raise DomainError(f"gate duration must be positive, got {self.gate_duration_T}")
        if not (self.background_event_rate >= 0 and math.isfinite(self.background_event_rate)):
            raise DomainError(f"background rate must be >= 0, got {self.background_event_rate}")
        for name in ("P_heralding_backgnd", "chi_D_true"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}={v} must lie in [0, 1]")

    @property
    def p0_T(self):
        return math.exp(-self.background_event_rate * self.gate_duration_T)

    @property
    def p0_half(self):
        return math.exp(-0.5 * self.background_event_rate * self.gate_duration_T)

    @property
    def P_pdc(self):
        return 1.0 - self.P_heralding_backgnd


def forward_probabilities(model: GateModel):
    """Per-herald probabilities ``(P_coinc, P_uncorr)``."""
    p_half = model.p0_half
    p_bg = model.P_heralding_backgnd
    p_pdc = model.P_pdc
    chi = model.chi_D_true
    p_uncorr = ((1.0 - model.p0_T) * p_bg
                + (1.0 - p_half) * p_pdc
                + p_half * (1.0 - chi) * (1.0 - p_half) * p_pdc)
    p_coinc = p_pdc * p_half * chi + p_uncorr
    return p_coinc, p_uncorr


@dataclass(frozen=True)
class CountRecord:
    M_coinc: int
    M_heralding: int
    M_uncorr: int
    M_heralding_delayed: int
    M_backgnd: int

    def __post_init__(self):
        for name in COUNT_FIELDS:
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise DomainError(f"{name}={v} must be a non-negative integer")
        if self.M_coinc > self.M_heralding:
            raise DomainError("M_coinc exceeds M_heralding")
        if self.M_uncorr > self.M_heralding_delayed:
            raise DomainError("M_uncorr exceeds M_heralding_delayed")
        if self.M_backgnd > self.M_heralding:
            raise DomainError("M_backgnd exceeds M_heralding")

    def scaled(self, factor: int):
        return CountRecord(*(int(getattr(self, n)) * factor for n in COUNT_FIELDS))

    def as_dict(self):
        return {n: int(getattr(self, n)) for n in COUNT_FIELDS}


@dataclass(frozen=True)
class EfficiencyEstimate:
    chi_D_hat: float
    sigma_ML: float
    coverage_factor_k: float = 2.0
    background_ratio: float = 0.0

    @property
    def expanded_uncertainty(self):
        return self.coverage_factor_k * self.sigma_ML


def estimate_chi_d(rec: CountRecord, k=2.0) -> EfficiencyEstimate:
    """Raw detection efficiency from aligned, delayed and background counts.

    ``chi = [1 - R (1 - Pc)] / (1 - B)`` with ``Pc = M_coinc / M_heralding``,
    ``R = M_heralding_delayed / (M_heralding_delayed - M_uncorr)`` and
    ``B = M_backgnd / M_heralding``. The standard uncertainty is the
    first-order propagation of independent binomial ``Pc`` and ``Pu`` and a
    Poisson ratio ``B``, each evaluated at its observed value.
    """
    mh, md = rec.M_heralding, rec.M_heralding_delayed
    if md == 0 or rec.M_uncorr == md:
        raise DegenerateCountsError(
            f"M_uncorr={rec.M_uncorr} equals M_heralding_delayed={md}: every delayed herald is accidental"
        )
    if mh == 0 or rec.M_backgnd == mh:
        raise DegenerateCountsError(
            f"M_backgnd={rec.M_backgnd} equals M_heralding={mh}: no PDC heralds"
        )
    pc = rec.M_coinc / mh
    pu = rec.M_uncorr / md
    b = rec.M_backgnd / mh
    if b > BACKGROUND_WARN_RATIO:
        warnings.warn(f"background heralding ratio {b:.4g} exceeds {BACKGROUND_WARN_RATIO}",
                      BackgroundRatioWarning, stacklevel=2)
    r = 1.0 / (1.0 - pu)
    chi = (1.0 - r * (1.0 - pc)) / (1.0 - b)

    d_pc = r / (1.0 - b)
    d_pu = -r * r * (1.0 - pc) / (1.0 - b)
    d_b = chi / (1.0 - b)
    var = (d_pc**2 * pc * (1.0 - pc) / mh
           + d_pu**2 * pu * (1.0 - pu) / md
           + d_b**2 * (rec.M_backgnd / mh**2 + rec.M_backgnd**2 / mh**3))
    return EfficiencyEstimate(chi, math.sqrt(var), k, b)


# --------------------------------------------------------------------------
# Monte Carlo


def _first_arrivals(rng, rate, n):
    if rate == 0:
        return np.full(n, np.inf)
    return rng.exponential(1.0 / rate, size=n)


def _simulate(model: GateModel, n_heralds: int, seq: np.random.SeedSequence):
    aligned, delayed, backgnd = (np.random.default_rng(s) for s in seq.spawn(3))
    T = model.gate_duration_T
    rate = model.background_event_rate
    u_origin = aligned.random(n_heralds)
    t_first = _first_arrivals(aligned, rate, n_heralds)
    u_detect = aligned.random(n_heralds)
    m_coinc, _, m_uncorr_aligned = kernels.gate_outcomes(
        u_origin, t_first, u_detect, model.P_heralding_backgnd, model.chi_D_true, T)
    # delayed configuration: the correlated photon falls outside the gate
    t_delayed = _first_arrivals(delayed, rate, n_heralds)
    m_uncorr = int(np.count_nonzero(t_delayed <= T))
    # background heralds counted in a separate run of equal herald time
    m_bg = int(backgnd.binomial(n_heralds, model.P_heralding_backgnd))
    return CountRecord(m_coinc, n_heralds, m_uncorr, n_heralds, m_bg), m_uncorr_aligned


def simulate_run(model: GateModel, n_heralds: int, seed: int, diagnostics=False):
    """One aligned run, one delayed run and one background run, reproducible from ``seed``.

    With ``diagnostics=True`` also returns the number of aligned-run
    coincidences not caused by the correlated photon (not observable in an
    experiment; used to check the forward model).
    """
    if n_heralds <= 0:
        raise DomainError("n_heralds must be positive")
    rec, aligned_uncorr = _simulate(model, int(n_heralds), np.random.SeedSequence(seed))
    return (rec, aligned_uncorr) if diagnostics else rec


def simulate_ensemble(model: GateModel, n_heralds: int, n_runs: int, seed: int):
    """``n_runs`` independent runs; run ``i`` uses the ``i``-th spawned stream of ``seed``."""
    if n_heralds <= 0 or n_runs <= 0:
        raise DomainError("n_heralds and n_runs must be positive")
    children = np.random.SeedSequence(seed).spawn(int(n_runs))
    return [_simulate(model, int(n_heralds), s)[0] for s in children]


def coverage_study(model: GateModel, n_heralds: int, n_runs: int, seed: int, k=2.0):
    """Fraction of runs whose ``k``-sigma interval contains ``chi_D_true``."""
    if n_runs < 100:
        raise DomainError("coverage needs at least 100 runs")
    hits = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BackgroundRatioWarning)
        for rec in simulate_ensemble(model, n_heralds, n_runs, seed):
            est = estimate_chi_d(rec, k)
            hits += abs(est.chi_D_hat - model.chi_D_true) <= k * est.sigma_ML
    return hits / n_runs


# --------------------------------------------------------------------------
# I/O


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COUNT_FIELDS)
    for r in records:
        writer.writerow([int(getattr(r, n)) for n in COUNT_FIELDS])
    return buf.getvalue()


def records_from_csv(text: str):
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != COUNT_FIELDS:
        raise DomainError(f"count-record header must be {','.join(COUNT_FIELDS)}")
    out = []
    for i, row in enumerate(reader, start=2):
        try:
            vals = [int(row[n].strip()) for n in COUNT_FIELDS]
        except (ValueError, AttributeError):
            raise DomainError(f"line {i}: counts must be integers") from None
        out.append(CountRecord(*vals))
    if not out:
        raise DomainError("count-record file has no rows")
    return out


def sum_records(records) -> CountRecord:
    return CountRecord(*(sum(int(getattr(r, n)) for r in records) for n in COUNT_FIELDS))


def estimate_to_json(est: EfficiencyEstimate, totals: CountRecord, extra=None) -> str:
    doc = {
        "chi_d": float(f"{est.chi_D_hat:.6g}"),
        "sigma_ml": float(f"{est.sigma_ML:.6g}"),
        "k": est.coverage_factor_k,
        "totals": totals.as_dict(),
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
