import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heraldkit.counting import (
    BackgroundRatioWarning,
    CountRecord,
    GateModel,
    coverage_study,
    estimate_chi_d,
    estimate_to_json,
    forward_probabilities,
    records_from_csv,
    records_to_csv,
    simulate_ensemble,
    simulate_run,
    sum_records,
)
from heraldkit.errors import DegenerateCountsError, DomainError

T = 20e-9


def _sem(p, n):
    return math.sqrt(p * (1 - p) / n)


def test_noiseless_limit():
    m = GateModel(T, 0.0, 0.05, 0.025)
    pc, pu = forward_probabilities(m)
    assert pu == 0.0
    assert pc == pytest.approx(0.95 * 0.025, rel=1e-15)


def test_zero_efficiency_limit():
    pc, pu = forward_probabilities(GateModel(T, 1e6, 0.05, 0.0))
    assert pc == pu


def test_poisson_identity_exact():
    for rate in (0.0, 1e3, 1e6, 3.7e7):
        m = GateModel(T, rate, 0.0, 0.0)
        assert m.p0_T == pytest.approx(m.p0_half**2, rel=1e-15)


@settings(max_examples=100, deadline=None)
@given(rt=st.floats(0, 5), pb=st.floats(0, 1), chi=st.floats(0, 1))
def test_forward_probabilities_in_range(rt, pb, chi):
    pc, pu = forward_probabilities(GateModel(T, rt / T, pb, chi))
    assert 0.0 <= pu <= pc <= 1.0 + 1e-15


def test_forward_model_vs_independent_event_monte_carlo():
    """1e7 heralds of the event model, drawn without the package simulator."""
    m = GateModel(T, 1e6, 0.05, 0.025)
    pc, pu = forward_probabilities(m)
    rng = np.random.default_rng(2024)
    n, chunk = 10_000_000, 1_000_000
    coinc = uncorr = 0
    for _ in range(n // chunk):
        bg = rng.random(chunk) < m.P_heralding_backgnd
        det = (~bg) & (rng.random(chunk) < m.chi_D_true)
        t_bg = rng.exponential(1 / m.background_event_rate, chunk)
        by_photon = det & (t_bg >= T / 2)
        fired = by_photon | (t_bg <= T)
        coinc += int(fired.sum())
        uncorr += int((fired & ~by_photon).sum())
    assert abs(coinc / n - pc) < 3 * _sem(pc, n)
    assert abs(uncorr / n - pu) < 3 * _sem(pu, n)


def test_estimator_collapses_to_ratio():
    est = estimate_chi_d(CountRecord(250, 10000, 0, 10000, 0))
    assert est.chi_D_hat == pytest.approx(0.025, rel=1e-14)
    assert est.coverage_factor_k == 2.0


@settings(max_examples=100, deadline=None)
@given(mh=st.integers(10, 10**7), frac=st.floats(0, 1))
def test_estimator_ratio_property(mh, frac):
    mc = int(mh * frac)
    est = estimate_chi_d(CountRecord(mc, mh, 0, 1000, 0))
    assert est.chi_D_hat == pytest.approx(mc / mh, rel=1e-12, abs=1e-15)


def test_estimator_scale_consistency():
    rec = CountRecord(18530, 430000, 8421, 430000, 21390)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BackgroundRatioWarning)
        a = estimate_chi_d(rec)
        b = estimate_chi_d(rec.scaled(10))
    assert b.chi_D_hat == pytest.approx(a.chi_D_hat, rel=1e-12)
    assert a.sigma_ML / b.sigma_ML == pytest.approx(math.sqrt(10), rel=0.05)


def test_estimator_uncertainty_matches_numeric_propagation():
    rec = CountRecord(18530, 430000, 8421, 430000, 12000)
    est = estimate_chi_d(rec)
    pc, pu, b = 18530 / 430000, 8421 / 430000, 12000 / 430000

    def chi(pc_, pu_, b_):
        return (1 - (1 - pc_) / (1 - pu_)) / (1 - b_)

    h = 1e-7
    grads = [(chi(pc + h, pu, b) - chi(pc - h, pu, b)) / (2 * h),
             (chi(pc, pu + h, b) - chi(pc, pu - h, b)) / (2 * h),
             (chi(pc, pu, b + h) - chi(pc, pu, b - h)) / (2 * h)]
    var_b = b * b * (1 / 12000 + 1 / 430000)
    var = (grads[0] ** 2 * pc * (1 - pc) / 430000 + grads[1] ** 2 * pu * (1 - pu) / 430000
           + grads[2] ** 2 * var_b)
    assert est.sigma_ML == pytest.approx(math.sqrt(var), rel=1e-6)


def test_estimator_degenerate_errors():
    with pytest.raises(DegenerateCountsError):
        estimate_chi_d(CountRecord(10, 100, 50, 50, 0))
    with pytest.raises(DegenerateCountsError):
        estimate_chi_d(CountRecord(10, 100, 0, 50, 100))


def test_background_warning():
    with pytest.warns(BackgroundRatioWarning):
        estimate_chi_d(CountRecord(100, 1000, 10, 1000, 80))


def test_count_record_invariants():
    with pytest.raises(DomainError):
        CountRecord(11, 10, 0, 10, 0)
    with pytest.raises(DomainError):
        CountRecord(1, 10, 11, 10, 0)
    with pytest.raises(DomainError):
        CountRecord(1, 10, 0, 10, 11)
    with pytest.raises(DomainError):
        CountRecord(-1, 10, 0, 10, 0)


def test_simulator_trivial_limits():
    r = simulate_run(GateModel(T, 0.0, 0.05, 0.0), 10000, seed=1)
    assert r.M_coinc == 0 and r.M_uncorr == 0
    r = simulate_run(GateModel(T, 0.0, 0.0, 1.0), 10000, seed=1)
    assert r.M_coinc == r.M_heralding and r.M_backgnd == 0


def test_simulator_deterministic():
    m = GateModel(T, 1e6, 0.05, 0.025)
    assert simulate_run(m, 50000, seed=9) == simulate_run(m, 50000, seed=9)
    assert simulate_run(m, 50000, seed=9) != simulate_run(m, 50000, seed=10)
    assert simulate_ensemble(m, 1000, 5, 3) == simulate_ensemble(m, 1000, 5, 3)


def test_simulator_converges_to_forward_model():
    m = GateModel(T, 1e6, 0.05, 0.025)
    n = 1_000_000
    rec, aligned_uncorr = simulate_run(m, n, seed=11, diagnostics=True)
    pc, pu = forward_probabilities(m)
    assert abs(rec.M_coinc / n - pc) < 3 * _sem(pc, n)
    assert abs(aligned_uncorr / n - pu) < 3 * _sem(pu, n)
    # the delayed run sees background only
    assert abs(rec.M_uncorr / n - (1 - m.p0_T)) < 3 * _sem(1 - m.p0_T, n)


def test_simulator_poisson_identity_empirical():
    n = 1_000_000
    full = simulate_run(GateModel(T, 5e6, 0.0, 0.0), n, seed=4)
    half = simulate_run(GateModel(T / 2, 5e6, 0.0, 0.0), n, seed=5)
    q_full = 1 - full.M_uncorr / n
    q_half = 1 - half.M_uncorr / n
    se = math.hypot(_sem(q_full, n), 2 * q_half * _sem(q_half, n))
    assert abs(q_full - q_half**2) < 3 * se


def test_simulator_matches_forward_on_random_parameter_sets():
    rng = np.random.default_rng(77)
    n = 200_000
    for i in range(20):
        m = GateModel(T, rng.uniform(0, 0.05) / T, rng.uniform(0, 0.1), rng.uniform(0, 0.5))
        rec, aligned_uncorr = simulate_run(m, n, seed=1000 + i, diagnostics=True)
        pc, pu = forward_probabilities(m)
        assert abs(rec.M_coinc / n - pc) <= 3 * _sem(pc, n) + 1e-12
        assert abs(aligned_uncorr / n - pu) <= 3 * _sem(pu, n) + 1e-12


@pytest.mark.slow
def test_round_trip_bias_wider_regime():
    m = GateModel(T, 0.05 / T, 0.1, 0.025)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BackgroundRatioWarning)
        ests = [estimate_chi_d(r) for r in simulate_ensemble(m, 100_000, 1000, seed=8)]
    x = np.array([e.chi_D_hat for e in ests])
    s = np.array([e.sigma_ML for e in ests])
    assert abs(x.mean() - m.chi_D_true) < s.mean() / 3


def test_coverage_deterministic_and_guarded():
    m = GateModel(T, 1e6, 0.05, 0.025)
    a = coverage_study(m, 20000, 100, seed=42)
    assert a == coverage_study(m, 20000, 100, seed=42)
    with pytest.raises(DomainError):
        coverage_study(m, 20000, 99, seed=42)


@pytest.mark.slow
def test_coverage_large_counts_near_nominal():
    # sigma_ML -> 0 regime: coverage tends to the Gaussian 95.4%, not to 1
    m = GateModel(T, 1e6, 0.02, 0.025)
    cov = coverage_study(m, 1_000_000, 300, seed=5)
    assert 0.91 <= cov <= 0.99


def test_csv_round_trip_and_json():
    recs = simulate_ensemble(GateModel(T, 1e6, 0.05, 0.025), 5000, 3, 1)
    text = records_to_csv(recs)
    assert text.splitlines()[0] == "M_coinc,M_heralding,M_uncorr,M_heralding_delayed,M_backgnd"
    assert records_from_csv(text) == recs
    tot = sum_records(recs)
    assert tot.M_heralding == 15000
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BackgroundRatioWarning)
        js = estimate_to_json(estimate_chi_d(tot), tot)
    assert '"chi_d"' in js and '"sigma_ml"' in js and '"k": 2.0' in js and '"M_coinc"' in js


def test_csv_rejects_bad_header():
    with pytest.raises(DomainError):
        records_from_csv("a,b\n1,2\n")
    with pytest.raises(DomainError):
        records_from_csv("M_coinc,M_heralding,M_uncorr,M_heralding_delayed,M_backgnd\n1,x,0,1,0\n")
