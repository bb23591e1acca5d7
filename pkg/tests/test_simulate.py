import json

import numpy as np
import pytest

from pafmsm import (
    Cohort,
    DataError,
    HazardSpec,
    PiecewiseHazard,
    Subject,
    analytic_curves,
    brute_force_estimates,
    cif_counterfactual,
    cpf_unexposed,
    icu_like_spec,
    overall_death_risk,
    simulate_cohort,
    to_transitions,
)

CONST = HazardSpec.constant(0.05, 0.05, 0.02, 0.05, 0.03, tau=100.0)


def test_piecewise_hazard_rate_and_cumulative():
    h = PiecewiseHazard(np.array([2.0, 5.0]), np.array([0.3, 0.1]))
    assert h.rate_at(1.0) == 0.3
    assert h.rate_at(2.0) == 0.1  # segments are [start, until)
    assert h.rate_at(99.0) == 0.1  # last rate continues
    assert h.cumulative(2.0) == pytest.approx(0.6)
    assert h.cumulative(4.0) == pytest.approx(0.6 + 0.2)


def test_piecewise_hazard_validation():
    with pytest.raises(DataError):
        PiecewiseHazard(np.array([2.0, 1.0]), np.array([0.1, 0.1]))
    with pytest.raises(DataError):
        PiecewiseHazard(np.array([2.0]), np.array([-0.1]))


def test_hazard_spec_json_round_trip():
    spec = icu_like_spec(tau=50.0, censor_rate=0.01)
    again = HazardSpec.from_json(spec.to_json())
    assert again.to_json() == spec.to_json()
    assert again.tau == 50.0


def test_hazard_spec_json_accepts_scalars():
    spec = HazardSpec.from_json(json.dumps({
        "alpha01": 0.1, "alpha02": 0.1, "alpha03": 0.1, "alpha14": 0.1, "alpha15": 0.1,
        "tau": 10,
    }))
    assert spec.alpha01.rate_at(3.0) == 0.1


def test_hazard_spec_json_errors():
    with pytest.raises(DataError, match="alpha15"):
        HazardSpec.from_json('{"alpha01": 0.1, "alpha02": 0.1, "alpha03": 0.1, "alpha14": 0.1}')
    with pytest.raises(DataError):
        HazardSpec.from_json("not json")


def test_same_seed_same_cohort():
    a = simulate_cohort(CONST, 500, seed=9)
    b = simulate_cohort(CONST, 500, seed=9)
    assert a.subjects == b.subjects
    c = simulate_cohort(CONST, 500, seed=10)
    assert a.subjects != c.subjects


def test_zero_exposure_hazard_means_no_exposed():
    spec = HazardSpec.constant(0.0, 0.05, 0.02, 0.05, 0.03, tau=50.0)
    cohort = simulate_cohort(spec, 1000, seed=1)
    assert not any(s.exposed for s in cohort.subjects)


def test_all_zero_rates_rejected():
    spec = HazardSpec.constant(0.0, 0.0, 0.0, 0.0, 0.0, tau=10.0)
    with pytest.raises(DataError):
        simulate_cohort(spec, 10, seed=0)


def test_empirical_exposure_cif_matches_closed_form():
    cohort = simulate_cohort(CONST, 50_000, seed=42)
    a0 = 0.05 + 0.05 + 0.02
    grid = np.linspace(0.5, 80.0, 160)
    n = len(cohort)
    emp = np.array([sum(1 for s in cohort.subjects if s.exposed and s.inf_time <= t) for t in grid]) / n
    closed = 0.05 / a0 * (1.0 - np.exp(-a0 * grid))
    assert np.max(np.abs(emp - closed)) < 0.01


def test_round_days_yields_integer_times():
    spec = HazardSpec.constant(0.1, 0.1, 0.05, 0.1, 0.05, tau=20.0, round_days=True)
    cohort = simulate_cohort(spec, 300, seed=2)
    for s in cohort.subjects:
        assert s.end_time == int(s.end_time)
        if s.exposed:
            assert s.inf_time == int(s.inf_time)
            assert s.end_time >= s.inf_time + 1


def test_censor_rate_censors():
    spec = HazardSpec.constant(0.05, 0.05, 0.02, 0.05, 0.03, censor_rate=0.05, tau=100.0)
    cohort = simulate_cohort(spec, 2000, seed=3)
    assert sum(1 for s in cohort.subjects if s.end_status == "censored") > 100


def test_analytic_p00_exact():
    oc = analytic_curves(CONST, np.linspace(0.0, 100.0, 101))
    a0 = 0.12
    np.testing.assert_allclose(oc.p00(oc.grid), np.exp(-a0 * oc.grid), atol=1e-12)


def test_analytic_p03_closed_form():
    oc = analytic_curves(CONST, np.linspace(0.0, 100.0, 101))
    a0 = 0.12
    closed = 0.02 / a0 * (1.0 - np.exp(-a0 * oc.grid))
    np.testing.assert_allclose(oc.p03(oc.grid), closed, atol=1e-6)


def test_analytic_p030_closed_form_without_discharge():
    spec = HazardSpec.constant(0.05, 0.0, 0.03, 0.05, 0.03, tau=50.0)
    oc = analytic_curves(spec, np.linspace(0.0, 50.0, 51))
    np.testing.assert_allclose(oc.p030(oc.grid), 1.0 - np.exp(-0.03 * oc.grid), atol=1e-6)


def test_analytic_rows_sum_to_one():
    oc = analytic_curves(icu_like_spec(tau=60.0), np.linspace(0.0, 60.0, 61))
    total = sum(c(oc.grid) for c in (oc.p00, oc.p01, oc.p02, oc.p03, oc.p04, oc.p05))
    np.testing.assert_allclose(total, 1.0, atol=1e-6)


def test_analytic_constant_hazard_paf_identity():
    spec = HazardSpec.constant(0.08, 0.1, 0.05, 0.1, 0.06, tau=300.0)
    oc = analytic_curves(spec, np.array([0.0, 300.0]))
    assert abs(oc.paf_o(300.0) - oc.paf_c(300.0)) < 1e-6


def test_analytic_requires_markov():
    spec = HazardSpec.constant(0.05, 0.05, 0.02, 0.05, 0.03, gamma=0.2, tau=10.0)
    with pytest.raises(DataError):
        analytic_curves(spec, np.array([1.0]))


def test_brute_force_hand_cohort():
    cohort = Cohort((Subject("A", None, 1.0, "death"), Subject("B", 1.0, 2.0, "death")), horizon=2)
    bf = brute_force_estimates(cohort)
    assert bf.cpf(1.0) == 1.0
    assert bf.overall_death(2.0) == 1.0
    assert bf.p030(1.0) == 0.5


def test_brute_force_zero_death_cohort():
    cohort = Cohort(tuple(Subject(str(i), None, float(i + 1), "discharge") for i in range(5)))
    bf = brute_force_estimates(cohort)
    assert np.all(bf.overall_death.values == 0.0)
    assert np.all(bf.p030.values == 0.0)


def test_brute_force_matches_estimators():
    spec = HazardSpec.constant(0.1, 0.08, 0.05, 0.09, 0.07, tau=40.0, round_days=True)
    cohort = simulate_cohort(spec, 300, seed=9)
    cohort = Cohort(tuple(s for s in cohort.subjects if s.end_status != "censored"))
    bf = brute_force_estimates(cohort)
    records = to_transitions(cohort)
    grid = np.arange(1.0, 41.0)
    pairs = [
        (bf.overall_death, overall_death_risk(records)),
        (bf.cpf, cpf_unexposed(records)),
        (bf.p030, cif_counterfactual(records)),
    ]
    for ours, theirs in pairs:
        a, b = np.atleast_1d(ours(grid)), np.atleast_1d(theirs(grid))
        mask = ~(np.isnan(a) | np.isnan(b))
        assert np.max(np.abs(a[mask] - b[mask])) < 1e-12


def test_brute_force_rejects_censoring():
    cohort = Cohort((Subject("A", None, 2.0, "censored"),), horizon=2)
    with pytest.raises(DataError):
        brute_force_estimates(cohort)
