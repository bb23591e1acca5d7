"""Population-attributable-fraction assembly.

Combines the building-block curves into the two time-dependent estimands,
the time-fixed fourfold-table version, preventable-case counts, bootstrap
bands and stratified output.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .cohort import Cohort, DailyPanel, STATUS_DEATH, discretize, to_transitions
from .continuous import cif_counterfactual, cpf_unexposed, overall_death_risk
from .curves import StepCurve, union_grid
from .discrete import (
    compute_weights,
    expand_person_days,
    fit_pooled_logistic,
    ipw_f01,
    naive_f01,
    nonparametric_daily_hazard,
)
from .errors import DataError, NumericalError

__all__ = [
    "PafCurve",
    "CurveWithBands",
    "FourfoldTable",
    "ESTIMAND_ESTIMATORS",
    "paf_o",
    "paf_c",
    "paf_fixed",
    "fourfold_at",
    "preventable_count",
    "estimate_paf",
    "bootstrap_ci",
    "stratified_paf",
]

_DENOM_TOL = 1e-12

# valid estimand/estimator pairs
ESTIMAND_ESTIMATORS = {
    "paf_o": ("multistate", "naive"),
    "paf_c": ("multistate", "ipw"),
}


@dataclass(frozen=True)
class PafCurve:
    """A PAF step curve tagged with what it estimates and how."""

    curve: StepCurve
    estimand: str
    estimator: str

    def __call__(self, t):
        return self.curve(t)

    @property
    def times(self):
        return self.curve.times

    @property
    def values(self):
        return self.curve.values

    def to_csv(self) -> str:
        return self.curve.to_csv()


def _ratio(overall: StepCurve, subtracted: StepCurve, estimand, estimator) -> PafCurve:
    grid = union_grid(overall, subtracted)
    pd = np.atleast_1d(overall(grid))
    q = np.atleast_1d(subtracted(grid))
    defined = np.isfinite(pd) & np.isfinite(q) & (pd > _DENOM_TOL)
    values = np.where(defined, (pd - q) / np.where(defined, pd, 1.0), np.nan)
    undef = [c.undefined_from for c in (overall, subtracted) if c.undefined_from is not None]
    return PafCurve(
        StepCurve(
            grid,
            values,
            initial=np.nan,  # PAF is 0/0 before the first death
            undefined_from=min(undef) if undef else None,
        ),
        estimand,
        estimator,
    )


def paf_o(overall: StepCurve, cpf: StepCurve, estimator="multistate") -> PafCurve:
    """PAF against the observable proportion among the still-unexposed."""
    return _ratio(overall, cpf, "paf_o", estimator)


def paf_c(overall: StepCurve, counterfactual: StepCurve, estimator="multistate") -> PafCurve:
    """PAF against the counterfactual no-exposure death risk."""
    return _ratio(overall, counterfactual, "paf_c", estimator)


@dataclass(frozen=True)
class FourfoldTable:
    """Exposure-by-outcome counts at a fixed time point."""

    exposed_cases: int
    exposed_noncases: int
    unexposed_cases: int
    unexposed_noncases: int

    @property
    def total(self) -> int:
        return (
            self.exposed_cases
            + self.exposed_noncases
            + self.unexposed_cases
            + self.unexposed_noncases
        )

    @property
    def cases(self) -> int:
        return self.exposed_cases + self.unexposed_cases


def fourfold_at(cohort: Cohort, t: float) -> FourfoldTable:
    """Classify every subject by exposure and death status at time t."""
    counts = {(True, True): 0, (True, False): 0, (False, True): 0, (False, False): 0}
    for s in cohort.subjects:
        exposed = s.exposed and s.inf_time <= t
        case = s.end_status == "death" and s.end_time <= t
        counts[(exposed, case)] += 1
    return FourfoldTable(
        exposed_cases=counts[(True, True)],
        exposed_noncases=counts[(True, False)],
        unexposed_cases=counts[(False, True)],
        unexposed_noncases=counts[(False, False)],
    )


def paf_fixed(table: FourfoldTable) -> float:
    """Time-fixed PAF from a fourfold table; NaN when it has no cases."""
    if table.total <= 0:
        raise DataError("empty fourfold table")
    if table.cases == 0:
        return float("nan")
    p_d = table.cases / table.total
    unexposed = table.unexposed_cases + table.unexposed_noncases
    if unexposed == 0:
        return float("nan")
    p_d_unexposed = table.unexposed_cases / unexposed
    return (p_d - p_d_unexposed) / p_d


def preventable_count(paf_value: float, deaths_by_t: int) -> int:
    """Number of deaths attributed to the exposure, rounded to nearest."""
    if not math.isfinite(paf_value):
        raise DataError("PAF is undefined; no count can be attributed")
    return int(math.floor(paf_value * deaths_by_t + 0.5))


def _death_proportion(panel: DailyPanel) -> StepCurve:
    days = np.arange(1, panel.n_days + 1, dtype=float)
    values = (panel.eps == STATUS_DEATH).mean(axis=0)
    return StepCurve(days, values, initial=0.0)


def estimate_paf(
    cohort: Cohort,
    estimand: str,
    estimator: str = "multistate",
    covariates=(),
    allow_drop=False,
) -> PafCurve:
    """Run one of the four estimand/estimator pipelines end to end.

    covariates selects a pooled logistic exposure model for the IPW
    weights; without them the weights use the empirical daily hazard.
    """
    if estimand not in ESTIMAND_ESTIMATORS:
        raise ValueError(f"unknown estimand {estimand!r}")
    if estimator not in ESTIMAND_ESTIMATORS[estimand]:
        raise ValueError(f"estimator {estimator!r} does not estimate {estimand}")

    if estimator == "multistate":
        records = to_transitions(cohort)
        overall = overall_death_risk(records)
        other = cpf_unexposed(records) if estimand == "paf_o" else cif_counterfactual(records)
    else:
        panel = discretize(cohort, allow_drop=allow_drop)
        overall = _death_proportion(panel)
        if estimator == "naive":
            other = naive_f01(panel)
        else:
            other = ipw_f01(panel, _panel_weights(panel, covariates))
    return _ratio(overall, other, estimand, estimator)


def _panel_weights(panel: DailyPanel, covariates):
    if covariates:
        model = fit_pooled_logistic(expand_person_days(panel, covariates))
        probs = model.daily_probabilities(panel)
    else:
        probs = nonparametric_daily_hazard(panel)
    return compute_weights(panel, probs)


@dataclass(frozen=True)
class CurveWithBands:
    """Point estimate with pointwise percentile confidence bands."""

    estimate: StepCurve
    lower: StepCurve
    upper: StepCurve
    B: int
    seed: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,estimate,lower,upper,defined\n")
        grid = self.lower.times
        est = np.atleast_1d(self.estimate(grid))
        for j, t in enumerate(grid):
            lo, hi = self.lower.values[j], self.upper.values[j]
            defined = int(np.isfinite(lo) and np.isfinite(hi))

            def fmt(v):
                return "" if not np.isfinite(v) else format(v, ".12g")

            buf.write(f"{t:.12g},{fmt(est[j])},{fmt(lo)},{fmt(hi)},{defined}\n")
        return buf.getvalue()


class _ResampledRecords:
    """Array-backed stand-in for TransitionRecords in tight bootstrap loops."""

    __slots__ = ("_ids", "_inf", "_end", "_status")

    def __init__(self, ids, inf, end, status):
        self._ids = ids
        self._inf = inf
        self._end = end
        self._status = status

    def subject_arrays(self):
        return self._ids, self._inf, self._end, self._status


class _ResampledPanel:
    """Array-backed stand-in for DailyPanel in tight bootstrap loops."""

    __slots__ = ("ids", "a", "eps", "covariates", "dropped", "n_subjects", "n_days", "_exp", "_term")

    def __init__(self, panel: DailyPanel, idx):
        self.ids = panel.ids
        self.a = panel.a[idx]
        self.eps = panel.eps[idx]
        self.covariates = tuple(panel.covariates[i] for i in idx)
        self.dropped = panel.dropped
        self.n_subjects = idx.size
        self.n_days = panel.n_days
        self._exp = panel.exposure_day()[idx]
        self._term = panel.terminal_day()[idx]

    def exposure_day(self):
        return self._exp

    def terminal_day(self):
        return self._term


def _replicate_curve(estimand, estimator, covariates, records_arrays, panel, idx):
    if estimator == "multistate":
        inf, end, status = records_arrays
        rec = _ResampledRecords(range(idx.size), inf[idx], end[idx], status[idx])
        overall = overall_death_risk(rec)
        other = cpf_unexposed(rec) if estimand == "paf_o" else cif_counterfactual(rec)
    else:
        sub = _ResampledPanel(panel, idx)
        overall = _death_proportion(sub)
        other = naive_f01(sub) if estimator == "naive" else ipw_f01(sub, _panel_weights(sub, covariates))
    return _ratio(overall, other, estimand, estimator)


def bootstrap_ci(
    cohort: Cohort,
    estimand: str,
    estimator: str = "multistate",
    B: int = 500,
    seed: int = 0,
    grid=None,
    covariates=(),
    allow_drop=False,
) -> CurveWithBands:
    """Pointwise 95% percentile band from B subject-level resamples.

    Replicate r draws from a stream spawned from (seed, r), so results
    are reproducible and independent of execution order.  Grid points
    where more than half the replicates are undefined get no band.
    """
    if B < 2:
        raise DataError("B must be >= 2")
    point = estimate_paf(cohort, estimand, estimator, covariates, allow_drop)
    if grid is None:
        grid = np.arange(1.0, math.ceil(cohort.horizon) + 1.0)
    grid = np.asarray(grid, dtype=float)

    n = len(cohort)
    if estimator == "multistate":
        _, inf, end, status = to_transitions(cohort).subject_arrays()
        records_arrays = (np.asarray(inf), np.asarray(end), np.asarray(status))
        panel = None
    else:
        records_arrays = None
        panel = discretize(cohort, allow_drop=allow_drop)
        n = panel.n_subjects

    streams = np.random.SeedSequence(seed).spawn(B)
    est = np.full((B, grid.size), np.nan)
    for r in range(B):
        idx = np.random.default_rng(streams[r]).integers(0, n, size=n)
        try:
            curve = _replicate_curve(estimand, estimator, covariates, records_arrays, panel, idx)
        except NumericalError:
            continue  # replicate contributes an undefined row
        est[r] = curve(grid)

    defined_frac = np.isfinite(est).mean(axis=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lo = np.nanpercentile(est, 2.5, axis=0)
        hi = np.nanpercentile(est, 97.5, axis=0)
    bad = defined_frac < 0.5
    lo[bad] = np.nan
    hi[bad] = np.nan
    return CurveWithBands(
        estimate=point.curve,
        lower=StepCurve(grid, lo, initial=np.nan),
        upper=StepCurve(grid, hi, initial=np.nan),
        B=B,
        seed=seed,
    )


def stratified_paf(
    cohort: Cohort,
    covariate_name: str,
    estimand: str,
    estimator: str = "multistate",
) -> dict:
    """One PafCurve per level of a categorical baseline covariate."""
    levels = {}
    for s in cohort.subjects:
        if covariate_name not in s.covariates:
            raise DataError(f"subject {s.id} has no covariate {covariate_name!r}")
        levels.setdefault(s.covariates[covariate_name], []).append(s)
    out = {}
    for level, subjects in sorted(levels.items(), key=lambda kv: str(kv[0])):
        sub = Cohort(tuple(subjects), tie_policy=cohort.tie_policy, horizon=cohort.horizon)
        out[level] = estimate_paf(sub, estimand, estimator)
    return out
