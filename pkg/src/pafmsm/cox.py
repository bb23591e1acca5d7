"""Proportional-hazards fits with time-dependent exposure.

The partial likelihood uses counting-process risk intervals (t_start,
t_stop], so delayed entry (needed both for the time-varying exposure and
for the Markov diagnostic's clock) falls out of the risk-set definition.
Ties are handled with the Breslow approximation.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .cohort import TransitionRecords
from .errors import ConvergenceError, DataError, SeparationError

__all__ = ["CoxFit", "fit_cox_td", "markov_test"]

_Z975 = 1.959963984540054


@dataclass(frozen=True)
class CoxFit:
    """Result of one partial-likelihood fit."""

    outcome: str
    terms: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    log_likelihood: float
    iterations: int
    n_events: int

    @property
    def hazard_ratios(self) -> np.ndarray:
        return np.exp(self.coefficients)

    @property
    def ci_lower(self) -> np.ndarray:
        return np.exp(self.coefficients - _Z975 * self.standard_errors)

    @property
    def ci_upper(self) -> np.ndarray:
        return np.exp(self.coefficients + _Z975 * self.standard_errors)

    @property
    def p_values(self) -> np.ndarray:
        z = np.abs(self.coefficients) / self.standard_errors
        return np.array([math.erfc(v / math.sqrt(2.0)) for v in z])

    def summary_csv(self) -> str:
        buf = io.StringIO()
        buf.write("outcome,term,coef,hr,se,ci_low,ci_high,p,n_events\n")
        for j, term in enumerate(self.terms):
            buf.write(
                f"{self.outcome},{term},{self.coefficients[j]:.6g},"
                f"{self.hazard_ratios[j]:.6g},{self.standard_errors[j]:.6g},"
                f"{self.ci_lower[j]:.6g},{self.ci_upper[j]:.6g},"
                f"{self.p_values[j]:.6g},{self.n_events}\n"
            )
        return buf.getvalue()


def _risk_sums(start, stop, w, wx, event_times):
    """Sums of w and w*x over the risk sets {start < t <= stop}.

    Delayed entry makes the risk set a difference of two tail sums, each
    obtained from a sorted cumulative sum.
    """
    order_stop = np.argsort(stop)
    order_start = np.argsort(start)
    stop_sorted = stop[order_stop]
    start_sorted = start[order_start]

    def tail(values, order, keys, side_keys):
        # extended precision: the 1e-8 score tolerance sits below the
        # float64 rounding of a cumulative sum over large cohorts
        acc = np.cumsum(values[order][::-1].astype(np.longdouble), axis=0)[::-1]
        cum = np.concatenate([acc, np.zeros((1,) + values.shape[1:], dtype=np.longdouble)])
        pos = np.searchsorted(keys, side_keys, side="left")
        return cum[pos]

    s0 = tail(w[:, None], order_stop, stop_sorted, event_times)[:, 0] - tail(
        w[:, None], order_start, start_sorted, event_times
    )[:, 0]
    s1 = tail(wx, order_stop, stop_sorted, event_times) - tail(
        wx, order_start, start_sorted, event_times
    )
    return s0.astype(float), s1.astype(float)


def _cox_engine(start, stop, event, x, term_names):
    """Damped Newton maximization of the Breslow log partial likelihood."""
    n, p = x.shape
    if event.sum() == 0:
        raise DataError("no events of the requested type")
    event_times, inverse = np.unique(stop[event], return_inverse=True)
    d = np.bincount(inverse).astype(float)  # tied events per time
    x_event_sum = np.zeros((event_times.size, p))
    np.add.at(x_event_sum, inverse, x[event])

    def loglik_score_info(beta):
        eta = x @ beta
        shift = eta.max()  # keeps exp() in range; restored in the log below
        w = np.exp(eta - shift)
        wx = w[:, None] * x
        s0, s1 = _risk_sums(start, stop, w, wx, event_times)
        if np.any(s0 <= 0.0):
            # a risk-set sum underflowed; treat the point as infeasible
            return -np.inf, np.full(p, np.nan), np.full((p, p), np.nan)
        # second moment, one pass per covariate
        s2 = np.empty((event_times.size, p, p))
        for a in range(p):
            _, col = _risk_sums(start, stop, w, wx * x[:, a : a + 1], event_times)
            s2[:, a, :] = col
        xbar = s1 / s0[:, None]
        ll = float((x[event] @ beta).sum() - (d * (np.log(s0) + shift)).sum())
        score = x_event_sum.sum(axis=0) - (d[:, None] * xbar).sum(axis=0)
        info = np.einsum("t,tab->ab", d, s2 / s0[:, None, None]) - np.einsum(
            "t,ta,tb->ab", d, xbar, xbar
        )
        return ll, score, info

    beta = np.zeros(p)
    ll, score, info = loglik_score_info(beta)
    trace = []
    for it in range(1, 101):
        trace.append((it, float(np.max(np.abs(score))), ll))
        if np.max(np.abs(score)) < 1e-8:
            try:
                cov = np.linalg.inv(info)
            except np.linalg.LinAlgError:
                raise SeparationError(
                    "singular information matrix; a covariate is constant "
                    "within every risk set"
                ) from None
            se = np.sqrt(np.diag(cov))
            return beta, se, ll, it
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise SeparationError("singular information matrix in the Cox fit") from None
        # relative slack: near the optimum a valid micro-step moves ll by
        # less than its own rounding, so an absolute cutoff would stall
        slack = 1e-12 * max(1.0, abs(ll))
        scale = 1.0
        for _ in range(60):
            cand = beta + scale * step
            cand_ll, cand_score, cand_info = loglik_score_info(cand)
            if np.isfinite(cand_ll) and cand_ll >= ll - slack:
                break
            scale /= 2.0
        beta, ll, score, info = cand, cand_ll, cand_score, cand_info
        if np.max(np.abs(beta)) > 30:
            worst = term_names[int(np.argmax(np.abs(beta)))]
            raise SeparationError(f"Cox coefficients diverged (|beta| > 30), driven by {worst!r}")
    raise ConvergenceError("Cox fit did not converge in 100 iterations", trace)


def _log_partial_likelihood(start, stop, event, x, beta):
    """Exposed for finite-difference checks of the analytic score."""
    event_times, inverse = np.unique(stop[event], return_inverse=True)
    d = np.bincount(inverse).astype(float)
    eta = x @ beta
    shift = eta.max()
    w = np.exp(eta - shift)
    s0, _ = _risk_sums(start, stop, w, w[:, None] * x, event_times)
    return float((x[event] @ beta).sum() - (d * (np.log(s0) + shift)).sum())


_OUTCOME_STATES = {"death": (3, 5), "discharge": (2, 4)}


def _interval_arrays(records: TransitionRecords, extra_covariates):
    start, stop, exposure, to_state, extras = [], [], [], [], []
    for r in records.rows:
        start.append(r.t_start)
        stop.append(r.t_stop)
        exposure.append(1.0 if r.from_state == 1 else 0.0)
        to_state.append(r.to_state)
        if extra_covariates:
            covs = records.covariates.get(r.subject_id, {})
            row = []
            for name in extra_covariates:
                if name not in covs:
                    raise DataError(f"subject {r.subject_id} has no covariate {name!r}")
                value = covs[name]
                if not isinstance(value, (int, float)):
                    raise DataError(f"covariate {name!r} is not numeric; encode it first")
                row.append(float(value))
            extras.append(row)
    cols = [np.array(exposure)]
    if extra_covariates:
        cols.extend(np.array(extras).T)
    return (
        np.array(start),
        np.array(stop),
        np.array(to_state),
        np.column_stack(cols),
    )


def fit_cox_td(records: TransitionRecords, outcome: str, extra_covariates=()) -> CoxFit:
    """Hazard ratio of the exposure for death or discharge.

    The exposure enters as a time-varying 0/1 covariate: each subject
    contributes an unexposed interval and, if exposed, a second interval
    with the covariate switched on.
    """
    if outcome not in _OUTCOME_STATES:
        raise ValueError("outcome must be 'death' or 'discharge'")
    start, stop, to_state, x = _interval_arrays(records, extra_covariates)
    event = np.isin(to_state, _OUTCOME_STATES[outcome])
    terms = ("exposure",) + tuple(extra_covariates)
    beta, se, ll, it = _cox_engine(start, stop, event, x, terms)
    return CoxFit(outcome, terms, beta, se, ll, it, int(event.sum()))


def markov_test(records: TransitionRecords, outcome: str = "death_after") -> CoxFit:
    """Wald test of the exposure time as a covariate after exposure.

    Under the Markov assumption the post-exposure hazards do not depend
    on when the exposure happened, so the coefficient should be null.
    """
    targets = {"death_after": 5, "discharge_after": 4}
    if outcome not in targets:
        raise ValueError("outcome must be 'death_after' or 'discharge_after'")
    rows = [r for r in records.rows if r.from_state == 1]
    if not rows:
        raise DataError("no post-exposure intervals; nothing to test")
    start = np.array([r.t_start for r in rows])
    stop = np.array([r.t_stop for r in rows])
    event = np.array([r.to_state == targets[outcome] for r in rows])
    x = start[:, None].copy()  # time of exposure acquisition
    beta, se, ll, it = _cox_engine(start, stop, event, x, ("inf_time",))
    return CoxFit(outcome, ("inf_time",), beta, se, ll, it, int(event.sum()))
