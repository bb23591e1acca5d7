"""Cohort ingestion and the counting-process / daily-panel reshapes.

State coding for the six-state model: 0 admission, 1 exposed, 2 discharge
without exposure, 3 death without exposure, 4 discharge after exposure,
5 death after exposure.  Censoring is coded as ``CENSORED``.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParseError

__all__ = [
    "CENSORED",
    "Subject",
    "TiePolicy",
    "Diagnostic",
    "Cohort",
    "CohortSummary",
    "TransitionRecords",
    "DailyPanel",
    "parse_cohort",
    "cohort_to_csv",
    "summarize",
    "to_transitions",
    "discretize",
    "subjects_from_transitions",
]

CENSORED = -1

STATUSES = ("death", "discharge", "censored")
# numeric status codes used in array views
STATUS_CENSORED, STATUS_DEATH, STATUS_DISCHARGE = 0, 1, 2
_STATUS_CODE = {"censored": STATUS_CENSORED, "death": STATUS_DEATH, "discharge": STATUS_DISCHARGE}
_STATUS_NAME = {v: k for k, v in _STATUS_CODE.items()}


@dataclass(frozen=True)
class Subject:
    """One patient's exposure/outcome history."""

    id: str
    inf_time: float | None
    end_time: float
    end_status: str
    covariates: dict = field(default_factory=dict)

    def validate(self):
        if self.end_status not in STATUSES:
            raise DataError(f"subject {self.id}: unknown status {self.end_status!r}")
        if not self.end_time > 0:
            raise DataError(f"subject {self.id}: end_time must be > 0")
        if self.inf_time is not None:
            if not 0 < self.inf_time < self.end_time:
                raise DataError(
                    f"subject {self.id}: inf_time must lie strictly in (0, end_time)"
                )

    @property
    def exposed(self) -> bool:
        return self.inf_time is not None


@dataclass(frozen=True)
class TiePolicy:
    """How to treat rows with inf_time == end_time."""

    kind: str  # "reject" or "shift"
    eps: float = 1e-3

    def __post_init__(self):
        if self.kind not in ("reject", "shift"):
            raise ValueError("tie policy must be 'reject' or 'shift'")
        if self.kind == "shift" and not self.eps > 0:
            raise ValueError("shift epsilon must be positive")

    @classmethod
    def reject(cls):
        return cls("reject")

    @classmethod
    def shift(cls, eps=1e-3):
        return cls("shift", eps)

    @classmethod
    def parse(cls, text: str) -> "TiePolicy":
        if text == "reject":
            return cls.reject()
        if text == "shift":
            return cls.shift()
        if text.startswith("shift:"):
            return cls.shift(float(text.split(":", 1)[1]))
        raise ValueError(f"unknown tie policy {text!r}")


@dataclass(frozen=True)
class Diagnostic:
    """Structured warning attached to a cohort (one per adjusted row)."""

    subject_id: str
    message: str


@dataclass(frozen=True)
class Cohort:
    subjects: tuple[Subject, ...]
    tie_policy: TiePolicy = TiePolicy.shift()
    horizon: float = 0.0
    diagnostics: tuple[Diagnostic, ...] = ()

    def __post_init__(self):
        subjects = tuple(self.subjects)
        object.__setattr__(self, "subjects", subjects)
        seen = set()
        for s in subjects:
            s.validate()
            if s.id in seen:
                raise DataError(f"duplicate subject id {s.id!r}")
            seen.add(s.id)
        max_end = max((s.end_time for s in subjects), default=0.0)
        horizon = self.horizon if self.horizon else max_end
        if subjects and horizon < max_end:
            raise DataError("horizon must be >= the largest end_time")
        object.__setattr__(self, "horizon", float(horizon))

    def __len__(self):
        return len(self.subjects)

    def covariate_names(self):
        names = []
        for s in self.subjects:
            for k in s.covariates:
                if k not in names:
                    names.append(k)
        return names


@dataclass(frozen=True)
class CohortSummary:
    n: int
    exposed: int
    unexposed_deaths: int
    unexposed_discharges: int
    unexposed_censored: int
    exposed_deaths: int
    exposed_discharges: int
    exposed_censored: int
    person_days: float


@dataclass(frozen=True)
class TransitionRow:
    subject_id: str
    from_state: int
    to_state: int  # 1..5 or CENSORED
    t_start: float
    t_stop: float


@dataclass(frozen=True)
class TransitionRecords:
    """Long-format counting-process view of a cohort."""

    rows: tuple[TransitionRow, ...]
    covariates: dict = field(default_factory=dict)  # subject_id -> covariate dict

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        by_subject = {}
        for r in self.rows:
            if not r.t_start < r.t_stop:
                raise DataError(f"subject {r.subject_id}: t_start must be < t_stop")
            if r.from_state == 0 and r.to_state not in (1, 2, 3, CENSORED):
                raise DataError(f"subject {r.subject_id}: invalid transition 0->{r.to_state}")
            if r.from_state == 1 and r.to_state not in (4, 5, CENSORED):
                raise DataError(f"subject {r.subject_id}: invalid transition 1->{r.to_state}")
            by_subject.setdefault(r.subject_id, []).append(r)
        for sid, rs in by_subject.items():
            rs.sort(key=lambda r: r.t_start)
            if len(rs) == 1:
                if rs[0].from_state != 0:
                    raise DataError(f"subject {sid}: single row must start in state 0")
            elif len(rs) == 2:
                first, second = rs
                if not (first.from_state == 0 and first.to_state == 1 and second.from_state == 1):
                    raise DataError(f"subject {sid}: rows must chain 0->1 then 1->...")
                if first.t_stop != second.t_start:
                    raise DataError(f"subject {sid}: chained rows must share the exposure time")
            else:
                raise DataError(f"subject {sid}: more than two rows")
        object.__setattr__(self, "_by_subject", by_subject)

    def subject_arrays(self):
        """Per-subject view: (ids, inf_time with NaN, end_time, status code)."""
        ids, inf, end, status = [], [], [], []
        for sid, rs in self._by_subject.items():
            ids.append(sid)
            if len(rs) == 2:
                inf.append(rs[0].t_stop)
                last = rs[1]
            else:
                inf.append(math.nan)
                last = rs[0]
            end.append(last.t_stop)
            if last.to_state == CENSORED:
                status.append(STATUS_CENSORED)
            elif last.to_state in (3, 5):
                status.append(STATUS_DEATH)
            else:
                status.append(STATUS_DISCHARGE)
        return (
            list(ids),
            np.array(inf, dtype=float),
            np.array(end, dtype=float),
            np.array(status, dtype=np.int64),
        )


@dataclass(frozen=True)
class DailyPanel:
    """Integer-day discretization: A(s) and eps(s) for s = 1..m.

    ``a[i, s-1]`` is 1 once inf_time <= s; ``eps[i, s-1]`` is 1 (death)
    or 2 (discharge) once end_time <= s.  Censored subjects are excluded
    and listed in ``dropped``.
    """

    ids: tuple[str, ...]
    a: np.ndarray  # (n, m) uint8
    eps: np.ndarray  # (n, m) uint8
    covariates: tuple[dict, ...]
    dropped: tuple[str, ...] = ()

    @property
    def n_days(self) -> int:
        return self.a.shape[1]

    @property
    def n_subjects(self) -> int:
        return self.a.shape[0]

    def exposure_day(self):
        """First day s with A(s)=1 per subject, or m+1 if never exposed."""
        return _first_day(self.a > 0)

    def terminal_day(self):
        """First day s with eps(s) != 0 per subject, or m+1 if none."""
        return _first_day(self.eps > 0)


def _first_day(mask):
    m = mask.shape[1]
    any_ = mask.any(axis=1)
    first = np.where(any_, mask.argmax(axis=1) + 1, m + 1)
    return first.astype(np.int64)


def parse_cohort(source, tie_policy: TiePolicy = TiePolicy.shift(), horizon=None) -> Cohort:
    """Read a cohort from CSV (``id,inf_time,end_time,end_status[,<covariate>...]``)."""
    if isinstance(source, os.PathLike):
        source = os.fspath(source)
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        if "\n" not in source and "," not in source:  # a path, not CSV text
            with open(source, "r", encoding="utf-8", newline="") as fh:
                return _parse(fh, tie_policy, horizon)
        return _parse(io.StringIO(source), tie_policy, horizon)
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return _parse(io.StringIO(data), tie_policy, horizon)
    raise TypeError("source must be a path, text, bytes, or file object")


def _parse(fh, tie_policy, horizon):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input") from None
    header = [h.strip() for h in header]
    required = ["id", "inf_time", "end_time", "end_status"]
    if header[: len(required)] != required:
        raise ParseError(f"header must start with {','.join(required)}", row=1)
    cov_names = header[len(required):]

    subjects = []
    diagnostics = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw or all(not f.strip() for f in raw):
            continue
        if len(raw) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(raw)}", row=lineno)
        sid = raw[0].strip()
        if not sid:
            raise ParseError("empty id", row=lineno)
        inf = _parse_time(raw[1], "inf_time", lineno, optional=True)
        end = _parse_time(raw[2], "end_time", lineno)
        status = raw[3].strip()
        if status not in STATUSES:
            raise ParseError(f"unknown status {status!r}", row=lineno)
        if end <= 0:
            raise ParseError("end_time must be positive", row=lineno)
        if inf is not None:
            if inf > end:
                raise ParseError("inf_time > end_time", row=lineno)
            if inf == end:
                if tie_policy.kind == "reject":
                    raise ParseError("inf_time == end_time (tie policy: reject)", row=lineno)
                inf = end - tie_policy.eps
                diagnostics.append(
                    Diagnostic(sid, f"inf_time tied with end_time; shifted to {inf:g}")
                )
            if inf <= 0:
                raise ParseError("inf_time must be positive", row=lineno)
        covs = {}
        for name, value in zip(cov_names, raw[len(required):]):
            value = value.strip()
            if value == "":
                raise ParseError(f"missing value for covariate {name!r}", row=lineno)
            try:
                covs[name] = float(value)
            except ValueError:
                covs[name] = value
        subjects.append(Subject(sid, inf, end, status, covs))

    return Cohort(
        tuple(subjects),
        tie_policy=tie_policy,
        horizon=horizon or 0.0,
        diagnostics=tuple(diagnostics),
    )


def _parse_time(text, name, lineno, optional=False):
    text = text.strip()
    if text == "":
        if optional:
            return None
        raise ParseError(f"missing {name}", row=lineno)
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"bad {name} {text!r}", row=lineno) from None
    if value < 0:
        raise ParseError(f"negative {name}", row=lineno)
    return value


def summarize(cohort: Cohort) -> CohortSummary:
    """Exposure/outcome counts and total person-time."""
    counts = {
        (False, "death"): 0, (False, "discharge"): 0, (False, "censored"): 0,
        (True, "death"): 0, (True, "discharge"): 0, (True, "censored"): 0,
    }
    person_days = 0.0
    for s in cohort.subjects:
        counts[(s.exposed, s.end_status)] += 1
        person_days += s.end_time
    exposed = sum(v for (e, _), v in counts.items() if e)
    return CohortSummary(
        n=len(cohort),
        exposed=exposed,
        unexposed_deaths=counts[(False, "death")],
        unexposed_discharges=counts[(False, "discharge")],
        unexposed_censored=counts[(False, "censored")],
        exposed_deaths=counts[(True, "death")],
        exposed_discharges=counts[(True, "discharge")],
        exposed_censored=counts[(True, "censored")],
        person_days=person_days,
    )


_TERMINAL_STATE = {
    (False, "discharge"): 2,
    (False, "death"): 3,
    (True, "discharge"): 4,
    (True, "death"): 5,
}


def to_transitions(cohort: Cohort) -> TransitionRecords:
    """Reshape to the six-state counting-process representation."""
    rows = []
    covs = {}
    for s in cohort.subjects:
        covs[s.id] = dict(s.covariates)
        if s.exposed:
            rows.append(TransitionRow(s.id, 0, 1, 0.0, s.inf_time))
            to = CENSORED if s.end_status == "censored" else _TERMINAL_STATE[(True, s.end_status)]
            rows.append(TransitionRow(s.id, 1, to, s.inf_time, s.end_time))
        else:
            to = CENSORED if s.end_status == "censored" else _TERMINAL_STATE[(False, s.end_status)]
            rows.append(TransitionRow(s.id, 0, to, 0.0, s.end_time))
    return TransitionRecords(tuple(rows), covariates=covs)


def subjects_from_transitions(records: TransitionRecords) -> list[Subject]:
    """Inverse of :func:`to_transitions`."""
    ids, inf, end, status = records.subject_arrays()
    out = []
    for i, sid in enumerate(ids):
        out.append(
            Subject(
                sid,
                None if math.isnan(inf[i]) else float(inf[i]),
                float(end[i]),
                _STATUS_NAME[int(status[i])],
                dict(records.covariates.get(sid, {})),
            )
        )
    return out


def discretize(cohort: Cohort, allow_drop: bool = False) -> DailyPanel:
    """Build the integer-day panel over days 1..ceil(horizon).

    Censored subjects violate the complete-follow-up assumption of the
    discrete estimators; they are rejected unless ``allow_drop`` is set,
    in which case they are excluded and flagged.
    """
    censored = [s.id for s in cohort.subjects if s.end_status == "censored"]
    if censored and not allow_drop:
        raise DataError(
            "censored subjects present (pass allow_drop to exclude them): "
            + ", ".join(censored)
        )
    kept = [s for s in cohort.subjects if s.end_status != "censored"]
    m = int(math.ceil(cohort.horizon))
    n = len(kept)
    a = np.zeros((n, m), dtype=np.uint8)
    eps = np.zeros((n, m), dtype=np.uint8)
    days = np.arange(1, m + 1)
    for i, s in enumerate(kept):
        if s.exposed:
            a[i] = days >= s.inf_time
        code = STATUS_DEATH if s.end_status == "death" else STATUS_DISCHARGE
        eps[i] = np.where(days >= s.end_time, code, 0)
    return DailyPanel(
        ids=tuple(s.id for s in kept),
        a=a,
        eps=eps,
        covariates=tuple(dict(s.covariates) for s in kept),
        dropped=tuple(censored),
    )


def cohort_to_csv(cohort: Cohort) -> str:
    """Serialize a cohort in the same CSV format parse_cohort reads."""
    names = cohort.covariate_names()
    buf = io.StringIO()
    buf.write("id,inf_time,end_time,end_status")
    for name in names:
        buf.write(f",{name}")
    buf.write("\n")
    for s in cohort.subjects:
        inf = "" if s.inf_time is None else format(s.inf_time, ".12g")
        buf.write(f"{s.id},{inf},{s.end_time:.12g},{s.end_status}")
        for name in names:
            buf.write(f",{s.covariates.get(name, '')}")
        buf.write("\n")
    return buf.getvalue()
