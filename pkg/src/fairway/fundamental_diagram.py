"""Fundamental-diagram model forms, fitting, and characteristic parameters.

Six forms: three classical speed-density curves (linear, logarithmic,
exponential decay) and their piecewise variants with a free-flow plateau
at v_f up to a breakpoint density k1.  Characteristic parameters are
derived under a minimum-speed constraint: the maximum density k_max is
where speed falls to v_min, and the throughput optimum is taken over
(0, k_max] (closed-form interior optimum when feasible, else the best
boundary candidate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateFitError,
    DomainError,
    InsufficientDataError,
    NoFeasibleDensityError,
)
from .regression import FitReport, fit_curve, r_squared
from .trajectory import FlowSample

CLASSICAL_FORMS = ("greenshields", "greenberg", "underwood")
PIECEWISE_FORMS = ("piecewise_linear", "piecewise_log", "piecewise_exp")
ALL_FORMS = CLASSICAL_FORMS + PIECEWISE_FORMS

# Non-free branch of each piecewise form follows a classical shape.
_BRANCH_SHAPE = {
    "greenshields": "linear",
    "greenberg": "log",
    "underwood": "exp",
    "piecewise_linear": "linear",
    "piecewise_log": "log",
    "piecewise_exp": "exp",
}

# Curve family used when fitting each branch shape via the regression module.
_BRANCH_FAMILY = {"linear": "linear", "log": "logarithmic", "exp": "exponential"}


@dataclass(frozen=True)
class FdModel:
    """One fundamental-diagram form with positive branch coefficients (c1, c2).

    linear shape:  v = -c1*k + c2
    log shape:     v = -c1*ln(k) + c2
    exp shape:     v = c1*e^(-c2*k)
    Piecewise forms additionally carry the free-flow speed v_f and the
    breakpoint density k1; v = v_f for k <= k1.
    """

    form: str
    c1: float
    c2: float
    v_f: Optional[float] = None  # km/h; required for piecewise forms
    k1: Optional[float] = None  # vessels/km; piecewise only

    def __post_init__(self):
        if self.form not in ALL_FORMS:
            raise DomainError(f"unknown model form {self.form!r}")
        if not (self.c1 > 0 and self.c2 > 0):
            raise DomainError(
                f"model coefficients must be positive, got ({self.c1}, {self.c2})"
            )
        if self.is_piecewise:
            if self.v_f is None or self.v_f <= 0:
                raise DomainError("piecewise forms require v_f > 0")
            if self.k1 is None or self.k1 <= 0:
                raise DomainError("piecewise forms require k1 > 0")
        else:
            if self.k1 is not None:
                raise DomainError("classical forms take no breakpoint")

    @property
    def is_piecewise(self) -> bool:
        return self.form in PIECEWISE_FORMS

    @property
    def branch_shape(self) -> str:
        return _BRANCH_SHAPE[self.form]

    @property
    def free_flow_speed(self) -> Optional[float]:
        """v at k -> 0+: c2 (linear), c1 (exp), unbounded (log -> None)."""
        if self.is_piecewise:
            return self.v_f
        if self.form == "greenshields":
            return self.c2
        if self.form == "underwood":
            return self.c1
        return None  # greenberg: v -> infinity as k -> 0+


@dataclass(frozen=True)
class CharacteristicParams:
    v_f: Optional[float]  # km/h; None for the logarithmic classical form
    v_m: float  # km/h
    k_m: float  # vessels/km
    q_m: float  # vessels/h
    k_max: float  # vessels/km
    v_min: float  # km/h, the input constraint echoed

    def __post_init__(self):
        if abs(self.q_m - self.k_m * self.v_m) > 1e-9 * max(1.0, abs(self.q_m)):
            raise DomainError("q_m must equal k_m * v_m")


@dataclass(frozen=True)
class EconomicSpeed:
    loaded_median: float
    empty_median: float
    combined_v_f: float


@dataclass(frozen=True)
class RecommendedMinimums:
    v_min: float  # km/h
    g_min: float  # m


def _branch_speed(shape: str, c1: float, c2: float, k):
    k = np.asarray(k, dtype=float)
    if shape == "linear":
        out = -c1 * k + c2
    elif shape == "log":
        out = -c1 * np.log(k) + c2
    else:  # exp
        out = c1 * np.exp(-c2 * k)
    return out if out.ndim else float(out)


def speed_at_density(model: FdModel, k: float):
    """Evaluate v(k) in km/h; piecewise forms plateau at v_f for k <= k1.

    Accepts scalars or arrays.  k must be positive for logarithmic shapes
    (and for the log branch of the piecewise variant); other forms accept 0.
    """
    arr = np.asarray(k, dtype=float)
    if np.any(arr < 0):
        raise DomainError("density must be non-negative")
    if model.is_piecewise:
        if model.branch_shape == "log" and np.any(arr <= 0):
            raise DomainError("logarithmic form undefined at k <= 0")
        branch = _branch_speed(model.branch_shape, model.c1, model.c2, arr)
        out = np.where(arr <= model.k1, model.v_f, branch)
    else:
        if model.branch_shape == "log" and np.any(arr <= 0):
            raise DomainError("logarithmic form undefined at k <= 0")
        out = np.asarray(_branch_speed(model.branch_shape, model.c1, model.c2, arr))
    return out if np.ndim(k) else float(out)


def flow_at_density(model: FdModel, k: float):
    """q(k) = k * v(k) in vessels/h."""
    return np.asarray(k, dtype=float) * speed_at_density(model, k) if np.ndim(k) \
        else k * speed_at_density(model, k)


def scale_speed_units(model: FdModel, factor: float) -> FdModel:
    """Rescale all speed outputs by a positive factor (e.g. 1/3.6 for m/s).

    Densities are untouched: linear/log shapes scale both coefficients,
    the exponential shape scales only the amplitude.
    """
    if factor <= 0:
        raise DomainError("speed scale factor must be positive")
    v_f = None if model.v_f is None else model.v_f * factor
    if model.branch_shape == "exp":
        return replace(model, c1=model.c1 * factor, v_f=v_f)
    return replace(model, c1=model.c1 * factor, c2=model.c2 * factor, v_f=v_f)


def _k_max(shape: str, c1: float, c2: float, v_min: float) -> float:
    """Density where the branch speed falls to v_min (closed form)."""
    if shape == "linear":
        return (c2 - v_min) / c1
    if shape == "log":
        return math.exp((c2 - v_min) / c1)
    return math.log(c1 / v_min) / c2  # exp


def _interior_optimum(shape: str, c1: float, c2: float) -> float:
    """Unconstrained argmax of k * v(k) on the branch."""
    if shape == "linear":
        return c2 / (2 * c1)
    if shape == "log":
        return math.exp(c2 / c1 - 1)
    return 1 / c2  # exp


def derive_characteristics(model: FdModel, v_min: float) -> CharacteristicParams:
    """Characteristic parameters under the minimum-speed constraint.

    k_max solves v(k_max) = v_min on the non-free branch; the throughput
    optimum (k_m, v_m, q_m) is the best of the interior closed-form optimum
    (when it lies in the feasible open interval) and the boundary candidates
    k1 (piecewise) and k_max.
    """
    if v_min <= 0:
        raise DomainError("v_min must be positive")
    shape, c1, c2 = model.branch_shape, model.c1, model.c2
    sup_v = model.free_flow_speed  # None means unbounded (log shape)
    if sup_v is not None and v_min >= sup_v:
        raise NoFeasibleDensityError(
            f"v_min {v_min} is not below the maximum attainable speed {sup_v}"
        )
    if shape == "exp" and v_min >= c1:
        raise NoFeasibleDensityError(
            f"v_min {v_min} exceeds the branch amplitude {c1}"
        )
    k_max = _k_max(shape, c1, c2, v_min)
    lower = model.k1 if model.is_piecewise else 0.0
    if k_max <= lower:
        raise NoFeasibleDensityError(
            f"speed falls to v_min at k={k_max:.4f}, inside the free-flow plateau"
        )

    candidates = [k_max]
    if model.is_piecewise:
        candidates.append(model.k1)
    k_star = _interior_optimum(shape, c1, c2)
    if lower < k_star <= k_max:
        candidates.append(k_star)

    k_m = max(candidates, key=lambda k: flow_at_density(model, k))
    v_m = speed_at_density(model, k_m)
    return CharacteristicParams(
        v_f=model.free_flow_speed,
        v_m=v_m,
        k_m=k_m,
        q_m=k_m * v_m,
        k_max=k_max,
        v_min=v_min,
    )


def _model_from_branch_fit(form: str, report: FitReport, v_f=None, k1=None) -> FdModel:
    """Map a regression-family fit onto branch coefficients, enforcing signs."""
    shape = _BRANCH_SHAPE[form]
    if shape == "linear":
        c1, c2 = -report.a, report.b
    elif shape == "log":
        c1, c2 = -report.a, report.b
    else:  # exp: v = a * e^(b*k) with b expected negative
        c1, c2 = report.a, -report.b
    if c1 <= 0 or c2 <= 0:
        raise DegenerateFitError(
            f"fitted {form} coefficients violate positivity: ({c1:.6g}, {c2:.6g})"
        )
    return FdModel(form=form, c1=c1, c2=c2, v_f=v_f, k1=k1)


def fit_fd(
    form: str,
    samples: Sequence[FlowSample],
    v_f: Optional[float] = None,
    k1: Optional[float] = None,
    k1_candidates: Optional[Sequence[float]] = None,
) -> tuple[FdModel, FitReport]:
    """Fit one model form to (density, mean_speed) samples.

    Classical forms reduce to a regression-module fit on (k, v).  Piecewise
    forms fix the free branch at v_f, fit the non-free branch to samples with
    k > k1 only, and report R^2 over all samples against the full piecewise
    prediction.  k1 may be given directly or estimated from candidates.
    """
    if form not in ALL_FORMS:
        raise DomainError(f"unknown model form {form!r}")
    if len(samples) < 3:
        raise InsufficientDataError("fitting needs at least 3 samples")
    points = [(s.density, s.mean_speed) for s in samples]

    if form in CLASSICAL_FORMS:
        report = fit_curve(_BRANCH_FAMILY[_BRANCH_SHAPE[form]], points)
        return _model_from_branch_fit(form, report), report

    if v_f is None or v_f <= 0:
        raise DomainError("piecewise fitting requires v_f > 0")
    if k1 is None:
        if not k1_candidates:
            raise DomainError("piecewise fitting requires k1 or k1_candidates")
        k1 = estimate_breakpoint(samples, v_f, k1_candidates, form=form)
    branch_points = [(k, v) for k, v in points if k > k1]
    if len(branch_points) < 2:
        raise InsufficientDataError(
            f"only {len(branch_points)} samples beyond k1={k1}; need at least 2"
        )
    branch_report = fit_curve(_BRANCH_FAMILY[_BRANCH_SHAPE[form]], branch_points)
    model = _model_from_branch_fit(form, branch_report, v_f=v_f, k1=k1)
    observed = [v for _, v in points]
    estimated = [speed_at_density(model, k) for k, _ in points]
    report = FitReport(
        family=form,
        a=model.c1,
        b=model.c2,
        r_squared=r_squared(observed, estimated),
        n_points=len(points),
        fit_space="original",
    )
    return model, report


def estimate_breakpoint(
    samples: Sequence[FlowSample],
    v_f: float,
    candidates: Sequence[float],
    form: str = "piecewise_exp",
) -> float:
    """Pick the breakpoint minimizing total squared error of the piecewise fit.

    For each candidate: flat v_f for k <= candidate plus the best-fit branch
    beyond it.  Ties go to the smaller candidate.  Candidates leaving fewer
    than 2 samples in the non-free branch are skipped.
    """
    if not candidates or any(c <= 0 for c in candidates):
        raise DomainError("candidates must be non-empty and positive")
    if form not in PIECEWISE_FORMS:
        raise DomainError(f"estimate_breakpoint needs a piecewise form, got {form!r}")
    points = [(s.density, s.mean_speed) for s in samples]
    best = None
    for cand in sorted(candidates):
        branch_points = [(k, v) for k, v in points if k > cand]
        if len(branch_points) < 2:
            continue
        try:
            report = fit_curve(_BRANCH_FAMILY[_BRANCH_SHAPE[form]], branch_points)
            model = _model_from_branch_fit(form, report, v_f=v_f, k1=cand)
        except (DomainError, DegenerateFitError):
            continue
        sse = sum((v - speed_at_density(model, k)) ** 2 for k, v in points)
        if best is None or sse < best[0]:
            best = (sse, cand)
    if best is None:
        raise InsufficientDataError(
            "no candidate leaves at least 2 samples in the non-free branch"
        )
    return best[1]


def economic_speed(speeds_by_load: dict[str, Sequence[float]]) -> EconomicSpeed:
    """Median speed per load class; combined free-flow speed = mean of medians."""
    for key in ("loaded", "empty"):
        if not len(speeds_by_load.get(key, ())):
            raise DomainError(f"economic_speed requires a non-empty {key!r} speed list")
    loaded = float(np.median(np.asarray(speeds_by_load["loaded"], dtype=float)))
    empty = float(np.median(np.asarray(speeds_by_load["empty"], dtype=float)))
    return EconomicSpeed(
        loaded_median=loaded,
        empty_median=empty,
        combined_v_f=(loaded + empty) / 2,
    )


def recommend_minimums(
    speeds: Sequence[float],
    gaps: Sequence[float],
    tail_fraction: float = 0.001,
) -> RecommendedMinimums:
    """Tail-quantile minimum speed and gap, computed independently per variable."""
    if not len(speeds) or not len(gaps):
        raise DomainError("recommend_minimums requires non-empty speed and gap lists")
    if not 0 < tail_fraction < 0.5:
        raise DomainError("tail_fraction must lie in (0, 0.5)")
    v_min = float(np.quantile(np.asarray(speeds, dtype=float), tail_fraction))
    g_min = float(np.quantile(np.asarray(gaps, dtype=float), tail_fraction))
    return RecommendedMinimums(v_min=v_min, g_min=g_min)
