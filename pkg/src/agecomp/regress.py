"""Ordinary least squares with inference, for modeling component weights.

Weight series (one value per schedule) are regressed on covariates; the
fitted models then turn covariate values into predicted weights, and the
weights into whole predicted age schedules through a component basis.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DataError, NumericalError
from .measures import derive_delta
from .schedule import AgeSchedule, ComponentBasis, reconstruct

# Columns with a known range; everything else is accepted as-is.
_FRACTION_COLUMNS = ("hiv_prev", "art_cov", "q45_15", "q5_0")


@dataclass(frozen=True)
class CovariateTable:
    """Per-schedule covariates keyed by schedule label (typically a year).

    The derived ``delta`` column is the untreated HIV-positive share,
    hiv_prev minus art_cov, expressed in percentage points (its customary
    reporting scale, and the scale on which the weight regressions run).
    """

    labels: tuple
    columns: dict

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        cols = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        object.__setattr__(self, "columns", cols)
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise DataError("covariate row labels are not unique")
        for name, col in cols.items():
            if col.shape != (n,):
                raise DataError(f"covariate column {name!r} has wrong length")
            if not np.all(np.isfinite(col)):
                raise DataError(f"covariate column {name!r} has non-finite entries")
        for name in _FRACTION_COLUMNS:
            if name in cols and (np.any(cols[name] < 0) or np.any(cols[name] > 1)):
                raise DataError(f"covariate {name!r} must lie in [0, 1]")
        if "e0" in cols and np.any(cols["e0"] <= 0):
            raise DataError("life expectancy e0 must be positive")

    def with_delta(self) -> "CovariateTable":
        """Add the derived delta column (percentage points); idempotent."""
        if "delta" in self.columns:
            return self
        if "hiv_prev" not in self.columns or "art_cov" not in self.columns:
            raise DataError("delta needs both hiv_prev and art_cov")
        delta = np.array(
            [
                100.0 * derive_delta(h, a)
                for h, a in zip(self.columns["hiv_prev"], self.columns["art_cov"])
            ]
        )
        return CovariateTable(self.labels, {**self.columns, "delta": delta})

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise DataError(f"no covariate column named {name!r}")
        return self.columns[name]

    def row(self, label) -> dict:
        try:
            i = self.labels.index(str(label))
        except ValueError:
            raise DataError(f"no covariate row labeled {label!r}") from None
        return {name: float(col[i]) for name, col in self.columns.items()}


@dataclass(frozen=True)
class LinearModel:
    """OLS fit: coefficients with standard errors, t and p values, R^2."""

    predictor_names: tuple  # without the intercept
    coefficients: np.ndarray  # intercept first when with_intercept
    standard_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    r_squared: float
    n: int
    residuals: np.ndarray
    with_intercept: bool = True

    def predict_one(self, covariates: dict) -> float:
        coefs = self.coefficients
        offset = 0
        value = 0.0
        if self.with_intercept:
            value = coefs[0]
            offset = 1
        for j, name in enumerate(self.predictor_names):
            if name not in covariates:
                raise DataError(f"missing covariate {name!r}")
            value += coefs[offset + j] * covariates[name]
        return float(value)


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta function (modified Lentz).
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-14:
            return h
    raise NumericalError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), evaluated by continued fraction; absolute error < 1e-8."""
    if not 0.0 <= x <= 1.0:
        raise NumericalError(f"x={x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_p_value(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t with df degrees of freedom."""
    if df < 1:
        raise NumericalError("degrees of freedom must be >= 1")
    if not math.isfinite(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def ols_fit(y, predictors: dict, with_intercept: bool = True) -> LinearModel:
    """Least-squares fit of y on named predictor columns.

    Standard errors come from sigma^2 (X'X)^{-1} with sigma^2 = RSS/(n-p);
    p-values are two-sided Student-t.  R^2 uses the centered total sum of
    squares when an intercept is present, uncentered otherwise.
    """
    yv = np.asarray(y, dtype=float)
    if yv.ndim != 1:
        raise DataError("response must be a vector")
    names = tuple(predictors.keys())
    cols = [np.asarray(predictors[name], dtype=float) for name in names]
    for name, col in zip(names, cols):
        if col.shape != yv.shape:
            raise DataError(f"predictor {name!r} length mismatch")
    design_cols = ([np.ones_like(yv)] if with_intercept else []) + cols
    design = np.column_stack(design_cols)
    n, p = design.shape
    if n <= p:
        raise NumericalError(f"{n} observations cannot identify {p} parameters")
    gram = design.T @ design
    if np.linalg.matrix_rank(design) < p:
        raise NumericalError("rank-deficient design matrix")
    coefs = np.linalg.solve(gram, design.T @ yv)
    residuals = yv - design @ coefs
    rss = float(residuals @ residuals)
    sigma2 = rss / (n - p)
    se = np.sqrt(np.diag(sigma2 * np.linalg.inv(gram)))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_values = np.where(se > 0, coefs / se, np.inf)
    p_values = np.array([student_t_p_value(t, n - p) for t in t_values])
    tss = float(((yv - yv.mean()) ** 2).sum()) if with_intercept else float(yv @ yv)
    r_squared = 1.0 - rss / tss if tss > 0 else 1.0
    return LinearModel(
        predictor_names=names,
        coefficients=coefs,
        standard_errors=se,
        t_values=t_values,
        p_values=p_values,
        r_squared=float(r_squared),
        n=n,
        residuals=residuals,
        with_intercept=with_intercept,
    )


def fit_weight_models(
    weights: np.ndarray, covariates: CovariateTable, predictor_names
) -> list:
    """One linear model per weight column, each on the same predictors."""
    w = linalg.as_matrix(weights)
    if w.shape[0] != len(covariates.labels):
        raise DataError("weight rows do not match covariate rows")
    table = covariates.with_delta() if "delta" in predictor_names else covariates
    predictors = {name: table.column(name) for name in predictor_names}
    return [ols_fit(w[:, i], predictors) for i in range(w.shape[1])]


def predict_weights(models, covariates: dict) -> np.ndarray:
    """Predicted weight vector: one model evaluation per component."""
    return np.array([m.predict_one(covariates) for m in models])


def predict_schedule(basis: ComponentBasis, models, covariates: dict) -> AgeSchedule:
    """Covariate-driven prediction of a whole age schedule."""
    if len(models) != basis.c:
        raise DataError(f"need {basis.c} models, got {len(models)}")
    return reconstruct(basis, predict_weights(models, covariates))
