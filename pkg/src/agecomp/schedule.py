"""Component model of age-correlated quantities.

A collection of age schedules (columns of a G x H matrix) is decomposed
once; the scaled left singular vectors become fixed age-varying components,
and every schedule is then a short weighted sum of those components.  The
weights for the source schedules are rows of the right singular vectors;
weights for new schedules come from an intercept-free projection.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DataError, NumericalError

NATURAL = "natural"
LOG = "log"
_SCALES = (NATURAL, LOG)


def _check_scale(scale: str) -> str:
    if scale not in _SCALES:
        raise DataError(f"scale must be one of {_SCALES}, got {scale!r}")
    return scale


@dataclass(frozen=True)
class AgeSchedule:
    """One age schedule: a rate for every age group, on a stated scale."""

    group_labels: tuple
    values: np.ndarray
    scale: str = NATURAL

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "group_labels", tuple(self.group_labels))
        if values.ndim != 1 or values.size == 0:
            raise DataError("schedule values must be a nonempty vector")
        if len(self.group_labels) != values.size:
            raise DataError("schedule labels and values differ in length")
        if not np.all(np.isfinite(values)):
            raise DataError("schedule contains non-finite values")
        _check_scale(self.scale)

    def to_log(self) -> "AgeSchedule":
        """Natural-log transform; rates must be strictly positive."""
        if self.scale == LOG:
            return self
        if np.any(self.values <= 0.0):
            bad = int(np.argmax(self.values <= 0.0))
            raise DataError(
                f"non-positive rate {self.values[bad]} at {self.group_labels[bad]!r}"
            )
        return AgeSchedule(self.group_labels, np.log(self.values), LOG)


@dataclass(frozen=True)
class ScheduleMatrix:
    """Labeled G x H matrix: one age schedule per column."""

    group_labels: tuple
    schedule_labels: tuple
    data: np.ndarray
    scale: str = NATURAL

    def __post_init__(self):
        data = linalg.as_matrix(self.data)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "group_labels", tuple(self.group_labels))
        object.__setattr__(self, "schedule_labels", tuple(self.schedule_labels))
        if data.shape != (len(self.group_labels), len(self.schedule_labels)):
            raise DataError(
                f"data shape {data.shape} does not match "
                f"{len(self.group_labels)} groups x {len(self.schedule_labels)} schedules"
            )
        _check_scale(self.scale)

    def column(self, label) -> AgeSchedule:
        try:
            h = self.schedule_labels.index(label)
        except ValueError:
            raise DataError(f"no schedule labeled {label!r}") from None
        return AgeSchedule(self.group_labels, self.data[:, h].copy(), self.scale)

    def to_log(self) -> "ScheduleMatrix":
        if self.scale == LOG:
            return self
        if np.any(self.data <= 0.0):
            g, h = np.unravel_index(int(np.argmax(self.data <= 0.0)), self.data.shape)
            raise DataError(
                f"non-positive rate {self.data[g, h]} at "
                f"({self.group_labels[g]!r}, {self.schedule_labels[h]!r})"
            )
        return ScheduleMatrix(
            self.group_labels, self.schedule_labels, np.log(self.data), LOG
        )


@dataclass(frozen=True)
class ComponentBasis:
    """Fixed age-varying components: columns of ``components`` are s_i * u_i."""

    group_labels: tuple
    components: np.ndarray  # G x c
    singular_values: np.ndarray  # length c
    scale: str
    source_id: str = ""

    def __post_init__(self):
        comps = linalg.as_matrix(self.components)
        object.__setattr__(self, "components", comps)
        object.__setattr__(
            self, "singular_values", np.asarray(self.singular_values, dtype=float)
        )
        object.__setattr__(self, "group_labels", tuple(self.group_labels))
        if comps.shape[0] != len(self.group_labels):
            raise DataError("component length does not match group labels")
        if comps.shape[1] != self.singular_values.size:
            raise DataError("component count does not match singular values")
        _check_scale(self.scale)

    @property
    def c(self) -> int:
        return self.components.shape[1]

    @property
    def n_groups(self) -> int:
        return self.components.shape[0]


@dataclass(frozen=True)
class FittedSchedule:
    """Least-squares weights of one schedule on a component basis."""

    betas: np.ndarray
    predicted: AgeSchedule
    residual_norm: float = field(default=float("nan"))


def _decompose(a: ScheduleMatrix, c: int) -> linalg.SvdFactorization:
    if c < 1:
        raise NumericalError(f"component count must be >= 1, got {c}")
    f = linalg.svd(a.data)
    if c > f.rank:
        raise NumericalError(f"requested {c} components, numerical rank is {f.rank}")
    return f


def build_basis(a: ScheduleMatrix, c: int, source_id: str = "") -> ComponentBasis:
    """First c canonicalized scaled left singular vectors of a schedule matrix."""
    f = _decompose(a, c)
    return ComponentBasis(
        group_labels=a.group_labels,
        components=f.u[:, :c] * f.s[:c],
        singular_values=f.s[:c].copy(),
        scale=a.scale,
        source_id=source_id,
    )


def svd_weights(a: ScheduleMatrix, c: int) -> np.ndarray:
    """H x c matrix of per-schedule weights: row h reconstructs column h."""
    f = _decompose(a, c)
    return f.v[:, :c].copy()


def fit_weights(observed: AgeSchedule, basis: ComponentBasis) -> FittedSchedule:
    """Intercept-free least-squares weights of a schedule on the components.

    Because the components are mutually orthogonal the solution is the
    per-component projection beta_i = (comp_i . y) / (comp_i . comp_i).
    """
    if len(observed.group_labels) != basis.n_groups:
        raise DataError(
            f"schedule has {len(observed.group_labels)} groups, basis has {basis.n_groups}"
        )
    if observed.scale != basis.scale:
        raise DataError(f"scale mismatch: {observed.scale} vs {basis.scale}")
    comps = basis.components
    betas = (comps.T @ observed.values) / np.einsum("ij,ij->j", comps, comps)
    predicted = reconstruct(basis, betas)
    residual = observed.values - predicted.values
    return FittedSchedule(
        betas=betas, predicted=predicted, residual_norm=float(np.linalg.norm(residual))
    )


def reconstruct(basis: ComponentBasis, betas) -> AgeSchedule:
    """Weighted sum of the basis components."""
    b = np.asarray(betas, dtype=float)
    if b.shape != (basis.c,):
        raise DataError(f"expected {basis.c} weights, got shape {b.shape}")
    return AgeSchedule(basis.group_labels, basis.components @ b, basis.scale)


def smooth_matrix(a: ScheduleMatrix, c: int) -> ScheduleMatrix:
    """Replace every column by its c-component reconstruction."""
    f = _decompose(a, c)
    return ScheduleMatrix(
        a.group_labels, a.schedule_labels, linalg.reconstruct_rank(f, c), a.scale
    )


_QUANTILE_PROBS = (0.01, 0.25, 0.50, 0.75, 0.99)


@dataclass(frozen=True)
class ErrorMetrics:
    """Mean absolute error plus the five-number |error| quantile summary."""

    mae: float
    quantiles: np.ndarray  # at probabilities 1, 25, 50, 75, 99 percent
    probs: tuple = _QUANTILE_PROBS


def error_metrics(predicted: ScheduleMatrix, observed: ScheduleMatrix) -> ErrorMetrics:
    """Absolute-error summary over all cells of two same-shape matrices."""
    if predicted.data.shape != observed.data.shape:
        raise DataError(
            f"shape mismatch: {predicted.data.shape} vs {observed.data.shape}"
        )
    if predicted.scale != observed.scale:
        raise DataError(f"scale mismatch: {predicted.scale} vs {observed.scale}")
    abserr = np.abs(predicted.data - observed.data).ravel()
    return ErrorMetrics(
        mae=float(abserr.mean()),
        quantiles=np.quantile(abserr, _QUANTILE_PROBS),
    )


def concat_sexes(female: ScheduleMatrix, male: ScheduleMatrix) -> ScheduleMatrix:
    """Stack female and male schedules into one matrix, female block first.

    Row labels are prefixed F_/M_ so each sex-age group stays identifiable.
    """
    if female.schedule_labels != male.schedule_labels:
        raise DataError("female and male schedule labels differ")
    if female.group_labels != male.group_labels:
        raise DataError("female and male age-group grids differ")
    if female.scale != male.scale:
        raise DataError("female and male matrices are on different scales")
    labels = tuple(f"F_{g}" for g in female.group_labels) + tuple(
        f"M_{g}" for g in male.group_labels
    )
    return ScheduleMatrix(
        labels,
        female.schedule_labels,
        np.vstack([female.data, male.data]),
        female.scale,
    )
