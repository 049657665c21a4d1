"""Reduced-form projections of ``(y, T, z)`` on exogenous controls."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataError,
    DegenerateCovarianceError,
    InconsistentRestrictionError,
    IrrelevantInstrumentError,
    SingularDesignError,
)

log = logging.getLogger(__name__)

RELEVANCE_TOL = 1e-12
PD_TOL = 1e-12
TREATMENT_KINDS = ("continuous", "binary")


@dataclass(frozen=True)
class Dataset:
    """Validated columns ready for the reduced-form fit.

    Use :func:`make_dataset` or :func:`load_csv` rather than constructing this
    directly; they prepend the intercept and drop incomplete rows.
    """

    y: np.ndarray
    t: np.ndarray
    z: np.ndarray
    x: np.ndarray
    treatment_kind: str = "continuous"
    dropped_rows: int = 0

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class ReducedFormFit:
    sigma_hat: np.ndarray
    s: np.ndarray
    n: int
    k: int
    r12: float
    r13: float
    r23: float
    r2_t_on_x: float
    p_hat: float | None
    treatment_kind: str
    coefficients: tuple = field(repr=False, default=())

    @property
    def ols_slope(self) -> float:
        return float(self.s[0, 1] / self.s[1, 1])

    @property
    def iv_slope(self) -> float:
        return float(self.s[0, 2] / self.s[1, 2])


def _is_constant(col: np.ndarray) -> bool:
    return bool(np.all(col == col[0]))


def make_dataset(y, t, z, x=None, treatment_kind="continuous", dropped_rows=0) -> Dataset:
    """Assemble a :class:`Dataset`, prepending an intercept column if needed.

    A single constant column already in ``x`` is accepted as the intercept;
    more than one is rejected as a singular design.
    """
    if treatment_kind not in TREATMENT_KINDS:
        raise DataError(f"treatment_kind must be one of {TREATMENT_KINDS}")
    y = np.asarray(y, dtype=float).ravel()
    t = np.asarray(t, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    n = y.shape[0]
    if t.shape[0] != n or z.shape[0] != n:
        raise DataError("y, t and z must have the same length")
    if x is None:
        x = np.empty((n, 0))
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != n:
        raise DataError("controls must have the same number of rows as y")
    n_const = sum(_is_constant(x[:, j]) for j in range(x.shape[1])) if n else 0
    if n_const > 1:
        raise SingularDesignError("singular design: duplicated constant columns")
    if n_const == 0:
        x = np.column_stack([np.ones(n), x])
    if not np.all(np.isfinite(np.column_stack([y, t, z, x]))):
        raise DataError("non-finite values in data")
    if n < x.shape[1] + 4:
        raise DataError(f"need at least k + 4 = {x.shape[1] + 4} observations, got {n}")
    if treatment_kind == "binary":
        vals = set(np.unique(t).tolist())
        if vals != {0.0, 1.0}:
            raise DataError("binary treatment must take both values 0 and 1 and nothing else")
    return Dataset(y, t, z, x, treatment_kind, dropped_rows)


def load_csv(path, y: str, t: str, z: str, x=(), treatment_kind="continuous") -> Dataset:
    """Read a CSV with a header row and build a :class:`Dataset`.

    Rows with a missing value in any used column are dropped and counted.
    """
    import pandas as pd

    frame = pd.read_csv(path)
    cols = [y, t, z, *x]
    missing = [c for c in cols if c not in frame.columns]
    if missing:
        raise DataError(f"columns not found in data: {missing}")
    sub = frame[cols].apply(pd.to_numeric, errors="coerce")
    complete = sub.dropna()
    dropped = len(sub) - len(complete)
    if dropped:
        log.warning("dropped %d rows with missing values", dropped)
    xs = complete[list(x)].to_numpy() if x else None
    return make_dataset(complete[y].to_numpy(), complete[t].to_numpy(), complete[z].to_numpy(),
                        xs, treatment_kind, dropped)


def fit_reduced_form(data: Dataset) -> ReducedFormFit:
    """Least-squares residual covariance of ``(y, T, z)`` given the controls."""
    x = data.x
    n, k = x.shape
    if np.linalg.matrix_rank(x) < k:
        raise SingularDesignError()
    yy = np.column_stack([data.y, data.t, data.z])
    coef, *_ = np.linalg.lstsq(x, yy, rcond=None)
    q, _ = np.linalg.qr(x)
    resid = yy - q @ (q.T @ yy)
    s = resid.T @ resid
    s = 0.5 * (s + s.T)
    d = np.sqrt(np.diag(s))
    if np.any(d == 0.0):
        raise DegenerateCovarianceError()
    corr = s / np.outer(d, d)
    if np.linalg.eigvalsh(corr)[0] <= PD_TOL:
        raise DegenerateCovarianceError()
    sigma_hat = s / (n - k)
    try:
        np.linalg.cholesky(sigma_hat)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovarianceError() from exc
    if abs(s[1, 2]) < RELEVANCE_TOL * d[1] * d[2]:
        raise IrrelevantInstrumentError()
    tc = data.t - data.t.mean()
    tss = float(tc @ tc)
    r2 = 1.0 - s[1, 1] / tss if tss > 0 else 0.0
    p_hat = float(data.t.mean()) if data.treatment_kind == "binary" else None
    return ReducedFormFit(
        sigma_hat=sigma_hat,
        s=s,
        n=n,
        k=k,
        r12=float(corr[0, 1]),
        r13=float(corr[0, 2]),
        r23=float(corr[1, 2]),
        r2_t_on_x=float(r2),
        p_hat=p_hat,
        treatment_kind=data.treatment_kind,
        coefficients=tuple(coef[:, j].copy() for j in range(3)),
    )


def kappa_from_lambda(lam: float, r2: float) -> float:
    """Signal share of the treatment residual from a raw reliability ratio.

    Examples
    --------
    >>> round(kappa_from_lambda(0.7, 0.4), 12)
    0.5
    """
    if not (0.0 <= r2 < 1.0):
        raise InconsistentRestrictionError("R^2 must lie in [0, 1)")
    kappa = (lam - r2) / (1.0 - r2)
    if not (0.0 < kappa <= 1.0):
        raise InconsistentRestrictionError("restriction inconsistent with R^2")
    return kappa


def kappa_from_estimates(b_ols: float, b_iv_alt: float) -> float:
    """Signal share implied by an attenuated and an unattenuated slope."""
    if b_iv_alt == 0.0 or b_ols * b_iv_alt <= 0.0 or abs(b_ols) > abs(b_iv_alt):
        raise InconsistentRestrictionError("inconsistent auxiliary estimates")
    return b_ols / b_iv_alt
