"""Two-term harmonic regression x(t) = b1 cos(wt) + b2 sin(wt), no intercept.

``t`` is counted in whole days from a fixed origin ``t0``; the fitted phase
lives in (b1, b2), so predictions for any later date reuse the same origin.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

OMEGA_ANNUAL = 2.0 * math.pi / 365.0
MAX_CONDITION = 1e10


class IllConditionedFit(ValueError):
    pass


@dataclass(frozen=True)
class HarmonicFit:
    beta1: float
    beta2: float
    omega: float = OMEGA_ANNUAL
    t0: dt.date | None = None
    city: str | None = None

    @property
    def amplitude(self) -> float:
        return math.hypot(self.beta1, self.beta2)

    def to_record(self) -> dict:
        return {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "omega": self.omega,
            "t0": self.t0.isoformat() if self.t0 else None,
            "city": self.city,
        }


def fit_ols(times, values, omega: float = OMEGA_ANNUAL, t0=None, city=None) -> HarmonicFit:
    """Least-squares (b1, b2) from the 2x2 normal equations.

    Raises
    ------
    IllConditionedFit
        If the normal matrix is singular or its condition number exceeds
        ``MAX_CONDITION`` (e.g. every sample at the same phase).
    """
    t = np.asarray(times, dtype=np.float64)
    x = np.asarray(values, dtype=np.float64)
    if t.shape != x.shape or t.ndim != 1:
        raise ValueError(f"times {t.shape} and values {x.shape} must be equal-length vectors")
    if len(t) < 2:
        raise IllConditionedFit("need at least 2 samples")
    if not omega > 0:
        raise ValueError("omega must be positive")
    c, s = np.cos(omega * t), np.sin(omega * t)
    scc, sss, scs = c @ c, s @ s, c @ s
    rc, rs = c @ x, s @ x
    det = scc * sss - scs * scs
    # condition number of the symmetric 2x2 matrix from its eigenvalues
    half_tr = 0.5 * (scc + sss)
    disc = math.sqrt(max(half_tr * half_tr - det, 0.0))
    lo, hi = half_tr - disc, half_tr + disc
    cond = math.inf if lo <= 0 else hi / lo
    if det <= 0 or cond > MAX_CONDITION:
        raise IllConditionedFit(
            f"normal matrix [[{scc:.6g}, {scs:.6g}], [{scs:.6g}, {sss:.6g}]] "
            f"is ill-conditioned (condition number {cond:.3g})"
        )
    beta1 = (sss * rc - scs * rs) / det
    beta2 = (scc * rs - scs * rc) / det
    return HarmonicFit(float(beta1), float(beta2), omega, t0, city)


def fit_series(series, standardizer, t0: dt.date | None = None, omega: float = OMEGA_ANNUAL) -> HarmonicFit:
    """Fit a :class:`~physforecast.data.DailySeries` in standardized units.

    The time origin defaults to the first day of ``series``.
    """
    t0 = t0 or series.start
    return fit_ols(series.days_since(t0), standardizer.apply(series.temps), omega, t0, series.city)


def predict(fit: HarmonicFit, times) -> np.ndarray:
    t = np.asarray(times, dtype=np.float64)
    return fit.beta1 * np.cos(fit.omega * t) + fit.beta2 * np.sin(fit.omega * t)


def objective(beta1, beta2, times, values, omega=OMEGA_ANNUAL) -> float:
    """Residual sum of squares at the given coefficients."""
    r = np.asarray(values) - beta1 * np.cos(omega * np.asarray(times)) - beta2 * np.sin(omega * np.asarray(times))
    return float(r @ r)
