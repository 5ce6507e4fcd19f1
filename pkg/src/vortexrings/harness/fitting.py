"""Log-log scaling fits of sweep results against ``|log eps|``."""

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import stats

from ..errors import VortexError


class FitError(VortexError, ValueError):
    pass


@dataclass
class ScalingFit:
    quantity: str
    n: int
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    expected_slope: float
    within_band: bool  # negative and |slope| within a factor 2 of |expected|

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return [getattr(self, c) for c in self.columns()]


def fit_power_law(log_abs_log_eps, values, quantity, expected, confidence=0.95):
    """Least squares ``log y = c + s log|log eps|`` with a t-based interval on ``s``."""
    x = np.asarray(log_abs_log_eps, dtype=float)
    y = np.asarray(values, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y) & (y > 0)
    x, y = x[ok], np.log(y[ok])
    if x.size < 3:
        raise FitError(f"{quantity}: need at least 3 usable records, have {x.size}")
    if np.ptp(x) < 1e-6 * max(1.0, np.max(np.abs(x))):
        raise FitError(f"{quantity}: abscissae log|log eps| are degenerate")
    res = stats.linregress(x, y)
    if x.size > 2:
        tq = stats.t.ppf(0.5 + confidence / 2, x.size - 2)
        half = tq * res.stderr
    else:
        half = math.inf
    s = float(res.slope)
    band = s < 0 and 0.5 * abs(expected) <= abs(s) <= 2.0 * abs(expected)
    return ScalingFit(quantity, int(x.size), s, float(res.intercept), float(res.stderr),
                      s - half, s + half, float(expected), bool(band))


def fit_scaling(records, alpha=None):
    """Fit ``sup |B - z|`` and ``sup I`` against ``|log eps|``.

    Expected slopes are ``-(alpha - 1)`` and ``-2 (alpha - 1)``. Records with
    a halt reason other than a containment breach are excluded.
    """
    recs = [r for r in records if not r.halted or r.halted == "containment"]
    if alpha is None:
        alphas = {r.alpha for r in recs}
        if len(alphas) != 1:
            raise FitError("records mix several alpha values; pass alpha explicitly")
        alpha = alphas.pop()
    eps = np.array([r.epsilon for r in recs])
    if np.unique(eps).size != eps.size:
        raise FitError("records must have distinct epsilon values")
    x = np.log(np.abs(np.log(eps)))
    return [
        fit_power_law(x, [r.sup_dist_to_pv for r in recs], "sup_dist_to_pv", -(alpha - 1)),
        fit_power_law(x, [r.sup_I for r in recs], "sup_I", -2 * (alpha - 1)),
    ]


def is_nonincreasing(values):
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= 0))
