"""Tabulate ``D = G - K`` on a grid and the normalised envelope ratio."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..kernels import KernelConfig, KernelMode, kernel_difference

KERNEL_CHECK_COLUMNS = ["r0", "x1", "x2", "y1", "y2", "sep", "D1", "D2", "bound_ratio"]

DEFAULT_R0 = (1e2, 1e3, 1e4)
DEFAULT_X2_FRACTIONS = (-1.0, -0.5, 0.0, 0.5, 1.0)
DEFAULT_SEPARATIONS = tuple(10.0 ** k for k in np.arange(-6.0, 4.01, 0.5))
DEFAULT_ANGLES = 8


@dataclass
class KernelCheckResult:
    rows: list
    max_ratio: dict  # r0 -> max bound_ratio
    max_d2_scaled: dict  # r0 -> max |D2| r0

    def ratio_spread(self):
        v = list(self.max_ratio.values())
        return max(v) / min(v)

    def d2_spread(self):
        v = list(self.max_d2_scaled.values())
        return max(v) / min(v)


def envelope(r0, sep):
    """``(1 + log r0 + max(0, log 1/|x - y|)) / r0``."""
    return (1.0 + math.log(r0) + np.maximum(0.0, -np.log(sep))) / r0


def _directions(n):
    ang = 2 * np.pi * np.arange(n) / n
    d = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    d[np.abs(d) < 1e-12] = 0.0
    return d


def grid_pairs(r0, x2_fractions=DEFAULT_X2_FRACTIONS, separations=DEFAULT_SEPARATIONS,
               angles=DEFAULT_ANGLES):
    """Pairs ``(x, y)`` with ``x = (0, f r0/2)`` and ``y = x + s e``, both in ``|x2| <= r0/2``."""
    xs, ys = [], []
    half = r0 / 2
    for f in x2_fractions:
        x = np.array([0.0, f * half])
        for s in separations:
            for e in _directions(angles):
                y = x + s * e
                if abs(y[1]) <= half and s > 0:
                    xs.append(x)
                    ys.append(y)
    if not xs:
        raise ConfigError(f"kernel-check grid is empty for r0={r0}")
    return np.array(xs), np.array(ys)


def kernel_check(r0_list=DEFAULT_R0, x2_fractions=DEFAULT_X2_FRACTIONS,
                 separations=DEFAULT_SEPARATIONS, angles=DEFAULT_ANGLES,
                 mode=KernelMode.ELLIPTIC, quad_rel_tol=1e-10):
    """Evaluate ``D`` over the grid for each ``r0`` and the envelope ratio
    ``|D| r0 / (1 + log r0 + max(0, log |x - y|^-1))``."""
    mode = KernelMode(mode)
    if mode is KernelMode.PLANAR:
        raise ConfigError("kernel-check needs an axisymmetric kernel mode")
    rows, max_ratio, max_d2 = [], {}, {}
    for r0 in r0_list:
        r0 = float(r0)
        if abs(max(x2_fractions, key=abs)) > 1:
            raise ConfigError("x2 fractions must lie in [-1, 1] so that |x2| <= r0/2")
        cfg = KernelConfig(r0=r0, mode=mode, quad_rel_tol=quad_rel_tol)
        x, y = grid_pairs(r0, x2_fractions, separations, angles)
        d = kernel_difference(x, y, cfg)
        sep = np.hypot(*(x - y).T)
        ratio = np.hypot(d[:, 0], d[:, 1]) / envelope(r0, sep)
        max_ratio[r0] = float(ratio.max())
        max_d2[r0] = float(np.max(np.abs(d[:, 1])) * r0)
        for k in range(len(x)):
            rows.append([r0, x[k, 0], x[k, 1], y[k, 0], y[k, 1], float(sep[k]),
                         float(d[k, 0]), float(d[k, 1]), float(ratio[k])])
    return KernelCheckResult(rows, max_ratio, max_d2)
