"""Complete elliptic integrals by the arithmetic-geometric mean.

All routines take the parameter ``m = k**2`` *and* its complement
``m1 = 1 - m`` separately. Callers that know ``m1`` in closed form (as the
ring kernel does, ``m1 = |x-y|**2 / rho**2``) keep full relative accuracy as
``m -> 1``, where ``K`` diverges logarithmically.
"""

import numpy as np

_MAX_AGM = 40
# Below this parameter the power series are used for the combinations that
# cancel to O(m); above it AGM values are combined directly.
SERIES_CUTOFF = 0.2
_N_SERIES = 60


def _series_coefficients():
    n = np.arange(_N_SERIES + 1, dtype=float)
    # (1/2)_n / n!  and  (3/2)_n / n!
    half = np.ones(_N_SERIES + 1)
    three_half = np.ones(_N_SERIES + 1)
    for k in range(1, _N_SERIES + 1):
        half[k] = half[k - 1] * (k - 0.5) / k
        three_half[k] = three_half[k - 1] * (k + 0.5) / k
    return n, half, three_half


_N, _HALF, _THREE_HALF = _series_coefficients()
_HALF_NEXT = np.append(_HALF[1:], _HALF[-1] * (_N_SERIES + 0.5) / (_N_SERIES + 1))
# K - E = pi/2 * sum_n  w_n^2 * 2n/(2n-1) * m^n
_KME = 0.5 * np.pi * _HALF ** 2 * 2 * _N / (2 * _N - 1)
# int_0^{pi/2} (2 sin^2 - 1)(1 - m sin^2)^{-3/2} = pi/2 * sum_n c_n (2 w_{n+1} - w_n) m^n
_COSJ = 0.5 * np.pi * _THREE_HALF * (2 * _HALF_NEXT - _HALF)


def ellipke(m, m1=None):
    """Return ``(K(m), E(m))`` for ``0 <= m < 1`` (arrays broadcast)."""
    m = np.asarray(m, dtype=float)
    m1 = 1.0 - m if m1 is None else np.asarray(m1, dtype=float)
    if np.any(m1 <= 0) or np.any(m < 0):
        raise ValueError("elliptic parameter must satisfy 0 <= m < 1")
    a = np.ones(np.broadcast(m, m1).shape)
    b = np.sqrt(m1) * a
    c2 = m * a
    # sum 2^(n-1) c_n^2, starting with c_0^2 / 2
    acc = 0.5 * c2
    power = 0.5
    for _ in range(_MAX_AGM):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        power *= 2.0
        acc = acc + power * c * c
        if np.all(np.abs(c) <= 1e-17 * a):
            break
    kk = 0.5 * np.pi / a
    ee = kk * (1.0 - acc)
    return kk, ee


def ellipk(m, m1=None):
    return ellipke(m, m1)[0]


def ellipe(m, m1=None):
    return ellipke(m, m1)[1]


def _e_minus_one_coefficients():
    from math import log
    coef, dig = [], []
    a = 1.0  # (1/2)_j (3/2)_j / ((2)_j j!)
    psi_gap = 2.0 * log(2.0)  # psi(1 + j) - psi(1/2 + j)
    for j in range(_N_SERIES):
        coef.append(0.5 * a)
        dig.append(psi_gap - 1.0 / ((2 * j + 1) * (2 * j + 2)))
        a *= (j + 0.5) * (j + 1.5) / ((j + 2) * (j + 1))
        psi_gap += 1.0 / (j + 1) - 1.0 / (j + 0.5)
    return np.array(coef), np.array(dig)


_EM1_COEF, _EM1_SHIFT = _e_minus_one_coefficients()
COMPLEMENT_CUTOFF = 0.1


def e_minus_one(m1, ee=None):
    """``E(m) - 1`` given the complementary parameter ``m1 = 1 - m``.

    Near ``m = 1`` this is O(m1 log m1) and cannot be formed as ``E - 1``;
    the logarithmic expansion about ``m = 1`` is summed instead.
    """
    m1 = np.asarray(m1, dtype=float)
    if ee is None:
        ee = ellipe(1.0 - m1, m1)
    out = np.asarray(ee - 1.0, dtype=float).copy()
    near = m1 < COMPLEMENT_CUTOFF
    if np.any(near):
        q = m1[near]
        log_inv_kp = -0.5 * np.log(q)
        powers = q[:, None] ** (np.arange(_N_SERIES) + 1)[None, :]
        out[near] = np.sum(_EM1_COEF * powers * (log_inv_kp[:, None] + _EM1_SHIFT), axis=1)
    return out


def k_minus_e(m, kk=None, ee=None):
    """``K(m) - E(m)``, via power series for small ``m`` where it is O(m)."""
    m = np.asarray(m, dtype=float)
    if kk is None or ee is None:
        kk, ee = ellipke(m)
    out = np.asarray(kk - ee, dtype=float).copy()
    small = m < SERIES_CUTOFF
    if np.any(small):
        out[small] = np.polynomial.polynomial.polyval(m[small], _KME)
    return out


def cos_moment(m, m1, kk, ee):
    """``int_0^{pi/2} (2 sin^2 p - 1) (1 - m sin^2 p)^{-3/2} dp``.

    Equals ``((2 - m) E / m1 - 2 K) / m``; the closed form loses all digits
    as ``m -> 0`` so the hypergeometric series takes over there.
    """
    m = np.asarray(m, dtype=float)
    small = m < SERIES_CUTOFF
    safe_m = np.where(small, 1.0, m)
    out = ((2.0 - m) * ee / m1 - 2.0 * kk) / safe_m
    if np.any(small):
        out = np.asarray(out, dtype=float).copy()
        out[small] = np.polynomial.polynomial.polyval(m[small], _COSJ)
    return out
