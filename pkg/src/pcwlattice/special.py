"""Cylinder functions J0, Y0, K0 and H0^(1).

Evaluation regimes, identical in both backends:

* J0, Y0: ascending series for x <= 8; Miller backward recurrence with the
  Neumann expansion of Y0 for 8 < x < 25; Hankel asymptotic series beyond.
* K0: ascending series for x <= 2; Steed/Temme continued fraction beyond.
"""
import math

import numpy as np

from ._accel import njit, resolve_backend
from .constants import EULER_GAMMA
from .errors import DomainError

_SERIES_MAX_JY = 8.0
_ASYMPTOTIC_MIN_JY = 25.0
_SERIES_MAX_K = 2.0
_EPS = 1e-17
_TWO_OVER_PI = 2.0 / math.pi
_BIG = 1e250


# ---------------------------------------------------------------- scalar kernels


@njit
def _jy0_series(x):
    q = 0.25 * x * x
    term = 1.0
    j0 = 1.0
    hsum = 0.0
    ysum = 0.0
    k = 0
    while True:
        k += 1
        term *= -q / (k * k)
        hsum += 1.0 / k
        j0 += term
        ysum -= term * hsum
        if abs(term) * (hsum + 1.0) < _EPS * 1e-3 or k > 200:
            break
    y0 = _TWO_OVER_PI * ((math.log(0.5 * x) + EULER_GAMMA) * j0 + ysum)
    return j0, y0


@njit
def _miller_order(x):
    m = int(x + 12.0 * x ** (1.0 / 3.0) + 30.0)
    return m + (m % 2)


@njit
def _jy0_miller(x):
    m_start = _miller_order(x)
    jp1 = 0.0
    jk = 1e-300
    norm = 0.0
    ysum = 0.0
    for k in range(m_start, 0, -1):
        jm1 = (2.0 * k / x) * jk - jp1
        jp1 = jk
        jk = jm1
        m = k - 1
        if m > 0 and m % 2 == 0:
            half = m // 2
            norm += 2.0 * jk
            if half % 2 == 0:
                ysum += jk / half
            else:
                ysum -= jk / half
        if abs(jk) > _BIG:
            jk *= 1.0 / _BIG
            jp1 *= 1.0 / _BIG
            norm *= 1.0 / _BIG
            ysum *= 1.0 / _BIG
    norm += jk
    j0 = jk / norm
    y0 = _TWO_OVER_PI * ((math.log(0.5 * x) + EULER_GAMMA) * j0 - 2.0 * ysum / norm)
    return j0, y0


@njit
def _jy0_asymptotic(x):
    inv8x = 1.0 / (8.0 * x)
    p = 1.0
    q = 0.0
    b = 1.0
    prev = 2.0
    k = 0
    while k < 400:
        k += 1
        b *= (2.0 * k - 1.0) ** 2 * inv8x / k
        if b > prev:
            break
        prev = b
        r = k % 4
        if r == 1:
            q -= b
        elif r == 2:
            p -= b
        elif r == 3:
            q += b
        else:
            p += b
        if b < _EPS:
            break
    chi = x - 0.25 * math.pi
    amp = math.sqrt(_TWO_OVER_PI / x)
    c = math.cos(chi)
    s = math.sin(chi)
    return amp * (p * c - q * s), amp * (p * s + q * c)


@njit
def jy0_scalar(x):
    if x <= _SERIES_MAX_JY:
        return _jy0_series(x)
    if x < _ASYMPTOTIC_MIN_JY:
        return _jy0_miller(x)
    return _jy0_asymptotic(x)


@njit
def _k0_series(x):
    q = 0.25 * x * x
    term = 1.0
    i0 = 1.0
    hsum = 0.0
    tail = 0.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        hsum += 1.0 / k
        i0 += term
        tail += term * hsum
        if term * (hsum + 1.0) < _EPS * 1e-3 or k > 200:
            break
    return -(math.log(0.5 * x) + EULER_GAMMA) * i0 + tail


@njit
def _k0_cf2(x):
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25
    q = a1
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, 100000):
        a -= 2.0 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < 1e-17:
            break
    return math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s


@njit
def k0_scalar(x):
    if x <= _SERIES_MAX_K:
        return _k0_series(x)
    return _k0_cf2(x)


@njit
def _jy0_loop(x, out_j, out_y):
    for i in range(x.size):
        a, b = jy0_scalar(x[i])
        out_j[i] = a
        out_y[i] = b


@njit
def _j0_loop(x, out):
    # J0 is even; Y0 is not evaluated here so x may be 0 or negative
    for i in range(x.size):
        xi = abs(x[i])
        if xi == 0.0:
            out[i] = 1.0
        else:
            out[i] = jy0_scalar(xi)[0]


@njit
def _k0_loop(x, out):
    for i in range(x.size):
        out[i] = k0_scalar(x[i])


# ---------------------------------------------------------------- numpy kernels


def _np_jy0_series(x):
    q = 0.25 * x * x
    term = np.ones_like(x)
    j0 = np.ones_like(x)
    hsum = 0.0
    ysum = np.zeros_like(x)
    for k in range(1, 201):
        term = term * (-q / (k * k))
        hsum += 1.0 / k
        j0 = j0 + term
        ysum = ysum - term * hsum
        if np.all(np.abs(term) * (hsum + 1.0) < _EPS * 1e-3):
            break
    y0 = _TWO_OVER_PI * ((np.log(0.5 * x) + EULER_GAMMA) * j0 + ysum)
    return j0, y0


def _np_jy0_miller(x):
    m_start = int(np.max(x) + 12.0 * np.max(x) ** (1.0 / 3.0) + 30.0)
    m_start += m_start % 2
    jp1 = np.zeros_like(x)
    jk = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    ysum = np.zeros_like(x)
    for k in range(m_start, 0, -1):
        jm1 = (2.0 * k / x) * jk - jp1
        jp1 = jk
        jk = jm1
        m = k - 1
        if m > 0 and m % 2 == 0:
            half = m // 2
            norm = norm + 2.0 * jk
            ysum = ysum + (jk / half if half % 2 == 0 else -jk / half)
        big = np.abs(jk) > _BIG
        if np.any(big):
            scale = np.where(big, 1.0 / _BIG, 1.0)
            jk = jk * scale
            jp1 = jp1 * scale
            norm = norm * scale
            ysum = ysum * scale
    norm = norm + jk
    j0 = jk / norm
    y0 = _TWO_OVER_PI * ((np.log(0.5 * x) + EULER_GAMMA) * j0 - 2.0 * ysum / norm)
    return j0, y0


def _np_jy0_asymptotic(x):
    inv8x = 1.0 / (8.0 * x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    b = np.ones_like(x)
    prev = np.full_like(x, 2.0)
    live = np.ones(x.shape, dtype=bool)
    for k in range(1, 401):
        b = b * ((2.0 * k - 1.0) ** 2 * inv8x / k)
        live &= b <= prev
        prev = np.where(live, b, prev)
        contrib = np.where(live, b, 0.0)
        r = k % 4
        if r == 1:
            q = q - contrib
        elif r == 2:
            p = p - contrib
        elif r == 3:
            q = q + contrib
        else:
            p = p + contrib
        live &= b >= _EPS
        if not np.any(live):
            break
    chi = x - 0.25 * np.pi
    amp = np.sqrt(_TWO_OVER_PI / x)
    c = np.cos(chi)
    s = np.sin(chi)
    return amp * (p * c - q * s), amp * (p * s + q * c)


def _np_jy0(x):
    j = np.empty_like(x)
    y = np.empty_like(x)
    for mask, fn in (
        (x <= _SERIES_MAX_JY, _np_jy0_series),
        ((x > _SERIES_MAX_JY) & (x < _ASYMPTOTIC_MIN_JY), _np_jy0_miller),
        (x >= _ASYMPTOTIC_MIN_JY, _np_jy0_asymptotic),
    ):
        if np.any(mask):
            j[mask], y[mask] = fn(x[mask])
    return j, y


def _np_k0_series(x):
    q = 0.25 * x * x
    term = np.ones_like(x)
    i0 = np.ones_like(x)
    hsum = 0.0
    tail = np.zeros_like(x)
    for k in range(1, 201):
        term = term * (q / (k * k))
        hsum += 1.0 / k
        i0 = i0 + term
        tail = tail + term * hsum
        if np.all(term * (hsum + 1.0) < _EPS * 1e-3):
            break
    return -(np.log(0.5 * x) + EULER_GAMMA) * i0 + tail


def _np_k0_cf2(x):
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, 100000):
        a -= 2.0 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels / s) < 1e-17):
            break
    return np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) / s


def _np_k0(x):
    out = np.empty_like(x)
    small = x <= _SERIES_MAX_K
    if np.any(small):
        out[small] = _np_k0_series(x[small])
    if np.any(~small):
        out[~small] = _np_k0_cf2(x[~small])
    return out


# ---------------------------------------------------------------- public API


def _prepare(x, name, allow_nonpositive=False):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite")
    if not allow_nonpositive and np.any(arr <= 0.0):
        raise DomainError(f"{name}: argument must be > 0")
    return arr


def _finish(out, x):
    return out.reshape(np.shape(x))[()] if np.ndim(x) else float(out.reshape(-1)[0])


def _jy0(x, backend):
    flat = np.ascontiguousarray(x, dtype=float).reshape(-1)
    if resolve_backend(backend) == "numba":
        j = np.empty_like(flat)
        y = np.empty_like(flat)
        _jy0_loop(flat, j, y)
        return j, y
    return _np_jy0(flat)


def j0(x, backend=None):
    """Bessel function of the first kind, order zero."""
    arr = _prepare(x, "J0", allow_nonpositive=True)
    flat = np.abs(arr).reshape(-1)
    if resolve_backend(backend) == "numba":
        out = np.empty_like(flat)
        _j0_loop(flat, out)
    else:
        out = np.ones_like(flat)
        nz = flat > 0
        if np.any(nz):
            out[nz] = _np_jy0(flat[nz])[0]
    return _finish(out, x)


def y0(x, backend=None):
    """Bessel function of the second kind, order zero (x > 0)."""
    arr = _prepare(x, "Y0")
    return _finish(_jy0(arr, backend)[1], x)


def hankel1_0(x, backend=None):
    """Hankel function of the first kind, H0^(1)(x) = J0(x) + i Y0(x) (x > 0)."""
    arr = _prepare(x, "H1_0")
    j, y = _jy0(arr, backend)
    out = j + 1j * y
    return out.reshape(np.shape(x))[()] if np.ndim(x) else complex(out[0])


def k0(x, backend=None):
    """Modified Bessel function of the second kind, order zero (x > 0)."""
    arr = _prepare(x, "K0")
    flat = np.ascontiguousarray(arr, dtype=float).reshape(-1)
    if resolve_backend(backend) == "numba":
        out = np.empty_like(flat)
        _k0_loop(flat, out)
    else:
        out = _np_k0(flat)
    return _finish(out, x)


_KINDS = {"J0": j0, "Y0": y0, "K0": k0, "H1_0": hankel1_0}


def cyl_bessel(kind, x, backend=None):
    """Dispatch by name: ``kind`` is one of ``J0``, ``Y0``, ``K0``, ``H1_0``."""
    try:
        fn = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown kind {kind!r}; choose from {sorted(_KINDS)}") from None
    return fn(x, backend=backend)


def kernel_asymptote_check(x, small=0.1, large=10.0):
    """Classify ``x`` against the two K0 asymptotes.

    Returns ``(regime, ratio)`` where ``regime`` is ``"logarithmic"`` for
    ``x <= small``, ``"exponential"`` for ``x >= large`` and ``"crossover"``
    otherwise (``ratio`` is then ``None``). The ratio is K0 over the leading
    asymptote: ``-ln(x/2) - gamma`` or ``sqrt(pi/(2x)) exp(-x)``.
    """
    if not np.isfinite(x) or x <= 0:
        raise DomainError("kernel_asymptote_check: x must be > 0")
    if x <= small:
        return "logarithmic", k0(x) / (-math.log(0.5 * x) - EULER_GAMMA)
    if x >= large:
        return "exponential", k0(x) / (math.sqrt(math.pi / (2.0 * x)) * math.exp(-x))
    return "crossover", None
