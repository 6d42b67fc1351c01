"""Stable special functions for Rician outage analysis.

Provides the first-order Marcum Q-function, the exponentially scaled
modified Bessel function I0, and the two-degree-of-freedom noncentral
chi-square density / CDF / quantile.  Everything here is pure, reentrant
and accepts scalars or numpy arrays (broadcasting supported); scalars in
give scalars out.
"""

from __future__ import annotations

import numpy as np
from scipy import special as sp
from scipy import stats

__all__ = [
    "marcum_q1",
    "bessel_i0_scaled",
    "ncchi2_pdf",
    "ncchi2_cdf",
    "ncchi2_quantile",
]


def _validate_nonneg(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if np.any(arr < 0.0):
        raise ValueError(f"{name} must be nonnegative, got {value!r}")
    return arr


def marcum_q1(a, b):
    """First-order Marcum Q-function Q1(a, b).

    Q1(a, b) = integral from b to infinity of t*exp(-(t^2+a^2)/2)*I0(a*t) dt,
    the survival function at b^2 of a noncentral chi-square variate with two
    degrees of freedom and noncentrality a^2.

    Evaluated as a Poisson mixture of Erlang tails,

        Q1(a, b) = sum_k  pois(k; a^2/2) * GammaQ(k + 1, b^2/2),

    summed over a window centred on the Poisson mode so the weights never
    underflow.  The Erlang tails GammaQ are seeded once with the regularized
    upper incomplete gamma and continued with the forward (addition-only)
    recurrence, which keeps every step stable.  Absolute error is below
    1e-12 for a, b <= 50; the result is clamped to [0, 1].

    Parameters
    ----------
    a, b : float or array_like
        Nonnegative, finite.  Broadcast against each other.

    Returns
    -------
    float or ndarray
        Q1(a, b) in [0, 1].
    """
    a = _validate_nonneg("a", a)
    b = _validate_nonneg("b", b)
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    x = 0.5 * np.ravel(a) ** 2  # Poisson mean of the mixing index
    y = 0.5 * np.ravel(b) ** 2
    if x.size == 0:
        return np.empty(shape)

    # The summation window scales with sqrt(max x), so mixed-magnitude
    # batches are split into buckets that each run only as long a window as
    # their own largest mean requires.
    total = np.empty_like(x)
    order = np.argsort(x)
    xs = x[order]
    edges = np.searchsorted(xs, [32.0, 128.0, 512.0, 2048.0])
    cuts = [0, *edges.tolist(), xs.size]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if lo < hi:
            idx = order[lo:hi]
            total[idx] = _marcum_series(x[idx], y[idx])

    out = np.clip(total, 0.0, 1.0).reshape(shape)
    return float(out) if out.ndim == 0 else out


def _marcum_series(x, y):
    """Windowed Poisson-Erlang series for one magnitude bucket.

    The half-width covers 8.5 sigma of the widest Poisson weight in the
    bucket, keeping the truncated mass (and hence the absolute error on the
    probability) below ~1e-15.
    """
    big = float(np.max(x))
    half = int(np.ceil(8.5 * np.sqrt(max(big, 1.0)))) + 25
    k = np.maximum(np.floor(x) - half, 0.0)

    p = np.exp(sp.xlogy(k, x) - x - sp.gammaln(k + 1.0))
    gam_q = sp.gammaincc(k + 1.0, y)
    tau = np.exp(sp.xlogy(k, y) - y - sp.gammaln(k + 1.0))
    total = np.zeros_like(x)
    for _ in range(2 * half + 1):
        total += p * gam_q
        p *= x / (k + 1.0)
        tau *= y / (k + 1.0)
        gam_q += tau
        k += 1.0
    return total


def bessel_i0_scaled(x):
    """Exponentially scaled modified Bessel function, exp(-x)*I0(x).

    Monotone decreasing on x >= 0 with values in (0, 1]; safe for large x
    where the plain I0 would overflow.
    """
    arr = _validate_nonneg("x", x)
    out = sp.i0e(arr)
    return float(out) if np.ndim(x) == 0 else out


def ncchi2_pdf(x, s):
    """Density of the noncentral chi-square law with 2 DoF, noncentrality s.

    f(x; s) = 0.5*exp(-(x+s)/2)*I0(sqrt(s*x)), computed through the scaled
    Bessel so the product stays finite up to s*x ~ 1e12.
    """
    xa = _validate_nonneg("x", x)
    sa = _validate_nonneg("s", s)
    z = np.sqrt(sa * xa)
    # exp(-(x+s)/2)*I0(z) = exp(z - (x+s)/2) * i0e(z); the exponent is
    # -(sqrt(x)-sqrt(s))^2/2 <= 0, so nothing can overflow.
    out = 0.5 * np.exp(-0.5 * (np.sqrt(xa) - np.sqrt(sa)) ** 2) * sp.i0e(z)
    if np.ndim(x) == 0 and np.ndim(s) == 0:
        return float(out)
    return out


def ncchi2_cdf(x, s):
    """CDF of the noncentral chi-square law with 2 DoF: 1 - Q1(sqrt(s), sqrt(x))."""
    xa = _validate_nonneg("x", x)
    sa = _validate_nonneg("s", s)
    out = 1.0 - marcum_q1(np.sqrt(sa), np.sqrt(xa))
    return out


def ncchi2_quantile(p, s):
    """Quantile of the noncentral chi-square law with 2 DoF.

    Returns x with ncchi2_cdf(x, s) = p to within 1e-10, found by a
    bracketed Newton iteration (bisection step whenever Newton escapes the
    bracket).  The start point comes from the exponential closed form for
    s = 0 and from scipy's noncentral chi-square otherwise.
    """
    p = float(p)
    s = float(_validate_nonneg("s", s))
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")

    if s == 0.0:
        return -2.0 * np.log1p(-p)  # chi-square with 2 DoF is exponential

    x = float(stats.ncx2.ppf(p, 2, s))
    if not np.isfinite(x) or x <= 0.0:
        x = s + 2.0
    lo, hi = 0.0, x
    while ncchi2_cdf(hi, s) < p:
        lo, hi = hi, 2.0 * hi + 1.0

    for _ in range(200):
        f = ncchi2_cdf(x, s) - p
        if f > 0.0:
            hi = x
        else:
            lo = x
        if abs(f) <= 1e-12:
            break
        df = ncchi2_pdf(x, s)
        step_ok = df > 0.0
        if step_ok:
            x_new = x - f / df
            step_ok = lo < x_new < hi
        x = x_new if step_ok else 0.5 * (lo + hi)
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return x
