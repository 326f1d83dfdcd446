"""Sine/cosine integrals and log-domain series coefficients.

The impedance closed forms consume Si/Ci at arguments up to a few hundred,
and the isotropic-correlation series needs its coefficients evaluated far
past the point where the factorials involved overflow a double.  Both are
scalar, pure functions.
"""

from __future__ import annotations

import math
from functools import lru_cache

__all__ = [
    "EULER_GAMMA",
    "DIPOLE_DIRECTIVITY",
    "sin_integral",
    "cos_integral",
    "log_alpha_magnitude",
    "alpha_coefficient",
]

EULER_GAMMA = 0.5772156649015328606

# Peak directivity of a thin half-wave dipole in the cos^3 pattern model.
DIPOLE_DIRECTIVITY = 1.67

# Branch switch for Si/Ci.  At the seam both branches agree to ~1e-14: the
# power series still has all intermediate terms below ~1e2 and the continued
# fraction already converges in a few dozen iterations.
_SERIES_CUTOFF = 6.0
_CF_MAX_ITER = 400


def _si_ci_series(x: float) -> tuple[float, float]:
    """Maclaurin sums: returns (Si(x), Ci(x) - gamma - ln x) for 0 <= x <= cutoff."""
    x2 = x * x
    si = x
    sin_term = x  # x^(2n+1)/(2n+1)!
    ci = 0.0
    cos_term = 1.0  # x^(2n)/(2n)!
    for n in range(1, 120):
        cos_term *= -x2 / ((2 * n - 1) * (2 * n))
        ci += cos_term / (2 * n)
        sin_term *= -x2 / ((2 * n) * (2 * n + 1))
        si += sin_term / (2 * n + 1)
        if abs(sin_term) < 1e-17 * abs(si) + 1e-300 and abs(cos_term) < 1e-17:
            break
    return si, ci


def _si_ci_continued_fraction(x: float) -> tuple[float, float]:
    """Lentz evaluation of the exponential-integral continued fraction at ix.

    Valid for x above ~2; used beyond the series cutoff.  Returns (Si, Ci).
    """
    b = complex(1.0, x)
    c = complex(1e308, 0.0)
    d = 1.0 / b
    h = d
    for i in range(2, _CF_MAX_ITER):
        a = -((i - 1) ** 2)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta.real - 1.0) + abs(delta.imag) < 1e-16:
            break
    h *= complex(math.cos(x), -math.sin(x))
    return math.pi / 2 + h.imag, -h.real


def sin_integral(x: float) -> float:
    """Si(x) = integral of sin(t)/t from 0 to x.  Odd in x."""
    if not math.isfinite(x):
        raise ValueError("sin_integral requires finite x")
    ax = abs(x)
    if ax <= _SERIES_CUTOFF:
        value = _si_ci_series(ax)[0]
    else:
        value = _si_ci_continued_fraction(ax)[0]
    return -value if x < 0 else value


def cos_integral(x: float) -> float:
    """Ci(x) = -integral of cos(t)/t from x to infinity, for x > 0."""
    if not (x > 0):
        raise ValueError("cos_integral requires x > 0")
    if x <= _SERIES_CUTOFF:
        return EULER_GAMMA + math.log(x) + _si_ci_series(x)[1]
    return _si_ci_continued_fraction(x)[1]


def _log_binomial(n: int, r: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


@lru_cache(maxsize=None)
def log_alpha_magnitude(k: int, l: int) -> tuple[int, float]:
    """Sign and natural log magnitude of the isotropic-series coefficient.

    The coefficient of (dz_norm)^(2(k-l)) (dy_norm)^(2l) in the closed-form
    expansion of the isotropic correlation entry.  Assembled entirely from
    log-gamma terms so that the factorials never overflow: the plain (2k)!
    already exceeds double range near k = 85 while the series cap is higher
    than the radius of practical convergence.

    Returns (sign, log|alpha|) with sign = (-1)^k.
    """
    if k < 0 or l < 0 or l > k:
        raise ValueError("require 0 <= l <= k")
    lg = math.lgamma
    # (2l+3)!! = (2l+3)! / (2^(l+1) (l+1)!)
    log_dfact = lg(2 * l + 4) - (l + 1) * math.log(2.0) - lg(l + 2)
    # (2k+4)(2k+2)...(2k-2l+2) = 2^(l+2) (k+2)! / (k-l)!
    log_even_prod = (l + 2) * math.log(2.0) + lg(k + 3) - lg(k - l + 1)
    log_mag = (
        -lg(2 * k + 1)
        + _log_binomial(2 * k, 2 * l)
        + _log_binomial(2 * l, l)
        + _log_binomial(2 * (k - l), k - l)
        + (2 * k + 2) * math.log(math.pi)
        + math.log(DIPOLE_DIRECTIVITY / (2.0 * math.pi))
        + log_dfact
        - log_even_prod
    )
    return (-1 if k % 2 else 1), log_mag


def alpha_coefficient(k: int, l: int) -> float:
    """Signed value of the series coefficient; underflows to 0 for huge k."""
    sign, log_mag = log_alpha_magnitude(k, l)
    return sign * math.exp(log_mag)
