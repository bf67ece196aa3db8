"""Quadrature plumbing and small special-function kernels.

Everything here is shared numerical machinery: tolerance settings for the
adaptive integrals used throughout the package, a thin wrapper over QUADPACK
that turns non-convergence into a typed error, cancellation-safe complex
exponential differences, and the upper incomplete gamma function extended to
negative parameters by downward recurrence.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "QuadratureSettings",
    "QuadratureError",
    "DEFAULT_QUADRATURE",
    "adaptive_quad",
    "gammainc_upper",
    "cexp_m1",
    "cexp_m1_lin",
]


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances for the adaptive radial integrals."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be at least 10")


DEFAULT_QUADRATURE = QuadratureSettings()


class QuadratureError(ArithmeticError):
    """Adaptive integration failed; carries the achieved error estimate."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


# Error estimates beyond this level (absolute, or relative for large values)
# mean the returned number cannot be trusted at all.
_REJECT_LEVEL = 1e-6


def adaptive_quad(f, a, b, settings=DEFAULT_QUADRATURE, points=None, weight=None, wvar=None):
    """Integrate ``f`` over ``[a, b]`` adaptively.

    ``weight``/``wvar`` select QUADPACK's oscillatory rules (needed for
    Fourier-type tails over infinite intervals).  ``points`` marks interior
    break points such as kinks; it is only legal on finite intervals and is
    dropped otherwise.
    """
    kwargs = {}
    if weight is not None:
        kwargs["weight"] = weight
        kwargs["wvar"] = wvar
    elif points is not None and math.isfinite(a) and math.isfinite(b):
        interior = [p for p in points if a < p < b]
        if interior:
            kwargs["points"] = sorted(interior)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        value, err = integrate.quad(
            f, a, b,
            epsabs=settings.abs_tol,
            epsrel=settings.rel_tol,
            limit=settings.max_subdivisions,
            **kwargs,
        )
    if not math.isfinite(value) or err > max(_REJECT_LEVEL, _REJECT_LEVEL * abs(value)):
        raise QuadratureError(
            f"quadrature did not converge on [{a}, {b}] (error estimate {err:.3e})",
            estimate=err,
        )
    return value


def cexp_m1(z):
    """exp(iz) - 1 for real z, with the real part via the half-angle sine."""
    z = np.asarray(z, dtype=float)
    half = np.sin(0.5 * z)
    return -2.0 * half * half + 1j * np.sin(z)


# Below this magnitude sin(z) - z is evaluated by series to dodge cancellation.
_SERIES_SWITCH = 1e-4


def cexp_m1_lin(z):
    """exp(iz) - 1 - iz for real z, cancellation-safe near zero."""
    z = np.asarray(z, dtype=float)
    half = np.sin(0.5 * z)
    re = -2.0 * half * half
    zc = z * z
    series = -(z * zc) / 6.0 * (1.0 - zc / 20.0)
    with np.errstate(invalid="ignore"):
        direct = np.sin(z) - z
    im = np.where(np.abs(z) < _SERIES_SWITCH, series, direct)
    return re + 1j * im


def _upper_gamma_series(p, x):
    # Gamma(p, x) = Gamma(p) - gamma(p, x) with the lower tail from the
    # standard ascending series; intended for 0 < p <= 2 and x < 1.5, where
    # the subtraction loses at most a few bits.
    total = np.full(x.shape, 1.0 / p)
    term = total.copy()
    ap = p
    for _ in range(300):
        ap += 1.0
        term = term * x / ap
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    lower = total * np.exp(-x + p * np.log(x))
    return math.gamma(p) - lower


def _upper_gamma_contfrac(p, x):
    # Legendre continued fraction via modified Lentz.  Converges for any
    # p < x + 1, including negative p, so for x >= 1.5 it is applied at the
    # target parameter directly (no cancellation-prone recurrence).
    tiny = 1e-300
    b = x + 1.0 - p  # >= 0.5 whenever x >= 1.5 and p <= 2
    c = np.full(x.shape, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 1000):
        an = -i * (i - p)
        b = b + 2.0
        d = an * d + b
        np.copyto(d, tiny, where=(d == 0.0))
        c = b + an / c
        np.copyto(c, tiny, where=(c == 0.0))
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 1e-15):
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return np.exp(-x + p * np.log(x)) * h


_CONTFRAC_SWITCH = 1.5


def gammainc_upper(p, x):
    """Unnormalized upper incomplete gamma Gamma(p, x) for x > 0.

    Supports the parameter range needed here, p in (-2, 2].  For x >= 1.5
    the Legendre continued fraction is evaluated at p itself (it converges
    for negative parameters too).  For smaller x the value is built by the
    downward recurrence Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a from
    a series-computed start with parameter in (0, 1]; integer stops at a = 0
    use the exponential integral, where the recurrence degenerates.
    """
    if not -2.0 < p <= 2.0:
        raise ValueError("parameter must lie in (-2, 2]")
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr).astype(float)
    if np.any(~np.isfinite(x_arr)) or np.any(x_arr <= 0.0):
        raise ValueError("argument must be positive and finite")

    big = x_arr >= _CONTFRAC_SWITCH
    out = np.empty_like(x_arr)
    if np.any(big):
        out[big] = _upper_gamma_contfrac(p, x_arr[big])
    if np.any(~big):
        out[~big] = _upper_gamma_recurrence(p, x_arr[~big])
    return float(out[0]) if scalar else out


def _upper_gamma_recurrence(p, x):
    steps = 0 if p > 0.0 else int(math.floor(-p)) + 1
    p0 = p + steps  # in (0, 1] for p <= 0, p itself otherwise
    out = _upper_gamma_series(p0, x)
    a = p0
    for _ in range(steps):
        a -= 1.0
        if a == 0.0:
            out = special.exp1(x)
        else:
            out = (out - np.exp(a * np.log(x) - x)) / a
    return out
