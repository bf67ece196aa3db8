"""Tempering of heavy-tailed jumps.

A tempering function q(r, s) satisfies q(0+, s) = alpha and q(inf, s) = 0,
and user-supplied ones must be non-increasing in r (the conditionally
exponential built-in rises briefly near zero when alpha < 1, which is fine:
everything downstream only uses the survival function).  q induces

    pi(u, s) = u^alpha * integral_u^inf r^(-alpha-1) q(r, s) dr,

which is the tail P(T > u) of the tempering variable T attached to direction
s.  Tempered jumps keep their direction and have radius min(R, v*T).

Built-in families:

* ``no_tempering``            q = alpha, pi = 1, T = +inf.
* ``conditionally_exponential``  q = (alpha + lam*r) e^(-lam*r), pi = e^(-lam*u).
* ``exponential_q``           q = alpha * e^(-lam*r); pi needs the upper
                              incomplete gamma at negative parameter.
* ``custom_q``                user callable, validated by sampling; pi by
                              adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import DEFAULT_QUADRATURE, adaptive_quad, gammainc_upper
from .spectral import SpectralMeasure

__all__ = [
    "TemperingSpec",
    "RegularityReport",
    "NO_TEMPERING",
    "CONDITIONALLY_EXPONENTIAL",
    "EXPONENTIAL_Q",
    "CUSTOM_Q",
]

NO_TEMPERING = "no_tempering"
CONDITIONALLY_EXPONENTIAL = "conditionally_exponential"
EXPONENTIAL_Q = "exponential_q"
CUSTOM_Q = "custom_q"

_FAMILIES = (NO_TEMPERING, CONDITIONALLY_EXPONENTIAL, EXPONENTIAL_Q, CUSTOM_Q)

# Bisection bracket and width for inverse-survival sampling.
_ROOT_LO = 1e-12
_ROOT_REL_WIDTH = 1e-10

# Validation grid for custom tempering callables.  The limit value alpha is
# only required loosely at the left edge because admissible q may approach it
# at any power rate.
_CHECK_GRID = np.geomspace(1e-10, 1e8, 181)
_LIMIT_SLACK = 0.05


@dataclass(frozen=True)
class RegularityReport:
    """Profile of u^(1-beta) * (alpha - q(u, s)) on a log grid near zero."""

    beta: float
    sup_value: float
    bounded: bool
    grid: np.ndarray
    values: np.ndarray  # one row per atom (or a single row for scalar rates)


class TemperingSpec:
    """One tempering family with its rates and quadrature settings.

    ``rates`` may be a positive scalar (used for every direction) or a
    sequence aligned with the atoms of ``sigma``.  Directions are passed to
    the evaluation methods as ``None`` (scalar-rate families), an atom index,
    or a unit vector matched against ``sigma``.
    """

    def __init__(self, alpha, family, rates=None, sigma=None, q=None,
                 quadrature=DEFAULT_QUADRATURE, _validate=True):
        if not 0.0 < alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if family not in _FAMILIES:
            raise ValueError(f"unknown tempering family {family!r}")
        self.alpha = float(alpha)
        self.family = family
        self.sigma = sigma
        self.quadrature = quadrature
        self._q_callable = q
        self._tables = {}

        if family == NO_TEMPERING:
            self._rates = None
        elif family == CUSTOM_Q:
            if q is None or not callable(q):
                raise ValueError("custom_q needs a callable q(r, s)")
            if not isinstance(sigma, SpectralMeasure):
                raise ValueError("custom_q needs the spectral measure for validation")
            self._rates = None
            if _validate:
                self._validate_custom()
        else:
            if rates is None:
                raise ValueError(f"{family} needs a tempering rate")
            if np.isscalar(rates):
                if not (np.isfinite(rates) and rates > 0):
                    raise ValueError("tempering rate must be positive")
                self._rates = float(rates)
            else:
                arr = np.asarray(rates, dtype=float).ravel()
                if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
                    raise ValueError("tempering rates must be positive")
                if not isinstance(sigma, SpectralMeasure):
                    raise ValueError("per-atom rates need the spectral measure")
                if arr.shape[0] != len(sigma):
                    raise ValueError("need one rate per atom")
                self._rates = arr

    # ---------------------------------------------------------------- setup

    @classmethod
    def no_tempering(cls, alpha):
        return cls(alpha, NO_TEMPERING)

    @classmethod
    def conditionally_exponential(cls, alpha, rates, sigma=None):
        return cls(alpha, CONDITIONALLY_EXPONENTIAL, rates=rates, sigma=sigma)

    @classmethod
    def exponential_q(cls, alpha, rates, sigma=None):
        return cls(alpha, EXPONENTIAL_Q, rates=rates, sigma=sigma)

    @classmethod
    def custom_q(cls, alpha, q, sigma, quadrature=DEFAULT_QUADRATURE):
        return cls(alpha, CUSTOM_Q, sigma=sigma, q=q, quadrature=quadrature)

    def _validate_custom(self):
        for s in self.sigma.directions:
            vals = np.asarray([float(self._q_callable(r, s)) for r in _CHECK_GRID])
            if np.any(~np.isfinite(vals)) or np.any(vals < -1e-12):
                raise ValueError("custom q must be finite and nonnegative")
            if np.any(np.diff(vals) > 1e-12 * self.alpha):
                raise ValueError("custom q must be non-increasing in r")
            if abs(vals[0] - self.alpha) > _LIMIT_SLACK * self.alpha:
                raise ValueError("custom q must approach alpha as r -> 0")
            if vals[-1] > 1e-6 * self.alpha:
                raise ValueError("custom q must vanish as r -> infinity")

    # ------------------------------------------------------------- plumbing

    def _atom_index(self, s):
        if self.sigma is None:
            raise ValueError("direction lookup needs a bound spectral measure")
        s = np.atleast_1d(np.asarray(s, dtype=float))
        diffs = np.max(np.abs(self.sigma.directions - s[None, :]), axis=1)
        j = int(np.argmin(diffs))
        if diffs[j] > 1e-9:
            raise ValueError("direction is not an atom of the spectral measure")
        return j

    def _rate_of(self, s):
        if self._rates is None:
            return None
        if np.isscalar(self._rates):
            return self._rates
        if s is None:
            raise ValueError("per-atom rates require a direction or atom index")
        if isinstance(s, (int, np.integer)):
            return float(self._rates[int(s)])
        return float(self._rates[self._atom_index(s)])

    def _direction_of(self, s):
        # Resolve s to a concrete unit vector for custom callables.
        if s is None:
            raise ValueError("custom q needs a direction")
        if isinstance(s, (int, np.integer)):
            return self.sigma.directions[int(s)]
        return np.atleast_1d(np.asarray(s, dtype=float))

    def rates_for(self, sigma):
        """Per-atom rate array aligned with ``sigma``; None when rate-free."""
        if self._rates is None:
            return None
        if np.isscalar(self._rates):
            return np.full(len(sigma), self._rates)
        if self.sigma is not None and len(self.sigma) != len(sigma):
            raise ValueError("tempering rates do not match the spectral measure")
        return np.asarray(self._rates)

    # ------------------------------------------------------------ main laws

    def q(self, r, s=None):
        """Tempering function q(r, s); r may be an array."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr <= 0.0) or np.any(~np.isfinite(r_arr)):
            raise ValueError("r must be positive and finite")
        if self.family == NO_TEMPERING:
            out = np.full(r_arr.shape, self.alpha)
        elif self.family == CONDITIONALLY_EXPONENTIAL:
            lam = self._rate_of(s)
            out = (self.alpha + lam * r_arr) * np.exp(-lam * r_arr)
        elif self.family == EXPONENTIAL_Q:
            lam = self._rate_of(s)
            out = self.alpha * np.exp(-lam * r_arr)
        else:
            sv = self._direction_of(s)
            out = np.asarray([float(self._q_callable(float(ri), sv)) for ri in np.atleast_1d(r_arr)])
            out = out.reshape(r_arr.shape)
        return float(out) if out.ndim == 0 else out

    def pi(self, u, s=None):
        """Survival function pi(u, s) = P(T > u); u may be an array."""
        u_arr = np.asarray(u, dtype=float)
        if np.any(u_arr <= 0.0) or np.any(~np.isfinite(u_arr)):
            raise ValueError("u must be positive and finite")
        if self.family == CUSTOM_Q:
            sv = self._direction_of(s)
            out = np.asarray([self._pi_custom(float(ui), sv) for ui in np.atleast_1d(u_arr)])
            out = out.reshape(u_arr.shape)
        else:
            out = self._pi_rate(u_arr, self._rate_of(s))
        return float(out) if out.ndim == 0 else out

    def _pi_rate(self, u, lam):
        if self.family == NO_TEMPERING:
            return np.ones_like(u)
        if self.family == CONDITIONALLY_EXPONENTIAL:
            return np.exp(-lam * u)
        if self.family == EXPONENTIAL_Q:
            a = self.alpha
            x = lam * u
            val = a * np.exp(a * np.log(x)) * gammainc_upper(-a, x)
            return np.minimum(val, 1.0)
        raise AssertionError("rate-based pi called for custom family")

    def _pi_custom(self, u, sv):
        # pi(u) = (1/alpha) * int_0^1 q(u * z^(-1/alpha), s) dz; the power
        # substitution absorbs the r^(-alpha-1) weight exactly.
        a = self.alpha
        val = adaptive_quad(
            lambda z: float(self._q_callable(u * z ** (-1.0 / a), sv)),
            0.0, 1.0, self.quadrature,
        ) / a
        return min(max(val, 0.0), 1.0)

    def pi_derivative(self, u, s=None):
        """d pi / du.  Exponential survival differentiates in closed form;
        the other families use alpha*pi(u)/u - q(u)/u, which is exact."""
        u_arr = np.asarray(u, dtype=float)
        if np.any(u_arr <= 0.0) or np.any(~np.isfinite(u_arr)):
            raise ValueError("u must be positive and finite")
        if self.family == NO_TEMPERING:
            out = np.zeros_like(u_arr)
        elif self.family == CONDITIONALLY_EXPONENTIAL:
            lam = self._rate_of(s)
            out = -lam * np.exp(-lam * u_arr)
        else:
            out = (self.alpha * self.pi(u_arr, s) - self.q(u_arr, s)) / u_arr
        return float(out) if out.ndim == 0 else out

    # ------------------------------------------------------------- sampling

    def sample_T(self, rng, s=None):
        """One draw of the tempering variable T for direction s."""
        u = 1.0 - rng.random()  # in (0, 1]
        if self.family == NO_TEMPERING:
            return math.inf
        if self.family == CONDITIONALLY_EXPONENTIAL:
            return -math.log(u) / self._rate_of(s)
        if self.family == EXPONENTIAL_Q:
            return float(self._expq_inverse(np.asarray(u), self._rate_of(s)))
        sv = self._direction_of(s)
        return self._invert_survival_scalar(u, lambda t: self._pi_custom(float(t), sv))

    @staticmethod
    def _invert_survival_scalar(u, pi_fn):
        # Leftmost u with pi < target; bracket [1e-12, hi] by doubling, then
        # bisect to relative width 1e-10 so flat stretches resolve to their
        # left edge.
        lo = _ROOT_LO
        if float(pi_fn(lo)) < u:
            return lo
        hi = 1.0
        for _ in range(200):
            if float(pi_fn(hi)) < u:
                break
            hi *= 2.0
        else:
            raise ArithmeticError("survival function did not drop below the target")
        while hi - lo > _ROOT_REL_WIDTH * hi:
            mid = 0.5 * (lo + hi)
            if float(pi_fn(mid)) < u:
                hi = mid
            else:
                lo = mid
        return hi

    def _t_from_uniform(self, uprime, idx, sigma=None):
        """Vectorized T draws from uniforms in (0, 1] and atom indices."""
        uprime = np.asarray(uprime, dtype=float)
        if self.family == NO_TEMPERING:
            return np.full(uprime.shape, np.inf)
        if self.family == CUSTOM_Q:
            return self._t_from_table(uprime, idx, sigma)
        rates = self.rates_for(sigma) if sigma is not None else None
        if rates is None:
            lam = np.full(uprime.shape, self._rates) if np.isscalar(self._rates) else self._rates[idx]
        else:
            lam = rates[idx]
        if self.family == CONDITIONALLY_EXPONENTIAL:
            return -np.log(uprime) / lam
        return self._expq_inverse(uprime, lam)

    def _expq_inverse(self, u, lam):
        # pi depends on u only through lam*u here, so one unit-rate table in
        # z = lam*u serves every rate; draws are T = z(u') / lam.  Flat
        # stretches of pi (the clamp at 1) resolve to their left edge, same
        # as the bisection this replaces.
        piv, zv = self._expq_unit_table()
        return np.interp(u, piv, zv) / lam

    def _expq_unit_table(self):
        key = ("expq_unit",)
        if key not in self._tables:
            z_hi = 1.0
            while float(self._pi_rate(np.asarray(z_hi), 1.0)) > 1e-12:
                z_hi *= 2.0
            grid = np.geomspace(_ROOT_LO, z_hi, 2400)
            piv = np.minimum.accumulate(self._pi_rate(grid, 1.0))
            self._tables[key] = (piv[::-1], grid[::-1])
        return self._tables[key]

    def _t_from_table(self, uprime, idx, sigma):
        # Engine path for custom q: tabulate pi per atom once and invert by
        # monotone interpolation.  The scalar sampler keeps exact bisection.
        sig = sigma if sigma is not None else self.sigma
        out = np.empty_like(uprime)
        for j in np.unique(idx):
            table = self._survival_table(int(j), sig)
            mask = idx == j
            out[mask] = np.interp(uprime[mask], table[0], table[1])
        return out

    def _survival_table(self, j, sigma):
        key = (j, id(sigma))
        if key not in self._tables:
            sv = sigma.directions[j]
            u_hi = 1.0
            while self._pi_custom(u_hi, sv) > 1e-12 and u_hi < 1e18:
                u_hi *= 2.0
            grid = np.geomspace(_ROOT_LO, u_hi, 600)
            piv = np.asarray([self._pi_custom(float(g), sv) for g in grid])
            piv = np.minimum.accumulate(piv)  # enforce monotone despite quad noise
            order = np.argsort(piv)
            self._tables[key] = (piv[order], grid[order])
        return self._tables[key]

    # ----------------------------------------------------------- regularity

    def verify_regularity(self, beta):
        """Profile u^(1-beta) * (alpha - q(u, s)) on u in [1e-6, 1].

        The report flags ``bounded=False`` when the supremum sits in the
        smallest decade of the grid, i.e. the profile still grows as u -> 0.
        """
        if not 1.0 < self.alpha < 2.0:
            raise ValueError("regularity check applies to alpha in (1, 2)")
        if beta <= self.alpha:
            raise ValueError("beta must exceed alpha")
        grid = np.geomspace(1e-6, 1.0, 61)
        if self.sigma is not None:
            atoms = [(j, self.sigma.directions[j]) for j in range(len(self.sigma))]
        else:
            atoms = [(None, None)]
        rows = []
        for j, sv in atoms:
            s_arg = j if self.family != CUSTOM_Q else sv
            qs = self.q(grid, s_arg)
            rows.append(grid ** (1.0 - beta) * (self.alpha - qs))
        values = np.vstack(rows)
        sup = float(values.max())
        small = grid <= 1e-5
        sup_small = float(values[:, small].max())
        bounded = not (sup > 0.0 and sup_small >= sup * (1.0 - 1e-9))
        return RegularityReport(beta=float(beta), sup_value=sup, bounded=bounded,
                                grid=grid, values=values)
