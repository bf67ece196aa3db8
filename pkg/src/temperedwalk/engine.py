"""Triangular-array walk engine.

Row n of the array consists of n i.i.d. tempered jumps: a raw heavy-tailed
jump H = R*s keeps its direction s while its radius is truncated to
min(R, v*T), where T is the tempering variable conditioned on s and v is the
row's tempering threshold.  The engine forms normalized row sums

    (1/v) * sum_{j<=n} Y_j  -  a_n

for one of three centerings (none, truncated mean, jump mean) and, in paths
mode, the partial-sum process (1/v) * S(floor(n*t)) - t*a_n on a time grid.

Randomness is counter-based: replicate i of a run with seed s consumes one
block of uniforms from a Philox stream keyed by (s, i), so results are
byte-identical regardless of how replicates are distributed over workers.
Auxiliary consumers (Monte Carlo centering, diagnostics) use stream indices
at 2^63 and above, out of reach of any realistic replicate count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .jumps import JumpModel
from .numerics import DEFAULT_QUADRATURE, adaptive_quad
from .tempering import CUSTOM_Q, TemperingSpec

__all__ = [
    "WalkPlan",
    "SampleBatch",
    "TruncatedMeanResult",
    "CENTER_NONE",
    "CENTER_TRUNCATED_MEAN",
    "CENTER_JUMP_MEAN",
    "tempering_threshold",
    "sample_tempered_jump",
    "centering_truncated_mean",
    "centering_vector",
    "simulate_rowsum",
    "simulate_paths",
]

CENTER_NONE = "none"
CENTER_TRUNCATED_MEAN = "truncated_mean"
CENTER_JUMP_MEAN = "jump_mean"

_CENTERINGS = (CENTER_NONE, CENTER_TRUNCATED_MEAN, CENTER_JUMP_MEAN)

# First stream index reserved for non-replicate randomness.
_AUX_STREAM = 2 ** 63


def _generator(seed, stream):
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class WalkPlan:
    """One row-sum experiment: row length, replication, centering, seed."""

    n: int
    replicates: int
    seed: int
    centering: str = CENTER_NONE
    v_override: float = None
    time_grid: tuple = None

    def __post_init__(self):
        if self.n < 1 or self.replicates < 1:
            raise ValueError("n and replicates must be positive")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        if self.centering not in _CENTERINGS:
            raise ValueError(f"unknown centering {self.centering!r}")
        if self.v_override is not None and not self.v_override > 0.0:
            raise ValueError("v_override must be positive")
        if self.time_grid is not None:
            grid = tuple(float(t) for t in self.time_grid)
            if len(grid) == 0:
                raise ValueError("time_grid must be non-empty")
            if any(t < 0.0 for t in grid) or any(
                b <= a for a, b in zip(grid, grid[1:])
            ):
                raise ValueError("time_grid must be non-negative and strictly increasing")
            object.__setattr__(self, "time_grid", grid)


@dataclass
class SampleBatch:
    """Replicate values plus the metadata needed to reproduce them."""

    values: np.ndarray
    n: int
    threshold: float
    center: np.ndarray  # the a_n vector; paths subtract t * center
    centering: str
    seed: int
    t: float = 1.0
    elapsed_seconds: float = 0.0

    @property
    def replicates(self):
        return self.values.shape[0]

    @property
    def dimension(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class TruncatedMeanResult:
    value: np.ndarray
    std_error: float
    method: str


def tempering_threshold(model: JumpModel, n, v_override=None):
    """Threshold v_n = b_n / mass^(1/alpha), or the explicit override."""
    if v_override is not None:
        return float(v_override)
    mass = model.sigma.total_mass()
    return model.norming_b(n) / mass ** (1.0 / model.alpha)


def sample_tempered_jump(model: JumpModel, spec: TemperingSpec, v, rng):
    """One tempered jump s * min(R, v*T); the direction is never altered."""
    if not v > 0.0:
        raise ValueError("threshold v must be positive")
    idx = model.sigma.sample_index(rng)
    r = float(model._radius_from_uniform(rng.random()))
    s_arg = idx if spec.family != CUSTOM_Q else model.sigma.directions[idx]
    t = spec.sample_T(rng, s_arg)
    return model.sigma.directions[idx] * min(r, v * t)


# --------------------------------------------------------------- centering


def centering_truncated_mean(model, spec, n, v, method=None, mc_draws=10 ** 6,
                             seed=0, quadrature=DEFAULT_QUADRATURE):
    """Truncated-mean centering a_n = n * E[X 1(||X|| < 1)], X = Y/v.

    With Z = min(R/v, T) and S_R the radius survival function,

        E[Z 1(Z <= 1)] = integral_0^1 S_R(v*u) pi(u, s) du - S_R(v) pi(1, s),

    so the quadrature method needs one finite integral per atom.  Families
    whose pi is itself a quadrature (custom q) default to Monte Carlo over
    fresh tempered jumps on an auxiliary stream.
    """
    if method is None:
        method = "monte_carlo" if spec.family == CUSTOM_Q else "quadrature"
    sigma = model.sigma
    mass = sigma.total_mass()
    if method == "quadrature":
        breaks = sorted(float(c) / v for c in model._scales)
        total = np.zeros(sigma.dimension)
        for j in range(len(sigma)):
            s_arg = j if spec.family != CUSTOM_Q else sigma.directions[j]
            integral = adaptive_quad(
                lambda u: model.radius_survival(v * u) * spec.pi(u, s_arg),
                0.0, 1.0, quadrature, points=breaks,
            )
            term = integral - model.radius_survival(v) * spec.pi(1.0, s_arg)
            total += sigma.weights[j] * term * sigma.directions[j]
        return TruncatedMeanResult(n * total / mass, 0.0, "quadrature")
    if method != "monte_carlo":
        raise ValueError("method must be 'quadrature' or 'monte_carlo'")

    gen = _generator(seed, _AUX_STREAM + 1)
    d = sigma.dimension
    acc = np.zeros(d)
    acc_sq = np.zeros(d)
    left = int(mc_draws)
    while left > 0:
        m = min(left, 1_000_000)
        u = gen.random((3, m))
        idx = sigma._index_from_uniform(u[0])
        r = model._radius_from_uniform(u[1])
        t = spec._t_from_uniform(1.0 - u[2], idx, sigma)
        z = np.minimum(r / v, t)
        z = np.where(z < 1.0, z, 0.0)
        comp = sigma.directions[idx] * z[:, None]
        acc += comp.sum(axis=0)
        acc_sq += (comp * comp).sum(axis=0)
        left -= m
    mean = acc / mc_draws
    var = acc_sq / mc_draws - mean * mean
    se = float(n * np.sqrt(var.max() / mc_draws))
    return TruncatedMeanResult(n * mean, se, "monte_carlo")


def centering_vector(plan: WalkPlan, model, spec, v):
    """The a_n vector for the plan's centering mode."""
    d = model.sigma.dimension
    if plan.centering == CENTER_NONE:
        return np.zeros(d)
    if plan.centering == CENTER_JUMP_MEAN:
        return plan.n * model.mean_jump() / v
    return centering_truncated_mean(model, spec, plan.n, v, seed=plan.seed).value


# --------------------------------------------------------------- simulation


def _tempered_radii(model, spec, v, n_jumps, seed, rep):
    """Atom indices and tempered radii for one replicate's jump block."""
    gen = _generator(seed, rep)
    u = gen.random((3, n_jumps))
    sigma = model.sigma
    idx = sigma._index_from_uniform(u[0])
    r = model._radius_from_uniform(u[1])
    t = spec._t_from_uniform(1.0 - u[2], idx, sigma)
    return idx, np.minimum(r, v * t)


def _atom_sums(idx, rad, k):
    return np.bincount(idx, weights=rad, minlength=k)


def _run_replicates(worker, replicates, threads):
    if threads <= 1:
        for rep in range(replicates):
            worker(rep)
        return
    chunks = np.array_split(np.arange(replicates), threads)
    def run(block):
        for rep in block:
            worker(int(rep))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(run, chunks))


def _validate(plan, model, spec):
    if plan.centering == CENTER_JUMP_MEAN and model.alpha <= 1.0:
        raise ValueError("mean does not exist for alpha <= 1")
    if abs(model.alpha - spec.alpha) > 1e-12:
        raise ValueError("jump model and tempering disagree on alpha")


def simulate_rowsum(plan: WalkPlan, model: JumpModel, spec: TemperingSpec, threads=1):
    """Normalized, centered row sums; one row of output per replicate."""
    _validate(plan, model, spec)
    started = time.perf_counter()
    v = tempering_threshold(model, plan.n, plan.v_override)
    center = centering_vector(plan, model, spec, v)
    sigma = model.sigma
    k, d = len(sigma), sigma.dimension
    out = np.empty((plan.replicates, d))

    def worker(rep):
        idx, rad = _tempered_radii(model, spec, v, plan.n, plan.seed, rep)
        out[rep] = _atom_sums(idx, rad, k) @ sigma.directions / v - center

    _run_replicates(worker, plan.replicates, threads)
    return SampleBatch(
        values=out, n=plan.n, threshold=v, center=center,
        centering=plan.centering, seed=plan.seed,
        elapsed_seconds=time.perf_counter() - started,
    )


def simulate_paths(plan: WalkPlan, model: JumpModel, spec: TemperingSpec, threads=1):
    """Partial-sum paths on the plan's time grid, one SampleBatch per time.

    Values at successive grid times within a replicate share one jump
    stream, so each row is a genuine path skeleton.  At t = 1 the output
    coincides with simulate_rowsum under the same seed.
    """
    if plan.time_grid is None:
        raise ValueError("paths mode needs a time grid")
    _validate(plan, model, spec)
    started = time.perf_counter()
    v = tempering_threshold(model, plan.n, plan.v_override)
    center = centering_vector(plan, model, spec, v)
    sigma = model.sigma
    k, d = len(sigma), sigma.dimension
    cuts = [int(math.floor(plan.n * t)) for t in plan.time_grid]
    n_jumps = max(max(cuts), 1)
    out = np.empty((plan.replicates, len(cuts), d))

    def worker(rep):
        idx, rad = _tempered_radii(model, spec, v, n_jumps, plan.seed, rep)
        for ci, c in enumerate(cuts):
            if c == 0:
                out[rep, ci] = -plan.time_grid[ci] * center
            else:
                sums = _atom_sums(idx[:c], rad[:c], k)
                out[rep, ci] = sums @ sigma.directions / v - plan.time_grid[ci] * center

    _run_replicates(worker, plan.replicates, threads)
    elapsed = time.perf_counter() - started
    return [
        SampleBatch(
            values=out[:, ci].copy(), n=plan.n, threshold=v, center=center,
            centering=plan.centering, seed=plan.seed, t=plan.time_grid[ci],
            elapsed_seconds=elapsed,
        )
        for ci in range(len(cuts))
    ]
