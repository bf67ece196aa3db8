import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from temperedwalk import SpectralMeasure, TemperingSpec

ONE = SpectralMeasure([[1.0]], [1.0])
TWO = SpectralMeasure([[1.0], [-1.0]], [0.7, 0.3])

# pi for the alpha-prefactor exponential family equals
# alpha*(lam*u)^alpha * Gamma(-alpha, lam*u) capped at 1; references
# precomputed with mpmath at 40 digits.
EXPQ_PI_CASES = [
    (1.5, 1.0, 1.0, 0.18973172938988163),
    (1.5, 1.0, 0.2, 0.65836063104759351),
    (0.7, 2.0, 1.0, 0.02829302166005113),
    (1.2, 0.5, 3.0, 0.083037228146700984),
]


def _rng(seed=0, stream=0):
    return np.random.Generator(
        np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def _families():
    yield TemperingSpec.no_tempering(1.2)
    yield TemperingSpec.conditionally_exponential(0.7, 1.0, ONE)
    yield TemperingSpec.conditionally_exponential(1.5, 1.0, ONE)
    yield TemperingSpec.exponential_q(1.5, 2.0, ONE)
    yield TemperingSpec.custom_q(0.7, lambda r, s: 0.7 * math.exp(-r), ONE)


# ------------------------------------------------------------------ q and pi


def test_q_limits():
    for spec in _families():
        s = None if spec.sigma is None else spec.sigma.directions[0]
        assert spec.q(1e-10, s) == pytest.approx(spec.alpha, rel=1e-6)
        if spec.family != "no_tempering":  # q stays flat at alpha there
            assert spec.q(1e9, s) <= 1e-6 * spec.alpha


def test_pi_bounds_and_monotonicity():
    grid = np.geomspace(1e-8, 1e3, 120)
    for spec in _families():
        s = None if spec.sigma is None else spec.sigma.directions[0]
        vals = np.array([spec.pi(float(u), s) for u in grid])
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
        assert np.all(np.diff(vals) <= 1e-12)
        assert abs(vals[0] - 1.0) <= 1e-5  # pi(0+) = 1


def test_survival_identity_on_log_grid():
    """alpha*pi(r) - r*pi'(r) must reproduce q(r) for every family."""
    grid = np.geomspace(1e-3, 1e2, 40)
    for spec in _families():
        s = None if spec.sigma is None else spec.sigma.directions[0]
        for r in grid:
            r = float(r)
            lhs = spec.alpha * spec.pi(r, s) - r * spec.pi_derivative(r, s)
            assert abs(lhs - spec.q(r, s)) <= 1e-6 * spec.alpha


@pytest.mark.parametrize("alpha,lam,u,want", EXPQ_PI_CASES)
def test_exponential_q_pi_reference(alpha, lam, u, want):
    spec = TemperingSpec.exponential_q(alpha, lam, ONE)
    assert spec.pi(u, 0) == pytest.approx(want, rel=1e-12)


def test_conditionally_exponential_closed_forms():
    spec = TemperingSpec.conditionally_exponential(1.5, 2.0, ONE)
    for u in (0.01, 0.5, 3.0):
        assert spec.pi(u, 0) == pytest.approx(math.exp(-2.0 * u), rel=1e-14)
        assert spec.q(u, 0) == pytest.approx((1.5 + 2.0 * u) * math.exp(-2.0 * u), rel=1e-14)
        assert spec.pi_derivative(u, 0) == pytest.approx(-2.0 * math.exp(-2.0 * u), rel=1e-14)


def test_custom_q_pi_matches_builtin():
    # same q as the exponential_q family, supplied as a callable
    custom = TemperingSpec.custom_q(0.7, lambda r, s: 0.7 * math.exp(-2.0 * r), ONE)
    built = TemperingSpec.exponential_q(0.7, 2.0, ONE)
    for u in np.geomspace(1e-3, 20.0, 17):
        assert custom.pi(float(u), ONE.directions[0]) == pytest.approx(
            built.pi(float(u), 0), abs=1e-8)


def test_pi_derivative_against_finite_differences():
    """Richardson-extrapolated central differences of pi, 20 log points."""
    specs = [
        TemperingSpec.conditionally_exponential(0.7, 2.0, ONE),
        TemperingSpec.exponential_q(1.5, 1.0, ONE),
    ]
    for spec in specs:
        for u in np.geomspace(1e-2, 10.0, 20):
            u = float(u)
            h = 1e-4 * u

            def diff(hh):
                return (spec.pi(u + hh, 0) - spec.pi(u - hh, 0)) / (2.0 * hh)

            richardson = (4.0 * diff(h / 2.0) - diff(h)) / 3.0
            got = spec.pi_derivative(u, 0)
            assert got == pytest.approx(richardson, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(0.05, 1.95).filter(lambda a: abs(a - 1.0) > 1e-3),
    lam=st.floats(0.1, 10.0),
    u=st.floats(1e-3, 1e2),
)
def test_survival_identity_property(alpha, lam, u):
    spec = TemperingSpec.conditionally_exponential(alpha, lam, ONE)
    lhs = alpha * spec.pi(u, 0) - u * spec.pi_derivative(u, 0)
    assert abs(lhs - spec.q(u, 0)) <= 1e-9 * alpha


# ------------------------------------------------------------------ sampling


def test_no_tempering_sampler_returns_sentinel():
    spec = TemperingSpec.no_tempering(1.2)
    assert spec.sample_T(_rng()) == np.inf


def test_conditionally_exponential_sampler_ks():
    spec = TemperingSpec.conditionally_exponential(0.7, 1.0, ONE)
    rng = _rng(11)
    u = 1.0 - rng.random(100000)
    t = np.sort(spec._t_from_uniform(u, np.zeros(len(u), dtype=np.int64), ONE))
    cdf = 1.0 - np.exp(-t)
    i = np.arange(1, len(t) + 1)
    ks = max(np.max(np.abs(cdf - i / len(t))), np.max(np.abs(cdf - (i - 1) / len(t))))
    assert ks <= 0.01


def test_exponential_q_sampler_ks():
    spec = TemperingSpec.exponential_q(1.5, 1.0, ONE)
    rng = _rng(12)
    u = 1.0 - rng.random(100000)
    t = np.sort(spec._t_from_uniform(u, np.zeros(len(u), dtype=np.int64), ONE))
    cdf = 1.0 - np.array([spec.pi(float(x), 0) for x in t[:: len(t) // 2000]])
    i = np.arange(0, len(t), len(t) // 2000) + 1.0
    ks = np.max(np.abs(cdf - i / len(t)))
    assert ks <= 0.01


def test_scalar_sampler_agrees_with_vectorized():
    # both consume one uniform per draw, so feed them the same stream
    for spec in (TemperingSpec.conditionally_exponential(0.7, 2.0, ONE),
                 TemperingSpec.exponential_q(1.5, 1.0, ONE)):
        us = _rng(13).random(40)
        scal = []
        rng = _rng(13)
        for _ in range(40):
            scal.append(spec.sample_T(rng, ONE.directions[0]))
        vec = spec._t_from_uniform(1.0 - us, np.zeros(40, dtype=np.int64), ONE)
        assert np.allclose(scal, vec, rtol=1e-8)


def test_custom_q_sampler_ks():
    spec = TemperingSpec.custom_q(0.7, lambda r, s: 0.7 * math.exp(-r), ONE)
    built = TemperingSpec.exponential_q(0.7, 1.0, ONE)
    rng = _rng(14)
    u = 1.0 - rng.random(20000)
    t = np.sort(spec._t_from_uniform(u, np.zeros(len(u), dtype=np.int64), ONE))
    sub = t[:: len(t) // 1000]
    cdf = 1.0 - np.array([built.pi(float(x), 0) for x in sub])
    i = np.arange(0, len(t), len(t) // 1000) + 1.0
    ks = np.max(np.abs(cdf - i / len(t)))
    assert ks <= 0.02


def test_per_atom_rates():
    spec = TemperingSpec.conditionally_exponential(0.7, [1.0, 4.0], TWO)
    assert spec.pi(1.0, TWO.directions[0]) == pytest.approx(math.exp(-1.0))
    assert spec.pi(1.0, TWO.directions[1]) == pytest.approx(math.exp(-4.0))
    # heavier tempering gives stochastically smaller T for shared uniforms
    u = _rng(15).random(500)
    t0 = spec._t_from_uniform(1.0 - u, np.zeros(500, dtype=np.int64), TWO)
    t1 = spec._t_from_uniform(1.0 - u, np.ones(500, dtype=np.int64), TWO)
    assert np.all(t1 <= t0 + 1e-12)


# ---------------------------------------------------------------- validation


def test_validation_rejections():
    with pytest.raises(ValueError):
        TemperingSpec.no_tempering(2.0)
    with pytest.raises(ValueError):
        TemperingSpec.no_tempering(0.0)
    with pytest.raises(ValueError):
        TemperingSpec.conditionally_exponential(1.5, -1.0, ONE)
    with pytest.raises(ValueError):
        TemperingSpec.conditionally_exponential(1.5, [1.0, 2.0], ONE)  # wrong count
    with pytest.raises(ValueError):
        TemperingSpec.custom_q(0.7, lambda r, s: 5.0 * math.exp(-r), ONE)  # q(0+) != alpha
    with pytest.raises(ValueError):
        TemperingSpec.custom_q(0.7, lambda r, s: 0.7 / (1.0 + r * 0), ONE)  # no decay
    with pytest.raises(ValueError):
        # rises away from zero, not admissible for user-supplied q
        TemperingSpec.custom_q(0.7, lambda r, s: (0.7 + r) * math.exp(-r), ONE)
    with pytest.raises(ValueError):
        TemperingSpec.custom_q(0.7, "not callable", ONE)


def test_regularity_reports():
    bounded = TemperingSpec.conditionally_exponential(1.5, 1.0, ONE).verify_regularity(1.9)
    assert bounded.bounded
    assert bounded.sup_value > 0.0

    flat = TemperingSpec.no_tempering(1.2).verify_regularity(1.5)
    assert flat.bounded and flat.sup_value == 0.0

    # alpha - q ~ u^0.2 near zero, so u^{1-beta} * (alpha - q) blows up
    spiky = TemperingSpec.custom_q(
        1.5, lambda r, s: 1.5 * max(0.0, 1.0 - r ** 0.2), ONE)
    report = spiky.verify_regularity(1.9)
    assert not report.bounded

    with pytest.raises(ValueError):
        TemperingSpec.conditionally_exponential(0.7, 1.0, ONE).verify_regularity(0.9)
    with pytest.raises(ValueError):
        TemperingSpec.conditionally_exponential(1.5, 1.0, ONE).verify_regularity(1.2)
