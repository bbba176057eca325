import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockfade.errors import DomainError
from blockfade.specfun import (
    Tolerance,
    binary_entropy_nats,
    digamma,
    log_gamma,
    log_reg_inc_gamma,
    log_reg_inc_gamma_array,
    q_func,
    q_inv,
    reg_inc_gamma,
)

from .oracles import (
    EULER_GAMMA,
    bisect,
    digamma_harmonic,
    q_func_series,
    reg_inc_gamma_integer,
)


@pytest.mark.parametrize("x, expected", [
    (5.0, math.log(24.0)),
    (1.0, 0.0),
    (0.5, 0.5 * math.log(math.pi)),
])
def test_log_gamma_known_values(x, expected):
    assert log_gamma(x) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_log_gamma_matches_stdlib_over_range():
    xs = np.concatenate([np.linspace(0.5, 20, 400), np.logspace(1, 6, 400)])
    for x in xs:
        ref = math.lgamma(x)
        # log Gamma vanishes at 1 and 2, where only absolute accuracy is meaningful
        assert abs(log_gamma(x) - ref) <= 1e-12 * max(abs(ref), 1.0)


@pytest.mark.parametrize("bad", [0.0, -1.0, -0.5])
def test_log_gamma_domain(bad):
    with pytest.raises(DomainError):
        log_gamma(bad)


@pytest.mark.parametrize("x, expected", [
    (1.0, -EULER_GAMMA),
    (2.0, 1.0 - EULER_GAMMA),
    (10.0, digamma_harmonic(10)),
])
def test_digamma_known_values(x, expected):
    assert digamma(x) == pytest.approx(expected, rel=1e-10)
    if x == 10.0:
        assert digamma(x) == pytest.approx(2.2517526, abs=1e-7)


@pytest.mark.parametrize("n", [3, 7, 49, 199])
def test_digamma_integer_harmonic(n):
    assert digamma(n) == pytest.approx(digamma_harmonic(n), rel=1e-10)


@given(st.floats(0.01, 1e4))
def test_digamma_recurrence(x):
    assert digamma(x + 1) - digamma(x) == pytest.approx(1.0 / x, rel=1e-10, abs=1e-10)


def test_digamma_domain():
    with pytest.raises(DomainError):
        digamma(0.0)


def test_reg_inc_gamma_examples():
    assert reg_inc_gamma(1, 0.5) == pytest.approx(1 - math.exp(-0.5), abs=1e-12)
    assert reg_inc_gamma(2, 2) == pytest.approx(1 - 3 * math.exp(-2), abs=1e-12)
    assert reg_inc_gamma(2, 2) == pytest.approx(0.5939942, abs=1e-7)
    for n in (1, 2, 5, 49):
        assert reg_inc_gamma(n, 0.0) == 0.0


@given(st.integers(1, 200), st.floats(0.0, 600.0))
@settings(max_examples=300)
def test_reg_inc_gamma_integer_closed_form(n, x):
    assert reg_inc_gamma(n, x) == pytest.approx(reg_inc_gamma_integer(n, x), abs=1e-10)


def test_reg_inc_gamma_monotone_and_bounded():
    rng = np.random.default_rng(11)
    shapes = rng.uniform(0.1, 300, 10_000)
    xs = rng.uniform(0, 800, 10_000)
    for a in np.unique(np.round(shapes[:50], 3)):
        # each sampled shape gets a sorted batch of the sampled arguments
        vals = np.exp(log_reg_inc_gamma_array(a, np.sort(xs[:200])))
        assert np.all(np.diff(vals) >= -1e-15)
    vals = np.array([reg_inc_gamma(a, x) for a, x in zip(shapes, xs)])
    assert np.all((vals >= 0) & (vals <= 1))


def test_reg_inc_gamma_against_scipy():
    scipy_special = pytest.importorskip("scipy.special")
    rng = np.random.default_rng(3)
    for a, x in zip(rng.uniform(0.2, 250, 500), rng.uniform(0, 500, 500)):
        assert reg_inc_gamma(a, x) == pytest.approx(scipy_special.gammainc(a, x), abs=1e-12)


def test_log_reg_inc_gamma_small_argument_stays_finite():
    # P(49, 1e-3) ~ 1e-210 is fine; P(199, 1e-3) underflows but its log does not
    val = log_reg_inc_gamma(199, 1e-3)
    expected = 199 * math.log(1e-3) - 1e-3 - math.lgamma(200) + math.log1p(1e-3 / 200)
    assert math.isfinite(val)
    assert val == pytest.approx(expected, rel=1e-12)


def test_reg_inc_gamma_domain():
    with pytest.raises(DomainError):
        reg_inc_gamma(0.0, 1.0)
    with pytest.raises(DomainError):
        reg_inc_gamma(1.0, -1.0)
    with pytest.raises(DomainError):
        Tolerance(rel_tol=0)


def test_q_func_values():
    assert q_func(0.0) == 0.5
    tail = q_func(40.0)
    assert 0.0 <= tail < 1e-300
    assert q_func(1.96) == pytest.approx(q_func_series(1.96), abs=1e-14)
    assert q_func(1.96) == pytest.approx(0.0249979, abs=1e-7)
    for x in np.linspace(-5, 5, 41):
        assert q_func(x) == pytest.approx(q_func_series(x), abs=1e-14)


def test_q_inv_values():
    assert q_inv(0.5) == 0.0
    oracle = bisect(lambda x: q_func(x) - 1e-3, 0.0, 10.0)
    assert q_inv(1e-3) == pytest.approx(oracle, abs=1e-9)
    assert q_inv(1e-3) == pytest.approx(3.0902323, abs=1e-7)
    assert q_inv(q_func(2.5)) == pytest.approx(2.5, abs=1e-9)


@pytest.mark.parametrize("p", [1e-300, 1e-12, 1e-6, 0.3, 0.7, 1 - 1e-9])
def test_q_inv_tails(p):
    x = q_inv(p)
    assert q_func(x) == pytest.approx(p, rel=1e-9)


@given(st.floats(-6.0, 6.0))
def test_q_inv_round_trip(x):
    assert q_inv(q_func(x)) == pytest.approx(x, abs=1e-8)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_q_inv_domain(bad):
    with pytest.raises(DomainError):
        q_inv(bad)


def test_binary_entropy_values():
    assert binary_entropy_nats(0.5) == pytest.approx(math.log(2), abs=1e-15)
    assert binary_entropy_nats(0.0) == 0.0
    assert binary_entropy_nats(1.0) == 0.0
    p = 1e-3
    direct = -p * math.log(p) - (1 - p) * math.log(1 - p)
    assert binary_entropy_nats(p) == pytest.approx(direct, rel=1e-12)
    assert binary_entropy_nats(p) == pytest.approx(0.0079073, abs=1e-7)


def test_binary_entropy_concave_on_grid():
    grid = np.linspace(0, 1, 201)
    for p in grid:
        for q in grid[::7]:
            mid = binary_entropy_nats((p + q) / 2)
            assert mid >= (binary_entropy_nats(p) + binary_entropy_nats(q)) / 2 - 1e-15
