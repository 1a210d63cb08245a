import numpy as np
import pytest
import scipy.signal
from hypothesis import given
from hypothesis import strategies as st

from fdlpderev.dsp import (LpModel, Signal, all_pole_envelope, analytic_envelope, autocorr,
                           dct_ii, idct_ii, levinson_durbin)
from fdlpderev.errors import InvalidArgumentError, NumericalDegeneracyError
from fdlpderev.verify import dense_lp_solve, direct_all_pole, random_autocorr

seeds = st.integers(0, 2 ** 31 - 1)


def dct_by_definition(x):
    n = x.size
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    scale = np.full(n, np.sqrt(2.0 / n))
    scale[0] = np.sqrt(1.0 / n)
    return scale * (np.cos(np.pi * k * (2 * m + 1) / (2 * n)) @ x)


# DCT ---------------------------------------------------------------------

def test_dct_impulse_matches_definition():
    x = np.array([1.0, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(dct_ii(x), dct_by_definition(x), atol=1e-15)
    # first coefficient 1/2, the rest sqrt(1/2) cos(pi k / 8)
    assert dct_ii(x)[0] == pytest.approx(0.5)
    assert dct_ii(x)[1] == pytest.approx(np.sqrt(0.5) * np.cos(np.pi / 8))


@given(seeds, st.integers(1, 64))
def test_dct_matches_definition_random(seed, n):
    x = np.random.default_rng(seed).standard_normal(n)
    np.testing.assert_allclose(dct_ii(x), dct_by_definition(x), atol=1e-12)


def test_dct_constant_is_dc_only():
    c, n = 0.7, 50
    out = dct_ii(np.full(n, c))
    assert out[0] == pytest.approx(c * np.sqrt(n))
    np.testing.assert_allclose(out[1:], 0.0, atol=1e-14)
    np.testing.assert_allclose(idct_ii(out), c, rtol=1e-14)


def test_idct_of_zeros_is_zero():
    assert not np.any(idct_ii(np.zeros(17)))


def test_dct_roundtrip_length_64(rng):
    x = rng.standard_normal(64)
    assert np.max(np.abs(idct_ii(dct_ii(x)) - x)) < 1e-9


@given(seeds, st.integers(16, 4096))
def test_dct_roundtrip_and_parseval(seed, n):
    x = np.random.default_rng(seed).standard_normal(n)
    c = dct_ii(x)
    assert np.max(np.abs(idct_ii(c) - x)) < 1e-9 * np.max(np.abs(x))
    assert abs(np.linalg.norm(c) - np.linalg.norm(x)) / np.linalg.norm(x) < 1e-10


def test_dct_rejects_empty():
    with pytest.raises(InvalidArgumentError):
        dct_ii([])


# analytic envelope -------------------------------------------------------

def test_tone_envelope_is_amplitude_squared():
    fs, a = 16000, 0.6
    t = np.arange(fs) / fs
    env = analytic_envelope(a * np.cos(2 * np.pi * 1000 * t + 0.3))
    interior = env[fs // 10: -fs // 10]
    assert np.max(np.abs(interior / a ** 2 - 1)) < 0.01


def test_am_tone_envelope_is_modulator_squared():
    fs = 16000
    t = np.arange(2 * fs) / fs
    m = 1.0 + 0.5 * np.sin(2 * np.pi * 3 * t)
    env = analytic_envelope(m * np.cos(2 * np.pi * 1500 * t))
    sl = slice(t.size // 10, t.size - t.size // 10)
    err = np.linalg.norm(env[sl] - m[sl] ** 2) / np.linalg.norm(m[sl] ** 2)
    assert err < 0.02


def test_zero_signal_has_zero_envelope():
    assert not np.any(analytic_envelope(np.zeros(31)))


# autocorrelation ---------------------------------------------------------

def test_autocorr_of_ones():
    np.testing.assert_allclose(autocorr([1.0, 1.0, 1.0, 1.0], 1), [1.0, 0.75])


def test_autocorr_orthogonal_shifts():
    # x[n] x[n+k] sums to zero for k = 1, 2
    r = autocorr([3.0, 0.0, 0.0, -2.0], 2)
    assert r[0] == pytest.approx(13 / 4)
    np.testing.assert_array_equal(r[1:], 0.0)


@given(seeds, st.integers(1, 200))
def test_autocorr_lag_zero_is_mean_square(seed, n):
    x = np.random.default_rng(seed).standard_normal(n)
    assert autocorr(x, 0)[0] == pytest.approx(np.mean(x ** 2), rel=1e-12)


def test_autocorr_rejects_lag_beyond_length():
    with pytest.raises(InvalidArgumentError):
        autocorr([1.0, 2.0], 2)


# Levinson-Durbin ---------------------------------------------------------

def test_white_process():
    model = levinson_durbin(np.array([1.0, 0.0, 0.0, 0.0]))
    np.testing.assert_array_equal(model.coeffs, [1.0, 0.0, 0.0, 0.0])
    assert model.gain == 1.0


def test_recovers_known_ar2():
    a = np.array([1.0, -0.5, 0.25])
    # autocorrelation of the unit-variance-driven process from its impulse response
    h = scipy.signal.lfilter([1.0], a, np.r_[1.0, np.zeros(400)])
    r = np.array([h[:h.size - k] @ h[k:] for k in range(3)])
    model = levinson_durbin(r)
    np.testing.assert_allclose(model.coeffs, a, atol=1e-6)
    assert model.gain == pytest.approx(1.0, abs=1e-6)


@given(seeds, st.integers(1, 32))
def test_matches_dense_solve(seed, order):
    r = random_autocorr(order, np.random.default_rng(seed))
    got = levinson_durbin(r).coeffs
    ref = dense_lp_solve(r)
    assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) < 1e-8


@given(seeds, st.integers(1, 16))
def test_minimum_phase(seed, order):
    r = random_autocorr(order, np.random.default_rng(seed))
    roots = np.roots(levinson_durbin(r).coeffs)
    assert np.all(np.abs(roots) < 1.0)


@given(seeds, st.integers(1, 24))
def test_prediction_error_power(seed, order):
    r = random_autocorr(order, np.random.default_rng(seed))
    model = levinson_durbin(r)
    # a . r[0..p] equals the final prediction error for the normal equations
    assert model.coeffs @ r == pytest.approx(model.gain ** 2, rel=1e-9)


def test_singular_autocorrelation_reports_order():
    # reflection coefficient -1 at order 2: r is only positive semidefinite
    r = np.array([1.0, 0.5, 1.0])
    with pytest.raises(NumericalDegeneracyError) as info:
        levinson_durbin(r)
    assert info.value.order == 2


def test_nonpositive_r0_rejected():
    with pytest.raises(InvalidArgumentError):
        levinson_durbin([0.0, 0.0])


# all-pole envelope -------------------------------------------------------

def test_trivial_model_is_flat():
    np.testing.assert_array_equal(all_pole_envelope(LpModel(np.array([1.0]), 1.0), 10), 1.0)


def test_ar1_closed_form():
    model = LpModel(np.array([1.0, -0.9]), 0.5)
    env = all_pole_envelope(model, 400)
    assert env[0] == pytest.approx(0.25 / 0.1 ** 2, rel=1e-12)
    w = np.pi * np.arange(400) / 400
    np.testing.assert_allclose(env, 0.25 / (1.81 - 1.8 * np.cos(w)), rtol=1e-12)
    assert np.all(np.diff(env) < 0)


def test_long_model_folds_correctly(rng):
    # more coefficients than grid points exercises the folding path
    a = np.r_[1.0, 0.05 * rng.standard_normal(40)]
    model = LpModel(a, 1.3)
    np.testing.assert_allclose(all_pole_envelope(model, 8), direct_all_pole(model, 8), rtol=1e-10)


@given(seeds, st.integers(1, 64), st.integers(1, 900))
def test_matches_direct_evaluation(seed, order, points):
    model = levinson_durbin(random_autocorr(order, np.random.default_rng(seed)))
    got = all_pole_envelope(model, points)
    ref = direct_all_pole(model, points)
    assert np.max(np.abs(got - ref) / ref) < 1e-10
    assert np.all(np.isfinite(got)) and np.all(got > 0)


def test_lp_model_validation():
    with pytest.raises(InvalidArgumentError):
        LpModel(np.array([2.0, 0.1]), 1.0)
    with pytest.raises(InvalidArgumentError):
        LpModel(np.array([1.0]), 0.0)


def test_signal_validation():
    with pytest.raises(InvalidArgumentError):
        Signal(np.array([0.0, np.nan]), 16000)
    with pytest.raises(InvalidArgumentError):
        Signal(np.zeros(3), 0)
    assert Signal(np.zeros(8000), 16000).duration == 0.5
