"""Mode selection, reduced test functions, pairings and sweeps."""

import math

import numpy as np
import pytest

from trilab.kernel import KernelParams, SpectralParameter
from trilab.quadrature import QuadratureSettings
from trilab.testvectors import (
    SweepRow,
    TestVectorSpec,
    choose_n,
    default_t_grid,
    hermitian_form,
    pairing,
    reduced_test_function,
    sweep_both,
    sweep_hermitian,
)

TIGHT = QuadratureSettings(tol=1e-11)


def principal(t):
    return KernelParams(SpectralParameter(1j * t), 0.0)


# ---------------------------------------------------------------------------
# mode selection and spec validation


def test_choose_n_values():
    assert choose_n(100.0) == 50
    assert choose_n(7.0) == 4
    assert choose_n(6.0) == 2  # tie between 2 and 4 breaks downward
    assert choose_n(1.0) == 2


def test_choose_n_properties():
    rng = np.random.default_rng(83)
    for T in rng.uniform(4.0, 5000.0, size=200):
        n = choose_n(T)
        assert n >= 2 and n % 2 == 0
        assert abs(T - 2 * n) <= 2.0 + 1e-12


def test_choose_n_rejects_small_T():
    with pytest.raises(ValueError):
        choose_n(0.5)


def test_spec_validation():
    TestVectorSpec(100.0, 50, "plain")
    with pytest.raises(ValueError):
        TestVectorSpec(0.5, 2)
    with pytest.raises(ValueError):
        TestVectorSpec(100.0, 49)
    with pytest.raises(ValueError):
        TestVectorSpec(100.0, 0)
    with pytest.raises(ValueError):
        TestVectorSpec(100.0, 62)  # |T - 2n| = 24
    with pytest.raises(ValueError):
        TestVectorSpec(100.0, 50, "fancy")


# ---------------------------------------------------------------------------
# reduced test functions


def test_plain_function_is_unimodular():
    u = reduced_test_function(TestVectorSpec(40.0, 20, "plain"))
    c = np.linspace(0.0, math.pi, 101)
    assert np.allclose(np.abs(u(c)), 1.0, atol=1e-14)
    assert u(0.0) == pytest.approx(1.0)


def test_tilde_function_vanishes_at_merge_point():
    u = reduced_test_function(TestVectorSpec(40.0, 20, "tilde"))
    assert abs(u(math.pi / 4)) <= 1e-15
    c = np.linspace(0.01, math.pi, 97)
    assert np.allclose(np.abs(u(c)), 2.0 * np.abs(np.cos(2 * c)), atol=1e-13)


# ---------------------------------------------------------------------------
# pairings


def test_pairing_frozen_moderate():
    # high-precision reference value
    v = pairing(TestVectorSpec(50.0, 24), principal(50.0), TIGHT)
    ref = -2.0326718700101224e-02 - 2.2464635854717814e-02j
    assert abs(v - ref) <= 1e-10


def test_pairing_frozen_merge_point():
    # high-precision reference value at t = 2n
    v = pairing(TestVectorSpec(200.0, 100), principal(200.0), TIGHT)
    ref = 1.1355548099641068e-02 - 7.5329571611341076e-03j
    assert abs(v - ref) <= 1e-10


def test_pairing_decays_past_merge():
    settings = QuadratureSettings(tol=1e-9)
    at_merge = abs(pairing(TestVectorSpec(200.0, 100), principal(200.0),
                           settings))
    beyond = abs(pairing(TestVectorSpec(200.0, 100), principal(300.0),
                         settings))
    assert beyond <= 0.1 * at_merge


def test_tilde_pairing_is_sum_of_plain_pairings():
    # <u_n (1 + e^{4ic}), k> = <u_n, k> + <u_{n+2}, k>
    settings = QuadratureSettings(tol=1e-9)
    params = principal(97.0)
    a = pairing(TestVectorSpec(100.0, 50, "tilde"), params, settings)
    b = pairing(TestVectorSpec(100.0, 50, "plain"), params, settings)
    c = pairing(TestVectorSpec(104.0, 52, "plain"), params, settings)
    assert abs(a - (b + c)) <= 5e-9


def test_hermitian_form_is_squared_modulus():
    settings = QuadratureSettings(tol=1e-9)
    spec = TestVectorSpec(50.0, 24)
    params = principal(50.0)
    assert hermitian_form(spec, params, settings) == pytest.approx(
        abs(pairing(spec, params, settings)) ** 2, rel=1e-9)


# ---------------------------------------------------------------------------
# sweeps


def test_sweep_single_point_matches_direct_call():
    settings = QuadratureSettings(tol=1e-8)
    spec = TestVectorSpec(50.0, 24)
    (row,) = sweep_hermitian(spec, [50.0], principal(50.0), settings)
    assert isinstance(row, SweepRow)
    assert row.t == 50.0 and row.T == 50.0 and row.n == 24
    assert row.variant == "plain"
    assert row.converged
    assert row.H == pytest.approx(abs(row.pairing) ** 2, rel=1e-12)
    assert abs(row.pairing - pairing(spec, principal(50.0),
                                     settings)) <= 1e-10


def test_sweep_grid_validation():
    spec = TestVectorSpec(50.0, 24)
    with pytest.raises(ValueError):
        sweep_hermitian(spec, [60.0, 50.0], principal(50.0))
    with pytest.raises(ValueError):
        sweep_hermitian(spec, [0.5, 50.0], principal(50.0))


def test_sweep_both_matches_separate_sweeps():
    # the shared-evaluator fast path must reproduce the independent sweeps
    settings = QuadratureSettings(tol=1e-7)
    grid = [40.0, 52.0, 101.0]
    plain, tilde = sweep_both(50.0, grid, principal(50.0), settings)
    n = choose_n(50.0)
    ref_p = sweep_hermitian(TestVectorSpec(50.0, n, "plain"), grid,
                            principal(50.0), settings)
    ref_t = sweep_hermitian(TestVectorSpec(50.0, n, "tilde"), grid,
                            principal(50.0), settings)
    for got, ref in zip(plain + tilde, ref_p + ref_t):
        assert got.t == ref.t and got.variant == ref.variant
        assert got.converged and ref.converged
        assert abs(got.pairing - ref.pairing) <= 1e-10


def test_sweep_both_row_layout():
    settings = QuadratureSettings(tol=1e-6)
    plain, tilde = sweep_both(40.0, [30.0, 45.0], principal(40.0), settings)
    assert [r.t for r in plain] == [30.0, 45.0]
    assert [r.t for r in tilde] == [30.0, 45.0]
    assert all(r.variant == "plain" and r.n == 20 for r in plain)
    assert all(r.variant == "tilde" and r.n == 20 for r in tilde)
    assert all(r.H >= 0.0 for r in plain + tilde)


# ---------------------------------------------------------------------------
# grid design


def test_default_grid_contains_peak_and_anchors():
    T = 200.0
    grid = default_t_grid(T)
    assert np.any(grid == T)
    for anchor in (0.25 * T, 0.5 * T, 1.5 * T, 2.0 * T, 3.0 * T, 4.0 * T):
        assert np.min(np.abs(grid - anchor)) <= 1e-9 * T
    assert grid[0] >= 0.25 * T - 1e-9
    assert grid[-1] <= 4.0 * T + 1e-9


def test_default_grid_is_sorted_unique():
    grid = default_t_grid(400.0)
    assert np.all(np.diff(grid) > 0)
    fine = grid[np.abs(grid - 400.0) <= 3.0 * 400.0 ** (1 / 3) + 1e-9]
    spacing = np.diff(fine)
    assert spacing.max() <= 0.2 * 400.0 ** (1 / 3) + 1e-9


def test_default_grid_extended_reaches_unit_height():
    grid = default_t_grid(200.0, extended=True, ratio=1.1, hi_mult=4.0)
    assert grid[0] == 1.0
    # every dyadic block [2^k, 2^(k+1)] inside [1, 4T] holds a point
    edges = 2.0 ** np.arange(0, 10)
    for lo, hi in zip(edges[:-1], edges[1:]):
        assert np.any((grid >= lo) & (grid <= hi))


def test_default_grid_rejects_tiny_T():
    with pytest.raises(ValueError):
        default_t_grid(4.0)
