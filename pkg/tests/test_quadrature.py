"""Engine-level checks: exactness, singular reference moments, properties."""

import math

import numpy as np
import pytest

from trilab.quadrature import (QuadratureSettings, SingularityHint, gamma_real,
                               integrate_interval, integrate_periodic,
                               reference_sine_moment)

# closed form sqrt(pi) Gamma(1/4) / Gamma(3/4), high-precision reference
_INV_SQRT_SINE = 5.2441151085842201


def test_fourier_mode_vanishes():
    res = integrate_periodic(lambda x: np.exp(6j * x), osc_scale=6.0)
    assert res.converged
    assert abs(res.value) <= 1e-10


def test_noninteger_frequency_closed_form():
    M = 200.5
    res = integrate_periodic(lambda x: np.exp(1j * M * x), osc_scale=M)
    exact = (np.exp(1j * M * math.pi) - 1.0) / (1j * M)
    assert res.converged
    assert abs(res.value - exact) <= 1e-8


def test_inverse_sqrt_sine_reference():
    hints = [SingularityHint(0.0, -0.5)]
    res = integrate_periodic(lambda x: np.abs(np.sin(x)) ** -0.5, hints)
    assert res.converged
    assert abs(res.value - _INV_SQRT_SINE) <= 1e-8
    assert abs(reference_sine_moment(-0.5) - _INV_SQRT_SINE) <= 1e-12


def test_gamma_real_values():
    assert gamma_real(1.0) == 1.0
    assert abs(gamma_real(0.5) - math.sqrt(math.pi)) <= 1e-12
    assert gamma_real(6.0) == 120.0
    with pytest.raises(ValueError):
        gamma_real(0.0)
    with pytest.raises(ValueError):
        gamma_real(-2.5)


def test_gamma_real_accuracy():
    # spot checks against the Legendre duplication identity
    rng = np.random.default_rng(11)
    for x in rng.uniform(0.1, 24.9, 40):
        dup = gamma_real(2 * x)
        rebuilt = (gamma_real(x) * gamma_real(x + 0.5)
                   * 2.0 ** (2 * x - 1) / math.sqrt(math.pi))
        assert abs(rebuilt / dup - 1.0) <= 1e-12


def test_reference_sine_moment_values():
    assert abs(reference_sine_moment(0.0) - math.pi) <= 1e-15
    assert abs(reference_sine_moment(1.0) - 2.0) <= 1e-15
    with pytest.raises(ValueError):
        reference_sine_moment(-1.0)


@pytest.mark.parametrize("a", [-0.9, -0.5, -0.1, 0.0, 0.5, 1.0])
def test_sine_moments_match_reference(a):
    hints = [SingularityHint(0.0, a)] if a < 0 else []
    res = integrate_periodic(lambda x: np.abs(np.sin(x)) ** a, hints)
    assert res.converged
    assert abs(res.value - reference_sine_moment(a)) <= 1e-7


def test_rejects_nonintegrable_hint():
    with pytest.raises(ValueError):
        integrate_periodic(lambda x: np.abs(np.sin(x)) ** -1.2,
                           [SingularityHint(0.0, -1.2)])


def test_budget_exhaustion_flags_not_raises():
    res = integrate_periodic(lambda x: np.exp(400j * x), osc_scale=400.0,
                             budget=700)
    assert not res.converged
    assert res.error_estimate > 1e-9


def test_linearity_on_random_trig_polynomials():
    rng = np.random.default_rng(23)
    for _ in range(10):
        cf = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        cg = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        al, be = rng.standard_normal(2)

        def f(x, c=cf):
            return sum(ck * np.exp(2j * k * x) for k, ck in enumerate(c))

        def g(x, c=cg):
            return sum(ck * np.exp(2j * k * x) for k, ck in enumerate(c))

        combo = integrate_periodic(lambda x: al * f(x) + be * g(x),
                                   osc_scale=6.0)
        split = (al * integrate_periodic(f, osc_scale=6.0).value
                 + be * integrate_periodic(g, osc_scale=6.0).value)
        assert abs(combo.value - split) <= 2e-9


def test_shift_invariance():
    rng = np.random.default_rng(31)
    cf = rng.standard_normal(5) + 1j * rng.standard_normal(5)

    def f(x):
        return sum(ck * np.exp(2j * k * x) for k, ck in enumerate(cf))

    base = integrate_periodic(f, osc_scale=8.0).value
    for s0 in rng.uniform(0.0, math.pi, 6):
        shifted = integrate_periodic(lambda x: f(x + s0), osc_scale=8.0).value
        assert abs(shifted - base) <= 2e-9


def test_tightening_tol_never_hurts():
    # golden-set integrands with known values; halving tol from 1e-6 on
    # down must never increase the achieved error
    cases = [
        (lambda x: np.abs(np.sin(x)) ** -0.5, [SingularityHint(0.0, -0.5)],
         0.0, reference_sine_moment(-0.5)),
        (lambda x: np.exp(10j * x), [], 10.0, 0.0),
        (lambda x: np.abs(np.sin(x)) ** -0.9, [SingularityHint(0.0, -0.9)],
         0.0, reference_sine_moment(-0.9)),
    ]
    for f, hints, osc, exact in cases:
        errs = []
        tol = 1e-6
        while tol >= 1e-12:
            res = integrate_periodic(f, hints, osc_scale=osc, tol=tol)
            errs.append(abs(res.value - exact))
            tol /= 2.0
        # tiny float jitter around machine precision is not a regression
        for worse, better in zip(errs[:-1], errs[1:]):
            assert better <= worse + 1e-13


def test_oscillatory_singular_product():
    # |sin|^(-1/2) carrying a genuine high frequency: compare against a
    # dense evaluation of the same panels at much tighter tolerance
    f = lambda x: np.abs(np.sin(x)) ** -0.5 * np.exp(47j * x)
    hints = [SingularityHint(0.0, -0.5)]
    res = integrate_periodic(f, hints, osc_scale=47.0)
    ref = integrate_periodic(f, hints, osc_scale=47.0, tol=1e-13)
    assert res.converged
    assert abs(res.value - ref.value) <= 1e-8


def test_interval_square_root_endpoint():
    res = integrate_interval(lambda x: np.abs(x) ** -0.5, 0.0, 1.0,
                             [SingularityHint(0.0, -0.5)])
    assert res.converged
    assert abs(res.value - 2.0) <= 1e-10


def test_interval_interior_singularity():
    # int_0^2 |x-1|^(-1/2) dx = 4
    res = integrate_interval(lambda x: np.abs(x - 1.0) ** -0.5, 0.0, 2.0,
                             [SingularityHint(1.0, -0.5)])
    assert res.converged
    assert abs(res.value - 4.0) <= 1e-10


def test_interval_gaussian_phase():
    # stationary point inside (-2, 2): int exp(i t c^2 / 2) dc tends to
    # sqrt(2 pi / t) e^(i pi / 4); at t = 200 the boundary terms sit at
    # the percent level
    t = 200.0
    res = integrate_interval(lambda c: np.exp(0.5j * t * c * c), -2.0, 2.0,
                             osc_scale=2.0 * t)
    lead = math.sqrt(2 * math.pi / t) * np.exp(0.25j * math.pi)
    assert res.converged
    assert abs(res.value - lead) <= 0.05 * abs(lead)


def test_interval_hint_outside_rejected():
    with pytest.raises(ValueError):
        integrate_interval(lambda x: x, 0.0, 1.0, [SingularityHint(2.0, -0.5)])


def test_complex_exponent_log_oscillation():
    # |x|^(e) with e = -1/2 + 25i on [0, 1]: exact antiderivative
    # x^(e+1)/(e+1); checks that the imaginary exponent part is honored
    e = -0.5 + 25.0j
    res = integrate_interval(
        lambda x: np.exp(e * np.log(np.abs(x))), 0.0, 1.0,
        [SingularityHint(0.0, e)])
    exact = 1.0 / (e + 1.0)
    assert res.converged
    assert abs(res.value - exact) <= 1e-9


def test_exclusion_radius_trims_domain():
    # excluding [0, r) u (pi - r, pi) from |sin|^(-1/2) removes about
    # 2 * 2 sqrt(r) of mass near the edges
    r = 1e-4
    full = integrate_periodic(lambda x: np.abs(np.sin(x)) ** -0.5,
                              [SingularityHint(0.0, -0.5)])
    trimmed = integrate_periodic(lambda x: np.abs(np.sin(x)) ** -0.5,
                                 [SingularityHint(0.0, -0.5)],
                                 exclusion_radius=r)
    lost = full.value - trimmed.value
    assert 0.0 < lost.real < 6.0 * math.sqrt(r)
    assert abs(lost - 4.0 * math.sqrt(r)) <= 0.1 * 4.0 * math.sqrt(r)


def test_settings_defaults():
    st = QuadratureSettings()
    assert st.tol == 1e-9
    assert st.budget == 500_000
    assert st.exclusion_radius == 1e-4
