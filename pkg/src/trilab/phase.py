"""Stationary-phase analysis of the mode-against-main-term pairing.

Pairing a single Fourier mode e^{2inc} against the closed-form main term
of the reduced kernel gives an oscillatory integral over (0, pi/2) whose
phase is 2nc - (t/2) ln|tan c|.  This module isolates that
amplitude/phase decomposition, locates the stationary points of the
phase, evaluates the standard leading-order contributions (Gaussian at a
simple stationary point, Airy cubic model at a merged pair), and combines
them into a prediction for the pairing value.

The phase has stationary points where sin 2c = t/2n: two simple roots
for t < 2n merging at pi/4 as t -> 2n and none beyond, so the prediction
switches between a two-point sum, an Airy peak, the Airy tail, and zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import main_term_coefficient

_PI = math.pi

# Maclaurin window and domain of the Airy evaluator; outside the window the
# large-argument expansions are already at full float accuracy, inside it
# the two power series are.  (A symmetric window of half-width 8 loses
# absolute accuracy on the positive side to cancellation in float64.)
_AIRY_SERIES_LO = -7.5
_AIRY_SERIES_HI = 5.0
_AIRY_DOMAIN = 20.0

_AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_AIP0 = 3.0 ** (-1.0 / 3.0) / math.gamma(1.0 / 3.0)


@dataclass(frozen=True)
class PhaseDecomposition:
    """Amplitude/phase split of the pairing integrand on (0, pi/2).

    amplitude and phase are vectorized callables; phase_d1 .. phase_d3 are
    the closed-form derivatives of the phase; large_param is the frequency
    scale t that multiplies the logarithmic half of the phase.
    """

    amplitude: callable
    phase: callable
    phase_d1: callable
    phase_d2: callable
    phase_d3: callable
    large_param: float


@dataclass(frozen=True)
class CriticalPoint:
    location: float
    phase_d2_value: float
    phase_d3_value: float
    kind: str  # nondegenerate | degenerate | near_degenerate


def outer_phase_decomposition(params, n):
    """Amplitude and phase of the pairing of mode e^{2inc} with the main term.

    Parameters
    ----------
    params : KernelParams
        Principal-series parameters with t >= 1.
    n : int
        Even mode index, n >= 2.

    Returns
    -------
    PhaseDecomposition
        amplitude A(c) = alpha(lam) |sin c cos c|^(-1/2) and phase
        Phi(c) = 2nc - (t/2) ln|tan c| with closed-form derivatives.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError("mode index n must be an even integer >= 2")
    if not params.lam.is_principal:
        raise ValueError("decomposition requires a principal-series lam")
    t = params.lam.t
    if t < 1.0:
        raise ValueError("decomposition requires t >= 1")
    a0 = main_term_coefficient(params.lam)

    def amplitude(c):
        c = np.asarray(c, dtype=float)
        return a0 * np.exp(-0.5 * np.log(np.abs(np.sin(c) * np.cos(c))))

    def phase(c):
        c = np.asarray(c, dtype=float)
        return 2.0 * n * c - 0.5 * t * np.log(np.abs(np.tan(c)))

    def phase_d1(c):
        return 2.0 * n - t / np.sin(2.0 * np.asarray(c, dtype=float))

    def phase_d2(c):
        s = np.sin(2.0 * np.asarray(c, dtype=float))
        return 2.0 * t * np.cos(2.0 * np.asarray(c, dtype=float)) / (s * s)

    def phase_d3(c):
        c = np.asarray(c, dtype=float)
        s = np.sin(2.0 * c)
        return -4.0 * t * (1.0 + np.cos(2.0 * c) ** 2) / s**3

    return PhaseDecomposition(amplitude, phase, phase_d1, phase_d2, phase_d3, t)


def _classify(dec, c):
    t = dec.large_param
    d2 = float(dec.phase_d2(c))
    d3 = float(dec.phase_d3(c))
    # the merged-pair (Airy) window is the t^(-1/3) unfolding scale around
    # pi/4, equivalently |Phi''| up to 4 t^(2/3)
    if abs(d2) <= 1e-9 * t:
        kind = "degenerate"
    elif abs(c - _PI / 4) <= t ** (-1.0 / 3.0):
        kind = "near_degenerate"
    else:
        kind = "nondegenerate"
    return CriticalPoint(c, d2, d3, kind)


def find_critical_points(dec, interval=None, tol=1e-12):
    """All stationary points of the phase inside the interval.

    Sign changes of the derivative are located on a uniform scan of
    max(4t, 1000) points densified geometrically around pi/4 (where the
    derivative flattens as the two roots merge), bracketed by bisection
    and polished until |Phi'| <= tol * t.  Returns an empty list when the
    phase is monotone.
    """
    t = dec.large_param
    if interval is None:
        interval = (1e-4, _PI / 2 - 1e-4)
    a, b = interval
    if not (0.0 < a < b < _PI / 2):
        raise ValueError("interval must lie strictly inside (0, pi/2)")
    npts = max(int(math.ceil(4 * t)), 1000)
    grid = np.linspace(a, b, npts)
    spacing = (b - a) / (npts - 1)
    if a < _PI / 4 < b:
        local = _PI / 4 + spacing * 2.0 ** -np.arange(0, 40, dtype=float)
        localm = _PI / 4 - spacing * 2.0 ** -np.arange(0, 40, dtype=float)
        grid = np.unique(np.concatenate([grid, [_PI / 4], local, localm]))
        grid = grid[(grid >= a) & (grid <= b)]
    fp = np.asarray(dec.phase_d1(grid), dtype=float)

    roots = []
    sign = np.sign(fp)
    flips = np.nonzero((sign[:-1] * sign[1:]) < 0)[0]
    for i in flips:
        lo, hi = float(grid[i]), float(grid[i + 1])
        flo = float(fp[i])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = float(dec.phase_d1(mid))
            if abs(fm) <= tol * t or hi - lo < 1e-16:
                break
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))

    # tangential touch: the derivative peaks at pi/4 without changing sign
    if not roots and a < _PI / 4 < b \
            and abs(float(dec.phase_d1(_PI / 4))) <= 1e-12 * t:
        roots.append(_PI / 4)

    roots.sort()
    merged = []
    for r in roots:
        if merged and abs(r - merged[-1]) < 1e-9:
            continue
        merged.append(r)
    return [_classify(dec, r) for r in merged]


def stationary_point_contribution(dec, cp):
    """Leading term of the integral near one simple stationary point.

    A(c*) sqrt(2 pi / |Phi''|) e^{i (Phi(c*) + sign(Phi'') pi/4)};
    rejects merged or nearly merged points, where the Gaussian model has
    no validity.
    """
    if cp.kind != "nondegenerate":
        raise ValueError("stationary-point model needs a nondegenerate point")
    d2 = cp.phase_d2_value
    amp = complex(dec.amplitude(cp.location))
    ph = float(dec.phase(cp.location))
    return amp * math.sqrt(2.0 * _PI / abs(d2)) \
        * np.exp(1j * (ph + math.copysign(_PI / 4, d2)))


def airy_peak_contribution(dec, cp, detuning):
    """Cubic-model (Airy) value of the integral near a merged pair.

    2 pi A(c*) (2/|Phi'''|)^(1/3) Ai(xi) e^{i Phi(c*)} with
    xi = -detuning (2/|Phi'''|)^(1/3), so xi > 0 on the side with no real
    stationary points.  detuning is Phi' at the merge point.
    """
    if cp.kind not in ("degenerate", "near_degenerate"):
        raise ValueError("Airy model needs a degenerate or nearly merged point")
    d3 = cp.phase_d3_value
    if abs(d3) <= 1e-9 * (1.0 + dec.large_param):
        raise ValueError("third derivative too small for the cubic model")
    w = (2.0 / abs(d3)) ** (1.0 / 3.0)
    xi = -float(detuning) * w
    amp = complex(dec.amplitude(cp.location))
    ph = float(dec.phase(cp.location))
    return 2.0 * _PI * amp * w * airy_ai(xi) * np.exp(1j * ph)


def _airy_series(x):
    # Ai = Ai(0) f(x) - |Ai'(0)| g(x), the two Maclaurin series
    tf = 1.0
    tg = x
    f = tf
    g = tg
    x3 = x * x * x
    for k in range(1, 60):
        tf *= x3 / ((3 * k) * (3 * k - 1))
        tg *= x3 / ((3 * k + 1) * (3 * k))
        f += tf
        g += tg
        if abs(tf) + abs(tg) < 1e-22:
            break
    return _AI0 * f - _AIP0 * g


def _airy_asym_pos(x):
    zeta = (2.0 / 3.0) * x ** 1.5
    s = 1.0
    u = 1.0
    term = 1.0
    for k in range(1, 30):
        u *= (6 * k - 5) * (6 * k - 1) / (72.0 * k)
        nxt = (-1) ** k * u / zeta**k
        if abs(nxt) > abs(term):
            break
        term = nxt
        s += nxt
    return math.exp(-zeta) * s / (2.0 * math.sqrt(_PI) * x**0.25)


def _airy_asym_neg(x):
    z = -x
    zeta = (2.0 / 3.0) * z ** 1.5
    even = 1.0
    odd = 0.0
    u = 1.0
    prev = 1.0
    for k in range(1, 30):
        u *= (6 * k - 5) * (6 * k - 1) / (72.0 * k)
        term = u / zeta**k
        if term > prev:
            break
        prev = term
        half = k // 2
        contrib = (-1) ** half * term
        if k % 2 == 0:
            even += contrib
        else:
            odd += contrib
    ang = zeta + _PI / 4
    return (math.sin(ang) * even - math.cos(ang) * odd) \
        / (math.sqrt(_PI) * z**0.25)


def airy_ai(x):
    """Airy function Ai on [-20, 20].

    Maclaurin series on the central window, large-argument expansions
    outside; absolute error below 1e-10 across the domain.
    """
    x = float(x)
    if abs(x) > _AIRY_DOMAIN:
        raise ValueError("argument outside the calibrated Airy domain")
    if _AIRY_SERIES_LO <= x <= _AIRY_SERIES_HI:
        return _airy_series(x)
    return _airy_asym_pos(x) if x > 0 else _airy_asym_neg(x)


def classify_regime(dec, interval=None, tol=1e-12):
    """Which asymptotic regime governs the pairing for this decomposition.

    One of "stationary_sum" (two separated points), "airy_peak" (merged or
    nearly merged pair), "airy_tail" (no real points, small detuning) or
    "superdecay" (no real points, large detuning).
    """
    pts = find_critical_points(dec, interval, tol)
    if any(p.kind != "nondegenerate" for p in pts):
        return "airy_peak"
    if pts:
        return "stationary_sum"
    t = dec.large_param
    w = (2.0 / (4.0 * t)) ** (1.0 / 3.0)
    xi = -float(dec.phase_d1(_PI / 4)) * w
    return "airy_tail" if xi <= 8.0 else "superdecay"


def predict_pairing(dec, tol=1e-12):
    """Leading-order prediction of the mode-against-main-term pairing.

    Sums the stationary-point contributions when the phase has separated
    simple stationary points; switches to the Airy cubic model once they
    merge within the t^(-1/3) unfolding scale (evaluated at pi/4 with the
    detuning Phi'(pi/4)), keeps the decaying Airy tail just beyond the
    merge, and returns 0 in the strongly detuned regime.  classify_regime
    reports which branch was taken.
    """
    regime = classify_regime(dec, tol=tol)
    if regime == "superdecay":
        return 0j
    if regime == "stationary_sum":
        pts = find_critical_points(dec, tol=tol)
        return complex(sum(stationary_point_contribution(dec, p) for p in pts))
    cp = _classify(dec, _PI / 4)
    if cp.kind == "nondegenerate":
        # airy_tail regime: no real stationary points, model still at pi/4
        cp = CriticalPoint(cp.location, cp.phase_d2_value,
                           cp.phase_d3_value, "near_degenerate")
    return complex(airy_peak_contribution(dec, cp, float(dec.phase_d1(_PI / 4))))
