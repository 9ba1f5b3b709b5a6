"""Reduced test functions and their pairings against the reduced kernel.

A rank-one test vector built from opposite Fourier modes reduces, in the
diagonal-averaged variable, to the single oscillation u(c) = e^{2inc};
the two-term variant adds the neighboring even mode and vanishes at
c = pi/4, the merge point of the stationary phase.  The Hermitian-form
value is |<u, k>|^2 with the pairing taken over one period of the reduced
kernel.  Sweeps over the spectral parameter t produce one row per grid
point with per-row convergence flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import KernelEvaluator, KernelParams, SpectralParameter
from .quadrature import (QuadratureSettings, _interval_arcs, _periodic_arcs,
                         _run_jobs)

_PI = math.pi

_VARIANTS = ("plain", "tilde")


@dataclass(frozen=True)
class TestVectorSpec:
    """Mode index and variant of a reduced test function.

    T is the target spectral height; n the even mode index tied to it by
    |T - 2n| <= 10, which choose_n guarantees with room to spare.
    """

    T: float
    n: int
    variant: str = "plain"

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("target height T must be >= 1")
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError("mode index n must be an even integer >= 2")
        if abs(self.T - 2 * self.n) > 10:
            raise ValueError("mode index too far from T/2: |T - 2n| > 10")
        if self.variant not in _VARIANTS:
            raise ValueError("variant must be 'plain' or 'tilde'")


@dataclass(frozen=True)
class SweepRow:
    t: float
    T: float
    n: int
    variant: str
    pairing: complex
    H: float
    converged: bool


def choose_n(T):
    """Even mode index nearest to T/2 (ties broken downward, minimum 2)."""
    if T < 1:
        raise ValueError("target height T must be >= 1")
    k = 2 * math.floor(T / 4)
    lo, hi = k, k + 2
    n = hi if (hi - T / 2) < (T / 2 - lo) else lo
    return max(2, n)


def reduced_test_function(spec):
    """The reduced one-variable test function u(c).

    plain: e^{2inc}; tilde: e^{2inc} (1 + e^{4ic}).  The tilde factor
    vanishes at c = pi/4.
    """
    n = spec.n
    if spec.variant == "plain":
        return lambda c: np.exp(2j * n * np.asarray(c, dtype=float))
    return lambda c: np.exp(2j * n * np.asarray(c, dtype=float)) \
        * (1.0 + np.exp(4j * np.asarray(c, dtype=float)))


def _pairing_result(spec, params, settings, evaluator=None):
    # (value, converged, evaluations); evaluator reuse lets a sweep share
    # kernel values between the plain and tilde rows at one t
    ev = evaluator if evaluator is not None else KernelEvaluator(params, settings)
    t = params.lam.t
    n = spec.n
    e0 = params.exponents[0]
    osc = 2 * (n + 2) + t  # covers both variants, keeping their panel
    # layouts identical so kernel values are shared
    inner0 = ev.unconverged

    if ev.symmetric:
        # tau = 0: the kernel is even about pi/2 and invariant under
        # c -> pi/2 - c, so the period integral folds onto (0, pi/4)
        # against pure cosines (mode indices are even)
        if spec.variant == "plain":
            def w(c):
                return np.cos(2.0 * n * c)
        else:
            def w(c):
                return np.cos(2.0 * n * c) + np.cos(2.0 * (n + 2) * c)

        def F(job, x, off, x0):
            return w(x) * ev.values(x)

        arcs = _interval_arcs(0.0, _PI / 4, [(0.0, e0)], settings.exclusion_radius)
        res = _run_jobs(F, [arcs], [osc], [settings.tol / 4.0], [settings.budget])[0]
        value = 4.0 * res.value
    else:
        u = reduced_test_function(spec)

        def F(job, x, off, x0):
            return u(x) * ev.values(x)

        arcs = _periodic_arcs([(0.0, e0), (_PI / 2, e0)], settings.exclusion_radius)
        res = _run_jobs(F, [arcs], [osc], [settings.tol], [settings.budget])[0]
        value = res.value

    converged = res.converged and ev.unconverged == inner0
    return value, converged, res.evaluations + ev.evaluations


def pairing(spec, params, settings=None):
    """Pairing <u, k> of the reduced test function with the reduced kernel.

    Integrates u(c) k(c) over one period with singular points {0, pi/2, pi}
    trimmed at the configured exclusion radius, oscillation bound 2n + t.
    Kernel values are produced on demand by a batched evaluator.
    """
    settings = settings if settings is not None else QuadratureSettings()
    value, _, _ = _pairing_result(spec, params, settings)
    return value


def hermitian_form(spec, params, settings=None):
    """Squared modulus |<u, k>|^2 of the pairing (our normalization)."""
    return abs(pairing(spec, params, settings)) ** 2


def sweep_hermitian(spec, t_grid, base_params, settings=None):
    """One SweepRow per grid point, rows independent and deterministic.

    base_params supplies the pair parameter tau; the spectral parameter is
    replaced by each grid value in turn.  Unconverged quadrature flags the
    row instead of aborting the sweep.
    """
    settings = settings if settings is not None else QuadratureSettings()
    grid = [float(t) for t in t_grid]
    if any(t < 1 for t in grid) or any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("t grid must be ascending with all points >= 1")
    rows = []
    for t in grid:
        params = KernelParams(SpectralParameter(1j * t), base_params.tau)
        value, conv, _ = _pairing_result(spec, params, settings)
        rows.append(SweepRow(t, spec.T, spec.n, spec.variant,
                             value, abs(value) ** 2, conv))
    return rows


def sweep_both(T, t_grid, base_params, settings=None):
    """Plain and tilde sweeps sharing one kernel evaluator per grid point.

    Returns (plain_rows, tilde_rows).  Same rows as two sweep_hermitian
    calls, at roughly the cost of one.
    """
    settings = settings if settings is not None else QuadratureSettings()
    n = choose_n(T)
    out = {v: [] for v in _VARIANTS}
    for t in t_grid:
        t = float(t)
        params = KernelParams(SpectralParameter(1j * t), base_params.tau)
        ev = KernelEvaluator(params, settings)
        for variant in _VARIANTS:
            spec = TestVectorSpec(T, n, variant)
            value, conv, _ = _pairing_result(spec, params, settings, evaluator=ev)
            out[variant].append(SweepRow(t, T, n, variant,
                                         value, abs(value) ** 2, conv))
    return out["plain"], out["tilde"]


def default_t_grid(T, extended=False, step=0.2, span=3.0, ratio=1.05,
                   lo_mult=0.25, hi_mult=4.0):
    """Spectral grid resolving the peak at t = T.

    Uniform steps of (step) T^(1/3) across T +- (span) T^(1/3) (anchored
    so t = T is a grid point), geometric with the given ratio over the
    rest of [lo_mult T, hi_mult T], plus the range edges and whichever
    of the anchors T/2, 3T/2, 2T, 3T fall inside the range.  With
    extended=True a coarser geometric tail (ratio 1.3) continues down to
    t = 1 so that dyadic block checks have full coverage.
    """
    if T < 8:
        raise ValueError("grid design assumes T >= 8")
    w = T ** (1.0 / 3.0)
    m = int(round(span / step))
    fine = T + step * w * np.arange(-m, m + 1)
    pts = [fine]
    lo_edge, hi_edge = lo_mult * T, hi_mult * T
    x = fine[0] / ratio
    while x > lo_edge:
        pts.append([x])
        x /= ratio
    x = fine[-1] * ratio
    while x < hi_edge:
        pts.append([x])
        x *= ratio
    anchors = [f * T for f in (lo_mult, 0.5, 1.5, 2.0, 3.0, hi_mult)
               if lo_edge <= f * T <= hi_edge]
    pts.append(anchors)
    if extended:
        tail = []
        x = lo_edge / 1.3
        while x > 1.0:
            tail.append(x)
            x /= 1.3
        tail.append(1.0)
        pts.append(tail)
    grid = np.sort(np.concatenate([np.asarray(p, dtype=float) for p in pts]))
    keep = np.concatenate([[True], np.diff(grid) > 1e-9 * T])
    return grid[keep]
