"""Adaptive quadrature for pi-periodic singular oscillatory integrands.

The integrands of interest combine algebraic endpoint singularities
|x - x0|^e with complex e (Re e in (-1, 0]) and high-frequency oscillation
on the rest of the domain.  Plain panel bisection cannot terminate at a
singular endpoint, and the imaginary part of e produces log-scale
oscillation that no fixed substitution resolves, so panels touching or
near a singular point are integrated against the weight |x - x0|^e
exactly: the smooth cofactor is expanded in shifted Legendre polynomials
and paired with precomputed weighted moments.  Away from singular points
ordinary Gauss-Legendre panels of order 16 are used, sized to at least
8 nodes per period of the declared oscillation scale and refined by
bisection until the coefficient-tail error estimate meets the tolerance.

Integrands must accept numpy arrays of abscissae and evaluate pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_ORDER = 16
_SAFETY = 4.0
_MAX_ROUNDS = 64
_TAG_DROP = 0.05  # untag once the weight factor varies by <= this across a panel
_PI = math.pi


def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


_Y, _W = _gauss01(_ORDER)


def _legendre_table(y, nmax):
    # rows: shifted Legendre P~_n(y) for n < nmax
    z = 2.0 * y - 1.0
    P = np.empty((nmax, y.size))
    P[0] = 1.0
    if nmax > 1:
        P[1] = z
    for n in range(1, nmax - 1):
        P[n + 1] = ((2 * n + 1) * z * P[n] - n * P[n - 1]) / (n + 1)
    return P


_LEG = _legendre_table(_Y, _ORDER)
# g = _PROJ @ G recovers shifted-Legendre coefficients of a degree-15 fit
_PROJ = (2.0 * np.arange(_ORDER) + 1.0)[:, None] * _W[None, :] * _LEG

_gauss_rules: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_moment_cache: dict[tuple[float, float, int], np.ndarray] = {}


def _touching_moments(e):
    # c_n(e, 0) = int_0^1 y^e P~_n(y) dy = prod_{j<n}(e-j) / prod_{1<=j<=n+1}(e+j)
    out = np.empty(_ORDER, dtype=complex)
    num = 1.0 + 0.0j
    den = e + 1.0
    out[0] = num / den
    for n in range(1, _ORDER):
        num *= e - (n - 1)
        den *= e + (n + 1)
        out[n] = num / den
    return out


def _shifted_moments(e, sigma):
    # c_n(e, sigma) = int_0^1 (sigma+y)^e P~_n(y) dy by Gauss-Legendre with
    # the node count tied to the log-phase swing |Im e| ln(1 + 1/sigma).
    swing = abs(e.imag) * math.log1p(1.0 / sigma)
    n = 8 * math.ceil((0.55 * swing + 40.0) / 8)
    rule = _gauss_rules.get(n)
    if rule is None:
        rule = _gauss01(n)
        _gauss_rules[n] = rule
    y, w = rule
    vals = w * np.exp(e * np.log(sigma + y))
    P = _legendre_table(y, _ORDER)
    return P @ vals


def _moments(e, sigma):
    key = (e.real, e.imag, sigma)
    out = _moment_cache.get(key)
    if out is None:
        out = _touching_moments(e) if sigma == 0 else _shifted_moments(e, sigma)
        _moment_cache[key] = out
    return out


@dataclass(frozen=True)
class SingularityHint:
    """Marks an integrable algebraic singularity |x - location|^exponent.

    Parameters
    ----------
    location : float
        Singular abscissa; interpreted modulo pi by integrate_periodic.
    exponent : complex
        Local power; the real part must lie in (-1, 0].  The imaginary
        part records the log-scale oscillation rate of the factor and is
        honored exactly by the weighted panels.
    """

    location: float
    exponent: complex


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    evaluations: int
    converged: bool


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances shared by the kernel-level integration calls."""

    tol: float = 1e-9
    budget: int = 500_000
    exclusion_radius: float = 1e-4


def gamma_real(x):
    """Gamma function on the positive reals (Lanczos-class libm routine)."""
    if x <= 0:
        raise ValueError("gamma_real requires x > 0")
    return math.gamma(x)


def reference_sine_moment(a):
    """Closed form of the sine moment integral on a half period.

    Parameters
    ----------
    a : float
        Power, a > -1.

    Returns
    -------
    float
        The value of int_0^pi |sin s|^a ds = sqrt(pi) Gamma((a+1)/2) / Gamma(a/2+1).
    """
    if a <= -1:
        raise ValueError("sine moment diverges for a <= -1")
    return math.sqrt(math.pi) * gamma_real((a + 1) / 2) / gamma_real(a / 2 + 1)


def _check_exponent(e):
    e = complex(e)
    if e.real <= -1.0:
        raise ValueError("non-integrable singularity: Re(exponent) <= -1")
    if e.real > 0.0:
        raise ValueError("singularity exponent must have Re in (-1, 0]")
    return e


# ---------------------------------------------------------------------------
# panel bookkeeping

_FIELDS = ("job", "a", "h", "x0", "e", "sig", "tagged", "mirror")
_DTYPES = (np.int64, float, float, float, complex, np.int64, bool, bool)


def _empty_panels():
    return {f: np.empty(0, dtype=d) for f, d in zip(_FIELDS, _DTYPES)}


def _concat_panels(blocks):
    out = {}
    for f, d in zip(_FIELDS, _DTYPES):
        out[f] = np.concatenate([b[f] for b in blocks]).astype(d, copy=False)
    return out


class _PanelBuilder:
    def __init__(self):
        self.rows = {f: [] for f in _FIELDS}
        self.count = 0

    def add(self, job, a, h, x0=0.0, e=0.0j, sig=0, tagged=False, mirror=False):
        r = self.rows
        r["job"].append(job)
        r["a"].append(a)
        r["h"].append(h)
        r["x0"].append(x0)
        r["e"].append(e)
        r["sig"].append(sig)
        r["tagged"].append(tagged)
        r["mirror"].append(mirror)
        self.count += 1

    def build(self):
        return {
            f: np.asarray(self.rows[f], dtype=d) for f, d in zip(_FIELDS, _DTYPES)
        }


def _drop_tag(e, sig):
    return abs(e) * math.log1p(1.0 / sig) <= _TAG_DROP if sig > 0 else False


def _add_plain_run(bld, job, a, b, w_osc):
    parts = max(1, math.ceil((b - a) / w_osc))
    edges = np.linspace(a, b, parts + 1)
    for i in range(parts):
        bld.add(job, edges[i], edges[i + 1] - edges[i])


def _add_tagged_run(bld, job, x0, e, span, w_osc, mirror, grade=math.inf):
    # dyadic shells from the singular point out to distance span; the
    # touching panel obeys the oscillation budget and stays well inside
    # the clearance to the nearest other singular point (grade), so the
    # residual factor is polynomial-resolvable on it; outer shells are
    # split into 2^m equal parts so that panel offsets stay integer
    # multiples of the width (exact cached moments).
    if span <= 0:
        return
    target = min(w_osc, grade / 4.0)
    depth = 0
    if span > target:
        depth = min(45, math.ceil(math.log2(span / target)))
    touch = span * 0.5**depth
    start = x0 if not mirror else x0 - touch
    bld.add(job, start, touch, x0=x0, e=e, sig=0, tagged=True, mirror=mirror)
    for k in range(depth - 1, -1, -1):
        near = span * 0.5 ** (k + 1)
        width = near
        m = 0
        if width > w_osc:
            m = min(40, math.ceil(math.log2(width / w_osc)))
        parts = 1 << m
        pw = width / parts
        for i in range(parts):
            sig = parts + i
            lo = near + i * pw
            a = x0 + lo if not mirror else x0 - lo - pw
            tagged = not _drop_tag(e, sig)
            bld.add(job, a, pw, x0=x0, e=e, sig=sig, tagged=tagged, mirror=mirror)


def _add_trimmed_run(bld, job, x0, e, r, span, w_osc, mirror):
    # geometric octaves from a trimmed edge at distance r from the singular
    # point, seeded for both the global oscillation scale and the local
    # log-phase rate |Im e| of the singular factor.
    if span <= 0:
        return
    rate = abs(e.imag)
    d = r
    while d < r + span:
        d2 = min(2 * d, r + span)
        width = d2 - d
        parts = max(1, math.ceil(width / w_osc), math.ceil(rate * math.log(d2 / d) / 6.0))
        pw = width / parts
        for i in range(parts):
            lo = d + i * pw
            a = x0 + lo if not mirror else x0 - lo - pw
            bld.add(job, a, pw)
        d = d2


def _seed_arc(bld, job, arc, w_osc):
    # explicit spans (lspan, rspan) override the positional ones; panel
    # values of anchored rows depend only on their offsets, so a caller can
    # force the two runs of a narrow arc to tile the exact model gap even
    # when no pair of floats sits at that distance
    a, b, left, right, ltrim, rtrim, lgrade, rgrade, lspan, rspan = arc
    if left is None and right is None:
        _add_plain_run(bld, job, a, b, w_osc)
        return
    mid = 0.5 * (a + b) if (left is not None and right is not None) else None
    lo_end = mid if mid is not None else b
    hi_start = mid if mid is not None else a
    if left is not None:
        x0, e = left
        if ltrim:
            _add_trimmed_run(bld, job, x0, e, a - x0, lo_end - a, w_osc, mirror=False)
        else:
            span = lo_end - x0 if lspan is None else lspan
            _add_tagged_run(bld, job, x0, e, span, w_osc, mirror=False,
                            grade=lgrade)
    elif mid is None:
        _add_plain_run(bld, job, a, hi_start, w_osc)
    if right is not None:
        x0, e = right
        if rtrim:
            _add_trimmed_run(bld, job, x0, e, x0 - b, b - hi_start, w_osc, mirror=True)
        else:
            span = x0 - hi_start if rspan is None else rspan
            _add_tagged_run(bld, job, x0, e, span, w_osc, mirror=True,
                            grade=rgrade)
    elif mid is None:
        _add_plain_run(bld, job, lo_end, b, w_osc)


def _eval_panels(F, p, moment_lookup):
    n = p["job"].size
    h = p["h"]
    y = _Y[None, :]
    base = np.where(p["mirror"], p["a"] + h, p["a"])
    sgn = np.where(p["mirror"], -1.0, 1.0)
    X = base[:, None] + (sgn * h)[:, None] * y
    # exact distance to the tagged singular point; abscissae formed by
    # subtraction would lose it to cancellation once panels get small
    off = np.full((n, _ORDER), np.nan)
    x0 = np.zeros((n, _ORDER))
    # anchored rows (tag dropped, sig retained) keep the exact offsets too:
    # near a singular point the factors must not be rebuilt from rounded x
    anch = p["tagged"] | (p["sig"] > 0)
    if anch.any():
        off[anch] = h[anch, None] * (p["sig"][anch, None] + y)
        x0[anch] = p["x0"][anch, None]
    fv = np.asarray(F(np.repeat(p["job"], _ORDER), X.ravel(),
                      off.ravel(), x0.ravel()), dtype=complex)
    fv = fv.reshape(n, _ORDER)
    value = np.empty(n, dtype=complex)
    est = np.empty(n, dtype=float)
    tm = p["tagged"]
    um = ~tm
    if um.any():
        v = fv[um]
        value[um] = h[um] * (v @ _W)
        coef = v @ _PROJ.T
        est[um] = h[um] * (np.abs(coef[:, -2]) + np.abs(coef[:, -1])) * _SAFETY
    if tm.any():
        e = p["e"][tm]
        sig = p["sig"][tm]
        hh = h[tm]
        d = hh[:, None] * (sig[:, None] + y)
        G = fv[tm] * np.exp(-e[:, None] * np.log(d))
        g = G @ _PROJ.T
        M = moment_lookup(e, sig)
        scale = np.exp((1.0 + e) * np.log(hh))
        terms = g * M
        value[tm] = scale * terms.sum(axis=1)
        est[tm] = np.abs(scale) * np.abs(terms[:, -3:]).sum(axis=1) * _SAFETY
    return value, est


def _moment_rows(e, sig):
    out = np.empty((e.size, _ORDER), dtype=complex)
    for i in range(e.size):
        out[i] = _moments(complex(e[i]), int(sig[i]))
    return out


def _split_panels(p, rows):
    bld = _PanelBuilder()
    for i in rows:
        job = int(p["job"][i])
        a = p["a"][i]
        h2 = 0.5 * p["h"][i]
        tagged = bool(p["tagged"][i])
        sig = int(p["sig"][i])
        if not tagged and sig == 0:
            bld.add(job, a, h2)
            bld.add(job, a + h2, h2)
            continue
        x0 = p["x0"][i]
        e = complex(p["e"][i])
        mirror = bool(p["mirror"][i])
        # child nearer the singular point keeps offset 2*sig, the other 2*sig+1
        near_first = not mirror
        pairs = [(a, 2 * sig if near_first else 2 * sig + 1),
                 (a + h2, 2 * sig + 1 if near_first else 2 * sig)]
        for ca, csig in pairs:
            ct = tagged and not _drop_tag(e, csig)
            bld.add(job, ca, h2, x0=x0, e=e, sig=csig, tagged=ct, mirror=mirror)
    return bld.build()


def _run_jobs(F, arcs_per_job, osc_scales, tols, budgets):
    nj = len(arcs_per_job)
    bld = _PanelBuilder()
    for j, arcs in enumerate(arcs_per_job):
        osc = osc_scales[j]
        w_osc = (4.0 * _PI / osc) if osc > 0 else _PI
        for arc in arcs:
            _seed_arc(bld, j, arc, w_osc)
    fresh = bld.build()

    tols = np.asarray(tols, dtype=float)
    budgets = np.asarray(budgets, dtype=np.int64)
    V = np.zeros(nj, dtype=complex)
    E = np.zeros(nj, dtype=float)
    NEV = np.zeros(nj, dtype=np.int64)
    NP = np.zeros(nj, dtype=np.int64)
    active = np.ones(nj, dtype=bool)
    converged = np.zeros(nj, dtype=bool)

    store = None
    for _ in range(_MAX_ROUNDS):
        if fresh["job"].size:
            val, est = _eval_panels(F, fresh, _moment_rows)
            jb = fresh["job"]
            V += np.bincount(jb, weights=val.real, minlength=nj) \
                + 1j * np.bincount(jb, weights=val.imag, minlength=nj)
            E += np.bincount(jb, weights=est, minlength=nj)
            cnt = np.bincount(jb, minlength=nj)
            NEV += _ORDER * cnt
            NP += cnt
            fresh["value"] = val
            fresh["est"] = est
            store = fresh if store is None else {
                k: np.concatenate([store[k], fresh[k]]) for k in store
            }
        done = active & (E <= tols)
        converged |= done
        active &= ~done
        if not active.any():
            break
        thr = 0.5 * tols / np.maximum(NP, 1)
        jb = store["job"]
        # panels below float resolution cannot be refined further
        cand = active[jb] & (store["est"] > thr[jb]) & (store["h"] > 1e-13)
        # budget: a split costs 2 * _ORDER fresh evaluations per panel
        want = np.bincount(jb[cand], minlength=nj)
        over = active & (NEV + 2 * _ORDER * want > budgets)
        if over.any():
            active &= ~over
            cand &= ~over[jb]
            if not active.any():
                break
        rows = np.nonzero(cand)[0]
        if rows.size == 0:
            break
        children = _split_panels(store, rows)
        pv = store["value"][rows]
        pe = store["est"][rows]
        pj = jb[rows]
        V -= np.bincount(pj, weights=pv.real, minlength=nj) \
            + 1j * np.bincount(pj, weights=pv.imag, minlength=nj)
        E -= np.bincount(pj, weights=pe, minlength=nj)
        NP -= np.bincount(pj, minlength=nj)
        keep = np.ones(jb.size, dtype=bool)
        keep[rows] = False
        store = {k: store[k][keep] for k in store}
        fresh = children

    E = np.maximum(E, 0.0)
    return [
        QuadratureResult(complex(V[j]), float(E[j]), int(NEV[j]), bool(converged[j]))
        for j in range(nj)
    ]


# ---------------------------------------------------------------------------
# domain construction

def _normalize_periodic_hints(hints):
    norm = []
    for hh in hints:
        loc = float(hh.location) % _PI
        if loc > _PI - 1e-12:
            loc = 0.0
        e = _check_exponent(hh.exponent)
        norm.append((loc, e))
    norm.sort(key=lambda p: p[0])
    merged = []
    for loc, e in norm:
        if merged and abs(loc - merged[-1][0]) < 1e-12:
            if abs(e - merged[-1][1]) > 1e-12:
                raise ValueError("conflicting exponents at one singular location")
            continue
        merged.append((loc, e))
    return merged


def _neighbor_grades(locs, period=None):
    # clearance from each singular point to its nearest neighbor; the
    # touch panel of a tagged run must resolve the other points' factors
    k = len(locs)
    if k < 2:
        return [math.inf] * k
    gaps = [locs[i + 1] - locs[i] for i in range(k - 1)]
    if period is not None:
        gaps.append(locs[0] + period - locs[-1])
    out = []
    for i in range(k):
        lo = gaps[i - 1] if (i > 0 or period is not None) else math.inf
        hi = gaps[i] if i < len(gaps) else math.inf
        out.append(min(lo, hi))
    return out


def _periodic_arcs(hints, exclusion):
    if not hints:
        return [(0.0, _PI, None, None, False, False, math.inf, math.inf,
                 None, None)]
    arcs = []
    k = len(hints)
    grades = _neighbor_grades([x for x, _ in hints], period=_PI)
    for i in range(k):
        x0, e0 = hints[i]
        x1, e1 = hints[(i + 1) % k]
        if i + 1 == k:
            x1 += _PI
        a = x0 + exclusion
        b = x1 - exclusion
        if b - a <= 1e-13:
            continue
        trim = exclusion > 0
        arcs.append((a, b, (x0, e0), (x1, e1), trim, trim,
                     grades[i], grades[(i + 1) % k], None, None))
    return arcs


def integrate_periodic(f, hints=(), osc_scale=0.0, tol=1e-9, *,
                       budget=500_000, exclusion_radius=0.0):
    """Integrate a pi-periodic function over one period.

    Parameters
    ----------
    f : callable
        Vectorized integrand; called with a float ndarray, must return a
        matching array of complex (or real) values.  Evaluation points may
        fall anywhere in [x0, x0 + pi) for some shift x0, so f must honor
        its declared periodicity.
    hints : sequence of SingularityHint
        Integrable singular points of f; locations are reduced modulo pi
        and duplicates merged (their exponents must agree).
    osc_scale : float
        Bound on the local angular frequency of the smooth oscillation;
        panels start at two periods of this scale, at least 8 nodes per
        period.
    tol : float
        Absolute tolerance target for the error estimate.
    budget : int
        Maximum number of integrand evaluations before giving up; results
        that hit the budget are returned with converged=False.
    exclusion_radius : float
        If positive, intervals of this radius around every hint are
        removed from the domain and the trimmed integral is returned.

    Returns
    -------
    QuadratureResult
    """
    res = integrate_periodic_batch(
        lambda _j, x: f(x), [list(hints)], [osc_scale],
        tol=tol, budget=budget, exclusion_radius=exclusion_radius)
    return res[0]


def _wrap_user(F):
    # user integrands see (job, x); the extra panel-local arguments of the
    # internal contract are used only by integrands aware of them
    return lambda job, x, _off, _x0: F(job, x)


def integrate_periodic_batch(F, hint_lists, osc_scales, tol=1e-9,
                             budget=500_000, exclusion_radius=0.0):
    """Integrate many independent pi-periodic integrands in lockstep.

    F(job, x) receives parallel ndarrays: integral indices and abscissae.
    All panels pending across all jobs are evaluated in one call per
    refinement round, which keeps the per-point cost at numpy speed.
    Returns one QuadratureResult per job.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    arcs = []
    for hints in hint_lists:
        arcs.append(_periodic_arcs(_normalize_periodic_hints(hints), exclusion_radius))
    nj = len(arcs)
    return _run_jobs(_wrap_user(F), arcs, list(osc_scales), [tol] * nj, [budget] * nj)


def _interval_arcs(a, b, pts, exclusion):
    # pts: checked (location, exponent) pairs inside [a, b]
    pts = sorted(pts, key=lambda p: p[0])
    cuts = [a] + [x for x, _ in pts if a + 1e-13 < x < b - 1e-13] + [b]
    by_loc = dict(pts)
    grade = dict(zip([x for x, _ in pts], _neighbor_grades([x for x, _ in pts])))
    arcs = []
    trim = exclusion > 0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        left = (lo, by_loc[lo]) if lo in by_loc else None
        right = (hi, by_loc[hi]) if hi in by_loc else None
        aa = lo + exclusion if left is not None else lo
        bb = hi - exclusion if right is not None else hi
        if bb - aa <= 1e-13:
            continue
        arcs.append((aa, bb, left, right,
                     trim and left is not None, trim and right is not None,
                     grade.get(lo, math.inf), grade.get(hi, math.inf),
                     None, None))
    return arcs


def integrate_interval(f, a, b, hints=(), osc_scale=0.0, tol=1e-9, *,
                       budget=500_000, exclusion_radius=0.0):
    """Integrate over [a, b] with optional singular points.

    Hint locations must lie inside [a, b] (endpoints allowed); no
    periodicity is assumed.  Otherwise behaves like integrate_periodic.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not b > a:
        raise ValueError("empty interval")
    pts = []
    for hh in hints:
        loc = float(hh.location)
        if loc < a - 1e-12 or loc > b + 1e-12:
            raise ValueError("hint outside the interval")
        pts.append((min(max(loc, a), b), _check_exponent(hh.exponent)))
    arcs = _interval_arcs(a, b, pts, exclusion_radius)
    res = _run_jobs(lambda _j, x, _o, _x0: f(x), [arcs], [osc_scale], [tol], [budget])
    return res[0]
