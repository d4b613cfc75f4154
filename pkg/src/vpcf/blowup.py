"""Parabolic rescaling of stored flows and singularity-type classification.

A frame (p, T, lam) sends a snapshot (X, t) to (lam*(X - p), lam^2*(t - T)),
so a flow that collapses at (p, T) can be inspected at unit scale.  All
operations work on the stored snapshot grid: rescaled caches are recomputed
from the mapped vertices and cross-checked against the analytic scaling of
the source cache, suprema and Hamilton-type maximizing sequences are taken
over stored snapshots and vertices.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import (EmptyWindow, NonNegativeTau, NormalizationFailed,
                     NoSingularity)
from .geometry import ClosedCurve, build_cache

RESCALE_CROSS_CHECK_RTOL = 1e-10
TYPE_STABILITY_RTOL = 0.10
HAMILTON_INDICES = tuple(range(1, 11))


@dataclass
class RescalingFrame:
    """Center, reference time and spatial scale of a parabolic rescaling."""

    center: tuple
    T: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("scale lam must be positive")


@dataclass
class TypeReport:
    sup_product: float          # sup of max|kappa|^2 * (T - t)
    classification: str         # "TypeI" or "TypeII"
    constant: float             # the stabilized constant when TypeI
    hamilton: list              # (point, t_i, product) per index i = 1..10


def _check_frame(history, frame):
    t = history.step_times
    scale = max(abs(t[-1]), 1.0)
    if not (t[0] - 1e-12 * scale <= frame.T <= t[-1] + 1e-12 * scale):
        raise ValueError("frame reference time outside the history range")


def rescale(history, frame):
    """Map every snapshot through the frame and rebuild its cache.

    The recomputed curvature, length and area are cross-checked against the
    analytic transformation (kappa/lam, lam*L, lam^2*V) of the source cache;
    a mismatch beyond 1e-10 relative raises ValueError.  Multipliers and
    their running squared integral transform invariantly.
    """
    _check_frame(history, frame)
    if not np.any(history.snapshot_times <= frame.T):
        raise EmptyWindow("no snapshot at or before the reference time")
    p = np.asarray(frame.center, dtype=float)
    lam = frame.lam

    snapshots = []
    caches = []
    for curve, cache in zip(history.snapshots, history.caches):
        tau = lam ** 2 * (curve.time - frame.T)
        mapped = ClosedCurve(lam * (curve.vertices - p), time=tau)
        new_cache = build_cache(mapped)
        ref_k = np.max(np.abs(cache.kappa)) / lam
        if (abs(new_cache.length - lam * cache.length)
                > RESCALE_CROSS_CHECK_RTOL * lam * cache.length
                or abs(new_cache.area - lam ** 2 * cache.area)
                > RESCALE_CROSS_CHECK_RTOL * max(lam ** 2 * abs(cache.area),
                                                 1e-30)
                or np.max(np.abs(new_cache.kappa - cache.kappa / lam))
                > RESCALE_CROSS_CHECK_RTOL * max(ref_k, 1e-30)):
            raise ValueError("rescaled cache disagrees with analytic scaling")
        snapshots.append(mapped)
        caches.append(new_cache)

    sing = history.singular_time
    return dataclasses.replace(
        history,
        config=dataclasses.replace(history.config,
                                   dt=lam ** 2 * history.config.dt),
        snapshots=snapshots,
        caches=caches,
        step_times=lam ** 2 * (history.step_times - frame.T),
        multipliers=history.multipliers / lam,
        kappa_bar_samples=history.kappa_bar_samples / lam,
        i2=history.i2.copy(),
        length_before=lam * history.length_before,
        length_after=lam * history.length_after,
        area_after=lam ** 2 * history.area_after,
        dt_used=lam ** 2 * history.dt_used,
        singular_time=None if sing is None else lam ** 2 * (sing - frame.T),
        initial_area=lam ** 2 * history.initial_area)


def psi_invariance_check(history, frame):
    """|trapezoid of rescaled multiplier^2 d(tau) - source multiplier^2 dt|.

    Both integrals run over the snapshots at or before the reference time,
    both on the snapshot grid, so the discrepancy is pure rounding; the
    documented tolerance is 1e-6 * (1 + i2).
    """
    _check_frame(history, frame)
    keep = history.snapshot_times <= frame.T
    if np.count_nonzero(keep) < 2:
        raise EmptyWindow("need at least two snapshots before the "
                          "reference time")
    t = history.snapshot_times[keep]
    kbar = history.kappa_bar_samples[history.snap_steps][keep]
    lhs = np.trapezoid(kbar ** 2, t)
    tau = frame.lam ** 2 * (t - frame.T)
    rhs = np.trapezoid((kbar / frame.lam) ** 2, tau)
    return float(abs(rhs - lhs))


def classify_type(history, T=None):
    """Type-I/II classification from the blowup rate of the curvature.

    Computes ``max kappa^2 * (T - t)`` per snapshot before T, takes the sup
    over the later half, and reports TypeI with that constant when the
    running sup moves less than 10% over the last quarter.  Snapshots whose
    backward time T - t is under two snapshot gaps are excluded: the
    singular-time estimate carries an O(snapshot-gap) uncertainty that would
    otherwise dominate the product right at the end.  The Hamilton sequence
    maximizes ``kappa(x,t)^2 * (T - 1/i - t)`` over all stored vertices and
    snapshots for i = 1..10.
    """
    if history.termination != "singularity":
        raise NoSingularity("history did not end in a singularity")
    if T is None:
        T = history.singular_time

    times = history.snapshot_times
    gaps = np.diff(times)
    floor = 2.0 * np.median(gaps)
    usable = np.nonzero(T - times >= floor)[0]
    if len(usable) < 4:
        raise NoSingularity("too few resolved snapshots before the "
                            "singular time")
    prod = np.array([history.caches[i].max_abs_kappa ** 2 * (T - times[i])
                     for i in usable])

    half = len(prod) // 2
    tail = prod[half:]
    running = np.maximum.accumulate(tail)
    quarter = 3 * len(prod) // 4 - half
    stable = abs(running[-1] - running[max(quarter, 0)]) \
        <= TYPE_STABILITY_RTOL * running[-1]
    sup_product = float(running[-1])
    label = "TypeI" if stable else "TypeII"

    hamilton = []
    for i in HAMILTON_INDICES:
        best = None
        for j in usable:
            k2 = history.caches[j].kappa ** 2
            v = int(np.argmax(k2))
            val = k2[v] * (T - 1.0 / i - times[j])
            if best is None or val > best[2]:
                best = (history.caches[j].vertices[v].copy(),
                        float(times[j]), float(val))
        hamilton.append(best)
    return TypeReport(sup_product=sup_product, classification=label,
                      constant=sup_product, hamilton=hamilton)


def shrinker_residual(curve, tau):
    """Max vertex residual of the self-shrinking relation at backward time tau.

    A flow that shrinks homothetically into the origin at time 0 satisfies
    ``kappa + <y, nu>/(2 tau) = 0`` with tau < 0; the unit circle is exact
    at tau = -1/2.
    """
    if tau >= 0:
        raise NonNegativeTau("self-shrinking relation needs tau < 0")
    cache = build_cache(curve) if isinstance(curve, ClosedCurve) else curve
    inner = np.sum(cache.vertices * cache.normals, axis=1)
    return float(np.max(np.abs(cache.kappa + inner / (2.0 * tau))))


def extinction_fit(history, tail=8):
    """Extinction time from the self-similar rate of the curvature maximum.

    For a flow collapsing homothetically, ``1/max kappa^2`` decays linearly
    to zero at the singular time, so a least-squares line through the last
    ``tail`` resolved snapshots (same resolution floor as classify_type)
    gives a far less biased estimate than the edge-collapse time recorded
    by the integrator.
    """
    if history.termination != "singularity":
        raise NoSingularity("history did not end in a singularity")
    times = history.snapshot_times
    floor = 2.0 * np.median(np.diff(times))
    usable = np.nonzero(history.singular_time - times >= floor)[0]
    if len(usable) < 3:
        raise NoSingularity("too few resolved snapshots for the fit")
    pick = usable[-tail:]
    t = times[pick]
    y = np.array([1.0 / history.caches[i].max_abs_kappa ** 2 for i in pick])
    slope, intercept = np.polyfit(t, y, 1)
    if slope >= 0:
        raise NoSingularity("curvature maximum is not blowing up")
    return float(-intercept / slope)


def shrinker_residual_battery(history, n=3):
    """Shrinker residuals of the last ``n`` resolved snapshots, at unit scale.

    Each snapshot is rescaled about the collapse point (vertex centroid of
    the last resolved snapshot) with its own homothetic factor
    ``1/sqrt(2 (T - t))``, T from :func:`extinction_fit`, and the residual
    of the self-shrinking relation is taken at tau = -1/2.  Returned in
    time order, so a homothetic collapse shows a decreasing sequence as the
    snapshots close in on the fitted profile.  Only the snapshots adjacent
    to the fit anchor are meaningful: farther back the residual is
    dominated by accumulated step bias, which at fixed step size grows
    relative to the shrinking scale.
    """
    T = extinction_fit(history)
    times = history.snapshot_times
    floor = 2.0 * np.median(np.diff(times))
    usable = np.nonzero((history.singular_time - times >= floor)
                        & (T - times > 0))[0]
    if len(usable) < n:
        raise EmptyWindow("fewer resolved snapshots than requested")
    pick = usable[-n:]
    center = history.snapshots[pick[-1]].vertices.mean(axis=0)
    out = []
    for i in pick:
        lam = 1.0 / np.sqrt(2.0 * (T - times[i]))
        mapped = lam * (history.snapshots[i].vertices - center)
        out.append(shrinker_residual(ClosedCurve(mapped, time=-0.5), -0.5))
    return np.array(out)


def hbar_decay_check(rescaled, tau_window=None, tol_factor=10.0):
    """Indices where the rescaled multiplier drifts faster than ``4/|tau|^3``.

    The bound applies on windows where ``max kappa^2 * |tau| <= 1`` (a
    parabolic-invariant product, so it selects the late-time window rather
    than a scale).  With ``tau_window=(lo, hi)`` the check runs there and
    raises NormalizationFailed if the product exceeds one anywhere inside;
    by default it runs on the maximal trailing window satisfying the
    product bound.  Interior centered differences of the multiplier are
    compared against the bound plus a slack scaling with the step and the
    squared mesh size.
    """
    times = rescaled.snapshot_times
    neg = np.nonzero(times < 0)[0]
    if len(neg) < 3:
        raise EmptyWindow("need at least three snapshots with tau < 0")
    prod = np.array([rescaled.caches[i].max_abs_kappa ** 2 * (-times[i])
                     for i in neg])
    if tau_window is not None:
        lo, hi = tau_window
        win = neg[(times[neg] >= lo) & (times[neg] <= hi)]
        if len(win) < 3:
            raise EmptyWindow("window holds fewer than three snapshots")
        bad = prod[np.searchsorted(neg, win)] > 1.0 + 1e-12
        if np.any(bad):
            worst = prod[np.searchsorted(neg, win)].max()
            raise NormalizationFailed(
                f"max kappa^2 |tau| = {worst:.4g} > 1 inside the window")
    else:
        ok = prod <= 1.0 + 1e-12
        start = len(ok) - np.argmin(ok[::-1]) if not ok.all() else 0
        win = neg[start:]
        if len(win) < 3:
            raise EmptyWindow("no trailing window satisfies the product "
                              "bound with three snapshots")

    kbar = rescaled.kappa_bar_samples[rescaled.snap_steps]
    violations = []
    for a, i, b in zip(win[:-2], win[1:-1], win[2:]):
        slope = (kbar[b] - kbar[a]) / (times[b] - times[a])
        cache = rescaled.caches[i]
        tol = tol_factor * (rescaled.config.dt
                            + (cache.length / len(cache.vertices)) ** 2)
        if abs(slope) > 4.0 / abs(times[i]) ** 3 + tol:
            violations.append(int(i))
    return violations


def write_blowup_report(path, report, residuals=None):
    """Plain-text report: classification, constants, Hamilton and residuals."""
    with open(path, "w") as fh:
        fh.write(f"classification: {report.classification}\n")
        fh.write(f"sup max|kappa|^2 (T - t): {report.sup_product:.17g}\n")
        fh.write(f"constant: {report.constant:.17g}\n")
        fh.write("hamilton sequence (i, x, y, t, product):\n")
        for i, (pt, t, val) in zip(HAMILTON_INDICES, report.hamilton):
            fh.write(f"  {i} {pt[0]:.17g} {pt[1]:.17g} {t:.17g} {val:.17g}\n")
        if residuals is not None:
            fh.write("shrinker residuals (tau, residual):\n")
            for tau, r in residuals:
                fh.write(f"  {tau:.17g} {r:.17g}\n")
