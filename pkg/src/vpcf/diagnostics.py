"""Monotone quantities, heat-kernel densities and inequality certificates.

Everything here is read-only analysis of a FlowHistory.  The three groups:

* scalar series per snapshot (length, area, average curvature, the running
  integral ``i2`` of its square, the weight ``psi = exp(-i2/2)``, diameter,
  isoperimetric ratio);
* Gaussian and localized densities with their almost-monotonicity pair
  checks and the clearing-out lower bound;
* inequality certificates: every continuum inequality is checked with an
  explicit slack that scales with dt and the mesh size, and reported as a
  machine-readable ``CERT <name> PASS|FAIL <worst_margin>`` line.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (BetaTooLarge, Inconclusive, PointNotReached,
                     QueryOutOfRange, ZeroVolume)

# curves are hypersurfaces of dimension n = 1 in the plane
DIM = 1

SERIES_COLUMNS = ("t", "length", "area", "kappa_bar", "i2", "psi", "diam",
                  "iso_ratio", "max_abs_kappa", "ddiam_dt")

CLEARING_OUT_SLACK = 0.05
CLEARING_OUT_RADII = (0.125, 0.25, 0.5, 1.0 - 1e-3)   # fractions of rho0
DIAM_BURN_IN_FRACTION = 1.0 / 6.0                     # of the window h
DIAM_GROWTH_SLACK = 0.05


@dataclass
class Certificate:
    """Outcome of one inequality check.

    ``worst_margin`` is the smallest normalized slack ``(bound - value) /
    scale`` over all sub-checks; positive means the inequality held with
    room to spare.  Truthiness is the pass flag.
    """

    name: str
    passed: bool
    worst_margin: float
    detail: str = ""

    def __bool__(self):
        return bool(self.passed)

    def machine_line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"CERT {self.name} {status} {self.worst_margin:.6g}"


def _margin(value, bound, scale=None):
    s = max(abs(bound), 1e-30) if scale is None else scale
    return (bound - value) / s


@dataclass
class DiagnosticsSeries:
    """Per-snapshot scalar columns plus the finite-difference diam slope.

    ``kappa_bar`` is the multiplier actually used by the flow (zero in mcf
    mode), ``i2`` its squared running time integral accumulated per accepted
    step, ``iso_ratio`` the scale-invariant ``2 kappa_bar * area / length``
    (one on a round circle).
    """

    t: np.ndarray
    length: np.ndarray
    area: np.ndarray
    kappa_bar: np.ndarray
    i2: np.ndarray
    psi: np.ndarray
    diam: np.ndarray
    iso_ratio: np.ndarray
    max_abs_kappa: np.ndarray
    ddiam_dt: np.ndarray
    dt: float = 0.0                      # nominal step of the producing run
    n_vertices: np.ndarray = None
    singular_end: bool = False           # run ended by curvature blowup

    def __len__(self):
        return len(self.t)


def series(history):
    """Assemble the scalar diagnostics columns from a flow history."""
    snaps = history.snap_steps
    t = history.step_times[snaps]
    length = np.array([c.length for c in history.caches])
    area = np.array([c.area for c in history.caches])
    kbar = history.kappa_bar_samples[snaps]
    i2 = history.i2[snaps]
    psi = np.exp(-0.5 * i2)
    diam = np.array([c.diameter for c in history.caches])
    with np.errstate(divide="ignore", invalid="ignore"):
        iso = 2.0 * kbar * area / length
    maxk = np.array([c.max_abs_kappa for c in history.caches])

    dd = np.empty_like(diam)
    if len(t) >= 2:
        dd[0] = (diam[1] - diam[0]) / (t[1] - t[0])
        dd[-1] = (diam[-1] - diam[-2]) / (t[-1] - t[-2])
        if len(t) >= 3:
            dd[1:-1] = (diam[2:] - diam[:-2]) / (t[2:] - t[:-2])
    else:
        dd[:] = 0.0

    nv = np.array([len(s) for s in history.snapshots])
    return DiagnosticsSeries(t=t, length=length, area=area, kappa_bar=kbar,
                             i2=i2, psi=psi, diam=diam, iso_ratio=iso,
                             max_abs_kappa=maxk, ddiam_dt=dd,
                             dt=history.config.dt, n_vertices=nv,
                             singular_end=history.termination == "singularity")


def write_series_csv(path, ser, every=1):
    """Write the series columns (header + one row per kept snapshot)."""
    keep = np.zeros(len(ser), dtype=bool)
    keep[::every] = True
    keep[-1] = True
    with open(path, "w") as fh:
        fh.write(",".join(SERIES_COLUMNS) + "\n")
        cols = [getattr(ser, c) if c != "t" else ser.t for c in SERIES_COLUMNS]
        for i in np.nonzero(keep)[0]:
            fh.write(",".join(f"{col[i]:.17g}" for col in cols) + "\n")


# --- diameter inequality ------------------------------------------------------

def diameter_derivative_check(ser):
    """Indices where the diameter growth beats ``2(|kappa_bar| - 2/diam)``.

    Uses centered differences on the snapshot grid (interior points only)
    and the slack ``10 * (dt + length/N)``; an empty list certifies the
    diameter inequality along the run.  When the run ended in a curvature
    blowup the window touching the terminal snapshot is skipped: the last
    recorded curve sits below the resolution scale and its chord lengths
    carry no meaning.
    """
    bad = []
    last = len(ser) - 1 - (1 if ser.singular_end else 0)
    for i in range(1, last):
        slope = (ser.diam[i + 1] - ser.diam[i - 1]) / (ser.t[i + 1] - ser.t[i - 1])
        bound = 2.0 * (abs(ser.kappa_bar[i]) - 2.0 * DIM / ser.diam[i])
        tol = 10.0 * (ser.dt + ser.length[i] / ser.n_vertices[i])
        if slope > bound + tol:
            bad.append(i)
    return bad


def running_max_envelope(ser):
    """The monotone diameter envelope used by the L2 multiplier bound."""
    return np.maximum.accumulate(ser.diam)


def l2_multiplier_bound_check(ser, V0, R_envelope):
    """Certificate for the time-integrated squared multiplier.

    Primary bound: ``i2(t) <= (L0^2 / (2 V0^2)) (R(t)^2 + t)`` with R the
    given monotone envelope dominating the diameter.  Two consequences are
    evaluated alongside: the diameter envelope
    ``(diam(0) + 2 c1 t) exp(2 c2 sqrt(L0) sqrt(t))`` with
    ``c1 = L0/(2|V0|)``, ``c2 = sqrt(L0)/(2|V0|)``, and the closed form
    ``C (1 + t^2) exp(c sqrt(t))`` with constants derived from the first
    two.  All three get a 1e-6 relative slack.
    """
    L0 = ser.length[0]
    if abs(V0) < 1e-12 * L0 ** 2:
        raise ZeroVolume("multiplier bound needs a nonzero enclosed area")
    R = np.asarray(R_envelope, dtype=float)
    if np.any(R[:len(ser)] + 1e-12 * R.max() < ser.diam):
        raise ValueError("envelope must dominate the diameter column")
    t = ser.t - ser.t[0]
    A = L0 ** 2 / (2.0 * V0 ** 2)
    slack = 1.0 + 1e-6

    primary = A * (R ** 2 + t) * slack
    m1 = np.min((primary - ser.i2) / np.maximum(primary, 1e-30))

    c1 = L0 / (2.0 * abs(V0))
    c2 = np.sqrt(L0) / (2.0 * abs(V0))
    diam_env = (ser.diam[0] + 2.0 * c1 * t) * np.exp(
        2.0 * c2 * np.sqrt(L0) * np.sqrt(t)) * slack
    m2 = np.min((diam_env - ser.diam) / np.maximum(diam_env, 1e-30))

    C = A * (2.0 * ser.diam[0] ** 2 + 8.0 * c1 ** 2 + 1.0)
    c = 4.0 * c2 * np.sqrt(L0)
    closed = C * (1.0 + t ** 2) * np.exp(c * np.sqrt(t)) * slack
    m3 = np.min((closed - ser.i2) / np.maximum(closed, 1e-30))

    worst = float(min(m1, m2, m3))
    detail = (f"i2 vs (L0^2/2V0^2)(R^2+t): margin {m1:.3e}\n"
              f"diam vs (d0+2c1 t)e^(2c2 sqrt(L0 t)): margin {m2:.3e}\n"
              f"i2 vs C(1+t^2)e^(c sqrt t), C={C:.6g}, c={c:.6g}: "
              f"margin {m3:.3e}")
    return Certificate("l2-multiplier-bound", worst >= 0.0, worst, detail)


# --- heat-kernel densities ----------------------------------------------------

@dataclass
class DensityQuery:
    """Backward heat-kernel query: center, reference time, evaluation times.

    ``rho`` is only needed for the localized density and the clearing-out
    certificate.
    """

    center: tuple
    t0: float
    times: tuple
    rho: float = None


@dataclass
class DensityResult:
    values: np.ndarray
    limit: float


@dataclass
class LocalDensityReport:
    values: np.ndarray
    psi: np.ndarray
    times: np.ndarray
    c0: float                  # kernel mass of the initial curve
    tol: float
    pair_discrepancy: float    # max over pairs; <= 0 means all checks hold

    @property
    def pairs_pass(self):
        return self.pair_discrepancy <= 0.0


def _kernel_mass(cache, x0, s):
    """Trapezoid quadrature of the backward heat kernel over a snapshot."""
    rel = cache.vertices - x0
    d2 = rel[:, 0] ** 2 + rel[:, 1] ** 2
    return float(np.sum(np.exp(-d2 / (4.0 * s)) * cache.dual_lengths)
                 / np.sqrt(4.0 * np.pi * s))


def _validated_times(history, query):
    times = np.asarray(query.times, dtype=float)
    if times.size == 0:
        raise QueryOutOfRange("no evaluation times")
    if np.any(np.diff(times) <= 0):
        raise QueryOutOfRange("evaluation times must be strictly increasing")
    if times[-1] >= query.t0:
        raise QueryOutOfRange("evaluation times must precede t0")
    snap_times = history.snapshot_times
    tol = 1e-9 * max(1.0, abs(snap_times[-1]))
    idx = []
    for t in times:
        i = int(np.argmin(np.abs(snap_times - t)))
        if abs(snap_times[i] - t) > tol:
            raise QueryOutOfRange(f"no snapshot at t={t!r}")
        idx.append(i)
    return times, idx


def gaussian_density(history, query):
    """Kernel mass at each evaluation time and its limit at t0.

    The limit is the quadratic (Richardson-type) extrapolation to
    ``t0 - t = 0`` through the last three values, which needs at least
    three evaluation times.
    """
    times, idx = _validated_times(history, query)
    if len(times) < 3:
        raise QueryOutOfRange("limit extrapolation needs >= 3 times")
    x0 = np.asarray(query.center, dtype=float)
    vals = np.array([_kernel_mass(history.caches[i], x0, query.t0 - t)
                     for t, i in zip(times, idx)])
    d = query.t0 - times[-3:]
    limit = float(np.polyval(np.polyfit(d, vals[-3:], 2), 0.0))
    return DensityResult(values=vals, limit=limit)


def local_density(history, query):
    """Localized kernel mass and its almost-monotonicity pair checks.

    The localization ``(1 - (|x-x0|^2 + 2(t-t0))/rho^2)^3_+`` multiplies the
    kernel; for every ordered pair of evaluation times the report checks

        psi(t3) I(t3) <= psi(t2) I(t2)
                         + 6 C0 sqrt((t3-t2)/rho^2) sqrt(i2(t3)-i2(t2)) + tol

    where C0 is the kernel mass of the initial curve.  In mcf mode the
    middle term vanishes and the tolerance tightens to 1e-6 * C0; otherwise
    it scales with dt and the squared mesh size.
    """
    if query.rho is None or query.rho <= 0:
        raise QueryOutOfRange("local density needs a positive rho")
    times, idx = _validated_times(history, query)
    x0 = np.asarray(query.center, dtype=float)
    rho2 = query.rho ** 2

    vals = []
    for t, i in zip(times, idx):
        cache = history.caches[i]
        rel = cache.vertices - x0
        d2 = rel[:, 0] ** 2 + rel[:, 1] ** 2
        s = query.t0 - t
        phi = np.clip(1.0 - (d2 + 2.0 * DIM * (t - query.t0)) / rho2,
                      0.0, None) ** 3
        kern = np.exp(-d2 / (4.0 * s)) / np.sqrt(4.0 * np.pi * s)
        vals.append(float(np.sum(phi * kern * cache.dual_lengths)))
    vals = np.array(vals)

    i2_at = np.interp(times, history.step_times, history.i2)
    psi = np.exp(-0.5 * i2_at)
    c0 = _kernel_mass(history.caches[0], x0,
                      query.t0 - history.step_times[0])
    if history.config.mode == "mcf":
        tol = 1e-6 * c0
    else:
        L0 = history.caches[0].length
        n0 = len(history.snapshots[0])
        tol = c0 * (1e-6 + history.config.dt + (L0 / n0) ** 2)

    worst = -np.inf
    for a in range(len(times)):
        for b in range(a + 1, len(times)):
            drift = 6.0 * c0 * np.sqrt((times[b] - times[a]) / rho2) \
                * np.sqrt(max(i2_at[b] - i2_at[a], 0.0))
            disc = psi[b] * vals[b] - psi[a] * vals[a] - drift - tol
            worst = max(worst, disc)
    return LocalDensityReport(values=vals, psi=psi, times=times, c0=c0,
                              tol=tol, pair_discrepancy=float(worst))


# --- clearing out -------------------------------------------------------------

def clearing_out_threshold(beta, n=DIM):
    """The lower-bound constant ``(1/2)(4 pi beta)^(n/2) (1 - 2 n beta)^3``."""
    if not 0 < beta < 1.0 / (2 * n):
        raise BetaTooLarge(f"beta must lie in (0, {1/(2*n)})")
    return 0.5 * (4.0 * np.pi * beta) ** (n / 2.0) * (1.0 - 2.0 * n * beta) ** 3


def polyline_length_in_ball(vertices, x0, rho):
    """Exact length of a closed polyline inside the disk B_rho(x0)."""
    P = vertices - np.asarray(x0, dtype=float)
    E = np.roll(P, -1, axis=0) - P
    a = E[:, 0] ** 2 + E[:, 1] ** 2
    b = 2.0 * (P[:, 0] * E[:, 0] + P[:, 1] * E[:, 1])
    c = P[:, 0] ** 2 + P[:, 1] ** 2 - rho ** 2
    disc = b * b - 4.0 * a * c
    inside = disc > 0
    u_lo = np.zeros_like(a)
    u_hi = np.zeros_like(a)
    sq = np.sqrt(disc[inside])
    u_lo[inside] = np.clip((-b[inside] - sq) / (2.0 * a[inside]), 0.0, 1.0)
    u_hi[inside] = np.clip((-b[inside] + sq) / (2.0 * a[inside]), 0.0, 1.0)
    return float(np.sum(np.sqrt(a) * (u_hi - u_lo)))


def clearing_out_certificate(history, x0, t0, rho0, beta):
    """Lower density bound near a reached point shortly before t0.

    With ``Lw`` the integral of the squared multiplier over the last
    ``rho0^2`` of time and ``C0`` the kernel mass of the initial curve, the
    admissible range is ``beta < beta0 = min(1/(144 C0^2 Lw e^Lw + 2), 1/3)``.
    For radii ``rho0/8, rho0/4, rho0/2, rho0(1-1e-3)`` the curve length
    inside ``B_rho(x0)`` at time ``t0 - beta rho^2`` must be at least
    ``rho * theta(beta) * exp(-Lw/2)``, checked with 5% slack.

    Raises BetaTooLarge, PointNotReached or QueryOutOfRange (no snapshot
    close enough to a measurement time).
    """
    x0 = np.asarray(x0, dtype=float)
    t_start = history.step_times[0]
    lo = max(t0 - rho0 ** 2, t_start)
    i2lo, i2hi = np.interp([lo, t0], history.step_times, history.i2)
    Lw = max(float(i2hi - i2lo), 0.0)
    c0 = _kernel_mass(history.caches[0], x0, t0 - t_start)
    beta0 = min(1.0 / (144.0 * c0 ** 2 * Lw * np.exp(Lw) + 2.0 * DIM),
                1.0 / (1.0 + 2.0 * DIM))
    if beta >= beta0:
        raise BetaTooLarge(f"beta={beta} not below beta0={beta0:.6g}")

    snap_times = history.snapshot_times
    before = snap_times[snap_times < t0]
    if len(before) < 3:
        raise QueryOutOfRange("need >= 3 snapshots before t0")
    reach = gaussian_density(
        history, DensityQuery(center=x0, t0=t0, times=tuple(before[-3:])))
    if reach.limit < 1.0 - 1e-2:
        raise PointNotReached(
            f"density {reach.limit:.4f} < 0.99 at the query point")

    theta = clearing_out_threshold(beta)
    floor = theta * np.exp(-0.5 * Lw)
    margins = []
    lines = []
    for frac in CLEARING_OUT_RADII:
        rho = rho0 * frac
        t_meas = t0 - beta * rho ** 2
        i = int(np.argmin(np.abs(snap_times - t_meas)))
        if abs(snap_times[i] - t_meas) > beta * rho0 ** 2:
            raise QueryOutOfRange(
                f"no snapshot near t={t_meas:.6g} (cadence too coarse)")
        ratio = polyline_length_in_ball(
            history.snapshots[i].vertices, x0, rho) / rho
        m = _margin((1.0 - CLEARING_OUT_SLACK) * floor, ratio,
                    scale=max(ratio, 1e-30))
        margins.append(m)
        lines.append(f"rho={rho:.6g}: length/rho={ratio:.6g} "
                     f">= 0.95*{floor:.6g}: margin {m:.3e}")
    worst = float(min(margins))
    return Certificate("clearing-out", worst >= 0.0, worst, "\n".join(lines))


# --- long-time structure ------------------------------------------------------

def uniform_diameter_condition(ser, h, C):
    """Windowed multiplier condition and the resulting diameter bound.

    Returns True iff every window integral ``i2(t+h) - i2(t)`` stays below
    C and, in that case, the diameter never grows beyond its early maximum
    (burn-in h/6) by more than 5%.
    """
    if h <= 0:
        raise ValueError("window length h must be positive")
    t_hi = np.minimum(ser.t + h, ser.t[-1])
    window = np.interp(t_hi, ser.t, ser.i2) - ser.i2
    if np.any(window >= C):
        return False
    burn = ser.t[0] + h * DIAM_BURN_IN_FRACTION
    base = ser.diam[ser.t <= burn]
    base = float(base.max()) if len(base) else float(ser.diam[0])
    return bool(np.all(ser.diam <= (1.0 + DIAM_GROWTH_SLACK) * base))


@dataclass
class AsymptoticReport:
    label: str                  # "round" (-> 1) or "vanishing" (-> 0)
    tail_start_time: float
    tail_deviation: float
    certificates: list


def asymptotic_ratio_scan(ser, eps):
    """Classify the tail of the isoperimetric ratio and certify its bounds.

    The last quarter of the run must sit inside (1-eps, 1+eps) ("round")
    or (-eps, eps) ("vanishing"); anything else raises Inconclusive.  When
    the tail stays below one (resp. above one) the matching tail bound on
    the remaining multiplier integral is evaluated as a certificate.
    """
    if len(ser) < 4:
        raise Inconclusive("need at least 4 snapshots")
    start = 3 * len(ser) // 4
    tail = ser.iso_ratio[start:]
    certs = []
    if np.all(np.abs(tail - 1.0) < eps):
        label, dev = "round", float(np.max(np.abs(tail - 1.0)))
    elif np.all(np.abs(tail) < eps):
        label, dev = "vanishing", float(np.max(np.abs(tail)))
    else:
        raise Inconclusive(
            f"tail of iso_ratio leaves both bands: range "
            f"[{tail.min():.4g}, {tail.max():.4g}]")

    V0 = ser.area[0]
    i2_tail = ser.i2[-1] - ser.i2[start]
    R0 = float(np.max(ser.diam[start:]))
    M1 = ser.length[start]
    if abs(V0) > 1e-30:
        pref = R0 ** 2 * M1 ** 2 / (8.0 * V0 ** 2)
        alpha = float(np.max(tail))
        if alpha < 1.0:
            bound = max(alpha ** 2 / (1.0 - alpha) ** 2, 1.0) * pref
            m = _margin(i2_tail, bound * (1.0 + 1e-6))
            certs.append(Certificate(
                "tail-l2-below-round", m >= 0.0, m,
                f"alpha={alpha:.6g}, tail i2={i2_tail:.6g} <= {bound:.6g}"))
        floor_iso = float(np.min(tail))
        if floor_iso > 1.0:
            beta = floor_iso - 1.0
            bound = pref * (1.0 + 1.0 / beta) ** 2
            m = _margin(i2_tail, bound * (1.0 + 1e-6))
            certs.append(Certificate(
                "tail-l2-above-round", m >= 0.0, m,
                f"beta={beta:.6g}, tail i2={i2_tail:.6g} <= {bound:.6g}"))
    return AsymptoticReport(label=label, tail_start_time=float(ser.t[start]),
                            tail_deviation=dev, certificates=certs)
