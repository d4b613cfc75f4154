"""Integrals of H and H*K over surfaces of revolution.

For a profile curve (x(s), y(s)) in the half-plane x >= 0, parametrized by
arclength and rotated about the y-axis, the principal curvatures are the
profile curvature and dy/ds / x, the area element is 2 pi x ds, and

    int H  dmu = 2 pi int x kappa ds + 2 pi (y(b) - y(a))
    int HK dmu = 2 pi int (dy/ds kappa^2 + kappa (dy/ds)^2 / x) ds .

Profiles are built from circular arcs and straight lines; an orientation
sign flips the normal, negating both integrals.  The adaptive quadrature of
these integrands is the module's ground truth; closed forms exist for
axis-centred arcs, off-axis arcs (mean curvature exactly, the Gauss term
only as a two-sided bound) and vertical or horizontal lines.

The assembled test surface is a family, indexed by the cylinder length l,
of capped cylinders hanging from a large disk that is closed up by an arc,
a cone and a small spherical cap; its total mean curvature integral is
affine in l, so a secant solve balances it to zero while the cap keeps the
Gauss term large and positive.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .errors import (AxisSingularity, NotBalanced, ParameterDomain,
                     UnsupportedSegment)

QUAD_EPS = 1e-12            # absolute and relative quadrature targets
AXIS_EPS = 1e-9             # profiles must stay this far from the axis
CROSS_CHECK_RTOL = 1e-8     # closed form vs quadrature agreement
BALANCE_RTOL = 1e-12        # secant target for |sum intH| / area


@dataclass(frozen=True)
class ArcProfile:
    """Circular profile arc: center (cx, cy), radius, angles from horizontal.

    The point at angle theta is (cx + radius cos theta, cy + radius sin
    theta); theta2 > theta1.  ``sign`` (+1/-1) selects the normal; -1
    negates both integrals.
    """

    cx: float
    cy: float
    radius: float
    theta1: float
    theta2: float
    sign: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterDomain("arc radius must be positive")
        if not self.theta2 > self.theta1:
            raise ParameterDomain("need theta2 > theta1")
        if self.sign not in (-1, 1):
            raise ParameterDomain("sign must be +1 or -1")


@dataclass(frozen=True)
class LineProfile:
    """Straight profile segment from ``start`` to ``end`` (x >= 0)."""

    start: tuple
    end: tuple
    sign: int = 1

    def __post_init__(self):
        if min(self.start[0], self.end[0]) < -AXIS_EPS:
            raise ParameterDomain("profile must stay in the half-plane x >= 0")
        if self.sign not in (-1, 1):
            raise ParameterDomain("sign must be +1 or -1")


@dataclass(frozen=True)
class PieceIntegrals:
    """Mean-curvature and Gauss-term integrals of one profile piece.

    ``intHK`` is a scalar when exact and an ``(lo, hi)`` interval when only
    the two-sided bound is closed-form.  ``area`` is the revolved area
    2 pi int x ds.
    """

    intH: float
    intHK: object
    source: str                 # "closed_form" or "quadrature"
    area: float = None


def _arc_min_x(seg):
    """Minimum of cx + r cos(theta) over the closed angle interval."""
    cand = [seg.theta1, seg.theta2]
    # interior extrema of cos at odd multiples of pi
    k = np.ceil(seg.theta1 / np.pi)
    while k * np.pi <= seg.theta2:
        cand.append(k * np.pi)
        k += 1
    return min(seg.cx + seg.radius * np.cos(t) for t in cand)


def quadrature_integrals(segment):
    """Adaptive quadrature of both integrands; the module's oracle.

    Raises AxisSingularity when the profile hits the axis with a
    non-integrable Gauss term (an off-axis arc crossing x = 0); the
    removable 0/0 of axis-centred arcs is cancelled algebraically first.
    """
    if isinstance(segment, LineProfile):
        (x0, y0), (x1, y1) = segment.start, segment.end
        length = float(np.hypot(x1 - x0, y1 - y0))
        if length == 0.0:
            raise ParameterDomain("zero-length line segment")
        # kappa = 0 kills the x*kappa and HK integrands exactly
        intH = segment.sign * 2.0 * np.pi * (y1 - y0)
        area = 2.0 * np.pi * quad(
            lambda u: x0 + u * (x1 - x0), 0.0, 1.0,
            epsabs=QUAD_EPS, epsrel=QUAD_EPS)[0] * length
        return PieceIntegrals(intH=float(intH), intHK=0.0,
                              source="quadrature", area=float(area))

    if not isinstance(segment, ArcProfile):
        raise UnsupportedSegment(f"unknown segment type {type(segment)!r}")
    cx, r = segment.cx, segment.radius
    t1, t2 = segment.theta1, segment.theta2
    on_axis = abs(cx) <= AXIS_EPS
    if _arc_min_x(segment) < -AXIS_EPS:
        raise ParameterDomain("arc leaves the half-plane x >= 0")
    if not on_axis and _arc_min_x(segment) < AXIS_EPS:
        raise AxisSingularity(
            "off-axis arc touches the rotation axis: kappa dy^2/x is "
            "not integrable there")

    def x_of(t):
        return cx + r * np.cos(t)

    h_val = quad(x_of, t1, t2, epsabs=QUAD_EPS, epsrel=QUAD_EPS)[0]
    intH = 2.0 * np.pi * h_val + 2.0 * np.pi * r * (np.sin(t2) - np.sin(t1))

    if on_axis:
        # cos^2/(r cos) reduces to cos/r; with the dy kappa^2 term: 2 cos/r
        hk = quad(lambda t: 2.0 * np.cos(t) / r, t1, t2,
                  epsabs=QUAD_EPS, epsrel=QUAD_EPS)[0]
    else:
        hk = quad(lambda t: np.cos(t) / r + np.cos(t) ** 2 / x_of(t),
                  t1, t2, epsabs=QUAD_EPS, epsrel=QUAD_EPS)[0]
    intHK = 2.0 * np.pi * hk

    area = 2.0 * np.pi * r * quad(x_of, t1, t2,
                                  epsabs=QUAD_EPS, epsrel=QUAD_EPS)[0]
    s = segment.sign
    return PieceIntegrals(intH=float(s * intH), intHK=float(s * intHK),
                          source="quadrature", area=float(area))


def closed_form_integrals(segment):
    """Exact rows where they exist.

    Arcs: intH is exact for any arc; intHK is exact for axis-centred arcs
    and a two-sided interval (from bounding x by cx -+ r) for arcs with
    cx > r.  Lines: vertical (cylinder) and horizontal (flat annulus) rows
    are exact; tilted lines (cones) raise UnsupportedSegment.
    """
    if isinstance(segment, LineProfile):
        (x0, y0), (x1, y1) = segment.start, segment.end
        if abs(x1 - x0) <= AXIS_EPS * max(1.0, abs(x0)):         # cylinder
            intH = segment.sign * 2.0 * np.pi * (y1 - y0)
            area = 2.0 * np.pi * x0 * abs(y1 - y0)
            return PieceIntegrals(intH=float(intH), intHK=0.0,
                                  source="closed_form", area=float(area))
        if abs(y1 - y0) <= AXIS_EPS * max(1.0, abs(y0)):         # flat annulus
            area = np.pi * abs(x1 ** 2 - x0 ** 2)
            return PieceIntegrals(intH=0.0, intHK=0.0,
                                  source="closed_form", area=float(area))
        raise UnsupportedSegment("tilted lines (cones) are quadrature-only")

    if not isinstance(segment, ArcProfile):
        raise UnsupportedSegment(f"unknown segment type {type(segment)!r}")
    cx, r = segment.cx, segment.radius
    t1, t2 = segment.theta1, segment.theta2
    dsin = np.sin(t2) - np.sin(t1)
    dth = t2 - t1
    s = segment.sign
    intH = s * (4.0 * np.pi * r * dsin + 2.0 * np.pi * cx * dth)
    area = 2.0 * np.pi * r * (r * dsin + cx * dth)

    if abs(cx) <= AXIS_EPS:
        intHK = s * 4.0 * np.pi * dsin / r
        return PieceIntegrals(intH=float(intH), intHK=float(intHK),
                              source="closed_form", area=float(area))
    if cx > r:
        gauss = 0.5 * (np.sin(2.0 * t2) - np.sin(2.0 * t1)) + dth
        base = 2.0 * np.pi * dsin / r
        lo = np.pi * gauss / (cx + r) + base
        hi = np.pi * gauss / (cx - r) + base
        lo, hi = sorted((s * lo, s * hi))
        return PieceIntegrals(intH=float(intH), intHK=(float(lo), float(hi)),
                              source="closed_form", area=float(area))
    raise UnsupportedSegment(
        "off-axis arc with cx <= radius: the interval bound degenerates")


# --- the assembled test surface -------------------------------------------

@dataclass(frozen=True)
class PieceGroup:
    """A named profile piece, its multiplicity and the reference values.

    ``table_intH`` / ``table_intHK`` are the reference-row values for the
    whole group (already multiplied by ``count``); ``table_intHK`` may be a
    lower bound, flagged by ``hk_is_bound``.  ``area_override`` replaces
    the revolved area when the flat piece carries off-axis holes that the
    profile cannot see.
    """

    name: str
    segment: object
    count: int
    table_intH: float
    table_intHK: float
    hk_is_bound: bool = False
    area_override: float = None


@dataclass(frozen=True)
class TrilobiteSurface:
    surface: tuple              # PieceGroup entries
    totals: PieceIntegrals      # oracle sums (intHK always a scalar here)
    l_used: float


def reference_l(rho, n_cyl, r):
    """The reference closed-form cylinder length for the assembled surface."""
    den = n_cyl - 3.0 - 1.0 / (2.0 * np.pi)
    if den <= 0:
        raise ParameterDomain("need n_cyl - 3 - 1/(2 pi) > 0")
    num = ((11.0 / 3.0) * np.pi + 1.0 / np.pi - 4.0) * n_cyl * rho \
        + (2.0 - np.sqrt(3.0) - 1.0 / (2.0 * np.pi)) * r
    return num / den


def assemble_trilobite(rho, n_cyl, r, l=None):
    """Build the capped-cylinder surface and its oracle totals.

    ``n_cyl`` capped cylinders (hemisphere + wall + quarter-circle fillet,
    normals pointing into the cylinders) hang from a disk of radius
    2 n rho; the disk edge rolls over an arc of radius l through
    [-pi/6, pi/2], continues as a cone of slope sqrt(3) and is closed by a
    spherical cap of radius r.  All joins are tangent-continuous.  With
    ``l=None`` the reference length ``reference_l`` is used; the totals are
    quadrature sums over all pieces.
    """
    if rho <= 0 or r <= 0:
        raise ParameterDomain("rho and r must be positive")
    if n_cyl != int(n_cyl) or n_cyl < 4:
        raise ParameterDomain("need an integer n_cyl >= 4")
    n_cyl = int(n_cyl)
    if l is None:
        l = reference_l(rho, n_cyl, r)
    if l <= 0:
        raise ParameterDomain("cylinder length must be positive")

    hemi = ArcProfile(0.0, -rho - l, rho, -np.pi / 2, 0.0, sign=-1)
    wall = LineProfile((rho, -rho - l), (rho, -rho), sign=-1)
    fillet = ArcProfile(2.0 * rho, -rho, rho, np.pi / 2, np.pi, sign=1)
    disk_edge = 2.0 * n_cyl * rho
    disk = LineProfile((0.0, 0.0), (disk_edge, 0.0), sign=1)
    join = ArcProfile(disk_edge, -l, l, -np.pi / 6, np.pi / 2, sign=1)

    x_arc = disk_edge + 0.5 * np.sqrt(3.0) * l       # arc/cone junction
    y_arc = -1.5 * l
    x_cap = 0.5 * np.sqrt(3.0) * r                   # cone/cap junction
    y_cap = y_arc - np.sqrt(3.0) * (x_arc - x_cap)
    cone = LineProfile((x_cap, y_cap), (x_arc, y_arc), sign=1)
    cap = ArcProfile(0.0, y_cap + 0.5 * r, r, -np.pi / 2, -np.pi / 6, sign=1)

    two_pi = 2.0 * np.pi
    groups = (
        PieceGroup("hemisphere", hemi, n_cyl,
                   -4.0 * np.pi * rho * n_cyl,
                   -4.0 * np.pi / rho * n_cyl),
        PieceGroup("cylinder", wall, n_cyl,
                   -two_pi * l * n_cyl, 0.0),
        PieceGroup("fillet_arc", fillet, n_cyl,
                   two_pi * rho * (np.pi - 2.0) * n_cyl,
                   (np.pi ** 2 / (6.0 * rho) - two_pi / rho) * n_cyl,
                   hk_is_bound=True),
        PieceGroup("disk", disk, 1, 0.0, 0.0,
                   area_override=np.pi * disk_edge ** 2
                   - n_cyl * np.pi * (2.0 * rho) ** 2),
        PieceGroup("joining_arc", join, 1,
                   6.0 * np.pi * l
                   + (8.0 / 3.0) * n_cyl * np.pi ** 2 * rho,
                   0.0, hk_is_bound=True),
        # the reference cone row is reproduced verbatim; its scaling does
        # not match 2 pi (y(b) - y(a)) and the report shows both values
        PieceGroup("cone", cone, 1, 2.0 * n_cyl * rho + l - r, 0.0),
        PieceGroup("cap", cap, 1,
                   two_pi * (2.0 - np.sqrt(3.0)) * r,
                   two_pi * (2.0 - np.sqrt(3.0)) / r),
    )

    tot_h = tot_hk = tot_area = 0.0
    for g in groups:
        piece = quadrature_integrals(g.segment)
        tot_h += g.count * piece.intH
        tot_hk += g.count * piece.intHK
        tot_area += g.area_override if g.area_override is not None \
            else g.count * piece.area
    totals = PieceIntegrals(intH=tot_h, intHK=tot_hk,
                            source="quadrature", area=tot_area)
    return TrilobiteSurface(surface=groups, totals=totals, l_used=float(l))


def balance_trilobite(rho, n_cyl, r):
    """Solve sum intH = 0 for the cylinder length by a secant iteration.

    The total is affine in l, so two evaluations already land on the root;
    the iteration only polishes rounding.  Raises NotBalanced when the
    root is not a positive length (too few cylinders for the geometry).
    """
    l0 = reference_l(rho, n_cyl, r)
    l1 = 1.1 * l0
    f0 = assemble_trilobite(rho, n_cyl, r, l=l0).totals.intH
    f1 = assemble_trilobite(rho, n_cyl, r, l=l1).totals.intH
    for _ in range(8):
        if f1 == f0:
            break
        l2 = l1 - f1 * (l1 - l0) / (f1 - f0)
        if l2 <= 0:
            raise NotBalanced(
                f"mean-curvature balance needs l = {l2:.6g} <= 0 at "
                f"n_cyl = {n_cyl}")
        built = assemble_trilobite(rho, n_cyl, r, l=l2)
        l0, f0, l1, f1 = l1, f1, l2, built.totals.intH
        if abs(f1) <= BALANCE_RTOL * built.totals.area:
            return built
    raise NotBalanced(f"secant stalled at |sum intH| = {abs(f1):.3g}")


def hbar_derivative_at_zero(surface):
    """Initial rate of the average mean curvature on a balanced surface.

    Evaluates -2 (sum intHK) / area, valid when sum intH vanishes; raises
    NotBalanced beyond 1e-6 * area.  Accepts an assembled surface or a
    plain list of profile segments.
    """
    if isinstance(surface, TrilobiteSurface):
        tot = surface.totals
    else:
        h = hk = area = 0.0
        for seg in surface:
            p = quadrature_integrals(seg)
            h += p.intH
            hk += p.intHK
            area += p.area
        tot = PieceIntegrals(intH=h, intHK=hk, source="quadrature", area=area)
    if abs(tot.intH) > 1e-6 * tot.area:
        raise NotBalanced(
            f"sum intH = {tot.intH:.6g} is not zero to 1e-6 * area")
    return -2.0 * tot.intHK / tot.area


def write_trilobite_report(path, built, hbar=None):
    """CSV report: oracle vs reference values per piece, totals, derivative."""
    with open(path, "w") as fh:
        fh.write("piece,intH_oracle,intH_table,intHK_oracle,"
                 "intHK_table_or_bound\n")
        for g in built.surface:
            p = quadrature_integrals(g.segment)
            hk_ref = f">={g.table_intHK:.17g}" if g.hk_is_bound \
                else f"{g.table_intHK:.17g}"
            fh.write(f"{g.name}(x{g.count}),{g.count * p.intH:.17g},"
                     f"{g.table_intH:.17g},{g.count * p.intHK:.17g},"
                     f"{hk_ref}\n")
        t = built.totals
        fh.write(f"total,{t.intH:.17g},,{t.intHK:.17g},\n")
        fh.write(f"l_used,{built.l_used:.17g},,,\n")
        if hbar is not None:
            fh.write(f"hbar_derivative_at_zero,{hbar:.17g},,,\n")
