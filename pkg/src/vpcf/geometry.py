"""Discrete differential geometry of closed planar polygonal curves.

Conventions used throughout the package:

* curves are (N, 2) vertex arrays, index taken mod N (periodic closure);
* the unit normal is ``nu = -J t`` where ``t`` is the unit tangent and ``J``
  the +90 degree rotation, so ``nu`` is the *outer* normal on a positively
  oriented (counterclockwise) convex curve;
* curvature is ``kappa = -<d2 gamma/ds2, nu>``, which makes ``kappa = +1/R``
  on a counterclockwise circle of radius R.

The three-point arclength-weighted curvature stencil is exact on uniformly
sampled circles (the discrete second difference of the vertices is exactly
``-X/R^2`` there), which is what makes circles exact fixed points of the
constrained flow downstream.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateEdge, TooFewVertices, ZeroVolume

MIN_VERTICES = 16

# block row count for the O(N^2) pairwise scans (diameter, touch detection)
_SCAN_BLOCK = 256


@dataclass(frozen=True)
class ClosedCurve:
    """A closed polygonal curve: ordered vertices plus a time stamp."""

    vertices: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must be an (N, 2) array")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        if len(v) < MIN_VERTICES:
            raise TooFewVertices(f"need at least {MIN_VERTICES} vertices, got {len(v)}")
        edges = np.hypot(*(np.roll(v, -1, axis=0) - v).T)
        if edges.min() <= 1e-14 * max(edges.max(), 1e-300):
            raise DegenerateEdge("consecutive vertices coincide")
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class GeoCache:
    """All pointwise and integral quantities of a curve, computed once.

    The pairwise diameter scan is O(N^2) and only needed by diagnostics, so
    it is evaluated lazily on first access.
    """

    vertices: np.ndarray
    edge_lengths: np.ndarray      # h_i = |X_{i+1} - X_i|
    dual_lengths: np.ndarray      # (h_{i-1} + h_i)/2, sums to length
    tangents: np.ndarray          # unit tangents at vertices
    normals: np.ndarray           # outer unit normals, nu = -J t
    kappa: np.ndarray             # vertex curvatures
    length: float
    area: float                   # signed (shoelace); +pi for ccw unit circle
    kappa_bar: float              # (integral of kappa ds) / length
    turning_number: int
    centroid: np.ndarray

    @cached_property
    def _diameter_scan(self):
        return polygon_diameter(self.vertices)

    @property
    def diameter(self):
        return self._diameter_scan[0]

    @property
    def diameter_pair(self):
        return self._diameter_scan[1]

    @property
    def max_abs_kappa(self):
        return float(np.max(np.abs(self.kappa)))


@dataclass(frozen=True)
class TouchReport:
    """Near-touching vertex pairs (index separation >= N/8)."""

    pairs: np.ndarray        # (M, 2) integer vertex indices, p < q
    separations: np.ndarray  # |X_p - X_q|
    alignments: np.ndarray   # <nu_p, nu_q>
    side_signs: np.ndarray   # (M, 2): <nu_p, X_q - X_p>, <nu_q, X_p - X_q>
    flagged: np.ndarray      # bool: alignment < -0.9 and both side signs < 0

    def __len__(self):
        return len(self.pairs)

    @property
    def has_loss_pair(self):
        return bool(self.flagged.any())


def shoelace_area(vertices):
    """Signed polygon area, positive for counterclockwise orientation."""
    x, y = vertices[:, 0], vertices[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * y1 - x1 * y))


def polygon_diameter(vertices):
    """Exhaustive pairwise diameter scan.

    Returns ``(diameter, (i, j))``. Blocked over rows to keep memory flat;
    the per-pair arithmetic is the plain ``(xi-xj)^2 + (yi-yj)^2`` so the
    result is bit-identical to a brute-force double loop.
    """
    x, y = vertices[:, 0], vertices[:, 1]
    n = len(vertices)
    best = -1.0
    pair = (0, 0)
    for i0 in range(0, n, _SCAN_BLOCK):
        i1 = min(i0 + _SCAN_BLOCK, n)
        d2 = (x[i0:i1, None] - x[None, :]) ** 2 + (y[i0:i1, None] - y[None, :]) ** 2
        flat = int(np.argmax(d2))
        bi, bj = divmod(flat, n)
        if d2[bi, bj] > best:
            best = float(d2[bi, bj])
            pair = (i0 + bi, bj)
    i, j = pair
    return float(np.sqrt(best)), (min(i, j), max(i, j))


def build_cache(curve):
    """Compute every cached geometric quantity of a closed curve.

    Parameters
    ----------
    curve : ClosedCurve

    Returns
    -------
    GeoCache
        Edge/dual lengths, unit tangents, outer normals ``nu = -J t``,
        vertex curvatures from the three-point arclength-weighted second
        difference (``kappa = -<L_h X, nu>``), total length, signed area,
        average curvature, turning number (nearest integer of the summed
        signed edge-angle turn over 2 pi), and the diameter with its
        realising vertex pair.

    Raises
    ------
    DegenerateEdge, TooFewVertices
        Propagated from curve validation; also raised for hairpin folds
        where the central-difference tangent vanishes.
    """
    X = curve.vertices
    E = np.roll(X, -1, axis=0) - X           # edge i: X_{i+1} - X_i
    h = np.hypot(E[:, 0], E[:, 1])
    hm = np.roll(h, 1)                        # h_{i-1}
    dual = 0.5 * (h + hm)
    length = float(h.sum())

    chord = np.roll(X, -1, axis=0) - np.roll(X, 1, axis=0)
    cnorm = np.hypot(chord[:, 0], chord[:, 1])
    if cnorm.min() <= 1e-14 * length:
        raise DegenerateEdge("hairpin fold: central tangent vanishes")
    tangents = chord / cnorm[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])

    Em = np.roll(E, 1, axis=0)                # edge i-1
    d2 = (E / h[:, None] - Em / hm[:, None]) / dual[:, None]
    kappa = -(d2[:, 0] * normals[:, 0] + d2[:, 1] * normals[:, 1])

    area = shoelace_area(X)
    kappa_bar = float(np.sum(kappa * dual) / length)

    turn = np.arctan2(Em[:, 0] * E[:, 1] - Em[:, 1] * E[:, 0],
                      Em[:, 0] * E[:, 0] + Em[:, 1] * E[:, 1])
    turning_number = int(round(float(turn.sum()) / (2.0 * np.pi)))

    return GeoCache(
        vertices=X, edge_lengths=h, dual_lengths=dual, tangents=tangents,
        normals=normals, kappa=kappa, length=length, area=area,
        kappa_bar=kappa_bar, turning_number=turning_number,
        centroid=X.mean(axis=0),
    )


def resample_uniform(curve, n_vertices=None):
    """Redistribute vertices to equal arclength spacing.

    A periodic cubic spline is fit through the vertices (chord-length
    parameter); arclength along the spline is tabulated on a dense
    per-interval grid and inverted for the equally spaced targets. Vertex 0
    of the result sits at the position of vertex 0 of the input.

    Parameters
    ----------
    curve : ClosedCurve
    n_vertices : int, optional
        Output vertex count; defaults to the input count.

    Returns
    -------
    ClosedCurve
    """
    m = len(curve) if n_vertices is None else int(n_vertices)
    if m < MIN_VERTICES:
        raise TooFewVertices(f"need at least {MIN_VERTICES} vertices, got {m}")

    V = curve.vertices
    P = np.vstack([V, V[:1]])
    chord = np.hypot(*np.diff(P, axis=0).T)
    u = np.concatenate([[0.0], np.cumsum(chord)])
    spline = CubicSpline(u, P, bc_type="periodic", axis=0)

    # dense arclength table, 16 samples per spline interval
    frac = np.linspace(0.0, 1.0, 17)[:-1]
    uu = (u[:-1, None] + chord[:, None] * frac[None, :]).ravel()
    uu = np.append(uu, u[-1])
    dense = spline(uu)
    seg = np.hypot(*np.diff(dense, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]

    targets = np.arange(m) * (total / m)
    ut = np.interp(targets, s, uu)
    return ClosedCurve(spline(ut), curve.time)


def average_curvature_nonlocal(curve, normal_speed, initial_area=None):
    """Nonlocal average curvature extracted from a velocity field.

    For a curve moving with normal speed ``f`` (i.e. velocity ``f * nu``),
    returns ``(sum_i f_i <nu_i, X_i - c> d_i + L) / (2 V0)`` where ``c`` is
    the vertex centroid, ``d_i`` the dual lengths and ``V0`` the reference
    enclosed area (the curve's own signed area unless given). For the flow
    velocity ``-(kappa - lam) * nu`` this evaluates to ``lam * V / V0``; in
    particular it recovers the Lagrange multiplier of the area-preserving
    flow, and vanishes for the unforced curvature flow.

    Raises
    ------
    ZeroVolume
        If ``|V0| < 1e-12 * L^2``.
    """
    cache = build_cache(curve)
    V0 = cache.area if initial_area is None else float(initial_area)
    if abs(V0) < 1e-12 * cache.length ** 2:
        raise ZeroVolume(f"reference area {V0:.3e} below 1e-12 * L^2")
    f = np.asarray(normal_speed, dtype=float)
    rel = curve.vertices - cache.centroid
    support = cache.normals[:, 0] * rel[:, 0] + cache.normals[:, 1] * rel[:, 1]
    moment = float(np.sum(f * support * cache.dual_lengths))
    return (moment + cache.length) / (2.0 * V0)


def detect_touch(curve, eps):
    """Report non-neighbour vertex pairs closer than ``eps``.

    Pairs must have circular index separation >= N/8 (excludes neighbours
    along the curve). A pair is *flagged* when the normals are opposed
    (``<nu_p, nu_q> < -0.9``) and each vertex lies on the inner side of the
    other (both side signs negative) — the configuration of two sheets
    touching with opposite outer normals.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    cache = build_cache(curve)
    X = curve.vertices
    nu = cache.normals
    n = len(X)
    min_sep = n / 8.0

    rows = []
    cols = []
    for i0 in range(0, n, _SCAN_BLOCK):
        i1 = min(i0 + _SCAN_BLOCK, n)
        d2 = ((X[i0:i1, None, 0] - X[None, :, 0]) ** 2
              + (X[i0:i1, None, 1] - X[None, :, 1]) ** 2)
        ii = np.arange(i0, i1)[:, None]
        jj = np.arange(n)[None, :]
        gap = np.abs(ii - jj)
        gap = np.minimum(gap, n - gap)
        mask = (d2 < eps * eps) & (gap >= min_sep) & (jj > ii)
        bi, bj = np.nonzero(mask)
        rows.append(bi + i0)
        cols.append(bj)
    p = np.concatenate(rows) if rows else np.empty(0, dtype=int)
    q = np.concatenate(cols) if cols else np.empty(0, dtype=int)

    diff = X[q] - X[p]
    separations = np.hypot(diff[:, 0], diff[:, 1])
    alignments = np.sum(nu[p] * nu[q], axis=1)
    side_p = np.sum(nu[p] * diff, axis=1)
    side_q = np.sum(nu[q] * (-diff), axis=1)
    side_signs = np.column_stack([side_p, side_q])
    flagged = (alignments < -0.9) & (side_p < 0) & (side_q < 0)
    return TouchReport(
        pairs=np.column_stack([p, q]), separations=separations,
        alignments=alignments, side_signs=side_signs, flagged=flagged,
    )


# --- snapshot file format ---------------------------------------------------
# header line `# t=<float> N=<int>`, then N lines `x,y`; orientation is row
# order.

def write_snapshot(path, curve):
    with open(path, "w") as fh:
        fh.write(f"# t={curve.time:.17g} N={len(curve)}\n")
        for x, y in curve.vertices:
            fh.write(f"{x:.17g},{y:.17g}\n")


def read_snapshot(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# t="):
            raise ValueError(f"{path}: malformed snapshot header {header!r}")
        t_part, n_part = header[2:].split()
        t = float(t_part[2:])
        n = int(n_part[2:])
        rows = [tuple(map(float, line.split(","))) for line in fh if line.strip()]
    if len(rows) != n:
        raise ValueError(f"{path}: header says N={n} but found {len(rows)} rows")
    return ClosedCurve(np.asarray(rows), time=t)
