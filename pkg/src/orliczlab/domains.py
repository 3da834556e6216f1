"""Uniform-grid domains, generators for the example domains, and a cigar checker.

Cells are axis-aligned cubes of side ``h``; a cell belongs to the domain when its
centre does. All generators return connected masks (face adjacency).
"""

import warnings
from collections import namedtuple
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, cKDTree

from ._validation import check_real
from .exceptions import CurveError, ParameterError, ResolutionError
from .phi import PhiSpec, as_psi, eval_phi


class GridDomain:
    """Inside/outside mask on a uniform grid.

    Parameters
    ----------
    mask : ndarray of bool, ndim 2 or 3
    h : float
        Cell side.
    origin : sequence of float
        Lower corner of cell ``(0, ..., 0)``.
    meta : dict, optional
        Free-form generator information (read-only).
    check_connected : bool, default True
    """

    def __init__(self, mask, h, origin, meta=None, check_connected=True):
        mask = np.array(mask, dtype=bool)
        if mask.ndim not in (2, 3):
            raise ParameterError(f"only n = 2 or 3 is supported, got n = {mask.ndim}")
        self.h = check_real(h, "h", min_val=0.0, include_min=False)
        self.origin = np.array(origin, dtype=float).reshape(-1)
        if self.origin.shape != (mask.ndim,):
            raise ParameterError("origin must have one entry per axis")
        if not mask.any():
            raise ResolutionError("domain has no inside cells")
        if check_connected:
            _, ncomp = ndimage.label(mask, structure=ndimage.generate_binary_structure(mask.ndim, 1))
            if ncomp != 1:
                raise ParameterError(f"domain mask has {ncomp} face-connected components")
        mask.flags.writeable = False
        self.origin.flags.writeable = False
        self.mask = mask
        self.meta = MappingProxyType(dict(meta or {}))
        self._flat = np.flatnonzero(mask.ravel())

    def __reduce__(self):
        return (GridDomain, (self.mask.copy(), self.h, self.origin.copy(), dict(self.meta), False))

    def __deepcopy__(self, memo):
        # immutable, so sharing is safe
        return self

    def __repr__(self):
        return (f"GridDomain(n={self.n}, shape={self.shape}, h={self.h!r}, "
                f"inside={self.n_inside})")

    @property
    def n(self):
        return self.mask.ndim

    @property
    def shape(self):
        return self.mask.shape

    @property
    def cell_measure(self):
        return self.h ** self.n

    @property
    def n_inside(self):
        return self._flat.size

    @property
    def measure(self):
        return self.n_inside * self.cell_measure

    @property
    def flat_index(self):
        """Row-major flat indices of inside cells; fixes the ordering of field values."""
        return self._flat

    @property
    def cell_index(self):
        """Integer grid index of each inside cell, shape (n_inside, n)."""
        return np.stack(np.unravel_index(self._flat, self.shape), axis=1)

    @property
    def centers(self):
        return self.origin + (self.cell_index + 0.5) * self.h

    def axis_centers(self, axis):
        return self.origin[axis] + (np.arange(self.shape[axis]) + 0.5) * self.h

    def mesh(self):
        """Coordinate arrays of all cell centres (inside or not), ``indexing='ij'``."""
        return np.meshgrid(*[self.axis_centers(k) for k in range(self.n)], indexing="ij")

    @property
    def diameter(self):
        """Diameter of the set of inside cell centres."""
        pts = self.centers
        if len(pts) > self.n + 1:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except Exception:  # degenerate (collinear) point sets
                pass
        diffs = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diffs ** 2).sum(-1)).max()) if len(pts) > 1 else 0.0

    def to_grid(self, values, fill=0.0):
        """Scatter per-inside-cell values back onto the full grid."""
        out = np.full(self.shape, fill, dtype=float)
        out.ravel()[self._flat] = values
        return out

    def locate(self, points):
        """Grid index of the cell containing each point and whether it is inside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = np.floor((pts - self.origin) / self.h).astype(int)
        in_grid = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=1)
        inside = np.zeros(len(pts), dtype=bool)
        safe = idx[in_grid]
        inside[in_grid] = self.mask[tuple(safe.T)]
        return idx, inside

    def refine(self, factor=2):
        """Split each cell into ``factor**n`` sub-cells."""
        factor = check_real(factor, "factor", min_val=1, integer=True)
        mask = self.mask
        for axis in range(self.n):
            mask = np.repeat(mask, factor, axis=axis)
        return GridDomain(mask, self.h / factor, self.origin, meta=dict(self.meta),
                          check_connected=False)

    def restrict(self, mask, meta=None):
        """Same grid, a sub-mask (must be a subset of the current one)."""
        mask = np.asarray(mask, dtype=bool) & self.mask
        return GridDomain(mask, self.h, self.origin, meta=meta)

    # -- distances -------------------------------------------------------
    def distance_transform(self):
        """Distance from each inside cell centre to the nearest outside cell centre.

        Cells beyond the grid count as outside.
        """
        padded = np.pad(self.mask, 1, constant_values=False)
        dist = ndimage.distance_transform_edt(padded) * self.h
        inner = dist[tuple(slice(1, -1) for _ in range(self.n))]
        return inner.ravel()[self._flat]

    def _outside_tree(self):
        tree = getattr(self, "_tree", None)
        if tree is None:
            padded = np.pad(self.mask, 1, constant_values=False)
            out_idx = np.argwhere(~padded) - 1
            tree = cKDTree(self.origin + (out_idx + 0.5) * self.h)
            self._tree = tree
        return tree

    def distance_to_outside(self, points):
        """Euclidean distance from arbitrary points to the nearest outside cell centre."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d, _ = self._outside_tree().query(pts)
        return d

    # -- export ----------------------------------------------------------
    def to_pgm(self):
        """Plain (P2) grey-map text: metadata comments, then 0/1 per cell, row-major.

        For n = 3 the image has ``shape[0] * shape[1]`` rows of ``shape[2]`` columns.
        """
        rows = self.mask.reshape(-1, self.shape[-1]).astype(int)
        lines = ["P2",
                 f"# n {self.n}",
                 "# shape " + " ".join(str(s) for s in self.shape),
                 "# origin " + " ".join(repr(float(o)) for o in self.origin),
                 f"# h {self.h!r}",
                 f"{rows.shape[1]} {rows.shape[0]}",
                 "1"]
        lines.extend(" ".join(str(v) for v in row) for row in rows)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_pgm(cls, text):
        header = {}
        body = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(" ")
                header[key] = val.split()
            else:
                body.append(line)
        if body[0] != "P2":
            raise ParameterError("not a plain grey-map file")
        values = np.array(" ".join(body[3:]).split(), dtype=int)
        shape = tuple(int(s) for s in header["shape"])
        return cls(values.reshape(shape).astype(bool), float(header["h"][0]),
                   [float(o) for o in header["origin"]], check_connected=False)


def make_box(n, corner, sides, h):
    """Axis-aligned box ``corner + [0, sides]`` with round(sides/h) cells per axis."""
    n = check_real(n, "n", min_val=2, max_val=3, integer=True)
    h = check_real(h, "h", min_val=0.0, include_min=False)
    sides = np.broadcast_to(np.asarray(sides, dtype=float), (n,))
    corner = np.broadcast_to(np.asarray(corner, dtype=float), (n,))
    if np.any(sides <= 0):
        raise ParameterError("box sides must be > 0")
    cells = np.rint(sides / h).astype(int)
    if np.any(cells == 0):
        raise ParameterError(f"h = {h} gives zero cells along some axis of sides {sides}")
    return GridDomain(np.ones(tuple(cells), dtype=bool), h, corner,
                      meta={"kind": "box", "sides": sides.tolist()})


def _centered_axis(center, radius, h):
    # odd cell count with one cell centred at ``center``
    m = 2 * int(np.ceil(radius / h - 0.5)) + 1
    return m, center - 0.5 * m * h


def make_ball(n, center, radius, h):
    """Cells whose centre lies in the open ball; a cell is centred at ``center``."""
    n = check_real(n, "n", min_val=2, max_val=3, integer=True)
    radius = check_real(radius, "radius", min_val=0.0, include_min=False)
    center = np.broadcast_to(np.asarray(center, dtype=float), (n,))
    m, _ = _centered_axis(0.0, radius, h)
    origin = center - 0.5 * m * h
    dom = GridDomain(np.ones((m,) * n, dtype=bool), h, origin, check_connected=False)
    r2 = sum((x - c) ** 2 for x, c in zip(dom.mesh(), center))
    mask = r2 < radius ** 2
    return GridDomain(mask, h, origin,
                      meta={"kind": "ball", "center": center.tolist(), "radius": radius})


def make_cusp(psi, height, h, n=2, grid_height=None):
    """Cusp ``{0 <= x_n <= height, |x'| < psi(x_n)}`` at cell centres.

    The grid always has a cell column centred on ``x' = 0``, so the mask is
    connected down to the tip. ``grid_height`` (>= height) fixes a larger common
    grid, which is how nested truncations share cells.
    """
    psi = as_psi(psi)
    n = check_real(n, "n", min_val=2, max_val=3, integer=True)
    height = check_real(height, "height", min_val=0.0, include_min=False)
    h = check_real(h, "h", min_val=0.0, include_min=False)
    grid_height = height if grid_height is None else check_real(
        grid_height, "grid_height", min_val=height)
    rows = int(np.rint(grid_height / h))
    if rows == 0 or int(np.rint(height / h)) == 0:
        raise ResolutionError(f"h = {h} is too coarse; need h <= {height} to resolve the cusp")
    m, lateral0 = _centered_axis(0.0, psi(grid_height), h)
    shape = (m,) * (n - 1) + (rows,)
    origin = [lateral0] * (n - 1) + [0.0]
    grid = GridDomain(np.ones(shape, dtype=bool), h, origin, check_connected=False)
    coords = grid.mesh()
    xn = coords[-1]
    radial = np.sqrt(sum(c ** 2 for c in coords[:-1]))
    mask = (xn <= height) & (radial < psi(xn))
    if not mask.any():
        raise ResolutionError(f"no cell centre inside the cusp; use h <= {height}")
    return GridDomain(mask, h, origin,
                      meta={"kind": "cusp", "phi": str(psi.phi), "height": height})


def make_exhaustion(base, scales, h):
    """Nested truncations of one prototype on a common grid.

    ``base(scale, h, extent)`` must return the truncation at ``scale`` on the grid of
    the largest truncation ``extent`` (for instance ``CuspPrototype``).
    """
    scales = [check_real(s, "scale", min_val=0.0, include_min=False) for s in scales]
    if len(scales) == 0 or any(b <= a for a, b in zip(scales, scales[1:])):
        raise ParameterError(f"scales must be strictly increasing, got {scales}")
    extent = scales[-1]
    domains = [base(s, h, extent) for s in scales]
    for small, large in zip(domains, domains[1:]):
        assert small.shape == large.shape, "exhaustion grids differ"
        assert not np.any(small.mask & ~large.mask), "exhaustion is not nested"
    return domains


@dataclass(frozen=True)
class CuspPrototype:
    """Unbounded cusp ``|x'| < psi(x_n)``; truncations via ``make_cusp``."""

    psi: object
    n: int = 2

    def __call__(self, scale, h, extent=None):
        return make_cusp(self.psi, scale, h, n=self.n, grid_height=extent)


# -- mushroom domain -------------------------------------------------------

def default_attach_heights(radii):
    """Pack caps from wall coordinate 1 upward with gaps r_k / 2; returns cap centres."""
    heights = []
    start = 1.0
    for r in radii:
        heights.append(start + r)
        start += 2.0 * r + 0.5 * r
    return heights


@dataclass(frozen=True)
class MushroomSpec:
    """Cap-and-neck attachments on the walls of a truncated quarter space.

    ``attach_heights`` are the wall coordinates of the cap centres; caps occupy
    ``[c - r, c + r]`` along the wall and must lie within distance [1, 4] of the origin.
    """

    radii: tuple
    phi: PhiSpec
    attach_heights: tuple = None
    truncation: float = 5.0

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
            raise ParameterError("radii must be positive and strictly decreasing")
        heights = self.attach_heights
        if heights is None:
            heights = default_attach_heights(radii)
        heights = tuple(float(c) for c in heights)
        if len(heights) != len(radii):
            raise ParameterError("one attach height per radius is required")
        object.__setattr__(self, "attach_heights", heights)
        check_real(self.truncation, "truncation", min_val=4.0, include_min=False)
        for m, r in enumerate(radii):
            if eval_phi(self.phi, r) > r * (1.0 + 1e-12):
                raise ParameterError(f"phi(r_m) > r_m for m = {m}; mushrooms need phi(r) <= r")
        intervals = sorted((c - r, c + r, m) for m, (c, r) in enumerate(zip(heights, radii)))
        for lo, hi, m in intervals:
            if lo < 1.0 or hi > 4.0:
                raise ParameterError(f"mushroom {m} leaves the wall band [1, 4]: [{lo}, {hi}]")
        for (lo1, hi1, m1), (lo2, hi2, m2) in zip(intervals, intervals[1:]):
            if lo2 < hi1:
                raise ParameterError(f"mushrooms {m1} and {m2} overlap on the wall")

    @classmethod
    def dyadic(cls, phi, m_min=2, m_max=6, truncation=5.0):
        """Radii r_m = 2**-m for m = m_min..m_max with packed attachment."""
        return cls(tuple(2.0 ** -m for m in range(m_min, m_max + 1)), phi,
                   truncation=truncation)

    def component_measures(self, n=2):
        """Exact measures: (quarter box, [(cap, neck) per mushroom])."""
        out = []
        for r in self.radii:
            phi_r = float(eval_phi(self.phi, r))
            out.append(((2.0 * r) ** n, r * (2.0 * phi_r) ** (n - 1)))
        return self.truncation ** n, out


def make_mushroom_domain(spec, h, n=2):
    """Rasterise the quarter box with mushrooms on walls x1 = 0 and (mirrored) x2 = 0.

    Mushrooms whose neck is narrower than ``2h`` (phi(r) < 2h) are dropped with a
    warning; ``meta['kept']`` lists the retained indices.
    """
    n = check_real(n, "n", min_val=2, max_val=3, integer=True)
    h = check_real(h, "h", min_val=0.0, include_min=False)
    kept, dropped = [], []
    for m, r in enumerate(spec.radii):
        (kept if eval_phi(spec.phi, r) >= 2.0 * h else dropped).append(m)
    if dropped:
        warnings.warn(f"mushrooms {dropped} are not resolvable at h = {h} and were dropped",
                      stacklevel=2)
    reach = max((3.0 * spec.radii[m] for m in kept), default=0.0)
    pad = int(np.ceil(reach / h)) + 1
    cells_t = int(np.rint(spec.truncation / h))
    shape = (pad + cells_t,) * n
    origin = [-pad * h] * n
    grid = GridDomain(np.ones(shape, dtype=bool), h, origin, check_connected=False)
    x = grid.mesh()
    mask = np.ones(shape, dtype=bool)
    for c in x:
        mask &= (c > 0) & (c < spec.truncation)

    def slab(coord, lo, hi):
        return (coord > lo) & (coord < hi)

    for m in kept:
        r = spec.radii[m]
        c = spec.attach_heights[m]
        w = float(eval_phi(spec.phi, r))
        for wall, along in ((0, 1), (1, 0)):
            others = [k for k in range(n) if k not in (wall,)]
            neck = slab(x[wall], -r, 0.0)
            cap = slab(x[wall], -3.0 * r, -r)
            for k in others:
                neck &= slab(x[k], c - w, c + w)
                cap &= slab(x[k], c - r, c + r)
            mask |= neck | cap
    return GridDomain(mask, h, origin, meta={"kind": "mushroom", "kept": kept,
                                             "dropped": dropped})


# -- cigar condition -------------------------------------------------------

class CoreCurve:
    """Polygonal core curve with cumulative arc length."""

    def __init__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if len(pts) < 2:
            raise ParameterError("a core curve needs at least two points")
        seg = np.sqrt((np.diff(pts, axis=0) ** 2).sum(axis=1))
        if np.any(seg <= 0):
            raise ParameterError("consecutive curve points must differ")
        self.points = pts
        self.lengths = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self):
        return float(self.lengths[-1])

    def point_at(self, s):
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        return np.stack([np.interp(s, self.lengths, self.points[:, k])
                         for k in range(self.points.shape[1])], axis=-1)

    @classmethod
    def segment(cls, a, b, pieces=1):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        w = np.linspace(0.0, 1.0, pieces + 1)[:, None]
        return cls(a + w * (b - a))


CigarCheck = namedtuple("CigarCheck", ["ok", "worst_margin", "witness"])


def check_cigar(domain, curve, c_j, psi, samples=200):
    """Sampled check that balls B(x, psi(q(x)) / c_j) along ``curve`` lie in ``domain``.

    Only the given curve is certified; this is not a proof that the domain is a
    cigar John domain.
    """
    psi = as_psi(psi)
    c_j = check_real(c_j, "c_j", min_val=0.0, include_min=False)
    samples = check_real(samples, "samples", min_val=2, integer=True)
    _, inside = domain.locate(curve.points)
    if not inside.all():
        bad = int(np.flatnonzero(~inside)[0])
        raise CurveError(f"curve point {bad} at {curve.points[bad].tolist()} is outside the domain")
    s = np.linspace(0.0, curve.length, samples)
    pts = curve.point_at(s)
    q = np.minimum(s, curve.length - s)
    radii = psi(q) / c_j
    margins = domain.distance_to_outside(pts) - radii
    h, n = domain.h, domain.n
    shape = np.array(domain.shape)
    reach = radii + h * np.sqrt(n) / 2.0
    ok = True
    for x, rad, rr in zip(pts, radii, reach):
        if rad <= 0:
            continue
        lo = np.floor((x - rr - domain.origin) / h).astype(int)
        hi = np.floor((x + rr - domain.origin) / h).astype(int) + 1
        if np.any(lo < 0) or np.any(hi > shape):
            ok_i = False
        else:
            window = tuple(slice(a, b) for a, b in zip(lo, hi))
            sub = domain.mask[window]
            ctr = np.meshgrid(*[domain.origin[k] + (np.arange(lo[k], hi[k]) + 0.5) * h
                                for k in range(n)], indexing="ij")
            d2 = sum((c - xk) ** 2 for c, xk in zip(ctr, x))
            ok_i = bool(np.all(sub[d2 <= rr ** 2]))
        ok = ok and ok_i
    worst = int(np.argmin(margins))
    return CigarCheck(ok, float(margins[worst]), pts[worst])
