"""Cell-centred scalar fields, discrete gradients, and Lebesgue/Luxemburg norms.

All integrals are midpoint cell sums over the inside cells of a GridDomain.
"""

import csv
import io

import numpy as np

from ._validation import check_real
from .exceptions import BracketOverflowError, ParameterError, RegionError
from .domains import GridDomain


class ScalarField:
    """Values on the inside cells of a domain, ordered by ``domain.flat_index``."""

    def __init__(self, domain, values):
        values = np.array(values, dtype=float).reshape(-1)
        if values.shape != (domain.n_inside,):
            raise ParameterError(
                f"expected {domain.n_inside} values, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        values.flags.writeable = False
        self.domain = domain
        self.values = values

    def __repr__(self):
        return f"ScalarField({self.domain!r})"

    @classmethod
    def from_function(cls, domain, fun):
        """Sample ``fun(x)`` at inside cell centres; ``x`` has shape (n_inside, n)."""
        return cls(domain, fun(domain.centers))

    @classmethod
    def constant(cls, domain, c):
        return cls(domain, np.full(domain.n_inside, float(c)))

    def _compatible(self, other):
        if isinstance(other, ScalarField):
            if other.domain is not self.domain:
                raise ParameterError("fields live on different domains")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.domain, self.values + self._compatible(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.domain, self.values - self._compatible(other))

    def __mul__(self, c):
        return ScalarField(self.domain, self.values * self._compatible(c))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.domain, -self.values)

    def abs(self):
        return ScalarField(self.domain, np.abs(self.values))

    def on_grid(self, fill=0.0):
        return self.domain.to_grid(self.values, fill)

    def restrict(self, sub):
        """Restrict to a sub-domain on the same grid."""
        if sub.shape != self.domain.shape or np.any(sub.mask & ~self.domain.mask):
            raise ParameterError("sub-domain is not contained in the field's domain")
        return ScalarField(sub, self.on_grid().ravel()[sub.flat_index])

    def to_csv(self, path_or_buf=None):
        """CSV with columns ``cell, x0, ..., x{n-1}, value``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n = self.domain.n
        writer.writerow(["cell"] + [f"x{k}" for k in range(n)] + ["value"])
        for idx, x, v in zip(self.domain.flat_index, self.domain.centers, self.values):
            writer.writerow([int(idx)] + [repr(float(c)) for c in x] + [repr(float(v))])
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)
        return None


def gradient_magnitude(u, return_diagnostics=False):
    """|grad u| by central differences, one-sided next to the mask edge.

    Cells with no inside neighbour along an axis get a zero component on that
    axis; ``return_diagnostics`` adds a boolean (n_inside, n) array flagging them.
    """
    dom = u.domain
    grid = u.on_grid()
    mask = dom.mask
    h = dom.h
    grad_sq = np.zeros(dom.shape)
    isolated = np.zeros(dom.shape + (dom.n,), dtype=bool)
    for axis in range(dom.n):
        fwd = np.zeros(dom.shape, dtype=bool)
        bwd = np.zeros(dom.shape, dtype=bool)
        sl_hi = [slice(None)] * dom.n
        sl_lo = [slice(None)] * dom.n
        sl_hi[axis] = slice(1, None)
        sl_lo[axis] = slice(None, -1)
        sl_hi, sl_lo = tuple(sl_hi), tuple(sl_lo)
        fwd[sl_lo] = mask[sl_hi]
        bwd[sl_hi] = mask[sl_lo]
        up = np.zeros(dom.shape)
        down = np.zeros(dom.shape)
        up[sl_lo] = grid[sl_hi]
        down[sl_hi] = grid[sl_lo]
        d = np.zeros(dom.shape)
        both = fwd & bwd
        d[both] = (up[both] - down[both]) / (2.0 * h)
        only_f = fwd & ~bwd
        d[only_f] = (up[only_f] - grid[only_f]) / h
        only_b = bwd & ~fwd
        d[only_b] = (grid[only_b] - down[only_b]) / h
        isolated[..., axis] = mask & ~fwd & ~bwd
        grad_sq += d ** 2
    out = ScalarField(dom, np.sqrt(grad_sq).ravel()[dom.flat_index])
    if return_diagnostics:
        flags = isolated.reshape(-1, dom.n)[dom.flat_index]
        return out, flags
    return out


def lp_norm(u, p):
    """(sum |u|**p h**n)**(1/p)."""
    p = check_real(p, "p", min_val=1.0)
    v = np.abs(u.values)
    scale = v.max() if v.size else 0.0
    if scale == 0.0:
        return 0.0
    # factor out the maximum to avoid overflow for large p
    return float(scale * (np.sum((v / scale) ** p) * u.domain.cell_measure) ** (1.0 / p))


def modular(u, H, lam):
    """sum H(|u| / lam) h**n."""
    lam = check_real(lam, "lambda", min_val=0.0, include_min=False)
    v = np.abs(u.values) / lam
    try:
        vals = H(v)
    except BracketOverflowError as exc:
        bad = int(np.argmax(v))
        raise BracketOverflowError(f"{exc} (cell {int(u.domain.flat_index[bad])})") from exc
    return float(np.sum(vals) * u.domain.cell_measure)


def luxemburg_norm(u, H, rtol=1e-8):
    """inf{lam > 0 : modular(u, H, lam) <= 1} by bisection on log lam."""
    vmax = float(np.max(np.abs(u.values))) if u.values.size else 0.0
    if vmax == 0.0:
        return 0.0
    lo = hi = vmax
    for _ in range(2100):
        if modular(u, H, hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise BracketOverflowError("Luxemburg bracket expansion failed")
    for _ in range(2100):
        if modular(u, H, lo) > 1.0:
            break
        lo /= 2.0
    else:
        raise BracketOverflowError("Luxemburg bracket expansion failed")
    while hi / lo - 1.0 > rtol:
        mid = np.sqrt(lo * hi)
        if modular(u, H, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return float(hi)


def integral_average(u, over=None):
    """Mean of ``u`` over a sub-domain, a boolean cell mask, a ball ``(center, radius)`` or all of u's domain."""
    dom = u.domain
    if over is None:
        sel = np.ones(dom.n_inside, dtype=bool)
    elif isinstance(over, GridDomain):
        if over.shape != dom.shape:
            raise RegionError("region must share the field's grid")
        sel = over.mask.ravel()[dom.flat_index]
    elif isinstance(over, tuple) and len(over) == 2:
        center, radius = over
        d2 = ((dom.centers - np.asarray(center, dtype=float)) ** 2).sum(axis=1)
        sel = d2 <= float(radius) ** 2
    else:
        sel = np.asarray(over, dtype=bool).reshape(-1)
        if sel.shape == (int(np.prod(dom.shape)),):
            sel = sel[dom.flat_index]
    if not sel.any():
        raise RegionError("averaging region does not meet the domain")
    return float(np.mean(u.values[sel]))


def _golden_min(fun, a, b, tol):
    g = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def best_shift_norm(u, H, convex=None):
    """Minimise b -> ||u - b||_H over [min u, max u].

    For convex H the map is convex and a golden-section (ternary) search is used;
    otherwise a 256-point sweep seeds a local search on the best bracket.
    Returns ``(b, norm)``.
    """
    lo, hi = float(u.values.min()), float(u.values.max())
    if hi == lo:
        return lo, 0.0
    if convex is None:
        convex = bool(getattr(H, "is_pure_power", False))
    tol = 1e-6 * (hi - lo)

    def fun(b):
        return luxemburg_norm(u - b, H)

    if not convex:
        grid = np.linspace(lo, hi, 256)
        vals = np.array([fun(b) for b in grid])
        k = int(np.argmin(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    b, val = _golden_min(fun, lo, hi, tol)
    return float(b), float(val)
