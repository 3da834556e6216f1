"""Modified Riesz potential, discrete maximal operator, and the pointwise estimate experiment."""

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_real, check_random_state
from .exceptions import ConfigurationError, ParameterError
from .fields import ScalarField, lp_norm
from .phi import as_psi
from .report import ExperimentReport

logger = logging.getLogger(__name__)

_UNIT_BALL_VOLUME = {2: np.pi, 3: 4.0 * np.pi / 3.0}
_SPHERE_AREA = {2: 2.0 * np.pi, 3: 4.0 * np.pi}
_CHUNK_ELEMENTS = 2 ** 23


def self_cell_integral(psi, h, n, quad_points=64, decades=40.0):
    """Integral of psi(|z|)**(1-n) over the ball with the measure of one cell.

    Gauss-Legendre in log r on ``quad_points`` nodes, plus a power-law tail below
    ``rho * exp(-decades)`` extrapolated from the local log slope.
    """
    psi = as_psi(psi)
    rho = h * (1.0 / _UNIT_BALL_VOLUME[n]) ** (1.0 / n)
    x, w = np.polynomial.legendre.leggauss(quad_points)
    lo, hi = np.log(rho) - decades, np.log(rho)
    u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)

    def log_integrand(uu):
        # r**n psi(r)**(1-n) in the variable u = log r
        return n * uu + (1 - n) * psi.log(np.exp(uu))

    vals = np.exp(log_integrand(u))
    if not np.all(np.isfinite(vals)):
        raise ConfigurationError("psi vanishes at a positive radius")
    body = 0.5 * (hi - lo) * np.sum(w * vals)
    slope = (log_integrand(lo + 1e-3) - log_integrand(lo)) / 1e-3
    if slope <= 0:
        raise ConfigurationError("self-cell integral diverges: psi(r)**(1-n) r**(n-1) is not integrable")
    tail = np.exp(log_integrand(lo)) / slope
    return float(_SPHERE_AREA[n] * (body + tail))


def kernel_table(domain, psi, quad_points=64):
    """h**n / psi(h |k|)**(n-1) for integer offsets k, the self term at k = 0."""
    psi = as_psi(psi)
    n, h = domain.n, domain.h
    axes = np.meshgrid(*[np.arange(s, dtype=float) for s in domain.shape], indexing="ij")
    dist = h * np.sqrt(sum(a ** 2 for a in axes))
    table = np.zeros(domain.shape)
    pos = dist > 0
    denom = np.exp((n - 1) * psi.log(dist[pos]))
    if np.any(denom == 0):
        raise ConfigurationError("psi(r) = 0 at some r > 0")
    table[pos] = h ** n / denom
    table[(0,) * n] = self_cell_integral(psi, h, n, quad_points)
    return table


def _apply_kernel(domain, table, values, eval_index):
    """Direct sums sum_y K(x - y) values(y) for x in ``eval_index``; values is (N, T)."""
    idx = domain.cell_index
    targets = idx[eval_index]
    out = np.empty((len(eval_index), values.shape[1]))
    chunk = max(1, _CHUNK_ELEMENTS // max(1, idx.shape[0]))
    for start in range(0, len(targets), chunk):
        block = targets[start:start + chunk]
        offsets = np.abs(block[:, None, :] - idx[None, :, :])
        kern = table[tuple(offsets[..., k] for k in range(domain.n))]
        out[start:start + chunk] = kern @ values
    return out


@dataclass
class PotentialResult:
    """Potential values at the evaluation cells, the analytic self-cell contributions, and h."""

    values: np.ndarray
    eval_index: np.ndarray
    singular_correction: np.ndarray
    h_used: float
    domain: object

    @property
    def field(self):
        if len(self.eval_index) != self.domain.n_inside:
            raise ParameterError("potential was evaluated on a subset of cells")
        return ScalarField(self.domain, self.values)


def _eval_index(domain, eval_points):
    if eval_points is None:
        return np.arange(domain.n_inside)
    arr = np.asarray(eval_points)
    if arr.dtype == bool:
        return np.flatnonzero(arr.reshape(-1))
    return arr.astype(int).reshape(-1)


def riesz_potential(f, psi, eval_points=None, quad_points=64):
    """Integral of |f(y)| / psi(|x - y|)**(n-1) at evaluation cells x.

    Off-diagonal cells contribute |f(y)| h**n / psi(centre distance)**(n-1); the
    evaluation cell itself contributes |f(x)| times the self-cell integral.
    ``eval_points`` selects inside cells (boolean mask or integer positions).
    """
    psi = as_psi(psi)
    dom = f.domain
    index = _eval_index(dom, eval_points)
    table = kernel_table(dom, psi, quad_points)
    absf = np.abs(f.values)
    vals = _apply_kernel(dom, table, absf[:, None], index)[:, 0]
    corr = absf[index] * table[(0,) * dom.n]
    return PotentialResult(vals, index, corr, dom.h, dom)


def _row_cumsum(grid):
    c = np.cumsum(grid, axis=-1)
    pad = [(0, 0)] * (grid.ndim - 1) + [(1, 0)]
    return np.pad(c, pad)


def ball_sums(grid, radius_cells):
    """Sum of ``grid`` over integer offsets with |k| < radius_cells (zero outside the grid)."""
    n = grid.ndim
    if radius_cells <= 1.0:
        # only the centre cell; avoids cumsum round-off
        return grid.astype(float).copy()
    R = int(np.ceil(radius_cells))
    padded = np.pad(grid, R)
    csum = _row_cumsum(padded)
    out = np.zeros(grid.shape)
    L = grid.shape[-1]
    r2 = radius_cells ** 2
    ranges = [range(-R, R + 1)] * (n - 1)
    for offs in np.array(np.meshgrid(*ranges, indexing="ij")).reshape(n - 1, -1).T:
        rem = r2 - float(np.sum(offs ** 2))
        if rem <= 0:
            continue
        w = int(np.ceil(np.sqrt(rem))) - 1
        sl = tuple(slice(R + o, R + o + s) for o, s in zip(offs, grid.shape[:-1]))
        rows = csum[sl]
        hi = rows[..., R + w + 1:R + w + 1 + L]
        lo = rows[..., R - w:R - w + L]
        out += hi - lo
    return out


def default_radii(domain):
    """h, 2h, 4h, ... up to the first rung reaching the domain diameter."""
    radii = [domain.h]
    diam = max(domain.diameter, domain.h)
    while radii[-1] < diam:
        radii.append(2.0 * radii[-1])
    return radii


def maximal_function(f, radii=None):
    """Discrete centred maximal function of |f| over balls ``{y : |x - y| < r}`` within the domain.

    A ball of radius ``h`` contains only its centre cell, so ``Mf >= |f|`` whenever
    ``h`` is among the radii.
    """
    dom = f.domain
    radii = default_radii(dom) if radii is None else list(radii)
    if not radii or any(r <= 0 for r in radii):
        raise ParameterError("radii must be a nonempty list of positive numbers")
    grid = np.abs(f.on_grid())
    count = dom.mask.astype(float)
    best = np.zeros(dom.n_inside)
    for r in radii:
        rc = r / dom.h
        sums = ball_sums(grid, rc).ravel()[dom.flat_index]
        cnt = ball_sums(count, rc).ravel()[dom.flat_index]
        best = np.maximum(best, sums / cnt)
    return ScalarField(dom, best)


# -- random test fields ----------------------------------------------------

def draw_bumps(domain, rng, max_bumps=5, min_width=None):
    """Random Gaussian-bump parameters inside ``domain``: list of (centre, width, amplitude)."""
    h = domain.h
    diam = max(domain.diameter, 4.0 * h)
    lo = 4.0 * h if min_width is None else min_width
    hi = max(diam / 4.0, lo)
    k = int(rng.integers(1, max_bumps + 1))
    cells = domain.centers[rng.integers(0, domain.n_inside, size=k)]
    centers = cells + (rng.random((k, domain.n)) - 0.5) * h
    widths = lo + (hi - lo) * rng.random(k)
    amps = 0.5 + rng.random(k)
    return [(c, w, a) for c, w, a in zip(centers, widths, amps)]


def bump_field(domain, bumps):
    x = domain.centers
    vals = np.zeros(domain.n_inside)
    for c, w, a in bumps:
        vals += a * np.exp(-((x - c) ** 2).sum(axis=1) / (2.0 * w ** 2))
    return ScalarField(domain, vals)


def _pointwise_ratios(domain, H, psi, p, fields, radii=None):
    """Per field, the max over cells of H(potential) / (Mf)**p (cells with Mf > 1e-14)."""
    table = kernel_table(domain, psi)
    absvals = np.stack([np.abs(f.values) for f in fields], axis=1)
    pots = _apply_kernel(domain, table, absvals, np.arange(domain.n_inside))
    out = []
    for j, f in enumerate(fields):
        mf = maximal_function(f, radii).values
        ok = mf > 1e-14
        ratio = H(pots[ok, j]) / mf[ok] ** p
        out.append(float(ratio.max()))
    return out


def pointwise_estimate_experiment(domain, H, psi, p, trials, seed=None, refine=True,
                                  radii=None):
    """Empirical constant of H(I f) <= C (Mf)**p over random fields with ||f||_p = 1.

    Each trial draws 1-5 Gaussian bumps (widths in [4h, diam/4]), normalises, and
    records the largest ratio over cells. With ``refine`` the same continuous
    fields are re-evaluated on the twice-refined grid.
    """
    trials = check_real(trials, "trials", min_val=1, integer=True)
    p = check_real(p, "p", min_val=1.0)
    psi = as_psi(psi)
    rng = check_random_state(seed)
    draws = [draw_bumps(domain, rng) for _ in range(trials)]
    levels = [domain, domain.refine()] if refine else [domain]
    per_level = []
    skipped = set()
    for dom in levels:
        fields = []
        for t, bumps in enumerate(draws):
            f = bump_field(dom, bumps)
            norm = lp_norm(f, p)
            if norm == 0.0 or not np.isfinite(norm):
                logger.warning("trial %d skipped: degenerate field", t)
                skipped.add(t)
                fields.append(None)
                continue
            fields.append(f * (1.0 / norm))
        used = [f for f in fields if f is not None]
        ratios = iter(_pointwise_ratios(dom, H, psi, p, used, radii)) if used else iter(())
        per_level.append([next(ratios) if f is not None else float("nan") for f in fields])
    columns = ["trial", "bumps", "cemp_h"] + (["cemp_h2"] if refine else [])
    report = ExperimentReport(
        "pointwise",
        config={"n": domain.n, "p": p, "phi": str(psi.phi), "h": domain.h,
                "trials": trials, "seed": seed, "H": repr(H)},
        columns=columns)
    for t, bumps in enumerate(draws):
        row = {"trial": t, "bumps": len(bumps), "cemp_h": per_level[0][t]}
        if refine:
            row["cemp_h2"] = per_level[1][t]
        report.add_row(**row)
    cemp = [float(np.nanmax(level)) if np.any(np.isfinite(level)) else float("nan")
            for level in per_level]
    report.summary["cemp"] = cemp[0]
    report.summary["skipped"] = sorted(skipped)
    report.refinement.append({"h": domain.h, "cemp": cemp[0]})
    if refine:
        report.summary["cemp_refined"] = cemp[1]
        report.summary["refinement_ratio"] = cemp[1] / cemp[0]
        report.refinement.append({"h": domain.h / 2.0, "cemp": cemp[1]})
    return report


# -- estimator-style wrappers ------------------------------------------------

def _as_matrix(X, domain):
    if isinstance(X, ScalarField):
        X = X.values[None, :]
    X = check_array(X, ensure_2d=True, dtype=float)
    if X.shape[1] != domain.n_inside:
        raise ParameterError(f"expected {domain.n_inside} cell values per row, got {X.shape[1]}")
    return X


class RieszPotential(TransformerMixin, BaseEstimator):
    """Transformer mapping field rows (n_fields, n_inside) to potential rows.

    Parameters
    ----------
    domain : GridDomain
    phi : PhiSpec or str
    eval_points : array-like, optional
        Subset of inside cells to evaluate at.
    quad_points : int, default 64
    """

    def __init__(self, domain, phi="power:1", eval_points=None, quad_points=64):
        self.domain = domain
        self.phi = phi
        self.eval_points = eval_points
        self.quad_points = quad_points

    def fit(self, X=None, y=None):
        self.psi_ = as_psi(self.phi)
        self.kernel_ = kernel_table(self.domain, self.psi_, self.quad_points)
        self.eval_index_ = _eval_index(self.domain, self.eval_points)
        return self

    def transform(self, X):
        check_is_fitted(self, "kernel_")
        X = np.abs(_as_matrix(X, self.domain))
        return _apply_kernel(self.domain, self.kernel_, X.T, self.eval_index_).T


class MaximalFunction(TransformerMixin, BaseEstimator):
    """Transformer applying the discrete centred maximal operator row by row."""

    def __init__(self, domain, radii=None):
        self.domain = domain
        self.radii = radii

    def fit(self, X=None, y=None):
        self.radii_ = default_radii(self.domain) if self.radii is None else list(self.radii)
        return self

    def transform(self, X):
        check_is_fitted(self, "radii_")
        X = _as_matrix(X, self.domain)
        return np.stack([maximal_function(ScalarField(self.domain, row), self.radii_).values
                         for row in X])


class PointwiseConstantEstimator(BaseEstimator):
    """Estimate the constant of the pointwise estimate on a domain.

    ``fit(domain)`` runs :func:`pointwise_estimate_experiment`; the result is in
    ``constant_``, ``trial_max_`` and ``report_``.
    """

    def __init__(self, phi="power:1", p=1.0, trials=50, hedberg=False, refine=True,
                 random_state=None):
        self.phi = phi
        self.p = p
        self.trials = trials
        self.hedberg = hedberg
        self.refine = refine
        self.random_state = random_state

    def fit(self, domain, y=None):
        from .orlicz import OrliczH

        psi = as_psi(self.phi)
        H = OrliczH(psi, self.p, domain.n, hedberg=self.hedberg)
        self.report_ = pointwise_estimate_experiment(
            domain, H, psi, self.p, self.trials, seed=self.random_state, refine=self.refine)
        self.constant_ = self.report_.summary["cemp"]
        self.trial_max_ = np.array(self.report_.column("cemp_h"))
        return self
