"""The Orlicz function H built from psi, its conjugate, and the Hedberg split.

H is represented by ``F``, the functional inverse of the closed form

    F_inv(t) = scale * t**(1/p - 1) / psi(t**(-1/n))**(n - 1),   F_inv(0) = 0.

``F_inv`` is strictly increasing and bijective on [0, inf); ``F(t)/t`` is
strictly increasing and F is doubling with constant 2**(np/(n-p)).
F need not be convex; it is equivalent to an N-function, which is all the
norm computations downstream rely on.
"""

from collections import namedtuple

import numpy as np

from ._validation import (check_dimension_and_exponent, check_nonnegative, check_real,
                          restore)
from .exceptions import BracketOverflowError, DomainError, ParameterError
from .phi import PROBE_GRID, PhiSpec, PsiFunction, as_psi

LOG_T_MIN = np.log(1e-300)
LOG_T_MAX = np.log(1e300)
_TABLE_SIZE = 8193
_LOG_TOL = 1e-14
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def c_n_alpha(n, alpha):
    """Constant 2**(alpha(n-1)) / (2**n - 2**(alpha(n-1))) of the dyadic sum bound."""
    n = check_real(n, "n", min_val=2, integer=True)
    alpha = check_real(alpha, "alpha", min_val=1.0)
    if alpha * (n - 1) >= n:
        raise ParameterError(
            f"alpha must be < n/(n-1) = {n / (n - 1)} for C(n, alpha) to exist, got {alpha}")
    return 2.0 ** (alpha * (n - 1)) / (2.0 ** n - 2.0 ** (alpha * (n - 1)))


def _illinois(fun, lo, hi, flo, fhi, tol=_LOG_TOL, maxiter=200):
    """Vectorised Illinois (modified regula falsi) on bracketing arrays.

    ``flo <= 0 <= fhi`` elementwise; returns the root estimates.
    """
    lo, hi, flo, fhi = (np.array(a, dtype=float) for a in (lo, hi, flo, fhi))
    x = np.where(fhi == 0, hi, lo)
    active = (hi - lo > tol) & (flo != 0) & (fhi != 0)
    side = np.zeros(lo.shape, dtype=int)
    for _ in range(maxiter):
        if not active.any():
            break
        a, b, fa, fb = lo[active], hi[active], flo[active], fhi[active]
        c = b - fb * (b - a) / (fb - fa)
        # guard against stagnation at an endpoint
        bad = ~((c > a) & (c < b))
        c[bad] = 0.5 * (a[bad] + b[bad])
        fc = fun(c, active)
        idx = np.flatnonzero(active)
        left = fc < 0
        right = fc > 0
        exact = fc == 0
        # c replaces lo when f(c) < 0, hi when f(c) > 0; halve the stale end's value
        stale_hi = left & (side[idx] == -1)
        stale_lo = right & (side[idx] == 1)
        lo[idx[left]] = c[left]
        flo[idx[left]] = fc[left]
        fhi[idx[stale_hi]] *= 0.5
        hi[idx[right]] = c[right]
        fhi[idx[right]] = fc[right]
        flo[idx[stale_lo]] *= 0.5
        side[idx] = np.where(left, -1, np.where(right, 1, 0))
        x[idx] = c
        done = exact | (hi[idx] - lo[idx] <= tol) | (np.abs(fc) <= 0.25 * tol)
        active[idx[done]] = False
    return x


class OrliczH:
    """The Orlicz function of a regularity function psi, dimension n and exponent p.

    Parameters
    ----------
    psi : PsiFunction, PhiSpec or str
    p : float in [1, n)
    n : int >= 2
    scale : float, default 1.0
        Prefactor of F_inv. Ignored when ``hedberg=True``.
    hedberg : bool, default False
        Use the normalisation scale = C(n, alpha) + 1 with alpha = ``alpha``
        (defaults to ``phi.alpha_star``).
    """

    def __init__(self, psi, p, n, scale=1.0, hedberg=False, alpha=None):
        self.psi = as_psi(psi)
        self.n, self.p = check_dimension_and_exponent(n, p)
        self.hedberg = bool(hedberg)
        if self.hedberg:
            self.alpha = self.phi.alpha_star if alpha is None else alpha
            self.scale = c_n_alpha(self.n, self.alpha) + 1.0
        else:
            self.alpha = alpha
            self.scale = check_real(scale, "scale", min_val=0.0, include_min=False)
        self._log_scale = np.log(self.scale)
        self._small_exponent = (self.n - self.p) / (self.n * self.p)
        self._small_log_coeff = self._log_scale + (1 - self.n) * np.log(self.psi.phi_at_one)
        self._build_table()

    @property
    def phi(self):
        return self.psi.phi

    def __repr__(self):
        return (f"OrliczH(phi={self.phi}, p={self.p!r}, n={self.n!r}, scale={self.scale!r})")

    @property
    def delta2_constant(self):
        """Doubling constant 2**(np/(n-p)) of F."""
        return 2.0 ** (self.n * self.p / (self.n - self.p))

    @property
    def small_exponent(self):
        """Exponent np/(n-p) of F near the origin."""
        return 1.0 / self._small_exponent

    @property
    def large_exponent(self):
        """Exponent of F at infinity for the power family, np/(n - np + sp(n-1))."""
        n, p, s = self.n, self.p, self.phi.exponent
        return n * p / (n - n * p + s * p * (n - 1))

    @property
    def satisfies_hypotheses(self):
        """True when alpha_star < n/(n-1), the range where F(t)/t -> infinity."""
        return self.phi.alpha_star < self.n / (self.n - 1.0)

    @property
    def is_pure_power(self):
        """True when F is a single power on all of [0, inf) (phi linear)."""
        return self.phi.family == "power" and self.phi.s == 1.0

    # -- closed form ---------------------------------------------------
    def log_F_inv(self, log_t):
        log_t = np.asarray(log_t, dtype=float)
        return (self._log_scale + (1.0 / self.p - 1.0) * log_t
                - (self.n - 1) * self.psi.log(np.exp(-log_t / self.n)))

    def F_inv(self, t):
        arr, scalar = as_nonneg(t)
        out = np.zeros_like(arr)
        pos = arr > 0
        out[pos] = np.exp(self.log_F_inv(np.log(arr[pos])))
        return restore(out, scalar)

    # -- inversion -----------------------------------------------------
    def _build_table(self):
        self._tab_x = np.linspace(LOG_T_MIN, LOG_T_MAX, _TABLE_SIZE)
        self._tab_y = self.log_F_inv(self._tab_x)
        if not np.all(np.diff(self._tab_y) > 0):
            raise ParameterError("F_inv is not strictly increasing for these parameters")
        # F_inv(t) = F_inv(1) * t**((n-p)/(np)) exactly for t <= 1
        self._log_knot = self.log_F_inv(0.0)

    def log_H(self, log_u):
        """log F(u) for an array of log u."""
        log_u = np.asarray(log_u, dtype=float)
        out = np.empty_like(log_u)
        small = log_u <= self._log_knot
        out[small] = (log_u[small] - self._small_log_coeff) / self._small_exponent
        big = ~small
        if big.any():
            y = log_u[big]
            if np.any(y > self._tab_y[-1]):
                raise BracketOverflowError(
                    "bracket expansion for F exceeded 1e300; parameters are pathological "
                    f"for u = {np.exp(y.max())!r}")
            k = np.clip(np.searchsorted(self._tab_y, y), 1, _TABLE_SIZE - 1)
            lo, hi = self._tab_x[k - 1], self._tab_x[k]
            flo, fhi = self._tab_y[k - 1] - y, self._tab_y[k] - y

            def fun(x, active):
                return self.log_F_inv(x) - y[active]

            out[big] = _illinois(fun, lo, hi, flo, fhi)
        return out

    def H(self, u):
        """F(u): the unique t >= 0 with F_inv(t) = u."""
        arr, scalar = as_nonneg(u, "u")
        out = np.zeros_like(arr)
        pos = arr > 0
        if pos.any():
            log_u = np.full_like(arr, -np.inf)
            log_u[pos] = np.log(arr[pos])
            small = pos & (log_u <= self._log_knot)
            big = pos & ~small
            if small.any():
                out[small] = self._small_power(arr[small])
            if big.any():
                out[big] = np.exp(self.log_H(log_u[big]))
        return restore(out, scalar)

    def _small_power(self, u):
        # K u**q with u = m 2**e split exactly, so H(2u) = 2**q H(u) bit for bit
        # whenever q is an integer (and up to one rounding otherwise)
        q = self.small_exponent
        m, e = np.frexp(u)
        qe = q * e
        k = np.floor(qe)
        frac = np.exp2(qe - k)
        coeff = np.exp(-self._small_log_coeff * q)
        return np.ldexp((coeff * m ** q) * frac, k.astype(int))

    __call__ = H

    inverse = F_inv

    # -- conjugate -----------------------------------------------------
    def _slope_root(self, s):
        """t > 0 with F(t) / t = s, using the table of F_inv."""
        log_s = np.log(s)
        # along the table, F(y)/y at y = F_inv(x) equals exp(x - y)
        slope = self._tab_x - self._tab_y
        if np.any(log_s > slope[-1]) or np.any(log_s < slope[0]):
            raise BracketOverflowError("slope bracket for the conjugate left [1e-300, 1e300]")
        k = np.clip(np.searchsorted(slope, log_s), 1, _TABLE_SIZE - 1)

        def fun(x, active):
            return x - self.log_F_inv(x) - log_s[active]

        x = _illinois(fun, self._tab_x[k - 1], self._tab_x[k],
                      slope[k - 1] - log_s, slope[k] - log_s)
        return np.exp(self.log_F_inv(x))

    def conjugate(self, s, iterations=120):
        """Legendre transform sup_{t >= 0} (s t - F(t)) by golden-section search."""
        arr, scalar = as_nonneg(s, "s")
        out = np.zeros_like(arr)
        pos = arr > 0
        if pos.any():
            sv = arr[pos]
            a = np.zeros_like(sv)
            b = self._slope_root(sv)
            c = b - _GOLDEN * (b - a)
            d = a + _GOLDEN * (b - a)
            fc = sv * c - self.H(c)
            fd = sv * d - self.H(d)
            for _ in range(iterations):
                left = fc > fd
                # maximiser in [a, d] when f(c) > f(d), else in [c, b]
                b = np.where(left, d, b)
                a = np.where(left, a, c)
                new = np.where(left, b - _GOLDEN * (b - a), a + _GOLDEN * (b - a))
                fnew = sv * new - self.H(new)
                c, d, fc, fd = (np.where(left, new, d), np.where(left, c, new),
                                np.where(left, fnew, fd), np.where(left, fc, fnew))
            best = np.maximum(np.maximum(fc, fd), 0.0)
            out[pos] = best
        return restore(out, scalar)

    def conjugate_inverse(self, t):
        """(H*)^{-1}(t) by bisection on log s."""
        arr, scalar = as_nonneg(t)
        out = np.zeros_like(arr)
        for i, tv in np.ndenumerate(arr):
            if tv == 0:
                continue
            lo = hi = max(tv / max(self.F_inv(tv), 1e-300), 1e-300)
            while self.conjugate(lo) > tv:
                lo /= 2.0
            while self.conjugate(hi) < tv:
                hi *= 2.0
                if hi > 1e300:
                    raise BracketOverflowError("conjugate inverse bracket exceeded 1e300")
            for _ in range(200):
                mid = np.sqrt(lo * hi)
                if self.conjugate(mid) < tv:
                    lo = mid
                else:
                    hi = mid
                if hi / lo - 1.0 < 1e-13:
                    break
            out[i] = np.sqrt(lo * hi)
        return restore(out, scalar)

    # -- certificates --------------------------------------------------
    def check_invariants(self, grid=PROBE_GRID, rtol=1e-10):
        """Monotonicity, slope monotonicity and doubling on a probe grid."""
        finv = self.F_inv(grid)
        vals = self.H(grid)
        slope = vals / grid
        return {
            "F_inv_increasing": bool(np.all(np.diff(finv) > 0)),
            "slope_increasing": bool(np.all(np.diff(slope) > 0)),
            "delta2": bool(np.all(self.H(2.0 * grid)
                                  <= self.delta2_constant * vals * (1.0 + rtol))),
        }


class PowerOrlicz:
    """H(t) = t**q with exact inverse and conjugate, used as an injected target."""

    is_pure_power = True

    def __init__(self, q):
        self.q = check_real(q, "q", min_val=1.0)

    def __repr__(self):
        return f"PowerOrlicz(q={self.q!r})"

    @property
    def delta2_constant(self):
        return 2.0 ** self.q

    def H(self, u):
        arr, scalar = as_nonneg(u, "u")
        return restore(arr ** self.q, scalar)

    __call__ = H

    def F_inv(self, t):
        arr, scalar = as_nonneg(t)
        return restore(arr ** (1.0 / self.q), scalar)

    inverse = F_inv

    def conjugate(self, s):
        arr, scalar = as_nonneg(s, "s")
        q = self.q
        if q == 1.0:
            out = np.where(arr <= 1.0, 0.0, np.inf)
        else:
            out = (q - 1.0) * (arr / q) ** (q / (q - 1.0))
        return restore(out, scalar)

    def conjugate_inverse(self, t):
        arr, scalar = as_nonneg(t)
        q = self.q
        if q == 1.0:
            raise ParameterError("the conjugate of t is not invertible")
        return restore(q * (arr / (q - 1.0)) ** ((q - 1.0) / q), scalar)


def as_nonneg(t, name="t"):
    return check_nonnegative(t, name)


# -- module-level operations ----------------------------------------------

def eval_F_inv(H, t):
    """Closed-form inverse F_inv(t); raises DomainError for t < 0."""
    return H.F_inv(t)


def eval_H(H, u):
    """F(u) by bracketed monotone root finding (relative tolerance 1e-12)."""
    return H.H(u)


def conjugate_H(H, s):
    """Legendre transform of F at s >= 0."""
    return H.conjugate(s)


class HedbergSplit:
    """The two-scale split functions h(t) = C(n,alpha) t**n / psi(t)**(n-1) and delta(t) = t**(-p/n)."""

    def __init__(self, psi, n, p, alpha):
        self.psi = as_psi(psi)
        self.n, self.p = check_dimension_and_exponent(n, p)
        self.alpha = alpha
        self.c_n_alpha = c_n_alpha(self.n, alpha)

    def h(self, t):
        arr, scalar = check_nonnegative(t)
        out = self.c_n_alpha * arr ** self.n / np.where(arr > 0, self.psi(arr), 1.0) ** (self.n - 1)
        return restore(out, scalar)

    def delta(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr <= 0):
            raise DomainError("delta is defined for t > 0")
        return restore(arr ** (-self.p / self.n), arr.ndim == 0)

    def combined(self, t):
        """h(delta(t)) t + psi(delta(t))**(1-n) delta(t)**(n(1-1/p)); equals F_inv(t**p)."""
        d = self.delta(t)
        return (self.h(d) * t
                + self.psi(d) ** (1 - self.n) * d ** (self.n * (1.0 - 1.0 / self.p)))


HedbergCheck = namedtuple("HedbergCheck", ["partial_sum", "bound"])


def hedberg_sum_check(psi, t, K, alpha, n):
    """Truncated dyadic sum and its bound C(n,alpha) t**n / psi(t)**(n-1).

    Requires ``alpha`` in [alpha_star, n/(n-1)) so that t**alpha/psi(t) is non-decreasing.
    """
    psi = as_psi(psi)
    n = check_real(n, "n", min_val=2, integer=True)
    K = check_real(K, "K", min_val=1, integer=True)
    t = check_real(t, "t", min_val=0.0, include_min=False)
    cna = c_n_alpha(n, alpha)
    if alpha < psi.phi.alpha_star * (1.0 - 1e-12):
        raise ParameterError(
            f"alpha={alpha} is below alpha_star={psi.phi.alpha_star}; t**alpha/psi is not monotone")
    scales = t * 2.0 ** -np.arange(1, K + 1, dtype=float)
    terms = scales ** n / psi(scales) ** (n - 1)
    # sum smallest terms first
    partial = float(np.sum(terms[::-1]))
    bound = cna * t ** n / psi(t) ** (n - 1)
    return HedbergCheck(partial, float(bound))


JohnConstants = namedtuple(
    "JohnConstants", ["alpha", "beta", "alpha_over_dist_bound", "asymptotic_limit"])


def john_constants(c_j, diam, psi):
    """John constants of a bounded phi-cigar John domain with constant ``c_j``.

    Returns ``alpha``, ``beta``, the bound on ``alpha / dist(x0, boundary)`` for the
    chosen John centre, and its large-diameter limit ``32 c_j**5 / phi(1)**4``.
    """
    psi = as_psi(psi)
    c_j = check_real(c_j, "c_j", min_val=0.0, include_min=False)
    diam = check_real(diam, "diam", min_val=0.0, include_min=False)
    phi1 = psi.phi_at_one
    beta = max(2.0, c_j * diam / phi1)
    quarter = psi(diam / 4.0)
    inner = psi(quarter / (2.0 * c_j))
    alpha = c_j * phi1 * beta ** 2 / inner
    ratio = c_j ** 2 * phi1 * beta ** 2 / (inner * quarter)
    return JohnConstants(alpha, beta, ratio, 32.0 * c_j ** 5 / phi1 ** 4)


def sharpness_diagnostic(phi, n, q, t):
    """t**n K(1 / phi(t)**(n-1)) for K(t) = t**q; diverges as t -> 0 when K is too strong."""
    if not isinstance(phi, PhiSpec):
        phi = as_psi(phi).phi
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("t must be > 0")
    log_val = n * np.log(arr) - q * (n - 1) * phi.log(arr)
    return restore(np.exp(log_val), arr.ndim == 0)


__all__ = [
    "OrliczH", "PowerOrlicz", "PsiFunction", "PhiSpec", "HedbergSplit", "c_n_alpha",
    "eval_F_inv", "eval_H", "conjugate_H", "hedberg_sum_check", "john_constants",
    "sharpness_diagnostic",
]
