"""Boundary regularity functions phi and their linear extension psi.

Two parametric families are supported:

* ``power:s``            phi(t) = t**s, s >= 1
* ``powerlog:alpha,beta`` phi(t) = t**alpha / log(e + 1/t)**beta, alpha >= 1, beta >= 0

``psi`` agrees with ``phi`` on [0, 1] and continues linearly, psi(t) = phi(1) * t, for t >= 1.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ._validation import check_nonnegative, check_real, restore
from .exceptions import ParameterError

PROBE_GRID = np.logspace(-8.0, 8.0, 200)


def _log_log_e_plus_inv(t):
    # log(log(e + 1/t)) without overflowing 1/t for tiny t
    log_t = np.log(t)
    return np.log(-log_t + np.log1p(np.e * t))


def _max_log_ratio(fun):
    """Maximise ``fun(log t)`` over t in (0, inf) by a bounded scalar search."""
    res = minimize_scalar(lambda x: -fun(x), bounds=(-40.0, 40.0), method="bounded",
                          options={"xatol": 1e-10})
    grid = np.linspace(-40.0, 40.0, 4001)
    return max(-res.fun, float(np.max(fun(grid))))


@dataclass(frozen=True)
class PhiSpec:
    """Parametric description of phi together with its certified constants.

    Parameters
    ----------
    family : {"power", "powerlog"}
    s : float
        Exponent of the power family.
    alpha, beta : float
        Parameters of the power-log family.
    alpha_star : float, optional
        An exponent with t**alpha_star / phi(t) non-decreasing. Derived if omitted.
    c_phi : float, optional
        Constant of the almost-increasing condition on phi(t)/t. Derived if omitted.
    delta2_phi : float, optional
        Doubling constant, phi(2t) <= delta2_phi * phi(t). Derived if omitted.
    """

    family: str
    s: float = 1.0
    alpha: float = 1.0
    beta: float = 0.0
    alpha_star: float = None
    c_phi: float = None
    delta2_phi: float = None

    def __post_init__(self):
        if self.family == "power":
            s = check_real(self.s, "s", min_val=1.0)
            object.__setattr__(self, "s", s)
            derived = (s, 1.0, 2.0 ** s)
        elif self.family == "powerlog":
            a = check_real(self.alpha, "alpha", min_val=1.0)
            b = check_real(self.beta, "beta", min_val=0.0)
            object.__setattr__(self, "alpha", a)
            object.__setattr__(self, "beta", b)
            derived = self._derive_powerlog_constants(a, b)
        else:
            raise ParameterError(f"unknown phi family {self.family!r}")
        for name, value in zip(("alpha_star", "c_phi", "delta2_phi"), derived):
            if getattr(self, name) is None:
                object.__setattr__(self, name, float(value))
        check_real(self.c_phi, "c_phi", min_val=1.0)
        check_real(self.delta2_phi, "delta2_phi", min_val=1.0)

    @staticmethod
    def _derive_powerlog_constants(a, b):
        if b == 0.0:
            return a, 1.0, 2.0 ** a

        # d/dt log(t**a* / phi) >= 0  iff  a* >= a + b / ((e t + 1) log(e + 1/t))
        def g(x):
            t = np.exp(x)
            return 1.0 / ((np.e * t + 1.0) * np.exp(_log_log_e_plus_inv(t)))

        alpha_star = a + b * _max_log_ratio(g) * (1.0 + 1e-9)

        def log_ratio(x):
            t = np.exp(x)
            return _log_log_e_plus_inv(t) - _log_log_e_plus_inv(2.0 * t)

        delta2 = 2.0 ** a * np.exp(b * _max_log_ratio(log_ratio)) * (1.0 + 1e-12)
        # phi(t)/t = t**(a-1) / log(e+1/t)**b is increasing
        return alpha_star, 1.0, delta2

    @classmethod
    def power(cls, s):
        return cls("power", s=s)

    @classmethod
    def powerlog(cls, alpha, beta):
        return cls("powerlog", alpha=alpha, beta=beta)

    @classmethod
    def parse(cls, text):
        """Parse ``power:<s>`` or ``powerlog:<alpha>,<beta>``."""
        try:
            kind, _, args = text.strip().partition(":")
            values = [float(v) for v in args.split(",")] if args else []
        except ValueError:
            raise ParameterError(f"cannot parse phi specification {text!r}") from None
        kind = kind.lower()
        if kind == "power" and len(values) == 1:
            return cls.power(values[0])
        if kind == "powerlog" and len(values) == 2:
            return cls.powerlog(*values)
        raise ParameterError(
            f"phi specification must be 'power:<s>' or 'powerlog:<alpha>,<beta>', got {text!r}")

    def __str__(self):
        if self.family == "power":
            return f"power:{self.s!r}"
        return f"powerlog:{self.alpha!r},{self.beta!r}"

    @property
    def exponent(self):
        """Leading power of t near the origin."""
        return self.s if self.family == "power" else self.alpha

    @property
    def unbounded_ratio_at_zero(self):
        """True when t / phi(t) -> infinity as t -> 0+."""
        if self.family == "power":
            return self.s > 1.0
        return self.alpha > 1.0

    def log(self, t):
        """Natural log of phi for t > 0 (array in, array out)."""
        t = np.asarray(t, dtype=float)
        if self.family == "power":
            return self.s * np.log(t)
        return self.alpha * np.log(t) - self.beta * _log_log_e_plus_inv(t)

    def __call__(self, t):
        return eval_phi(self, t)

    def check_invariants(self, n=None, grid=PROBE_GRID):
        """Evaluate the certified properties on a probe grid.

        Returns a dict of booleans. ``alpha_star`` is only tested against
        ``n / (n - 1)`` when ``n`` is given.
        """
        vals = self.log(grid)
        # compare in log space; relative slack for rounding only
        slack = 1e-12 * np.maximum(1.0, np.abs(vals))
        result = {
            "strictly_increasing": bool(np.all(np.diff(vals) > 0)),
            "almost_increasing_ratio": bool(np.all(
                vals - np.log(grid) - np.minimum.accumulate((vals - np.log(grid))[::-1])[::-1]
                <= np.log(self.c_phi) + slack)),
            "alpha_star_monotone": bool(np.all(np.diff(self.alpha_star * np.log(grid) - vals)
                                               >= -slack[1:])),
            "doubling": bool(np.all(self.log(2.0 * grid) - vals
                                    <= np.log(self.delta2_phi) + slack)),
        }
        if n is not None:
            result["alpha_star_below_critical"] = bool(self.alpha_star < n / (n - 1.0))
        return result


def eval_phi(phi, t):
    """Evaluate phi at ``t >= 0``; phi(0) = 0."""
    arr, scalar = check_nonnegative(t)
    out = np.zeros_like(arr)
    pos = arr > 0
    out[pos] = np.exp(phi.log(arr[pos]))
    return restore(out, scalar)


@dataclass(frozen=True)
class PsiFunction:
    """psi(t) = phi(t) on [0, 1] and phi(1) * t on [1, inf)."""

    phi: PhiSpec
    phi_at_one: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "phi_at_one", float(eval_phi(self.phi, 1.0)))

    def log(self, t):
        t = np.asarray(t, dtype=float)
        small = np.minimum(t, 1.0)
        return np.where(t <= 1.0, self.phi.log(small), np.log(self.phi_at_one) + np.log(t))

    def __call__(self, t):
        return eval_psi(self, t)


def eval_psi(psi, t):
    """Evaluate psi at ``t >= 0``."""
    arr, scalar = check_nonnegative(t)
    out = np.zeros_like(arr)
    pos = arr > 0
    out[pos] = np.exp(psi.log(arr[pos]))
    return restore(out, scalar)


def as_psi(obj):
    """Accept a PsiFunction, a PhiSpec or a ``power:``/``powerlog:`` string."""
    if isinstance(obj, PsiFunction):
        return obj
    if isinstance(obj, str):
        obj = PhiSpec.parse(obj)
    if isinstance(obj, PhiSpec):
        return PsiFunction(obj)
    raise ParameterError(f"expected PhiSpec or PsiFunction, got {type(obj).__name__}")
