"""Poincare-ratio sweeps, the exhaustion experiment, exponent tables and the counterexample engines."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma
from sklearn.base import BaseEstimator

from ._validation import check_dimension_and_exponent, check_real
from .domains import MushroomSpec, make_exhaustion
from .exceptions import ParameterError
from .fields import (ScalarField, gradient_magnitude, integral_average, lp_norm,
                     luxemburg_norm)
from .orlicz import OrliczH
from .phi import PhiSpec, as_psi, eval_phi
from .report import ExperimentReport


def _as_field(domain, u):
    if isinstance(u, ScalarField):
        return u
    return ScalarField.from_function(domain, u)


def _as_phi(phi):
    return as_psi(phi).phi


def hypothesis_notes(phi, n):
    """Reasons a configuration lies outside the hypotheses of the embedding results; the run still proceeds."""
    phi = _as_phi(phi)
    notes = []
    if phi.c_phi > 1.0:
        notes.append(f"c_phi = {phi.c_phi} > 1: outside the embedding hypotheses")
    if phi.alpha_star >= n / (n - 1.0):
        notes.append(f"alpha_star = {phi.alpha_star} >= n/(n-1): outside the embedding hypotheses")
    return notes


def poincare_ratio(domain, phi, p, u, H=None):
    """||u - u_D||_H / ||grad u||_p with H built from (phi, p, n) unless given."""
    u = _as_field(domain, u)
    if H is None:
        H = OrliczH(phi, p, domain.n)
    grad = lp_norm(gradient_magnitude(u), p)
    if grad == 0.0:
        raise ParameterError("ratio undefined: u has zero gradient")
    return luxemburg_norm(u - integral_average(u), H) / grad


# -- test-function catalogues ------------------------------------------------

def _poly_family(n):
    fams = [
        ("x0", lambda x: x[:, 0]),
        ("x1", lambda x: x[:, 1]),
        ("x0^2", lambda x: x[:, 0] ** 2),
        ("x0*x1", lambda x: x[:, 0] * x[:, 1]),
        ("(x0+x1)^3", lambda x: (x[:, 0] + x[:, 1]) ** 3),
        ("sin(pi x0)", lambda x: np.sin(np.pi * x[:, 0])),
        ("cos(2 pi x1)", lambda x: np.cos(2 * np.pi * x[:, 1])),
    ]
    if n == 3:
        fams.append(("x2", lambda x: x[:, 2]))
    return fams


def _radial_family(n):
    out = []
    for cx, w in ((0.5, 0.15), (0.3, 0.25), (0.7, 0.1)):
        def f(x, cx=cx, w=w):
            c = np.full(x.shape[1], cx)
            return np.exp(-((x - c) ** 2).sum(axis=1) / w ** 2)
        out.append((f"bump({cx},{w})", f))
    return out


def _cusp_family(n, gammas=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0)):
    return [(f"x_n^{g}", lambda x, g=g: np.abs(x[:, -1]) ** g) for g in gammas]


TEST_FAMILIES = {
    "polynomial": _poly_family,
    "radial": _radial_family,
    "cusp": _cusp_family,
    "standard": lambda n: _poly_family(n) + _radial_family(n),
}


def test_functions(family, n):
    """Resolve a catalogue name (``polynomial``, ``radial``, ``cusp``, ``standard``) or pass a list through."""
    if isinstance(family, str):
        try:
            return TEST_FAMILIES[family](n)
        except KeyError:
            raise ParameterError(f"unknown test family {family!r}; "
                                 f"choose from {sorted(TEST_FAMILIES)}") from None
    return list(family)


# keep pytest from collecting the catalogue lookup when imported into test modules
test_functions.__test__ = False


@dataclass
class PoincareRun:
    """Ratios per test function at the finest resolution and the (h, max ratio) history."""

    domain: str
    phi: PhiSpec
    p: float
    family: str
    names: list
    ratios: list
    refinement: list = field(default_factory=list)
    per_resolution: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def max_ratio(self):
        return max(self.ratios)

    @property
    def refinement_trend(self):
        """max ratio at the finest resolution over max ratio at the coarsest."""
        return self.refinement[-1][1] / self.refinement[0][1]

    def to_report(self):
        hs = [h for h, _ in self.refinement]
        report = ExperimentReport(
            "poincare", config={"domain": self.domain, "phi": str(self.phi), "p": self.p,
                                "family": self.family},
            columns=["function"] + [f"ratio_h{k}" for k in range(len(hs))])
        for i, name in enumerate(self.names):
            row = {"function": name}
            for k, h in enumerate(hs):
                row[f"ratio_h{k}"] = self.per_resolution[h][i]
            report.add_row(**row)
        report.summary.update({"max_ratio": self.max_ratio, "refinement_trend": self.refinement_trend,
                               "resolutions": hs})
        report.refinement = [{"h": h, "max_ratio": r} for h, r in self.refinement]
        report.notes.extend(self.notes)
        return report


def poincare_sweep(domain_family, phi, p, test_family, resolutions, domain_name=None):
    """Run :func:`poincare_ratio` over a test-function family and several resolutions.

    ``domain_family(h)`` returns the domain at cell size ``h``.
    """
    resolutions = list(resolutions)
    if not resolutions:
        raise ParameterError("at least one resolution is required")
    phi = _as_phi(phi)
    per_res = {}
    names = None
    for h in resolutions:
        dom = domain_family(h)
        funcs = test_functions(test_family, dom.n)
        if not funcs:
            raise ParameterError("test family is empty")
        H = OrliczH(phi, p, dom.n)
        names = [name for name, _ in funcs]
        per_res[h] = [poincare_ratio(dom, phi, p, fn, H=H) for _, fn in funcs]
    refinement = [(h, max(per_res[h])) for h in resolutions]
    family_name = test_family if isinstance(test_family, str) else "custom"
    return PoincareRun(domain_name or getattr(domain_family, "__name__", "domain"), phi, p,
                       family_name, names, per_res[resolutions[-1]], refinement, per_res,
                       hypothesis_notes(phi, dom.n))


class PoincareConstantEstimator(BaseEstimator):
    """Empirical Poincare constant over a list of fields.

    ``fit(fields)`` stores ``ratios_`` and ``constant_`` (their maximum). With
    ``shift='best'`` the numerator is inf_b ||u - b||_H instead of ||u - u_D||_H.
    """

    def __init__(self, phi="power:1", p=1.0, shift="mean"):
        self.phi = phi
        self.p = p
        self.shift = shift

    def fit(self, X, y=None):
        from .fields import best_shift_norm

        fields = list(X)
        if not fields:
            raise ParameterError("no fields given")
        dom = fields[0].domain
        self.H_ = OrliczH(self.phi, self.p, dom.n)
        ratios = []
        for u in fields:
            if self.shift == "mean":
                ratios.append(poincare_ratio(u.domain, self.phi, self.p, u, H=self.H_))
            elif self.shift == "best":
                grad = lp_norm(gradient_magnitude(u), self.p)
                if grad == 0.0:
                    raise ParameterError("ratio undefined: u has zero gradient")
                ratios.append(best_shift_norm(u, self.H_)[1] / grad)
            else:
                raise ParameterError(f"shift must be 'mean' or 'best', got {self.shift!r}")
        self.ratios_ = np.array(ratios)
        self.constant_ = float(self.ratios_.max())
        return self

    def score(self, X, y=None):
        """Negative largest ratio on new fields (higher is better)."""
        ratios = [poincare_ratio(u.domain, self.phi, self.p, u, H=self.H_) for u in X]
        return -float(max(ratios))


# -- exhaustion ----------------------------------------------------------------

def exhaustion_experiment(proto, scales, phi, p, u, h=1.0 / 16):
    """Ratios and averages along nested truncations D_1 c D_2 c ... on a common grid.

    ``proto(scale, h, extent)`` builds a truncation (see ``make_exhaustion``); a
    ready list of nested domains is also accepted with ``scales=None``.
    ``u`` is a callable on cell centres or a field on the largest domain.
    """
    domains = list(proto) if scales is None else make_exhaustion(proto, scales, h)
    phi = _as_phi(phi)
    big = domains[-1]
    u_big = _as_field(big, u)
    H = OrliczH(phi, p, big.n)
    report = ExperimentReport(
        "exhaustion", config={"phi": str(phi), "p": p, "n": big.n, "h": big.h,
                              "domains": len(domains),
                              "scales": list(scales) if scales is not None else None},
        columns=["i", "measure", "average", "norm", "grad_norm", "ratio"])
    report.notes.extend(hypothesis_notes(phi, big.n))
    averages = []
    ratios = []
    u_first = u_big.restrict(domains[0])
    for i, dom in enumerate(domains):
        ui = u_big.restrict(dom)
        avg = integral_average(ui)
        grad = lp_norm(gradient_magnitude(ui), p)
        norm = luxemburg_norm(ui - avg, H)
        ratio = norm / grad if grad > 0 else float("nan")
        if grad == 0:
            report.notes.append(f"domain {i}: zero gradient, ratio undefined")
        averages.append(avg)
        ratios.append(ratio)
        report.add_row(i=i, measure=dom.measure, average=avg, norm=norm, grad_norm=grad,
                       ratio=ratio)
    abs_avg = np.abs(averages)
    finite = [r for r in ratios if np.isfinite(r)]
    first_avg_abs = abs(integral_average(u_first))
    chain = first_avg_abs + max(float(np.mean(np.abs(u_first.values - a))) for a in averages)
    report.summary.update({
        "max_abs_average": float(abs_avg.max()),
        "averages_decreasing_after_first": bool(np.all(np.diff(abs_avg[1:]) < 0)
                                                 if len(abs_avg) > 2 else True),
        "averages_decreasing": bool(np.all(np.diff(abs_avg) < 0)),
        "average_bound_chain": chain,
        "ratio_spread": (max(finite) / min(finite)) if finite else float("nan"),
        "max_ratio": max(finite) if finite else float("nan"),
    })
    return report


# -- exponent table --------------------------------------------------------------

def predicted_exponent(n, p, s):
    """np / (n - np + sp(n-1)): the Orlicz growth at infinity for phi = t**s."""
    return n * p / (n - n * p + s * p * (n - 1))


def measured_large_slope(H, lo=1e3, hi=1e6, points=50):
    t = np.logspace(np.log10(lo), np.log10(hi), points)
    return float(np.polyfit(np.log(t), np.log(H(t)), 1)[0])


def sjohn_exponent_table(s_list, p_list, n):
    """Predicted and measured large-argument exponents of H for phi = t**s."""
    n = check_real(n, "n", min_val=2, integer=True)
    report = ExperimentReport("sjohn-table", config={"n": n},
                              columns=["n", "p", "s", "q_predicted", "slope_measured", "abs_error"])
    for s in s_list:
        s = check_real(s, "s", min_val=1.0, max_val=n / (n - 1.0), include_max=False)
        for p in p_list:
            _, p = check_dimension_and_exponent(n, p)
            q = predicted_exponent(n, p, s)
            slope = measured_large_slope(OrliczH(PhiSpec.power(s), p, n))
            report.add_row(n=n, p=p, s=s, q_predicted=q, slope_measured=slope,
                           abs_error=abs(slope - q))
    report.summary["max_abs_error"] = max(report.column("abs_error"))
    return report


# -- counterexamples ---------------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleRow:
    m: int
    r_m: float
    F_rm: float
    grad_norm_p: float
    lower_bound: float
    q: float


def mushroom_F(phi, r, n, p):
    """Plateau height (r**(p-1) / (2 phi(r)**(n-1)))**(1/p) normalising the gradient."""
    return (r ** (p - 1.0) / (2.0 * float(eval_phi(phi, r)) ** (n - 1))) ** (1.0 / p)


def mushroom_counterexample(spec, p, q, m_max=None, n=2):
    """Closed-form rows for the plateau functions on the mushroom domain.

    ``spec`` is a MushroomSpec or a PhiSpec (radii 2**-m, m = 2..m_max).
    Each row has grad_norm_p = 1 and lower_bound = r**n F(r)**q, a lower bound for
    inf_b of the L**q modular of u - b.
    """
    n, p = check_dimension_and_exponent(n, p)
    q = check_real(q, "q", min_val=0.0, include_min=False)
    if isinstance(spec, MushroomSpec):
        phi, radii = spec.phi, list(spec.radii)
        # dyadic radii keep their exponent as index
        logs = [-np.log2(r) for r in radii]
        if all(float(v).is_integer() for v in logs):
            ms = [int(v) for v in logs]
        else:
            ms = list(range(1, len(radii) + 1))
    else:
        phi = _as_phi(spec)
        m_max = 12 if m_max is None else check_real(m_max, "m_max", min_val=2, integer=True)
        ms = list(range(2, m_max + 1))
        radii = [2.0 ** -m for m in ms]
    rows = []
    for m, r in zip(ms, radii):
        phi_r = float(eval_phi(phi, r))
        if phi_r > r * (1.0 + 1e-12):
            raise ParameterError(f"phi(r_m) > r_m at m = {m}; mushrooms need phi(r) <= r")
        F = mushroom_F(phi, r, n, p)
        grad = 2.0 * r * phi_r ** (n - 1) * (F / r) ** p
        rows.append(CounterexampleRow(m, r, F, grad, r ** n * F ** q, q))
    return rows


def mushroom_exponent(phi, n, p, q):
    """e with lower_bound proportional to r**e for phi = t**s; halving r multiplies by 2**-e."""
    phi = _as_phi(phi)
    if phi.family != "power":
        raise ParameterError("closed-form exponent only for the power family")
    return n + q * (p - 1.0 - phi.s * (n - 1)) / p


def farfield_exponent(n, p, q):
    """n - q(n-p)/p: growth exponent of the far-field lower bound in s."""
    return n - q * (n - p) / p


def farfield_bump_counterexample(p, q, n, s_list, quad_points=8):
    """Two radial plateaus of height s**(-(n-p)/p) on balls of radius s, linear to 0 at 2s.

    grad_norm_p is integrated radially (Gauss-Legendre, exact for this profile);
    lower_bound = |B(s)| * (s**(-(n-p)/p))**q bounds inf_b of the L**q modular.
    """
    n, p = check_dimension_and_exponent(n, p)
    q = check_real(q, "q", min_val=0.0, include_min=False)
    s_vals = [check_real(s, "s", min_val=0.0, include_min=False) for s in s_list]
    if any(b <= a for a, b in zip(s_vals, s_vals[1:])):
        raise ParameterError("s values must be increasing")
    sphere = 2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0)
    ball = sphere / n
    x, w = np.polynomial.legendre.leggauss(quad_points)
    expo = farfield_exponent(n, p, q)
    report = ExperimentReport("farfield", config={"n": n, "p": p, "q": q},
                              columns=["s", "height", "grad_norm_p", "lower_bound", "exponent"])
    for s in s_vals:
        height = s ** (-(n - p) / p)
        r = 0.5 * s * x + 1.5 * s
        annulus = 0.5 * s * np.sum(w * sphere * r ** (n - 1))
        grad = 2.0 * (height / s) ** p * annulus
        lower = ball * s ** n * height ** q
        report.add_row(s=s, height=height, grad_norm_p=grad, lower_bound=lower, exponent=expo)
    report.summary.update({"exponent": expo, "blowup": bool(expo > 0),
                           "critical_q": n * p / (n - p)})
    return report


def dichotomy(phi, n, p, q):
    """Which of the two constructions defeats the L**q target for phi = t**s."""
    me = mushroom_exponent(phi, n, p, q)
    fe = farfield_exponent(n, p, q)
    return {"mushroom_exponent": me, "mushroom_blowup": me < 0,
            "farfield_exponent": fe, "farfield_blowup": fe > 0,
            "critical_q": n * p / (n - p)}
