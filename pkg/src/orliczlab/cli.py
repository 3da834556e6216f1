"""Command-line front end for the orliczlab experiments."""

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .domains import CuspPrototype, make_ball, make_box, make_cusp
from .exceptions import ConfigurationError, OrliczLabError, ParameterError
from .experiments import (dichotomy, exhaustion_experiment, farfield_bump_counterexample,
                          mushroom_counterexample, poincare_sweep, sjohn_exponent_table)
from .orlicz import OrliczH, PowerOrlicz, hedberg_sum_check, john_constants
from .phi import PhiSpec, PsiFunction
from .potentials import pointwise_estimate_experiment
from .report import ExperimentReport
from ._validation import check_dimension_and_exponent, check_real

THREADS_ENV = "ORLICZLAB_THREADS"

logger = logging.getLogger(__name__)


# -- config files ----------------------------------------------------------------

def _canonical_key(key):
    return key.strip().lower().replace("-", "_")


def parse_config(text):
    """INI-style text -> {section: {key: value}} with canonical keys."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse config: {exc}") from exc
    out = {}
    for section in parser.sections():
        out[section.strip()] = {_canonical_key(k): v.strip() for k, v in parser[section].items()}
    return out


def serialize_config(config):
    """Canonical text: sections and keys sorted, ``key = value`` lines."""
    lines = []
    for section in sorted(config):
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {config[section][k]}" for k in sorted(config[section]))
    return "\n".join(lines) + "\n"


def normalize_config(text):
    return serialize_config(parse_config(text))


def load_config(path):
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc


# -- argument types ------------------------------------------------------------

def _float_list(text):
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _phi(text):
    try:
        return PhiSpec.parse(text)
    except (ParameterError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


@dataclass
class RunConfig:
    """Resolved options of one invocation (file values overridden by flags)."""

    command: str
    options: dict
    seed: int = None
    out: str = None
    format: str = "csv"
    sources: dict = field(default_factory=dict)

    def echo(self):
        """``key = value`` lines with every option in a stable order."""
        lines = []
        for key in sorted(self.options):
            value = self.options[key]
            if isinstance(value, list):
                value = ",".join(repr(v) for v in value)
            lines.append(f"{key} = {value}")
        return lines


# -- subcommands -------------------------------------------------------------------

COMMANDS = {}


def command(name, help, columns):
    def register(fn):
        COMMANDS[name] = (fn, help, columns)
        return fn
    return register


def _build_H(phi, p, n):
    if phi.family == "power" and phi.s == 1.0:
        return PowerOrlicz(n * p / (n - p))
    return OrliczH(phi, p, n)


@command("h-function", "tabulate F^-1, H and the conjugate H* on a grid of t",
         "t, F_inv, H, conjugate")
def _cmd_h_function(o):
    n, p = check_dimension_and_exponent(o["n"], o["p"])
    H = OrliczH(o["phi"], p, n)
    t = np.asarray(o["t"] if o["t"] else np.logspace(np.log10(o["tmin"]), np.log10(o["tmax"]),
                                                     o["points"]))
    report = ExperimentReport("h-function", columns=["t", "F_inv", "H", "conjugate"])
    for tk, fi, hv, cv in zip(t, H.F_inv(t), H(t), H.conjugate(t)):
        report.add_row(t=float(tk), F_inv=float(fi), H=float(hv), conjugate=float(cv))
    report.summary.update({"delta2_constant": H.delta2_constant, "small_exponent": H.small_exponent,
                           "large_exponent": H.large_exponent})
    return report


@command("john-constants", "John constants of a bounded phi-cigar John domain",
         "c_j, diam, alpha, beta, alpha_over_dist_bound, asymptotic_limit")
def _cmd_john(o):
    psi = PsiFunction(o["phi"])
    report = ExperimentReport("john-constants", columns=[
        "c_j", "diam", "alpha", "beta", "alpha_over_dist_bound", "asymptotic_limit"])
    for diam in o["diam"]:
        jc = john_constants(o["cj"], diam, psi)
        report.add_row(c_j=o["cj"], diam=diam, **jc._asdict())
    return report


@command("hedberg", "truncated dyadic kernel sums against their closed-form bound",
         "t, alpha, partial_sum, bound, ok")
def _cmd_hedberg(o):
    psi = PsiFunction(o["phi"])
    report = ExperimentReport("hedberg", columns=["t", "alpha", "partial_sum", "bound", "ok"])
    alphas = o["alpha"] or [psi.phi.alpha_star]
    for a in alphas:
        for t in o["t"]:
            chk = hedberg_sum_check(psi, t, o["k"], a, o["n"])
            report.add_row(t=t, alpha=a, partial_sum=chk.partial_sum, bound=chk.bound,
                           ok=bool(chk.partial_sum <= chk.bound * (1 + 1e-12)))
    report.summary["violations"] = report.column("ok").count(False)
    return report


def _domain(o, h):
    n = o["n"]
    if o["domain"] == "box":
        return make_box(n, [0.0] * n, [1.0] * n, h)
    if o["domain"] == "ball":
        return make_ball(n, [0.0] * n, 1.0, h)
    if o["domain"] == "cusp":
        return make_cusp(PsiFunction(o["phi"]), 1.0, h, n=n)
    raise ParameterError(f"unknown domain {o['domain']!r}")


@command("pointwise", "empirical constant of the pointwise potential estimate over seeded random fields",
         "trial, bumps, cemp_h, cemp_h2 (cemp_h2 only with refinement)")
def _cmd_pointwise(o):
    n, p = check_dimension_and_exponent(o["n"], o["p"])
    dom = _domain(o, o["h"][0])
    H = _build_H(o["phi"], p, n)
    return pointwise_estimate_experiment(dom, H, PsiFunction(o["phi"]), p, o["trials"],
                                         seed=o["seed"], refine=not o["no_refine"])


@command("poincare", "Poincare ratio sweep over a fixed test-function catalogue",
         "function, ratio_h0, ratio_h1, ... (one column per resolution)")
def _cmd_poincare(o):
    n, p = check_dimension_and_exponent(o["n"], o["p"])
    o["n"] = n
    run = poincare_sweep(lambda h: _domain(o, h), o["phi"], p, o["family"], o["h"],
                         domain_name=o["domain"])
    return run.to_report()


@command("exhaustion", "averages and ratios along nested truncations of the cusp prototype",
         "i, measure, average, norm, grad_norm, ratio")
def _cmd_exhaustion(o):
    n, p = check_dimension_and_exponent(o["n"], o["p"])
    width = o["bump_radius"]

    def bump(x):
        return np.maximum(0.0, 1.0 - (x ** 2).sum(axis=1) / width ** 2)

    proto = CuspPrototype(PsiFunction(o["phi"]), n)
    return exhaustion_experiment(proto, o["scales"], o["phi"], p, bump, h=o["h"][0])


@command("sjohn-table", "predicted and measured Orlicz exponents for phi = t**s",
         "n, p, s, q_predicted, slope_measured, abs_error")
def _cmd_sjohn(o):
    return sjohn_exponent_table(o["s"], o["p_list"], o["n"])


@command("counterexample", "closed-form mushroom rows (kind=mushroom) or far-field rows (kind=farfield)",
         "mushroom: m, r_m, F_rm, grad_norm_p, lower_bound, q; "
         "farfield: s, height, grad_norm_p, lower_bound, exponent")
def _cmd_counterexample(o):
    n, p = check_dimension_and_exponent(o["n"], o["p"])
    if o["kind"] == "farfield":
        report = farfield_bump_counterexample(p, o["q"], n, o["s"])
    else:
        rows = mushroom_counterexample(o["phi"], p, o["q"], o["m_max"], n=n)
        report = ExperimentReport("mushroom", columns=[
            "m", "r_m", "F_rm", "grad_norm_p", "lower_bound", "q"])
        for r in rows:
            report.add_row(m=r.m, r_m=r.r_m, F_rm=r.F_rm, grad_norm_p=r.grad_norm_p,
                           lower_bound=r.lower_bound, q=r.q)
    if o["phi"].family == "power":
        report.summary.update(dichotomy(o["phi"], n, p, o["q"]))
    return report


# -- parser ------------------------------------------------------------------------

# (flag, type, default, help); default None with required=True marks a required option
_OPTIONS = {
    "phi": ("--phi", _phi, PhiSpec.power(1.0), "phi as power:<s> or powerlog:<alpha>,<beta>"),
    "n": ("--n", int, 2, "space dimension"),
    "p": ("--p", float, 1.0, "gradient exponent, 1 <= p < n"),
    "q": ("--q", float, None, "target Lebesgue exponent"),
    "t": ("--t", _float_list, None, "comma-separated evaluation points"),
    "tmin": ("--tmin", float, 1e-3, "lower end of the log grid"),
    "tmax": ("--tmax", float, 1e3, "upper end of the log grid"),
    "points": ("--points", int, 25, "log grid size"),
    "cj": ("--cj", float, 1.0, "cigar constant c_J"),
    "diam": ("--diam", _float_list, None, "comma-separated diameters"),
    "alpha": ("--alpha", _float_list, None, "comma-separated exponents (default alpha_star)"),
    "k": ("--k", int, 60, "number of dyadic terms"),
    "h": ("--h", _float_list, None, "cell size(s), comma-separated"),
    "trials": ("--trials", int, 50, "number of random fields"),
    "domain": ("--domain", str, "box", "box (unit cube), ball (unit ball) or cusp (height 1)"),
    "family": ("--family", str, "standard", "polynomial, radial, cusp or standard"),
    "scales": ("--scales", _float_list, [1.0, 2.0, 4.0, 8.0], "truncation heights"),
    "bump_radius": ("--bump-radius", float, 0.5, "support radius of the test bump at the origin"),
    "s": ("--s", _float_list, None, "comma-separated s values"),
    "p_list": ("--p-list", _float_list, None, "comma-separated p values (default: --p)"),
    "m_max": ("--m-max", int, 12, "largest m with r_m = 2**-m"),
    "kind": ("--kind", str, "mushroom", "mushroom or farfield"),
}

_COMMAND_OPTIONS = {
    "h-function": ["phi", "n", "p", "t", "tmin", "tmax", "points"],
    "john-constants": ["phi", "cj", "diam"],
    "hedberg": ["phi", "n", "alpha", "t", "k"],
    "pointwise": ["phi", "n", "p", "h", "trials", "domain"],
    "poincare": ["phi", "n", "p", "h", "domain", "family"],
    "exhaustion": ["phi", "n", "p", "h", "scales", "bump_radius"],
    "sjohn-table": ["n", "p", "s", "p_list"],
    "counterexample": ["phi", "n", "p", "q", "m_max", "s", "kind"],
}

_REQUIRED = {
    "john-constants": ["diam"],
    "hedberg": ["t"],
    "sjohn-table": ["s"],
    "counterexample": ["q"],
}

_DEFAULT_OVERRIDES = {
    "pointwise": {"h": [1.0 / 64]},
    "poincare": {"h": [1.0 / 32, 1.0 / 64]},
    "exhaustion": {"h": [1.0 / 16]},
    "hedberg": {"k": 60},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def build_parser():
    parser = _Parser(
        prog="orliczlab",
        description="Numerical experiments for Orlicz-Sobolev embeddings on irregular domains.",
        epilog=(f"Environment: {THREADS_ENV} caps the BLAS/OpenMP thread count.\n"
                "Exit codes: 0 success, 1 numeric failure, 2 invalid configuration.\n"
                "Config files use INI syntax with one [section] per subcommand and keys equal\n"
                "to the long flag names; flags given on the command line win."),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"orliczlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, (fn, help_text, columns) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text,
                            epilog=f"CSV columns: {columns}",
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        for key in _COMMAND_OPTIONS[name]:
            flag, typ, _, help_opt = _OPTIONS[key]
            sp.add_argument(flag, dest=key, type=typ, default=None, help=help_opt)
        if name == "pointwise":
            sp.add_argument("--no-refine", dest="no_refine", action="store_true", default=None,
                            help="skip the h/2 re-run")
        sp.add_argument("--config", help="INI config file")
        sp.add_argument("--seed", type=int, default=None, help="64-bit RNG seed")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=["csv", "json"], default=None)
    return parser


def _coerce(key, raw):
    if key == "no_refine":
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    if key in ("seed",):
        return int(raw)
    if key in ("out", "format"):
        return raw
    typ = _OPTIONS[key][1]
    try:
        return typ(raw)
    except (argparse.ArgumentTypeError, ValueError) as exc:
        raise ConfigurationError(f"config value {key} = {raw!r}: {exc}") from exc


def resolve(argv):
    """Parse argv (and an optional config file) into a RunConfig."""
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise ConfigurationError("a subcommand is required")
    name = args.command
    file_values = {}
    if args.config:
        section = load_config(args.config).get(name, {})
        for key, raw in section.items():
            allowed = set(_COMMAND_OPTIONS[name]) | {"seed", "out", "format", "no_refine"}
            if key not in allowed:
                raise ConfigurationError(f"unknown key {key!r} in section [{name}]")
            file_values[key] = _coerce(key, raw)
    opts = {}
    sources = {}
    for key in _COMMAND_OPTIONS[name] + (["no_refine"] if name == "pointwise" else []):
        flag_value = getattr(args, key)
        if flag_value is not None:
            opts[key], sources[key] = flag_value, "flag"
        elif key in file_values:
            opts[key], sources[key] = file_values[key], "file"
        else:
            default = _DEFAULT_OVERRIDES.get(name, {}).get(
                key, False if key == "no_refine" else _OPTIONS[key][2])
            opts[key], sources[key] = default, "default"
    for key in _REQUIRED.get(name, []):
        if opts[key] is None:
            raise ConfigurationError(f"missing required option {_OPTIONS[key][0]}")
    if name == "sjohn-table" and opts["p_list"] is None:
        opts["p_list"] = [opts["p"]]
    seed = args.seed if args.seed is not None else file_values.get("seed")
    out = args.out if args.out is not None else file_values.get("out")
    fmt = args.format or file_values.get("format") or "csv"
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"format must be csv or json, got {fmt!r}")
    if seed is not None:
        seed = check_real(seed, "seed", min_val=0, max_val=2 ** 64 - 1, integer=True)
    opts["seed"] = seed
    _validate(name, opts)
    return RunConfig(name, opts, seed, out, fmt, sources)


def _validate(name, o):
    """Range checks that must pass before any numerics run."""
    if "n" in o:
        o["n"] = check_real(o["n"], "n", min_val=2, integer=True)
    if "p" in o and name != "sjohn-table":
        check_dimension_and_exponent(o["n"], o["p"])
    for key in ("h", "diam", "t", "scales"):
        if o.get(key) is not None:
            for v in o[key]:
                check_real(v, key, min_val=0.0, include_min=False)
    if o.get("h") is not None and not o["h"]:
        raise ParameterError("h needs at least one value")
    if "trials" in o:
        check_real(o["trials"], "trials", min_val=1, integer=True)
    if name == "sjohn-table":
        for s in o["s"]:
            check_real(s, "s", min_val=1.0, max_val=o["n"] / (o["n"] - 1.0), include_max=False)
        for p in o["p_list"]:
            check_dimension_and_exponent(o["n"], p)
    if name == "counterexample":
        check_real(o["q"], "q", min_val=0.0, include_min=False)
        if o["kind"] not in ("mushroom", "farfield"):
            raise ParameterError(f"kind must be mushroom or farfield, got {o['kind']!r}")
        if o["kind"] == "farfield" and not o["s"]:
            raise ConfigurationError("missing required option --s for kind=farfield")


# -- output ----------------------------------------------------------------------

def render(report, cfg):
    header = [f"orliczlab {__version__}", f"command: {cfg.command}", f"seed: {cfg.seed}"]
    header += [f"option {line}" for line in cfg.echo()]
    if cfg.format == "json":
        data = report.to_dict()
        data["meta"] = {"version": __version__, "command": cfg.command, "seed": cfg.seed,
                        "options": cfg.echo()}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    return report.to_csv(header)


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return check_real(value, THREADS_ENV, min_val=1, integer=True)


def run(argv=None, stdout=None, stderr=None):
    """Execute one subcommand; returns the exit code (0, 1 or 2)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = resolve(argv)
        threads = _thread_limit()
    except (ConfigurationError, ParameterError) as exc:
        print(f"orliczlab: error: {exc}", file=stderr)
        return 2
    fn = COMMANDS[cfg.command][0]
    try:
        if threads is not None:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=threads):
                report = fn(dict(cfg.options))
        else:
            report = fn(dict(cfg.options))
    except ParameterError as exc:
        print(f"orliczlab: error: {exc}", file=stderr)
        return 2
    except (OrliczLabError, ArithmeticError, ValueError) as exc:
        print(f"orliczlab: numeric failure: {exc}", file=stderr)
        return 1
    text = render(report, cfg)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
