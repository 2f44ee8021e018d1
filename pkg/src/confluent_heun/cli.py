"""Command-line front end.

Subcommands: eval, compare, recurrence, terminate, scan, fn.  Complex
inputs are given as paired flags (``--q 0.5 --q-im 0.1``).  Exit codes:
0 success, 1 configuration or typed error, 2 partial convergence,
3 tolerance failure, 4 internal invariant breach.
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, fields
import json
import sys

import numpy as np

from . import expansions as ex
from . import special as sf
from . import termination as tm
from .errors import ConfigError, HeunError
from .frobenius import local_recurrence
from .heun import HeunParams, build_eq3, build_eq25, eval_oracle, frobenius_heun

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL, EXIT_TOLERANCE, EXIT_INTERNAL = 0, 1, 2, 3, 4
PARAM_NAMES = ("gamma", "delta", "epsilon", "alpha", "q")
SUBCOMMANDS = ("eval", "compare", "recurrence", "terminate", "scan", "fn")


def fmt(x):
    """17 significant digits, lowercase exponent."""
    return f"{float(x):.17g}"


def _cpair(z):
    z = complex(z)
    return [z.real, z.imag]


# --- configuration ---------------------------------------------------------

@dataclass
class RunConfig:
    """Everything a run depends on; serializes to and from plain JSON."""

    subcommand: str
    params: dict = field(default_factory=dict)      # name -> [re, im]
    kind: str = "type1beta0"
    center: list = None
    mu: object = "0"
    N: int = ex.DEFAULT_TERMS
    z: list = field(default_factory=list)            # list of [re, im]
    c0: str = "auto"
    output: str = "-"
    format: str = "csv"
    tolerance: float = 1e-6
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.format!r}")
        bad = set(self.params) - set(PARAM_NAMES)
        if bad:
            raise ConfigError(f"unknown parameters {sorted(bad)}")

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "subcommand" not in data:
            raise ConfigError("config needs a subcommand")
        return cls(**data)

    def heun_params(self):
        missing = [n for n in PARAM_NAMES if n not in self.params]
        if missing:
            raise ConfigError(f"missing parameters {missing}")
        return HeunParams(**{n: complex(*self.params[n]) for n in PARAM_NAMES})

    def points(self):
        if not self.z:
            raise ConfigError("no evaluation points given (--z or --z-grid)")
        return [complex(*p) for p in self.z]

    def center_value(self):
        return None if self.center is None else complex(*self.center)

    def mu_value(self):
        if isinstance(self.mu, list):
            return complex(*self.mu)
        return self.mu


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_complex(p, name, *, required=False, default=None, help=None):
    p.add_argument(f"--{name}", type=float, required=required, default=default, help=help)
    p.add_argument(f"--{name}-im", type=float, default=0.0, dest=f"{name.replace('-', '_')}_im")


def _add_params(p, names=PARAM_NAMES):
    for n in names:
        _add_complex(p, n, required=True)


def _add_points(p):
    p.add_argument("--z", type=float, action="append", help="evaluation point (repeatable)")
    p.add_argument("--z-im", type=float, action="append", dest="z_im")
    p.add_argument("--z-grid", type=float, nargs=3, metavar=("START", "STOP", "COUNT"),
                   help="real grid of COUNT points")


def _add_output(p, default_format):
    p.add_argument("--output", "-o", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)


def _add_expansion(p):
    p.add_argument("--kind", default="type1beta0", choices=ex.KINDS)
    _add_complex(p, "center")
    p.add_argument("--mu", default="0", help="exponent: number, 'gamma' or 'delta'")
    p.add_argument("--mu-im", type=float, default=0.0, dest="mu_im")
    p.add_argument("--terms", type=int, default=ex.DEFAULT_TERMS, dest="N")
    p.add_argument("--c0", default="auto", choices=("auto", "closed", "numeric"))


def build_parser():
    parser = _Parser(prog="confluent-heun", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="read the run configuration from a JSON file")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the parsed configuration as JSON and exit")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate an expansion")
    _add_params(p)
    _add_expansion(p)
    _add_points(p)
    p.add_argument("--partial-sums", action="store_true",
                   help="emit every partial sum instead of one row per point")
    _add_output(p, "csv")

    p = sub.add_parser("compare", help="compare an expansion with the Frobenius oracle")
    _add_params(p)
    _add_expansion(p)
    _add_points(p)
    p.add_argument("--tol", type=float, default=1e-6, dest="tolerance")
    _add_output(p, "json")

    p = sub.add_parser("recurrence", help="dump banded recurrence coefficients")
    _add_params(p)
    p.add_argument("--eq", choices=("eq3", "eq25"), default="eq3")
    _add_complex(p, "center", default=0.0)
    p.add_argument("--mu", default="0")
    p.add_argument("--mu-im", type=float, default=0.0, dest="mu_im")
    p.add_argument("--n-max", type=int, default=10, dest="N")
    _add_output(p, "csv")

    p = sub.add_parser("terminate", help="find terminating parameter sets")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--mu", default="0", help="0, gamma, delta, or 2 (at z0)")
    p.add_argument("--center", default="0", choices=("0", "1", "z0"))
    _add_params(p, ("gamma", "delta"))
    _add_complex(p, "epsilon")
    p.add_argument("--grid", type=int, default=40, help="seed grid side (z0 case)")
    _add_output(p, "json")

    p = sub.add_parser("scan", help="empirical convergence radius over a parameter grid")
    _add_params(p)
    _add_expansion(p)
    p.add_argument("--vary", choices=PARAM_NAMES, required=True)
    p.add_argument("--values", type=float, nargs=3, metavar=("START", "STOP", "COUNT"),
                   required=True)
    p.add_argument("--angle", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    _add_output(p, "csv")

    p = sub.add_parser("fn", help="evaluate one special function")
    p.add_argument("name", choices=("2f1", "beta", "ibeta", "f1", "f1at1", "lgamma"))
    p.add_argument("args", nargs="+", type=complex)
    _add_output(p, "csv")
    return parser


def config_from_args(ns):
    """Translate parsed flags into a RunConfig."""
    params = {n: [getattr(ns, n), getattr(ns, f"{n}_im")] for n in PARAM_NAMES
              if getattr(ns, n, None) is not None}
    center = None
    if isinstance(getattr(ns, "center", None), float):
        center = [ns.center, ns.center_im]
    z = []
    if getattr(ns, "z", None):
        im = ns.z_im or []
        if len(im) > len(ns.z):
            raise ConfigError("more --z-im than --z values")
        im = im + [0.0] * (len(ns.z) - len(im))
        z = [[a, b] for a, b in zip(ns.z, im)]
    if getattr(ns, "z_grid", None):
        start, stop, count = ns.z_grid
        if count < 1 or count != int(count):
            raise ConfigError("--z-grid COUNT must be a positive integer")
        z += [[float(v), 0.0] for v in np.linspace(start, stop, int(count))]
    mu = getattr(ns, "mu", "0")
    if getattr(ns, "mu_im", 0.0):
        mu = [float(mu), ns.mu_im]
    options = {}
    for key in ("partial_sums", "eq", "grid", "vary", "values", "angle", "workers", "name"):
        if hasattr(ns, key):
            options[key] = getattr(ns, key)
    if ns.subcommand == "terminate":
        options["center"] = ns.center
    if ns.subcommand == "fn":
        options["args"] = [_cpair(a) for a in ns.args]
    return RunConfig(
        subcommand=ns.subcommand, params=params, kind=getattr(ns, "kind", "type1beta0"),
        center=center, mu=mu, N=getattr(ns, "N", ex.DEFAULT_TERMS), z=z,
        c0=getattr(ns, "c0", "auto"), output=ns.output, format=ns.format,
        tolerance=getattr(ns, "tolerance", 1e-6), options=options)


# --- output helpers --------------------------------------------------------

def _csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else
                              ("true" if v is True else "false" if v is False else
                               str(v) if isinstance(v, (int, np.integer)) else fmt(v))
                              for v in row))
    return "\n".join(lines) + "\n"


def _emit(cfg, text):
    if cfg.output == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json(obj):
    return json.dumps(obj, indent=2) + "\n"


# --- subcommands -----------------------------------------------------------

def _spec(cfg):
    return ex.make_spec(cfg.kind, cfg.heun_params(), cfg.center_value(), cfg.mu_value())


def run_eval(cfg):
    spec = _spec(cfg)
    a = ex.coefficients(spec, cfg.N)
    results = [(z, ex.eval_expansion(spec, z, cfg.N, c0=cfg.c0, coeffs=a)) for z in cfg.points()]
    ok = all(ev.diagnostics.converged for _, ev in results)
    if cfg.options.get("partial_sums"):
        header = ["z_re", "z_im", "n", "u_re", "u_im"]
        rows = [(z.real, z.imag, n, s.real, s.imag)
                for z, ev in results for n, s in enumerate(ev.partial_sums)]
    else:
        header = ["z_re", "z_im", "u_re", "u_im", "terms_used", "last_term_mag", "converged"]
        rows = [(z.real, z.imag, ev.value.real, ev.value.imag, ev.diagnostics.terms_used,
                 ev.diagnostics.last_term_magnitude, ev.diagnostics.converged)
                for z, ev in results]
    if cfg.format == "csv":
        _emit(cfg, _csv(header, rows))
    else:
        _emit(cfg, _json([dict(zip(header, r)) for r in rows]))
    return EXIT_OK if ok else EXIT_PARTIAL


def oracle_span_fit(params, zs, values):
    """Least-squares fit of values by the two Frobenius branches at 0.

    Returns the fitted coefficients and per-point relative deviations.
    """
    basis = []
    for choice in ("zero", "one_minus_gamma"):
        sol = frobenius_heun(params, choice)
        basis.append([eval_oracle(sol, z)[0] for z in zs])
    M = np.array(basis, dtype=complex).T
    v = np.asarray(values, dtype=complex)
    coef = np.linalg.lstsq(M, v, rcond=None)[0]
    scale = float(np.max(np.abs(v))) or 1.0
    dev = np.abs(M @ coef - v) / scale
    return coef, dev


def run_compare(cfg):
    spec = _spec(cfg)
    zs = cfg.points()
    if len(zs) < 3:
        raise ConfigError("compare needs at least 3 points")
    a = ex.coefficients(spec, cfg.N)
    values = [ex.eval_expansion(spec, z, cfg.N, c0=cfg.c0, coeffs=a).value for z in zs]
    coef, dev = oracle_span_fit(spec.params, zs, values)
    worst = float(np.max(dev))
    report = {
        "kind": spec.kind, "N": cfg.N, "tolerance": cfg.tolerance,
        "fit": [_cpair(c) for c in coef],
        "points": [{"z": _cpair(z), "u": _cpair(u), "deviation": float(d)}
                   for z, u, d in zip(zs, values, dev)],
        "max_deviation": worst,
        "passed": bool(worst < cfg.tolerance),
    }
    _emit(cfg, _json(report))
    return EXIT_OK if report["passed"] else EXIT_TOLERANCE


def run_recurrence(cfg):
    params = cfg.heun_params()
    ode = build_eq3(params) if cfg.options.get("eq", "eq3") == "eq3" else build_eq25(params)[0]
    mu = cfg.mu_value()
    if isinstance(mu, str):
        mu = ex._resolve_mu(mu, params)
    rec = local_recurrence(ode, cfg.center_value() or 0, mu)
    table = rec.coeff_table(cfg.N)
    rows = [(n, j, table[n, j].real, table[n, j].imag)
            for n in range(cfg.N + 1) for j in range(rec.bandwidth)]
    if cfg.format == "csv":
        _emit(cfg, _csv(["n", "offset", "re", "im"], rows))
    else:
        _emit(cfg, _json({"bandwidth": rec.bandwidth, "singular": rec.singular,
                          "rows": [{"n": r[0], "offset": r[1], "re": r[2], "im": r[3]}
                                   for r in rows]}))
    return EXIT_OK


def run_terminate(cfg):
    p = {k: complex(*v) for k, v in cfg.params.items()}
    center = cfg.options.get("center", "0")
    mu = str(cfg.mu_value())
    if center == "z0":
        if mu not in ("0", "2"):
            raise ConfigError("at z0 the exponent is 0 or 2")
        res = tm.five_term_termination(cfg.N, int(mu), p["gamma"], p["delta"],
                                       grid=cfg.options.get("grid", 40))
    else:
        if "epsilon" not in p:
            raise ConfigError("terminate at 0 or 1 needs --epsilon")
        choice = {"0": "zero"}.get(mu, mu)
        res = tm.four_term_termination(cfg.N, choice, int(center), p["gamma"], p["delta"],
                                       p["epsilon"])
    report = res.to_json()
    _emit(cfg, _json(report))
    return EXIT_OK if not report["flags"] else EXIT_TOLERANCE


def _scan_point(args):
    cfg_json, value = args
    cfg = RunConfig.from_json(cfg_json)
    cfg.params[cfg.options["vary"]] = [value, 0.0]
    try:
        return ex.empirical_domain(_spec(cfg), cfg.options.get("angle", 0.0), N=cfg.N)
    except HeunError:
        return float("nan")


def run_scan(cfg):
    start, stop, count = cfg.options["values"]
    if count < 1 or count != int(count):
        raise ConfigError("--values COUNT must be a positive integer")
    values = [float(v) for v in np.linspace(start, stop, int(count))]
    jobs = [(cfg.to_json(), v) for v in values]
    workers = int(cfg.options.get("workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            radii = list(pool.map(_scan_point, jobs))
    else:
        radii = [_scan_point(j) for j in jobs]
    name = cfg.options["vary"]
    rows = [(v, r) for v, r in zip(values, radii)]
    if cfg.format == "csv":
        _emit(cfg, _csv([name, "radius"], rows))
    else:
        _emit(cfg, _json([{name: v, "radius": r if np.isfinite(r) else str(r)} for v, r in rows]))
    return EXIT_OK if all(np.isfinite(r) or r == float("inf") for r in radii) else EXIT_PARTIAL


_FN_ARITY = {"2f1": 4, "beta": 2, "ibeta": 3, "f1": 6, "f1at1": 4, "lgamma": 1}


def run_fn(cfg):
    name = cfg.options["name"]
    args = [complex(*a) for a in cfg.options["args"]]
    if len(args) != _FN_ARITY[name]:
        raise ConfigError(f"{name} takes {_FN_ARITY[name]} arguments, got {len(args)}")
    if name == "2f1":
        val = sf.gauss_2f1(*args)[0]
    elif name == "beta":
        val = sf.complete_beta(*args)
    elif name == "ibeta":
        val = sf.incomplete_beta(*args)[0]
    elif name == "f1":
        val = sf.appell_f1(*args)[0]
    elif name == "f1at1":
        val = sf.appell_f1_at_one(*args)
    else:
        val = sf.log_gamma(*args)
    if cfg.format == "csv":
        _emit(cfg, _csv(["re", "im"], [(val.real, val.imag)]))
    else:
        _emit(cfg, _json({"function": name, "value": _cpair(val)}))
    return EXIT_OK


RUNNERS = {"eval": run_eval, "compare": run_compare, "recurrence": run_recurrence,
           "terminate": run_terminate, "scan": run_scan, "fn": run_fn}


def _error_record(code, kind, message):
    sys.stderr.write(json.dumps({"error": code, "type": kind, "message": message}) + "\n")


def main(argv=None):
    try:
        parser = build_parser()
        ns = parser.parse_args(argv)
        if ns.config:
            with open(ns.config, encoding="utf-8") as fh:
                cfg = RunConfig.from_json(fh.read())
        else:
            if ns.subcommand is None:
                raise ConfigError("a subcommand is required")
            cfg = config_from_args(ns)
        if ns.dump_config:
            sys.stdout.write(cfg.to_json() + "\n")
            return EXIT_OK
        with np.errstate(all="ignore"):
            return RUNNERS[cfg.subcommand](cfg)
    except HeunError as exc:
        _error_record(exc.code, type(exc).__name__, str(exc))
        return EXIT_ERROR
    except (TypeError, KeyError, OSError) as exc:
        _error_record("E_CONFIG", type(exc).__name__, str(exc))
        return EXIT_ERROR
    except Exception as exc:  # invariant breach: report, never a traceback dump
        _error_record("E_INTERNAL", type(exc).__name__, str(exc))
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
