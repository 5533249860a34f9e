"""Command-line interface: ``gaussdiv {divergence,interpolate,sweep,density,validate}``.

Problems are described in JSON; results are written as CSV (or JSON for
``interpolate``). Diagnostics go to stderr only.

Exit codes: 0 ok, 1 validation failure, 2 configuration error, 3 domain error.
"""

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import jsonschema
import numpy as np

from . import divergences, oracles
from .density import log_density, log_density_form
from .errors import ConfigError, DomainViolation, NotEquivalent
from .gaussian import (
    BaseMeasure,
    GaussianMeasure,
    equivalence_diagnostics,
    from_relative,
    kernel_covariance,
    project,
    to_relative,
)
from .mixture import interpolate_relative

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3

_NUMBER_OR_GRID = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 1},
    ]
}

_MEASURE = {
    "type": "object",
    "required": ["cov"],
    "additionalProperties": False,
    "properties": {
        "mean": {
            "oneOf": [
                {"const": "zero"},
                {"type": "array", "items": {"type": "number"}, "minItems": 1},
            ]
        },
        "cov": {
            "type": "object",
            "required": ["kind", "payload"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["dense", "diag", "kernel"]},
                "payload": {},
            },
        },
    },
}

SPEC_SCHEMA = {
    "type": "object",
    "required": ["base", "measures", "alpha"],
    "additionalProperties": False,
    "properties": {
        "base": _MEASURE,
        "measures": {"type": "array", "items": _MEASURE, "minItems": 2},
        "alpha": _NUMBER_OR_GRID,
        "gamma": _NUMBER_OR_GRID,
        "truncation": {
            "oneOf": [
                {"type": "integer", "minimum": 1},
                {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            ]
        },
        "points": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "description": {"type": "string"},
    },
}

_KERNEL_SCHEMA = {
    "type": "object",
    "required": ["kernel", "grid"],
    "additionalProperties": False,
    "properties": {
        "kernel": {"enum": ["rbf", "matern32"]},
        "length_scale": {"type": "number", "exclusiveMinimum": 0},
        "scale": {"type": "number", "exclusiveMinimum": 0},
        "grid": {
            "oneOf": [
                {"type": "integer", "minimum": 1},
                {"type": "array", "items": {"type": "number"}, "minItems": 1},
            ]
        },
    },
}


class Problem:
    """Parsed and validated problem specification."""

    def __init__(self, base, measures, alphas, gammas, truncations, points):
        self.base = base
        self.measures = measures
        self.alphas = alphas
        self.gammas = gammas
        self.truncations = truncations
        self.points = points

    @property
    def dim(self):
        return self.base.dim


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x) + 0.0)


def _schema_error(err, where):
    path = "/".join(str(p) for p in err.absolute_path)
    return ConfigError(f"{where} invalid at '/{path}': {err.message}")


def _validate(instance, schema, where):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        raise _schema_error(errors[0], where)


def _as_grid(value, name, integer=False):
    grid = value if isinstance(value, list) else [value]
    arr = np.asarray(grid, dtype=float)
    if arr.size > 1:
        d = np.diff(arr)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError(f"{name} grid must be strictly sorted")
    return [int(v) for v in grid] if integer else [float(v) for v in grid]


def _parse_cov(desc, where):
    kind, payload = desc["kind"], desc["payload"]
    try:
        if kind == "dense":
            m = np.asarray(payload, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ConfigError(f"{where}: dense payload must be a square matrix")
            return m
        if kind == "diag":
            v = np.asarray(payload, dtype=float)
            if v.ndim != 1 or v.size == 0:
                raise ConfigError(f"{where}: diag payload must be a non-empty list")
            return np.diag(v)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: payload is not numeric: {exc}") from exc
    _validate(payload, _KERNEL_SCHEMA, f"{where} kernel payload")
    grid = payload["grid"]
    if isinstance(grid, int):
        grid = (np.arange(grid) + 0.5) / grid
    return kernel_covariance(
        payload["kernel"],
        grid,
        scale=payload.get("scale", 1.0),
        length_scale=payload.get("length_scale", 0.2),
    ).matrix


def _parse_measure(desc, where):
    cov = _parse_cov(desc["cov"], f"{where}/cov")
    n = cov.shape[0]
    mean = desc.get("mean", "zero")
    mean = np.zeros(n) if mean == "zero" else np.asarray(mean, dtype=float)
    if mean.shape != (n,):
        raise ConfigError(f"{where}: mean has length {mean.size}, covariance has dimension {n}")
    return GaussianMeasure(mean, cov)


def parse_spec(raw):
    """Validate a decoded JSON problem and build the measures."""
    _validate(raw, SPEC_SCHEMA, "spec")
    base_mu = _parse_measure(raw["base"], "/base")
    measures = [_parse_measure(m, f"/measures/{i}") for i, m in enumerate(raw["measures"])]
    for i, m in enumerate(measures):
        if m.dim != base_mu.dim:
            raise ConfigError(f"/measures/{i} has dimension {m.dim}, base has {base_mu.dim}")
    base = BaseMeasure(base_mu)
    alphas = _as_grid(raw["alpha"], "alpha")
    gammas = _as_grid(raw["gamma"], "gamma") if "gamma" in raw else None
    truncs = _as_grid(raw["truncation"], "truncation", integer=True) if "truncation" in raw else None
    if truncs is not None and max(truncs) > base.dim:
        raise ConfigError(f"truncation {max(truncs)} exceeds dimension {base.dim}")
    points = None
    if "points" in raw:
        points = np.asarray(raw["points"], dtype=float)
        if points.ndim != 2 or points.shape[1] != base.dim:
            raise ConfigError(f"points must be a list of length-{base.dim} vectors")
    return Problem(base, measures, alphas, gammas, truncs, points)


def bundled_specs():
    """Names of the problem specifications shipped with the package."""
    root = resources.files("gaussdiv") / "specs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_spec(path):
    """Load a spec from a file path, or ``bundled:<name>`` for a shipped one."""
    if path is None:
        raise ConfigError("this command needs --spec")
    try:
        if path.startswith("bundled:"):
            name = path.split(":", 1)[1]
            text = (resources.files("gaussdiv") / "specs" / f"{name}.json").read_text()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read spec {path!r}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"spec is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    return parse_spec(raw)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _map(fn, items, threads):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _min_diag(report):
    vals = [v for k, v in report.diagnostics.items() if k.startswith("min_eig")]
    return min(vals) if vals else None


def _pairs(problem):
    n = len(problem.measures)
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _truncated(problem):
    # A single truncation compresses everything onto the leading base eigenvectors.
    if problem.truncations is None:
        return problem.base, problem.measures
    if len(problem.truncations) != 1:
        raise ConfigError("a truncation grid is only meaningful for 'sweep --mode truncation'")
    n = problem.truncations[0]
    return _project_all(problem, n)


def _project_all(problem, n):
    measures = [project(m, problem.base, n)[0] for m in problem.measures]
    _, base = project(problem.base.measure, problem.base, n)
    return base, measures


def cmd_divergence(problem, args):
    base, measures = _truncated(problem)
    jobs = []
    for i, j in _pairs(problem):
        for a in problem.alphas:
            for g in problem.gammas or [None]:
                jobs.append((i, j, a, g))

    def one(job):
        i, j, a, g = job
        if g is None:
            rep = divergences.js_geometric_exact(measures[i], measures[j], a, base)
        else:
            rep = divergences.js_regularized(measures[i], measures[j], a, g)
        return (f"{i}-{j}", a, g, rep.value, rep.mean_term, rep.det_term, rep.trace_term, _min_diag(rep))

    rows = _map(one, jobs, args.threads)
    header = ["pair", "alpha", "gamma", "value", "mean_term", "det_term", "trace_term", "min_eig_diag"]
    return _csv_text(header, rows)


def cmd_interpolate(problem, args):
    base, measures = _truncated(problem)
    r0 = to_relative(measures[0], base)
    r1 = to_relative(measures[1], base)
    out = []
    for a in problem.alphas:
        mix = interpolate_relative(r0, r1, a)
        mu = from_relative(mix.relative, base)
        out.append(
            {
                "alpha": a,
                "log_z": mix.log_z,
                "mean": [float(v) for v in mu.mean],
                "cov": [[float(v) for v in row] for row in mu.cov.matrix],
                "u_alpha": [float(v) for v in mix.u_alpha],
                "s_alpha": [[float(v) for v in row] for row in mix.s_alpha.matrix],
            }
        )
    return json.dumps({"dim": base.dim, "results": out}, indent=1) + "\n"


def _gamma_sweep(problem, args):
    if not problem.gammas:
        raise ConfigError("sweep --mode gamma needs a 'gamma' grid")
    base, measures = _truncated(problem)
    mu0, mu1 = measures[0], measures[1]
    zero_mean = not (np.any(mu0.mean) or np.any(mu1.mean))
    rows = []
    for a in problem.alphas:
        values = _map(lambda g: divergences.js_regularized(mu0, mu1, a, g).value, problem.gammas, args.threads)
        reference = None
        if zero_mean:
            try:
                reference = divergences.js_geometric_exact(mu0, mu1, a, base).value
            except NotEquivalent:
                reference = None
        if reference is None:
            reference = values[int(np.argmin(problem.gammas))]
        rows.extend((a, g, v, abs(v - reference)) for g, v in zip(problem.gammas, values))
    return _csv_text(["alpha", "gamma", "value", "abs_error"], rows)


def _truncation_sweep(problem, args):
    if not problem.truncations:
        raise ConfigError("sweep --mode truncation needs a 'truncation' grid")
    gamma = None
    if problem.gammas:
        if len(problem.gammas) != 1:
            raise ConfigError("sweep --mode truncation takes a single gamma")
        gamma = problem.gammas[0]
    rows = []
    for a in problem.alphas:

        def one(n):
            base, measures = _project_all(problem, n)
            mu0, mu1 = measures[0], measures[1]
            if gamma is None:
                return divergences.js_geometric_exact(mu0, mu1, a, base).value
            return divergences.js_regularized(mu0, mu1, a, gamma).value

        values = _map(one, problem.truncations, args.threads)
        reference = values[int(np.argmax(problem.truncations))]
        rows.extend((a, n, v, abs(v - reference)) for n, v in zip(problem.truncations, values))
    return _csv_text(["alpha", "truncation", "value", "abs_error"], rows)


def cmd_sweep(problem, args):
    if args.mode == "gamma":
        return _gamma_sweep(problem, args)
    return _truncation_sweep(problem, args)


def cmd_density(problem, args):
    base, measures = _truncated(problem)
    if problem.points is not None:
        rows = []
        pts = problem.points
        if base.dim != problem.dim:
            raise ConfigError("points cannot be combined with a truncation")
        for i, mu in enumerate(measures):
            vals = np.atleast_1d(log_density(to_relative(mu, base), base, pts))
            rows.extend((i, k, v) for k, v in enumerate(vals))
        return _csv_text(["measure", "point", "log_density"], rows)
    rows = []
    for i, mu in enumerate(measures):
        diag = equivalence_diagnostics(mu, base)
        form = log_density_form(to_relative(mu, base))
        rows.append(
            (
                i,
                base.dim,
                form.const_term,
                form.trace_s,
                form.trace_t,
                diag.hs_norm_s,
                diag.trace_norm_s,
                diag.picard_sum,
                diag.min_eig_i_minus_s,
            )
        )
    header = [
        "measure",
        "dim",
        "const_term",
        "trace_s",
        "trace_t",
        "hs_norm_s",
        "trace_norm_s",
        "picard_sum",
        "min_eig_i_minus_s",
    ]
    return _csv_text(header, rows)


def cmd_validate(args):
    report = oracles.run_validation(seed=args.seed, samples=args.samples, threads=args.threads)
    return report.format(), (EXIT_OK if report.ok else EXIT_VALIDATION)


def _global_flags(parser, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--spec", default=d(None), help="problem JSON file, or bundled:<name>")
    parser.add_argument("--out", default=d("-"), help="output path, '-' for stdout")
    parser.add_argument("--seed", type=int, default=d(42), help="RNG seed for Monte Carlo oracles")
    parser.add_argument("--samples", type=int, default=d(1_000_000), help="Monte Carlo sample count")
    parser.add_argument("--threads", type=int, default=d(os.cpu_count() or 1), help="worker threads")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gaussdiv", description="Divergences between Gaussian measures on truncated Hilbert spaces."
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub.add_parser("divergence", parents=[common], help="JS divergence for every measure pair")
    sub.add_parser("interpolate", parents=[common], help="geometric mixture of the first two measures")
    p = sub.add_parser("sweep", parents=[common], help="gamma or truncation sweep")
    p.add_argument("--mode", choices=["gamma", "truncation"], required=True)
    sub.add_parser("density", parents=[common], help="log-density summary or pointwise values")
    sub.add_parser("validate", parents=[common], help="run the oracle pairing suite")
    return parser


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            text, code = cmd_validate(args)
            _emit(text, args.out)
            return code
        problem = load_spec(args.spec)
        handler = {
            "divergence": cmd_divergence,
            "interpolate": cmd_interpolate,
            "sweep": cmd_sweep,
            "density": cmd_density,
        }[args.command]
        text = handler(problem, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainViolation as exc:
        what = exc.quantity or "value"
        print(f"domain error in {what}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
