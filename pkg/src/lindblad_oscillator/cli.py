"""Command-line front end.

Subcommands: validate, moments, rho, wigner, steady, oracle-compare.  Results
go to ``--out`` (or stdout); a JSON run report goes to stderr.  Exit codes:
0 success, 2 bad configuration or arguments, 3 physics validation failure,
4 numerical breach.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import density_matrix, moments, oracle, wigner
from .errors import (
    ConstraintViolation,
    DegenerateInput,
    DegenerateRegime,
    GenFunctionDiverged,
    InvalidInput,
    InvalidRegime,
    LowPrecisionWarning,
    NoStationaryState,
    PRepresentationUnavailable,
    SingularInitialCondition,
    TruncationBreach,
    UnsupportedRegime,
)
from .params import FIELDS, LindbladMicroParams, OscillatorParams, from_micro, thermal_coefficients, validate

EXIT_OK, EXIT_PARSE, EXIT_PHYSICS, EXIT_NUMERIC = 0, 2, 3, 4

PHYSICS_ERRORS = (
    ConstraintViolation, InvalidRegime, DegenerateInput, UnsupportedRegime,
    NoStationaryState, PRepresentationUnavailable, SingularInitialCondition,
)
NUMERIC_ERRORS = (TruncationBreach, GenFunctionDiverged, DegenerateRegime, ArithmeticError)

INLINE_KEYS = {"hbar", "mass", "omega", "lambda", "mu", "d_pp", "d_qq", "d_pq"}
THERMAL_KEYS = {"kT", "lambda", "mu", "hbar", "mass", "omega"}
MICRO_KEYS = {"a1", "b1", "a2", "b2", "mu", "hbar", "mass", "omega"}

#: Gibbs bath with lambda = 1, mu = 0.3, omega = 1 and hbar omega / kT = 1
DEFAULT_CONFIG = {"thermal": {"kT": 1.0, "lambda": 1.0, "mu": 0.3, "hbar": 1.0, "mass": 1.0, "omega": 1.0}}


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, detail=None):
        super().__init__(message)
        self.code, self.kind, self.detail = code, kind, detail


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _num(x, name):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InvalidInput(f"{name} must be a number, got {x!r}")
    return float(x)


def _cnum(x, name):
    if not (isinstance(x, (list, tuple)) and len(x) == 2):
        raise InvalidInput(f"{name} must be [re, im]")
    return complex(_num(x[0], name), _num(x[1], name))


def coefficients_from_config(doc) -> dict[str, float]:
    """Turn a configuration document into the eight raw coefficients (unvalidated)."""
    if not isinstance(doc, dict):
        raise InvalidInput("configuration must be a JSON object")
    sources = [k for k in ("thermal", "micro") if k in doc] + (["inline"] if set(doc) & INLINE_KEYS else [])
    if len(sources) != 1:
        raise InvalidInput(f"exactly one parameter source required, found {sources or 'none'}")
    src = sources[0]
    if src == "inline":
        if set(doc) != INLINE_KEYS:
            extra, missing = set(doc) - INLINE_KEYS, INLINE_KEYS - set(doc)
            raise InvalidInput(f"inline parameters need exactly {sorted(INLINE_KEYS)}; "
                               f"missing {sorted(missing)}, unexpected {sorted(extra)}")
        return {k: _num(doc[k], k) for k in INLINE_KEYS}
    if len(doc) != 1:
        raise InvalidInput(f"{src!r} must be the only top-level key")
    block = doc[src]
    allowed = THERMAL_KEYS if src == "thermal" else MICRO_KEYS
    if not isinstance(block, dict) or set(block) - allowed:
        raise InvalidInput(f"{src!r} block accepts keys {sorted(allowed)}")
    base = {k: _num(block.get(k, 1.0), k) for k in ("hbar", "mass", "omega")}
    if src == "thermal":
        for k in ("kT", "lambda", "mu"):
            if k not in block:
                raise InvalidInput(f"thermal block needs {k!r}")
        lam, mu, kT = (_num(block[k], k) for k in ("lambda", "mu", "kT"))
        d_pp, d_qq, d_pq = thermal_coefficients(lam, mu, base["mass"], base["omega"], base["hbar"], kT)
        return {**base, "lambda": lam, "mu": mu, "d_pp": d_pp, "d_qq": d_qq, "d_pq": d_pq}
    if "a1" not in block or "b1" not in block:
        raise InvalidInput("micro block needs 'a1' and 'b1'")
    micro = LindbladMicroParams(*(_cnum(block[k], k) if k in block else 0j for k in ("a1", "b1", "a2", "b2")))
    d_pp, d_qq, d_pq, lam = from_micro(micro, base["hbar"])
    mu = _num(block.get("mu", 0.0), "mu")
    return {**base, "lambda": lam, "mu": mu, "d_pp": d_pp, "d_qq": d_qq, "d_pq": d_pq}


def load_config(path: str | None) -> dict:
    if path is None:
        return DEFAULT_CONFIG
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read configuration {path!r}: {exc}") from None


def build_params(coeffs: dict) -> OscillatorParams:
    return OscillatorParams(**{k: coeffs[k.rstrip("_")] for k in FIELDS})


@dataclass
class RunReport:
    scenario: str
    wall_time: float = 0.0
    warnings: dict = field(default_factory=lambda: {
        "LowPrecision": 0, "TruncationBreach": 0, "PRepresentationUnavailable": 0})
    outputs: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "wall_time": self.wall_time,
                "warnings": dict(self.warnings), "outputs": list(self.outputs)}


class _Sink:
    """Routes each output to its file, or to stdout when no path is set."""

    def __init__(self, out: str | None, report: RunReport, stdout):
        self.out, self.report, self.stdout = out, report, stdout

    def write(self, text: str, path: str | None = None):
        target = path or self.out
        if target is None:
            self.stdout.write(text)
            self.report.outputs.append("<stdout>")
        else:
            Path(target).write_text(text)
            self.report.outputs.append(str(target))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating, int)) else v for v in r])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _alpha0(args) -> complex:
    return complex(args.alpha0_re, args.alpha0_im)


def _times(args) -> np.ndarray:
    if not args.t1 > 0:
        raise InvalidInput("--t1 must be positive")
    if args.steps < 1:
        raise InvalidInput("--steps must be >= 1")
    return np.linspace(0.0, args.t1, args.steps + 1)


def _require_format(args, allowed):
    if args.format not in allowed:
        raise InvalidInput(f"{args.command} supports --format {'/'.join(allowed)}")


# -- scenarios ------------------------------------------------------------

def run_validate(args, coeffs, sink):
    _require_format(args, ("json",))
    report = validate(coeffs)
    body = {"params": coeffs, **report.as_dict()}
    sink.write(_json_text(body))
    if not report.passed:
        raise CliError(EXIT_PHYSICS, "ConstraintViolation",
                       "violated: " + ", ".join(report.violated), {"violated": report.violated})


MOMENT_COLUMNS = ["t", "re_a", "im_a", "re_a2", "im_a2", "n", "q", "p", "var_q", "var_p", "cov_qp"]


def run_moments(args, coeffs, sink):
    _require_format(args, ("csv", "json"))
    params = build_params(coeffs)
    ts = _times(args)
    st = moments.evolve(moments.MomentState.coherent(_alpha0(args)), ts, params)
    qs = moments.quadratures(st, params)
    cols = [ts, np.real(st.exp_a), np.imag(st.exp_a), np.real(st.exp_a2), np.imag(st.exp_a2),
            np.real(st.exp_n), qs.mean_q, qs.mean_p, qs.var_q, qs.var_p, qs.cov_qp]
    cols = [np.broadcast_to(np.asarray(c, dtype=float), ts.shape) for c in cols]
    rows = list(zip(*cols))
    if args.format == "csv":
        sink.write(_csv_text(MOMENT_COLUMNS, rows))
    else:
        sink.write(_json_text({"columns": MOMENT_COLUMNS, "rows": [[float(v) for v in r] for r in rows]}))


def run_rho(args, coeffs, sink):
    _require_format(args, ("json", "csv"))
    params = build_params(coeffs)
    if args.t1 < 0:
        raise InvalidInput("--t1 must be non-negative")
    rho = density_matrix.rho_matrix(args.dim, args.t1, _alpha0(args), params, variant=args.variant)
    if args.format == "csv":
        rows = [(m, n, rho.elements[m, n].real, rho.elements[m, n].imag)
                for m in range(rho.dim) for n in range(rho.dim)]
        sink.write(_csv_text(["m", "n", "re", "im"], rows))
        return
    sink.write(_json_text({
        "dim": rho.dim, "t": rho.time, "variant": args.variant,
        "elements": [[float(z.real), float(z.imag)] for z in rho.elements.ravel()],
        "trace_deficit": rho.trace_deficit, "hermiticity_residual": rho.hermiticity_residual,
    }))


def run_wigner(args, coeffs, sink):
    _require_format(args, ("csv",))
    params = build_params(coeffs)
    x10, x20 = args.alpha0_re, args.alpha0_im
    if args.kind == "steady":
        w = wigner.steady_state(params)[1]
    elif args.kind == "delta":
        w = wigner.delta_solution(x10, x20, args.t1, params)
    else:
        w = wigner.wavepacket_solution(x10, x20, args.t1, params)
    cov = w.covariance()
    if args.grid is None:
        sd = np.sqrt(np.diag(cov))
        grid = wigner.GridSpec(w.mean_x1 - 6 * sd[0], w.mean_x1 + 6 * sd[0],
                               w.mean_x2 - 6 * sd[1], w.mean_x2 + 6 * sd[1], 41, 41)
    else:
        grid = wigner.GridSpec.parse(args.grid)
    ev = wigner.evaluate_grid(w, grid)
    rows = [(x1, x2, ev.values[i, j]) for i, x1 in enumerate(ev.x1) for j, x2 in enumerate(ev.x2)]
    sink.write(_csv_text(["x1", "x2", "W"], rows))
    side = {
        "kind": w.kind.value, "t": None if math.isinf(w.time) else w.time,
        "mean": [w.mean_x1, w.mean_x2], "covariance": cov.tolist(),
        "grid_mass": ev.mass, "total_mass": wigner.total_mass(w),
    }
    side_path = args.sidecar or (f"{args.out}.json" if args.out else None)
    if side_path is None:
        sink.report.outputs.append({"sidecar": side})
    else:
        sink.write(_json_text(side), side_path)


def run_steady(args, coeffs, sink):
    _require_format(args, ("json",))
    params = build_params(coeffs)
    closed, _ = wigner.steady_state(params)
    lyap = wigner.steady_covariance_lyapunov(params)
    a2_inf, n_inf = moments.stationary_second_moments(params)
    sink.write(_json_text({
        "sigma_w": {"s11": closed.s11, "s22": closed.s22, "s12": closed.s12},
        "lyapunov_max_abs_difference": float(np.abs(closed.matrix() - lyap).max()),
        "lyapunov_residual": closed.lyapunov_residual,
        "asymptotic_number": float(n_inf),
        "asymptotic_a2": [float(complex(a2_inf).real), float(complex(a2_inf).imag)],
    }))


QUANTITIES = ("a", "a2", "n")


def run_oracle_compare(args, coeffs, sink):
    _require_format(args, ("json",))
    params = build_params(coeffs)
    ts = _times(args)
    alpha0 = _alpha0(args)
    dt = min(oracle.default_dt(params), oracle.stable_dt(params, args.dim))
    # a step that divides the output spacing keeps snapshots on the output grid
    per = max(1, int(math.ceil((ts[1] - ts[0]) / dt)))
    cfg = oracle.IntegratorConfig(t_final=args.t1, dim=args.dim, dt=args.t1 / (args.steps * per), save_every=per)
    traj = oracle.evolve(oracle.InitialState.coherent(alpha0), cfg, params)
    num = traj.expectations()
    ana = moments.evolve(moments.MomentState.coherent(alpha0), traj.times, params)
    series = {"a": (num.exp_a, ana.exp_a), "a2": (num.exp_a2, ana.exp_a2), "n": (num.exp_n, ana.exp_n)}
    wanted = QUANTITIES if args.quantity == "all" else (args.quantity,)
    dev = {q: float(np.abs(np.asarray(series[q][0]) - np.asarray(series[q][1])).max()) for q in wanted}
    sink.write(_json_text({
        "quantities": list(wanted), "max_abs_deviation": dev, "dim": args.dim, "t1": args.t1,
        "steps": args.steps, "dt": cfg.dt,
        "trace_drift": traj.trace_drift, "hermiticity_residual": traj.max_hermiticity_residual,
        "edge_population": traj.max_edge_population,
    }))
    if args.csv_out:
        header = ["t"]
        cols = [traj.times]
        for q in wanted:
            o, a = (np.asarray(v) for v in series[q])
            if np.iscomplexobj(o) or np.iscomplexobj(a):
                header += [f"re_{q}_oracle", f"im_{q}_oracle", f"re_{q}_analytic", f"im_{q}_analytic"]
                cols += [np.real(o), np.imag(o), np.real(a), np.imag(a)]
            else:
                header += [f"{q}_oracle", f"{q}_analytic"]
                cols += [o, a]
        sink.write(_csv_text(header, list(zip(*cols))), args.csv_out)


SCENARIOS = {
    "validate": run_validate, "moments": run_moments, "rho": run_rho,
    "wigner": run_wigner, "steady": run_steady, "oracle-compare": run_oracle_compare,
}


# -- argument parsing -----------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_PARSE, "UsageError", message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON parameter document (default: Gibbs bath, lambda=1, mu=0.3)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--alpha0-re", type=float, default=0.0)
    common.add_argument("--alpha0-im", type=float, default=0.0)

    parser = _Parser(prog="lindblad-osc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("validate", parents=[common], help="check the positivity constraints")
    p = sub.add_parser("moments", parents=[common], help="first and second moments on a time grid")
    p.add_argument("--t1", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=100)
    p = sub.add_parser("rho", parents=[common], help="Fock density matrix from the generating function")
    p.add_argument("--t1", type=float, default=1.0, help="evaluation time")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--variant", choices=density_matrix.VARIANTS, default=density_matrix.DEFAULT_VARIANT)
    p = sub.add_parser("wigner", parents=[common], help="Gaussian Wigner function on a grid")
    p.add_argument("--kind", choices=("wave_packet", "delta", "steady"), default="wave_packet")
    p.add_argument("--t1", type=float, default=1.0, help="evaluation time")
    p.add_argument("--grid", help="x1min,x1max,x2min,x2max,n1,n2 (use --grid=... when x1min is negative)")
    p.add_argument("--sidecar", help="JSON sidecar path (default: <out>.json)")
    sub.add_parser("steady", parents=[common], help="stationary covariance and phonon number")
    p = sub.add_parser("oracle-compare", parents=[common], help="analytic moments against the Fock oracle")
    p.add_argument("--quantity", choices=QUANTITIES + ("all",), default="all")
    p.add_argument("--t1", type=float, default=8.0)
    p.add_argument("--steps", type=int, default=80, help="number of comparison intervals")
    p.add_argument("--dim", type=int, default=60)
    p.add_argument("--csv-out", help="per-time-point CSV path")
    return parser


DEFAULT_FORMAT = {"validate": "json", "moments": "csv", "rho": "json", "wigner": "csv",
                  "steady": "json", "oracle-compare": "json"}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    start = time.perf_counter()
    report = RunReport(scenario="?")
    code = EXIT_OK
    error = None
    try:
        args = build_parser().parse_args(argv)
        report.scenario = args.command
        if args.format is None:
            args.format = DEFAULT_FORMAT[args.command]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", LowPrecisionWarning)
            try:
                coeffs = coefficients_from_config(load_config(args.config))
                SCENARIOS[args.command](args, coeffs, _Sink(args.out, report, stdout))
            finally:
                report.warnings["LowPrecision"] += sum(
                    issubclass(w.category, LowPrecisionWarning) for w in caught)
    except CliError as exc:
        code, error = exc.code, {"error": exc.kind, "message": str(exc), "detail": exc.detail}
    except PHYSICS_ERRORS as exc:
        detail = exc.report.as_dict() if getattr(exc, "report", None) is not None else None
        if isinstance(exc, PRepresentationUnavailable):
            report.warnings["PRepresentationUnavailable"] += 1
        code, error = EXIT_PHYSICS, {"error": type(exc).__name__, "message": str(exc), "detail": detail}
    except InvalidInput as exc:
        code, error = EXIT_PARSE, {"error": type(exc).__name__, "message": str(exc), "detail": None}
    except NUMERIC_ERRORS as exc:
        if isinstance(exc, TruncationBreach):
            report.warnings["TruncationBreach"] += 1
        code, error = EXIT_NUMERIC, {"error": type(exc).__name__, "message": str(exc), "detail": None}
    report.wall_time = time.perf_counter() - start
    if error is not None:
        error["exit_code"] = code
        stderr.write(json.dumps(error, sort_keys=True) + "\n")
    stderr.write(json.dumps({"run_report": report.as_dict()}, sort_keys=True, default=str) + "\n")
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
