"""Command-line front end.

Subcommands ``analytic``, ``simulate``, ``compare``, ``sweep-density`` and
``cost-estimate``. Settings are layered: built-in defaults, then a JSON file
given with ``--config``, then explicit flags.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O error.
Failures also write one JSON object to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field

from .channel_model import NetworkConfig, ProtocolKind, QuadratureError
from .latency_analytic import (
    COST_BUDGET,
    DEFAULT_TAIL_TOL,
    NonConvergenceError,
    estimate_enumeration_cost,
    expected_latency,
)
from .simulator import DEFAULT_SEED, SimulationError, density_nodes, run_batch

MODES = ("analytic", "simulate", "compare", "sweep-density", "cost-estimate")

COMPARE_COLUMNS = ("snr_db", "radius", "n_nodes", "protocol", "source", "mean_k", "std_err",
                   "ci_low", "ci_high", "k_prime", "tail_mass", "seed")
DENSITY_COLUMNS = ("rho", "radius", "n_nodes", "protocol", "mean_k", "std_err", "seed")
COST_COLUMNS = ("n_nodes", "k_prime", "ops_per_eval", "operations", "budget", "feasible")

DEFAULTS = {
    "nodes": 5,
    "radius": [1.0, 2.0, 3.0],
    "alpha": 2.0,
    "dims": 2,
    "rate": 1.0,
    "snr_grid": [float(x) for x in range(0, 21)],
    "theta": None,
    "protocol": "both",
    "trials": 1000,
    "seed": DEFAULT_SEED,
    "tail_tol": DEFAULT_TAIL_TOL,
    "out": "-",
    "format": "csv",
    "workers": 1,
    "rho_grid": [0.25, 0.5, 1.0, 2.0],
    "k_prime": 25,
    "ops_per_eval": 50,
}

MODE_DEFAULTS = {
    "sweep-density": {"radius": [1.0, 1.5, 2.0, 2.5, 3.0], "snr_grid": [5.0]},
}


class ValidationError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    mode: str
    nodes: int = DEFAULTS["nodes"]
    radius: list = field(default_factory=lambda: list(DEFAULTS["radius"]))
    alpha: float = DEFAULTS["alpha"]
    dims: int = DEFAULTS["dims"]
    rate: float = DEFAULTS["rate"]
    snr_grid: list = field(default_factory=lambda: list(DEFAULTS["snr_grid"]))
    theta: float | None = None
    protocol: str = DEFAULTS["protocol"]
    trials: int = DEFAULTS["trials"]
    seed: int = DEFAULTS["seed"]
    tail_tol: float = DEFAULTS["tail_tol"]
    out: str = DEFAULTS["out"]
    format: str = DEFAULTS["format"]
    workers: int = DEFAULTS["workers"]
    rho_grid: list = field(default_factory=lambda: list(DEFAULTS["rho_grid"]))
    k_prime: int = DEFAULTS["k_prime"]
    ops_per_eval: int = DEFAULTS["ops_per_eval"]

    @property
    def protocols(self) -> list[ProtocolKind]:
        if self.protocol == "both":
            return [ProtocolKind.NON_COOPERATIVE, ProtocolKind.COOPERATIVE]
        return [ProtocolKind(self.protocol)]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("workers")
        return d

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise ValidationError(f"format must be csv or json, got {self.format!r}")
        if not isinstance(self.nodes, int) or self.nodes < 1:
            raise ValidationError(f"--nodes must be a positive integer, got {self.nodes!r}")
        if self.mode == "cost-estimate":
            if self.k_prime < 1 or self.ops_per_eval < 1:
                raise ValidationError("--k-prime and --ops-per-eval must be positive")
            return
        if not self.radius or any(not r > 0 for r in self.radius):
            raise ValidationError("--radius needs one or more positive values")
        if self.dims not in (1, 2, 3):
            raise ValidationError(f"--dims must be 1, 2 or 3, got {self.dims}")
        if not self.alpha > 0 or not self.rate > 0:
            raise ValidationError("--alpha and --rate must be positive")
        if self.protocol not in ("both", *(p.value for p in ProtocolKind)):
            raise ValidationError(f"unknown protocol {self.protocol!r}")
        if self.theta is not None:
            if not self.theta >= 0:
                raise ValidationError(f"--theta must be non-negative, got {self.theta}")
        elif not self.snr_grid:
            raise ValidationError("the SNR grid is empty")
        if any(not math.isfinite(x) for x in self.snr_grid):
            raise ValidationError("SNR values must be finite")
        if self.mode in ("simulate", "compare", "sweep-density") and self.trials < 1:
            raise ValidationError("--trials must be positive")
        if self.mode in ("analytic", "compare") and not 0 < self.tail_tol < 1:
            raise ValidationError("--tail-tol must lie in (0, 1)")
        if self.mode == "sweep-density":
            if self.dims != 2:
                raise ValidationError("sweep-density requires --dims 2")
            if not self.rho_grid or any(not r > 0 for r in self.rho_grid):
                raise ValidationError("--rho-grid needs one or more positive values")
            if len(self.snr_grid) != 1:
                raise ValidationError("sweep-density takes a single SNR value")


def parse_grid(text: str) -> list[float]:
    """Parse ``"a,b,c"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}") from None


def _common_flags(p: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    p.add_argument("--config", default=s, help="JSON file with default settings")
    p.add_argument("--nodes", type=int, default=s, help="number of intended receivers N")
    p.add_argument("--radius", type=parse_grid, default=s, help="cell radius or comma list of radii")
    p.add_argument("--alpha", type=float, default=s, help="path-loss exponent")
    p.add_argument("--dims", type=int, default=s, help="spatial dimension (1, 2 or 3)")
    p.add_argument("--rate", type=float, default=s, help="target rate in bit/s/Hz")
    snr = p.add_mutually_exclusive_group()
    snr.add_argument("--snr-db", type=float, dest="snr_db", default=s, help="single transmit SNR in dB")
    snr.add_argument("--snr-grid", type=parse_grid, dest="snr_grid", default=s,
                     help="SNR values in dB: 'a,b,c' or 'start:stop:step' (default 0:20:1)")
    p.add_argument("--theta", type=float, default=s, help="use this decoding threshold directly")
    p.add_argument("--protocol", default=s,
                   choices=["both", "non_cooperative", "cooperative"])
    p.add_argument("--trials", type=int, default=s, help="Monte-Carlo trials per point")
    p.add_argument("--seed", type=int, default=s)
    p.add_argument("--tail-tol", type=float, dest="tail_tol", default=s)
    p.add_argument("--workers", type=int, default=s, help="processes for simulation batches")
    p.add_argument("--out", default=s, help="output path, '-' for stdout")
    p.add_argument("--format", choices=["csv", "json"], default=s)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopcast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("analytic", "simulate", "compare"):
        _common_flags(sub.add_parser(mode))
    sweep = sub.add_parser("sweep-density")
    _common_flags(sweep)
    sweep.add_argument("--rho-grid", type=parse_grid, dest="rho_grid", default=argparse.SUPPRESS)
    cost = sub.add_parser("cost-estimate")
    cost.add_argument("--config", default=argparse.SUPPRESS)
    cost.add_argument("--nodes", type=int, default=argparse.SUPPRESS)
    cost.add_argument("--k-prime", type=int, dest="k_prime", default=argparse.SUPPRESS)
    cost.add_argument("--ops-per-eval", type=int, dest="ops_per_eval", default=argparse.SUPPRESS)
    cost.add_argument("--out", default=argparse.SUPPRESS)
    cost.add_argument("--format", choices=["csv", "json"], default=argparse.SUPPRESS)
    return parser


def resolve_spec(argv=None) -> ExperimentSpec:
    args = vars(build_parser().parse_args(argv))
    mode = args.pop("mode")
    settings = dict(DEFAULTS)
    settings.update(MODE_DEFAULTS.get(mode, {}))
    config_path = args.pop("config", None)
    if config_path is not None:
        try:
            with open(config_path, encoding="utf-8") as fh:
                file_settings = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from exc
        settings.update(_normalize(file_settings))
    settings.update(_normalize(args))
    known = {f.name for f in dataclasses.fields(ExperimentSpec)}
    unknown = set(settings) - known
    if unknown:
        raise ValidationError(f"unknown settings: {sorted(unknown)}")
    spec = ExperimentSpec(mode=mode, **settings)
    spec.validate()
    return spec


def _normalize(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key == "snr_db":
            key, value = "snr_grid", [float(value)]
        elif key in ("radius", "snr_grid", "rho_grid"):
            if isinstance(value, str):
                value = parse_grid(value)
            elif isinstance(value, (int, float)):
                value = [float(value)]
            else:
                value = [float(v) for v in value]
        out[key] = value
    return out


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return float(format(value, ".12g"))
    return value


def _configs(spec: ExperimentSpec):
    for snr_db in ([None] if spec.theta is not None else spec.snr_grid):
        for radius in spec.radius:
            kwargs = dict(n_nodes=spec.nodes, radius=radius, dims=spec.dims, alpha=spec.alpha,
                          rate=spec.rate)
            if spec.theta is not None:
                cfg = NetworkConfig(theta_override=spec.theta, **kwargs)
            else:
                cfg = NetworkConfig.from_snr_db(snr_db, **kwargs)
            yield snr_db, cfg


def _analytic_row(snr_db, cfg, protocol, spec):
    res = expected_latency(cfg, protocol, spec.tail_tol)
    return {"snr_db": snr_db, "radius": cfg.radius, "n_nodes": cfg.n_nodes, "protocol": protocol.value,
            "source": "analytic", "mean_k": res.expected_k, "std_err": None, "ci_low": None,
            "ci_high": None, "k_prime": res.truncation_k_prime, "tail_mass": res.tail_mass,
            "seed": None}


def _sim_row(snr_db, cfg, protocol, spec):
    s = run_batch(cfg, protocol, spec.trials, spec.seed, workers=spec.workers)
    return {"snr_db": snr_db, "radius": cfg.radius, "n_nodes": cfg.n_nodes, "protocol": protocol.value,
            "source": "simulated", "mean_k": s.mean_k, "std_err": s.std_err, "ci_low": s.ci95[0],
            "ci_high": s.ci95[1], "k_prime": None, "tail_mass": None, "seed": spec.seed}


def compare_rows(spec: ExperimentSpec) -> list[dict]:
    rows = []
    for snr_db, cfg in _configs(spec):
        for protocol in spec.protocols:
            if spec.mode in ("analytic", "compare"):
                rows.append(_analytic_row(snr_db, cfg, protocol, spec))
            if spec.mode in ("simulate", "compare"):
                rows.append(_sim_row(snr_db, cfg, protocol, spec))
    return rows


def density_rows(spec: ExperimentSpec) -> list[dict]:
    snr_db = spec.snr_grid[0]
    rows = []
    for protocol in spec.protocols:
        for rho in spec.rho_grid:
            for radius in spec.radius:
                n = density_nodes(rho, radius)
                cfg = NetworkConfig.from_snr_db(snr_db, n_nodes=n, radius=radius, dims=2,
                                                alpha=spec.alpha, rate=spec.rate)
                s = run_batch(cfg, protocol, spec.trials, spec.seed, workers=spec.workers)
                rows.append({"rho": rho, "radius": radius, "n_nodes": n, "protocol": protocol.value,
                             "mean_k": s.mean_k, "std_err": s.std_err, "seed": spec.seed})
    return rows


def cost_rows(spec: ExperimentSpec) -> list[dict]:
    est = estimate_enumeration_cost(spec.nodes, spec.k_prime, spec.ops_per_eval)
    return [{"n_nodes": spec.nodes, "k_prime": spec.k_prime, "ops_per_eval": spec.ops_per_eval,
             "operations": est.operations, "budget": COST_BUDGET, "feasible": est.feasible}]


def render(spec: ExperimentSpec, columns, rows) -> str:
    if spec.format == "json":
        doc = {"spec": {k: _json_value(v) for k, v in spec.to_dict().items()},
               "rows": [{c: _json_value(row[c]) for c in columns} for row in rows]}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write("# coopcast " + spec.mode + "\n")
    buf.write("# spec: " + json.dumps(spec.to_dict(), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_output(spec: ExperimentSpec, text: str) -> None:
    if spec.out == "-":
        sys.stdout.write(text)
        return
    with open(spec.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run(spec: ExperimentSpec) -> None:
    if spec.mode == "cost-estimate":
        rows = cost_rows(spec)
        row = rows[0]
        verdict = ("enumeration feasible" if row["feasible"]
                   else "enumeration infeasible; use markov_dp")
        print(f"operations={fmt(row['operations'])} budget={fmt(COST_BUDGET)}: {verdict}")
        if spec.out != "-":
            write_output(spec, render(spec, COST_COLUMNS, rows))
        return
    if spec.mode == "sweep-density":
        write_output(spec, render(spec, DENSITY_COLUMNS, density_rows(spec)))
        return
    write_output(spec, render(spec, COMPARE_COLUMNS, compare_rows(spec)))


def _fail(kind: str, exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        spec = resolve_spec(argv)
    except ValidationError as exc:
        return _fail("validation", exc, 1)
    except argparse.ArgumentTypeError as exc:
        return _fail("validation", exc, 1)
    except OSError as exc:
        return _fail("io", exc, 3)
    except SystemExit as exc:
        # argparse usage errors
        return 0 if exc.code == 0 else 1
    try:
        run(spec)
    except (ValidationError, ValueError) as exc:
        return _fail("validation", exc, 1)
    except (NonConvergenceError, QuadratureError, SimulationError, ArithmeticError) as exc:
        return _fail("numeric", exc, 2)
    except OSError as exc:
        return _fail("io", exc, 3)
    return 0


if __name__ == "__main__":
    sys.exit(main())
