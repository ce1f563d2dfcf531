"""Command-line entry point: every experiment writes a CSV plus a JSON manifest.

Exit codes: 0 success, 2 invalid arguments or configuration (nothing is
written), 3 the experiment itself failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

from . import __version__

__all__ = ["RunConfig", "ConfigError", "COMMANDS", "build_parser", "run", "main"]


class ConfigError(ValueError):
    """Invalid command, parameter, or configuration file."""


# -- parameter schemas ---------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in str(text).split(",") if t.strip()]


@dataclass(frozen=True)
class Param:
    default: Any
    kind: Callable
    help: str
    choices: tuple | None = None


COMMANDS: dict[str, dict[str, Param]] = {
    "lt-check": {
        "dim": Param(2, int, "number of variables n"),
        "max_degree": Param(4, int, "certify every harmonic basis element of degree <= N"),
        "tau": Param(None, float, "minimum cone ratio min Re rho_j / |rho| for witnesses"),
    },
    "scatter sweep": {
        "shape": Param("disk", str, "contrast shape", ("disk", "square")),
        "m0": Param(0.5, float, "contrast value, n^2 = 1 - m0"),
        "box": Param([-1.0, 1.0], _float_list, "grid box lo,hi (the shape fills it)"),
        "kmin": Param(1.0, float, "first wavenumber"),
        "kmax": Param(8.0, float, "last wavenumber"),
        "steps": Param(701, int, "number of equispaced wavenumbers"),
        "dirs": Param(32, int, "far-field directions M"),
        "res": Param(36, int, "grid cells per side"),
    },
    "ite radial": {
        "a": Param(1.0, float, "disk radius"),
        "m0": Param(0.5, float, "contrast value, n^2 = 1 - m0"),
        "kmax": Param(8.0, float, "largest wavenumber searched"),
    },
    "cgo decay": {
        "shape": Param("square", str, "potential support", ("square",)),
        "k": Param(2.0, float, "wavenumber"),
        "m0": Param(0.5, float, "contrast value on the unit square"),
        "rho_list": Param([20.0, 40.0, 80.0, 160.0], _float_list, "|rho| values"),
        "p": Param([2, 4], _int_list, "L^p exponents"),
        "n_grid": Param(256, int, "periodic grid points per side"),
    },
    "cgo dominance": {
        "degree": Param(2, int, "degree N of P = Im (x1 + i x2)^N / N"),
        "rho_list": Param([40.0, 80.0, 160.0, 320.0], _float_list, "|rho| schedule"),
        "k": Param(2.0, float, "wavenumber"),
        "epsilon": Param(0.5, float, "corner cutoff radius"),
        "n_grid": Param(1024, int, "periodic grid points per side"),
    },
    "cgo mollifier": {
        "eps_list": Param([1.0, 2.0, 4.0, 8.0], _float_list, "mollifier widths"),
        "rho_list": Param([80.0, 160.0, 320.0, 640.0], _float_list, "|rho| values"),
    },
    "cgo orthogonality": {
        "m0": Param(0.9, float, "disk contrast"),
        "res": Param(48, int, "grid cells per side"),
        "kmin": Param(4.05, float, "bracket for the non-scattering wavenumber"),
        "kmax": Param(4.15, float, "bracket for the non-scattering wavenumber"),
        "rho": Param(4.0, float, "|rho| of the CGO solution"),
        "control": Param(1.1, float, "control wavenumber factor"),
    },
    "selftest": {
        "criterion": Param([], _int_list, "acceptance criteria to run (default all)"),
    },
}

DEFAULT_OUT = {
    "lt-check": "lt-check.csv",
    "scatter sweep": "sweep.csv",
    "ite radial": "ite.csv",
    "cgo decay": "decay.csv",
    "cgo dominance": "dom.csv",
    "cgo mollifier": "moll.csv",
    "cgo orthogonality": "orth.csv",
    "selftest": "selftest.csv",
}


def _default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass
class RunConfig:
    """Fully resolved parameters of one invocation."""

    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    out: str = ""
    plot_data: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        schema = COMMANDS[self.command]
        unknown = set(self.params) - set(schema)
        if unknown:
            raise ConfigError(f"unknown keys for {self.command}: {sorted(unknown)}")
        resolved = {}
        for key, spec in schema.items():
            value = self.params.get(key, spec.default)
            resolved[key] = _coerce(key, value, spec)
        self.params = resolved
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.out:
            self.out = DEFAULT_OUT[self.command]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown keys: {sorted(unknown)}")
        if "command" not in data:
            raise ConfigError("missing key 'command'")
        return cls(**data)


def _coerce(key: str, value, spec: Param):
    if value is None:
        return None
    try:
        if isinstance(spec.default, list):
            items = value if isinstance(value, list) else spec.kind(value)
            elem = type(spec.default[0]) if spec.default else int
            value = [elem(v) for v in items]
        else:
            value = spec.kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    if spec.choices is not None and value not in spec.choices:
        raise ConfigError(f"{key} must be one of {spec.choices}")
    return value


# -- experiments ------------------------------------------------------------------------------

@dataclass
class Table:
    header: list[str]
    rows: list[list]
    id_columns: int = 1
    failed: str | None = None


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _lt_check(cfg: RunConfig) -> Table:
    from .harmonic import harmonic_basis
    from .laplace_variety import check_nonvanishing

    p = cfg.params
    _require(p["dim"] >= 2, "dim must be >= 2")
    _require(p["max_degree"] >= 0, "max-degree must be >= 0")
    rows = []
    for N in range(p["max_degree"] + 1):
        for i, poly in enumerate(harmonic_basis(p["dim"], N)):
            cert = check_nonvanishing(poly, tau=p["tau"])
            rows.append([p["dim"], N, i, str(cert.witness), str(cert.value.re),
                         str(cert.value.im), str(cert.divisible).lower()])
    return Table(["n", "N", "basisIndex", "witnessRho", "valueRe", "valueIm", "divisible"], rows, 3)


def _scatter_sweep(cfg: RunConfig) -> Table:
    from .helmholtz2d import ContrastField, ScatterConfig, min_singular_sweep

    p = cfg.params
    _require(len(p["box"]) == 2 and p["box"][0] < p["box"][1], "box must be lo,hi with lo < hi")
    _require(0 < p["kmin"] <= p["kmax"], "need 0 < kmin <= kmax")
    _require(p["steps"] >= 1 and p["res"] >= 4, "steps >= 1 and res >= 4 required")
    lo, hi = p["box"]
    if p["shape"] == "disk":
        _require(lo == -hi, "disk sweeps need a symmetric box -a,a")
        m = ContrastField.disk(p["m0"], p["res"], radius=hi, box=(lo, hi))
    else:
        m = ContrastField.square(p["m0"], p["res"], square=(lo, hi), box=(lo, hi))
    sc = ScatterConfig(p["kmin"], n_dirs=p["dirs"])
    rows = min_singular_sweep(m, p["kmin"], p["kmax"], p["steps"], sc, workers=cfg.workers)
    return Table(["k", "sigma_min", "sigma_max", "cond", "skipped"],
                 [[r.k, r.sigma_min, r.sigma_max, r.cond, int(r.skipped)] for r in rows])


def _ite_radial(cfg: RunConfig) -> Table:
    from .helmholtz2d import radial_nsk_roots

    p = cfg.params
    _require(p["a"] > 0 and p["kmax"] > 0, "a and kmax must be positive")
    _require(p["m0"] < 1, "m0 must be < 1")
    roots = radial_nsk_roots(p["a"], math.sqrt(1 - p["m0"]), p["kmax"])
    return Table(["m_index", "k_star", "residual"], [[r.m_index, r.k_star, r.residual] for r in roots], 2)


def _cgo_decay(cfg: RunConfig) -> Table:
    from .cgo import PeriodicGrid, born_series_cgo, lp_norm, square_potential, unit_rho

    p = cfg.params
    _require(all(r > 0 for r in p["rho_list"]) and all(q >= 1 for q in p["p"]),
             "rho-list must be positive and p >= 1")
    grid = PeriodicGrid.around(-0.5, 1.5, p["n_grid"])
    Q, _, D = square_potential(grid, p["k"], m0=p["m0"])
    rows = []
    for s in p["rho_list"]:
        f = born_series_cgo(Q, unit_rho(s), grid)
        for q in p["p"]:
            rows.append([s, q, lp_norm(f.psi, D, q, grid.h), f.series_terms, f.residual])
    return Table(["rho_mag", "p", "norm", "series_terms", "residual"], rows, 2)


def _cgo_dominance(cfg: RunConfig) -> Table:
    from .acceptance import dominance_poly
    from .cgo import corner_dominance_report

    p = cfg.params
    _require(p["degree"] >= 1, "degree must be >= 1")
    _require(len(p["rho_list"]) >= 2, "need at least two |rho| values")
    rep = corner_dominance_report(dominance_poly(p["degree"]), p["rho_list"], k=p["k"],
                                  epsilon=p["epsilon"], n_grid=p["n_grid"])
    rows = [[r.rho_mag, r.T1, r.T2, r.T3, r.exact, r.series_terms] for r in rep.rows]
    rows.append(["slope", rep.slopes["T1"], rep.slopes["T2"], rep.slopes["T3"], rep.slopes["exact"], ""])
    return Table(["rho_mag", "T1", "T2", "T3", "exact", "series_terms"], rows)


def _cgo_mollifier(cfg: RunConfig) -> Table:
    from .cgo import MollifierSpec, mollified_symbol_sup, unit_rho

    p = cfg.params
    rows = [[e, r, mollified_symbol_sup(MollifierSpec(e), unit_rho(r))]
            for e in p["eps_list"] for r in p["rho_list"]]
    return Table(["epsilon", "rho_mag", "sup"], rows, 2)


def _cgo_orthogonality(cfg: RunConfig) -> Table:
    from .cgo import orthogonality_residual, unit_rho
    from .helmholtz2d import ContrastField, ScatterConfig, locate_dip

    p = cfg.params
    _require(0 < p["kmin"] < p["kmax"], "need 0 < kmin < kmax")
    m = ContrastField.disk(p["m0"], p["res"])
    sc = ScatterConfig(0.5 * (p["kmin"] + p["kmax"]))
    ks, sigma = locate_dip(m, p["kmin"], p["kmax"], sc)
    at = orthogonality_residual(m, ks, unit_rho(p["rho"]), sc)
    off = orthogonality_residual(m, p["control"] * ks, unit_rho(p["rho"]), sc, density=at.density)
    return Table(["role", "k", "sigma_min", "residual", "series_terms"],
                 [["nonscattering", ks, sigma, at.value, at.series_terms],
                  ["control", p["control"] * ks, "", off.value, off.series_terms]])


def _selftest(cfg: RunConfig) -> Table:
    from .acceptance import CRITERIA, run_criteria

    chosen = cfg.params["criterion"] or sorted(CRITERIA)
    _require(all(c in CRITERIA for c in chosen), f"criteria must lie in 1..{len(CRITERIA)}")
    results = run_criteria(chosen, seed=cfg.seed, workers=cfg.workers,
                           report=lambda r: print(r.line(), flush=True))
    rows = [[r.number, "pass" if r.passed else "fail", r.summary] for r in results]
    failed = [r.number for r in results if not r.passed]
    return Table(["criterion", "status", "summary"], rows,
                 failed=f"criteria {failed} failed" if failed else None)


RUNNERS: dict[str, Callable[[RunConfig], Table]] = {
    "lt-check": _lt_check,
    "scatter sweep": _scatter_sweep,
    "ite radial": _ite_radial,
    "cgo decay": _cgo_decay,
    "cgo dominance": _cgo_dominance,
    "cgo mollifier": _cgo_mollifier,
    "cgo orthogonality": _cgo_orthogonality,
    "selftest": _selftest,
}


# -- output ---------------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _long_format(table: Table) -> tuple[list[str], list[list]]:
    ids = table.header[:table.id_columns]
    rows = []
    for row in table.rows:
        for name, value in zip(table.header[table.id_columns:], row[table.id_columns:]):
            rows.append(list(row[:table.id_columns]) + [name, value])
    return ids + ["variable", "value"], rows


def _manifest(cfg: RunConfig, outputs: list[str], wall: float, status: str) -> str:
    data = {
        "config": json.loads(cfg.to_json()),
        "outputs": outputs,
        "status": status,
        "versions": {
            "cornerscatter": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": round(wall, 3),
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


# -- argument parsing -------------------------------------------------------------------------

def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _globals_parser() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    opts = g.add_argument_group("global options")
    opts.add_argument("--config", metavar="FILE.json", default=argparse.SUPPRESS,
                      help="JSON file with parameter keys; flags override it")
    opts.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                      help="worker processes for sweeps (default: available CPUs)")
    opts.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized suites")
    opts.add_argument("--out", metavar="PATH", default=argparse.SUPPRESS, help="CSV output path")
    opts.add_argument("--plot-data", action="store_true", default=argparse.SUPPRESS,
                      help="also write a long-format table next to the CSV")
    return g


def _add_params(sub: argparse.ArgumentParser, command: str) -> None:
    for key, spec in COMMANDS[command].items():
        kind = str if isinstance(spec.default, list) else spec.kind
        sub.add_argument(_flag(key), dest=key, type=kind, choices=spec.choices,
                         default=argparse.SUPPRESS,
                         help=f"{spec.help} (default: {spec.default})")


def build_parser() -> argparse.ArgumentParser:
    parents = [_globals_parser()]
    parser = argparse.ArgumentParser(prog="cornerscatter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    top = parser.add_subparsers(dest="group", required=True, metavar="command")
    groups: dict[str, argparse._SubParsersAction] = {}
    for command in COMMANDS:
        head, _, tail = command.partition(" ")
        if not tail:
            sub = top.add_parser(head, parents=parents, help=f"run {head}")
            _add_params(sub, command)
            continue
        if head not in groups:
            gp = top.add_parser(head, help=f"{head} experiments")
            groups[head] = gp.add_subparsers(dest="action", required=True, metavar="action")
        sub = groups[head].add_parser(tail, parents=parents, help=f"{head} {tail}")
        _add_params(sub, command)
    return parser


def _resolve(ns: argparse.Namespace) -> RunConfig:
    command = ns.group if getattr(ns, "action", None) is None else f"{ns.group} {ns.action}"
    given = {k: v for k, v in vars(ns).items() if k not in ("group", "action")}
    base: dict = {}
    if "config" in given:
        try:
            text = Path(given.pop("config")).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            base = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(base, dict):
            raise ConfigError("config must be a JSON object")
    top_keys = {"seed", "workers", "out", "plot_data"}
    params = dict(base.get("params", {}))
    for key, value in base.items():
        if key == "params":
            continue
        if key == "command":
            if value != command:
                raise ConfigError(f"config is for {value!r}, not {command!r}")
            continue
        if key not in top_keys:
            params[key] = value
    settings = {k: base[k] for k in top_keys if k in base}
    for key, value in given.items():
        (settings if key in top_keys else params)[key] = value
    settings.setdefault("workers", _default_workers())
    return RunConfig(command=command, params=params, **settings)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        cfg = _resolve(ns)
        table = RUNNERS[cfg.command](cfg)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001  experiment failures map to exit code 3
        print(f"experiment failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    wall = time.perf_counter() - t0
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(_csv_text(table.header, table.rows))
    outputs = [str(out)]
    if cfg.plot_data:
        long_path = out.with_suffix(".long.csv")
        long_path.write_text(_csv_text(*_long_format(table)))
        outputs.append(str(long_path))
    status = "failed" if table.failed else "ok"
    out.with_suffix(".json").write_text(_manifest(cfg, outputs, wall, status))
    if table.failed:
        print(table.failed, file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())
