"""Command-line entry point: ``dicke3 population|spectrum|tangle|verify``.

Every run writes CSV data files plus a ``manifest.json`` into the output
directory.  Exit codes: 0 ok, 1 verification failure, 2 bad configuration,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import contextlib
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .adiabatic import SolverMode, ghz_amplitudes_adiabatic, population_coherent_adiabatic, population_fock
from .analysis import TimeSeries, find_peaks, fourier_transform
from .entanglement import DomainError, PatternError, tau_ab, tau_ab_curve, tau_fq, tau_fq_curve
from .exact import (
    eigendecompose,
    ghz_evolution_exact,
    population_coherent_exact,
    population_fock_exact,
    reduced_density_exact,
    scaled_time,
)
from .hamiltonian import full_hamiltonian, omega_n
from .hilbert import BasisTag, FockTruncation, TruncationError, ValidationError, make_params
from .revival import fundamental_frequency, population_analytic, revival_sum

METHODS = ("exact", "adiabatic", "analytic")
G_SWEEP = (0.02, 0.04, 0.06, 0.08)
THREADS_ENV = "DICKE3_THREADS"
NU_GRID = np.arange(0.002, 3.5, 0.002)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    omega_c: float = 1.0
    omega: float = 0.15
    g: float = 0.08
    z: float = 3.0
    n_fock: int | None = None  # Fock initial field instead of coherent
    initial: str = "excited"  # or "ghz"
    methods: tuple = METHODS
    t_max: float = 50.0  # in units of 2 pi / omega
    points: int = 4001
    n_tr: int = 80
    g_sweep: bool = False
    out_dir: str = "dicke3_out"
    emit_plots: bool = False

    def validate(self) -> "RunConfig":
        make_params(self.omega_c, self.omega, self.g)
        if not self.methods:
            raise ConfigError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; choose from {list(METHODS)}")
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ConfigError(f"time window must be positive, got t_max={self.t_max}")
        if self.points < 2:
            raise ConfigError(f"need at least 2 time points, got {self.points}")
        if self.n_tr < 1:
            raise ConfigError(f"n_tr must be >= 1, got {self.n_tr}")
        if self.n_fock is not None and not 0 <= self.n_fock <= self.n_tr:
            raise ConfigError(f"n_fock must lie in [0, n_tr], got {self.n_fock}")
        if self.initial not in ("excited", "ghz"):
            raise ConfigError(f"initial state must be 'excited' or 'ghz', got {self.initial!r}")
        if not math.isfinite(self.z):
            raise ConfigError("z must be finite")
        return self

    @property
    def params(self):
        return make_params(self.omega_c, self.omega, self.g)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        d = dict(d)
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        return cls(**d)


# config file keys and how to parse them; sections are for readability only
_FILE_KEYS = {
    "omega_c": float,
    "omega": float,
    "g": float,
    "z": float,
    "n_fock": int,
    "initial": str,
    "methods": lambda s: tuple(m.strip() for m in s.split(",") if m.strip()),
    "t_max": float,
    "points": int,
    "n_tr": int,
    "g_sweep": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "out_dir": str,
    "emit_plots": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}


def read_config_file(path: str | os.PathLike) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key not in _FILE_KEYS:
                raise ConfigError(f"unknown key {key!r} in [{section}] of {path}")
            try:
                out[key] = _FILE_KEYS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return out


def build_config(args: argparse.Namespace, initial: str) -> RunConfig:
    values = {"initial": initial}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key in ("omega", "g", "z", "n_fock", "t_max", "points", "n_tr", "out_dir"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if getattr(args, "methods", None):
        values["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if getattr(args, "g_sweep", False):
        values["g_sweep"] = True
    if getattr(args, "emit_plots", False):
        values["emit_plots"] = True
    values["initial"] = initial
    try:
        return RunConfig.from_dict(values).validate()
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


# output helpers


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: tuple[str, str], x, y) -> Path:
    lines = [",".join(header)]
    lines += [f"{a:.17g},{b:.17g}" for a, b in zip(np.asarray(x, float), np.asarray(y, float))]
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def write_json(path: Path, obj) -> Path:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _gnuplot(path: Path, title: str, xlabel: str, ylabel: str, files: list[Path]) -> Path:
    plots = ", \\\n     ".join(f"'{f.name}' using 1:2 with lines title '{f.stem}'" for f in files)
    text = (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        f"set title '{title}'\n"
        f"set xlabel '{xlabel}'\n"
        f"set ylabel '{ylabel}'\n"
        f"plot {plots}\n"
    )
    _atomic_write(path, text)
    return path


def _time_grid(cfg: RunConfig):
    """(tau, t): reporting time in units of 2 pi / omega and physical time."""
    tau = np.linspace(0.0, cfg.t_max, cfg.points)
    rate = cfg.omega if cfg.omega > 0 else cfg.omega_c
    return tau, 2 * math.pi * tau / rate


def _fmt_g(g: float) -> str:
    return f"g{g:g}"


class Run:
    """Collects outputs and diagnostics for one command and writes the manifest."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg.out_dir)
        self.outputs: dict[str, list[str]] = {}
        self.diagnostics: dict = {}
        self.t0 = time.perf_counter()

    def add(self, method: str, path: Path) -> None:
        self.outputs.setdefault(method, []).append(str(path))

    def finish(self) -> Path:
        for paths in self.outputs.values():
            for p in paths:
                if not Path(p).exists():
                    raise RuntimeError(f"manifest names missing file {p}")
        manifest = {
            "command": self.command,
            "config": self.cfg.to_dict(),
            "version": __version__,
            "wall_clock_s": time.perf_counter() - self.t0,
            "truncation": self.diagnostics,
            "outputs": self.outputs,
        }
        return write_json(self.out / "manifest.json", manifest)


def _population_series(cfg: RunConfig, method: str, params, t, run: Run, decomp=None) -> np.ndarray:
    trunc = FockTruncation(cfg.n_tr)
    if method == "exact":
        if cfg.n_fock is not None:
            return population_fock_exact(cfg.n_fock, t, params, trunc, decomp).values
        series = population_coherent_exact(cfg.z, t, params, trunc, decomp)
        run.diagnostics.setdefault("leaked_mass", series.meta["leaked_mass"])
        return series.values
    if method == "adiabatic":
        if cfg.n_fock is not None:
            return population_fock(cfg.n_fock, t, params, SolverMode.ExactInBlock)
        return population_coherent_adiabatic(cfg.z, t, params, trunc, SolverMode.ExactInBlock)
    if cfg.n_fock is not None:
        return population_fock(cfg.n_fock, t, params, SolverMode.Simplified)
    return population_analytic(cfg.z, t, params)


def _doubling_delta(cfg: RunConfig, params, t, base: np.ndarray) -> float:
    """Max change of the exact population when n_tr is doubled."""
    wide = replace(cfg, n_tr=2 * cfg.n_tr)
    decomp = eigendecompose(full_hamiltonian(params, FockTruncation(wide.n_tr)))
    other = _population_series(wide, "exact", params, t, Run(wide, "probe"), decomp)
    return float(np.abs(other - base).max())


def _populations(cfg: RunConfig, run: Run) -> tuple[np.ndarray, dict]:
    params = cfg.params
    tau, t = _time_grid(cfg)
    out = {}
    for method in cfg.methods:
        decomp = None
        if method == "exact":
            decomp = eigendecompose(full_hamiltonian(params, FockTruncation(cfg.n_tr)))
        values = _population_series(cfg, method, params, t, run, decomp)
        if not np.all(np.isfinite(values)):
            raise FloatingPointError(f"{method} population is not finite")
        out[method] = values
        if method == "exact":
            run.diagnostics["doubling_delta"] = _doubling_delta(cfg, params, t, values)
    return tau, out


def _time_label(cfg: RunConfig) -> str:
    return scaled_time(0.0, cfg.params)[1]


def cmd_population(cfg: RunConfig) -> Run:
    run = Run(cfg, "population")
    tau, series = _populations(cfg, run)
    label = _time_label(cfg)
    files = []
    for method, values in series.items():
        path = write_csv(run.out / f"population_{method}.csv", (label, "P1"), tau, values)
        run.add(method, path)
        files.append(path)
    if cfg.emit_plots:
        run.add("plot", _gnuplot(run.out / "population.gp", "P1", label, "P1", files))
    return run


def cmd_spectrum(cfg: RunConfig) -> Run:
    run = Run(cfg, "spectrum")
    tau, series = _populations(cfg, run)
    params = cfg.params
    if cfg.n_fock is not None:
        base = 2 * abs(omega_n(cfg.n_fock, params)) / params.omega
        variant = f"fock{cfg.n_fock}"
    else:
        base = fundamental_frequency(cfg.z, params) / params.omega
        variant = "coherent"
    summary = {"variant": variant, "predicted": [base, 2 * base, 3 * base], "peaks": {}}
    files = []
    for method, values in series.items():
        spec = fourier_transform(TimeSeries(tau, values), NU_GRID, subtract_mean=True)
        path = write_csv(run.out / f"spectrum_{variant}_{method}.csv", ("nu_over_omega", "magnitude"), NU_GRID, spec.magnitude)
        run.add(method, path)
        files.append(path)
        peaks = find_peaks(spec, 3, min_separation=abs(base) / 2)
        summary["peaks"][method] = [{"nu_over_omega": f, "magnitude": a} for f, a in peaks.peaks]
    run.add("summary", write_json(run.out / f"peaks_{variant}.json", summary))
    if cfg.emit_plots:
        run.add("plot", _gnuplot(run.out / "spectrum.gp", "|F(nu)|", "nu / omega", "magnitude", files))
    return run


def _semianalytic_ab(rhos) -> tuple[np.ndarray, int]:
    """tau_AB where the state is in the analytic family, NaN elsewhere."""
    out = np.full(len(rhos), np.nan)
    for i, rho in enumerate(rhos):
        with contextlib.suppress(PatternError):
            out[i] = tau_ab(rho).value
    return out, int(np.isnan(out).sum())


def _tangles(cfg: RunConfig, g: float, method: str, tau, t, run: Run):
    params = make_params(cfg.omega_c, cfg.omega, g)
    trunc = FockTruncation(cfg.n_tr)
    if method == "analytic":
        s = revival_sum(t, 2, cfg.z, params)
        if np.abs(s).max() > 1 + 1e-9:
            raise DomainError("|S| exceeds 1 on the requested window")
        return tau_fq_curve(s), tau_ab_curve(s), 0
    if method == "adiabatic":
        exp = ghz_amplitudes_adiabatic(cfg.z, params, trunc, SolverMode.ExactInBlock)
        rhos = [exp.reduced_density(tt, BasisTag.Jx) for tt in t]
    else:
        decomp = eigendecompose(full_hamiltonian(params, trunc))
        rhos = [reduced_density_exact(s, BasisTag.Jx) for s in ghz_evolution_exact(cfg.z, t, params, trunc, decomp)]
    fq = np.array([tau_fq(r).value for r in rhos])
    if method == "exact":
        delta = float(np.abs(_exact_fq_doubled(cfg, params, t) - fq).max())
        run.diagnostics.setdefault("doubling_delta", {})[_fmt_g(g)] = delta
    ab, missing = _semianalytic_ab(rhos)
    return fq, ab, missing


def _exact_fq_doubled(cfg: RunConfig, params, t) -> np.ndarray:
    trunc = FockTruncation(2 * cfg.n_tr)
    decomp = eigendecompose(full_hamiltonian(params, trunc))
    return np.array([tau_fq(reduced_density_exact(s)).value for s in ghz_evolution_exact(cfg.z, t, params, trunc, decomp)])


def cmd_tangle(cfg: RunConfig) -> Run:
    run = Run(cfg, "tangle")
    tau, t = _time_grid(cfg)
    label = _time_label(cfg)
    couplings = G_SWEEP if cfg.g_sweep else (cfg.g,)
    fq_files, ab_files = [], []
    out_of_family = {}
    for g in couplings:
        for method in cfg.methods:
            fq, ab, missing = _tangles(cfg, g, method, tau, t, run)
            tag = f"{method}_{_fmt_g(g)}"
            fq_files.append(write_csv(run.out / f"tau_fq_{tag}.csv", (label, "tau_fq"), tau, fq))
            ab_files.append(write_csv(run.out / f"tau_ab_{tag}.csv", (label, "tau_ab"), tau, ab))
            run.add(method, fq_files[-1])
            run.add(method, ab_files[-1])
            if method != "analytic":
                out_of_family[tag] = missing
    run.diagnostics["tau_ab_out_of_family_points"] = out_of_family
    if cfg.emit_plots:
        run.add("plot", _gnuplot(run.out / "tau_fq.gp", "field-qubits I-tangle", label, "tau_fq", fq_files))
        run.add("plot", _gnuplot(run.out / "tau_ab.gp", "qubit-pair I-tangle", label, "tau_ab", ab_files))
    return run


def cmd_verify(args: argparse.Namespace) -> int:
    from .acceptance import run_all

    results = run_all()
    if args.json:
        report = {
            "version": __version__,
            "passed": all(r.passed for r in results),
            "criteria": [
                {"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail, "elapsed_s": r.elapsed}
                for r in results
            ],
        }
        print(json.dumps(report, indent=2))
    else:
        for r in results:
            print(r.line())
    failed = [r for r in results if not r.passed]
    if failed:
        names = "; ".join(f"criterion {r.number} ({r.name})" for r in failed)
        print(f"verification failed: {names}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--omega", type=float, help="qubit splitting in units of omega_c (default 0.15)")
    p.add_argument("--g", type=float, help="coupling in units of omega_c (default 0.08)")
    p.add_argument("--z", type=float, help="coherent amplitude (default 3)")
    p.add_argument("--n-fock", type=int, help="start from displaced Fock state n instead of a coherent field")
    p.add_argument("--t-max", type=float, help="end of window in units of 2 pi / omega (default 50)")
    p.add_argument("--points", type=int, help="number of time samples (default 4001)")
    p.add_argument("--n-tr", type=int, help="Fock truncation (default 80)")
    p.add_argument("--methods", help="comma list from exact,adiabatic,analytic (default all)")
    p.add_argument("--g-sweep", action="store_true", help="run g = 0.02, 0.04, 0.06, 0.08")
    p.add_argument("--out-dir", help="output directory (default dicke3_out)")
    p.add_argument("--config", help="key = value file with sections; flags override it")
    p.add_argument("--json", action="store_true", help="print the manifest / report as JSON")
    p.add_argument("--emit-plots", action="store_true", help="also write gnuplot scripts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dicke3", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("population", "excited-state population P1 versus time"),
        ("spectrum", "Fourier spectrum of P1 with peak summary"),
        ("tangle", "I-tangles for a GHZ initial state"),
    ):
        _add_shared(sub.add_parser(name, help=help_))
    v = sub.add_parser("verify", help="run the acceptance criteria")
    v.add_argument("--json", action="store_true", help="machine-readable report")
    return parser


@contextlib.contextmanager
def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        yield
        return
    from threadpoolctl import threadpool_limits

    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    with threadpool_limits(limits=n):
        yield


_COMMANDS = {"population": cmd_population, "spectrum": cmd_spectrum, "tangle": cmd_tangle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            if args.command == "verify":
                return cmd_verify(args)
            cfg = build_config(args, "ghz" if args.command == "tangle" else "excited")
            run = _COMMANDS[args.command](cfg)
            manifest = run.finish()
    except (ConfigError, ValidationError) as exc:
        print(f"dicke3: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TruncationError, DomainError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"dicke3: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.json:
        print(manifest.read_text(), end="")
    else:
        print(f"wrote {manifest}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
