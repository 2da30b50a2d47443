"""Batch front-end: config parsing, solves, sweeps, validation, file export.

A run configuration lives in an INI file with sections [process], [grid],
[zgrid], [solver], [output] and optional [sweep]; every field can also be
set or overridden on the command line.  Outputs are plot-ready flat files:
a per-mode table, per-model mode-shape tables, and a JSON diagnostics
block.  Numeric CSV fields carry 17 significant digits so doubles
round-trip losslessly.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analytic import analytic_solve, derived_metrics
from .modes import bloch_messiah, symmetry_check
from .process import FrequencyGrid, ProcessKind, ProcessSpec, ZGrid, default_grid
from .rigorous import NonConvergenceError, canonical_error, picard_solve
from .validation import find_coupling

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4

MODELS = ("analytic", "rigorous", "both")
FORMATS = ("csv", "json")
FAMILIES = ("psi", "phi", "varphi", "xi")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class RunConfig:
    """Everything one batch invocation needs, file- and flag-settable."""

    process: ProcessSpec
    n: int = 200
    nu_min: float | None = None
    nu_max: float | None = None
    m: int = 200
    tol: float = 1e-8
    max_iter: int = 200
    model: str = "both"
    out: str = "fcpdc_out"
    format: str = "csv"
    sweep: list[float] | None = None
    n_modes: int = 10
    threads: int = 1
    validate: bool = False
    max_canonical_error: float = 1e-3
    max_unitarity_dev: float = 1e-3

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.n < 2:
            raise ConfigError(f"grid.n must be >= 2, got {self.n}")
        if self.m < 2:
            raise ConfigError(f"zgrid.m must be >= 2, got {self.m}")
        if self.tol <= 0:
            raise ConfigError(f"solver.tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"solver.max_iter must be >= 1, got {self.max_iter}")
        if (self.nu_min is None) != (self.nu_max is None):
            raise ConfigError("grid.nu_min and grid.nu_max must be given together")
        if self.nu_min is not None and self.nu_max <= self.nu_min:
            raise ConfigError("grid.nu_max must exceed grid.nu_min")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def frequency_grid(self) -> FrequencyGrid:
        if self.nu_min is None:
            return default_grid(self.process, self.n)
        return FrequencyGrid(self.n, self.nu_min, self.nu_max)

    def zgrid(self) -> ZGrid:
        return ZGrid(self.m, self.process.length)


def preset(name: str) -> RunConfig:
    """Reference configurations of the almost uncorrelated FC/PDC processes."""
    if name == "fc_paper":
        spec = ProcessSpec(ProcessKind.FC, sigma=0.98190, coupling=1.0,
                           kp_slope=3.0, k1_slope=4.5, k2_slope=1.5, length=2.0)
    elif name == "pdc_paper":
        spec = ProcessSpec(ProcessKind.PDC, sigma=0.96231155, coupling=1.0,
                           kp_slope=3.0, k1_slope=4.5, k2_slope=1.5, length=2.0)
    else:
        raise ConfigError(f"unknown preset {name!r}; choose fc_paper or pdc_paper")
    return RunConfig(process=spec, n=500, m=500)


def parse_config(path: str | Path) -> RunConfig:
    """Read a RunConfig from its INI representation."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        proc = cp["process"]
        kind = ProcessKind(proc.get("kind", "").upper())
        spec = ProcessSpec(kind=kind,
                           sigma=proc.getfloat("sigma"),
                           coupling=proc.getfloat("coupling"),
                           kp_slope=proc.getfloat("kp_slope"),
                           k1_slope=proc.getfloat("k1_slope"),
                           k2_slope=proc.getfloat("k2_slope"),
                           length=proc.getfloat("length"))
        kwargs = {}
        if cp.has_section("grid"):
            g = cp["grid"]
            if "n" in g:
                kwargs["n"] = g.getint("n")
            if "nu_min" in g or "nu_max" in g:
                kwargs["nu_min"] = g.getfloat("nu_min")
                kwargs["nu_max"] = g.getfloat("nu_max")
        if cp.has_section("zgrid") and "m" in cp["zgrid"]:
            kwargs["m"] = cp["zgrid"].getint("m")
        if cp.has_section("solver"):
            s = cp["solver"]
            for key, get in (("tol", s.getfloat), ("max_iter", s.getint)):
                if key in s:
                    kwargs[key] = get(key)
            if "model" in s:
                kwargs["model"] = s.get("model")
        if cp.has_section("output"):
            o = cp["output"]
            if "path" in o:
                kwargs["out"] = o.get("path")
            if "format" in o:
                kwargs["format"] = o.get("format")
            if "n_modes" in o:
                kwargs["n_modes"] = o.getint("n_modes")
        if cp.has_section("sweep"):
            sw = cp["sweep"]
            if "gammas" in sw:
                kwargs["sweep"] = [float(x) for x in sw.get("gammas").split(",")]
            elif "gamma_min" in sw:
                lo = sw.getfloat("gamma_min")
                hi = sw.getfloat("gamma_max")
                steps = sw.getint("steps")
                if steps < 1:
                    raise ConfigError("sweep.steps must be >= 1")
                kwargs["sweep"] = list(np.linspace(lo, hi, steps))
        return RunConfig(process=spec, **kwargs)
    except ConfigError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc


def write_config(config: RunConfig, path: str | Path) -> None:
    """Write the canonical INI representation; parse_config inverts it."""
    cp = configparser.ConfigParser()
    cp["process"] = {
        "kind": config.process.kind.value,
        "sigma": repr(config.process.sigma),
        "coupling": repr(config.process.coupling),
        "kp_slope": repr(config.process.kp_slope),
        "k1_slope": repr(config.process.k1_slope),
        "k2_slope": repr(config.process.k2_slope),
        "length": repr(config.process.length),
    }
    grid = {"n": str(config.n)}
    if config.nu_min is not None:
        grid["nu_min"] = repr(config.nu_min)
        grid["nu_max"] = repr(config.nu_max)
    cp["grid"] = grid
    cp["zgrid"] = {"m": str(config.m)}
    cp["solver"] = {"tol": repr(config.tol), "max_iter": str(config.max_iter),
                    "model": config.model}
    cp["output"] = {"path": config.out, "format": config.format,
                    "n_modes": str(config.n_modes)}
    if config.sweep is not None:
        cp["sweep"] = {"gammas": ", ".join(repr(float(g)) for g in config.sweep)}
    with open(path, "w") as fh:
        cp.write(fh)


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _write_table(path: Path, fmt: str, header: list[str], rows: list[list]) -> None:
    if fmt == "csv":
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt(c) if isinstance(c, float) else str(c)
                                  for c in row))
        path.with_suffix(".csv").write_text("\n".join(lines) + "\n")
    else:
        recs = [dict(zip(header, row)) for row in rows]
        path.with_suffix(".json").write_text(json.dumps(recs, indent=1) + "\n")


def _mode_rows(model: str, metrics, n_modes: int) -> list[list]:
    rows = []
    for k in range(min(n_modes, len(metrics.r))):
        r = float(metrics.r[k])
        if metrics.efficiency is not None:
            strength, squeeze = float(metrics.efficiency[k]), ""
        else:
            strength = float(metrics.gain[k])
            squeeze = float(metrics.squeezing_db[k])
        rows.append([k, r, strength, squeeze, model])
    return rows


def _shape_rows(modes, n_modes: int) -> list[list]:
    nu = modes.grid.points
    fams = {"psi": modes.in_modes_a, "phi": modes.in_modes_b,
            "varphi": modes.out_modes_a, "xi": modes.out_modes_b}
    rows = []
    for k in range(min(n_modes, modes.n_modes)):
        for fam in FAMILIES:
            col = fams[fam][:, k]
            for i in range(len(nu)):
                rows.append([k, fam, float(nu[i]),
                             float(col[i].real), float(col[i].imag)])
    return rows


def _sweep_point(args) -> dict:
    (spec, n, nu_min, nu_max, m, tol, max_iter, model) = args
    cfg_grid = FrequencyGrid(n, nu_min, nu_max)
    zg = ZGrid(m, spec.length)
    row = {"gamma": spec.coupling}
    an = derived_metrics(analytic_solve(spec, cfg_grid))
    if spec.kind is ProcessKind.FC:
        row["r1_analytic"] = float(an.r[0]) if an.r.size else 0.0
        row["efficiency1_analytic"] = float(an.efficiency[0]) if an.r.size else 0.0
    else:
        row["r1_analytic"] = float(an.r[0]) if an.r.size else 0.0
        row["mean_photons_analytic"] = an.mean_photons
        row["squeezing1_analytic_db"] = float(an.squeezing_db[0]) if an.r.size else 0.0
    if model in ("rigorous", "both"):
        tm = picard_solve(spec, cfg_grid, zg, tol=tol, max_iter=max_iter)
        rig = derived_metrics(bloch_messiah(tm))
        if spec.kind is ProcessKind.FC:
            row["r1_rigorous"] = float(rig.r[0]) if rig.r.size else 0.0
            row["efficiency1_rigorous"] = float(rig.efficiency[0]) if rig.r.size else 0.0
        else:
            row["r1_rigorous"] = float(rig.r[0]) if rig.r.size else 0.0
            row["mean_photons_rigorous"] = rig.mean_photons
            row["squeezing1_rigorous_db"] = float(rig.squeezing_db[0]) if rig.r.size else 0.0
        row["iterations"] = tm.iterations_used
        row["residual"] = tm.residual
        row["canonical_max"] = max(canonical_error(tm).values())
    return row


def run(config: RunConfig) -> int:
    """Execute one configuration; returns a process exit status."""
    try:
        out_dir = Path(config.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO

    grid = config.frequency_grid()
    zg = config.zgrid()
    try:
        if config.sweep is not None:
            return _run_sweep(config, grid)

        t0 = time.perf_counter()
        diagnostics = {"gamma": config.process.coupling, "model": config.model}
        mode_rows = []
        if config.model in ("analytic", "both"):
            an_modes = analytic_solve(config.process, grid)
            an = derived_metrics(an_modes)
            mode_rows += _mode_rows("analytic", an, config.n_modes)
            _write_table(out_dir / "shapes_analytic", config.format,
                         ["mode_index", "family", "nu", "re", "im"],
                         _shape_rows(an_modes, config.n_modes))
            diagnostics["schmidt_number_analytic"] = an.schmidt_number
        if config.model in ("rigorous", "both"):
            tm = picard_solve(config.process, grid, zg,
                              tol=config.tol, max_iter=config.max_iter)
            rig_modes = bloch_messiah(tm)
            rig = derived_metrics(rig_modes)
            sym = symmetry_check(tm, rig_modes)
            mode_rows += _mode_rows("rigorous", rig, config.n_modes)
            _write_table(out_dir / "shapes_rigorous", config.format,
                         ["mode_index", "family", "nu", "re", "im"],
                         _shape_rows(rig_modes, config.n_modes))
            diagnostics.update({
                "canonical_error": canonical_error(tm),
                "canonical_error_signed": canonical_error(tm, "signed"),
                "unitarity_dev": sym.unitarity_dev,
                "expansion_residuals": sym.expansion_residuals,
                "iterations": tm.iterations_used,
                "residual": tm.residual,
            })
        _write_table(out_dir / "modes", config.format,
                     ["mode_index", "r", "efficiency_or_gain", "squeezing_db", "model"],
                     mode_rows)
        diagnostics["wall_time_s"] = time.perf_counter() - t0
        (out_dir / "diagnostics.json").write_text(
            json.dumps(diagnostics, indent=1, sort_keys=True) + "\n")
    except NonConvergenceError as exc:
        print(f"solver failed to converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO

    if config.validate and config.model in ("rigorous", "both"):
        worst = max(diagnostics["canonical_error"].values())
        if worst > config.max_canonical_error:
            print(f"validation failed: canonical error {worst:.3e} > "
                  f"{config.max_canonical_error:.3e}", file=sys.stderr)
            return EXIT_VALIDATION
        if diagnostics["unitarity_dev"] > config.max_unitarity_dev:
            print(f"validation failed: unitarity deviation "
                  f"{diagnostics['unitarity_dev']:.3e} > "
                  f"{config.max_unitarity_dev:.3e}", file=sys.stderr)
            return EXIT_VALIDATION
    return EXIT_OK


def _run_sweep(config: RunConfig, grid: FrequencyGrid) -> int:
    out_dir = Path(config.out)
    tasks = [(config.process.with_coupling(float(g)), config.n,
              float(grid.nu_min), float(grid.nu_max), config.m,
              config.tol, config.max_iter, config.model)
             for g in config.sweep]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    header = sorted({key for row in rows for key in row},
                    key=lambda k: (k != "gamma", k))
    table = [[row.get(key, "") for key in header] for row in rows]
    _write_table(out_dir / "sweep", config.format, header, table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fcpdc",
        description="Simulate ultrafast frequency conversion / type-II "
                    "parametric down-conversion in the high-gain regime.")
    p.add_argument("--config", help="INI run configuration file")
    p.add_argument("--preset", choices=("fc_paper", "pdc_paper"),
                   help="start from a reference process configuration")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--gamma", type=float, help="coupling strength")
    p.add_argument("--target-metric",
                   choices=("first_mode_efficiency", "mean_photons", "squeezing_db"),
                   help="choose the coupling so the analytic model hits --target-value")
    p.add_argument("--target-value", type=float)
    p.add_argument("--branch", choices=("rising", "post_peak"), default="rising",
                   help="branch of the FC first-mode efficiency for --target-metric")
    p.add_argument("--grid-n", type=int, help="frequency grid points")
    p.add_argument("--nu-min", type=float)
    p.add_argument("--nu-max", type=float)
    p.add_argument("--z-steps", type=int, help="z grid points")
    p.add_argument("--tol", type=float, help="solver convergence tolerance")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--sweep", help="gamma sweep MIN:MAX:STEPS")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="parallel sweep workers")
    p.add_argument("--n-modes", type=int, help="modes per report")
    p.add_argument("--validate", action="store_true",
                   help="fail (exit 1) when canonical/unitarity checks exceed bounds")
    p.add_argument("--max-canonical-error", type=float)
    p.add_argument("--max-unitarity-dev", type=float)
    p.add_argument("--write-config", metavar="PATH",
                   help="write the effective configuration and exit")
    return p


def _config_from_args(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("--config and --preset are mutually exclusive")
    if args.config:
        config = parse_config(args.config)
    elif args.preset:
        config = preset(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required")

    spec = config.process
    if args.gamma is not None:
        spec = spec.with_coupling(args.gamma)
    updates = {}
    for attr, key in (("model", "model"), ("grid_n", "n"), ("z_steps", "m"),
                      ("tol", "tol"), ("max_iter", "max_iter"), ("format", "format"),
                      ("out", "out"), ("threads", "threads"), ("n_modes", "n_modes"),
                      ("max_canonical_error", "max_canonical_error"),
                      ("max_unitarity_dev", "max_unitarity_dev"),
                      ("nu_min", "nu_min"), ("nu_max", "nu_max")):
        val = getattr(args, attr)
        if val is not None:
            updates[key] = val
    if args.validate:
        updates["validate"] = True
    if args.sweep:
        try:
            lo, hi, steps = args.sweep.split(":")
            updates["sweep"] = list(np.linspace(float(lo), float(hi), int(steps)))
        except ValueError as exc:
            raise ConfigError(f"bad --sweep {args.sweep!r}: want MIN:MAX:STEPS") from exc
    config = replace(config, process=spec, **updates)

    if (args.target_metric is None) != (args.target_value is None):
        raise ConfigError("--target-metric and --target-value go together")
    if args.target_metric:
        try:
            gamma = find_coupling(config.process, config.frequency_grid(),
                                  args.target_value, args.target_metric,
                                  branch=args.branch)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        config = replace(config, process=config.process.with_coupling(gamma))
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.write_config:
        try:
            write_config(config, args.write_config)
        except OSError as exc:
            print(f"I/O failure: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
