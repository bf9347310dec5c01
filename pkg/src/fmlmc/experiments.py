"""Config-driven experiments: estimator ensembles, damping curves, cost tables.

A config is a YAML mapping. Every key is validated against the schema below
and errors name the offending line.

.. code-block:: yaml

    experiment: 1d-linear      # 1d-linear | 1d-ablation | 2d-theta | damping-curves | cost-table
    seed: 1234
    output: results/fig4a      # optional; --out and FMLMC_OUT take precedence
    grid:
      finest: 512              # 1D cell count, or [nx, ny] in 2D
      depths: [0, 1, 2, 3]     # L values; 0 is crude MC
    estimators: [MC, MLMC, F-MLMC]
    physics:
      D: 0.06                  # 1D length scale
      m: 10
      grf: {mu: 0.12, lengthscale: 0.2, seed: 7}   # 2D length-scale fields
    budget: 100                # in units of the finest-level cost
    pilot: 1000
    ensemble: 1000
    solver: {tol: 1.0e-10, maxiter: null}
    outputs: {field_format: csv, spectral_normalization: gram, exact_theta: true}
    theta_cap: 16384
    damping: {n: 32}
    cost_table: {dims: [1, 2]}   # depth defaults to 6 levels in 1D, 4 in 2D
    full: {grid: {finest: [256, 128]}, ensemble: 500}   # merged in by --full
"""

from __future__ import annotations

import copy
import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import _kernels, diagnostics, estimators, plotting
from .diffusion import (
    DiffusionParams1D,
    GrfParams,
    LinearSolveConfig,
    Operator1D,
    Operator2D,
    Simulator,
    exact_theta,
    lengthscale_hierarchy,
    sample_lengthscale_fields,
    save_lengthscale,
)
from .grid import build_hierarchy, level_from_shape
from .hartley import damping_curves

KINDS = ("1d-linear", "1d-ablation", "2d-theta", "damping-curves", "cost-table")
ABLATION_ESTIMATORS = ["MC", "MLMC", "F-MLMC-pre-only", "F-MLMC-post-only", "F-MLMC"]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _node_lines(node, path=(), out=None):
    """Map key paths to 1-based source lines."""
    out = {} if out is None else out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = path + (k.value,)
            out[key] = k.start_mark.line + 1
            _node_lines(v, key, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _node_lines(v, path + (i,), out)
    return out


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    output: str | None = None
    finest: tuple = (512,)
    depths: list = field(default_factory=lambda: [0, 1])
    estimators: list = field(default_factory=lambda: ["MC", "MLMC", "F-MLMC"])
    D: float | None = None
    m: int = 10
    grf: GrfParams | None = None
    budget: float = 100.0
    pilot: int = 1000
    ensemble: int = 1000
    solver: LinearSolveConfig = field(default_factory=LinearSolveConfig)
    field_format: str = "csv"
    spectral_normalization: str = "gram"
    exact_theta: bool = True
    theta_cap: int = 16384
    damping_n: int = 32
    cost_dims: list = field(default_factory=lambda: [1, 2])
    cost_depth: int | None = None  # None: 6 levels in 1D, 4 in 2D
    source: str = "<config>"

    @property
    def finest_level(self):
        return level_from_shape(self.finest)


class _Validator:
    def __init__(self, data, lines, source):
        self.data, self.lines, self.source = data, lines, source

    def fail(self, path, msg):
        # missing keys report the line of their nearest present ancestor
        p = tuple(path)
        line = self.lines.get(p)
        while line is None and p:
            p = p[:-1]
            line = self.lines.get(p)
        where = f"{self.source}:{line}" if line else self.source
        name = ".".join(str(x) for x in path) or "<root>"
        raise ConfigError(f"{where}: {name}: {msg}")

    def get(self, path, default=None):
        cur = self.data
        for k in path:
            if not isinstance(cur, dict) or k not in cur:
                return default
            cur = cur[k]
        return cur

    def mapping(self, path, allowed):
        v = self.get(path, {})
        if v is None:
            return {}
        if not isinstance(v, dict):
            self.fail(path, "expected a mapping")
        for k in v:
            if k not in allowed:
                self.fail(path + (k,), f"unknown key; allowed: {', '.join(sorted(allowed))}")
        return v

    def number(self, path, default, kind=float, lo=None, hi=None, lo_open=False):
        v = self.get(path, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {v!r}")
        if kind is int:
            if isinstance(v, float) and not v.is_integer():
                self.fail(path, f"expected an integer, got {v!r}")
            v = int(v)
        else:
            v = float(v)
        if lo is not None and (v <= lo if lo_open else v < lo):
            self.fail(path, f"must be {'>' if lo_open else '>='} {lo}, got {v}")
        if hi is not None and v > hi:
            self.fail(path, f"must be <= {hi}, got {v}")
        return v

    def choice(self, path, default, options):
        v = self.get(path, default)
        if v not in options:
            self.fail(path, f"must be one of {', '.join(map(str, options))}; got {v!r}")
        return v


TOP_KEYS = {"experiment", "seed", "output", "grid", "estimators", "physics", "budget", "pilot", "ensemble",
            "solver", "outputs", "theta_cap", "damping", "cost_table", "full", "description"}


def parse_config(text: str, source: str = "<config>", full: bool = False, seed: int | None = None) -> ExperimentConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark else source
        raise ConfigError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: the config must be a mapping")
    lines = _node_lines(node)
    v = _Validator(data, lines, source)
    v.mapping((), TOP_KEYS)
    if full and isinstance(data.get("full"), dict):
        v.mapping(("full",), TOP_KEYS - {"full"})
        data = _merge({k: x for k, x in data.items() if k != "full"}, data["full"])
        v.data = data

    kind = v.choice(("experiment",), None, KINDS)
    cfg = ExperimentConfig(kind=kind, source=source)
    cfg.seed = v.number(("seed",), 0, int, lo=0) if seed is None else int(seed)
    out = v.get(("output",))
    if out is not None and not isinstance(out, str):
        v.fail(("output",), "expected a path string")
    cfg.output = out

    v.mapping(("grid",), {"finest", "depths"})
    finest = v.get(("grid", "finest"), 512 if kind.startswith("1d") else [128, 64])
    if isinstance(finest, list):
        if kind.startswith("1d") and len(finest) != 1 or not all(isinstance(x, int) and x > 0 for x in finest):
            v.fail(("grid", "finest"), f"expected a positive cell count or [nx, ny], got {finest!r}")
        cfg.finest = tuple(finest)
    elif isinstance(finest, int) and not isinstance(finest, bool) and finest > 0:
        cfg.finest = (finest,)
    else:
        v.fail(("grid", "finest"), f"expected a positive cell count or [nx, ny], got {finest!r}")
    if kind == "2d-theta" and len(cfg.finest) != 2:
        v.fail(("grid", "finest"), "2d-theta needs [nx, ny]")
    depths = v.get(("grid", "depths"), [0, 1])
    if not isinstance(depths, list) or not depths or not all(isinstance(d, int) and d >= 0 for d in depths):
        v.fail(("grid", "depths"), "expected a nonempty list of integers >= 0")
    cfg.depths = sorted(set(depths))
    if kind in ("1d-linear", "1d-ablation", "2d-theta"):
        for i, d in enumerate(cfg.depths):
            try:
                build_hierarchy(cfg.finest_level, d + 1)
            except ValueError as exc:
                v.fail(("grid", "depths"), f"depth {d} impossible for finest grid {cfg.finest}: {exc}")

    names = v.get(("estimators",), ABLATION_ESTIMATORS if kind == "1d-ablation" else ["MC", "MLMC", "F-MLMC"])
    if not isinstance(names, list) or not names:
        v.fail(("estimators",), "expected a nonempty list")
    for i, n in enumerate(names):
        if n not in estimators.ESTIMATOR_KINDS:
            v.fail(("estimators", i), f"unknown estimator {n!r}; choose from {', '.join(estimators.ESTIMATOR_KINDS)}")
    cfg.estimators = list(dict.fromkeys(names))

    v.mapping(("physics",), {"D", "m", "grf"})
    cfg.m = v.number(("physics", "m"), 10, int, lo=2)
    if cfg.m % 2:
        v.fail(("physics", "m"), "m must be even")
    if kind in ("1d-linear", "1d-ablation"):
        cfg.D = v.number(("physics", "D"), None, float, lo=0, lo_open=True)
        if cfg.D is None:
            v.fail(("physics", "D"), "1D experiments need a length scale D")
    if kind == "2d-theta":
        g = v.mapping(("physics", "grf"), {"mu", "lengthscale", "seed", "kernel", "clamp_fraction"})
        if not g:
            v.fail(("physics", "grf"), "2d-theta needs GRF parameters mu and lengthscale")
        p = ("physics", "grf")
        cfg.grf = GrfParams(
            mu=v.number(p + ("mu",), None, float, lo=0, lo_open=True),
            lengthscale=v.number(p + ("lengthscale",), None, float, lo=0, lo_open=True),
            seed=v.number(p + ("seed",), cfg.seed, int, lo=0),
            kernel=v.choice(p + ("kernel",), "squared-exponential", ["squared-exponential"]),
            clamp_fraction=v.number(p + ("clamp_fraction",), 0.1, float, lo=0, hi=1),
        )
        if cfg.grf.mu is None or cfg.grf.lengthscale is None:
            v.fail(p, "mu and lengthscale are required")

    cfg.budget = v.number(("budget",), 100.0, float, lo=0, lo_open=True)
    cfg.pilot = v.number(("pilot",), 1000, int, lo=2)
    cfg.ensemble = v.number(("ensemble",), 500 if kind == "2d-theta" else 1000, int, lo=2)
    v.mapping(("solver",), {"tol", "maxiter"})
    tol = v.number(("solver", "tol"), 1e-10, float, lo=0, hi=1e-6, lo_open=True)
    maxiter = v.number(("solver", "maxiter"), None, int, lo=1)
    cfg.solver = LinearSolveConfig(tol=tol, maxiter=maxiter)
    v.mapping(("outputs",), {"field_format", "spectral_normalization", "exact_theta"})
    cfg.field_format = v.choice(("outputs", "field_format"), "csv", ["csv", "binary"])
    cfg.spectral_normalization = v.choice(("outputs", "spectral_normalization"), "gram", ["gram", "doubled"])
    cfg.exact_theta = v.choice(("outputs", "exact_theta"), True, [True, False])
    cfg.theta_cap = v.number(("theta_cap",), 16384, int, lo=1)
    v.mapping(("damping",), {"n"})
    cfg.damping_n = v.number(("damping", "n"), 32, int, lo=2)
    if cfg.damping_n % 2:
        v.fail(("damping", "n"), "n must be even")
    v.mapping(("cost_table",), {"dims", "depth"})
    dims = v.get(("cost_table", "dims"), [1, 2])
    if not isinstance(dims, list) or not dims or any(d not in (1, 2) for d in dims):
        v.fail(("cost_table", "dims"), "expected a list drawn from [1, 2]")
    cfg.cost_dims = dims
    cfg.cost_depth = v.number(("cost_table", "depth"), None, int, lo=1)
    return cfg


def load_config(path, full: bool = False, seed: int | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path), full=full, seed=seed)


def resolve_output(cfg: ExperimentConfig, out: str | None = None) -> Path:
    if out:
        return Path(out)
    if os.environ.get("FMLMC_OUT"):
        return Path(os.environ["FMLMC_OUT"])
    if cfg.output:
        return Path(cfg.output)
    return Path("results") / Path(cfg.source).stem


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else format(float(v) + 0.0, ".17g")
    return str(v)


def write_csv(path: Path, columns: list, rows, **meta) -> Path:
    """CSV whose first line is ``# `` plus a JSON schema record."""
    path = Path(path)
    with path.open("w", newline="") as f:
        f.write("# " + json.dumps({"columns": columns, **meta}, sort_keys=True) + "\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_num(x) for x in r])
    return path


def read_csv(path: Path):
    """Return ``(meta, columns, rows)``; numeric cells become floats, blanks NaN."""
    with Path(path).open() as f:
        first = f.readline()
        meta = json.loads(first[2:]) if first.startswith("# ") else {}
        r = csv.reader(f)
        cols = next(r)
        rows = []
        for row in r:
            vals = []
            for x in row:
                try:
                    vals.append(float(x) if x != "" else float("nan"))
                except ValueError:
                    vals.append(x)
            rows.append(vals)
    return meta, cols, rows


def write_json(path: Path, obj) -> Path:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return Path(path)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _tag(name: str, depth: int) -> str:
    return f"{name}_L{depth}"


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------


def _simulators(cfg: ExperimentConfig, hierarchy, finest_field=None):
    if hierarchy.dim == 1:
        return [Simulator(Operator1D(DiffusionParams1D(cfg.D, lv, cfg.m), cfg.solver), "linear") for lv in hierarchy]
    fields = lengthscale_hierarchy(finest_field, len(hierarchy))
    return [Simulator(Operator2D(f, cfg.m, cfg.solver), "squared") for f in fields]


def _workers() -> int:
    env = os.environ.get("FMLMC_THREADS")
    return max(1, int(env)) if env else 1


def run_estimator_study(cfg: ExperimentConfig, out: Path, log=print) -> dict:
    """Ensembles of every estimator at every depth, with spectral diagnostics."""
    out.mkdir(parents=True, exist_ok=True)
    _kernels.set_threads()
    finest = cfg.finest_level
    truth = None
    finest_field = None
    if finest.dim == 2:
        finest_field = sample_lengthscale_fields(cfg.grf, finest)
        ext = "csv" if cfg.field_format == "csv" else "bin"
        save_lengthscale(finest_field, out / f"lengthscale.{ext}", cfg.field_format)
        if cfg.exact_theta:
            if finest.size > cfg.theta_cap:
                log(f"skipping exact theta: {finest.size} cells exceed theta_cap={cfg.theta_cap}")
            else:
                log(f"computing exact theta on {finest}")
                op = Operator2D(finest_field, cfg.m, cfg.solver)
                truth = exact_theta(op, cap=cfg.theta_cap)
                write_csv(out / "theta_exact.csv", ["cell", "theta"], enumerate(truth), nx=finest.nx, ny=finest.ny)
    else:
        truth = np.zeros(finest.size)  # E[A X] = 0

    allocations, totals = [], []
    spectra = {}
    for depth in cfg.depths:
        h = build_hierarchy(finest, depth + 1)
        sims = _simulators(cfg, h, finest_field)
        names = ["MC"] if depth == 0 else [n for n in cfg.estimators if n != "MC"]
        if depth == 0 and "MC" not in cfg.estimators:
            continue
        for name in names:
            log(f"{name} L={depth}: pilot")
            alloc = estimators.plan(name, h, sims, cfg.budget, cfg.pilot, cfg.seed)
            log(f"{name} L={depth}: M={alloc.M}, {cfg.ensemble} replicates")
            ens = estimators.run_ensemble(name, h, sims, alloc, cfg.ensemble, cfg.seed, _workers())
            diag = diagnostics.spectral_variance(ens, finest, None, name, depth, cfg.spectral_normalization)
            direct = diagnostics.total_variance(ens, finest)
            rec = {"kind": name, "depth": depth, "seed": cfg.seed, "pilot_size": cfg.pilot, **alloc.to_dict()}
            allocations.append(rec)
            row = {"kind": name, "depth": depth, "total_variance": diag.total, "direct_total_variance": direct,
                   "nominal_cost": alloc.nominal_cost, "M": " ".join(map(str, alloc.M))}
            if truth is not None:
                parts = diagnostics.mse_decompose(ens, truth, finest)
                row.update(variance=parts.variance, squared_bias=parts.squared_bias, mse=parts.mse)
            totals.append(row)
            tag = _tag(name, depth)
            spectra[tag] = diag
            if finest.dim == 1:
                write_csv(out / f"spectral_{tag}.csv", ["mode", "nu"], enumerate(diag.nu), kind=name, depth=depth)
            else:
                ny, nx = finest.ny, finest.nx
                rows = ((j * nx + i, j, i, diag.nu_grid[j, i]) for j in range(ny) for i in range(nx))
                write_csv(out / f"spectral_{tag}.csv", ["mode", "ky", "kx", "nu"], rows, kind=name, depth=depth,
                          nx=nx, ny=ny, normalization=cfg.spectral_normalization)
                write_csv(out / f"mean_{tag}.csv", ["cell", "mean"], enumerate(ens.mean(axis=0)), kind=name,
                          depth=depth, nx=nx, ny=ny)
                write_csv(out / f"variance_{tag}.csv", ["cell", "variance"], enumerate(ens.var(axis=0, ddof=1)),
                          kind=name, depth=depth, nx=nx, ny=ny)
            write_csv(out / f"cumulative_{tag}.csv", ["k", "nu_cml"], enumerate(diag.nu_cml), kind=name, depth=depth)
            log(f"{name} L={depth}: total variance {diag.total:.6g}")
            del ens

    cols = ["kind", "depth", "total_variance", "direct_total_variance", "nominal_cost", "M"]
    if truth is not None:
        cols += ["variance", "squared_bias", "mse"]
    write_csv(out / "totals.csv", cols, ([r[c] for c in cols] for r in totals), budget=cfg.budget,
              ensemble=cfg.ensemble)
    write_json(out / "allocations.json", allocations)
    summary = {
        "experiment": cfg.kind,
        "seed": cfg.seed,
        "finest": list(cfg.finest),
        "depths": cfg.depths,
        "ensemble": cfg.ensemble,
        "budget": cfg.budget,
        "pilot": cfg.pilot,
        "totals": totals,
    }
    write_json(out / "summary.json", summary)
    render_plots(out)
    return summary


def run_pre_post_ablation(cfg: ExperimentConfig, out: Path, log=print) -> dict:
    """Estimator study over the filter placements, plus a comparison table."""
    if cfg.finest_level.dim != 1:
        raise ConfigError(f"{cfg.source}: the filter ablation is defined for 1D experiments")
    cfg = copy.copy(cfg)
    cfg.estimators = [n for n in ABLATION_ESTIMATORS if n in cfg.estimators] or ABLATION_ESTIMATORS
    summary = run_estimator_study(cfg, out, log)
    rows = [(r["depth"], r["kind"], r["total_variance"]) for r in summary["totals"]]
    write_csv(out / "ablation.csv", ["depth", "kind", "total_variance"], rows)
    return summary


def run_damping(cfg: ExperimentConfig, out: Path, log=print) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    curves = damping_curves(cfg.damping_n)
    cols = list(curves)
    rows = zip(*[curves[c] for c in cols])
    write_csv(out / "damping.csv", cols, rows, n1=cfg.damping_n)
    render_plots(out)
    return {"experiment": cfg.kind, "n1": cfg.damping_n}


def cost_table_rows(dim: int, depth: int):
    """Rows ``(level, C/C_L MLMC, ratio MLMC, C/C_L F-MLMC, ratio F-MLMC)``."""
    a = estimators.cost_table(estimators.cost_model(dim, "MLMC"), depth)
    b = estimators.cost_table(estimators.cost_model(dim, "F-MLMC"), depth)
    for i, off in enumerate(a["offset"]):
        yield ("L" if off == 0 else f"L{off}", a["normalized"][i], a["ratio"][i], b["normalized"][i], b["ratio"][i])


DEFAULT_COST_DEPTH = {1: 6, 2: 4}
COST_COLUMNS = ["level", "mlmc_cost", "mlmc_ratio", "fmlmc_cost", "fmlmc_ratio"]


def run_cost_table(cfg: ExperimentConfig, out: Path, log=print) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    res = {}
    for dim in cfg.cost_dims:
        depth = cfg.cost_depth or DEFAULT_COST_DEPTH[dim]
        rows = list(cost_table_rows(dim, depth))
        g1 = estimators.cost_model(dim, "MLMC").gamma
        g2 = estimators.cost_model(dim, "F-MLMC").gamma
        write_csv(out / f"cost_table_{dim}d.csv", COST_COLUMNS, rows, dim=dim, gamma_mlmc=g1, gamma_fmlmc=g2)
        res[dim] = rows
    return {"experiment": cfg.kind, "tables": res}


def run_experiment(cfg: ExperimentConfig, out: Path | None = None, log=print) -> dict:
    out = Path(out) if out is not None else resolve_output(cfg)
    if cfg.kind in ("1d-linear", "2d-theta"):
        return run_estimator_study(cfg, out, log)
    if cfg.kind == "1d-ablation":
        return run_pre_post_ablation(cfg, out, log)
    if cfg.kind == "damping-curves":
        return run_damping(cfg, out, log)
    return run_cost_table(cfg, out, log)


# ---------------------------------------------------------------------------
# plots, rebuilt from the CSV files alone
# ---------------------------------------------------------------------------


def _series_key(meta):
    return (meta.get("depth", 0), list(estimators.ESTIMATOR_KINDS).index(meta.get("kind", "MC")))


def render_plots(out: Path) -> list:
    out = Path(out)
    written = []
    damp = out / "damping.csv"
    if damp.exists():
        _, cols, rows = read_csv(damp)
        data = np.array(rows, dtype=float)
        k = data[:, 0]
        for prefix, name in (("", "damping.svg"), ("filtered_", "damping_filtered.svg")):
            series = {c: (k, data[:, cols.index(prefix + c)]) for c in ("consistent", "spurious", "offdiag_1", "offdiag_2")}
            title = "Damping factors, " + ("filtered transfers" if prefix else "unfiltered transfers")
            (out / name).write_text(plotting.line_plot(series, title, "mode k", "factor"))
            written.append(out / name)

    spectra_files = sorted(out.glob("spectral_*.csv"))
    if spectra_files:
        cums = {}
        lines = {}
        for path in spectra_files:
            meta, cols, rows = read_csv(path)
            tag = f"{meta['kind']} L={meta['depth']}"
            data = np.array(rows, dtype=float)
            if "ky" in cols:
                grid = np.full((int(meta["ny"]), int(meta["nx"])), np.nan)
                grid[data[:, 1].astype(int), data[:, 2].astype(int)] = data[:, 3]
                name = path.with_suffix(".svg").name
                (out / name).write_text(plotting.heatmap(grid, f"Spectral variance, {tag}", log=True))
                written.append(out / name)
            else:
                lines[tag] = (_series_key(meta), data[:, 0], data[:, 1])
            cpath = out / path.name.replace("spectral_", "cumulative_")
            if cpath.exists():
                _, _, crow = read_csv(cpath)
                c = np.array(crow, dtype=float)
                cums[tag] = (_series_key(meta), c[:, 0], c[:, 1])
        if lines:
            ordered = {t: (x, y) for t, (_, x, y) in sorted(lines.items(), key=lambda kv: kv[1][0])}
            (out / "spectral.svg").write_text(plotting.line_plot(ordered, "Spectral variance", "mode", "nu", logy=True))
            written.append(out / "spectral.svg")
        if cums:
            ordered = {t: (x, y) for t, (_, x, y) in sorted(cums.items(), key=lambda kv: kv[1][0])}
            (out / "cumulative.svg").write_text(
                plotting.line_plot(ordered, "Cumulative spectral variance", "k", "cumulative variance"))
            written.append(out / "cumulative.svg")

    tot = out / "totals.csv"
    if tot.exists():
        _, cols, rows = read_csv(tot)
        depths = sorted({int(r[cols.index("depth")]) for r in rows})
        kinds = [k for k in estimators.ESTIMATOR_KINDS if any(r[0] == k for r in rows)]
        series = {}
        for k in kinds:
            vals = []
            for d in depths:
                match = [r[cols.index("total_variance")] for r in rows if r[0] == k and int(r[1]) == d]
                vals.append(match[0] if match else float("nan"))
            series[k] = vals
        svg = plotting.bar_plot([f"L={d}" for d in depths], series, "Total variance", "total variance", "depth")
        (out / "total_variance.svg").write_text(svg)
        written.append(out / "total_variance.svg")

    fields = [out / "theta_exact.csv"] + sorted(out.glob("mean_*.csv")) + sorted(out.glob("variance_*.csv"))
    for path in fields:
        if not path.exists():
            continue
        meta, cols, rows = read_csv(path)
        g = np.array(rows, dtype=float)[:, 1].reshape(int(meta["ny"]), int(meta["nx"]))
        title = cols[1] if "kind" not in meta else f"{cols[1]}, {meta['kind']} L={meta['depth']}"
        (out / path.with_suffix(".svg").name).write_text(plotting.heatmap(g, title))
        written.append(out / path.with_suffix(".svg").name)
    return written
