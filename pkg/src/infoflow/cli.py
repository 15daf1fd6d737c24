"""Configuration-driven experiment runner.

Subcommands::

    infoflow run CONFIG.json
    infoflow sweep SWEEP.json [--threads K]
    infoflow validate-findim CONFIG.json
    infoflow rescale-check CONFIG.json
    infoflow profile ALPHA LAMBDA D

Every config is strict JSON: unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import copy
import csv
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, stats

from . import diagnostics as dg
from .barenblatt import discrete_equilibrium, profile_json, stationary_profile, to_quantile
from .errors import ConfigParse, InfoFlowError, StepFailure, UnknownKind
from .jko import Functional, JkoConfig, Partition, run_trajectory
from .params import ModelParameters, derive_params
from .quantile import QuantileDensity, mass_grid, write_state_csv
from .reference import FinDimProblem, findim_flow, findim_report
from .rescale import correspondence_run

# ---------------------------------------------------------------------------
# configuration

_SCHEMA = {
    "model": {"alpha", "lambda", "dim"},
    "discretization": {"n_points", "eulerian_grid"},
    "time": {"schedule", "tau", "tau0", "ratio", "steps"},
    "initial": None,  # validated per kind
    "functional": None,
    "inner": {"grad_tol", "max_iter"},
    "output": {"directory", "snapshot_every"},
}
_INITIAL_KEYS = {
    "barenblatt": {"exact_profile"},
    "gaussian": {"mean", "variance"},
    "uniform": {"lo", "hi"},
    "double_bump": {"centers", "widths", "weights"},
    "perturbed_barenblatt": {"amplitude", "modes"},
}


@dataclass(frozen=True)
class RunConfig:
    alpha: float
    lam: float
    dim: int = 1
    n_points: int = 200
    eulerian_grid: int = 400
    schedule: str = "uniform"
    tau: float = 1e-3
    tau0: float | None = None
    ratio: float | None = None
    steps: int = 100
    initial: dict = field(default_factory=lambda: {"kind": "barenblatt"})
    functional: str = "fourth_order"
    grad_tol: float = 1e-8
    max_iter: int = 200
    directory: str = "runs/out"
    snapshot_every: int = 1

    @property
    def params(self) -> ModelParameters:
        return derive_params(self.alpha, self.lam, self.dim)

    @property
    def partition(self) -> Partition:
        if self.schedule == "uniform":
            return Partition.uniform(self.tau, self.steps)
        return Partition.geometric(self.tau0, self.ratio, self.steps)

    @property
    def jko_config(self) -> JkoConfig:
        return JkoConfig(inner_grad_tol=self.grad_tol, inner_max_iter=self.max_iter,
                         eulerian_grid_size=self.eulerian_grid, snapshot_every=self.snapshot_every)


def _require_keys(section: str, got: dict, allowed: set):
    extra = set(got) - allowed
    if extra:
        raise ConfigParse(f"unknown keys in {section}: {sorted(extra)}")


def parse_run_config(raw: dict) -> RunConfig:
    """Validate a decoded JSON document and build a ``RunConfig``."""
    if not isinstance(raw, dict):
        raise ConfigParse("config must be a JSON object")
    _require_keys("config", raw, set(_SCHEMA))
    for sec, allowed in _SCHEMA.items():
        if allowed is not None and sec in raw:
            if not isinstance(raw[sec], dict):
                raise ConfigParse(f"section {sec} must be an object")
            _require_keys(sec, raw[sec], allowed)
    try:
        model = raw["model"]
        alpha, lam = float(model["alpha"]), float(model["lambda"])
        dim = int(model.get("dim", 1))
    except KeyError as exc:
        raise ConfigParse(f"missing model key {exc}") from exc
    derive_params(alpha, lam, dim)  # range gate
    if dim != 1:
        raise ConfigParse("simulations run in one dimension only (dim must be 1)")
    disc = raw.get("discretization", {})
    tm = raw.get("time", {})
    schedule = tm.get("schedule", "uniform")
    if schedule not in ("uniform", "geometric"):
        raise ConfigParse(f"unknown schedule {schedule!r}")
    if schedule == "uniform" and ("tau0" in tm or "ratio" in tm):
        raise ConfigParse("tau0/ratio belong to the geometric schedule")
    if schedule == "geometric" and ("tau0" not in tm or "ratio" not in tm):
        raise ConfigParse("geometric schedule needs tau0 and ratio")
    steps = int(tm.get("steps", 100))
    if steps < 1:
        raise ConfigParse("steps must be at least 1")
    n_points = int(disc.get("n_points", 200))
    if n_points < 8:
        raise ConfigParse("n_points must be at least 8")
    initial = dict(raw.get("initial", {"kind": "barenblatt"}))
    kind = initial.get("kind")
    if kind not in _INITIAL_KEYS:
        raise UnknownKind(f"unknown initial kind {kind!r}")
    _require_keys(f"initial[{kind}]", initial, _INITIAL_KEYS[kind] | {"kind", "seed"})
    functional = raw.get("functional", "fourth_order")
    if functional not in ("fourth_order", "second_order"):
        raise ConfigParse(f"unknown functional {functional!r}")
    inner = raw.get("inner", {})
    out = raw.get("output", {})
    cfg = RunConfig(
        alpha=alpha, lam=lam, dim=dim, n_points=n_points,
        eulerian_grid=int(disc.get("eulerian_grid", 400)),
        schedule=schedule, tau=float(tm.get("tau", 1e-3)),
        tau0=float(tm["tau0"]) if "tau0" in tm else None,
        ratio=float(tm["ratio"]) if "ratio" in tm else None,
        steps=steps, initial=initial, functional=functional,
        grad_tol=float(inner.get("grad_tol", 1e-8)), max_iter=int(inner.get("max_iter", 200)),
        directory=str(out.get("directory", "runs/out")), snapshot_every=int(out.get("snapshot_every", 1)),
    )
    try:
        cfg.partition
        cfg.jko_config
    except ValueError as exc:
        raise ConfigParse(str(exc)) from exc
    return cfg


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# initial states


def _mixture_quantiles(m, centers, widths, weights) -> np.ndarray:
    centers, widths, weights = map(np.asarray, (centers, widths, weights))
    weights = weights / weights.sum()

    def cdf(x):
        return float(np.sum(weights * stats.norm.cdf(x, centers, widths)))

    lo = float(np.min(centers - 40 * widths))
    hi = float(np.max(centers + 40 * widths))
    return np.array([optimize.brentq(lambda x: cdf(x) - mi, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
                     for mi in m])


def make_initial(spec: dict, n_points: int, p: ModelParameters, seed: int | None = None) -> QuantileDensity:
    """Build an initial quantile state from an ``initial`` config section."""
    kind = spec.get("kind")
    m = mass_grid(n_points)
    seed = spec.get("seed", seed)
    if kind == "barenblatt":
        p1 = p if p.lam > 0 else derive_params(p.alpha, 1.0, p.dim)
        if spec.get("exact_profile", False):
            return to_quantile(stationary_profile(p1), n_points)
        return discrete_equilibrium(p1, n_points)
    if kind == "gaussian":
        mean = float(spec.get("mean", 0.0))
        sd = math.sqrt(float(spec.get("variance", 1.0)))
        return QuantileDensity(mean + sd * stats.norm.ppf(m))
    if kind == "uniform":
        lo, hi = float(spec.get("lo", 0.0)), float(spec.get("hi", 1.0))
        return QuantileDensity(lo + (hi - lo) * m)
    if kind == "double_bump":
        centers = spec.get("centers", [-1.0, 1.0])
        widths = spec.get("widths", 0.3)
        widths = widths if isinstance(widths, (list, tuple)) else [widths] * len(centers)
        weights = spec.get("weights", [1.0] * len(centers))
        return QuantileDensity(_mixture_quantiles(m, centers, widths, weights))
    if kind == "perturbed_barenblatt":
        p1 = p if p.lam > 0 else derive_params(p.alpha, 1.0, p.dim)
        base = discrete_equilibrium(p1, n_points).positions
        amp = float(spec.get("amplitude", 0.1))
        modes = int(spec.get("modes", 4))
        rng = np.random.default_rng(0 if seed is None else int(seed))
        coef = rng.standard_normal(modes) / np.arange(1, modes + 1)
        mk = 0.5 * (m[1:] + m[:-1])
        bump = sum(c * np.sin((k + 1) * np.pi * mk) for k, c in enumerate(coef))
        gaps = np.diff(base) * np.exp(amp * bump)
        x = np.concatenate([[0.0], np.cumsum(gaps)])
        return QuantileDensity(x - x.mean())
    raise UnknownKind(f"unknown initial kind {kind!r}")


# ---------------------------------------------------------------------------
# run


@dataclass
class RunResult:
    directory: Path
    summary: dict
    exit_code: int


def run(cfg: RunConfig, directory=None) -> RunResult:
    """Execute one configured trajectory and write ledger, snapshots and summary."""
    out = Path(directory or cfg.directory)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    p = cfg.params
    initial = make_initial(cfg.initial, cfg.n_points, p)
    functional = Functional(cfg.functional)
    reference = dg.EquilibriumReference.build(p, cfg.n_points) if p.lam > 0 else None
    hook, reports = dg.make_step_hook(p, functional, reference, cfg.grad_tol)
    summary: dict = {"config": asdict(cfg)}
    try:
        traj = run_trajectory(initial, cfg.partition, functional, p, cfg.jko_config, on_step=hook)
    except StepFailure as exc:
        summary["error"] = {"step": exc.n, "message": str(exc)}
        _write_json(out / "summary.json", summary)
        return RunResult(out, summary, 3)
    dg.write_ledger_csv(out / "ledger.csv", traj, reports)
    for n, state in sorted(traj.snapshots.items()):
        write_state_csv(state, out / "snapshots" / f"state_{n:06d}.csv")
    summary.update(dg.summarize(traj, reports, reference, cfg.eulerian_grid))
    _write_json(out / "summary.json", summary)
    return RunResult(out, summary, 1 if summary["failed_checks"] else 0)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------------------
# sweep

_SWEEP_KEYS = {"base", "grid", "directory"}
_SWEEP_COLUMNS = ["cell", "alpha", "lambda", "tau", "n_points", "grad_tol", "status",
                  "fitted_H_rate", "fitted_F_rate", "fitted_L1_rate", "max_eq84_residual", "failed_checks"]


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def expand_sweep(raw: dict) -> list[dict]:
    _require_keys("sweep", raw, _SWEEP_KEYS)
    grid = raw.get("grid", {})
    if not grid or any(len(v) == 0 for v in grid.values()):
        return []
    axes = sorted(grid)
    cells = []
    for combo in itertools.product(*(grid[a] for a in axes)):
        doc = copy.deepcopy(raw.get("base", {}))
        for a, v in zip(axes, combo):
            _set_path(doc, a, v)
        cells.append(doc)
    return cells


def _sweep_cell(args) -> list:
    k, doc, root = args
    row = {"cell": k}
    try:
        cfg = parse_run_config(doc)
        row.update(alpha=cfg.alpha, **{"lambda": cfg.lam}, tau=cfg.tau, n_points=cfg.n_points, grad_tol=cfg.grad_tol)
        res = run(cfg, Path(root) / f"cell_{k:03d}")
        s = res.summary
        if "error" in s:
            row["status"] = f"failed: {s['error']['message']}"
        else:
            row["status"] = "ok" if res.exit_code == 0 else "checks_failed"
            for key in ("fitted_H_rate", "fitted_F_rate", "fitted_L1_rate"):
                row[key] = s.get(key)
            row["max_eq84_residual"] = s["checks"].get("eq84", {}).get("residual_at_max")
            row["failed_checks"] = ";".join(s["failed_checks"])
    except (InfoFlowError, ValueError) as exc:
        row["status"] = f"failed: {type(exc).__name__}: {exc}"
    return [("" if row.get(c) is None else str(row[c])) for c in _SWEEP_COLUMNS]


def sweep(raw: dict, threads: int = 1, directory=None) -> tuple[Path, list[list[str]]]:
    root = Path(directory or raw.get("directory", "runs/sweep"))
    root.mkdir(parents=True, exist_ok=True)
    jobs = [(k, doc, str(root)) for k, doc in enumerate(expand_sweep(raw))]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    with (root / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_SWEEP_COLUMNS)
        w.writerows(rows)
    return root, rows


# ---------------------------------------------------------------------------
# finite-dimensional validator and rescaling check

_FINDIM_KEYS = {"m", "kappa", "theta", "u0", "family", "eps", "horizon", "dt", "output"}
_RESCALE_KEYS = {"model", "n_points", "tau", "steps", "initial", "inner", "tolerance", "output"}


def validate_findim(raw: dict) -> tuple[dict, int]:
    _require_keys("findim", raw, _FINDIM_KEYS)
    u0 = tuple(float(v) for v in raw.get("u0", [1.0]))
    prob = FinDimProblem(m=int(raw.get("m", len(u0))), kappa=float(raw.get("kappa", 1.0)),
                         theta=float(raw.get("theta", 2.0)), u0=u0,
                         family=raw.get("family", "quadratic"), eps=float(raw.get("eps", 0.0)))
    traj = findim_flow(prob, float(raw.get("horizon", 1.0)), float(raw.get("dt", 1e-4)))
    rep = findim_report(prob, traj)
    ok = rep["rate_V"] >= 0.99 * rep["rate_V_predicted"] and rep["rate_U"] >= 0.99 * rep["rate_U_predicted"]
    rep["holds"] = bool(ok)
    if "output" in raw:
        Path(raw["output"]).parent.mkdir(parents=True, exist_ok=True)
        _write_json(Path(raw["output"]), rep)
    return rep, 0 if ok else 1


def rescale_check(raw: dict) -> tuple[dict, int]:
    _require_keys("rescale", raw, _RESCALE_KEYS)
    model = raw.get("model", {})
    _require_keys("model", model, {"alpha", "dim"})
    p = derive_params(float(model.get("alpha", 0.75)), 1.0, int(model.get("dim", 1)))
    n_points = int(raw.get("n_points", 200))
    initial = raw.get("initial", {"kind": "double_bump"})
    kind = initial.get("kind")
    if kind not in _INITIAL_KEYS:
        raise UnknownKind(f"unknown initial kind {kind!r}")
    _require_keys(f"initial[{kind}]", initial, _INITIAL_KEYS[kind] | {"kind", "seed"})
    inner = raw.get("inner", {})
    _require_keys("inner", inner, {"grad_tol", "max_iter"})
    cfg = JkoConfig(inner_grad_tol=float(inner.get("grad_tol", 1e-8)), inner_max_iter=int(inner.get("max_iter", 200)))
    part = Partition.uniform(float(raw.get("tau", 1e-3)), int(raw.get("steps", 500)))
    res = correspondence_run(make_initial(initial, n_points, p), part, p, cfg)
    tol = float(raw.get("tolerance", 5e-3))
    summary = {"alpha": p.alpha, "steps": part.steps, "tau": float(raw.get("tau", 1e-3)),
               "max_deviation": res.max_deviation, "tolerance": tol}
    if "output" in raw:
        out = Path(raw["output"])
        out.mkdir(parents=True, exist_ok=True)
        res.write_csv(out / "rescale.csv")
        _write_json(out / "summary.json", summary)
    return summary, 0 if res.max_deviation <= tol else 1


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infoflow", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one configured trajectory")
    r.add_argument("config")
    s = sub.add_parser("sweep", help="run a parameter grid")
    s.add_argument("config")
    s.add_argument("--threads", type=int, default=1)
    f = sub.add_parser("validate-findim", help="finite-dimensional flow interchange check")
    f.add_argument("config")
    c = sub.add_parser("rescale-check", help="confined/unconfined correspondence run")
    c.add_argument("config")
    pr = sub.add_parser("profile", help="print the stationary profile summary")
    pr.add_argument("alpha", type=float)
    pr.add_argument("lam", type=float, metavar="lambda")
    pr.add_argument("d", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            res = run(parse_run_config(load_json(args.config)))
            s = res.summary
            if "error" in s:
                print(f"step {s['error']['step']} failed: {s['error']['message']}", file=sys.stderr)
            elif s["failed_checks"]:
                print("failed checks: " + ", ".join(s["failed_checks"]), file=sys.stderr)
            print(str(res.directory))
            return res.exit_code
        if args.command == "sweep":
            root, rows = sweep(load_json(args.config), args.threads)
            print(str(root / "sweep.csv"))
            failed = [r[0] for r in rows if r[_SWEEP_COLUMNS.index("status")] != "ok"]
            if failed:
                print("failed cells: " + ", ".join(failed), file=sys.stderr)
            return 1 if failed else 0
        if args.command == "validate-findim":
            rep, code = validate_findim(load_json(args.config))
            print(json.dumps(rep, indent=2, sort_keys=True))
            return code
        if args.command == "rescale-check":
            rep, code = rescale_check(load_json(args.config))
            print(json.dumps(rep, indent=2, sort_keys=True))
            return code
        if args.command == "profile":
            print(profile_json(stationary_profile(derive_params(args.alpha, args.lam, args.d))))
            return 0
    except (InfoFlowError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
