"""Batch runner: YAML configuration in, trajectory and check records out.

Configuration keys (YAML mapping)::

    manifold: circle | sphere2 | torus2                     (required)
    potential: {family: power_law, q: 1, a: 1}             (required)
    tau: 0.01                                               (required)
    horizon_T: 0.2                                          (required)
    initial:                                                (default: generator, 4 atoms)
      atoms: [[...], ...]      # inline measure, optional weights: [...]
      # or
      generator: uniform_cap
      n_atoms: 4
      cap_radius: 0.5
      center: [...]            # optional, random when absent
    solver: plan_gd | grid_lp                               (default plan_gd)
    inner_tol: 1e-10                                        (default 1e-8 (1 + L/tau))
    inner_max_iters: 500
    quadrature_n: 64
    seed: 0
    checks: [finite_speed, ...]                             (default: standard suite)
    test_functions: [x, ...]                                (weak residuals, default none)
    probe_times: 32            # count of uniform times in [0, T], or an explicit list
    output: out                                             (default ./out)

Outputs in the output directory: ``trajectory.jsonl`` (one record per step),
``checks.jsonl`` (one record per check), ``manifest.json`` and the flat
tables ``steps.csv`` and ``interpolation.csv``.  Every record carries
``schema_version``.

Exit status: 0 all requested checks pass, 1 a check failed, 2 configuration
error, 3 cut-locus incursion.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .diagnostics import CHECKS, DEFAULT_CHECKS, CheckReport, TEST_FUNCTIONS, run_checks, weak_residual
from .jko import (SchemeConfig, Solver, delta_cut, guaranteed_horizon,
                  interp_geodesic, run_scheme)
from .manifold import CutLocusError, ManifoldId, get_manifold
from .measure import DiscreteMeasure
from .potential import PotentialSpec

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_CUT = 0, 1, 2, 3
THREADS_ENV = "MANIFOLD_JKO_THREADS"

# largest cap radius keeping every pair of generated atoms off the cut locus
_INJECTIVITY = {ManifoldId.CIRCLE: math.pi, ManifoldId.SPHERE2: math.pi, ManifoldId.TORUS2: 0.5}

_KEYS = {"manifold", "potential", "initial", "tau", "horizon_T", "solver", "inner_tol",
         "inner_max_iters", "quadrature_n", "seed", "checks", "test_functions", "probe_times",
         "output"}
_REQUIRED = ("manifold", "potential", "tau", "horizon_T")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class InitialSpec:
    atoms: tuple | None = None
    weights: tuple | None = None
    generator: str | None = None
    n_atoms: int = 4
    cap_radius: float = 0.5
    center: tuple | None = None

    def to_record(self) -> dict:
        if self.atoms is not None:
            rec = {"atoms": [list(a) for a in self.atoms]}
            if self.weights is not None:
                rec["weights"] = list(self.weights)
            return rec
        rec = {"generator": self.generator, "n_atoms": self.n_atoms, "cap_radius": self.cap_radius}
        if self.center is not None:
            rec["center"] = list(self.center)
        return rec


@dataclass(frozen=True)
class RunConfig:
    manifold: ManifoldId
    potential: PotentialSpec
    tau: float
    horizon_T: float
    initial: InitialSpec = field(default_factory=lambda: InitialSpec(generator="uniform_cap"))
    solver: Solver = Solver.PLAN_GRADIENT_DESCENT
    inner_tol: float | None = None
    inner_max_iters: int = 500
    quadrature_n: int = 64
    seed: int = 0
    checks: tuple = DEFAULT_CHECKS
    test_functions: tuple = ()
    probe_times: tuple = ()
    output: str = "out"

    def scheme(self) -> SchemeConfig:
        return SchemeConfig(tau=self.tau, horizon_T=self.horizon_T, inner_tol=self.inner_tol,
                            inner_max_iters=self.inner_max_iters, solver=self.solver, seed=self.seed)

    def to_record(self) -> dict:
        """Echo for the manifest; the output location is left out so runs compare byte-for-byte."""
        return {"manifold": self.manifold.value, "potential": _plain(self.potential.to_record()),
                "initial": self.initial.to_record(), "tau": self.tau, "horizon_T": self.horizon_T,
                "solver": self.solver.value, "inner_tol": self.inner_tol,
                "inner_max_iters": self.inner_max_iters, "quadrature_n": self.quadrature_n,
                "seed": self.seed, "checks": list(self.checks),
                "test_functions": list(self.test_functions),
                "probe_times": list(self.probe_times)}


# -- parsing --------------------------------------------------------------------------------

def _number(raw, name, positive=True, integer=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(name, f"expected a number, got {raw!r}")
    if integer and (not float(raw).is_integer()):
        raise ConfigError(name, f"expected an integer, got {raw!r}")
    value = int(raw) if integer else float(raw)
    if not math.isfinite(value) or (positive and not value > 0):
        raise ConfigError(name, f"must be positive and finite, got {raw!r}")
    return value


def _parse_initial(raw, manifold) -> InitialSpec:
    if raw is None:
        raw = {"generator": "uniform_cap"}
    if not isinstance(raw, dict):
        raise ConfigError("initial", "expected a mapping")
    m = get_manifold(manifold)
    if "atoms" in raw:
        extra = set(raw) - {"atoms", "weights"}
        if extra:
            raise ConfigError(f"initial.{sorted(extra)[0]}", "unknown key for an inline measure")
        try:
            atoms = m.canonical(np.asarray(raw["atoms"], dtype=float).reshape(-1, m.coord_dim))
        except (ValueError, TypeError) as exc:
            raise ConfigError("initial.atoms", str(exc)) from None
        weights = raw.get("weights")
        try:
            mu = DiscreteMeasure(m.id, atoms, weights)
        except (ValueError, TypeError) as exc:
            raise ConfigError("initial.weights" if weights is not None else "initial.atoms",
                              str(exc)) from None
        if delta_cut(mu) <= 0:
            raise ConfigError("initial.atoms", "support meets the cut locus")
        return InitialSpec(atoms=tuple(tuple(a) for a in atoms.tolist()),
                           weights=None if weights is None else tuple(float(w) for w in weights))
    extra = set(raw) - {"generator", "n_atoms", "cap_radius", "center"}
    if extra:
        raise ConfigError(f"initial.{sorted(extra)[0]}", "unknown key for a generator")
    if raw.get("generator", "uniform_cap") != "uniform_cap":
        raise ConfigError("initial.generator", "only 'uniform_cap' is available")
    n = _number(raw.get("n_atoms", 4), "initial.n_atoms", integer=True)
    radius = _number(raw.get("cap_radius", 0.5), "initial.cap_radius")
    limit = _INJECTIVITY[m.id] / 2
    if not radius < limit:
        raise ConfigError("initial.cap_radius",
                          f"must be below {limit:g} so generated atoms stay off the cut locus")
    center = raw.get("center")
    if center is not None:
        try:
            center = tuple(m.canonical(np.asarray(center, dtype=float).reshape(1, m.coord_dim))[0])
        except (ValueError, TypeError) as exc:
            raise ConfigError("initial.center", str(exc)) from None
    return InitialSpec(generator="uniform_cap", n_atoms=n, cap_radius=radius, center=center)


def parse_config_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a mapping of configuration keys")
    unknown = sorted(set(raw) - _KEYS)
    if unknown:
        raise ConfigError(unknown[0], f"unknown key; valid keys: {sorted(_KEYS)}")
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(key, "missing required key")
    try:
        manifold = ManifoldId(raw["manifold"])
    except ValueError:
        raise ConfigError("manifold", f"expected one of {[m.value for m in ManifoldId]}") from None
    if not isinstance(raw["potential"], dict):
        raise ConfigError("potential", "expected a mapping with a 'family' key")
    try:
        potential = PotentialSpec.from_record(raw["potential"])
    except (ValueError, TypeError) as exc:
        raise ConfigError("potential", str(exc)) from None
    tau = _number(raw["tau"], "tau")
    horizon = _number(raw["horizon_T"], "horizon_T")
    if horizon < tau:
        raise ConfigError("horizon_T", f"shorter than one step (tau = {tau:g})")
    try:
        solver = Solver(raw.get("solver", Solver.PLAN_GRADIENT_DESCENT.value))
    except ValueError:
        raise ConfigError("solver", f"expected one of {[s.value for s in Solver]}") from None
    inner_tol = raw.get("inner_tol")
    if inner_tol is not None:
        inner_tol = _number(inner_tol, "inner_tol")
    checks = raw.get("checks", list(DEFAULT_CHECKS))
    if isinstance(checks, str):
        checks = [c.strip() for c in checks.split(",") if c.strip()]
    if not isinstance(checks, list):
        raise ConfigError("checks", "expected a list of check ids")
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError("checks", f"unknown check ids {bad}; valid ids: {sorted(CHECKS)}")
    test_fns = raw.get("test_functions", []) or []
    valid_fns = sorted(i for (m, i) in TEST_FUNCTIONS if m == manifold)
    bad = [f for f in test_fns if f not in valid_fns]
    if bad:
        raise ConfigError("test_functions", f"unknown ids {bad}; valid ids: {valid_fns}")
    probes = raw.get("probe_times", 32)
    if isinstance(probes, list):
        try:
            probes = tuple(float(t) for t in probes)
        except (TypeError, ValueError):
            raise ConfigError("probe_times", "expected numbers") from None
        if any(not (0.0 <= t <= horizon) for t in probes):
            raise ConfigError("probe_times", f"times must lie in [0, {horizon:g}]")
    else:
        count = _number(probes, "probe_times", integer=True)
        probes = tuple(np.linspace(0.0, horizon, count).tolist())
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", f"expected a non-negative integer, got {seed!r}")
    output = raw.get("output", "out")
    if not isinstance(output, str) or not output:
        raise ConfigError("output", "expected a directory path")
    return RunConfig(
        manifold=manifold, potential=potential, tau=tau, horizon_T=horizon,
        initial=_parse_initial(raw.get("initial"), manifold), solver=solver, inner_tol=inner_tol,
        inner_max_iters=_number(raw.get("inner_max_iters", 500), "inner_max_iters", integer=True),
        quadrature_n=_number(raw.get("quadrature_n", 64), "quadrature_n", integer=True),
        seed=seed, checks=tuple(checks), test_functions=tuple(test_fns), probe_times=probes,
        output=output,
    )


def parse_config(path) -> RunConfig:
    """Read and validate a YAML configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"no such file: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"malformed YAML: {exc}") from None
    return parse_config_dict(raw if raw is not None else {})


# -- records --------------------------------------------------------------------------------

def _plain(obj):
    """JSON-safe copy: numpy scalars and arrays unwrapped, non-finite floats as null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _dumps(rec) -> str:
    return json.dumps(_plain(rec), sort_keys=True)


def initial_measure(cfg: RunConfig) -> DiscreteMeasure:
    m = get_manifold(cfg.manifold)
    init = cfg.initial
    if init.atoms is not None:
        return DiscreteMeasure(m.id, np.array(init.atoms), init.weights)
    rng = np.random.default_rng(cfg.seed)
    center = np.array(init.center) if init.center is not None else m.random_point(rng).reshape(-1)
    atoms = m.random_cap(rng, init.n_atoms, center, init.cap_radius)
    return DiscreteMeasure(m.id, atoms, rng.dirichlet(np.ones(init.n_atoms)))


def step_record(traj, k: int) -> dict:
    r = traj.per_step[k]
    mu = traj.measures[k]
    return {"schema_version": SCHEMA_VERSION, "step": r.step, "time": r.time,
            "atoms": mu.atoms.tolist(), "weights": mu.weights.tolist(), "energy": r.energy,
            "step_d2": r.step_d2, "max_displacement": r.max_displacement, "delta": r.delta,
            "el_residual": r.el_residual, "iterations": r.iterations, "converged": r.converged}


def _check_schema(rec: dict, what: str) -> dict:
    version = rec.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"{what}: schema_version {version!r} is not {SCHEMA_VERSION}")
    return rec


def read_trajectory(path, manifold) -> list:
    """Parse ``trajectory.jsonl`` into ``(record, DiscreteMeasure)`` pairs."""
    out = []
    for line in Path(path).read_text().splitlines():
        rec = _check_schema(json.loads(line), "trajectory record")
        out.append((rec, DiscreteMeasure(manifold, np.array(rec["atoms"]), rec["weights"])))
    return out


def read_checks(path) -> list:
    reports = []
    for line in Path(path).read_text().splitlines():
        rec = _check_schema(json.loads(line), "check record")
        reports.append(CheckReport.from_record(rec))
    return reports


def read_manifest(path) -> dict:
    return _check_schema(json.loads(Path(path).read_text()), "manifest")


# -- running --------------------------------------------------------------------------------

def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run(cfg: RunConfig, out_dir=None, log=print) -> int:
    """Run the scheme and requested checks, write outputs, return the exit status."""
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    mu0 = initial_measure(cfg)
    manifest = {"schema_version": SCHEMA_VERSION, "config": cfg.to_record(), "seed": cfg.seed,
                "initial_measure": mu0.to_record()}
    try:
        traj = run_scheme(mu0, cfg.potential, cfg.scheme())
    except CutLocusError as exc:
        manifest.update(status="cut_incursion", error=str(exc), exit_status=EXIT_CUT)
        (out / "manifest.json").write_text(_dumps(manifest) + "\n")
        log(f"cut-locus incursion: {exc}")
        return EXIT_CUT
    except ValueError as exc:
        manifest.update(status="config_error", error=str(exc), exit_status=EXIT_CONFIG)
        (out / "manifest.json").write_text(_dumps(manifest) + "\n")
        log(f"configuration error: {exc}")
        return EXIT_CONFIG

    b = traj.bounds
    e0 = traj.per_step[0].energy
    manifest.update({
        "constants": {"L": b.L, "k_low": b.k_low, "C": 2.0 * (e0 - b.k_low),
                      "delta0": traj.per_step[0].delta,
                      "guaranteed_horizon": guaranteed_horizon(mu0, b.L)},
        "guaranteed": traj.guaranteed, "status": traj.status, "n_steps": traj.n_steps,
    })

    with open(out / "trajectory.jsonl", "w") as fh:
        for k in range(len(traj.measures)):
            fh.write(_dumps(step_record(traj, k)) + "\n")
    with open(out / "steps.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "time", "energy", "step_d2", "max_displacement", "delta", "el_residual"])
        for r in traj.per_step:
            w.writerow([r.step, repr(r.time), repr(r.energy), repr(r.step_d2),
                        repr(r.max_displacement), repr(r.delta), repr(r.el_residual)])
    with open(out / "interpolation.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        dim = get_manifold(cfg.manifold).coord_dim
        w.writerow(["time", "atom", "weight"] + [f"x{i}" for i in range(dim)])
        for t in cfg.probe_times:
            if t > traj.n_steps * traj.tau and traj.status != "completed":
                continue
            g = interp_geodesic(traj, t)
            for i, (x, wt) in enumerate(zip(g.atoms, g.weights)):
                w.writerow([repr(float(t)), i, repr(float(wt))] + [repr(float(c)) for c in x])

    options = {"holder": {"seed": cfg.seed}}
    try:
        reports = run_checks(traj, cfg.checks, threads=_threads(), options=options)
    except CutLocusError as exc:
        manifest.update(status="cut_incursion", error=str(exc), exit_status=EXIT_CUT)
        (out / "manifest.json").write_text(_dumps(manifest) + "\n")
        log(f"cut-locus incursion during checks: {exc}")
        return EXIT_CUT
    with open(out / "checks.jsonl", "w") as fh:
        for rep in reports:
            fh.write(_dumps({"schema_version": SCHEMA_VERSION, **rep.to_record()}) + "\n")

    if cfg.test_functions and traj.status == "completed":
        manifest["weak_residuals"] = {
            fid: weak_residual(traj, TEST_FUNCTIONS[(cfg.manifold, fid)], cfg.quadrature_n)
            for fid in cfg.test_functions}

    failed = [r.check_id for r in reports if not r.passed]
    if traj.status == "cut_incursion":
        status = EXIT_CUT
    elif failed:
        status = EXIT_CHECK_FAILED
    else:
        status = EXIT_OK
    manifest.update(failed_checks=failed, exit_status=status)
    (out / "manifest.json").write_text(_dumps(manifest) + "\n")

    if not traj.guaranteed:
        log(f"note: horizon {cfg.horizon_T:g} exceeds the guaranteed horizon "
            f"{manifest['constants']['guaranteed_horizon']:.6g}")
    for r in reports:
        log(f"{r.check_id:16s} {r.status:4s} margin={r.worst_margin:.3e} tol={r.tolerance:.3e}")
    if traj.status == "cut_incursion":
        log(f"stopped at step {traj.n_steps}: support reached the cut locus")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="manifold-jko", description=__doc__.split("\n")[0])
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--out", help="output directory (overrides 'output')")
    p.add_argument("--seed", type=int, help="random seed (overrides 'seed')")
    p.add_argument("--checks", help="comma-separated check ids (overrides 'checks')")
    p.add_argument("--tau", type=float, help="step size (overrides 'tau')")
    p.add_argument("--oracle", action="store_true", help="add the grid-oracle cross-check")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError("config", f"no such file: {path}")
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError("config", f"malformed YAML: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "expected a mapping of configuration keys")
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.tau is not None:
            raw["tau"] = args.tau
        if args.checks is not None:
            raw["checks"] = [c.strip() for c in args.checks.split(",") if c.strip()]
        if args.out is not None:
            raw["output"] = args.out
        cfg = parse_config_dict(raw)
        if args.oracle and "oracle" not in cfg.checks:
            cfg = replace(cfg, checks=cfg.checks + ("oracle",))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
