"""Scenario-driven command-line front end.

A scenario is a JSON file declaring one model and a list of checks; the
runner executes every check (or a selected one), writes machine-readable
reports (CSV or JSON lines), and exits 0 only when every verdict passes.
Sweeps rerun a single check over a grid of one numeric parameter and emit
plot-ready rows.

Exit codes: 0 all pass, 1 some check VIOLATED, 2 some check INCONCLUSIVE,
3 input error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import analytic, verify
from .model import CompoundPoissonSpec, HFunction, OuLevyModel
from .sampler import mix_seed
from .testfuncs import drift_from_spec, observable_from_spec

#: Documented defaults; everything else in a scenario is explicit.
DEFAULT_SAMPLES = 100_000
DEFAULT_GRID_STEPS = 512

CHECK_KINDS = (
    "harnack",
    "log_harnack",
    "gradient",
    "kernel_harnack",
    "kernel_kl",
    "density_norm",
    "hyper_constant",
    "entropy_cost",
    "hwi",
    "semilinear_harnack",
    "rho_moments",
)

CSV_HEADER = ["check_id", "param_json", "lhs", "rhs", "lhs_se", "rhs_se", "margin", "verdict", "seed"]
SWEEP_HEADER = ["parameter", "lhs", "rhs", "lhs_se", "rhs_se", "margin", "verdict"]


class SchemaError(ValueError):
    """Scenario validation failure, carrying the offending field path."""


def _need(d: dict, key: str, path: str):
    if key not in d:
        raise SchemaError(f"{path}.{key}: missing required field")
    return d[key]


def _matrix(d, key, path, dim=None):
    raw = _need(d, key, path)
    try:
        m = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}.{key}: not a numeric matrix ({exc})") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SchemaError(f"{path}.{key}: must be a square row-major matrix")
    if dim is not None and m.shape[0] != dim:
        raise SchemaError(f"{path}.{key}: dimension {m.shape[0]} != dim {dim}")
    return m


def _vector(d, key, path, dim, default=None):
    if key not in d:
        if default is not None:
            return default
        raise SchemaError(f"{path}.{key}: missing required field")
    v = np.asarray(d[key], dtype=float).reshape(-1)
    if v.shape[0] != dim:
        raise SchemaError(f"{path}.{key}: dimension {v.shape[0]} != dim {dim}")
    return v


def parse_model(cfg: dict, path: str = "") -> OuLevyModel:
    dim = _need(cfg, "dim", path or "config")
    if not isinstance(dim, int) or dim < 1:
        raise SchemaError(f"{path}.dim: must be a positive integer")
    a = _matrix(cfg, "A", path, dim)
    r = _matrix(cfg, "R", path, dim)
    offset = _vector(cfg, "a", path, dim, default=np.zeros(dim))
    jump = None
    if cfg.get("jump") is not None:
        j = cfg["jump"]
        rate = _need(j, "rate", f"{path}.jump")
        atoms = np.atleast_2d(np.asarray(_need(j, "atoms", f"{path}.jump"), dtype=float))
        if atoms.shape[1] != dim:
            raise SchemaError(f"{path}.jump.atoms: atom dimension {atoms.shape[1]} != dim {dim}")
        probs = j.get("probs")
        try:
            jump = CompoundPoissonSpec(rate=float(rate), atoms=atoms, probs=probs)
        except ValueError as exc:
            raise SchemaError(f"{path}.jump: {exc}") from exc
    try:
        return OuLevyModel(drift_matrix=a, noise_cov=r, drift_offset=offset, jump=jump)
    except ValueError as exc:
        raise SchemaError(f"{path}.R: {exc}") from exc


def _parse_h(spec, path) -> HFunction:
    if not isinstance(spec, dict):
        raise SchemaError(f"{path}: decay profile must be an object")
    kind = spec.get("kind")
    if kind == "exponential":
        return HFunction.exponential(float(_need(spec, "rate", path)))
    if kind == "constant":
        return HFunction.constant(float(_need(spec, "value", path)))
    raise SchemaError(f"{path}.kind: unknown decay profile {kind!r}")


def _parse_nu(spec, path, dim) -> analytic.GaussianMeasure:
    if not isinstance(spec, dict):
        raise SchemaError(f"{path}: measure must be an object with mean and cov")
    mean = _vector(spec, "mean", path, dim)
    cov = _matrix(spec, "cov", path, dim)
    try:
        return analytic.GaussianMeasure(mean=mean, cov=cov)
    except ValueError as exc:
        raise SchemaError(f"{path}.cov: {exc}") from exc


@dataclass
class Scenario:
    """Parsed scenario: model plus normalized check descriptions."""

    model: OuLevyModel
    checks: list[dict]
    seed: int | None

    @staticmethod
    def parse(cfg: dict) -> "Scenario":
        if not isinstance(cfg, dict):
            raise SchemaError("config: top level must be an object")
        model = parse_model(cfg, "config")
        top_seed = cfg.get("seed")
        raw_checks = _need(cfg, "checks", "config")
        if not isinstance(raw_checks, list) or not raw_checks:
            raise SchemaError("config.checks: must be a non-empty list")
        checks = []
        seen = set()
        for i, entry in enumerate(raw_checks):
            path = f"config.checks[{i}]"
            if not isinstance(entry, dict):
                raise SchemaError(f"{path}: must be an object")
            kind = _need(entry, "kind", path)
            if kind not in CHECK_KINDS:
                raise SchemaError(f"{path}.kind: unknown check kind {kind!r}")
            cid = entry.get("id", f"{kind}#{i:03d}")
            if cid in seen:
                raise SchemaError(f"{path}.id: duplicate check id {cid!r}")
            seen.add(cid)
            seed = entry.get("seed")
            if seed is None:
                if top_seed is None:
                    raise SchemaError(f"{path}.seed: no seed given and no top-level seed to derive from")
                seed = mix_seed(int(top_seed), i)
            norm = dict(entry)
            norm["id"] = cid
            norm["seed"] = int(seed)
            checks.append(norm)
        return Scenario(model=model, checks=checks, seed=top_seed)

    def to_dict(self) -> dict:
        m = self.model
        out: dict = {
            "dim": m.dim,
            "A": m.drift_matrix.tolist(),
            "R": m.noise_cov.tolist(),
            "a": m.drift_offset.tolist(),
        }
        if m.jump is not None:
            out["jump"] = {
                "rate": m.jump.rate,
                "atoms": m.jump.atoms.tolist(),
                "probs": m.jump.probs.tolist(),
            }
        if self.seed is not None:
            out["seed"] = self.seed
        out["checks"] = [dict(c) for c in self.checks]
        return out


def _run_check(model: OuLevyModel, entry: dict, samples: int | None) -> list[verify.CheckReport]:
    kind = entry["kind"]
    cid = entry["id"]
    path = f"check {cid}"
    dim = model.dim
    seed = entry["seed"]
    n = int(samples if samples is not None else entry.get("n", DEFAULT_SAMPLES))
    grid = int(entry.get("K", DEFAULT_GRID_STEPS))
    t = float(_need(entry, "t", path))

    if kind in ("harnack", "log_harnack", "gradient", "semilinear_harnack"):
        x = _vector(entry, "x", path, dim)
        y = _vector(entry, "y", path, dim)
        f = observable_from_spec(_need(entry, "f", path), dim)
        if kind == "harnack":
            h = _parse_h(entry["h"], f"{path}.h") if entry.get("h") else None
            return [verify.check_harnack(
                model, t, x, y, float(_need(entry, "alpha", path)), f,
                bound_mode=entry.get("bound_mode", "exact_gamma"),
                n=n, seed=seed, h=h, check_id=cid)]
        if kind == "log_harnack":
            return [verify.check_log_harnack(model, t, x, y, f, n=n, seed=seed, check_id=cid)]
        if kind == "gradient":
            return [verify.check_gradient_estimate(model, t, x, y, f, n=n, seed=seed, check_id=cid)]
        spec = drift_from_spec(_need(entry, "F", path), model)
        return [verify.check_semilinear_harnack(
            model, spec, t, x, y,
            float(_need(entry, "alpha", path)),
            float(_need(entry, "p", path)), float(_need(entry, "q", path)),
            f, n=n, K=grid, seed=seed, check_id=cid)]

    if kind in ("kernel_harnack", "kernel_kl"):
        x = _vector(entry, "x", path, dim)
        y = _vector(entry, "y", path, dim)
        alpha = float(entry.get("alpha", 2.0))
        power_rep, kl_rep = verify.check_kernel_inequalities(model, t, x, y, alpha, check_id=cid)
        rep = power_rep if kind == "kernel_harnack" else kl_rep
        return [dataclasses.replace(rep, check_id=cid)]

    if kind == "density_norm":
        x = _vector(entry, "x", path, dim)
        return [verify.check_density_norm(model, t, x, float(_need(entry, "alpha", path)), check_id=cid)]

    if kind == "hyper_constant":
        return [verify.check_hyper_constant(
            model, t, float(_need(entry, "alpha", path)),
            float(_need(entry, "epsilon", path)), check_id=cid)]

    if kind == "entropy_cost":
        nu = _parse_nu(_need(entry, "nu", path), f"{path}.nu", dim)
        return list(verify.check_entropy_cost(model, nu, t, check_id=cid))

    if kind == "hwi":
        nu = _parse_nu(_need(entry, "nu", path), f"{path}.nu", dim)
        h = _parse_h(_need(entry, "h", path), f"{path}.h")
        return [verify.check_hwi(model, nu, h, t,
                                 use_h_bound=bool(entry.get("use_h_bound", False)), check_id=cid)]

    if kind == "rho_moments":
        x = _vector(entry, "x", path, dim)
        spec = drift_from_spec(_need(entry, "F", path), model)
        return list(verify.check_rho_moments(
            model, spec, t, x, float(_need(entry, "p", path)),
            float(_need(entry, "delta", path)), n=n, K=grid, seed=seed, check_id=cid))

    raise SchemaError(f"{path}: unknown check kind {kind!r}")


def run_scenario(scenario: Scenario, samples: int | None = None,
                 only_check: str | None = None) -> list[verify.CheckReport]:
    """Execute the scenario's checks and return reports sorted by check id."""
    reports: list[verify.CheckReport] = []
    matched = False
    for entry in scenario.checks:
        if only_check is not None and entry["id"] != only_check:
            continue
        matched = True
        reports.extend(_run_check(scenario.model, entry, samples))
    if only_check is not None and not matched:
        raise SchemaError(f"config.checks: no check with id {only_check!r}")
    return sorted(reports, key=lambda r: r.check_id)


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _param_json(params: dict) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"), default=repr)


def render_reports(reports, fmt: str = "csv") -> str:
    if fmt == "json":
        lines = []
        for r in reports:
            lines.append(json.dumps({
                "check_id": r.check_id,
                "params": r.params,
                "lhs": _fmt(r.lhs), "rhs": _fmt(r.rhs),
                "lhs_se": _fmt(r.lhs_se), "rhs_se": _fmt(r.rhs_se),
                "margin": _fmt(r.margin), "verdict": r.verdict, "seed": r.seed,
            }, sort_keys=True, separators=(",", ":"), default=repr))
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in reports:
        writer.writerow([r.check_id, _param_json(r.params), _fmt(r.lhs), _fmt(r.rhs),
                         _fmt(r.lhs_se), _fmt(r.rhs_se), _fmt(r.margin), r.verdict, r.seed])
    return buf.getvalue()


def exit_code(reports) -> int:
    verdicts = {r.verdict for r in reports}
    if verify.VIOLATED in verdicts:
        return 1
    if verify.INCONCLUSIVE in verdicts:
        return 2
    return 0


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _apply_sweep_value(entry: dict, name: str, value: float) -> dict:
    out = dict(entry)
    if name == "delta":
        x = np.asarray(out["x"], dtype=float).reshape(-1)
        y = np.asarray(out["y"], dtype=float).reshape(-1)
        direction = y - x
        norm = float(np.linalg.norm(direction))
        unit = direction / norm if norm > 0 else np.eye(x.shape[0])[0]
        out["y"] = (x + value * unit).tolist()
        return out
    if name not in out or not isinstance(out[name], (int, float)):
        raise SchemaError(f"sweep: parameter {name!r} is not a numeric scalar of the check")
    out[name] = value
    return out


def run_sweep(scenario: Scenario, check_id: str, name: str, grid,
              samples: int | None = None) -> list[tuple[float, verify.CheckReport]]:
    """Rerun one check over a parameter grid; first report per point."""
    entry = None
    for e in scenario.checks:
        if e["id"] == check_id:
            entry = e
            break
    if entry is None:
        raise SchemaError(f"sweep: no check with id {check_id!r}")
    rows = []
    for value in grid:
        modified = _apply_sweep_value(entry, name, float(value))
        reports = _run_check(scenario.model, modified, samples)
        rows.append((float(value), reports[0]))
    return rows


def render_sweep(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for value, r in rows:
        writer.writerow([_fmt(value), _fmt(r.lhs), _fmt(r.rhs), _fmt(r.lhs_se),
                         _fmt(r.rhs_se), _fmt(r.margin), r.verdict])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def random_jump_suite(seed: int, count: int = 50, n: int = 20_000) -> list[dict]:
    """Randomized compound-Poisson Harnack scenarios, one config per model.

    Models are stable with full-rank noise so the minimum-energy exponent is
    finite; observables are drawn from the bounded registry.  The same seed
    always yields the same suite.
    """
    gen = np.random.Generator(np.random.Philox(key=np.array([seed & (2**64 - 1), 0xF1FE], dtype=np.uint64)))
    models = []
    for i in range(count):
        dim = int(gen.integers(1, 4))
        a = gen.normal(0.0, 0.4, size=(dim, dim))
        a -= (max(float(np.linalg.eigvals(a).real.max()), 0.0) + 0.5 + float(gen.uniform(0.0, 0.5))) * np.eye(dim)
        b = gen.normal(0.0, 1.0, size=(dim, dim))
        r = b @ b.T / dim + 0.3 * np.eye(dim)
        n_atoms = int(gen.integers(1, 4))
        atoms = gen.uniform(-1.2, 1.2, size=(n_atoms, dim))
        probs = gen.uniform(0.2, 1.0, size=n_atoms)
        probs = probs / probs.sum()
        x = gen.uniform(-1.0, 1.0, size=dim)
        y = x + gen.uniform(-0.8, 0.8, size=dim)
        alpha = float(gen.uniform(1.5, 5.0))
        f_kind = ["clipped_exp", "one_plus_sigmoid", "indicator"][int(gen.integers(0, 3))]
        f_spec = {"kind": f_kind, "c": gen.uniform(-0.6, 0.6, size=dim).tolist()}
        if f_kind == "clipped_exp":
            f_spec["cap"] = 10.0
        models.append({
            "dim": dim,
            "A": a.tolist(),
            "R": r.tolist(),
            "a": np.zeros(dim).tolist(),
            "jump": {"rate": float(gen.uniform(0.5, 3.0)), "atoms": atoms.tolist(), "probs": probs.tolist()},
            "seed": mix_seed(seed, i),
            "checks": [{
                "kind": "harnack",
                "id": f"jump_harnack#{i:03d}",
                "t": float(gen.uniform(0.4, 1.6)),
                "x": x.tolist(),
                "y": y.tolist(),
                "alpha": alpha,
                "f": f_spec,
                "bound_mode": "exact_gamma",
                "n": n,
            }],
        })
    return models


def _parse_sweep_flag(text: str):
    parts = text.split(":")
    if len(parts) != 4:
        raise SchemaError("sweep: expected NAME:START:STOP:STEPS")
    name, start, stop, steps = parts
    try:
        start, stop, steps = float(start), float(stop), int(steps)
    except ValueError as exc:
        raise SchemaError(f"sweep: bad grid ({exc})") from exc
    if steps < 1:
        raise SchemaError("sweep: STEPS must be at least 1")
    return name, np.linspace(start, stop, steps)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harnacklab",
                                     description="Run inequality checks from a JSON scenario.")
    parser.add_argument("--config", required=True, help="path to the scenario JSON file")
    parser.add_argument("--check", default=None, help="run only the check with this id")
    parser.add_argument("--samples", type=int, default=None, help="override Monte Carlo sample count")
    parser.add_argument("--seed", type=int, default=None, help="override the top-level seed")
    parser.add_argument("--out", default=None, help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--sweep", default=None, metavar="NAME:START:STOP:STEPS",
                        help="sweep one numeric parameter of the selected check")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 3
    if args.seed is not None:
        cfg = dict(cfg)
        cfg["seed"] = args.seed
        cfg["checks"] = [{k: v for k, v in c.items() if k != "seed"} for c in cfg.get("checks", [])]
    try:
        scenario = Scenario.parse(cfg)
        if args.sweep is not None:
            if args.check is None:
                raise SchemaError("sweep: --check ID is required with --sweep")
            name, grid = _parse_sweep_flag(args.sweep)
            rows = run_sweep(scenario, args.check, name, grid, samples=args.samples)
            text = render_sweep(rows)
            code = exit_code([r for _, r in rows])
        else:
            reports = run_scenario(scenario, samples=args.samples, only_check=args.check)
            text = render_reports(reports, fmt=args.format)
            code = exit_code(reports)
    except (SchemaError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
