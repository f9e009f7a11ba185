"""Command-line front end.

    robust-saa bounds      --config C [--out DIR]
    robust-saa simulate    --config C [--out DIR] [--seed S] [--jobs K]
    robust-saa sample-size --config C
    robust-saa sweep       --config C [--out DIR]

Exit codes: 0 success, 1 validation error, 2 a bound check failed,
3 internal error.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys
import traceback
from typing import Any, Sequence

import numpy as np

from . import schemas
from .bounds import (
    BoundRow,
    bound_luedtke,
    bound_thm1,
    bound_thm2,
    bound_thm3,
    bound_thm5,
    default_beta,
    penalties,
    write_bound_csv,
)
from .distributions import VariationBudget
from .errors import RobustSAAError, SchemaError
from .harness import (
    RadiiRule,
    TrialConfig,
    echo_config,
    estimate_infeasibility,
    first_below_one,
    sweep_bound_comparison,
    verify_corollary4,
    write_corollary4_csv,
    write_estimate_csv,
    write_sweep_csv,
)
from .kernels import min_sample_size
from .saa import radii_from_theta

EXIT_OK, EXIT_VALIDATION, EXIT_BOUND_CHECK, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as a bound-check failure
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _n_values(spec: Any) -> list[int]:
    if isinstance(spec, int):
        return [spec]
    if isinstance(spec, list):
        return list(spec)
    if spec["start"] > spec["stop"]:
        raise SchemaError("start must not exceed stop", path="N")
    return list(range(spec["start"], spec["stop"] + 1, spec.get("step", 1)))


def _radii_rule(doc: dict | None) -> RadiiRule:
    if doc is None or doc["rule"] == "zero":
        return RadiiRule.zero()
    if doc["rule"] == "theta":
        return RadiiRule.from_theta(doc["theta"])
    return RadiiRule.explicit(doc["values"])


def _rule_radii(rule: RadiiRule, budget: VariationBudget, n: int) -> np.ndarray:
    if rule.kind == "zero":
        return np.zeros(n)
    if rule.kind == "theta":
        return radii_from_theta(budget, n, rule.theta)
    if len(rule.values) != n:
        raise SchemaError(f"{len(rule.values)} explicit radii for N = {n}", path="radii.values")
    return np.array(rule.values)


def _penalty_runs(req: dict) -> list[tuple[int, list[float], dict]]:
    """(N, p, extra parameters) for every N a Poisson binomial bound is requested at."""
    if "p" in req:
        p = req["p"]
        return [(len(p), p, {})]
    budget = VariationBudget.from_dict(req["budget"])
    rule = _radii_rule(req["radii"])
    out = []
    for n in _n_values(req["N"]):
        p = penalties(budget, n, _rule_radii(rule, budget, n), req["epsilon"])
        out.append((n, p.tolist(), {"epsilon": req["epsilon"], "budget": req["budget"]["form"]}))
    return out


def evaluate_bound_request(req: dict) -> list[BoundRow]:
    name = req["bound"]
    cov = {k: req[k] for k in ("lipschitz", "diameter", "gamma", "n") if k in req}
    rows = []
    if name in ("thm1", "thm2", "luedtke"):
        for n in _n_values(req["N"]):
            if name == "thm1":
                params = {"card_X": req["card_X"], "alpha": req["alpha"], "epsilon": req["epsilon"]}
                value = bound_thm1(req["card_X"], req["alpha"], req["epsilon"], n)
            elif name == "thm2":
                params = {**cov, "alpha": req["alpha"], "epsilon": req["epsilon"]}
                value = bound_thm2(cov["lipschitz"], cov["diameter"], cov["gamma"], cov["n"], req["alpha"], req["epsilon"], n)
            else:
                params = {**cov, "alpha": req["alpha"], "epsilon": req["epsilon"], "beta": req["beta"]}
                value = bound_luedtke(
                    cov["lipschitz"], cov["diameter"], cov["gamma"], cov["n"], req["alpha"], req["epsilon"], req["beta"], n
                )
            rows.append(BoundRow(name, n, params, value))
        return rows
    for n, p, extra in _penalty_runs(req):
        if name == "thm3":
            params = {"card_X": req["card_X"], "alpha": req["alpha"], **extra}
            value = bound_thm3(req["card_X"], req["alpha"], n, p)
        else:
            params = {**cov, "alpha": req["alpha"], **extra}
            value = bound_thm5(cov["lipschitz"], cov["diameter"], cov["gamma"], cov["n"], req["alpha"], n, p)
        rows.append(BoundRow(name, n, params, value))
    return rows


def _sweep(doc: dict, out_dir: str, default_name: str) -> str:
    beta = doc.get("beta", default_beta(doc["epsilon"], doc["alpha"]))
    n_values = _n_values(doc.get("N", {"start": 1, "stop": 2000}))
    rows = sweep_bound_comparison(doc["n"], doc["epsilon"], doc["alpha"], doc["ratio"], beta, n_values)
    path = os.path.join(out_dir, doc.get("output", default_name))
    write_sweep_csv(path, rows)
    worst = max(rows, key=lambda r: r.ratio)
    first = first_below_one(rows)
    print(f"sweep: {len(rows)} rows -> {path}")
    print(f"  bound_thm2 <= bound_luedtke for all N: {all(r.thm2.raw <= r.luedtke.raw for r in rows)}")
    print(f"  max ratio {worst.ratio:.6g} at N = {worst.n_samples}")
    print(f"  first N with bound_thm2 < 1: {first}")
    return path


def run_bounds(doc: dict, out_dir: str) -> int:
    if not doc.get("bounds") and "figure1" not in doc:
        raise SchemaError("no bounds requested", path="bounds")
    schemas.validate(doc, schemas.BOUNDS_CONFIG)
    rows = [row for req in doc.get("bounds", []) for row in evaluate_bound_request(req)]
    if rows:
        path = os.path.join(out_dir, doc.get("output", "bounds.csv"))
        write_bound_csv(path, rows)
        print(f"{'bound':<8} {'N':>6} {'raw':>14} {'log10':>12} {'clamped':>10}")
        for r in rows:
            print(f"{r.bound:<8} {r.n_samples:>6} {r.value.raw:>14.6g} {r.value.log10:>12.6g} {r.value.clamped:>10.6g}")
        print(f"{len(rows)} rows -> {path}")
    if "figure1" in doc:
        _sweep(doc["figure1"], out_dir, "figure1.csv")
    return EXIT_OK


def run_sweep(doc: dict, out_dir: str) -> int:
    schemas.validate(doc, schemas.SWEEP_CONFIG)
    _sweep(doc["sweep"], out_dir, "figure1.csv")
    return EXIT_OK


def run_sample_size(doc: dict) -> int:
    schemas.validate(doc, schemas.SAMPLE_SIZE_CONFIG)
    print(min_sample_size(doc["card_X"], doc["delta"], doc["epsilon"], doc["alpha"], doc["theta"]))
    return EXIT_OK


def resolve_simulate(doc: dict, seed: int | None) -> dict:
    """Config with every default filled in; this is what gets echoed."""
    out = copy.deepcopy(doc)
    top_seed = seed if seed is not None else out.get("seed", 0)
    out["seed"] = top_seed
    out.setdefault("trials", 10_000)
    for key in ("runs", "corollary4"):
        for i, run in enumerate(out.get(key, [])):
            run.setdefault("name", f"{key}-{i}")
            run["seed"] = top_seed if seed is not None else run.get("seed", top_seed)
            run.setdefault("trials", out["trials"])
            run.setdefault("support_mode", "ball-only")
            if key == "runs":
                run.setdefault("radii", {"rule": "zero"})
    return out


def run_simulate(doc: dict, out_dir: str, seed: int | None = None, jobs: int = 1) -> int:
    schemas.validate(doc, schemas.SIMULATE_CONFIG)
    if not doc.get("runs") and not doc.get("corollary4"):
        raise SchemaError("no runs requested", path="runs")
    resolved = resolve_simulate(doc, seed)
    # build everything first so a bad sequence fails before any trial runs
    configs = []
    for i, run in enumerate(resolved.get("runs", [])):
        configs.append(
            TrialConfig(
                schemas.load_instance(run["problem"]),
                schemas.build_environment(run["environment"]),
                _radii_rule(run["radii"]),
                run["trials"],
                run["seed"],
                run["support_mode"],
                name=run["name"],
            )
        )
    checks = []
    for run in resolved.get("corollary4", []):
        instance = schemas.load_instance(run["problem"])
        env = run["environment"]
        schemas.validate(env, schemas.ENVIRONMENT, "environment")
        checks.append((run, instance, env))
    echo_config(os.path.join(out_dir, "simulate.resolved.json"), resolved)

    ok = True
    if configs:
        results = []
        for cfg in configs:
            res = estimate_infeasibility(cfg, jobs=jobs)
            results.append(res)
            ok &= res.passed
            bounds = ", ".join(f"{k}={v.clamped:.4g}" for k, v in sorted(res.bounds.items()))
            status = "ok" if res.passed else "FAIL"
            print(
                f"{res.name}: N={res.n_samples} freq={res.frequency:.5f} "
                f"[{res.wilson[0]:.5f}, {res.wilson[1]:.5f}] {bounds} {status}"
            )
        write_estimate_csv(os.path.join(out_dir, "estimates.csv"), results)
    if checks:
        reports = []
        for run, instance, env in checks:
            rep = verify_corollary4(
                instance,
                lambda n, env=env: schemas.build_environment(env, n),
                run["trials"],
                run["seed"],
                run["support_mode"],
                jobs,
                run["name"],
            )
            reports.append(rep)
            ok &= rep.passed
            print(
                f"{run['name']}: N={rep.n_samples} freq={rep.estimate.frequency:.5f} "
                f"delta={rep.delta} {'ok' if rep.passed else 'FAIL'}"
            )
        write_corollary4_csv(os.path.join(out_dir, "corollary4.csv"), reports)
    return EXIT_OK if ok else EXIT_BOUND_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robust-saa", description="Bounds and Monte Carlo checks for robust SAA of chance constraints.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("bounds", "simulate", "sample-size", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", default=".", metavar="DIR")
        p.add_argument("--seed", type=int, default=None, metavar="U64")
        p.add_argument("--jobs", type=int, default=1, metavar="K")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise SchemaError("--jobs must be at least 1", path="--jobs")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise SchemaError("--seed must be an unsigned 64-bit integer", path="--seed")
        doc = schemas.load_json(args.config)
        if not isinstance(doc, dict):
            raise SchemaError("config must be a JSON object", path="<root>")
        if args.command != "sample-size":
            try:
                os.makedirs(args.out, exist_ok=True)
            except OSError as exc:
                raise SchemaError(f"output directory not writable: {exc.strerror}", path="--out") from None
        if args.command == "bounds":
            return run_bounds(doc, args.out)
        if args.command == "sweep":
            return run_sweep(doc, args.out)
        if args.command == "sample-size":
            return run_sample_size(doc)
        return run_simulate(doc, args.out, args.seed, args.jobs)
    except RobustSAAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
