"""Command-line interface.

Exit codes: 0 success, 1 oracle check failed, 2 unreadable input or unknown
suite, 3 infeasible problem, 4 solver node limit, 5 some experiment trials
failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .case import (CaseParseError, InvalidCase, bundled_case_path, build_ptdf, load_case,
                   parse_json)
from .checks import SUITES, run_suite
from .milp import OBJECTIVE_RTOL, MilpOptions, NodeLimitExceeded
from .reduction import (Degeneracy, InfeasibleBase, PreconditionWarning,
                        support_set_by_removal, two_stage_essential)
from .scuc import build_sscuc
from .stochastic import (DistributionSpec, ExperimentConfig, InvalidSpec, run_experiment,
                         sample_scenarios)
from .theory import DomainError, certify, prior_sample_size

EXIT_OK, EXIT_ORACLE, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_LIMIT, EXIT_PARTIAL = 0, 1, 2, 3, 4, 5
OUT_DIR_ENV = "SCENARIO_SCUC_OUT_DIR"


class UsageError(Exception):
    """Bad input file or argument; maps to exit code 2."""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _sha256(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def resolve_case_path(name: str, base: Path | None = None) -> Path:
    """A path as given, relative to ``base``, or the name of a bundled case."""
    p = Path(name)
    for cand in (p, (base / p) if base else None, bundled_case_path(name)):
        if cand is not None and cand.is_file():
            return cand
    raise UsageError(f"case file {name!r} not found")


def _load_case(name: str, base: Path | None = None):
    try:
        return load_case(resolve_case_path(name, base))
    except InvalidCase as exc:
        raise UsageError(str(exc)) from None


def _scenarios(case, how: str, seed: int):
    """``table``, a count to sample, or a JSON file with ``wind``/``load`` arrays."""
    if how == "table":
        if case.scenario_table is None:
            raise UsageError("case has no scenario table")
        tab = case.scenario_table
        return SimpleNamespace(wind=np.asarray(tab["wind"], float), load=np.asarray(tab["load"], float))
    if how.isdigit():
        spec = DistributionSpec.from_dict(case.distribution, case) if case.distribution else DistributionSpec()
        return sample_scenarios(spec, case, int(how), seed)
    path = Path(how)
    if not path.is_file():
        raise UsageError(f"--scenarios must be 'table', a count or a JSON file, got {how!r}")
    try:
        d = parse_json(path.read_text(), str(path))
    except CaseParseError as exc:
        raise UsageError(str(exc)) from None
    return SimpleNamespace(wind=np.asarray(d["wind"], float), load=np.asarray(d["load"], float))


def _manifest(command: list[str], config: dict, seeds: dict, started: str, wall: float,
              outputs: dict) -> dict:
    return {"command": command, "config": config, "config_sha256": _sha256(config),
            "seeds": seeds, "tool_version": __version__, "started": started,
            "finished": _now(), "wall_time_s": wall, "outputs": outputs}


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_solve(args) -> int:
    started, t0 = _now(), time.perf_counter()
    case = _load_case(args.case)
    scen = _scenarios(case, args.scenarios, args.seed)
    oracle = build_sscuc(case, scen, MilpOptions(node_limit=args.node_limit),
                         rtol=args.tol_eq)
    n = oracle.n_scenarios
    out = _out_dir(args)
    if args.dump_model:
        (out / "model.txt").write_text(oracle.model.export_rows())
    try:
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always", PreconditionWarning)
            red = two_stage_essential(oracle)
        support = support_set_by_removal(oracle, workers=args.threads)
    except InfeasibleBase as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NodeLimitExceeded as exc:
        print(f"node limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    full = oracle.solve(oracle.program.scenarios)
    sol = oracle.uc_solution(full)
    _write_json(out / "solution.json", sol.to_dict())
    reduction = {"two_stage": red.to_dict(), "support": sorted(support.indices)}
    _write_json(out / "reduction.json", reduction)
    outputs = {"solution": "solution.json", "reduction": "reduction.json"}
    print(f"objective {sol.objective!r}")
    print(f"support {sorted(support.indices)}")
    print(f"{red.kind.value} {sorted(red.indices)}")
    print(f"degenerate {red.degenerate is Degeneracy.DEGENERATE} ({red.degenerate.value})")
    if n > 0:
        cert = certify(n, len(red.indices), args.beta)
        _write_json(out / "certificate.json", cert.to_dict())
        outputs["certificate"] = "certificate.json"
        print(f"epsilon {cert.epsilon!r} (N={n}, k={len(red.indices)}, beta={args.beta!r})")
    else:
        print("no scenarios: deterministic solution, no certificate")
    config = {"case": args.case, "scenarios": args.scenarios, "beta": args.beta,
              "tol_eq": args.tol_eq, "node_limit": args.node_limit}
    _write_json(out / "manifest.json", _manifest(sys.argv, config, {"master": args.seed}, started,
                                                 time.perf_counter() - t0, outputs))
    if red.degenerate is Degeneracy.UNKNOWN:
        print("node limit reached: degeneracy unknown", file=sys.stderr)
        return EXIT_LIMIT
    return EXIT_OK


def cmd_prior(args) -> int:
    n_hat = prior_sample_size(args.epsilon, args.beta, args.helly)
    print(json.dumps({"epsilon": args.epsilon, "beta": args.beta, "helly": args.helly,
                      "n_scenarios": n_hat}))
    return EXIT_OK


def load_experiment_config(path: Path, workers: int = 1) -> ExperimentConfig:
    try:
        d = parse_json(path.read_text(), str(path))
    except CaseParseError as exc:
        raise UsageError(str(exc)) from None
    return experiment_config_from_dict(d, path.parent, workers)


def experiment_config_from_dict(d: dict, base: Path | None = None, workers: int = 1) -> ExperimentConfig:
    from .case import case_from_dict
    try:
        raw_case = d["case"]
        case = case_from_dict(raw_case) if isinstance(raw_case, dict) else _load_case(raw_case, base)
        spec_d = d.get("distribution", d.get("spec")) or case.distribution
        spec = DistributionSpec.from_dict(spec_d, case) if spec_d else DistributionSpec()
        return ExperimentConfig(
            case=case, spec=spec, n_grid=tuple(int(n) for n in d["n_grid"]),
            trials=int(d.get("trials", 10)), beta=float(d.get("beta", 0.01)),
            m_oos=int(d.get("m_oos", 100_000)), seed=int(d.get("seed", 0)),
            node_limit=int(d.get("node_limit", 100_000)),
            verify_degeneracy=bool(d.get("verify_degeneracy", True)),
            tol_eq=float(d.get("tol_eq", OBJECTIVE_RTOL)), workers=workers)
    except KeyError as exc:
        raise UsageError(f"experiment config is missing {exc}") from None
    except (InvalidCase, InvalidSpec, ValueError, TypeError) as exc:
        raise UsageError(f"invalid experiment config: {exc}") from None


def cmd_experiment(args) -> int:
    started, t0 = _now(), time.perf_counter()
    if args.from_manifest:
        path = Path(args.from_manifest)
        try:
            manifest = parse_json(path.read_text(), str(path))
        except CaseParseError as exc:
            raise UsageError(str(exc)) from None
        config = experiment_config_from_dict(manifest["config"], path.parent, args.threads)
    elif args.config:
        config = load_experiment_config(Path(args.config), args.threads)
    else:
        raise UsageError("give a config file or --from-manifest")
    report = run_experiment(config)
    out = _out_dir(args)
    csv_text = report.csv_text()
    (out / "results.csv").write_text(csv_text)
    summary = report.summary()
    _write_json(out / "summary.json", summary)
    cfg = config.to_dict()
    outputs = {"csv": "results.csv", "summary": "summary.json",
               "csv_sha256": hashlib.sha256(csv_text.encode()).hexdigest()}
    _write_json(out / "manifest.json", _manifest(sys.argv, cfg, {"master": config.seed}, started,
                                                 time.perf_counter() - t0, outputs))
    for n, entry in summary["per_n"].items():
        if entry["trials_ok"]:
            print(f"N={n}: mean objective {entry['objective']['mean']:.6g}, "
                  f"mean eps_hat {entry['epsilon_hat']['mean']:.4g}, "
                  f"mean posterior eps {entry['epsilon_posterior']['mean']:.4g}, "
                  f"non-degenerate {entry['non_degenerate_rate']:.2f}")
        else:
            print(f"N={n}: no successful trials")
    if report.failed:
        print(f"{len(report.failed)} trial(s) failed or invalid; see results.csv", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_PARSE
    res = run_suite(args.suite, seed=args.seed)
    print(res.summary())
    for k, v in res.notes.items():
        print(f"  {k}: {v}")
    return EXIT_OK if res.passed else EXIT_ORACLE


def cmd_ptdf(args) -> int:
    case = _load_case(args.case)
    t = build_ptdf(case)
    lines = [f"{ln.from_bus}-{ln.to_bus}" for ln in case.lines]
    print(json.dumps({"buses": list(case.buses), "slack_bus": case.slack_bus, "lines": lines,
                      "ptdf": t.bus.round(12).tolist()}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scenario-scuc",
                                description="Scenario-based unit commitment with risk certificates.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./out)")
        sp.add_argument("--threads", type=int, default=1, help="worker count")

    s = sub.add_parser("solve", help="solve s-SCUC, reduce the scenario set, certify")
    s.add_argument("case", help="case file or bundled case name")
    s.add_argument("--scenarios", default="table",
                   help="'table', a number of scenarios to sample, or a JSON file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--beta", type=float, default=0.01)
    s.add_argument("--tol-eq", type=float, default=OBJECTIVE_RTOL,
                   help="relative tolerance of the objective equality test")
    s.add_argument("--node-limit", type=int, default=100_000)
    s.add_argument("--dump-model", action="store_true", help="write model.txt row listing")
    common(s)
    s.set_defaults(func=cmd_solve)

    pr = sub.add_parser("prior", help="scenario count for a prior risk target")
    pr.add_argument("--epsilon", type=float, required=True)
    pr.add_argument("--beta", type=float, required=True)
    pr.add_argument("--helly", type=int, required=True, help="support-set cardinality bound h")
    pr.set_defaults(func=cmd_prior)

    e = sub.add_parser("experiment", help="Monte-Carlo sweep over scenario counts")
    e.add_argument("config", nargs="?", help="experiment config JSON")
    e.add_argument("--from-manifest", help="rerun the configuration stored in a manifest")
    common(e)
    e.set_defaults(func=cmd_experiment)

    o = sub.add_parser("oracle-check", help="cross-validate against brute-force oracles")
    o.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_oracle_check)

    t = sub.add_parser("ptdf", help="print shift factors of a case")
    t.add_argument("case")
    t.set_defaults(func=cmd_ptdf)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
