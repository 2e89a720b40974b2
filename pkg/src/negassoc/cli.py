"""Command-line harness: configuration ingestion, scenario dispatch, reports.

A scenario runs from an ``ExperimentConfig`` (parsed from a JSON document
with a versioned schema; unknown fields are errors) and produces a report
dictionary that serializes deterministically: no timestamps, sorted keys,
and shortest-round-trip floats.  Re-running the same config and seed yields
byte-identical output.

Exit codes: 0 all checks hold, 1 violated with witness, 2 usage or config
error, 3 a size guard refused the computation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (BoundReport, binomial_void_superadditivity,
                     poisson_domination_report)
from .dependence import is_na, is_sna
from .errors import ConfigError, GuardError
from .montecarlo import (chebyshev_bound, chernoff_bound,
                         kolmogorov_bound_check, mc_estimate,
                         sample_counts_blocked)
from .multiaffine import (SubsetMeasure, is_rayleigh, is_strongly_rayleigh,
                          polarize)
from .pmf import (Pmf, binomial_pmf, class_q_pmf, is_ulc, poisson_binomial,
                  truncated_poisson)
from .processes import (DppModel, MixedSampledProcess, PartitionModel,
                        count_law)

SCHEMA_VERSION = 1
SCENARIOS = ("na-check", "sna-check", "ulc-check", "rayleigh-check",
             "sr-check", "polarize", "count-law", "domination",
             "concentration", "sample")
CSV_FIELDS = ("scenario", "check_name", "lhs", "rhs", "slack", "status",
              "seed", "n")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    seed: int = 0
    reps: int = 1
    process: dict | None = None
    measure: dict | None = None
    pmf: list | None = None
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    out_dir: str | None = None
    fmt: str = "both"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; "
                              f"expected one of {SCENARIOS}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.fmt not in ("json", "csv", "both"):
            raise ConfigError("format must be json, csv or both")

    def to_json_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "scenario": self.scenario,
                "seed": self.seed, "reps": self.reps, "process": self.process,
                "measure": self.measure, "pmf": self.pmf,
                "params": self.params, "tolerances": self.tolerances}


_CONFIG_KEYS = {"schema_version", "scenario", "seed", "reps", "process",
                "measure", "pmf", "params", "tolerances", "out_dir", "format"}


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}; "
                          f"expected {SCHEMA_VERSION}")
    if "scenario" not in doc:
        raise ConfigError("config requires a scenario field")
    return ExperimentConfig(
        scenario=doc["scenario"], seed=int(doc.get("seed", 0)),
        reps=int(doc.get("reps", 1)), process=doc.get("process"),
        measure=doc.get("measure"), pmf=doc.get("pmf"),
        params=dict(doc.get("params", {})),
        tolerances=dict(doc.get("tolerances", {})),
        out_dir=doc.get("out_dir"), fmt=doc.get("format", "both"))


_TAU_KINDS = {"pmf", "poisson-binomial", "binomial", "poisson", "class-q"}


def parse_tau(d: dict) -> Pmf:
    kind = d.get("kind")
    if kind not in _TAU_KINDS:
        raise ConfigError(f"tau kind must be one of {sorted(_TAU_KINDS)}")
    if kind == "pmf":
        return Pmf(np.asarray(d["probs"], dtype=float), padded=True)
    if kind == "poisson-binomial":
        return poisson_binomial(d["ps"])
    if kind == "binomial":
        return binomial_pmf(int(d["n"]), float(d["p"]))
    if kind == "poisson":
        return truncated_poisson(float(d["rate"]),
                                 float(d.get("mass_floor", 1.0 - 1e-12)))
    return class_q_pmf(float(d["rate"]), d.get("ps", ()),
                       float(d.get("mass_floor", 1.0 - 1e-12)))


def parse_process(d: dict):
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError("process spec requires a type field")
    if d["type"] == "mixed":
        unknown = set(d) - {"type", "tau", "partition"}
        if unknown:
            raise ConfigError(f"unknown process fields: {sorted(unknown)}")
        try:
            tau = parse_tau(d["tau"])
            part = PartitionModel(np.asarray(d["partition"], dtype=float))
        except KeyError as exc:
            raise ConfigError(f"process spec missing field {exc}") from exc
        return MixedSampledProcess(tau, part)
    if d["type"] == "dpp":
        unknown = set(d) - {"type", "kernel", "cells"}
        if unknown:
            raise ConfigError(f"unknown process fields: {sorted(unknown)}")
        try:
            return DppModel(np.asarray(d["kernel"], dtype=float),
                            tuple(d["cells"]))
        except KeyError as exc:
            raise ConfigError(f"process spec missing field {exc}") from exc
    raise ConfigError(f"unknown process type {d['type']!r}")


def _check_row(name: str, lhs: float, rhs: float, status: str, n: int = 1) -> dict:
    return {"check_name": name, "lhs": float(lhs), "rhs": float(rhs),
            "slack": float(rhs) - float(lhs), "status": status, "n": int(n)}


def _bound_row(r: BoundReport, n: int = 1) -> dict:
    return _check_row(r.name, r.lhs, r.rhs, r.status, n)


def _require(config: ExperimentConfig, attr: str):
    value = getattr(config, attr)
    if value is None:
        raise ConfigError(f"scenario {config.scenario!r} requires {attr!r}")
    return value


def run_scenario(config: ExperimentConfig) -> dict:
    """Execute one scenario; returns the report dictionary."""
    tol = float(config.tolerances.get("covariance", 1e-10))
    checks: list[dict] = []
    detail: dict = {}
    scenario = config.scenario

    if scenario in ("na-check", "sna-check"):
        process = parse_process(_require(config, "process"))
        law = count_law(process)
        verdict = (is_na if scenario == "na-check" else is_sna)(law.joint, tol=tol)
        checks.append(_check_row(scenario, verdict.max_covariance, tol,
                                 verdict.status))
        detail["verdict"] = verdict.to_json_dict()
        detail["truncation_mass"] = law.truncation_mass

    elif scenario == "ulc-check":
        pmf = Pmf(np.asarray(_require(config, "pmf"), dtype=float), padded=True)
        ok, idx = is_ulc(pmf)
        checks.append(_check_row("ulc", 0.0 if ok else 1.0, 0.0,
                                 "holds" if ok else "violated"))
        detail["violation_index"] = idx

    elif scenario in ("rayleigh-check", "sr-check"):
        measure = SubsetMeasure.from_json_dict(_require(config, "measure"))
        budget = int(config.params.get("grid_budget", 10**4))
        if scenario == "rayleigh-check":
            verdict = is_rayleigh(measure, grid_budget=budget, seed=config.seed)
        else:
            lines = int(config.params.get("n_lines", 10**3))
            verdict = is_strongly_rayleigh(measure, grid_budget=budget,
                                           n_lines=lines, seed=config.seed)
        ok = verdict.status == "no-violation-found"
        checks.append(_check_row(scenario, 0.0 if ok else 1.0, 0.0,
                                 "holds" if ok else "violated"))
        detail["verdict"] = verdict.to_json_dict()

    elif scenario == "polarize":
        pmf = Pmf(np.asarray(_require(config, "pmf"), dtype=float), padded=True)
        measure = polarize(pmf)
        checks.append(_check_row("polarize", 0.0, 0.0, "holds"))
        detail["measure"] = measure.to_json_dict()

    elif scenario == "count-law":
        process = parse_process(_require(config, "process"))
        law = count_law(process)
        checks.append(_check_row("count-law-mass", float(law.joint.probs.sum()),
                                 1.0, "holds"))
        detail["law"] = law.to_json_dict()

    elif scenario == "domination":
        process = parse_process(_require(config, "process"))
        report = poisson_domination_report(process)
        for i, (ok, k) in enumerate(report.cx_marginals):
            checks.append(_check_row(f"cx-cell-{i}", 0.0 if ok else 1.0, 0.0,
                                     "holds" if ok else "violated"))
        worst_void = min(report.void_checks, key=lambda r: r.slack)
        checks.append(_bound_row(worst_void))
        checks.append(_bound_row(report.moment_check))
        for sign in ("negative", "positive"):
            rows = [r for r in report.laplace_checks if r.name.endswith(sign)]
            checks.append(_bound_row(min(rows, key=lambda r: r.slack)))
        detail["domination"] = report.to_json_dict()

    elif scenario == "concentration":
        process = parse_process(_require(config, "process"))
        law = count_law(process)
        cell = int(config.params.get("cell", 0))
        eps = float(config.params.get("eps", 1.0))
        t = float(config.params.get("t", 0.5))
        checks.append(_bound_row(chebyshev_bound(law, cell, eps)))
        upper, lower = chernoff_bound(law, cell, eps, t)
        checks.append(_bound_row(upper))
        checks.append(_bound_row(lower))
        if "b" in config.params:
            b = [float(x) for x in config.params["b"]]
            rep = kolmogorov_bound_check(process, b, eps, n_mc=config.reps,
                                         seed=config.seed,
                                         m_start=config.params.get("m_start"))
            checks.append(_bound_row(rep, n=config.reps))
            detail["kolmogorov"] = rep.to_json_dict()

    elif scenario == "sample":
        process = parse_process(_require(config, "process"))
        counts = sample_counts_blocked(process, config.reps, config.seed)
        law = count_law(process)
        freq: dict = {}
        for row in counts:
            key = tuple(float(c) for c in row)
            freq[key] = freq.get(key, 0) + 1
        n = config.reps
        for atom, p_exact in zip(law.joint.support, law.joint.probs):
            k = freq.pop(atom, 0)
            phat = k / n
            se = float(np.sqrt(max(p_exact * (1 - p_exact), 1e-300) / n))
            ok = abs(phat - p_exact) <= 4.0 * se
            checks.append(_check_row(f"atom-{atom}", phat, float(p_exact),
                                     "holds" if ok else "violated", n))
        for atom, k in sorted(freq.items()):
            checks.append(_check_row(f"atom-{atom}", k / n, 0.0, "violated", n))
        detail["evidence"] = "exact-law"

    overall = "holds" if all(c["status"] == "holds" for c in checks) else "violated"
    return {"schema_version": SCHEMA_VERSION, "scenario": scenario,
            "seed": config.seed, "reps": config.reps,
            "config": config.to_json_dict(), "checks": checks,
            "detail": detail, "overall": overall}


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in report["checks"]:
        writer.writerow({"scenario": report["scenario"],
                         "check_name": row["check_name"], "lhs": row["lhs"],
                         "rhs": row["rhs"], "slack": row["slack"],
                         "status": row["status"], "seed": report["seed"],
                         "n": row["n"]})
    return buf.getvalue()


def emit_report(report: dict, out_dir: str | None, fmt: str) -> None:
    if out_dir is None:
        if fmt in ("json", "both"):
            sys.stdout.write(report_json(report))
        if fmt in ("csv", "both"):
            sys.stdout.write(report_csv(report))
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    if fmt in ("json", "both"):
        (path / "report.json").write_text(report_json(report))
    if fmt in ("csv", "both"):
        (path / "summary.csv").write_text(report_csv(report))


def run(config: ExperimentConfig) -> int:
    """Run a scenario, emit reports, and return the process exit code."""
    try:
        report = run_scenario(config)
    except GuardError as exc:
        sys.stderr.write(f"guard exceeded: {exc}\n")
        return 3
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    emit_report(report, config.out_dir, config.fmt)
    return 0 if report["overall"] == "holds" else 1


# ---------------------------------------------------------------------------
# argument parsing


def _load_json_arg(inline: str | None, path: str | None, what: str) -> dict:
    if (inline is None) == (path is None):
        raise ConfigError(f"provide exactly one of --{what} / --{what}-file")
    text = inline if inline is not None else Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid {what} JSON at line {exc.lineno} "
                          f"column {exc.colno}: {exc.msg}") from exc


def _parse_pmf_arg(text: str) -> list:
    try:
        if text.strip().startswith("["):
            return [float(x) for x in json.loads(text)]
        return [float(x) for x in text.split(",")]
    except (ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"invalid pmf {text!r}") from exc


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--reps", type=int, default=1)
    sub.add_argument("--tol", type=float, default=None)
    sub.add_argument("--out", default=None, help="report directory")
    sub.add_argument("--format", default="both", choices=("json", "csv", "both"))


def _add_process(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--process", default=None, help="inline process JSON")
    sub.add_argument("--process-file", default=None)


def _add_measure(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--measure", default=None, help="inline measure JSON")
    sub.add_argument("--measure-file", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="negassoc",
        description="negative-association and dependence-ordering checks for "
                    "finite point processes")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("check-ulc", help="ultra log-concavity of a count law")
    p.add_argument("--pmf", required=True)
    _add_common(p)

    for name in ("check-rayleigh", "check-sr"):
        p = subs.add_parser(name)
        _add_measure(p)
        p.add_argument("--budget", type=int, default=10**4)
        p.add_argument("--lines", type=int, default=10**3)
        _add_common(p)

    for name in ("check-na", "check-sna", "count-law", "dominate"):
        p = subs.add_parser(name)
        _add_process(p)
        _add_common(p)

    p = subs.add_parser("polarize", help="lift a count law to an "
                                         "exchangeable binary measure")
    p.add_argument("--pmf", required=True)
    _add_common(p)

    p = subs.add_parser("concentrate")
    _add_process(p)
    p.add_argument("--cell", type=int, default=0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--b", default=None,
                   help="comma-separated weights for the maximal inequality")
    p.add_argument("--m-start", type=int, default=None)
    _add_common(p)

    p = subs.add_parser("sample")
    _add_process(p)
    _add_common(p)

    p = subs.add_parser("run", help="run a config file")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.add_argument("--format", default=None, choices=("json", "csv", "both"))
    return parser


_COMMAND_SCENARIO = {"check-ulc": "ulc-check", "check-rayleigh": "rayleigh-check",
                     "check-sr": "sr-check", "check-na": "na-check",
                     "check-sna": "sna-check", "polarize": "polarize",
                     "count-law": "count-law", "dominate": "domination",
                     "concentrate": "concentration", "sample": "sample"}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    scenario = _COMMAND_SCENARIO[args.command]
    kwargs: dict = {"scenario": scenario, "seed": args.seed, "reps": args.reps,
                    "out_dir": args.out, "fmt": args.format}
    if args.tol is not None:
        kwargs["tolerances"] = {"covariance": args.tol}
    if hasattr(args, "pmf"):
        kwargs["pmf"] = _parse_pmf_arg(args.pmf)
    if hasattr(args, "process"):
        kwargs["process"] = _load_json_arg(args.process, args.process_file,
                                           "process")
    if hasattr(args, "measure"):
        kwargs["measure"] = _load_json_arg(args.measure, args.measure_file,
                                           "measure")
    params: dict = {}
    if hasattr(args, "budget"):
        params["grid_budget"] = args.budget
        params["n_lines"] = args.lines
    if hasattr(args, "eps"):
        params.update({"cell": args.cell, "eps": args.eps, "t": args.t})
        if args.b is not None:
            params["b"] = [float(x) for x in args.b.split(",")]
        if args.m_start is not None:
            params["m_start"] = args.m_start
    if params:
        kwargs["params"] = params
    return ExperimentConfig(**kwargs)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "run":
            try:
                doc = json.loads(Path(args.config).read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(
                    f"invalid config JSON at line {exc.lineno} column "
                    f"{exc.colno}: {exc.msg}") from exc
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            config = parse_config(doc)
            if args.out is not None:
                config = ExperimentConfig(
                    **{**config.__dict__, "out_dir": args.out,
                       "fmt": args.format or config.fmt})
            elif args.format is not None:
                config = ExperimentConfig(**{**config.__dict__,
                                             "fmt": args.format})
        else:
            config = config_from_args(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
