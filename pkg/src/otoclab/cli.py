"""Reproducible experiment runner.

``otoc-lab run config.json`` dispatches one experiment described by a JSON
config to the computational modules and writes a machine-readable report.
Re-running an identical config (same seed) reproduces the results payload
bit for bit; only the timestamp and wall time differ.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import learning_tree as lt
from . import otoc
from . import strategies as st
from . import weingarten as wg
from .linalg import make_rng, zero_state

EXPERIMENTS = (
    "weingarten-verify",
    "otoc-expectation",
    "distinguish",
    "learning-tree",
    "hardness-sweep",
)

MAX_QUBITS = 10


class ConfigError(ValueError):
    """Invalid experiment config; ``problems`` lists every violated field."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(problems))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    n: int | None = None
    n_values: tuple[int, ...] | None = None
    k: int | None = None
    d: int | None = None
    samples: int | None = None
    trials: int | None = None
    depth: int | None = None
    strategy: str | None = None
    output_path: str | None = None


def _rational(value: Fraction) -> dict[str, str]:
    return {"num": str(value.numerator), "den": str(value.denominator)}


def _require_even_n(raw: dict, problems: list[str]) -> None:
    n = raw.get("n")
    if not isinstance(n, int) or isinstance(n, bool):
        problems.append("n: required even integer")
    elif n < 2 or n % 2 != 0:
        problems.append(f"n: must be a positive even integer, got {n}")
    elif n > MAX_QUBITS:
        problems.append(f"n: at most {MAX_QUBITS} qubits supported, got {n}")


def _require_positive(raw: dict, field: str, minimum: int, problems: list[str]) -> None:
    value = raw.get(field)
    if not isinstance(value, int) or isinstance(value, bool):
        problems.append(f"{field}: required integer")
    elif value < minimum:
        problems.append(f"{field}: must be at least {minimum}, got {value}")


def parse_config(source: str) -> ExperimentConfig:
    """Parse and validate a JSON config, reporting every violation at once."""
    try:
        raw = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])

    problems: list[str] = []
    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        problems.append(
            f"experiment: must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}"
        )

    seed = raw.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool):
        problems.append("seed: required (64-bit unsigned integer)")
    elif not 0 <= seed < 2**64:
        problems.append(f"seed: must fit in 64 unsigned bits, got {seed}")

    if experiment == "weingarten-verify":
        _require_positive(raw, "k", 1, problems)
        _require_positive(raw, "d", 1, problems)
        k, d = raw.get("k"), raw.get("d")
        if isinstance(k, int) and k > wg.MAX_ORDER:
            problems.append(f"k: at most {wg.MAX_ORDER}, got {k}")
        if isinstance(k, int) and isinstance(d, int) and 0 < k <= wg.MAX_ORDER and d < k:
            problems.append(f"d: must be at least k (Gram matrix is singular for d < k), got d={d} < k={k}")
    elif experiment == "otoc-expectation":
        _require_even_n(raw, problems)
        _require_positive(raw, "samples", 100, problems)
    elif experiment == "distinguish":
        _require_even_n(raw, problems)
        _require_positive(raw, "trials", 100, problems)
    elif experiment == "learning-tree":
        _require_even_n(raw, problems)
        _require_positive(raw, "depth", 1, problems)
        _validate_strategy_name(raw, problems)
    elif experiment == "hardness-sweep":
        n_values = raw.get("n_values")
        if not isinstance(n_values, list) or not n_values:
            problems.append("n_values: required nonempty list of even integers")
        else:
            for n in n_values:
                if not isinstance(n, int) or n < 2 or n % 2 != 0 or n > MAX_QUBITS:
                    problems.append(f"n_values: entries must be even integers in 2..{MAX_QUBITS}, got {n}")
        _require_positive(raw, "depth", 1, problems)
        _require_positive(raw, "samples", 10, problems)
        _validate_strategy_name(raw, problems)

    output_path = raw.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        problems.append("output_path: must be a string path")

    if problems:
        raise ConfigError(problems)

    return ExperimentConfig(
        experiment=experiment,
        seed=seed,
        n=raw.get("n"),
        n_values=tuple(raw["n_values"]) if experiment == "hardness-sweep" else None,
        k=raw.get("k"),
        d=raw.get("d"),
        samples=raw.get("samples"),
        trials=raw.get("trials"),
        depth=raw.get("depth"),
        strategy=raw.get("strategy"),
        output_path=output_path,
    )


def _validate_strategy_name(raw: dict, problems: list[str]) -> None:
    name = raw.get("strategy")
    if not isinstance(name, str) or name not in st.available_strategies():
        problems.append(
            f"strategy: must be one of {', '.join(st.available_strategies())}, got {name!r}"
        )
    elif name == "oto-theorem1" and raw.get("depth") not in (None, 2):
        problems.append("depth: oto-theorem1 is a fixed two-round protocol (depth 2)")


def _run_weingarten_verify(config: ExperimentConfig) -> dict:
    table = wg.weingarten_table(config.k, config.d)
    lemma6 = wg.lemma6_sum(config.k, config.d)
    expected = Fraction(math.factorial(config.d - config.k), math.factorial(config.d))
    return {
        "k": config.k,
        "d": config.d,
        "table": table.to_json(),
        "lemma6": {
            "value": _rational(lemma6),
            "expected": _rational(expected),
            "exact_match": lemma6 == expected,
        },
        "orthogonality_exact": wg.orthogonality_holds(config.k, config.d),
    }


def _run_otoc_expectation(config: ExperimentConfig) -> dict:
    exact = otoc.expected_otoc_exact(config.n)
    rederived = None
    if config.n <= 6:
        rederived = otoc.expected_otoc_weingarten(config.n)
    estimate, stderr = otoc.monte_carlo_expected_otoc(
        config.n, config.samples, make_rng(config.seed)
    )
    return {
        "n": config.n,
        "exact": _rational(exact),
        "weingarten_rederivation": None if rederived is None else _rational(rederived),
        "rederivation_exact_match": None if rederived is None else rederived == exact,
        "monte_carlo": {
            "estimate": estimate,
            "stderr": stderr,
            "samples": config.samples,
        },
        "within_four_sigma": abs(estimate - float(exact)) <= 4.0 * stderr,
    }


def _run_distinguish(config: ExperimentConfig) -> dict:
    rate, ci = otoc.success_probability(config.n, config.trials, make_rng(config.seed))
    return {
        "n": config.n,
        "trials": config.trials,
        "success_rate": rate,
        "ci": ci,
        "seed": config.seed,
    }


def _run_learning_tree(config: ExperimentConfig) -> dict:
    strategy = st.build_strategy(
        config.strategy, config.n, config.depth, seed=config.seed
    )
    rng = make_rng(config.seed)
    u = otoc.sample_ensemble_unitary(otoc.EnsembleKind.GLOBAL_HAAR, config.n, rng)
    leaves = lt.run_tree_exact(strategy, u)
    reference = lt.depolarizing_reference(strategy)
    return {
        "strategy": strategy.name,
        "n": config.n,
        "depth": strategy.depth,
        "leaf_distribution": lt.leaf_distribution_to_json(leaves),
        "depolarizing_reference": lt.leaf_distribution_to_json(reference),
        "mass_defect": lt.leaf_mass_defect(leaves),
        "child_sum_defect": lt.child_sum_check(strategy, zero_state(strategy.dim)),
    }


def _run_hardness_sweep(config: ExperimentConfig) -> dict:
    rows = []
    for n in config.n_values:
        strategy = st.build_strategy(config.strategy, n, config.depth, seed=config.seed)
        report = lt.hardness_experiment(
            strategy,
            n,
            samples=config.samples,
            rng=make_rng(config.seed, stream=n),
        )
        rows.append(
            {
                "n": n,
                "tv": report.tv_estimate,
                "ci_low": report.ci_low,
                "ci_high": report.ci_high,
                "lecam_bound": report.lecam_bound,
                "method": report.method,
            }
        )
    return {
        "strategy": config.strategy,
        "depth": config.depth if config.strategy != "oto-theorem1" else 2,
        "samples": config.samples,
        "rows": rows,
    }


_RUNNERS = {
    "weingarten-verify": _run_weingarten_verify,
    "otoc-expectation": _run_otoc_expectation,
    "distinguish": _run_distinguish,
    "learning-tree": _run_learning_tree,
    "hardness-sweep": _run_hardness_sweep,
}


def execute(config: ExperimentConfig) -> dict:
    """Run one experiment and return the full report as a JSON-safe dict."""
    start = time.monotonic()
    results = _RUNNERS[config.experiment](config)
    wall_ms = (time.monotonic() - start) * 1000.0
    return {
        "config": {k: v for k, v in asdict(config).items() if v is not None},
        "results": results,
        "wall_time_ms": wall_ms,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def sweep_csv(report: dict) -> str:
    """CSV rendering of a hardness-sweep report's rows."""
    lines = ["n,tv,ci_low,ci_high"]
    for row in report["results"]["rows"]:
        lines.append(
            f"{row['n']},{row['tv']!r},{row['ci_low']!r},{row['ci_high']!r}"
        )
    return "\n".join(lines) + "\n"


_RATIONAL_SCHEMA = {
    "type": "object",
    "properties": {"num": {"type": "string"}, "den": {"type": "string"}},
    "required": ["num", "den"],
    "additionalProperties": False,
}

_DISTRIBUTION_SCHEMA = {
    "type": "object",
    "additionalProperties": {"type": "number"},
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "otoc-lab run report",
    "type": "object",
    "required": ["config", "results", "wall_time_ms", "version", "timestamp"],
    "additionalProperties": False,
    "properties": {
        "config": {"type": "object"},
        "wall_time_ms": {"type": "number"},
        "version": {"type": "string"},
        "timestamp": {"type": "string"},
        "results": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["k", "d", "table", "lemma6", "orthogonality_exact"],
                    "properties": {
                        "k": {"type": "integer"},
                        "d": {"type": "integer"},
                        "table": {
                            "type": "object",
                            "required": ["k", "d", "entries"],
                            "properties": {
                                "k": {"type": "integer"},
                                "d": {"type": "integer"},
                                "entries": {
                                    "type": "array",
                                    "items": {
                                        "type": "object",
                                        "required": ["cycle_type", "numerator", "denominator"],
                                        "properties": {
                                            "cycle_type": {
                                                "type": "array",
                                                "items": {"type": "integer"},
                                            },
                                            "numerator": {"type": "string"},
                                            "denominator": {"type": "string"},
                                        },
                                    },
                                },
                            },
                        },
                        "lemma6": {
                            "type": "object",
                            "required": ["value", "expected", "exact_match"],
                            "properties": {
                                "value": _RATIONAL_SCHEMA,
                                "expected": _RATIONAL_SCHEMA,
                                "exact_match": {"type": "boolean"},
                            },
                        },
                        "orthogonality_exact": {"type": "boolean"},
                    },
                },
                {
                    "type": "object",
                    "required": ["n", "exact", "monte_carlo", "within_four_sigma"],
                    "properties": {
                        "n": {"type": "integer"},
                        "exact": _RATIONAL_SCHEMA,
                        "weingarten_rederivation": {
                            "oneOf": [_RATIONAL_SCHEMA, {"type": "null"}]
                        },
                        "rederivation_exact_match": {"type": ["boolean", "null"]},
                        "monte_carlo": {
                            "type": "object",
                            "required": ["estimate", "stderr", "samples"],
                            "properties": {
                                "estimate": {"type": "number"},
                                "stderr": {"type": "number"},
                                "samples": {"type": "integer"},
                            },
                        },
                        "within_four_sigma": {"type": "boolean"},
                    },
                },
                {
                    "type": "object",
                    "required": ["n", "trials", "success_rate", "ci", "seed"],
                    "properties": {
                        "n": {"type": "integer"},
                        "trials": {"type": "integer"},
                        "success_rate": {"type": "number"},
                        "ci": {"type": "number"},
                        "seed": {"type": "integer"},
                    },
                },
                {
                    "type": "object",
                    "required": [
                        "strategy",
                        "n",
                        "depth",
                        "leaf_distribution",
                        "depolarizing_reference",
                        "mass_defect",
                        "child_sum_defect",
                    ],
                    "properties": {
                        "strategy": {"type": "string"},
                        "n": {"type": "integer"},
                        "depth": {"type": "integer"},
                        "leaf_distribution": _DISTRIBUTION_SCHEMA,
                        "depolarizing_reference": _DISTRIBUTION_SCHEMA,
                        "mass_defect": {"type": "number"},
                        "child_sum_defect": {"type": "number"},
                    },
                },
                {
                    "type": "object",
                    "required": ["strategy", "depth", "samples", "rows"],
                    "properties": {
                        "strategy": {"type": "string"},
                        "depth": {"type": "integer"},
                        "samples": {"type": "integer"},
                        "rows": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "required": ["n", "tv", "ci_low", "ci_high", "lecam_bound"],
                                "properties": {
                                    "n": {"type": "integer"},
                                    "tv": {"type": "number"},
                                    "ci_low": {"type": "number"},
                                    "ci_high": {"type": "number"},
                                    "lecam_bound": {"type": "number"},
                                    "method": {"type": "string"},
                                },
                            },
                        },
                    },
                },
            ]
        },
    },
}


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        raw = json.loads(text)
        if isinstance(raw, dict):
            if args.seed is not None:
                raw["seed"] = args.seed
            if args.samples is not None:
                raw["samples"] = args.samples
            if args.out is not None:
                raw["output_path"] = args.out
        config = parse_config(json.dumps(raw))
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        report = execute(config)
    except Exception as exc:  # propagate module errors as a clean exit status
        print(f"error: {exc}", file=sys.stderr)
        return 1

    payload = json.dumps(report, indent=2, sort_keys=True)
    if config.output_path:
        out = Path(config.output_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(payload + "\n", encoding="utf-8")
        if config.experiment == "hardness-sweep":
            out.with_suffix(".csv").write_text(sweep_csv(report), encoding="utf-8")
        print(f"report written to {out}")
    else:
        print(payload)
    return 0


def _cmd_list_strategies(_: argparse.Namespace) -> int:
    for name in st.available_strategies():
        print(f"{name}\t{st.describe_strategy(name)}")
    return 0


def _cmd_schema(_: argparse.Namespace) -> int:
    print(json.dumps(REPORT_SCHEMA, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otoc-lab",
        description="Run Weingarten, OTOC-distinguishing, and learning-tree experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("config", help="path to the JSON config file")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--samples", type=int, default=None, help="override the sample count")
    run.add_argument("--out", default=None, help="override the report output path")
    run.set_defaults(func=_cmd_run)

    listing = sub.add_parser("list-strategies", help="print the built-in strategy names")
    listing.set_defaults(func=_cmd_list_strategies)

    schema = sub.add_parser("schema", help="print the JSON schema of run reports")
    schema.set_defaults(func=_cmd_schema)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
