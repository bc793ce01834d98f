"""``webdrift`` command line.

    webdrift ingest access.log.gz -o work/            navigations.csv, requests.csv
    webdrift features work/ -o work/features.csv      + features.stats.json
    webdrift cluster work/features.csv --strategy all -o work/results
    webdrift report work/results -o work/report
    webdrift synth --builtin birth -o synth/          features.csv, truth.csv
    webdrift evaluate synth/truth.csv work/results/independent

Shared flags (``--seed --k --max-iter --n-init --granularity``) may also come
from ``--config FILE`` (YAML or JSON mapping of option names); flags given on
the command line win. Failures exit non-zero with a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import __version__
from .core import ClusteringConfig
from .evaluation import corrected_rand, f_measure
from .features import (GRANULARITIES, NO_OK_REQUESTS, SCOPES, FeatureVector, compute_features,
                       load_semantic_patterns, standardize)
from .ingest import (LOG_FORMATS, MIN_DURATION, MIN_RATIO, MIN_REQUESTS, SESSION_TIMEOUT, drop_outliers,
                     filter_navigations, read_log, sessionize)
from .report import compare_strategies, write_report
from .storage import (MANIFEST, dataset_from_table, dump_json, file_digest, load_results, read_manifest,
                      read_navigations, read_partitions, stats_path, write_feature_table,
                      write_labeled_partitions, write_navigations, write_strategy)
from .strategies import CARRY_MODES, STRATEGIES, run_strategy
from .synth import DriftScenario, birth_scenario, generate

log = logging.getLogger("webdrift")

DEFAULTS = {"seed": 0, "k": 10, "max_iter": 100, "n_init": 100, "granularity": "month"}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("UsageError", message, code=2)


def _fail(kind: str, message: str, code: int = 1):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(code)


def _shared() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared options")
    g.add_argument("--config", type=Path, help="YAML/JSON file of option defaults")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--k", type=int, help="number of clusters (default 10)")
    g.add_argument("--max-iter", type=int, help="maximum iterations per run (default 100)")
    g.add_argument("--n-init", type=int, help="random initialisations (default 100)")
    g.add_argument("--granularity", choices=GRANULARITIES, help="sub-period length (default month)")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    shared = _shared()
    parser = _Parser(prog="webdrift", description="Temporal clustering of web usage navigations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[shared], help="parse logs into filtered navigations")
    p.add_argument("logs", nargs="+", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True, help="output directory")
    p.add_argument("--log-format", choices=LOG_FORMATS, default="combined")
    p.add_argument("--timeout", type=float, default=SESSION_TIMEOUT, help="session gap in seconds")
    p.add_argument("--min-requests", type=int, default=MIN_REQUESTS)
    p.add_argument("--min-duration", type=float, default=MIN_DURATION)
    p.add_argument("--min-ratio", type=float, default=MIN_RATIO, help="seconds per request")
    p.add_argument("--drop-outliers", action="store_true")
    p.add_argument("--outlier-quantile", type=float, default=0.99)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", parents=[shared], help="compute the navigation feature table")
    p.add_argument("navigations", type=Path, help="directory written by 'ingest'")
    p.add_argument("-o", "--output", type=Path, required=True, help="feature table (CSV)")
    p.add_argument("--semantic", type=Path, help="file of URL glob patterns, one per line")
    p.add_argument("--scope", choices=SCOPES, default="global", help="standardization scope")
    p.add_argument("--raw", action="store_true", help="skip standardization")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("cluster", parents=[shared], help="run clustering strategies")
    p.add_argument("features", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True, help="results directory")
    p.add_argument("--strategy", action="append", choices=STRATEGIES + ("all",),
                   help="repeatable; default all")
    p.add_argument("--carry", choices=CARRY_MODES, default="recomputed",
                   help="prototypes carried by the previous strategy")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("synth", parents=[shared], help="generate a synthetic drift stream")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", type=Path, help="scenario file (YAML/JSON)")
    src.add_argument("--builtin", choices=("birth",))
    p.add_argument("--points", type=int, help="points per period (builtin only)")
    p.add_argument("-o", "--output", type=Path, required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("evaluate", parents=[shared], help="compare two partitions per sub-period")
    p.add_argument("a", type=Path, help="partition file or strategy directory (a priori role)")
    p.add_argument("b", type=Path, help="partition file or strategy directory")
    p.add_argument("-o", "--output", type=Path, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", parents=[shared], help="pairwise strategy comparison report")
    p.add_argument("results", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(func=cmd_report)
    return parser


def load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh) or {}
    if not isinstance(cfg, dict):
        raise CliError(f"{path}: config must be a mapping")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def apply_config(parser: argparse.ArgumentParser, cfg: dict):
    """Install config values as subcommand defaults so explicit flags still win."""
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    known = set()
    for sub in subparsers.choices.values():
        actions = {a.dest: a for a in sub._actions
                   if a.option_strings and a.dest not in ("help", "config", "version")}
        known |= set(actions)
        defaults = {}
        for key, value in cfg.items():
            action = actions.get(key)
            if action is None:
                continue
            if action.type is not None and value is not None:
                value = action.type(value)
            if action.choices is not None and value not in action.choices:
                raise CliError(f"config {key}={value!r}: expected one of {sorted(action.choices)}")
            defaults[key] = value
        sub.set_defaults(**defaults)
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(unknown)}")


def clustering_config(args) -> ClusteringConfig:
    return ClusteringConfig(k=args.k, max_iterations=args.max_iter,
                            n_initializations=args.n_init, seed=args.seed)


def cmd_ingest(args):
    requests, malformed, lines = [], 0, []
    for path in args.logs:
        parsed = read_log(path, args.log_format)
        requests.extend(parsed.requests)
        malformed += parsed.malformed
        lines.extend(f"{path.name}:{n}" for n in parsed.malformed_lines)
    navs = sessionize(requests, args.timeout)
    kept = filter_navigations(navs, args.min_requests, args.min_duration, args.min_ratio)
    after_filter = len(kept)
    if args.drop_outliers:
        kept = drop_outliers(kept, args.outlier_quantile)
    args.output.mkdir(parents=True, exist_ok=True)
    write_navigations(kept, args.output / "navigations.csv", args.output / "requests.csv")
    summary = {
        "log_format": args.log_format,
        "requests": len(requests),
        "malformed_lines": malformed,
        "malformed_examples": lines[:20],
        "navigations": len(navs),
        "navigations_kept": after_filter,
        "navigations_after_outliers": len(kept),
        "rules": {"timeout": args.timeout, "min_requests": args.min_requests,
                  "min_duration": args.min_duration, "min_ratio": args.min_ratio,
                  "drop_outliers": args.drop_outliers, "outlier_quantile": args.outlier_quantile},
    }
    dump_json(summary, args.output / "ingest.json")
    log.info("%d requests (%d malformed lines) -> %d navigations, %d kept",
             len(requests), malformed, len(navs), len(kept))


def cmd_features(args):
    navs = read_navigations(args.navigations / "navigations.csv", args.navigations / "requests.csv")
    patterns = load_semantic_patterns(args.semantic)
    vectors = [compute_features(nav, patterns, args.granularity) for nav in navs]
    vectors.sort(key=lambda v: (v.sub_period, v.nav_id))
    sidecar = {
        "source": "features",
        "granularity": args.granularity,
        "standardized": not args.raw,
        "n_navigations": len(vectors),
        "semantic_patterns": list(patterns),
        "flags": {NO_OK_REQUESTS: sum(NO_OK_REQUESTS in v.flags for v in vectors)},
    }
    if not args.raw:
        vectors, stats = standardize(vectors, args.scope)
        sidecar["standardization"] = stats.to_dict()
    args.output.parent.mkdir(parents=True, exist_ok=True)
    write_feature_table(vectors, args.output)
    dump_json(sidecar, stats_path(args.output))
    log.info("%d feature vectors written to %s", len(vectors), args.output)


def _table_granularity(args) -> str:
    """Granularity recorded next to the feature table, checked against an explicit request."""
    sidecar = stats_path(args.features)
    recorded = None
    if sidecar.exists():
        recorded = json.loads(sidecar.read_text(encoding="utf-8")).get("granularity")
    if recorded and args.granularity_given and recorded != args.granularity:
        raise CliError(f"feature table was labelled by {recorded}, not {args.granularity}")
    return recorded or args.granularity


def cmd_cluster(args):
    cfg = clustering_config(args)
    names = args.strategy or ["all"]
    names = list(STRATEGIES) if "all" in names else sorted(set(names), key=STRATEGIES.index)
    data, variables = dataset_from_table(args.features)
    features_entry = {
        "file": args.features.name,
        "sha256": file_digest(args.features),
        "n_items": len(data),
        "sub_periods": data.labels,
        "variables": list(variables),
    }
    header = {"config": cfg.to_dict(), "granularity": _table_granularity(args), "features": features_entry}
    args.output.mkdir(parents=True, exist_ok=True)
    manifest_path = args.output / MANIFEST
    manifest = {**header, "strategies": {}}
    if manifest_path.exists():
        old = read_manifest(args.output)
        if {k: old.get(k) for k in header} != header:
            raise CliError(f"{args.output} holds results for a different config or feature table")
        manifest["strategies"] = old.get("strategies", {})
    for name in names:
        result = run_strategy(name, data, cfg, carry=args.carry)
        manifest["strategies"][name] = write_strategy(args.output, result, variables)
        log.info("strategy %s: %d sub-periods", name, len(result.periods))
    dump_json(manifest, manifest_path)


def cmd_synth(args):
    if args.builtin:
        scenario = birth_scenario(seed=args.seed, points_per_period=args.points or 1000)
    else:
        scenario = DriftScenario.load(args.scenario)
    data, truth = generate(scenario)
    vectors = [FeatureVector(int(i), label, tuple(map(float, row)))
               for label in data.labels for i, row in zip(data.ids[label], data.matrices[label])]
    args.output.mkdir(parents=True, exist_ok=True)
    write_feature_table(vectors, args.output / "features.csv")
    write_labeled_partitions(args.output / "truth.csv", truth)
    dump_json({"source": "synth", "granularity": "month", "standardized": False,
               "n_navigations": len(vectors), "seed": scenario.seed,
               "components": [c.name for c in scenario.all_components]},
              stats_path(args.output / "features.csv"))
    log.info("%d points over %d periods written to %s", len(vectors), len(data.labels), args.output)


def cmd_evaluate(args):
    a, b = read_partitions(args.a), read_partitions(args.b)
    common = sorted(set(a) & set(b))
    if not common:
        raise CliError("the two inputs share no sub-period")
    out = {"a": str(args.a), "b": str(args.b), "sub_periods": {}}
    for p in common:
        f_ab, matches = f_measure(a[p], b[p])
        f_ba, _ = f_measure(b[p], a[p])
        out["sub_periods"][p] = {
            "corrected_rand": corrected_rand(a[p], b[p]),
            "f_measure_a_b": f_ab,
            "f_measure_b_a": f_ba,
            "per_cluster_a_b": [{"cluster": m.cluster, "size": m.size, "f": m.f, "match": m.match}
                                for m in matches],
        }
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_report(args):
    bundle = compare_strategies(load_results(args.results))
    write_report(bundle, args.output)
    log.info("report for %s written to %s", ", ".join(bundle.strategies), args.output)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    try:
        apply_config(parser, load_config(pre.parse_known_args(argv)[0].config))
    except (CliError, OSError, yaml.YAMLError) as exc:
        _fail(type(exc).__name__, str(exc))
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args.granularity_given = args.granularity is not None
    for key, value in DEFAULTS.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    try:
        args.func(args)
    except (CliError, ValueError, OSError, KeyError) as exc:
        _fail(type(exc).__name__, str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
