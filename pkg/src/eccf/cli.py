"""Command-line driver: ``eccf <subcommand> [--config PATH] [overrides]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from datetime import timedelta
from pathlib import Path

from eccf.ccg import CoocGraph, build_graph, read_graph, write_graph, write_weight_distribution
from eccf.concepts import load_lexicon
from eccf.config import ExperimentConfig, load_config
from eccf.datamodel import Interner
from eccf.errors import DataError
from eccf.evaluation import METRICS, MetricReport, cross_validate
from eccf.ingest import (
    IngestStats,
    filter_relevant_sessions,
    load_ratings,
    rating_histogram,
    read_items,
    segment_sessions,
    sessions_summary,
)
from eccf.profiles import build_ep, build_uc, ep_contributions, positive_label, write_profile

_log = logging.getLogger("eccf")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _variants(text: str) -> list[list[int]]:
    return [_int_list(part) for part in text.split(";") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML/JSON experiment config")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--k", dest="k_values", type=_int_list, help="e.g. 10,20")
    common.add_argument("--neighbors", type=int)
    common.add_argument("--folds", type=int)
    common.add_argument("--positive", dest="positive_variants", type=_variants, help="e.g. 4,5 or '3,4,5;4,5;5'")
    common.add_argument("--gap-minutes", type=float)
    common.add_argument("--top-arcs", type=int)
    common.add_argument("--relevance", type=int)
    common.add_argument("--candidates", choices=("test", "all"))
    common.add_argument("--algorithms", type=lambda s: [a for a in s.split(",") if a])
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="eccf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("ingest", parents=[common], help="load and filter the inputs, print tallies")
    sub.add_parser("build-ccg", parents=[common], help="build the category co-occurrence graph")
    sub.add_parser("build-profiles", parents=[common], help="write UC and EP matrices")
    sub.add_parser("run", parents=[common], help="cross-validate all algorithms")
    p = sub.add_parser("inspect", parents=[common], help="show one user's UC/EP profile")
    p.add_argument("user_id")
    p = sub.add_parser("report", parents=[common], help="summarize a JSON report")
    p.add_argument("report", type=Path)
    p.add_argument("--csv", type=Path, help="also write the long-format CSV here")
    return parser


OVERRIDES = (
    "output_dir", "seed", "k_values", "neighbors", "folds", "positive_variants",
    "gap_minutes", "top_arcs", "relevance", "candidates", "algorithms",
)  # fmt: skip


def resolve_config(args) -> ExperimentConfig:
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
        return config.override(**{k: getattr(args, k, None) for k in OVERRIDES})
    except (ValueError, TypeError, OSError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc


def _require(config: ExperimentConfig, *keys: str):
    missing = [k for k in keys if getattr(config, k) is None]
    if missing:
        raise UsageError(f"missing input path(s): {', '.join(missing)}")
    for k in keys:
        if not Path(getattr(config, k)).exists():
            raise DataError(f"{k} file not found: {getattr(config, k)}")


def _load_corpus(config: ExperimentConfig, stats: IngestStats | None = None):
    _require(config, "ratings", "items")
    return load_ratings(config.ratings, config.items, config.categories, config.min_user_ratings, stats)


def _universe(config: ExperimentConfig) -> Interner | None:
    """Category universe from the items file (scoped by ``categories``), if configured."""
    if config.items is None:
        return None
    names = set(config.categories) if config.categories is not None else set()
    if config.categories is None:
        for cats in read_items(config.items).values():
            names.update(cats)
    return Interner(sorted(names), kind="category").freeze()


def _graph_from_log(config: ExperimentConfig, categories: Interner | None, stats: IngestStats) -> CoocGraph:
    _require(config, "log", "lexicon")
    lex = load_lexicon(config.lexicon, categories)
    sessions = segment_sessions(config.log, timedelta(minutes=config.gap_minutes), stats)
    return build_graph(filter_relevant_sessions(sessions, lex), lex)


def _load_graph(config: ExperimentConfig, categories: Interner) -> CoocGraph:
    if config.graph is not None and Path(config.graph).exists():
        return read_graph(config.graph, categories)
    if config.log is not None and config.lexicon is not None:
        return _graph_from_log(config, categories, IngestStats())
    if config.graph is not None:
        raise DataError(f"graph file not found: {config.graph}")
    raise UsageError("need either a graph file or a log and a lexicon")


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


class _Outputs:
    """Write files atomically; on failure, nothing partial is left behind."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.pending: list[tuple[Path, Path]] = []

    def path(self, name: str) -> Path:
        fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.directory)
        os.close(fd)
        self.pending.append((Path(tmp), self.directory / name))
        return Path(tmp)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for tmp, final in self.pending:
                os.replace(tmp, final)
        else:
            for tmp, _ in self.pending:
                tmp.unlink(missing_ok=True)
        return False


def cmd_ingest(config: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    stats = IngestStats()
    summary: dict = {}
    if config.ratings is not None or config.items is not None:
        R, cat = _load_corpus(config, stats)
        summary["ratings"] = {
            "users": R.shape[0],
            "items": R.shape[1],
            "ratings": R.nnz,
            "categories": len(cat.categories),
            "histogram": rating_histogram(R),
        }
    if config.log is not None:
        _require(config, "log")
        sessions = segment_sessions(config.log, timedelta(minutes=config.gap_minutes), stats)
        if config.lexicon is not None:
            lex = load_lexicon(config.lexicon, _universe(config))
            sessions = filter_relevant_sessions(sessions, lex)
        summary["sessions"] = sessions_summary(sessions)
    if not summary:
        raise UsageError("ingest needs ratings+items and/or a log")
    summary["tallies"] = stats.to_dict()
    text = json.dumps(summary, indent=2, sort_keys=True)
    with _Outputs(_out_dir(config)) as outputs:
        outputs.path("ingest_summary.json").write_text(text + "\n", encoding="utf-8")
    print(text, file=out)
    return EXIT_OK


def cmd_build_ccg(config: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    stats = IngestStats()
    g = _graph_from_log(config, _universe(config), stats)
    if len(g) == 0:
        _log.warning("co-occurrence graph is empty")
    with _Outputs(_out_dir(config)) as outputs:
        write_graph(g, outputs.path("ccg.csv"))
        write_weight_distribution(g, outputs.path("ccg_weights.csv"))
    print(
        f"nodes={len(g.nodes)} edges={len(g)} max_weight={g.max_weight()!r} "
        f"sessions={stats['sessions']} queries={stats['session_queries']}",
        file=out,
    )
    return EXIT_OK


def cmd_build_profiles(config: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    R, cat = _load_corpus(config)
    g = _load_graph(config, cat.categories)
    UC = build_uc(R, cat)
    with _Outputs(_out_dir(config)) as outputs:
        write_profile(UC, R.users, cat.categories, outputs.path("profile_UC.csv"))
        for pos in config.positive_variants:
            EP = build_ep(UC, R, cat, g, pos, config.top_arcs)
            label = ",".join(map(str, sorted(set(pos))))
            write_profile(EP, R.users, cat.categories, outputs.path(f"profile_EP_{label}.csv"))
    print(f"users={R.shape[0]} categories={len(cat.categories)} variants={len(config.positive_variants)}", file=out)
    return EXIT_OK


def cmd_run(config: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    R, cat = _load_corpus(config)
    g = _load_graph(config, cat.categories)
    report = cross_validate(R, cat, g, config.protocol())
    # where the report lands is not part of the experiment
    report.header["config"] = {k: v for k, v in config.to_mapping().items() if k != "output_dir"}
    with _Outputs(_out_dir(config)) as outputs:
        outputs.path("report.json").write_text(report.to_json(), encoding="utf-8")
        outputs.path("report.csv").write_text(report.to_csv(), encoding="utf-8")
    print(format_report(report), file=out)
    return EXIT_OK


def cmd_inspect(config: ExperimentConfig, user_id: str, out=None) -> int:
    out = out or sys.stdout
    R, cat = _load_corpus(config)
    u = R.users.lookup(user_id)
    if u is None:
        raise DataError(f"unknown user {user_id!r}")
    g = _load_graph(config, cat.categories)
    name = cat.categories.name
    UC = build_uc(R, cat)

    def fmt(row):
        return ", ".join(f"{name(c)}={w}" for c, w in sorted(row.items(), key=lambda x: name(x[0]))) or "(empty)"

    print(f"user {user_id}: {int(R.counts[u])} ratings, mean {R.means[u]:.4f}", file=out)
    print(f"UC: {fmt(UC.row(u))}", file=out)
    for pos in config.positive_variants:
        EP = build_ep(UC, R, cat, g, pos, config.top_arcs)
        print(f"EP{positive_label(pos)}: {fmt(EP.row(u))}", file=out)
        for i, r, cs in ep_contributions(u, R, cat, g, pos, config.top_arcs):
            own = ", ".join(sorted(name(c) for c in cat.categories_of(i)))
            print(f"  + {R.items.name(i)} (rated {r}; {own}) -> {', '.join(sorted(name(c) for c in cs))}", file=out)
    return EXIT_OK


def format_report(report: MetricReport) -> str:
    lines = []
    algs = list(report.values)
    for k in next(iter(report.values.values())):
        lines.append(f"@{k}".ljust(12) + "".join(a.rjust(14) for a in algs))
        for m in next(iter(report.values[algs[0]].values())):
            cells = []
            for a in algs:
                v = report.mean(a, k, m)
                cells.append(("-" if v is None else f"{v:.4f}").rjust(14))
            lines.append(m.ljust(12) + "".join(cells))
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def cmd_report(path: Path, csv_path: Path | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        report = MetricReport.from_dict(data)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read report {path}: {exc}") from exc
    if csv_path is not None:
        Path(csv_path).write_text(report.to_csv(), encoding="utf-8")
    missing = [m for m in METRICS if m not in next(iter(next(iter(report.values.values())).values()))]
    if missing:
        _log.warning("report lacks metrics: %s", ", ".join(missing))
    print(format_report(report), end="", file=out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = resolve_config(args)
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "build-ccg":
            return cmd_build_ccg(config)
        if args.command == "build-profiles":
            return cmd_build_profiles(config)
        if args.command == "run":
            return cmd_run(config)
        if args.command == "inspect":
            return cmd_inspect(config, args.user_id)
        if args.command == "report":
            return cmd_report(args.report, args.csv)
    except UsageError as exc:
        print(f"eccf: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"eccf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        _log.exception("internal error")
        print(f"eccf: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    parser.error(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
