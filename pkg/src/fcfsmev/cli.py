"""Command-line surface: fixture generation, detection, analytics,
simulation and the applicability table.

Every command writes its outputs plus a manifest.json recording a hash of
the effective configuration and the digest of each output file, so a run
can be reproduced and verified byte for byte.  Partial outputs are
removed when a command fails.

Exit codes: 0 success, 1 usage, 2 source error, 3 data error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import os
import statistics
import sys
from decimal import Decimal
from types import SimpleNamespace
from typing import Optional

from . import __version__
from .analytics import (InsufficientSampleError, arb_month, cluster_by_funder,
                        cluster_lookup, octile_distribution,
                        position_profit_correlation, proposer_searcher_rankings,
                        top_searchers)
from .arbitrage import (ArbCycle, MissingPriceError, detect_block_arbs,
                        load_pool_registry, load_price_table)
from .bti import (DEFAULT_SIZE_THRESHOLD, dominant_pattern, event_if_bti,
                  classify_bti, link_runs)
from .chain import AssetId, load_asset_classes
from .fixtures import generate_fixture
from .ingest import (MalformedRecordError, RangeGapError, SourceSpec,
                     SourceUnreachableError, assemble_groups, load_blocks)
from .simulator import (ConfigError, load_sim_config,
                        ordering_applicability_check)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOURCE = 2
EXIT_DATA = 3

FUNDING_MIN_MICROALGO = 1_000_000

ARB_COLUMNS = [
    "round", "group", "searcher", "block_position", "block_len", "n_swaps",
    "profit_token_id", "profit_token", "profit_amount", "input_amount",
    "profit_rate_pct", "execution", "fee_paid", "timestamp", "proposer",
    "profit_usd",
]

_CENT = Decimal("0.01")
_RATE_Q = Decimal("0.000001")


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _OutputSet:
    """Tracks files a command writes so failures leave no partial output."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.paths: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        full = os.path.join(self.out_dir, name)
        if full not in self.paths:
            self.paths.append(full)
        return full

    def write_csv(self, name: str, header: list[str], rows) -> None:
        with open(self.path(name), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)

    def write_text(self, name: str, text: str) -> None:
        with open(self.path(name), "w") as fh:
            fh.write(text)

    def cleanup(self) -> None:
        for path in self.paths:
            with contextlib.suppress(FileNotFoundError):
                os.remove(path)

    def write_manifest(self, command: str, params: dict) -> None:
        canonical = json.dumps(params, sort_keys=True, separators=(",", ":"))
        manifest = {
            "command": command,
            "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
            "params": params,
            "tool_version": __version__,
            "outputs": {os.path.basename(p): _sha256(p)
                        for p in self.paths if os.path.exists(p)},
        }
        with open(self.path("manifest.json"), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1)
            fh.write("\n")


@contextlib.contextmanager
def _outputs(out_dir: str):
    out = _OutputSet(out_dir)
    try:
        yield out
    except BaseException:
        out.cleanup()
        raise


def _say(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message)


def _dec_or_blank(value: Optional[Decimal], quantum: Decimal) -> str:
    return "" if value is None else str(value.quantize(quantum))


# -- argument parsing ----------------------------------------------------

def _rounds_arg(text: str) -> tuple[int, int]:
    try:
        if ":" in text:
            start_s, end_s = text.split(":", 1)
            start, end = int(start_s), int(end_s)
        else:
            start = end = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"rounds must be START:END or a single round, got {text!r}")
    if start < 1 or end < start:
        raise argparse.ArgumentTypeError(f"bad round range {text!r}")
    return start, end


def _threshold_arg(text: str):
    if text == "median":
        return "median"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"threshold must be an integer or 'median', got {text!r}")


def _bti_runs_arg(text: str) -> tuple[int, ...]:
    try:
        lengths = tuple(int(part) for part in text.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad run-length list {text!r}")
    if not lengths or any(n < 1 for n in lengths):
        raise argparse.ArgumentTypeError("run lengths must be positive")
    return lengths


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", "--out", default=".",
                        help="directory for output files")
    common.add_argument("--quiet", action="store_true",
                        help="suppress progress output")

    parser = argparse.ArgumentParser(
        prog="fcfsmev",
        description="MEV detection and FCFS ordering analysis toolkit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("genfixture", parents=[common],
                       help="generate a fixture chain with ground truth")
    p.add_argument("--n-blocks", type=int, default=1000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--arb-rate", type=float, default=0.06)
    p.add_argument("--bti-runs", type=_bti_runs_arg, default=None,
                   help="comma-separated run lengths, e.g. 364,45,25")
    p.set_defaults(func=cmd_genfixture)

    p = sub.add_parser("detect", parents=[common],
                       help="run arbitrage and batch-issuance detection")
    p.add_argument("--source", required=True,
                   help="fixture JSONL path or indexer base URL")
    p.add_argument("--mode", choices=["fixture-file", "http-indexer"],
                   default=None, help="inferred from --source when omitted")
    p.add_argument("--rounds", type=_rounds_arg, required=True,
                   help="round range START:END")
    p.add_argument("--pools", required=True, help="pool registry CSV")
    p.add_argument("--assets", required=True, help="asset class CSV")
    p.add_argument("--prices", default=None, help="daily price CSV")
    p.add_argument("--labels", default=None, help="sender purpose CSV")
    p.add_argument("--threshold", type=_threshold_arg,
                   default=DEFAULT_SIZE_THRESHOLD,
                   help="batch-issuance size threshold, or 'median'")
    p.add_argument("--page-size", type=int, default=100)
    p.add_argument("--timeout-ms", type=int, default=10_000)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("analyze", parents=[common],
                       help="aggregate detection output into reports")
    p.add_argument("--in-dir", required=True,
                   help="directory holding detect outputs")
    p.add_argument("--min-arbs", type=int, default=50)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--plot-data", action="store_true",
                   help="also emit gnuplot-ready TSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common],
                       help="run the ordering simulator from a config file")
    p.add_argument("--config", required=True, help="TOML or JSON SimConfig")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("applicability", parents=[common],
                       help="reproduce the ordering-technique table")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_applicability)
    return parser


# -- commands ------------------------------------------------------------

def cmd_genfixture(args) -> int:
    with _outputs(args.out_dir) as out:
        truth = generate_fixture(
            args.out_dir, n_blocks=args.n_blocks, seed=args.seed,
            arb_rate=args.arb_rate, bti_run_lengths=args.bti_runs)
        for name in ("fixture.jsonl", "ground_truth.json", "pools.csv",
                     "prices.csv", "assets.csv", "label_map.csv"):
            out.path(name)
        out.write_manifest("genfixture", {
            "n_blocks": args.n_blocks, "seed": args.seed,
            "arb_rate": args.arb_rate,
            "bti_runs": list(args.bti_runs) if args.bti_runs else None})
    _say(args, f"{args.n_blocks} blocks, {len(truth['arbs'])} arbitrages, "
               f"{len(truth['btis'])} batch events -> {args.out_dir}")
    return EXIT_OK


def _arb_csv_row(arb: ArbCycle) -> list:
    token = arb.profit_token
    return [
        arb.block_round, arb.txid_or_group, arb.searcher, arb.block_position,
        arb.block_len, len(arb.swaps), token.id, token.symbol or token.id,
        arb.profit_amount, arb.input_amount,
        str(arb.profit_rate_pct.quantize(_RATE_Q)), arb.execution,
        arb.fee_paid, arb.timestamp, arb.proposer,
        _dec_or_blank(arb.profit_usd, _CENT),
    ]


def cmd_detect(args) -> int:
    mode = args.mode or (
        "http-indexer" if args.source.startswith(("http://", "https://"))
        else "fixture-file")
    assets = load_asset_classes(args.assets)
    pools = load_pool_registry(args.pools)
    prices = load_price_table(args.prices) if args.prices else None
    label_map = _load_label_map(args.labels) if args.labels else {}
    spec = SourceSpec(mode=mode, location=args.source,
                      round_range=args.rounds, page_size=args.page_size,
                      timeout_ms=args.timeout_ms)
    arbs: list[ArbCycle] = []
    candidates = []             # (round, pattern, count, block_len)
    sizes: list[int] = []
    arbs_by_round: dict[int, list] = {}
    earliest_inbound: dict[str, tuple[str, int]] = {}
    first_arb_round: dict[str, int] = {}
    for block in load_blocks(spec, assets):
        block = assemble_groups(block)
        sizes.append(len(block.txns))
        found = detect_block_arbs(block, pools, prices)
        for arb in found:
            arbs.append(arb)
            first_arb_round.setdefault(arb.searcher, arb.block_round)
            arbs_by_round.setdefault(block.round, []).append(
                SimpleNamespace(searcher=arb.searcher, group_size=arb.group_size))
        for txn in block.txns:
            if (txn.kind == "pay" and txn.receiver
                    and txn.amount >= FUNDING_MIN_MICROALGO
                    and txn.receiver not in earliest_inbound):
                earliest_inbound[txn.receiver] = (txn.sender, block.round)
        summary = dominant_pattern(block)
        if summary is not None:
            candidates.append((block.round, summary[0], summary[1],
                               len(block.txns)))
    if args.threshold == "median":
        threshold = statistics.median(sizes) if sizes else DEFAULT_SIZE_THRESHOLD
    else:
        threshold = args.threshold
    events = []
    for round_, pattern, count, block_len in candidates:
        event = event_if_bti(round_, pattern, count, block_len, threshold)
        if event is not None:
            events.append(classify_bti(event, label_map,
                                       arbs_by_round.get(round_, [])))
    runs, histogram = link_runs(events)
    edges = sorted(
        (funder, fundee, round_)
        for fundee, (funder, round_) in earliest_inbound.items()
        if fundee in first_arb_round and round_ < first_arb_round[fundee])
    with _outputs(args.out_dir) as out:
        out.write_csv("arbs.csv", ARB_COLUMNS, [_arb_csv_row(a) for a in arbs])
        out.write_csv(
            "bti_events.csv",
            ["round", "sender", "pattern", "count", "block_len", "share", "label"],
            [[e.round, e.sender, e.pattern.canonical(), e.count, e.block_len,
              str(e.share.quantize(Decimal("0.0001"))), e.label or ""]
             for e in events])
        out.write_csv(
            "bti_runs.csv",
            ["sender", "pattern", "start_round", "end_round", "length"],
            [[r.sender, r.pattern.canonical(), r.start_round, r.end_round,
              r.length] for r in runs])
        out.write_csv("bti_run_histogram.csv", ["bucket", "runs"],
                      [[bucket, histogram[bucket]] for bucket in histogram])
        out.write_csv("funding_edges.csv", ["funder", "fundee", "round"],
                      edges)
        out.write_manifest("detect", {
            "mode": mode, "source": args.source, "rounds": list(args.rounds),
            "threshold": args.threshold, "page_size": args.page_size,
            "timeout_ms": args.timeout_ms,
            "inputs": {
                "pools": _sha256(args.pools),
                "assets": _sha256(args.assets),
                "prices": _sha256(args.prices) if args.prices else None,
                "labels": _sha256(args.labels) if args.labels else None,
            }})
    _say(args, f"{len(arbs)} arbitrages, {len(events)} batch events, "
               f"{len(runs)} runs -> {args.out_dir}")
    return EXIT_OK


def _load_label_map(path: str) -> dict[str, str]:
    with open(path, newline="") as fh:
        return {row["sender"]: row["purpose"] for row in csv.DictReader(fh)}


def _read_arbs_csv(path: str) -> list[ArbCycle]:
    arbs = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            token_id = int(row["profit_token_id"])
            symbol = row["profit_token"]
            token = AssetId(
                token_id, None if symbol == str(token_id) else symbol,
                "native" if token_id == 0 else "other")
            arbs.append(ArbCycle(
                txid_or_group=row["group"],
                searcher=row["searcher"],
                block_round=int(row["round"]),
                block_position=int(row["block_position"]),
                block_len=int(row["block_len"]),
                swaps=(),
                profit_token=token,
                profit_amount=int(row["profit_amount"]),
                input_amount=int(row["input_amount"]),
                profit_rate_pct=Decimal(row["profit_rate_pct"]),
                execution=row["execution"],
                fee_paid=int(row["fee_paid"]),
                timestamp=int(row["timestamp"]),
                proposer=row["proposer"],
                profit_usd=Decimal(row["profit_usd"]) if row["profit_usd"] else None))
    return arbs


def _read_funding_csv(path: str) -> list[tuple[str, str, int]]:
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        return [(row["funder"], row["fundee"], int(row["round"]))
                for row in csv.DictReader(fh)]


def cmd_analyze(args) -> int:
    arbs_path = os.path.join(args.in_dir, "arbs.csv")
    if not os.path.exists(arbs_path):
        raise FileNotFoundError(f"missing detection output {arbs_path}")
    arbs = _read_arbs_csv(arbs_path)
    edges = _read_funding_csv(os.path.join(args.in_dir, "funding_edges.csv"))
    clusters = cluster_by_funder({a.searcher for a in arbs}, edges)
    cmap = cluster_lookup(clusters)
    leaderboard = top_searchers(arbs, k=args.top_k, cluster_of=cmap)
    octiles = octile_distribution(arbs)
    by_cluster: dict[str, list[ArbCycle]] = {}
    for arb in arbs:
        by_cluster.setdefault(cmap.get(arb.searcher, arb.searcher), []).append(arb)
    corr_rows = []
    for cluster in sorted(by_cluster):
        rows = by_cluster[cluster]
        try:
            result = position_profit_correlation(rows)
            corr_rows.append([cluster, str(result.rho_2dp), result.n,
                              result.flag])
        except InsufficientSampleError:
            usable = sum(1 for a in rows if a.profit_usd is not None)
            corr_rows.append([cluster, "", usable, "insufficient-sample"])
    months = sorted({arb_month(a) for a in arbs})
    proxy_rows = []
    for month in months:
        report = proposer_searcher_rankings(
            arbs, month, cluster_of=cmap, min_arbs=args.min_arbs)
        for dev in report.deviations:
            proxy_rows.append([dev.month, dev.proposer, dev.rank, dev.cluster,
                               dev.deviation_type])
    with _outputs(args.out_dir) as out:
        out.write_csv(
            "leaderboard.csv",
            ["cluster", "n_arbs", "profit_usd", "token_totals",
             "median_profit_rate_pct"],
            [[row.cluster, row.n_arbs, _dec_or_blank(row.profit_usd, _CENT),
              ";".join(f"{label}:{amount}" for label, amount in row.token_totals),
              str(row.median_profit_rate_pct.quantize(_CENT))]
             for row in leaderboard])
        out.write_csv(
            "octiles.csv", ["octile", "count", "profit_usd"],
            [[i + 1, octiles.counts[i],
              str(octiles.profits_usd[i].quantize(_CENT))] for i in range(8)])
        out.write_csv("correlations.csv", ["cluster", "rho", "n", "flag"],
                      corr_rows)
        out.write_csv(
            "latency_proxy.csv",
            ["month", "proposer", "rank", "cluster", "deviation_type"],
            proxy_rows)
        if args.plot_data:
            lines = ["octile\tcount\tprofit_usd"]
            for i in range(8):
                lines.append(f"{i + 1}\t{octiles.counts[i]}\t"
                             f"{octiles.profits_usd[i].quantize(_CENT)}")
            out.write_text("octiles.tsv", "\n".join(lines) + "\n")
        out.write_manifest("analyze", {
            "in_dir": os.path.abspath(args.in_dir),
            "arbs_sha256": _sha256(arbs_path),
            "min_arbs": args.min_arbs, "top_k": args.top_k,
            "plot_data": bool(args.plot_data)})
    _say(args, f"{len(leaderboard)} leaderboard rows, "
               f"{len(proxy_rows)} ranking deviations -> {args.out_dir}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_sim_config(args.config, seed=args.seed)
    from .simulator import simulate
    report = simulate(config)
    with _outputs(args.out_dir) as out:
        out.write_text("sim_report.json", report.to_json() + "\n")
        lines = ["octile\tbackruns"]
        for i, count in enumerate(report.backrun_octile_histogram, start=1):
            lines.append(f"{i}\t{count}")
        out.write_text("backrun_octiles.tsv", "\n".join(lines) + "\n")
        out.write_manifest("simulate", {
            "config_sha256": _sha256(args.config),
            "seed": config.seed})
    _say(args, f"{len(report.ordering_modes)} blocks simulated, "
               f"fee flip at {report.fee_flip_round} -> {args.out_dir}")
    return EXIT_OK


def cmd_applicability(args) -> int:
    cells = ordering_applicability_check(seed=args.seed)
    with _outputs(args.out_dir) as out:
        out.write_csv(
            "applicability.csv",
            ["technique", "state", "attempts", "success_rate", "applies"],
            [[c.technique, c.state, c.attempts, f"{c.success_rate:.4f}",
              "yes" if c.applies else "no"] for c in cells])
        out.write_manifest("applicability", {"seed": args.seed})
    if not args.quiet:
        width = max(len(c.technique) for c in cells)
        for cell in cells:
            mark = "applies" if cell.applies else "does not apply"
            print(f"{cell.technique:<{width}}  {cell.state:<13}  "
                  f"rate {cell.success_rate:.3f}  {mark}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (SourceUnreachableError, FileNotFoundError) as exc:
        print(f"source error: {exc}", file=sys.stderr)
        return EXIT_SOURCE
    except (MalformedRecordError, RangeGapError, MissingPriceError,
            ConfigError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


__all__ = ["build_parser", "main"]
