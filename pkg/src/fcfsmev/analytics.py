"""Searcher-level aggregation: clustering, leaderboards, octile positioning,
position/profit correlation and the proposer-vs-searcher ranking comparison.

Everything here is a pure fold over detection output.  USD amounts stay as
Decimal end to end; correlation is Spearman over octile indices because
positions are ordinal.
"""

from __future__ import annotations

import datetime
import statistics
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Optional

from scipy import stats as _scipy_stats

from .arbitrage import ArbCycle


class InsufficientSampleError(Exception):
    """Fewer data points than the statistic needs."""


class InvalidPositionError(Exception):
    """A block position outside 1..block_len."""


@dataclass(frozen=True)
class SearcherCluster:
    """Addresses tied together by a common funding source.

    The cluster id is the lexicographically smallest member, which makes
    cluster identity stable across runs and edge orderings.
    """

    cluster_id: str
    members: frozenset[str]
    funder: Optional[str] = None


def cluster_by_funder(
        arb_searchers: set[str],
        funding_txns: Iterable[tuple[str, str, int]]) -> list[SearcherCluster]:
    """Union-find over (funder, fundee) edges.

    Edges whose fundee is not a known searcher are ignored; funders join
    the cluster they fund.  Searchers with no qualifying edge come back as
    singletons.  Output is sorted by cluster id and independent of edge
    order.
    """
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra == rb:
            return
        # Deterministic orientation: the smaller address becomes the root.
        if rb < ra:
            ra, rb = rb, ra
        parent[rb] = ra

    for addr in arb_searchers:
        parent.setdefault(addr, addr)
    funder_of_edge: dict[str, set[str]] = {}
    for funder, fundee, _round in funding_txns:
        if fundee not in arb_searchers:
            continue
        parent.setdefault(funder, funder)
        parent.setdefault(fundee, fundee)
        union(funder, fundee)
        funder_of_edge.setdefault(fundee, set()).add(funder)
    groups: dict[str, set[str]] = {}
    for addr in parent:
        groups.setdefault(find(addr), set()).add(addr)
    clusters = []
    for members in groups.values():
        funders = {f for fundee in members
                   for f in funder_of_edge.get(fundee, ()) if f in members}
        clusters.append(SearcherCluster(
            cluster_id=min(members),
            members=frozenset(members),
            funder=next(iter(funders)) if len(funders) == 1 else None))
    clusters.sort(key=lambda c: c.cluster_id)
    return clusters


def cluster_lookup(clusters: list[SearcherCluster]) -> dict[str, str]:
    """Address -> cluster id map for annotating arbitrages."""
    return {m: c.cluster_id for c in clusters for m in c.members}


def octile_of(position: int, block_len: int) -> int:
    """Octile (1..8) of a 1-based block position."""
    if block_len < 1 or not (1 <= position <= block_len):
        raise InvalidPositionError(
            f"position {position} not in 1..{block_len}")
    return min(8, max(1, -(-8 * position // block_len)))


@dataclass(frozen=True)
class OctileStats:
    counts: tuple[int, ...]             # O1..O8
    profits_usd: tuple[Decimal, ...]    # USD profit sums per octile
    p1_count: int                       # arbitrages at absolute position 1


def octile_distribution(arbs: Iterable[ArbCycle]) -> OctileStats:
    counts = [0] * 8
    profits = [Decimal(0)] * 8
    p1 = 0
    for arb in arbs:
        octile = octile_of(arb.block_position, arb.block_len)
        counts[octile - 1] += 1
        if arb.profit_usd is not None:
            profits[octile - 1] += arb.profit_usd
        if arb.block_position == 1:
            p1 += 1
    return OctileStats(tuple(counts), tuple(profits), p1)


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    n: int
    flag: str = ""      # "undefined" when a variable is constant

    @property
    def rho_2dp(self) -> Decimal:
        return Decimal(self.rho).quantize(Decimal("0.01"))


def position_profit_correlation(arbs: list[ArbCycle]) -> CorrelationResult:
    """Spearman rank correlation of octile index vs USD profit.

    Arbitrages without a USD value carry no rankable profit and are
    excluded.  Average ranks handle ties.  A constant variable leaves the
    coefficient undefined; that case is flagged and reported as 0.
    """
    sample = [(octile_of(a.block_position, a.block_len), a.profit_usd)
              for a in arbs if a.profit_usd is not None]
    if len(sample) < 2:
        raise InsufficientSampleError(
            f"need at least 2 arbitrages with USD profit, got {len(sample)}")
    octiles = [s[0] for s in sample]
    profits = [float(s[1]) for s in sample]
    if len(set(octiles)) == 1 or len(set(profits)) == 1:
        return CorrelationResult(rho=0.0, n=len(sample), flag="undefined")
    rho = float(_scipy_stats.spearmanr(octiles, profits).statistic)
    return CorrelationResult(rho=rho, n=len(sample))


def arb_month(arb: ArbCycle) -> str:
    """UTC calendar month of an arbitrage, formatted YYYY-MM."""
    dt = datetime.datetime.fromtimestamp(arb.timestamp, tz=datetime.timezone.utc)
    return f"{dt.year:04d}-{dt.month:02d}"


@dataclass(frozen=True)
class RankDeviation:
    month: str
    proposer: str
    rank: int
    cluster: str
    deviation_type: str     # "absent", "rank-swap" or "rank-shift"


@dataclass(frozen=True)
class RankingReport:
    month: str
    aggregate_top: list[tuple[str, int]]
    per_proposer: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    deviations: list[RankDeviation] = field(default_factory=list)


def _top_by_count(counts: dict[str, int], k: int) -> list[tuple[str, int]]:
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def proposer_searcher_rankings(
        arbs: Iterable[ArbCycle], month: str,
        cluster_of: Optional[dict[str, str]] = None,
        min_arbs: int = 50, k: int = 5) -> RankingReport:
    """Compare each proposer's top-k searcher clusters with the aggregate.

    Proposers below ``min_arbs`` arbitrages in the month are excluded.
    Deviations: a per-proposer entry missing from the aggregate top-k is
    "absent"; two entries whose ranks are exactly exchanged are one
    "rank-swap" row; any other present-but-moved entry is a "rank-shift".
    """
    cluster_of = cluster_of or {}
    aggregate: dict[str, int] = {}
    per_proposer_counts: dict[str, dict[str, int]] = {}
    for arb in arbs:
        if arb_month(arb) != month:
            continue
        cluster = cluster_of.get(arb.searcher, arb.searcher)
        aggregate[cluster] = aggregate.get(cluster, 0) + 1
        counts = per_proposer_counts.setdefault(arb.proposer, {})
        counts[cluster] = counts.get(cluster, 0) + 1
    aggregate_top = _top_by_count(aggregate, k)
    aggregate_rank = {c: i + 1 for i, (c, _) in enumerate(aggregate_top)}
    report = RankingReport(month=month, aggregate_top=aggregate_top)
    for proposer in sorted(per_proposer_counts):
        counts = per_proposer_counts[proposer]
        if sum(counts.values()) < min_arbs:
            continue
        top = _top_by_count(counts, k)
        report.per_proposer[proposer] = top
        local_rank = {c: i + 1 for i, (c, _) in enumerate(top)}
        moved: dict[str, int] = {}
        for cluster, rank in local_rank.items():
            if cluster not in aggregate_rank:
                report.deviations.append(RankDeviation(
                    month, proposer, rank, cluster, "absent"))
            elif aggregate_rank[cluster] != rank:
                moved[cluster] = rank
        consumed: set[str] = set()
        for cluster in sorted(moved, key=lambda c: moved[c]):
            if cluster in consumed:
                continue
            for other in sorted(moved, key=lambda c: moved[c]):
                if other in consumed or other == cluster:
                    continue
                if (moved[cluster] == aggregate_rank[other]
                        and moved[other] == aggregate_rank[cluster]):
                    pair = sorted((cluster, other))
                    report.deviations.append(RankDeviation(
                        month, proposer, min(moved[cluster], moved[other]),
                        f"{pair[0]}<->{pair[1]}", "rank-swap"))
                    consumed.update(pair)
                    break
        for cluster in sorted(moved, key=lambda c: moved[c]):
            if cluster not in consumed:
                report.deviations.append(RankDeviation(
                    month, proposer, moved[cluster], cluster, "rank-shift"))
    return report


@dataclass(frozen=True)
class LeaderboardRow:
    cluster: str
    n_arbs: int
    profit_usd: Optional[Decimal]       # None when nothing was convertible
    token_totals: tuple[tuple[str, int], ...]   # (token label, base units)
    median_profit_rate_pct: Decimal


def _token_label(arb: ArbCycle) -> str:
    token = arb.profit_token
    return token.symbol if token.symbol else str(token.id)


def top_searchers(arbs: Iterable[ArbCycle], k: int = 10,
                  cluster_of: Optional[dict[str, str]] = None
                  ) -> list[LeaderboardRow]:
    """Leaderboard merging the top-k clusters by count and by USD profit.

    The union typically exceeds k rows when the two rankings disagree.
    Ties break by cluster id ascending so output order is deterministic.
    """
    cluster_of = cluster_of or {}
    grouped: dict[str, list[ArbCycle]] = {}
    for arb in arbs:
        cluster = cluster_of.get(arb.searcher, arb.searcher)
        grouped.setdefault(cluster, []).append(arb)
    stats: dict[str, LeaderboardRow] = {}
    for cluster, rows in grouped.items():
        usd_values = [a.profit_usd for a in rows if a.profit_usd is not None]
        totals: dict[str, int] = {}
        for arb in rows:
            label = _token_label(arb)
            totals[label] = totals.get(label, 0) + arb.profit_amount
        stats[cluster] = LeaderboardRow(
            cluster=cluster,
            n_arbs=len(rows),
            profit_usd=sum(usd_values, Decimal(0)) if usd_values else None,
            token_totals=tuple(sorted(totals.items())),
            median_profit_rate_pct=statistics.median(
                a.profit_rate_pct for a in rows))
    by_count = sorted(stats, key=lambda c: (-stats[c].n_arbs, c))[:k]
    convertible = [c for c in stats if stats[c].profit_usd is not None]
    by_usd = sorted(convertible, key=lambda c: (-stats[c].profit_usd, c))[:k]
    merged = set(by_count) | set(by_usd)
    ordered = sorted(merged, key=lambda c: (-stats[c].n_arbs, c))
    return [stats[c] for c in ordered]


__all__ = [
    "CorrelationResult", "InsufficientSampleError", "InvalidPositionError",
    "LeaderboardRow", "OctileStats", "RankDeviation", "RankingReport",
    "SearcherCluster", "arb_month", "cluster_by_funder", "cluster_lookup",
    "octile_distribution", "octile_of", "position_profit_correlation",
    "proposer_searcher_rankings", "top_searchers",
]
