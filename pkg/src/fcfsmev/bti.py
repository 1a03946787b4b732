"""Batch Transaction Issuance detection and run linking.

A block is a BTI when it is larger than the size threshold and at least
80% of its top-level transactions share one pattern from one sender.  The
share boundary is evaluated with integer arithmetic so 0.80 is accepted
exactly and anything below it is not.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from decimal import Decimal
from typing import Iterable, Optional, Union

from .chain import Block, Txn, TxnGroup

DEFAULT_SIZE_THRESHOLD = 40
SHARE_PCT = 80

RUN_BUCKETS = ("1", "2-19", "20-30", "30-50", "50-100", ">100")


@dataclass(frozen=True)
class PatternKey:
    """Canonical issuance pattern: who sent it and what shape it has.

    Receivers are collapsed (fan-out payouts to many receivers share one
    key) while asset ids and app ids are kept.  Equal keys and equal
    canonical strings coincide.
    """

    sender: str
    kind: str
    shape: str

    def canonical(self) -> str:
        return f"{self.sender}|{self.kind}|{self.shape}"


@dataclass(frozen=True)
class BtiEvent:
    round: int
    sender: str
    pattern: PatternKey
    count: int
    block_len: int
    share: Decimal
    label: Optional[str] = None


@dataclass(frozen=True)
class BtiRun:
    sender: str
    pattern: PatternKey
    start_round: int
    end_round: int

    @property
    def length(self) -> int:
        return self.end_round - self.start_round + 1


def _txn_shape(txn: Txn) -> str:
    if txn.kind == "appl":
        return f"appl:{txn.app_id}"
    if txn.kind == "axfer":
        asset_id = txn.asset.id if txn.asset else 0
        return f"axfer:asset={asset_id}"
    return "pay:asset=0"


def pattern_key(unit: Union[Txn, TxnGroup]) -> PatternKey:
    """Canonical pattern of a transaction or group.

    A multi-transaction group keys on its ordered member-kind signature; a
    singleton group keys exactly as its single transaction would.
    """
    if isinstance(unit, TxnGroup):
        if len(unit.txns) == 1:
            return pattern_key(unit.txns[0])
        signature = "+".join(t.kind for t in unit.txns)
        return PatternKey(unit.sender, "group", f"group:{signature}")
    return PatternKey(unit.sender, unit.kind, _txn_shape(unit))


def _block_units(block: Block) -> Iterable[Union[Txn, TxnGroup]]:
    if block.groups:
        return block.groups
    return block.txns


def _unit_weight(unit: Union[Txn, TxnGroup]) -> int:
    return len(unit.txns) if isinstance(unit, TxnGroup) else 1


def dominant_pattern(block: Block) -> Optional[tuple[PatternKey, int]]:
    """Most frequent pattern in a block and its top-level txn count.

    Counts weight each group by its top-level transaction count; ties
    break by canonical string so the result is deterministic.
    """
    counts: dict[PatternKey, int] = {}
    for unit in _block_units(block):
        key = pattern_key(unit)
        counts[key] = counts.get(key, 0) + _unit_weight(unit)
    if not counts:
        return None
    dominant = min(counts, key=lambda k: (-counts[k], k.canonical()))
    return dominant, counts[dominant]


def event_if_bti(round_: int, pattern: PatternKey, count: int, block_len: int,
                 size_threshold: float = DEFAULT_SIZE_THRESHOLD
                 ) -> Optional[BtiEvent]:
    """Apply both heuristics to a dominant-pattern summary.

    The share boundary is integer cross-multiplication, not float math,
    so exactly 80% passes and 79.99% does not.
    """
    if block_len <= size_threshold:
        return None
    if count * 100 < SHARE_PCT * block_len:
        return None
    return BtiEvent(
        round=round_, sender=pattern.sender, pattern=pattern,
        count=count, block_len=block_len,
        share=Decimal(count) / Decimal(block_len))


def detect_bti(block: Block, size_threshold: float = DEFAULT_SIZE_THRESHOLD
               ) -> Optional[BtiEvent]:
    """Return the dominant-pattern event for a block, or None.

    Both heuristics must hold: block length strictly above the threshold,
    and the dominant pattern covering at least 80% of top-level
    transactions.
    """
    block_len = len(block.txns)
    found = dominant_pattern(block)
    if found is None:
        return None
    pattern, count = found
    return event_if_bti(block.round, pattern, count, block_len, size_threshold)


def median_block_size(blocks: Iterable[Block]) -> float:
    """Median top-level transaction count, for use as the size threshold."""
    sizes = [len(b.txns) for b in blocks]
    if not sizes:
        raise ValueError("no blocks to take a median over")
    return statistics.median(sizes)


def bucket_of(length: int) -> str:
    """Histogram bucket for a run length.

    Bucket edges shared by two labels (20, 30, 50, 100) resolve to the
    lower bucket.
    """
    if length <= 1:
        return "1"
    if length <= 19:
        return "2-19"
    if length <= 30:
        return "20-30"
    if length <= 50:
        return "30-50"
    if length <= 100:
        return "50-100"
    return ">100"


def link_runs(events: list[BtiEvent]) -> tuple[list[BtiRun], dict[str, int]]:
    """Fold round-ordered events into maximal consecutive-round runs.

    Runs are per (sender, pattern); a missing round breaks the run.  The
    returned histogram counts runs per duration bucket and always carries
    every bucket key.
    """
    by_key: dict[str, list[int]] = {}
    patterns: dict[str, PatternKey] = {}
    for event in events:
        canon = event.pattern.canonical()
        by_key.setdefault(canon, []).append(event.round)
        patterns[canon] = event.pattern
    runs: list[BtiRun] = []
    for canon in sorted(by_key):
        pattern = patterns[canon]
        rounds = sorted(by_key[canon])
        start = prev = rounds[0]
        for round_ in rounds[1:]:
            if round_ != prev + 1:
                runs.append(BtiRun(pattern.sender, pattern, start, prev))
                start = round_
            prev = round_
        runs.append(BtiRun(pattern.sender, pattern, start, prev))
    runs.sort(key=lambda r: (r.start_round, r.pattern.canonical()))
    histogram = {bucket: 0 for bucket in RUN_BUCKETS}
    for run in runs:
        histogram[bucket_of(run.length)] += 1
    return runs, histogram


def classify_bti(event: BtiEvent, label_map: dict[str, str],
                 arbs: list) -> BtiEvent:
    """Attach a purpose label to an event.

    The label is "arbitrage-block" when detected arbitrages by the event's
    own sender cover at least 80% of the block's top-level transactions;
    otherwise the sender's entry in the label map; otherwise "unlabeled".
    ``arbs`` are the cycles detected in the same block.
    """
    covered = sum(
        getattr(arb, "group_size", 1)
        for arb in arbs if arb.searcher == event.sender)
    if covered * 100 >= SHARE_PCT * event.block_len:
        return replace(event, label="arbitrage-block")
    if event.sender in label_map:
        return replace(event, label=label_map[event.sender])
    return replace(event, label="unlabeled")


__all__ = [
    "BtiEvent", "BtiRun", "DEFAULT_SIZE_THRESHOLD", "PatternKey", "RUN_BUCKETS",
    "bucket_of", "classify_bti", "detect_bti", "dominant_pattern", "event_if_bti",
    "link_runs", "median_block_size", "pattern_key",
]
