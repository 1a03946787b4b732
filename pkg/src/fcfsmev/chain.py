"""Normalized on-chain data model shared by detection, analytics and the CLI.

Transactions come in three kinds: plain native-token payments (``pay``),
asset transfers (``axfer``) and application calls (``appl``).  Application
calls may carry up to 256 inner transactions.  Singleton transactions are
wrapped in a one-member group whose id is the transaction id, so everything
downstream operates on groups uniformly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator, Optional

MIN_FEE = 1000          # microALGO, minimum fee for a top-level transaction
MAX_INNER_TXNS = 256    # inner transactions allowed per application call
NATIVE_ASSET_ID = 0

TXN_KINDS = ("pay", "axfer", "appl")
ASSET_CLASSES = ("native", "stablecoin", "native-pegged", "other")


@dataclass(frozen=True)
class AssetId:
    """An asset identity; id 0 is reserved for the native token."""

    id: int
    symbol: Optional[str] = None
    asset_class: str = "other"

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"asset id must be non-negative, got {self.id}")
        if self.asset_class not in ASSET_CLASSES:
            raise ValueError(f"unknown asset class {self.asset_class!r}")
        if self.asset_class == "native" and self.id != NATIVE_ASSET_ID:
            raise ValueError("native asset class requires id 0")


ALGO = AssetId(NATIVE_ASSET_ID, "ALGO", "native")


@dataclass(frozen=True)
class Txn:
    """A normalized transaction; immutable and safe to share across workers."""

    txid: str
    sender: str
    kind: str
    receiver: Optional[str] = None
    asset: Optional[AssetId] = None
    amount: int = 0
    app_id: Optional[int] = None
    group_id: Optional[str] = None
    fee: int = 0
    inner: tuple["Txn", ...] = ()
    block_position: int = 0


@dataclass(frozen=True)
class TxnGroup:
    """Atomic execution unit: all member transactions succeed or fail together.

    ``group_id`` is synthetic (equal to the txid) for singleton transactions.
    ``total_fee`` aggregates member fees including inner-transaction fees.
    """

    group_id: str
    txns: tuple[Txn, ...]
    total_fee: int
    block_position: int

    @property
    def sender(self) -> str:
        """Economic sender: the sender of the group's first transaction."""
        return self.txns[0].sender


@dataclass(frozen=True)
class Block:
    round: int
    timestamp: int
    proposer: str
    txns: tuple[Txn, ...]
    groups: tuple[TxnGroup, ...] = ()


@dataclass(frozen=True)
class Violation:
    """A broken invariant; data, not an exception."""

    field: str
    rule: str
    context: str = ""

    def __str__(self):
        msg = f"{self.field}: {self.rule}"
        return f"{msg} ({self.context})" if self.context else msg


def iter_inner(txn: Txn) -> Iterator[Txn]:
    """Depth-first traversal of a transaction's inner transactions."""
    for inner in txn.inner:
        yield inner
        yield from iter_inner(inner)


def txn_total_fee(txn: Txn) -> int:
    """Fee of a transaction including all inner-transaction fees."""
    return txn.fee + sum(t.fee for t in iter_inner(txn))


def _validate_txn(txn: Txn, top_level: bool, out: list[Violation]) -> None:
    ctx = f"txid={txn.txid}"
    if txn.kind not in TXN_KINDS:
        out.append(Violation("kind", f"unknown kind {txn.kind!r}", ctx))
        return
    if txn.kind == "pay":
        if txn.receiver is None:
            out.append(Violation("receiver", "pay requires a receiver", ctx))
        if txn.asset is not None and txn.asset.id != NATIVE_ASSET_ID:
            out.append(Violation("asset", "pay moves the native token only", ctx))
    elif txn.kind == "axfer":
        if txn.asset is None:
            out.append(Violation("asset", "axfer requires an asset", ctx))
        if txn.receiver is None:
            out.append(Violation("receiver", "axfer requires a receiver", ctx))
    elif txn.kind == "appl":
        if txn.app_id is None or txn.app_id <= 0:
            out.append(Violation("app_id", "appl requires a positive app id", ctx))
    if txn.inner and txn.kind != "appl":
        out.append(Violation("inner", "only appl transactions carry inner transactions", ctx))
    if len(txn.inner) > MAX_INNER_TXNS:
        out.append(Violation(
            "inner", f"inner transaction limit is {MAX_INNER_TXNS}, got {len(txn.inner)}", ctx))
    if txn.amount < 0:
        out.append(Violation("amount", "amount must be non-negative", ctx))
    if top_level and txn.fee < MIN_FEE:
        out.append(Violation("fee", f"top-level fee below minimum {MIN_FEE}", ctx))
    if not top_level and txn.fee < 0:
        out.append(Violation("fee", "fee must be non-negative", ctx))
    for inner in txn.inner:
        _validate_txn(inner, top_level=False, out=out)


def validate_block(block: Block) -> list[Violation]:
    """Check every model invariant; returns an empty list iff the block is valid."""
    out: list[Violation] = []
    if block.round < 1:
        out.append(Violation("round", "round must be positive", f"round={block.round}"))
    positions = sorted(t.block_position for t in block.txns)
    if positions != list(range(1, len(block.txns) + 1)):
        out.append(Violation(
            "block_position",
            "positions must be 1..len(txns) with no gaps",
            f"got {positions}"))
    seen_ids = set()
    for txn in block.txns:
        if txn.txid in seen_ids:
            out.append(Violation("txid", "duplicate txid", f"txid={txn.txid}"))
        seen_ids.add(txn.txid)
        _validate_txn(txn, top_level=True, out=out)
    if block.groups:
        grouped = [t.txid for g in block.groups for t in g.txns]
        if sorted(grouped) != sorted(t.txid for t in block.txns):
            out.append(Violation("groups", "groups must partition the block's transactions"))
        for group in block.groups:
            expected_fee = sum(txn_total_fee(t) for t in group.txns)
            if group.total_fee != expected_fee:
                out.append(Violation(
                    "total_fee",
                    f"group fee {group.total_fee} != member sum {expected_fee}",
                    f"group={group.group_id}"))
            member_positions = [t.block_position for t in group.txns]
            if member_positions != sorted(member_positions):
                out.append(Violation(
                    "txns", "group members must preserve block order",
                    f"group={group.group_id}"))
            explicit = {t.group_id for t in group.txns}
            if len(group.txns) > 1 and explicit != {group.group_id}:
                out.append(Violation(
                    "group_id", "members of a multi-transaction group must share its id",
                    f"group={group.group_id}"))
    return out


def load_asset_classes(path: str) -> dict[int, AssetId]:
    """Read the asset-class config CSV (asset_id,symbol,class) into AssetId records.

    Classes are supplied by configuration, never inferred from chain data.
    """
    assets: dict[int, AssetId] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            asset_id = int(row["asset_id"])
            assets[asset_id] = AssetId(asset_id, row["symbol"] or None, row["class"])
    return assets


__all__ = [
    "ALGO", "ASSET_CLASSES", "AssetId", "Block", "MAX_INNER_TXNS", "MIN_FEE",
    "NATIVE_ASSET_ID", "TXN_KINDS", "Txn", "TxnGroup", "Violation",
    "iter_inner", "load_asset_classes", "txn_total_fee", "validate_block",
]
