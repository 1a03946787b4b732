"""Cyclic-arbitrage detection over transaction groups.

A group is reported as an arbitrage when its extracted swap list passes all
three heuristics: at least two swaps (H1), the tokens chain into a closed
cycle (H2), and no swap consumes more than the previous one produced,
including the wrap-around from last output back to first input (H3).  The
heuristics are deliberately strict; losing or externally financed cycles
are excluded by construction.
"""

from __future__ import annotations

import csv
import datetime
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Optional, Union

from .chain import ALGO, AssetId, Block, Txn, TxnGroup, iter_inner

# All fixture and registry assets use six decimal places, matching the
# native token's microunit convention.
BASE_UNITS_PER_TOKEN = 10 ** 6

DateLike = Union[str, datetime.date]


class MissingPriceError(Exception):
    """A USD conversion needed a price row that the table does not have."""


@dataclass(frozen=True)
class Swap:
    """One matched (transfer-to-pool, transfer-from-pool) pair.

    ``seq`` is the swap's 1-based index within its group, ordered by the
    position of the inbound transfer.
    """

    pool: str
    token_in: AssetId
    amount_in: int
    token_out: AssetId
    amount_out: int
    seq: int

    def __post_init__(self):
        if self.amount_in <= 0:
            raise ValueError("swap input amount must be positive")
        if self.amount_out < 0:
            raise ValueError("swap output amount must be non-negative")
        if self.token_in.id == self.token_out.id:
            raise ValueError("swap must change token")


@dataclass(frozen=True)
class CycleCore:
    """Swap list plus profit arithmetic, before block metadata is attached."""

    swaps: tuple[Swap, ...]
    profit_token: AssetId
    profit_amount: int
    input_amount: int
    profit_rate_pct: Decimal


@dataclass(frozen=True)
class ArbCycle:
    txid_or_group: str
    searcher: str
    block_round: int
    block_position: int
    block_len: int
    swaps: tuple[Swap, ...]
    profit_token: AssetId
    profit_amount: int
    input_amount: int
    profit_rate_pct: Decimal
    execution: str                  # "atomic-app" or "grouped"
    fee_paid: int
    group_size: int = 1             # top-level txns in the arbitrage's group
    timestamp: int = 0
    proposer: str = ""
    profit_usd: Optional[Decimal] = None


@dataclass(frozen=True)
class Pool:
    pool_id: str
    platform: str
    pair: str


class PoolRegistry:
    """Known AMM pools, keyed by the address (or app id) seen in transfers."""

    def __init__(self, pools: Iterable[Pool] = ()):
        self._pools = {p.pool_id: p for p in pools}

    def __contains__(self, pool_id: str) -> bool:
        return pool_id in self._pools

    def __len__(self) -> int:
        return len(self._pools)

    def get(self, pool_id: str) -> Optional[Pool]:
        return self._pools.get(pool_id)

    def ids(self) -> set[str]:
        return set(self._pools)


def load_pool_registry(path: str) -> PoolRegistry:
    """Read the pool registry CSV (pool_id,platform,pair)."""
    with open(path, newline="") as fh:
        return PoolRegistry(
            Pool(row["pool_id"], row["platform"], row["pair"])
            for row in csv.DictReader(fh))


class PriceTable:
    """Daily USD prices keyed by (date, asset id).

    Stablecoins convert at exactly 1 USD on every date regardless of table
    contents; only native and native-pegged assets consult the table.
    """

    def __init__(self, rows: Optional[dict[tuple[str, int], Decimal]] = None):
        self._rows = dict(rows or {})

    def add(self, date: DateLike, asset_id: int, usd_price: Decimal) -> None:
        if usd_price <= 0:
            raise ValueError("usd price must be positive")
        self._rows[(_iso(date), asset_id)] = usd_price

    def lookup(self, date: DateLike, asset_id: int) -> Decimal:
        key = (_iso(date), asset_id)
        if key not in self._rows:
            raise MissingPriceError(f"no price for asset {asset_id} on {key[0]}")
        return self._rows[key]

    def __len__(self) -> int:
        return len(self._rows)


def load_price_table(path: str) -> PriceTable:
    """Read the price CSV (date,asset_id,usd_price)."""
    table = PriceTable()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            table.add(row["date"], int(row["asset_id"]), Decimal(row["usd_price"]))
    return table


def _iso(date: DateLike) -> str:
    return date.isoformat() if isinstance(date, datetime.date) else str(date)


def block_date(block: Block) -> datetime.date:
    """UTC calendar date of a block, used for daily price lookup."""
    return datetime.datetime.fromtimestamp(
        block.timestamp, tz=datetime.timezone.utc).date()


def _transfer_events(group: TxnGroup) -> Iterable[tuple[str, str, AssetId, int]]:
    """Yield (sender, receiver, asset, amount) for every transfer in group
    order, scanning inner transactions of application calls depth-first."""
    def transfers_of(txn: Txn):
        if txn.kind == "pay":
            yield (txn.sender, txn.receiver or "", ALGO, txn.amount)
        elif txn.kind == "axfer" and txn.asset is not None:
            yield (txn.sender, txn.receiver or "", txn.asset, txn.amount)
        elif txn.kind == "appl":
            for inner in iter_inner(txn):
                if inner.kind == "pay":
                    yield (inner.sender, inner.receiver or "", ALGO, inner.amount)
                elif inner.kind == "axfer" and inner.asset is not None:
                    yield (inner.sender, inner.receiver or "", inner.asset, inner.amount)
    for txn in group.txns:
        yield from transfers_of(txn)


def extract_swaps(group: TxnGroup, pool_registry) -> list[Swap]:
    """Match the group's transfers into swaps against known pools.

    A swap is an inbound transfer from the group's economic sender to a
    registry pool, paired with the next outbound transfer from that same
    pool back to the sender before any other inbound transfer to that pool.
    A second inbound to a pool discards an unmatched pending one.  Swaps
    are ordered by inbound position.
    """
    sender = group.sender
    pending: dict[str, tuple[int, AssetId, int]] = {}
    matched: list[tuple[int, str, AssetId, int, AssetId, int]] = []
    for idx, (src, dst, asset, amount) in enumerate(_transfer_events(group)):
        if src == sender and dst in pool_registry and amount > 0:
            pending[dst] = (idx, asset, amount)
        elif src in pool_registry and dst == sender and src in pending:
            in_idx, token_in, amount_in = pending.pop(src)
            if token_in.id != asset.id:
                matched.append((in_idx, src, token_in, amount_in, asset, amount))
    matched.sort(key=lambda m: m[0])
    return [
        Swap(pool=pool, token_in=tin, amount_in=ain,
             token_out=tout, amount_out=aout, seq=seq)
        for seq, (_, pool, tin, ain, tout, aout) in enumerate(matched, start=1)]


def detect_cycle(swaps: list[Swap]) -> Optional[CycleCore]:
    """Apply H1–H3 to the full ordered swap list.

    H1: at least two swaps.  H2: each swap's input token is the previous
    swap's output token, and the first input equals the last output.  H3:
    each swap's input amount is at most the previous swap's output amount,
    and the first input is at most the last output.
    """
    if len(swaps) < 2:
        return None
    for prev, cur in zip(swaps, swaps[1:]):
        if prev.token_out.id != cur.token_in.id:
            return None
        if cur.amount_in > prev.amount_out:
            return None
    first, last = swaps[0], swaps[-1]
    if first.token_in.id != last.token_out.id:
        return None
    if first.amount_in > last.amount_out:
        return None
    profit = last.amount_out - first.amount_in
    rate = Decimal(100 * profit) / Decimal(first.amount_in)
    return CycleCore(
        swaps=tuple(swaps), profit_token=first.token_in, profit_amount=profit,
        input_amount=first.amount_in, profit_rate_pct=rate)


def to_usd(token: AssetId, amount, date: DateLike,
           prices: PriceTable) -> Optional[Decimal]:
    """USD value of a token-denominated amount, or None when the token's
    class is not convertible.

    Stablecoins are fixed at 1 USD.  Native and native-pegged tokens use
    the daily table and raise :class:`MissingPriceError` when the date has
    no row.  Every other class is not converted.
    """
    amount = Decimal(amount)
    if amount < 0:
        raise ValueError("amount must be non-negative")
    if token.asset_class == "stablecoin":
        return amount
    if token.asset_class in ("native", "native-pegged"):
        return amount * prices.lookup(date, token.id)
    return None


def classify_execution(group: TxnGroup, cycle: CycleCore) -> str:
    """Atomic-app means one top-level application call did everything;
    any multi-transaction group is classified as grouped."""
    if len(group.txns) == 1 and group.txns[0].kind == "appl":
        return "atomic-app"
    return "grouped"


def detect_block_arbs(block: Block, registry,
                      prices: Optional[PriceTable] = None) -> list[ArbCycle]:
    """Run swap extraction and cycle detection over every group in a block.

    Cycles come back in block order with position metadata filled in.  A
    missing price only blanks the USD field; the cycle is still reported.
    """
    date = block_date(block)
    block_len = len(block.txns)
    out: list[ArbCycle] = []
    for group in block.groups:
        swaps = extract_swaps(group, registry)
        core = detect_cycle(swaps)
        if core is None:
            continue
        profit_usd = None
        if prices is not None:
            tokens = Decimal(core.profit_amount) / BASE_UNITS_PER_TOKEN
            try:
                profit_usd = to_usd(core.profit_token, tokens, date, prices)
            except MissingPriceError:
                profit_usd = None
        out.append(ArbCycle(
            txid_or_group=group.group_id,
            searcher=group.sender,
            block_round=block.round,
            block_position=group.block_position,
            block_len=block_len,
            swaps=core.swaps,
            profit_token=core.profit_token,
            profit_amount=core.profit_amount,
            input_amount=core.input_amount,
            profit_rate_pct=core.profit_rate_pct,
            execution=classify_execution(group, core),
            fee_paid=group.total_fee,
            group_size=len(group.txns),
            timestamp=block.timestamp,
            proposer=block.proposer,
            profit_usd=profit_usd))
    return out


__all__ = [
    "ArbCycle", "BASE_UNITS_PER_TOKEN", "CycleCore", "MissingPriceError",
    "Pool", "PoolRegistry", "PriceTable", "Swap", "block_date",
    "classify_execution", "detect_block_arbs", "detect_cycle", "extract_swaps",
    "load_pool_registry", "load_price_table", "to_usd",
]
