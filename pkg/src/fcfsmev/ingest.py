"""Block ingestion: local JSONL fixtures or an indexer-style HTTP endpoint.

Both sources are normalized to the same :class:`~fcfsmev.chain.Block` shape
before anything downstream sees them, and blocks are always delivered as a
single stream in ascending round order.  Missing rounds are never skipped
silently: a gap would corrupt consecutive-block run analysis.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional

import requests

from .chain import AssetId, Block, Txn, TxnGroup, txn_total_fee, validate_block

INDEXER_URL_ENV = "INDEXER_URL"
INDEXER_TOKEN_ENV = "INDEXER_TOKEN"
_MAX_ATTEMPTS = 3
_BACKOFF_BASE_S = 0.1
_PREFETCH_WORKERS = 8


class IngestError(Exception):
    """Base class for ingestion failures."""


class SourceUnreachableError(IngestError):
    """The HTTP source could not be reached after retries."""


class MalformedRecordError(IngestError):
    """A fixture line or HTTP response could not be normalized."""


class RangeGapError(IngestError):
    """A round inside the requested range is missing from the source."""

    def __init__(self, round_: int, message: Optional[str] = None):
        self.round = round_
        super().__init__(message or f"round {round_} missing from source")


@dataclass(frozen=True)
class SourceSpec:
    """Where to read blocks from and which rounds to read."""

    mode: str                       # "fixture-file" or "http-indexer"
    location: str                   # path or base URL
    round_range: tuple[int, int]    # inclusive [start, end]
    page_size: int = 100
    timeout_ms: int = 10_000

    def __post_init__(self):
        if self.mode not in ("fixture-file", "http-indexer"):
            raise ValueError(f"unknown source mode {self.mode!r}")
        start, end = self.round_range
        if start > end:
            raise ValueError(f"round range start {start} > end {end}")
        if self.page_size < 1:
            raise ValueError("page_size must be >= 1")


def _raw_get(raw: dict, *names, default=None):
    for name in names:
        if name in raw:
            return raw[name]
    return default


def _normalize_txn(raw: dict, assets: Optional[dict[int, AssetId]],
                   position: int, context: str) -> Txn:
    """Build a Txn from a fixture or indexer-style JSON object.

    Accepts both fixture field names (kind, group_id, inner) and the
    indexer's (tx-type, group, inner-txns); asset ids resolve through the
    configured asset table when one is supplied.
    """
    try:
        kind = _raw_get(raw, "kind", "tx-type")
        sender = raw["sender"]
        txid = _raw_get(raw, "txid", "id", default="")
        fee = int(_raw_get(raw, "fee", default=0))
        receiver = _raw_get(raw, "receiver")
        amount = _raw_get(raw, "amount")
        asset_raw = _raw_get(raw, "asset")
        app_id = _raw_get(raw, "app_id")
        if kind == "pay" and "payment-transaction" in raw:
            receiver = raw["payment-transaction"].get("receiver")
            amount = raw["payment-transaction"].get("amount")
        elif kind == "axfer" and "asset-transfer-transaction" in raw:
            sub = raw["asset-transfer-transaction"]
            receiver = sub.get("receiver")
            amount = sub.get("amount")
            asset_raw = sub.get("asset-id")
        elif kind == "appl" and "application-transaction" in raw:
            app_id = raw["application-transaction"].get("application-id")
        asset = None
        if asset_raw is not None:
            asset_id = int(asset_raw)
            if assets and asset_id in assets:
                asset = assets[asset_id]
            else:
                asset = AssetId(asset_id)
        inner_raw = _raw_get(raw, "inner", "inner-txns", default=[])
        inner = tuple(
            _normalize_txn(r, assets, position=0, context=context) for r in inner_raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecordError(f"{context}: bad transaction record: {exc}") from exc
    return Txn(
        txid=txid, sender=sender, kind=kind, receiver=receiver, asset=asset,
        amount=int(amount or 0), app_id=app_id,
        group_id=_raw_get(raw, "group_id", "group"), fee=fee,
        inner=inner, block_position=position)


def normalize_block(raw: dict, assets: Optional[dict[int, AssetId]] = None,
                    context: str = "") -> Block:
    try:
        round_ = int(_raw_get(raw, "round"))
        timestamp = int(_raw_get(raw, "timestamp", default=0))
        proposer = _raw_get(raw, "proposer", default="")
        raw_txns = _raw_get(raw, "txns", "transactions", default=[])
    except (TypeError, ValueError) as exc:
        raise MalformedRecordError(f"{context}: bad block record: {exc}") from exc
    txns = tuple(
        _normalize_txn(r, assets, position=i + 1, context=f"{context} txn {i + 1}")
        for i, r in enumerate(raw_txns))
    return Block(round=round_, timestamp=timestamp, proposer=proposer, txns=txns)


def assemble_groups(block: Block) -> Block:
    """Partition a block's transactions into atomic groups in block order.

    Transactions sharing a group id form one group; every other transaction
    becomes a singleton group whose synthetic id is its txid.  Group fees
    aggregate member fees including inner-transaction fees.
    """
    order: list[str] = []
    members: dict[str, list[Txn]] = {}
    for txn in block.txns:
        gid = txn.group_id if txn.group_id is not None else txn.txid
        if gid not in members:
            members[gid] = []
            order.append(gid)
        members[gid].append(txn)
    groups = tuple(
        TxnGroup(
            group_id=gid,
            txns=tuple(members[gid]),
            total_fee=sum(txn_total_fee(t) for t in members[gid]),
            block_position=members[gid][0].block_position)
        for gid in order)
    return Block(block.round, block.timestamp, block.proposer, block.txns, groups)


def _check_block(block: Block, context: str) -> Block:
    violations = validate_block(block)
    if violations:
        details = "; ".join(str(v) for v in violations)
        raise MalformedRecordError(f"{context}: invalid block: {details}")
    return block


def _load_fixture(spec: SourceSpec,
                  assets: Optional[dict[int, AssetId]]) -> Iterator[Block]:
    start, end = spec.round_range
    found: dict[int, Block] = {}
    with open(spec.location) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(
                    f"{spec.location}:{line_no}: not valid JSON: {exc}") from exc
            block = normalize_block(raw, assets, context=f"{spec.location}:{line_no}")
            if not (start <= block.round <= end):
                continue
            if block.round in found:
                raise MalformedRecordError(
                    f"{spec.location}:{line_no}: duplicate round {block.round}")
            found[block.round] = _check_block(block, f"{spec.location}:{line_no}")
    for round_ in range(start, end + 1):
        if round_ not in found:
            raise RangeGapError(round_)
        yield found[round_]


class IndexerClient:
    """Minimal client for an indexer-v2-shaped REST surface.

    ``GET {base}/v2/blocks/{round}`` returns the block; when the response
    carries a ``next-token``, the remaining transactions are fetched from
    ``GET {base}/v2/blocks/{round}/transactions`` page by page.  Transient
    failures are retried with exponential backoff.
    """

    def __init__(self, base_url: Optional[str] = None, page_size: int = 100,
                 timeout_ms: int = 10_000, token: Optional[str] = None,
                 session: Optional[requests.Session] = None):
        base = base_url or os.environ.get(INDEXER_URL_ENV)
        if not base:
            raise SourceUnreachableError(
                f"no indexer URL given and {INDEXER_URL_ENV} is unset")
        self.base_url = base.rstrip("/")
        self.page_size = page_size
        self.timeout_s = timeout_ms / 1000.0
        self.token = token if token is not None else os.environ.get(INDEXER_TOKEN_ENV)
        self.session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        return {"X-Indexer-API-Token": self.token} if self.token else {}

    def _get_json(self, url: str, params: dict) -> Optional[dict]:
        """GET with retry/backoff; returns None for a persistent 404."""
        last_error = None
        for attempt in range(_MAX_ATTEMPTS):
            if attempt:
                time.sleep(_BACKOFF_BASE_S * (2 ** (attempt - 1)))
            try:
                resp = self.session.get(
                    url, params=params, headers=self._headers(), timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_error = f"{exc.__class__.__name__}: {exc}"
                continue
            if resp.status_code == 404:
                last_error = "404"
                continue
            if resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            try:
                resp.raise_for_status()
                return resp.json()
            except (requests.RequestException, json.JSONDecodeError) as exc:
                raise MalformedRecordError(f"{url}: bad response: {exc}") from exc
        if last_error == "404":
            return None
        raise SourceUnreachableError(f"{url}: unreachable after retries ({last_error})")

    def fetch_block(self, round_: int,
                    assets: Optional[dict[int, AssetId]] = None) -> Block:
        url = f"{self.base_url}/v2/blocks/{round_}"
        raw = self._get_json(url, {"page_size": self.page_size})
        if raw is None:
            raise RangeGapError(round_, f"round {round_} not found at {url}")
        txns = list(_raw_get(raw, "txns", "transactions", default=[]))
        next_token = _raw_get(raw, "next-token")
        while next_token:
            page = self._get_json(
                f"{url}/transactions",
                {"limit": self.page_size, "next": next_token})
            if page is None:
                raise RangeGapError(round_, f"transaction page for round {round_} vanished")
            txns.extend(_raw_get(page, "txns", "transactions", default=[]))
            next_token = _raw_get(page, "next-token")
        merged = dict(raw)
        merged["txns"] = txns
        merged.pop("transactions", None)
        merged.pop("next-token", None)
        return normalize_block(merged, assets, context=url)


def _load_http(spec: SourceSpec,
               assets: Optional[dict[int, AssetId]]) -> Iterator[Block]:
    client = IndexerClient(
        base_url=spec.location, page_size=spec.page_size, timeout_ms=spec.timeout_ms)
    start, end = spec.round_range
    # Fetches run in parallel; completed rounds are delivered to the
    # consumer strictly in ascending order.
    window_size = _PREFETCH_WORKERS * 2
    with ThreadPoolExecutor(max_workers=_PREFETCH_WORKERS) as pool:
        pending = {
            r: pool.submit(client.fetch_block, r, assets)
            for r in range(start, min(start + window_size, end + 1))}
        next_submit = start + len(pending)
        for round_ in range(start, end + 1):
            block = pending.pop(round_).result()
            if next_submit <= end:
                pending[next_submit] = pool.submit(client.fetch_block, next_submit, assets)
                next_submit += 1
            yield _check_block(block, f"{spec.location} round {round_}")


def load_blocks(spec: SourceSpec,
                assets: Optional[dict[int, AssetId]] = None) -> Iterator[Block]:
    """Stream the blocks in ``spec.round_range`` in ascending round order.

    Empty blocks are yielded, not skipped.  Every yielded block has passed
    :func:`~fcfsmev.chain.validate_block`.  Raises :class:`RangeGapError`
    when a round inside the range is missing.
    """
    if spec.mode == "fixture-file":
        yield from _load_fixture(spec, assets)
    else:
        yield from _load_http(spec, assets)


__all__ = [
    "INDEXER_TOKEN_ENV", "INDEXER_URL_ENV", "IndexerClient", "IngestError",
    "MalformedRecordError", "RangeGapError", "SourceSpec", "SourceUnreachableError",
    "assemble_groups", "load_blocks", "normalize_block",
]
