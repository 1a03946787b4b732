"""Deterministic fixture chains with known ground truth.

The generator plants cyclic arbitrages (both execution styles), batch
issuance runs, and distractors that each violate exactly one detection
heuristic, then records everything planted in a ground-truth file.  All
output is byte-identical for a given seed and parameter set.
"""

from __future__ import annotations

import csv
import datetime
import json
import os
import random
from typing import Optional

GENESIS_TIMESTAMP = 1609459200          # 2021-01-01T00:00:00Z
SECONDS_PER_BLOCK_NUM = 17              # 3.4 s per block as the ratio 17/5
SECONDS_PER_BLOCK_DEN = 5

_B32 = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567"

USDC_ID = 31566704
USDT_ID = 312769
GOBTC_ID = 386192725
WALGO_ID = 246516580

ASSET_ROWS = (
    (0, "ALGO", "native"),
    (USDC_ID, "USDC", "stablecoin"),
    (USDT_ID, "USDT", "stablecoin"),
    (WALGO_ID, "WALGO", "native-pegged"),
    (GOBTC_ID, "GOBTC", "other"),
)

ROUTER_APP_ID = 1002541853
BATCH_APP_ID = 77770011

FIXTURE_FILE = "fixture.jsonl"
GROUND_TRUTH_FILE = "ground_truth.json"
POOLS_FILE = "pools.csv"
PRICES_FILE = "prices.csv"
ASSETS_FILE = "assets.csv"
LABELS_FILE = "label_map.csv"


def _address(rng: random.Random) -> str:
    return "".join(rng.choice(_B32) for _ in range(58))


class _Ids:
    """Unique txid factory: counter prefix plus random tail."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counter = 0

    def txid(self) -> str:
        self.counter += 1
        head = f"{self.counter:08d}".translate(str.maketrans("0123456789", "ABCDEFGHIJ"))
        tail = "".join(self.rng.choice(_B32) for _ in range(44))
        return head + tail


def block_timestamp(round_: int) -> int:
    return GENESIS_TIMESTAMP + (round_ * SECONDS_PER_BLOCK_NUM) // SECONDS_PER_BLOCK_DEN


def _pay(ids, sender, receiver, amount, fee=1000, group_id=None) -> dict:
    txn = {"txid": ids.txid(), "sender": sender, "kind": "pay",
           "receiver": receiver, "amount": amount, "fee": fee}
    if group_id:
        txn["group_id"] = group_id
    return txn


def _axfer(ids, sender, receiver, asset, amount, fee=1000, group_id=None) -> dict:
    txn = {"txid": ids.txid(), "sender": sender, "kind": "axfer",
           "receiver": receiver, "asset": asset, "amount": amount, "fee": fee}
    if group_id:
        txn["group_id"] = group_id
    return txn


def _appl(ids, sender, app_id, fee=1000, inner=None, group_id=None) -> dict:
    txn = {"txid": ids.txid(), "sender": sender, "kind": "appl",
           "app_id": app_id, "fee": fee}
    if inner:
        txn["inner"] = inner
    if group_id:
        txn["group_id"] = group_id
    return txn


def _inner_pay(ids, sender, receiver, amount) -> dict:
    return {"txid": ids.txid(), "sender": sender, "kind": "pay",
            "receiver": receiver, "amount": amount, "fee": 0}


def _inner_axfer(ids, sender, receiver, asset, amount) -> dict:
    return {"txid": ids.txid(), "sender": sender, "kind": "axfer",
            "receiver": receiver, "asset": asset, "amount": amount, "fee": 0}


def default_bti_run_lengths(n_blocks: int) -> tuple[int, ...]:
    if n_blocks >= 1000:
        return (364, 45, 25, 10, 5, 3, 2, 1, 1)
    if n_blocks >= 200:
        return (45, 25, 10, 5, 3, 2, 1)
    if n_blocks >= 60:
        return (10, 5, 3, 1)
    return (1,)


class _Generator:
    def __init__(self, n_blocks: int, seed: int, arb_rate: float,
                 bti_run_lengths: Optional[tuple[int, ...]]):
        if n_blocks < 20:
            raise ValueError("need at least 20 blocks")
        if not (0 < arb_rate <= 0.5):
            raise ValueError("arb_rate must be in (0, 0.5]")
        self.n_blocks = n_blocks
        self.seed = seed
        self.arb_rate = arb_rate
        self.rng = random.Random(seed)
        self.ids = _Ids(self.rng)
        self.run_lengths = tuple(
            bti_run_lengths if bti_run_lengths is not None
            else default_bti_run_lengths(n_blocks))
        rng = self.rng
        self.proposers = [_address(rng) for _ in range(5)]
        self.searchers = [_address(rng) for _ in range(8)]
        self.funders = [_address(rng) for _ in range(2)]
        self.distractor_senders = [_address(rng) for _ in range(3)]
        self.filler_senders = [_address(rng) for _ in range(12)]
        self.friends = [_address(rng) for _ in range(40)]
        self.pools = {
            "ALGO/USDC-a": (_address(rng), "TinymanV2", f"0/{USDC_ID}"),
            "ALGO/USDC-b": (_address(rng), "Pact", f"0/{USDC_ID}"),
            "USDC/GOBTC": (_address(rng), "TinymanV2", f"{USDC_ID}/{GOBTC_ID}"),
            "GOBTC/ALGO": (_address(rng), "AlgoFi", f"{GOBTC_ID}/0"),
            "ALGO/USDT": (_address(rng), "Pact", f"0/{USDT_ID}"),
            "ALGO/WALGO": (_address(rng), "TinymanV2", f"0/{WALGO_ID}"),
        }
        self.bti_senders = [_address(rng) for _ in range(max(3, len(self.run_lengths)))]
        self.prices = self._make_prices()
        self.ground_truth = {
            "params": {"n_blocks": n_blocks, "seed": seed, "arb_rate": arb_rate,
                       "bti_run_lengths": list(self.run_lengths)},
            "genesis_timestamp": GENESIS_TIMESTAMP,
            "searchers": list(self.searchers),
            "funding_edges": [],
            "arbs": [],
            "arb_distractors": [],
            "btis": [],
            "bti_runs": [],
            "bti_distractors": [],
        }
        self._plan()

    # -- planning ----------------------------------------------------------

    def _make_prices(self) -> list[tuple[str, int, str]]:
        first = datetime.datetime.fromtimestamp(
            block_timestamp(1), tz=datetime.timezone.utc).date()
        last = datetime.datetime.fromtimestamp(
            block_timestamp(self.n_blocks), tz=datetime.timezone.utc).date()
        rows = []
        day = first - datetime.timedelta(days=1)
        while day <= last + datetime.timedelta(days=1):
            algo = f"0.{150000 + self.rng.randint(0, 9999):06d}"
            rows.append((day.isoformat(), 0, algo))
            rows.append((day.isoformat(), WALGO_ID, algo))
            day += datetime.timedelta(days=1)
        return rows

    def _plan(self):
        rng = self.rng
        n = self.n_blocks
        self.bti_rounds: dict[int, tuple[int, int]] = {}   # round -> (run idx, offset)
        cursor = 10
        runs = []
        for i, length in enumerate(self.run_lengths):
            if cursor + length > n - 5:
                raise ValueError(
                    f"bti run lengths {self.run_lengths} do not fit in {n} blocks")
            # One sender per run; gaps between runs keep each maximal.
            sender = self.bti_senders[i % len(self.bti_senders)]
            runs.append({"sender": sender, "start_round": cursor,
                         "end_round": cursor + length - 1})
            for offset in range(length):
                self.bti_rounds[cursor + offset] = (i, offset)
            cursor += length + rng.randint(2, 8)
        self.ground_truth["bti_runs"] = runs
        taken = set(self.bti_rounds) | set(range(1, 8))
        free = [r for r in range(8, n + 1) if r not in taken]
        n_bti_distractors = 4
        n_arb_distractors = 6
        n_arbs = max(1, round(self.arb_rate * n))
        needed = n_bti_distractors + n_arb_distractors + n_arbs + 2
        if len(free) < needed:
            raise ValueError("not enough free rounds; lower arb_rate or bti spec")
        picked = rng.sample(free, needed)
        self.bti_distractor_rounds = sorted(picked[:n_bti_distractors])
        self.arb_distractor_rounds = sorted(
            picked[n_bti_distractors:n_bti_distractors + n_arb_distractors])
        arb_slice = picked[n_bti_distractors + n_arb_distractors:
                           n_bti_distractors + n_arb_distractors + n_arbs]
        self.arb_rounds = sorted(arb_slice)
        self.late_funding_round = None
        self.extra_free = sorted(picked[-2:])
        # Searcher per arb round: heavier weight on the first addresses so
        # leaderboards have a clear ordering; first 8 rounds cycle through
        # all searchers so each has at least one arbitrage.
        weights = [30, 20, 15, 10, 10, 5, 5, 5]
        self.arb_searcher: dict[int, str] = {}
        for i, round_ in enumerate(self.arb_rounds):
            if i < len(self.searchers):
                self.arb_searcher[round_] = self.searchers[i]
            else:
                self.arb_searcher[round_] = rng.choices(
                    self.searchers, weights=weights)[0]
        s6_first = next(
            (r for r in self.arb_rounds if self.arb_searcher[r] == self.searchers[6]),
            None)
        if s6_first is not None:
            later = [r for r in self.extra_free if r > s6_first]
            self.late_funding_round = later[0] if later else None

    # -- block builders ----------------------------------------------------

    def _filler(self, count: int) -> list[dict]:
        rng = self.rng
        senders = rng.sample(self.filler_senders, min(5, len(self.filler_senders)))
        txns = []
        for i in range(count):
            sender = senders[i % len(senders)]
            friend = rng.choice(self.friends)
            txns.append(_pay(self.ids, sender, friend,
                             rng.randint(100_000, 50_000_000)))
        return txns

    def _grouped_arb(self, searcher: str, profit_token: str) -> tuple[list[dict], dict]:
        rng = self.rng
        gid = "G" + "".join(rng.choice(_B32) for _ in range(43))
        profit = rng.randint(10_000, 2_000_000)
        x = rng.randint(50_000_000, 500_000_000)
        if profit_token == "ALGO":
            p1, p2 = self.pools["ALGO/USDC-a"][0], self.pools["ALGO/USDC-b"][0]
            mid = rng.randint(5_000_000, 80_000_000)
            txns = [
                _pay(self.ids, searcher, p1, x, group_id=gid),
                _axfer(self.ids, p1, searcher, USDC_ID, mid, group_id=gid),
                _axfer(self.ids, searcher, p2, USDC_ID, mid, group_id=gid),
                _pay(self.ids, p2, searcher, x + profit, group_id=gid),
            ]
            token_id, n_swaps = 0, 2
        elif profit_token == "USDC":
            p2, p3 = self.pools["USDC/GOBTC"][0], self.pools["ALGO/USDC-a"][0]
            algo_mid = rng.randint(40_000_000, 400_000_000)
            btc_mid = rng.randint(100_000, 4_000_000)
            txns = [
                _axfer(self.ids, searcher, p2, USDC_ID, x, group_id=gid),
                _axfer(self.ids, p2, searcher, GOBTC_ID, btc_mid, group_id=gid),
                _axfer(self.ids, searcher, self.pools["GOBTC/ALGO"][0], GOBTC_ID,
                       btc_mid, group_id=gid),
                _pay(self.ids, self.pools["GOBTC/ALGO"][0], searcher, algo_mid,
                     group_id=gid),
                _pay(self.ids, searcher, p3, algo_mid, group_id=gid),
                _axfer(self.ids, p3, searcher, USDC_ID, x + profit, group_id=gid),
            ]
            token_id, n_swaps = USDC_ID, 3
        else:   # GOBTC profit stays unconvertible
            p1, p2 = self.pools["GOBTC/ALGO"][0], self.pools["USDC/GOBTC"][0]
            algo_mid = rng.randint(40_000_000, 400_000_000)
            usdc_mid = rng.randint(5_000_000, 60_000_000)
            txns = [
                _axfer(self.ids, searcher, p1, GOBTC_ID, x, group_id=gid),
                _pay(self.ids, p1, searcher, algo_mid, group_id=gid),
                _pay(self.ids, searcher, self.pools["ALGO/USDC-a"][0], algo_mid,
                     group_id=gid),
                _axfer(self.ids, self.pools["ALGO/USDC-a"][0], searcher, USDC_ID,
                       usdc_mid, group_id=gid),
                _axfer(self.ids, searcher, p2, USDC_ID, usdc_mid, group_id=gid),
                _axfer(self.ids, p2, searcher, GOBTC_ID, x + profit, group_id=gid),
            ]
            token_id, n_swaps = GOBTC_ID, 3
        record = {"group": gid, "searcher": searcher, "execution": "grouped",
                  "profit_token": token_id, "profit_amount": profit,
                  "input_amount": x, "n_swaps": n_swaps}
        return txns, record

    def _atomic_arb(self, searcher: str) -> tuple[list[dict], dict]:
        rng = self.rng
        profit = rng.randint(10_000, 2_000_000)
        x = rng.randint(50_000_000, 500_000_000)
        mid = rng.randint(5_000_000, 80_000_000)
        p1, p2 = self.pools["ALGO/USDC-a"][0], self.pools["ALGO/USDC-b"][0]
        inner = [
            _inner_pay(self.ids, searcher, p1, x),
            _inner_axfer(self.ids, p1, searcher, USDC_ID, mid),
            _inner_axfer(self.ids, searcher, p2, USDC_ID, mid),
            _inner_pay(self.ids, p2, searcher, x + profit),
        ]
        txn = _appl(self.ids, searcher, ROUTER_APP_ID, fee=2000, inner=inner)
        record = {"group": txn["txid"], "searcher": searcher,
                  "execution": "atomic-app", "profit_token": 0,
                  "profit_amount": profit, "input_amount": x, "n_swaps": 2}
        return [txn], record

    def _arb_distractor(self, style: str) -> tuple[list[dict], str]:
        rng = self.rng
        sender = rng.choice(self.distractor_senders)
        gid = "G" + "".join(rng.choice(_B32) for _ in range(43))
        p1, p2 = self.pools["ALGO/USDC-a"][0], self.pools["ALGO/USDC-b"][0]
        x = rng.randint(50_000_000, 300_000_000)
        mid = rng.randint(5_000_000, 60_000_000)
        if style == "single-swap":
            txns = [
                _pay(self.ids, sender, p1, x, group_id=gid),
                _axfer(self.ids, p1, sender, USDC_ID, mid, group_id=gid),
            ]
        elif style == "broken-chain":
            txns = [
                _pay(self.ids, sender, p1, x, group_id=gid),
                _axfer(self.ids, p1, sender, USDC_ID, mid, group_id=gid),
                _axfer(self.ids, sender, self.pools["USDC/GOBTC"][0], USDC_ID,
                       mid, group_id=gid),
                # The chain breaks here: GOBTC comes back, never ALGO.
                _axfer(self.ids, self.pools["USDC/GOBTC"][0], sender, GOBTC_ID,
                       rng.randint(100_000, 900_000), group_id=gid),
            ]
        else:   # losing-cycle: H1 and H2 hold, the wrap-around amount fails
            loss = rng.randint(10_000, 1_000_000)
            txns = [
                _pay(self.ids, sender, p1, x, group_id=gid),
                _axfer(self.ids, p1, sender, USDC_ID, mid, group_id=gid),
                _axfer(self.ids, sender, p2, USDC_ID, mid, group_id=gid),
                _pay(self.ids, p2, sender, x - loss, group_id=gid),
            ]
        return txns, style

    def _bti_block_txns(self, run_index: int, round_: int) -> tuple[list[dict], dict]:
        rng = self.rng
        sender = self.ground_truth["bti_runs"][run_index]["sender"]
        style = run_index % 3
        block_len = rng.choice((45, 50, 60, 75, 90))
        if round_ % 7 == 0:
            # Exact 80% boundary blocks keep the share arithmetic honest.
            block_len = 45
            count = 36
        else:
            count = rng.randint((block_len * 4 + 4) // 5, block_len - 3)
        txns = []
        for _ in range(count):
            receiver = rng.choice(self.friends)
            if style == 0:
                txns.append(_pay(self.ids, sender, receiver,
                                 rng.randint(500_000, 5_000_000)))
            elif style == 1:
                txns.append(_axfer(self.ids, sender, receiver, USDC_ID,
                                   rng.randint(500_000, 5_000_000)))
            else:
                txns.append(_appl(self.ids, sender, BATCH_APP_ID))
        txns.extend(self._filler(block_len - count))
        record = {"round": round_, "sender": sender, "count": count,
                  "block_len": block_len}
        return txns, record

    def _bti_distractor_txns(self, which: int) -> tuple[list[dict], str]:
        rng = self.rng
        sender = rng.choice(self.distractor_senders)
        if which % 2 == 0:
            # Dominant share held above 80%, but the block is too small
            # for the size heuristic.
            count = rng.randint(31, 36)
            txns = [_pay(self.ids, sender, rng.choice(self.friends), 1_000_000)
                    for _ in range(count)]
            txns.extend(self._filler(max(0, 38 - count)))
            return txns, "small-block"
        # Big block, share one transaction short of 80%.
        block_len = rng.choice((50, 60, 80))
        count = (block_len * 4) // 5 - 1
        txns = [_pay(self.ids, sender, rng.choice(self.friends), 1_000_000)
                for _ in range(count)]
        txns.extend(self._filler(block_len - count))
        return txns, "low-share"

    # -- assembly ----------------------------------------------------------

    def _funding_txns(self, round_: int) -> list[dict]:
        f1, f2 = self.funders
        gt_edges = self.ground_truth["funding_edges"]
        out = []
        if round_ == 2:
            for fundee in self.searchers[0:3]:
                out.append(_pay(self.ids, f1, fundee, 5_000_000))
                gt_edges.append([f1, fundee, round_])
        elif round_ == 3:
            for fundee in self.searchers[3:5]:
                out.append(_pay(self.ids, f2, fundee, 7_500_000))
                gt_edges.append([f2, fundee, round_])
            # Dust below the 1 ALGO cutoff never forms an edge.
            out.append(_pay(self.ids, f1, self.searchers[5], 400_000))
        return out

    def build_block(self, round_: int) -> dict:
        rng = self.rng
        txns: list[dict] = []
        if round_ in self.bti_rounds:
            run_index, _ = self.bti_rounds[round_]
            txns, record = self._bti_block_txns(run_index, round_)
            self.ground_truth["btis"].append(record)
        elif round_ in self.arb_searcher:
            searcher = self.arb_searcher[round_]
            style_roll = rng.random()
            if style_roll < 0.4:
                arb_txns, record = self._atomic_arb(searcher)
            elif style_roll < 0.7:
                arb_txns, record = self._grouped_arb(searcher, "ALGO")
            elif style_roll < 0.9:
                arb_txns, record = self._grouped_arb(searcher, "USDC")
            else:
                arb_txns, record = self._grouped_arb(searcher, "GOBTC")
            filler = self._filler(rng.randint(5, 28))
            insert = rng.randint(0, len(filler))
            txns = filler[:insert] + arb_txns + filler[insert:]
            record["round"] = round_
            self.ground_truth["arbs"].append(record)
            if len(self.ground_truth["arbs"]) % 7 == 0 and len(txns) < 32:
                extra_txns, extra = self._atomic_arb(
                    rng.choice(self.searchers[:4]))
                txns.extend(extra_txns)
                extra["round"] = round_
                self.ground_truth["arbs"].append(extra)
        elif round_ in self.arb_distractor_rounds:
            style = ("single-swap", "broken-chain", "losing-cycle")[
                self.arb_distractor_rounds.index(round_) % 3]
            d_txns, style = self._arb_distractor(style)
            filler = self._filler(rng.randint(5, 20))
            insert = rng.randint(0, len(filler))
            txns = filler[:insert] + d_txns + filler[insert:]
            self.ground_truth["arb_distractors"].append(
                {"round": round_, "type": style})
        elif round_ in self.bti_distractor_rounds:
            which = self.bti_distractor_rounds.index(round_)
            txns, style = self._bti_distractor_txns(which)
            self.ground_truth["bti_distractors"].append(
                {"round": round_, "type": style})
        else:
            txns = self._filler(rng.randint(5, 35))
            txns.extend(self._funding_txns(round_))
            if round_ == self.late_funding_round:
                # Funding arriving after the fundee's first arbitrage is
                # outside the clustering rule and must not form an edge.
                txns.append(_pay(self.ids, self.funders[1],
                                 self.searchers[6], 9_000_000))
        return {
            "round": round_,
            "timestamp": block_timestamp(round_),
            "proposer": rng.choice(self.proposers),
            "txns": txns,
        }

    # -- file output -------------------------------------------------------

    def write(self, out_dir: str) -> dict:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, FIXTURE_FILE)
        with open(path, "w") as fh:
            for round_ in range(1, self.n_blocks + 1):
                block = self.build_block(round_)
                fh.write(json.dumps(block, sort_keys=True,
                                    separators=(",", ":")) + "\n")
        with open(os.path.join(out_dir, POOLS_FILE), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pool_id", "platform", "pair"])
            for address, platform, pair in self.pools.values():
                writer.writerow([address, platform, pair])
        with open(os.path.join(out_dir, PRICES_FILE), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "asset_id", "usd_price"])
            writer.writerows(self.prices)
        with open(os.path.join(out_dir, ASSETS_FILE), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["asset_id", "symbol", "class"])
            writer.writerows(ASSET_ROWS)
        with open(os.path.join(out_dir, LABELS_FILE), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sender", "purpose"])
            writer.writerow([self.bti_senders[0], "reward-payment"])
            if len(self.bti_senders) > 1:
                writer.writerow([self.bti_senders[1], "token-distribution"])
        truth = self.ground_truth
        with open(os.path.join(out_dir, GROUND_TRUTH_FILE), "w") as fh:
            json.dump(truth, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return truth


def generate_fixture(out_dir: str, n_blocks: int = 1000, seed: int = 1,
                     arb_rate: float = 0.06,
                     bti_run_lengths: Optional[tuple[int, ...]] = None) -> dict:
    """Write a fixture chain plus configs under out_dir; returns the
    ground truth that was also written to disk."""
    gen = _Generator(n_blocks, seed, arb_rate, bti_run_lengths)
    return gen.write(out_dir)


__all__ = [
    "ASSET_ROWS", "ASSETS_FILE", "FIXTURE_FILE", "GENESIS_TIMESTAMP",
    "GROUND_TRUTH_FILE", "LABELS_FILE", "POOLS_FILE", "PRICES_FILE",
    "block_timestamp", "default_bti_run_lengths", "generate_fixture",
]
