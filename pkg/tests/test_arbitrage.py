import datetime
import random
from decimal import Decimal

import pytest

from fcfsmev.chain import ALGO, AssetId, Block, Txn, TxnGroup
from fcfsmev.arbitrage import (BASE_UNITS_PER_TOKEN, MissingPriceError, Pool,
                               PoolRegistry, PriceTable, Swap, block_date,
                               classify_execution, detect_block_arbs,
                               detect_cycle, extract_swaps, load_pool_registry,
                               load_price_table, to_usd)
from oracles import cycle_oracle

USDC = AssetId(31566704, "USDC", "stablecoin")
GOBTC = AssetId(386192725, "goBTC", "other")
WALGO = AssetId(246516580, "wALGO", "native-pegged")
TOKENS = [ALGO, USDC, GOBTC, WALGO, AssetId(11), AssetId(12)]


def sw(seq, token_in, amount_in, token_out, amount_out, pool="POOL"):
    return Swap(pool=pool, token_in=token_in, amount_in=amount_in,
                token_out=token_out, amount_out=amount_out, seq=seq)


def test_swap_rejects_degenerate_values():
    with pytest.raises(ValueError):
        sw(1, ALGO, 0, USDC, 5)
    with pytest.raises(ValueError):
        sw(1, ALGO, 5, USDC, -1)
    with pytest.raises(ValueError):
        sw(1, ALGO, 5, ALGO, 5)


def test_two_swap_cycle_profit_arithmetic():
    swaps = [sw(1, ALGO, 1000, USDC, 400), sw(2, USDC, 400, ALGO, 1050)]
    core = detect_cycle(swaps)
    assert core is not None
    assert core.profit_token == ALGO
    assert core.profit_amount == 50
    assert core.input_amount == 1000
    assert core.profit_rate_pct == Decimal("5")


def test_single_swap_is_no_cycle():
    assert detect_cycle([sw(1, ALGO, 1000, USDC, 400)]) is None
    assert detect_cycle([]) is None


def test_open_token_chain_rejected():
    swaps = [sw(1, ALGO, 1000, USDC, 400), sw(2, GOBTC, 300, ALGO, 1100)]
    assert detect_cycle(swaps) is None


def test_unclosed_endpoints_rejected():
    swaps = [sw(1, ALGO, 1000, USDC, 400), sw(2, USDC, 400, GOBTC, 10)]
    assert detect_cycle(swaps) is None


def test_overdrawn_link_rejected():
    swaps = [sw(1, ALGO, 1000, USDC, 400), sw(2, USDC, 401, ALGO, 1100)]
    assert detect_cycle(swaps) is None


def test_losing_cycle_rejected():
    swaps = [sw(1, ALGO, 1000, USDC, 400), sw(2, USDC, 400, ALGO, 999)]
    assert detect_cycle(swaps) is None


def test_zero_profit_cycle_accepted():
    swaps = [sw(1, ALGO, 1000, USDC, 400), sw(2, USDC, 400, ALGO, 1000)]
    core = detect_cycle(swaps)
    assert core is not None
    assert core.profit_amount == 0
    assert core.profit_rate_pct == Decimal("0")


def test_partial_spend_of_previous_output_accepted():
    swaps = [sw(1, ALGO, 1000, USDC, 400), sw(2, USDC, 350, GOBTC, 20),
             sw(3, GOBTC, 20, ALGO, 1300)]
    core = detect_cycle(swaps)
    assert core is not None
    assert core.profit_amount == 300


def random_swaps(rng):
    n = rng.randint(1, 5)
    chain = [rng.choice(TOKENS)]
    for _ in range(n):
        chain.append(rng.choice([t for t in TOKENS if t.id != chain[-1].id]))
    if rng.random() < 0.6 and chain[-2].id != chain[0].id:
        chain[-1] = chain[0]
    amount_in = rng.randint(1, 10 ** 6)
    swaps = []
    for i in range(n):
        amount_out = max(0, amount_in + rng.randint(-400, 600))
        swaps.append(sw(i + 1, chain[i], amount_in, chain[i + 1], amount_out))
        amount_in = max(1, amount_out - rng.randint(-200, 300))
    return swaps


def test_cycle_detection_matches_brute_force_oracle():
    rng = random.Random(13)
    detected = 0
    for _ in range(500):
        swaps = random_swaps(rng)
        core = detect_cycle(swaps)
        assert (core is not None) == cycle_oracle(swaps)
        if core is not None:
            detected += 1
            assert core.profit_amount == (
                swaps[-1].amount_out - swaps[0].amount_in)
            assert core.profit_amount >= 0
            assert core.profit_rate_pct == (
                Decimal(100 * core.profit_amount) / Decimal(core.input_amount))
    assert detected > 20


# -- swap extraction -----------------------------------------------------

REGISTRY = PoolRegistry([Pool("P1", "DexA", "0/31566704"),
                         Pool("P2", "DexB", "0/31566704")])


def pay(txid, sender, receiver, amount, gid="G", fee=1000, pos=0):
    return Txn(txid=txid, sender=sender, kind="pay", receiver=receiver,
               amount=amount, fee=fee, group_id=gid, block_position=pos)


def axfer(txid, sender, receiver, asset, amount, gid="G", fee=1000, pos=0):
    return Txn(txid=txid, sender=sender, kind="axfer", receiver=receiver,
               asset=asset, amount=amount, fee=fee, group_id=gid,
               block_position=pos)


def group_of(*txns, gid="G"):
    txns = tuple(
        t if t.block_position else
        type(t)(**{**t.__dict__, "block_position": i + 1})
        for i, t in enumerate(txns))
    return TxnGroup(group_id=gid, txns=txns,
                    total_fee=sum(t.fee for t in txns),
                    block_position=txns[0].block_position)


def test_extract_swaps_from_grouped_transfers():
    group = group_of(
        pay("T1", "S", "P1", 1000),
        axfer("T2", "P1", "S", USDC, 400),
        axfer("T3", "S", "P2", USDC, 400),
        pay("T4", "P2", "S", 1050))
    swaps = extract_swaps(group, REGISTRY)
    assert [s.seq for s in swaps] == [1, 2]
    assert swaps[0].pool == "P1" and swaps[0].token_in == ALGO
    assert swaps[0].amount_in == 1000 and swaps[0].amount_out == 400
    assert swaps[1].pool == "P2" and swaps[1].token_out == ALGO
    assert detect_cycle(swaps).profit_amount == 50


def test_second_inbound_discards_stale_pending():
    group = group_of(
        pay("T1", "S", "P1", 100),
        pay("T2", "S", "P1", 250),
        axfer("T3", "P1", "S", USDC, 90))
    swaps = extract_swaps(group, REGISTRY)
    assert len(swaps) == 1
    assert swaps[0].amount_in == 250


def test_outbound_without_pending_is_ignored():
    group = group_of(axfer("T1", "P1", "S", USDC, 90))
    assert extract_swaps(group, REGISTRY) == []


def test_same_token_round_trip_is_not_a_swap():
    group = group_of(pay("T1", "S", "P1", 100), pay("T2", "P1", "S", 105))
    assert extract_swaps(group, REGISTRY) == []


def test_transfers_not_involving_sender_are_ignored():
    group = group_of(
        pay("T1", "S", "P1", 1000),
        pay("T2", "OTHER", "P2", 500),
        axfer("T3", "P2", "OTHER", USDC, 200),
        axfer("T4", "P1", "S", USDC, 400))
    swaps = extract_swaps(group, REGISTRY)
    assert len(swaps) == 1 and swaps[0].pool == "P1"


def test_extract_swaps_scans_inner_transactions():
    inner = (
        Txn(txid="I1", sender="S", kind="pay", receiver="P1", amount=1000),
        Txn(txid="I2", sender="P1", kind="axfer", receiver="S", asset=USDC,
            amount=400),
        Txn(txid="I3", sender="S", kind="axfer", receiver="P2", asset=USDC,
            amount=400),
        Txn(txid="I4", sender="P2", kind="pay", receiver="S", amount=1200),
    )
    app = Txn(txid="A1", sender="S", kind="appl", app_id=9, fee=2000,
              inner=inner, block_position=1)
    group = TxnGroup("A1", (app,), total_fee=2000, block_position=1)
    swaps = extract_swaps(group, REGISTRY)
    assert detect_cycle(swaps).profit_amount == 200
    assert classify_execution(group, None) == "atomic-app"


def test_multi_txn_group_is_grouped_execution():
    group = group_of(pay("T1", "S", "P1", 10), pay("T2", "S", "P1", 10))
    assert classify_execution(group, None) == "grouped"


# -- pricing -------------------------------------------------------------

def test_price_table_lookup_and_validation():
    table = PriceTable()
    table.add("2021-06-01", 0, Decimal("0.152"))
    assert table.lookup("2021-06-01", 0) == Decimal("0.152")
    assert table.lookup(datetime.date(2021, 6, 1), 0) == Decimal("0.152")
    with pytest.raises(MissingPriceError):
        table.lookup("2021-06-02", 0)
    with pytest.raises(ValueError):
        table.add("2021-06-01", 0, Decimal("0"))


def test_to_usd_by_asset_class():
    table = PriceTable()
    table.add("2021-06-01", 0, Decimal("0.15"))
    table.add("2021-06-01", WALGO.id, Decimal("0.15"))
    assert to_usd(USDC, Decimal("7"), "2021-06-01", table) == Decimal("7")
    assert to_usd(ALGO, Decimal("10"), "2021-06-01", table) == Decimal("1.50")
    assert to_usd(WALGO, Decimal("2"), "2021-06-01", table) == Decimal("0.30")
    assert to_usd(GOBTC, Decimal("1"), "2021-06-01", table) is None
    with pytest.raises(MissingPriceError):
        to_usd(ALGO, Decimal("1"), "1999-01-01", table)
    with pytest.raises(ValueError):
        to_usd(USDC, Decimal("-1"), "2021-06-01", table)


def test_csv_loaders_round_trip(tmp_path):
    pools = tmp_path / "pools.csv"
    pools.write_text("pool_id,platform,pair\nP1,DexA,0/31566704\n")
    registry = load_pool_registry(str(pools))
    assert "P1" in registry and len(registry) == 1
    assert registry.get("P1").platform == "DexA"
    prices = tmp_path / "prices.csv"
    prices.write_text("date,asset_id,usd_price\n2021-06-01,0,0.152\n")
    table = load_price_table(str(prices))
    assert table.lookup("2021-06-01", 0) == Decimal("0.152")


def test_block_date_is_utc():
    block = Block(round=1, timestamp=1622505600, proposer="P", txns=())
    assert block_date(block) == datetime.date(2021, 6, 1)
    almost_midnight = Block(round=1, timestamp=1622505600 - 1, proposer="P",
                            txns=())
    assert block_date(almost_midnight) == datetime.date(2021, 5, 31)


# -- whole-block detection -----------------------------------------------

def arb_block(prices_date="2021-06-01"):
    txns = [
        pay("N1", "X", "Y", 5, gid=None, pos=1),
        pay("T1", "S", "P1", 10 * BASE_UNITS_PER_TOKEN, pos=2),
        axfer("T2", "P1", "S", USDC, 4 * BASE_UNITS_PER_TOKEN, pos=3),
        axfer("T3", "S", "P2", USDC, 4 * BASE_UNITS_PER_TOKEN, pos=4),
        pay("T4", "P2", "S", 12 * BASE_UNITS_PER_TOKEN, pos=5),
        pay("N2", "X", "Y", 5, gid=None, pos=6),
    ]
    groups = (
        TxnGroup("N1", (txns[0],), 1000, 1),
        TxnGroup("G", tuple(txns[1:5]), 4000, 2),
        TxnGroup("N2", (txns[5],), 1000, 6),
    )
    return Block(round=44, timestamp=1622505600, proposer="PROP",
                 txns=tuple(txns), groups=groups)


def test_detect_block_arbs_fills_metadata():
    table = PriceTable()
    table.add("2021-06-01", 0, Decimal("0.15"))
    arbs = detect_block_arbs(arb_block(), REGISTRY, table)
    assert len(arbs) == 1
    arb = arbs[0]
    assert arb.txid_or_group == "G"
    assert arb.searcher == "S"
    assert arb.block_round == 44
    assert arb.block_position == 2
    assert arb.block_len == 6
    assert arb.execution == "grouped"
    assert arb.fee_paid == 4000
    assert arb.group_size == 4
    assert arb.proposer == "PROP"
    assert arb.profit_amount == 2 * BASE_UNITS_PER_TOKEN
    assert arb.profit_rate_pct == Decimal("20")
    assert arb.profit_usd == Decimal("0.30")


def test_missing_price_blanks_usd_but_keeps_cycle():
    empty = PriceTable()
    arbs = detect_block_arbs(arb_block(), REGISTRY, empty)
    assert len(arbs) == 1
    assert arbs[0].profit_usd is None
    no_prices = detect_block_arbs(arb_block(), REGISTRY, None)
    assert no_prices[0].profit_usd is None
