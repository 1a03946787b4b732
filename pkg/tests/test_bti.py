import random
from decimal import Decimal
from fractions import Fraction
from types import SimpleNamespace

import pytest

from fcfsmev.chain import AssetId, Block, Txn, TxnGroup
from fcfsmev.bti import (BtiEvent, PatternKey, RUN_BUCKETS, bucket_of,
                         classify_bti, detect_bti, dominant_pattern,
                         event_if_bti, link_runs, median_block_size,
                         pattern_key)

USDC = AssetId(31566704, "USDC", "stablecoin")


def pay(txid, sender, receiver="R", pos=0):
    return Txn(txid=txid, sender=sender, kind="pay", receiver=receiver,
               amount=1, fee=1000, block_position=pos)


def block_of(round_, txns):
    txns = tuple(
        Txn(**{**t.__dict__, "block_position": i + 1})
        for i, t in enumerate(txns))
    return Block(round=round_, timestamp=0, proposer="P", txns=txns)


def burst_block(round_, sender, count, block_len):
    txns = [pay(f"B{i}", sender) for i in range(count)]
    txns += [pay(f"F{i}", f"FILLER{i}") for i in range(block_len - count)]
    return block_of(round_, txns)


def test_pattern_key_shapes():
    p = pay("T1", "S", receiver="ANYONE")
    assert pattern_key(p) == PatternKey("S", "pay", "pay:asset=0")
    a = Txn(txid="T2", sender="S", kind="axfer", receiver="R", asset=USDC,
            amount=1, fee=1000)
    assert pattern_key(a).shape == f"axfer:asset={USDC.id}"
    app = Txn(txid="T3", sender="S", kind="appl", app_id=42, fee=1000)
    assert pattern_key(app).shape == "appl:42"
    assert pattern_key(p).canonical() == "S|pay|pay:asset=0"


def test_pattern_key_collapses_receivers():
    a = pay("T1", "S", receiver="R1")
    b = pay("T2", "S", receiver="R2")
    assert pattern_key(a) == pattern_key(b)


def test_singleton_group_keys_like_its_txn():
    t = pay("T1", "S", pos=1)
    g = TxnGroup("T1", (t,), 1000, 1)
    assert pattern_key(g) == pattern_key(t)


def test_multi_group_keys_on_kind_signature():
    t1 = pay("T1", "S", pos=1)
    t2 = Txn(txid="T2", sender="S2", kind="appl", app_id=1, fee=1000,
             block_position=2)
    g = TxnGroup("G", (t1, t2), 2000, 1)
    key = pattern_key(g)
    assert key.sender == "S"
    assert key.kind == "group"
    assert key.shape == "group:pay+appl"


def test_dominant_pattern_weighs_groups_by_member_count():
    txns = [pay(f"A{i}", "BULK", pos=i + 1) for i in range(4)]
    txns += [pay("B0", "SOLO", pos=5)]
    groups = (
        TxnGroup("G", tuple(txns[:4]), 4000, 1),
        TxnGroup("B0", (txns[4],), 1000, 5),
    )
    block = Block(round=1, timestamp=0, proposer="P", txns=tuple(txns),
                  groups=groups)
    pattern, count = dominant_pattern(block)
    assert pattern.sender == "BULK"
    assert count == 4


def test_dominant_pattern_tie_breaks_deterministically():
    txns = [pay("T1", "AAA"), pay("T2", "ZZZ")]
    pattern, count = dominant_pattern(block_of(1, txns))
    assert count == 1
    assert pattern.sender == "AAA"
    assert dominant_pattern(block_of(1, [])) is None


def test_size_threshold_is_strict():
    assert detect_bti(burst_block(1, "S", 41, 41)) is not None
    assert detect_bti(burst_block(1, "S", 40, 40)) is None
    assert detect_bti(burst_block(1, "S", 30, 30), size_threshold=29) is not None
    assert detect_bti(burst_block(1, "S", 30, 30), size_threshold=30) is None


def test_share_boundary_is_exact():
    exact = detect_bti(burst_block(7, "S", 36, 45))
    assert exact is not None
    assert exact.share == Decimal("0.8")
    assert detect_bti(burst_block(7, "S", 35, 45)) is None
    assert detect_bti(burst_block(7, "S", 40, 50)) is not None
    assert detect_bti(burst_block(7, "S", 39, 50)) is None


def test_event_fields():
    event = detect_bti(burst_block(9, "BIGS", 50, 60))
    assert event.round == 9
    assert event.sender == "BIGS"
    assert event.count == 50
    assert event.block_len == 60
    assert event.label is None


def test_share_rule_matches_fraction_oracle():
    rng = random.Random(29)
    pattern = PatternKey("S", "pay", "pay:asset=0")
    for _ in range(300):
        block_len = rng.randint(41, 400)
        count = rng.randint(0, block_len)
        event = event_if_bti(1, pattern, count, block_len)
        expected = Fraction(count, block_len) >= Fraction(4, 5)
        assert (event is not None) == expected


def test_median_block_size():
    blocks = [burst_block(r, "S", 1, n) for r, n in enumerate((3, 9, 5), 1)]
    assert median_block_size(blocks) == 5
    blocks.append(burst_block(4, "S", 1, 7))
    assert median_block_size(blocks) == 6
    with pytest.raises(ValueError):
        median_block_size([])


def test_bucket_edges_resolve_downward():
    cases = [(1, "1"), (2, "2-19"), (19, "2-19"), (20, "20-30"), (30, "20-30"),
             (31, "30-50"), (50, "30-50"), (51, "50-100"), (100, "50-100"),
             (101, ">100"), (364, ">100")]
    for length, bucket in cases:
        assert bucket_of(length) == bucket


def event(round_, sender="S", shape="pay:asset=0"):
    pattern = PatternKey(sender, "pay", shape)
    return BtiEvent(round=round_, sender=sender, pattern=pattern, count=40,
                    block_len=45, share=Decimal("0.8889"))


def test_link_runs_splits_on_gaps():
    events = [event(r) for r in (5, 6, 7, 10, 12, 13)]
    runs, histogram = link_runs(events)
    spans = [(r.start_round, r.end_round, r.length) for r in runs]
    assert spans == [(5, 7, 3), (10, 10, 1), (12, 13, 2)]
    assert histogram == {"1": 1, "2-19": 2, "20-30": 0, "30-50": 0,
                         "50-100": 0, ">100": 0}
    assert set(histogram) == set(RUN_BUCKETS)


def test_link_runs_keeps_senders_apart():
    events = [event(5, "A"), event(6, "B"), event(7, "A")]
    runs, _ = link_runs(events)
    spans = [(r.sender, r.start_round, r.end_round) for r in runs]
    assert spans == [("A", 5, 5), ("B", 6, 6), ("A", 7, 7)]


def test_link_runs_order_is_round_insensitive():
    rng = random.Random(3)
    rounds = sorted(rng.sample(range(1, 400), 60))
    events = [event(r) for r in rounds]
    baseline = link_runs(events)
    for _ in range(5):
        shuffled = events[:]
        rng.shuffle(shuffled)
        assert link_runs(shuffled) == baseline
    runs, _ = baseline
    covered = sorted(r for run in runs
                     for r in range(run.start_round, run.end_round + 1))
    assert covered == rounds


def test_classify_prefers_arbitrage_coverage():
    evt = event(5, "S")
    arbs = [SimpleNamespace(searcher="S", group_size=36)]
    assert classify_bti(evt, {"S": "reward-payment"}, arbs).label == "arbitrage-block"
    thin = [SimpleNamespace(searcher="S", group_size=35)]
    assert classify_bti(evt, {"S": "reward-payment"}, thin).label == "reward-payment"
    assert classify_bti(evt, {}, thin).label == "unlabeled"
    other = [SimpleNamespace(searcher="OTHER", group_size=45)]
    assert classify_bti(evt, {}, other).label == "unlabeled"
