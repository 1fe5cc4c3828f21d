from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from fge.errors import DegenerateHoldingsError, DuplicateKeyError, FGEError
from fge.matcher import (Status, audit_allocations, audit_priority, classify_outcome, filing_gap,
                         match_greedy, signal_magnitude)

from oracles import brute_force_match, random_match_instance

D0 = pd.Timestamp("2020-01-01")


def _intents(rows):
    return pd.DataFrame([(iid, "P", 1, D0 + pd.Timedelta(days=d), float(q), 10_000.0) for iid, d, q in rows],
                        columns=["intent_id", "person_id", "permco", "file_date", "proposed_shares", "shares_held"])


def _execs(rows):
    return pd.DataFrame([(eid, "P", 1, D0 + pd.Timedelta(days=d), float(q), 10.0) for eid, d, q in rows],
                        columns=["exec_id", "person_id", "permco", "transaction_date", "shares_sold", "price"])


def _status(outcomes):
    return dict(zip(outcomes["intent_id"], outcomes["status"]))


def test_single_fill_fully_executed():
    _, out = match_greedy(_intents([("I1", 0, 1000)]), _execs([("E1", 5, 1000)]))
    assert out["status"].tolist() == [Status.FULLY.value]
    assert out["gap_days"].tolist() == [5]
    assert out["non_execution"].tolist() == [0]


def test_day_91_is_outside():
    alloc, out = match_greedy(_intents([("I1", 0, 1000)]), _execs([("E1", 91, 1000)]))
    assert out["status"].tolist() == [Status.NON.value]
    assert alloc.empty
    assert pd.isna(out["gap_days"].iloc[0])


def test_day_90_and_same_day_are_inside():
    _, out = match_greedy(_intents([("I1", 0, 100), ("I2", 200, 100)]),
                          _execs([("E1", 90, 100), ("E2", 200, 100)]))
    assert out["gap_days"].tolist() == [90, 0]


def test_spill_into_next_window():
    alloc, out = match_greedy(_intents([("I1", 0, 500), ("I2", 10, 500)]), _execs([("E1", 12, 800)]))
    assert _status(out) == {"I1": Status.FULLY.value, "I2": Status.PARTIAL.value}
    assert alloc[["intent_id", "shares"]].values.tolist() == [["I1", 500.0], ["I2", 300.0]]
    assert out["non_execution"].tolist() == [0, 1]
    filled, _, _ = brute_force_match(_intents([("I1", 0, 500), ("I2", 10, 500)]).assign(permco=1),
                                     _execs([("E1", 12, 800)]).assign(permco=1))
    assert filled == {"I1": 500.0, "I2": 300.0}


def test_same_day_windows_tie_break_by_id():
    alloc, _ = match_greedy(_intents([("I9", 0, 100), ("I2", 0, 100)]), _execs([("E1", 3, 100)]))
    assert alloc["intent_id"].tolist() == ["I2"]


def test_unlinked_remainder_and_other_keys():
    intents = _intents([("I1", 0, 100)])
    ex = pd.concat([_execs([("E1", 3, 250)]), _execs([("E2", 3, 100)]).assign(person_id="Q")])
    alloc, out = match_greedy(intents, ex)
    assert alloc["shares"].sum() == 100.0
    assert out["executed_volume"].tolist() == [100.0]


def test_epsilon_threshold():
    _, out = match_greedy(_intents([("I1", 0, 1000)]), _execs([("E1", 1, 995)]), epsilon=10)
    assert out["status"].tolist() == [Status.FULLY.value]
    with pytest.raises(FGEError):
        match_greedy(_intents([("I1", 0, 1000)]), _execs([("E1", 1, 995)]), epsilon=-1)


def test_duplicate_ids_rejected():
    with pytest.raises(DuplicateKeyError):
        match_greedy(_intents([("I1", 0, 10)]), _execs([("E1", 1, 5), ("E1", 2, 5)]))


def test_classify_outcome():
    assert classify_outcome(1000, 1000, 0) is Status.FULLY
    assert classify_outcome(1000, 999, 0) is Status.NON
    assert classify_outcome(1000, 995, 10) is Status.FULLY
    assert classify_outcome(1000, 500, 0, three_way=True) is Status.PARTIAL
    with pytest.raises(FGEError):
        classify_outcome(1000, 1000, -1)


def test_filing_gap():
    assert filing_gap("2020-01-01", "2020-01-01") == 0
    assert filing_gap("2020-01-01", "2020-03-31") == 90
    assert filing_gap("2020-02-20", "2020-03-05") == 14
    assert filing_gap("2020-02-20", None) is None
    with pytest.raises(FGEError):
        filing_gap("2020-01-01", "2020-04-01")


def test_signal_magnitude():
    assert signal_magnitude(100, 1000) == pytest.approx(0.10)
    with pytest.raises(DegenerateHoldingsError):
        signal_magnitude(100, 0)


def _compare_with_oracle(intents, executions):
    alloc, out = match_greedy(intents, executions)
    filled, first, allocs = brute_force_match(intents, executions)
    got = dict(zip(out["intent_id"], out["executed_volume"]))
    assert got == filled
    for iid, fd in zip(out["intent_id"], out["first_exec_date"]):
        assert (pd.isna(fd) and iid not in first) or fd == first[iid]
    mine = sorted(zip(alloc["exec_id"], alloc["intent_id"], alloc["shares"]))
    assert mine == sorted(allocs)


def test_oracle_equivalence_random(rng):
    for _ in range(200):
        intents, executions = random_match_instance(rng)
        _compare_with_oracle(intents, executions)


def test_invariants_on_synth_scale(rng):
    intents, executions = [], []
    for k in range(40):
        i, e = random_match_instance(rng, n_keys=5)
        intents.append(i.assign(intent_id=i["intent_id"] + f"_{k}", person_id=i["person_id"] + f"_{k}"))
        executions.append(e.assign(exec_id=e["exec_id"] + f"_{k}", person_id=e["person_id"] + f"_{k}"))
    intents = pd.concat(intents, ignore_index=True)
    executions = pd.concat(executions, ignore_index=True)
    alloc, out = match_greedy(intents, executions)
    assert audit_allocations(intents, executions, alloc) == {
        "execution_overfill": 0, "window_overfill": 0, "outside_window": 0, "nonpositive_shares": 0}
    assert audit_priority(intents, alloc) == 0
    assert out["status"].value_counts().sum() == len(intents)
    # gap present exactly when a fill exists
    assert (out["gap_days"].isna() == out["first_exec_date"].isna()).all()


def test_row_order_invariance(rng):
    intents, executions = random_match_instance(rng, n_keys=6)
    a1, o1 = match_greedy(intents, executions)
    a2, o2 = match_greedy(intents.sample(frac=1, random_state=1), executions.sample(frac=1, random_state=2))
    key = ["exec_id", "intent_id"]
    pd.testing.assert_frame_equal(a1.sort_values(key).reset_index(drop=True),
                                  a2.sort_values(key).reset_index(drop=True))
    pd.testing.assert_frame_equal(o1.sort_values("intent_id").reset_index(drop=True),
                                  o2.sort_values("intent_id").reset_index(drop=True))


def test_priority_audit_catches_a_skip():
    intents = _intents([("I1", 0, 100), ("I2", 5, 100)])
    bad = pd.DataFrame({"exec_id": ["E1"], "intent_id": ["I2"], "shares": [50.0],
                        "date": [D0 + pd.Timedelta(days=6)]})
    assert audit_priority(intents, bad) == 1


def test_missing_holdings_gives_nan_magnitude():
    intents = _intents([("I1", 0, 100)]).assign(shares_held=0.0)
    _, out = match_greedy(intents, _execs([("E1", 1, 100)]))
    assert np.isnan(out["signal_magnitude"].iloc[0])
