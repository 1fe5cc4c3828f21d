"""Sequential greedy linkage of Form 144 intents to Form 4 executions.

Each intent opens a window ``[file_date, file_date + 90]`` (calendar days,
both ends inclusive) with capacity equal to its proposed shares. Within one
(person_id, permco) group, executions are replayed in date order and poured
into the earliest-opened window that is open and not yet full, spilling any
remainder into the next eligible window. Whatever cannot be placed stays
unlinked.
"""
from __future__ import annotations

import enum
from collections import deque

import numpy as np
import pandas as pd

from .errors import DegenerateHoldingsError, DuplicateKeyError, FGEError

WINDOW_DAYS = 90


class Status(str, enum.Enum):
    FULLY = "FullyExecuted"
    PARTIAL = "PartiallyExecuted"
    NON = "NonExecuted"


ALLOCATION_COLUMNS = ["exec_id", "intent_id", "shares", "date"]
OUTCOME_COLUMNS = ["intent_id", "status", "executed_volume", "gap_days", "signal_magnitude"]


def classify_outcome(proposed: float, executed: float, epsilon: float = 0.0, three_way: bool = False) -> Status:
    """Threshold rule: executed >= proposed - epsilon means fully executed.

    The binary form returns FULLY or NON. With ``three_way`` a short fill that
    moved some volume is reported as PARTIAL instead of NON.
    """
    if epsilon < 0:
        raise FGEError(f"epsilon must be non-negative, got {epsilon}")
    if executed >= proposed - epsilon:
        return Status.FULLY
    if three_way and executed > 0:
        return Status.PARTIAL
    return Status.NON


def filing_gap(file_date, exec_date) -> int | None:
    """Calendar days from filing to the first matched execution (None if unmatched)."""
    if exec_date is None or pd.isna(exec_date):
        return None
    gap = (pd.Timestamp(exec_date) - pd.Timestamp(file_date)).days
    if not 0 <= gap <= WINDOW_DAYS:
        raise FGEError(f"execution {exec_date} lies outside the window opened {file_date}")
    return gap


def signal_magnitude(shares_sold: float, shares_held: float) -> float:
    if not shares_held > 0:
        raise DegenerateHoldingsError(f"shares_held must be positive, got {shares_held}")
    return shares_sold / shares_held


def _day_numbers(s: pd.Series) -> np.ndarray:
    return s.to_numpy().astype("datetime64[D]").astype(np.int64)


def _group_codes(intents: pd.DataFrame, executions: pd.DataFrame) -> tuple[np.ndarray, np.ndarray]:
    persons = np.concatenate([intents["person_id"].to_numpy(), executions["person_id"].to_numpy()]).astype(str)
    permcos = np.concatenate([intents["permco"].to_numpy(), executions["permco"].to_numpy()]).astype(np.int64)
    _, pcode = np.unique(persons, return_inverse=True)
    _, fcode = np.unique(permcos, return_inverse=True)
    _, codes = np.unique(pcode.astype(np.int64) * (int(fcode.max(initial=0)) + 1) + fcode, return_inverse=True)
    codes = codes.ravel()
    return codes[: len(intents)], codes[len(intents):]


def _id_rank(ids: pd.Series) -> np.ndarray:
    _, inv = np.unique(ids.to_numpy().astype(str), return_inverse=True)
    return inv


def match_greedy(intents: pd.DataFrame, executions: pd.DataFrame, epsilon: float = 0.0):
    """Run the greedy protocol. Returns (allocations, outcomes) DataFrames.

    ``outcomes`` holds one row per intent, in the input's intent_id order, with
    the three-way status, the binary ``non_execution`` label, the first fill
    date, the filing gap and ex-ante / realized signal magnitudes.
    """
    if executions["exec_id"].duplicated().any():
        dup = executions.loc[executions["exec_id"].duplicated(), "exec_id"].iloc[0]
        raise DuplicateKeyError(f"duplicate exec_id {dup!r}")
    if intents["intent_id"].duplicated().any():
        dup = intents.loc[intents["intent_id"].duplicated(), "intent_id"].iloc[0]
        raise DuplicateKeyError(f"duplicate intent_id {dup!r}")

    gi, ge = _group_codes(intents, executions)
    fdate = _day_numbers(intents["file_date"])
    edate = _day_numbers(executions["transaction_date"])
    iorder = np.lexsort((_id_rank(intents["intent_id"]), fdate, gi))
    eorder = np.lexsort((_id_rank(executions["exec_id"]), edate, ge))

    g_i = gi[iorder]
    g_e = ge[eorder]
    fd = fdate[iorder].tolist()
    cap = intents["proposed_shares"].to_numpy(dtype=float)[iorder].tolist()
    ed = edate[eorder].tolist()
    vol = executions["shares_sold"].to_numpy(dtype=float)[eorder].tolist()

    n_groups = int(max(g_i.max(initial=-1), g_e.max(initial=-1))) + 1
    ib = np.searchsorted(g_i, np.arange(n_groups + 1)).tolist()
    eb = np.searchsorted(g_e, np.arange(n_groups + 1)).tolist()

    filled = [0.0] * len(fd)
    first = [-1] * len(fd)
    a_exec: list[int] = []
    a_win: list[int] = []
    a_sh: list[float] = []
    for g in range(n_groups):
        i0, i1, e0, e1 = ib[g], ib[g + 1], eb[g], eb[g + 1]
        if i0 == i1 or e0 == e1:
            continue
        active: deque[int] = deque()
        p = i0
        for e in range(e0, e1):
            d = ed[e]
            while p < i1 and fd[p] <= d:
                active.append(p)
                p += 1
            # expiry and exhaustion both happen in opening order
            while active and (fd[active[0]] + WINDOW_DAYS < d or filled[active[0]] >= cap[active[0]]):
                active.popleft()
            left = vol[e]
            for w in active:
                if left <= 0:
                    break
                room = cap[w] - filled[w]
                if room <= 0:
                    continue
                take = room if room < left else left
                filled[w] += take
                left -= take
                if first[w] < 0:
                    first[w] = d
                a_exec.append(e)
                a_win.append(w)
                a_sh.append(take)

    e_rows = eorder[np.asarray(a_exec, dtype=np.int64)]
    i_rows = iorder[np.asarray(a_win, dtype=np.int64)]
    allocations = pd.DataFrame({
        "exec_id": executions["exec_id"].to_numpy()[e_rows],
        "intent_id": intents["intent_id"].to_numpy()[i_rows],
        "shares": np.asarray(a_sh, dtype=float),
        "date": executions["transaction_date"].to_numpy()[e_rows],
    })

    executed = np.empty(len(fd))
    executed[iorder] = filled
    first_day = np.empty(len(fd), dtype=np.int64)
    first_day[iorder] = first
    outcomes = build_outcomes(intents, executed, first_day, fdate, epsilon)
    return allocations, outcomes


def build_outcomes(intents, executed, first_day, fdate, epsilon):
    proposed = intents["proposed_shares"].to_numpy(dtype=float)
    held = intents["shares_held"].to_numpy(dtype=float)
    if epsilon < 0:
        raise FGEError(f"epsilon must be non-negative, got {epsilon}")
    full = executed >= proposed - epsilon
    status = np.where(full, Status.FULLY.value, np.where(executed > 0, Status.PARTIAL.value, Status.NON.value))
    has_fill = first_day >= 0
    gap = np.where(has_fill, first_day - fdate, -1)
    first_date = np.where(has_fill, first_day, np.iinfo(np.int64).min).astype("datetime64[D]").astype("datetime64[ns]")
    with np.errstate(divide="ignore", invalid="ignore"):
        sm = np.where(held > 0, proposed / held, np.nan)
        sm_real = np.where(held > 0, executed / held, np.nan)
    return pd.DataFrame({
        "intent_id": intents["intent_id"].to_numpy(),
        "person_id": intents["person_id"].to_numpy(),
        "permco": intents["permco"].to_numpy(),
        "file_date": intents["file_date"].to_numpy(),
        "proposed_shares": proposed,
        "shares_held": held,
        "status": status,
        "non_execution": (~full).astype(np.int64),
        "executed_volume": executed,
        "first_exec_date": first_date,
        "gap_days": pd.arrays.IntegerArray(gap.astype(np.int64), ~has_fill),
        "signal_magnitude": sm,
        "signal_magnitude_realized": sm_real,
    })


def audit_allocations(intents: pd.DataFrame, executions: pd.DataFrame, allocations: pd.DataFrame) -> dict[str, int]:
    """Count violations of volume conservation and temporal validity."""
    tol = 1e-9
    sold = executions.set_index("exec_id")["shares_sold"]
    used = allocations.groupby("exec_id")["shares"].sum()
    over_exec = int((used - sold.reindex(used.index) > tol).sum())
    cap = intents.set_index("intent_id")["proposed_shares"]
    got = allocations.groupby("intent_id")["shares"].sum()
    over_cap = int((got - cap.reindex(got.index) > tol).sum())
    opened = intents.set_index("intent_id")["file_date"].reindex(allocations["intent_id"]).to_numpy()
    days = (allocations["date"].to_numpy() - opened) / np.timedelta64(1, "D")
    outside = int(((days < 0) | (days > WINDOW_DAYS)).sum())
    nonpos = int((allocations["shares"].to_numpy() <= 0).sum())
    return {"execution_overfill": over_exec, "window_overfill": over_cap,
            "outside_window": outside, "nonpositive_shares": nonpos}


def audit_priority(intents: pd.DataFrame, allocations: pd.DataFrame) -> int:
    """Replay allocations and count those that skipped an open, non-full earlier window."""
    intents = intents.sort_values(["file_date", "intent_id"], kind="mergesort")
    by_key: dict = {}
    for row in intents.itertuples(index=False):
        by_key.setdefault((row.person_id, row.permco), []).append(row)
    info = intents.set_index("intent_id")
    key_of = dict(zip(info.index, zip(info["person_id"], info["permco"])))
    filled: dict[str, float] = {}
    violations = 0
    for a in allocations.itertuples(index=False):
        for w in by_key[key_of[a.intent_id]]:
            if w.intent_id == a.intent_id:
                break
            open_now = w.file_date <= a.date <= w.file_date + pd.Timedelta(days=WINDOW_DAYS)
            if open_now and filled.get(w.intent_id, 0.0) < w.proposed_shares:
                violations += 1
                break
        filled[a.intent_id] = filled.get(a.intent_id, 0.0) + a.shares
    return violations
