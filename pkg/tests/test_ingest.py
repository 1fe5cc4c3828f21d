from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from fge.errors import DuplicateKeyError, SchemaError
from fge.ingest import (LinkageTables, apply_significance_filter, link_identities, load_universe,
                        read_table, INTENT_COLUMNS)
from fge.synth import SynthConfig, generate


def _write_small(d: Path, n: int = 10) -> dict[str, Path]:
    dates = pd.bdate_range("2021-03-01", periods=n).strftime("%Y-%m-%d")
    files = {
        "intents": "intent_id,person_id,company_id,file_date,proposed_shares,shares_held\n"
                   + "".join(f"I{i},P{i},7,{dates[i]},100,1000\n" for i in range(n)),
        "executions": "exec_id,person_id,company_id,transaction_date,shares_sold,price\n"
                      + "".join(f"E{i},P{i},7,{dates[i]},100,12.5\n" for i in range(n)),
        "security": "permco,date,total_return,price,volume,shares_outstanding,book_to_market\n"
                    + "".join(f"7,{dates[i]},0.01,12.5,1000,1e6,\n" for i in range(n)),
        "factors": "date,mkt_rf,smb,hml,umd,rf\n"
                   + "".join(f"{dates[i]},0.001,0,0,0,0.0001\n" for i in range(n)),
    }
    paths = {}
    for k, text in files.items():
        paths[k] = d / f"{k}.csv"
        paths[k].write_text(text)
    return paths


def _load(p):
    return load_universe(p["intents"], p["executions"], p["security"], p["factors"])


def test_load_well_formed(tmp_path):
    u = _load(_write_small(tmp_path))
    assert (len(u.intents), len(u.executions), len(u.security), len(u.factors)) == (10, 10, 10, 10)
    assert u.links is None
    assert u.security["book_to_market"].isna().all()


def test_duplicate_exec_id_named(tmp_path):
    p = _write_small(tmp_path)
    text = p["executions"].read_text().replace("E3,", "E2,")
    p["executions"].write_text(text)
    with pytest.raises(DuplicateKeyError, match="E2"):
        _load(p)


def test_bad_date_names_line_and_column(tmp_path):
    p = _write_small(tmp_path)
    lines = p["intents"].read_text().splitlines()
    lines[4] = lines[4].replace("2021-03-04", "2021-13-04")
    p["intents"].write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError) as err:
        _load(p)
    assert err.value.line == 5 and err.value.column == "file_date"
    assert "intents.csv" in str(err.value)


def test_missing_column(tmp_path):
    p = _write_small(tmp_path)
    p["factors"].write_text(p["factors"].read_text().replace(",umd,", ",mom,"))
    with pytest.raises(SchemaError) as err:
        _load(p)
    assert err.value.column == "umd" and err.value.line == 1


def test_non_numeric_value(tmp_path):
    p = _write_small(tmp_path)
    lines = p["executions"].read_text().splitlines()
    lines[2] = lines[2].replace(",100,", ",lots,")
    p["executions"].write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError) as err:
        _load(p)
    assert (err.value.line, err.value.column) == (3, "shares_sold")


def test_trading_day_missing_from_factors(tmp_path):
    p = _write_small(tmp_path)
    lines = p["factors"].read_text().splitlines()
    p["factors"].write_text("\n".join(lines[:3] + lines[4:]) + "\n")
    with pytest.raises(SchemaError, match="trading day"):
        _load(p)


def test_dates_round_trip(tmp_path):
    p = _write_small(tmp_path)
    raw = pd.read_csv(p["intents"], dtype=str)
    df = read_table(p["intents"], INTENT_COLUMNS)
    assert (df["file_date"].dt.strftime("%Y-%m-%d") == raw["file_date"]).all()


def test_deterministic_loads(tmp_path):
    p = _write_small(tmp_path)
    a, b = _load(p), _load(p)
    pd.testing.assert_frame_equal(a.security, b.security)
    pd.testing.assert_frame_equal(a.intents, b.intents)


def test_synth_round_trip(tmp_path):
    res = generate(SynthConfig(seed=3, n_firms=6, n_insiders=10, n_intents=30), tmp_path)
    u = load_universe(tmp_path / "intents.csv", tmp_path / "executions.csv",
                      tmp_path / "security_panel.csv", tmp_path / "factors.csv")
    for name in ("intents", "executions", "security", "factors"):
        got = getattr(u, name).reset_index(drop=True)
        want = getattr(res.universe, name).reset_index(drop=True)
        for col in want.columns:
            if pd.api.types.is_float_dtype(want[col]):
                np.testing.assert_array_equal(got[col].to_numpy(), want[col].to_numpy())
            else:
                assert (got[col].astype(str) == want[col].astype(str)).all(), (name, col)
    assert u.links is not None


def _links():
    return LinkageTables({"P1": "D1", "P2": "D2", "P3": "D3"},
                         {"D1": frozenset({"C1"}), "D2": frozenset({"C2"}), "D3": frozenset({"C9"})},
                         {"C1": 11, "C9": 99})


def test_link_stages():
    intents = pd.DataFrame({"intent_id": ["a", "b", "c", "d"], "person_id": ["P1", "P2", "P3", "P4"],
                            "company_id": ["C1", "C2", "C3", "C1"]})
    ex = intents.rename(columns={"intent_id": "exec_id"})
    li, le, (ri, re_) = link_identities(intents, ex, _links())
    # a: complete chain; b: company C2 has no permco; c: director D3 not at C3; d: unknown person
    assert li["intent_id"].tolist() == ["a"]
    assert li["permco"].tolist() == [11]
    assert (ri.stage1, ri.stage2, ri.stage3) == (1, 1, 1)
    assert ri.n_output + ri.stage1 + ri.stage2 + ri.stage3 == ri.n_input == 4
    assert re_.n_output == 1


def test_link_without_tables_takes_company_as_permco():
    intents = pd.DataFrame({"intent_id": ["a"], "person_id": ["P1"], "company_id": ["42"]})
    li, _, (ri, _) = link_identities(intents, intents.rename(columns={"intent_id": "exec_id"}), None)
    assert li["permco"].tolist() == [42] and ri.n_output == 1


def test_planted_stage3_breakage_exact():
    res = __import__("fge.synth", fromlist=["generate_universe"]).generate_universe(
        SynthConfig(seed=5, n_firms=20, n_insiders=100, n_intents=400, breakage_rate=0.1))
    u = res.universe
    _, _, (ri, _) = link_identities(u.intents, u.executions, u.links)
    assert ri.stage3 == 40 and ri.stage1 == 0 and ri.stage2 == 0


def test_significance_filter():
    df = pd.DataFrame({"signal_magnitude": [0.0, 0.5113, -0.1, np.nan, 0.2]})
    kept, removed = apply_significance_filter(df)
    assert removed == 3
    assert kept["signal_magnitude"].tolist() == [0.5113, 0.2]


def test_significance_filter_count_oracle(rng):
    sm = rng.normal(0.05, 0.1, 500)
    kept, removed = apply_significance_filter(pd.DataFrame({"signal_magnitude": sm}))
    assert removed == sum(1 for v in sm if v <= 0)
    assert len(kept) + removed == 500
