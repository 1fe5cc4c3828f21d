"""Loading, validation and identity linkage of the input tables.

All four core tables are headered UTF-8 CSV files. Dates are ISO-8601
(``YYYY-MM-DD``). Validation errors name file, line and column; line numbers
count the header as line 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DuplicateKeyError, SchemaError

log = logging.getLogger(__name__)

DATE_FORMAT = "%Y-%m-%d"

# column -> kind; "str" identifiers, "date", "int" (non-negative counts), "float"
INTENT_COLUMNS = {
    "intent_id": "str", "person_id": "str", "company_id": "str",
    "file_date": "date", "proposed_shares": "float", "shares_held": "float",
}
EXECUTION_COLUMNS = {
    "exec_id": "str", "person_id": "str", "company_id": "str",
    "transaction_date": "date", "shares_sold": "float", "price": "float",
}
SECURITY_COLUMNS = {
    "permco": "int", "date": "date", "total_return": "float", "price": "float",
    "volume": "float", "shares_outstanding": "float", "book_to_market": "float?",
}
FACTOR_COLUMNS = {
    "date": "date", "mkt_rf": "float", "smb": "float", "hml": "float", "umd": "float", "rf": "float",
}
LINK_FILES = {
    "person_to_director": ("links_person_director.csv", ("person_id", "director_id")),
    "director_to_company": ("links_director_company.csv", ("director_id", "company_id")),
    "company_to_permco": ("links_company_permco.csv", ("company_id", "permco")),
}


@dataclass(frozen=True)
class LinkageTables:
    person_to_director: dict[str, str]
    director_to_company: dict[str, frozenset[str]]
    company_to_permco: dict[str, int]


@dataclass(frozen=True)
class AttritionReport:
    table: str
    n_input: int
    stage1: int = 0
    stage2: int = 0
    stage3: int = 0

    @property
    def n_output(self) -> int:
        return self.n_input - self.stage1 - self.stage2 - self.stage3


@dataclass(frozen=True)
class Universe:
    intents: pd.DataFrame
    executions: pd.DataFrame
    security: pd.DataFrame
    factors: pd.DataFrame
    links: LinkageTables | None = None
    row_counts: dict[str, int] = field(default_factory=dict)


def _parse_column(df: pd.DataFrame, col: str, kind: str, path: Path) -> pd.Series:
    raw = df[col]
    optional = kind.endswith("?")
    kind = kind.rstrip("?")
    missing = raw.isna() | (raw.str.strip() == "")
    if missing.any() and not optional:
        line = int(np.argmax(missing.to_numpy())) + 2
        raise SchemaError(path, line, col, "missing value")
    if kind == "str":
        return raw.str.strip()
    if kind == "date":
        parsed = pd.to_datetime(raw, format=DATE_FORMAT, errors="coerce")
        bad = parsed.isna()
        if bad.any():
            i = int(np.argmax(bad.to_numpy()))
            raise SchemaError(path, i + 2, col, f"cannot parse date {raw.iloc[i]!r}")
        return parsed.astype("datetime64[s]").astype("datetime64[ns]")
    parsed = pd.to_numeric(raw.where(~missing), errors="coerce")
    bad = parsed.isna() & ~missing
    if bad.any():
        i = int(np.argmax(bad.to_numpy()))
        raise SchemaError(path, i + 2, col, f"expected a number, got {raw.iloc[i]!r}")
    # to_numeric's fast parser can be off by one ulp; reparse exactly
    exact = np.full(len(raw), np.nan)
    exact[~missing.to_numpy()] = raw[~missing].str.strip().to_numpy().astype(float)
    parsed = pd.Series(exact, index=raw.index)
    if kind == "int":
        vals = parsed.to_numpy()
        frac = vals != np.floor(vals)
        if frac.any():
            i = int(np.argmax(frac))
            raise SchemaError(path, i + 2, col, f"expected an integer, got {raw.iloc[i]!r}")
        return parsed.astype(np.int64)
    return parsed.astype(float)


def read_table(path, columns: dict[str, str], key: tuple[str, ...] | None = None) -> pd.DataFrame:
    """Read one headered CSV, check the header, parse and type every column."""
    path = Path(path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[], encoding="utf-8")
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise SchemaError(path, 1, missing[0], "column missing from header")
    out = pd.DataFrame({c: _parse_column(df, c, kind, path) for c, kind in columns.items()})
    if key is not None:
        dup = out.duplicated(list(key), keep="first")
        if dup.any():
            i = int(np.argmax(dup.to_numpy()))
            val = tuple(out.iloc[i][list(key)])
            shown = val[0] if len(val) == 1 else val
            raise DuplicateKeyError(f"{path}:{i + 2}: duplicate key {key} = {shown!r}")
    return out


def _check_positive(df: pd.DataFrame, col: str, path, strict: bool = True) -> None:
    vals = df[col].to_numpy()
    bad = ~(vals > 0) if strict else ~(vals >= 0)
    if bad.any():
        i = int(np.argmax(bad))
        rel = ">" if strict else ">="
        raise SchemaError(path, i + 2, col, f"value {vals[i]!r} violates {col} {rel} 0")


def load_links(directory) -> LinkageTables | None:
    directory = Path(directory)
    paths = {k: directory / fname for k, (fname, _) in LINK_FILES.items()}
    if not all(p.exists() for p in paths.values()):
        return None
    p2d = read_table(paths["person_to_director"], {"person_id": "str", "director_id": "str"}, key=("person_id",))
    d2c = read_table(paths["director_to_company"], {"director_id": "str", "company_id": "str"})
    c2p = read_table(paths["company_to_permco"], {"company_id": "str", "permco": "int"}, key=("company_id",))
    companies: dict[str, set[str]] = {}
    for d, c in zip(d2c["director_id"], d2c["company_id"]):
        companies.setdefault(d, set()).add(c)
    return LinkageTables(
        dict(zip(p2d["person_id"], p2d["director_id"])),
        {d: frozenset(cs) for d, cs in companies.items()},
        dict(zip(c2p["company_id"], (int(p) for p in c2p["permco"]))),
    )


def load_universe(intents_path, executions_path, security_path, factors_path, links_dir=None) -> Universe:
    intents = read_table(intents_path, INTENT_COLUMNS, key=("intent_id",))
    _check_positive(intents, "proposed_shares", intents_path)
    _check_positive(intents, "shares_held", intents_path, strict=False)
    executions = read_table(executions_path, EXECUTION_COLUMNS, key=("exec_id",))
    _check_positive(executions, "shares_sold", executions_path)
    _check_positive(executions, "price", executions_path)
    security = read_table(security_path, SECURITY_COLUMNS, key=("permco", "date"))
    _check_positive(security, "price", security_path)
    _check_positive(security, "volume", security_path, strict=False)
    factors = read_table(factors_path, FACTOR_COLUMNS, key=("date",))

    factors = factors.sort_values("date", kind="mergesort").reset_index(drop=True)
    security = security.sort_values(["permco", "date"], kind="mergesort").reset_index(drop=True)
    off_calendar = ~security["date"].isin(factors["date"])
    if off_calendar.any():
        i = int(np.argmax(off_calendar.to_numpy()))
        raise SchemaError(factors_path, "-", "date",
                          f"factor series has no row for trading day {security['date'].iloc[i].date()}")

    links = load_links(links_dir if links_dir is not None else Path(intents_path).parent)
    counts = {"intents": len(intents), "executions": len(executions),
              "security_panel": len(security), "factors": len(factors)}
    log.info("loaded universe: %s", counts)
    return Universe(intents, executions, security, factors, links, counts)


def link_identities(intents: pd.DataFrame, executions: pd.DataFrame, links: LinkageTables | None):
    """Resolve every filing to a permco through the three-stage bridge.

    Returns (linked intents, linked executions, [intent attrition, execution
    attrition]). Without linkage tables records are taken as pre-linked and
    ``company_id`` is read as the permco.
    """
    out, reports = [], []
    for name, df in (("intents", intents), ("executions", executions)):
        if links is None:
            linked = df.assign(permco=df["company_id"].astype(np.int64))
            reports.append(AttritionReport(name, len(df)))
            out.append(linked)
            continue
        director = df["person_id"].map(links.person_to_director)
        s1 = director.isna()
        owns = np.array([
            (not miss) and comp in links.director_to_company.get(d, frozenset())
            for d, comp, miss in zip(director, df["company_id"], s1)
        ], dtype=bool)
        s2 = ~s1 & ~owns
        permco = df["company_id"].map(links.company_to_permco)
        s3 = ~s1 & ~s2 & permco.isna()
        keep = ~(s1 | s2 | s3)
        linked = df.loc[keep].assign(permco=permco[keep].astype(np.int64)).reset_index(drop=True)
        reports.append(AttritionReport(name, len(df), int(s1.sum()), int(s2.sum()), int(s3.sum())))
        out.append(linked)
    return out[0], out[1], reports


def apply_significance_filter(outcomes: pd.DataFrame, column: str = "signal_magnitude"):
    """Drop records whose signal magnitude is not strictly positive.

    Returns (filtered frame, number removed). Missing magnitudes are removed too.
    """
    keep = outcomes[column].to_numpy(dtype=float) > 0
    return outcomes.loc[keep].reset_index(drop=True), int((~keep).sum())


def write_table(df: pd.DataFrame, path, columns) -> None:
    """Write with canonical date and float formatting (floats round-trip exactly)."""
    out = df[list(columns)].copy()
    for c in out.columns:
        if pd.api.types.is_datetime64_any_dtype(out[c]):
            out[c] = out[c].dt.strftime(DATE_FORMAT)
    out.to_csv(path, index=False, lineterminator="\n", float_format=None)
