"""Speaker disambiguation against the MP master database.

Raw transcripts carry inconsistent speaker names (spelling errors,
first-name variants) and party names in both long and abbreviated
forms. Resolution is rule-based and deliberately conservative: an
identifier is assigned only when exactly one candidate survives, in the
fixed rule order

    unique surname -> unique (surname, first name) -> tenure alignment,

and anything still ambiguous stays ambiguous rather than risking a
wrong identity. Spelling correction is an explicit configuration map,
not fuzzy matching, for the same reason.
"""

from __future__ import annotations

import csv
import unicodedata
from dataclasses import dataclass, replace
from datetime import date as Date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from plenum import resources
from plenum.annotate import PartyAliasTable
from plenum.model import SpeakerRef, SpeechContribution


class TablesNotLoaded(Exception):
    pass


@dataclass(frozen=True)
class Tenure:
    period: int
    start: Date
    end: Date


@dataclass(frozen=True)
class PartySpan:
    party_id: str
    start: Date
    end: Date


@dataclass(frozen=True)
class MpRecord:
    mp_id: str
    surname: str
    first_name: str
    tenures: tuple[Tenure, ...]
    party_history: tuple[PartySpan, ...] = ()

    def __post_init__(self):
        ordered = sorted(self.tenures, key=lambda t: t.start)
        prev_end = None
        for t in ordered:
            if t.start > t.end:
                raise ValueError(f"{self.mp_id}: tenure start after end")
            if prev_end is not None and t.start <= prev_end:
                raise ValueError(f"{self.mp_id}: overlapping tenures")
            prev_end = t.end
        object.__setattr__(self, "tenures", tuple(ordered))

    def in_tenure(self, day: Date) -> bool:
        return any(t.start <= day <= t.end for t in self.tenures)


def fold_name(raw: str) -> str:
    """Case- and diacritic-fold a name for tolerant comparison."""
    folded = raw.strip().casefold().replace("ß", "ss")
    decomposed = unicodedata.normalize("NFD", folded)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


class ResolutionTables:
    """Immutable lookup structures built once from the master data."""

    def __init__(
        self,
        mps: Iterable[MpRecord],
        alias_table: PartyAliasTable,
        period_calendar: Mapping[int, tuple[Date, Date]],
        misspellings: Mapping[str, str] | None = None,
        nicknames: Mapping[str, str] | None = None,
    ):
        self.mps: tuple[MpRecord, ...] = tuple(mps)
        self.alias_table = alias_table
        self.period_calendar = dict(period_calendar)
        self.misspellings = dict(misspellings or {})
        self.nicknames = dict(nicknames or {})
        self.by_surname: dict[str, list[MpRecord]] = {}
        self.by_name: dict[tuple[str, str], list[MpRecord]] = {}
        for mp in self.mps:
            s = fold_name(mp.surname)
            self.by_surname.setdefault(s, []).append(mp)
            self.by_name.setdefault((s, fold_name(mp.first_name)), []).append(mp)

    def normalize_surname(self, raw: str) -> str:
        folded = fold_name(raw)
        return self.misspellings.get(folded, folded)

    def normalize_first_name(self, raw: str) -> str:
        folded = fold_name(raw)
        return self.nicknames.get(folded, folded)


def load_tables(
    mp_csv: str | Path | None = None,
    *,
    alias_path=None,
    calendar_path=None,
    normalization_path=None,
) -> ResolutionTables:
    """Build resolution tables from the MP master CSV and shipped config.

    CSV columns: mp_id, surname, first_name, period, start_date,
    end_date, party_id — one row per tenure.
    """
    norm = resources.load_config_json("name_normalization.json", normalization_path)
    return ResolutionTables(
        mps=load_mp_csv(mp_csv),
        alias_table=PartyAliasTable.load(alias_path),
        period_calendar=resources.load_period_calendar(calendar_path),
        misspellings=norm.get("misspellings", {}),
        nicknames=norm.get("nicknames", {}),
    )


def load_mp_csv(path: str | Path | None = None) -> list[MpRecord]:
    text = resources.read_config_text("mp_database.csv", path)
    rows = list(csv.DictReader(text.splitlines()))
    grouped: dict[str, dict] = {}
    for row in rows:
        entry = grouped.setdefault(
            row["mp_id"],
            {"surname": row["surname"], "first_name": row["first_name"], "tenures": [], "parties": []},
        )
        start = Date.fromisoformat(row["start_date"])
        end = Date.fromisoformat(row["end_date"])
        entry["tenures"].append(Tenure(int(row["period"]), start, end))
        if row.get("party_id"):
            entry["parties"].append(PartySpan(row["party_id"], start, end))
    return [
        MpRecord(
            mp_id=mp_id,
            surname=entry["surname"],
            first_name=entry["first_name"],
            tenures=tuple(entry["tenures"]),
            party_history=tuple(entry["parties"]),
        )
        for mp_id, entry in grouped.items()
    ]


def resolve_speaker(ref: SpeakerRef, day: Date, tables: ResolutionTables) -> SpeakerRef:
    """Assign an MP identifier when exactly one candidate survives.

    Rule order: (a) unique surname; (b) unique (surname, first name);
    (c) among the remaining candidates, exactly one whose documented
    tenure contains the speech date. When several candidates remain or
    none match, no identifier is assigned and ``ambiguous`` records
    whether a candidate set of size >= 2 existed.
    """
    if tables is None:
        raise TablesNotLoaded("resolution tables not loaded")

    surname = tables.normalize_surname(ref.surname)
    candidates = tables.by_surname.get(surname, [])

    if not candidates:
        return replace(ref, resolved_mp_id=None, ambiguous=False)
    if len(candidates) == 1:
        return replace(ref, resolved_mp_id=candidates[0].mp_id, ambiguous=False)

    pool = candidates
    if ref.first_name.strip():
        first = tables.normalize_first_name(ref.first_name)
        narrowed = [mp for mp in candidates if fold_name(mp.first_name) == first]
        if len(narrowed) == 1:
            return replace(ref, resolved_mp_id=narrowed[0].mp_id, ambiguous=False)
        if not narrowed:
            return replace(ref, resolved_mp_id=None, ambiguous=True)
        pool = narrowed

    in_tenure = [mp for mp in pool if mp.in_tenure(day)]
    if len(in_tenure) == 1:
        return replace(ref, resolved_mp_id=in_tenure[0].mp_id, ambiguous=False)
    return replace(ref, resolved_mp_id=None, ambiguous=True)


def normalize_party(raw: str, aliases: PartyAliasTable) -> str | None:
    """Map a raw party string to its canonical id, or None if unknown.

    Unresolved strings are left untouched by callers; the raw form is
    always preserved on the record.
    """
    if not raw.strip():
        return None
    return aliases.lookup(raw)


def resolve_contribution(record: SpeechContribution, tables: ResolutionTables) -> SpeechContribution:
    """Resolve the record's speaker and normalize its party reference."""
    speaker = resolve_speaker(record.speaker, record.date, tables)
    party_id = normalize_party(speaker.raw_party, tables.alias_table)
    if party_id is not None:
        speaker = replace(speaker, resolved_party_id=party_id)
    return replace(record, speaker=speaker)


def resolve_records(
    records: Sequence[SpeechContribution], tables: ResolutionTables
) -> list[SpeechContribution]:
    return [resolve_contribution(r, tables) for r in records]
