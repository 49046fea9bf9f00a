"""Loaders for the packaged default configuration files.

Every pipeline default (abbreviation lexicon, rule sets, alias tables,
period calendar, gazetteers, denylist) lives as a plain data file under
``plenum/data`` so that researchers can inspect and override each one
without touching code. All loaders accept an optional filesystem path
that replaces the packaged default.
"""

from __future__ import annotations

import json
from datetime import date
from functools import lru_cache
from importlib import resources as importlib_resources
from pathlib import Path


def _read_packaged(name: str) -> str:
    return importlib_resources.files("plenum").joinpath("data", name).read_text("utf-8")


def read_config_text(name: str, path: str | Path | None = None) -> str:
    if path is not None:
        return Path(path).read_text("utf-8")
    return _read_packaged(name)


def load_config_json(name: str, path: str | Path | None = None) -> dict:
    return json.loads(read_config_text(name, path))


def load_abbreviations(path: str | Path | None = None) -> frozenset[str]:
    """Abbreviation lexicon: one entry per line, '#' starts a comment."""
    entries = []
    for line in read_config_text("abbreviations.txt", path).splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return frozenset(entries)


def load_denylist(path: str | Path | None = None) -> tuple[str, ...]:
    """Query-log denylist: substrings, compared casefolded."""
    entries = []
    for line in read_config_text("denylist.txt", path).splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line.casefold())
    return tuple(entries)


def load_period_calendar(path: str | Path | None = None) -> dict[int, tuple[date, date]]:
    """Map legislative period -> closed (start, end) date interval."""
    raw = load_config_json("period_calendar.json", path)["periods"]
    calendar = {
        int(period): (date.fromisoformat(lo), date.fromisoformat(hi))
        for period, (lo, hi) in raw.items()
    }
    ordered = sorted(calendar.items())
    prev_end = None
    for period, (lo, hi) in ordered:
        if lo > hi:
            raise ValueError(f"period {period}: interval start after end")
        if prev_end is not None and lo <= prev_end:
            raise ValueError(f"period {period}: overlaps previous period")
        prev_end = hi
    return dict(ordered)


def load_topic_labels(path: str | Path | None = None) -> tuple[str, ...]:
    """The closed topic vocabulary: 21 policy topics plus the chair label."""
    cfg = load_config_json("topics.json", path)
    labels = [t["label"] for t in cfg["topics"]] + [cfg["presidency_label"]]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate topic labels in configuration")
    return tuple(labels)


@lru_cache(maxsize=1)
def default_period_calendar() -> dict[int, tuple[date, date]]:
    return load_period_calendar()


@lru_cache(maxsize=1)
def default_topic_labels() -> tuple[str, ...]:
    return load_topic_labels()


@lru_cache(maxsize=1)
def default_abbreviations() -> frozenset[str]:
    return load_abbreviations()


@lru_cache(maxsize=1)
def export_schema() -> dict:
    return load_config_json("export_schema.json")
