"""Rule-based sentence segmentation for German plenary transcripts.

Deterministic and auditable by design: a terminator character ends a
sentence unless an exception applies, and the only exceptions are an
editable abbreviation lexicon, numeric ``3.2``-style contexts, and
parenthesized interjections (which are never split apart). Downstream
annotation is span-based on raw offsets, so occasional imperfect splits
degrade gracefully instead of corrupting data.
"""

from __future__ import annotations

from typing import Collection

from plenum import resources
from plenum.model import Sentence

TERMINATORS = frozenset(".!?:")


def _dot_contexts(abbreviations: Collection[str]) -> list[tuple[str, list[int]]]:
    # For each lexicon entry, every contained dot position is protected,
    # so multi-word entries like "z. B." shield both of their dots.
    out = []
    for entry in abbreviations:
        dots = [i for i, ch in enumerate(entry) if ch == "."]
        if dots:
            out.append((entry.casefold(), dots))
    return out


def _is_abbreviation_dot(text: str, i: int, contexts: list[tuple[str, list[int]]]) -> bool:
    folded = text.casefold()
    for entry, dots in contexts:
        for d in dots:
            start = i - d
            if start < 0 or start + len(entry) > len(text):
                continue
            if folded[start : start + len(entry)] != entry:
                continue
            if start > 0 and (text[start - 1].isalnum() or text[start - 1] == "."):
                continue  # "Zimmernr." must not be shielded by lexicon entry "Nr."
            return True
    return False


def segment(text: str, abbreviations: Collection[str] | None = None) -> list[Sentence]:
    """Split ``text`` into ordered, non-overlapping sentence ranges.

    The emitted ranges tile the text: every non-whitespace code point
    falls into exactly one range. Empty or whitespace-only input yields
    an empty list.
    """
    if abbreviations is None:
        abbreviations = resources.default_abbreviations()
    contexts = _dot_contexts(abbreviations)

    n = len(text)
    breaks: list[int] = []
    depth = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif ch in TERMINATORS and depth == 0:
            numeric = ch == "." and 0 < i < n - 1 and text[i - 1].isdigit() and text[i + 1].isdigit()
            if not numeric and not (ch == "." and _is_abbreviation_dot(text, i, contexts)):
                while i + 1 < n and text[i + 1] in TERMINATORS:
                    i += 1  # "?!" and "..." close a single sentence
                breaks.append(i + 1)
        i += 1
    breaks.append(n)

    sentences: list[Sentence] = []
    prev = 0
    for b in breaks:
        chunk = text[prev:b]
        lead = len(chunk) - len(chunk.lstrip())
        trail = len(chunk.rstrip())
        if trail > lead:
            sentences.append(Sentence(index=len(sentences), start=prev + lead, end=prev + trail))
        prev = b
    return sentences


def sentence_texts(text: str, sentences: list[Sentence]) -> list[str]:
    return [text[s.start : s.end] for s in sentences]
