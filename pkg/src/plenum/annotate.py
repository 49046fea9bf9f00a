"""Span annotation: calls to order, entities, party mentions, topics.

Calls to order are not marked in the raw data. They follow a regulated
phrase family, so detection is rule-based: a versioned set of
case-insensitive patterns applied sentence by sentence, and only to the
contributions of the presiding speaker. The shipped default rules live
in ``data/cto_rules.json`` and are meant to be refined by hand review.

Entity and topic annotators are pluggable. Real models are external
concerns; the shipped implementations are deterministic stubs (a
gazetteer entity tagger and a keyword-scoring topic classifier) plus a
subprocess adapter speaking a one-JSON-object-per-line protocol.
"""

from __future__ import annotations

import json
import re
import string
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from plenum import resources
from plenum.model import (
    PRESIDENCY_ACTION,
    AnnotationKind,
    Role,
    SpanAnnotation,
    SpeechContribution,
    TopicLabel,
)


class UnknownAnnotator(Exception):
    pass


class AnnotatorFailure(Exception):
    """An external annotator failed; the record stays unannotated."""


# ---------------------------------------------------------------------------
# Calls to order

@dataclass(frozen=True)
class CtoRule:
    rule_id: str
    pattern: re.Pattern

    @classmethod
    def compile(cls, rule_id: str, pattern: str) -> "CtoRule":
        return cls(rule_id=rule_id, pattern=re.compile(pattern, re.IGNORECASE))


class CtoRuleSet:
    """Ordered, versioned call-to-order patterns; first match wins."""

    def __init__(self, rules: Sequence[tuple[str, str]], version: str):
        seen = set()
        compiled = []
        for rule_id, pattern in rules:
            if rule_id in seen:
                raise ValueError(f"duplicate rule id {rule_id!r}")
            seen.add(rule_id)
            compiled.append(CtoRule.compile(rule_id, pattern))
        self.rules: tuple[CtoRule, ...] = tuple(compiled)
        self.version = version

    @classmethod
    def load(cls, path=None) -> "CtoRuleSet":
        cfg = resources.load_config_json("cto_rules.json", path)
        return cls([(r["id"], r["pattern"]) for r in cfg["rules"]], version=cfg["version"])


def detect_calls_to_order(record: SpeechContribution, rules: CtoRuleSet) -> list[SpanAnnotation]:
    """Mark whole sentences of presiding speakers that match a rule.

    Non-president records always yield an empty list: the phrase family
    is only meaningful in the chair's procedural speech, and applying it
    elsewhere would flag quotations and reported speech.
    """
    if record.role is not Role.PRESIDENT:
        return []
    spans = []
    for sentence in record.sentences:
        surface = record.text[sentence.start : sentence.end]
        for rule in rules.rules:
            if rule.pattern.search(surface):
                spans.append(
                    SpanAnnotation(
                        kind=AnnotationKind.CALL_TO_ORDER,
                        start=sentence.start,
                        end=sentence.end,
                        annotator=rules.version,
                    )
                )
                break
    return spans


# ---------------------------------------------------------------------------
# Pluggable annotators

class Annotator:
    """Interface: deterministic per (id, input) record annotation.

    ``kind`` is "ner" (returns entity spans) or "topic" (returns a
    single topic label).
    """

    id: str
    kind: str

    def annotate(self, record: SpeechContribution) -> list[SpanAnnotation] | TopicLabel:
        raise NotImplementedError


class GazetteerNer(Annotator):
    """Entity tagger backed by an explicit surface-form gazetteer.

    Case-sensitive exact matching on word boundaries; overlapping
    candidates resolve to the earliest, then longest span.
    """

    kind = "ner"

    def __init__(self, annotator_id: str, gazetteer: dict[str, list[str]]):
        self.id = annotator_id
        entries = []
        for label, surfaces in sorted(gazetteer.items()):
            for surface in surfaces:
                if surface:
                    entries.append((re.compile(rf"(?<!\w){re.escape(surface)}(?!\w)"), label))
        self._entries = entries

    def annotate(self, record: SpeechContribution) -> list[SpanAnnotation]:
        candidates = []
        for pattern, label in self._entries:
            for m in pattern.finditer(record.text):
                candidates.append((m.start(), -(m.end() - m.start()), m.end(), label))
        candidates.sort()
        spans: list[SpanAnnotation] = []
        taken_until = -1
        for start, _neg_len, end, label in candidates:
            if start >= taken_until:
                spans.append(SpanAnnotation(AnnotationKind.NER_ENTITY, start, end, label=label, annotator=self.id))
                taken_until = end
        return spans


class KeywordTopicClassifier(Annotator):
    """Deterministic topic stub: counts keyword hits per topic.

    Confidence is the winning topic's share of all keyword hits; when
    nothing matches, the alphabetically first label is returned with
    confidence 0.0 so the output stays within the closed vocabulary.
    """

    kind = "topic"

    def __init__(self, annotator_id: str, topics: dict[str, list[str]]):
        self.id = annotator_id
        self._topics = {
            label: [k.casefold() for k in keywords] for label, keywords in sorted(topics.items())
        }

    def annotate(self, record: SpeechContribution) -> TopicLabel:
        folded = record.text.casefold()
        scores = {
            label: sum(folded.count(keyword) for keyword in keywords)
            for label, keywords in self._topics.items()
        }
        total = sum(scores.values())
        if total == 0:
            return TopicLabel(label=min(self._topics), confidence=0.0)
        top = max(scores.values())
        winner = min(label for label, score in scores.items() if score == top)
        return TopicLabel(label=winner, confidence=top / total)


class ExternalAnnotator(Annotator):
    """Adapter for out-of-process annotators.

    Protocol: one JSON object per line on stdin
    (``{"id": ..., "text": ...}``), one per line on stdout — either
    ``{"id": ..., "spans": [{"start","end","label"}, ...]}`` for ner or
    ``{"id": ..., "topic": {"label","confidence"}}`` for topic.
    """

    def __init__(self, annotator_id: str, kind: str, argv: Sequence[str], timeout: float = 60.0):
        self.id = annotator_id
        self.kind = kind
        self.argv = tuple(argv)
        self.timeout = timeout

    def annotate(self, record: SpeechContribution) -> list[SpanAnnotation] | TopicLabel:
        request = json.dumps({"id": record.id, "text": record.text}, ensure_ascii=False)
        try:
            proc = subprocess.run(
                self.argv,
                input=request + "\n",
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise AnnotatorFailure(f"{self.id}: {exc}") from exc
        if proc.returncode != 0:
            raise AnnotatorFailure(f"{self.id}: exit {proc.returncode}: {proc.stderr.strip()}")
        try:
            reply = json.loads(proc.stdout.strip().splitlines()[-1])
        except (IndexError, json.JSONDecodeError) as exc:
            raise AnnotatorFailure(f"{self.id}: unparseable reply") from exc
        if self.kind == "topic":
            topic = reply.get("topic")
            if not isinstance(topic, dict):
                raise AnnotatorFailure(f"{self.id}: reply lacks topic object")
            return TopicLabel(label=topic["label"], confidence=float(topic["confidence"]))
        spans = reply.get("spans")
        if not isinstance(spans, list):
            raise AnnotatorFailure(f"{self.id}: reply lacks spans list")
        return [
            SpanAnnotation(AnnotationKind.NER_ENTITY, int(s["start"]), int(s["end"]),
                           label=str(s.get("label", "")), annotator=self.id)
            for s in spans
        ]


def builtin_annotators(gazetteer_path=None, topics_path=None) -> dict[str, Annotator]:
    """The shipped deterministic annotators, keyed by id."""
    gazetteers = resources.load_config_json("gazetteer.json", gazetteer_path)["annotators"]
    topics_cfg = resources.load_config_json("topics.json", topics_path)
    registry: dict[str, Annotator] = {}
    for annotator_id, sections in gazetteers.items():
        registry[annotator_id] = GazetteerNer(annotator_id, sections)
    registry["topic-keywords"] = KeywordTopicClassifier(
        "topic-keywords", {t["label"]: t["keywords"] for t in topics_cfg["topics"]}
    )
    return registry


def run_annotator(
    record: SpeechContribution,
    annotator: Annotator | str,
    registry: dict[str, Annotator] | None = None,
) -> list[SpanAnnotation] | TopicLabel:
    """Run one annotator over one record.

    Topic annotators are always overridden to the reserved chair label
    for president records: their contributions are procedural moderation,
    not policy content, whatever a classifier may claim.
    """
    if isinstance(annotator, str):
        if registry is None:
            registry = builtin_annotators()
        try:
            annotator = registry[annotator]
        except KeyError:
            raise UnknownAnnotator(annotator) from None
    if annotator.kind == "topic" and record.role is Role.PRESIDENT:
        return TopicLabel(label=PRESIDENCY_ACTION, confidence=1.0)
    return annotator.annotate(record)


# ---------------------------------------------------------------------------
# Party mentions

_PUNCT_DROP = str.maketrans("", "", ".'’`")
_PUNCT_SPACE = str.maketrans({c: " " for c in string.punctuation if c not in ".'’`"})


def fold_party(raw: str) -> str:
    """Case-fold, trim, and strip punctuation for alias comparison.

    Abbreviation dots and apostrophes vanish ("F.D.P." -> "fdp"), other
    punctuation becomes a space ("CDU/CSU" -> "cdu csu").
    """
    folded = raw.casefold().translate(_PUNCT_DROP).translate(_PUNCT_SPACE)
    return " ".join(folded.split())


class PartyAliasTable:
    """Folded alias -> canonical party id, with display names."""

    def __init__(self, parties: Iterable[dict]):
        self.display: dict[str, str] = {}
        self.full_name: dict[str, str] = {}
        self.alias_to_id: dict[str, str] = {}
        for party in parties:
            pid = party["id"]
            self.display[pid] = party["display"]
            self.full_name[pid] = party.get("name", party["display"])
            aliases = set(party["aliases"]) | {pid, party["display"]}
            for alias in aliases:
                key = fold_party(alias)
                if not key:
                    raise ValueError(f"party {pid}: alias {alias!r} folds to nothing")
                if self.alias_to_id.get(key, pid) != pid:
                    raise ValueError(f"alias {alias!r} claimed by {self.alias_to_id[key]} and {pid}")
                self.alias_to_id[key] = pid
            if fold_party(party["display"]) not in self.alias_to_id:
                raise ValueError(f"party {pid}: display form must be an alias")

    @classmethod
    def load(cls, path=None) -> "PartyAliasTable":
        cfg = resources.load_config_json("party_aliases.json", path)
        return cls(cfg["parties"])

    def lookup(self, raw: str) -> str | None:
        return self.alias_to_id.get(fold_party(raw))


def match_party_mentions(
    spans: Sequence[SpanAnnotation],
    aliases: PartyAliasTable,
    text: str,
) -> list[SpanAnnotation]:
    """Derive party_mention spans from ORG entity spans via alias lookup."""
    mentions = []
    for span in spans:
        if span.kind is not AnnotationKind.NER_ENTITY or span.label != "ORG":
            continue
        party_id = aliases.lookup(text[span.start : span.end])
        if party_id is not None:
            mentions.append(
                SpanAnnotation(
                    kind=AnnotationKind.PARTY_MENTION,
                    start=span.start,
                    end=span.end,
                    label=party_id,
                    annotator="party-matcher",
                )
            )
    mentions.sort(key=lambda s: (s.start, s.end))
    return mentions


# ---------------------------------------------------------------------------
# Record-level orchestration

def annotate_record(
    record: SpeechContribution,
    *,
    rules: CtoRuleSet,
    annotators: Sequence[Annotator],
    aliases: PartyAliasTable,
) -> SpeechContribution:
    """Apply rule, entity, party, and topic annotation to one record."""
    annotations = list(record.annotations)
    annotations.extend(detect_calls_to_order(record, rules))
    topic = record.topic
    ner_spans: list[SpanAnnotation] = []
    for annotator in annotators:
        result = run_annotator(record, annotator)
        if isinstance(result, TopicLabel):
            topic = result
        else:
            ner_spans.extend(result)
    annotations.extend(ner_spans)
    annotations.extend(match_party_mentions(ner_spans, aliases, record.text))
    if record.role is Role.PRESIDENT and topic is None:
        topic = TopicLabel(label=PRESIDENCY_ACTION, confidence=1.0)
    annotations.sort(key=lambda a: (a.start, a.end, a.kind.value, a.annotator))
    return replace(record, annotations=tuple(annotations), topic=topic)


def annotate_records(
    records: Sequence[SpeechContribution],
    *,
    rules: CtoRuleSet,
    annotators: Sequence[Annotator],
    aliases: PartyAliasTable,
    max_workers: int = 4,
) -> list[SpeechContribution]:
    """Annotate records in parallel, preserving input order.

    Annotation is pure per record given frozen configuration, so a
    bounded thread pool is safe; the bound also caps concurrent external
    annotator processes.
    """
    def work(record: SpeechContribution) -> SpeechContribution:
        return annotate_record(record, rules=rules, annotators=annotators, aliases=aliases)

    if max_workers <= 1 or len(records) <= 1:
        return [work(r) for r in records]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(work, records))
