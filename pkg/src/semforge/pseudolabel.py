"""Transcript -> parse pseudo-labelers and intent match accuracy."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import httpx

from .parse_core import ParseError, ParseNode, SeqlogicalParse, extract_transcript, parse_seqlogical, top_intent


class LabelerError(Exception):
    pass


class LabelerUnavailable(LabelerError):
    pass


class InconsistentTranscript(LabelerError):
    pass


class EmptyInput(ValueError):
    pass


def _read(path, name):
    if path is None:
        return resources.files("semforge").joinpath(f"data/{name}").read_text("utf-8")
    return Path(path).read_text("utf-8")


@dataclass(frozen=True)
class IntentRule:
    intent: str
    # each alternative is a set of words that must all occur
    alternatives: tuple[frozenset[str], ...]

    def matches(self, words: set[str]) -> bool:
        return any(alt <= words for alt in self.alternatives)


def parse_keyword_rules(text: str) -> tuple[list[IntentRule], str]:
    rules, default = [], "IN:UNSUPPORTED"
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "DEFAULT":
            default = rest[0]
        else:
            rules.append(IntentRule(head, tuple(frozenset(r.split("+")) for r in rest)))
    return rules, default


def parse_gazetteer(text: str) -> list[tuple[str, tuple[str, ...]]]:
    entries = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        slot, phrase = line.split("\t", 1)
        entries.append((slot.strip(), tuple(phrase.split())))
    # longest phrase first, then file order
    return sorted(entries, key=lambda e: -len(e[1]))


class RuleMockLabeler:
    """Keyword-table intent plus gazetteer slot tagging; fully offline."""

    id = "rule-mock"

    def __init__(self, keywords_path=None, gazetteer_path=None):
        self.rules, self.default_intent = parse_keyword_rules(_read(keywords_path, "labeler_keywords.txt"))
        self.gazetteer = parse_gazetteer(_read(gazetteer_path, "labeler_gazetteer.txt"))
        self._by_first: dict[str, list] = {}
        for slot, phrase in self.gazetteer:
            self._by_first.setdefault(phrase[0], []).append((slot, phrase))

    def intent_for(self, words: list[str]) -> str:
        present = set(words)
        for rule in self.rules:
            if rule.matches(present):
                return rule.intent
        return self.default_intent

    def label(self, transcript: str) -> SeqlogicalParse:
        words = transcript.split()
        if not words:
            raise InconsistentTranscript("transcript has no tokens")
        children = []
        i = 0
        while i < len(words):
            for slot, phrase in self._by_first.get(words[i], ()):
                if tuple(words[i:i + len(phrase)]) == phrase:
                    children.append(ParseNode.slot(slot, [ParseNode.token(w) for w in phrase]))
                    i += len(phrase)
                    break
            else:
                children.append(ParseNode.token(words[i]))
                i += 1
        return SeqlogicalParse(ParseNode.intent(self.intent_for(words), children))


class RemoteLabeler:
    """POSTs ``{"transcript": ...}`` and expects ``{"parse": "<seqlogical>"}`` back."""

    def __init__(self, endpoint: str, client: httpx.Client | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.client = client or httpx.Client(timeout=timeout)
        self.id = f"remote:{endpoint}"

    def label(self, transcript: str) -> SeqlogicalParse:
        if not transcript.split():
            raise InconsistentTranscript("transcript has no tokens")
        try:
            resp = self.client.post(self.endpoint, json={"transcript": transcript})
            resp.raise_for_status()
            text = resp.json()["parse"]
        except (httpx.HTTPError, ValueError, KeyError, TypeError) as exc:
            raise LabelerUnavailable(f"{type(exc).__name__}: {exc}") from exc
        try:
            parse = parse_seqlogical(text)
        except ParseError as exc:
            raise InconsistentTranscript(f"labeler returned an invalid parse: {exc}") from None
        if extract_transcript(parse) != " ".join(transcript.split()):
            raise InconsistentTranscript("labeler parse covers different words than the transcript")
        return parse


def make_labeler(backend: str = "rule-mock", endpoint: str | None = None, **paths):
    if backend == "rule-mock":
        return RuleMockLabeler(**paths)
    if backend == "remote":
        if not endpoint:
            raise ValueError("the remote labeler needs an endpoint URL")
        return RemoteLabeler(endpoint)
    raise ValueError(f"unknown labeler backend {backend!r}")


def intent_match_accuracy(items) -> float:
    """Fraction of ``(desired_intent, parse)`` pairs whose top intent matches."""
    items = list(items)
    if not items:
        raise EmptyInput("no items to score")
    return sum(top_intent(parse) == desired for desired, parse in items) / len(items)
