"""Prompt construction for the three generation strategies, and response parsing.

Templates live in ``data/templates`` with ``{{placeholder}}`` markers.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .parse_core import Ontology, SeqlogicalParse, load_ontology, parse_seqlogical, serialize, top_intent

IWP = "IWP"
EP_TRANSCRIPT = "EP_TRANSCRIPT"
EP_PARSE = "EP_PARSE"
REPROMPT = "REPROMPT"
KINDS = (IWP, EP_TRANSCRIPT, EP_PARSE, REPROMPT)

DEFAULT_N = {IWP: 40, EP_TRANSCRIPT: 60, EP_PARSE: 30}
MAX_EP_TRANSCRIPT_EXAMPLES = 4
MAX_EP_PARSE_EXAMPLES = 3

_PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")


class PromptError(ValueError):
    pass


class UnknownIntent(PromptError):
    pass


class TooManyExamples(PromptError):
    pass


class NoExamples(PromptError):
    pass


class IntentMismatch(PromptError):
    pass


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    text = resources.files("semforge").joinpath(f"data/templates/{name}.txt").read_text("utf-8")
    return text[:-1] if text.endswith("\n") else text


def render(template: str, **values) -> str:
    def fill(match):
        key = match.group(1)
        if key not in values:
            raise PromptError(f"no value for placeholder {key!r}")
        return str(values[key])

    return _PLACEHOLDER.sub(fill, template)


@lru_cache(maxsize=None)
def default_intent_descriptions() -> tuple[tuple[str, str], ...]:
    text = resources.files("semforge").joinpath("data/intent_descriptions.txt").read_text("utf-8")
    out = []
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            intent, description = line.split("\t", 1)
            out.append((intent.strip(), description.strip()))
    return tuple(out)


@dataclass(frozen=True)
class PromptSpec:
    kind: str
    rendered: str
    n_requested: int
    target_intent: str | None = None
    intent_word: str | None = None
    slots: tuple[str, ...] = ()
    examples: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "target_intent": self.target_intent,
            "intent_word": self.intent_word,
            "slots": list(self.slots),
            "examples": list(self.examples),
            "n_requested": self.n_requested,
        }


def _plural(n: int, singular: str, plural: str) -> str:
    return f"{n} {singular if n == 1 else plural}"


def _check_n(n: int):
    if n < 1:
        raise PromptError(f"n must be positive, got {n}")


def _numbered(items) -> str:
    return "\n".join(f"{i}. {item}" for i, item in enumerate(items, 1))


def build_iwp_prompt(intent: str, intent_word: str, intent_descriptions=None, n: int = DEFAULT_N[IWP],
                     ontology: Ontology | None = None) -> PromptSpec:
    """Intent-word prompt: ask for ``n`` utterances of ``intent`` using ``intent_word``."""
    _check_n(n)
    ontology = ontology or load_ontology()
    if intent not in ontology.intents:
        raise UnknownIntent(f"{intent} is not in the ontology")
    if not intent_word.strip():
        raise PromptError("intent word must be non-empty")
    descriptions = default_intent_descriptions() if intent_descriptions is None else tuple(intent_descriptions)
    if not descriptions:
        raise PromptError("at least one intent description is required")
    text = render(
        load_template("iwp"),
        descriptions=_numbered(f"{label} - {desc}" for label, desc in descriptions),
        application=ontology.domain_of(intent) or "assistant",
        intent=intent,
        word=intent_word,
        n_utterances=_plural(n, "utterance", "utterances"),
        verb="is" if n == 1 else "are",
    )
    return PromptSpec(IWP, text, n, target_intent=intent, intent_word=intent_word)


def build_ep_transcript_prompt(examples, n: int = DEFAULT_N[EP_TRANSCRIPT], target_intent: str | None = None) -> PromptSpec:
    """Exemplar prompt over 1-4 example transcripts.

    ``target_intent`` is bookkeeping for intent-match scoring and does not
    appear in the prompt.
    """
    _check_n(n)
    examples = tuple(examples)
    if not examples:
        raise NoExamples("at least one example transcript is required")
    if len(examples) > MAX_EP_TRANSCRIPT_EXAMPLES:
        raise TooManyExamples(f"{len(examples)} examples given, at most {MAX_EP_TRANSCRIPT_EXAMPLES} allowed")
    text = render(
        load_template("ep_transcript"),
        n_sentences=_plural(n, "more sentence", "more sentences"),
        verb="is" if n == 1 else "are",
        examples=_numbered(examples),
    )
    return PromptSpec(EP_TRANSCRIPT, text, n, target_intent=target_intent, examples=examples)


def build_ep_parse_prompt(intent: str, slots, examples, n: int = DEFAULT_N[EP_PARSE]) -> PromptSpec:
    """Exemplar prompt asking for seqlogical parses of one intent-slot combination."""
    _check_n(n)
    parses = [parse_seqlogical(e) if isinstance(e, str) else e for e in examples]
    if len(parses) > MAX_EP_PARSE_EXAMPLES:
        raise TooManyExamples(f"{len(parses)} examples given, at most {MAX_EP_PARSE_EXAMPLES} allowed")
    for parse in parses:
        if top_intent(parse) != intent:
            raise IntentMismatch(f"example {serialize(parse)!r} does not have intent {intent}")
    slots = tuple(sorted(set(slots)))
    rendered_examples = tuple(serialize(p) for p in parses)
    if rendered_examples:
        examples_block = " Here are some examples:\n" + _numbered(rendered_examples)
    else:
        examples_block = ""
    text = render(
        load_template("ep_parse"),
        examples_block=examples_block,
        intent=intent,
        slot_phrase=("any of the slots " + ", ".join(slots)) if slots else "no slots",
        format_example="[" + " ".join([intent, *(f"[{s}]" for s in slots)]) + " ]",
        like_examples=", like the examples above" if rendered_examples else "",
        n_sentences=_plural(n, "similar sentence", "similar sentences"),
    )
    return PromptSpec(EP_PARSE, text, n, target_intent=intent, slots=slots, examples=rendered_examples)


# -- responses ----------------------------------------------------------------

_ENUMERATION = re.compile(r"^\s*(?:\(?\d+\s*(?:\.(?!\d)|\)|:|-(?=\s|$))|[-*•](?=\s))\s*")
_PREAMBLE = re.compile(
    r"^(sure|certainly|of course|okay|ok\b|here (are|is)|below (are|is)|i hope|note\b|these are|"
    r"i have generated|as requested|let me know)",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class GenerationBatch:
    spec: PromptSpec | None
    raw_response: str
    lines: tuple[str, ...]
    rejected_lines: tuple[tuple[str, str], ...] = field(default=())


def strip_enumeration(line: str) -> tuple[str, bool]:
    """Remove leading list markers (repeatedly); report whether any were found."""
    found = False
    while True:
        match = _ENUMERATION.match(line)
        if not match or match.end() == 0:
            return line.strip(), found
        line = line[match.end():]
        found = True


def parse_numbered_response(raw: str):
    """Split an LLM response into clean lines.

    Returns ``(lines, rejected)`` where ``rejected`` holds ``(line, reason)``.
    Blank lines are dropped silently.
    """
    lines, rejected = [], []
    for original in raw.splitlines():
        if not original.strip():
            continue
        text, numbered = strip_enumeration(original)
        if not text:
            rejected.append((original.strip(), "empty-after-numbering"))
        elif not any(c.isalpha() for c in text):
            rejected.append((original.strip(), "no-alphabetic-content"))
        elif not any(c.islower() for c in text):
            rejected.append((original.strip(), "no-lowercase-content"))
        elif not numbered and (_PREAMBLE.match(text) or text.endswith(":")):
            rejected.append((original.strip(), "no-numbering-preamble"))
        else:
            lines.append(text)
    return lines, rejected


def make_batch(spec: PromptSpec | None, raw: str) -> GenerationBatch:
    lines, rejected = parse_numbered_response(raw)
    return GenerationBatch(spec, raw, tuple(lines), tuple(rejected))
