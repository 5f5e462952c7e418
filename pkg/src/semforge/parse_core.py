"""Seqlogical semantic parses: tree model, parser, serializer, ontology checks.

A seqlogical parse interleaves intent/slot brackets with every word of the
transcript::

    [IN:GET_WEATHER what kind of weather is in [SL:LOCATION paris ] ]

Intent nodes may hold tokens, slots and nested intents; slot nodes may hold
tokens and intents. The root must be an intent.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from . import kernels

INTENT = "intent"
SLOT = "slot"
TOKEN = "token"

_LABEL_NAME = re.compile(r"[A-Z0-9_]+")
_TOKEN_FORBIDDEN = re.compile(r"[\s\[\]]")


class ParseError(ValueError):
    """Base class for malformed seqlogical strings."""

    def __init__(self, message, position=None):
        super().__init__(message if position is None else f"{message} (at {position})")
        self.position = position


class UnbalancedBrackets(ParseError):
    pass


class EmptyLabel(ParseError):
    pass


class BadLabelPrefix(ParseError):
    pass


class RootNotIntent(ParseError):
    pass


class MultipleRoots(ParseError):
    pass


class TrailingContent(ParseError):
    pass


class InvalidNesting(ParseError):
    """A slot directly inside another slot."""


class OntologyError(ValueError):
    pass


def is_intent_label(label: str) -> bool:
    return label.startswith("IN:") and _LABEL_NAME.fullmatch(label, 3) is not None


def is_slot_label(label: str) -> bool:
    return label.startswith("SL:") and _LABEL_NAME.fullmatch(label, 3) is not None


@dataclass(frozen=True)
class ParseNode:
    kind: str
    label: str | None = None
    text: str | None = None
    children: tuple[ParseNode, ...] = ()

    def __post_init__(self):
        if self.kind == TOKEN:
            if not self.text or _TOKEN_FORBIDDEN.search(self.text):
                raise ValueError(f"invalid token text: {self.text!r}")
            if self.children or self.label is not None:
                raise ValueError("token nodes carry neither label nor children")
        elif self.kind == INTENT:
            if not is_intent_label(self.label or ""):
                raise ValueError(f"invalid intent label: {self.label!r}")
        elif self.kind == SLOT:
            if not is_slot_label(self.label or ""):
                raise ValueError(f"invalid slot label: {self.label!r}")
            if any(c.kind == SLOT for c in self.children):
                raise ValueError("slot nodes cannot directly contain slots")
        else:
            raise ValueError(f"unknown node kind: {self.kind!r}")

    @classmethod
    def token(cls, text: str) -> ParseNode:
        return cls(TOKEN, text=text)

    @classmethod
    def intent(cls, label: str, children: Iterable[ParseNode] = ()) -> ParseNode:
        return cls(INTENT, label=label, children=tuple(children))

    @classmethod
    def slot(cls, label: str, children: Iterable[ParseNode] = ()) -> ParseNode:
        return cls(SLOT, label=label, children=tuple(children))

    def walk(self) -> Iterator[ParseNode]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


@dataclass(frozen=True)
class SeqlogicalParse:
    root: ParseNode
    source_text: str = field(default="", compare=False)

    def __post_init__(self):
        if self.root.kind != INTENT:
            raise ValueError("root node must be an intent")

    def tokens(self) -> list[str]:
        return [n.text for n in self.root.walk() if n.kind == TOKEN]

    def intent_labels(self) -> list[str]:
        return [n.label for n in self.root.walk() if n.kind == INTENT]

    def slot_labels(self) -> list[str]:
        return [n.label for n in self.root.walk() if n.kind == SLOT]

    def slot_set(self) -> frozenset[str]:
        return frozenset(self.slot_labels())

    def __str__(self):
        return serialize(self)


def _check_label(value: str, position: int) -> str:
    if not value:
        raise EmptyLabel("bracket without a label", position)
    if value[:3] not in ("IN:", "SL:"):
        raise BadLabelPrefix(f"label {value!r} must start with IN: or SL:", position)
    if len(value) == 3:
        raise EmptyLabel(f"label {value!r} has an empty name", position)
    if _LABEL_NAME.fullmatch(value, 3) is None:
        raise BadLabelPrefix(f"label {value!r} must be uppercase A-Z, 0-9, _", position)
    return value


def parse_seqlogical(text: str) -> SeqlogicalParse:
    """Parse a bracketed seqlogical string.

    Raises a :class:`ParseError` subclass naming the first problem found.
    """
    toks = kernels.tokenize(text)
    if not toks:
        raise RootNotIntent("empty input has no root intent", 0)
    kind, value, pos = toks[0]
    if kind == kernels.TOKEN:
        raise RootNotIntent(f"text {value!r} before the root intent", pos)
    if kind == kernels.CLOSE:
        raise UnbalancedBrackets("closing bracket without an opening one", pos)

    # each frame: [kind, label, children, open position]
    stack: list[list] = []
    root = None
    for kind, value, pos in toks:
        if root is not None:
            if kind == kernels.OPEN:
                raise MultipleRoots("a second top-level bracket follows the root", pos)
            if kind == kernels.CLOSE:
                raise UnbalancedBrackets("closing bracket without an opening one", pos)
            raise TrailingContent(f"text {value!r} after the root intent", pos)
        if kind == kernels.OPEN:
            label = _check_label(value, pos)
            node_kind = INTENT if label[0] == "I" else SLOT
            if not stack and node_kind != INTENT:
                raise RootNotIntent(f"root label {label!r} is not an intent", pos)
            if stack and node_kind == SLOT and stack[-1][0] == SLOT:
                raise InvalidNesting(f"slot {label!r} directly inside slot {stack[-1][1]!r}", pos)
            stack.append([node_kind, label, [], pos])
        elif kind == kernels.CLOSE:
            node_kind, label, children, _ = stack.pop()
            node = ParseNode(node_kind, label=label, children=tuple(children))
            if stack:
                stack[-1][2].append(node)
            else:
                root = node
        else:
            stack[-1][2].append(ParseNode(TOKEN, text=value))
    if stack:
        raise UnbalancedBrackets(f"bracket {stack[-1][1]!r} is never closed", stack[-1][3])
    return SeqlogicalParse(root, text)


def _serialize_node(root: ParseNode) -> str:
    parts = []
    # entries are nodes, or None marking a pending close bracket
    stack: list[ParseNode | None] = [root]
    while stack:
        node = stack.pop()
        if node is None:
            parts.append("]")
        elif node.kind == TOKEN:
            parts.append(node.text)
        else:
            parts.append("[" + node.label)
            stack.append(None)
            stack.extend(reversed(node.children))
    return " ".join(parts)


serialize_node = _serialize_node


def serialize(parse: SeqlogicalParse) -> str:
    """Canonical form: single spaces everywhere, a space before every ``]``."""
    return _serialize_node(parse.root)


def extract_transcript(parse: SeqlogicalParse) -> str:
    return " ".join(parse.tokens())


def top_intent(parse: SeqlogicalParse) -> str:
    return parse.root.label


def _decouple(node: ParseNode, in_slot: bool) -> ParseNode:
    inside = in_slot or node.kind == SLOT
    kept = []
    for child in node.children:
        if child.kind == TOKEN:
            if inside:
                kept.append(child)
        else:
            kept.append(_decouple(child, inside))
    return ParseNode(node.kind, label=node.label, children=tuple(kept))


def to_decoupled(parse: SeqlogicalParse) -> str:
    """Drop every token that is not under a slot, keep all labels."""
    return _serialize_node(_decouple(parse.root, False))


def canonicalize(text: str) -> str:
    return serialize(parse_seqlogical(text))


# -- ontology -----------------------------------------------------------------


@dataclass(frozen=True)
class Ontology:
    intents: frozenset[str]
    slots: frozenset[str]
    domains: dict[str, frozenset[str]] = field(default_factory=dict)
    combinations: dict[str, frozenset[frozenset[str]]] = field(default_factory=dict)

    def __post_init__(self):
        for label in self.intents:
            if not is_intent_label(label):
                raise OntologyError(f"bad intent label {label!r}")
        for label in self.slots:
            if not is_slot_label(label):
                raise OntologyError(f"bad slot label {label!r}")
        for domain, intents in self.domains.items():
            unknown = set(intents) - self.intents
            if unknown:
                raise OntologyError(f"domain {domain!r} lists unknown intents {sorted(unknown)}")
        for intent, combos in self.combinations.items():
            if intent not in self.intents:
                raise OntologyError(f"combination for unknown intent {intent!r}")
            for combo in combos:
                unknown = set(combo) - self.slots
                if unknown:
                    raise OntologyError(f"combination for {intent} uses unknown slots {sorted(unknown)}")

    def domain_of(self, intent: str) -> str | None:
        for domain in sorted(self.domains):
            if intent in self.domains[domain]:
                return domain
        return None

    def is_known_combination(self, intent: str, slots: Iterable[str]) -> bool:
        return frozenset(slots) in self.combinations.get(intent, frozenset())


def parse_ontology(lines: Iterable[str]) -> Ontology:
    intents, slots = set(), set()
    domains: dict[str, set] = {}
    combos: dict[str, set] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "INTENT" and len(rest) == 1:
            intents.add(rest[0])
        elif head == "SLOT" and len(rest) == 1:
            slots.add(rest[0])
        elif head == "DOMAIN" and rest:
            domains.setdefault(rest[0], set()).update(rest[1:])
        elif head == "COMBO" and rest:
            combos.setdefault(rest[0], set()).add(frozenset(rest[1:]))
        else:
            raise OntologyError(f"line {lineno}: cannot read {raw.rstrip()!r}")
    return Ontology(
        intents=frozenset(intents),
        slots=frozenset(slots),
        domains={d: frozenset(v) for d, v in domains.items()},
        combinations={i: frozenset(v) for i, v in combos.items()},
    )


def load_ontology(path: str | Path | None = None) -> Ontology:
    """Read an ontology file; ``None`` loads the bundled STOP inventory."""
    if path is None:
        text = resources.files("semforge").joinpath("data/stop_ontology.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return parse_ontology(text.splitlines())


def dump_ontology(ontology: Ontology) -> str:
    lines = [f"INTENT {i}" for i in sorted(ontology.intents)]
    lines += [f"SLOT {s}" for s in sorted(ontology.slots)]
    lines += [f"DOMAIN {d} " + " ".join(sorted(v)) for d, v in sorted(ontology.domains.items())]
    for intent in sorted(ontology.combinations):
        for combo in sorted(sorted(c) for c in ontology.combinations[intent]):
            lines.append(" ".join(["COMBO", intent, *combo]))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ValidationReport:
    oov_intents: tuple[str, ...] = ()
    oov_slots: tuple[str, ...] = ()
    # None when the ontology lists no combinations at all
    known_combination: bool | None = None

    @property
    def ok(self) -> bool:
        return not self.oov_intents and not self.oov_slots and self.known_combination is not False

    def problems(self) -> list[str]:
        out = [f"OOV intent {label}" for label in self.oov_intents]
        out += [f"OOV slot {label}" for label in self.oov_slots]
        if self.known_combination is False:
            out.append("unknown intent-slot combination")
        return out


def _unique(labels: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(labels))


def validate_against_ontology(parse: SeqlogicalParse, ontology: Ontology) -> ValidationReport:
    oov_intents = _unique(l for l in parse.intent_labels() if l not in ontology.intents)
    oov_slots = _unique(l for l in parse.slot_labels() if l not in ontology.slots)
    known = None
    if ontology.combinations:
        known = ontology.is_known_combination(top_intent(parse), parse.slot_set())
    return ValidationReport(oov_intents, oov_slots, known)
