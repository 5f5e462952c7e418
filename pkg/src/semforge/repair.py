"""Post-processing of LLM-generated seqlogical parses.

Each line goes through: bracket parse (failure discards the line), OOV root
intent replaced by the target intent, OOV nested intents unwrapped, OOV slots
unwrapped with their words kept, then a final ontology check. Lines that
still fail the check are marked for one re-prompt.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from .dataset import Record
from .parse_core import (
    INTENT,
    SLOT,
    TOKEN,
    Ontology,
    ParseError,
    ParseNode,
    SeqlogicalParse,
    extract_transcript,
    load_ontology,
    parse_seqlogical,
    serialize,
    validate_against_ontology,
)
from .promptgen import REPROMPT, GenerationBatch, PromptSpec, load_template, render

ACCEPTED = "accepted"
REPAIRED = "repaired"
NEEDS_REPROMPT = "needs_reprompt"
DISCARDED = "discarded"
STATUSES = (ACCEPTED, REPAIRED, NEEDS_REPROMPT, DISCARDED)


class WrongStatus(ValueError):
    pass


@dataclass(frozen=True)
class RepairOutcome:
    status: str
    parse: SeqlogicalParse | None
    actions: tuple[str, ...] = ()
    reason: str = ""
    raw_line: str = ""
    target_intent: str = ""
    # root intent is in-vocabulary but differs from the target; kept as is
    intent_mismatch: bool = False

    @property
    def ok(self) -> bool:
        return self.status in (ACCEPTED, REPAIRED)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "parse": serialize(self.parse) if self.parse is not None else None,
            "actions": list(self.actions),
            "reason": self.reason,
            "raw_line": self.raw_line,
            "target_intent": self.target_intent,
            "intent_mismatch": self.intent_mismatch,
        }


@dataclass
class RepairStats:
    lines_in: int = 0
    accepted: int = 0
    repaired: int = 0
    needs_reprompt: int = 0
    discarded: int = 0
    intent_mismatch: int = 0
    actions: Counter = field(default_factory=Counter)

    def add(self, outcome: RepairOutcome):
        self.lines_in += 1
        setattr(self, outcome.status, getattr(self, outcome.status) + 1)
        self.intent_mismatch += outcome.intent_mismatch
        for action in outcome.actions:
            self.actions[action.split("(", 1)[0]] += 1

    def merge(self, other: RepairStats):
        for name in STATUSES + ("lines_in", "intent_mismatch"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.actions.update(other.actions)

    def to_dict(self) -> dict:
        return {
            "lines_in": self.lines_in,
            "accepted": self.accepted,
            "repaired": self.repaired,
            "needs_reprompt": self.needs_reprompt,
            "discarded": self.discarded,
            "intent_mismatch": self.intent_mismatch,
            "actions": dict(sorted(self.actions.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class _NestedSlot(Exception):
    pass


def _unwrap(node: ParseNode, ontology: Ontology, parent_kind: str, actions: list) -> list[ParseNode]:
    """Return the nodes that replace ``node`` inside a parent of ``parent_kind``."""
    if node.kind == TOKEN:
        return [node]
    children = []
    for child in node.children:
        children.extend(_unwrap(child, ontology, node.kind, actions))
    if node.kind == INTENT and node.label not in ontology.intents:
        actions.append(f"removed_extra_intent({node.label})")
        promoted = children
    elif node.kind == SLOT and node.label not in ontology.slots:
        actions.append(f"unwrapped_oov_slot({node.label})")
        promoted = children
    else:
        if node.kind == SLOT and any(c.kind == SLOT for c in children):
            raise _NestedSlot(node.label)
        return [ParseNode(node.kind, label=node.label, children=tuple(children))]
    if parent_kind == SLOT and any(c.kind == SLOT for c in promoted):
        raise _NestedSlot(node.label)
    return promoted


def repair_generated_parse(raw_line: str, target_intent: str, ontology: Ontology) -> RepairOutcome:
    try:
        parse = parse_seqlogical(raw_line)
    except ParseError as exc:
        return RepairOutcome(DISCARDED, None, reason=f"{type(exc).__name__}: {exc}", raw_line=raw_line,
                             target_intent=target_intent)

    actions: list[str] = []
    root = parse.root
    if root.label not in ontology.intents:
        actions.append("fixed_root_intent")
        root = ParseNode.intent(target_intent, root.children)
    try:
        children = []
        for child in root.children:
            children.extend(_unwrap(child, ontology, INTENT, actions))
    except _NestedSlot as exc:
        partial = SeqlogicalParse(root)
        return RepairOutcome(NEEDS_REPROMPT, partial, tuple(actions),
                             reason=f"removing {exc.args[0]} would nest a slot directly inside a slot",
                             raw_line=raw_line, target_intent=target_intent)
    repaired = SeqlogicalParse(ParseNode.intent(root.label, children))

    report = validate_against_ontology(repaired, ontology)
    mismatch = root.label != target_intent
    if not report.ok:
        return RepairOutcome(NEEDS_REPROMPT, repaired, tuple(actions), reason="; ".join(report.problems()),
                             raw_line=raw_line, target_intent=target_intent, intent_mismatch=mismatch)
    status = REPAIRED if actions else ACCEPTED
    return RepairOutcome(status, repaired, tuple(actions), raw_line=raw_line, target_intent=target_intent,
                         intent_mismatch=mismatch)


def format_combinations(ontology: Ontology, intent: str) -> str:
    combos = sorted((tuple(sorted(c)) for c in ontology.combinations.get(intent, ())), key=lambda c: (-len(c), c))
    if not combos:
        return "(none listed)"
    return "; ".join("{" + ", ".join(c) + "}" for c in combos)


def build_reprompt(outcome: RepairOutcome, original_prompt: PromptSpec | None = None,
                   ontology: Ontology | None = None) -> PromptSpec:
    """Ask for a corrected version of one offending line."""
    if outcome.status != NEEDS_REPROMPT:
        raise WrongStatus(f"cannot re-prompt a {outcome.status} outcome")
    ontology = ontology or load_ontology()
    intent = (original_prompt.target_intent if original_prompt is not None else None) or outcome.target_intent
    text = render(
        load_template("reprompt"),
        intent=intent,
        line=outcome.raw_line,
        reason=outcome.reason,
        intents=", ".join(sorted(ontology.intents)),
        combinations=format_combinations(ontology, intent),
    )
    slots = original_prompt.slots if original_prompt is not None else ()
    return PromptSpec(REPROMPT, text, 1, target_intent=intent, slots=slots, examples=(outcome.raw_line,))


def outcome_record(outcome: RepairOutcome, record_id: str, domain: str, meta: dict | None = None) -> Record:
    return Record(
        id=record_id,
        domain=domain,
        transcript=extract_transcript(outcome.parse),
        seqlogical=serialize(outcome.parse),
        source="llm_ep_parse",
        meta=dict(meta or {}),
    )


def repair_batch(batch: GenerationBatch, target_intent: str, ontology: Ontology, id_prefix: str = "gen",
                 domain: str | None = None):
    """Repair every line of a batch; returns ``(records, stats)``."""
    stats = RepairStats()
    records = []
    domain = domain or ontology.domain_of(target_intent) or "unknown"
    for i, line in enumerate(batch.lines):
        outcome = repair_generated_parse(line, target_intent, ontology)
        stats.add(outcome)
        if outcome.ok:
            records.append(outcome_record(outcome, f"{id_prefix}-{i:04d}", domain,
                                          {"target_intent": target_intent}))
    return records, stats
