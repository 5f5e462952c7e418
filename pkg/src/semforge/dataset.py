"""Dataset records, JSONL persistence and experiment splits."""
from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

from .parse_core import ParseError, SeqlogicalParse, extract_transcript, parse_seqlogical, top_intent
from .rng import Lcg

log = logging.getLogger(__name__)

STOP_DOMAINS = ("alarm", "event", "messaging", "music", "navigation", "reminder", "timer", "weather")
DOMAIN_ALIASES = {"time": "timer"}
ND_PART_A = ("messaging", "reminder", "timer", "weather")
ND_PART_B = ("alarm", "event", "music", "navigation")

SOURCES = ("stop", "llm_iwp", "llm_ep", "llm_ep_parse", "seed_example")
REPRS = ("jat", "tts", "real")

_FIELDS = (
    "id", "domain", "transcript", "seqlogical", "audio_ref", "asr_hypothesis",
    "embedding_ref", "repr", "source", "meta",
)


class SchemaError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class UnknownDomain(ValueError):
    pass


class InsufficientExamples(ValueError):
    def __init__(self, combinations, k):
        self.combinations = combinations
        self.k = k
        listed = "; ".join(f"{intent} {{{', '.join(slots)}}} has {n}" for (intent, slots), n in combinations)
        super().__init__(f"fewer than {k} examples for: {listed}")


def canonical_domain(domain: str) -> str:
    return DOMAIN_ALIASES.get(domain, domain)


@dataclass(frozen=True)
class Record:
    id: str
    domain: str
    transcript: str
    seqlogical: str
    audio_ref: str | None = None
    asr_hypothesis: str | None = None
    embedding_ref: str | None = None
    repr: str | None = None
    source: str = "stop"
    meta: dict = field(default_factory=dict)

    @cached_property
    def parse(self) -> SeqlogicalParse:
        return parse_seqlogical(self.seqlogical)

    @property
    def intent(self) -> str:
        return top_intent(self.parse)

    @property
    def combination(self) -> tuple[str, tuple[str, ...]]:
        return self.intent, tuple(sorted(self.parse.slot_set()))

    def validate(self):
        if not isinstance(self.id, str) or not self.id:
            raise SchemaError("record id must be a non-empty string")
        if not isinstance(self.domain, str) or not self.domain:
            raise SchemaError(f"{self.id}: domain must be a non-empty string")
        if self.source not in SOURCES:
            raise SchemaError(f"{self.id}: unknown source {self.source!r}")
        if self.repr is not None and self.repr not in REPRS:
            raise SchemaError(f"{self.id}: unknown repr {self.repr!r}")
        try:
            parse = self.parse
        except ParseError as exc:
            raise SchemaError(f"{self.id}: bad seqlogical parse: {exc}") from None
        if extract_transcript(parse) != self.transcript:
            raise SchemaError(f"{self.id}: transcript does not match the parse tokens")

    def to_dict(self) -> dict:
        out = {}
        for name in _FIELDS:
            value = getattr(self, name)
            if value is None or (name == "meta" and not value):
                continue
            out[name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> Record:
        if not isinstance(data, dict):
            raise SchemaError("record must be a JSON object")
        missing = [name for name in ("id", "domain", "transcript", "seqlogical") if name not in data]
        if missing:
            raise SchemaError(f"missing field(s) {', '.join(missing)}")
        unknown = set(data) - set(_FIELDS)
        if unknown:
            raise SchemaError(f"unknown field(s) {', '.join(sorted(unknown))}")
        values = dict(data)
        values["domain"] = canonical_domain(values["domain"]) if isinstance(values["domain"], str) else values["domain"]
        values.setdefault("source", "stop")
        values["meta"] = values.get("meta") or {}
        record = cls(**values)
        record.validate()
        return record


def read_jsonl(path, lenient: bool = False, problems: list | None = None) -> list[Record]:
    """Read records; schema problems are fatal unless ``lenient``.

    In lenient mode bad lines are skipped, logged, and appended to
    ``problems`` as ``(line_number, message)`` when a list is given.
    """
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"invalid JSON: {exc.msg}") from None
                record = Record.from_dict(data)
                if record.id in seen:
                    raise SchemaError(f"duplicate id {record.id!r}")
            except SchemaError as exc:
                message = str(exc)
                if not lenient:
                    raise SchemaError(message, lineno) from None
                log.warning("skipping line %d of %s: %s", lineno, path, message)
                if problems is not None:
                    problems.append((lineno, message))
                continue
            seen.add(record.id)
            records.append(record)
    return records


def dumps_record(record: Record) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=False)


def write_jsonl(records: Iterable[Record], path) -> int:
    seen = set()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            record.validate()
            if record.id in seen:
                raise SchemaError(f"duplicate id {record.id!r}")
            seen.add(record.id)
            fh.write(dumps_record(record) + "\n")
            n += 1
    return n


# -- splits -------------------------------------------------------------------


@dataclass
class SplitManifest:
    name: str
    part_a: list[str]
    part_b: list[str]
    policy: str
    seed: int | None = None
    part_seed: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        overlap = (set(self.part_a) & set(self.part_b)) | (set(self.part_seed) & (set(self.part_a) | set(self.part_b)))
        if overlap:
            raise ValueError(f"split parts overlap on {len(overlap)} ids")

    def to_json(self) -> str:
        data = asdict(self)
        if not data["part_seed"]:
            del data["part_seed"]
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> SplitManifest:
        return cls(**json.loads(text))


def _by_domain(records):
    groups = defaultdict(list)
    for record in records:
        groups[canonical_domain(record.domain)].append(record)
    return groups


def split_ed(records: list[Record], seed: int) -> SplitManifest:
    """Per-domain halves; odd leftovers go to whichever part is currently smaller."""
    rng = Lcg(seed)
    part_a, part_b = [], []
    per_domain = {}
    for domain, members in sorted(_by_domain(records).items()):
        ids = [r.id for r in members]
        rng.shuffle(ids)
        half, extra = divmod(len(ids), 2)
        cut = half + (extra if len(part_a) <= len(part_b) else 0)
        part_a.extend(ids[:cut])
        part_b.extend(ids[cut:])
        per_domain[domain] = [cut, len(ids) - cut]
    return SplitManifest(
        name=f"ed-seed{seed}",
        part_a=part_a,
        part_b=part_b,
        policy="ed_half",
        seed=seed,
        stats={"per_domain": per_domain, "totals": [len(part_a), len(part_b)]},
    )


def split_nd(records: list[Record]) -> SplitManifest:
    """Fixed domain partition: messaging/reminder/timer/weather vs the rest."""
    part_a, part_b = [], []
    for record in records:
        domain = canonical_domain(record.domain)
        if domain in ND_PART_A:
            part_a.append(record.id)
        elif domain in ND_PART_B:
            part_b.append(record.id)
        else:
            raise UnknownDomain(f"{record.id}: domain {record.domain!r} is not a STOP domain")
    a, b = len(part_a), len(part_b)
    return SplitManifest(
        name="nd",
        part_a=part_a,
        part_b=part_b,
        policy="nd_domain",
        stats={
            "domains_a": list(ND_PART_A),
            "domains_b": list(ND_PART_B),
            "totals": [a, b],
            "ratio": a / b if b else None,
            "relative_difference": abs(a - b) / max(a, b) if max(a, b) else 0.0,
        },
    )


def weather_holdout(records: list[Record], k_examples: int = 3, seed: int = 0, new_domain: str = "weather"):
    """Hold out one domain, keeping ``k_examples`` seeds per (intent, slot-set).

    Returns ``(seen, seed_examples, hidden)``.
    """
    if k_examples < 1:
        raise ValueError("k_examples must be positive")
    seen, held = [], []
    for record in records:
        (held if canonical_domain(record.domain) == new_domain else seen).append(record)
    if not held:
        raise ValueError(f"no records in domain {new_domain!r}")
    combos = defaultdict(list)
    for record in held:
        combos[record.combination].append(record)
    short = [(combo, len(members)) for combo, members in sorted(combos.items()) if len(members) < k_examples]
    if short:
        raise InsufficientExamples(short, k_examples)
    rng = Lcg(seed)
    chosen = []
    for combo in sorted(combos):
        members = list(combos[combo])
        rng.shuffle(members)
        chosen.extend(members[:k_examples])
    chosen_ids = {r.id for r in chosen}
    hidden = [r for r in held if r.id not in chosen_ids]
    return seen, chosen, hidden


def weather_manifest(seen, seed_examples, hidden, seed, k_examples) -> SplitManifest:
    return SplitManifest(
        name=f"weather-holdout-seed{seed}",
        part_a=[r.id for r in seen],
        part_b=[r.id for r in hidden],
        part_seed=[r.id for r in seed_examples],
        policy="weather_holdout",
        seed=seed,
        stats={
            "k_examples": k_examples,
            "combinations": len({r.combination for r in seed_examples}),
            "totals": {"seen": len(seen), "seed_examples": len(seed_examples), "hidden": len(hidden)},
        },
    )
