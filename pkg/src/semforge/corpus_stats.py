"""Corpus statistics that drive prompt construction."""
from __future__ import annotations

from collections import Counter, defaultdict
from importlib import resources
from pathlib import Path
from typing import Iterable

from .textnorm import NormalizationConfig, normalize

_DEDUP_CONFIG = NormalizationConfig(expand_numbers=True)


class EmptyCorpus(ValueError):
    pass


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """One lowercase word per line; ``None`` loads the bundled English list."""
    if path is None:
        text = resources.files("semforge").joinpath("data/stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def build_intent_word_table(records, stopwords: Iterable[str], k: int = 40) -> dict[str, list[tuple[str, int]]]:
    """Top-``k`` non-stopword transcript tokens per top-level intent.

    Every token occurrence counts. Lists are ordered by count descending,
    then word ascending.
    """
    if k < 1:
        raise ValueError("k must be positive")
    records = list(records)
    if not records:
        raise EmptyCorpus("no records to count")
    stop = frozenset(stopwords)
    counts: dict[str, Counter] = defaultdict(Counter)
    for record in records:
        parse = record.parse
        counts[parse.root.label].update(t for t in parse.tokens() if t not in stop)
    table = {}
    for intent in sorted(counts):
        ranked = sorted(counts[intent].items(), key=lambda item: (-item[1], item[0]))
        table[intent] = ranked[:k]
    return table


def build_combo_table(records) -> dict[str, set[frozenset[str]]]:
    """Intent -> distinct slot-label sets seen with it (slots from the whole parse)."""
    records = list(records)
    if not records:
        raise EmptyCorpus("no records to tabulate")
    table: dict[str, set] = defaultdict(set)
    for record in records:
        parse = record.parse
        table[parse.root.label].add(parse.slot_set())
    return dict(table)


def combo_list(table) -> list[tuple[str, tuple[str, ...]]]:
    """Flatten a combo table to sorted ``(intent, sorted slots)`` pairs."""
    return sorted((intent, tuple(sorted(combo))) for intent, combos in table.items() for combo in combos)


def dedup(texts: Iterable[str]) -> list[str]:
    """Keep the first text for each normalized key, in input order."""
    seen = set()
    out = []
    for text in texts:
        key = normalize(text, _DEDUP_CONFIG)
        if key not in seen:
            seen.add(key)
            out.append(text)
    return out
