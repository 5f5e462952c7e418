"""Exact-match evaluation, stratified by ASR error.

Rates are kept as :class:`fractions.Fraction` so that the overall EM is
exactly the count-weighted mean of the two strata.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import floor

from .parse_core import ParseError, parse_seqlogical, serialize, to_decoupled, extract_transcript
from .textnorm import NormalizationConfig, normalize

FORMS = ("seqlogical", "decoupled")
_ASR_NORM = NormalizationConfig(expand_numbers=True)


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class EvalItem:
    reference_parse: str
    hypothesis_parse: str
    reference_transcript: str | None = None
    asr_hypothesis: str | None = None
    run: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> EvalItem:
        return cls(
            reference_parse=data["reference_parse"],
            hypothesis_parse=data["hypothesis_parse"],
            reference_transcript=data.get("reference_transcript"),
            asr_hypothesis=data.get("asr_hypothesis"),
            run=data.get("run"),
        )


def _canonical(text: str, form: str) -> str:
    parse = parse_seqlogical(text)
    return to_decoupled(parse) if form == "decoupled" else serialize(parse)


def exact_match(hyp: str, ref: str, form: str = "seqlogical") -> bool:
    """True iff ``hyp`` parses and its canonical form equals that of ``ref``."""
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}")
    expected = _canonical(ref, form)
    try:
        return _canonical(hyp, form) == expected
    except ParseError:
        return False


def asr_error_flag(reference_transcript: str, asr_hypothesis: str) -> bool:
    return normalize(reference_transcript, _ASR_NORM) != normalize(asr_hypothesis, _ASR_NORM)


@dataclass(frozen=True)
class EmReport:
    em: Fraction
    em_no_err: Fraction | None
    em_w_err: Fraction | None
    counts: tuple[int, int, int]  # (total, no_err, w_err)
    correct: tuple[int, int, int]

    def to_dict(self) -> dict:
        def pct(x):
            return None if x is None else percent(x)

        total, no_err, w_err = self.counts
        return {
            "em": pct(self.em),
            "em_no_err": pct(self.em_no_err),
            "em_w_err": pct(self.em_w_err),
            "counts": {"total": total, "no_err": no_err, "w_err": w_err},
            "correct": {"total": self.correct[0], "no_err": self.correct[1], "w_err": self.correct[2]},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        rows = [("metric", "EM", "n"), ("EM", self.em, self.counts[0]),
                ("EM(No Err)", self.em_no_err, self.counts[1]), ("EM w/ Err", self.em_w_err, self.counts[2])]
        cells = [(name, value if isinstance(value, str) else ("-" if value is None else percent(value)), str(n))
                 for name, value, n in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(3)]
        return "\n".join(
            f"{a:<{widths[0]}}  {b:>{widths[1]}}  {c:>{widths[2]}}" for a, b, c in cells
        )


def percent(rate: Fraction) -> str:
    """Rate as a percentage with two decimals, rounding half up."""
    hundredths = floor(Fraction(rate) * 10000 + Fraction(1, 2))
    return f"{hundredths // 100}.{hundredths % 100:02d}"


def em_report(items, form: str = "seqlogical") -> EmReport:
    items = list(items)
    if not items:
        raise EmptyInput("no evaluation items")
    n = [0, 0, 0]
    hit = [0, 0, 0]
    for item in items:
        correct = exact_match(item.hypothesis_parse, item.reference_parse, form)
        n[0] += 1
        hit[0] += correct
        if item.asr_hypothesis is None:
            continue
        reference = item.reference_transcript
        if reference is None:
            reference = extract_transcript(parse_seqlogical(item.reference_parse))
        stratum = 2 if asr_error_flag(reference, item.asr_hypothesis) else 1
        n[stratum] += 1
        hit[stratum] += correct
    return EmReport(
        em=Fraction(hit[0], n[0]),
        em_no_err=Fraction(hit[1], n[1]) if n[1] else None,
        em_w_err=Fraction(hit[2], n[2]) if n[2] else None,
        counts=tuple(n),
        correct=tuple(hit),
    )


def run_average(items, form: str = "seqlogical") -> dict:
    """Two ways of averaging over runs: pooled over utterances, and mean of run EMs."""
    items = list(items)
    by_run: dict[str, list] = {}
    for item in items:
        by_run.setdefault(item.run or "", []).append(item)
    reports = {run: em_report(group, form) for run, group in sorted(by_run.items())}
    run_mean = sum((r.em for r in reports.values()), Fraction(0)) / len(reports)
    return {
        "pooled": em_report(items, form).to_dict(),
        "run_mean_em": percent(run_mean),
        "runs": {run: r.to_dict() for run, r in reports.items()},
    }
