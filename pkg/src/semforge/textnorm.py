"""Written-to-spoken normalization of generated transcripts.

Lowercases, expands integers 0-9999 (and ordinals such as ``1st``) into
English words, turns hyphens, slashes and other punctuation into spaces, and
keeps apostrophes.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

_ONES = (
    "zero one two three four five six seven eight nine ten eleven twelve thirteen "
    "fourteen fifteen sixteen seventeen eighteen nineteen"
).split()
_TENS = "_ _ twenty thirty forty fifty sixty seventy eighty ninety".split()
_ORDINAL_IRREGULAR = {
    "zero": "zeroth",
    "one": "first",
    "two": "second",
    "three": "third",
    "five": "fifth",
    "eight": "eighth",
    "nine": "ninth",
    "twelve": "twelfth",
}

_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'", "＇": "'", "`": "'"})
_THOUSANDS_COMMA = re.compile(r"(?<=[0-9]),(?=[0-9]{3}(?![0-9]))")
# an ordinal suffix only counts when no further letter follows ("5th" but not "5stars")
_NUMBER = re.compile(r"([0-9]+)((?:st|nd|rd|th)(?![^\W\d_]))?")
_SPACES = re.compile(r"\s+")
_DIGITS = frozenset("0123456789")

SUPPORTED_LOCALES = ("en",)


@dataclass(frozen=True)
class NormalizationConfig:
    expand_numbers: bool = True
    keep_apostrophes: bool = True
    locale: str = "en"

    def __post_init__(self):
        if self.locale not in SUPPORTED_LOCALES:
            raise ValueError(f"unsupported locale {self.locale!r}")


DEFAULT_CONFIG = NormalizationConfig()


def number_to_words(n: int) -> str:
    """English cardinal for 0 <= n <= 9999, words separated by spaces."""
    if not 0 <= n <= 9999:
        raise ValueError(f"out of range: {n}")
    if n < 20:
        return _ONES[n]
    if n < 100:
        tens, rest = divmod(n, 10)
        return _TENS[tens] + (" " + _ONES[rest] if rest else "")
    if n < 1000:
        hundreds, rest = divmod(n, 100)
        return _ONES[hundreds] + " hundred" + (" " + number_to_words(rest) if rest else "")
    thousands, rest = divmod(n, 1000)
    return _ONES[thousands] + " thousand" + (" " + number_to_words(rest) if rest else "")


def ordinal_words(n: int) -> str:
    words = number_to_words(n).split()
    last = words[-1]
    if last in _ORDINAL_IRREGULAR:
        words[-1] = _ORDINAL_IRREGULAR[last]
    elif last.endswith("y"):
        words[-1] = last[:-1] + "ieth"
    else:
        words[-1] = last + "th"
    return " ".join(words)


def _spell_digits(digits: str) -> str:
    return " ".join(_ONES[int(d)] for d in digits)


def _expand(match: re.Match) -> str:
    digits, suffix = match.group(1), match.group(2)
    # leading zeros and long runs (phone numbers, ids) are read digit by digit
    if len(digits) > 4 or (len(digits) > 1 and digits[0] == "0"):
        return f" {_spell_digits(digits)} "
    value = int(digits)
    return f" {ordinal_words(value) if suffix else number_to_words(value)} "


def normalize(text: str, config: NormalizationConfig = DEFAULT_CONFIG) -> str:
    text = text.translate(_APOSTROPHES).lower()
    if config.expand_numbers:
        text = _THOUSANDS_COMMA.sub("", text)
        text = _NUMBER.sub(_expand, text)
    out = []
    for c in text:
        if c.isalpha() or (c == "'" and config.keep_apostrophes):
            out.append(c)
        elif c in _DIGITS and not config.expand_numbers:
            out.append(c)
        elif c == "'":
            continue
        else:
            out.append(" ")
    return _SPACES.sub(" ", "".join(out)).strip()
