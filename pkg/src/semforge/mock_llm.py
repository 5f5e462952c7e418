"""Deterministic stand-in for a chat LLM.

Each prompt kind has a small hand-written grammar. The mock recovers the
prompt kind and its arguments from the rendered prompt text, so it can sit
behind the same gateway as a real backend.

EP_PARSE output is corrupted on exactly ``round(n * CORRUPTION_RATE)``
lines, cycling through an OOV slot wrapper, an unbalanced bracket, an OOV
root intent and a renamed (OOV) slot.
"""
from __future__ import annotations

import re

from .parse_core import SLOT, TOKEN, ParseError, ParseNode, parse_seqlogical, serialize_node
from .promptgen import EP_PARSE, EP_TRANSCRIPT, IWP, REPROMPT
from .rng import Lcg, derive_seed

CORRUPTION_RATE = 0.10
IWP_DRIFT = 0.12
EP_DRIFT = 0.30
REPROMPT_FAILURE = 0.20

PLACES = ["paris", "london", "boston", "new york", "chicago", "karachi", "san francisco", "denver",
          "seattle", "tokyo", "miami", "austin", "berlin", "central park", "toronto"]
PEOPLE = ["mom", "dad", "john", "sarah", "emily", "alex", "grandma", "mike"]
TIMES = ["tomorrow", "tonight", "this weekend", "on monday", "next week", "today", "in the morning",
         "this afternoon", "on friday", "later today"]
SLOT_POOLS = {
    "SL:LOCATION": PLACES,
    "SL:DESTINATION": PLACES,
    "SL:SOURCE": PLACES,
    "SL:DATE_TIME": TIMES,
    "SL:WEATHER_ATTRIBUTE": ["rain", "snow", "sunshine", "fog", "thunderstorms", "hail", "wind"],
    "SL:WEATHER_TEMPERATURE_UNIT": ["fahrenheit", "celsius"],
    "SL:RECIPIENT": PEOPLE,
    "SL:SENDER": PEOPLE,
    "SL:CONTACT": PEOPLE,
    "SL:PERSON_REMINDED": PEOPLE,
}
GENERIC_FILLERS = ["something", "that one", "the usual", "it"]
OFF_TOPIC = ["play some music", "set an alarm", "text my mom", "what is the weather", "directions to the mall",
             "remind me to call the bank", "start a timer", "are there any concerts", "skip this song",
             "how long is my drive"]
OPENERS = ["", "can you", "please", "hey", "i want to", "could you", "i need to", "quick question"]
EP_PREFIXES = ["", "", "can you tell me", "i want to know", "please", "hey", "quick question"]
EP_SUFFIXES = ["", "", "please", "right now", "if you can", "for me"]
PARSE_PREFIXES = ["", "", "", "please tell me", "hey", "can you tell me", "i want to know", "quick question"]
OOV_SLOTS = ["SL:PLACE", "SL:CITY", "SL:TIME_OF_DAY", "SL:PERSON_NAME"]
OOV_INTENTS = ["IN:WEATHER_NOW", "IN:GET_FORECAST", "IN:CHECK_CONDITIONS"]
CORRUPTIONS = ("oov_slot", "unbalanced", "oov_intent", "renamed_slot")


class MockGrammarError(ValueError):
    pass


# -- prompt recognition -------------------------------------------------------

_IWP_RE = re.compile(r"Given the intents (IN:[A-Z0-9_]+), generate (\d+) utterances?\b")
_IWP_WORD_RE = re.compile(r'You may use the word "(.*?)" along with')
_EP_RE = re.compile(r"\AGenerate (\d+) more sentences? that")
_EP_PARSE_RE = re.compile(r"Please generate more examples with the intent (IN:[A-Z0-9_]+) and (?:any of the slots (.*?)|no slots)\. ")
_EP_PARSE_N_RE = re.compile(r"Write (\d+) similar sentences? and then stop")
_REPROMPT_RE = re.compile(r"\AThe following sentence was generated for the intent (IN:[A-Z0-9_]+), but it is not valid:\n(.*)\n")
_COMBOS_RE = re.compile(r"^Allowed slot combinations for IN:[A-Z0-9_]+: (.*)$", re.MULTILINE)
_NUMBERED_RE = re.compile(r"^(\d+)\. (.*)$", re.MULTILINE)


def recognize(prompt: str) -> tuple[str, dict]:
    """Map a rendered prompt back to ``(kind, params)``."""
    m = _REPROMPT_RE.match(prompt)
    if m:
        combos = []
        cm = _COMBOS_RE.search(prompt)
        if cm and cm.group(1).strip() != "(none listed)":
            for chunk in cm.group(1).split(";"):
                inner = chunk.strip().strip("{}")
                combos.append(tuple(s.strip() for s in inner.split(",") if s.strip()))
        return REPROMPT, {"intent": m.group(1), "line": m.group(2), "combinations": combos, "n": 1}
    m = _IWP_RE.search(prompt)
    if m:
        word = _IWP_WORD_RE.search(prompt)
        return IWP, {"intent": m.group(1), "word": word.group(1) if word else "", "n": int(m.group(2))}
    m = _EP_RE.match(prompt)
    if m:
        examples = [ex for _, ex in _NUMBERED_RE.findall(prompt)]
        return EP_TRANSCRIPT, {"examples": examples, "n": int(m.group(1))}
    m = _EP_PARSE_RE.search(prompt)
    if m:
        n = _EP_PARSE_N_RE.search(prompt)
        slots = [s.strip() for s in (m.group(2) or "").split(",") if s.strip()]
        examples = [ex for _, ex in _NUMBERED_RE.findall(prompt) if ex.startswith("[")]
        return EP_PARSE, {"intent": m.group(1), "slots": slots, "examples": examples,
                          "n": int(n.group(1)) if n else 30}
    raise MockGrammarError("the mock grammar has no rule for this prompt")


# -- grammars -----------------------------------------------------------------


def _join(*parts) -> str:
    return " ".join(p for p in parts if p)


def intent_phrase(intent: str) -> str:
    return intent[3:].lower().replace("_", " ")


def _iwp_lines(rng: Lcg, intent: str, word: str, n: int) -> list[str]:
    phrase = intent_phrase(intent)
    tails = [
        lambda: "",
        lambda: f"in {rng.choice(PLACES)}",
        lambda: f"for {rng.choice(PEOPLE)}",
        lambda: rng.choice(TIMES),
        lambda: f"near {rng.choice(PLACES)}",
        lambda: f"with {rng.choice(PEOPLE)} {rng.choice(TIMES)}",
    ]
    lines = []
    for _ in range(n):
        core = rng.choice(OFF_TOPIC) if rng.random() < IWP_DRIFT else phrase
        lines.append(_join(rng.choice(OPENERS), core, word, rng.choice(tails)()))
    return lines


def _swap_places(rng: Lcg, text: str) -> str:
    for place in PLACES:
        if re.search(rf"\b{re.escape(place)}\b", text):
            return re.sub(rf"\b{re.escape(place)}\b", rng.choice(PLACES), text, count=1)
    return text


def _ep_lines(rng: Lcg, examples: list[str], n: int) -> list[str]:
    if not examples:
        raise MockGrammarError("exemplar prompt without examples")
    lines = []
    for _ in range(n):
        if rng.random() < EP_DRIFT:
            lines.append(_join(rng.choice(EP_PREFIXES), rng.choice(OFF_TOPIC), rng.choice(TIMES)))
        else:
            base = _swap_places(rng, rng.choice(examples).rstrip("?.!"))
            lines.append(_join(rng.choice(EP_PREFIXES), base, rng.choice(EP_SUFFIXES)))
    return lines


def _slot_pool(label: str, seen: dict) -> list[str]:
    pool = list(SLOT_POOLS.get(label, ()))
    for filler in seen.get(label, ()):
        if filler not in pool:
            pool.append(filler)
    return pool or GENERIC_FILLERS


def _tokens(text: str) -> tuple[ParseNode, ...]:
    return tuple(ParseNode.token(t) for t in text.split())


def _refill(rng: Lcg, node: ParseNode, seen: dict) -> ParseNode:
    if node.kind == TOKEN:
        return node
    if node.kind == SLOT and all(c.kind == TOKEN for c in node.children):
        return ParseNode.slot(node.label, _tokens(rng.choice(_slot_pool(node.label, seen))))
    return ParseNode(node.kind, label=node.label, children=tuple(_refill(rng, c, seen) for c in node.children))


def _well_formed(rng: Lcg, intent: str, slots: list[str], parses: list, seen: dict):
    if parses:
        root = _refill(rng, rng.choice(parses).root, seen)
    else:
        children = list(_tokens("tell me about"))
        for slot in slots:
            children.append(ParseNode.slot(slot, _tokens(rng.choice(_slot_pool(slot, seen)))))
        root = ParseNode.intent(intent, children)
    prefix = rng.choice(PARSE_PREFIXES)
    if prefix:
        root = ParseNode.intent(root.label, _tokens(prefix) + root.children)
    return root


def _corrupt(rng: Lcg, root: ParseNode, how: str) -> str:
    if how == "unbalanced":
        return serialize_node(root)[:-2]
    if how == "oov_intent":
        return serialize_node(ParseNode.intent(rng.choice(OOV_INTENTS), root.children))
    if how == "renamed_slot":
        children = list(root.children)
        for i, child in enumerate(children):
            if child.kind == SLOT:
                children[i] = ParseNode.slot(rng.choice(OOV_SLOTS), child.children)
                return serialize_node(ParseNode.intent(root.label, children))
        how = "oov_slot"
    # wrap one top-level carrier token in an unknown slot
    children = list(root.children)
    positions = [i for i, c in enumerate(children) if c.kind == TOKEN]
    if not positions:
        children.append(ParseNode.token("please"))
        positions = [len(children) - 1]
    i = rng.choice(positions)
    children[i] = ParseNode.slot(rng.choice(OOV_SLOTS), (children[i],))
    return serialize_node(ParseNode.intent(root.label, children))


def _ep_parse_lines(rng: Lcg, intent: str, slots: list[str], examples: list[str], n: int) -> list[str]:
    parses = []
    seen: dict[str, list[str]] = {}
    for example in examples:
        try:
            parse = parse_seqlogical(example)
        except ParseError:
            continue
        parses.append(parse)
        for node in parse.root.walk():
            if node.kind == SLOT and all(c.kind == TOKEN for c in node.children):
                seen.setdefault(node.label, []).append(" ".join(c.text for c in node.children))
    n_bad = round(n * CORRUPTION_RATE)
    bad_positions = sorted(rng.sample(range(n), n_bad)) if n_bad else []
    start = rng.below(len(CORRUPTIONS))
    kinds = {pos: CORRUPTIONS[(start + i) % len(CORRUPTIONS)] for i, pos in enumerate(bad_positions)}
    lines = []
    for i in range(n):
        root = _well_formed(rng, intent, slots, parses, seen)
        lines.append(_corrupt(rng, root, kinds[i]) if i in kinds else serialize_node(root))
    return lines


def _reprompt_line(rng: Lcg, intent: str, line: str, combinations) -> str:
    if rng.random() < REPROMPT_FAILURE:
        return "I'm sorry, I can't fix that sentence."
    pieces = [w for w in re.split(r"[\s\[\]]+", line) if w]
    present = {w for w in pieces if w.startswith("SL:")}
    words = [w for w in pieces if not w.startswith(("IN:", "SL:"))]
    # keep as many of the line's own slots as possible, otherwise the smallest combination
    fitting = [c for c in combinations if len(c) <= len(words)]
    combo = min(fitting, key=lambda c: (-len(present & set(c)), len(c)), default=())
    cut = len(words) - len(combo)
    children = list(_tokens(" ".join(words[:cut])))
    for slot, word in zip(combo, words[cut:]):
        children.append(ParseNode.slot(slot, (ParseNode.token(word),)))
    return serialize_node(ParseNode.intent(intent, children))


def mock_generate(kind: str, seed: int, n: int = 1, **params) -> str:
    """Numbered response lines for ``kind`` (a single bare line for REPROMPT)."""
    rng = Lcg(seed)
    if kind == IWP:
        lines = _iwp_lines(rng, params["intent"], params["word"], n)
    elif kind == EP_TRANSCRIPT:
        lines = _ep_lines(rng, list(params["examples"]), n)
    elif kind == EP_PARSE:
        lines = _ep_parse_lines(rng, params["intent"], list(params.get("slots", ())), list(params.get("examples", ())), n)
    elif kind == REPROMPT:
        return _reprompt_line(rng, params["intent"], params["line"], params.get("combinations", ()))
    else:
        raise MockGrammarError(f"no grammar for prompt kind {kind!r}")
    return "\n".join(f"{i}. {line}" for i, line in enumerate(lines, 1))


def mock_complete(prompt: str, seed: int) -> str:
    kind, params = recognize(prompt)
    n = params.pop("n")
    return mock_generate(kind, derive_seed(seed, prompt), n, **params)
