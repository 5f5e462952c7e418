import pytest

from conftest import GOLDEN, WEATHER_PARSES, WEATHER_TRANSCRIPTS
from semforge.promptgen import (
    EP_PARSE,
    IWP,
    IntentMismatch,
    NoExamples,
    PromptError,
    TooManyExamples,
    UnknownIntent,
    build_ep_parse_prompt,
    build_ep_transcript_prompt,
    build_iwp_prompt,
    make_batch,
    parse_numbered_response,
    render,
)


def golden(name):
    return (GOLDEN / name).read_text("utf-8").rstrip("\n")


def test_iwp_golden():
    spec = build_iwp_prompt("IN:GET_WEATHER", "weather", n=40)
    assert spec.rendered == golden("iwp_weather.txt")
    assert spec.kind == IWP and spec.n_requested == 40 and spec.intent_word == "weather"


def test_iwp_explicit_descriptions_match_golden():
    descriptions = [("IN:ADD_TIME_TIMER", "Creates a new timer"),
                    ("IN:GET_ESTIMATED_DEPARTURE", "gets estimated departure")]
    assert build_iwp_prompt("IN:GET_WEATHER", "weather", descriptions, 40).rendered == golden("iwp_weather.txt")


def test_iwp_singular_and_determinism():
    one = build_iwp_prompt("IN:GET_WEATHER", "weather", n=1).rendered
    assert "generate 1 utterance that is classified" in one
    assert "to generate 1 utterance." in one
    assert "1 utterances" not in one
    assert build_iwp_prompt("IN:GET_WEATHER", "rain").rendered == build_iwp_prompt("IN:GET_WEATHER", "rain").rendered


def test_iwp_errors():
    with pytest.raises(UnknownIntent):
        build_iwp_prompt("IN:NOPE", "x")
    with pytest.raises(PromptError):
        build_iwp_prompt("IN:GET_WEATHER", "weather", n=0)
    with pytest.raises(PromptError):
        build_iwp_prompt("IN:GET_WEATHER", "  ")


def test_ep_golden():
    assert build_ep_transcript_prompt(WEATHER_TRANSCRIPTS, 60).rendered == golden("ep_weather.txt")


def test_ep_single_example_and_bounds():
    text = build_ep_transcript_prompt(["turn it up"], 5).rendered
    assert text.startswith("Generate 5 more sentences that are similar")
    assert "\n1. turn it up\n" in text and "2. " not in text
    with pytest.raises(TooManyExamples):
        build_ep_transcript_prompt(["a", "b", "c", "d", "e"])
    with pytest.raises(NoExamples):
        build_ep_transcript_prompt([])


def test_ep_parse_golden():
    spec = build_ep_parse_prompt("IN:GET_WEATHER", {"SL:LOCATION"}, WEATHER_PARSES, 30)
    assert spec.rendered == golden("ep_parse_weather.txt")
    assert spec.kind == EP_PARSE and spec.slots == ("SL:LOCATION",)


def test_ep_parse_zero_examples():
    text = build_ep_parse_prompt("IN:GET_WEATHER", ["SL:LOCATION"], [], 30).rendered
    assert "Here are some examples" not in text
    assert "\n1. " not in text
    assert "but with some other text. Write 30" in text


def test_ep_parse_no_slots_and_sorting():
    text = build_ep_parse_prompt("IN:GET_WEATHER", [], [], 2).rendered
    assert "the intent IN:GET_WEATHER and no slots." in text
    assert "like [IN:GET_WEATHER ]" in text
    text = build_ep_parse_prompt("IN:GET_WEATHER", ["SL:LOCATION", "SL:DATE_TIME"], [], 2).rendered
    assert "any of the slots SL:DATE_TIME, SL:LOCATION." in text
    assert "[IN:GET_WEATHER [SL:DATE_TIME] [SL:LOCATION] ]" in text


def test_ep_parse_errors():
    with pytest.raises(IntentMismatch):
        build_ep_parse_prompt("IN:GET_WEATHER", [], ["[IN:OTHER x ]"])
    with pytest.raises(TooManyExamples):
        build_ep_parse_prompt("IN:GET_WEATHER", [], list(WEATHER_PARSES) + [WEATHER_PARSES[0]])


def test_render_rejects_missing_values():
    with pytest.raises(PromptError):
        render("{{a}} {{b}}", a="x")


@pytest.mark.parametrize(
    "raw, lines, rejected",
    [
        ("1. hello\n2. hi there", ["hello", "hi there"], []),
        ("Sure! Here are sentences:\n1. go home", ["go home"], [("Sure! Here are sentences:", "no-numbering-preamble")]),
        ("", [], []),
        ("1) a b\n2: c d\n3 - e f\n- g\n* h", ["a b", "c d", "e f", "g", "h"], []),
        ("1. 2. nested numbering", ["nested numbering"], []),
        ("1.\n2. 123\n3. HELLO\n4. ok", ["ok"],
         [("1.", "empty-after-numbering"), ("2. 123", "no-alphabetic-content"), ("3. HELLO", "no-lowercase-content")]),
        ("1. it is 3.5 degrees", ["it is 3.5 degrees"], []),
        ("plain line without numbers", ["plain line without numbers"], []),
        ("\n\n1. spaced\n\n", ["spaced"], []),
    ],
)
def test_parse_numbered_response(raw, lines, rejected):
    got_lines, got_rejected = parse_numbered_response(raw)
    assert got_lines == lines
    assert got_rejected == rejected


def test_make_batch():
    batch = make_batch(None, "Here you go:\n1. a\n2. b")
    assert batch.lines == ("a", "b")
    assert batch.rejected_lines == (("Here you go:", "no-numbering-preamble"),)
