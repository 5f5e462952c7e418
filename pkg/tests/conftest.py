from pathlib import Path

import pytest

from semforge.dataset import read_jsonl
from semforge.parse_core import load_ontology

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

WEATHER_PARSES = (
    "[IN:GET_WEATHER what kind of weather is in [SL:LOCATION paris ] ]",
    "[IN:GET_WEATHER what is the temperature at the [SL:LOCATION north pole ] ]",
    "[IN:GET_WEATHER tell me what the weather in [SL:LOCATION central park ] is like ]",
)
WEATHER_TRANSCRIPTS = (
    "Is it going to be around 95 in degree Fahrenheit san francisco tomorrow",
    "Is it around 72 in degree celsius karachi tonight",
)


@pytest.fixture(scope="session")
def ontology():
    return load_ontology()


@pytest.fixture(scope="session")
def corpus_path():
    return FIXTURES / "corpus200.jsonl"


@pytest.fixture(scope="session")
def corpus(corpus_path):
    return read_jsonl(corpus_path)
