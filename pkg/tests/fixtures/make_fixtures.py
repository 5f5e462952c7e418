"""Regenerate the frozen test fixtures.

    python3 tests/fixtures/make_fixtures.py

Output is a pure function of this file, so rerunning it leaves the
checked-in fixtures unchanged.
"""
from __future__ import annotations

import re
import shutil
from pathlib import Path

import numpy as np

from semforge.dataset import Record, write_jsonl
from semforge.jat_embed import EmbeddingMatrix, feature_filename, write_features
from semforge.parse_core import ParseNode, SeqlogicalParse, extract_transcript, serialize
from semforge.rng import Lcg

HERE = Path(__file__).resolve().parent
FEATURE_DIM = 8
N_WITH_FEATURES = 40

FILL = {
    "LOCATION": ["paris", "london", "boston", "new york", "chicago", "seattle", "miami", "denver",
                 "the north pole", "central park", "austin", "tokyo"],
    "DATE_TIME": ["tomorrow", "tonight", "this weekend", "on monday", "next week", "today", "this afternoon",
                  "on friday", "tomorrow morning", "at noon"],
    "WEATHER_ATTRIBUTE": ["rain", "snow", "sunny", "windy", "cloudy", "humid", "foggy"],
    "WEATHER_TEMPERATURE_UNIT": ["fahrenheit", "celsius"],
    "ALARM_NAME": ["work", "gym", "school", "medicine"],
    "DURATION": ["ten minutes", "five minutes", "an hour", "half an hour", "twenty minutes"],
    "CATEGORY_EVENT": ["concerts", "festivals", "events", "shows", "parades"],
    "RECIPIENT": ["mom", "dad", "john", "sarah", "emily", "alex"],
    "SENDER": ["mom", "dad", "john", "sarah", "emily", "alex"],
    "CONTENT_EXACT": ["i am running late", "see you soon", "call me back", "dinner is ready"],
    "CONTENT_EMOJI": ["a heart", "a thumbs up", "a laughing face", "a smiley"],
    "MUSIC_GENRE": ["jazz", "rock", "country", "classical", "hip hop"],
    "MUSIC_ARTIST_NAME": ["adele", "drake", "taylor swift", "coldplay", "the beatles"],
    "MUSIC_TYPE": ["song", "music", "track", "album"],
    "DESTINATION": ["the airport", "work", "downtown", "the mall", "the beach", "boston"],
    "SOURCE": ["home", "the office", "school"],
    "DATE_TIME_ARRIVAL": ["by nine", "by noon", "before lunch", "by tonight"],
    "DATE_TIME_DEPARTURE": ["now", "at eight", "after lunch", "in an hour"],
    "METHOD_TRAVEL": ["driving", "walking", "by bus", "by bike"],
    "CATEGORY_LOCATION": ["coffee shop", "gas station", "pharmacy", "grocery store"],
    "PERSON_REMINDED": ["me", "dad", "sarah"],
    "TODO": ["call the bank", "buy milk", "pick up the kids", "take out the trash", "pay rent"],
    "METHOD_TIMER": ["timer", "stopwatch"],
}

# (template, count); {NAME} is a slot span, everything else is carrier text
TEMPLATES = {
    "alarm": {
        "CREATE_ALARM": [("set an alarm for {DATE_TIME}", 4), ("wake me up {DATE_TIME} for {ALARM_NAME}", 3)],
        "GET_ALARM": [("what alarms do i have {DATE_TIME}", 4), ("show my alarms", 3)],
        "DELETE_ALARM": [("delete my alarm for {DATE_TIME}", 4), ("cancel all alarms", 2)],
        "SILENCE_ALARM": [("silence the alarm", 3), ("turn off the alarm", 2)],
        "SNOOZE_ALARM": [("snooze for {DURATION}", 3), ("snooze the alarm", 2)],
    },
    "event": {
        "GET_EVENT": [("are there any {CATEGORY_EVENT} in {LOCATION} {DATE_TIME}", 4),
                      ("what {CATEGORY_EVENT} are happening {DATE_TIME}", 3), ("find {CATEGORY_EVENT} near me", 2)],
    },
    "messaging": {
        "SEND_MESSAGE": [("send a message to {RECIPIENT} saying {CONTENT_EXACT}", 4), ("text {RECIPIENT}", 3)],
        "GET_MESSAGE": [("read my messages from {SENDER}", 4), ("do i have new messages", 2)],
        "REACT_MESSAGE": [("react with {CONTENT_EMOJI} to the message from {SENDER}", 4)],
    },
    "music": {
        "PLAY_MUSIC": [("play some {MUSIC_GENRE} music", 4), ("play {MUSIC_ARTIST_NAME}", 3),
                       ("play the latest {MUSIC_TYPE} by {MUSIC_ARTIST_NAME}", 2)],
        "PAUSE_MUSIC": [("pause the {MUSIC_TYPE}", 3), ("pause", 3)],
        "SKIP_TRACK_MUSIC": [("skip this {MUSIC_TYPE}", 4), ("skip ahead", 3)],
        "LIKE_MUSIC": [("i like this {MUSIC_TYPE}", 3), ("thumbs up this {MUSIC_TYPE}", 2)],
    },
    "navigation": {
        "GET_ESTIMATED_DEPARTURE": [("when should i leave for {DESTINATION} to get there {DATE_TIME_ARRIVAL}", 4),
                                    ("what time should i leave for {DESTINATION}", 2)],
        "GET_ESTIMATED_ARRIVAL": [("when will i arrive at {DESTINATION} if i leave {DATE_TIME_DEPARTURE}", 4),
                                  ("what is my arrival time to {DESTINATION}", 2)],
        "GET_DIRECTIONS": [("directions to {DESTINATION}", 3), ("give me {METHOD_TRAVEL} directions to {DESTINATION}", 2),
                           ("directions to the nearest {CATEGORY_LOCATION}", 2)],
        "GET_DISTANCE": [("how far is {DESTINATION} from {SOURCE}", 3), ("what is the distance to {DESTINATION}", 2)],
        "GET_INFO_TRAFFIC": [("how is traffic to {DESTINATION}", 3), ("is there traffic {DATE_TIME}", 2)],
        "GET_LOCATION": [("where is the closest {CATEGORY_LOCATION}", 3),
                         ("find the nearest {CATEGORY_LOCATION} in {LOCATION}", 2)],
    },
    "reminder": {
        "CREATE_REMINDER": [("remind {PERSON_REMINDED} to {TODO} {DATE_TIME}", 4), ("remind me to {TODO}", 3),
                            ("set a reminder to {TODO} {DATE_TIME}", 2)],
        "GET_REMINDER": [("what reminders do i have {DATE_TIME}", 4), ("show my reminders", 2)],
        "DELETE_REMINDER": [("delete the reminder to {TODO}", 4), ("cancel my reminder", 2)],
    },
    "timer": {
        "CREATE_TIMER": [("set a {METHOD_TIMER} for {DURATION}", 4), ("start a {METHOD_TIMER}", 3)],
        "ADD_TIME_TIMER": [("add {DURATION} to the {METHOD_TIMER}", 4), ("add more time", 1)],
        "GET_TIMER": [("how much time is left on the {METHOD_TIMER}", 4), ("check the timer", 1)],
        "DELETE_TIMER": [("cancel the {METHOD_TIMER}", 4), ("stop timer", 1)],
    },
    "weather": {
        "GET_WEATHER": [
            ("what kind of weather is in {LOCATION}", 4),
            ("what is the weather {DATE_TIME}", 4),
            ("is it going to {WEATHER_ATTRIBUTE}", 4),
            ("what is the forecast for {LOCATION} {DATE_TIME}", 4),
            ("will it {WEATHER_ATTRIBUTE} in {LOCATION}", 4),
            ("will it be {WEATHER_ATTRIBUTE} {DATE_TIME}", 4),
            ("will it {WEATHER_ATTRIBUTE} in {LOCATION} {DATE_TIME}", 4),
            ("what is the temperature in {WEATHER_TEMPERATURE_UNIT} in {LOCATION}", 4),
            ("how is the weather", 4),
        ],
        "GET_SUNSET": [("when is sunset in {LOCATION}", 4)],
    },
}

_PIECE = re.compile(r"\{([A-Z_]+)\}|([^{}]+)")


def build_parse(rng: Lcg, intent: str, template: str) -> SeqlogicalParse:
    children = []
    for slot, text in _PIECE.findall(template):
        if slot:
            words = rng.choice(FILL[slot]).split()
            children.append(ParseNode.slot(f"SL:{slot}", [ParseNode.token(w) for w in words]))
        else:
            children.extend(ParseNode.token(w) for w in text.split())
    return SeqlogicalParse(ParseNode.intent(f"IN:{intent}", children))


def corpus_records(seed: int = 2023) -> list[Record]:
    rng = Lcg(seed)
    records = []
    for domain, intents in TEMPLATES.items():
        for intent, templates in intents.items():
            for template, count in templates:
                for _ in range(count):
                    parse = build_parse(rng, intent, template)
                    records.append(Record(
                        id=f"stop-{len(records):04d}",
                        domain=domain,
                        transcript=extract_transcript(parse),
                        seqlogical=serialize(parse),
                    ))
    return records


def with_features(records: list[Record], out_dir: Path, seed: int = 11) -> list[Record]:
    """Give an evenly spaced subset real feature files under ``out_dir``."""
    gen = np.random.default_rng(seed)
    step = len(records) // N_WITH_FEATURES
    chosen = set(range(0, step * N_WITH_FEATURES, step))
    out = []
    for i, record in enumerate(records):
        if i in chosen:
            n_frames = 3 * len(record.transcript.split()) + int(gen.integers(0, 5))
            frames = gen.normal(0.0, 1.0, size=(n_frames, FEATURE_DIM)).astype(np.float32)
            name = feature_filename(record.id)
            write_features(out_dir / name, EmbeddingMatrix(frames))
            record = Record(**{**record.to_dict(), "embedding_ref": f"features/{name}", "repr": "real",
                               "audio_ref": f"audio/{record.id}.wav"})
        out.append(record)
    return out


def main():
    features = HERE / "features"
    if features.exists():
        shutil.rmtree(features)
    features.mkdir()
    records = with_features(corpus_records(), features)
    assert len(records) == 200, len(records)
    write_jsonl(records, HERE / "corpus200.jsonl")
    print(f"wrote {len(records)} records")


if __name__ == "__main__":
    main()
