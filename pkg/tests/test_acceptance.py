"""Acceptance criteria, one test each, printing a PASS/FAIL line at its tolerance."""
import hashlib
import random
import re
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import FIXTURES, GOLDEN, WEATHER_PARSES, WEATHER_TRANSCRIPTS
from semforge.corpus_stats import build_intent_word_table, load_stopwords
from semforge.dataset import ND_PART_A, ND_PART_B, Record, split_ed, split_nd, weather_holdout
from semforge.jat_embed import EmbeddingMatrix, MeanAccumulator, compute_mean_embedding
from semforge.metrics import EvalItem, em_report
from semforge.mock_llm import mock_complete
from semforge.parse_core import ParseError, extract_transcript, parse_seqlogical, serialize, validate_against_ontology
from semforge.pipeline import PipelineConfig, run_pipeline
from semforge.promptgen import build_ep_parse_prompt, build_ep_transcript_prompt, build_iwp_prompt, make_batch
from semforge.pseudolabel import intent_match_accuracy
from semforge.repair import DISCARDED, repair_generated_parse
from treegen import random_tree, render

@pytest.fixture
def verdict(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"
    return emit


def test_parse_round_trip_and_fuzz(verdict):
    rng = random.Random(20231)
    start = time.perf_counter()
    survived = 0
    for _ in range(10_000):
        parse = random_tree(rng)
        text = render(parse.root)
        again = parse_seqlogical(text)
        survived += again == parse and parse_seqlogical(serialize(again)) == parse
    crashes = 0
    alphabet = b"[]IN:SL_AZaz \t\n"
    for i in range(10_000):
        n = rng.randrange(0, 64)
        if i % 2:
            raw = bytes(rng.randrange(256) for _ in range(n))
        else:
            raw = bytes(rng.choice(alphabet) for _ in range(n))
        try:
            parse_seqlogical(raw.decode("utf-8", errors="replace"))
        except ParseError:
            pass
        except Exception:  # noqa: BLE001 - any other exception is a crash
            crashes += 1
    elapsed = time.perf_counter() - start
    ok = survived == 10_000 and crashes == 0 and elapsed < 10.0
    verdict("parse round-trip", ok, f"{survived}/10000 round-trips, {crashes} fuzz crashes, {elapsed:.2f}s (< 10 s)")


def test_example_transcripts(verdict):
    expected = [
        "what kind of weather is in paris",
        "what is the temperature at the north pole",
        "tell me what the weather in central park is like",
    ]
    got = [extract_transcript(parse_seqlogical(text)) for text in WEATHER_PARSES]
    verdict("example transcripts", got == expected, f"{sum(g == e for g, e in zip(got, expected))}/3 exact")


def test_prompt_goldens(verdict):
    rendered = {
        "iwp_weather.txt": build_iwp_prompt("IN:GET_WEATHER", "weather", n=40).rendered,
        "ep_weather.txt": build_ep_transcript_prompt(WEATHER_TRANSCRIPTS, 60).rendered,
        "ep_parse_weather.txt": build_ep_parse_prompt("IN:GET_WEATHER", ["SL:LOCATION"], WEATHER_PARSES, 30).rendered,
    }
    same = [name for name, text in rendered.items()
            if text.encode() == (GOLDEN / name).read_text("utf-8").rstrip("\n").encode()]
    verdict("prompt goldens", len(same) == 3, f"{len(same)}/3 byte-identical")


# -- metric oracle ---------------------------------------------------------------

_TOKEN = re.compile(r"\[|\]|[^\s\[\]]+")


def _oracle_em(hyp, ref):
    # refs are well formed, so an equal token stream implies a well-formed hyp
    return _TOKEN.findall(hyp) == _TOKEN.findall(ref)


def _oracle_words(text):
    return re.sub(r"[^a-z' ]", " ", text.lower()).split()


def _respace(text, rng):
    # extra whitespace only where the bracket grammar allows it
    return re.sub(r" ", lambda _m: rng.choice([" ", "  ", "\t", " \n "]), text)


def _random_item(rng, run):
    ref_tree = random_tree(rng)
    ref = render(ref_tree.root)
    roll = rng.random()
    if roll < 0.45:
        hyp = _respace(ref, rng)
    elif roll < 0.8:
        hyp = render(random_tree(rng).root)
    elif roll < 0.9:
        hyp = ref[:-1]
    else:
        hyp = ref.replace("[", "[ ", 1) if rng.random() < 0.5 else "garbage"
    words = [w for w in ref_tree.tokens() if re.fullmatch(r"[a-z']+", w)] or ["hello"]
    transcript = " ".join(words)
    asr_roll = rng.random()
    if asr_roll < 0.4:
        asr = transcript
    elif asr_roll < 0.6:
        asr = transcript.upper() + "."
    elif asr_roll < 0.8:
        asr = transcript + " extra"
    else:
        asr = None
    return EvalItem(ref, hyp, transcript, asr, run)


def test_metric_oracle(verdict):
    rng = random.Random(777)
    mismatches = identity_failures = 0
    for _ in range(1000):
        items = [_random_item(rng, None) for _ in range(rng.randint(1, 200))]
        n = [0, 0, 0]
        hit = [0, 0, 0]
        for item in items:
            correct = _oracle_em(item.hypothesis_parse, item.reference_parse)
            n[0] += 1
            hit[0] += correct
            if item.asr_hypothesis is not None:
                err = _oracle_words(item.reference_transcript) != _oracle_words(item.asr_hypothesis)
                n[1 + err] += 1
                hit[1 + err] += correct
        report = em_report(items)
        expected = tuple(Fraction(h, c) if c else None for h, c in zip(hit, n))
        mismatches += (report.em, report.em_no_err, report.em_w_err) != expected or report.counts != tuple(n)
        # overall EM over items with an ASR hypothesis equals the count-weighted strata
        strata = [x for x in (report.em_no_err, report.em_w_err) if x is not None]
        if strata:
            weighted = sum(((report.em_no_err or 0) * n[1], (report.em_w_err or 0) * n[2]), Fraction(0))
            with_asr = em_report([i for i in items if i.asr_hypothesis is not None])
            identity_failures += with_asr.em * (n[1] + n[2]) != weighted
        pairs = []
        for item in items:
            parse = parse_seqlogical(item.reference_parse)
            desired = rng.choice(["IN:GET_WEATHER", "IN:A", "IN:X_1", "IN:PLAY_MUSIC"])
            pairs.append((desired, parse))
        oracle_hits = sum(re.match(r"\[(IN:[^\s\]]+)", serialize(p)).group(1) == d for d, p in pairs)
        mismatches += intent_match_accuracy(pairs) != oracle_hits / len(pairs)
    ok = mismatches == 0 and identity_failures == 0
    verdict("metric oracle", ok, f"{mismatches} mismatching sets, {identity_failures} identity failures of 1000 (exact)")


def test_intent_word_oracle(verdict):
    rng = random.Random(5)
    stop = load_stopwords()
    vocab = ["rain", "snow", "alarm", "music", "the", "a", "to", "timer", "song", "wake", "jazz", "sun", "is"]
    paired = ["zeta", "beta"]
    intents = ["IN:GET_WEATHER", "IN:CREATE_ALARM", "IN:PLAY_MUSIC", "IN:CREATE_TIMER", "IN:GET_SUNSET"]
    records = []
    for i in range(5000):
        words = [rng.choice(vocab) for _ in range(rng.randint(1, 6))]
        if rng.random() < 0.5:
            # these always co-occur, so their counts tie
            words += paired if rng.random() < 0.5 else paired[::-1]
        intent = rng.choice(intents)
        if rng.random() < 0.3 and len(words) > 1:
            seq = f"[{intent} {words[0]} [SL:LOCATION {' '.join(words[1:])} ] ]"
        else:
            seq = f"[{intent} {' '.join(words)} ]"
        records.append(Record(id=f"w{i}", domain="weather", transcript=" ".join(words), seqlogical=seq))
    k = 8
    oracle = {}
    for intent in sorted({re.match(r"\[(IN:[^\s\]]+)", r.seqlogical).group(1) for r in records}):
        counts = {}
        for word in vocab + paired:
            if word in stop:
                continue
            c = 0
            for r in records:
                if re.match(r"\[(IN:[^\s\]]+)", r.seqlogical).group(1) == intent:
                    for token in r.transcript.split():
                        c += token == word
            if c:
                counts[word] = c
        ranked = []
        while counts and len(ranked) < k:
            best = None
            for word, c in counts.items():
                if best is None or c > best[1] or (c == best[1] and word < best[0]):
                    best = (word, c)
            ranked.append(best)
            del counts[best[0]]
        oracle[intent] = ranked
    table = build_intent_word_table(records, stop, k)
    ties = sum(a[1] == b[1] for v in table.values() for a, b in zip(v, v[1:]))
    verdict("intent-word oracle", table == oracle,
            f"{len(table)} intents equal to nested-loop recount on 5000 records ({ties} adjacent ties)")


def test_jat_mean(verdict):
    rng = np.random.default_rng(42)
    lengths = []
    total = 0
    while total < 100_000:
        n = int(rng.integers(20, 400))
        n = min(n, 100_000 - total)
        lengths.append(n)
        total += n
    offsets = np.array([1e3, -5.0, 0.25, 40.0, 0.0, 1e-3, -2e2, 7.0])
    blocks = [EmbeddingMatrix((offsets + rng.normal(0, 3, size=(n, 8))).astype(np.float32)) for n in lengths]
    stacked = np.concatenate([b.frames for b in blocks]).astype(np.float64)
    first = stacked.sum(axis=0) / len(stacked)
    oracle = first + (stacked - first).sum(axis=0) / len(stacked)

    base = compute_mean_embedding(blocks).vector
    order = list(range(len(blocks)))
    random.Random(3).shuffle(order)
    shuffled = compute_mean_embedding([blocks[i] for i in order]).vector
    shards = [MeanAccumulator() for _ in range(7)]
    for i in order:
        shards[i % 7].add(blocks[i])
    merged = MeanAccumulator()
    for shard in shards:
        merged.merge(shard)
    chunked = merged.result().vector
    worst = max(np.abs(v - oracle).max() for v in (base, shuffled, chunked))
    verdict("embedding mean", worst <= 1e-6 and merged.result().n_frames_seen == 100_000,
            f"max |delta| {worst:.2e} over {len(blocks)} utterances / 100000 frames (<= 1e-6)")


def _mock_stream(corpus, n_lines=1000, seed=7):
    _seen, chosen, _hidden = weather_holdout(corpus, 3, seed)
    by_combo = {}
    for record in chosen:
        by_combo.setdefault(record.combination, []).append(record.parse)
    lines = []
    round_ = 0
    while len(lines) < n_lines:
        for (intent, slots), examples in sorted(by_combo.items()):
            spec = build_ep_parse_prompt(intent, slots, examples, 30)
            batch = make_batch(spec, mock_complete(spec.rendered, seed + round_))
            lines.extend((intent, line) for line in batch.lines)
        round_ += 1
    return lines[:n_lines]


def test_repair_properties(verdict, corpus, ontology):
    stream = _mock_stream(corpus)
    bad_valid = bad_tokens = kept = 0
    statuses = Counter()
    for intent, line in stream:
        outcome = repair_generated_parse(line, intent, ontology)
        statuses[outcome.status] += 1
        if outcome.status == DISCARDED:
            continue
        before = extract_transcript(parse_seqlogical(line))
        if outcome.parse is not None and extract_transcript(outcome.parse).split() != before.split():
            bad_tokens += 1
        if outcome.ok:
            kept += 1
            report = validate_against_ontology(outcome.parse, ontology)
            bad_valid += not (report.ok and report.problems() == [])
    ok = len(stream) == 1000 and bad_valid == 0 and bad_tokens == 0
    verdict("repair properties", ok,
            f"{kept} kept of {len(stream)} lines {dict(sorted(statuses.items()))}; "
            f"{bad_valid} invalid outputs, {bad_tokens} token changes")


STOP_PROPORTIONS = {"messaging": 160, "reminder": 150, "timer": 120, "weather": 177,
                    "alarm": 140, "event": 110, "music": 100, "navigation": 251}


def _proportioned_corpus():
    records = []
    for domain, count in STOP_PROPORTIONS.items():
        for i in range(count):
            records.append(Record(id=f"{domain}-{i}", domain=domain, transcript=f"u{i}",
                                  seqlogical=f"[IN:GET_WEATHER u{i} ]"))
    random.Random(1).shuffle(records)
    return records


def test_split_properties(verdict, corpus):
    records = _proportioned_corpus()
    worst = 0
    for seed in range(20):
        split = split_ed(records, seed)
        a, b = set(split.part_a), set(split.part_b)
        for domain in STOP_PROPORTIONS:
            ids = {r.id for r in records if r.domain == domain}
            worst = max(worst, abs(len(ids & a) - len(ids & b)))
    partition = ND_PART_A == ("messaging", "reminder", "timer", "weather") and \
        ND_PART_B == ("alarm", "event", "music", "navigation")
    rel = []
    for data in (records, corpus):
        split = split_nd(data)
        domain_of = {r.id: r.domain for r in data}
        partition &= {domain_of[i] for i in split.part_a} <= set(ND_PART_A)
        partition &= {domain_of[i] for i in split.part_b} <= set(ND_PART_B)
        a, b = len(split.part_a), len(split.part_b)
        rel.append(abs(a - b) / max(a, b))
    ok = worst <= 1 and partition and max(rel) <= 0.05
    verdict("split properties", ok,
            f"ed worst per-domain imbalance {worst} (<= 1, 20 seeds); nd partition exact={partition}, "
            f"relative differences {', '.join(f'{r:.3f}' for r in rel)} (<= 0.05)")


def _tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(str(path.relative_to(root)).encode() + b"\0" + path.read_bytes() + b"\0")
    return h.hexdigest()


def test_end_to_end_determinism(verdict, tmp_path):
    digests = {}
    reports = {}
    for mode in ("ed", "nd"):
        for attempt in ("first", "second"):
            out = tmp_path / f"{mode}-{attempt}"
            reports[mode] = run_pipeline(PipelineConfig(mode=mode, corpus=FIXTURES / "corpus200.jsonl",
                                                        output=out, seed=7))
            digests[mode, attempt] = _tree_digest(out)
    same = all(digests[m, "first"] == digests[m, "second"] for m in ("ed", "nd"))
    iwp, ep = reports["ed"].ima["iwp"]["ima"], reports["ed"].ima["ep"]["ima"]
    verdict("end-to-end determinism", same and iwp > ep,
            f"ed {digests['ed', 'first'][:12]} nd {digests['nd', 'first'][:12]} identical={same}; "
            f"IMA iwp {iwp:.4f} > ep {ep:.4f}")


def test_iwp_scheduling(verdict, tmp_path, ontology):
    import json
    records = []
    for i, intent in enumerate(sorted(ontology.intents)):
        stem = re.sub(r"[^a-z]", "", intent.lower())
        for r in range(10):
            words = [f"{stem}q{r * 5 + j}" for j in range(5)]
            records.append(Record(id=f"s{i}-{r}", domain=ontology.domain_of(intent), transcript=" ".join(words),
                                  seqlogical=f"[{intent} {' '.join(words)} ]"))
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text("".join(json.dumps(r.to_dict()) + "\n" for r in records))
    report = run_pipeline(PipelineConfig(corpus=corpus, output=tmp_path / "out", k_intent_words=40, n_iwp=40,
                                         n_ep=0, dry_run=True))
    plan = json.loads((tmp_path / "out" / "plan.json").read_text())
    per_prompt = {e["n_requested"] for e in plan["entries"]}
    ok = (len(ontology.intents) == 28 and plan["prompts"] == 1120 and plan["by_kind"] == {"IWP": 1120}
          and per_prompt == {40} and plan["utterances_requested"] == 1120 * 40
          and report.stages["plan"]["prompts"] == 1120)
    verdict("iwp scheduling", ok,
            f"{plan['prompts']} prompts for {len(ontology.intents)} intents x 40 words, n per prompt {sorted(per_prompt)}")
