"""End-to-end augmentation pipelines.

``ed`` generates transcripts for domains the corpus already covers
(intent-word and exemplar prompts, pseudo-labelled by a parser).
``nd`` holds out a domain and asks for seqlogical parses directly from a
handful of seed examples, repairing what comes back.

Everything written to the output directory is a pure function of the
configuration, so two runs with the same seed give identical trees.
Timing information only goes to the structured log.
"""
from __future__ import annotations

import json
import logging
import shutil
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .corpus_stats import EmptyCorpus, build_combo_table, build_intent_word_table, combo_list, dedup, load_stopwords
from .dataset import InsufficientExamples, Record, SchemaError, read_jsonl, weather_holdout, weather_manifest, write_jsonl
from .jat_embed import (
    EmptyStore,
    MeanEmbedding,
    attach_representations,
    compute_mean_embedding,
    ingest_tts_features,
    iter_record_features,
)
from .llm_gateway import GatewayError, GenerationRequest, make_gateway
from .parse_core import (
    TOKEN,
    OntologyError,
    ParseNode,
    SeqlogicalParse,
    extract_transcript,
    load_ontology,
    serialize,
    top_intent,
)
from .promptgen import (
    EP_PARSE,
    EP_TRANSCRIPT,
    IWP,
    MAX_EP_TRANSCRIPT_EXAMPLES,
    PromptError,
    build_ep_parse_prompt,
    build_ep_transcript_prompt,
    build_iwp_prompt,
    make_batch,
    parse_numbered_response,
)
from .pseudolabel import LabelerError, intent_match_accuracy, make_labeler
from .repair import NEEDS_REPROMPT, RepairStats, build_reprompt, repair_generated_parse
from .rng import Lcg, derive_seed
from .textnorm import normalize

log = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_BACKEND = 0, 1, 2, 3


class ConfigError(ValueError):
    exit_code = EXIT_CONFIG


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it and ``exit_code`` maps to the CLI."""

    def __init__(self, stage: str, message: str, exit_code: int = EXIT_VALIDATION):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.exit_code = exit_code


@dataclass
class PipelineConfig:
    mode: str = "ed"
    backend: str = "mock"
    endpoint: str | None = None
    model: str = "llama-2-13b-chat"
    api_key_env: str = "SEMFORGE_API_KEY"
    labeler: str = "rule-mock"
    labeler_endpoint: str | None = None
    k_intent_words: int = 40
    n_iwp: int = 40
    n_ep: int = 60
    n_ep_parse: int = 30
    k_examples: int = 3
    ep_examples: int = MAX_EP_TRANSCRIPT_EXAMPLES
    frames_per_token: int = 4
    seed: int = 0
    temperature: float = 0.8
    max_tokens: int = 2048
    context_budget: int = 4096
    concurrency: int = 4
    retry_cap: int = 4
    new_domain: str = "weather"
    nd_repr: str = "jat"
    corpus: Path | None = None
    ontology: Path | None = None
    stopwords: Path | None = None
    intent_descriptions: Path | None = None
    mean_embedding: Path | None = None
    tts_dir: Path | None = None
    output: Path | None = None
    dry_run: bool = False

    _PATHS = ("corpus", "ontology", "stopwords", "intent_descriptions", "mean_embedding", "tts_dir", "output")

    def validate(self):
        if self.mode not in ("ed", "nd"):
            raise ConfigError(f"mode must be ed or nd, got {self.mode!r}")
        if self.backend not in ("mock", "remote"):
            raise ConfigError(f"backend must be mock or remote, got {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ConfigError("the remote backend needs endpoint = <url>")
        if self.nd_repr not in ("jat", "tts"):
            raise ConfigError(f"nd_repr must be jat or tts, got {self.nd_repr!r}")
        if self.nd_repr == "tts" and self.tts_dir is None:
            raise ConfigError("nd_repr = tts needs tts_dir")
        for name in ("n_iwp", "n_ep", "n_ep_parse"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("k_intent_words", "k_examples", "ep_examples", "frames_per_token", "concurrency"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.ep_examples > MAX_EP_TRANSCRIPT_EXAMPLES:
            raise ConfigError(f"ep_examples may be at most {MAX_EP_TRANSCRIPT_EXAMPLES}")
        if self.corpus is None:
            raise ConfigError("corpus = <path> is required")
        if self.output is None:
            raise ConfigError("output = <dir> is required")
        return self

    def to_dict(self) -> dict:
        # paths are left out so relocating inputs does not change outputs
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in self._PATHS}


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(PipelineConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown configuration key {name!r}")
    kind = kinds[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("1", "true", "yes")
    except ValueError:
        raise ConfigError(f"{name}: cannot read {raw!r} as {kind}") from None
    if name in PipelineConfig._PATHS:
        return Path(raw) if raw else None
    return raw or None


def parse_config_text(text: str, base_dir: Path | None = None) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Relative paths resolve against ``base_dir``."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "n_per_prompt":
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) != 3:
                raise ConfigError(f"line {lineno}: n_per_prompt needs three integers (iwp, ep, ep_parse)")
            for name, part in zip(("n_iwp", "n_ep", "n_ep_parse"), parts):
                values[name] = _coerce(name, part)
            continue
        value = _coerce(key, raw)
        if isinstance(value, Path) and base_dir is not None and not value.is_absolute():
            value = base_dir / value
        values[key] = value
    return values


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    values = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text("utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values = parse_config_text(text, path.parent)
    for key, raw in (overrides or {}).items():
        values[key] = _coerce(key, raw) if isinstance(raw, str) else raw
    return PipelineConfig(**values).validate()


# -- report -------------------------------------------------------------------


@dataclass
class PipelineReport:
    mode: str
    seed: int
    config: dict
    stages: dict = field(default_factory=dict)
    ima: dict = field(default_factory=dict)
    rejected_lines: dict = field(default_factory=dict)
    repair: dict = field(default_factory=dict)
    yield_per_combo: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in
                ("mode", "seed", "config", "stages", "ima", "rejected_lines", "repair", "yield_per_combo", "outputs")}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


class _Run:
    """Stage bookkeeping: structured timing logs and partial outputs on failure."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.output)
        self.report = PipelineReport(config.mode, config.seed, config.to_dict())
        self.artifacts: dict[str, str] = {}

    def stage(self, name):
        return _Stage(self, name)

    def keep(self, filename: str, text: str):
        self.artifacts[filename] = text

    def prepare_output(self):
        if self.out.exists():
            if not self.out.is_dir():
                raise PipelineError("config", f"{self.out} is not a directory", EXIT_CONFIG)
            entries = list(self.out.iterdir())
            ours = any(e.name in ("report.json", "partial", "plan.json") for e in entries)
            if entries and not ours:
                raise PipelineError("config", f"{self.out} is not empty and holds no previous pipeline output",
                                    EXIT_CONFIG)
            shutil.rmtree(self.out)
        self.out.mkdir(parents=True)

    def write_partial(self, error: PipelineError):
        partial = self.out / "partial"
        partial.mkdir(parents=True, exist_ok=True)
        if (self.out / "features").exists():
            shutil.move(str(self.out / "features"), str(partial / "features"))
        for filename, text in self.artifacts.items():
            (partial / filename).write_text(text, encoding="utf-8", newline="\n")
        self.report.stages["failed"] = {"stage": error.stage, "message": str(error)}
        (partial / "report.json").write_text(self.report.to_json(), encoding="utf-8", newline="\n")

    def finish(self):
        for filename, text in self.artifacts.items():
            (self.out / filename).write_text(text, encoding="utf-8", newline="\n")
        self.report.outputs = {"files": sorted(self.artifacts) + ["report.json"]}
        (self.out / "report.json").write_text(self.report.to_json(), encoding="utf-8", newline="\n")
        return self.report


class _Stage:
    _EXIT = (
        (ConfigError, EXIT_CONFIG),
        (OSError, EXIT_CONFIG),
        (OntologyError, EXIT_CONFIG),
        (GatewayError, EXIT_BACKEND),
        (LabelerError, EXIT_BACKEND),
    )

    def __init__(self, run: _Run, name: str):
        self.run = run
        self.name = name
        self.counts: dict = {}

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = int((time.monotonic() - self.start) * 1000)
        entry = {"stage": self.name, "seed": self.run.config.seed, "elapsed_ms": elapsed, **self.counts}
        if exc is None:
            self.run.report.stages[self.name] = self.counts
            log.info(json.dumps(entry, sort_keys=True))
            return False
        if isinstance(exc, PipelineError):
            return False
        code = next((c for kind, c in self._EXIT if isinstance(exc, kind)), EXIT_VALIDATION)
        message = f"{type(exc).__name__}: {exc}"
        log.error(json.dumps({**entry, "error": message}, sort_keys=True))
        raise PipelineError(self.name, message, code) from exc


def _guarded(run: _Run, body):
    try:
        return body()
    except PipelineError as exc:
        run.write_partial(exc)
        raise


def _dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _jsonl(records) -> str:
    return "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in records)


def _load_inputs(config: PipelineConfig):
    ontology = load_ontology(config.ontology)
    try:
        corpus = read_jsonl(config.corpus)
    except SchemaError as exc:
        raise PipelineError("load", f"{config.corpus}: {exc}", EXIT_VALIDATION) from None
    return ontology, corpus


def _mean_embedding(config: PipelineConfig, records) -> MeanEmbedding:
    if config.mean_embedding is not None:
        return MeanEmbedding.from_json(Path(config.mean_embedding).read_text("utf-8"))
    paired = [r for r in records if r.embedding_ref]
    if not paired:
        raise EmptyStore("no corpus record carries an embedding_ref; set mean_embedding instead")
    return compute_mean_embedding(iter_record_features(paired, Path(config.corpus).parent))


def _attach_jat(run: _Run, records, mean: MeanEmbedding):
    feature_dir = run.out / "features"
    out = attach_representations(records, mean, run.config.frames_per_token, feature_dir, ref_prefix="features")
    run.keep("mean_embedding.json", mean.to_json() + "\n")
    return out


def _gateway(config: PipelineConfig):
    return make_gateway(config.backend, endpoint=config.endpoint, model=config.model,
                        api_key_env=config.api_key_env, concurrency=config.concurrency, retry_cap=config.retry_cap)


def _request(config: PipelineConfig, prompt: str) -> GenerationRequest:
    return GenerationRequest(prompt, max_tokens=config.max_tokens, temperature=config.temperature,
                             seed=config.seed, context_budget=config.context_budget)


# -- existing-domain pipeline ---------------------------------------------------


def plan_ed(config: PipelineConfig, corpus, ontology, stopwords, descriptions=None):
    """IWP: every intent x its top-k words. EP: every seen intent-slot combination."""
    plan = []
    if config.n_iwp:
        table = build_intent_word_table(corpus, stopwords, config.k_intent_words)
        for intent in sorted(table):
            for word, _count in table[intent]:
                plan.append(build_iwp_prompt(intent, word, descriptions, config.n_iwp, ontology))
    if config.n_ep:
        by_combo = defaultdict(list)
        for record in corpus:
            by_combo[record.combination].append(record.transcript)
        for intent, slots in combo_list(build_combo_table(corpus)):
            pool = sorted(set(by_combo[(intent, slots)]))
            rng = Lcg(derive_seed(config.seed, "ep", intent, *slots))
            examples = rng.sample(pool, min(config.ep_examples, len(pool)))
            plan.append(build_ep_transcript_prompt(examples, config.n_ep, target_intent=intent))
    return plan


def _plan_json(plan) -> str:
    entries = [{"index": i, **spec.to_dict()} for i, spec in enumerate(plan)]
    kinds = Counter(spec.kind for spec in plan)
    return _dumps({"prompts": len(plan), "by_kind": dict(sorted(kinds.items())),
                   "utterances_requested": sum(s.n_requested for s in plan), "entries": entries})


def _read_descriptions(path):
    if path is None:
        return None
    out = []
    for line in Path(path).read_text("utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            intent, description = line.split("\t", 1)
            out.append((intent.strip(), description.strip()))
    return out


def run_ed_pipeline(config: PipelineConfig) -> PipelineReport:
    config.validate()
    run = _Run(config)
    run.prepare_output()
    return _guarded(run, lambda: _ed(run))


def _ed(run: _Run) -> PipelineReport:
    config = run.config
    with run.stage("load") as st:
        ontology, corpus = _load_inputs(config)
        stopwords = load_stopwords(config.stopwords)
        descriptions = _read_descriptions(config.intent_descriptions)
        if not corpus:
            raise EmptyCorpus(f"{config.corpus} holds no records")
        st.counts = {"records": len(corpus)}

    with run.stage("plan") as st:
        plan = plan_ed(config, corpus, ontology, stopwords, descriptions)
        run.keep("plan.json", _plan_json(plan))
        st.counts = {"prompts": len(plan), **{k.lower(): v for k, v in sorted(Counter(s.kind for s in plan).items())}}
    if config.dry_run:
        return run.finish()

    with run.stage("generate") as st:
        responses = _gateway(config).complete_many(_request(config, spec.rendered) for spec in plan)
        st.counts = {"responses": len(responses), "empty": sum(not r.text for r in responses)}
        run.keep("responses.jsonl", "".join(json.dumps({"index": i, "text": r.text}) + "\n"
                                            for i, r in enumerate(responses)))

    strategies = {IWP: "iwp", EP_TRANSCRIPT: "ep"}
    with run.stage("parse_responses") as st:
        generated = {name: [] for name in strategies.values()}
        rejected = {name: Counter() for name in strategies.values()}
        for index, (spec, response) in enumerate(zip(plan, responses)):
            name = strategies[spec.kind]
            lines, bad = parse_numbered_response(response.text)
            rejected[name].update(reason for _line, reason in bad)
            generated[name].extend((line, spec.target_intent, spec.intent_word, index) for line in lines)
        run.report.rejected_lines = {name: dict(sorted(c.items())) for name, c in rejected.items()}
        st.counts = {name: len(items) for name, items in generated.items()}

    with run.stage("normalize") as st:
        dropped = Counter()
        for name, items in generated.items():
            kept = []
            for line, intent, word, index in items:
                text = normalize(line)
                if text:
                    kept.append((text, intent, word, index))
                else:
                    dropped[name] += 1
            generated[name] = kept
        st.counts = {f"{name}_dropped_empty": dropped[name] for name in generated}

    with run.stage("dedup") as st:
        seen_text = set()
        for name, items in generated.items():
            kept_texts = set(dedup(text for text, *_ in items))
            unique = []
            for item in items:
                # first occurrence wins, across strategies too
                if item[0] in kept_texts and item[0] not in seen_text:
                    seen_text.add(item[0])
                    unique.append(item)
            st.counts[f"{name}_in"] = len(items)
            st.counts[f"{name}_out"] = len(unique)
            generated[name] = unique

    with run.stage("pseudo_label") as st:
        labeler = make_labeler(config.labeler, config.labeler_endpoint)
        labelled = {name: [(item, labeler.label(item[0])) for item in items] for name, items in generated.items()}
        st.counts = {name: len(items) for name, items in labelled.items()}

    with run.stage("ima") as st:
        for name, items in labelled.items():
            pairs = [(intent, parse) for (_text, intent, _word, _index), parse in items]
            matched = sum(top_intent(parse) == intent for intent, parse in pairs)
            run.report.ima[name] = {
                "items": len(pairs),
                "matched": matched,
                "ima": intent_match_accuracy(pairs) if pairs else None,
            }
        st.counts = {name: run.report.ima[name]["ima"] for name in labelled}

    with run.stage("records") as st:
        records, unsupported = [], 0
        for name, items in labelled.items():
            for n, ((text, intent, word, index), parse) in enumerate(items):
                domain = ontology.domain_of(top_intent(parse))
                if domain is None:
                    unsupported += 1
                    continue
                meta = {"target_intent": intent, "prompt_index": index}
                if word is not None:
                    meta["intent_word"] = word
                records.append(Record(id=f"{name}-{n:06d}", domain=domain, transcript=text,
                                      seqlogical=serialize(parse), source=f"llm_{name}", meta=meta))
        st.counts = {"records": len(records), "dropped_out_of_ontology": unsupported}

    with run.stage("jat") as st:
        mean = _mean_embedding(config, corpus)
        records = _attach_jat(run, records, mean)
        st.counts = {"attached": sum(r.repr == "jat" for r in records), "dim": mean.dim}

    with run.stage("write") as st:
        for record in records:
            record.validate()
        run.keep("augmented.jsonl", _jsonl(records))
        st.counts = {"records": len(records)}
    return run.finish()


# -- new-domain pipeline --------------------------------------------------------


def normalize_parse(parse: SeqlogicalParse) -> SeqlogicalParse | None:
    """Normalize every token in place; ``None`` if a slot or the whole parse empties out."""

    def visit(node: ParseNode):
        out = []
        for child in node.children:
            if child.kind == TOKEN:
                out.extend(ParseNode.token(w) for w in normalize(child.text).split())
            else:
                rebuilt = visit(child)
                if rebuilt is None:
                    return None
                out.append(rebuilt)
        if not out:
            return None
        return ParseNode(node.kind, label=node.label, children=tuple(out))

    root = visit(parse.root)
    return None if root is None else SeqlogicalParse(root)


def _combo_key(intent: str, slots) -> str:
    return f"{intent} {{{', '.join(slots)}}}"


def run_nd_pipeline(config: PipelineConfig) -> PipelineReport:
    config.validate()
    run = _Run(config)
    run.prepare_output()
    return _guarded(run, lambda: _nd(run))


def _nd(run: _Run) -> PipelineReport:
    config = run.config
    with run.stage("load") as st:
        ontology, corpus = _load_inputs(config)
        st.counts = {"records": len(corpus)}

    with run.stage("holdout") as st:
        try:
            seen, chosen, hidden = weather_holdout(corpus, config.k_examples, config.seed, config.new_domain)
        except InsufficientExamples as exc:
            raise PipelineError("holdout", str(exc), EXIT_VALIDATION) from exc
        run.keep("split.json", weather_manifest(seen, chosen, hidden, config.seed, config.k_examples).to_json())
        st.counts = {"seen": len(seen), "seed_examples": len(chosen), "hidden": len(hidden)}

    with run.stage("plan") as st:
        by_combo = defaultdict(list)
        for record in chosen:
            by_combo[record.combination].append(record.parse)
        combos = sorted(by_combo)
        plan = []
        if config.n_ep_parse:
            plan = [build_ep_parse_prompt(intent, slots, by_combo[(intent, slots)], config.n_ep_parse)
                    for intent, slots in combos]
        run.keep("plan.json", _plan_json(plan))
        st.counts = {"combinations": len(combos), "prompts": len(plan)}
    if config.dry_run:
        return run.finish()

    gateway = _gateway(config)
    with run.stage("generate") as st:
        responses = gateway.complete_many(_request(config, spec.rendered) for spec in plan)
        batches = [make_batch(spec, r.text) for spec, r in zip(plan, responses)]
        st.counts = {"responses": len(responses), "lines": sum(len(b.lines) for b in batches),
                     "rejected_lines": sum(len(b.rejected_lines) for b in batches)}
        run.report.rejected_lines = dict(sorted(Counter(
            reason for b in batches for _line, reason in b.rejected_lines).items()))

    with run.stage("repair") as st:
        stats = RepairStats()
        outcomes = []
        for index, batch in enumerate(batches):
            for line_no, line in enumerate(batch.lines):
                outcome = repair_generated_parse(line, batch.spec.target_intent, ontology)
                stats.add(outcome)
                outcomes.append((index, line_no, outcome))
        st.counts = {"lines_in": stats.lines_in, "accepted": stats.accepted, "repaired": stats.repaired,
                     "needs_reprompt": stats.needs_reprompt, "discarded": stats.discarded}
        assert stats.lines_in == stats.accepted + stats.repaired + stats.needs_reprompt + stats.discarded

    with run.stage("reprompt") as st:
        pending = [(i, (index, line_no, o)) for i, (index, line_no, o) in enumerate(outcomes)
                   if o.status == NEEDS_REPROMPT]
        specs = [build_reprompt(o, plan[index], ontology) for _i, (index, _n, o) in pending]
        replies = gateway.complete_many(_request(config, spec.rendered) for spec in specs)
        second = RepairStats()
        for (i, (index, line_no, first)), reply in zip(pending, replies):
            lines, _bad = parse_numbered_response(reply.text)
            outcome = repair_generated_parse(lines[0] if lines else reply.text.strip(), first.target_intent, ontology)
            second.add(outcome)
            if outcome.ok:
                outcomes[i] = (index, line_no, replace(outcome, actions=("reprompted",) + outcome.actions))
        run.report.repair = {"first_pass": stats.to_dict(), "reprompt": second.to_dict()}
        st.counts = {"issued": len(specs), "recovered": second.accepted + second.repaired,
                     "still_invalid": second.needs_reprompt + second.discarded}

    with run.stage("normalize") as st:
        records, changed, dropped = [], 0, 0
        yields = Counter()
        for index, line_no, outcome in outcomes:
            if not outcome.ok:
                continue
            intent, slots = combos[index]
            parse = normalize_parse(outcome.parse)
            if parse is None:
                dropped += 1
                continue
            if serialize(parse) != serialize(outcome.parse):
                changed += 1
            yields[_combo_key(intent, slots)] += 1
            records.append(Record(
                id=f"nd-{index:03d}-{line_no:03d}",
                domain=ontology.domain_of(top_intent(parse)) or config.new_domain,
                transcript=extract_transcript(parse),
                seqlogical=serialize(parse),
                source="llm_ep_parse",
                meta={"target_intent": intent, "combination": list(slots), "repair": list(outcome.actions)},
            ))
        run.report.yield_per_combo = {
            _combo_key(intent, slots): {"requested": config.n_ep_parse if config.n_ep_parse else 0,
                                        "kept": yields[_combo_key(intent, slots)]}
            for intent, slots in combos
        }
        st.counts = {"records": len(records), "renormalized": changed, "dropped_empty": dropped}

    with run.stage("representation") as st:
        missing = []
        if config.nd_repr == "tts":
            records, missing = ingest_tts_features(records, config.tts_dir)
        need_jat = [r for r in records if r.embedding_ref is None]
        if need_jat:
            mean = _mean_embedding(config, seen)
            attached = {r.id: r for r in _attach_jat(run, need_jat, mean)}
            records = [attached.get(r.id, r) for r in records]
        st.counts = {"tts": sum(r.repr == "tts" for r in records), "jat": sum(r.repr == "jat" for r in records),
                     "tts_missing": len(missing)}

    with run.stage("write") as st:
        for record in records:
            record.validate()
        run.keep("augmented.jsonl", _jsonl(records))
        run.keep("seed_examples.jsonl", _jsonl(chosen))
        st.counts = {"records": len(records)}
    return run.finish()


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    return run_ed_pipeline(config) if config.mode == "ed" else run_nd_pipeline(config)
