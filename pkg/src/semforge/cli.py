"""``semforge`` command line.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 backend error.
"""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import dataset, jat_embed, metrics, promptgen
from .corpus_stats import build_combo_table, build_intent_word_table, combo_list, load_stopwords
from .llm_gateway import GatewayError, GenerationRequest, make_gateway
from .parse_core import OntologyError, ParseError, load_ontology, parse_seqlogical, serialize, validate_against_ontology
from .pipeline import (
    EXIT_BACKEND,
    EXIT_CONFIG,
    EXIT_VALIDATION,
    ConfigError,
    PipelineError,
    load_config,
    run_pipeline,
)
from .pseudolabel import LabelerError, intent_match_accuracy, make_labeler
from .repair import RepairStats, repair_generated_parse
from .textnorm import NormalizationConfig, normalize


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        message = record.getMessage()
        try:
            payload = json.loads(message)
            if not isinstance(payload, dict):
                raise ValueError
        except ValueError:
            payload = {"message": message}
        return json.dumps({"level": record.levelname.lower(), "logger": record.name, **payload}, sort_keys=True)


def _setup_logging(level: str, log_file: str | None):
    handler = logging.FileHandler(log_file, encoding="utf-8") if log_file else logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter())
    root = logging.getLogger("semforge")
    root.handlers[:] = [handler]
    root.setLevel(level.upper())
    root.propagate = False


def _emit(data):
    click.echo(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))


def _lines(path) -> list[str]:
    stream = click.open_file(path, encoding="utf-8")
    with stream:
        return [line.rstrip("\n") for line in stream if line.strip()]


@click.group()
@click.option("--log-level", default="warning", show_default=True,
              type=click.Choice(["debug", "info", "warning", "error"]))
@click.option("--log-file", type=click.Path(dir_okay=False), help="Write JSON log lines here instead of stderr.")
def cli(log_level, log_file):
    """Seqlogical parse tooling and synthetic data pipelines."""
    _setup_logging(log_level, log_file)


ontology_option = click.option("--ontology", "ontology_path", type=click.Path(exists=True, dir_okay=False),
                               help="Ontology file (defaults to the bundled STOP ontology).")


@cli.command()
@click.argument("corpus", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--parse", "parse_text", help="Validate one seqlogical string instead of a corpus.")
@ontology_option
@click.option("--lenient", is_flag=True, help="Skip schema-invalid lines instead of stopping.")
@click.pass_context
def validate(ctx, corpus, parse_text, ontology_path, lenient):
    """Check records (or one parse) against the schema and ontology."""
    ontology = load_ontology(ontology_path)
    if parse_text is not None:
        report = validate_against_ontology(parse_seqlogical(parse_text), ontology)
        _emit({"ok": report.ok, "problems": report.problems()})
        ctx.exit(0 if report.ok else EXIT_VALIDATION)
    if corpus is None:
        raise click.UsageError("give a corpus path or --parse")
    problems: list = []
    records = dataset.read_jsonl(corpus, lenient=lenient, problems=problems)
    findings = [{"line": line, "problem": message} for line, message in problems]
    for record in records:
        report = validate_against_ontology(record.parse, ontology)
        if not report.ok:
            findings.append({"id": record.id, "problem": "; ".join(report.problems())})
    _emit({"records": len(records), "problems": findings})
    ctx.exit(EXIT_VALIDATION if findings else 0)


@cli.command("normalize")
@click.argument("text", nargs=-1)
@click.option("--input", "input_path", type=click.Path(allow_dash=True), help="Normalize each line of a file.")
@click.option("--no-numbers", is_flag=True, help="Leave digits as they are.")
@click.option("--drop-apostrophes", is_flag=True)
def normalize_cmd(text, input_path, no_numbers, drop_apostrophes):
    """Spoken-form text normalization."""
    config = NormalizationConfig(expand_numbers=not no_numbers, keep_apostrophes=not drop_apostrophes)
    items = [" ".join(text)] if text else _lines(input_path or "-")
    for item in items:
        click.echo(normalize(item, config))


@cli.group()
def stats():
    """Corpus statistics."""


@stats.command("intent-words")
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.option("-k", "k", default=40, show_default=True, type=click.IntRange(min=1))
@click.option("--stopwords", type=click.Path(exists=True, dir_okay=False))
def intent_words(corpus, k, stopwords):
    """Top-k non-stopword words per intent."""
    table = build_intent_word_table(dataset.read_jsonl(corpus), load_stopwords(stopwords), k)
    _emit({intent: [[w, c] for w, c in words] for intent, words in table.items()})


@stats.command("combos")
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
def combos(corpus):
    """Distinct intent / slot-set combinations."""
    _emit([{"intent": intent, "slots": list(slots)}
           for intent, slots in combo_list(build_combo_table(dataset.read_jsonl(corpus)))])


@cli.group()
def prompt():
    """Prompt construction."""


@prompt.command("build")
@click.option("--kind", required=True, type=click.Choice(["iwp", "ep", "ep-parse"]))
@click.option("--intent")
@click.option("--word", help="Intent word (iwp).")
@click.option("--example", "examples", multiple=True, help="Example transcript (ep) or parse (ep-parse).")
@click.option("--slot", "slots", multiple=True)
@click.option("-n", "n", type=int)
@ontology_option
def prompt_build(kind, intent, word, examples, slots, n, ontology_path):
    """Render one prompt to stdout."""
    if kind == "iwp":
        if not intent or not word:
            raise click.UsageError("iwp prompts need --intent and --word")
        spec = promptgen.build_iwp_prompt(intent, word, n=promptgen.DEFAULT_N[promptgen.IWP] if n is None else n,
                                          ontology=load_ontology(ontology_path))
    elif kind == "ep":
        spec = promptgen.build_ep_transcript_prompt(examples, promptgen.DEFAULT_N[promptgen.EP_TRANSCRIPT] if n is None else n,
                                                    target_intent=intent)
    else:
        if not intent:
            raise click.UsageError("ep-parse prompts need --intent")
        spec = promptgen.build_ep_parse_prompt(intent, slots, examples, promptgen.DEFAULT_N[promptgen.EP_PARSE] if n is None else n)
    click.echo(spec.rendered)


backend_options = [
    click.option("--backend", default="mock", show_default=True, type=click.Choice(["mock", "remote"])),
    click.option("--endpoint", help="Chat-completion URL for the remote backend."),
    click.option("--model", default="llama-2-13b-chat", show_default=True),
    click.option("--seed", default=0, show_default=True, type=int),
]


def _with(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@cli.command()
@click.option("--prompt-file", type=click.Path(allow_dash=True), default="-", show_default=True)
@click.option("--lines", "as_lines", is_flag=True, help="Print the cleaned response lines as JSON.")
@_with(backend_options)
def generate(prompt_file, as_lines, backend, endpoint, model, seed):
    """Send one prompt through the gateway."""
    with click.open_file(prompt_file, encoding="utf-8") as fh:
        text = fh.read().rstrip("\n")
    gateway = make_gateway(backend, endpoint=endpoint, model=model)
    response = gateway.complete(GenerationRequest(text, seed=seed))
    if as_lines:
        lines, rejected = promptgen.parse_numbered_response(response.text)
        _emit({"lines": lines, "rejected": [list(r) for r in rejected]})
    else:
        click.echo(response.text)


@cli.command()
@click.argument("input_path", metavar="LINES", type=click.Path(allow_dash=True))
@click.option("--intent", required=True, help="Intent the lines were generated for.")
@ontology_option
def repair(input_path, intent, ontology_path):
    """Repair generated parses; outcomes as JSON lines, stats on stderr."""
    ontology = load_ontology(ontology_path)
    stats = RepairStats()
    for line in _lines(input_path):
        outcome = repair_generated_parse(line, intent, ontology)
        stats.add(outcome)
        click.echo(json.dumps(outcome.to_dict(), ensure_ascii=False))
    click.echo(stats.to_json(), err=True)


@cli.command("pseudo-label")
@click.argument("input_path", metavar="TRANSCRIPTS", type=click.Path(allow_dash=True))
@click.option("--labeler", default="rule-mock", show_default=True, type=click.Choice(["rule-mock", "remote"]))
@click.option("--endpoint")
@click.option("--target-intent", help="Also report intent match accuracy against this intent.")
def pseudo_label(input_path, labeler, endpoint, target_intent):
    """Label transcripts with a parser; one JSON object per line."""
    impl = make_labeler(labeler, endpoint)
    pairs = []
    for transcript in _lines(input_path):
        parse = impl.label(transcript)
        pairs.append((target_intent, parse))
        click.echo(json.dumps({"transcript": transcript, "parse": serialize(parse)}, ensure_ascii=False))
    if target_intent and pairs:
        click.echo(json.dumps({"ima": intent_match_accuracy(pairs), "items": len(pairs)}), err=True)


@cli.command("metrics")
@click.argument("input_path", metavar="ITEMS", type=click.Path(exists=True, dir_okay=False))
@click.option("--form", default="seqlogical", show_default=True, type=click.Choice(metrics.FORMS))
@click.option("--by-run", is_flag=True, help="Report pooled and per-run averages.")
@click.option("--table", "as_table", is_flag=True, help="Plain-text table instead of JSON.")
def metrics_cmd(input_path, form, by_run, as_table):
    """EM, EM(No Err) and EM w/ Err over JSONL evaluation items."""
    items = [metrics.EvalItem.from_dict(json.loads(line)) for line in _lines(input_path)]
    if by_run:
        _emit(metrics.run_average(items, form))
    elif as_table:
        click.echo(metrics.em_report(items, form).table())
    else:
        _emit(metrics.em_report(items, form).to_dict())


@cli.group()
def jat():
    """Mean-embedding representations for text-only data."""


@jat.command("mean")
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.option("--base-dir", type=click.Path(file_okay=False), help="Root for embedding_ref (default: corpus dir).")
@click.option("--out", type=click.Path(dir_okay=False))
def jat_mean(corpus, base_dir, out):
    """Frame-weighted mean over every feature file the corpus references."""
    records = dataset.read_jsonl(corpus)
    mean = jat_embed.compute_mean_embedding(
        jat_embed.iter_record_features(records, base_dir or Path(corpus).parent))
    text = mean.to_json() + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@jat.command("attach")
@click.argument("records_path", metavar="RECORDS", type=click.Path(exists=True, dir_okay=False))
@click.option("--mean", "mean_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--feature-dir", required=True, type=click.Path(file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--frames-per-token", default=4, show_default=True, type=click.IntRange(min=1))
def jat_attach(records_path, mean_path, feature_dir, out, frames_per_token):
    """Write synthesized feature files and point records at them."""
    mean = jat_embed.MeanEmbedding.from_json(Path(mean_path).read_text("utf-8"))
    records = jat_embed.attach_representations(dataset.read_jsonl(records_path), mean, frames_per_token, feature_dir)
    dataset.write_jsonl(records, out)


@cli.command()
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", required=True, type=click.Choice(["ed", "nd", "weather"]))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--k-examples", default=3, show_default=True, type=click.IntRange(min=1))
@click.option("--out", type=click.Path(dir_okay=False), help="Manifest path (default: stdout).")
def split(corpus, policy, seed, k_examples, out):
    """Train/test splits for the augmentation settings."""
    records = dataset.read_jsonl(corpus)
    if policy == "ed":
        manifest = dataset.split_ed(records, seed)
    elif policy == "nd":
        manifest = dataset.split_nd(records)
    else:
        seen, chosen, hidden = dataset.weather_holdout(records, k_examples, seed)
        manifest = dataset.weather_manifest(seen, chosen, hidden, seed, k_examples)
    if out:
        Path(out).write_text(manifest.to_json(), encoding="utf-8")
    else:
        click.echo(manifest.to_json(), nl=False)


@cli.command()
@click.argument("mode", type=click.Choice(["ed", "nd"]))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="key = value configuration file.")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override one configuration key.")
@click.option("--backend", type=click.Choice(["mock", "remote"]))
@click.option("--seed", type=int)
@click.option("--corpus", type=click.Path(dir_okay=False))
@click.option("--output", type=click.Path(file_okay=False))
@click.option("--dry-run", is_flag=True, help="Write the prompt plan and stop before generation.")
def pipeline(mode, config_path, overrides, backend, seed, corpus, output, dry_run):
    """Run the ed or nd augmentation pipeline end to end."""
    values = {"mode": mode}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = value.strip()
    for key, value in (("backend", backend), ("seed", seed), ("corpus", corpus), ("output", output)):
        if value is not None:
            values[key] = Path(value) if key in ("corpus", "output") else value
    if dry_run:
        values["dry_run"] = True
    config = load_config(config_path, values)
    report = run_pipeline(config)
    _emit({"output": str(config.output), "stages": report.stages, "ima": report.ima})


_VALIDATION_ERRORS = (ParseError, dataset.SchemaError, dataset.InsufficientExamples, dataset.UnknownDomain,
                      promptgen.PromptError, metrics.EmptyInput, jat_embed.EmptyStore, jat_embed.DimMismatch,
                      jat_embed.FeatureFormatError, jat_embed.EmptyTranscript)


def main(argv=None) -> int:
    try:
        result = cli.main(args=argv, prog_name="semforge", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_CONFIG
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except (ConfigError, OntologyError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except (GatewayError, LabelerError) as exc:
        click.echo(f"backend error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_BACKEND
    except _VALIDATION_ERRORS as exc:
        click.echo(f"invalid input: {type(exc).__name__}: {exc}", err=True)
        return EXIT_VALIDATION
    except OSError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except ValueError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
