"""semforge: seqlogical parse tooling and synthetic data pipelines for spoken semantic parsing."""
from .parse_core import (
    Ontology,
    ParseError,
    ParseNode,
    SeqlogicalParse,
    extract_transcript,
    load_ontology,
    parse_seqlogical,
    serialize,
    to_decoupled,
    top_intent,
    validate_against_ontology,
)
from .textnorm import NormalizationConfig, normalize

__version__ = "0.1.0"
