"""Python bindings for the enrichkit C++ core."""

import json

from ._enrichkit import (
    COMMANDS,
    Bm25Index,
    EnrichkitError,
    __version__,
    build_qa_prompt,
    map_at_k,
    ndcg_at_k,
    permutation_test,
    porter_stem,
    segment_sentences,
    tokenize,
)
from . import _enrichkit

__all__ = [
    "COMMANDS",
    "Bm25Index",
    "EnrichkitError",
    "__version__",
    "build_qa_prompt",
    "config_hash",
    "map_at_k",
    "ndcg_at_k",
    "permutation_test",
    "porter_stem",
    "run_command",
    "segment_sentences",
    "tokenize",
]


def run_command(name, config):
    """Run a pipeline command. Returns (exit_code, error_dict_or_None, artifacts)."""
    code, error, artifacts = _enrichkit._run_command(name, json.dumps(config))
    return code, (json.loads(error) if error else None), list(artifacts)


def config_hash(config):
    return _enrichkit._config_hash(json.dumps(config))
