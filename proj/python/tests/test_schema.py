import json
import pathlib

import pytest

jsonschema = pytest.importorskip("jsonschema")

SCHEMA = pathlib.Path(__file__).resolve().parents[2] / "docs" / "config.schema.json"


def test_schema_accepts_a_typical_config():
    schema = json.loads(SCHEMA.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    cfg = {
        "n_samples": 2000,
        "seed": 1,
        "tokenizer": {"kind": "bpe", "vocab": "vocab.json", "merges": "merges.txt"},
        "generation": {"temperature": 0, "top_k": None},
        "backend": {"kind": "mock_entropy_noise", "mock_params": {"vocab_size": 1000}},
        "embedi": {"preset": "olmo2"},
    }
    jsonschema.validate(cfg, schema)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"backend": {"kind": "gpt"}}, schema)
