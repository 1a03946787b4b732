import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fcfsmev.fixtures import generate_fixture


@pytest.fixture(scope="session")
def fixture_chain(tmp_path_factory):
    """A small generated chain shared by ingestion and CLI tests."""
    out = tmp_path_factory.mktemp("chain")
    truth = generate_fixture(str(out), n_blocks=160, seed=5)
    return out, truth


@pytest.fixture(scope="session")
def fixture_blocks(fixture_chain):
    """The same chain as parsed JSON records, keyed by round."""
    out, _ = fixture_chain
    blocks = {}
    with open(out / "fixture.jsonl") as fh:
        for line in fh:
            raw = json.loads(line)
            blocks[raw["round"]] = raw
    return blocks
