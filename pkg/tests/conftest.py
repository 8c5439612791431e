import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import load_wordpiece, toy_vocab_units  # noqa: E402


@pytest.fixture
def toy_vocab(tmp_path):
    return load_wordpiece(tmp_path / "vocab.txt", toy_vocab_units())
