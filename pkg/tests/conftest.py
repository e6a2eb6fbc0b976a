import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthdata import write_word_vectors  # noqa: E402


@pytest.fixture(scope="session")
def word_vector_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("wordvecs") / "vectors.txt"
    return write_word_vectors(path)


@pytest.fixture(scope="session")
def word_table(word_vector_file):
    from sherlock.features.words import load_word_vectors
    return load_word_vectors(word_vector_file)
