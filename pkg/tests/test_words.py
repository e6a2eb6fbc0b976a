import numpy as np
import pytest

from sherlock.corpus import Column
from sherlock.errors import DataError
from sherlock.features.words import (WordVectorTable, extract_word_features,
                                     load_word_vectors, tokenize_value,
                                     value_vectors)


def make_table(entries: dict[str, list[float]]) -> WordVectorTable:
    dim = len(next(iter(entries.values())))
    return WordVectorTable({k: np.array(v, dtype=float) for k, v in entries.items()}, dim)


class TestLoader:
    def test_basic_parse(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("hat 0.1 0.2\ncat 0.3 0.4\n")
        t = load_word_vectors(p)
        assert len(t) == 2 and t.dimension == 2
        np.testing.assert_allclose(t.get("hat"), [0.1, 0.2])

    def test_dimension_mismatch_names_line(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("hat 0.1 0.2\ncat 0.3 0.4 0.5\n")
        with pytest.raises(DataError, match=":2"):
            load_word_vectors(p)

    def test_bad_float(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("hat zero 0.2\n")
        with pytest.raises(DataError, match=":1"):
            load_word_vectors(p)

    def test_duplicates_keep_first_and_casefold(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("Hat 0.1 0.2\nhat 0.9 0.9\n")
        t = load_word_vectors(p)
        assert len(t) == 1
        np.testing.assert_allclose(t.get("hat"), [0.1, 0.2])

    def test_empty_file(self, tmp_path):
        p = tmp_path / "v.txt"
        p.write_text("")
        with pytest.raises(DataError):
            load_word_vectors(p)


def test_tokenize_strips_punctuation_and_casefolds():
    assert tokenize_value("Hello, World!") == ["hello", "world"]
    assert tokenize_value("  ") == []
    assert tokenize_value("'''") == []


class TestExtract:
    def test_constant_column(self):
        t = make_table({"hat": [0.1, 0.2]})
        f = extract_word_features(Column(("hat", "hat")), t)
        d = t.dimension
        np.testing.assert_allclose(f[0:d], [0.1, 0.2])          # mean
        np.testing.assert_allclose(f[d:2 * d], [0.1, 0.2])      # mode
        np.testing.assert_allclose(f[2 * d:3 * d], [0.1, 0.2])  # median
        np.testing.assert_allclose(f[3 * d:4 * d], [0.0, 0.0])  # variance
        assert f[-1] == 1.0

    def test_multiword_value_mean(self):
        t = make_table({"hat": [0.1, 0.2], "cat": [0.3, 0.4]})
        vv = value_vectors(Column(("hat cat",)), t)
        np.testing.assert_allclose(vv, [[0.2, 0.3]])

    def test_duplicate_tokens_within_value_count_once(self):
        t = make_table({"hat": [0.1, 0.2], "cat": [0.7, 0.8]})
        vv = value_vectors(Column(("hat hat cat",)), t)
        np.testing.assert_allclose(vv, [[0.4, 0.5]])

    def test_oov_column_all_missing(self):
        t = make_table({"hat": [0.1, 0.2]})
        f = extract_word_features(Column(("zzqx9",)), t)
        assert np.isnan(f[:-1]).all()
        assert f[-1] == 0.0

    def test_flag_set_means_no_missing(self):
        t = make_table({"hat": [0.1, 0.2]})
        f = extract_word_features(Column(("hat", "zzz")), t)
        assert f[-1] == 1.0
        assert not np.isnan(f[:-1]).any()

    def test_median_between_min_max(self):
        rng = np.random.default_rng(0)
        toks = {f"w{i}": rng.normal(size=4).tolist() for i in range(10)}
        t = make_table(toks)
        values = tuple(f"w{rng.integers(0, 10)}" for _ in range(7))
        vv = value_vectors(Column(values), t)
        f = extract_word_features(Column(values), t)
        d = 4
        med = f[2 * d:3 * d]
        assert (vv.min(axis=0) <= med + 1e-12).all()
        assert (med <= vv.max(axis=0) + 1e-12).all()
