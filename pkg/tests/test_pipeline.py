from pathlib import Path

import numpy as np
import pytest

from sherlock.corpus import Column, Corpus
from sherlock.errors import DataError
from sherlock.features.paragraph import PVHyperparams, train_pvdbow
from sherlock.pipeline import (CHARS_SLICE, FLAG_INDEX, N_FEATURES,
                               PARAGRAPH_SLICE, SCHEMA, STATS_SLICE,
                               WORDS_SLICE, apply_imputer, assemble_features,
                               build_schema, extract_matrix, fit_imputer,
                               load_matrix, save_matrix)
from sherlock.semtypes import type_id

GOLDEN = Path(__file__).parent / "data" / "schema_names.txt"


@pytest.fixture(scope="module")
def pv_model():
    cols = [Column(("alpha", "beta", "alpha")), Column(("beta", "gamma", "beta")),
            Column(("alpha", "gamma", "gamma")), Column(("beta", "alpha", "beta"))]
    return train_pvdbow(cols, PVHyperparams(epochs=2, seed=0))


class TestSchema:
    def test_counts(self):
        schema = build_schema()
        assert len(schema) == 1588
        cats = list(schema.categories)
        assert cats.count("stats") == 27
        assert cats.count("chars") == 960
        assert cats.count("words") == 200
        assert cats.count("words_flag") == 1
        assert cats.count("paragraph") == 400

    def test_names_unique(self):
        assert len(set(SCHEMA.names)) == 1588

    def test_golden_names(self):
        golden = GOLDEN.read_text().splitlines()
        assert list(SCHEMA.names) == golden

    def test_slices_partition(self):
        covered = ([*range(STATS_SLICE.start, STATS_SLICE.stop)]
                   + [*range(CHARS_SLICE.start, CHARS_SLICE.stop)]
                   + [*range(WORDS_SLICE.start, WORDS_SLICE.stop)]
                   + [FLAG_INDEX]
                   + [*range(PARAGRAPH_SLICE.start, PARAGRAPH_SLICE.stop)])
        assert covered == list(range(N_FEATURES))


class TestAssemble:
    def test_length(self, word_table, pv_model):
        col = Column(("paris", "london"))
        vec = assemble_features(col, word_table, pv_model, pv_seed=0)
        assert vec.shape == (N_FEATURES,)

    def test_oov_column_missing_markers(self, word_table, pv_model):
        col = Column(("zzqx9w", "qqqqy"))
        vec = assemble_features(col, word_table, pv_model, pv_seed=0)
        assert np.isnan(vec[987:1187]).all()
        assert vec[FLAG_INDEX] == 0.0
        assert not np.isnan(vec[:987]).any()
        assert not np.isnan(vec[1188:]).any()

    def test_deterministic(self, word_table, pv_model):
        col = Column(("paris", "london", "tokyo"))
        a = assemble_features(col, word_table, pv_model, pv_seed=3)
        b = assemble_features(col, word_table, pv_model, pv_seed=3)
        np.testing.assert_array_equal(a, b)


class TestImputer:
    def test_mean_of_present_values(self):
        M = np.array([[1.0], [np.nan], [3.0]])
        imp = fit_imputer(M)
        assert imp.means[0] == 2.0
        out = apply_imputer(imp, np.array([np.nan]))
        assert out[0] == 2.0

    def test_identity_on_complete_vector(self):
        imp = fit_imputer(np.array([[1.0, 2.0], [3.0, 4.0]]))
        v = np.array([9.0, 8.0])
        np.testing.assert_array_equal(apply_imputer(imp, v), v)

    def test_all_missing_feature_imputes_zero(self):
        imp = fit_imputer(np.array([[np.nan], [np.nan]]))
        assert imp.means[0] == 0.0

    def test_idempotent(self):
        imp = fit_imputer(np.array([[1.0, np.nan], [3.0, 4.0]]))
        v = np.array([np.nan, np.nan])
        once = apply_imputer(imp, v)
        twice = apply_imputer(imp, once)
        np.testing.assert_array_equal(once, twice)

    def test_never_alters_present_slots(self):
        rng = np.random.default_rng(0)
        M = rng.normal(size=(5, 4))
        M[2, 1] = np.nan
        imp = fit_imputer(M)
        v = rng.normal(size=4)
        np.testing.assert_array_equal(apply_imputer(imp, v), v)


class TestMatrixIO:
    def test_round_trip_with_missing(self, tmp_path, word_table, pv_model):
        corpus = Corpus([
            Column(("paris", "london"), type_id("city")),
            Column(("zzqx9w",), type_id("year")),
        ])
        X, y = extract_matrix(corpus, word_table, pv_model, pv_seed=0)
        p = tmp_path / "m.csv"
        save_matrix(X, y, p)
        X2, y2 = load_matrix(p)
        assert np.array_equal(y, y2)
        np.testing.assert_allclose(X2, X, rtol=1e-12, equal_nan=True)

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("a,b,label\n1,2,city\n")
        with pytest.raises(DataError, match="schema"):
            load_matrix(p)
