"""Model file round-trips, format guards, atomic writes."""

import json
import os

import numpy as np
import pytest

from ltboost.dataset import Dataset
from ltboost.errors import DataError
from ltboost.gbt import fit_gbt_tuned
from ltboost.hal import fit_hal
from ltboost.ltb import fit_ltb
from ltboost.persist import (FORMAT_NAME, FORMAT_VERSION, atomic_write_text,
                             load_model, model_from_dict, model_to_dict,
                             predict_model, save_model, tree_from_dict,
                             tree_to_dict)


@pytest.fixture(scope="module")
def fitted():
    rng = np.random.default_rng(7)
    x = rng.uniform(-2, 2, size=(120, 2))
    y = np.where(x[:, 0] > 0, 1.0, -1.0) + 0.3 * x[:, 1] \
        + 0.2 * rng.normal(size=120)
    train = Dataset(x[:90], y[:90], ("a", "b"))
    validation = Dataset(x[90:], y[90:], ("a", "b"))
    return {
        "x": x,
        "train": train,
        "ltb": fit_ltb(train, validation),
        "gbt": fit_gbt_tuned(train, validation),
        "hal": fit_hal(train, validation),
    }


class TestTreeDict:
    def test_round_trip_preserves_predictions(self, fitted):
        from ltboost.cart import predict_tree
        tree = fitted["gbt"].trees[0]
        again = tree_from_dict(tree_to_dict(tree))
        np.testing.assert_array_equal(predict_tree(again, fitted["x"]),
                                      predict_tree(tree, fitted["x"]))
        assert again.max_depth == tree.max_depth
        assert again.n_features == tree.n_features


class TestModelRoundTrips:
    @pytest.mark.parametrize("kind", ["ltb", "gbt", "hal"])
    def test_dict_round_trip_predicts_identically(self, fitted, kind):
        model = fitted[kind]
        again = model_from_dict(model_to_dict(model))
        np.testing.assert_array_equal(predict_model(again, fitted["x"]),
                                      predict_model(model, fitted["x"]))

    @pytest.mark.parametrize("kind", ["ltb", "gbt", "hal"])
    def test_file_round_trip(self, fitted, kind, tmp_path):
        model = fitted[kind]
        path = tmp_path / f"{kind}.json"
        save_model(model, path, feature_names=("a", "b"), outcome_name="y")
        loaded, meta = load_model(path)
        assert meta == {"feature_names": ("a", "b"), "outcome_name": "y"}
        np.testing.assert_array_equal(predict_model(loaded, fitted["x"]),
                                      predict_model(model, fitted["x"]))

    def test_ltb_ledger_survives(self, fitted, tmp_path):
        path = tmp_path / "m.json"
        save_model(fitted["ltb"], path)
        loaded, meta = load_model(path)
        assert meta == {"feature_names": None, "outcome_name": None}
        assert loaded.ledger == fitted["ltb"].ledger
        assert loaded.stop_reason == fitted["ltb"].stop_reason
        assert loaded.selected_lambda == fitted["ltb"].selected_lambda
        assert loaded.l1_upper_bound == fitted["ltb"].l1_upper_bound

    def test_resave_is_byte_identical(self, fitted, tmp_path):
        first = tmp_path / "a.json"
        second = tmp_path / "b.json"
        save_model(fitted["ltb"], first, feature_names=("a", "b"))
        loaded, _ = load_model(first)
        save_model(loaded, second, feature_names=("a", "b"))
        assert first.read_bytes() == second.read_bytes()

    def test_unserializable_type_rejected(self):
        with pytest.raises(DataError, match="cannot serialize"):
            model_to_dict(object())
        with pytest.raises(DataError, match="cannot predict"):
            predict_model(object(), np.zeros((1, 2)))


class TestFormatGuards:
    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            load_model(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{ not json")
        with pytest.raises(DataError, match="not a valid model file"):
            load_model(path)

    def test_wrong_format_tag(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"format": "something-else", "version": 1}))
        with pytest.raises(DataError, match=f"not a {FORMAT_NAME} file"):
            load_model(path)

    def test_wrong_version(self, fitted, tmp_path):
        path = tmp_path / "m.json"
        save_model(fitted["hal"], path)
        doc = json.loads(path.read_text())
        doc["version"] = FORMAT_VERSION + 1
        path.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="unsupported model file version"):
            load_model(path)

    def test_malformed_payload(self, fitted, tmp_path):
        path = tmp_path / "m.json"
        save_model(fitted["hal"], path)
        doc = json.loads(path.read_text())
        del doc["model"]["intercept"]
        path.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="malformed model payload"):
            load_model(path)
        with pytest.raises(DataError, match="unknown model kind"):
            model_from_dict({"kind": "mystery"})


class TestAtomicWrite:
    def test_writes_text(self, tmp_path):
        path = tmp_path / "out.txt"
        atomic_write_text(path, "hello\n")
        assert path.read_text() == "hello\n"

    def test_overwrites_existing(self, tmp_path):
        path = tmp_path / "out.txt"
        path.write_text("old")
        atomic_write_text(path, "new")
        assert path.read_text() == "new"

    def test_no_temp_files_left_behind(self, tmp_path):
        atomic_write_text(tmp_path / "out.txt", "data")
        assert sorted(p.name for p in tmp_path.iterdir()) == ["out.txt"]
