"""Model artifact container round trips."""

import json

import numpy as np
import pytest

from ddp.classifiers import (BoostConfig, CNNConfig, ForestConfig, KernelKind, NBConfig,
                             SVMConfig, boost_scores, boost_train, cnn_scores, cnn_train,
                             forest_scores, forest_train, mnb_posterior, mnb_train,
                             svm_predict_scores, svm_train)
from ddp.errors import DataError
from ddp.model_io import load_model, save_model


def separable(seed=0, n=24):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y01 = (X[:, 0] > 0).astype(float)
    return X, y01


def test_svm_roundtrip(tmp_path):
    X, y01 = separable(1)
    model = svm_train(X, 2 * y01 - 1, SVMConfig(C=2.0, gamma=1.0), seed=3)
    path = save_model(model, tmp_path / "svm.ddm", split_id="seed=1", seed=3)
    loaded, header = load_model(path)
    assert header["kind"] == "svm" and header["split_id"] == "seed=1"
    assert loaded.config == model.config
    np.testing.assert_array_equal(loaded.alphas, model.alphas)
    np.testing.assert_array_equal(svm_predict_scores(loaded, X),
                                  svm_predict_scores(model, X))


def test_mnb_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    counts = rng.integers(0, 5, size=(12, 7)).astype(float)
    labels = np.array([0, 1] * 6)
    model = mnb_train(counts, labels, NBConfig())
    loaded, _ = load_model(save_model(model, tmp_path / "mnb.ddm"))
    probe = counts[0]
    np.testing.assert_array_equal(mnb_posterior(loaded, probe),
                                  mnb_posterior(model, probe))


def test_forest_roundtrip(tmp_path):
    X, y01 = separable(3)
    model = forest_train(X, y01, ForestConfig(n_trees=5, max_depth=3, seed=1))
    loaded, _ = load_model(save_model(model, tmp_path / "forest.ddm"))
    np.testing.assert_array_equal(forest_scores(loaded, X), forest_scores(model, X))


def test_boost_roundtrip(tmp_path):
    X, y01 = separable(4)
    model = boost_train(X, y01, BoostConfig(n_estimators=8, learning_rate=0.4,
                                            max_depth=2))
    loaded, _ = load_model(save_model(model, tmp_path / "boost.ddm"))
    np.testing.assert_array_equal(boost_scores(loaded, X), boost_scores(model, X))
    assert loaded.train_losses == model.train_losses


def test_cnn_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    images = rng.uniform(0, 1, size=(8, 8, 8, 3))
    labels = np.array([1.0, 0.0] * 4)
    config = CNNConfig(input_size=8, conv_channels=(4,), dense_units=6,
                       epochs=2, batch_size=4, seed=7)
    model = cnn_train(images, labels, config)
    loaded, header = load_model(save_model(model, tmp_path / "cnn.ddm", seed=7))
    assert header["config"]["conv_channels"] == [4]
    np.testing.assert_array_equal(cnn_scores(loaded, images), cnn_scores(model, images))


def test_serialized_model_is_deterministic(tmp_path):
    X, y01 = separable(6)
    config = SVMConfig(C=1.0, gamma=0.5)
    a = save_model(svm_train(X, 2 * y01 - 1, config, seed=2), tmp_path / "a.ddm", seed=2)
    b = save_model(svm_train(X, 2 * y01 - 1, config, seed=2), tmp_path / "b.ddm", seed=2)
    assert a.read_bytes() == b.read_bytes()


def test_format_version_mismatch(tmp_path):
    X, y01 = separable(7)
    model = svm_train(X, 2 * y01 - 1, SVMConfig(), seed=0)
    path = save_model(model, tmp_path / "svm.ddm")
    raw = path.read_bytes()
    header, _, rest = raw.partition(b"\n")
    obj = json.loads(header)
    obj["format_version"] = "999"
    path.write_bytes(json.dumps(obj, sort_keys=True).encode() + b"\n" + rest)
    with pytest.raises(DataError):
        load_model(path)


def test_missing_artifact(tmp_path):
    with pytest.raises(DataError):
        load_model(tmp_path / "absent.ddm")
