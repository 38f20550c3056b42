"""Convolutional network: shapes, gradient correctness, overfit smoke test,
and per-seed determinism."""

import numpy as np
import pytest

from ddp.classifiers import CNNConfig, CNNNetwork, cnn_predict, cnn_scores, cnn_train
from ddp.errors import ContractError, DataError

REDUCED = CNNConfig(input_size=8, in_channels=3, conv_channels=(4,), dense_units=6,
                    learning_rate=1e-3, batch_size=4, epochs=1, seed=0, dtype="float64")


def toy_brightness_set(n_per_class=4, size=8, seed=0):
    rng = np.random.default_rng(seed)
    bright = np.clip(0.85 + 0.05 * rng.normal(size=(n_per_class, size, size, 3)), 0, 1)
    dark = np.clip(0.15 + 0.05 * rng.normal(size=(n_per_class, size, size, 3)), 0, 1)
    images = np.concatenate([bright, dark])
    labels = np.array([1.0] * n_per_class + [0.0] * n_per_class)
    return images, labels


class TestForwardShapes:
    def test_logit_shape_and_score_range(self):
        net = CNNNetwork(REDUCED)
        x = np.random.default_rng(1).uniform(0, 1, size=(5, 8, 8, 3))
        logits = net.forward(x)
        assert logits.shape == (5,)

    def test_bad_input_size_rejected(self):
        with pytest.raises(DataError):
            CNNConfig(input_size=10, conv_channels=(8, 8, 8))  # 10 -> 5 -> odd

    def test_shape_mismatch_is_contract_error(self):
        images, labels = toy_brightness_set(size=8)
        with pytest.raises(ContractError):
            cnn_train(images, labels, CNNConfig(input_size=16, conv_channels=(4,),
                                                epochs=1))


class TestGradients:
    def test_analytic_matches_central_differences(self):
        # reduced architecture: 8x8 input, one conv block, float64
        net = CNNNetwork(REDUCED)
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 1, size=(3, 8, 8, 3))
        y = np.array([1.0, 0.0, 1.0])
        net.loss_and_backward(x, y)
        grads = [grad_fn().copy() for _, grad_fn in net.parameters()]

        h = 1e-6
        rng_check = np.random.default_rng(3)
        for (param, _), grad in zip(net.parameters(), grads):
            flat = param.reshape(-1)
            flat_grad = grad.reshape(-1)
            # probe a sample of coordinates in every parameter tensor
            n_probe = min(12, flat.size)
            for idx in rng_check.choice(flat.size, size=n_probe, replace=False):
                original = flat[idx]
                flat[idx] = original + h
                loss_plus = net.loss_and_backward(x, y)
                flat[idx] = original - h
                loss_minus = net.loss_and_backward(x, y)
                flat[idx] = original
                numeric = (loss_plus - loss_minus) / (2 * h)
                denom = max(abs(numeric), abs(flat_grad[idx]), 1e-8)
                assert abs(numeric - flat_grad[idx]) / denom < 1e-4

    def test_loss_decreases_on_toy_problem(self):
        images, labels = toy_brightness_set()
        config = CNNConfig(input_size=8, conv_channels=(4,), dense_units=6,
                           learning_rate=1e-2, batch_size=8, epochs=30, seed=1,
                           dtype="float64")
        model = cnn_train(images, labels, config)
        assert model.epoch_losses[-1] < model.epoch_losses[0]


class TestTraining:
    def test_toy_overfit_within_200_epochs(self):
        images, labels = toy_brightness_set()
        config = CNNConfig(input_size=8, conv_channels=(4,), dense_units=6,
                           learning_rate=1e-2, batch_size=8, epochs=200, seed=2)
        model = cnn_train(images, labels, config)
        scores = cnn_scores(model, images)
        assert np.all((scores >= 0.5) == (labels == 1.0))  # training accuracy 1.0

    def test_scores_strictly_inside_unit_interval(self):
        images, labels = toy_brightness_set()
        model = cnn_train(images, labels, REDUCED)
        scores = cnn_scores(model, images)
        assert np.all((scores > 0.0) & (scores < 1.0))
        pred = cnn_predict(model, images[0], unit_id="frame0")
        assert 0.0 < pred.score < 1.0 and pred.unit_id == "frame0"

    def test_single_class_rejected(self):
        images, _ = toy_brightness_set()
        with pytest.raises(DataError):
            cnn_train(images, np.ones(len(images)), REDUCED)

    def test_same_seed_identical_weights(self):
        images, labels = toy_brightness_set()
        config = CNNConfig(input_size=8, conv_channels=(4,), dense_units=6,
                           learning_rate=1e-3, batch_size=4, epochs=3, seed=9)
        a = cnn_train(images, labels, config)
        b = cnn_train(images, labels, config)
        for (pa, _), (pb, _) in zip(a.network.parameters(), b.network.parameters()):
            np.testing.assert_array_equal(pa, pb)
        np.testing.assert_array_equal(cnn_scores(a, images), cnn_scores(b, images))

    def test_predict_is_pure(self):
        images, labels = toy_brightness_set()
        model = cnn_train(images, labels, REDUCED)
        first = cnn_scores(model, images)
        second = cnn_scores(model, images)
        np.testing.assert_array_equal(first, second)
