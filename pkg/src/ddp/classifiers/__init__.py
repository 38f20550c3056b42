"""Trainable models behind one train/predict contract."""

from .common import DECISION_THRESHOLD, Prediction, score_to_label, sigmoid
from .svm import (KernelKind, SVMConfig, SVMModel, kernel_eval, kernel_matrix,
                  svm_predict, svm_predict_scores, svm_train)
from .naive_bayes import MNBModel, NBConfig, mnb_posterior, mnb_predict, mnb_train
from .trees import (BoostConfig, BoostModel, ForestConfig, ForestModel,
                    boost_predict, boost_scores, boost_train, forest_predict,
                    forest_scores, forest_train, tree_depth)
from .cnn import CNNConfig, CNNModel, CNNNetwork, cnn_predict, cnn_scores, cnn_train

__all__ = [
    "DECISION_THRESHOLD", "Prediction", "score_to_label", "sigmoid",
    "KernelKind", "SVMConfig", "SVMModel", "kernel_eval", "kernel_matrix",
    "svm_predict", "svm_predict_scores", "svm_train",
    "MNBModel", "NBConfig", "mnb_posterior", "mnb_predict", "mnb_train",
    "BoostConfig", "BoostModel", "ForestConfig", "ForestModel",
    "boost_predict", "boost_scores", "boost_train",
    "forest_predict", "forest_scores", "forest_train", "tree_depth",
    "CNNConfig", "CNNModel", "CNNNetwork", "cnn_predict", "cnn_scores", "cnn_train",
]
