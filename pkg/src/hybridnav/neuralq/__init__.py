"""Convolutional variance regressor written directly against numpy."""
from .io import load_meta, load_params, save_params
from .layers import global_avg_pool, layer_norm, leaky_relu
from .network import Architecture, NetworkParams, backward, forward, loss
from .training import (DEFAULT_CLAMP, Adam, TrainConfig, predict, predict_qc, rmse, train,
                       write_history)

__all__ = [
    "Adam", "Architecture", "DEFAULT_CLAMP", "NetworkParams", "TrainConfig", "backward",
    "forward", "global_avg_pool", "layer_norm", "leaky_relu", "load_meta", "load_params", "loss",
    "predict", "predict_qc", "rmse", "save_params", "train", "write_history",
]
