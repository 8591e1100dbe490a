"""A small float64 dense-network engine (numpy only)."""

from .gradcheck import check_gradients, numerical_gradient, relative_error
from .layers import (LINEAR, LRELU, BatchNorm, DenseLayer, ForwardCache, MlpModel, backward, forward, lrelu,
                     mse_loss)
from .optim import Adam
from .serialize import load_model, model_from_bytes, model_to_bytes, save_model

__all__ = [
    "LINEAR", "LRELU", "Adam", "BatchNorm", "DenseLayer", "ForwardCache", "MlpModel", "backward",
    "check_gradients", "forward", "load_model", "lrelu", "model_from_bytes", "model_to_bytes", "mse_loss",
    "numerical_gradient", "relative_error", "save_model",
]
