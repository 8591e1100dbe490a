"""Folded float64 inference for online, one-sample-at-a-time prediction.

In inference mode Dist-LeaNet is affine end to end (batch norm with frozen
statistics followed by two linear layers), so it collapses exactly into
``g_hat = A x + c`` with an N x N matrix ``A``. ``FusedCascade`` stores that
map next to Amp-PreNet's weights and evaluates the cascade with preallocated
buffers, avoiding the per-call validation and temporaries of ``predict``.
Outputs agree with ``predict`` up to floating-point reassociation.
"""

from dataclasses import dataclass, field

import numpy as np

from .nn import LRELU, MlpModel, forward


def _affine_map(model: MlpModel):
    """``(A, c)`` with ``forward(model, x) == x @ A.T + c`` for a purely linear model."""
    if any(layer.activation != "linear" for layer in model.layers):
        raise ValueError("only a purely linear network folds into one affine map")
    n = model.in_dim
    # evaluating the network at 0 and at the unit vectors recovers the map exactly
    c = forward(model, np.zeros((1, n)))[0][0]
    a = (forward(model, np.eye(n))[0] - c).T
    return np.ascontiguousarray(a), c


@dataclass(eq=False)
class FusedCascade:
    a: np.ndarray
    c: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    alpha: float
    _g: np.ndarray = field(init=False, repr=False)
    _z: np.ndarray = field(init=False, repr=False)
    _h: np.ndarray = field(init=False, repr=False)
    _t: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("leaky ReLU slope must lie in [0, 1]")
        self._g = np.empty(self.a.shape[0])
        self._z = np.empty(self.w1.shape[0])
        self._t = np.empty(self.w1.shape[0])
        self._h = np.empty(self.w2.shape[0])

    @classmethod
    def from_models(cls, dist: MlpModel, amp: MlpModel) -> "FusedCascade":
        if len(amp.layers) != 2 or amp.input_bn is not None or amp.layers[0].activation != LRELU:
            raise ValueError("expected an Amp-PreNet (N -> 2N leaky ReLU -> N)")
        if dist.out_dim != amp.in_dim:
            raise ValueError(f"Dist-LeaNet output {dist.out_dim} != Amp-PreNet input {amp.in_dim}")
        a, c = _affine_map(dist)
        l1, l2 = amp.layers
        return cls(a, c, l1.weight.copy(), l1.bias.copy(), l2.weight.copy(), l2.bias.copy(), l1.alpha)

    @property
    def n(self) -> int:
        return self.a.shape[1]

    def predict_one(self, x: np.ndarray):
        """``(g_hat, h_hat)`` for one length-N feature vector.

        The returned arrays are internal buffers, overwritten by the next call.
        """
        g, z, h, t = self._g, self._z, self._h, self._t
        np.dot(self.a, x, out=g)
        g += self.c
        np.dot(self.w1, g, out=z)
        z += self.b1
        np.multiply(z, self.alpha, out=t)
        np.maximum(z, t, out=z)  # leaky ReLU, valid for slopes in [0, 1]
        np.dot(self.w2, z, out=h)
        h += self.b2
        return g, h

    def predict(self, features):
        """Batch version returning fresh arrays."""
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        g = x @ self.a.T + self.c
        z = g @ self.w1.T + self.b1
        z = np.maximum(z, self.alpha * z)
        return g, z @ self.w2.T + self.b2
