from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError


@dataclass
class Adam:
    """Bias-corrected adaptive-moment optimiser over a dict of live arrays.

    ``models`` (optional) get their ``version`` bumped after each update so
    that forward caches taken before the step are rejected by ``backward``.
    """

    params: dict
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    models: list = field(default_factory=list)
    step_count: int = 0
    m: dict = field(init=False)
    v: dict = field(init=False)

    def __post_init__(self):
        self.m = {k: np.zeros_like(p) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p) for k, p in self.params.items()}

    @classmethod
    def for_models(cls, models: dict, **kwargs) -> "Adam":
        """Optimise several models jointly; parameter names get ``<key>.`` prefixes."""
        params = {f"{key}.{name}": arr for key, model in models.items()
                  for name, arr in model.parameters().items()}
        return cls(params, models=list(models.values()), **kwargs)

    def step(self, grads: dict) -> None:
        for k, g in grads.items():
            if k not in self.params:
                raise KeyError(f"gradient for unknown parameter {k!r}")
            if g.shape != self.params[k].shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {self.params[k].shape} for {k}")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for {k}")
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            self.params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        for model in self.models:
            model.version += 1
