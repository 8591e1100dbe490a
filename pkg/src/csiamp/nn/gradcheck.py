import numpy as np


def numerical_gradient(loss_fn, param: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of ``loss_fn()`` w.r.t. every entry of ``param`` (perturbed in place)."""
    grad = np.zeros_like(param)
    flat = param.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = loss_fn()
        flat[i] = orig - step
        down = loss_fn()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``||a - n|| / max(||a|| + ||n||, tiny)`` over a whole tensor."""
    denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denom < 1e-300:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)


def check_gradients(loss_fn, params: dict, analytic: dict, step: float = 1e-5) -> dict:
    """Relative error per parameter tensor between analytic and finite-difference gradients."""
    return {k: relative_error(analytic[k], numerical_gradient(loss_fn, p, step)) for k, p in params.items()}
