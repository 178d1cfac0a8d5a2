"""Central finite-difference gradient checking for tapes and models."""

import numpy as np

from .autodiff import Tape, Tensor, backward


def numeric_gradient(f, array: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of scalar f() w.r.t. every entry of array (in place)."""
    grad = np.zeros_like(array)
    flat = array.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f()
        flat[i] = orig - h
        down = f()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> float:
    """Worst entry-wise |a-n| / max(|a|, |n|, floor).

    The floor keeps dead or near-zero entries (saturated gates, clamped logs)
    from turning finite-difference noise into spurious relative error.
    """
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float((np.abs(analytic - numeric) / denom).max())


def check_gradients(build_loss, params, h: float = 1e-5, floor: float = 1e-3) -> float:
    """Compare backward() gradients of build_loss() against central differences.

    build_loss must rebuild the forward graph from the current parameter
    values each call and return a scalar Tensor. Returns the worst relative
    error over every entry of every parameter.
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = build_loss()
    backward(tape, loss)
    analytic = [np.array(p.grad, copy=True) for p in params]

    def value() -> float:
        out = build_loss()
        if not isinstance(out, Tensor):
            raise TypeError("build_loss must return a Tensor")
        return out.item()

    worst = 0.0
    for p, a in zip(params, analytic):
        n = numeric_gradient(value, p.data, h=h)
        worst = max(worst, max_relative_error(a, n, floor=floor))
    for p in params:
        p.zero_grad()
    return worst
