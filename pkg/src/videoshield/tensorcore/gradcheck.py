"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import NumericError
from .tensor import Tape, Tensor, backward, no_grad


@dataclass
class GradReport:
    analytic: np.ndarray
    numeric: np.ndarray
    max_rel_error: float
    worst_index: tuple
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


def relative_error(a, f):
    a = np.asarray(a, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    return np.abs(a - f) / np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-8)


def grad_check(fn: Callable[[Tensor], Tensor], x, fd_step: float = 1e-3,
               tolerance: float = 1e-3) -> GradReport:
    """Compare the tape gradient of scalar ``fn`` at ``x`` with central differences.

    The probe runs in float64 so the difference quotient is not swamped by
    float32 rounding; model parameters promote automatically.
    """
    x0 = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)

    with Tape() as tape:
        leaf = tape.watch(x0)
        out = fn(leaf)
    (g,) = backward(tape, out, [leaf])
    analytic = np.asarray(g.data, dtype=np.float64)

    numeric = np.empty_like(x0)
    flat = x0.reshape(-1)
    num_flat = numeric.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + fd_step
            fp = fn(Tensor(x0.copy())).item()
            flat[i] = orig - fd_step
            fm = fn(Tensor(x0.copy())).item()
            flat[i] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise NumericError(
                    f"grad_check: non-finite value probing element "
                    f"{tuple(int(k) for k in np.unravel_index(i, x0.shape))}"
                )
            num_flat[i] = (fp - fm) / (2.0 * fd_step)

    rel = relative_error(analytic, numeric)
    worst = int(np.argmax(rel)) if rel.size else 0
    return GradReport(
        analytic=analytic,
        numeric=numeric,
        max_rel_error=float(rel.reshape(-1)[worst]) if rel.size else 0.0,
        worst_index=tuple(int(i) for i in np.unravel_index(worst, x0.shape)),
        tolerance=float(tolerance),
    )
