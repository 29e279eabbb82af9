"""Nonlinear conjugate gradient (Polak-Ribiere+, restarts, backtracking)."""

from dataclasses import dataclass

import numpy as np


@dataclass
class CGResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    n_iter: int
    converged: bool


def conjugate_gradient(fun, grad, x0, gtol=1e-10, maxiter=10_000,
                       restart=None, c1=1e-4, shrink=0.5):
    """Minimize ``fun`` from ``x0``.

    Polak-Ribiere+ directions with a steepest-descent restart every
    ``restart`` iterations (default: the dimension) or whenever the direction
    is not a descent direction. Steps come from Armijo backtracking started
    at a one-dimensional Newton estimate along the direction, obtained from a
    secant on the directional derivative.
    """
    x = np.array(x0, dtype=float)
    n = x.size
    restart = restart or n
    fx = float(fun(x))
    g = np.asarray(grad(x), dtype=float)
    d = -g
    alpha = 1.0 / max(np.linalg.norm(g), 1e-300)
    for k in range(maxiter):
        gnorm = float(np.linalg.norm(g))
        if gnorm < gtol:
            return CGResult(x, fx, gnorm, k, True)
        slope = float(g @ d)
        if slope >= 0:
            d = -g
            slope = -gnorm**2
        # secant probe for the curvature along d
        h = 1e-3 * alpha
        g_probe = np.asarray(grad(x + h * d), dtype=float)
        curv = (float(g_probe @ d) - slope) / h
        step = -slope / curv if curv > 0 else alpha * 2.0
        # near the minimum the Armijo decrease drops below rounding of f;
        # there a step is accepted when it lowers the gradient norm instead
        f_noise = 8.0 * np.finfo(float).eps * max(1.0, abs(fx))
        while True:
            x_new = x + step * d
            f_new = float(fun(x_new))
            g_new = np.asarray(grad(x_new), dtype=float)
            if f_new <= fx + c1 * step * slope or step < 1e-16:
                break
            if f_new <= fx + f_noise and np.linalg.norm(g_new) < gnorm:
                break
            step *= shrink
        if step < 1e-16 and f_new > fx:
            gnorm = float(np.linalg.norm(g))
            return CGResult(x, fx, gnorm, k, gnorm < gtol)
        if (k + 1) % restart == 0:
            beta = 0.0
        else:
            beta = max(0.0, float(g_new @ (g_new - g)) / float(g @ g))
        d = -g_new + beta * d
        x, fx, g, alpha = x_new, f_new, g_new, step
    gnorm = float(np.linalg.norm(g))
    return CGResult(x, fx, gnorm, maxiter, gnorm < gtol)
