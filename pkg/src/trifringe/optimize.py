"""Derivative-free minimizers used by the fitting modules.

A plain Nelder-Mead simplex with the textbook coefficients and a
golden-section line search.  Every objective in this package has at
most a handful of parameters, so these simple routines are plenty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Standard simplex moves: reflect, expand, contract, shrink.
REFLECT = 1.0
EXPAND = 2.0
CONTRACT = 0.5
SHRINK = 0.5

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    n_evals: int
    converged: bool


def nelder_mead(fn, x0, *, initial_step=0.1, xtol: float = 1e-8,
                ftol: float = 1e-12, max_evals: int = 100_000) -> SimplexResult:
    """Minimize ``fn`` from ``x0`` with a Nelder-Mead simplex.

    Parameters
    ----------
    fn : callable
        Maps a parameter vector to a float.
    x0 : array_like
        Starting point; the initial simplex adds ``initial_step`` to
        each coordinate in turn.
    initial_step : float or array_like
        Edge length of the initial simplex, per coordinate if an array.
    xtol, ftol : float
        Converged once the simplex diameter (largest pairwise 2-norm)
        drops below ``xtol`` and the value spread below ``ftol``.
    max_evals : int
        Evaluation budget.  On exhaustion the best vertex is returned
        with ``converged=False``; callers decide whether that is fatal.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1 or x0.size == 0:
        raise ValidationError("nelder_mead needs a 1-d starting point")
    step = np.broadcast_to(np.asarray(initial_step, dtype=float), x0.shape)
    n = x0.size
    points = [x0.copy()]
    for i in range(n):
        vertex = x0.copy()
        vertex[i] += step[i] if step[i] != 0.0 else 1e-4
        points.append(vertex)
    values = [float(fn(p)) for p in points]
    n_evals = n + 1

    while n_evals < max_evals:
        order = np.argsort(values, kind="stable")
        points = [points[k] for k in order]
        values = [values[k] for k in order]
        diameter = max(float(np.linalg.norm(p - q))
                       for a, p in enumerate(points) for q in points[a + 1:])
        if diameter < xtol and values[-1] - values[0] < ftol:
            return SimplexResult(points[0], values[0], n_evals, True)

        centroid = np.mean(points[:-1], axis=0)
        reflected = centroid + REFLECT * (centroid - points[-1])
        f_reflected = float(fn(reflected))
        n_evals += 1
        if values[0] <= f_reflected < values[-2]:
            points[-1], values[-1] = reflected, f_reflected
            continue
        if f_reflected < values[0]:
            expanded = centroid + EXPAND * (centroid - points[-1])
            f_expanded = float(fn(expanded))
            n_evals += 1
            if f_expanded < f_reflected:
                points[-1], values[-1] = expanded, f_expanded
            else:
                points[-1], values[-1] = reflected, f_reflected
            continue
        contracted = centroid + CONTRACT * (points[-1] - centroid)
        f_contracted = float(fn(contracted))
        n_evals += 1
        if f_contracted < values[-1]:
            points[-1], values[-1] = contracted, f_contracted
            continue
        for i in range(1, n + 1):
            points[i] = points[0] + SHRINK * (points[i] - points[0])
            values[i] = float(fn(points[i]))
            n_evals += 1

    best = int(np.argmin(values))
    return SimplexResult(points[best], values[best], n_evals, False)


def golden_section(fn, lo: float, hi: float, *, tol: float = 1e-10,
                   max_iters: int = 200) -> float:
    """Argmin of a unimodal scalar function on [lo, hi]."""
    if not hi > lo:
        raise ValidationError("golden_section needs hi > lo")
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = float(fn(c)), float(fn(d))
    for _ in range(max_iters):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = float(fn(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = float(fn(d))
    return 0.5 * (a + b)
