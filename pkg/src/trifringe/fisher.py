"""Phase-estimation fringes and their classical Fisher information.

For an input of one or two photons, the outcome probabilities traced
over a theta grid form a family of interference fringes.  The Fisher
information F(theta) = sum over outcomes of (dp/dtheta)^2 / p says how
sharply those fringes respond to a phase change; 1/sqrt(F) bounds the
attainable phase precision per detected event.

Derivatives are finite differences on the grid.  Where a fringe
touches zero the ratio (p')^2/p has a finite limit if the zero is
quadratic; the term's contribution at the nearest grid point is taken
as zero there, and a zero crossed with nonvanishing slope (which makes
F genuinely divergent) raises instead of producing a spike.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import N_MODES
from .errors import SingularTermError, ValidationError
from .interference import (FockState, PAIR_OUTCOMES, multi_photon_distribution,
                           pair_distribution, single_photon_distribution)

# Below this a probability counts as touching zero; the slope threshold
# separates removable zeros from transversal ones.
ZERO_PROB = 1e-9
SINGULAR_SLOPE = 1e-6


def _occupation(modes: tuple[int, ...]) -> tuple[int, ...]:
    occ = [0] * N_MODES
    for m in modes:
        occ[m] += 1
    return tuple(occ)


@dataclass
class FringeFamily:
    """Outcome probabilities over a theta grid for one input state."""

    input_state: FockState
    thetas: np.ndarray
    outcomes: list[tuple[int, ...]]
    probs: np.ndarray

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (len(self.outcomes), len(self.thetas)):
            raise ValidationError("probability matrix must be outcomes x thetas")
        sums = self.probs.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > 1e-10):
            raise ValidationError("outcome probabilities must sum to 1 at every theta")


def fringe_family(source, input_state: FockState, thetas) -> FringeFamily:
    """Evaluate all outcome fringes of ``source`` over a theta grid.

    ``source`` is anything with a ``unitary(theta)`` method: a
    calibrated model, a band-corner view of one, or the ideal device.
    One- and two-photon inputs are supported.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 1 or len(thetas) < 2:
        raise ValidationError("theta grid must be 1-d with at least two points")
    if input_state.total == 1:
        mode = input_state.modes()[0]
        outcomes = [_occupation((m,)) for m in range(N_MODES)]
        probs = np.empty((N_MODES, len(thetas)))
        for t, theta in enumerate(thetas):
            probs[:, t] = single_photon_distribution(source.unitary(theta), mode)
    elif input_state.total == 2:
        modes = input_state.modes()
        distinct = modes[0] != modes[1]
        outcomes = [_occupation(pair) for pair in PAIR_OUTCOMES]
        probs = np.empty((len(PAIR_OUTCOMES), len(thetas)))
        for t, theta in enumerate(thetas):
            u = source.unitary(theta)
            dist = (pair_distribution(u, modes) if distinct
                    else multi_photon_distribution(u, modes))
            probs[:, t] = [dist[pair] for pair in PAIR_OUTCOMES]
    else:
        raise ValidationError(
            f"fringe families are defined for 1 or 2 photons, got {input_state.total}"
        )
    return FringeFamily(input_state, thetas, outcomes, probs)


@dataclass
class FisherCurve:
    """Fisher information over theta, with a tolerance envelope."""

    thetas: np.ndarray
    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        for name in ("thetas", "values", "lower", "upper"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.thetas)
        if any(len(getattr(self, name)) != n for name in ("values", "lower", "upper")):
            raise ValidationError("curve arrays must share one length")
        if np.any(self.values < -1e-12):
            raise ValidationError("Fisher information cannot be negative")
        if np.any(self.lower > self.values + 1e-9) or np.any(self.values > self.upper + 1e-9):
            raise ValidationError("band must bracket the central curve")

    def max_point(self) -> tuple[float, float]:
        i = int(np.argmax(self.values))
        return float(self.thetas[i]), float(self.values[i])

    def interval_above(self, level: float) -> tuple[float, float] | None:
        """Longest contiguous theta stretch with values > level."""
        mask = self.values > level
        best = None
        start = None
        for i, flag in enumerate(np.append(mask, False)):
            if flag and start is None:
                start = i
            elif not flag and start is not None:
                if best is None or (i - 1 - start) > (best[1] - best[0]):
                    best = (start, i - 1)
                start = None
        if best is None:
            return None
        return float(self.thetas[best[0]]), float(self.thetas[best[1]])


def _check_uniform(thetas: np.ndarray) -> None:
    steps = np.diff(thetas)
    if np.any(steps <= 0):
        raise ValidationError("theta grid must be strictly increasing")
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(abs(steps[0]), 1e-30):
        raise ValidationError("theta grid must be uniformly spaced for finite differences")


def fisher_curve(family: FringeFamily) -> FisherCurve:
    """F(theta) from a fringe family by finite differences.

    Central differences inside the grid, second-order one-sided at the
    ends (exact for the quadratic zeros the guard below assumes).
    """
    _check_uniform(family.thetas)
    derivs = np.gradient(family.probs, family.thetas, axis=1, edge_order=2)
    values = np.zeros(len(family.thetas))
    for row_p, row_d in zip(family.probs, derivs):
        near_zero = row_p < ZERO_PROB
        bad = near_zero & (np.abs(row_d) >= SINGULAR_SLOPE)
        if np.any(bad):
            t = family.thetas[int(np.argmax(bad))]
            raise SingularTermError(
                f"a fringe crosses zero with finite slope near theta = {t:.6g}; "
                "the information diverges there (or the grid is too coarse to resolve "
                "a quadratic zero)"
            )
        term = np.zeros_like(row_p)
        ok = ~near_zero
        term[ok] = row_d[ok] ** 2 / row_p[ok]
        values += term
    return FisherCurve(family.thetas, values, values.copy(), values.copy())


def fisher_with_bands(model, input_state: FockState, thetas) -> FisherCurve:
    """Central Fisher curve plus the envelope over coupling-band corners.

    The corner assignment (each coupling pinned low or high) is held
    fixed across theta, and the envelope is the pointwise min/max over
    the central curve and all corners.  Sources without bands (the
    ideal device) get a zero-width envelope.
    """
    central = fisher_curve(fringe_family(model, input_state, thetas))
    lower = central.values.copy()
    upper = central.values.copy()
    for corner in model.corner_models():
        curve = fisher_curve(fringe_family(corner, input_state, thetas))
        np.minimum(lower, curve.values, out=lower)
        np.maximum(upper, curve.values, out=upper)
    return FisherCurve(central.thetas, central.values, lower, upper)
