"""Reduction of coincidence-vs-delay scans to measured visibilities.

A scan records coincidences between one output pair while the relative
arrival delay of the photon pair is swept through zero.  Uncorrelated
background counts are estimated from the singles rates and the
coincidence window and subtracted; the remaining dip or peak is fit
with a Gaussian; visibility is the fractional depth of that feature
relative to the fitted large-delay baseline, positive for a dip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (FitFailureError, IllConditionedFitError,
                     UndefinedVisibilityError, ValidationError)
from .optimize import nelder_mead

MIN_SCAN_POINTS = 15
MIN_BASELINE_POINTS = 5


@dataclass
class HomScanDataset:
    """One delay scan: header describing the setting, then count rows."""

    input_pair: tuple[int, int]
    output_pair: tuple[int, int]
    voltage: float
    current: float
    integration_s: float
    window_ns: float
    delays_ps: np.ndarray
    coincidences: np.ndarray
    singles_m: np.ndarray | None
    singles_n: np.ndarray | None
    accidentals_subtracted: bool = False

    def __post_init__(self):
        self.delays_ps = np.asarray(self.delays_ps, dtype=float)
        self.coincidences = np.asarray(self.coincidences, dtype=float)
        if self.singles_m is not None:
            self.singles_m = np.asarray(self.singles_m, dtype=float)
        if self.singles_n is not None:
            self.singles_n = np.asarray(self.singles_n, dtype=float)
        for name in ("voltage", "current", "integration_s", "window_ns"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.integration_s <= 0:
            raise ValidationError("integration_s must be positive")
        if self.window_ns <= 0:
            raise ValidationError("window_ns must be positive")
        for pair, what in ((self.input_pair, "input_pair"), (self.output_pair, "output_pair")):
            a, b = (int(v) for v in pair)
            if not (0 <= a <= 2 and 0 <= b <= 2) or a == b:
                raise ValidationError(f"{what} must be two distinct mode indices in 0..2")
        self.input_pair = tuple(int(v) for v in self.input_pair)
        self.output_pair = tuple(int(v) for v in self.output_pair)
        n = len(self.delays_ps)
        if n < MIN_SCAN_POINTS:
            raise ValidationError(f"a delay scan needs at least {MIN_SCAN_POINTS} points, got {n}")
        if np.any(np.diff(self.delays_ps) <= 0):
            raise ValidationError("delays must be strictly increasing")
        for arr, what in ((self.coincidences, "coincidences"),
                          (self.singles_m, "singles_m"), (self.singles_n, "singles_n")):
            if arr is None:
                continue
            if arr.shape != self.delays_ps.shape:
                raise ValidationError(f"{what} must have one entry per delay")
            if not self.accidentals_subtracted and np.any(arr < 0):
                raise ValidationError(f"{what} must be non-negative")


def subtract_accidentals(scan: HomScanDataset) -> HomScanDataset:
    """Remove the uncorrelated-coincidence background, row by row.

    The estimate per row is singles_m * singles_n * window / T, the
    standard singles-product rate; results are floored at zero.  Scans
    without singles columns pass through unchanged but keep the flag
    unset so downstream code can tell.
    """
    if scan.accidentals_subtracted:
        return scan
    if scan.singles_m is None or scan.singles_n is None:
        return scan
    window_s = scan.window_ns * 1e-9
    accidental = scan.singles_m * scan.singles_n * window_s / scan.integration_s
    corrected = np.maximum(scan.coincidences - accidental, 0.0)
    return replace(scan, coincidences=corrected, accidentals_subtracted=True)


@dataclass
class VisibilityRecord:
    """Measured visibility of one scan, with fit diagnostics."""

    input_pair: tuple[int, int]
    output_pair: tuple[int, int]
    theta: float
    visibility: float
    visibility_sigma: float
    baseline: float
    extremum: float
    dip_center: float
    dip_width: float

    def __post_init__(self):
        if abs(self.visibility) > 1.0 + 3.0 * self.visibility_sigma:
            raise ValidationError(
                f"fitted visibility {self.visibility:.4f} exceeds 1 by more than "
                f"3 sigma ({self.visibility_sigma:.4f}); the scan fit is unphysical"
            )


def _gaussian(params: np.ndarray, delays: np.ndarray) -> np.ndarray:
    base, amp, center, width = params
    z = (delays - center) / width
    return base + amp * np.exp(-0.5 * z * z)


def fit_scan(scan: HomScanDataset, theta: float = math.nan) -> VisibilityRecord:
    """Gaussian fit C(tau) = base + amp exp(-(tau-t0)^2 / 2w^2).

    Visibility is -amp/base (dips positive); its sigma comes from the
    Poisson-weighted Gauss-Newton covariance at the minimum.  ``theta``
    is carried through for bookkeeping; visibility itself needs no
    phase knowledge.
    """
    scan = subtract_accidentals(scan)
    delays = scan.delays_ps
    counts = scan.coincidences
    span = delays[-1] - delays[0]

    # Initialization: the outer quartiles of the scan approximate the
    # baseline; the extremum against it sets the sign and size of amp.
    quartile = max(len(delays) // 4, 1)
    outer = np.concatenate([counts[:quartile], counts[-quartile:]])
    base0 = float(np.median(outer))
    idx = int(np.argmax(np.abs(counts - base0)))
    amp0 = float(counts[idx] - base0)
    center0 = float(delays[idx])
    width0 = span / 4.0
    start = np.array([base0, amp0, center0, width0])

    weights = 1.0 / np.maximum(counts, 1.0)

    def objective(params):
        width = params[3]
        if width <= 0 or width > 10.0 * span:
            return 1e30
        resid = counts - _gaussian(params, delays)
        return float(np.sum(weights * resid * resid))

    steps = np.array([max(abs(base0) * 0.1, 1.0), max(abs(amp0) * 0.1, 1.0),
                      span * 0.05, span * 0.05])
    result = nelder_mead(objective, start, initial_step=steps, max_evals=20_000)
    if not result.converged:
        raise FitFailureError("delay-scan Gaussian fit did not converge", best=result.x)
    base, amp, center, width = result.x
    width = abs(width)

    if base <= 0:
        raise UndefinedVisibilityError(
            "fitted baseline is not positive; visibility is undefined for this scan"
        )
    n_baseline = int(np.count_nonzero(np.abs(delays - center) > 3.0 * width))
    if n_baseline < MIN_BASELINE_POINTS:
        raise IllConditionedFitError(
            f"only {n_baseline} delay points lie outside 3 widths of the feature; "
            f"at least {MIN_BASELINE_POINTS} baseline points are needed"
        )

    sigma = _visibility_sigma(np.array([base, amp, center, width]), delays, weights)
    return VisibilityRecord(
        input_pair=scan.input_pair,
        output_pair=scan.output_pair,
        theta=theta,
        visibility=-amp / base,
        visibility_sigma=sigma,
        baseline=float(base),
        extremum=float(base + amp),
        dip_center=float(center),
        dip_width=float(width),
    )


def _visibility_sigma(params: np.ndarray, delays: np.ndarray,
                      weights: np.ndarray) -> float:
    """Propagate the Gauss-Newton parameter covariance to -amp/base."""
    base, amp, center, width = params
    z = (delays - center) / width
    shape = np.exp(-0.5 * z * z)
    jac = np.column_stack([
        np.ones_like(delays),
        shape,
        amp * shape * z / width,
        amp * shape * z * z / width,
    ])
    jtj = jac.T @ (weights[:, None] * jac)
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        return math.inf
    grad = np.array([amp / base ** 2, -1.0 / base, 0.0, 0.0])
    var = float(grad @ cov @ grad)
    return math.sqrt(max(var, 0.0))
