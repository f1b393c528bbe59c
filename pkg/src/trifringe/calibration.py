"""Device extraction from classical fringe counts.

The chain: single-photon counts per (voltage, input port, output port)
are reduced to loss-invariant count ratios; a simplex fit per voltage
recovers the three couplings with 1/e^2 tolerance bands; a shared-rate
sinusoid fit across all nine fringe series recovers the phase constant
k of theta = k*I*V; and with couplings and k in hand the per-port loss
products and absolute coincidence rates follow.

Count ratios of the form N[i,j]*N[k,l] / (N[i,l]*N[k,j]) are used
because every per-facet efficiency enters numerator and denominator
identically and cancels; only transfer moduli survive.  Three ratios
(ports 1-2, 1-3 and 2-3 diagonals) carry all the usable information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import (CouplingMatrix, DeviceModel, PhaseCalibration,
                     SetpointRecord, phase_from_power, unitary_at)
from .errors import (DegenerateLikelihoodError, FitFailureError,
                     IllConditionedFitError, InconsistentNormalizationError,
                     ValidationError)
from .interference import classical_pair_probability, pair_probability
from .optimize import golden_section, nelder_mead

# A count ratio is unusable when any participating count falls below
# this; first-order Poisson error propagation breaks down near zero.
MIN_COUNT = 10.0

# Index quadruples (i, j, k, l) of the fitted ratios
# N[i,j]*N[k,l] / (N[i,l]*N[k,j]), rows = input port, cols = output port.
RATIO_QUADS = ((0, 0, 1, 1), (0, 0, 2, 2), (1, 1, 2, 2))

# Tolerance bands are read off where exp(-L) falls to 1/e^2 of its
# peak, i.e. where the likelihood has climbed by 2 from its minimum.
BAND_LIKELIHOOD_RISE = 2.0
BAND_SCAN_LIMIT = 4.0

DEFAULT_SEED_COUPLING = CouplingMatrix(0.0, math.pi / 4, math.pi / 4, math.pi / 4)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FringeRecord:
    """Counts on the three outputs for one voltage and one input port."""

    voltage: float
    current: float
    input_port: int
    counts: tuple[float, float, float]
    integration_s: float

    def __post_init__(self):
        for name in ("voltage", "current", "integration_s"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v!r}")
        if self.integration_s <= 0:
            raise ValidationError(f"integration_s must be positive, got {self.integration_s}")
        if not (0 <= self.input_port <= 2):
            raise ValidationError(f"input_port must be 0..2, got {self.input_port}")
        counts = tuple(float(c) for c in self.counts)
        if len(counts) != 3 or any(not math.isfinite(c) or c < 0 for c in counts):
            raise ValidationError(f"counts must be three finite non-negative numbers, got {self.counts}")
        object.__setattr__(self, "counts", counts)


@dataclass
class FringeDataset:
    """Classical fringe measurement: all nine input/output series.

    ``source_rate`` is the photon rate delivered to the chip input, in
    photons per second before any coupling loss.
    """

    records: list[FringeRecord]
    source_rate: float

    def __post_init__(self):
        if not math.isfinite(self.source_rate) or self.source_rate <= 0:
            raise ValidationError(f"source_rate must be positive, got {self.source_rate}")
        if not self.records:
            raise ValidationError("fringe dataset has no records")
        seen: dict[float, set[int]] = {}
        for rec in self.records:
            ports = seen.setdefault(rec.voltage, set())
            if rec.input_port in ports:
                raise ValidationError(
                    f"duplicate record for voltage {rec.voltage} input port {rec.input_port + 1}"
                )
            ports.add(rec.input_port)
        for voltage, ports in seen.items():
            if ports != {0, 1, 2}:
                raise ValidationError(
                    f"voltage {voltage} is missing input ports "
                    f"{sorted(p + 1 for p in {0, 1, 2} - ports)}"
                )

    def voltages(self) -> list[float]:
        return sorted({rec.voltage for rec in self.records})

    def setpoint_group(self, voltage: float) -> list[FringeRecord]:
        group = [r for r in self.records if r.voltage == voltage]
        return sorted(group, key=lambda r: r.input_port)

    def count_matrix(self, voltage: float) -> np.ndarray:
        """3x3 matrix of counts, rows = input ports, cols = outputs."""
        rows = self.setpoint_group(voltage)
        return np.array([rows[i].counts for i in range(3)], dtype=float)


@dataclass
class RatioSet:
    """Loss-invariant ratios at one voltage, with Poisson sigmas."""

    voltage: float
    current: float
    values: np.ndarray
    sigmas: np.ndarray
    usable: np.ndarray

    @property
    def n_usable(self) -> int:
        return int(np.count_nonzero(self.usable))


def compute_ratios(dataset: FringeDataset) -> list[RatioSet]:
    """Reduce counts to the three loss-free ratios per voltage.

    sigma_F/F = sqrt(sum of 1/N over the four counts); a ratio using
    any count below MIN_COUNT is flagged unusable at that voltage.
    """
    out = []
    for voltage in dataset.voltages():
        counts = dataset.count_matrix(voltage)
        current = dataset.setpoint_group(voltage)[0].current
        values = np.zeros(3)
        sigmas = np.zeros(3)
        usable = np.zeros(3, dtype=bool)
        for q, (i, j, k, l) in enumerate(RATIO_QUADS):
            four = np.array([counts[i, j], counts[k, l], counts[i, l], counts[k, j]])
            if np.any(four < MIN_COUNT):
                continue
            f = four[0] * four[1] / (four[2] * four[3])
            values[q] = f
            sigmas[q] = f * math.sqrt(float(np.sum(1.0 / four)))
            usable[q] = True
        out.append(RatioSet(voltage, current, values, sigmas, usable))
    return out


def model_ratios(coupling: CouplingMatrix) -> np.ndarray:
    """The three ratios a lossless device with these couplings produces."""
    p = np.abs(unitary_at(coupling)) ** 2
    return np.array([p[i, j] * p[k, l] / (p[i, l] * p[k, j]) for i, j, k, l in RATIO_QUADS])


def likelihood(coupling: CouplingMatrix, ratios: RatioSet) -> float:
    """Gaussian misfit sum((F_meas - F_model)^2 / (2 sigma^2)).

    Zero iff the model reproduces every usable ratio exactly.  Even in
    each coupling separately: sign flips leave all moduli unchanged.
    """
    if ratios.n_usable == 0:
        raise DegenerateLikelihoodError(
            f"no usable count ratios at voltage {ratios.voltage}; cannot fit couplings"
        )
    model = model_ratios(coupling)
    resid = (ratios.values - model)[ratios.usable]
    sig = ratios.sigmas[ratios.usable]
    return float(np.sum(resid ** 2 / (2.0 * sig ** 2)))


# ---------------------------------------------------------------------------
# per-setpoint coupling fit
# ---------------------------------------------------------------------------

@dataclass
class SetpointFit:
    """Couplings fitted at one voltage, with bands and diagnostics."""

    voltage: float
    current: float
    coupling: CouplingMatrix
    coupling_lo: CouplingMatrix
    coupling_hi: CouplingMatrix
    likelihood: float
    n_evals: int
    status: str


def _band_edge(objective, center: np.ndarray, axis: int, direction: float,
               target: float) -> float:
    """Offset along one coupling axis where the misfit reaches ``target``.

    Doubling search for a bracket starting at 1e-4 rad, then bisection.
    The lower edge is deliberately not clamped at zero: for couplings
    consistent with zero the 1/e^2 interval extends through it.
    """
    step = 1e-4
    prev = 0.0
    while step <= BAND_SCAN_LIMIT:
        x = center.copy()
        x[axis] += direction * step
        if objective(x) >= target:
            break
        prev = step
        step *= 2.0
    else:
        return center[axis] + direction * BAND_SCAN_LIMIT
    lo, hi = prev, step
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        x = center.copy()
        x[axis] += direction * mid
        if objective(x) >= target:
            hi = mid
        else:
            lo = mid
    return center[axis] + direction * 0.5 * (lo + hi)


def fit_setpoint(ratios: RatioSet, seed: CouplingMatrix | None = None,
                 rng: np.random.Generator | None = None) -> SetpointFit:
    """Simplex fit of the three couplings to one voltage's ratios.

    The misfit is invariant under sign flips of the couplings, so the
    minimizer is projected onto the non-negative branch afterwards; the
    projection is exact, not an approximation.

    Three measured ratios pin three couplings only up to discrete
    aliases: distinct triples can reproduce the same intensity ratios
    exactly.  A converged minimum is therefore accepted only inside the
    canonical window |g| <= pi/2; otherwise the fit restarts, first
    from the default seed and then from random draws, which makes the
    returned branch reproducible regardless of the caller's seed.
    """
    if seed is None:
        seed = DEFAULT_SEED_COUPLING
    if rng is None:
        rng = np.random.default_rng(np.random.Philox(0))

    def objective(x):
        return likelihood(CouplingMatrix.from_couplings(x), ratios)

    def acceptable(res):
        return (res.fun <= 10.0 * ratios.n_usable
                and bool(np.all(np.abs(res.x) <= math.pi / 2.0 + 1e-9)))

    budget = 100_000
    result = nelder_mead(objective, seed.couplings(), initial_step=0.1,
                         max_evals=budget)
    n_evals = result.n_evals
    candidates = [result]

    restarts = 0
    while (not any(acceptable(c) for c in candidates)
           and restarts < 3 and n_evals < budget):
        restarts += 1
        start = (DEFAULT_SEED_COUPLING.couplings() if restarts == 1
                 else rng.uniform(0.0, math.pi / 2.0, size=3))
        if restarts == 1 and np.allclose(start, seed.couplings()):
            start = rng.uniform(0.0, math.pi / 2.0, size=3)
        again = nelder_mead(objective, start, initial_step=0.1,
                            max_evals=budget - n_evals)
        n_evals += again.n_evals
        candidates.append(again)

    pool = [c for c in candidates if acceptable(c)] or candidates
    chosen = min(pool, key=lambda c: c.fun)
    best_x, best_fun = chosen.x, chosen.fun
    if chosen is not candidates[0]:
        status = f"restarted({restarts})"
    else:
        status = "converged" if chosen.converged else "budget-exhausted"

    # Polish with a tight simplex; guards against premature collapse in
    # the shallow valley near-degenerate setpoints produce.
    for _ in range(3):
        if n_evals >= budget:
            break
        polish = nelder_mead(objective, best_x, initial_step=0.02,
                             max_evals=budget - n_evals)
        n_evals += polish.n_evals
        if polish.fun < best_fun - 1e-12:
            best_x, best_fun = polish.x, polish.fun
        else:
            if polish.fun < best_fun:
                best_x, best_fun = polish.x, polish.fun
            break

    if best_fun > 10.0 * ratios.n_usable and status == "budget-exhausted":
        raise FitFailureError(
            f"coupling fit at voltage {ratios.voltage} did not converge within "
            f"{budget} evaluations (best misfit {best_fun:.3g})",
            best=CouplingMatrix.from_couplings(np.abs(best_x)),
        )

    center = np.abs(best_x)
    best_fun = objective(center)
    target = best_fun + BAND_LIKELIHOOD_RISE
    lo = np.array([_band_edge(objective, center, a, -1.0, target) for a in range(3)])
    hi = np.array([_band_edge(objective, center, a, +1.0, target) for a in range(3)])

    return SetpointFit(
        voltage=ratios.voltage,
        current=ratios.current,
        coupling=CouplingMatrix.from_couplings(center),
        coupling_lo=CouplingMatrix.from_couplings(lo),
        coupling_hi=CouplingMatrix.from_couplings(hi),
        likelihood=best_fun,
        n_evals=n_evals,
        status=status,
    )


# ---------------------------------------------------------------------------
# phase constant fit
# ---------------------------------------------------------------------------

@dataclass
class PhaseFit:
    """Shared-rate sinusoid fit over all fringe series."""

    calibration: PhaseCalibration
    coefficients: list[tuple[float, float, float]]
    sse: float
    dof: int


def _sinusoid_sse(k: float, series) -> float:
    sse = 0.0
    for powers, values in series:
        design = np.column_stack([np.sin(k * powers), np.cos(k * powers),
                                  np.ones_like(powers)])
        coef, *_ = np.linalg.lstsq(design, values, rcond=None)
        resid = values - design @ coef
        sse += float(resid @ resid)
    return sse


def _sinusoid_coeffs(k: float, series) -> list[tuple[float, float, float]]:
    out = []
    for powers, values in series:
        design = np.column_stack([np.sin(k * powers), np.cos(k * powers),
                                  np.ones_like(powers)])
        coef, *_ = np.linalg.lstsq(design, values, rcond=None)
        out.append((float(coef[0]), float(coef[1]), float(coef[2])))
    return out


def fit_phase_calibration(series) -> PhaseFit:
    """Fit y = A sin(k P) + B cos(k P) + offset with one k for all series.

    ``series`` is a list of (power array, value array) pairs, one per
    fringe element.  For any candidate k the per-series coefficients
    are linear least squares; k itself comes from a coarse scan of the
    summed squared residual followed by a golden-section refinement.
    Uncertainty on k is read from the residual curvature at the
    minimum.
    """
    series = [(np.asarray(p, dtype=float), np.asarray(v, dtype=float))
              for p, v in series]
    if not series:
        raise ValidationError("phase fit needs at least one fringe series")
    for powers, values in series:
        if powers.shape != values.shape or powers.ndim != 1:
            raise ValidationError("each fringe series needs matching 1-d power and value arrays")
        if len(powers) < 5:
            raise IllConditionedFitError(
                f"fringe series has {len(powers)} points; at least 5 are needed"
            )
    all_powers = np.concatenate([p for p, _ in series])
    span = float(all_powers.max() - all_powers.min())
    if span <= 0:
        raise IllConditionedFitError("fringe series cover zero power span; k is unidentifiable")

    k_lo, k_hi = 0.05 * math.pi / span, 40.0 * math.pi / span
    grid = np.linspace(k_lo, k_hi, 800)
    sse_grid = np.array([_sinusoid_sse(k, series) for k in grid])
    i = int(np.argmin(sse_grid))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    k_hat = golden_section(lambda k: _sinusoid_sse(k, series), lo, hi, tol=1e-12)
    sse = _sinusoid_sse(k_hat, series)

    # Residual curvature -> sigma_k.  The misfit in likelihood units is
    # SSE/(2 s^2); its curvature sets the 1-sigma width.
    n_total = sum(len(p) for p, _ in series)
    dof = n_total - 3 * len(series) - 1
    if dof <= 0:
        raise IllConditionedFitError("too few fringe points for the number of fitted coefficients")
    h = max(1e-6 * k_hat, 1e-9)
    curvature = (_sinusoid_sse(k_hat + h, series) - 2.0 * sse
                 + _sinusoid_sse(k_hat - h, series)) / (h * h)
    s2 = sse / dof
    if curvature <= 0 or not math.isfinite(curvature):
        raise IllConditionedFitError(
            "flat residual around the fitted k; the fringe data do not constrain it"
        )
    sigma_k = math.sqrt(max(2.0 * s2 / curvature, 0.0))
    if k_hat <= 0 or sigma_k >= k_hat:
        raise IllConditionedFitError(
            f"k = {k_hat:.4g} +- {sigma_k:.4g} is consistent with zero; fit is ill-conditioned"
        )
    if k_hat * span < 1.0:
        raise IllConditionedFitError(
            f"fringe sweep covers only {k_hat * span:.3f} rad of phase; "
            "at least 1 rad is needed to pin k"
        )
    return PhaseFit(PhaseCalibration(k=k_hat, k_uncertainty=sigma_k),
                    _sinusoid_coeffs(k_hat, series), sse, dof)


def fringe_series_from_dataset(dataset: FringeDataset):
    """The nine (power, rate) series the phase fit consumes.

    Rates (counts per second) rather than raw counts, so records with
    different integration times line up; per-series scale and offset
    absorb all loss factors.
    """
    voltages = dataset.voltages()
    powers = []
    rates = {(i, j): [] for i in range(3) for j in range(3)}
    for voltage in voltages:
        group = dataset.setpoint_group(voltage)
        powers.append(voltage * group[0].current)
        for rec in group:
            for j in range(3):
                rates[(rec.input_port, j)].append(rec.counts[j] / rec.integration_s)
    p = np.array(powers)
    return [(p, np.array(rates[key])) for key in sorted(rates)]


# ---------------------------------------------------------------------------
# loss products
# ---------------------------------------------------------------------------

def solve_loss_products(dataset: FringeDataset, model: DeviceModel) -> dict[tuple[int, int], float]:
    """Per-port efficiency products eta_in[i] * eta_out[j].

    Each count N_ij estimates the product via N / (M * |U_ij|^2) with M
    the injected photon number; estimates are averaged over setpoints
    where |U_ij|^2 > 0.05, weighted by counts.  Elements dark at every
    setpoint are omitted: their product is unrecoverable.  An estimate
    above one violates the efficiency bound and raises; tiny overshoot
    from rounding is clamped.
    """
    sums = {(i, j): [0.0, 0.0] for i in range(3) for j in range(3)}
    for rec in dataset.records:
        theta = phase_from_power(model.calibration, rec.current, rec.voltage)
        probs = np.abs(model.unitary(theta)) ** 2
        injected = dataset.source_rate * rec.integration_s
        for j in range(3):
            p = probs[rec.input_port, j]
            if p <= 0.05:
                continue
            estimate = rec.counts[j] / (injected * p)
            weight = rec.counts[j]
            acc = sums[(rec.input_port, j)]
            acc[0] += weight * estimate
            acc[1] += weight
    out = {}
    for key, (num, den) in sums.items():
        if den <= 0.0:
            continue
        value = num / den
        if value > 1.0 + 1e-9:
            raise InconsistentNormalizationError(
                f"loss product for input {key[0] + 1}, output {key[1] + 1} "
                f"came out {value:.6g} > 1; counts are inconsistent with the source rate"
            )
        out[key] = min(value, 1.0)
    return out


# ---------------------------------------------------------------------------
# absolute predictions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredictionBand:
    """Central prediction with its coupling-band envelope."""

    value: float
    lo: float
    hi: float


def predict_coincidences(model, inputs, outputs, theta: float,
                         indistinguishable: bool = True) -> PredictionBand:
    """Absolute coincidence rate for a photon pair, counts per second.

    rate = eta_i_in eta_m_out * eta_j_in eta_n_out * p * pair_rate,
    where p is the quantum pair probability or its distinguishable
    counterpart.  The band comes from re-evaluating at the eight
    corners of the coupling tolerance bands.
    """
    i, j = inputs
    m, n = outputs
    prob = pair_probability if indistinguishable else classical_pair_probability
    losses = model.loss_product(i, m) * model.loss_product(j, n)

    def rate(device) -> float:
        return losses * model.input_pair_rate * prob(device.unitary(theta), (i, j), (m, n))

    central = rate(model)
    values = [central] + [rate(corner) for corner in model.corner_models()]
    return PredictionBand(central, min(values), max(values))


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------

def calibrate_device(dataset: FringeDataset, *, input_pair_rate: float = 1.0,
                     rng_seed: int = 0) -> tuple[DeviceModel, PhaseFit, list[SetpointFit]]:
    """Fringe counts in, calibrated device model out.

    Setpoints are fit in voltage order, each seeded with its
    predecessor's solution so the extracted couplings stay on one
    continuous branch; the first is seeded at (pi/4, pi/4, pi/4).
    """
    ratio_sets = compute_ratios(dataset)
    rng = np.random.default_rng(np.random.Philox(rng_seed))
    fits: list[SetpointFit] = []
    seed = DEFAULT_SEED_COUPLING
    for ratios in ratio_sets:
        fit = fit_setpoint(ratios, seed, rng)
        fits.append(fit)
        seed = fit.coupling

    phase_fit = fit_phase_calibration(fringe_series_from_dataset(dataset))

    setpoints = [
        SetpointRecord(
            voltage=f.voltage,
            current=f.current,
            theta=phase_from_power(phase_fit.calibration, f.current, f.voltage),
            coupling=f.coupling,
            coupling_lo=f.coupling_lo,
            coupling_hi=f.coupling_hi,
        )
        for f in fits
    ]
    setpoints.sort(key=lambda s: s.theta)

    interim = DeviceModel(calibration=phase_fit.calibration, setpoints=setpoints,
                          loss_products={}, input_pair_rate=input_pair_rate)
    model = DeviceModel(calibration=phase_fit.calibration, setpoints=setpoints,
                        loss_products=solve_loss_products(dataset, interim),
                        input_pair_rate=input_pair_rate)
    return model, phase_fit, fits
