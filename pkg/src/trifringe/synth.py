"""Deterministic synthetic experiments for round-trip testing.

A synthetic device is defined forward: per-arm coupling laws that vary
quadratically with the heater phase, a true phase constant, ohmic
heater electronics (I = V/R), per-facet efficiencies, source rates and
a pair-coherence constant.  From that the generator produces exactly
the files a real measurement would: fringe counts over a voltage grid
and coincidence scans over a delay grid, Poisson-sampled.

Randomness comes from a counter-based generator (Philox) keyed by the
spec seed and a per-record stream index, so identical inputs produce
bit-identical datasets regardless of platform or generation order, and
records could be generated in parallel without changing the output.
A noise-free mode replaces sampling with the raw expectations, turning
every downstream fit into an exact round trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import FringeDataset, FringeRecord
from .device import (CouplingMatrix, DeviceModel, PhaseCalibration,
                     SetpointRecord, coupling_unitary)
from .errors import ValidationError
from .homscan import HomScanDataset
from .interference import DelayProfile, pair_probability_delayed

# Gaussian overlap constant, 1/ps^2, giving a dip FWHM of 0.4 ps:
# kappa = 8 ln 2 / FWHM^2.  Order-of-magnitude typical for
# few-nanometre spectral filters; override in the spec as needed.
DEFAULT_KAPPA = 8.0 * math.log(2.0) / 0.16

# Expected counts above this abort generation rather than silently
# saturating the samplers.
COUNT_OVERFLOW = 1e9

# Streams for delay scans are offset so they can never collide with
# fringe-record streams.
_SCAN_STREAM_BASE = 2 ** 32
_SCAN_STREAM_STRIDE = 2 ** 16


@dataclass(frozen=True)
class CouplingLaw:
    """One arm pair's coupling as a quadratic in theta."""

    c0: float
    c1: float = 0.0
    c2: float = 0.0

    def __call__(self, theta: float) -> float:
        return self.c0 + self.c1 * theta + self.c2 * theta * theta


@dataclass(frozen=True)
class SyntheticDeviceSpec:
    """Ground truth for a simulated interferometer."""

    coupling_laws: tuple[CouplingLaw, CouplingLaw, CouplingLaw]
    k_true: float
    heater_resistance: float
    eta_in: tuple[float, float, float]
    eta_out: tuple[float, float, float]
    source_rate: float
    pair_rate: float
    kappa: float = DEFAULT_KAPPA
    coincidence_window_ns: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if len(self.coupling_laws) != 3:
            raise ValidationError("need one coupling law per arm pair")
        for name in ("k_true", "heater_resistance", "source_rate", "pair_rate",
                     "kappa", "coincidence_window_ns"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ValidationError(f"{name} must be positive and finite, got {v!r}")
        for name in ("eta_in", "eta_out"):
            etas = tuple(float(v) for v in getattr(self, name))
            if len(etas) != 3 or any(not (0.0 < e <= 1.0) for e in etas):
                raise ValidationError(f"{name} must be three efficiencies in (0, 1]")
            object.__setattr__(self, name, etas)
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    def current(self, voltage: float) -> float:
        return voltage / self.heater_resistance

    def theta_of_voltage(self, voltage: float) -> float:
        return self.k_true * voltage * self.current(voltage)

    def couplings_at(self, theta: float) -> np.ndarray:
        g = np.array([law(theta) for law in self.coupling_laws])
        if np.any(g < 0):
            raise ValidationError(
                f"coupling law goes negative at theta = {theta:.6g}; "
                "shrink the simulated range or change the law"
            )
        return g

    def unitary(self, theta: float) -> np.ndarray:
        return coupling_unitary(self.couplings_at(theta))

    def loss_product(self, input_mode: int, output_mode: int) -> float:
        return self.eta_in[input_mode] * self.eta_out[output_mode]


@dataclass(frozen=True)
class ScanJob:
    """One requested delay scan: a heater setting and a port selection."""

    voltage: float
    input_pair: tuple[int, int]
    output_pair: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "input_pair", tuple(int(v) for v in self.input_pair))
        object.__setattr__(self, "output_pair", tuple(int(v) for v in self.output_pair))
        for pair, what in ((self.input_pair, "input_pair"), (self.output_pair, "output_pair")):
            if len(pair) != 2 or pair[0] == pair[1] or not all(0 <= p <= 2 for p in pair):
                raise ValidationError(f"{what} must be two distinct mode indices in 0..2")


@dataclass(frozen=True)
class RunConfig:
    """What to measure: grids, integration times, scan selections."""

    voltages: tuple[float, ...]
    delays_ps: tuple[float, ...] = ()
    fringe_integration_s: float = 1.0
    scan_integration_s: float = 1.0
    scans: tuple[ScanJob, ...] = ()

    def __post_init__(self):
        voltages = tuple(float(v) for v in self.voltages)
        delays = tuple(float(v) for v in self.delays_ps)
        object.__setattr__(self, "voltages", voltages)
        object.__setattr__(self, "delays_ps", delays)
        object.__setattr__(self, "scans", tuple(self.scans))
        if not voltages:
            raise ValidationError("voltage grid must be non-empty")
        if any(b - a <= 0 for a, b in zip(voltages, voltages[1:])):
            raise ValidationError("voltage grid must be strictly increasing")
        if any(v < 0 for v in voltages):
            raise ValidationError("voltages must be non-negative")
        if delays and any(b - a <= 0 for a, b in zip(delays, delays[1:])):
            raise ValidationError("delay grid must be strictly increasing")
        if self.scans and not delays:
            raise ValidationError("scan jobs need a delay grid")
        for name in ("fringe_integration_s", "scan_integration_s"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ValidationError(f"{name} must be positive")


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _stream(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_poisson(mean: float, rng: np.random.Generator) -> float:
    """One Poisson draw: CDF inversion for small means, rounded normal
    approximation for large ones.  Fixed here so outputs are stable."""
    if not math.isfinite(mean) or mean < 0:
        raise ValidationError(f"Poisson mean must be non-negative and finite, got {mean!r}")
    if mean > COUNT_OVERFLOW:
        raise ValidationError(
            f"expected count {mean:.3e} exceeds the {COUNT_OVERFLOW:.0e} overflow guard"
        )
    if mean == 0.0:
        return 0.0
    if mean < 30.0:
        u = rng.random()
        p = math.exp(-mean)
        cdf = p
        k = 0
        while u > cdf and k < 1000:
            k += 1
            p *= mean / k
            cdf += p
        return float(k)
    draw = rng.normal(mean, math.sqrt(mean))
    return float(max(round(draw), 0.0))


def _counts(means, rng: np.random.Generator, noise_free: bool):
    if noise_free:
        for m in means:
            if m > COUNT_OVERFLOW:
                raise ValidationError(
                    f"expected count {m:.3e} exceeds the {COUNT_OVERFLOW:.0e} overflow guard"
                )
        return [float(m) for m in means]
    return [sample_poisson(m, rng) for m in means]


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def generate_fringes(spec: SyntheticDeviceSpec, cfg: RunConfig,
                     noise_free: bool = False) -> FringeDataset:
    """Classical fringe counts over the voltage grid, all three inputs.

    Expected counts are eta_in * eta_out * |U|^2 * source_rate * T with
    theta = k_true * V^2 / R; sampling is per-record deterministic.
    """
    records = []
    for vi, voltage in enumerate(cfg.voltages):
        current = spec.current(voltage)
        theta = spec.theta_of_voltage(voltage)
        probs = np.abs(spec.unitary(theta)) ** 2
        for port in range(3):
            means = [spec.eta_in[port] * spec.eta_out[j] * probs[port, j]
                     * spec.source_rate * cfg.fringe_integration_s
                     for j in range(3)]
            rng = _stream(spec.rng_seed, vi * 3 + port)
            counts = _counts(means, rng, noise_free)
            records.append(FringeRecord(voltage, current, port, tuple(counts),
                                        cfg.fringe_integration_s))
    return FringeDataset(records, spec.source_rate)


def generate_hom_scans(spec: SyntheticDeviceSpec, cfg: RunConfig,
                       noise_free: bool = False) -> list[HomScanDataset]:
    """Coincidence-vs-delay scans for each requested job.

    Coincidence expectation per row is loss-product * pair_rate * p(tau)
    * T plus the accidental background implied by the singles rates and
    the coincidence window; singles columns carry their own samples so
    the downstream subtraction sees realistic noise.
    """
    scans = []
    for si, job in enumerate(cfg.scans):
        current = spec.current(job.voltage)
        theta = spec.theta_of_voltage(job.voltage)
        u = spec.unitary(theta)
        (i, j), (m, n) = job.input_pair, job.output_pair
        t_int = cfg.scan_integration_s
        probs = np.abs(u) ** 2
        singles_m_mean = spec.pair_rate * t_int * (
            spec.loss_product(i, m) * probs[i, m] + spec.loss_product(j, m) * probs[j, m])
        singles_n_mean = spec.pair_rate * t_int * (
            spec.loss_product(i, n) * probs[i, n] + spec.loss_product(j, n) * probs[j, n])
        window_s = spec.coincidence_window_ns * 1e-9
        accidental_mean = singles_m_mean * singles_n_mean * window_s / t_int
        pair_losses = spec.loss_product(i, m) * spec.loss_product(j, n)

        coincidences = []
        singles_m = []
        singles_n = []
        for ri, tau in enumerate(cfg.delays_ps):
            p = pair_probability_delayed(u, (i, j), (m, n),
                                         DelayProfile(spec.kappa, tau))
            c_mean = pair_losses * spec.pair_rate * t_int * p + accidental_mean
            rng = _stream(spec.rng_seed,
                          _SCAN_STREAM_BASE + si * _SCAN_STREAM_STRIDE + ri)
            c, sm, sn = _counts([c_mean, singles_m_mean, singles_n_mean],
                                rng, noise_free)
            coincidences.append(c)
            singles_m.append(sm)
            singles_n.append(sn)

        scans.append(HomScanDataset(
            input_pair=job.input_pair,
            output_pair=job.output_pair,
            voltage=job.voltage,
            current=current,
            integration_s=t_int,
            window_ns=spec.coincidence_window_ns,
            delays_ps=np.array(cfg.delays_ps),
            coincidences=np.array(coincidences),
            singles_m=np.array(singles_m),
            singles_n=np.array(singles_n),
        ))
    return scans


def true_model(spec: SyntheticDeviceSpec, thetas) -> DeviceModel:
    """The exact device model a perfect calibration would recover.

    Setpoints are laid on the given theta grid with zero-width bands;
    loss products are the exact efficiency products.  Useful as the
    reference side of round-trip comparisons.
    """
    thetas = np.asarray(thetas, dtype=float)
    setpoints = []
    for theta in thetas:
        voltage = math.sqrt(theta * spec.heater_resistance / spec.k_true) if theta > 0 else 0.0
        coupling = CouplingMatrix.from_couplings(spec.couplings_at(theta))
        setpoints.append(SetpointRecord(
            voltage=voltage,
            current=spec.current(voltage),
            theta=float(theta),
            coupling=coupling,
            coupling_lo=coupling,
            coupling_hi=coupling,
        ))
    losses = {(i, j): spec.loss_product(i, j) for i in range(3) for j in range(3)}
    return DeviceModel(
        calibration=PhaseCalibration(k=spec.k_true, k_uncertainty=0.0),
        setpoints=setpoints,
        loss_products=losses,
        input_pair_rate=spec.pair_rate,
    )
