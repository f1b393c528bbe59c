"""Effective model of a phase-tunable three-arm interferometer.

The device is summarized by a real symmetric coupling matrix: a common
diagonal entry ``beta`` and one coupling strength per pair of arms.
Its transfer matrix is the unitary exponential exp(-i C) of that
matrix, with the convention that ``U[i, m]`` is the amplitude from
input mode ``i`` to output mode ``m``.

A calibrated model is a sweep of such couplings indexed by the heater
phase theta, together with per-coupling tolerance bands, the measured
loss products for each input/output port pair, and the constant that
converts dissipated electrical power into phase.

Two sign conventions are worth spelling out.  Conjugating the coupling
matrix by any diagonal matrix of signs flips coupling signs pairwise
while leaving every transfer modulus unchanged, so intensity data can
never distinguish the eight sign patterns of (g1, g2, g3); extracted
couplings are therefore reported on the non-negative branch.  Second,
``beta`` contributes only a global phase exp(-i beta) and drops out of
every observable; calibrated models fix it to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError, ValidationError
from .linalg import herm_expm, unitarity_defect, UNITARITY_TOL

N_MODES = 3

# Index pairs of the off-diagonal couplings inside the coupling matrix:
# g1 couples arms 1-2, g2 couples arms 2-3, g3 couples arms 1-3.
COUPLING_PAIRS = ((0, 1), (1, 2), (0, 2))


def _require_finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class CouplingMatrix:
    """Real symmetric effective coupling matrix of the three arms."""

    beta: float
    g1: float
    g2: float
    g3: float

    def __post_init__(self):
        for name in ("beta", "g1", "g2", "g3"):
            _require_finite(name, getattr(self, name))

    @classmethod
    def from_couplings(cls, couplings, beta: float = 0.0) -> "CouplingMatrix":
        g1, g2, g3 = (float(v) for v in couplings)
        return cls(beta=float(beta), g1=g1, g2=g2, g3=g3)

    def couplings(self) -> np.ndarray:
        return np.array([self.g1, self.g2, self.g3], dtype=float)

    def as_array(self) -> np.ndarray:
        c = np.full((N_MODES, N_MODES), self.beta, dtype=float)
        c[0, 1] = c[1, 0] = self.g1
        c[1, 2] = c[2, 1] = self.g2
        c[0, 2] = c[2, 0] = self.g3
        np.fill_diagonal(c, self.beta)
        return c


def unitary_at(coupling: CouplingMatrix) -> np.ndarray:
    """Transfer matrix exp(-i C) of a coupling matrix."""
    u = herm_expm(coupling.as_array(), scale=-1.0)
    defect = unitarity_defect(u)
    if defect > UNITARITY_TOL:
        raise ValidationError(f"transfer matrix defect {defect:.3e} exceeds {UNITARITY_TOL:.1e}")
    return u


def coupling_unitary(couplings, beta: float = 0.0) -> np.ndarray:
    """Shorthand: transfer matrix for a (g1, g2, g3) triple."""
    return unitary_at(CouplingMatrix.from_couplings(couplings, beta))


# ---------------------------------------------------------------------------
# ideal references
# ---------------------------------------------------------------------------

def ideal_tritter() -> np.ndarray:
    """Balanced three-mode splitter: the 3x3 discrete Fourier matrix."""
    j = np.arange(N_MODES)
    return np.exp(2j * np.pi * np.outer(j, j) / N_MODES) / np.sqrt(N_MODES)


def ideal_device_unitary(theta: float) -> np.ndarray:
    """Two balanced splitters with a phase ``theta`` on the middle arm.

    Periodic in theta with period 2*pi, and symmetric like every
    transfer matrix in this package.
    """
    _require_finite("theta", theta)
    t = ideal_tritter()
    phase = np.diag([1.0, np.exp(1j * theta), 1.0])
    return t @ phase @ t


# ---------------------------------------------------------------------------
# phase calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseCalibration:
    """Phase per dissipated electrical power, theta = k * I * V."""

    k: float
    k_uncertainty: float

    def __post_init__(self):
        _require_finite("k", self.k)
        _require_finite("k_uncertainty", self.k_uncertainty)
        if self.k <= 0:
            raise ValidationError(f"calibration constant k must be positive, got {self.k}")
        if self.k_uncertainty < 0:
            raise ValidationError("k_uncertainty must be non-negative")


def phase_from_power(calibration: PhaseCalibration, current: float, voltage: float) -> float:
    """Heater phase induced by a drive point, linear in power I*V."""
    _require_finite("current", current)
    _require_finite("voltage", voltage)
    if current < 0 or voltage < 0:
        raise RangeError(
            f"drive point needs non-negative current and voltage, got I={current}, V={voltage}"
        )
    return calibration.k * current * voltage


# ---------------------------------------------------------------------------
# calibrated model
# ---------------------------------------------------------------------------

@dataclass
class SetpointRecord:
    """One calibrated heater setting with its coupling tolerance band."""

    voltage: float
    current: float
    theta: float
    coupling: CouplingMatrix
    coupling_lo: CouplingMatrix
    coupling_hi: CouplingMatrix

    def __post_init__(self):
        for name in ("voltage", "current", "theta"):
            _require_finite(name, getattr(self, name))
        lo = self.coupling_lo.couplings()
        mid = self.coupling.couplings()
        hi = self.coupling_hi.couplings()
        if np.any(lo > mid + 1e-12) or np.any(mid > hi + 1e-12):
            raise ValidationError(
                f"setpoint at V={self.voltage}: band must satisfy lo <= coupling <= hi componentwise"
            )


@dataclass
class DeviceModel:
    """Calibrated device: coupling sweep, losses, and phase constant."""

    calibration: PhaseCalibration
    setpoints: list[SetpointRecord]
    loss_products: dict[tuple[int, int], float] = field(default_factory=dict)
    input_pair_rate: float = 1.0

    def __post_init__(self):
        if not self.setpoints:
            raise ValidationError("a device model needs at least one setpoint")
        thetas = [s.theta for s in self.setpoints]
        if any(b - a <= 0 for a, b in zip(thetas, thetas[1:])):
            raise ValidationError("setpoints must be sorted by strictly increasing theta")
        for (i, j), value in self.loss_products.items():
            if not (0 <= i < N_MODES and 0 <= j < N_MODES):
                raise ValidationError(f"loss product key {(i, j)} out of range")
            if not (0.0 < value <= 1.0):
                raise ValidationError(f"loss product {(i, j)} must lie in (0, 1], got {value}")
        _require_finite("input_pair_rate", self.input_pair_rate)
        if self.input_pair_rate < 0:
            raise ValidationError("input_pair_rate must be non-negative")

    # -- phase range ------------------------------------------------------

    @property
    def theta_min(self) -> float:
        return self.setpoints[0].theta

    @property
    def theta_max(self) -> float:
        return self.setpoints[-1].theta

    def _check_theta(self, theta: float) -> float:
        theta = _require_finite("theta", theta)
        if theta < self.theta_min - 1e-12 or theta > self.theta_max + 1e-12:
            raise RangeError(
                f"theta={theta:.6g} outside calibrated range "
                f"[{self.theta_min:.6g}, {self.theta_max:.6g}]"
            )
        return min(max(theta, self.theta_min), self.theta_max)

    # -- interpolation ----------------------------------------------------

    def _interp(self, theta: float, extract) -> np.ndarray:
        theta = self._check_theta(theta)
        thetas = np.array([s.theta for s in self.setpoints])
        values = np.stack([extract(s) for s in self.setpoints])
        idx = int(np.searchsorted(thetas, theta, side="right")) - 1
        idx = min(max(idx, 0), len(thetas) - 2) if len(thetas) > 1 else 0
        if len(thetas) == 1:
            return values[0]
        t0, t1 = thetas[idx], thetas[idx + 1]
        frac = (theta - t0) / (t1 - t0)
        return (1.0 - frac) * values[idx] + frac * values[idx + 1]

    def coupling_at(self, theta: float) -> CouplingMatrix:
        """Couplings at ``theta``, linear between neighbouring setpoints."""
        g = self._interp(theta, lambda s: s.coupling.couplings())
        beta = float(self._interp(theta, lambda s: np.array([s.coupling.beta]))[0])
        return CouplingMatrix.from_couplings(g, beta)

    def bands_at(self, theta: float) -> tuple[CouplingMatrix, CouplingMatrix]:
        lo = self._interp(theta, lambda s: s.coupling_lo.couplings())
        hi = self._interp(theta, lambda s: s.coupling_hi.couplings())
        beta = self.coupling_at(theta).beta
        return (CouplingMatrix.from_couplings(lo, beta),
                CouplingMatrix.from_couplings(hi, beta))

    def unitary(self, theta: float) -> np.ndarray:
        return unitary_at(self.coupling_at(theta))

    # -- tolerance-band corners -------------------------------------------

    def corner_models(self) -> list["CornerModel"]:
        """The 2^3 models with each coupling pinned to its lo or hi band edge."""
        return [CornerModel(self, choice) for choice in
                ((a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1))]

    # -- losses -----------------------------------------------------------

    def loss_product(self, input_mode: int, output_mode: int) -> float:
        key = (input_mode, output_mode)
        if key not in self.loss_products:
            raise ValidationError(
                f"loss product for input {input_mode + 1}, output {output_mode + 1} "
                "was not recoverable from the calibration data"
            )
        return self.loss_products[key]


class CornerModel:
    """View of a model with couplings pinned to band corners.

    ``choice`` picks the lo (0) or hi (1) band edge per coupling
    component; the assignment is fixed across the whole theta sweep so
    corner curves are smooth.
    """

    def __init__(self, model: DeviceModel, choice: tuple[int, int, int]):
        self.model = model
        self.choice = choice

    @property
    def theta_min(self) -> float:
        return self.model.theta_min

    @property
    def theta_max(self) -> float:
        return self.model.theta_max

    def coupling_at(self, theta: float) -> CouplingMatrix:
        lo, hi = self.model.bands_at(theta)
        lo_g, hi_g = lo.couplings(), hi.couplings()
        g = np.where(np.asarray(self.choice, dtype=bool), hi_g, lo_g)
        return CouplingMatrix.from_couplings(g, lo.beta)

    def unitary(self, theta: float) -> np.ndarray:
        return unitary_at(self.coupling_at(theta))


class IdealDevice:
    """Lossless reference device usable wherever a model is expected.

    Transfer matrices come from :func:`ideal_device_unitary`; bands are
    exact (no corners), all loss products are one, and the pair rate
    defaults to one so predictions are plain probabilities.
    """

    def __init__(self, input_pair_rate: float = 1.0):
        self.input_pair_rate = float(input_pair_rate)
        self.theta_min = -np.inf
        self.theta_max = np.inf

    def unitary(self, theta: float) -> np.ndarray:
        return ideal_device_unitary(theta)

    def corner_models(self) -> list:
        return []

    def loss_product(self, input_mode: int, output_mode: int) -> float:
        if not (0 <= input_mode < N_MODES and 0 <= output_mode < N_MODES):
            raise ValidationError("mode index out of range")
        return 1.0


def model_interpolate(model: DeviceModel, theta: float) -> CouplingMatrix:
    """Couplings at an intermediate theta; exact at the setpoints."""
    return model.coupling_at(theta)
