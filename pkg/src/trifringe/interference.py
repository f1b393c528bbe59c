"""Photon counting statistics behind a three-mode transfer matrix.

Single photons map to intensity rows of |U|^2.  Photon pairs in
distinct inputs interfere: the amplitude for output pair (m, n) is the
permanent of the 2x2 submatrix picked out by the input and output
modes, and the bunched outcomes (m == n) carry a 1/2! normalization.
The same permanent rule extends to any photon number, which this
module exposes for cross-checks up to six photons.

A relative arrival delay between the two photons washes out the
interference cross term.  With a Gaussian mutual coherence of
curvature ``kappa`` (units 1/time^2), the cross term is scaled by
exp(-kappa tau^2 / 2), recovering the fully distinguishable rate at
large delay and the indistinguishable rate at zero delay.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .device import N_MODES
from .errors import UndefinedVisibilityError, ValidationError
from .linalg import permanent, require_unitary

# Unordered detection outcomes for a photon pair on three modes.
PAIR_OUTCOMES = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def _check_mode(name, mode):
    if not isinstance(mode, (int, np.integer)) or not (0 <= mode < N_MODES):
        raise ValidationError(f"{name} must be a mode index in 0..{N_MODES - 1}, got {mode!r}")
    return int(mode)


@dataclass(frozen=True)
class DelayProfile:
    """Relative arrival delay and Gaussian coherence curvature.

    ``tau`` is the delay between the two photons and ``kappa`` the
    curvature of their mutual coherence (1/time^2); the interference
    cross term scales with ``overlap()``.
    """

    kappa: float
    tau: float

    def __post_init__(self):
        kappa = float(self.kappa)
        tau = float(self.tau)
        if not (math.isfinite(kappa) and kappa > 0):
            raise ValidationError(f"kappa must be positive and finite, got {self.kappa!r}")
        if not math.isfinite(tau):
            raise ValidationError(f"tau must be finite, got {self.tau!r}")
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "tau", tau)

    def overlap(self) -> float:
        """Attenuation exp(-kappa tau^2 / 2) of the cross term."""
        return math.exp(-self.kappa * self.tau * self.tau / 2.0)


@dataclass(frozen=True)
class FockState:
    """Photon occupation per mode, e.g. (1, 1, 0) for one photon in each
    of the first two arms."""

    occupations: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(v) for v in self.occupations)
        if len(occ) != N_MODES:
            raise ValidationError(f"occupation vector needs {N_MODES} modes, got {len(occ)}")
        if any(v < 0 for v in occ) or sum(occ) < 1:
            raise ValidationError(f"occupations must be non-negative with at least one photon, got {occ}")
        object.__setattr__(self, "occupations", occ)

    @classmethod
    def parse(cls, text: str) -> "FockState":
        """Parse a digit string like '110' into a state."""
        if not text.isdigit():
            raise ValidationError(f"cannot parse occupation string {text!r}")
        return cls(tuple(int(ch) for ch in text))

    @property
    def total(self) -> int:
        return sum(self.occupations)

    def modes(self) -> tuple[int, ...]:
        """Mode index per photon, with repetition for multiple occupancy."""
        out = []
        for mode, n in enumerate(self.occupations):
            out.extend([mode] * n)
        return tuple(out)

    def __str__(self) -> str:
        return "".join(str(v) for v in self.occupations)


def single_photon_distribution(u: np.ndarray, input_mode: int) -> np.ndarray:
    """Output-mode probabilities for one photon injected in ``input_mode``."""
    require_unitary(u, what="transfer matrix")
    input_mode = _check_mode("input_mode", input_mode)
    return np.abs(u[input_mode, :]) ** 2


def pair_amplitudes(u: np.ndarray, inputs, outputs) -> tuple[complex, complex]:
    """Direct and exchange amplitudes for a photon pair.

    Returns (A, B) with A = U[i,m] U[j,n] and B = U[i,n] U[j,m] for
    inputs (i, j) and outputs (m, n).
    """
    i, j = (_check_mode("input", v) for v in inputs)
    m, n = (_check_mode("output", v) for v in outputs)
    a = u[i, m] * u[j, n]
    b = u[i, n] * u[j, m]
    return complex(a), complex(b)


def pair_probability(u: np.ndarray, inputs, outputs) -> float:
    """Probability of the unordered output pair ``outputs``.

    Inputs must be two distinct modes; outputs may coincide (bunching),
    in which case the 1/2! factor for a doubly occupied mode applies.
    """
    require_unitary(u, what="transfer matrix")
    i, j = (_check_mode("input", v) for v in inputs)
    if i == j:
        raise ValidationError("input modes of the pair must be distinct")
    m, n = (_check_mode("output", v) for v in outputs)
    a, b = pair_amplitudes(u, (i, j), (m, n))
    norm = 2.0 if m == n else 1.0
    return float(abs(a + b) ** 2 / norm)


def pair_distribution(u: np.ndarray, inputs) -> dict[tuple[int, int], float]:
    """All six unordered pair outcomes; probabilities sum to one."""
    return {out: pair_probability(u, inputs, out) for out in PAIR_OUTCOMES}


def classical_pair_probability(u: np.ndarray, inputs, outputs) -> float:
    """Pair probability for fully distinguishable photons.

    The exchange cross term is absent: p = (|A|^2 + |B|^2) / (1+delta),
    which for a coincidence pair is the large-delay limit of the scan.
    """
    require_unitary(u, what="transfer matrix")
    i, j = (_check_mode("input", v) for v in inputs)
    if i == j:
        raise ValidationError("input modes of the pair must be distinct")
    m, n = (_check_mode("output", v) for v in outputs)
    a, b = pair_amplitudes(u, (i, j), (m, n))
    norm = 2.0 if m == n else 1.0
    return float((abs(a) ** 2 + abs(b) ** 2) / norm)


def pair_probability_delayed(u: np.ndarray, inputs, outputs,
                             delay: DelayProfile) -> float:
    """Coincidence probability at the relative delay carried by ``delay``.

    The interference cross term is attenuated by ``delay.overlap()``.
    Only distinct output modes are supported: the delay dependence of
    bunched outcomes involves single-detector timing we do not model.
    """
    require_unitary(u, what="transfer matrix")
    if not isinstance(delay, DelayProfile):
        raise ValidationError(f"delay must be a DelayProfile, got {type(delay).__name__}")
    i, j = (_check_mode("input", v) for v in inputs)
    if i == j:
        raise ValidationError("input modes of the pair must be distinct")
    m, n = (_check_mode("output", v) for v in outputs)
    if m == n:
        raise ValidationError("delay scans are defined for distinct output modes only")
    a, b = pair_amplitudes(u, (i, j), (m, n))
    p = abs(a) ** 2 + abs(b) ** 2 + 2.0 * (a * b.conjugate()).real * delay.overlap()
    return float(max(p, 0.0))


def predicted_visibility(u: np.ndarray, inputs, outputs) -> float:
    """Dip (positive) or peak (negative) depth of the delay scan.

    Defined as the fractional suppression of the coincidence rate at
    zero delay relative to the distinguishable baseline:
    V = -2 Re(A conj(B)) / (|A|^2 + |B|^2).  Undefined when the
    baseline vanishes (both classical paths dark).
    """
    require_unitary(u, what="transfer matrix")
    i, j = (_check_mode("input", v) for v in inputs)
    if i == j:
        raise ValidationError("input modes of the pair must be distinct")
    m, n = (_check_mode("output", v) for v in outputs)
    if m == n:
        raise ValidationError("visibility is defined for distinct output modes only")
    a, b = pair_amplitudes(u, (i, j), (m, n))
    baseline = abs(a) ** 2 + abs(b) ** 2
    if baseline < 1e-15:
        raise UndefinedVisibilityError(
            f"both pair amplitudes vanish for outputs {tuple(outputs)}; "
            "the delay scan has no baseline"
        )
    return float(-2.0 * (a * b.conjugate()).real / baseline)


# ---------------------------------------------------------------------------
# general photon number, for cross-checks
# ---------------------------------------------------------------------------

def multi_photon_probability(u: np.ndarray, input_modes, output_modes) -> float:
    """Probability of an unordered output occupation for Fock-state inputs.

    ``input_modes`` and ``output_modes`` list mode indices with
    repetition (e.g. ``(0, 0, 1)`` is two photons in mode 0 and one in
    mode 1).  Computed from the permanent of the selected submatrix;
    photon numbers up to six are supported.
    """
    require_unitary(u, what="transfer matrix")
    ins = [_check_mode("input", v) for v in input_modes]
    outs = [_check_mode("output", v) for v in output_modes]
    if len(ins) != len(outs):
        raise ValidationError("photon number must match between inputs and outputs")
    if not ins:
        raise ValidationError("need at least one photon")
    sub = u[np.ix_(ins, outs)]
    per = permanent(sub)
    norm = 1.0
    for occ in Counter(ins).values():
        norm *= math.factorial(occ)
    for occ in Counter(outs).values():
        norm *= math.factorial(occ)
    return float(abs(per) ** 2 / norm)


def multi_photon_distribution(u: np.ndarray, input_modes) -> dict[tuple[int, ...], float]:
    """Full outcome distribution for ``input_modes`` photons; sums to one."""
    n = len(list(input_modes))
    outcomes = itertools.combinations_with_replacement(range(N_MODES), n)
    return {out: multi_photon_probability(u, input_modes, out) for out in outcomes}
