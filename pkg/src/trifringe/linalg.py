"""Dense linear algebra helpers for few-mode optics.

Everything operates on plain complex numpy arrays.  The matrices are
tiny (3x3 transfer matrices, photon-counting submatrices up to 6x6), so
the implementations favour exactness and clarity over asymptotics.
"""

from __future__ import annotations

import numpy as np

from .errors import DecompositionError, ValidationError

HERMITICITY_TOL = 1e-12
UNITARITY_TOL = 1e-10
PERMANENT_MAX_DIM = 6


def hermiticity_defect(matrix) -> float:
    """Largest absolute entry of M - M^dagger."""
    m = np.asarray(matrix)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def unitarity_defect(matrix) -> float:
    """Largest absolute entry of M^dagger M - I.

    Zero for an exactly unitary matrix; the package treats anything
    below ``UNITARITY_TOL`` as unitary.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"unitarity defect needs a square matrix, got shape {m.shape}")
    eye = np.eye(m.shape[0])
    return float(np.max(np.abs(m.conj().T @ m - eye)))


def require_unitary(matrix, tol: float = UNITARITY_TOL, what: str = "matrix") -> np.ndarray:
    """Return ``matrix`` as a complex array, or raise if it is not unitary."""
    m = np.asarray(matrix, dtype=complex)
    defect = unitarity_defect(m)
    if defect > tol:
        raise ValidationError(f"{what} is not unitary: defect {defect:.3e} exceeds {tol:.1e}")
    return m


def herm_expm(hermitian, scale: float = -1.0) -> np.ndarray:
    """Unitary exponential exp(i * scale * H) of a Hermitian matrix.

    Parameters
    ----------
    hermitian : array_like
        Square Hermitian matrix.  Asymmetry above ``HERMITICITY_TOL``
        is rejected rather than silently symmetrized.
    scale : float
        Real prefactor inside the exponent.  The default -1 gives the
        forward transfer matrix exp(-i H).

    Returns
    -------
    numpy.ndarray
        V diag(exp(i * scale * lambda)) V^dagger from the real
        eigendecomposition H = V diag(lambda) V^dagger.
    """
    h = np.asarray(hermitian, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"herm_expm needs a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValidationError("herm_expm needs finite matrix entries")
    defect = hermiticity_defect(h)
    if defect > HERMITICITY_TOL:
        raise ValidationError(
            f"herm_expm needs a Hermitian matrix: asymmetry {defect:.3e} exceeds {HERMITICITY_TOL:.1e}"
        )
    if not np.isfinite(scale):
        raise ValidationError("herm_expm scale must be finite")
    try:
        lam, vec = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigendecomposition failed: {exc}", matrix=h) from exc
    return (vec * np.exp(1j * scale * lam)) @ vec.conj().T


def permanent(matrix) -> complex:
    """Permanent of a small square matrix, by Ryser's formula.

    Subset row sums are updated incrementally along a Gray-code walk,
    so the cost is O(2^n n) for an n x n matrix.  Dimensions above
    ``PERMANENT_MAX_DIM`` are refused; photon-counting amplitudes in
    this package never need more.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"permanent needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n > PERMANENT_MAX_DIM:
        raise ValidationError(f"permanent supports dimension <= {PERMANENT_MAX_DIM}, got {n}")
    if n == 0:
        return complex(1.0)
    sums = np.zeros(n, dtype=complex)
    total = 0.0 + 0.0j
    prev_gray = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        changed = gray ^ prev_gray
        col = changed.bit_length() - 1
        if gray & changed:
            sums += m[:, col]
        else:
            sums -= m[:, col]
        prev_gray = gray
        term = np.prod(sums)
        if gray.bit_count() % 2:
            total -= term
        else:
            total += term
    if n % 2:
        total = -total
    return complex(total)
