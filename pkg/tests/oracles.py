"""Independent reference implementations used only by the tests.

Everything here is deliberately written the slow, obvious way so it
shares no code path with the package: permanents by permutation sum,
matrix exponentials by scaled Taylor series, matrix products by
explicit index loops.
"""

import itertools
import math

import numpy as np


def permanent_by_enumeration(matrix):
    """Permanent as the literal sum over permutations."""
    a = np.asarray(matrix)
    n = a.shape[0]
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(n)):
        term = 1.0 + 0.0j
        for row, col in enumerate(perm):
            term *= a[row, col]
        total += term
    return total


def expm_taylor(matrix, terms=30, squarings=8):
    """exp(M) by scaling and squaring with a truncated Taylor series."""
    a = np.asarray(matrix, dtype=complex) / (2.0 ** squarings)
    n = a.shape[0]
    result = np.eye(n, dtype=complex)
    power = np.eye(n, dtype=complex)
    for k in range(1, terms + 1):
        power = power @ a / k
        result = result + power
    for _ in range(squarings):
        result = result @ result
    return result


def product_by_loops(a, b):
    """3x3 complex matrix product written as explicit scalar loops."""
    out = np.zeros((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            acc = 0.0 + 0.0j
            for k in range(3):
                acc += complex(a[i, k]) * complex(b[k, j])
            out[i, j] = acc
    return out


def dft3_by_formula():
    """Balanced three-port transfer matrix straight from its definition."""
    omega = complex(math.cos(2.0 * math.pi / 3.0), math.sin(2.0 * math.pi / 3.0))
    t = np.zeros((3, 3), dtype=complex)
    for j in range(3):
        for k in range(3):
            t[j, k] = omega ** (j * k) / math.sqrt(3.0)
    return t


def phase_device_by_loops(theta):
    """Tritter - middle-arm phase - tritter, using only loop products."""
    t = dft3_by_formula()
    phase = np.diag([1.0, complex(math.cos(theta), math.sin(theta)), 1.0])
    return product_by_loops(product_by_loops(t, phase), t)


def random_unitary(rng, dim=3):
    """Haar-ish random unitary from the QR of a complex Gaussian matrix."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng, dim=3, real=False):
    z = rng.normal(size=(dim, dim))
    if not real:
        z = z + 1j * rng.normal(size=(dim, dim))
    return (z + z.conj().T) / 2.0


def fisher_by_stencil(prob_fn, outcomes, theta, step=1e-5):
    """Fisher information at one theta from five-point derivatives.

    ``prob_fn(outcome, theta)`` must be evaluable anywhere, so the
    derivative stencil is independent of any fixed grid.
    """
    total = 0.0
    for outcome in outcomes:
        p = prob_fn(outcome, theta)
        d = (-prob_fn(outcome, theta + 2 * step)
             + 8 * prob_fn(outcome, theta + step)
             - 8 * prob_fn(outcome, theta - step)
             + prob_fn(outcome, theta - 2 * step)) / (12 * step)
        if p > 1e-12:
            total += d * d / p
    return total
