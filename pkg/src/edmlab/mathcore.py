"""Shared numerical primitives: array validation, a symmetric eigensolver,
finite differences, random number generation and tolerances.

Vectors and matrices are plain ``float64`` numpy arrays; ``as_vec`` and
``as_mat`` validate them at module boundaries.
"""

from __future__ import annotations

import numpy as np

from . import kernels

# ---------------------------------------------------------------------------
# tolerances (single source of truth for library defaults)
# ---------------------------------------------------------------------------

SYMMETRY_TOL = 1e-10
"""Max |M - M^T| entry for a matrix to count as symmetric."""

EIG_REL_TOL = 1e-14
"""Jacobi stops once the off-diagonal Frobenius norm is this fraction of ||M||_F."""

EIG_MAX_SWEEPS = 100

FD_STEP = 1e-5
"""Default central-difference step."""

ENERGY_STEP_TOL = 1e-9
"""Largest per-step energy increase still counted as monotone."""

DIVERGENCE_LIMIT = kernels.DIVERGENCE_LIMIT
"""Integrators abort once ||x||_inf exceeds this."""

RNG_ALGORITHM = "numpy.random.Philox (Philox4x64-10, counter-based)"
"""Bit generator behind ``make_rng``; changing it changes every frozen number."""


class ShapeError(ValueError):
    """Array has the wrong shape or structure (e.g. a non-symmetric matrix)."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of the operation."""


class EvaluationError(ArithmeticError):
    """A user-supplied function returned a non-finite value."""


def as_vec(x, name: str = "x") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite entries")
    return v


def as_mat(M, name: str = "M") -> np.ndarray:
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.size == 0:
        raise ShapeError(f"{name} must be a non-empty matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries")
    return A


def is_symmetric(M, tol: float = SYMMETRY_TOL) -> bool:
    A = np.asarray(M)
    return A.ndim == 2 and A.shape[0] == A.shape[1] and bool(np.all(np.abs(A - A.T) <= tol))


def sign_pm(x) -> np.ndarray:
    """Elementwise sign into {-1, +1}; zero maps to +1."""
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)


def sym_eig(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors stored as orthonormal columns.
    """
    A = as_mat(M)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"sym_eig needs a square matrix, got {A.shape}")
    if not is_symmetric(A):
        raise ShapeError("sym_eig needs a symmetric matrix")
    A = 0.5 * (A + A.T)
    vals, vecs, _ = kernels.jacobi_eigh(np.ascontiguousarray(A), EIG_REL_TOL, EIG_MAX_SWEEPS)
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]


def lambda_max(M) -> float:
    return float(sym_eig(M)[0][0])


def fd_gradient(f, x, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    if not h > 0:
        raise DomainError("step size h must be positive")
    x = as_vec(x)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp, fm = f(x + e), f(x - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise EvaluationError(f"f is not finite near x along coordinate {i}")
        g[i] = (fp - fm) / (2.0 * h)
    return g


def fd_hessian(f, x, h: float = 1e-4) -> np.ndarray:
    """Second-order central-difference Hessian of a scalar function."""
    x = as_vec(x)
    n = x.size
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        H[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / (h * h)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h * h)
            H[i, j] = H[j, i] = v
    if not np.all(np.isfinite(H)):
        raise EvaluationError("f is not finite near x")
    return H


def fd_jacobian(field, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of a vector field ``field(x)``."""
    x = as_vec(x)
    n = x.size
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        cols.append((np.asarray(field(x + e)) - np.asarray(field(x - e))) / (2.0 * h))
    J = np.column_stack(cols)
    if not np.all(np.isfinite(J)):
        raise EvaluationError("field is not finite near x")
    return J


def double_factorial(m: int) -> int:
    """m!! for odd m >= -1, with (-1)!! = 1."""
    m = int(m)
    if m % 2 == 0 or m < -1:
        raise DomainError(f"double_factorial is defined here for odd m >= -1, got {m}")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator; identical seeds give identical streams on every platform."""
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(seed: int, index: int) -> int:
    """Per-trial seed ``seed XOR index``."""
    return (int(seed) ^ int(index)) & (2**64 - 1)


def orthonormal_complement(v) -> np.ndarray:
    """Columns spanning the orthogonal complement of ``v`` (via Householder QR)."""
    v = as_vec(v)
    n = v.size
    M = np.eye(n)
    M[:, 0] = v / np.linalg.norm(v)
    Q, _ = np.linalg.qr(M)
    return Q[:, 1:]
