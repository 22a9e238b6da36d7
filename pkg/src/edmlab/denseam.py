"""Dense associative memories over +-1 spins.

General energy  E(sigma) = -Q( sum_mu F(S(xi_mu, sigma)) ); the basic form
uses S = dot product and Q = identity. Separation functions are
F(m) = m^n / n (power) and F(m) = exp(m).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .mathcore import DomainError, ShapeError, derive_seed, double_factorial, make_rng
from .plasticity import PatternSet

DEFAULT_ALPHA = 2.576  # two-sided 1% normal quantile


def _logsumexp(a: np.ndarray) -> float:
    m = float(np.max(a))
    return m + math.log(float(np.sum(np.exp(a - m))))


@dataclass(frozen=True)
class Separation:
    """``Separation.power(n)`` or ``Separation.exp()``."""

    kind: str
    n: int = 2

    def __post_init__(self):
        if self.kind not in ("power", "exp"):
            raise DomainError(f"unknown separation kind {self.kind!r}")
        if self.kind == "power" and int(self.n) < 2:
            raise DomainError("power separation needs n >= 2")

    @classmethod
    def power(cls, n: int) -> "Separation":
        return cls("power", int(n))

    @classmethod
    def exp(cls) -> "Separation":
        return cls("exp", 0)

    def F(self, m):
        m = np.asarray(m, dtype=np.float64)
        return m**self.n / self.n if self.kind == "power" else np.exp(m)

    def Phi(self, m):
        m = np.asarray(m, dtype=np.float64)
        return m ** (self.n - 1) if self.kind == "power" else np.exp(m)

    def label(self) -> str:
        return f"power{self.n}" if self.kind == "power" else "exp"


class Similarity(enum.Enum):
    DOT = "dot"
    NEG_SQ_EUCLIDEAN = "neg_sq_euclidean"


class Outer(enum.Enum):
    IDENTITY = "identity"
    LOG = "log"


@dataclass(frozen=True, eq=False)
class DenseAMModel:
    patterns: PatternSet
    separation: Separation
    similarity: Similarity = Similarity.DOT
    outer: Outer = Outer.IDENTITY

    @property
    def basic(self) -> bool:
        return self.similarity is Similarity.DOT and self.outer is Outer.IDENTITY

    def scores(self, sigma) -> np.ndarray:
        X = self.patterns.patterns
        s = np.asarray(sigma, dtype=np.float64)
        if s.shape != (self.patterns.N,):
            raise ShapeError(f"state must have {self.patterns.N} entries")
        if self.similarity is Similarity.DOT:
            return X @ s
        return -np.sum((X - s) ** 2, axis=1)


def as_spins(sigma) -> np.ndarray:
    s = np.array(sigma, dtype=np.float64)
    if s.ndim != 1 or not np.all(np.abs(s) == 1.0):
        raise DomainError("spin state entries must be exactly +1 or -1")
    return s


def denseam_energy(model: DenseAMModel, sigma) -> float:
    """-Q(sum_mu F(S(xi_mu, sigma))).

    For the exponential separation the sum is formed in the log domain;
    with Q = identity the result may overflow to -inf for very large
    overlaps (use :func:`log_neg_energy` to compare such energies).
    """
    m = model.scores(as_spins(sigma))
    if model.separation.kind == "exp":
        lse = _logsumexp(m)
        return -lse if model.outer is Outer.LOG else -math.exp(lse) if lse < 709.0 else -math.inf
    total = float(np.sum(model.separation.F(m)))
    if model.outer is Outer.LOG:
        if not total > 0:
            raise DomainError("log outer function needs a positive inner sum")
        return -math.log(total)
    return -total


def log_neg_energy(model: DenseAMModel, sigma) -> float:
    """log(-E) for the exponential separation with identity outer function."""
    if model.separation.kind != "exp" or model.outer is not Outer.IDENTITY:
        raise DomainError("log_neg_energy is for exp separation with identity outer")
    return _logsumexp(model.scores(as_spins(sigma)))


def _order(N: int, order: str, rng: Optional[np.random.Generator]) -> np.ndarray:
    if order == "cyclic":
        return np.arange(N, dtype=np.int64)
    if order == "random":
        if rng is None:
            raise DomainError("random order needs an rng")
        return rng.permutation(N).astype(np.int64)
    raise DomainError(f"unknown sweep order {order!r}")


def _mode(sep: Separation, rule: str) -> int:
    if rule not in ("derivative", "exact"):
        raise DomainError(f"unknown update rule {rule!r}")
    if sep.kind == "exp":
        return kernels.SWEEP_EXP
    return kernels.SWEEP_POWER if rule == "derivative" else kernels.SWEEP_POWER_EXACT


def _greedy_sweep(model: DenseAMModel, sigma: np.ndarray, order: np.ndarray) -> int:
    flips = 0
    e = denseam_energy(model, sigma)
    for i in order:
        sigma[i] = -sigma[i]
        try:
            e_new = denseam_energy(model, sigma)
        except DomainError:
            e_new = math.inf
        if e_new < e:
            e = e_new
            flips += 1
        else:
            sigma[i] = -sigma[i]
    return flips


def denseam_update_sweep(
    model: DenseAMModel,
    sigma,
    order: str = "random",
    rng: Optional[np.random.Generator] = None,
    rule: str = "derivative",
) -> tuple[np.ndarray, int]:
    """One asynchronous pass, each spin updated once.

    Basic form, ``rule="derivative"``:
        sigma_i <- sign( sum_mu xi_mu,i Phi(sum_{j != i} xi_mu,j sigma_j) )
    ``rule="exact"`` compares the two energies sum_mu F(r_mu +- xi_mu,i)
    directly, which never raises the energy; for n = 2 and exp the two rules
    coincide. Non-basic models (other similarity or outer function) flip a
    spin iff that strictly lowers the energy. Ties go to +1.
    """
    s = as_spins(sigma)
    N = model.patterns.N
    if s.size != N:
        raise ShapeError(f"state must have {N} entries")
    idx = _order(N, order, rng)
    if model.basic:
        flips = kernels.async_sweep(model.patterns.patterns, s, idx, _mode(model.separation, rule), model.separation.n)
    else:
        flips = _greedy_sweep(model, s, idx)
    return s, int(flips)


@dataclass
class RetrievalResult:
    state: np.ndarray
    converged: bool
    sweeps: int

    def matches(self, patterns: PatternSet) -> int:
        """Index of the stored pattern equal to the state, or -1."""
        hit = np.flatnonzero(np.all(patterns.patterns == self.state, axis=1))
        return int(hit[0]) if hit.size else -1


def denseam_retrieve(
    model: DenseAMModel,
    sigma0,
    max_sweeps: int = 50,
    order: str = "random",
    rng: Optional[np.random.Generator] = None,
    rule: str = "derivative",
) -> RetrievalResult:
    if int(max_sweeps) < 1:
        raise DomainError("max_sweeps must be >= 1")
    s = as_spins(sigma0)
    for k in range(1, int(max_sweeps) + 1):
        s, flips = denseam_update_sweep(model, s, order, rng, rule)
        if flips == 0:
            return RetrievalResult(s, True, k)
    return RetrievalResult(s, False, int(max_sweeps))


def capacity_bound(N: float, n: int, alpha: float = DEFAULT_ALPHA) -> float:
    """N^(n-1) / (alpha^2 (2n-3)!!), unfloored."""
    if int(n) < 2 or not alpha > 0:
        raise DomainError("need n >= 2 and alpha > 0")
    return float(N) ** (n - 1) / (alpha**2 * double_factorial(2 * int(n) - 3))


def _bit_error_trial(N: int, K: int, sep: Separation, rng: np.random.Generator, rule: str) -> int:
    xi = np.where(rng.random((K, N)) < 0.5, -1.0, 1.0)
    s = xi[0].copy()
    order = rng.permutation(N).astype(np.int64)
    return int(kernels.async_sweep(xi, s, order, _mode(sep, rule), sep.n))


def estimate_bit_error(
    N: int,
    K: int,
    separation: Separation,
    trials: int,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    rule: str = "derivative",
    threads: int = 1,
) -> float:
    """Monte Carlo probability that a spin flips when sweeping from a stored pattern.

    Each trial draws K random patterns, starts at the first one and runs one
    random-order asynchronous sweep; the estimate is total flips / (N trials).
    Pass ``rng`` for a single sequential stream, or ``seed`` for per-trial
    streams ``seed XOR trial`` (which allows ``threads > 1`` with identical
    results).
    """
    if int(trials) < 100:
        raise DomainError("estimate_bit_error needs at least 100 trials")
    if (rng is None) == (seed is None):
        raise DomainError("pass exactly one of rng or seed")
    if rng is not None:
        flips = sum(_bit_error_trial(N, K, separation, rng, rule) for _ in range(trials))
    else:
        job = lambda t: _bit_error_trial(N, K, separation, make_rng(derive_seed(seed, t)), rule)
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                flips = sum(ex.map(job, range(trials)))
        else:
            flips = sum(map(job, range(trials)))
    return flips / (N * trials)


def crossing_K(Ks, rates, eps: float) -> float:
    """K where the error curve first rises through ``eps`` (linear interpolation).

    Returns inf if the curve never exceeds eps, and Ks[0] if it starts above.
    """
    Ks = np.asarray(Ks, dtype=np.float64)
    r = np.asarray(rates, dtype=np.float64)
    above = np.flatnonzero(r > eps)
    if above.size == 0:
        return math.inf
    j = int(above[0])
    if j == 0:
        return float(Ks[0])
    k0, k1, r0, r1 = Ks[j - 1], Ks[j], r[j - 1], r[j]
    return float(k0 + (eps - r0) * (k1 - k0) / (r1 - r0))


def ct_denseam_field(xi, f, g, tau_v: float, tau_h: float, v, h) -> tuple[np.ndarray, np.ndarray]:
    """Two-population dynamics: tau_v dv/dt = xi^T f(h) - v,  tau_h dh/dt = xi g(v) - h.

    ``xi`` is (N_h, N_v); ``f`` acts on hidden units and ``g`` on visible ones.
    """
    xi = np.asarray(xi, dtype=np.float64)
    xi = xi.reshape(1, 1) if xi.ndim == 0 else xi
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    h = np.atleast_1d(np.asarray(h, dtype=np.float64))
    if xi.shape != (h.size, v.size):
        raise ShapeError(f"xi must be ({h.size}, {v.size}), got {xi.shape}")
    if not (tau_v > 0 and tau_h > 0):
        raise DomainError("time constants must be positive")
    return (xi.T @ f(h) - v) / tau_v, (xi @ g(v) - h) / tau_h
