"""Continuous-state Boltzmann machine: Langevin sampling against the Gibbs density.

    pi(x) = exp(-E(x)/T) / Z,        dx = -grad E(x) dt + sqrt(2T) dW
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from ._accel import njit
from .flows import DivergenceError
from .mathcore import DomainError, EvaluationError, as_vec, fd_gradient


@dataclass(frozen=True)
class EnergyModel:
    dim: int
    energy: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    temperature: float = 1.0

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DomainError("dim must be >= 1")
        if not self.temperature > 0:
            raise DomainError("temperature must be positive")

    def with_temperature(self, T: float) -> "EnergyModel":
        return EnergyModel(self.dim, self.energy, self.gradient, T)

    def gradient_error(self, rng: np.random.Generator, probes: int = 20, scale: float = 2.0) -> float:
        """Worst relative mismatch between ``gradient`` and a finite-difference gradient."""
        worst = 0.0
        for _ in range(probes):
            x = scale * rng.standard_normal(self.dim)
            g = np.asarray(self.gradient(x), dtype=np.float64)
            ref = fd_gradient(lambda y: float(self.energy(y)), x)
            worst = max(worst, float(np.linalg.norm(g - ref) / max(1.0, np.linalg.norm(ref))))
        return worst


@njit(cache=True, nogil=True)
def _quadratic_grad(x):
    return 1.0 * x


@njit(cache=True, nogil=True)
def _double_well_grad(x):
    return x * x * x - x


def quadratic_model(dim: int = 1, temperature: float = 1.0) -> EnergyModel:
    """E = |x|^2 / 2; the Langevin chain is an Ornstein-Uhlenbeck process."""
    return EnergyModel(dim, lambda x: 0.5 * float(np.dot(x, x)), _quadratic_grad, temperature)


def double_well_model(dim: int = 1, temperature: float = 0.5) -> EnergyModel:
    """E = sum x^4/4 - x^2/2."""
    return EnergyModel(
        dim, lambda x: float(np.sum(0.25 * x**4 - 0.5 * x**2)), _double_well_grad, temperature
    )


# ---------------------------------------------------------------------------
# grids and densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid; one (lower, upper, points) triple per dimension."""

    lower: tuple
    upper: tuple
    points: tuple

    def __post_init__(self):
        lo, hi, pts = (tuple(np.atleast_1d(v).tolist()) for v in (self.lower, self.upper, self.points))
        if not (len(lo) == len(hi) == len(pts)):
            raise DomainError("grid bounds and point counts must have equal length")
        for a, b, p in zip(lo, hi, pts):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise DomainError("grid bounds must be finite with lower < upper")
            if int(p) < 2:
                raise DomainError("grid needs at least 2 points per dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "points", tuple(int(p) for p in pts))

    @classmethod
    def line(cls, lower: float, upper: float, points: int) -> "Grid":
        return cls((lower,), (upper,), (points,))

    @property
    def ndim(self) -> int:
        return len(self.points)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, p) for a, b, p in zip(self.lower, self.upper, self.points)]


def _trapz_all(values: np.ndarray, axes: Sequence[np.ndarray]) -> float:
    out = values
    for ax in reversed(axes):
        out = np.trapezoid(out, ax, axis=-1)
    return float(out)


@dataclass
class DensityTable:
    grid: Grid
    values: np.ndarray  # shape grid.points
    log_Z: float  # log of the partition function

    @property
    def x(self) -> np.ndarray:
        return self.grid.axes()[0]

    def mass(self) -> float:
        return _trapz_all(self.values, self.grid.axes())

    def at(self, x: float) -> float:
        """Linear interpolation (1-D tables)."""
        return float(np.interp(x, self.x, self.values))

    def cdf(self) -> np.ndarray:
        """Cumulative trapezoid mass at each node (1-D tables)."""
        self._require_1d()
        x, p = self.x, self.values
        return np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(x))])

    def bin_masses(self, edges) -> np.ndarray:
        """Quadrature mass in each bin; the piecewise-linear density is integrated exactly."""
        self._require_1d()
        edges = np.asarray(edges, dtype=np.float64)
        x, p, c = self.x, self.values, self.cdf()

        def F(e):
            e = np.clip(e, x[0], x[-1])
            k = np.clip(np.searchsorted(x, e, side="right") - 1, 0, x.size - 2)
            h = e - x[k]
            slope = (p[k + 1] - p[k]) / (x[k + 1] - x[k])
            return c[k] + p[k] * h + 0.5 * slope * h * h

        return np.diff(F(edges))

    def to_csv(self, path) -> Path:
        self._require_1d()
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "density"])
            for a, b in zip(self.x, self.values):
                w.writerow([repr(float(a)), repr(float(b))])
        return path

    def _require_1d(self):
        if self.grid.ndim != 1:
            raise DomainError("operation defined for 1-D density tables only")


def gibbs_density(model: EnergyModel, grid: Grid) -> DensityTable:
    """exp(-E/T)/Z on the grid nodes, Z by the trapezoid rule.

    Energies are shifted by their minimum before exponentiating.
    """
    if grid.ndim != model.dim:
        raise DomainError("grid dimension does not match the model")
    axes = grid.axes()
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    E = np.array([float(model.energy(p)) for p in pts]).reshape(grid.points)
    if not np.all(np.isfinite(E)):
        raise EvaluationError("energy is not finite on the grid")
    e_min = float(E.min())
    w = np.exp(-(E - e_min) / model.temperature)
    z_shift = _trapz_all(w, axes)
    return DensityTable(grid, w / z_shift, math.log(z_shift) - e_min / model.temperature)


def sample_from_table(table: DensityTable, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from a 1-D table (linear interpolation of the CDF)."""
    c = table.cdf()
    return np.interp(rng.random(n) * c[-1], c, table.x)


# ---------------------------------------------------------------------------
# Langevin sampling
# ---------------------------------------------------------------------------


def langevin_sample(
    model: EnergyModel,
    x0,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
    burn_in: Optional[int] = None,
    thin: int = 10,
) -> np.ndarray:
    """Euler-Maruyama chain on drift -grad E; returns thinned post-burn-in states.

    ``burn_in`` defaults to 10% of ``n_steps``. The result has shape
    ``(n_kept, dim)``.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    n_steps = int(n_steps)
    burn_in = n_steps // 10 if burn_in is None else int(burn_in)
    if not 0 <= burn_in < n_steps:
        raise DomainError("need 0 <= burn_in < n_steps")
    if int(thin) < 1:
        raise DomainError("thin must be >= 1")
    x0 = as_vec(x0, "x0")
    if x0.size != model.dim:
        raise DomainError("x0 does not match the model dimension")
    noise = rng.standard_normal((n_steps, model.dim))
    scale = math.sqrt(2.0 * model.temperature * dt)
    out, fail = kernels.em_chain(model.gradient, x0.copy(), noise, float(dt), scale, burn_in, int(thin))
    if fail >= 0:
        raise DivergenceError(fail * dt)
    return out


def tv_distance(samples, table: DensityTable, edges) -> float:
    """Half the L1 distance between empirical bin masses and quadrature bin masses."""
    s = np.asarray(samples, dtype=np.float64).ravel()
    if s.size < 1000:
        raise DomainError("tv_distance needs at least 1000 samples")
    counts, _ = np.histogram(s, bins=np.asarray(edges, dtype=np.float64))
    return float(0.5 * np.sum(np.abs(counts / s.size - table.bin_masses(edges))))


def dissipativity_constant(model: EnergyModel, radius: float, rng: np.random.Generator, probes: int = 200) -> float:
    """min over random points on the sphere |x| = radius of <grad E(x), x> / |x|^2."""
    worst = math.inf
    for _ in range(probes):
        v = rng.standard_normal(model.dim)
        x = radius * v / np.linalg.norm(v)
        worst = min(worst, float(np.dot(model.gradient(x), x)) / radius**2)
    return worst


def samples_to_csv(samples, path, column: str = "x") -> Path:
    path = Path(path)
    s = np.asarray(samples, dtype=np.float64).reshape(len(samples), -1)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([column] if s.shape[1] == 1 else [f"{column}{i}" for i in range(s.shape[1])])
        for row in s:
            w.writerow([repr(float(v)) for v in row])
    return path
