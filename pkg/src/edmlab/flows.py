"""Continuous-time integrators with equilibrium detection and energy logging.

A vector field is any callable ``field(x, t) -> dx/dt``. Autonomous fields can
be wrapped with :func:`autonomous`.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .mathcore import DIVERGENCE_LIMIT, DomainError, ShapeError, as_vec

Field = Callable[[np.ndarray, float], np.ndarray]


class Method(enum.Enum):
    EULER = "euler"
    RK4 = "rk4"


class DivergenceError(ArithmeticError):
    def __init__(self, time: float, message: str = ""):
        self.time = float(time)
        super().__init__(message or f"state diverged at t={self.time:g}")


class NonConvergenceError(RuntimeError):
    def __init__(self, residual: float, message: str = "", state=None):
        self.residual = float(residual)
        self.state = state
        super().__init__(message or f"no equilibrium reached (final residual {self.residual:.3e})")


@dataclass(frozen=True)
class IntegratorConfig:
    method: Method = Method.RK4
    dt: float = 0.01
    t_max: float = 200.0
    equilibrium_tol: float = 1e-8
    record_stride: int = 1

    def __post_init__(self):
        if not isinstance(self.method, Method):
            object.__setattr__(self, "method", Method(self.method))
        if not (self.dt > 0 and self.t_max > 0):
            raise DomainError("dt and t_max must be positive")
        if not self.dt < self.t_max:
            raise DomainError("dt must be smaller than t_max")
        if not self.equilibrium_tol > 0:
            raise DomainError("equilibrium_tol must be positive")
        if int(self.record_stride) < 1:
            raise DomainError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_max / self.dt - 1e-9))


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    states: np.ndarray  # (n_records, N)
    energies: Optional[np.ndarray] = None
    converged: bool = False
    final_residual: float = float("nan")
    meta: dict = dc_field(default_factory=dict)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> Path:
        path = Path(path)
        n = self.states.shape[1]
        header = ["t"] + [f"x{i}" for i in range(n)]
        if self.energies is not None:
            header.append("energy")
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k, t in enumerate(self.times):
                row = [repr(float(t))] + [repr(float(v)) for v in self.states[k]]
                if self.energies is not None:
                    row.append(repr(float(self.energies[k])))
                w.writerow(row)
        return path


def read_trajectory_csv(path) -> TrajectoryRecord:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
    has_e = header[-1] == "energy"
    stop = -1 if has_e else None
    return TrajectoryRecord(
        times=body[:, 0],
        states=body[:, 1:stop],
        energies=body[:, -1] if has_e else None,
    )


def autonomous(f: Callable[[np.ndarray], np.ndarray]) -> Field:
    return lambda x, t: f(x)


def _eval(field: Field, x, t, n) -> np.ndarray:
    v = np.asarray(field(x, t), dtype=np.float64)
    if v.shape != (n,):
        raise ShapeError(f"vector field returned shape {v.shape}, expected ({n},)")
    return v


def _check(x, t):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT:
        raise DivergenceError(t)


def integrate_ode(
    field: Field,
    x0,
    cfg: Optional[IntegratorConfig] = None,
    energy: Optional[Callable[[np.ndarray], float]] = None,
) -> TrajectoryRecord:
    """Integrate ``dx/dt = field(x, t)`` from ``x0`` at t=0.

    Stops early, with ``converged=True``, as soon as the derivative norm drops
    below ``cfg.equilibrium_tol``.
    """
    cfg = cfg or IntegratorConfig()
    x = as_vec(x0, "x0").copy()
    n = x.size
    dt = cfg.dt
    stride = int(cfg.record_stride)
    times, states, energies = [], [], []

    def record(t, state):
        times.append(t)
        states.append(state.copy())
        if energy is not None:
            energies.append(float(energy(state)))

    record(0.0, x)
    converged = False
    residual = float("nan")
    k = 0
    t = 0.0
    n_steps = cfg.n_steps
    while True:
        k1 = _eval(field, x, t, n)
        residual = float(np.sqrt(k1 @ k1))
        if residual < cfg.equilibrium_tol:
            converged = True
            break
        if k >= n_steps:
            break
        if cfg.method is Method.EULER:
            x = x + dt * k1
        else:
            k2 = _eval(field, x + 0.5 * dt * k1, t + 0.5 * dt, n)
            k3 = _eval(field, x + 0.5 * dt * k2, t + 0.5 * dt, n)
            k4 = _eval(field, x + dt * k3, t + dt, n)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        k += 1
        t = k * dt
        _check(x, t)
        if k % stride == 0:
            record(t, x)

    if times[-1] != t:
        record(t, x)
    return TrajectoryRecord(
        times=np.array(times),
        states=np.array(states),
        energies=np.array(energies) if energy is not None else None,
        converged=converged,
        final_residual=residual,
    )


def find_equilibrium(field: Field, x0, cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    cfg = cfg or IntegratorConfig()
    rec = integrate_ode(field, x0, IntegratorConfig(cfg.method, cfg.dt, cfg.t_max, cfg.equilibrium_tol, cfg.n_steps + 1))
    if not rec.converged:
        raise NonConvergenceError(rec.final_residual, state=rec.final_state)
    return rec.final_state


def integrate_sde(
    drift: Field,
    temperature: float,
    x0,
    dt: float,
    t_max: float,
    rng: np.random.Generator,
    record_stride: int = 1,
    energy: Optional[Callable[[np.ndarray], float]] = None,
) -> TrajectoryRecord:
    """Euler-Maruyama for ``dx = drift dt + sqrt(2T) dW``.

    With ``temperature == 0`` the states are bit-identical to explicit Euler
    on the same drift (noise is still drawn so the stream position does not
    depend on T).
    """
    if temperature < 0:
        raise DomainError("temperature must be nonnegative")
    if not dt > 0:
        raise DomainError("dt must be positive")
    x = as_vec(x0, "x0").copy()
    n = x.size
    n_steps = int(math.ceil(t_max / dt - 1e-9))
    scale = math.sqrt(2.0 * temperature * dt)
    noise = rng.standard_normal((n_steps, n))
    times, states, energies = [0.0], [x.copy()], []
    if energy is not None:
        energies.append(float(energy(x)))
    for k in range(n_steps):
        f = _eval(drift, x, k * dt, n)
        x = x + dt * f + scale * noise[k]
        t = (k + 1) * dt
        _check(x, t)
        if (k + 1) % record_stride == 0 or k == n_steps - 1:
            times.append(t)
            states.append(x.copy())
            if energy is not None:
                energies.append(float(energy(x)))
    residual = float(np.linalg.norm(_eval(drift, x, n_steps * dt, n)))
    return TrajectoryRecord(
        times=np.array(times),
        states=np.array(states),
        energies=np.array(energies) if energy is not None else None,
        converged=False,
        final_residual=residual,
        meta={"temperature": float(temperature)},
    )


def max_energy_increase(energies) -> float:
    """Largest jump E[k+1] - E[k]; nonpositive for a monotone record."""
    e = np.asarray(energies, dtype=np.float64)
    if e.size < 2:
        return 0.0
    return float(np.max(np.diff(e)))
