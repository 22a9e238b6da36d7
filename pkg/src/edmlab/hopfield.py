"""Continuous-time Hopfield networks and firing-rate networks.

    tau * dx/dt = -D x + W Phi(x) + B u          (Hopfield)
          dz/dt = -D z + Phi(W z + B u)          (firing rate)
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import flows
from .mathcore import (
    DomainError,
    ShapeError,
    as_mat,
    as_vec,
    is_symmetric,
    lambda_max,
    sign_pm,
)


class EnergyCertificateWarning(UserWarning):
    """Energy evaluated for a network where it is not a Lyapunov function."""


class UnsupportedActivationError(ValueError):
    pass


def _log_cosh(x):
    a = np.abs(x)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


class Activation(enum.Enum):
    """Elementwise activation with value, derivative and integral from 0.

    SIGMOID is the centred logistic 2/(1+e^-x) - 1 = tanh(x/2), so that
    Phi(0) = 0. Derivatives at kinks (ReLU at 0, SAT01 at 0 and 1) are
    right-derivatives.
    """

    TANH = "tanh"
    SIGMOID = "sigmoid"
    RELU = "relu"
    SAT01 = "sat01"
    IDENTITY = "identity"

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self is Activation.TANH:
            return np.tanh(x)
        if self is Activation.SIGMOID:
            return np.tanh(0.5 * x)
        if self is Activation.RELU:
            return np.maximum(x, 0.0)
        if self is Activation.SAT01:
            return np.clip(x, 0.0, 1.0)
        return x.copy()

    def deriv(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self is Activation.TANH:
            return 1.0 - np.tanh(x) ** 2
        if self is Activation.SIGMOID:
            return 0.5 * (1.0 - np.tanh(0.5 * x) ** 2)
        if self is Activation.RELU:
            return (x >= 0.0).astype(np.float64)
        if self is Activation.SAT01:
            return ((x >= 0.0) & (x < 1.0)).astype(np.float64)
        return np.ones_like(x)

    def integral(self, x):
        """int_0^x Phi(s) ds."""
        x = np.asarray(x, dtype=np.float64)
        if self is Activation.TANH:
            return _log_cosh(x)
        if self is Activation.SIGMOID:
            return 2.0 * _log_cosh(0.5 * x)
        if self is Activation.RELU:
            return 0.5 * np.maximum(x, 0.0) ** 2
        if self is Activation.SAT01:
            return np.where(x <= 0.0, 0.0, np.where(x <= 1.0, 0.5 * x * x, x - 0.5))
        if self is Activation.IDENTITY:
            return 0.5 * x * x
        raise UnsupportedActivationError(self.value)  # pragma: no cover


@dataclass(frozen=True, eq=False)
class HopfieldNet:
    tau: float
    D: np.ndarray
    W: np.ndarray
    B: np.ndarray
    activation: Activation = Activation.TANH

    def __post_init__(self):
        W = as_mat(self.W, "W")
        n = W.shape[0]
        if W.shape != (n, n):
            raise ShapeError("W must be square")
        D = as_vec(self.D, "D")
        if D.size != n:
            raise ShapeError("D must have one entry per neuron")
        if not np.all(D > 0):
            raise DomainError("dissipation rates must be positive")
        B = as_mat(np.atleast_2d(self.B) if np.ndim(self.B) else np.zeros((n, 1)), "B")
        if B.shape[0] != n:
            raise ShapeError(f"B must have {n} rows")
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        for name, v in (("W", W), ("D", D), ("B", B)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def N(self) -> int:
        return self.W.shape[0]

    @property
    def M(self) -> int:
        return self.B.shape[1]

    @classmethod
    def simple(cls, W, activation=Activation.TANH, tau=1.0, D=None, B=None):
        W = as_mat(W, "W")
        n = W.shape[0]
        return cls(tau, np.ones(n) if D is None else D, W, np.eye(n) if B is None else B, activation)

    def _u(self, u) -> np.ndarray:
        if u is None:
            return np.zeros(self.M)
        u = as_vec(u, "u")
        if u.size != self.M:
            raise ShapeError(f"u must have {self.M} entries")
        return u

    def _x(self, x) -> np.ndarray:
        x = as_vec(x, "x")
        if x.size != self.N:
            raise ShapeError(f"state must have {self.N} entries")
        return x

    def to_csv(self, path) -> Path:
        path = Path(path)
        lines = [f"activation={self.activation.value},tau={self.tau!r}"]
        for name, mat in (("W", self.W), ("B", self.B), ("D", self.D[None, :])):
            lines.append(f"{name},{mat.shape[0]},{mat.shape[1]}")
            lines.extend(",".join(repr(float(v)) for v in row) for row in mat)
        path.write_text("\n".join(lines) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "HopfieldNet":
        lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
        try:
            head = dict(kv.split("=", 1) for kv in lines[0].split(","))
            blocks, i = {}, 1
            while i < len(lines):
                name, r, c = lines[i].split(",")
                r, c = int(r), int(c)
                rows = [[float(v) for v in lines[i + 1 + k].split(",")] for k in range(r)]
                mat = np.array(rows, dtype=np.float64)
                if mat.shape != (r, c):
                    raise ValueError(f"block {name} has shape {mat.shape}, header says {(r, c)}")
                blocks[name] = mat
                i += 1 + r
            return cls(float(head["tau"]), blocks["D"][0], blocks["W"], blocks["B"], Activation(head["activation"]))
        except (KeyError, ValueError, IndexError) as exc:
            raise ValueError(f"malformed network file {path}: {exc}") from exc


def hopfield_field(net: HopfieldNet, x, u=None) -> np.ndarray:
    x, u = net._x(x), net._u(u)
    return (-net.D * x + net.W @ net.activation(x) + net.B @ u) / net.tau


def _warn_if_asymmetric(W):
    if not is_symmetric(W):
        warnings.warn("W is not symmetric; the energy is not a Lyapunov certificate", EnergyCertificateWarning, stacklevel=3)


def hopfield_energy(net: HopfieldNet, x, u=None) -> float:
    x, u = net._x(x), net._u(u)
    _warn_if_asymmetric(net.W)
    phi = net.activation(x)
    return float(
        -0.5 * phi @ net.W @ phi + (net.D * x - net.B @ u) @ phi - np.sum(net.D * net.activation.integral(x))
    )


def hopfield_energy_grad(net: HopfieldNet, x, u=None) -> np.ndarray:
    """Analytic gradient, valid for symmetric W: -tau * Phi'(x) * dx/dt."""
    x = net._x(x)
    return -net.tau * net.activation.deriv(x) * hopfield_field(net, x, u)


def preconditioner(net: HopfieldNet, x) -> np.ndarray:
    """Diagonal of M(x) = diag(1/Phi'(x)) / tau, so that dx/dt = -M(x) grad E(x)."""
    d = net.activation.deriv(net._x(x))
    if np.any(d <= 0):
        raise DomainError("preconditioner needs Phi'(x) > 0")
    return 1.0 / (net.tau * d)


def energy_rate(net: HopfieldNet, x, u=None) -> float:
    """dE/dt along the flow: -tau * sum_i Phi'(x_i) xdot_i^2."""
    x = net._x(x)
    xd = hopfield_field(net, x, u)
    return float(-net.tau * np.sum(net.activation.deriv(x) * xd * xd))


def energy_rate_weighted(net: HopfieldNet, x, u=None) -> float:
    """-(1/tau) * sum_i d_i Phi'(x_i) xdot_i^2; equals ``energy_rate`` when tau=1 and D=I."""
    x = net._x(x)
    xd = hopfield_field(net, x, u)
    return float(-np.sum(net.D * net.activation.deriv(x) * xd * xd) / net.tau)


def integrate(net: HopfieldNet, x0, u=None, cfg: Optional[flows.IntegratorConfig] = None, with_energy=True):
    u = net._u(u)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EnergyCertificateWarning)
        energy = (lambda x: hopfield_energy(net, x, u)) if with_energy else None
        return flows.integrate_ode(lambda x, t: hopfield_field(net, x, u), x0, cfg, energy)


def check_lyapunov_decrease(net: HopfieldNet, trajectory: flows.TrajectoryRecord) -> float:
    """Largest positive energy jump between consecutive stored states (0 if none)."""
    if trajectory.energies is None:
        raise ValueError("trajectory has no recorded energies")
    return max(0.0, flows.max_energy_increase(trajectory.energies))


def check_global_stability(W, D) -> bool:
    """Identity-certificate test: lambda_max of sym(W - diag(D)) < 0.

    Sufficient for diagonal stability of W - D (certificate P = I); the
    general condition asks for some positive diagonal P and is an LMI.
    """
    W = as_mat(W, "W")
    if W.shape[0] != W.shape[1]:
        raise ShapeError("W must be square")
    A = W - np.diag(as_vec(D, "D"))
    return lambda_max(0.5 * (A + A.T)) < 0.0


def frn_field(net: HopfieldNet, z, u=None) -> np.ndarray:
    z, u = net._x(z), net._u(u)
    return -net.D * z + net.activation(net.W @ z + net.B @ u)


def retrieve_sign(net: HopfieldNet, x0, u=None, cfg: Optional[flows.IntegratorConfig] = None) -> np.ndarray:
    u = net._u(u)
    x = flows.find_equilibrium(lambda x, t: hopfield_field(net, x, u), x0, cfg)
    return sign_pm(x)
