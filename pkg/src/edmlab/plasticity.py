"""Learning rules: Hebbian storage, Oja's rule, contrastive Hebbian learning
and equilibrium propagation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import flows, kernels
from .mathcore import DomainError, ShapeError, as_mat, as_vec, fd_hessian, sym_eig

OJA_DIVERGENCE = 1e6


class LearningRateError(ArithmeticError):
    pass


class PhaseNonConvergenceError(RuntimeError):
    def __init__(self, phase: str, residual: float):
        self.phase = phase
        self.residual = residual
        super().__init__(f"{phase} phase did not converge (residual {residual:.3e})")


# ---------------------------------------------------------------------------
# patterns
# ---------------------------------------------------------------------------


class PatternSet:
    """K binary patterns of length N stored as the rows of a (K, N) array of +-1."""

    def __init__(self, patterns):
        P = np.array(patterns, dtype=np.float64, ndmin=2)
        if P.ndim != 2 or P.shape[0] < 1 or P.shape[1] < 1:
            raise ShapeError("need at least one pattern of positive length")
        if not np.all(np.abs(P) == 1.0):
            raise DomainError("pattern entries must be exactly +1 or -1")
        P.setflags(write=False)
        self.patterns = P

    @property
    def K(self) -> int:
        return self.patterns.shape[0]

    @property
    def N(self) -> int:
        return self.patterns.shape[1]

    def __getitem__(self, mu) -> np.ndarray:
        return self.patterns[mu]

    @classmethod
    def random(cls, N: int, K: int, rng: np.random.Generator) -> "PatternSet":
        """Entries i.i.d. +-1 with probability 1/2."""
        return cls(np.where(rng.random((K, N)) < 0.5, -1.0, 1.0))

    def to_file(self, path) -> Path:
        path = Path(path)
        path.write_text("".join("".join("+" if v > 0 else "-" for v in row) + "\n" for row in self.patterns))
        return path

    @classmethod
    def from_file(cls, path) -> "PatternSet":
        rows = []
        for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if set(line) - {"+", "-"}:
                raise ValueError(f"{path}:{ln}: patterns use only '+' and '-'")
            rows.append([1.0 if c == "+" else -1.0 for c in line])
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError(f"{path}: need one or more patterns of equal length")
        return cls(rows)


def hebbian_weights(patterns: PatternSet) -> np.ndarray:
    """(1/N) sum_mu xi xi^T (diagonal K/N, kept)."""
    if not isinstance(patterns, PatternSet):
        patterns = PatternSet(patterns)
    X = patterns.patterns
    return X.T @ X / patterns.N


def hebbian_online_mean(patterns: PatternSet, eta: float, draws: int, rng: np.random.Generator) -> np.ndarray:
    """Average of eta * x x^T over patterns drawn uniformly at random."""
    idx = rng.integers(0, patterns.K, size=draws)
    X = patterns.patterns[idx]
    return eta * (X.T @ X) / draws


# ---------------------------------------------------------------------------
# Oja
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LearnConfig:
    eta: float = 0.01
    steps: int = 100_000
    beta: float = 1e-3

    def __post_init__(self):
        if not (self.eta > 0 and self.beta > 0):
            raise DomainError("eta and beta must be positive")
        if int(self.steps) < 1:
            raise DomainError("steps must be >= 1")


def gaussian_stream(C, steps: int, rng: np.random.Generator) -> np.ndarray:
    """``steps`` zero-mean samples with covariance C, as rows."""
    C = as_mat(C, "C")
    vals, vecs = sym_eig(C)
    L = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return rng.standard_normal((int(steps), C.shape[0])) @ L.T


def oja_train(data, w0, cfg: Optional[LearnConfig] = None) -> np.ndarray:
    """w <- w + eta (y x - y^2 w), y = w.x, over the rows of ``data``.

    ``data`` is an array of samples (one per row) or any iterable of vectors;
    at most ``cfg.steps`` samples are used.
    """
    cfg = cfg or LearnConfig()
    w0 = as_vec(w0, "w0")
    if not np.any(w0):
        raise DomainError("w0 must be nonzero")
    X = np.asarray(data if isinstance(data, np.ndarray) else list(data), dtype=np.float64)
    X = X.reshape(-1, w0.size)[: int(cfg.steps)]
    w, bad = kernels.oja_loop(np.ascontiguousarray(X), w0.copy(), float(cfg.eta), OJA_DIVERGENCE)
    if bad >= 0:
        raise LearningRateError(f"Oja weights diverged at step {bad}; reduce eta (currently {cfg.eta:g})")
    return w


def oja_mean_drift_sq_norm(w, C) -> float:
    """E[d|w|^2/dt] under the averaged rule: 2 (w^T C w)(1 - |w|^2)."""
    w = as_vec(w)
    return float(2.0 * (w @ C @ w) * (1.0 - w @ w))


# ---------------------------------------------------------------------------
# contrastive Hebbian learning
# ---------------------------------------------------------------------------


def chl_update(W, data_states: Sequence, model_states: Sequence, eta: float) -> np.ndarray:
    """W + eta (<x x^T>_data - <x x^T>_model)."""
    W = as_mat(W, "W")
    if len(data_states) == 0 or len(model_states) == 0:
        raise DomainError("data and model sample lists must be nonempty")
    Xd = np.asarray(data_states, dtype=np.float64).reshape(len(data_states), -1)
    Xm = np.asarray(model_states, dtype=np.float64).reshape(len(model_states), -1)
    if Xd.shape[1] != W.shape[0] or Xm.shape[1] != W.shape[0]:
        raise ShapeError("state dimension does not match W")
    return W + eta * (Xd.T @ Xd / Xd.shape[0] - Xm.T @ Xm / Xm.shape[0])


# ---------------------------------------------------------------------------
# equilibrium propagation
# ---------------------------------------------------------------------------

RELAX = flows.IntegratorConfig(flows.Method.RK4, dt=0.05, t_max=2000.0, equilibrium_tol=1e-12)


@dataclass(frozen=True)
class EqPropProblem:
    """Parameterized energy E(x; theta, u) with a loss on the state.

    ``loss(x, y_t)`` already composes the output map H, and ``loss_grad``
    is its gradient with respect to x.
    """

    n_state: int
    grad_x: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    grad_theta: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    loss: Callable[[np.ndarray, np.ndarray], float]
    loss_grad: Callable[[np.ndarray, np.ndarray], np.ndarray]
    energy: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], float]] = None


@dataclass
class EqPropResult:
    gradient: np.ndarray
    free_state: np.ndarray
    nudged_state: np.ndarray
    hessian_min_eig: Optional[float] = None


def relax(problem: EqPropProblem, theta, u, y_t=None, beta: float = 0.0, x0=None, cfg=None) -> np.ndarray:
    cfg = cfg or RELAX
    x0 = np.zeros(problem.n_state) if x0 is None else x0
    if beta == 0.0:
        field = lambda x, t: -problem.grad_x(x, theta, u)
    else:
        field = lambda x, t: -problem.grad_x(x, theta, u) - beta * problem.loss_grad(x, y_t)
    try:
        return flows.find_equilibrium(field, x0, cfg)
    except flows.NonConvergenceError as exc:
        raise PhaseNonConvergenceError("free" if beta == 0.0 else "nudged", exc.residual) from exc


def objective(problem: EqPropProblem, theta, u, y_t, cfg=None) -> float:
    """J(theta) = L(H(x*(theta))) with x* the free equilibrium."""
    return float(problem.loss(relax(problem, theta, u, cfg=cfg), y_t))


def eqprop_gradient(
    problem: EqPropProblem,
    theta,
    u,
    y_t,
    beta: float,
    cfg=None,
    symmetric: bool = False,
    check_hessian: bool = False,
) -> EqPropResult:
    """(1/beta) (dE/dtheta at the nudged equilibrium - dE/dtheta at the free one).

    With ``symmetric=True`` the +beta and -beta nudged states are used
    instead, which cancels the O(beta) bias.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    theta = as_vec(theta, "theta")
    x0 = relax(problem, theta, u, cfg=cfg)
    xb = relax(problem, theta, u, y_t, beta, x0=x0, cfg=cfg)
    if symmetric:
        xm = relax(problem, theta, u, y_t, -beta, x0=x0, cfg=cfg)
        g = (problem.grad_theta(xb, theta, u) - problem.grad_theta(xm, theta, u)) / (2.0 * beta)
    else:
        g = (problem.grad_theta(xb, theta, u) - problem.grad_theta(x0, theta, u)) / beta
    hmin = None
    if check_hessian and problem.energy is not None:
        hmin = float(sym_eig(fd_hessian(lambda x: problem.energy(x, theta, u), x0))[0][-1])
    return EqPropResult(np.asarray(g, dtype=np.float64), x0, xb, hmin)


class QuadraticEnergy:
    """E(x) = |x|^2/2 - x^T W x / 2 - x^T B u with W symmetric, zero diagonal.

    theta holds the strictly upper-triangular entries of W, so
    dE/dtheta_ij = -x_i x_j. The first ``n_out`` units are the output and the
    loss is |x[:n_out] - y_t|^2 / 2.
    """

    def __init__(self, N: int, n_out: int, B):
        self.N = int(N)
        self.n_out = int(n_out)
        self.B = as_mat(B, "B")
        if self.B.shape[0] != self.N or not 1 <= self.n_out <= self.N:
            raise ShapeError("inconsistent sizes")
        self.iu = np.triu_indices(self.N, 1)

    @property
    def n_params(self) -> int:
        return self.iu[0].size

    def W(self, theta) -> np.ndarray:
        W = np.zeros((self.N, self.N))
        W[self.iu] = theta
        return W + W.T

    def theta(self, W) -> np.ndarray:
        return np.asarray(W)[self.iu].copy()

    def energy(self, x, theta, u) -> float:
        return float(0.5 * x @ x - 0.5 * x @ self.W(theta) @ x - x @ self.B @ u)

    def problem(self) -> EqPropProblem:
        q = self.n_out

        def loss_grad(x, y_t):
            g = np.zeros_like(x)
            g[:q] = x[:q] - y_t
            return g

        return EqPropProblem(
            n_state=self.N,
            grad_x=lambda x, th, u: x - self.W(th) @ x - self.B @ u,
            grad_theta=lambda x, th, u: -np.outer(x, x)[self.iu],
            loss=lambda x, y_t: float(0.5 * np.sum((x[:q] - y_t) ** 2)),
            loss_grad=loss_grad,
            energy=self.energy,
        )

    def equilibrium(self, theta, u) -> np.ndarray:
        """Free equilibrium by a direct linear solve (independent of the flow)."""
        return np.linalg.solve(np.eye(self.N) - self.W(theta), self.B @ as_vec(u))

    def objective_direct(self, theta, u, y_t) -> float:
        x = self.equilibrium(theta, u)
        return float(0.5 * np.sum((x[: self.n_out] - y_t) ** 2))

    @classmethod
    def random(cls, N: int, n_out: int, M: int, rng: np.random.Generator, spectral_bound: float = 0.5):
        """Instance with |W|_2 <= spectral_bound (so I - W is positive definite)."""
        A = rng.standard_normal((N, N))
        W = np.triu(A, 1)
        W = W + W.T
        nrm = np.max(np.abs(sym_eig(W)[0])) if N > 1 else 0.0
        if nrm > 0:
            W *= spectral_bound / nrm
        inst = cls(N, n_out, rng.standard_normal((N, M)))
        return inst, inst.theta(W)


def eqprop_chl_equivalence(inst: QuadraticEnergy, theta, u, y_t, beta: float, eta: float, cfg=None):
    """Weight updates from one free/nudged pair, computed two ways.

    Returns ``(dW_eqprop, dW_chl)``: the first is -eta times the EqProp
    gradient estimate, the second (eta/beta)(x_b x_b^T - x_0 x_0^T) with the
    diagonal dropped. Both are symmetric N x N matrices.
    """
    res = eqprop_gradient(inst.problem(), theta, u, y_t, beta, cfg=cfg)
    d = np.zeros((inst.N, inst.N))
    d[inst.iu] = -eta * res.gradient
    dW_eqprop = d + d.T
    x0, xb = res.free_state, res.nudged_state
    dW_chl = (eta / beta) * (np.outer(xb, xb) - np.outer(x0, x0))
    np.fill_diagonal(dW_chl, 0.0)
    return dW_eqprop, dW_chl
