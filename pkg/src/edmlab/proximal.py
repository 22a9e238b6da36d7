"""Proximal operators and the neural circuits built from them.

    proximal gradient flow     dx/dt = -x + prox_g(x - grad f(x, u))
    positive lasso network     dx/dt = -x + relu((I - T^T T) x + T^T u - lam 1)
    softmax gradient play      dw/dt = -w + softmax(-grad s(x, w) / tau)
    E-I linear threshold net   dx/dt = -x + clip01(W x + B u)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import flows
from .mathcore import DomainError, ShapeError, as_mat, as_vec, lambda_max


# ---------------------------------------------------------------------------
# proximal operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProxSpec:
    """Regulariser g with a closed-form proximal map. Build with the classmethods."""

    kind: str
    lam: float = 0.0
    lo: float = 0.0
    hi: float = 1.0
    tau: float = 1.0

    @classmethod
    def l1(cls, lam: float) -> "ProxSpec":
        # lam = 0 is allowed: g = 0 and prox is the identity
        if not lam >= 0:
            raise DomainError("L1 weight must be nonnegative")
        return cls("l1", lam=float(lam))

    @classmethod
    def nonneg_l1(cls, lam: float) -> "ProxSpec":
        if not lam > 0:
            raise DomainError("nonnegative-L1 weight must be positive")
        return cls("nonneg_l1", lam=float(lam))

    @classmethod
    def box(cls, lo: float = 0.0, hi: float = 1.0) -> "ProxSpec":
        if not lo < hi:
            raise DomainError("box needs lo < hi")
        return cls("box", lo=float(lo), hi=float(hi))

    @classmethod
    def nonneg(cls) -> "ProxSpec":
        return cls("nonneg")

    @classmethod
    def neg_entropy_simplex(cls, tau: float = 1.0) -> "ProxSpec":
        if not tau > 0:
            raise DomainError("tau must be positive")
        return cls("neg_entropy_simplex", tau=float(tau))


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def prox(spec: ProxSpec, x) -> np.ndarray:
    """Closed-form proximal maps.

    The simplex/negative-entropy variant returns softmax(x / tau), the map
    that makes the softmax play flow a proximal gradient flow. It is firmly
    nonexpansive for tau >= 1/2.
    """
    x = np.asarray(x, dtype=np.float64)
    k = spec.kind
    if k == "l1":
        return np.sign(x) * np.maximum(np.abs(x) - spec.lam, 0.0)
    if k == "nonneg_l1":
        return np.maximum(x - spec.lam, 0.0)
    if k == "box":
        return np.clip(x, spec.lo, spec.hi)
    if k == "nonneg":
        return np.maximum(x, 0.0)
    if k == "neg_entropy_simplex":
        return softmax(x / spec.tau)
    raise DomainError(f"unknown prox kind {k!r}")


def proxgrad_field(grad_f: Callable, spec: ProxSpec, x, u=None) -> np.ndarray:
    x = as_vec(x, "x")
    g = np.asarray(grad_f(x, u), dtype=np.float64)
    if g.shape != x.shape:
        raise ShapeError("grad_f returned the wrong shape")
    return -x + prox(spec, x - g)


def quadratic_grad(W, B) -> Callable:
    """grad of f(x, u) = |x|^2/2 - x^T W x / 2 - x^T B u (W symmetric)."""
    W, B = as_mat(W, "W"), as_mat(B, "B")
    return lambda x, u: x - W @ x - B @ u


# ---------------------------------------------------------------------------
# positive lasso
# ---------------------------------------------------------------------------


class LassoProblem:
    """min_x>=0  1/2 |u - Theta x|^2 + lam |x|_1, with unit-norm columns."""

    def __init__(self, Theta, u, lam: float):
        T = as_mat(Theta, "Theta")
        norms = np.linalg.norm(T, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-8):
            raise DomainError("Theta must have unit-norm columns")
        u = as_vec(u, "u")
        if u.size != T.shape[0]:
            raise ShapeError("u must have one entry per row of Theta")
        if not lam > 0:
            raise DomainError("lambda must be positive")
        self.Theta, self.u, self.lam = T, u, float(lam)

    @property
    def M(self) -> int:
        return self.Theta.shape[0]

    @property
    def N(self) -> int:
        return self.Theta.shape[1]

    @classmethod
    def random(cls, M: int, N: int, rng: np.random.Generator, lam: float = 0.1) -> "LassoProblem":
        T = rng.standard_normal((M, N))
        return cls(T / np.linalg.norm(T, axis=0), rng.standard_normal(M), lam)

    def objective(self, x) -> float:
        x = as_vec(x, "x")
        r = self.u - self.Theta @ x
        return float(0.5 * r @ r + self.lam * np.sum(np.abs(x)))

    def to_csv(self, path) -> Path:
        path = Path(path)
        lines = [f"{self.M},{self.N},{self.lam!r}"]
        lines += [",".join(repr(float(v)) for v in row) for row in self.Theta]
        lines.append(",".join(repr(float(v)) for v in self.u))
        path.write_text("\n".join(lines) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "LassoProblem":
        rows = [ln.split(",") for ln in Path(path).read_text().splitlines() if ln.strip()]
        try:
            M, N, lam = int(rows[0][0]), int(rows[0][1]), float(rows[0][2])
            if len(rows) != M + 2:
                raise ValueError(f"expected {M + 2} rows, found {len(rows)}")
            T = np.array([[float(v) for v in r] for r in rows[1 : M + 1]])
            u = np.array([float(v) for v in rows[M + 1]])
            if T.shape != (M, N) or u.size != M:
                raise ValueError("block shapes do not match the header")
        except (ValueError, IndexError) as exc:
            raise ValueError(f"malformed lasso file {path}: {exc}") from exc
        return cls(T, u, lam)


def lasso_network_field(prob: LassoProblem, x) -> np.ndarray:
    x = as_vec(x, "x")
    T = prob.Theta
    return -x + np.maximum(x - T.T @ (T @ x) + T.T @ prob.u - prob.lam, 0.0)


def lasso_network_solve(prob: LassoProblem, cfg: Optional[flows.IntegratorConfig] = None, x0=None) -> np.ndarray:
    cfg = cfg or flows.IntegratorConfig(flows.Method.RK4, dt=0.2, t_max=20000.0, equilibrium_tol=1e-11)
    x0 = np.zeros(prob.N) if x0 is None else x0
    return flows.find_equilibrium(lambda x, t: lasso_network_field(prob, x), x0, cfg)


def lasso_oracle(prob: LassoProblem, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    """Cyclic coordinate descent on the nonnegative lasso (independent of the network)."""
    T, lam = prob.Theta, prob.lam
    x = np.zeros(prob.N)
    r = prob.u.copy()
    f_old = prob.objective(x)
    for _ in range(max_iter):
        for i in range(prob.N):
            xi_new = max(0.0, x[i] + T[:, i] @ r - lam)
            if xi_new != x[i]:
                r -= T[:, i] * (xi_new - x[i])
                x[i] = xi_new
        f_new = prob.objective(x)
        if f_old - f_new < tol:
            return x
        f_old = f_new
    raise flows.NonConvergenceError(f_old - f_new, "coordinate descent hit the iteration cap", x)


# ---------------------------------------------------------------------------
# softmax gradient play
# ---------------------------------------------------------------------------


def softmax_play_field(grad_surprise: Callable, tau: float, w, x=None) -> np.ndarray:
    w = as_vec(w, "w")
    if abs(w.sum() - 1.0) > 1e-8 or np.any(w < -1e-8):
        raise DomainError("w must lie on the probability simplex")
    if not tau > 0:
        raise DomainError("tau must be positive")
    g = np.asarray(grad_surprise(x, w), dtype=np.float64)
    return -w + softmax(-g / tau)


# ---------------------------------------------------------------------------
# E-I networks
# ---------------------------------------------------------------------------


class ConditionViolation(ValueError):
    pass


class NotApplicableError(ValueError):
    pass


class EINetwork:
    """Dale's-law linear threshold network with homogeneous weights.

    ``excitatory`` flags each neuron; ``adjacency[post, pre]`` marks an edge
    pre -> post (self-loops allowed). Signed weights are +w_EE (E->E),
    -w_EI (I->E), +w_IE (E->I), -w_II (I->I). ``B`` maps stimuli to neurons.
    """

    def __init__(self, excitatory, adjacency, w_EE, w_EI, w_IE, w_II, B=None):
        self.exc = np.asarray(excitatory, dtype=bool)
        A = np.asarray(adjacency, dtype=bool)
        n = self.exc.size
        if A.shape != (n, n):
            raise ShapeError("adjacency must be N x N")
        ws = (w_EE, w_EI, w_IE, w_II)
        if min(ws) < 0:
            raise DomainError("weight magnitudes must be nonnegative")
        self.A = A
        self.w_EE, self.w_EI, self.w_IE, self.w_II = (float(w) for w in ws)
        self.B = np.eye(n) if B is None else as_mat(B, "B")
        if self.B.shape[0] != n:
            raise ShapeError("B must have N rows")

    @property
    def N(self) -> int:
        return self.exc.size

    @property
    def W(self) -> np.ndarray:
        post_e = self.exc[:, None]
        pre_e = self.exc[None, :]
        S = np.where(
            pre_e,
            np.where(post_e, self.w_EE, self.w_IE),
            np.where(post_e, -self.w_EI, -self.w_II),
        )
        return np.where(self.A, S, 0.0)

    @classmethod
    def ek_i(cls, k: int, w_EE, w_EI, w_IE, w_II) -> "EINetwork":
        """k excitatory neurons (indices 0..k-1) around one inhibitory hub (index k).

        Every neuron has a self-loop; stimuli reach the E neurons only.
        """
        n = k + 1
        A = np.eye(n, dtype=bool)
        A[k, :k] = True
        A[:k, k] = True
        B = np.zeros((n, k))
        B[:k, :k] = np.eye(k)
        return cls(np.arange(n) < k, A, w_EE, w_EI, w_IE, w_II, B)

    @classmethod
    def stacked_columns(cls, layers: int, w_EE, w_EI, w_IE, w_II) -> "EINetwork":
        """``layers`` E^2-I columns, E neurons of layer l feeding those of layer l+1.

        Used for degree bookkeeping; the layered simulation runs each column
        separately (see :func:`contrast_cascade`).
        """
        base = cls.ek_i(2, w_EE, w_EI, w_IE, w_II)
        n = 3 * layers
        A = np.zeros((n, n), dtype=bool)
        exc = np.zeros(n, dtype=bool)
        for l in range(layers):
            s = slice(3 * l, 3 * l + 3)
            A[s, s] = base.A
            exc[s] = base.exc
            if l + 1 < layers:
                for e in (0, 1):
                    A[3 * (l + 1) + e, 3 * l + e] = True
        B = np.zeros((n, 2))
        B[0, 0] = B[1, 1] = 1.0
        return cls(exc, A, w_EE, w_EI, w_IE, w_II, B)

    def validate_structure(self):
        """Reciprocal E-I edges; raise NotApplicableError otherwise."""
        EI = self.exc[None, :] & ~self.exc[:, None]  # E -> I entries (post I, pre E)
        if np.any(self.A[EI] != self.A.T[EI]):
            raise NotApplicableError("E-I connections must be reciprocal")

    def degrees(self) -> tuple[float, float]:
        """Largest (d_in + d_out)/2 within the E->E and within the I->I subgraph."""

        def avg_deg(mask):
            sub = self.A[np.ix_(mask, mask)]
            if sub.size == 0:
                return 0.0
            return float(np.max((sub.sum(axis=0) + sub.sum(axis=1)) / 2.0))

        return avg_deg(self.exc), avg_deg(~self.exc)


@dataclass
class MonostabilityReport:
    ok: bool
    slack_EE: float
    slack_II: float
    d_E: float
    d_I: float


def monostability_conditions(d_in: float, d_out: float, w_EE: float, w_II: float) -> MonostabilityReport:
    """Slacks 1 - ((d_in+d_out)/2) w_EE and 1 - ((d_in+d_out)/2 - 2) w_II."""
    d = 0.5 * (d_in + d_out)
    s1, s2 = 1.0 - d * w_EE, 1.0 - (d - 2.0) * w_II
    return MonostabilityReport(s1 > 0 and s2 > 0, s1, s2, d, d)


def monostability_check(net: EINetwork) -> MonostabilityReport:
    net.validate_structure()
    d_E, d_I = net.degrees()
    s1, s2 = 1.0 - d_E * net.w_EE, 1.0 - (d_I - 2.0) * net.w_II
    return MonostabilityReport(s1 > 0 and s2 > 0, s1, s2, d_E, d_I)


def ei_field(net: EINetwork, x, u=None) -> np.ndarray:
    x = as_vec(x, "x")
    u = np.zeros(net.B.shape[1]) if u is None else as_vec(u, "u")
    return -x + np.clip(net.W @ x + net.B @ u, 0.0, 1.0)


EI_RELAX = flows.IntegratorConfig(flows.Method.RK4, dt=0.05, t_max=2000.0, equilibrium_tol=1e-10)


def ei_equilibrium(net: EINetwork, u=None, x0=None, cfg=None) -> np.ndarray:
    x0 = np.zeros(net.N) if x0 is None else x0
    return flows.find_equilibrium(lambda x, t: ei_field(net, x, u), x0, cfg or EI_RELAX)


def wta_threshold(w_EE: float, w_EI: float) -> float:
    return 1.0 - w_EE + w_EI


@dataclass
class WTAPrediction:
    winner: Optional[int]  # None: the theorem gives no guarantee
    delta: float
    reason: str = ""


def wta_predict(net: EINetwork, u) -> WTAPrediction:
    """Winner guaranteed when u_i > delta and u_j < -delta for all j != i."""
    if not net.w_IE >= 1.0 + net.w_II:
        raise ConditionViolation(f"functionality condition fails: w_IE={net.w_IE} < 1 + w_II={1 + net.w_II}")
    rep = monostability_check(net)
    if not rep.ok:
        raise ConditionViolation(f"monostability fails (slacks {rep.slack_EE:.3g}, {rep.slack_II:.3g})")
    delta = wta_threshold(net.w_EE, net.w_EI)
    if not delta > 0:
        raise ConditionViolation("threshold delta must be positive")
    u = as_vec(u, "u")
    hi = np.flatnonzero(u > delta)
    if hi.size == 1 and np.all(np.delete(u, hi[0]) < -delta):
        return WTAPrediction(int(hi[0]), delta)
    return WTAPrediction(None, delta, "stimuli outside the hypothesis region")


def wta_simulate(net: EINetwork, u) -> np.ndarray:
    return ei_equilibrium(net, u)


# ---------------------------------------------------------------------------
# contrast enhancement
# ---------------------------------------------------------------------------


def contrast_layers_needed(w_EE: float, epsilon: float, delta: float) -> tuple[float, int]:
    """(closed-form layer count, layer count from iterating the geometric recurrence).

    The closed form is 1 + ln(eps/delta) / ln(1/w_EE - 1). The recurrence
    starts from contrast eps at layer 1 and multiplies by (1/w_EE - 1) per
    layer until the contrast reaches delta.
    """
    if not 0 < w_EE < 0.5:
        raise DomainError("need 0 < w_EE < 1/2")
    if not (epsilon > 0 and delta > 0):
        raise DomainError("epsilon and delta must be positive")
    r = 1.0 / w_EE - 1.0
    formula = 1.0 + math.log(epsilon / delta) / math.log(r)
    layers, c = 1, epsilon
    while c < delta:
        c *= r
        layers += 1
    return formula, layers


def contrast_cascade(layers: int, w_EE, w_EI, w_IE, w_II, u) -> np.ndarray:
    """Run ``layers`` E^2-I columns in sequence; each column's E outputs are the
    next column's stimuli (B = I). Returns the (layers, 2) E-pair outputs."""
    col = EINetwork.ek_i(2, w_EE, w_EI, w_IE, w_II)
    stim = as_vec(u, "u")
    out = []
    for _ in range(int(layers)):
        x = ei_equilibrium(col, stim)
        stim = x[:2].copy()
        out.append(stim)
    return np.array(out)


def contraction_rate(W) -> float:
    """1 - lambda_max(sym W): positive values put the linear-threshold flow in the contracting regime."""
    W = as_mat(W, "W")
    return 1.0 - lambda_max(0.5 * (W + W.T))
