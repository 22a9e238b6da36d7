"""Phase-oscillator associative memories (OAM) and oscillator Ising machines (OIM).

OAM:  dphi_i/dt = omega + sum_j W_ij sin(phi_j - phi_i) + (kappa/N) sum_j sin(2(phi_j - phi_i))
OIM:  dphi_i/dt = omega + sum_j W_ij sin(phi_j - phi_i) - kappa sin(2 phi_i)

Binary states are encoded as phases phi*(sigma)_i = 0 (sigma_i = +1) or pi (-1).
"""

from __future__ import annotations

import enum
import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import flows, kernels
from .mathcore import (
    DomainError,
    ShapeError,
    as_mat,
    as_vec,
    derive_seed,
    fd_jacobian,
    is_symmetric,
    make_rng,
    orthonormal_complement,
    sym_eig,
)

TWO_PI = 2.0 * math.pi


class Variant(enum.Enum):
    OAM = "oam"
    OIM = "oim"


class NotPhaseLockedError(ValueError):
    def __init__(self, indices):
        self.indices = list(indices)
        super().__init__(f"phases not locked to {{0, pi}} at indices {self.indices} (1-based)")


class EnergyCertificateWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class OscillatorNet:
    W: np.ndarray
    kappa: float = 0.0
    omega: float = 0.0
    variant: Variant = Variant.OAM

    def __post_init__(self):
        W = as_mat(self.W, "W")
        if W.shape[0] != W.shape[1]:
            raise ShapeError("W must be square")
        if self.kappa < 0:
            raise DomainError("kappa must be nonnegative")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "variant", Variant(self.variant))

    @property
    def N(self) -> int:
        return self.W.shape[0]


def _phases(net: OscillatorNet, phi) -> np.ndarray:
    phi = as_vec(phi, "phi")
    if phi.size != net.N:
        raise ShapeError(f"phi must have {net.N} entries")
    return phi


def coded_phases(sigma) -> np.ndarray:
    """phi*(sigma): 0 for +1 spins, pi for -1 spins."""
    return np.where(np.asarray(sigma) > 0, 0.0, math.pi)


def snap_to_spins(phi) -> np.ndarray:
    """Nearest of {0, pi} for each phase, as +-1 (cos = 0 goes to +1)."""
    return np.where(np.cos(np.asarray(phi, dtype=np.float64)) >= 0.0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# OAM
# ---------------------------------------------------------------------------


def oam_field(net: OscillatorNet, phi, co_rotating: bool = True) -> np.ndarray:
    if net.variant is not Variant.OAM:
        raise DomainError("oam_field needs an OAM network")
    phi = _phases(net, phi)
    d = phi[None, :] - phi[:, None]  # d[i, j] = phi_j - phi_i
    out = (net.W * np.sin(d)).sum(axis=1) + (net.kappa / net.N) * np.sin(2.0 * d).sum(axis=1)
    return out if co_rotating else out + net.omega


def oam_energy(net: OscillatorNet, phi) -> float:
    """-1/2 sum_ij W_ij cos(phi_j - phi_i) - kappa/(4N) sum_ij cos(2(phi_j - phi_i)); i = j included."""
    phi = _phases(net, phi)
    if not is_symmetric(net.W):
        warnings.warn("W is not symmetric; the energy is not a certificate", EnergyCertificateWarning, stacklevel=2)
    d = phi[None, :] - phi[:, None]
    return float(-0.5 * np.sum(net.W * np.cos(d)) - net.kappa / (4.0 * net.N) * np.sum(np.cos(2.0 * d)))


def oam_trajectory(net: OscillatorNet, phi0, cfg: Optional[flows.IntegratorConfig] = None) -> flows.TrajectoryRecord:
    return flows.integrate_ode(lambda p, t: oam_field(net, p), phi0, cfg, lambda p: oam_energy(net, p))


def phase_decode(phi, tol: float = 0.1) -> np.ndarray:
    """Decode a phase-locked state into +-1 after fixing the gauge phi_1 = 0."""
    if not 0 < tol < math.pi / 4:
        raise DomainError("tol must lie in (0, pi/4)")
    phi = as_vec(phi, "phi")
    rel = np.mod(phi - phi[0], TWO_PI)
    d0 = np.minimum(rel, TWO_PI - rel)
    dpi = np.abs(rel - math.pi)
    out = np.where(d0 <= tol, 1.0, np.where(dpi <= tol, -1.0, 0.0))
    bad = np.flatnonzero(out == 0.0)
    if bad.size:
        raise NotPhaseLockedError(bad + 1)
    return out


def coded_state_laplacian(W, xi) -> np.ndarray:
    """D W D - diag(D W D 1) with D = diag(xi): the coupling part of the OAM
    Jacobian at phi*(xi)."""
    W = as_mat(W, "W")
    s = np.asarray(xi, dtype=np.float64)
    A = s[:, None] * W * s[None, :]
    return A - np.diag(A.sum(axis=1))


def oam_jacobian(W, xi, kappa: float) -> np.ndarray:
    """Exact Jacobian of the co-rotating OAM field at phi*(xi)."""
    N = len(xi)
    return coded_state_laplacian(W, xi) + (2.0 * kappa / N) * np.ones((N, N)) - 2.0 * kappa * np.eye(N)


def oam_stability_margin(W_hebbian, xi) -> float:
    """Largest eigenvalue of D W D - diag(D W D 1) on the complement of the
    rotation mode (1, ..., 1).

    phi*(xi) is asymptotically stable (modulo the global rotation) exactly when
    this value is below 2 kappa.
    """
    W = as_mat(W_hebbian, "W")
    if not is_symmetric(W):
        raise ShapeError("W must be symmetric")
    xi = np.asarray(xi, dtype=np.float64)
    if xi.size == 1:
        return -math.inf
    Q = orthonormal_complement(np.ones(xi.size))
    L = coded_state_laplacian(W, xi)
    return float(sym_eig(Q.T @ L @ Q)[0][0])


def rescaled_stability_matrix(W_hebbian, xi) -> np.ndarray:
    """(1/N)(D W D - diag(W 1)), kept for comparison with ``oam_stability_margin``.

    Its top eigenvalue does not decide stability of phi*(xi); see the
    decisions log and tests/test_oscillator.py.
    """
    W = as_mat(W_hebbian, "W")
    s = np.asarray(xi, dtype=np.float64)
    return (s[:, None] * W * s[None, :] - np.diag(W.sum(axis=1))) / s.size


def numerical_stability(net: OscillatorNet, xi, h: float = 1e-6) -> tuple[float, float]:
    """Top eigenvalue of the finite-difference Jacobian at phi*(xi), rotation
    mode removed, plus the Jacobian's max asymmetry."""
    J = fd_jacobian(lambda p: oam_field(net, p), coded_phases(xi), h)
    asym = float(np.max(np.abs(J - J.T)))
    Js = 0.5 * (J + J.T)
    Q = orthonormal_complement(np.ones(len(xi)))
    return float(sym_eig(Q.T @ Js @ Q)[0][0]), asym


# ---------------------------------------------------------------------------
# Ising instances
# ---------------------------------------------------------------------------


class IsingInstance:
    """Undirected weighted graph; edges stored 0-based with i < j."""

    def __init__(self, N: int, edges: Sequence[tuple]):
        self.N = int(N)
        if self.N < 1:
            raise DomainError("N must be >= 1")
        canon = {}
        for i, j, w in edges:
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise DomainError("self-loops are not allowed")
            if not (0 <= i < self.N and 0 <= j < self.N):
                raise DomainError(f"edge ({i}, {j}) out of range")
            i, j = min(i, j), max(i, j)
            if (i, j) in canon:
                raise DomainError(f"duplicate edge ({i + 1}, {j + 1})")
            canon[(i, j)] = w
        self.edges = [(i, j, w) for (i, j), w in sorted(canon.items())]

    @property
    def M(self) -> int:
        return len(self.edges)

    def W(self) -> np.ndarray:
        W = np.zeros((self.N, self.N))
        for i, j, w in self.edges:
            W[i, j] = W[j, i] = w
        return W

    def is_maxcut_form(self) -> bool:
        return all(w in (0.0, -1.0) for _, _, w in self.edges)

    def validate_maxcut_form(self):
        if not self.is_maxcut_form():
            raise DomainError("MaxCut-form instances need edge weights in {0, -1}")

    @classmethod
    def erdos_renyi(cls, N: int, p: float, rng: np.random.Generator, weight: float = -1.0) -> "IsingInstance":
        edges = [(i, j, weight) for i in range(N) for j in range(i + 1, N) if rng.random() < p]
        return cls(N, edges)

    @classmethod
    def complete(cls, N: int, weight: float = -1.0) -> "IsingInstance":
        return cls(N, [(i, j, weight) for i in range(N) for j in range(i + 1, N)])

    def to_text(self) -> str:
        def fmt(w):
            return str(int(w)) if float(w).is_integer() else repr(w)

        return "".join([f"{self.N} {self.M}\n"] + [f"{i + 1} {j + 1} {fmt(w)}\n" for i, j, w in self.edges])

    @classmethod
    def from_text(cls, text: str) -> "IsingInstance":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not lines or len(lines[0]) != 2:
            raise ValueError("first line must be 'N M'")
        N, M = int(lines[0][0]), int(lines[0][1])
        if len(lines) - 1 != M:
            raise ValueError(f"header announces {M} edges, found {len(lines) - 1}")
        edges = []
        for k, parts in enumerate(lines[1:], 2):
            if len(parts) != 3:
                raise ValueError(f"line {k}: expected 'i j w'")
            i, j = int(parts[0]), int(parts[1])
            if i >= j:
                raise ValueError(f"line {k}: need i < j")
            edges.append((i - 1, j - 1, float(parts[2])))
        return cls(N, edges)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        return path

    @classmethod
    def load(cls, path) -> "IsingInstance":
        return cls.from_text(Path(path).read_text())


def bundled_instance(name: str = "triangle") -> IsingInstance:
    return IsingInstance.load(Path(__file__).parent / "data" / f"{name}.txt")


def ising_energy(instance: IsingInstance, sigma) -> float:
    """H = -sum_edges W_ij sigma_i sigma_j (= -1/2 sum over ordered pairs)."""
    s = np.asarray(sigma, dtype=np.float64)
    if s.shape != (instance.N,):
        raise ShapeError(f"sigma must have {instance.N} entries")
    return float(-sum(w * s[i] * s[j] for i, j, w in instance.edges))


def cut_value(instance: IsingInstance, sigma) -> float:
    """Weight of cut edges, counting each edge with weight -W_ij."""
    s = np.asarray(sigma, dtype=np.float64)
    return float(sum(-w for i, j, w in instance.edges if s[i] != s[j]))


def brute_force_ising(instance: IsingInstance) -> tuple[float, np.ndarray]:
    """Minimum of H over all 2^N spin vectors, with the lexicographically smallest minimiser."""
    N = instance.N
    if N > 24:
        raise DomainError("brute force limited to N <= 24")
    bits = (np.arange(2**N)[:, None] >> np.arange(N - 1, -1, -1)) & 1
    S = np.where(bits == 1, 1.0, -1.0)  # row 0 is all -1: lexicographic order
    H = np.zeros(S.shape[0])
    for i, j, w in instance.edges:
        H -= w * S[:, i] * S[:, j]
    k = int(np.argmin(H))
    return float(H[k]), S[k].copy()


@dataclass
class SignedGraph:
    A: np.ndarray
    L: np.ndarray
    sigma: np.ndarray


def signed_laplacian(instance: IsingInstance, sigma) -> SignedGraph:
    """A_ij = W_ij sigma_i sigma_j and L = diag(A 1) - A.

    Checks H(sigma) = -tr(L)/2 on construction.
    """
    s = np.asarray(sigma, dtype=np.float64)
    if s.shape != (instance.N,):
        raise ShapeError(f"sigma must have {instance.N} entries")
    A = s[:, None] * instance.W() * s[None, :]
    L = np.diag(A.sum(axis=1)) - A
    H = ising_energy(instance, s)
    if abs(H + 0.5 * np.trace(L)) > 1e-9 * max(1.0, abs(H)):
        raise ArithmeticError("signed Laplacian trace identity failed")
    return SignedGraph(A, L, s)


def phase_energy(W, kappa: float, phi) -> float:
    """OIM energy: -1/2 sum_ij W_ij cos(phi_i - phi_j) + kappa sum_i sin^2(phi_i)."""
    phi = np.asarray(phi, dtype=np.float64)
    d = phi[None, :] - phi[:, None]
    return float(-0.5 * np.sum(W * np.cos(d)) + kappa * np.sum(np.sin(phi) ** 2))


def oim_hessian(instance: IsingInstance, sigma, kappa: float) -> np.ndarray:
    """Analytic Hessian of the OIM energy at phi*(sigma): L(sigma) + 2 kappa I."""
    return signed_laplacian(instance, sigma).L + 2.0 * kappa * np.eye(instance.N)


def expected_hessian_eigen(h: float, N: int, kappa: float) -> float:
    """Conditional mean Hessian eigenvalue given H = h: -2h/N + 2 kappa."""
    if int(N) < 1:
        raise DomainError("N must be >= 1")
    return -2.0 * h / N + 2.0 * kappa


# ---------------------------------------------------------------------------
# OIM
# ---------------------------------------------------------------------------


def oim_field(net: OscillatorNet, phi, co_rotating: bool = True) -> np.ndarray:
    if net.variant is not Variant.OIM:
        raise DomainError("oim_field needs an OIM network")
    phi = _phases(net, phi)
    out = kernels._oim_rhs_numpy(net.W, phi, net.kappa)
    return out if co_rotating else out + net.omega


def linear_ramp(duration: float = 40.0, k0: float = 0.0, k1: float = 1.0) -> list:
    return [(duration, k0, k1)]


def schedule_steps(schedule: Sequence[tuple], dt: float) -> np.ndarray:
    """Per-step kappa values for a list of segments.

    A segment is ``(duration, kappa)`` (constant) or ``(duration, k_start,
    k_end)`` (linear ramp, kappa taken at the start of each step).
    """
    out = []
    for seg in schedule:
        if len(seg) == 2:
            dur, k0 = seg
            k1 = k0
        elif len(seg) == 3:
            dur, k0, k1 = seg
        else:
            raise DomainError("schedule segments are (duration, kappa) or (duration, k0, k1)")
        if dur <= 0 or min(k0, k1) < 0:
            raise DomainError("segments need positive duration and nonnegative kappa")
        n = max(1, int(round(dur / dt)))
        out.append(k0 + (k1 - k0) * np.arange(n) / n)
    return np.concatenate(out) if out else np.zeros(0)


@dataclass
class OIMResult:
    sigma: np.ndarray
    H: float
    log: list = field(default_factory=list)  # (restart, H, final residual)


def oim_solve(
    instance: IsingInstance,
    kappa_schedule: Optional[Sequence[tuple]] = None,
    restarts: int = 20,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    dt: float = 0.05,
    threads: int = 1,
) -> OIMResult:
    """Relax the OIM from random phases through the kappa schedule, snap to
    {0, pi}, keep the lowest-energy spin vector (ties: lexicographically smallest).

    Pass ``rng`` for one sequential stream or ``seed`` for per-restart streams
    ``seed XOR r``.
    """
    if int(restarts) < 1:
        raise DomainError("restarts must be >= 1")
    if (rng is None) == (seed is None):
        raise DomainError("pass exactly one of rng or seed")
    kappas = schedule_steps(kappa_schedule or linear_ramp(), dt)
    W = np.ascontiguousarray(instance.W())
    N = instance.N

    def run(r, gen):
        phi0 = gen.uniform(0.0, TWO_PI, N)
        phi, res = kernels.oim_relax(W, phi0, kappas, dt)
        s = snap_to_spins(phi)
        return r, s, ising_energy(instance, s), float(res)

    if rng is not None:
        runs = [run(r, rng) for r in range(restarts)]
    else:
        job = lambda r: run(r, make_rng(derive_seed(seed, r)))
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                runs = list(ex.map(job, range(restarts)))
        else:
            runs = [job(r) for r in range(restarts)]
    best = min(runs, key=lambda t: (t[2], tuple(t[1])))
    return OIMResult(best[1], best[2], [(r, H, res) for r, _, H, res in runs])


def all_spin_vectors(N: int):
    for bits in itertools.product((-1.0, 1.0), repeat=N):
        yield np.array(bits)
