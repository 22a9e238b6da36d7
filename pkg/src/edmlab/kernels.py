"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The public names at the bottom of the module pick one flavour according to
``edmlab._accel.USE_NUMBA``. Both flavours perform the same floating point
operations in the same order, so results agree to rounding (and usually
bit-for-bit). Tests and ``benchmarks/bench_kernels.py`` call the private
``_*_numba`` / ``_*_numpy`` functions directly to compare them.
"""

import numpy as np

from ._accel import USE_NUMBA, is_jitted, njit

# sweep modes
SWEEP_POWER = 0
SWEEP_POWER_EXACT = 1
SWEEP_EXP = 2

DIVERGENCE_LIMIT = 1e12


# --------------------------------------------------------------------------
# cyclic Jacobi eigensolver
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _jacobi_numba(A, rel_tol, max_sweeps):
    a = A.copy()
    n = a.shape[0]
    V = np.eye(n)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = np.sqrt(scale)
    sweeps = 0
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += 2.0 * a[p, q] * a[p, q]
        if np.sqrt(off) <= rel_tol * scale:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                sgn = 1.0 if theta >= 0.0 else -1.0
                t = sgn / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    evals = np.empty(n)
    for i in range(n):
        evals[i] = a[i, i]
    return evals, V, sweeps


def _jacobi_numpy(A, rel_tol, max_sweeps):
    a = np.array(A, dtype=np.float64, copy=True)
    n = a.shape[0]
    V = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    iu = np.triu_indices(n, 1)
    sweeps = 0
    for _ in range(max_sweeps):
        if np.sqrt(2.0 * np.sum(a[iu] ** 2)) <= rel_tol * scale:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                sgn = 1.0 if theta >= 0.0 else -1.0
                t = sgn / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(a).copy(), V, sweeps


# --------------------------------------------------------------------------
# asynchronous DenseAM sweep
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _sweep_numba(xi, sigma, order, mode, n):
    K, N = xi.shape
    m = np.zeros(K)
    for mu in range(K):
        acc = 0.0
        for j in range(N):
            acc += xi[mu, j] * sigma[j]
        m[mu] = acc
    flips = 0
    for idx in range(order.size):
        i = order[idx]
        s = sigma[i]
        h = 0.0
        if mode == 2:
            top = -np.inf
            for mu in range(K):
                r = m[mu] - xi[mu, i] * s
                if r > top:
                    top = r
            for mu in range(K):
                h += xi[mu, i] * np.exp(m[mu] - xi[mu, i] * s - top)
        elif mode == 1:
            for mu in range(K):
                r = m[mu] - xi[mu, i] * s
                h += (r + xi[mu, i]) ** n - (r - xi[mu, i]) ** n
        else:
            for mu in range(K):
                h += xi[mu, i] * (m[mu] - xi[mu, i] * s) ** (n - 1)
        new = 1.0 if h >= 0.0 else -1.0
        if new != s:
            for mu in range(K):
                m[mu] += xi[mu, i] * (new - s)
            sigma[i] = new
            flips += 1
    return flips


def _sweep_numpy(xi, sigma, order, mode, n):
    m = xi @ sigma
    flips = 0
    for i in order:
        s = sigma[i]
        col = xi[:, i]
        r = m - col * s
        if mode == SWEEP_EXP:
            h = np.sum(col * np.exp(r - r.max()))
        elif mode == SWEEP_POWER_EXACT:
            h = np.sum((r + col) ** n - (r - col) ** n)
        else:
            h = np.sum(col * r ** (n - 1))
        new = 1.0 if h >= 0.0 else -1.0
        if new != s:
            m += col * (new - s)
            sigma[i] = new
            flips += 1
    return flips


# --------------------------------------------------------------------------
# Euler-Maruyama chain on drift -grad(x)
# --------------------------------------------------------------------------


@njit(nogil=True)
def _em_chain_numba(grad, x0, noise, dt, scale, burn_in, thin):
    n_steps, d = noise.shape
    n_out = (n_steps - burn_in + thin - 1) // thin
    out = np.empty((n_out, d))
    x = x0.copy()
    j = 0
    for k in range(n_steps):
        g = grad(x)
        bad = False
        for c in range(d):
            x[c] = x[c] - g[c] * dt + scale * noise[k, c]
            if not np.isfinite(x[c]) or abs(x[c]) > DIVERGENCE_LIMIT:
                bad = True
        if bad:
            return out[:j], k + 1
        if k >= burn_in and (k - burn_in) % thin == 0:
            out[j] = x
            j += 1
    return out, -1


def _em_chain_numpy(grad, x0, noise, dt, scale, burn_in, thin):
    n_steps, d = noise.shape
    n_out = (n_steps - burn_in + thin - 1) // thin
    out = np.empty((n_out, d))
    x = np.array(x0, dtype=np.float64, copy=True)
    j = 0
    for k in range(n_steps):
        x = x - grad(x) * dt + scale * noise[k]
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT:
            return out[:j], k + 1
        if k >= burn_in and (k - burn_in) % thin == 0:
            out[j] = x
            j += 1
    return out, -1


# --------------------------------------------------------------------------
# Oja's rule, online
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _oja_numba(X, w0, eta, limit):
    w = w0.copy()
    d = w.size
    for t in range(X.shape[0]):
        y = 0.0
        for c in range(d):
            y += w[c] * X[t, c]
        nrm = 0.0
        for c in range(d):
            w[c] = w[c] + eta * (y * X[t, c] - y * y * w[c])
            nrm += w[c] * w[c]
        if not np.isfinite(nrm) or np.sqrt(nrm) > limit:
            return w, t
    return w, -1


def _oja_numpy(X, w0, eta, limit):
    w = np.array(w0, dtype=np.float64, copy=True)
    for t in range(X.shape[0]):
        x = X[t]
        y = w @ x
        w = w + eta * (y * x - y * y * w)
        nrm = np.sqrt(w @ w)
        if not np.isfinite(nrm) or nrm > limit:
            return w, t
    return w, -1


# --------------------------------------------------------------------------
# OIM relaxation, RK4 with a per-step kappa schedule (co-rotating frame)
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _oim_rhs(W, phi, kappa, out):
    n = phi.size
    for i in range(n):
        acc = -kappa * np.sin(2.0 * phi[i])
        for j in range(n):
            if W[i, j] != 0.0:
                acc += W[i, j] * np.sin(phi[j] - phi[i])
        out[i] = acc


@njit(cache=True, nogil=True)
def _oim_relax_numba(W, phi0, kappas, dt):
    n = phi0.size
    phi = phi0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for step in range(kappas.size):
        kap = kappas[step]
        _oim_rhs(W, phi, kap, k1)
        for i in range(n):
            tmp[i] = phi[i] + 0.5 * dt * k1[i]
        _oim_rhs(W, tmp, kap, k2)
        for i in range(n):
            tmp[i] = phi[i] + 0.5 * dt * k2[i]
        _oim_rhs(W, tmp, kap, k3)
        for i in range(n):
            tmp[i] = phi[i] + dt * k3[i]
        _oim_rhs(W, tmp, kap, k4)
        for i in range(n):
            phi[i] = phi[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    last = kappas[kappas.size - 1] if kappas.size > 0 else 0.0
    _oim_rhs(W, phi, last, k1)
    res = 0.0
    for i in range(n):
        res += k1[i] * k1[i]
    return phi, np.sqrt(res)


def _oim_rhs_numpy(W, phi, kappa):
    return (W * np.sin(phi[None, :] - phi[:, None])).sum(axis=1) - kappa * np.sin(2.0 * phi)


def _oim_relax_numpy(W, phi0, kappas, dt):
    phi = np.array(phi0, dtype=np.float64, copy=True)
    for kap in kappas:
        k1 = _oim_rhs_numpy(W, phi, kap)
        k2 = _oim_rhs_numpy(W, phi + 0.5 * dt * k1, kap)
        k3 = _oim_rhs_numpy(W, phi + 0.5 * dt * k2, kap)
        k4 = _oim_rhs_numpy(W, phi + dt * k3, kap)
        phi = phi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    last = kappas[-1] if len(kappas) else 0.0
    return phi, float(np.linalg.norm(_oim_rhs_numpy(W, phi, last)))


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

if USE_NUMBA:
    jacobi_eigh = _jacobi_numba
    async_sweep = _sweep_numba
    oja_loop = _oja_numba
    oim_relax = _oim_relax_numba
else:
    jacobi_eigh = _jacobi_numpy
    async_sweep = _sweep_numpy
    oja_loop = _oja_numpy
    oim_relax = _oim_relax_numpy


def em_chain(grad, x0, noise, dt, scale, burn_in, thin):
    """Euler-Maruyama chain; compiled only when ``grad`` is itself jitted."""
    if USE_NUMBA and is_jitted(grad):
        return _em_chain_numba(grad, x0, noise, dt, scale, burn_in, thin)
    return _em_chain_numpy(grad, x0, noise, dt, scale, burn_in, thin)
