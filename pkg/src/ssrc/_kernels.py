"""Inner loops with a numba and a pure-numpy implementation each.

The public names (``esn_states``, ``lorenz_rk4``, ``sliding_median``) are bound
to one of the two variants at import time according to ``_accel.USE_NUMBA``.
Both variants stay importable so they can be benchmarked and cross-checked.
"""
import numpy as np
from scipy import sparse

from ._accel import USE_NUMBA, njit


# --- reservoir state recurrence -------------------------------------------------

def _esn_states_loop(indptr, indices, data, w_in, x, leak, r0):
    n_nodes = w_in.shape[0]
    n_steps = x.shape[0]
    out = np.empty((n_steps, n_nodes))
    prev = r0.copy()
    cur = np.empty(n_nodes)
    for t in range(n_steps):
        u = x[t]
        for row in range(n_nodes):
            acc = 0.0
            for k in range(indptr[row], indptr[row + 1]):
                acc += data[k] * prev[indices[k]]
            cur[row] = (1.0 - leak) * prev[row] + leak * np.tanh(acc + w_in[row] * u)
        out[t] = cur
        prev, cur = cur, prev
    return out


esn_states_numba = njit(_esn_states_loop)


def esn_states_numpy(indptr, indices, data, w_in, x, leak, r0):
    n_nodes = w_in.shape[0]
    A = sparse.csr_matrix((data, indices, indptr), shape=(n_nodes, n_nodes))
    out = np.empty((x.shape[0], n_nodes))
    prev = r0.copy()
    for t in range(x.shape[0]):
        prev = (1.0 - leak) * prev + leak * np.tanh(A @ prev + w_in * x[t])
        out[t] = prev
    return out


# --- Lorenz RK4 -------------------------------------------------------------------

def _lorenz_rk4_loop(state0, sigma, rho, beta, dt, n_steps):
    traj = np.empty((n_steps + 1, 3))
    x, y, z = state0[0], state0[1], state0[2]
    traj[0, 0] = x
    traj[0, 1] = y
    traj[0, 2] = z
    h = dt
    for i in range(n_steps):
        k1x = sigma * (y - x)
        k1y = x * (rho - z) - y
        k1z = x * y - beta * z
        x2 = x + 0.5 * h * k1x
        y2 = y + 0.5 * h * k1y
        z2 = z + 0.5 * h * k1z
        k2x = sigma * (y2 - x2)
        k2y = x2 * (rho - z2) - y2
        k2z = x2 * y2 - beta * z2
        x3 = x + 0.5 * h * k2x
        y3 = y + 0.5 * h * k2y
        z3 = z + 0.5 * h * k2z
        k3x = sigma * (y3 - x3)
        k3y = x3 * (rho - z3) - y3
        k3z = x3 * y3 - beta * z3
        x4 = x + h * k3x
        y4 = y + h * k3y
        z4 = z + h * k3z
        k4x = sigma * (y4 - x4)
        k4y = x4 * (rho - z4) - y4
        k4z = x4 * y4 - beta * z4
        x = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        z = z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        traj[i + 1, 0] = x
        traj[i + 1, 1] = y
        traj[i + 1, 2] = z
    return traj


lorenz_rk4_numba = njit(_lorenz_rk4_loop)


def lorenz_rk4_numpy(state0, sigma, rho, beta, dt, n_steps):
    def f(s):
        return np.array([sigma * (s[1] - s[0]),
                         s[0] * (rho - s[2]) - s[1],
                         s[0] * s[1] - beta * s[2]])

    traj = np.empty((n_steps + 1, 3))
    s = np.asarray(state0, dtype=float).copy()
    traj[0] = s
    for i in range(n_steps):
        k1 = f(s)
        k2 = f(s + 0.5 * dt * k1)
        k3 = f(s + 0.5 * dt * k2)
        k4 = f(s + dt * k3)
        s = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traj[i + 1] = s
    return traj


# --- sliding median -----------------------------------------------------------------

def _sliding_median_loop(padded, window):
    n = padded.shape[0] - window + 1
    out = np.empty(n)
    buf = np.empty(window)
    half = window // 2
    for i in range(n):
        # insertion sort; windows are short
        for j in range(window):
            v = padded[i + j]
            k = j
            while k > 0 and buf[k - 1] > v:
                buf[k] = buf[k - 1]
                k -= 1
            buf[k] = v
        out[i] = buf[half]
    return out


sliding_median_numba = njit(_sliding_median_loop)


def sliding_median_numpy(padded, window):
    view = np.lib.stride_tricks.sliding_window_view(padded, window)
    return np.median(view, axis=1)


# Above this many nodes the numpy variant wins: its vectorized tanh is SIMD,
# the compiled loop calls scalar tanh (see benchmarks/bench_kernels.py).
NUMBA_MAX_NODES = 250


def _esn_states_dispatch(indptr, indices, data, w_in, x, leak, r0):
    fn = esn_states_numba if w_in.shape[0] <= NUMBA_MAX_NODES else esn_states_numpy
    return fn(indptr, indices, data, w_in, x, leak, r0)


if USE_NUMBA:
    esn_states = _esn_states_dispatch
    lorenz_rk4 = lorenz_rk4_numba
    sliding_median = sliding_median_numba
else:
    esn_states = esn_states_numpy
    lorenz_rk4 = lorenz_rk4_numpy
    sliding_median = sliding_median_numpy
