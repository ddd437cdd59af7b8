"""Echo state network: sparse random reservoir, leaky tanh states, ridge readout.

Indexing follows the usual one-step-ahead convention: the state ``s(i)`` is
driven by input ``x[i]`` and its readout predicts ``x[i+1]``::

    s(i) = (1 - leak) s(i-1) + leak * tanh(A s(i-1) + W_in x[i]),   s(-1) = 0
    xhat[i+1] = W_out . s(i)

States are returned node-major, shape ``(L, T)``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np
from scipy import linalg, sparse

from . import _kernels
from .errors import ConstructionError, ContractError, ConvergenceError, IllConditionedError


@dataclass(frozen=True)
class EsnParams:
    size: int = 100
    spectral_radius: float = 0.9
    leak: float = 0.3
    input_scale: float = 1.0
    connectivity: float = 0.05
    ridge: float = 1e-6
    washout: int = 100
    seed: int = 0

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ContractError(f"size must be a positive integer, got {self.size}")
        object.__setattr__(self, "size", int(self.size))
        if not self.spectral_radius > 0:
            raise ContractError("spectral_radius must be positive")
        if not 0 < self.leak <= 1:
            raise ContractError("leak must lie in (0, 1]")
        if not self.input_scale > 0:
            raise ContractError("input_scale must be positive")
        if not 0 < self.connectivity <= 1:
            raise ContractError("connectivity must lie in (0, 1]")
        if self.ridge < 0:
            raise ContractError("ridge must be >= 0")
        if self.washout < 0:
            raise ContractError("washout must be >= 0")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Reservoir:
    A: sparse.csr_matrix
    w_in: np.ndarray

    @property
    def size(self):
        return self.w_in.shape[0]


# --- spectral radius ---------------------------------------------------------------

DENSE_FALLBACK_MAX = 4000


def spectral_radius(A, tol=1e-11, max_iter=100_000, block=8, restarts=2, seed=12345,
                    qr_every=5) -> float:
    """Largest |eigenvalue| of a square matrix by block power iteration.

    A block of ``block`` vectors is iterated and re-orthonormalized every
    ``qr_every`` products; the estimate is the largest Ritz value modulus of
    ``Q^T A Q``. Working on a subspace rather than a single vector lets
    complex-conjugate dominant pairs (typical for random non-symmetric
    matrices) converge. Each restart begins from an independent random block
    and the largest converged estimate wins.

    When more near-equal moduli crowd the spectral edge than the block can
    separate, iteration stalls; matrices up to ``DENSE_FALLBACK_MAX`` are then
    solved densely, larger ones raise ``ConvergenceError``.
    """
    if sparse.issparse(A):
        A = A.tocsr()
    else:
        A = np.asarray(A, dtype=float)
    n, m = A.shape
    if n != m:
        raise ContractError(f"matrix must be square, got {A.shape}")
    if n <= block:
        dense = A.toarray() if sparse.issparse(A) else A
        return float(np.max(np.abs(np.linalg.eigvals(dense))))

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        Q, _r = np.linalg.qr(rng.standard_normal((n, block)))
        prev = np.inf
        stable = 0
        est = 0.0
        for it in range(0, max_iter, qr_every):
            Z = Q
            for _k in range(qr_every - 1):
                Z = A @ Z
                nrm = np.abs(Z).max()
                if nrm == 0.0:
                    break
                Z /= nrm
            Q, _r = np.linalg.qr(Z)
            Z = A @ Q
            if not np.any(Z):
                est = 0.0
                break
            est = float(np.max(np.abs(np.linalg.eigvals(Q.T @ Z))))
            if abs(est - prev) <= tol * est:
                stable += 1
                if stable >= 3:
                    break
            else:
                stable = 0
            prev = est
            Q = Z
        else:
            if n > DENSE_FALLBACK_MAX:
                raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
            dense = A.toarray() if sparse.issparse(A) else A
            return float(np.max(np.abs(np.linalg.eigvals(dense))))
        best = max(best, est)
    return best


# --- construction ------------------------------------------------------------------

MAX_RETRIES = 10


def build_reservoir(params: EsnParams) -> Reservoir:
    """Sparse ``A`` with Bernoulli(connectivity) support and U[-1, 1] weights,
    rescaled to the target spectral radius; ``W_in`` is U[-input_scale, input_scale].

    A draw whose spectral radius is (numerically) zero is redrawn from the next
    sub-seed, at most ``MAX_RETRIES`` times.
    """
    L = params.size
    for attempt in range(MAX_RETRIES + 1):
        rng = np.random.default_rng([params.seed, attempt])
        mask = rng.random((L, L)) < params.connectivity
        weights = rng.uniform(-1.0, 1.0, (L, L))
        w_in = rng.uniform(-params.input_scale, params.input_scale, L)
        dense = np.where(mask, weights, 0.0)
        if not dense.any():
            continue
        A = sparse.csr_matrix(dense)
        rho = spectral_radius(A)
        if rho <= 1e-10 * np.abs(A.data).max():
            continue
        A = A * (params.spectral_radius / rho)
        A.sort_indices()
        return Reservoir(A=A, w_in=w_in)
    raise ConstructionError(
        f"no reservoir with nonzero spectral radius after {MAX_RETRIES} retries "
        f"(size={L}, connectivity={params.connectivity})")


# --- states, readout, reconstruction -----------------------------------------------

def run_states(res: Reservoir, params: EsnParams, x, r0: Optional[np.ndarray] = None) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ContractError("input must be a non-empty 1-d series")
    r0 = np.zeros(res.size) if r0 is None else np.ascontiguousarray(r0, dtype=float)
    A = res.A
    states = _kernels.esn_states(A.indptr.astype(np.int64), A.indices.astype(np.int64),
                                 A.data, res.w_in, x, float(params.leak), r0)
    return states.T


def train_readout(states, targets, ridge: float) -> np.ndarray:
    """Solve ``(S S^T + ridge I) w = S y`` by Cholesky; ``S`` is ``(L, T)``."""
    S = np.asarray(states, dtype=float)
    y = np.asarray(targets, dtype=float)
    if S.ndim != 2 or y.ndim != 1 or S.shape[1] != y.size:
        raise ContractError(f"states {S.shape} and targets {y.shape} are not aligned")
    if ridge < 0:
        raise ContractError("ridge must be >= 0")
    G = S @ S.T
    if ridge > 0:
        G[np.diag_indices_from(G)] += ridge
    b = S @ y
    if ridge == 0 and np.linalg.cond(G) > 1e12:
        raise IllConditionedError("normal equations are singular without regularization; use ridge > 0")
    try:
        factor = linalg.cho_factor(G, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise IllConditionedError("normal equations are not positive definite; increase ridge") from None
    return linalg.cho_solve(factor, b, check_finite=False)


def reconstruct(w_out, states) -> np.ndarray:
    """One-step predictions ``w_out . s(i)`` for every state column."""
    w_out = np.asarray(w_out, dtype=float)
    S = np.asarray(states, dtype=float)
    if S.ndim != 2 or S.shape[0] != w_out.size:
        raise ContractError(f"readout of length {w_out.size} does not match states {S.shape}")
    return w_out @ S


def ridge_objective(w, states, targets, ridge) -> float:
    r = targets - w @ states
    return float(r @ r + ridge * (w @ w))


# --- fitted predictor --------------------------------------------------------------

@dataclass(frozen=True)
class FittedEsn:
    """A trained one-step predictor over a whole series.

    ``predictions[i]`` estimates ``x[i]`` for ``i = 1..N``; ``predictions[0]``
    is NaN since no state precedes the first sample.
    """

    params: EsnParams
    reservoir: Reservoir
    w_out: np.ndarray
    predictions: np.ndarray

    def to_json(self) -> str:
        return json.dumps({
            "params": self.params.to_dict(),
            "A": {"shape": list(self.reservoir.A.shape),
                  "indptr": self.reservoir.A.indptr.tolist(),
                  "indices": self.reservoir.A.indices.tolist(),
                  "data": self.reservoir.A.data.tolist()},
            "W_in": self.reservoir.w_in.tolist(),
            "W_out": self.w_out.tolist(),
        })


def fit_predict(x, params: EsnParams, train_end: int) -> FittedEsn:
    """Drive the reservoir with ``x``, fit the readout on targets
    ``x[washout+1 .. train_end]`` and predict every sample from index 1 on."""
    x = np.asarray(x, dtype=float)
    if not params.washout < train_end:
        raise ContractError(f"washout {params.washout} must be shorter than training range {train_end}")
    res = build_reservoir(params)
    S = run_states(res, params, x[:-1])
    cols = slice(params.washout, train_end)
    w_out = train_readout(S[:, cols], x[params.washout + 1:train_end + 1], params.ridge)
    pred = np.empty(x.size)
    pred[0] = np.nan
    pred[1:] = reconstruct(w_out, S)
    return FittedEsn(params=params, reservoir=res, w_out=w_out, predictions=pred)


def with_seed(params: EsnParams, seed: int) -> EsnParams:
    return replace(params, seed=int(seed))
