"""Power iteration for the top singular value of a (sparse or dense) operator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PowerResult:
    value: float       # estimated top singular value
    residual: float    # ||T*T v - lam v|| at the final iterate, lam the Rayleigh quotient
    iterations: int
    converged: bool


def _normalize(v):
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def top_singular(matvec, rmatvec, start: np.ndarray, tol: float = 1e-10, max_iter: int = 20000,
                 min_iter: int = 3) -> PowerResult:
    """Power iteration on T*T from ``start``; stops on relative Rayleigh-quotient change < tol."""
    v = _normalize(np.asarray(start, dtype=complex))
    if not np.any(v):
        return PowerResult(0.0, 0.0, 0, True)
    lam_old = None
    lam = 0.0
    w = rmatvec(matvec(v))
    for it in range(1, max_iter + 1):
        lam = float(np.vdot(v, w).real)
        if lam <= 0:
            return PowerResult(0.0, float(np.linalg.norm(w)), it, True)
        if lam_old is not None and it >= min_iter and abs(lam - lam_old) <= tol * lam:
            res = float(np.linalg.norm(w - lam * v))
            return PowerResult(float(np.sqrt(lam)), res, it, True)
        lam_old = lam
        v = _normalize(w)
        w = rmatvec(matvec(v))
    res = float(np.linalg.norm(w - lam * v))
    return PowerResult(float(np.sqrt(max(lam, 0.0))), res, max_iter, False)


def matrix_norm(M: np.ndarray, tol: float = 1e-10, seed: int = 0) -> PowerResult:
    """Top singular value of a dense matrix: deterministic start, then one random restart."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0 or not np.any(M):
        return PowerResult(0.0, 0.0, 0, True)
    mv = lambda x: M @ x
    rmv = lambda x: M.conj().T @ x
    start = np.abs(M).sum(axis=0).astype(complex)
    best = top_singular(mv, rmv, start, tol)
    rng = np.random.default_rng(seed)
    r = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    alt = top_singular(mv, rmv, r, tol)
    return alt if alt.value > best.value else best
