"""State and distribution distances used by the experiments."""

from __future__ import annotations

import numpy as np

from . import linalg
from .errors import ParameterError

PSD_FLOOR = 1e-8


def _psd_sqrt(rho: np.ndarray, name: str) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ParameterError(f"{name} must be a square matrix")
    try:
        w, v = linalg.hermitian_eig(rho)
    except Exception as exc:  # non-Hermitian or non-finite input
        raise ParameterError(f"{name} is not a valid density matrix: {exc}") from exc
    if w[-1] < -PSD_FLOOR:
        raise ParameterError(f"{name} has eigenvalue {w[-1]:.3e} below -{PSD_FLOOR:.0e}")
    # eigenvalues at rounding level only add sqrt-amplified noise
    w = np.where(w > 1e-14 * max(w[0], 0.0), w, 0.0)
    return (v * np.sqrt(w)[None, :]) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Evaluated as the squared trace norm of ``sqrt(rho) sqrt(sigma)``, which is
    symmetric in its arguments.
    """
    a = _psd_sqrt(rho, "rho")
    b = _psd_sqrt(sigma, "sigma")
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch {a.shape} vs {b.shape}")
    s = np.linalg.svd(a @ b, compute_uv=False)
    return float(np.sum(s) ** 2)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def _check_dist(p, name: str, tol: float) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ParameterError(f"{name} must be non-negative and finite")
    if abs(p.sum() - 1.0) > tol:
        raise ParameterError(f"{name} sums to {p.sum()}, not 1")
    return p


def jsd(p, q, tol: float = 1e-8) -> float:
    """Jensen-Shannon divergence with natural logarithm; ``0 ln 0 = 0``."""
    p = _check_dist(p, "P", tol)
    q = _check_dist(q, "Q", tol)
    if p.shape != q.shape:
        raise ParameterError(f"distribution lengths differ: {p.size} vs {q.size}")
    m = 0.5 * (p + q)

    def _kl(a):
        nz = a > 0
        return float(np.sum(a[nz] * np.log(a[nz] / m[nz])))

    # rounding can push identical inputs a hair below zero
    return max(0.5 * (_kl(p) + _kl(q)), 0.0)


def jsd_gradient(p, q, floor: float = 1e-15) -> np.ndarray:
    """``d JSD / d P_i = ln(P_i / M_i) / 2`` (``P`` floored to stay finite)."""
    p = np.maximum(np.asarray(p, dtype=float), floor)
    q = np.asarray(q, dtype=float)
    return 0.5 * np.log(p / (0.5 * (p + q)))


def classical_fidelity(p, q, tol: float = 1e-8) -> float:
    """``(sum_i sqrt(p_i q_i))^2``, the fidelity of the two dephased states."""
    p = _check_dist(p, "P", tol)
    q = _check_dist(q, "Q", tol)
    if p.shape != q.shape:
        raise ParameterError(f"distribution lengths differ: {p.size} vs {q.size}")
    return float(min(np.sum(np.sqrt(p * q)) ** 2, 1.0))
