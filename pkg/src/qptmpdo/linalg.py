"""Dense complex linear algebra with fixed gauge conventions.

Every routine works in complex double precision and returns outputs in a
reproducible gauge so golden values can be compared directly:

* SVD: singular values descending; the largest-magnitude entry of each
  column of ``U`` is real and positive (``Vh`` rows absorb the phase).
* QR: reduced factorization; diagonal of ``R`` real and non-negative.
* Hermitian eigendecomposition: eigenvalues descending.

Tensors are plain :class:`numpy.ndarray` objects in row-major order.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericInputError, RepresentationError, ShapeError

HERMITIAN_TOL = 1e-8


def as_tensor(data, shape=None) -> np.ndarray:
    """Return ``data`` as a complex128 array, optionally reshaped (row-major)."""
    arr = np.asarray(data, dtype=np.complex128)
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if int(np.prod(shape)) != arr.size:
            raise ShapeError(f"cannot view {arr.size} entries as shape {shape}")
        arr = arr.reshape(shape)
    return arr


def _check_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-axis tensor, got {m.ndim} axes")
    if not np.all(np.isfinite(m)):
        raise NumericInputError("matrix contains non-finite entries")
    return m


def _fix_svd_gauge(u: np.ndarray, vh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if u.shape[1] == 0:
        return u, vh
    idx = np.argmax(np.abs(u), axis=0)
    pivots = u[idx, np.arange(u.shape[1])]
    mags = np.abs(pivots)
    phases = np.where(mags > 0, pivots / np.where(mags > 0, mags, 1.0), 1.0)
    return u * phases.conj()[None, :], vh * phases[:, None]


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``m = U @ diag(sigma) @ Vh`` in the package gauge."""
    m = _check_matrix(m)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        import scipy.linalg

        u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    u, vh = _fix_svd_gauge(u, vh)
    return u, s, vh


def truncated_svd(
    m, max_rank: int | None = None, rel_floor: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """SVD keeping at most ``max_rank`` singular values.

    Singular values below ``rel_floor * sigma_max`` are dropped as well.

    Returns:
        ``(U', sigma', Vh', err)`` where ``err`` is the Frobenius norm of the
        discarded part, i.e. the root of the sum of squared dropped singular
        values.
    """
    if max_rank is not None and max_rank < 1:
        raise ShapeError(f"max_rank must be >= 1, got {max_rank}")
    u, s, vh = svd(m)
    keep = len(s)
    if max_rank is not None:
        keep = min(keep, int(max_rank))
    if rel_floor > 0 and len(s) and s[0] > 0:
        keep = min(keep, max(1, int(np.count_nonzero(s > rel_floor * s[0]))))
    keep = max(keep, min(1, len(s)))
    tail = s[keep:]
    err = float(np.sqrt(np.sum(tail * tail)))
    return u[:, :keep], s[:keep], vh[:keep, :], err


def qr(m) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR with a real non-negative diagonal in ``R``."""
    m = _check_matrix(m)
    q, r = np.linalg.qr(m, mode="reduced")
    diag = np.diagonal(r)
    mags = np.abs(diag)
    phases = np.where(mags > 0, diag / np.where(mags > 0, mags, 1.0), 1.0)
    q = q * phases[None, :]
    r = r * phases.conj()[:, None]
    # the diagonal is now real up to rounding; make that exact
    k = np.arange(min(r.shape))
    r[k, k] = np.abs(r[k, k])
    return q, r


def hermiticity_defect(m) -> float:
    m = np.asarray(m)
    return float(np.linalg.norm(m - m.conj().T))


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    The input is symmetrized as ``(m + m^H) / 2`` after checking that its
    anti-Hermitian part is below ``tol`` in Frobenius norm.

    Raises:
        RepresentationError: ``m`` is not Hermitian within ``tol``.
    """
    m = _check_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got {m.shape}")
    defect = hermiticity_defect(m)
    if defect > tol:
        raise RepresentationError(f"matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    h = 0.5 * (m + m.conj().T)
    eta, psi = np.linalg.eigh(h)
    return eta[::-1].copy(), psi[:, ::-1].copy()


def contract(a, axes_a, b, axes_b) -> np.ndarray:
    """Contract paired axes of two tensors.

    The result carries the free axes of ``a`` followed by those of ``b``, each
    group in original order.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    axes_a = [int(x) % a.ndim for x in axes_a]
    axes_b = [int(x) % b.ndim for x in axes_b]
    if len(axes_a) != len(axes_b):
        raise ShapeError("axis lists differ in length")
    for i, j in zip(axes_a, axes_b):
        if a.shape[i] != b.shape[j]:
            raise ShapeError(
                f"extent mismatch: axis {i} of a has {a.shape[i]}, axis {j} of b has {b.shape[j]}"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))
