"""Shared dense linear-algebra helpers built around Cholesky factorizations.

Every covariance in this package is small and dense; all solves against an
SPD matrix go through a cached Cholesky factor rather than explicit inverses.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

# Relative tolerance for declaring a matrix symmetric.
SYMMETRY_RTOL = 1e-12


class NumericalError(RuntimeError):
    """A matrix failed a positive-definiteness or symmetry requirement."""


def symmetrize(mat: np.ndarray) -> np.ndarray:
    """Average a matrix with its transpose to strip accumulation noise."""
    return 0.5 * (mat + mat.T)


def symmetry_defect(mat: np.ndarray) -> float:
    """Relative asymmetry ``max|M - M^T| / max|M|`` (0 for the zero matrix)."""
    scale = float(np.max(np.abs(mat)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(mat - mat.T))) / scale


def spd_factor(mat: np.ndarray, name: str = "matrix") -> tuple[np.ndarray, bool]:
    """Cholesky-factorize an SPD matrix for use with :func:`spd_solve`.

    The matrix is symmetrized before factorization. Raises
    :class:`NumericalError` if it is asymmetric beyond ``SYMMETRY_RTOL`` or
    not positive definite.
    """
    mat = np.asarray(mat, dtype=float)
    if symmetry_defect(mat) > SYMMETRY_RTOL:
        raise NumericalError(f"{name} not symmetric (relative defect "
                             f"{symmetry_defect(mat):.3e})")
    try:
        return scipy.linalg.cho_factor(symmetrize(mat), lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"{name} not positive definite") from exc


def spd_solve(factor, rhs: np.ndarray) -> np.ndarray:
    """Solve ``A x = rhs`` given ``factor = spd_factor(A)``."""
    return scipy.linalg.cho_solve(factor, rhs)


def spd_inverse(factor, n: int) -> np.ndarray:
    """Explicit inverse from a Cholesky factor (only for returned matrices)."""
    return symmetrize(scipy.linalg.cho_solve(factor, np.eye(n)))


def cholesky_lower(mat: np.ndarray, name: str = "covariance") -> np.ndarray:
    """Lower-triangular Cholesky factor L with ``L @ L.T == mat``."""
    mat = np.asarray(mat, dtype=float)
    if symmetry_defect(mat) > SYMMETRY_RTOL:
        raise NumericalError(f"{name} not symmetric (relative defect "
                             f"{symmetry_defect(mat):.3e})")
    try:
        return np.linalg.cholesky(symmetrize(mat))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{name} not positive definite") from exc


def check_psd(mat: np.ndarray, name: str = "matrix",
              eig_rtol: float = 1e-10, sym_rtol: float = SYMMETRY_RTOL) -> None:
    """Check that a computed bound matrix is symmetric PSD.

    Tolerances: asymmetry up to ``sym_rtol`` relative, eigenvalues down to
    ``-eig_rtol * trace``.
    """
    if symmetry_defect(mat) > sym_rtol:
        raise NumericalError(f"{name} not symmetric")
    eigs = np.linalg.eigvalsh(symmetrize(mat))
    floor = -eig_rtol * max(float(np.trace(mat)), 0.0)
    if eigs.min(initial=0.0) < floor:
        raise NumericalError(
            f"{name} not positive semidefinite (min eigenvalue {eigs.min():.3e})")


def log_det_from_cholesky(lower: np.ndarray) -> float:
    """log det(A) given the lower Cholesky factor of A."""
    return 2.0 * float(np.sum(np.log(np.diag(lower))))
