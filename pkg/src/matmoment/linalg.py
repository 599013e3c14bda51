"""Tolerance-aware dense symmetric linear algebra.

Matrices are plain numpy arrays.  Every rank and positive-semidefiniteness
decision goes through a relative cutoff (`Tolerances`) so that the exact rank
equalities driving flat extensions stay decidable in floating point.  All
symmetric outputs are explicitly symmetrized, because downstream
eigendecompositions assume exact symmetry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "as_matrix",
    "symmetrize",
    "pinv",
    "rank",
    "min_eig",
    "is_psd",
    "schur_complement",
    "column_space_contained",
    "psd_project",
]


@dataclass(frozen=True)
class Tolerances:
    """Relative cutoffs for rank and PSD decisions.

    rank_tol: singular values below ``rank_tol * sigma_max`` count as zero.
    psd_tol:  eigenvalues above ``-psd_tol * max(1, ||A||_2)`` count as
              nonnegative; the ``max(1, .)`` acts as an absolute floor for
              near-zero matrices.
    """

    rank_tol: float = 1e-8
    psd_tol: float = 1e-8

    def __post_init__(self) -> None:
        if not (self.rank_tol >= 0.0 and self.psd_tol >= 0.0):
            raise InvalidInputError("tolerances must be nonnegative")


DEFAULT_TOL = Tolerances()


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d float array; 1-d input becomes a column."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return m


def symmetrize(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"cannot symmetrize non-square matrix {m.shape}")
    return (m + m.T) / 2.0


def pinv(a, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse with singular values below rank_tol*sigma_max zeroed."""
    m = as_matrix(a)
    if m.size == 0:
        return m.T.copy()
    return np.linalg.pinv(m, rcond=tol.rank_tol)


def rank(a, tol: Tolerances = DEFAULT_TOL) -> int:
    """Number of singular values above rank_tol * sigma_max (0 for the zero matrix)."""
    m = as_matrix(a)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rank_tol * s[0]))


def min_eig(a) -> float:
    """Smallest eigenvalue of the symmetric part of ``a``."""
    m = symmetrize(a)
    if m.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(m)[0])


def is_psd(a, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff lambda_min(A) >= -psd_tol * max(1, ||A||_2)."""
    m = symmetrize(a)
    if m.shape[0] == 0:
        return True
    w = np.linalg.eigvalsh(m)
    bound = tol.psd_tol * max(1.0, float(np.max(np.abs(w))))
    return bool(w[0] >= -bound)


def schur_complement(
    m, head: int, corner: str = "upper-left", tol: Tolerances = DEFAULT_TOL
) -> np.ndarray:
    """Generalized Schur complement of a symmetric 2x2 block matrix.

    ``head`` is the size of the leading block A in ``[[A, B], [B^T, D]]``.
    corner="upper-left" returns ``D - B^T pinv(A) B`` (the complement of A),
    corner="lower-right" returns ``A - B pinv(D) B^T``.
    """
    mm = symmetrize(m)
    n = mm.shape[0]
    if not 0 <= head <= n:
        raise InvalidInputError(f"block split {head} out of range for size {n}")
    a = mm[:head, :head]
    b = mm[:head, head:]
    d = mm[head:, head:]
    if corner == "upper-left":
        return symmetrize(d - b.T @ pinv(a, tol) @ b)
    if corner == "lower-right":
        return symmetrize(a - b @ pinv(d, tol) @ b.T)
    raise InvalidInputError(f"unknown corner {corner!r}")


def column_space_contained(b, a, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff the columns of ``b`` lie in the column space of symmetric ``a``.

    Tested as ``||(I - A pinv(A)) B||_F <= psd_tol * max(1, ||B||_F)``.
    """
    bm = as_matrix(b, "b")
    am = as_matrix(a, "a")
    if bm.shape[0] != am.shape[0]:
        raise InvalidInputError(
            f"row counts differ: b has {bm.shape[0]}, a has {am.shape[0]}"
        )
    resid = bm - am @ (pinv(am, tol) @ bm)
    return float(np.linalg.norm(resid)) <= tol.psd_tol * max(
        1.0, float(np.linalg.norm(bm))
    )


def psd_project(a) -> np.ndarray:
    """Frobenius-nearest PSD matrix: eigendecompose and clip negative eigenvalues."""
    m = symmetrize(a)
    if m.shape[0] == 0:
        return m
    w, u = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return symmetrize((u * w) @ u.T)
