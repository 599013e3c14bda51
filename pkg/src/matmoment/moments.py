"""Moment sequences, block-Hankel moment and localizing matrices, measures.

A moment sequence Gamma = (Gamma_0, ..., Gamma_n) of symmetric p x p blocks
stands for the linear map L(x**i) = Gamma_i.  The block-Hankel matrices built
here are the interface between raw moments and the flat-extension machinery:

  moment matrix        M_m       block (i, j) = Gamma_{i+j}
  localizing matrix    H_f(l)    block (i, j) = L(f(x) x**(i+j))

``b_matrix`` realizes the band matrix B_m(t) with the shift identity
B_m(t) H_f(m) B_m(t)^T = H_{(x-t)^2 f}(m-1), which converts one step of
block-column shifting into localization by a perfect square.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InvalidInputError
from .linalg import DEFAULT_TOL, Tolerances, is_psd, rank, symmetrize
from .polynomials import MatrixPolynomial, ScalarPoly

__all__ = [
    "MomentSequence",
    "AtomicMatrixMeasure",
    "SetDescription",
    "riesz",
    "riesz_pairing",
    "moment_matrix",
    "localizing_matrix",
    "moments_of_measure",
    "b_matrix",
    "is_coflat",
    "affine_transform_moments",
]

# Atom weights below this fraction of the total mass are dropped when a
# measure is canonicalized.
WEIGHT_DROP_REL = 1e-12


class MomentSequence:
    """Finite sequence of symmetric p x p moment blocks."""

    __slots__ = ("blocks",)

    def __init__(self, blocks):
        b = np.asarray(blocks, dtype=float)
        if b.ndim == 1:
            # scalar sequence shorthand
            b = b[:, None, None]
        if b.ndim != 3 or b.shape[1] != b.shape[2] or b.shape[0] == 0:
            raise InvalidInputError(
                f"moment blocks must have shape (n+1, p, p), got {b.shape}"
            )
        if not np.all(np.isfinite(b)):
            raise InvalidInputError("non-finite moment block")
        scale = max(1.0, float(np.abs(b).max()))
        asym = float(np.abs(b - b.transpose(0, 2, 1)).max())
        if asym > 1e-8 * scale:
            raise InvalidInputError(
                f"moment blocks must be symmetric (deviation {asym:.3e})"
            )
        self.blocks = (b + b.transpose(0, 2, 1)) / 2.0

    @property
    def p(self) -> int:
        return self.blocks.shape[1]

    @property
    def top_index(self) -> int:
        return self.blocks.shape[0] - 1

    def block(self, i: int) -> np.ndarray:
        return self.blocks[i]

    def truncated(self, n: int) -> "MomentSequence":
        if not 0 <= n <= self.top_index:
            raise InvalidInputError(f"cannot truncate to top index {n}")
        return MomentSequence(self.blocks[: n + 1])

    def with_block0(self, g0) -> "MomentSequence":
        out = self.blocks.copy()
        out[0] = symmetrize(g0)
        return MomentSequence(out)

    def scale(self) -> float:
        """Data magnitude used to make tolerances relative."""
        return max(1.0, float(np.abs(self.blocks).max()))

    def __eq__(self, other) -> bool:
        return isinstance(other, MomentSequence) and np.array_equal(
            self.blocks, other.blocks
        )

    def __repr__(self) -> str:
        return f"MomentSequence(p={self.p}, top_index={self.top_index})"


class AtomicMatrixMeasure:
    """Finitely atomic measure sum_j A_j delta_{x_j} with PSD weights.

    Canonical form: locations strictly increasing, weights of equal locations
    merged, weights below WEIGHT_DROP_REL of the total mass dropped.
    """

    __slots__ = ("locations", "weights")

    def __init__(self, locations, weights, tol: Tolerances = DEFAULT_TOL):
        locs = np.atleast_1d(np.asarray(locations, dtype=float))
        if locs.size == 0:
            raise InvalidInputError(
                "empty measure must be built with AtomicMatrixMeasure.empty(p)"
            )
        w = np.asarray(weights, dtype=float)
        if w.ndim == 1:
            # scalar weights shorthand
            w = w[:, None, None]
        if w.ndim != 3 or w.shape[0] != locs.size or w.shape[1] != w.shape[2]:
            raise InvalidInputError(
                f"weights must have shape (k, p, p) matching {locs.size} locations"
            )
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(w))):
            raise InvalidInputError("non-finite atom data")
        order = np.argsort(locs, kind="stable")
        locs, w = locs[order], w[order]
        # merge exactly-equal locations
        keep_locs, keep_w = [], []
        for x, a in zip(locs, w):
            if keep_locs and x == keep_locs[-1]:
                keep_w[-1] = keep_w[-1] + a
            else:
                keep_locs.append(x)
                keep_w.append(a.copy())
        w = np.array([symmetrize(a) for a in keep_w])
        locs = np.array(keep_locs)
        total = float(np.trace(w.sum(axis=0))) if w.size else 0.0
        norms = np.linalg.norm(w.reshape(w.shape[0], -1), axis=1)
        mask = norms > WEIGHT_DROP_REL * max(total, 1e-300)
        locs, w = locs[mask], w[mask]
        for a in w:
            wmin = float(np.linalg.eigvalsh(a)[0]) if a.size else 0.0
            if wmin < -tol.psd_tol * max(1.0, float(np.abs(a).max())):
                raise InvalidInputError(
                    f"atom weight is not positive semidefinite (min eig {wmin:.3e})"
                )
        self.locations = locs
        p = w.shape[1] if w.shape[0] else np.asarray(weights, dtype=float).shape[-1]
        self.weights = w if w.shape[0] else np.zeros((0, p, p))

    @classmethod
    def empty(cls, p: int) -> "AtomicMatrixMeasure":
        out = cls.__new__(cls)
        out.locations = np.zeros(0)
        out.weights = np.zeros((0, p, p))
        return out

    @property
    def p(self) -> int:
        return self.weights.shape[1]

    @property
    def natoms(self) -> int:
        return self.locations.size

    def total_mass(self) -> np.ndarray:
        if self.natoms == 0:
            return np.zeros((self.p, self.p))
        return self.weights.sum(axis=0)

    def __repr__(self) -> str:
        return f"AtomicMatrixMeasure(p={self.p}, atoms={self.locations.tolist()})"


@dataclass(frozen=True)
class SetDescription:
    """Semialgebraic support set.

    kind="interval_point": {a} u [b, c] with a < b < c, described by the
    generators f1 = x - a, f2 = (x - a)(x - b), f3 = c - x.
    kind="halfline_point": {a} u [b, +inf) with a < b (certificate side only;
    c is unused and stored as +inf).
    """

    kind: str
    a: float
    b: float
    c: float = np.inf

    def __post_init__(self):
        if self.kind not in ("interval_point", "halfline_point"):
            raise InvalidInputError(f"unknown set kind {self.kind!r}")
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise InvalidInputError("need finite a < b")
        if self.kind == "interval_point":
            if not (np.isfinite(self.c) and self.b < self.c):
                raise InvalidInputError("interval_point needs finite b < c")

    @classmethod
    def interval_point(cls, a: float, b: float, c: float) -> "SetDescription":
        return cls("interval_point", float(a), float(b), float(c))

    @classmethod
    def halfline_point(cls, a: float, b: float) -> "SetDescription":
        return cls("halfline_point", float(a), float(b))

    @property
    def span(self) -> float:
        return self.c - self.a if self.kind == "interval_point" else np.inf

    def generators(self) -> list[ScalarPoly]:
        """Natural description [f1, f2, f3] of {a} u [b, c]."""
        if self.kind != "interval_point":
            raise InvalidInputError("generators() requires a bounded set")
        f1 = ScalarPoly([-self.a, 1.0])
        f2 = f1 * ScalarPoly([-self.b, 1.0])
        f3 = ScalarPoly([self.c, -1.0])
        return [f1, f2, f3]

    def contains(self, x: float, atol: float = 0.0) -> bool:
        if abs(x - self.a) <= atol:
            return True
        if self.kind == "interval_point":
            return self.b - atol <= x <= self.c + atol
        return x >= self.b - atol

    def normalized(self) -> tuple["SetDescription", float, float]:
        """Map {a} u [b, c] to {0} u [1, c'] and return (set, alpha, beta)
        for the substitution y = (x - beta)/alpha (alpha = b - a, beta = a)."""
        if self.kind != "interval_point":
            raise InvalidInputError("normalization requires a bounded set")
        alpha = self.b - self.a
        cn = (self.c - self.a) / alpha
        return SetDescription.interval_point(0.0, 1.0, cn), alpha, self.a


def riesz(gamma: MomentSequence, f: ScalarPoly) -> np.ndarray:
    """L(f) = sum_k f_k Gamma_k."""
    if f.degree > gamma.top_index:
        raise InvalidInputError(
            f"deg f = {f.degree} exceeds available moments (n = {gamma.top_index})"
        )
    return symmetrize(np.tensordot(f.coeffs, gamma.blocks[: f.coeffs.size], axes=1))


def riesz_pairing(gamma: MomentSequence, f: MatrixPolynomial) -> float:
    """sum_k tr(Gamma_k F_k)."""
    if f.p != gamma.p:
        raise InvalidInputError(f"size mismatch: p={f.p} vs {gamma.p}")
    if f.degree > gamma.top_index:
        raise InvalidInputError(
            f"deg F = {f.degree} exceeds available moments (n = {gamma.top_index})"
        )
    k = f.coeffs.shape[0]
    return float(np.einsum("kij,kij->", gamma.blocks[:k], f.coeffs))


def moment_matrix(gamma: MomentSequence, m: int) -> np.ndarray:
    """Block-Hankel matrix with block (i, j) = Gamma_{i+j}, 0 <= i, j <= m."""
    if m < 0 or 2 * m > gamma.top_index:
        raise InvalidInputError(
            f"moment matrix of order {m} needs moments up to 2m (have {gamma.top_index})"
        )
    p = gamma.p
    out = np.empty(((m + 1) * p, (m + 1) * p))
    for i in range(m + 1):
        for j in range(m + 1):
            out[i * p : (i + 1) * p, j * p : (j + 1) * p] = gamma.blocks[i + j]
    return symmetrize(out)


def localizing_matrix(gamma: MomentSequence, f: ScalarPoly, ell: int) -> np.ndarray:
    """Block-Hankel matrix with block (i, j) = L(f x**(i+j)), 0 <= i, j <= ell."""
    if ell < 0 or 2 * ell + f.degree > gamma.top_index:
        raise InvalidInputError(
            f"localizing matrix needs deg f + 2l <= n "
            f"(deg f = {f.degree}, l = {ell}, n = {gamma.top_index})"
        )
    p = gamma.p
    shifted = np.array(
        [
            np.tensordot(f.coeffs, gamma.blocks[k : k + f.coeffs.size], axes=1)
            for k in range(2 * ell + 1)
        ]
    )
    out = np.empty(((ell + 1) * p, (ell + 1) * p))
    for i in range(ell + 1):
        for j in range(ell + 1):
            out[i * p : (i + 1) * p, j * p : (j + 1) * p] = shifted[i + j]
    return symmetrize(out)


def moments_of_measure(mu: AtomicMatrixMeasure, n: int) -> MomentSequence:
    """Gamma_i = sum_j x_j**i A_j for i = 0..n; the oracle for round trips."""
    if n < 0:
        raise InvalidInputError("moment order must be nonnegative")
    p = mu.p
    blocks = np.zeros((n + 1, p, p))
    if mu.natoms:
        powers = np.power.outer(mu.locations, np.arange(n + 1)).T  # (n+1, k)
        blocks = np.einsum("nk,kij->nij", powers, mu.weights)
    return MomentSequence(blocks)


def b_matrix(m: int, t: float, p: int) -> np.ndarray:
    """m x (m+1) block band matrix with -t I_p on the diagonal, I_p above it."""
    if m < 1 or p < 1:
        raise InvalidInputError("b_matrix needs m >= 1 and p >= 1")
    if not np.isfinite(t):
        raise InvalidInputError("shift t must be finite")
    out = np.zeros((m * p, (m + 1) * p))
    eye = np.eye(p)
    for i in range(m):
        out[i * p : (i + 1) * p, i * p : (i + 1) * p] = -t * eye
        out[i * p : (i + 1) * p, (i + 1) * p : (i + 2) * p] = eye
    return out


def is_coflat(
    gamma: MomentSequence,
    mode: str = "moment",
    tol: Tolerances = DEFAULT_TOL,
    c: float | None = None,
) -> bool:
    """Rank comparison between a Hankel matrix and its x**2-localized version.

    mode="moment":    rank M_{floor(n/2)} == rank H_{x^2}(floor(n/2) - 1)
    mode="localized": rank H_{c-x}(l) == rank H_{x^2 (c-x)}(l-1) at the
                      maximal truncations; requires ``c``.
    """
    n = gamma.top_index
    if mode == "moment":
        m = n // 2
        if m < 1:
            raise InvalidInputError("moment coflatness needs n >= 2")
        x2 = ScalarPoly([0.0, 0.0, 1.0])
        return rank(moment_matrix(gamma, m), tol) == rank(
            localizing_matrix(gamma, x2, m - 1), tol
        )
    if mode == "localized":
        if c is None or not np.isfinite(c):
            raise InvalidInputError("localized coflatness needs the endpoint c")
        if n < 3:
            raise InvalidInputError("localized coflatness needs n >= 3")
        f3 = ScalarPoly([c, -1.0])
        x2f3 = ScalarPoly([0.0, 0.0, 1.0]) * f3
        l1 = (n - 1) // 2
        l2 = (n - 3) // 2
        return rank(localizing_matrix(gamma, f3, l1), tol) == rank(
            localizing_matrix(gamma, x2f3, l2), tol
        )
    raise InvalidInputError(f"unknown coflatness mode {mode!r}")


def affine_transform_moments(
    gamma: MomentSequence, alpha: float, beta: float
) -> MomentSequence:
    """Moments of the pushforward under y = (x - beta)/alpha.

    Gamma'_i = L(((x - beta)/alpha)**i), expanded binomially, so the result
    is exact up to rounding.
    """
    if alpha == 0.0 or not (np.isfinite(alpha) and np.isfinite(beta)):
        raise InvalidInputError("affine moment transform needs finite alpha != 0")
    n = gamma.top_index
    out = np.zeros_like(gamma.blocks)
    inv = 1.0 / alpha
    for i in range(n + 1):
        acc = np.zeros((gamma.p, gamma.p))
        for k in range(i + 1):
            acc += comb(i, k) * ((-beta) ** (i - k)) * gamma.blocks[k]
        out[i] = (inv**i) * acc
    return MomentSequence(out)
