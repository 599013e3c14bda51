"""Flat moment sequences: condition checks and atom recovery.

A sequence Gamma = (Gamma_0, ..., Gamma_2n) is *flat* at offset v when
rank M_{n-v} = rank M_n.  Together with positivity of the moment matrix and
of the localizing matrices of the support generators, flatness forces the
moments to come from a measure with exactly rank M_{n-v} weighted atoms.

Recovery follows the classical shift-operator construction: factor a moment
matrix as W^T W, read the multiplication-by-x operator X off the block-column
shift of W in least squares, and take atom locations from the spectrum of X
and weight vectors from its eigenbasis.  The one twist: W is factored from
M_{n-v+1} rather than M_{n-v}, so the unshifted block W0 (whose Gram matrix
is M_{n-v}) always has full row rank r and the shift equation X W0 = W1 has a
unique solution.  Shifting inside M_{n-v} itself breaks down whenever
rank M_{n-v-1} < r, including the extreme case n = v where there is nothing
left to shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericalFailureError, PreconditionError
from .linalg import DEFAULT_TOL, Tolerances, is_psd, rank
from .moments import (
    AtomicMatrixMeasure,
    MomentSequence,
    localizing_matrix,
    moment_matrix,
    moments_of_measure,
)
from .polynomials import ScalarPoly

__all__ = [
    "FlatReport",
    "check_flat_conditions",
    "extract_atoms",
    "approximate_atoms",
    "atom_zero_count",
]

# Atoms closer than this fraction of the recovered location span are merged.
MERGE_REL = 1e-8
# Imaginary parts of shift eigenvalues beyond this fraction of the spectral
# radius abort recovery instead of being silently projected to the real axis.
IMAG_REL = 1e-7


@dataclass
class FlatReport:
    """Diagnostic record of the flatness conditions for one sequence."""

    psd_ok: bool
    localizing_ok: list[tuple[str, bool]]
    rank_low: int
    rank_high: int
    v: int
    v_j: list[int] = field(default_factory=list)

    @property
    def flat(self) -> bool:
        return self.rank_low == self.rank_high

    @property
    def all_ok(self) -> bool:
        return self.psd_ok and self.flat and all(ok for _, ok in self.localizing_ok)

    def failures(self) -> list[str]:
        out = []
        if not self.psd_ok:
            out.append("moment matrix PSD")
        out.extend(name for name, ok in self.localizing_ok if not ok)
        if not self.flat:
            out.append(f"rank M_(n-v) = rank M_n ({self.rank_low} != {self.rank_high})")
        return out


def _even_top(gamma: MomentSequence) -> int:
    n2 = gamma.top_index
    if n2 % 2 or n2 < 2:
        raise InvalidInputError(
            f"flat-extension operations need an even top index >= 2, got {n2}"
        )
    return n2 // 2


def check_flat_conditions(
    gamma: MomentSequence,
    generators: list[ScalarPoly],
    tol: Tolerances = DEFAULT_TOL,
) -> FlatReport:
    """Evaluate PSD, localizing and rank conditions; pure diagnostic.

    With top index 2n and v_j = ceil(deg g_j / 2), v = max(max_j v_j, 1),
    the conditions are: M_n PSD, H_{g_j}(n - v_j) PSD for every generator,
    and rank M_{n-v} = rank M_n.
    """
    if not generators:
        raise InvalidInputError("generator list must be nonempty")
    n = _even_top(gamma)
    v_j = [(g.degree + 1) // 2 for g in generators]
    v = max(max(v_j), 1)
    if v > n:
        raise InvalidInputError(f"offset v = {v} exceeds n = {n}")
    psd_ok = is_psd(moment_matrix(gamma, n), tol)
    localizing_ok = []
    for g, vj in zip(generators, v_j):
        ell = n - vj
        name = f"H_{{{_poly_label(g)}}}({ell})"
        localizing_ok.append((name, is_psd(localizing_matrix(gamma, g, ell), tol)))
    rank_low = rank(moment_matrix(gamma, n - v), tol)
    rank_high = rank(moment_matrix(gamma, n), tol)
    return FlatReport(psd_ok, localizing_ok, rank_low, rank_high, v, v_j)


def _poly_label(g: ScalarPoly) -> str:
    terms = []
    for k, ck in enumerate(g.coeffs):
        if ck == 0.0:
            continue
        if k == 0:
            terms.append(f"{ck:g}")
        elif k == 1:
            terms.append(f"{ck:g}x")
        else:
            terms.append(f"{ck:g}x^{k}")
    return "+".join(terms).replace("+-", "-") or "0"


def _shift_spectrum(gamma: MomentSequence, r: int, v: int):
    """Factor M_{n-v+1}, solve the block-column shift, eigendecompose.

    Returns (locations, weight vectors C (p x r), shift residual, relative
    imaginary part of the spectrum).  No gating; callers decide what the
    residuals mean.  The factor is taken one order above M_{n-v} so the
    unshifted block keeps full row rank r even when rank M_{n-v-1} < r.
    """
    n = _even_top(gamma)
    p = gamma.p
    m_fac = moment_matrix(gamma, n - v + 1)
    w_eig, u_eig = np.linalg.eigh(m_fac)
    idx = np.argsort(w_eig)[::-1][:r]
    lam = np.clip(w_eig[idx], 0.0, None)
    w_fact = np.sqrt(lam)[:, None] * u_eig[:, idx].T  # (r, (n-v+2) p)

    w0 = w_fact[:, :-p]  # block columns 0 .. n-v
    w1 = w_fact[:, p:]  # block columns 1 .. n-v+1
    xt, *_ = np.linalg.lstsq(w0.T, w1.T, rcond=None)
    x_op = xt.T
    shift_resid = float(np.linalg.norm(x_op @ w0 - w1)) / max(
        1.0, float(np.linalg.norm(w1))
    )
    eigvals = np.linalg.eigvals(x_op)
    radius = max(float(np.abs(eigvals).max()), 1e-300)
    imag_rel = float(np.abs(eigvals.imag).max()) / radius
    # In exact arithmetic X is symmetric (orthogonal change of basis of the
    # multiplication operator), so the symmetric part gives an orthonormal
    # eigenbasis; that keeps merged weights exact for repeated locations.
    locs, basis = np.linalg.eigh((x_op + x_op.T) / 2.0)
    weight_vecs = w_fact[:, :p].T @ basis  # (p, r), column i belongs to locs[i]
    return locs, weight_vecs, shift_resid, imag_rel


def _merge_atoms(locs: np.ndarray, weight_vecs: np.ndarray):
    """Group locations closer than MERGE_REL * span; weights from grouped columns."""
    r = locs.size
    # merge gap is span-relative with an absolute floor for the case where
    # every location coincides (span ~ rounding noise)
    span = float(locs.max() - locs.min()) if r > 1 else 0.0
    gap = MERGE_REL * max(span, 1.0)
    merged_locs: list[float] = []
    merged_weights: list[np.ndarray] = []
    start = 0
    for i in range(1, r + 1):
        if i < r and locs[i] - locs[i - 1] <= gap:
            continue
        cols = weight_vecs[:, start:i]
        merged_locs.append(float(locs[start:i].mean()))
        merged_weights.append(cols @ cols.T)
        start = i
    return merged_locs, merged_weights


def extract_atoms(
    gamma: MomentSequence,
    v: int,
    tol: Tolerances = DEFAULT_TOL,
    moment_tol: float = 1e-6,
) -> AtomicMatrixMeasure:
    """Recover the rank M_{n-v}-atomic measure behind a flat PSD sequence.

    ``gamma`` must have even top index 2n with 1 <= v <= n and satisfy
    rank M_{n-v} = rank M_n with M_n PSD; otherwise PreconditionError.
    The recovered moments are checked against the input blockwise to
    ``moment_tol`` (relative); a larger deviation raises
    NumericalFailureError rather than returning a wrong measure.
    """
    n = _even_top(gamma)
    if not 1 <= v <= n:
        raise InvalidInputError(f"need 1 <= v <= n, got v = {v}, n = {n}")
    p = gamma.p
    m_low = moment_matrix(gamma, n - v)
    r = rank(m_low, tol)
    r_high = rank(moment_matrix(gamma, n), tol)
    if r != r_high:
        raise PreconditionError(
            f"sequence is not flat: rank M_{n - v} = {r}, rank M_{n} = {r_high}"
        )
    if not is_psd(moment_matrix(gamma, n), tol):
        raise PreconditionError("moment matrix is not positive semidefinite")
    if r == 0:
        return AtomicMatrixMeasure.empty(p)

    locs, weight_vecs, shift_resid, imag_rel = _shift_spectrum(gamma, r, v)
    if shift_resid > moment_tol:
        raise NumericalFailureError(
            "shift operator does not reproduce the block-column shift",
            residual=shift_resid,
        )
    if imag_rel > IMAG_REL:
        raise NumericalFailureError(
            "shift operator has genuinely complex eigenvalues", residual=imag_rel
        )
    merged_locs, merged_weights = _merge_atoms(locs, weight_vecs)
    measure = AtomicMatrixMeasure(merged_locs, merged_weights, tol)

    recovered = moments_of_measure(measure, 2 * n)
    resid = float(np.abs(recovered.blocks - gamma.blocks).max()) / gamma.scale()
    if resid > moment_tol:
        raise NumericalFailureError(
            "recovered atoms do not reproduce the input moments", residual=resid
        )
    return measure


def approximate_atoms(
    gamma: MomentSequence, v: int, tol: Tolerances = DEFAULT_TOL
) -> AtomicMatrixMeasure:
    """Ungated atom harvest for callers that re-fit and re-verify afterwards.

    Same shift construction as ``extract_atoms`` but without the flatness,
    residual and reproduction gates: on marginal data (structure at the edge
    of the rank cutoff) the locations are still usable even though the
    recovered weights are not, and a caller holding the original moments can
    re-fit the weights and judge the result itself.
    """
    n = _even_top(gamma)
    if not 1 <= v <= n:
        raise InvalidInputError(f"need 1 <= v <= n, got v = {v}, n = {n}")
    r = rank(moment_matrix(gamma, n - v), tol)
    if r == 0:
        return AtomicMatrixMeasure.empty(gamma.p)
    locs, weight_vecs, _, imag_rel = _shift_spectrum(gamma, r, v)
    if imag_rel > 1e-2:
        raise NumericalFailureError(
            "shift spectrum is far from real", residual=imag_rel
        )
    merged_locs, merged_weights = _merge_atoms(locs, weight_vecs)
    return AtomicMatrixMeasure(merged_locs, merged_weights, tol)


def atom_zero_count(
    gamma: MomentSequence,
    g: ScalarPoly,
    v: int,
    tol: Tolerances = DEFAULT_TOL,
) -> int:
    """rank M_{n-v} - rank H_g(n-v): the number of recovered atoms with g = 0."""
    n = _even_top(gamma)
    if not 1 <= v <= n:
        raise InvalidInputError(f"need 1 <= v <= n, got v = {v}, n = {n}")
    if g.degree > 2 * v:
        raise InvalidInputError(
            f"deg g = {g.degree} too large for offset v = {v} (needs deg g <= 2v)"
        )
    r_low = rank(moment_matrix(gamma, n - v), tol)
    r_loc = rank(localizing_matrix(gamma, g, n - v), tol)
    return r_low - r_loc
