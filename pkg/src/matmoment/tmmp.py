"""Truncated matrix moment problem on K = {a} u [b, c].

Feasibility of a sequence Gamma = (Gamma_0, ..., Gamma_n), n >= 2, is decided
by positivity of a parity-dependent family of block-Hankel matrices built
from the natural generators f1 = x - a, f2 = (x - a)(x - b), f3 = c - x:

  n = 2m:    M_m,  H_{f2}(m-1),  H_{f1 f3}(m-1)
  n = 2m+1:  H_{f1}(m),  H_{f3}(m),  H_{f1 f2}(m-1),  H_{f2 f3}(m-1)

When the conditions hold, a representing measure is constructed by removing
the largest matrix mass that can sit at the isolated point: Gamma_0 is
replaced by the smallest Gamma_0~ keeping M_m (even) or H_{c-x}(m) (odd)
positive semidefinite, computed in closed form through a generalized Schur
complement.  The trimmed sequence is then flat, so atom recovery applies;
in the odd case the sequence is first extended by three extra moments via
the recurrence encoded in the trimmed H_{c-x}, bringing it to even top index
2m+4 where the degree-3 generators fit.  The removed mass (Gamma_0 -
Gamma_0~) is returned to the measure as an atom at a.

All internal work happens in normalized coordinates (a, b, c) -> (0, 1, c')
so tolerances are scale-free; atoms are mapped back and snapped onto K at
the end, and the output's moments are re-verified against the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericalFailureError, PreconditionError
from .flat_extension import approximate_atoms, extract_atoms
from .linalg import DEFAULT_TOL, Tolerances, pinv, symmetrize
from .linalg import is_psd as _is_psd
from .moments import (
    AtomicMatrixMeasure,
    MomentSequence,
    SetDescription,
    affine_transform_moments,
    localizing_matrix,
    moment_matrix,
    moments_of_measure,
)
from .polynomials import ScalarPoly

__all__ = [
    "TmmpOutcome",
    "check_conditions",
    "condition_matrix",
    "solve",
    "verify_measure",
]

# Residual threshold (relative) for the recurrence relations defining the
# odd-case extension, and for the symmetry of the extended moments.
EXTENSION_REL = 1e-7


@dataclass
class TmmpOutcome:
    """Result of one solve: status plus everything needed to audit it.

    gamma0_tilde and residual_mass are identical in original and normalized
    coordinates (an affine change of variable fixes the degree-0 moment).
    normalized_tilde carries the trimmed sequence in normalized coordinates
    together with normalized_c, so callers can recheck the rank laws the
    construction relies on.
    """

    status: str  # "feasible" | "infeasible" | "numerical-failure"
    measure: AtomicMatrixMeasure | None = None
    failed_conditions: list[str] = field(default_factory=list)
    gamma0_tilde: np.ndarray | None = None
    residual_mass: np.ndarray | None = None
    moment_residual: float = float("nan")
    message: str = ""
    normalized_tilde: MomentSequence | None = None
    normalized_c: float | None = None


def _require_interval_point(kset: SetDescription) -> None:
    if kset.kind != "interval_point":
        raise InvalidInputError(
            "the moment-problem solver handles bounded sets {a} u [b, c] only"
        )


def _normalize(gamma: MomentSequence, kset: SetDescription):
    _, alpha, beta = kset.normalized()
    cn = (kset.c - kset.a) / alpha
    return affine_transform_moments(gamma, alpha, beta), cn


def _normalized_generators(cn: float) -> dict[str, ScalarPoly]:
    x = ScalarPoly.x()
    f1 = x
    f2 = ScalarPoly([0.0, -1.0, 1.0])  # x(x-1)
    f3 = ScalarPoly([cn, -1.0])
    return {
        "f1": f1,
        "f2": f2,
        "f3": f3,
        "f1f3": f1 * f3,
        "f1f2": f1 * f2,
        "f2f3": f2 * f3,
        "x2": ScalarPoly([0.0, 0.0, 1.0]),
        "x2f3": ScalarPoly([0.0, 0.0, 1.0]) * f3,
    }


def _condition_matrices(
    gnorm: MomentSequence, cn: float
) -> list[tuple[str, np.ndarray]]:
    n = gnorm.top_index
    if n < 2:
        raise InvalidInputError(f"need top index n >= 2, got {n}")
    g = _normalized_generators(cn)
    if n % 2 == 0:
        m = n // 2
        return [
            ("M_m", moment_matrix(gnorm, m)),
            ("H_{f2}(m-1)", localizing_matrix(gnorm, g["f2"], m - 1)),
            ("H_{f1f3}(m-1)", localizing_matrix(gnorm, g["f1f3"], m - 1)),
        ]
    m = (n - 1) // 2
    return [
        ("H_{f1}(m)", localizing_matrix(gnorm, g["f1"], m)),
        ("H_{f3}(m)", localizing_matrix(gnorm, g["f3"], m)),
        ("H_{f1f2}(m-1)", localizing_matrix(gnorm, g["f1f2"], m - 1)),
        ("H_{f2f3}(m-1)", localizing_matrix(gnorm, g["f2f3"], m - 1)),
    ]


def check_conditions(
    gamma: MomentSequence, kset: SetDescription, tol: Tolerances = DEFAULT_TOL
) -> list[tuple[str, bool]]:
    """Evaluate the parity-appropriate PSD conditions on normalized data."""
    _require_interval_point(kset)
    gnorm, cn = _normalize(gamma, kset)
    return [(name, _is_psd(mat, tol)) for name, mat in _condition_matrices(gnorm, cn)]


def condition_matrix(
    gamma: MomentSequence, kset: SetDescription, name: str
) -> np.ndarray:
    """Recompute the named condition matrix so callers can audit a failure."""
    _require_interval_point(kset)
    gnorm, cn = _normalize(gamma, kset)
    for cname, mat in _condition_matrices(gnorm, cn):
        if cname == name:
            return mat
    raise InvalidInputError(f"unknown condition name {name!r}")


def _psd_root(mat: np.ndarray, tol: Tolerances) -> np.ndarray:
    """Rank-revealing factor E with E^T E = mat for PSD input."""
    w, u = np.linalg.eigh(symmetrize(mat))
    w_max = max(float(w[-1]), 0.0)
    keep = w > tol.rank_tol * w_max
    return np.sqrt(w[keep])[:, None] * u[:, keep].T


def _schur_corner(d_mat: np.ndarray, b_row: np.ndarray, tol: Tolerances):
    """B D^+ B^T for PSD D with C(B^T) inside C(D), via the root of D.

    Equivalent to the pseudoinverse formula but with half its condition
    exponent: solving E^T Y = B^T against E = D^(1/2) keeps the error at
    eps * kappa(E) instead of eps * kappa(D), and Y^T Y is PSD by
    construction.
    """
    root = _psd_root(d_mat, tol)
    if root.shape[0] == 0:
        return np.zeros((b_row.shape[0], b_row.shape[0]))
    y, *_ = np.linalg.lstsq(root.T, b_row.T, rcond=None)
    return symmetrize(y.T @ y)


def _tilde_gamma0_even(gnorm: MomentSequence, cn: float, tol: Tolerances):
    """Smallest block 0 keeping M_m PSD: (G_1 .. G_m) H_{x^2}(m-1)^+ (...)^T."""
    n = gnorm.top_index
    m = n // 2
    p = gnorm.p
    g = _normalized_generators(cn)
    d_mat = localizing_matrix(gnorm, g["x2"], m - 1)
    b_row = gnorm.blocks[1 : m + 1].transpose(1, 0, 2).reshape(p, m * p)
    return _schur_corner(d_mat, b_row, tol)


def _tilde_gamma0_odd(gnorm: MomentSequence, cn: float, tol: Tolerances):
    """Smallest block 0 keeping H_{c-x}(m) PSD."""
    n = gnorm.top_index
    m = (n - 1) // 2
    p = gnorm.p
    g = _normalized_generators(cn)
    d_mat = localizing_matrix(gnorm, g["x2f3"], m - 1)
    deltas = cn * gnorm.blocks[1 : m + 1] - gnorm.blocks[2 : m + 2]
    b_row = deltas.transpose(1, 0, 2).reshape(p, m * p)
    core = _schur_corner(d_mat, b_row, tol)
    return symmetrize((gnorm.blocks[1] + core) / cn)


def _extend_odd(
    tilde: MomentSequence, cn: float, tol: Tolerances
) -> MomentSequence:
    """Append moments 2m+2 .. 2m+4 via the recurrence carried by H~_{c-x}(m).

    The trimmed sequence satisfies a block-column relation of H~_{c-x}(m):
    its last block column is a combination of the first m with matrix
    coefficients Q_0..Q_{m-1}.  Rewritten on plain moments this gives
    Gamma_{m+j+1} = Gamma_j Qt_0 + sum_{i=1..m} Gamma_{i+j} Qt_i with
    Qt_0 = -c Q_0, Qt_i = Q_{i-1} - c Q_i, Qt_m = c I + Q_{m-1}; applying it
    at j = m+1, m+2, m+3 extends the data to even top index 2m+4.
    """
    n = tilde.top_index
    m = (n - 1) // 2
    p = tilde.p
    scale = tilde.scale()
    g = _normalized_generators(cn)
    h_loc = localizing_matrix(tilde, g["f3"], m)
    g_mat = h_loc[:, : m * p]
    h_col = h_loc[:, m * p :]
    # solve the block-column relation on a root factor of H~ (half the
    # condition exponent of the pseudoinverse on H~ itself), then check the
    # relation on the full matrix
    root = _psd_root(h_loc, tol)
    q_stack, *_ = np.linalg.lstsq(root[:, : m * p], root[:, m * p :], rcond=None)
    resid = float(np.linalg.norm(g_mat @ q_stack - h_col)) / scale
    if resid > EXTENSION_REL:
        raise NumericalFailureError(
            "recurrence relations in H_{c-x}(m) are not satisfiable", residual=resid
        )
    q_blocks = [q_stack[i * p : (i + 1) * p] for i in range(m)]
    qt = [-cn * q_blocks[0]]
    qt += [q_blocks[i - 1] - cn * q_blocks[i] for i in range(1, m)]
    qt.append(cn * np.eye(p) + q_blocks[m - 1])

    blocks = np.zeros((2 * m + 5, p, p))
    blocks[: n + 1] = tilde.blocks
    for j in (m + 1, m + 2, m + 3):
        new = blocks[j] @ qt[0]
        for i in range(1, m + 1):
            new = new + blocks[i + j] @ qt[i]
        asym = float(np.abs(new - new.T).max()) / scale
        if asym > EXTENSION_REL:
            raise NumericalFailureError(
                f"extended moment of degree {m + j + 1} is not symmetric",
                residual=asym,
            )
        blocks[m + j + 1] = (new + new.T) / 2.0
    return MomentSequence(blocks)


def _refit_weights(
    locations, gamma: MomentSequence, project: bool = True
) -> list[np.ndarray] | None:
    """Re-solve the weights at fixed locations against the input moments.

    The extraction pipeline can lose several digits when an atom weight is
    nearly singular (the pseudoinverses see condition numbers ~1/sigma_min).
    With the locations pinned down, the weights solve a plain block
    Vandermonde least-squares problem whose conditioning depends only on the
    atom spacing, so one refit restores those digits.  Returns None when the
    system is too ill-posed to improve on the initial weights.
    """
    xs = np.asarray(locations, dtype=float)
    k = xs.size
    n = gamma.top_index
    if k == 0 or n + 1 < k:
        return None
    vand = np.power.outer(xs, np.arange(n + 1)).T  # (n+1, k)
    rhs = gamma.blocks.reshape(n + 1, -1)
    sol, *_ = np.linalg.lstsq(vand, rhs, rcond=None)
    p = gamma.p
    refined = []
    for j in range(k):
        w_new = symmetrize(sol[j].reshape(p, p))
        if project:
            ew, ev = np.linalg.eigh(w_new)
            w_new = symmetrize((ev * np.clip(ew, 0.0, None)) @ ev.T)
        refined.append(w_new)
    return refined


def _polish_atoms(
    locations: np.ndarray, gamma: MomentSequence, kset: SetDescription
) -> np.ndarray | None:
    """Variable-projection polish of the interval atom locations.

    Weights are re-solved linearly at each step while the locations take
    Gauss-Newton moves against the moment residual, staying clamped inside
    [b, c]; the isolated point never moves.  Recovers the digits a marginal
    rank decision costs the shift-operator spectrum.
    """
    n = gamma.top_index
    p = gamma.p
    xs = np.asarray(locations, dtype=float).copy()
    movable = xs >= kset.b
    if not movable.any():
        return None
    powers = np.arange(n + 1)

    def residual(xs_cur, ws):
        vand = np.power.outer(xs_cur, powers).T
        model = np.einsum("nk,kij->nij", vand, np.asarray(ws))
        return (model - gamma.blocks).ravel()

    ws = _refit_weights(xs, gamma, project=False)
    if ws is None:
        return None
    best_xs = xs.copy()
    best_res = float(np.linalg.norm(residual(xs, ws)))
    for _ in range(8):
        r_vec = residual(xs, ws)
        cols = []
        for j in np.flatnonzero(movable):
            scal = powers * np.power(xs[j], np.clip(powers - 1, 0, None))
            cols.append((scal[:, None, None] * ws[j]).ravel())
        jac = np.array(cols).T
        try:
            delta, *_ = np.linalg.lstsq(jac, -r_vec, rcond=None)
        except np.linalg.LinAlgError:
            break
        xs[movable] = np.clip(xs[movable] + delta, kset.b, kset.c)
        ws = _refit_weights(xs, gamma, project=False)
        if ws is None:
            break
        res = float(np.linalg.norm(residual(xs, ws)))
        if res < best_res:
            best_res = res
            best_xs = xs.copy()
        else:
            break
    return best_xs


def solve(
    gamma: MomentSequence,
    kset: SetDescription,
    tol: Tolerances = DEFAULT_TOL,
    snap_tol: float = 1e-6,
    moment_tol: float = 1e-6,
) -> TmmpOutcome:
    """Decide feasibility and, if feasible, return a representing measure.

    The returned measure carries the largest possible mass at the isolated
    point a.  Failure modes: "infeasible" lists the violated PSD conditions
    by name; "numerical-failure" means the conditions passed but the
    construction could not be completed to ``moment_tol`` (the message says
    where it stopped, never a silently wrong measure).
    """
    _require_interval_point(kset)
    n = gamma.top_index
    if n < 2:
        raise InvalidInputError(f"need top index n >= 2, got {n}")
    gnorm, cn = _normalize(gamma, kset)
    scale = gnorm.scale()

    checks = [
        (name, _is_psd(mat, tol)) for name, mat in _condition_matrices(gnorm, cn)
    ]
    failed = [name for name, ok in checks if not ok]
    if failed:
        return TmmpOutcome(status="infeasible", failed_conditions=failed)

    even = n % 2 == 0
    if even:
        g0t = _tilde_gamma0_even(gnorm, cn, tol)
    else:
        g0t = _tilde_gamma0_odd(gnorm, cn, tol)

    resid_raw = symmetrize(gnorm.blocks[0] - g0t)
    w, u = np.linalg.eigh(resid_raw)
    if w[0] < -tol.psd_tol * scale:
        return TmmpOutcome(
            status="numerical-failure",
            gamma0_tilde=g0t,
            message=(
                f"Gamma_0 - Gamma_0~ has eigenvalue {w[0]:.3e} below "
                f"-psd_tol*scale = {-tol.psd_tol * scale:.3e}"
            ),
        )
    residual_mass = symmetrize((u * np.clip(w, 0.0, None)) @ u.T)

    tilde = gnorm.with_block0(g0t)
    fail = TmmpOutcome(
        status="numerical-failure",
        gamma0_tilde=g0t,
        residual_mass=residual_mass,
        normalized_tilde=tilde,
        normalized_c=cn,
    )
    try:
        seq = tilde if even else _extend_odd(tilde, cn, tol)
    except NumericalFailureError as exc:
        fail.message = str(exc)
        return fail
    v = 1 if even else 2

    # Rank decisions sit on a hard threshold; when the data's condition
    # number reaches 1/rank_tol the cutoff can split a rank plateau and
    # break the shift construction.  Each ladder rung coarsens the cutoff;
    # the gated extraction is tried first, then the ungated harvest whose
    # weights the refit below re-solves.  Every candidate must pass the
    # final moment verification, so no wrong measure can leave this loop.
    def candidates():
        for widen in (1.0, 1e1, 1e2, 1e3, 1e4):
            rung = Tolerances(tol.rank_tol * widen, tol.psd_tol)
            try:
                yield extract_atoms(seq, v=v, tol=rung, moment_tol=moment_tol)
            except (PreconditionError, NumericalFailureError) as exc:
                fail.message = fail.message or str(exc)
        for widen in (1e1, 1e2, 1e3):
            rung = Tolerances(tol.rank_tol * widen, tol.psd_tol)
            try:
                yield approximate_atoms(seq, v=v, tol=rung)
            except (PreconditionError, NumericalFailureError):
                continue

    best: tuple[float, AtomicMatrixMeasure] | None = None
    for nu in candidates():
        finished = _denormalize_and_refit(
            nu, residual_mass, gamma, kset, tol, snap_tol, moment_tol
        )
        if finished is None:
            continue
        measure, mres = finished
        if best is None or mres < best[0]:
            best = (mres, measure)
        if mres <= moment_tol:
            break
    if best is None or best[0] > moment_tol:
        fail.moment_residual = best[0] if best is not None else float("nan")
        fail.message = fail.message or (
            "no recovered measure reproduces the input moments"
        )
        return fail
    mres, measure = best[0], best[1]
    return TmmpOutcome(
        status="feasible",
        measure=measure,
        gamma0_tilde=g0t,
        residual_mass=residual_mass,
        moment_residual=mres,
        normalized_tilde=tilde,
        normalized_c=cn,
    )


def _denormalize_and_refit(
    nu: AtomicMatrixMeasure,
    residual_mass: np.ndarray,
    gamma: MomentSequence,
    kset: SetDescription,
    tol: Tolerances,
    snap_tol: float,
    moment_tol: float,
):
    """Map atoms back to original coordinates, snap onto K, polish weights.

    Returns (measure, residual) or None when an atom lands outside K or the
    weights cannot be assembled.
    """
    alpha, beta = kset.b - kset.a, kset.a
    stol = snap_tol * kset.span
    locations: list[float] = []
    weights: list[np.ndarray] = []
    for y, wgt in zip(nu.locations, nu.weights):
        x = beta + alpha * y
        if abs(x - kset.a) <= stol:
            x = kset.a
        elif kset.b - stol <= x <= kset.c + stol:
            x = min(max(x, kset.b), kset.c)
        else:
            return None
        locations.append(x)
        weights.append(wgt)
    if float(np.abs(residual_mass).max()) > 0.0:
        locations.append(kset.a)
        weights.append(residual_mass)
    if not locations:
        measure = AtomicMatrixMeasure.empty(gamma.p)
        return measure, verify_measure(measure, gamma, kset, moment_tol, snap_tol)[1]
    try:
        measure = AtomicMatrixMeasure(locations, weights, tol)
    except InvalidInputError:
        return None
    best = (verify_measure(measure, gamma, kset, moment_tol, snap_tol)[1], measure)

    variants: list[np.ndarray] = [np.asarray(measure.locations)]
    polished = _polish_atoms(measure.locations, gamma, kset)
    if polished is not None:
        variants.append(polished)
    for locs in variants:
        refined = _refit_weights(locs, gamma, project=True)
        if refined is None:
            continue
        try:
            candidate = AtomicMatrixMeasure(locs, refined, tol)
        except InvalidInputError:
            continue
        res = verify_measure(candidate, gamma, kset, moment_tol, snap_tol)[1]
        if res < best[0]:
            best = (res, candidate)
    return best[1], best[0]


def verify_measure(
    mu: AtomicMatrixMeasure,
    gamma: MomentSequence,
    kset: SetDescription,
    tol: float = 1e-6,
    snap_tol: float = 1e-6,
) -> tuple[bool, float]:
    """Check support, weight positivity and moment match; returns (ok, residual).

    The residual is the largest blockwise Frobenius deviation between the
    measure's moments and ``gamma``, relative to max(1, largest block norm).
    """
    if mu.p != gamma.p:
        raise InvalidInputError(f"size mismatch: measure p={mu.p}, moments p={gamma.p}")
    span = kset.span if np.isfinite(kset.span) else 1.0 + abs(kset.b - kset.a)
    stol = snap_tol * span
    loc_ok = all(kset.contains(float(x), stol) for x in mu.locations)
    psd_ok = all(
        float(np.linalg.eigvalsh(w)[0]) >= -DEFAULT_TOL.psd_tol * max(1.0, float(np.abs(w).max()))
        for w in mu.weights
    )
    rec = moments_of_measure(mu, gamma.top_index)
    dev = np.linalg.norm(
        (rec.blocks - gamma.blocks).reshape(gamma.top_index + 1, -1), axis=1
    )
    norms = np.linalg.norm(gamma.blocks.reshape(gamma.top_index + 1, -1), axis=1)
    residual = float(dev.max() / max(1.0, norms.max()))
    return bool(loc_ok and psd_ok and residual <= tol), residual
