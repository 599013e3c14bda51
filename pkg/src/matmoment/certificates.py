"""Degree-bounded positivity certificates for matrix polynomials.

A certificate for F, positive semidefinite on K = {a} u [b, c], is a list of
terms (g_s, Q_s, d_s): a scalar generator, a PSD Gram matrix over the block
monomial basis V_d(x) = (I_p, x I_p, ..., x^d I_p), and the basis degree.
It asserts F = sum_s g_s * (V_{d_s}^T Q_s V_{d_s}) with every summand degree
bounded by deg F.  The generator family depends on the parity of deg F:

  even:  1,  (x-a)(x-b),  (x-a)(c-x)
  odd:   (x-a),  (c-x),  (x-a)^2 (x-b),  (x-a)(x-b)(c-x)

For the unbounded companion set {a} u [b, +inf) the family is
1, (x-a), (x-a)(x-b), (x-a)^2 (x-b) for either parity; certificates move
between the two worlds through the substitution x -> -1/(x - a + 1), which
acts on Gram matrices by exact congruences (sign-reversal and Pascal
matrices), so transforming a certificate loses no accuracy.

Certificates are found numerically: membership is a convex feasibility
problem (an affine coefficient-match intersected with a product of PSD
cones), solved by alternating projections with Dykstra's correction.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, sqrt

import numpy as np

from .errors import InvalidInputError, PreconditionError, SearchFailureError
from .linalg import DEFAULT_TOL, Tolerances, is_psd, min_eig, pinv, psd_project, symmetrize
from .moments import SetDescription
from .polynomials import MatrixPolynomial, ScalarPoly, mul_scalar

__all__ = [
    "CertificateTerm",
    "Certificate",
    "Refutation",
    "generator_set",
    "reconstruct",
    "verify_certificate",
    "extract_squares",
    "search_certificate",
    "refute",
    "transform_certificate",
]


@dataclass(frozen=True)
class CertificateTerm:
    generator: ScalarPoly
    gram: np.ndarray
    basis_degree: int

    def __post_init__(self):
        n = (self.basis_degree + 1)
        g = np.asarray(self.gram, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % n != 0:
            raise InvalidInputError(
                f"gram of shape {g.shape} does not fit basis degree {self.basis_degree}"
            )
        if not np.all(np.isfinite(g)):
            raise InvalidInputError("non-finite gram matrix")
        object.__setattr__(self, "gram", symmetrize(g))

    @property
    def p(self) -> int:
        return self.gram.shape[0] // (self.basis_degree + 1)


@dataclass
class Certificate:
    """Membership witness for the degree-``degree`` truncated quadratic module."""

    kset: SetDescription
    degree: int
    p: int
    terms: list[CertificateTerm]

    @property
    def parity(self) -> str:
        return "even" if self.degree % 2 == 0 else "odd"

    def __post_init__(self):
        for t in self.terms:
            if t.p != self.p:
                raise InvalidInputError("certificate terms disagree on matrix size")


@dataclass(frozen=True)
class Refutation:
    """A point of K together with a direction along which F is negative."""

    point: float
    min_eig: float
    witness: np.ndarray


def generator_set(kset: SetDescription, degree: int) -> list[ScalarPoly]:
    """Canonical generators for certificates of the given total degree."""
    one = ScalarPoly([1.0])
    f1 = ScalarPoly([-kset.a, 1.0])
    fb = ScalarPoly([-kset.b, 1.0])
    if kset.kind == "halfline_point":
        return [one, f1, f1 * fb, f1 * f1 * fb]
    f2 = f1 * fb
    f3 = ScalarPoly([kset.c, -1.0])
    if degree % 2 == 0:
        return [one, f2, f1 * f3]
    return [f1, f3, f1 * f2, f2 * f3]


def _sigma_coeffs(gram: np.ndarray, d: int, p: int) -> np.ndarray:
    """Coefficients of V_d(x)^T Q V_d(x): sigma_k = sum_{i+j=k} Q[block i, block j]."""
    out = np.zeros((2 * d + 1, p, p))
    for i in range(d + 1):
        for j in range(d + 1):
            out[i + j] += gram[i * p : (i + 1) * p, j * p : (j + 1) * p]
    return out


def _term_polynomial(term: CertificateTerm) -> MatrixPolynomial:
    sigma = MatrixPolynomial(_sigma_coeffs(term.gram, term.basis_degree, term.p))
    return mul_scalar(term.generator, sigma)


def reconstruct(cert: Certificate) -> MatrixPolynomial:
    """Expand sum_s g_s (V^T Q_s V) by exact coefficient arithmetic."""
    out = MatrixPolynomial.zero(cert.p)
    for term in cert.terms:
        out = out + _term_polynomial(term)
    return out


def _poly_scale(f: MatrixPolynomial) -> float:
    norms = np.linalg.norm(f.coeffs.reshape(f.coeffs.shape[0], -1), axis=1)
    return max(1.0, float(norms.max()))


def _match_generators(cert: Certificate) -> None:
    canonical = generator_set(cert.kset, cert.degree)
    seen: set[int] = set()
    for term in cert.terms:
        hit = None
        for idx, g in enumerate(canonical):
            if term.generator.coeffs.size == g.coeffs.size and np.allclose(
                term.generator.coeffs, g.coeffs, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(g.coeffs).max()))
            ):
                hit = idx
                break
        if hit is None:
            raise InvalidInputError(
                f"generator {term.generator!r} is not in the canonical family "
                f"for this set and degree parity"
            )
        if hit in seen:
            raise InvalidInputError("duplicate generator in certificate")
        seen.add(hit)


def verify_certificate(
    f: MatrixPolynomial,
    cert: Certificate,
    tol: Tolerances = DEFAULT_TOL,
    residual_tol: float = 1e-8,
) -> tuple[bool, float]:
    """Check grams PSD, degree bounds, and coefficient match; (ok, residual).

    The residual is the maximal blockwise Frobenius deviation between the
    reconstruction and ``f``, relative to max(1, largest coefficient norm).
    """
    if f.p != cert.p:
        raise InvalidInputError(f"size mismatch: F has p={f.p}, certificate p={cert.p}")
    if not f.is_symmetric():
        raise InvalidInputError("certified polynomial must have symmetric coefficients")
    _match_generators(cert)
    grams_ok = all(is_psd(t.gram, tol) for t in cert.terms)
    degrees_ok = all(
        t.generator.degree + 2 * t.basis_degree <= f.degree for t in cert.terms
    )
    rec = reconstruct(cert)
    top = max(rec.degree, f.degree) + 1
    dev = np.zeros((top, f.p, f.p))
    dev[: rec.coeffs.shape[0]] += rec.coeffs
    dev[: f.coeffs.shape[0]] -= f.coeffs
    residual = float(
        np.linalg.norm(dev.reshape(top, -1), axis=1).max()
    ) / _poly_scale(f)
    return bool(grams_ok and degrees_ok and residual <= residual_tol), residual


def extract_squares(
    gram, basis_degree: int, p: int, tol: Tolerances = DEFAULT_TOL
) -> list[MatrixPolynomial]:
    """Split a PSD Gram matrix into explicit symmetric-square factors.

    Each kept eigenpair (lambda, u) yields one single-row matrix polynomial
    H(x) = sqrt(lambda) * sum_i u_i^T x^i (embedded in the first row of a
    p x p coefficient, the rest zero), and sum_k H_k^T H_k reproduces
    V_d^T Q V_d.  Eigenpairs with lambda <= psd_tol * lambda_max are dropped.
    """
    g = symmetrize(gram)
    n = (basis_degree + 1) * p
    if g.shape != (n, n):
        raise InvalidInputError(
            f"gram shape {g.shape} does not match basis degree {basis_degree}, p={p}"
        )
    w, u = np.linalg.eigh(g)
    lam_max = float(w[-1]) if w.size else 0.0
    if w.size and float(w[0]) < -tol.psd_tol * max(1.0, abs(lam_max)):
        raise PreconditionError(
            f"gram matrix is indefinite (min eig {float(w[0]):.3e})"
        )
    factors = []
    for k in range(w.size - 1, -1, -1):
        if w[k] <= tol.psd_tol * max(lam_max, 0.0):
            break
        vec = sqrt(float(w[k])) * u[:, k]
        coeffs = np.zeros((basis_degree + 1, p, p))
        coeffs[:, 0, :] = vec.reshape(basis_degree + 1, p)
        factors.append(MatrixPolynomial(coeffs))
    return factors


# ---------------------------------------------------------------------------
# numerical search: alternating projections with Dykstra's correction
# ---------------------------------------------------------------------------


def _svec(m: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(m.shape[0])
    out = m[iu].copy()
    out[iu[0] != iu[1]] *= sqrt(2.0)
    return out


def _smat(v: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n))
    iu = np.triu_indices(n)
    vals = v.copy()
    vals[iu[0] != iu[1]] /= sqrt(2.0)
    out[iu] = vals
    return out + out.T - np.diag(np.diag(out))


class _GramSpace:
    """Bookkeeping for the linear map from Gram tuples to poly coefficients."""

    def __init__(self, kset: SetDescription, degree: int, p: int):
        self.p = p
        self.degree = degree
        gens = [g for g in generator_set(kset, degree) if g.degree <= degree]
        self.gens = gens
        self.basis_degrees = [(degree - g.degree) // 2 for g in gens]
        self.sizes = [(d + 1) * p for d in self.basis_degrees]
        self.svec_len = [n * (n + 1) // 2 for n in self.sizes]
        self.offsets = np.concatenate([[0], np.cumsum(self.svec_len)])
        self.total = int(self.offsets[-1])
        self.coef_map = self._build_map()
        self.coef_pinv = np.linalg.pinv(self.coef_map)

    def _build_map(self) -> np.ndarray:
        p, n = self.p, self.degree
        sp = p * (p + 1) // 2
        rows = (n + 1) * sp
        a = np.zeros((rows, self.total))
        col = 0
        for g, d, size in zip(self.gens, self.basis_degrees, self.sizes):
            iu = np.triu_indices(size)
            for r, c in zip(*iu):
                basis = np.zeros((size, size))
                if r == c:
                    basis[r, c] = 1.0
                else:
                    basis[r, c] = basis[c, r] = 1.0 / sqrt(2.0)
                sig = _sigma_coeffs(basis, d, p)
                poly = np.zeros((n + 1, p, p))
                for k, gk in enumerate(g.coeffs):
                    if gk != 0.0:
                        poly[k : k + sig.shape[0]] += gk * sig
                a[:, col] = np.concatenate([_svec(poly[i]) for i in range(n + 1)])
                col += 1
        return a

    def pack_poly(self, f: MatrixPolynomial) -> np.ndarray:
        coeffs = np.zeros((self.degree + 1, self.p, self.p))
        coeffs[: f.coeffs.shape[0]] = f.coeffs
        return np.concatenate([_svec(coeffs[i]) for i in range(self.degree + 1)])

    def grams(self, vec: np.ndarray) -> list[np.ndarray]:
        return [
            _smat(vec[self.offsets[i] : self.offsets[i + 1]], self.sizes[i])
            for i in range(len(self.gens))
        ]

    def pack_grams(self, grams: list[np.ndarray]) -> np.ndarray:
        return np.concatenate([_svec(g) for g in grams])

    def certificate(self, kset, grams) -> Certificate:
        terms = [
            CertificateTerm(g, q, d)
            for g, q, d in zip(self.gens, grams, self.basis_degrees)
        ]
        return Certificate(kset, self.degree, self.p, terms)


def search_certificate(
    f: MatrixPolynomial,
    kset: SetDescription,
    parity: str | None = None,
    max_iter: int = 10000,
    step_tol: float = 0.0,
    tol: Tolerances = DEFAULT_TOL,
    residual_tol: float = 1e-6,
) -> Certificate:
    """Find a certificate for F by PSD/affine alternating projections.

    Deterministic given the zero initialization.  Returns as soon as a
    candidate passes ``verify_certificate`` at ``residual_tol``; raises
    SearchFailureError with the final infeasibility residual when the
    iteration budget is exhausted (or the iterates stall below ``step_tol``).
    """
    if not f.is_symmetric():
        raise InvalidInputError("can only certify symmetric matrix polynomials")
    n = f.degree
    if parity is not None:
        want = "even" if n % 2 == 0 else "odd"
        if parity != want:
            raise InvalidInputError(
                f"parity {parity!r} does not match deg F = {n}"
            )
    space = _GramSpace(kset, n, f.p)
    target = space.pack_poly(f)
    scale = _poly_scale(f)

    def project_affine(vec: np.ndarray) -> np.ndarray:
        return vec - space.coef_pinv @ (space.coef_map @ vec - target)

    def project_cone(vec: np.ndarray) -> np.ndarray:
        return space.pack_grams([psd_project(g) for g in space.grams(vec)])

    x = np.zeros(space.total)
    cone_corr = np.zeros(space.total)
    affine_corr = np.zeros(space.total)
    last_neg = float("inf")
    for _ in range(max_iter):
        y = project_cone(x + cone_corr)
        cone_corr = x + cone_corr - y
        x_new = project_affine(y + affine_corr)
        affine_corr = y + affine_corr - x_new
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        grams = space.grams(x)
        last_neg = max(0.0, -min(min_eig(g) for g in grams)) / scale
        if last_neg <= tol.psd_tol:
            cert = space.certificate(kset, [psd_project(g) for g in grams])
            ok, _ = verify_certificate(f, cert, tol, residual_tol)
            if ok:
                return cert
        if step_tol > 0.0 and step <= step_tol:
            break
    raise SearchFailureError(
        "no certificate found within the iteration budget", residual=last_neg
    )


def _golden_min(fun, lo: float, hi: float, iters: int = 80):
    """Golden-section minimization of a unimodal-ish 1-d function."""
    ratio = (sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - ratio * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + ratio * (b - a)
            fd = fun(d)
    mid = (a + b) / 2.0
    return mid, fun(mid)


def refute(
    f: MatrixPolynomial, kset: SetDescription, grid_density: int = 512
) -> Refutation | None:
    """Search K for a point where F has a negative eigenvalue.

    Scans the isolated point plus a uniform grid on [b, c], then refines the
    best grid cell by golden section.  Returns None when the smallest
    eigenvalue found stays above -1e-9 * max(1, coefficient scale).
    """
    if kset.kind != "interval_point":
        raise InvalidInputError("refutation scan requires a bounded set")
    scale = _poly_scale(f)

    def lam_min(x: float) -> float:
        return float(np.linalg.eigvalsh(symmetrize(f.eval(x)))[0])

    xs = np.linspace(kset.b, kset.c, max(2, grid_density))
    evs = f.eval_many(xs)
    vals = np.linalg.eigvalsh((evs + evs.transpose(0, 2, 1)) / 2.0)[:, 0]
    best_idx = int(np.argmin(vals))
    lo = xs[max(0, best_idx - 1)]
    hi = xs[min(len(xs) - 1, best_idx + 1)]
    x_int, v_int = _golden_min(lam_min, float(lo), float(hi))
    if vals[best_idx] < v_int:
        x_int, v_int = float(xs[best_idx]), float(vals[best_idx])

    x_best, v_best = x_int, v_int
    v_a = lam_min(kset.a)
    if v_a < v_best:
        x_best, v_best = kset.a, v_a

    if v_best >= -1e-9 * scale:
        return None
    w, u = np.linalg.eigh(symmetrize(f.eval(x_best)))
    return Refutation(point=float(x_best), min_eig=float(w[0]), witness=u[:, 0].copy())


# ---------------------------------------------------------------------------
# Moebius transport between {a} u [b, c] and {a} u [b, +inf)
# ---------------------------------------------------------------------------


def _reversal(d: int) -> np.ndarray:
    """R with R V_d(u) = u^d V_d(-1/u): R[j, d-j] = (-1)^j."""
    r = np.zeros((d + 1, d + 1))
    for j in range(d + 1):
        r[j, d - j] = (-1.0) ** j
    return r


def _pascal(d: int, s: float) -> np.ndarray:
    """T with V_d(x + s) = T V_d(x): T[i, j] = comb(i, j) s^(i-j)."""
    t = np.zeros((d + 1, d + 1))
    for i in range(d + 1):
        for j in range(i + 1):
            t[i, j] = comb(i, j) * (s ** (i - j))
    return t


def _congruence(gram: np.ndarray, mat: np.ndarray, p: int) -> np.ndarray:
    big = np.kron(mat, np.eye(p))
    return symmetrize(big.T @ gram @ big)


def _embed(gram: np.ndarray, d_old: int, d_new: int, p: int, shift: int) -> np.ndarray:
    """Place a basis-d_old gram into a basis-d_new gram at block offset ``shift``."""
    if shift < 0 or d_old + shift > d_new:
        raise InvalidInputError("gram embedding out of range")
    out = np.zeros(((d_new + 1) * p, (d_new + 1) * p))
    lo = shift * p
    hi = lo + (d_old + 1) * p
    out[lo:hi, lo:hi] = gram
    return out


def _canonical_index(term: CertificateTerm, canonical: list[ScalarPoly]) -> int:
    for idx, g in enumerate(canonical):
        if term.generator.coeffs.size == g.coeffs.size and np.allclose(
            term.generator.coeffs, g.coeffs, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(g.coeffs).max()))
        ):
            return idx
    raise InvalidInputError(f"generator {term.generator!r} is not canonical")


def _merge_terms(
    kset: SetDescription,
    degree: int,
    p: int,
    mapped: list[tuple[int, np.ndarray, int]],
) -> Certificate:
    """Combine (target index, gram, basis degree) triples into one certificate."""
    canonical = generator_set(kset, degree)
    by_gen: dict[int, list[tuple[np.ndarray, int]]] = {}
    for idx, gram, d in mapped:
        by_gen.setdefault(idx, []).append((gram, d))
    terms = []
    for idx in sorted(by_gen):
        entries = by_gen[idx]
        d_max = max(d for _, d in entries)
        total = np.zeros(((d_max + 1) * p, (d_max + 1) * p))
        for gram, d in entries:
            total += _embed(gram, d, d_max, p, 0)
        terms.append(CertificateTerm(canonical[idx], symmetrize(total), d_max))
    return Certificate(kset, degree, p, terms)


def transform_certificate(
    cert: Certificate, direction: str, a: float
) -> Certificate:
    """Transport a certificate through x -> -1/(x - a + 1) term by term.

    direction="to_unbounded" takes a certificate on the bounded image
    {-1} u [-1/(b-a+1), 0] to one on {a} u [b, +inf); "from_unbounded" goes
    the other way.  Gram matrices change by exact congruences and positive
    scalings, so positivity and the degree bound are preserved.  One corner
    is unreachable term by term: an even-degree unbounded certificate with a
    nonzero (x-a)^2 (x-b) term has no counterpart in the even bounded family
    and is rejected.
    """
    p = cert.p
    n = cert.degree
    if direction == "to_unbounded":
        if cert.kset.kind != "interval_point":
            raise InvalidInputError("to_unbounded needs a bounded certificate")
        if abs(cert.kset.a + 1.0) > 1e-9 or abs(cert.kset.c) > 1e-9:
            raise InvalidInputError(
                "bounded certificate must live on {-1} u [b~, 0] to be pulled back"
            )
        big_b = -1.0 / cert.kset.b
        if big_b <= 1.0:
            raise InvalidInputError("inner endpoint must satisfy -1 < b~ < 0")
        target = SetDescription.halfline_point(a, a + big_b - 1.0)
        canonical = generator_set(cert.kset, n)
        # canonical index -> (target index, positive scale)
        if n % 2 == 0:
            table = {0: (0, 1.0), 1: (2, 1.0 / big_b), 2: (1, 1.0)}
        else:
            table = {0: (1, 1.0), 1: (0, 1.0), 2: (3, 1.0 / big_b), 3: (2, 1.0 / big_b)}
        mapped = []
        for term in cert.terms:
            if not term.gram.any():
                continue
            src = _canonical_index(term, canonical)
            tgt, kappa = table[src]
            d = term.basis_degree
            e = n - term.generator.degree - 2 * d
            if e < 0 or e % 2:
                raise InvalidInputError(
                    "term degree bookkeeping inconsistent with certificate degree"
                )
            basis_change = _reversal(d) @ _pascal(d, 1.0 - a)
            gram = kappa * _congruence(term.gram, basis_change, p)
            mapped.append((tgt, _embed(gram, d, d + e // 2, p, e // 2), d + e // 2))
        return _merge_terms(target, n, p, mapped)

    if direction == "from_unbounded":
        if cert.kset.kind != "halfline_point":
            raise InvalidInputError("from_unbounded needs an unbounded certificate")
        if abs(cert.kset.a - a) > 1e-9 * max(1.0, abs(a)):
            raise InvalidInputError("isolated point disagrees with the certificate")
        big_b = cert.kset.b - cert.kset.a + 1.0
        target = SetDescription.interval_point(-1.0, -1.0 / big_b, 0.0)
        canonical = generator_set(cert.kset, n)
        even = n % 2 == 0
        # src index -> (target index, scale, uses one power of f3~ = -y)
        if even:
            table = {0: (0, 1.0, False), 1: (2, 1.0, True), 2: (1, big_b, False)}
        else:
            table = {
                0: (1, 1.0, True),
                1: (0, 1.0, False),
                2: (3, big_b, True),
                3: (2, big_b, False),
            }
        mapped = []
        for term in cert.terms:
            if not term.gram.any():
                continue
            src = _canonical_index(term, canonical)
            if even and src == 3:
                raise InvalidInputError(
                    "even-degree (x-a)^2 (x-b) term has no bounded counterpart"
                )
            tgt, kappa, uses_f3 = table[src]
            d = term.basis_degree
            e = n - term.generator.degree - 2 * d
            if e < 0 or (e % 2) != (1 if uses_f3 else 0):
                raise InvalidInputError(
                    "term degree bookkeeping inconsistent with certificate degree"
                )
            shift = (e - 1) // 2 if uses_f3 else e // 2
            basis_change = _pascal(d, a - 1.0) @ _reversal(d)
            gram = kappa * _congruence(term.gram, basis_change, p)
            mapped.append((tgt, _embed(gram, d, d + shift, p, shift), d + shift))
        return _merge_terms(target, n, p, mapped)

    raise InvalidInputError(f"unknown direction {direction!r}")
