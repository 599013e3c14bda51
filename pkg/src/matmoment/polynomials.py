"""Scalar and matrix polynomials in one variable.

Coefficients are stored in ascending degree order.  Besides evaluation and
ring arithmetic, this module provides the two substitutions the certificate
machinery relies on: affine changes of variable and the degree-reversing
Moebius substitution x -> -1/(x - a + 1) that swaps a bounded
interval-plus-point set with an unbounded one.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "ScalarPoly",
    "MatrixPolynomial",
    "mul_scalar",
    "add",
    "mobius_transform",
    "mobius_inverse",
    "affine_substitute",
]

# Relative trimming threshold for trailing coefficients produced by
# floating-point convolutions.
TRIM_REL = 1e-12


def _trim(coeffs: np.ndarray) -> np.ndarray:
    """Drop trailing coefficients below TRIM_REL relative to the largest."""
    flat = np.abs(coeffs).reshape(coeffs.shape[0], -1).max(axis=1)
    top = flat.max() if flat.size else 0.0
    cut = TRIM_REL * top
    keep = coeffs.shape[0]
    while keep > 1 and flat[keep - 1] <= cut:
        keep -= 1
    return coeffs[:keep]


class ScalarPoly:
    """Univariate real polynomial; ``coeffs[i]`` multiplies x**i."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise InvalidInputError("scalar polynomial needs a 1-d coefficient list")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("non-finite polynomial coefficient")
        self.coeffs = _trim(c)

    @classmethod
    def constant(cls, value: float) -> "ScalarPoly":
        return cls([value])

    @classmethod
    def x(cls) -> "ScalarPoly":
        return cls([0.0, 1.0])

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def __add__(self, other: "ScalarPoly") -> "ScalarPoly":
        n = max(self.coeffs.size, other.coeffs.size)
        out = np.zeros(n)
        out[: self.coeffs.size] += self.coeffs
        out[: other.coeffs.size] += other.coeffs
        return ScalarPoly(out)

    def __neg__(self) -> "ScalarPoly":
        return ScalarPoly(-self.coeffs)

    def __sub__(self, other: "ScalarPoly") -> "ScalarPoly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ScalarPoly):
            return ScalarPoly(np.convolve(self.coeffs, other.coeffs))
        if np.isscalar(other):
            return ScalarPoly(self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, ScalarPoly) and np.array_equal(
            self.coeffs, other.coeffs
        )

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self) -> str:
        return f"ScalarPoly({self.coeffs.tolist()})"


class MatrixPolynomial:
    """Matrix polynomial sum_i C_i x**i with square p x p coefficients.

    Coefficients flowing through moment pairings and certificates are
    symmetric; square-root factors returned by ``extract_squares`` are not,
    so symmetry is checked where an operation needs it rather than enforced
    structurally.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim == 2:
            c = c[None, :, :]
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[1] == 0:
            raise InvalidInputError(
                f"matrix polynomial needs shape (deg+1, p, p), got {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("non-finite matrix coefficient")
        self.coeffs = _trim(c)

    @classmethod
    def constant(cls, mat) -> "MatrixPolynomial":
        return cls(np.asarray(mat, dtype=float)[None, :, :])

    @classmethod
    def zero(cls, p: int) -> "MatrixPolynomial":
        return cls(np.zeros((1, p, p)))

    @classmethod
    def from_scalar(cls, f: ScalarPoly, p: int) -> "MatrixPolynomial":
        """f(x) * I_p."""
        return cls(f.coeffs[:, None, None] * np.eye(p))

    @property
    def p(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def is_zero(self) -> bool:
        return self.coeffs.shape[0] == 1 and not self.coeffs.any()

    def is_symmetric(self, rel: float = 1e-9) -> bool:
        scale = max(1.0, float(np.abs(self.coeffs).max()))
        dev = float(np.abs(self.coeffs - self.coeffs.transpose(0, 2, 1)).max())
        return dev <= rel * scale

    @property
    def T(self) -> "MatrixPolynomial":
        return MatrixPolynomial(self.coeffs.transpose(0, 2, 1))

    def eval(self, x: float) -> np.ndarray:
        """Horner evaluation at a scalar point."""
        if not np.isfinite(x):
            raise InvalidInputError("evaluation point must be finite")
        out = self.coeffs[-1].copy()
        for k in range(self.coeffs.shape[0] - 2, -1, -1):
            out = out * x + self.coeffs[k]
        return out

    def eval_many(self, xs) -> np.ndarray:
        """Vectorized evaluation; returns shape (len(xs), p, p)."""
        xs = np.asarray(xs, dtype=float)
        powers = np.power.outer(xs, np.arange(self.coeffs.shape[0]))
        return np.einsum("nk,kij->nij", powers, self.coeffs)

    def __add__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        if self.p != other.p:
            raise InvalidInputError(f"size mismatch: {self.p} vs {other.p}")
        n = max(self.coeffs.shape[0], other.coeffs.shape[0])
        out = np.zeros((n, self.p, self.p))
        out[: self.coeffs.shape[0]] += self.coeffs
        out[: other.coeffs.shape[0]] += other.coeffs
        return MatrixPolynomial(out)

    def __neg__(self) -> "MatrixPolynomial":
        return MatrixPolynomial(-self.coeffs)

    def __sub__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ScalarPoly):
            return mul_scalar(other, self)
        if np.isscalar(other):
            return MatrixPolynomial(self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        """Full matrix-product convolution (F G)_k = sum_i F_i G_{k-i}."""
        if self.p != other.p:
            raise InvalidInputError(f"size mismatch: {self.p} vs {other.p}")
        na, nb = self.coeffs.shape[0], other.coeffs.shape[0]
        out = np.zeros((na + nb - 1, self.p, self.p))
        for i in range(na):
            out[i : i + nb] += self.coeffs[i] @ other.coeffs
        return MatrixPolynomial(out)

    def __repr__(self) -> str:
        return f"MatrixPolynomial(p={self.p}, degree={self.degree})"


def mul_scalar(f: ScalarPoly, g: MatrixPolynomial) -> MatrixPolynomial:
    """Coefficient-wise convolution f(x) * G(x)."""
    out = np.zeros((f.coeffs.size + g.coeffs.shape[0] - 1, g.p, g.p))
    for i, fi in enumerate(f.coeffs):
        if fi != 0.0:
            out[i : i + g.coeffs.shape[0]] += fi * g.coeffs
    return MatrixPolynomial(out)


def add(f: MatrixPolynomial, g: MatrixPolynomial) -> MatrixPolynomial:
    return f + g


def _affine_coeffs(coeffs: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Coefficients of sum_i c_i (alpha x + beta)**i via binomial expansion."""
    n = coeffs.shape[0] - 1
    out = np.zeros_like(coeffs)
    for i in range(n + 1):
        ci = coeffs[i]
        if not np.any(ci):
            continue
        for j in range(i + 1):
            out[j] = out[j] + comb(i, j) * (alpha**j) * (beta ** (i - j)) * ci
    return out


def affine_substitute(
    f: MatrixPolynomial, alpha: float, beta: float
) -> MatrixPolynomial:
    """Return F(alpha x + beta).  alpha must be nonzero."""
    if alpha == 0.0 or not np.isfinite(alpha) or not np.isfinite(beta):
        raise InvalidInputError("affine substitution needs finite alpha != 0")
    return MatrixPolynomial(_affine_coeffs(f.coeffs, alpha, beta))


def affine_substitute_scalar(f: ScalarPoly, alpha: float, beta: float) -> ScalarPoly:
    if alpha == 0.0 or not np.isfinite(alpha) or not np.isfinite(beta):
        raise InvalidInputError("affine substitution needs finite alpha != 0")
    return ScalarPoly(_affine_coeffs(f.coeffs[:, None, None], alpha, beta)[:, 0, 0])


def mobius_transform(f: MatrixPolynomial, a: float) -> MatrixPolynomial:
    """Return G(x) = (-x)**deg(F) * F(-1/x + a - 1).

    G is a polynomial of degree <= deg(F).  It is positive semidefinite on
    the bounded set {-1} u [-1/(b-a+1), 0] whenever F is positive
    semidefinite on {a} u [b, +inf).  Expansion is done symbolically over the
    common denominator, so the result is exact up to rounding.
    """
    if f.is_zero():
        raise InvalidInputError("mobius transform of the zero polynomial")
    n = f.degree
    p = f.p
    out = np.zeros((n + 1, p, p))
    # F(-1/x + a - 1) = sum_i F_i x^{-i} ((a-1) x - 1)^i, so
    # (-x)^n F(...) = (-1)^n sum_i F_i x^{n-i} ((a-1) x - 1)^i.
    base = np.array([-1.0, a - 1.0])
    power = np.array([1.0])
    for i in range(n + 1):
        ci = f.coeffs[i]
        if np.any(ci):
            for j, scalar in enumerate(power):
                out[n - i + j] += scalar * ci
        power = np.convolve(power, base)
    if n % 2:
        out = -out
    return MatrixPolynomial(out)


def mobius_inverse(g: MatrixPolynomial, a: float, deg_f: int) -> MatrixPolynomial:
    """Undo ``mobius_transform``: return (x-a+1)**deg_f * G(-1/(x-a+1)).

    ``deg_f`` is the degree of the original polynomial; it may exceed
    deg(G) when the transform dropped degree.
    """
    if deg_f < g.degree:
        raise InvalidInputError(
            f"target degree {deg_f} is below deg G = {g.degree}"
        )
    p = g.p
    # In the variable u = x - a + 1:  u^deg_f G(-1/u) = sum_j (-1)^j G_j u^{deg_f - j}.
    in_u = np.zeros((deg_f + 1, p, p))
    for j in range(g.degree + 1):
        in_u[deg_f - j] = ((-1.0) ** j) * g.coeffs[j]
    return MatrixPolynomial(_affine_coeffs(in_u, 1.0, 1.0 - a))
