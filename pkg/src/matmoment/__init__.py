"""matmoment: truncated matrix moment problems on {a} u [b, c].

The library decides whether finitely many symmetric-matrix moments come
from a positive matrix measure supported on a union of a point and a
compact interval, recovers such a measure explicitly when they do, and on
the dual side verifies and searches degree-bounded matrix sum-of-squares
positivity certificates.
"""

from .errors import (
    InvalidInputError,
    MatMomentError,
    NumericalFailureError,
    PreconditionError,
    SearchFailureError,
)
from .linalg import (
    Tolerances,
    column_space_contained,
    is_psd,
    min_eig,
    pinv,
    psd_project,
    rank,
    schur_complement,
    symmetrize,
)
from .polynomials import (
    MatrixPolynomial,
    ScalarPoly,
    affine_substitute,
    mobius_inverse,
    mobius_transform,
    mul_scalar,
)
from .moments import (
    AtomicMatrixMeasure,
    MomentSequence,
    SetDescription,
    affine_transform_moments,
    b_matrix,
    is_coflat,
    localizing_matrix,
    moment_matrix,
    moments_of_measure,
    riesz,
    riesz_pairing,
)
from .flat_extension import (
    FlatReport,
    atom_zero_count,
    check_flat_conditions,
    extract_atoms,
)
from .tmmp import TmmpOutcome, check_conditions, condition_matrix, solve, verify_measure
from .certificates import (
    Certificate,
    CertificateTerm,
    Refutation,
    extract_squares,
    generator_set,
    reconstruct,
    refute,
    search_certificate,
    transform_certificate,
    verify_certificate,
)
from .generate import random_certificate, random_measure

__version__ = "0.1.0"

__all__ = [
    "AtomicMatrixMeasure",
    "Certificate",
    "CertificateTerm",
    "FlatReport",
    "InvalidInputError",
    "MatMomentError",
    "MatrixPolynomial",
    "MomentSequence",
    "NumericalFailureError",
    "PreconditionError",
    "Refutation",
    "ScalarPoly",
    "SearchFailureError",
    "SetDescription",
    "TmmpOutcome",
    "Tolerances",
    "affine_substitute",
    "affine_transform_moments",
    "atom_zero_count",
    "b_matrix",
    "check_conditions",
    "check_flat_conditions",
    "column_space_contained",
    "condition_matrix",
    "extract_atoms",
    "extract_squares",
    "generator_set",
    "is_coflat",
    "is_psd",
    "localizing_matrix",
    "min_eig",
    "mobius_inverse",
    "mobius_transform",
    "moment_matrix",
    "moments_of_measure",
    "mul_scalar",
    "pinv",
    "psd_project",
    "random_certificate",
    "random_measure",
    "rank",
    "reconstruct",
    "refute",
    "riesz",
    "riesz_pairing",
    "schur_complement",
    "search_certificate",
    "solve",
    "symmetrize",
    "transform_certificate",
    "verify_certificate",
    "verify_measure",
]
