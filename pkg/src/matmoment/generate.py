"""Seeded random instances for tests and the CLI.

Everything is driven by a numpy Generator, so a fixed seed reproduces the
same instance byte for byte.
"""

from __future__ import annotations

import numpy as np

from .certificates import Certificate, CertificateTerm, generator_set
from .errors import InvalidInputError
from .moments import AtomicMatrixMeasure, SetDescription

__all__ = ["random_measure", "random_certificate"]

# Interval atoms are resampled until pairwise gaps exceed this fraction of
# (c - b); clustered atoms make the recovered shift operator ill-conditioned
# without exercising anything new.
MIN_SEPARATION = 0.02


def random_measure(
    rng: np.random.Generator,
    kset: SetDescription,
    p: int,
    n_atoms: int,
    point_prob: float = 0.5,
) -> AtomicMatrixMeasure:
    """Measure with exactly ``n_atoms`` atoms on K, weights W W^T.

    With probability ``point_prob`` one atom sits at the isolated point a;
    the rest are drawn uniformly from [b, c] with a minimal separation.
    """
    if kset.kind != "interval_point":
        raise InvalidInputError("random measures need a bounded set")
    if n_atoms < 1 or p < 1:
        raise InvalidInputError("need n_atoms >= 1 and p >= 1")
    locations: list[float] = []
    include_point = bool(rng.random() < point_prob)
    k_interval = n_atoms - 1 if include_point else n_atoms
    gap = MIN_SEPARATION * (kset.c - kset.b)
    interval: list[float] = []
    for _ in range(10000):
        if len(interval) == k_interval:
            break
        x = float(rng.uniform(kset.b, kset.c))
        if all(abs(x - y) > gap for y in interval):
            interval.append(x)
    else:
        raise InvalidInputError("could not place separated atoms; lower n_atoms")
    if include_point:
        locations.append(kset.a)
    locations.extend(sorted(interval))
    weights = []
    for _ in locations:
        w = rng.standard_normal((p, p))
        weights.append(w @ w.T)
    return AtomicMatrixMeasure(locations, weights)


def random_certificate(
    rng: np.random.Generator,
    kset: SetDescription,
    p: int,
    degree: int,
    gram_scale: float = 1.0,
) -> Certificate:
    """Certificate with random PSD grams; its reconstruction is feasible by construction."""
    if degree < 0 or p < 1:
        raise InvalidInputError("need degree >= 0 and p >= 1")
    gens = [g for g in generator_set(kset, degree) if g.degree <= degree]
    if not gens:
        raise InvalidInputError(f"no generator fits degree {degree} on this set")
    terms = []
    for g in gens:
        d = (degree - g.degree) // 2
        size = (d + 1) * p
        w = rng.standard_normal((size, size)) * gram_scale
        terms.append(CertificateTerm(g, w @ w.T / size, d))
    return Certificate(kset, degree, p, terms)
