"""Shared generators for the test suite.

All randomness flows through seeded PCG64 generators so every test is
reproducible on its own.
"""

import numpy as np

from joincond import (
    CPDecomposition,
    RankOneTerm,
    Shape,
    SubspaceTuple,
    SymmetricRankOneTerm,
    WaringDecomposition,
)


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(seed))


def unit(v):
    return v / np.linalg.norm(v)


def random_unit(rng, m):
    return unit(rng.standard_normal(m))


def random_cpd(rng, dims, rank, mu_range=(0.5, 2.0)):
    terms = []
    for _ in range(rank):
        mu = float(rng.uniform(*mu_range))
        vectors = tuple(random_unit(rng, m) for m in dims)
        terms.append(RankOneTerm(mu, vectors))
    return CPDecomposition(Shape(tuple(dims)), tuple(terms))


def random_waring(rng, m, d, rank, signed=False):
    terms = []
    for _ in range(rank):
        mu = float(rng.uniform(0.5, 2.0))
        if signed and rng.uniform() < 0.5:
            mu = -mu
        terms.append(SymmetricRankOneTerm(mu, random_unit(rng, m), d))
    return WaringDecomposition(m, d, tuple(terms))


def random_orthonormal(rng, n, k):
    q, r = np.linalg.qr(rng.standard_normal((n, max(k, 1))))
    q = q * np.sign(np.diag(r))[None, :]
    return q[:, :k]


def random_subspace_tuple(rng, ambient, block_dims):
    blocks = tuple(random_orthonormal(rng, ambient, d) for d in block_dims)
    return SubspaceTuple(ambient, blocks)


def orthogonal_cpd(rng, dims, rank):
    """Terms pairwise orthogonal in every mode: kappa is exactly 1 for d >= 3."""
    assert all(m >= rank for m in dims)
    mats = [random_orthonormal(rng, m, rank) for m in dims]
    terms = []
    for i in range(rank):
        mu = float(rng.uniform(0.5, 2.0))
        terms.append(RankOneTerm(mu, tuple(M[:, i] for M in mats)))
    return CPDecomposition(Shape(tuple(dims)), tuple(terms))
