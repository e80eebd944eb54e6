"""Condition numbers specialized to CP (rank-one sum) decompositions.

Per term the tangent space of the rank-one manifold at mu * a^1 x ... x a^d
has the orthonormal basis

    U_i = [ a^1 x ... x a^d | Q^1 x a^2 x ... x a^d | ... | a^1 x ... x Q^d ]

where Q^k is an orthonormal basis of the complement of a^k; the blocks are
mutually orthogonal by construction, so U_i has 1 - d + sum_k m_k columns
and U_i^T U_i = I holds to rounding.
"""

from __future__ import annotations

import math
from functools import reduce

import numpy as np

from .condition import (
    RANK_TOL_FACTOR,
    ConditionReport,
    TangentBasisTuple,
    condition_number,
    relative_condition_numbers,
)
from .tensor import (
    CPDecomposition,
    RankOneTerm,
    assemble_cpd,
    frobenius_norm,
    orthonormal_complement,
)

WEAK_ORTHOGONALITY_TOL = 1e-12


def segre_tangent_basis(term: RankOneTerm) -> np.ndarray:
    """Orthonormal tangent basis of the rank-one manifold at a term."""
    columns = [v.reshape(-1, 1) for v in term.vectors]
    blocks = [reduce(np.kron, columns)]
    for k, v in enumerate(term.vectors):
        Q = orthonormal_complement(v)
        if Q.shape[1] == 0:
            continue
        mats = list(columns)
        mats[k] = Q
        blocks.append(reduce(np.kron, mats))
    return np.hstack(blocks)


def cpd_tangent_tuple(decomp: CPDecomposition) -> TangentBasisTuple:
    """Tangent bases of all terms, ready for the condition-number engine."""
    return TangentBasisTuple(
        decomp.shape.ambient_dim,
        tuple(segre_tangent_basis(t) for t in decomp.terms),
    )


def cpd_condition_number(decomp: CPDecomposition) -> ConditionReport:
    """Condition number of recovering the rank-one terms from their sum."""
    return condition_number(cpd_tangent_tuple(decomp))


def cpd_relative_condition_numbers(decomp: CPDecomposition) -> list[float]:
    """Per-term relative condition numbers; term norms are the mu_i."""
    report = cpd_condition_number(decomp)
    total = frobenius_norm(assemble_cpd(decomp))
    return relative_condition_numbers(report, [t.mu for t in decomp.terms], total)


def norm_balanced_basis(term: RankOneTerm) -> np.ndarray:
    """The scaled tangent matrix of the factor-vector parametrization.

    Columns are mu^(1-1/d) * [ I x a^2 x ... x a^d | ... | a^1 x ... x I ]:
    the derivative of (a^1, ..., a^d) -> a^1 x ... x a^d at the norm-balanced
    representative whose factors all have norm mu^(1/d).  Not orthonormal;
    its column span is the same tangent space as segre_tangent_basis(term).
    """
    columns = [v.reshape(-1, 1) for v in term.vectors]
    d = term.order
    blocks = []
    for k, v in enumerate(term.vectors):
        mats = list(columns)
        mats[k] = np.eye(v.size)
        blocks.append(reduce(np.kron, mats))
    return term.mu ** (1.0 - 1.0 / d) * np.hstack(blocks)


def norm_balanced_condition_number(decomp: CPDecomposition) -> float:
    """Condition number of recovering the balanced factor vectors themselves.

    Unlike the term-wise condition number this one is sensitive to the term
    norms: scaling a term toward zero drives it to infinity.  Computed as
    1 / sigma_n([B_1 ... B_r]) with B_i = norm_balanced_basis(term i) and n
    the total tangent dimension.
    """
    blocks = [norm_balanced_basis(t) for t in decomp.terms]
    M = np.hstack(blocks)
    N = decomp.shape.ambient_dim
    dims_sum = sum(decomp.shape.dims)
    n = decomp.rank * (1 - decomp.order + dims_sum)
    if n > N:
        return math.inf
    s = np.linalg.svd(M, compute_uv=False)
    sigma = float(s[n - 1])
    if sigma <= RANK_TOL_FACTOR * max(1.0, float(s[0])):
        return math.inf
    return 1.0 / sigma


def is_weak_3_orthogonal(decomp: CPDecomposition, tol: float = WEAK_ORTHOGONALITY_TOL) -> bool:
    """True when every pair of terms is orthogonal in at least three modes."""
    terms = decomp.terms
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            orthogonal_modes = sum(
                1
                for a, b in zip(terms[i].vectors, terms[j].vectors)
                if abs(float(a @ b)) <= tol
            )
            if orthogonal_modes < 3:
                return False
    return True
