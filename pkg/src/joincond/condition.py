"""Condition numbers of join decompositions from stacked tangent bases.

The sensitivity of recovering the summands p_1, ..., p_r from their sum is
governed by the n-th largest singular value of U = [U_1 ... U_r], where U_i
is any orthonormal basis of the tangent space at p_i and n is the total
column count: kappa = 1 / sigma_n(U).  When n exceeds the ambient dimension
the summation map cannot be locally inverted and kappa is infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# A block is accepted as orthonormal when max |U^T U - I| stays below this.
ORTHONORMAL_TOL = 1e-10
# sigma_min at or below RANK_TOL_FACTOR * max(1, sigma_1) counts as zero.
RANK_TOL_FACTOR = 1e-14


@dataclass(frozen=True, eq=False)
class TangentBasisTuple:
    """Orthonormal tangent bases U_1, ..., U_r sharing one ambient space."""

    ambient_dim: int
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        N = int(self.ambient_dim)
        blocks = tuple(np.asarray(B, dtype=float) for B in self.blocks)
        if not blocks:
            raise ValueError("need at least one tangent basis block")
        for i, B in enumerate(blocks):
            if B.ndim != 2 or B.shape[0] != N or B.shape[1] < 1:
                raise ValueError(f"block {i} must be {N} x n_i with n_i >= 1")
            residual = np.abs(B.T @ B - np.eye(B.shape[1])).max()
            if residual > ORTHONORMAL_TOL:
                raise ValueError(
                    f"invalid tangent basis: block {i} orthonormality residual {residual:.3e}"
                )
        object.__setattr__(self, "ambient_dim", N)
        object.__setattr__(self, "blocks", blocks)

    @property
    def block_dims(self) -> tuple[int, ...]:
        return tuple(B.shape[1] for B in self.blocks)

    @property
    def n(self) -> int:
        return sum(self.block_dims)

    def stacked(self) -> np.ndarray:
        return np.hstack(self.blocks)


@dataclass(frozen=True, eq=False)
class ConditionReport:
    """Output of the condition-number engine.

    kappa is 1/sigma_min, with math.inf when the problem is ill posed (n > N
    or sigma_min below the rank tolerance).  least_vector is a unit right
    singular vector of the stacked basis attaining sigma_min; its blocks give
    the most weakly determined joint tangent direction.
    """

    sigma_min: float
    kappa: float
    least_vector: np.ndarray
    well_posed: bool
    n: int
    N: int

    def to_json_dict(self) -> dict:
        return {
            "sigma_min": self.sigma_min,
            "kappa": self.kappa if math.isfinite(self.kappa) else "inf",
            "n": self.n,
            "N": self.N,
            "well_posed": self.well_posed,
            "least_vector": self.least_vector.tolist(),
        }


def smallest_singular_value_with_vector(M) -> tuple[float, np.ndarray]:
    """(sigma_n, v): the n-th largest singular value of an N x n matrix and a
    unit right singular vector attaining it.

    For n <= N this is min ||Mx|| over unit x.  For n > N the matrix has a
    nontrivial kernel, so sigma is 0 and v is a unit kernel vector.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite entries")
    N, n = M.shape
    if n <= N:
        _, s, vt = np.linalg.svd(M, full_matrices=False)
        return float(s[n - 1]), vt[n - 1].copy()
    _, _, vt = np.linalg.svd(M, full_matrices=True)
    return 0.0, vt[-1].copy()


def condition_number(t: TangentBasisTuple) -> ConditionReport:
    """Condition number of the join decomposition with tangent bases t."""
    U = t.stacked()
    n, N = t.n, t.ambient_dim
    sigma, v = smallest_singular_value_with_vector(U)
    sigma_1 = float(np.linalg.svd(U, compute_uv=False)[0])
    well_posed = n <= N and sigma > RANK_TOL_FACTOR * max(1.0, sigma_1)
    kappa = 1.0 / sigma if well_posed else math.inf
    return ConditionReport(
        sigma_min=sigma,
        kappa=kappa,
        least_vector=v,
        well_posed=well_posed,
        n=n,
        N=N,
    )


def relative_condition_numbers(
    report: ConditionReport, term_norms, total_norm: float
) -> list[float]:
    """Per-term relative condition numbers kappa * total_norm / ||p_j||.

    A term of tiny norm is correspondingly fragile in relative terms even
    when the absolute condition number is moderate.
    """
    norms = [float(x) for x in term_norms]
    if any(not x > 0 for x in norms):
        raise ValueError("degenerate term: nonpositive norm")
    total = float(total_norm)
    if total < 0:
        raise ValueError("total norm must be nonnegative")
    if not math.isfinite(report.kappa):
        return [math.inf] * len(norms)
    return [report.kappa * total / x for x in norms]
