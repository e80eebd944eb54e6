"""Experiment harness: random ill-conditioned models, divergent sequences,
regression curves, a small nonlinear least-squares refiner, and an empirical
validator for the forward-error rule of thumb
(forward error <~ condition number * backward error).

Determinism contract: every random draw flows through numpy's PCG64 bit
generator (standard_normal uses the ziggurat algorithm), seeded either
directly or through derive_seed, which mixes a base seed with a per-sample
key via the splitmix64 finalizer.  Identical parameters and seeds therefore
produce identical outputs, bit for bit, regardless of the worker count.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .condition import TangentBasisTuple, condition_number
from .segre import cpd_condition_number
from .tensor import (
    CPDecomposition,
    DenseTensor,
    RankOneTerm,
    assemble_cpd,
    normalize_decomposition,
)

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the splitmix64 finalizer (a 64-bit avalanche mix)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, s: int, sample: int) -> int:
    """Per-sample seed: base_seed XOR splitmix64((s << 32) | sample).

    Each (s, sample) cell gets an independent stream, so results do not
    depend on execution order or parallelism.
    """
    key = ((s & 0xFFFFFFFF) << 32) | (sample & 0xFFFFFFFF)
    return (base_seed ^ splitmix64(key)) & _MASK64


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _worker_count() -> int:
    raw = os.environ.get("JOINCOND_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Random model with a tunable degree of ill-conditioning.


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the random factor-matrix model

        A_k(s) = C_k (2^(-rate*s) I_r + X_k Y_k^T),   entries i.i.d. N(0, 1),

    with C_k of size m_k x r and X_k, Y_k of size r x core_ranks[k].  As s
    grows each A_k(s) approaches the rank-core_ranks[k] matrix C_k X_k Y_k^T,
    which makes the decomposition of the assembled tensor increasingly
    ill conditioned.  Factor matrices are normalized to unit Frobenius norm.
    """

    dims: tuple[int, ...] = (6, 5, 4, 4)
    core_ranks: tuple[int, ...] = (1, 2, 3, 4)
    rank: int = 6
    rate: float = 0.2
    tau: float = 5e-4
    samples: int = 250
    base_seed: int = 0

    def __post_init__(self):
        dims = tuple(int(m) for m in self.dims)
        core = tuple(int(c) for c in self.core_ranks)
        if len(dims) != len(core):
            raise ValueError("dims and core_ranks must have equal length")
        if any(c > m for m, c in zip(dims, core)) or any(c > self.rank for c in core):
            raise ValueError("each core rank must be at most its dim and the rank")
        if any(c < 1 for c in core) or self.rank < 1:
            raise ValueError("ranks must be >= 1")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "core_ranks", core)


def _draw_model_factors(params: ModelParams, rng: np.random.Generator, s: float) -> list[np.ndarray]:
    # Draw order (per mode: C, X, Y) is part of the determinism contract.
    damp = 2.0 ** (-params.rate * s)
    mats = []
    for m_k, c_k in zip(params.dims, params.core_ranks):
        C = rng.standard_normal((m_k, params.rank))
        X = rng.standard_normal((params.rank, c_k))
        Y = rng.standard_normal((params.rank, c_k))
        A = C @ (damp * np.eye(params.rank) + X @ Y.T)
        mats.append(A / np.linalg.norm(A))
    return mats


def generate_model_tensor(
    params: ModelParams, seed: int, s: float
) -> tuple[CPDecomposition, DenseTensor]:
    """Draw one model instance: the normalized decomposition and its tensor."""
    attempt_seed = int(seed) & _MASK64
    for _ in range(8):
        rng = make_rng(attempt_seed)
        mats = _draw_model_factors(params, rng, s)
        try:
            decomp = normalize_decomposition(mats)
        except ValueError:
            # A zero column has probability zero; redraw from the next seed.
            logger.warning("degenerate model draw at seed %d, retrying", attempt_seed)
            attempt_seed = (attempt_seed + 1) & _MASK64
            continue
        return decomp, assemble_cpd(decomp)
    raise RuntimeError("could not draw a nondegenerate model instance")


# ---------------------------------------------------------------------------
# Two classical sequences whose sums converge while the terms diverge.


def paatero_sequence(seed: int, s: float) -> CPDecomposition:
    """Rank-3 decompositions in R^(5x4x3) approaching a border tensor.

    With lam = 2^(3s/16) and eps = 1/(2*lam), the three terms are

        -lam (a1 + a2) x b1        x c1
         lam  a2       x (b1+eps b3) x (c1+eps c3)
         lam (a1+eps a3) x (b1+eps b2) x (c1+eps c2)

    where the per-mode vectors are the columns of 5x3, 4x3, 3x3 standard
    normal matrices drawn once per seed.  The assembled tensor converges as
    s grows while the term norms blow up like lam.
    """
    rng = make_rng(seed)
    A1 = rng.standard_normal((5, 3))
    A2 = rng.standard_normal((4, 3))
    A3 = rng.standard_normal((3, 3))
    lam = 2.0 ** (3.0 * s / 16.0)
    eps = 2.0 ** (-3.0 * s / 16.0 - 1.0)
    F1 = np.column_stack([
        -lam * (A1[:, 0] + A1[:, 1]),
        lam * A1[:, 1],
        lam * (A1[:, 0] + eps * A1[:, 2]),
    ])
    F2 = np.column_stack([
        A2[:, 0],
        A2[:, 0] + eps * A2[:, 2],
        A2[:, 0] + eps * A2[:, 1],
    ])
    F3 = np.column_stack([
        A3[:, 0],
        A3[:, 0] + eps * A3[:, 2],
        A3[:, 0] + eps * A3[:, 1],
    ])
    return normalize_decomposition([F1, F2, F3])


def desilva_lim_sequence(seed: int, s: float) -> CPDecomposition:
    """Rank-2 decompositions in R^(5x3x2) approaching a rank-3 tensor.

    With lam = 2^(s/5) and eps = 1/lam, the two terms are

         lam (a1+eps a2) x (b1+eps b2) x (c1+eps c2)
        -lam  a1         x  b1         x  c1

    with per-mode vector pairs drawn once per seed.  The sum converges to
    a2 x b1 x c1 + a1 x b2 x c1 + a1 x b1 x c2 while both term norms diverge.
    """
    rng = make_rng(seed)
    B1 = rng.standard_normal((5, 2))
    B2 = rng.standard_normal((3, 2))
    B3 = rng.standard_normal((2, 2))
    lam = 2.0 ** (s / 5.0)
    eps = 2.0 ** (-s / 5.0)
    F1 = np.column_stack([lam * (B1[:, 0] + eps * B1[:, 1]), -lam * B1[:, 0]])
    F2 = np.column_stack([B2[:, 0] + eps * B2[:, 1], B2[:, 0]])
    F3 = np.column_stack([B3[:, 0] + eps * B3[:, 1], B3[:, 0]])
    return normalize_decomposition([F1, F2, F3])


def sequence_table(
    sequence: Callable[[int, float], CPDecomposition],
    seed: int,
    s_values: Iterable[int],
) -> list[tuple[int, float, float]]:
    """Rows (s, kappa, max term norm) along one of the sequences above."""
    rows = []
    for s in s_values:
        decomp = sequence(seed, s)
        kappa = cpd_condition_number(decomp).kappa
        rows.append((int(s), kappa, max(t.mu for t in decomp.terms)))
    return rows


# ---------------------------------------------------------------------------
# Two explicit curve families used as condition-number regressions.


class CurveKappa(NamedTuple):
    engine: float
    analytic: float


def example_41_kappa(t: float) -> CurveKappa:
    """Two curves in R^3 with orthogonal unit tangents for every t in (0, pi).

    Curve 1 runs along the unit circle in the xy-plane, curve 2 along the
    z-axis, so the stacked tangent matrix always has orthonormal columns and
    the condition number is identically 1 even though the summed curve
    approaches a point with no decomposition.
    """
    u1 = np.array([math.cos(t), math.sin(t), 0.0])
    u2 = np.array([0.0, 0.0, 1.0])
    report = condition_number(
        TangentBasisTuple(3, (u1.reshape(-1, 1), u2.reshape(-1, 1)))
    )
    return CurveKappa(engine=report.kappa, analytic=1.0)


def _example_42_tangent(t: float) -> np.ndarray:
    return np.array([
        1.0,
        (-math.sin(t) * t - math.cos(t)) / t**2,
        2.0 * math.cos(t**2) - math.sin(t**2) / t**2,
    ])


def example_42_kappa_analytic(t) -> np.ndarray:
    """Closed form for the oscillating-curve condition number, vectorized.

    The two tangent lines are spanned by (1, 0, 0) and w(t) with
    w = (1, (-t sin t - cos t)/t^2, 2 cos(t^2) - sin(t^2)/t^2); writing
    ||w||^2 = 1 + z, the smallest stacked singular value is
    sqrt(1 - (1 + z)^(-1/2)) = sqrt(2) sin(theta/2), where
    theta = arccos((1+z)^(-1/2)) is the angle between the lines, and kappa
    is its inverse.  kappa oscillates with t and has both bounded and
    divergent subsequences.
    """
    t = np.asarray(t, dtype=float)
    w1 = (-np.sin(t) * t - np.cos(t)) / t**2
    w2 = 2.0 * np.cos(t**2) - np.sin(t**2) / t**2
    z = w1**2 + w2**2
    sigma = np.sqrt(1.0 - 1.0 / np.sqrt(1.0 + z))
    return 1.0 / sigma


def example_42_kappa(t: float) -> CurveKappa:
    """Engine and analytic condition number for the oscillating curve pair."""
    w = _example_42_tangent(t)
    u1 = np.array([1.0, 0.0, 0.0])
    u2 = w / np.linalg.norm(w)
    report = condition_number(
        TangentBasisTuple(3, (u1.reshape(-1, 1), u2.reshape(-1, 1)))
    )
    return CurveKappa(engine=report.kappa, analytic=float(example_42_kappa_analytic(t)))


# ---------------------------------------------------------------------------
# Damped Gauss-Newton refinement of a decomposition toward a target tensor.


@dataclass(frozen=True, eq=False)
class RefineResult:
    decomposition: CPDecomposition
    converged: bool
    iterations: int
    objective: float


def _balanced_factor_matrices(decomp: CPDecomposition) -> list[np.ndarray]:
    d = decomp.order
    mats = [np.zeros((m, decomp.rank)) for m in decomp.shape.dims]
    for i, term in enumerate(decomp.terms):
        scale = term.mu ** (1.0 / d)
        for k, v in enumerate(term.vectors):
            mats[k][:, i] = scale * v
    return mats


def _khatri_rao(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for M in mats[1:]:
        out = (out[:, None, :] * M[None, :, :]).reshape(-1, out.shape[1])
    return out


def _assemble_from_factors(mats: Sequence[np.ndarray]) -> np.ndarray:
    return _khatri_rao(mats).sum(axis=1)


def _factor_jacobian(mats: Sequence[np.ndarray]) -> np.ndarray:
    # Columns ordered mode-major, then term, then vector entry; the block for
    # (mode k, term i) is kron(f_i^1, ..., I_{m_k}, ..., f_i^d).
    r = mats[0].shape[1]
    blocks = []
    for k, M in enumerate(mats):
        for i in range(r):
            cols = [mats[kk][:, i].reshape(-1, 1) for kk in range(len(mats))]
            cols[k] = np.eye(M.shape[0])
            blocks.append(reduce(np.kron, cols))
    return np.hstack(blocks)


def _apply_step(mats: Sequence[np.ndarray], delta: np.ndarray) -> list[np.ndarray]:
    out = []
    pos = 0
    for M in mats:
        m, r = M.shape
        out.append(M + delta[pos:pos + m * r].reshape(r, m).T)
        pos += m * r
    return out


def cpd_refine(
    init: CPDecomposition,
    target: DenseTensor,
    max_iterations: int = 1000,
    objective_tol: float = 1e-14,
    initial_damping: float = 1e-2,
) -> RefineResult:
    """Damped Gauss-Newton on the factor-matrix parametrization.

    Minimizes 0.5 * ||assembled - target||^2 with a Levenberg-Marquardt
    damping schedule (start 1e-2, x10 on reject, /10 on accept).  Stops when
    the objective reaches objective_tol or after max_iterations accepted
    steps.  Never raises on non-convergence; the flag in the result decides.
    """
    if init.shape.dims != target.shape.dims:
        raise ValueError("init and target shapes differ")
    mats = _balanced_factor_matrices(init)
    target_vec = target.data
    residual = _assemble_from_factors(mats) - target_vec
    objective = 0.5 * float(residual @ residual)
    n_params = sum(M.size for M in mats)
    lam = initial_damping
    iterations = 0
    converged = objective <= objective_tol
    while not converged and iterations < max_iterations:
        J = _factor_jacobian(mats)
        gradient = J.T @ residual
        hessian = J.T @ J
        accepted = False
        while lam < 1e14:
            try:
                delta = np.linalg.solve(hessian + lam * np.eye(n_params), -gradient)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            new_mats = _apply_step(mats, delta)
            new_residual = _assemble_from_factors(new_mats) - target_vec
            new_objective = 0.5 * float(new_residual @ new_residual)
            if new_objective < objective:
                mats, residual, objective = new_mats, new_residual, new_objective
                lam = max(lam / 10.0, 1e-16)
                accepted = True
                break
            lam *= 10.0
        iterations += 1
        if not accepted:
            break
        converged = objective <= objective_tol
    try:
        refined = normalize_decomposition(mats)
    except ValueError:
        # A factor column collapsed to zero; report failure on the input.
        logger.warning("refinement produced a zero factor column")
        return RefineResult(init, False, iterations, objective)
    return RefineResult(refined, converged, iterations, objective)


# ---------------------------------------------------------------------------
# Forward-error study on the random model.


@dataclass(frozen=True)
class ExperimentRecord:
    s: int
    sample: int
    backward: float
    forward: float
    kappa: float
    scaling: float
    converged: bool
    iterations: int


@dataclass(frozen=True, eq=False)
class ForwardErrorTables:
    records: list[ExperimentRecord]
    deciles: list[tuple]
    kappa_quartiles: list[tuple]
    discarded: int


def _match_columns(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Greedy assignment of columns of Q to columns of P by cosine similarity.

    The refiner returns terms in arbitrary order; this pairs each original
    term with the most similar computed term before differencing.
    """
    r = P.shape[1]
    Pn = P / np.linalg.norm(P, axis=0, keepdims=True)
    Qn = Q / np.linalg.norm(Q, axis=0, keepdims=True)
    similarity = Pn.T @ Qn
    perm = np.full(r, -1, dtype=int)
    blocked = np.zeros_like(similarity, dtype=bool)
    for _ in range(r):
        masked = np.where(blocked, -np.inf, similarity)
        i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
        perm[i] = j
        blocked[i, :] = True
        blocked[:, j] = True
    return perm


def _run_sample(params: ModelParams, s: int, sample: int) -> ExperimentRecord:
    rng = make_rng(derive_seed(params.base_seed, s, sample))
    decomp = None
    mats: list[np.ndarray] = []
    for _ in range(8):
        candidate = _draw_model_factors(params, rng, s)
        try:
            decomp = normalize_decomposition(candidate)
            mats = candidate
            break
        except ValueError:
            logger.warning("degenerate draw at (s=%d, sample=%d), redrawing", s, sample)
    if decomp is None:
        raise RuntimeError("could not draw a nondegenerate model instance")
    target = assemble_cpd(decomp)
    init = normalize_decomposition(
        [B + params.tau * rng.standard_normal(B.shape) for B in mats]
    )
    result = cpd_refine(init, target)
    backward = float(np.linalg.norm(assemble_cpd(result.decomposition).data - target.data))
    original_terms = decomp.term_tensors()
    computed_terms = result.decomposition.term_tensors()
    perm = _match_columns(original_terms, computed_terms)
    forward = float(np.linalg.norm(original_terms - computed_terms[:, perm]))
    kappa = cpd_condition_number(result.decomposition).kappa
    if result.converged and math.isfinite(kappa) and backward > 0:
        scaling = forward / (kappa * backward)
    else:
        scaling = math.nan
    return ExperimentRecord(
        s=s,
        sample=sample,
        backward=backward,
        forward=forward,
        kappa=kappa,
        scaling=scaling,
        converged=result.converged,
        iterations=result.iterations,
    )


def run_forward_error_experiment(
    params: ModelParams,
    s_values: Iterable[int] | None = None,
    out_dir: str | os.PathLike | None = None,
) -> ForwardErrorTables:
    """Per (s, sample): draw a model instance, refine from a tau-perturbed
    start, and record backward error, matched forward error, the condition
    number at the computed decomposition, and the scaling factor
    forward / (kappa * backward).

    Aggregates per s: deciles 1..9 of the scaling factor and quartiles of
    kappa over the converged samples.  Non-converged samples are excluded
    from the aggregates and counted in `discarded`.  With out_dir set, the
    tables land in scaling_factor_deciles.csv and kappa_quartiles.csv.
    """
    svals = list(s_values) if s_values is not None else list(range(1, 51))
    jobs = [(s, j) for s in svals for j in range(params.samples)]
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda sj: _run_sample(params, *sj), jobs))
    else:
        records = [_run_sample(params, s, j) for s, j in jobs]

    deciles = []
    quartiles = []
    discarded = 0
    for s in svals:
        per_s = [rec for rec in records if rec.s == s]
        usable = [rec for rec in per_s if rec.converged and math.isfinite(rec.scaling)]
        discarded += len(per_s) - len(usable)
        if usable:
            scalings = np.array([rec.scaling for rec in usable])
            kappas = np.array([rec.kappa for rec in usable])
            deciles.append((s, *np.percentile(scalings, range(10, 100, 10))))
            quartiles.append((s, *np.percentile(kappas, (25, 50, 75))))
        else:
            deciles.append((s,) + (math.nan,) * 9)
            quartiles.append((s,) + (math.nan,) * 3)

    tables = ForwardErrorTables(records, deciles, quartiles, discarded)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(
            out / "scaling_factor_deciles.csv",
            "s," + ",".join(f"decile_{i}" for i in range(1, 10)),
            tables.deciles,
        )
        write_csv(out / "kappa_quartiles.csv", "s,q1,median,q3", tables.kappa_quartiles)
    return tables


def validate_rule_of_thumb(
    decomp: CPDecomposition,
    trials: int = 100,
    magnitude: float = 1e-6,
    seed: int = 0,
) -> float:
    """Max of forward/backward over random parameter perturbations.

    Perturbs every term (mu multiplicatively, vectors additively with
    renormalization) by the given magnitude and compares the decomposition
    movement against the movement of the assembled tensor.  To first order
    the ratio never exceeds the condition number; the slack grows like a
    constant times the magnitude.  Refuses ill-posed inputs.
    """
    report = cpd_condition_number(decomp)
    if not report.well_posed:
        raise ValueError("ill-posed decomposition: condition number is infinite")
    rng = make_rng(seed)
    base_terms = decomp.term_tensors()
    base_tensor = assemble_cpd(decomp)
    max_ratio = 0.0
    for _ in range(trials):
        terms = []
        for term in decomp.terms:
            mu = term.mu * math.exp(magnitude * rng.standard_normal())
            vectors = []
            for v in term.vectors:
                w = v + magnitude * rng.standard_normal(v.size)
                vectors.append(w / np.linalg.norm(w))
            terms.append(RankOneTerm(mu, tuple(vectors)))
        perturbed = CPDecomposition(decomp.shape, tuple(terms))
        forward = float(np.linalg.norm(base_terms - perturbed.term_tensors()))
        backward = float(
            np.linalg.norm(base_tensor.data - assemble_cpd(perturbed).data)
        )
        if backward > 0:
            max_ratio = max(max_ratio, forward / backward)
    return max_ratio


# ---------------------------------------------------------------------------
# Deterministic CSV output.


def _format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: str | os.PathLike, header: str, rows: Iterable[Sequence]) -> None:
    """Write rows with a fixed header, repr-formatted floats, and LF endings."""
    lines = [header]
    lines.extend(",".join(_format_cell(cell) for cell in row) for row in rows)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
