"""Hard-margin kernel SVM through the origin, and network support vectors.

Because the separating hyperplane is constrained to pass through the
origin, the dual has no equality constraint:

    maximize  sum_k a_k - 0.5 * sum_ij a_i a_j y_i y_j K_ij
    s.t.      a_k >= 0

which cyclic coordinate ascent with exact per-coordinate line search
solves directly.  Non-separable data shows up as an unbounded dual and
is reported as an explicit failure rather than a bad solution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import (
    NonSeparableError,
    UnconvergedSolutionError,
    ValidationError,
)
from .network import (
    DEFAULT_PATH_BUDGET,
    LabeledDataset,
    NetworkConfig,
    NetworkWeights,
    PathVector,
    path_products,
)
from .pathspace import GramMatrix, embed

SUPPORT_THRESHOLD = 1e-6       # a_k counts as nonzero above this fraction of max(a)
DEFAULT_TOL = 1e-8             # max KKT violation at convergence
DEFAULT_MAX_SWEEPS = 1_000_000
OBJECTIVE_CAP = 1e12           # dual value beyond this means non-separable
ALPHA_CAP = 1e12


@dataclass
class MarginSolution:
    """Dual solution: coefficients, support set, and geometric margin."""

    alphas: np.ndarray
    support_indices: np.ndarray
    margin_value: float
    converged: bool
    iterations: int
    tol: float = DEFAULT_TOL


def support_set(alphas: np.ndarray, threshold: float = SUPPORT_THRESHOLD) -> np.ndarray:
    """Indices with a_k above threshold * max(a)."""
    peak = float(alphas.max()) if alphas.size else 0.0
    if peak <= 0.0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(alphas > threshold * peak).astype(np.int64)


def solve_hard_margin(gram: GramMatrix, labels, tol: float = DEFAULT_TOL,
                      max_iters: int = DEFAULT_MAX_SWEEPS, *,
                      objective_cap: float = OBJECTIVE_CAP,
                      support_threshold: float = SUPPORT_THRESHOLD,
                      certificate_tol: float = 1e-8) -> MarginSolution:
    """Solve the origin-through hard-margin dual by cyclic coordinate ascent.

    Sweeps coordinates in ascending index order; each update is the exact
    maximizer of the dual in that coordinate, clipped at zero.  Converges
    when the largest KKT violation (y_k f(x_k) < 1 anywhere, or != 1 on a
    positive coefficient) drops to tol.  max_iters counts full sweeps.

    Non-separability is reported two ways: the dual objective or a
    coefficient exceeding its cap, or (much earlier on slowly diverging
    problems) a hull certificate.  For any nonnegative u with sum 1,
    sqrt(u^T Q u) is the distance to a point of the convex hull of
    {y_k phi_k}, hence an upper bound on the achievable geometric
    margin; both the normalized iterate and the normalized per-sweep
    increment (which converges onto the recession direction) are tested,
    and a bound below certificate_tol times the embedding scale proves
    no usable separator exists.
    """
    y = np.asarray(labels, dtype=np.float64)
    m = gram.m
    if y.shape != (m,):
        raise ValidationError(f"expected {m} labels, got shape {y.shape}")
    if m and not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValidationError("labels must be -1 or +1")
    if m == 0:
        return MarginSolution(np.empty(0), np.empty(0, dtype=np.int64), 0.0, True, 0, tol)

    Q = gram.entries * np.outer(y, y)
    qdiag = np.diag(Q).copy()
    norm_scale = float(np.mean(qdiag))  # typical squared embedding norm
    cert_floor = (certificate_tol ** 2) * norm_scale

    def check_certificate(vec: np.ndarray, sweeps_done: int) -> None:
        total = float(vec.sum())
        if total <= 0.0 or np.any(vec < 0.0):
            return
        margin_sq_ub = float(vec @ (Q @ vec)) / (total * total)
        if margin_sq_ub <= cert_floor:
            raise NonSeparableError(
                f"margin certificate after {sweeps_done} sweeps bounds the "
                f"achievable margin by {math.sqrt(max(margin_sq_ub, 0.0)):.3g}; "
                "data is not separable through the origin")

    alpha = np.zeros(m)
    qa = np.zeros(m)  # running Q @ alpha
    converged = False
    sweeps = 0
    for sweeps in range(1, max_iters + 1):
        alpha_prev = alpha.copy()
        for k in range(m):
            grad = 1.0 - qa[k]
            if qdiag[k] <= 0.0:
                # zero-norm embedding: its margin constraint is unsatisfiable
                if grad > tol:
                    raise NonSeparableError(
                        f"sample {k} has zero self-kernel; no positive margin exists")
                continue
            new = alpha[k] + grad / qdiag[k]
            if new < 0.0:
                new = 0.0
            delta = new - alpha[k]
            if delta != 0.0:
                qa += Q[k] * delta
                alpha[k] = new
        qa = Q @ alpha  # resync accumulated rounding before testing KKT
        violation = np.where(alpha > 0.0, np.abs(1.0 - qa), np.maximum(0.0, 1.0 - qa))
        if float(violation.max()) <= tol:
            converged = True
            break
        objective = float(alpha.sum() - 0.5 * np.dot(alpha, qa))
        if objective > objective_cap or float(alpha.max()) > ALPHA_CAP:
            raise NonSeparableError(
                f"dual diverged after {sweeps} sweeps (objective {objective:.3g}); "
                "data is not separable through the origin")
        if sweeps >= 3:
            check_certificate(alpha, sweeps)
            delta = alpha - alpha_prev
            # the increment only certifies anything when it is itself a
            # hull direction (componentwise nonnegative) of usable size
            if float(delta.sum()) > 1e-6 * (1.0 + float(alpha.sum())):
                check_certificate(delta, sweeps)

    norm_sq = float(np.dot(alpha, Q @ alpha))
    margin = 1.0 / np.sqrt(norm_sq) if norm_sq > 0.0 else 0.0
    return MarginSolution(
        alphas=alpha,
        support_indices=support_set(alpha, support_threshold),
        margin_value=margin,
        converged=converged,
        iterations=sweeps,
        tol=tol,
    )


def dual_objective(gram: GramMatrix, labels, alphas: np.ndarray) -> float:
    y = np.asarray(labels, dtype=np.float64)
    Q = gram.entries * np.outer(y, y)
    return float(alphas.sum() - 0.5 * np.dot(alphas, Q @ alphas))


def margin_predict(sol: MarginSolution, labels, kernel_row) -> int:
    """Label for a new point from its kernel values against the training
    set: sign(sum_k a_k y_k K(x_k, x)), with 0 mapping to +1."""
    row = np.asarray(kernel_row, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if row.shape != sol.alphas.shape or y.shape != sol.alphas.shape:
        raise ValidationError("kernel row, labels, and alphas must share length")
    score = float(np.dot(sol.alphas * y, row))
    return 1 if score >= 0.0 else -1


def margin_predict_batch(sol: MarginSolution, labels, kernel_rows) -> np.ndarray:
    rows = np.asarray(kernel_rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != sol.alphas.shape[0]:
        raise ValidationError("kernel rows must be (k, m)")
    scores = rows @ (sol.alphas * y)
    return np.where(scores >= 0.0, 1, -1).astype(np.int64)


def extract_nsvs(sol: MarginSolution, data: LabeledDataset) -> tuple[LabeledDataset, int]:
    """Support subset of the training data and its size."""
    if not sol.converged:
        raise UnconvergedSolutionError(
            "refusing to extract support vectors from an unconverged solution")
    if sol.alphas.shape[0] != len(data):
        raise ValidationError("solution and dataset sizes differ")
    subset = data.subset(sol.support_indices)
    return subset, len(subset)


@dataclass
class WbarReconstruction:
    vector: PathVector
    cosine_vs_network: float


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def reconstruct_wbar(sol: MarginSolution, data: LabeledDataset,
                     weights: NetworkWeights, cfg: NetworkConfig,
                     budget: int = DEFAULT_PATH_BUDGET) -> WbarReconstruction:
    """Representer expansion sum_k a_k y_k phi(x_k) in explicit path
    space, with its cosine against the network's own path products.
    Small nets only (dense embeddings)."""
    if sol.alphas.shape[0] != len(data):
        raise ValidationError("solution and dataset sizes differ")
    total = np.zeros(cfg.path_count())
    for k in np.flatnonzero(sol.alphas != 0.0):
        phi = embed(data.features[k], weights, cfg, budget)
        total += sol.alphas[k] * data.labels[k] * phi.values
    lam = path_products(weights, cfg, budget)
    return WbarReconstruction(PathVector(total, cfg),
                              cosine_similarity(total, lam.values))


def agreement(preds_a, preds_b) -> float:
    """Fraction of positions where two label sequences coincide."""
    a = np.asarray(preds_a)
    b = np.asarray(preds_b)
    if a.shape != b.shape:
        raise ValidationError("prediction sequences have different lengths")
    if a.size == 0:
        raise ValidationError("cannot compute agreement of empty sequences")
    return float(np.mean(a == b))


def solution_to_json(sol: MarginSolution, gram_hash: str = "") -> str:
    return json.dumps({
        "alphas": sol.alphas.tolist(),
        "support_indices": sol.support_indices.tolist(),
        "margin_value": sol.margin_value,
        "iterations": sol.iterations,
        "tol": sol.tol,
        "gram_hash": gram_hash,
    })


def solution_from_json(text: str) -> MarginSolution:
    doc = json.loads(text)
    return MarginSolution(
        alphas=np.asarray(doc["alphas"], dtype=np.float64),
        support_indices=np.asarray(doc["support_indices"], dtype=np.int64),
        margin_value=float(doc["margin_value"]),
        converged=True,
        iterations=int(doc["iterations"]),
        tol=float(doc["tol"]),
    )
