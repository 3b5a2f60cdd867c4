"""Deterministic exact t-SNE to 2D with cosine input distances.

Session sizes stay small (roughly <= 1500 points), so the exact O(N^2)
formulation is used; it keeps the determinism story simple and the kernels
easy to verify.  The per-iteration work is the hot loop of the whole
pipeline and ships as a Cython extension with a pure-numpy fallback;
selection happens at import time (PM_PURE_PYTHON=1 forces the fallback,
see BACKEND).

Determinism: given the same params, a run is bitwise reproducible within
one environment.  Initialization is a tiny seeded Gaussian keyed by
(rng_seed, content hash of the feature row), which makes the output
equivariant under input row permutation.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from .._hashing import fnv1a64, splitmix64_stream, unit_open_lower, unit_open_upper
from ..errors import NonFiniteInput, ShapeMismatch, ZeroVector
from . import _kernels_py

if os.environ.get("PM_PURE_PYTHON"):
    _kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_c as _kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _kernels = _kernels_py
        BACKEND = "python"

EXAGGERATION_ITERS = 250
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8
MIN_GAIN = 0.01
INIT_SCALE = 1e-4


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.perplexity <= 0:
            raise ValueError(f"perplexity must be > 0, got {self.perplexity}")


@dataclass(frozen=True)
class ProjectionResult:
    points: np.ndarray          # (N, 2) float64
    kl_initial: float
    kl_final: float
    backend: str


def kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    """sum p*log(p/q) over entries, natural log, 0*log0 = 0."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise ShapeMismatch(f"shapes {P.shape} and {Q.shape} differ")
    mask = P > 0
    p = P[mask]
    q = Q[mask]
    if np.any(q == 0):
        return float("inf")
    return float(np.sum(p * np.log(p / q)))


def seeded_init(features: np.ndarray, rng_seed: int) -> np.ndarray:
    """Per-point Gaussian init keyed by the feature row's content hash.

    Two splitmix64 words per point feed a Box-Muller transform; positions
    therefore travel with their row under permutation.
    """
    n = features.shape[0]
    rows = np.ascontiguousarray(features, dtype=np.float32)
    seed_bytes = struct.pack("<Q", rng_seed & (2**64 - 1))
    out = np.zeros((n, 2), dtype=np.float64)
    for i in range(n):
        h = fnv1a64(seed_bytes + rows[i].tobytes())
        w1, w2 = splitmix64_stream(h, 2)
        u1 = unit_open_lower(w1)
        u2 = unit_open_upper(w2)
        r = math.sqrt(-2.0 * math.log(u1))
        out[i, 0] = INIT_SCALE * r * math.cos(2.0 * math.pi * u2)
        out[i, 1] = INIT_SCALE * r * math.sin(2.0 * math.pi * u2)
    return out


def cosine_distance_matrix(features: np.ndarray) -> np.ndarray:
    """Pairwise cosine distances, clipped to [0, 2], zero diagonal."""
    X = np.asarray(features, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ZeroVector("cosine distance is undefined for zero feature rows")
    U = X / norms[:, None]
    D = 1.0 - U @ U.T
    np.clip(D, 0.0, 2.0, out=D)
    np.fill_diagonal(D, 0.0)
    return np.ascontiguousarray(D)


def joint_affinities(dist: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized, floor-clipped joint input affinities."""
    n = dist.shape[0]
    cond = _kernels.conditional_affinities(np.ascontiguousarray(dist), perplexity, 1e-5, 50)
    P = (cond + cond.T) / (2.0 * n)
    return np.maximum(P, 1e-12)


def _lowdim_q(Y: np.ndarray) -> np.ndarray:
    num, Z = _kernels_py.lowdim_kernel(Y)
    return np.maximum(num / Z, 1e-12)


def project(features: np.ndarray, params: TsneParams) -> ProjectionResult:
    """Run the full projection and report KL at start and finish."""
    X = np.asarray(features)
    if X.size and not np.all(np.isfinite(X)):
        raise NonFiniteInput("feature matrix contains non-finite values")
    n = X.shape[0] if X.ndim == 2 else 0
    if n == 0:
        empty = np.zeros((0, 2))
        return ProjectionResult(empty, 0.0, 0.0, BACKEND)
    if n == 1:
        return ProjectionResult(np.zeros((1, 2)), 0.0, 0.0, BACKEND)
    if n == 2:
        pts = np.array([[-0.5, 0.0], [0.5, 0.0]])
        return ProjectionResult(pts, 0.0, 0.0, BACKEND)

    perplexity = min(params.perplexity, (n - 1) / 3.0)
    D = cosine_distance_matrix(X)
    P = joint_affinities(D, perplexity)

    Y = seeded_init(X, params.rng_seed)
    kl_initial = kl_divergence(P, _lowdim_q(Y))

    exaggerated = P * params.early_exaggeration
    inc = np.zeros_like(Y)
    gains = np.ones_like(Y)
    for it in range(params.iterations):
        Pcur = exaggerated if it < EXAGGERATION_ITERS else P
        grad = _kernels.tsne_grad(np.ascontiguousarray(Pcur), np.ascontiguousarray(Y))
        assert np.all(np.isfinite(grad)), "non-finite t-SNE gradient"
        momentum = MOMENTUM_EARLY if it < EXAGGERATION_ITERS else MOMENTUM_LATE
        same_sign = np.sign(grad) == np.sign(inc)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.clip(gains, MIN_GAIN, None, out=gains)
        inc = momentum * inc - params.learning_rate * (gains * grad)
        Y = Y + inc
        Y = Y - Y.mean(axis=0)

    kl_final = kl_divergence(P, _lowdim_q(Y))
    return ProjectionResult(Y, kl_initial, kl_final, BACKEND)


def project_tsne(features: np.ndarray, params: TsneParams) -> np.ndarray:
    """The (N, 2) t-SNE layout for an (N, d) feature matrix."""
    return project(features, params).points
