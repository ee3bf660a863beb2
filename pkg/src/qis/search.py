"""Derivative-free maximization over small parameter vectors.

Global stage: either a regular grid (evaluated in one vectorized call) or
seeded uniform random starts. Local stage: compass search, i.e. try
``+-step`` along each coordinate, accept strict improvements, halve the step
when a full sweep fails.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


@dataclass
class SearchConfig:
    grid_size: int = 64
    grid_restarts: int = 3
    random_restarts: int = 32
    initial_step: Optional[float] = None
    min_step: float = 1e-7
    shrink: float = 0.5
    max_evals: int = 20000
    seed: int = 0


@dataclass
class SearchResult:
    value: float
    params: np.ndarray
    converged: bool
    n_evals: int = 0
    history: list = field(default_factory=list, repr=False)


def compass_search(f, x0, step, min_step=1e-7, shrink=0.5, max_evals=20000, fx0=None):
    """Maximize ``f`` from ``x0``. Returns ``(x, fx, converged, n_evals)``."""
    x = np.array(x0, dtype=float)
    fx = f(x) if fx0 is None else fx0
    evals = 0 if fx0 is not None else 1
    while step >= min_step:
        improved = False
        for i in range(len(x)):
            for sign in (1.0, -1.0):
                y = x.copy()
                y[i] += sign * step
                fy = f(y)
                evals += 1
                if fy > fx:
                    x, fx, improved = y, fy, True
                    break
                if evals >= max_evals:
                    return x, fx, False, evals
        if not improved:
            step *= shrink
    return x, fx, True, evals


def _top_k(values, k):
    # stable sort on -value: ties resolve to the lowest linear index
    return np.argsort(-np.asarray(values), kind="stable")[:k]


def maximize(
    f: Callable[[np.ndarray], float],
    candidates: np.ndarray,
    candidate_values: np.ndarray,
    restarts: int,
    step: float,
    cfg: SearchConfig,
    extra_starts: Sequence[np.ndarray] = (),
):
    """Refine the best ``restarts`` candidates (plus ``extra_starts``) locally."""
    starts = [(candidates[i], float(candidate_values[i])) for i in _top_k(candidate_values, restarts)]
    starts += [(np.asarray(s, dtype=float), None) for s in extra_starts]
    best = None
    total = len(candidates)
    any_converged = False
    history = []
    for x0, fx0 in starts:
        x, fx, conv, n = compass_search(f, x0, step, cfg.min_step, cfg.shrink, cfg.max_evals, fx0)
        total += n
        any_converged |= conv
        history.append(fx)
        if best is None or fx > best[1]:
            best = (x, fx)
    return SearchResult(best[1], best[0], any_converged, total, history)


def grid_maximize(f, f_batch, lows, highs, cfg: SearchConfig, endpoint=(True, False), extra_starts=()):
    """Grid stage over a 2-parameter box, then compass refinement.

    ``f_batch`` maps an ``(k, 2)`` parameter array to ``k`` objective values.
    """
    axes = [
        np.linspace(lo, hi, cfg.grid_size, endpoint=ep) for lo, hi, ep in zip(lows, highs, endpoint)
    ]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    values = np.asarray(f_batch(mesh), dtype=float)
    spacing = min(a[1] - a[0] for a in axes)
    step = cfg.initial_step if cfg.initial_step is not None else spacing
    return maximize(f, mesh, values, cfg.grid_restarts, step, cfg, extra_starts)


def random_maximize(f, n_params, low, high, cfg: SearchConfig, extra_starts=()):
    """Seeded uniform random starts, each refined by compass search."""
    rng = np.random.default_rng(cfg.seed)
    starts = rng.uniform(low, high, size=(cfg.random_restarts, n_params))
    values = np.array([f(s) for s in starts])
    step = cfg.initial_step if cfg.initial_step is not None else 0.25
    return maximize(f, starts, values, cfg.random_restarts, step, cfg, extra_starts)
