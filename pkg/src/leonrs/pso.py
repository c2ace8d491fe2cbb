"""Small particle swarm optimiser for box-constrained maximisation."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 40
    iterations: int = 100
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5


def pso_maximize(fun, lower, upper, rng, cfg: PsoConfig = PsoConfig(), seeds=None):
    """Maximise ``fun`` over the box ``[lower, upper]``.

    Parameters
    ----------
    fun : callable
        Takes an array of shape (P, D) and returns P objective values.
    lower, upper : array_like
        Box bounds, shape (D,).
    rng : numpy.random.Generator
    seeds : array_like, optional
        Points (S, D) placed into the initial swarm (e.g. a grid optimum).

    Returns
    -------
    best_x, best_f, history
        ``history`` holds the global best value after each iteration.
    """
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    span = upper - lower
    dim = lower.size
    x = lower + rng.random((cfg.particles, dim)) * span
    if seeds is not None:
        seeds = np.atleast_2d(np.asarray(seeds, float))[: cfg.particles]
        x[: len(seeds)] = np.clip(seeds, lower, upper)
    v = (rng.random((cfg.particles, dim)) - 0.5) * span * 0.1
    f = np.asarray(fun(x), float)
    pbest, pbest_f = x.copy(), f.copy()
    g = int(np.argmax(f))
    gbest, gbest_f = x[g].copy(), f[g]
    history = []
    for _ in range(cfg.iterations):
        r1 = rng.random((cfg.particles, dim))
        r2 = rng.random((cfg.particles, dim))
        v = cfg.inertia * v + cfg.cognitive * r1 * (pbest - x) + cfg.social * r2 * (gbest - x)
        x = np.clip(x + v, lower, upper)
        f = np.asarray(fun(x), float)
        better = f > pbest_f
        pbest[better], pbest_f[better] = x[better], f[better]
        g = int(np.argmax(pbest_f))
        if pbest_f[g] > gbest_f:
            gbest, gbest_f = pbest[g].copy(), pbest_f[g]
        history.append(gbest_f)
    return gbest, gbest_f, np.array(history)
