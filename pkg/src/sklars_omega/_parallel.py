"""Reproducible replicate loops: one spawned seed per replicate, so results
do not depend on worker count or scheduling."""

import os

import numpy as np
from joblib import Parallel, delayed


def spawn_generators(seed, n):
    """``n`` independent generators derived from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def default_workers():
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
               else os.cpu_count() or 1)


def run_replicates(func, n, seed, n_jobs=1):
    """``[func(rng_0), ..., func(rng_{n-1})]`` with per-replicate generators."""
    rngs = spawn_generators(seed, n)
    if n_jobs is None or n_jobs == 1 or n <= 1:
        return [func(r) for r in rngs]
    return Parallel(n_jobs=n_jobs)(delayed(func)(r) for r in rngs)
