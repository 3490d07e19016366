"""Monte Carlo bookkeeping: estimates with standard errors and chunked ensembles."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

CHUNK_DOUBLES = 30_000_000


@dataclass
class MonteCarloEstimate:
    value: object
    stderr: object
    n_samples: int
    master_seed: int = 0
    samples: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_samples(cls, samples, master_seed=0, keep=True):
        samples = np.asarray(samples, dtype=float)
        n = samples.shape[0]
        value = samples.mean(axis=0)
        if n > 1:
            stderr = samples.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            stderr = np.full_like(np.asarray(value, dtype=float), np.inf)
        if np.ndim(value) == 0:
            value, stderr = float(value), float(stderr)
        return cls(value, stderr, n, master_seed, samples if keep else None)

    def z_against(self, target):
        se = np.asarray(self.stderr, dtype=float)
        diff = np.asarray(self.value) - target
        return np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))

    def __format__(self, spec):
        if np.ndim(self.value) == 0:
            return f"{self.value:{spec or '.6g'}} ± {self.stderr:.2g} (n={self.n_samples})"
        return repr(self)


def paired_difference(a, b, master_seed=0):
    """Estimate of E[a - b] from paired samples."""
    return MonteCarloEstimate.from_samples(np.asarray(a) - np.asarray(b), master_seed)


def combined_z(lhs, rhs):
    """Unpaired z-score of lhs - rhs from two estimates."""
    se = np.hypot(lhs.stderr, rhs.stderr)
    diff = np.asarray(lhs.value) - np.asarray(rhs.value)
    return np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))


def worker_count():
    raw = os.environ.get("PATHSPACE_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def chunk_size(doubles_per_sample, total):
    per = max(1, int(CHUNK_DOUBLES // max(1, doubles_per_sample)))
    return max(1, min(total, per))


def ensemble_map(func, n_samples, doubles_per_sample, threads=None):
    """Apply ``func(indices)`` over index chunks and concatenate in index order.

    ``func`` must return an array (or a tuple or dict of arrays) whose leading axis runs
    over the given indices. Chunks may run concurrently; reassembly is ordered,
    so results do not depend on the worker count.
    """
    size = chunk_size(doubles_per_sample, n_samples)
    chunks = [np.arange(s, min(s + size, n_samples)) for s in range(0, n_samples, size)]
    threads = worker_count() if threads is None else threads
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(func, chunks))
    else:
        parts = [func(c) for c in chunks]
    if not parts:
        return np.empty((0,))
    if isinstance(parts[0], dict):
        return {k: np.concatenate([np.asarray(p[k]) for p in parts]) for k in parts[0]}
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))
    return np.concatenate(parts)
