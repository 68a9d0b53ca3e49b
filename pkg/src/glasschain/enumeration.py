"""Spin-configuration enumeration shared by the chain oracle and the graph explorer."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

CHUNK_BITS = 16


def spin_block(n_sites: int, start: int, stop: int) -> np.ndarray:
    """Spins of configurations start..stop-1; bit j of the index is site j (1 -> down)."""
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n_sites, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.float64)


def bond_block(spins: np.ndarray, edges) -> np.ndarray:
    a = np.fromiter((e[0] for e in edges), dtype=np.int64, count=len(edges))
    b = np.fromiter((e[1] for e in edges), dtype=np.int64, count=len(edges))
    return spins[:, a] * spins[:, b]


def _chunk_moments(args):
    n_sites, edges, couplings, shift, start, stop = args
    bonds = bond_block(spin_block(n_sites, start, stop), edges)
    w = np.exp(bonds @ couplings - shift)
    return w.sum(), bonds.T @ w, bonds.T @ (bonds * w[:, None])


def spin_moments(n_sites: int, edges, couplings, shift: float, workers: int = 1):
    """Sums over all 2**n_sites configurations of w, w*b_h and w*b_h*b_k.

    w = exp(-H - shift). The range is cut into fixed chunks and partial sums are
    combined with fsum, so the result does not depend on ``workers``.
    """
    couplings = np.asarray(couplings, dtype=np.float64)
    total = 1 << n_sites
    step = min(total, 1 << CHUNK_BITS)
    tasks = [(n_sites, tuple(edges), couplings, shift, s, min(s + step, total))
             for s in range(0, total, step)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_moments, tasks))
    else:
        parts = [_chunk_moments(t) for t in tasks]
    m = len(edges)
    z = math.fsum(p[0] for p in parts)
    first = np.array([math.fsum(p[1][h] for p in parts) for h in range(m)])
    second = np.empty((m, m))
    for h in range(m):
        for k in range(m):
            second[h, k] = math.fsum(p[2][h, k] for p in parts)
    return z, first, second


def batch_moments(bonds: np.ndarray, coupling_rows: np.ndarray, pairs):
    """Thermal moments for many realizations on one graph.

    bonds: (configs, m) bond products; coupling_rows: (R, m).
    Returns (omega (R, m), pair_omega (R, len(pairs))).
    """
    energy = bonds @ coupling_rows.T  # (configs, R)
    w = np.exp(energy - energy.max(axis=0))
    z = w.sum(axis=0)
    omega = (bonds.T @ w / z).T
    if len(pairs):
        prod = np.stack([bonds[:, h] * bonds[:, k] for h, k in pairs], axis=1)
        pair_omega = (prod.T @ w / z).T
    else:
        pair_omega = np.zeros((coupling_rows.shape[0], 0))
    return omega, pair_omega
