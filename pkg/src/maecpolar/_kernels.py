"""Float kernels for branch enumeration and batched evolution.

Two interchangeable backends share one call signature:

* ``numba``: compiled depth-first walk with one vector per tree level.
* ``numpy``: breadth-first blocks, each block a dense matrix product.

Set ``MAECPOLAR_DISABLE_NUMBA=1`` (or pass ``backend="numpy"``) to force the
numpy path.  When numba cannot be imported the numpy path is used silently.
Results agree to rounding; only the numba path promises a fixed summation
order.
"""

from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "MAECPOLAR_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

# leaves per numpy block are capped so the (B, tau*tau) outer product stays small
_BLOCK_BYTES = 1 << 26


def default_backend() -> str:
    if not HAVE_NUMBA or os.environ.get(ENV_FLAG, "").strip() not in ("", "0"):
        return "numpy"
    return "numba"


def resolve(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


# ------------------------------------------------------------------ numpy


def _onehot(tab: np.ndarray) -> np.ndarray:
    tau = tab.shape[0]
    g = np.zeros((tau * tau, tau), dtype=np.float64)
    g[np.arange(tau * tau), tab.ravel()] = 1.0
    return g


def _np_children(block: np.ndarray, gm: np.ndarray, gp: np.ndarray) -> np.ndarray:
    """Rows 2k and 2k+1 of the result are the minus and plus children of row k."""
    b, tau = block.shape
    outer = (block[:, :, None] * block[:, None, :]).reshape(b, tau * tau)
    out = np.empty((b, 2, tau))
    out[:, 0] = outer @ gm
    out[:, 1] = outer @ gp
    return out.reshape(2 * b, tau)


def _np_enumerate(eps, n, gcd_tab, lcm_tab, deltas, weights, keep_scores):
    tau = eps.shape[0]
    gm, gp = _onehot(gcd_tab), _onehot(lcm_tab)
    per_leaf = 8 * tau * tau * 2
    depth_cap = max(1, int(np.log2(max(2, _BLOCK_BYTES // per_leaf))))
    c = min(n, depth_cap)
    top = eps[None, :].copy()
    for _ in range(n - c):
        top = _np_children(top, gm, gp)
    total = np.zeros(tau)
    nd = deltas.shape[0]
    near_one = np.zeros((nd, tau), dtype=np.int64)
    near_zero = np.zeros((nd, tau), dtype=np.int64)
    scores = np.empty(1 << n if keep_scores else 0)
    width = 1 << c
    for p in range(top.shape[0]):
        block = top[p : p + 1]
        for _ in range(c):
            block = _np_children(block, gm, gp)
        total += block.sum(axis=0)
        for k in range(nd):
            near_one[k] += (block > 1.0 - deltas[k]).sum(axis=0)
            near_zero[k] += (block < deltas[k]).sum(axis=0)
        if keep_scores:
            scores[p * width : (p + 1) * width] = block @ weights
    return total, near_one, near_zero, scores


def _np_evolve_batch(eps, signs, gcd_tab, lcm_tab):
    n_samples, n = signs.shape
    tau = eps.shape[0]
    gm, gp = _onehot(gcd_tab), _onehot(lcm_tab)
    cur = np.broadcast_to(eps, (n_samples, tau)).copy()
    for k in range(n):
        outer = (cur[:, :, None] * cur[:, None, :]).reshape(n_samples, tau * tau)
        cur = np.where(signs[:, k : k + 1], outer @ gp, outer @ gm)
    return cur


# ------------------------------------------------------------------ numba

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _nb_step(a, tab, out):
        tau = a.shape[0]
        for d in range(tau):
            out[d] = 0.0
        for i in range(tau):
            ai = a[i]
            if ai == 0.0:
                continue
            for j in range(tau):
                out[tab[i, j]] += ai * a[j]

    @numba.njit(cache=True)
    def _nb_enumerate(eps, n, gcd_tab, lcm_tab, deltas, weights, keep_scores):
        tau = eps.shape[0]
        nd = deltas.shape[0]
        levels = np.empty((n + 1, tau))
        levels[0, :] = eps
        total = np.zeros(tau)
        near_one = np.zeros((nd, tau), dtype=np.int64)
        near_zero = np.zeros((nd, tau), dtype=np.int64)
        n_leaves = np.int64(1) << n
        scores = np.empty(n_leaves if keep_scores else 0)
        for leaf in range(n_leaves):
            # signs from position `start` onward differ from the previous leaf
            if leaf == 0:
                start = 1
            else:
                tz = 0
                x = leaf
                while x & 1 == 0:
                    x >>= 1
                    tz += 1
                start = n - tz
            for k in range(start, n + 1):
                bit = (leaf >> (n - k)) & 1
                if bit:
                    _nb_step(levels[k - 1], lcm_tab, levels[k])
                else:
                    _nb_step(levels[k - 1], gcd_tab, levels[k])
            v = levels[n]
            s = 0.0
            for d in range(tau):
                x = v[d]
                total[d] += x
                s += x * weights[d]
                for k in range(nd):
                    if x > 1.0 - deltas[k]:
                        near_one[k, d] += 1
                    if x < deltas[k]:
                        near_zero[k, d] += 1
            if keep_scores:
                scores[leaf] = s
        return total, near_one, near_zero, scores

    @numba.njit(cache=True)
    def _nb_evolve_batch(eps, signs, gcd_tab, lcm_tab):
        n_samples, n = signs.shape
        tau = eps.shape[0]
        out = np.empty((n_samples, tau))
        a = np.empty(tau)
        b = np.empty(tau)
        for r in range(n_samples):
            a[:] = eps
            for k in range(n):
                if signs[r, k]:
                    _nb_step(a, lcm_tab, b)
                else:
                    _nb_step(a, gcd_tab, b)
                a[:] = b
            out[r, :] = a
        return out


# ------------------------------------------------------------------ dispatch


def enumerate_stats(eps, n, gcd_tab, lcm_tab, deltas, weights, keep_scores=False, backend=None):
    """Walk all 2**n branches of the stationary recursion.

    Returns ``(sum_vector, near_one, near_zero, scores)`` where the count
    arrays have one row per threshold in ``deltas`` and ``scores[w]`` is the
    weighted sum ``v @ weights`` for the leaf with branch weight ``w``.
    """
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    deltas = np.ascontiguousarray(deltas, dtype=np.float64).reshape(-1)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    gcd_tab = np.ascontiguousarray(gcd_tab, dtype=np.int64)
    lcm_tab = np.ascontiguousarray(lcm_tab, dtype=np.int64)
    if resolve(backend) == "numba":
        return _nb_enumerate(eps, int(n), gcd_tab, lcm_tab, deltas, weights, bool(keep_scores))
    return _np_enumerate(eps, int(n), gcd_tab, lcm_tab, deltas, weights, bool(keep_scores))


def evolve_batch(eps, signs, gcd_tab, lcm_tab, backend=None):
    """Evolve ``eps`` along each row of the boolean sign matrix (True = plus)."""
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    signs = np.ascontiguousarray(signs, dtype=np.bool_)
    gcd_tab = np.ascontiguousarray(gcd_tab, dtype=np.int64)
    lcm_tab = np.ascontiguousarray(lcm_tab, dtype=np.int64)
    if resolve(backend) == "numba":
        return _nb_evolve_batch(eps, signs, gcd_tab, lcm_tab)
    return _np_evolve_batch(eps, signs, gcd_tab, lcm_tab)
