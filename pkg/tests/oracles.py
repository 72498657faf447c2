"""Independent reference computations backing the derived expected values.

Everything here is written from first principles, separately from the package
implementation, so the tests compare two distinct routes to each quantity:
bisection against closed forms, Monte Carlo against quadrature, exhaustive
basic-solution enumeration against the simplex, scipy matrix square roots
against the package's eigendecomposition.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np
import scipy.linalg


# ------------------------------------------------------ linear densities


def density_pdf(x, left, right, slope):
    x = np.asarray(x, dtype=float)
    w = right - left
    c = 0.5 * (left + right)
    val = (1.0 + slope * (x - c)) / w
    return np.where((x >= left) & (x <= right), np.maximum(val, 0.0), 0.0)


def density_cdf(x, left, right, slope):
    # F(left + t) = [t + a t^2/2 + a (left - c) t] / w, the direct integral
    w = right - left
    c = 0.5 * (left + right)
    t = np.clip(np.asarray(x, dtype=float) - left, 0.0, w)
    return (t + slope * t * t / 2.0 + slope * (left - c) * t) / w


def density_quantile(u, left, right, slope):
    """Inverse CDF via the textbook quadratic formula with a sign branch."""
    u = np.asarray(u, dtype=float)
    w = right - left
    if abs(slope) < 1e-13:
        return left + u * w
    c = 0.5 * (left + right)
    qa = slope / 2.0
    qb = 1.0 + slope * (left - c)
    qc = -u * w
    disc = np.maximum(qb * qb - 4.0 * qa * qc, 0.0)
    r1 = (-qb + np.sqrt(disc)) / (2.0 * qa)
    r2 = (-qb - np.sqrt(disc)) / (2.0 * qa)
    good = (r1 >= -1e-9 * w) & (r1 <= w * (1.0 + 1e-9))
    t = np.where(good, r1, r2)
    return left + np.clip(t, 0.0, w)


def bisect_quantile(u, left, right, slope, iters=100):
    """Ground-truth CDF inversion by plain bisection."""
    u = np.asarray(u, dtype=float)
    lo = np.full(u.shape, float(left))
    hi = np.full(u.shape, float(right))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = density_cdf(mid, left, right, slope) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def sample_density(rng, n, left, right, slope):
    return density_quantile(rng.random(n), left, right, slope)


# -------------------------------------------------- product transport cost


def mc_transport_cost(src_factors, tgt_factors, n, rng):
    """Monte-Carlo estimate (mean, standard error) of the product-map cost.

    Draws from the source product density by inverse-CDF sampling, pushes each
    coordinate through its own quantile map, and averages half the squared
    displacement.
    """
    total = np.zeros(n)
    for (sl, sr, sa), (tl, tr, ta) in zip(src_factors, tgt_factors):
        x = sample_density(rng, n, sl, sr, sa)
        u = np.clip(density_cdf(x, sl, sr, sa), 0.0, 1.0)
        y = density_quantile(u, tl, tr, ta)
        total += 0.5 * (y - x) ** 2
    return float(total.mean()), float(total.std(ddof=1) / np.sqrt(n))


def quad_cost(src, tgt, n=2_000_001):
    """Dense-trapezoid reference for the 1-d transport cost."""
    sl, sr, sa = src
    tl, tr, ta = tgt
    x = np.linspace(sl, sr, n)
    u = np.clip(density_cdf(x, sl, sr, sa), 0.0, 1.0)
    y = density_quantile(u, tl, tr, ta)
    integrand = 0.5 * (y - x) ** 2 * density_pdf(x, sl, sr, sa)
    return float(np.trapezoid(integrand, x))


def ks_statistic(values, cdf_fn) -> float:
    """One-sample Kolmogorov-Smirnov statistic against an analytic CDF."""
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    f = cdf_fn(v)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - f), np.max(f - (grid - 1.0 / n))))


def ks_two_sample(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    both = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, both, side="right") / a.size
    cdf_b = np.searchsorted(b, both, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


# ------------------------------------------------------------- gaussians


def bures_w2(mean1, cov1, mean2, cov2) -> float:
    """Quadratic Wasserstein distance between Gaussians via scipy sqrtm."""
    mean1 = np.asarray(mean1, dtype=float)
    mean2 = np.asarray(mean2, dtype=float)
    cov1 = np.asarray(cov1, dtype=float)
    cov2 = np.asarray(cov2, dtype=float)
    root = scipy.linalg.sqrtm(cov2)
    cross = scipy.linalg.sqrtm(root @ cov1 @ root)
    sq = np.sum((mean1 - mean2) ** 2) + np.trace(cov1 + cov2 - 2.0 * np.real(cross))
    return float(np.sqrt(max(float(np.real(sq)), 0.0)))


def gaussian_map_matrix(cov1, cov2) -> np.ndarray:
    root = scipy.linalg.sqrtm(np.asarray(cov2, dtype=float))
    middle = scipy.linalg.sqrtm(root @ np.asarray(cov1, dtype=float) @ root)
    return np.real(root @ np.linalg.inv(middle) @ root)


# ----------------------------------------- transportation LP enumeration

_TREE_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _spanning_trees(m: int, n: int):
    """All spanning-tree arc subsets of the complete bipartite graph, with the
    linear map taking node balances to the unique tree flows.

    Returns (subsets, maps): subsets is (T, m+n-1) of arc ids (arc = i*n + j),
    maps is (T, m+n-1, m+n) with flows = maps[t] @ concat(p, q).
    """
    key = (m, n)
    if key in _TREE_CACHE:
        return _TREE_CACHE[key]
    arcs = [(i, j) for i in range(m) for j in range(n)]
    N = m + n
    subsets = []
    maps = []
    for combo in itertools.combinations(range(len(arcs)), N - 1):
        parent = list(range(N))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for k in combo:
            i, j = arcs[k]
            a, b = find(i), find(m + j)
            if a == b:
                ok = False
                break
            parent[a] = b
        if not ok:
            continue
        adj: dict[int, list[tuple[int, int]]] = {x: [] for x in range(N)}
        for t, k in enumerate(combo):
            i, j = arcs[k]
            adj[i].append((t, m + j))
            adj[m + j].append((t, i))
        order = []
        parent_of = {0: (-1, -1)}
        queue = deque([0])
        while queue:
            x = queue.popleft()
            order.append(x)
            for t, other in adj[x]:
                if other not in parent_of:
                    parent_of[other] = (x, t)
                    queue.append(other)
        coeff = np.eye(N)
        tree_map = np.zeros((N - 1, N))
        for x in reversed(order):
            px, t = parent_of[x]
            if px < 0:
                continue
            tree_map[t] = coeff[x]
            coeff[px] -= coeff[x]
        subsets.append(combo)
        maps.append(tree_map)
    result = (np.asarray(subsets, dtype=np.int64), np.stack(maps))
    _TREE_CACHE[key] = result
    return result


def enumerate_transportation_optimum(p, q, cost_matrix) -> float:
    """Exact optimum of the dense transportation LP by basic-solution enumeration."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    cost = np.asarray(cost_matrix, dtype=float).ravel()
    subsets, maps = _spanning_trees(p.size, q.size)
    balances = np.concatenate([p, q])
    flows = maps @ balances                        # (T, N-1)
    feasible = flows.min(axis=1) >= -1e-12
    objectives = np.einsum("tk,tk->t", cost[subsets], flows)
    return float(objectives[feasible].min())
