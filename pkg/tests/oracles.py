"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive: ranks over GF(2) by explicit
elimination, Betti numbers from full boundary matrices, geodesic
lengths by brute gradient descent on path energy, and alignment by
exhaustive grid search.  Nothing imports the algorithms under test.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def rank_gf2(rows: list[int]) -> int:
    """Rank of a GF(2) matrix given as row bitmasks."""
    rank = 0
    pivots: list[int] = []
    for row in rows:
        for piv in pivots:
            row = min(row, row ^ piv)
        if row:
            pivots.append(row)
            pivots.sort(reverse=True)
            rank += 1
    return rank


def complex_at(
    points: np.ndarray,
    values: np.ndarray | None,
    t: float,
    tau: float | None,
    max_dim: int = 2,
) -> dict[int, list[tuple[int, ...]]]:
    """All simplices of the Rips complex at scale t (and value cutoff tau)."""
    n = len(points)
    if values is None:
        alive = list(range(n))
    else:
        alive = [i for i in range(n) if values[i] <= tau]
    dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    simplices: dict[int, list[tuple[int, ...]]] = {0: [(i,) for i in alive]}
    for dim in range(1, max_dim + 1):
        sims = []
        for combo in combinations(alive, dim + 1):
            if max(dist[a, b] for a, b in combinations(combo, 2)) <= t:
                sims.append(combo)
        simplices[dim] = sims
    return simplices


def betti_oracle(
    points: np.ndarray,
    values: np.ndarray | None,
    t: float,
    tau: float | None,
    p: int,
    max_dim: int = 2,
) -> int:
    """beta_p at a single grade from explicit boundary-matrix ranks.

    beta_p = dim C_p - rank d_p - rank d_{p+1}, coefficients in GF(2).
    """
    simplices = complex_at(points, values, t, tau, max_dim)
    index = {dim: {s: i for i, s in enumerate(sims)} for dim, sims in simplices.items()}

    def boundary_rank(dim: int) -> int:
        if dim < 1 or dim > max_dim or not simplices.get(dim):
            return 0
        rows = []
        for s in simplices[dim]:
            mask = 0
            for face in combinations(s, dim):
                mask |= 1 << index[dim - 1][face]
            rows.append(mask)
        return rank_gf2(rows)

    n_p = len(simplices.get(p, []))
    return n_p - boundary_rank(p) - boundary_rank(p + 1)


def betti_from_barcode(intervals, t: float) -> int:
    """Number of barcode intervals [b, d) containing t."""
    return sum(1 for b, d in intervals if b <= t < d)


def path_energy_distance(
    q0: np.ndarray,
    q1: np.ndarray,
    weights: np.ndarray,
    n_free: int = 16,
    iters: int = 4000,
    lr: float = 0.05,
) -> float:
    """Geodesic length on the weighted unit sphere via path-energy descent.

    The path has n_free interior nodes, each kept on the sphere
    <x, x>_w = 1 by renormalization after every gradient step.  The
    returned length sums exact great-circle arcs between consecutive
    nodes, so at convergence it is the true geodesic distance.
    """
    w = weights

    def norm(x):
        return float(np.sqrt(np.sum(w[:, None] * x * x)))

    nodes = [q0 + (q1 - q0) * s for s in np.linspace(0.0, 1.0, n_free + 2)]
    nodes = [x / norm(x) for x in nodes]
    nodes = np.stack(nodes)
    for _ in range(iters):
        grad = 2.0 * (2.0 * nodes[1:-1] - nodes[:-2] - nodes[2:])
        nodes[1:-1] -= lr * grad
        for k in range(1, n_free + 1):
            nodes[k] /= norm(nodes[k])
    length = 0.0
    for k in range(n_free + 1):
        diff = nodes[k + 1] - nodes[k]
        chord = float(np.sqrt(np.sum(w[:, None] * diff * diff)))
        length += 2.0 * np.arcsin(min(chord / 2.0, 1.0))
    return length


def brute_force_closed_distance(q0: np.ndarray, q1: np.ndarray, weights: np.ndarray,
                                n_rot: int = 64, n_shift: int = 64) -> float:
    """Coarse alignment distance for planar closed SRVs.

    Minimizes arccos of the weighted inner product over a grid of
    in-plane rotations and integer cyclic shifts only (no elastic
    warping), giving an upper bound for the elastic shape distance.
    """
    n = len(q0)
    w = weights
    best = np.inf
    shifts = np.linspace(0, n, n_shift, endpoint=False).astype(int)
    for ang in np.linspace(0.0, 2.0 * np.pi, n_rot, endpoint=False):
        c, s = np.cos(ang), np.sin(ang)
        rot = np.array([[c, -s], [s, c]])
        q1r = q1 @ rot.T
        for shift in shifts:
            q1s = np.roll(q1r, -shift, axis=0)
            inner = float(np.sum(w[:, None] * q0 * q1s))
            best = min(best, float(np.arccos(np.clip(inner, -1.0, 1.0))))
    return best


def trapezoid_weights(n: int, closed: bool) -> np.ndarray:
    """Quadrature weights matching uniform sampling of [0, 1]."""
    if closed:
        return np.full(n, 1.0 / n)
    w = np.full(n, 1.0 / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w
