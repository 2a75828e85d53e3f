"""Elastic shape representation of curves.

Curves in R^2 or R^3 are represented by their square-root velocity (SRV)
function nu(t) = alpha'(t) / sqrt(|alpha'(t)|), sampled uniformly on [0, 1].
After unit-norm scaling, SRV functions live on the unit sphere of L2, where
open-curve geodesics are great-circle arcs.  Closed curves are additionally
projected onto the subset whose reconstruction closes up, and geodesics are
approximated by spherical interpolation re-projected onto that subset.

Conventions
-----------
Open curves with n samples sit at t_i = i/(n-1) and integrals use the
trapezoid rule.  Closed curves sit at t_i = i/n (the endpoint is not
duplicated) and integrals use the cyclic Riemann mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConvergenceError

KINDS = ("open", "closed")

CLOSURE_TOL = 1e-6
CLOSURE_MAX_ITER = 200


@dataclass(frozen=True)
class Curve:
    """An ordered polyline in R^2 or R^3.

    Parameters
    ----------
    points : (n, d) float array, d in {2, 3}, n >= 3.
    kind : "open" or "closed".  Closed curves must not duplicate the
        first point at the end; the wrap-around segment is implied.
    """

    points: np.ndarray
    kind: str = "open"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ValueError(f"curve points must be (n, 2) or (n, 3), got {pts.shape}")
        if pts.shape[0] < 3:
            raise ValueError(f"curve needs at least 3 points, got {pts.shape[0]}")
        if not np.isfinite(pts).all():
            raise ValueError("curve points must be finite")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "closed" and np.array_equal(pts[0], pts[-1]):
            raise ValueError("closed curve must not duplicate its first point")
        object.__setattr__(self, "points", pts)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SrvFunction:
    """A sampled SRV function with unit L2 norm.

    values[i] is the SRV evaluated at t_i (same sampling convention as
    Curve).  kind records whether the underlying curve is open or closed.
    """

    values: np.ndarray
    kind: str = "open"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] not in (2, 3):
            raise ValueError(f"srv values must be (n, 2) or (n, 3), got {vals.shape}")
        if not np.isfinite(vals).all():
            raise ValueError("srv values must be finite")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "values", vals)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def param_weights(n: int, kind: str) -> np.ndarray:
    """Quadrature weights for integrals over [0, 1] at the standard sampling."""
    if kind == "open":
        w = np.full(n, 1.0 / (n - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return w
    return np.full(n, 1.0 / n)


def srv_inner(a: SrvFunction, b: SrvFunction) -> float:
    """L2 inner product of two SRV functions on a common grid."""
    if a.kind != b.kind or a.values.shape != b.values.shape:
        raise ValueError("srv functions must share kind and sampling")
    w = param_weights(a.n_samples, a.kind)
    return float(np.sum(w * np.einsum("ij,ij->i", a.values, b.values)))


def _weighted_inner(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(w * np.einsum("ij,ij->i", u, v)))


def _derivative(samples: np.ndarray, kind: str) -> np.ndarray:
    """Finite-difference derivative w.r.t. t on the standard grid.

    Central differences inside; second-order one-sided stencils at open
    endpoints so that polynomial examples like alpha(t) = (t^2, 0, 0)
    come out exact at t = 0.
    """
    n = samples.shape[0]
    if kind == "closed":
        h = 1.0 / n
        return (np.roll(samples, -1, axis=0) - np.roll(samples, 1, axis=0)) / (2 * h)
    h = 1.0 / (n - 1)
    d = np.empty_like(samples)
    d[1:-1] = (samples[2:] - samples[:-2]) / (2 * h)
    d[0] = (-3 * samples[0] + 4 * samples[1] - samples[2]) / (2 * h)
    d[-1] = (3 * samples[-1] - 4 * samples[-2] + samples[-3]) / (2 * h)
    return d


def srv_transform(curve: Curve) -> SrvFunction:
    """Compute the unit-norm SRV function of a curve.

    Raises
    ------
    ValueError
        If two consecutive samples coincide (the offending segment index
        is named; for closed curves the wrap segment is index n-1).
    """
    pts = curve.points
    n = pts.shape[0]
    seg = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    bad = np.nonzero(seg_len == 0.0)[0]
    if bad.size:
        raise ValueError(f"coincident consecutive points at segment {bad[0]}")
    if curve.kind == "closed" and np.linalg.norm(pts[0] - pts[-1]) == 0.0:
        raise ValueError(f"coincident consecutive points at segment {n - 1}")

    vel = _derivative(pts, curve.kind)
    speed = np.linalg.norm(vel, axis=1)
    # A zero *derivative* sample (e.g. an exact reversal) maps to nu = 0.
    denom = np.sqrt(np.where(speed > 0.0, speed, 1.0))
    vals = vel / denom[:, None]

    w = param_weights(n, curve.kind)
    norm_sq = _weighted_inner(vals, vals, w)
    if norm_sq <= 0.0:
        raise ValueError("curve has zero total speed")
    return SrvFunction(vals / np.sqrt(norm_sq), curve.kind)


def srv_inverse(srv: SrvFunction) -> Curve:
    """Reconstruct a curve from an SRV function.

    The curve alpha(t) = integral_0^t nu |nu| ds starts at the origin and
    has unit length; translation and scale of the original curve are not
    recoverable.
    """
    vals = srv.values
    n = vals.shape[0]
    integrand = vals * np.linalg.norm(vals, axis=1)[:, None]
    if srv.kind == "open":
        h = 1.0 / (n - 1)
        steps = 0.5 * h * (integrand[1:] + integrand[:-1])
        pts = np.vstack([np.zeros((1, vals.shape[1])), np.cumsum(steps, axis=0)])
    else:
        h = 1.0 / n
        wrapped = np.vstack([integrand, integrand[:1]])
        steps = 0.5 * h * (wrapped[1:-1] + wrapped[:-2])
        pts = np.vstack([np.zeros((1, vals.shape[1])), np.cumsum(steps, axis=0)])
    return Curve(pts, srv.kind)


def closure_residual(srv: SrvFunction) -> np.ndarray:
    """Integral of nu |nu| over [0, 1]; zero iff the reconstruction closes."""
    w = param_weights(srv.n_samples, srv.kind)
    integrand = srv.values * np.linalg.norm(srv.values, axis=1)[:, None]
    return w @ integrand


def project_closed(srv: SrvFunction) -> SrvFunction:
    """Project an SRV function onto the closed-curve subset of the sphere.

    Newton iterations drive the closure residual integral nu|nu| to zero
    while re-normalizing to unit L2 norm each step.

    Raises
    ------
    ValueError
        If the input is the zero function.
    ConvergenceError
        If the residual is still above 1e-6 after 200 iterations.
    """
    vals = np.array(srv.values, dtype=float)
    n, d = vals.shape
    w = param_weights(n, srv.kind)
    norm_sq = _weighted_inner(vals, vals, w)
    if norm_sq <= 0.0:
        raise ValueError("cannot project the zero function")
    vals /= np.sqrt(norm_sq)

    def _residual_norm(v: np.ndarray) -> float:
        sp = np.linalg.norm(v, axis=1)
        return float(np.linalg.norm(w @ (v * sp[:, None])))

    for _ in range(CLOSURE_MAX_ITER):
        speed = np.linalg.norm(vals, axis=1)
        residual = w @ (vals * speed[:, None])
        res_norm = float(np.linalg.norm(residual))
        if res_norm <= CLOSURE_TOL:
            return SrvFunction(vals, srv.kind)
        # Jacobian of the residual w.r.t. coefficients along the constraint
        # gradient directions  b_a(t) = |nu| e_a + (nu_a / |nu|) nu:
        # dR = (sum w |nu|^2) beta + 3 sum w (nu . beta) nu.
        safe = np.where(speed > 0.0, speed, 1.0)
        jac = np.eye(d) * np.sum(w * speed**2)
        jac += 3.0 * (vals * w[:, None]).T @ vals
        try:
            beta = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError:
            beta, *_ = np.linalg.lstsq(jac, -residual, rcond=None)
        basis = speed[:, None] * np.ones(d) * beta + (vals / safe[:, None]) * (vals @ beta)[:, None]
        # Backtrack the Newton step until the residual actually shrinks;
        # full steps overshoot when the warped function has near-zero
        # speed samples.
        step = 1.0
        trial = None
        for _ in range(25):
            cand = vals + step * basis
            nrm = _weighted_inner(cand, cand, w)
            if nrm > 0.0:
                cand = cand / np.sqrt(nrm)
                if _residual_norm(cand) < res_norm:
                    trial = cand
                    break
            step *= 0.5
        if trial is None:
            break
        vals = trial

    speed = np.linalg.norm(vals, axis=1)
    res = float(np.linalg.norm(w @ (vals * speed[:, None])))
    raise ConvergenceError(
        f"closure projection residual {res:.3e} above {CLOSURE_TOL} "
        f"after {CLOSURE_MAX_ITER} iterations"
    )


def _check_rotation(rotation: np.ndarray, dim: int) -> np.ndarray:
    rot = np.asarray(rotation, dtype=float)
    if rot.shape != (dim, dim):
        raise ValueError(f"rotation must be {dim}x{dim}, got {rot.shape}")
    if not np.allclose(rot.T @ rot, np.eye(dim), atol=1e-9):
        raise ValueError("rotation matrix is not orthogonal")
    if np.linalg.det(rot) < 0.0:
        raise ValueError("rotation matrix has negative determinant")
    return rot


def group_action(srv: SrvFunction, rotation: np.ndarray, gamma: np.ndarray) -> SrvFunction:
    """Apply a rotation and reparameterization: (O, gamma) . nu = O (nu o gamma) sqrt(gamma').

    Parameters
    ----------
    rotation : (d, d) element of SO(d).
    gamma : (n,) strictly increasing map sampled on the standard grid.
        Open: gamma[0] = 0 and gamma[-1] = 1 (within 1e-9).  Closed:
        gamma[0] in [0, 1) and the implied wrap gamma(1) = gamma[0] + 1,
        so gamma[-1] must stay below gamma[0] + 1; values act modulo 1.

    The result is re-normalized to unit L2 norm, absorbing quadrature
    error of the discrete sqrt(gamma') factor.
    """
    rot = _check_rotation(rotation, srv.dim)
    g = np.asarray(gamma, dtype=float)
    n = srv.n_samples
    if g.shape != (n,):
        raise ValueError(f"gamma must have shape ({n},), got {g.shape}")
    if np.any(np.diff(g) <= 0.0):
        raise ValueError("gamma must be strictly increasing")

    if srv.kind == "open":
        if abs(g[0]) > 1e-9 or abs(g[-1] - 1.0) > 1e-9:
            raise ValueError("open-curve gamma must fix the endpoints 0 and 1")
        t = np.linspace(0.0, 1.0, n)
        spline = CubicSpline(t, srv.values, axis=0, bc_type="natural")
        warped = spline(np.clip(g, 0.0, 1.0))
        h = 1.0 / (n - 1)
        gdot = np.empty(n)
        gdot[1:-1] = (g[2:] - g[:-2]) / (2 * h)
        gdot[0] = (-3 * g[0] + 4 * g[1] - g[2]) / (2 * h)
        gdot[-1] = (3 * g[-1] - 4 * g[-2] + g[-3]) / (2 * h)
    else:
        if not (0.0 <= g[0] < 1.0):
            raise ValueError("closed-curve gamma must start in [0, 1)")
        if g[-1] >= g[0] + 1.0:
            raise ValueError("closed-curve gamma must wind exactly once")
        h = 1.0 / n
        t_ext = np.arange(n + 1) * h
        vals_ext = np.vstack([srv.values, srv.values[:1]])
        spline = CubicSpline(t_ext, vals_ext, axis=0, bc_type="periodic")
        warped = spline(np.mod(g, 1.0))
        g_ext = np.concatenate([[g[-1] - 1.0], g, [g[0] + 1.0]])
        gdot = (g_ext[2:] - g_ext[:-2]) / (2 * h)

    gdot = np.maximum(gdot, 0.0)
    out = (warped * np.sqrt(gdot)[:, None]) @ rot.T
    w = param_weights(n, srv.kind)
    norm_sq = _weighted_inner(out, out, w)
    if norm_sq <= 0.0:
        raise ValueError("group action collapsed the function to zero")
    return SrvFunction(out / np.sqrt(norm_sq), srv.kind)


def preshape_geodesic(
    srv0: SrvFunction, srv1: SrvFunction, path_points: int = 15
) -> tuple[np.ndarray, float]:
    """Geodesic between two SRV functions in the preshape space.

    Open curves: the great-circle arc on the L2 unit sphere, with
    distance arccos of the inner product.  Closed curves: spherical
    interpolation with every interior path point re-projected onto the
    closed subset; the distance is the summed chordal L2 length of the
    projected path.

    Returns
    -------
    path : (path_points, n, d) array of SRV samples along the path.
    distance : float
    """
    if srv0.kind != srv1.kind or srv0.values.shape != srv1.values.shape:
        raise ValueError("srv functions must share kind and sampling")
    if path_points < 2:
        raise ValueError("path needs at least 2 points")
    if np.array_equal(srv0.values, srv1.values):
        return np.repeat(srv0.values[None], path_points, axis=0), 0.0
    w = param_weights(srv0.n_samples, srv0.kind)
    cos_theta = np.clip(_weighted_inner(srv0.values, srv1.values, w), -1.0, 1.0)
    theta = float(np.arccos(cos_theta))

    s = np.linspace(0.0, 1.0, path_points)
    if np.sin(theta) < 1e-12:
        path = np.array([(1 - si) * srv0.values + si * srv1.values for si in s])
        for k in range(path_points):
            nrm = np.sqrt(_weighted_inner(path[k], path[k], w))
            if nrm > 0:
                path[k] /= nrm
    else:
        path = np.array(
            [
                (np.sin((1 - si) * theta) * srv0.values + np.sin(si * theta) * srv1.values)
                / np.sin(theta)
                for si in s
            ]
        )

    if srv0.kind == "open":
        return path, theta

    for k in range(1, path_points - 1):
        path[k] = project_closed(SrvFunction(path[k], "closed")).values
    length = 0.0
    for k in range(path_points - 1):
        diff = path[k + 1] - path[k]
        length += np.sqrt(_weighted_inner(diff, diff, w))
    return path, float(length)
