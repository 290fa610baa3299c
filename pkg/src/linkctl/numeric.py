"""Numerical engine: rank with tolerance, projection onto the constraint set,
sampling, tangent frames, finite-difference derivative oracles, reduced work
data, pseudo-arclength continuation, and local branch counting.

All stochastic operations are pure functions of (inputs, seed): every sample
draws from its own substream keyed by (seed, index).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    CoincidentEndpoints,
    InvalidSpec,
    NoConvergence,
    NoFeasiblePoint,
    NotACurve,
    OffConstraint,
)
from .model import (
    Configuration,
    Linkage,
    SubspaceBasis,
    check_match,
    constraint_jacobian,
    constraint_residual,
    pointed_normalize,
    reduced_normalize,
)

__all__ = [
    "Gauge",
    "TangentFrame",
    "BranchReport",
    "TraceResult",
    "WorkData",
    "numerical_rank",
    "project_to_cspace",
    "sample_cspace",
    "tangent_frame",
    "work_image",
    "fd_gradient",
    "fd_hessian",
    "reduced_work_data",
    "trace_curve",
    "local_branch_count",
]

ABS_FLOOR = 1e-12


class Gauge(enum.Enum):
    FULL = "full"
    POINTED = "pointed"
    REDUCED = "reduced"


@dataclass(frozen=True)
class TangentFrame:
    """Orthonormal basis of null(d(lambda)) with a gauge subspace projected out.

    FULL removes nothing; POINTED removes the d translation generators;
    REDUCED additionally removes the rigid rotation generators (including, in
    d=3, the residual rotation about the pinned direction).
    """

    base_config: Configuration
    basis: np.ndarray  # (m, N*d), orthonormal rows
    gauge: Gauge

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


@dataclass(frozen=True)
class BranchReport:
    """Local branch structure on the sphere of the given radius."""

    radius: float
    sample_count: int
    branch_count: int
    cluster_sizes: tuple[int, ...]
    stable: bool
    halved_branch_count: int


@dataclass(frozen=True)
class TraceResult:
    points: tuple[Configuration, ...]
    stop_reason: str
    closed: bool


@dataclass(frozen=True)
class WorkData:
    """Gradient and Hessian of the endpoint-distance function on a reduced frame."""

    gradient: np.ndarray
    hessian: np.ndarray
    frame: TangentFrame


def numerical_rank(matrix: np.ndarray, tol_rank: float = 1e-8) -> int:
    """Number of singular values above tol_rank * sigma_max (absolute floor 1e-12)."""
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        return 0
    if not np.all(np.isfinite(m)):
        raise InvalidSpec("matrix entries must be finite")
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > max(tol_rank * s[0], ABS_FLOOR)))


def _pinv_solve(jac: np.ndarray, rhs: np.ndarray, tol_rank: float) -> np.ndarray:
    """Minimal-norm least-squares solve via truncated SVD."""
    u, s, vt = np.linalg.svd(jac, full_matrices=False)
    if s.size == 0:
        return np.zeros(jac.shape[1])
    cutoff = max(tol_rank * s[0], ABS_FLOOR)
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return vt.T @ (inv * (u.T @ rhs))


def _gauss_newton(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    jacobian_fn: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tol: float,
    max_iter: int,
    tol_rank: float = 1e-8,
) -> np.ndarray:
    """Damped Gauss-Newton (Armijo backtracking, factor 0.5, c=1e-4)."""
    x = np.array(x0, dtype=float)
    r = residual_fn(x)
    if np.max(np.abs(r)) < tol:
        return x
    for _ in range(max_iter):
        jac = jacobian_fn(x)
        delta = -_pinv_solve(jac, r, tol_rank)
        phi = float(r @ r)
        slope = float(2.0 * (jac.T @ r) @ delta)
        alpha = 1.0
        while True:
            x_new = x + alpha * delta
            r_new = residual_fn(x_new)
            if float(r_new @ r_new) <= phi + 1e-4 * alpha * slope:
                break
            alpha *= 0.5
            if alpha < 1e-12:
                raise NoConvergence("line search stalled")
        x, r = x_new, r_new
        if np.max(np.abs(r)) < tol:
            return x
    raise NoConvergence(f"no convergence after {max_iter} iterations (|r|_inf={np.max(np.abs(r)):.3g})")


def project_to_cspace(
    linkage: Linkage,
    guess: Configuration,
    tol: float = 1e-10,
    max_iter: int = 100,
    tol_rank: float = 1e-8,
    preserve_pointed: bool = True,
) -> Configuration:
    """Gauss-Newton projection of a guess onto the constraint set.

    A guess already on the set is returned unchanged.  If the guess had its
    base vertex at the origin, the result is re-pinned there (translation
    leaves the constraints exact).
    """
    check_match(linkage, guess)
    if np.max(np.abs(constraint_residual(linkage, guess))) < tol:
        return guess

    d = linkage.ambient_dim
    was_pointed = bool(
        np.linalg.norm(guess.points[linkage.base_vertex])
        < 1e-12 * (1.0 + np.max(np.abs(guess.points)))
    )

    def res(x: np.ndarray) -> np.ndarray:
        return constraint_residual(linkage, Configuration.from_flat(x, d))

    def jac(x: np.ndarray) -> np.ndarray:
        return constraint_jacobian(linkage, Configuration.from_flat(x, d))

    x = _gauss_newton(res, jac, guess.flat, tol, max_iter, tol_rank)
    out = Configuration.from_flat(x, d)
    if preserve_pointed and was_pointed:
        out = pointed_normalize(out, linkage.base_vertex)
    return out


def sample_cspace(linkage: Linkage, n: int, seed: int = 0, tol: float = 1e-10) -> list[Configuration]:
    """Project n random ambient starts onto the constraint set; failures are dropped.

    Starts draw coordinates uniformly from a box of half-width sum(lengths);
    attempt i uses the substream keyed by (seed, i), so results are
    deterministic and schedule-independent.
    """
    if n < 1:
        raise InvalidSpec("need at least one sample attempt")
    box = linkage.length_scale
    out: list[Configuration] = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        start = Configuration(rng.uniform(-box, box, (linkage.n_vertices, linkage.ambient_dim)))
        try:
            out.append(project_to_cspace(linkage, start, tol=tol))
        except NoConvergence:
            continue
    if not out:
        raise NoFeasiblePoint(f"all {n} projection attempts failed")
    return out


def _rotation_generators(d: int) -> list[np.ndarray]:
    if d == 2:
        return [np.array([[0.0, -1.0], [1.0, 0.0]])]
    gens = []
    for a in range(3):
        k = np.zeros((3, 3))
        b, c = (a + 1) % 3, (a + 2) % 3
        k[b, c] = -1.0
        k[c, b] = 1.0
        gens.append(k)
    return gens


def _gauge_vectors(points: np.ndarray, gauge: Gauge) -> np.ndarray:
    """Rigid-motion generator fields to be projected out of the null space."""
    n, d = points.shape
    vecs: list[np.ndarray] = []
    if gauge in (Gauge.POINTED, Gauge.REDUCED):
        for j in range(d):
            t = np.zeros((n, d))
            t[:, j] = 1.0
            vecs.append(t.reshape(-1))
    if gauge is Gauge.REDUCED:
        for gen in _rotation_generators(d):
            field = points @ gen.T
            vecs.append(field.reshape(-1))
    if not vecs:
        return np.zeros((0, n * d))
    return np.stack(vecs, axis=0)


def _orthonormal_rows(rows: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the row space, dropping near-dependent directions."""
    if rows.shape[0] == 0:
        return rows
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, rows.shape[1]))
    keep = s > max(rel_tol * s[0], ABS_FLOOR)
    return vt[: int(np.sum(keep))]


def tangent_frame(
    linkage: Linkage,
    config: Configuration,
    gauge: Gauge = Gauge.REDUCED,
    tol_rank: float = 1e-8,
) -> TangentFrame:
    """Orthonormal basis of the constraint null space minus the gauge subspace.

    Requires the configuration to satisfy the constraints to 1e-8.
    """
    check_match(linkage, config)
    res = constraint_residual(linkage, config)
    if np.max(np.abs(res)) >= 1e-8 * (1.0 + linkage.length_scale):
        raise OffConstraint(f"residual too large for tangent analysis: {np.max(np.abs(res)):.3g}")

    jac = constraint_jacobian(linkage, config)
    nd = jac.shape[1]
    _, s, vt = np.linalg.svd(jac, full_matrices=True)
    cutoff = max(tol_rank * (s[0] if s.size else 0.0), ABS_FLOOR)
    rank = int(np.sum(s > cutoff))
    null = vt[rank:]

    gauge_vecs = _orthonormal_rows(_gauge_vectors(config.points, gauge))
    if gauge_vecs.shape[0] and null.shape[0]:
        null = null - (null @ gauge_vecs.T) @ gauge_vecs
    basis = _orthonormal_rows(null)
    if basis.shape[0] == 0:
        basis = np.zeros((0, nd))
    return TangentFrame(base_config=config, basis=basis, gauge=gauge)


def work_image(
    linkage: Linkage,
    config: Configuration,
    base: int,
    effector: int,
    tol_rank: float = 1e-8,
) -> SubspaceBasis:
    """Image of the effector-displacement differential over the pointed tangent."""
    d = linkage.ambient_dim
    frame = tangent_frame(linkage, config, Gauge.POINTED, tol_rank)
    if frame.dim == 0:
        return SubspaceBasis(d, np.zeros((0, d)))
    fields = frame.basis.reshape(frame.dim, linkage.n_vertices, d)
    rows = fields[:, effector, :] - fields[:, base, :]
    basis = _orthonormal_rows(rows, rel_tol=max(tol_rank, 1e-9))
    return SubspaceBasis(d, basis)


def _retract(linkage: Linkage, flat: np.ndarray, tol_rank: float) -> Configuration:
    return project_to_cspace(
        linkage,
        Configuration.from_flat(flat, linkage.ambient_dim),
        tol=1e-12,
        max_iter=60,
        tol_rank=tol_rank,
        preserve_pointed=False,
    )


def _default_step(config: Configuration) -> float:
    return 1e-4 * (1.0 + float(np.max(np.abs(config.points))))


def fd_gradient(
    linkage: Linkage,
    f: Callable[[Configuration], float],
    frame: TangentFrame,
    h: Optional[float] = None,
    tol_rank: float = 1e-8,
) -> np.ndarray:
    """Central-difference gradient of f along the frame, re-projecting each
    evaluation point onto the constraint set first."""
    v0 = frame.base_config.flat
    step = h if h is not None else _default_step(frame.base_config)
    grad = np.zeros(frame.dim)
    for i in range(frame.dim):
        fp = f(_retract(linkage, v0 + step * frame.basis[i], tol_rank))
        fm = f(_retract(linkage, v0 - step * frame.basis[i], tol_rank))
        grad[i] = (fp - fm) / (2.0 * step)
    return grad


def fd_hessian(
    linkage: Linkage,
    f: Callable[[Configuration], float],
    frame: TangentFrame,
    h: Optional[float] = None,
    tol_rank: float = 1e-8,
) -> np.ndarray:
    """Symmetrized central-difference Hessian of f along the frame, with
    retraction-first evaluation so curvature of the constraint set is included."""
    v0 = frame.base_config.flat
    step = h if h is not None else _default_step(frame.base_config)
    m = frame.dim
    f0 = f(_retract(linkage, v0, tol_rank))
    hess = np.zeros((m, m))
    plus = np.zeros(m)
    minus = np.zeros(m)
    for i in range(m):
        plus[i] = f(_retract(linkage, v0 + step * frame.basis[i], tol_rank))
        minus[i] = f(_retract(linkage, v0 - step * frame.basis[i], tol_rank))
        hess[i, i] = (plus[i] + minus[i] - 2.0 * f0) / step**2
    for i in range(m):
        for j in range(i + 1, m):
            bij = frame.basis[i] + frame.basis[j]
            dij = frame.basis[i] - frame.basis[j]
            fpp = f(_retract(linkage, v0 + step * bij, tol_rank))
            fmm = f(_retract(linkage, v0 - step * bij, tol_rank))
            fpm = f(_retract(linkage, v0 + step * dij, tol_rank))
            fmp = f(_retract(linkage, v0 - step * dij, tol_rank))
            hess[i, j] = hess[j, i] = (fpp + fmm - fpm - fmp) / (4.0 * step**2)
    return hess


def reduced_work_data(
    linkage: Linkage,
    config: Configuration,
    effector: Optional[int] = None,
    tol_rank: float = 1e-8,
    h: Optional[float] = None,
) -> WorkData:
    """Gradient and Hessian of the base-to-effector distance on the reduced frame.

    The gradient is the analytic ambient gradient projected onto the frame;
    the Hessian is the retraction-corrected finite difference.  Raises
    CoincidentEndpoints when base and effector occupy the same point.
    """
    eff = effector if effector is not None else linkage.end_effector
    if eff is None:
        raise InvalidSpec("no effector given and linkage has none")
    base = linkage.base_vertex
    check_match(linkage, config)
    p = config.points
    diff = p[eff] - p[base]
    dist = float(np.linalg.norm(diff))
    scale = 1.0 + float(np.max(np.abs(p)))
    if dist < 1e-9 * scale:
        raise CoincidentEndpoints("effector coincides with base; reduced work data undefined")

    frame = tangent_frame(linkage, config, Gauge.REDUCED, tol_rank)
    unit = diff / dist
    amb = np.zeros_like(p)
    amb[eff] += unit
    amb[base] -= unit
    grad = frame.basis @ amb.reshape(-1) if frame.dim else np.zeros(0)

    def dist_fn(cfg: Configuration) -> float:
        q = cfg.points
        return float(np.linalg.norm(q[eff] - q[base]))

    hess = fd_hessian(linkage, dist_fn, frame, h=h, tol_rank=tol_rank)
    return WorkData(gradient=grad, hessian=hess, frame=frame)


def _gauge_fix(linkage: Linkage, config: Configuration) -> Configuration:
    if linkage.base_link is not None:
        return reduced_normalize(linkage, config)
    return pointed_normalize(config, linkage.base_vertex)


def _singularity_proximity(linkage: Linkage, config: Configuration) -> float:
    """Ratio sigma_k / sigma_1 of the constraint Jacobian; small near rank drops."""
    s = np.linalg.svd(constraint_jacobian(linkage, config), compute_uv=False)
    k = linkage.k
    if s.size < k or s[0] == 0.0:
        return 0.0
    return float(s[k - 1] / s[0])


def trace_curve(
    linkage: Linkage,
    start: Configuration,
    step: float = 0.05,
    max_steps: int = 2000,
    tol_rank: float = 1e-8,
    detect_tol: float = 1e-4,
    project_tol: float = 1e-10,
    min_cos: float = 0.5,
    direction: Optional[np.ndarray] = None,
) -> TraceResult:
    """Pseudo-arclength continuation of a one-dimensional solution curve.

    Predicts along the unit reduced tangent (orientation kept by sign
    matching), corrects by Gauss-Newton in the hyperplane orthogonal to the
    predictor, and stops on loop closure, step exhaustion, or singularity
    indicators: a jump in tangent direction or dimension ("tangent_jump"),
    the rank-proximity ratio falling below detect_tol, or a corrector that
    keeps failing as the step shrinks ("stalled_at_singularity").
    """
    v = _gauge_fix(linkage, project_to_cspace(linkage, start, tol=project_tol))
    frame = tangent_frame(linkage, v, Gauge.REDUCED, tol_rank)
    if frame.dim != 1:
        raise NotACurve(f"reduced tangent dimension is {frame.dim}, not 1")
    tangent = frame.basis[0]
    if direction is not None and float(tangent @ np.asarray(direction, dtype=float)) < 0.0:
        tangent = -tangent

    d = linkage.ambient_dim
    points: list[Configuration] = [v]
    closed = False
    reason = "max_steps"

    for step_idx in range(max_steps):
        predictor = v.flat + step * tangent

        def res(x: np.ndarray, _t=tangent, _p=predictor) -> np.ndarray:
            cfg = Configuration.from_flat(x, d)
            return np.concatenate([constraint_residual(linkage, cfg), [_t @ (x - _p)]])

        def jac(x: np.ndarray, _t=tangent) -> np.ndarray:
            cfg = Configuration.from_flat(x, d)
            return np.vstack([constraint_jacobian(linkage, cfg), _t])

        corrected = None
        sub_step = step
        for _ in range(3):
            try:
                corrected = _gauss_newton(
                    res, jac, v.flat + sub_step * tangent, project_tol, 60, tol_rank
                )
                break
            except NoConvergence:
                sub_step *= 0.5
                predictor = v.flat + sub_step * tangent
        if corrected is None:
            reason = "stalled_at_singularity"
            break

        w = _gauge_fix(linkage, Configuration.from_flat(corrected, d))
        if _singularity_proximity(linkage, w) < detect_tol:
            points.append(w)
            reason = "tangent_jump"
            break
        new_frame = tangent_frame(linkage, w, Gauge.REDUCED, tol_rank)
        if new_frame.dim != 1:
            points.append(w)
            reason = "tangent_jump"
            break
        new_tangent = new_frame.basis[0]
        cos = float(new_tangent @ tangent)
        if cos < 0.0:
            new_tangent = -new_tangent
            cos = -cos
        if cos < min_cos:
            points.append(w)
            reason = "tangent_jump"
            break

        points.append(w)
        if step_idx >= 10 and float(np.linalg.norm(w.flat - points[0].flat)) < 0.5 * step:
            closed = True
            reason = "loop_closed"
            break
        v, tangent = w, new_tangent

    return TraceResult(points=tuple(points), stop_reason=reason, closed=closed)


def local_branch_count(
    linkage: Linkage,
    config: Configuration,
    radius: Optional[float] = None,
    n_samples: int = 48,
    seed: int = 0,
    cluster_factor: float = 0.25,
    tol_rank: float = 1e-8,
) -> BranchReport:
    """Count local solution branches through a configuration.

    Samples the intersection of the constraint set with the sphere of the
    given radius around the (gauge-fixed) configuration, then single-linkage
    clusters the retained points at threshold cluster_factor * radius.  The
    count is computed at the radius and at half of it; ``stable`` records
    whether the two agree.
    """
    r = radius if radius is not None else 1e-2 * min(linkage.lengths)
    center = _gauge_fix(linkage, project_to_cspace(linkage, config, tol=1e-12))
    frame = tangent_frame(linkage, center, Gauge.REDUCED, tol_rank)

    def collect(rad: float) -> list[np.ndarray]:
        if frame.dim == 0:
            return []
        pts = []
        for i in range(n_samples):
            rng = np.random.default_rng([seed, i])
            coeff = rng.normal(size=frame.dim)
            nrm = np.linalg.norm(coeff)
            if nrm < 1e-12:
                continue
            delta = (coeff / nrm) @ frame.basis * rad
            flat = center.flat + delta
            ok = False
            for _ in range(8):
                try:
                    w = _gauge_fix(linkage, _retract(linkage, flat, tol_rank))
                except NoConvergence:
                    break
                offset = w.flat - center.flat
                dist = float(np.linalg.norm(offset))
                if dist < 0.05 * rad:
                    break
                if abs(dist - rad) <= 0.1 * rad:
                    pts.append(w.flat)
                    ok = True
                    break
                flat = center.flat + offset * (rad / dist)
            if not ok:
                continue
        return pts

    def count(pts: list[np.ndarray], rad: float) -> tuple[int, list[int]]:
        n = len(pts)
        if n == 0:
            return 0, []
        parent = list(range(n))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        thresh = cluster_factor * rad
        for a in range(n):
            for b in range(a + 1, n):
                if np.linalg.norm(pts[a] - pts[b]) < thresh:
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[ra] = rb
        sizes: dict[int, int] = {}
        for a in range(n):
            root = find(a)
            sizes[root] = sizes.get(root, 0) + 1
        return len(sizes), sorted(sizes.values(), reverse=True)

    pts_r = collect(r)
    n_branches, sizes = count(pts_r, r)
    pts_half = collect(0.5 * r)
    n_half, _ = count(pts_half, 0.5 * r)

    return BranchReport(
        radius=r,
        sample_count=len(pts_r),
        branch_count=n_branches,
        cluster_sizes=tuple(sizes),
        stable=(n_branches == n_half),
        halved_branch_count=n_half,
    )
