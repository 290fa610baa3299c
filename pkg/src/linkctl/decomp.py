"""Pullback decompositions: open-chain removals, stage transversality,
generically non-transverse stage detection, and depth-limited searches for
singularity witnesses and smoothness certificates.

A removal splits a mechanism into an open chain (interior vertices of degree
two) and a connected remainder sharing the chain's two endpoints.  A stage is
transverse when the two endpoint work images jointly span the ambient space;
a non-transverse stage is "generically non-transverse" when the chain is
aligned, the remainder is smooth with a nondegenerate critical endpoint
distance, and the endpoints are apart.  A witness is a decomposition whose
deepest stage is generically non-transverse and whose outer removed chains
are all non-aligned; a certificate is a decomposition with every stage
transverse over a full-rank base.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chains import is_aligned
from .errors import (
    CoincidentEndpoints,
    DegenerateDirection,
    DimensionMismatch,
    InvalidSpec,
    MismatchedEffector,
    OffConstraint,
)
from .model import (
    Configuration,
    Linkage,
    MechanismType,
    SubspaceBasis,
    check_match,
    constraint_jacobian,
    constraint_residual,
)
from .numeric import numerical_rank, reduced_work_data, work_image

__all__ = [
    "Tolerances",
    "ChainRemoval",
    "SubMechanism",
    "StageVerdict",
    "StageVerdictKind",
    "DecompositionStage",
    "Decomposition",
    "Witness",
    "enumerate_chain_removals",
    "transversality_check",
    "stage_classify",
    "find_nontransversive_witness",
    "find_smoothness_certificate",
    "remainder_mechanism",
    "chain_mechanism",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by the classification pipeline.

    tol_grad scales with the total length; the eigenvalue cutoff combines a
    relative part with an absolute floor so exactly-zero Hessians are
    recognized as degenerate.
    """

    rank: float = 1e-8
    align: float = 1e-6
    grad_scale: float = 1e-6
    eig_rel: float = 1e-6
    eig_floor: float = 1e-3
    effector_match: float = 1e-8
    residual: float = 1e-8
    depth: int = 4

    def grad_tol(self, linkage: Linkage) -> float:
        return self.grad_scale * (1.0 + linkage.length_scale)

    def eig_tol(self, linkage: Linkage, eigs: np.ndarray) -> float:
        rel = self.eig_rel * (float(np.max(np.abs(eigs))) if eigs.size else 0.0)
        return max(rel, self.eig_floor / (1.0 + linkage.length_scale))


@dataclass(frozen=True)
class ChainRemoval:
    """An open chain inside a mechanism, plus the remainder left by deleting it.

    Vertices are a simple path whose interior vertices have degree exactly
    two in the host graph; removal deletes the path's edges and interior
    vertices.  Paths are stored with the smaller endpoint first.
    """

    chain_vertices: tuple[int, ...]
    chain_edges: tuple[int, ...]
    remainder_vertices: tuple[int, ...]
    remainder_edges: tuple[int, ...]

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.chain_vertices[0], self.chain_vertices[-1])

    @property
    def interior(self) -> tuple[int, ...]:
        return self.chain_vertices[1:-1]

    @property
    def n_links(self) -> int:
        return len(self.chain_edges)


@dataclass(frozen=True)
class SubMechanism:
    """A sub-linkage with its vertex/edge maps back to the host mechanism."""

    linkage: Linkage
    vertex_ids: tuple[int, ...]  # original id of each new vertex index
    edge_ids: tuple[int, ...]

    def restrict(self, config: Configuration) -> Configuration:
        return Configuration(config.points[list(self.vertex_ids)])


def enumerate_chain_removals(graph: MechanismType) -> list[ChainRemoval]:
    """All open-chain removals of a connected graph, in lexicographic edge order.

    Includes non-maximal paths.  A path qualifies when its interior vertices
    have degree exactly two and deleting its edges and interior vertices
    leaves a connected remainder containing both endpoints.
    """
    if not graph.is_connected():
        raise InvalidSpec("chain removal enumeration requires a connected graph")

    edge_of: dict[frozenset[int], int] = {
        frozenset(e): i for i, e in enumerate(graph.edges)
    }
    adj: dict[int, list[int]] = {v: [] for v in range(graph.vertex_count)}
    for u, w in graph.edges:
        adj[u].append(w)
        adj[w].append(u)
    degree = {v: len(adj[v]) for v in adj}

    paths: list[tuple[int, ...]] = []

    def extend(path: list[int]) -> None:
        if len(path) >= 2 and path[0] < path[-1]:
            paths.append(tuple(path))
        tail = path[-1]
        if len(path) >= 2 and degree[tail] != 2:
            return  # tail would become an interior vertex of degree != 2
        for nxt in adj[tail]:
            if nxt in path:
                continue
            path.append(nxt)
            extend(path)
            path.pop()

    for start in range(graph.vertex_count):
        extend([start])

    removals = []
    for path in paths:
        chain_edges = tuple(edge_of[frozenset((path[i], path[i + 1]))] for i in range(len(path) - 1))
        interior = set(path[1:-1])
        rem_vertices = tuple(v for v in range(graph.vertex_count) if v not in interior)
        rem_edges = tuple(i for i in range(graph.edge_count) if i not in set(chain_edges))
        if not rem_edges:
            continue
        # remainder connectivity over its own vertex set
        sub_adj: dict[int, list[int]] = {v: [] for v in rem_vertices}
        ok = True
        for i in rem_edges:
            u, w = graph.edges[i]
            if u in interior or w in interior:
                ok = False
                break
            sub_adj[u].append(w)
            sub_adj[w].append(u)
        if not ok:
            continue
        seen = {rem_vertices[0]}
        stack = [rem_vertices[0]]
        while stack:
            for nb in sub_adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        if len(seen) != len(rem_vertices):
            continue
        removals.append(
            ChainRemoval(
                chain_vertices=path,
                chain_edges=chain_edges,
                remainder_vertices=rem_vertices,
                remainder_edges=rem_edges,
            )
        )
    removals.sort(key=lambda r: r.chain_edges)
    return removals


def _sub_linkage(
    host: Linkage,
    vertices: tuple[int, ...],
    edges: tuple[int, ...],
    base: int,
    effector: int,
) -> SubMechanism:
    index = {v: i for i, v in enumerate(vertices)}
    sub_edges = tuple((index[host.graph.edges[i][0]], index[host.graph.edges[i][1]]) for i in edges)
    linkage = Linkage(
        graph=MechanismType(len(vertices), sub_edges),
        lengths=tuple(host.lengths[i] for i in edges),
        ambient_dim=host.ambient_dim,
        base_vertex=index[base],
        base_link=None,
        end_effector=index[effector],
    )
    return SubMechanism(linkage=linkage, vertex_ids=vertices, edge_ids=edges)


def remainder_mechanism(host: Linkage, removal: ChainRemoval) -> SubMechanism:
    """The remainder as a sub-linkage, based at the smaller shared endpoint."""
    base, eff = removal.endpoints
    return _sub_linkage(host, removal.remainder_vertices, removal.remainder_edges, base, eff)


def chain_mechanism(host: Linkage, removal: ChainRemoval) -> SubMechanism:
    """The removed chain as an open-chain sub-linkage along its path order."""
    base, eff = removal.endpoints
    return _sub_linkage(host, removal.chain_vertices, removal.chain_edges, base, eff)


class StageVerdictKind(enum.Enum):
    TRANSVERSE = "transverse"
    GENERICALLY_NON_TRANSVERSE = "generically_non_transverse"
    DEGENERATE_NON_TRANSVERSE = "degenerate_non_transverse"


@dataclass(frozen=True)
class StageVerdict:
    """Outcome of the transversality test for one (remainder, chain) stage."""

    kind: StageVerdictKind
    remainder_image: SubspaceBasis
    chain_image: SubspaceBasis
    chain_aligned_direction: Optional[np.ndarray] = None
    gradient_norm: Optional[float] = None
    hessian_eigenvalues: Optional[np.ndarray] = None
    remainder_signature: Optional[tuple[int, int]] = None
    chain_signature: Optional[tuple[int, int]] = None
    signature: Optional[tuple[int, int]] = None
    reasons: tuple[str, ...] = ()


def transversality_check(
    image_a: SubspaceBasis,
    image_b: SubspaceBasis,
    d: int,
    tol_rank: float = 1e-8,
) -> bool:
    """True iff the two subspaces jointly span the ambient space."""
    if image_a.ambient_dim != d or image_b.ambient_dim != d:
        raise DimensionMismatch("image bases must live in the ambient dimension")
    stacked = np.vstack([image_a.vectors, image_b.vectors])
    if stacked.shape[0] == 0:
        return d == 0
    return numerical_rank(stacked, tol_rank) == d


def _chain_chord_signature(lam: Linkage, v_k: Configuration, d: int) -> tuple[int, int]:
    """(positive, negative) inertia of the chord-length Hessian of an aligned
    open chain on its reduced frame, from the forward/backward pattern."""
    pts = v_k.points
    k = lam.k
    if k == 1:
        return (0, 0)
    chord = pts[-1] - pts[0]
    rho = float(np.linalg.norm(chord))
    if rho < 1e-12 * (1.0 + float(np.max(np.abs(pts)))):
        raise CoincidentEndpoints("aligned chain chord vanishes")
    w = chord / rho
    vecs = np.diff(pts, axis=0)
    f = int(np.sum(vecs @ w > 0.0))
    return ((d - 1) * (k - f), (d - 1) * (f - 1))


def stage_classify(
    gamma_prime: Linkage,
    lam: Linkage,
    v_prime: Configuration,
    v_k: Configuration,
    tols: Tolerances = Tolerances(),
) -> StageVerdict:
    """Classify one pullback stage.

    Transverse when the endpoint work images of remainder and chain span the
    ambient space.  Otherwise generically non-transverse when the chain is
    aligned, the remainder has full constraint rank and a nondegenerate
    critical endpoint-distance, and the shared endpoints are apart; any
    failed condition downgrades the verdict to degenerate, with reasons.
    """
    check_match(gamma_prime, v_prime)
    check_match(lam, v_k)
    d = gamma_prime.ambient_dim
    if gamma_prime.end_effector is None or lam.end_effector is None:
        raise InvalidSpec("stage linkages need base and effector vertices")

    psi = v_prime.points[gamma_prime.end_effector] - v_prime.points[gamma_prime.base_vertex]
    phi = v_k.points[lam.end_effector] - v_k.points[lam.base_vertex]
    scale = 1.0 + max(gamma_prime.length_scale, lam.length_scale)
    if float(np.linalg.norm(psi - phi)) > tols.effector_match * scale:
        raise MismatchedEffector(
            f"work points disagree by {np.linalg.norm(psi - phi):.3g}"
        )

    img_remainder = work_image(
        gamma_prime, v_prime, gamma_prime.base_vertex, gamma_prime.end_effector, tols.rank
    )
    img_chain = work_image(lam, v_k, lam.base_vertex, lam.end_effector, tols.rank)
    if transversality_check(img_remainder, img_chain, d, tols.rank):
        return StageVerdict(StageVerdictKind.TRANSVERSE, img_remainder, img_chain)

    reasons: list[str] = []
    try:
        aligned = is_aligned(v_k, tol=tols.align)
    except DegenerateDirection:
        aligned = None
        reasons.append("chain_degenerate_link")
    if aligned is None and not reasons:
        reasons.append("chain_not_aligned")

    if float(np.linalg.norm(psi)) < 1e-9 * scale:
        reasons.append("coincident_endpoints")

    rank_rem = numerical_rank(constraint_jacobian(gamma_prime, v_prime), tols.rank)
    if rank_rem < gamma_prime.k:
        reasons.append("remainder_rank_deficient")

    grad_norm = None
    eigs = None
    rem_sig = None
    if "coincident_endpoints" not in reasons:
        data = reduced_work_data(gamma_prime, v_prime, tol_rank=tols.rank)
        grad_norm = float(np.linalg.norm(data.gradient))
        eigs = np.linalg.eigvalsh(data.hessian) if data.hessian.size else np.zeros(0)
        if grad_norm >= tols.grad_tol(gamma_prime):
            reasons.append("remainder_gradient_nonzero")
        cut = tols.eig_tol(gamma_prime, eigs)
        if eigs.size == 0 or np.any(np.abs(eigs) <= cut):
            reasons.append("degenerate_hessian")
        else:
            rem_sig = (int(np.sum(eigs > cut)), int(np.sum(eigs < -cut)))

    if reasons:
        return StageVerdict(
            StageVerdictKind.DEGENERATE_NON_TRANSVERSE,
            img_remainder,
            img_chain,
            chain_aligned_direction=aligned,
            gradient_norm=grad_norm,
            hessian_eigenvalues=eigs,
            reasons=tuple(reasons),
        )

    chain_sig = _chain_chord_signature(lam, v_k, d)
    signature = (rem_sig[0] + chain_sig[1], rem_sig[1] + chain_sig[0])
    return StageVerdict(
        StageVerdictKind.GENERICALLY_NON_TRANSVERSE,
        img_remainder,
        img_chain,
        chain_aligned_direction=aligned,
        gradient_norm=grad_norm,
        hessian_eigenvalues=eigs,
        remainder_signature=rem_sig,
        chain_signature=chain_sig,
        signature=signature,
    )


@dataclass(frozen=True)
class DecompositionStage:
    """One removal step, recorded in the host mechanism's original ids."""

    chain_vertices: tuple[int, ...]
    chain_edges: tuple[int, ...]
    remainder_vertices: tuple[int, ...]
    remainder_edges: tuple[int, ...]
    chain_aligned: bool


@dataclass(frozen=True)
class Decomposition:
    """A rooted branch of the decomposition tree, outermost stage first."""

    stages: tuple[DecompositionStage, ...]
    base_vertices: tuple[int, ...]
    base_edges: tuple[int, ...]


@dataclass(frozen=True)
class Witness:
    """A decomposition whose final stage is generically non-transverse."""

    decomposition: Decomposition
    stage_index: int
    verdict: StageVerdict
    signature: tuple[int, int]
    euclidean_factor: int


def _whole(linkage: Linkage) -> SubMechanism:
    return SubMechanism(
        linkage=linkage,
        vertex_ids=tuple(range(linkage.n_vertices)),
        edge_ids=tuple(range(linkage.k)),
    )


def _check_on_constraint(linkage: Linkage, config: Configuration, tols: Tolerances) -> None:
    res = constraint_residual(linkage, config)
    if np.max(np.abs(res)) >= tols.residual * (1.0 + linkage.length_scale):
        raise OffConstraint(f"configuration residual {np.max(np.abs(res)):.3g} too large")


def find_nontransversive_witness(
    linkage: Linkage,
    config: Configuration,
    depth_limit: int = 4,
    tols: Tolerances = Tolerances(),
) -> Optional[Witness]:
    """Depth-first search for a decomposition with a generically
    non-transverse deepest stage and non-aligned chains at all outer stages.

    Deterministic: removals are visited in lexicographic edge order, depth
    first, and the first hit is returned.  None means no witness within the
    depth limit, which callers must report as indeterminate, never as smooth.
    """
    _check_on_constraint(linkage, config, tols)
    d = linkage.ambient_dim
    memo: dict[tuple[frozenset[int], int], Optional[Witness]] = {}

    def search(sub: SubMechanism, sub_cfg: Configuration, depth: int) -> Optional[Witness]:
        key = (frozenset(sub.edge_ids), depth)
        if key in memo:
            return memo[key]
        result: Optional[Witness] = None
        removals = enumerate_chain_removals(sub.linkage.graph)
        for removal in removals:
            remainder = remainder_mechanism(sub.linkage, removal)
            chain = chain_mechanism(sub.linkage, removal)
            v_rem = remainder.restrict(sub_cfg)
            v_chain = chain.restrict(sub_cfg)
            try:
                verdict = stage_classify(remainder.linkage, chain.linkage, v_rem, v_chain, tols)
            except (CoincidentEndpoints, OffConstraint):
                continue
            try:
                aligned = is_aligned(v_chain, tol=tols.align) is not None
            except DegenerateDirection:
                aligned = True
            stage = DecompositionStage(
                chain_vertices=tuple(sub.vertex_ids[v] for v in removal.chain_vertices),
                chain_edges=tuple(sub.edge_ids[i] for i in removal.chain_edges),
                remainder_vertices=tuple(sub.vertex_ids[v] for v in removal.remainder_vertices),
                remainder_edges=tuple(sub.edge_ids[i] for i in removal.remainder_edges),
                chain_aligned=aligned,
            )
            if verdict.kind is StageVerdictKind.GENERICALLY_NON_TRANSVERSE:
                decomposition = Decomposition(
                    stages=(stage,),
                    base_vertices=stage.remainder_vertices,
                    base_edges=stage.remainder_edges,
                )
                result = Witness(
                    decomposition=decomposition,
                    stage_index=0,
                    verdict=verdict,
                    signature=verdict.signature,  # type: ignore[arg-type]
                    euclidean_factor=0,
                )
                break
            if not aligned and depth > 1:
                inner_sub = SubMechanism(
                    linkage=remainder.linkage,
                    vertex_ids=tuple(sub.vertex_ids[v] for v in remainder.vertex_ids),
                    edge_ids=tuple(sub.edge_ids[i] for i in remainder.edge_ids),
                )
                found = search(inner_sub, v_rem, depth - 1)
                if found is not None:
                    extra = (d - 1) * removal.n_links - d
                    result = Witness(
                        decomposition=Decomposition(
                            stages=(stage,) + found.decomposition.stages,
                            base_vertices=found.decomposition.base_vertices,
                            base_edges=found.decomposition.base_edges,
                        ),
                        stage_index=found.stage_index + 1,
                        verdict=found.verdict,
                        signature=found.signature,
                        euclidean_factor=found.euclidean_factor + extra,
                    )
                    break
        memo[key] = result
        return result

    return search(_whole(linkage), config, depth_limit)


def find_smoothness_certificate(
    linkage: Linkage,
    config: Configuration,
    depth_limit: int = 4,
    tols: Tolerances = Tolerances(),
) -> Optional[Decomposition]:
    """Depth-first search for a decomposition with every stage transverse and
    a base whose constraint Jacobian has full rank.

    A full-rank mechanism certifies itself (zero stages).  Deterministic
    search order; None means no certificate within the depth limit.
    """
    _check_on_constraint(linkage, config, tols)
    memo: dict[tuple[frozenset[int], int], Optional[Decomposition]] = {}

    def search(sub: SubMechanism, sub_cfg: Configuration, depth: int) -> Optional[Decomposition]:
        key = (frozenset(sub.edge_ids), depth)
        if key in memo:
            return memo[key]
        rank = numerical_rank(constraint_jacobian(sub.linkage, sub_cfg), tols.rank)
        if rank == sub.linkage.k:
            result: Optional[Decomposition] = Decomposition(
                stages=(), base_vertices=sub.vertex_ids, base_edges=sub.edge_ids
            )
            memo[key] = result
            return result
        if depth == 0:
            memo[key] = None
            return None
        result = None
        for removal in enumerate_chain_removals(sub.linkage.graph):
            remainder = remainder_mechanism(sub.linkage, removal)
            chain = chain_mechanism(sub.linkage, removal)
            v_rem = remainder.restrict(sub_cfg)
            v_chain = chain.restrict(sub_cfg)
            try:
                verdict = stage_classify(remainder.linkage, chain.linkage, v_rem, v_chain, tols)
            except (CoincidentEndpoints, OffConstraint):
                continue
            if verdict.kind is not StageVerdictKind.TRANSVERSE:
                continue
            inner_sub = SubMechanism(
                linkage=remainder.linkage,
                vertex_ids=tuple(sub.vertex_ids[v] for v in remainder.vertex_ids),
                edge_ids=tuple(sub.edge_ids[i] for i in remainder.edge_ids),
            )
            found = search(inner_sub, v_rem, depth - 1)
            if found is not None:
                try:
                    aligned = is_aligned(v_chain, tol=tols.align) is not None
                except DegenerateDirection:
                    aligned = True
                stage = DecompositionStage(
                    chain_vertices=tuple(sub.vertex_ids[v] for v in removal.chain_vertices),
                    chain_edges=tuple(sub.edge_ids[i] for i in removal.chain_edges),
                    remainder_vertices=tuple(sub.vertex_ids[v] for v in removal.remainder_vertices),
                    remainder_edges=tuple(sub.edge_ids[i] for i in removal.remainder_edges),
                    chain_aligned=aligned,
                )
                result = Decomposition(
                    stages=(stage,) + found.stages,
                    base_vertices=found.base_vertices,
                    base_edges=found.base_edges,
                )
                break
        memo[key] = result
        return result

    return search(_whole(linkage), config, depth_limit)
