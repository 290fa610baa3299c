import numpy as np
import pytest

from linkctl.model import Configuration, Linkage, MechanismType


def four_bar(lengths=(3.0, 2.5, 1.5, 2.0)) -> Linkage:
    return Linkage(
        MechanismType(4, ((0, 1), (1, 2), (2, 3), (3, 0))),
        lengths,
        ambient_dim=2,
        base_vertex=0,
        base_link=0,
        end_effector=2,
    )


def four_bar_node() -> Configuration:
    return Configuration([(0.0, 0.0), (3.0, 0.0), (0.5, 0.0), (2.0, 0.0)])


def triangle(lengths=(3.0, 4.0, 5.0)) -> Linkage:
    return Linkage(MechanismType(3, ((0, 1), (1, 2), (2, 0))), lengths, ambient_dim=2)


def egsing_linkage() -> tuple[Linkage, Configuration]:
    r = float(np.sqrt(3.25))
    linkage = Linkage(
        MechanismType(6, ((0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (3, 4), (4, 5), (5, 1))),
        (3.0, 2.5, 1.5, 2.0, r, r, 1.0, 1.5),
        ambient_dim=2,
        base_vertex=0,
        base_link=0,
        end_effector=2,
    )
    config = Configuration(
        [(0.0, 0.0), (3.0, 0.0), (0.5, 0.0), (2.0, 0.0), (1.0, 1.5), (1.8, 0.9)]
    )
    return linkage, config


def random_linkage(rng: np.random.Generator, max_vertices: int = 8) -> tuple[Linkage, Configuration]:
    """Random connected linkage with lengths realized by a random placement."""
    n = int(rng.integers(2, max_vertices + 1))
    d = int(rng.choice([2, 3]))
    points = rng.uniform(-2.0, 2.0, (n, d))
    edges = [(i, int(rng.integers(0, i))) for i in range(1, n)]  # random spanning tree
    extra = int(rng.integers(0, n))
    seen = {frozenset(e) for e in edges}
    for _ in range(extra):
        u, v = rng.integers(0, n, 2)
        if u != v and frozenset((int(u), int(v))) not in seen:
            edges.append((int(u), int(v)))
            seen.add(frozenset((int(u), int(v))))
    lengths = [float(np.linalg.norm(points[u] - points[v])) for u, v in edges]
    if min(lengths) < 1e-3:
        return random_linkage(rng, max_vertices)
    linkage = Linkage(MechanismType(n, tuple(edges)), tuple(lengths), ambient_dim=d)
    return linkage, Configuration(points)


def random_open_chain(rng: np.random.Generator, k: int, d: int) -> np.ndarray:
    """Random open-chain configuration for unit tests, rooted at the origin."""
    dirs = rng.normal(size=(k, d))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    lengths = rng.uniform(0.5, 2.0, k)
    return np.vstack([np.zeros(d), np.cumsum(dirs * lengths[:, None], axis=0)])


def aligned_closed_chain(rng: np.random.Generator, d: int = 2):
    """Random aligned closed chain: (spec, aligned configuration, sign pattern)."""
    from linkctl.chains import ChainKind, ChainSpec

    while True:
        n = int(rng.integers(2, 7))
        lengths = rng.uniform(0.5, 2.0, n)
        signs = rng.choice([-1.0, 1.0], n)
        total = float(np.sum(signs * lengths))
        if abs(total) > 0.1:
            break
    if total < 0:
        signs, total = -signs, -total
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    pts = np.zeros((n + 1, d))
    for i in range(n):
        pts[i + 1] = pts[i] + signs[i] * lengths[i] * w
    spec = ChainSpec(ChainKind.CLOSED, tuple(lengths) + (total,), d)
    return spec, pts, signs


def reach_oracle(lengths, d: int, n_samples: int = 20000, seed: int = 0):
    """Brute-force reachable-distance sampling for open chains."""
    rng = np.random.default_rng(seed)
    k = len(lengths)
    if d == 2:
        ang = rng.uniform(-np.pi, np.pi, (n_samples, k))
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=2)
    else:
        dirs = rng.normal(size=(n_samples, k, 3))
        dirs /= np.linalg.norm(dirs, axis=2)[:, :, None]
    ends = np.sum(dirs * np.asarray(lengths)[None, :, None], axis=1)
    dist = np.linalg.norm(ends, axis=1)
    return float(dist.min()), float(dist.max()), dist


@pytest.fixture
def fb():
    return four_bar()


@pytest.fixture
def fb_node():
    return four_bar_node()


@pytest.fixture
def egsing():
    return egsing_linkage()
