"""
Deterministic generators for the example corpus: Euclidean grids, snowflakes,
glued spaces, the integer Heisenberg group, diamond (Laakso-type) graphs,
Sierpinski gaskets and cusp pairs.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from typing import Any, Dict, List, Literal, Sequence, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator
from scipy.sparse.csgraph import floyd_warshall, shortest_path

from src.core.errors import InputError
from src.core.logging import get_logger
from src.space.metric_space import MetricMeasureSpace

logger = get_logger(__name__)

GeneratorKind = Literal[
    "euclidean_grid",
    "snowflake",
    "glued",
    "heisenberg_word",
    "laakso_like",
    "sierpinski_gasket",
    "cusp_pair",
]

MAX_POINTS = 20_000
MAX_DENSE_POINTS = 5_000


class GeneratorSpec(BaseModel):
    """Generator kind, kind-specific parameters and the probe seed."""

    kind: GeneratorKind
    params: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0

    @model_validator(mode="after")
    def check_params(self) -> "GeneratorSpec":
        p = self.params
        if self.kind == "euclidean_grid":
            n, dim = int(p.get("n", 0)), int(p.get("dim", 1))
            if not (1 <= n <= 256 and 1 <= dim <= 3 and n**dim <= MAX_POINTS):
                raise ValueError("euclidean_grid needs 1 <= n <= 256, 1 <= dim <= 3")
        elif self.kind == "snowflake":
            alpha = float(p.get("alpha", 0.5))
            if not 0 < alpha < 1 or "base" not in p:
                raise ValueError("snowflake needs a base spec and alpha in (0, 1)")
        elif self.kind == "glued":
            if "a" not in p or "b" not in p or not p.get("pairs"):
                raise ValueError("glued needs specs 'a', 'b' and at least one glue pair")
        elif self.kind == "heisenberg_word":
            if not 0 <= int(p.get("radius", -1)) <= 10:
                raise ValueError("heisenberg_word needs 0 <= radius <= 10")
        elif self.kind == "laakso_like":
            if not 0 <= int(p.get("level", -1)) <= 6:
                raise ValueError("laakso_like needs 0 <= level <= 6")
        elif self.kind == "sierpinski_gasket":
            if not 0 <= int(p.get("level", -1)) <= 7:
                raise ValueError("sierpinski_gasket needs 0 <= level <= 7")
        elif self.kind == "cusp_pair":
            if not 2 <= int(p.get("n", 0)) <= 48:
                raise ValueError("cusp_pair needs 2 <= n <= 48")
        return self


def parse_spec(data: Dict[str, Any]) -> GeneratorSpec:
    try:
        return GeneratorSpec.model_validate(data)
    except ValidationError as exc:
        raise InputError(f"invalid generator spec: {exc.errors()[0]['msg']}", invariant="generator params") from exc


def generate(spec: GeneratorSpec | Dict[str, Any]) -> MetricMeasureSpace:
    if not isinstance(spec, GeneratorSpec):
        spec = parse_spec(spec)
    p = spec.params
    builders = {
        "euclidean_grid": lambda: euclidean_grid(int(p["n"]), int(p.get("dim", 1))),
        "snowflake": lambda: snowflake(generate(p["base"]), float(p.get("alpha", 0.5))),
        "glued": lambda: glued(
            generate(p["a"]), generate(p["b"]), [tuple(pair) for pair in p["pairs"]]
        ),
        "heisenberg_word": lambda: heisenberg_word(int(p["radius"])),
        "laakso_like": lambda: laakso_like(int(p["level"])),
        "sierpinski_gasket": lambda: sierpinski_gasket(int(p["level"])),
        "cusp_pair": lambda: cusp_pair(int(p["n"])),
    }
    space = builders[spec.kind]()
    logger.info("Space generated", kind=spec.kind, points=space.size, label=space.label)
    return space


# -- Euclidean and derived ---------------------------------------------------


def euclidean_grid(n: int, dim: int = 1) -> MetricMeasureSpace:
    """n**dim lattice on [0, 1]**dim; point id is row-major with the first axis slowest."""
    axis = np.arange(n) / (n - 1) if n > 1 else np.zeros(1)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    coords = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return MetricMeasureSpace(
        mass=np.ones(coords.shape[0]),
        coords=coords,
        label=f"euclidean_grid(n={n},dim={dim})",
        step=1.0 / (n - 1) if n > 1 else None,
    )


def snowflake(base: MetricMeasureSpace, alpha: float) -> MetricMeasureSpace:
    """Same points and masses with distances d**alpha."""
    if base.size > MAX_DENSE_POINTS:
        raise InputError("snowflake base too large for a dense metric", invariant="generator params")
    return MetricMeasureSpace(
        mass=base.mass,
        coords=base.coords,
        dist_matrix=base.dense() ** alpha,
        label=f"snowflake({base.label},alpha={alpha:g})",
    )


def _side_coords(space: MetricMeasureSpace, anchor: int) -> np.ndarray:
    if space.coords is None:
        return np.zeros((space.size, 0))
    return space.coords - space.coords[anchor]


def glued(
    a: MetricMeasureSpace, b: MetricMeasureSpace, pairs: Sequence[Tuple[int, int]]
) -> MetricMeasureSpace:
    """
    Quotient of the disjoint union identifying a[p] with b[q] for every glue pair.

    Glued points keep their A id and absorb the mass of their B partner; B
    points follow in order with their glue points removed. Coordinates are
    side coordinates relative to the first glue pair, extended by 0 across
    the glue.
    """
    if a.size + b.size > MAX_DENSE_POINTS:
        raise InputError("glued space too large for a dense metric", invariant="generator params")
    pa = np.array([a.check_point(int(p)) for p, _ in pairs])
    qb = np.array([b.check_point(int(q)) for _, q in pairs])
    da, db = a.dense(), b.dense()

    # shortest glue-to-glue distances, either side, closed under chaining
    glue = np.minimum(da[np.ix_(pa, pa)], db[np.ix_(qb, qb)])
    glue = floyd_warshall(glue + 0.0, directed=False) if len(pairs) > 1 else glue

    xa = da[:, pa]  # (nA, k)
    xb = db[:, qb]  # (nB, k)
    # reach[i, j] = min_l xa[i, l] + glue[l, j]
    reach_a = (xa[:, :, None] + glue[None, :, :]).min(axis=1)
    reach_b = (xb[:, :, None] + glue[None, :, :]).min(axis=1)

    d_aa = np.minimum(da, (reach_a[:, :, None] + xa.T[None, :, :]).min(axis=1))
    d_bb = np.minimum(db, (reach_b[:, :, None] + xb.T[None, :, :]).min(axis=1))
    d_ab = (reach_a[:, :, None] + xb.T[None, :, :]).min(axis=1)

    keep_b = np.setdiff1d(np.arange(b.size), qb)
    dist = np.block(
        [[d_aa, d_ab[:, keep_b]], [d_ab[:, keep_b].T, d_bb[np.ix_(keep_b, keep_b)]]]
    )
    dist = np.minimum(dist, dist.T)
    np.fill_diagonal(dist, 0.0)

    mass_a = a.mass.copy()
    np.add.at(mass_a, pa, b.mass[qb])
    mass = np.concatenate([mass_a, b.mass[keep_b]])

    ca, cb = _side_coords(a, int(pa[0])), _side_coords(b, int(qb[0]))
    coords = np.zeros((mass.size, ca.shape[1] + cb.shape[1]))
    coords[: a.size, : ca.shape[1]] = ca
    coords[a.size :, ca.shape[1] :] = cb[keep_b]

    space = MetricMeasureSpace(
        mass=mass,
        coords=coords if coords.shape[1] else None,
        dist_matrix=dist,
        label=f"glued({a.label},{b.label})",
    )
    space.validate()
    return space


def cusp_pair(n: int) -> MetricMeasureSpace:
    """Two n x n unit grids touching at one corner: (1, 1) of the first, (0, 0) of the second."""
    square = euclidean_grid(n, 2)
    space = glued(square, square, [(square.size - 1, 0)])
    return MetricMeasureSpace(
        mass=space.mass,
        coords=space.coords,
        dist_matrix=space.dist_matrix,
        label=f"cusp_pair(n={n})",
        step=square.step,
    )


# -- graph spaces --------------------------------------------------------------


def _graph_space(
    graph: nx.Graph, coords: np.ndarray, label: str
) -> MetricMeasureSpace:
    """Unit-edge shortest-path metric on a connected graph with nodes 0..n-1."""
    adjacency = nx.to_scipy_sparse_array(graph, nodelist=range(graph.number_of_nodes()))
    dist = shortest_path(adjacency, method="D", directed=False, unweighted=True)
    return MetricMeasureSpace(
        mass=np.ones(graph.number_of_nodes()),
        coords=coords,
        dist_matrix=dist,
        label=label,
        step=1.0,
    )


def _heisenberg_neighbors(g: Tuple[int, int, int]) -> List[Tuple[int, int, int]]:
    a, b, c = g
    # right multiplication by x, x^-1, y, y^-1 with (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')
    return [(a + 1, b, c), (a - 1, b, c), (a, b + 1, c + a), (a, b - 1, c - a)]


def heisenberg_ball(radius: int) -> Dict[Tuple[int, int, int], int]:
    """Word length of every element within ``radius`` of the identity (BFS)."""
    lengths = {(0, 0, 0): 0}
    queue = deque([(0, 0, 0)])
    while queue:
        g = queue.popleft()
        if lengths[g] == radius:
            continue
        for h in _heisenberg_neighbors(g):
            if h not in lengths:
                lengths[h] = lengths[g] + 1
                queue.append(h)
    return lengths


def heisenberg_growth_exponent(radius: int) -> float:
    """log2(|B(R)| / |B(R/2)|)."""
    big = len(heisenberg_ball(radius))
    small = len(heisenberg_ball(radius // 2))
    return math.log2(big / small)


def heisenberg_word(radius: int) -> MetricMeasureSpace:
    """Elements of the integer Heisenberg group within word radius R, word metric d(g, h) = |g^-1 h|."""
    ball_r = heisenberg_ball(radius)
    table = heisenberg_ball(2 * radius)
    elements = sorted(ball_r, key=lambda g: (ball_r[g], g))
    if len(elements) > MAX_DENSE_POINTS:
        raise InputError("heisenberg ball too large for a dense metric", invariant="generator params")
    g = np.array(elements, dtype=np.int64)

    keys = np.array(list(table), dtype=np.int64)
    lo = keys.min(axis=0)
    shape = keys.max(axis=0) - lo + 1
    lookup = np.full(shape, -1, dtype=np.int64)
    lookup[tuple((keys - lo).T)] = np.array(list(table.values()), dtype=np.int64)

    a, b, c = g[:, 0], g[:, 1], g[:, 2]
    # g^-1 h = (a' - a, b' - b, c' - c - a (b' - b))
    da = a[None, :] - a[:, None]
    db = b[None, :] - b[:, None]
    dc = c[None, :] - c[:, None] - a[:, None] * db
    dist = lookup[da - lo[0], db - lo[1], dc - lo[2]].astype(float)
    return MetricMeasureSpace(
        mass=np.ones(len(elements)),
        coords=g.astype(float),
        dist_matrix=dist,
        label=f"heisenberg_word(R={radius})",
        step=1.0,
    )


def laakso_like(level: int) -> MetricMeasureSpace:
    """
    Diamond graph: level 0 is a single edge; each level replaces every edge
    by two parallel paths of length two (a 4-cycle). The new midpoints sit at
    the edge midpoint offset perpendicular by a quarter of the edge length.
    """
    positions: List[np.ndarray] = [np.array([0.0, 0.0]), np.array([1.0, 0.0])]
    edges: List[Tuple[int, int]] = [(0, 1)]
    for _ in range(level):
        new_edges = []
        for u, v in edges:
            mid = 0.5 * (positions[u] + positions[v])
            along = positions[v] - positions[u]
            normal = 0.5 * np.array([-along[1], along[0]])
            ids = []
            for offset in (normal, -normal):
                positions.append(mid + offset)
                ids.append(len(positions) - 1)
            for m in ids:
                new_edges += [(u, m), (m, v)]
        edges = new_edges
    graph = nx.Graph()
    graph.add_nodes_from(range(len(positions)))
    graph.add_edges_from(edges)
    return _graph_space(graph, np.array(positions), f"laakso_like(level={level})")


def sierpinski_gasket(level: int) -> MetricMeasureSpace:
    """Level-k gasket graph on lattice points (i, j) with unit-edge path metric."""
    side = 2**level
    triangles = [(0, 0)]
    size = side
    while size > 1:
        half = size // 2
        triangles = [
            (i + di, j + dj) for i, j in triangles for di, dj in ((0, 0), (half, 0), (0, half))
        ]
        size = half
    graph = nx.Graph()
    for i, j in triangles:
        corners = [(i, j), (i + 1, j), (i, j + 1)]
        graph.add_edges_from(itertools.combinations(corners, 2))
    nodes = sorted(graph.nodes)
    index = {node: k for k, node in enumerate(nodes)}
    graph = nx.relabel_nodes(graph, index)
    lattice = np.array(nodes, dtype=float)
    coords = np.column_stack(
        [lattice[:, 0] + 0.5 * lattice[:, 1], lattice[:, 1] * math.sqrt(3) / 2]
    ) / side
    return _graph_space(graph, coords, f"sierpinski_gasket(level={level})")
