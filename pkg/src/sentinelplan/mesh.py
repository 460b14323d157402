"""Triangular-lattice mesh: construction, adjacency, and hop distances.

The lattice uses offset rows: the vertex in row r, column c sits at
x = c + 0.5*(r % 2), y = r*sqrt(3)/2, so every edge has unit length and
interior vertices have six neighbours. Vertex ids are assigned row-major
starting at 1. Id 0 is reserved for the absorbing sink: it never appears
in the mesh and has no neighbours.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple

from .errors import EmptyMeshError, InvalidMeshError, UnknownVertexError

ROW_HEIGHT = math.sqrt(3.0) / 2.0
ABSORBING_VERTEX = 0


class Vertex(NamedTuple):
    id: int
    row: int
    col: int
    x: float
    y: float


def _neighbor_cells(row: int, col: int):
    p = row % 2
    yield row, col - 1
    yield row, col + 1
    yield row - 1, col - 1 + p
    yield row - 1, col + p
    yield row + 1, col - 1 + p
    yield row + 1, col + p


@dataclass(frozen=True)
class Mesh:
    """Immutable triangular mesh with unit-length edges.

    ``vertices`` is sorted by id, so ``vertices[i].id == i + 1``. ``target``
    always equals ``n`` (the largest id); use :meth:`retargeted` to make a
    different vertex addressable as the target.
    """

    rows: int
    cols: int
    vertices: tuple[Vertex, ...]
    adjacency: Mapping[int, frozenset[int]]
    target: int
    blocked: frozenset[tuple[int, int]]

    @property
    def n(self) -> int:
        return len(self.vertices)

    @cached_property
    def _by_id(self) -> dict[int, Vertex]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def _by_cell(self) -> dict[tuple[int, int], int]:
        return {(v.row, v.col): v.id for v in self.vertices}

    def vertex(self, vertex_id: int) -> Vertex:
        try:
            return self._by_id[vertex_id]
        except KeyError:
            raise UnknownVertexError(f"vertex {vertex_id} not in mesh") from None

    def id_at(self, row: int, col: int) -> int | None:
        return self._by_cell.get((row, col))

    def position(self, vertex_id: int) -> tuple[float, float]:
        v = self.vertex(vertex_id)
        return v.x, v.y

    def neighbors(self, vertex_id: int) -> frozenset[int]:
        try:
            return self.adjacency[vertex_id]
        except KeyError:
            raise UnknownVertexError(f"vertex {vertex_id} not in mesh") from None

    def retargeted(self, vertex_id: int) -> "Mesh":
        """Return a mesh where ``vertex_id`` carries the target id ``n``.

        The chosen vertex swaps ids with the current highest-id vertex; all
        other ids are unchanged.
        """
        old = self.vertex(vertex_id).id
        n = self.n
        if old == n:
            return replace(self, target=n)

        def remap(i: int) -> int:
            if i == old:
                return n
            if i == n:
                return old
            return i

        vertices = tuple(
            sorted((v._replace(id=remap(v.id)) for v in self.vertices), key=lambda v: v.id)
        )
        adjacency = {remap(i): frozenset(remap(j) for j in near) for i, near in self.adjacency.items()}
        return Mesh(self.rows, self.cols, vertices, adjacency, target=n, blocked=self.blocked)


@dataclass(frozen=True)
class DistanceField:
    """Hop counts from ``source`` over the mesh minus ``forbidden`` vertices."""

    source: int
    dist: Mapping[int, float]
    forbidden: frozenset[int] = frozenset()


def build_triangular_mesh(rows: int, cols: int, blocked: Iterable[tuple[int, int]] = ()) -> Mesh:
    """Build a rows x cols triangular lattice, minus any blocked cells.

    Each row holds exactly ``cols`` vertices; odd rows are offset right by
    half an edge so that all triangles are equilateral. Blocked cells are
    removed together with their incident edges.
    """
    if rows < 2 or cols < 2:
        raise InvalidMeshError(f"mesh needs at least 2 rows and 2 cols, got {rows}x{cols}")
    blocked_cells = frozenset((int(r), int(c)) for r, c in blocked)
    cells = [(r, c) for r in range(rows) for c in range(cols) if (r, c) not in blocked_cells]
    if not cells:
        raise EmptyMeshError("every vertex of the mesh is blocked")
    ids = {cell: i for i, cell in enumerate(cells, start=1)}
    vertices = tuple(
        Vertex(ids[r, c], r, c, c + 0.5 * (r % 2), r * ROW_HEIGHT) for r, c in cells
    )
    adjacency: dict[int, frozenset[int]] = {}
    for (r, c), vid in ids.items():
        near = [ids[cell] for cell in _neighbor_cells(r, c) if cell in ids]
        adjacency[vid] = frozenset(near)
    return Mesh(rows, cols, vertices, adjacency, target=len(cells), blocked=blocked_cells)


def hop_distances(mesh: Mesh, source: int, forbidden: Iterable[int] = ()) -> DistanceField:
    """Breadth-first hop counts from ``source``, skipping ``forbidden`` vertices.

    Unreachable (and forbidden) vertices map to ``math.inf``.
    """
    forbidden = frozenset(forbidden)
    if source not in mesh.adjacency:
        raise UnknownVertexError(f"source vertex {source} not in mesh")
    if source in forbidden:
        raise ValueError(f"source vertex {source} is forbidden")
    dist: dict[int, float] = {v.id: math.inf for v in mesh.vertices}
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        for w in mesh.adjacency[u]:
            if w in forbidden or dist[w] != math.inf:
                continue
            dist[w] = du + 1
            queue.append(w)
    return DistanceField(source=source, dist=dist, forbidden=forbidden)


def nearest_vertex(mesh: Mesh, point: tuple[float, float]) -> int:
    """Id of the vertex closest to ``point``; ties break to the smallest id."""
    px, py = point
    best = min(mesh.vertices, key=lambda v: ((v.x - px) ** 2 + (v.y - py) ** 2, v.id))
    return best.id
